//! Run configuration: JSON file plus command-line overrides.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use cem::basis::Variant;
use clap::ValueEnum;
use serde::{Deserialize, Serialize};

/// Which model problem to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
pub enum ModelChoice {
    /// Pure Dirichlet problem with a smooth boundary displacement and a
    /// cross-shaped volume force.
    #[serde(rename = "1")]
    #[value(name = "1")]
    One,
    /// Mixed problem: homogeneous Dirichlet on top, piecewise-constant
    /// tractions elsewhere, no volume force.
    #[serde(rename = "2")]
    #[value(name = "2")]
    Two,
    /// Mixed problem combining model 2's tractions with model 1's boundary
    /// displacement (on top) and volume force.
    #[serde(rename = "3")]
    #[value(name = "3")]
    Three,
    /// All-Dirichlet problem with zero data; a smoke-test configuration.
    #[serde(rename = "custom")]
    #[value(name = "custom")]
    Custom,
}

/// Which minimization builds the multiscale functions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum VariantChoice {
    Relaxed,
    Constrained,
}

impl VariantChoice {
    pub fn to_variant(self) -> Variant {
        match self {
            VariantChoice::Relaxed => Variant::Relaxed,
            VariantChoice::Constrained => Variant::Constrained,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

/// One experiment description. Serialized as JSON; every field has a
/// default so config files list only what they change.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "camelCase")]
pub struct RunConfig {
    pub model: ModelChoice,
    /// Coarse cells per direction.
    pub coarse: [usize; 2],
    /// Fine cells per coarse cell per direction.
    pub fine: [usize; 2],
    /// Inclusion Young's moduli to sweep.
    pub contrast: Vec<f64>,
    pub matrix_e: f64,
    pub matrix_nu: f64,
    pub inclusion_nu: f64,
    /// Auxiliary modes kept per coarse element.
    pub nbf: usize,
    /// Oversampling layer counts to sweep.
    pub m: Vec<usize>,
    pub variant: VariantChoice,
    /// Medium preset id, or a path to a raster file (then `medium_legend`
    /// maps raster keys to `[E, nu]`). Empty means the model's default
    /// preset.
    pub medium: Option<String>,
    pub medium_legend: Vec<(u32, [f64; 2])>,
    /// Report destination; stdout when absent.
    pub out: Option<PathBuf>,
    pub format: OutputFormat,
    /// Seed for randomized checks; part of the report's determinism key.
    pub seed: u64,
    /// Rayon thread cap; default lets rayon pick.
    pub threads: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            model: ModelChoice::One,
            coarse: [8, 8],
            fine: [4, 4],
            contrast: vec![1e4],
            matrix_e: 1.0,
            matrix_nu: 0.25,
            inclusion_nu: 0.45,
            nbf: 3,
            m: vec![2],
            variant: VariantChoice::Relaxed,
            medium: None,
            medium_legend: Vec::new(),
            out: None,
            format: OutputFormat::Csv,
            seed: 0,
            threads: None,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let config: RunConfig = serde_json::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.contrast.is_empty() {
            bail!("contrast sweep is empty");
        }
        if self.m.is_empty() {
            bail!("oversampling sweep is empty");
        }
        if self.coarse.iter().chain(&self.fine).any(|&n| n == 0) {
            bail!("grid counts must be positive");
        }
        if self.nbf == 0 {
            bail!("nbf must be positive");
        }
        if let Some(medium) = &self.medium {
            if !crate::presets::is_preset(medium) && !Path::new(medium).exists() {
                bail!("medium {medium:?} is neither a preset nor an existing file");
            }
        }
        Ok(())
    }
}
