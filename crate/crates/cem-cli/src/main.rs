use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use cem_cli::cache::{cache_key, read_cache, write_cache};
use cem_cli::config::{ModelChoice, OutputFormat, RunConfig, VariantChoice};
use cem_cli::runner;

#[derive(Parser)]
#[command(
    name = "cem",
    about = "Constraint energy minimizing multiscale solver for 2D elasticity"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the model problem and report errors against the fine reference.
    Run(Overrides),
    /// Measure how localized correctors approach their global counterparts.
    DecayStudy(Overrides),
    /// Solve and summarize the fine-grid reference problem alone.
    FineReference(Overrides),
    /// Save or validate a multiscale basis cache file.
    Cache {
        #[command(subcommand)]
        action: CacheAction,
    },
}

#[derive(Subcommand)]
enum CacheAction {
    /// Build the basis for the first contrast and layer count, write it out.
    Write {
        #[arg(long)]
        file: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Check a cache file against the configuration and summarize it.
    Read {
        #[arg(long)]
        file: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
}

/// Experiment settings. `--config` loads a JSON file with the same fields
/// (camelCase); explicit flags override it.
#[derive(Args)]
struct Overrides {
    /// JSON configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Model problem to solve.
    #[arg(long)]
    model: Option<ModelChoice>,
    /// Inclusion Young's moduli to sweep.
    #[arg(long, num_args = 1..)]
    contrast: Vec<f64>,
    /// Oversampling layer counts to sweep.
    #[arg(long, num_args = 1..)]
    noc: Vec<usize>,
    /// Auxiliary modes kept per coarse element.
    #[arg(long)]
    nbf: Option<usize>,
    /// Coarse cells per direction.
    #[arg(long, num_args = 2, value_names = ["NX", "NY"])]
    coarse: Vec<usize>,
    /// Fine cells per coarse cell per direction.
    #[arg(long, num_args = 2, value_names = ["NX", "NY"])]
    fine: Vec<usize>,
    /// Which minimization builds the basis.
    #[arg(long)]
    variant: Option<VariantChoice>,
    /// Medium preset id or raster file path.
    #[arg(long)]
    medium: Option<String>,
    /// Report destination; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Report format.
    #[arg(long)]
    format: Option<OutputFormat>,
    /// Worker thread cap.
    #[arg(long)]
    threads: Option<usize>,
    /// Seed recorded for randomized follow-up checks.
    #[arg(long)]
    seed: Option<u64>,
}

impl Overrides {
    fn into_config(self) -> Result<RunConfig> {
        let mut config = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(model) = self.model {
            config.model = model;
        }
        if !self.contrast.is_empty() {
            config.contrast = self.contrast;
        }
        if !self.noc.is_empty() {
            config.m = self.noc;
        }
        if let Some(nbf) = self.nbf {
            config.nbf = nbf;
        }
        if let [nx, ny] = self.coarse[..] {
            config.coarse = [nx, ny];
        }
        if let [nx, ny] = self.fine[..] {
            config.fine = [nx, ny];
        }
        if let Some(variant) = self.variant {
            config.variant = variant;
        }
        if let Some(medium) = self.medium {
            config.medium = Some(medium);
        }
        if let Some(out) = self.out {
            config.out = Some(out);
        }
        if let Some(format) = self.format {
            config.format = format;
        }
        if let Some(threads) = self.threads {
            config.threads = Some(threads);
        }
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        config.validate()?;
        Ok(config)
    }
}

fn set_thread_pool(config: &RunConfig) -> Result<()> {
    if let Some(n) = config.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(overrides) => {
            let config = overrides.into_config()?;
            set_thread_pool(&config)?;
            let rows = runner::run(&config)?;
            runner::write_output(&config, &runner::render(&config, &rows))
        }
        Command::DecayStudy(overrides) => {
            let config = overrides.into_config()?;
            set_thread_pool(&config)?;
            let rows = runner::decay_study(&config)?;
            runner::write_output(&config, &runner::render(&config, &rows))
        }
        Command::FineReference(overrides) => {
            let config = overrides.into_config()?;
            set_thread_pool(&config)?;
            let summary = runner::fine_reference(&config)?;
            runner::write_output(&config, &summary)
        }
        Command::Cache { action } => match action {
            CacheAction::Write { file, overrides } => {
                let config = overrides.into_config()?;
                set_thread_pool(&config)?;
                let p = runner::prepare(&config, config.contrast[0])?;
                let layers = Some(config.m[0]);
                let variant = config.variant.to_variant();
                let space =
                    cem::basis::build_space(&p.grid, &p.a, &p.aux, &p.bspec, layers, variant)?;
                let key = cache_key(&p.grid, &p.medium, layers, variant, config.nbf);
                write_cache(&file, key, &space)?;
                println!(
                    "{}",
                    serde_json::json!({
                        "file": file,
                        "key": format!("{key:#018x}"),
                        "columns": space.n_columns(),
                        "nDofs": p.grid.n_dofs(),
                    })
                );
                Ok(())
            }
            CacheAction::Read { file, overrides } => {
                let config = overrides.into_config()?;
                let p = runner::prepare(&config, config.contrast[0])?;
                let layers = Some(config.m[0]);
                let variant = config.variant.to_variant();
                let key = cache_key(&p.grid, &p.medium, layers, variant, config.nbf);
                let space = read_cache(&file, key)?;
                println!(
                    "{}",
                    serde_json::json!({
                        "file": file,
                        "key": format!("{key:#018x}"),
                        "columns": space.n_columns(),
                        "modes": space.modes(),
                        "layers": space.layers(),
                        "variant": space.variant().to_string(),
                        "nDofs": if space.n_columns() == 0 { 0 } else { space.column(0).len() },
                    })
                );
                Ok(())
            }
        },
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(err) = dispatch(cli) {
        let record = serde_json::json!({ "error": format!("{err:#}") });
        eprintln!("{record}");
        std::process::exit(1);
    }
}
