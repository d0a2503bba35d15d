//! Experiment drivers shared by the command line and the integration tests.

use std::time::Instant;

use anyhow::{Context, Result};
use cem::aux_space::build_aux;
use cem::correctors::{build_operators, MultiscaleOperators};
use cem::fem::{
    assemble_mass, assemble_stiffness, build_loads, fine_solve, l2_norm_of, mass_weight, LoadSet,
};
use cem::grid::{Grid, GridSpec};
use cem::msolve::{compute_errors, corrector_decay, solve_multiscale};
use cem::{AuxCollectionF64, BoundarySpecF64, GridF64, MaterialFieldF64, SymmetricCsrF64};

use crate::config::{OutputFormat, RunConfig};
use crate::presets::{boundary_spec, build_medium, volume_force};
use crate::report::{to_csv, to_json, ReportRow};

/// Everything that depends on the configuration and one contrast value but
/// not on the oversampling width.
pub struct Prepared {
    pub grid: GridF64,
    pub medium: MaterialFieldF64,
    pub a: SymmetricCsrF64,
    pub mass: SymmetricCsrF64,
    pub aux: AuxCollectionF64,
    pub bspec: BoundarySpecF64,
    pub loads: LoadSet<f64>,
    pub f_l2: f64,
}

/// Builds grid, medium, forms, auxiliary spaces, and loads for one contrast.
pub fn prepare(config: &RunConfig, e_inclusion: f64) -> Result<Prepared> {
    let spec = GridSpec::new(config.coarse[0], config.coarse[1], config.fine[0], config.fine[1]);
    let grid = Grid::unit(spec).context("building grid")?;
    let medium = build_medium(&grid, config, e_inclusion)?;
    let a = assemble_stiffness(&grid, &medium);
    let mass = assemble_mass(&grid);
    let weights = mass_weight(&grid, &medium);
    let aux = build_aux(&grid, &medium, &weights, config.nbf).context("building auxiliary spaces")?;
    let bspec = boundary_spec(config.model, &grid)?;
    let f = volume_force(config.model);
    let loads = build_loads(&grid, &a, &bspec, f);
    let f_l2 = l2_norm_of(&grid, |p| f(p));
    Ok(Prepared {
        grid,
        medium,
        a,
        mass,
        aux,
        bspec,
        loads,
        f_l2,
    })
}

fn localized_operators(p: &Prepared, config: &RunConfig, m: usize) -> Result<MultiscaleOperators<f64>> {
    build_operators(
        &p.grid,
        &p.a,
        &p.aux,
        &p.bspec,
        &p.loads.lifting,
        Some(m),
        config.variant.to_variant(),
    )
    .with_context(|| format!("building multiscale operators with {m} layers"))
}

fn global_operators(p: &Prepared, config: &RunConfig) -> Result<MultiscaleOperators<f64>> {
    build_operators(
        &p.grid,
        &p.a,
        &p.aux,
        &p.bspec,
        &p.loads.lifting,
        None,
        config.variant.to_variant(),
    )
    .context("building global multiscale operators")
}

fn base_row(p: &Prepared, config: &RunConfig, e: f64, m: usize) -> ReportRow {
    ReportRow {
        e,
        noc: m,
        nbf: config.nbf,
        h: p.grid.coarse_hx(),
        variant: config.variant.to_variant().to_string(),
        rel_energy: None,
        rel_l2: None,
        rel_h: None,
        rel_g: None,
        lambda_min: p.aux.lambda_min(),
        wall_time_seconds: 0.0,
    }
}

/// Full error study: solves the fine reference once per contrast, then for
/// every oversampling width solves the multiscale problem and reports errors
/// against it, plus the localization gaps of both correctors.
pub fn run(config: &RunConfig) -> Result<Vec<ReportRow>> {
    config.validate()?;
    let mut rows = Vec::new();
    for &e in &config.contrast {
        let p = prepare(config, e)?;
        let reference = fine_solve(&p.grid, &p.a, &p.loads, &p.bspec).context("fine reference")?;
        let global = global_operators(&p, config)?;
        for &m in &config.m {
            let start = Instant::now();
            let ops = localized_operators(&p, config, m)?;
            let u = solve_multiscale(&ops.space, &p.a, &p.loads, &ops.dirichlet, &ops.neumann)?;
            let mut report = compute_errors(&u, &reference, &p.a, &p.mass)?;
            report.set_spectral(&p.aux, p.f_l2);
            let mut row = base_row(&p, config, e, m);
            row.rel_energy = report.rel_energy;
            row.rel_l2 = report.rel_l2;
            row.rel_h = corrector_decay(&ops.dirichlet, &global.dirichlet, &p.a)?;
            row.rel_g = corrector_decay(&ops.neumann, &global.neumann, &p.a)?;
            row.wall_time_seconds = start.elapsed().as_secs_f64();
            rows.push(row);
        }
    }
    Ok(rows)
}

/// Corrector localization study: no fine reference, no multiscale solve.
/// Reports how fast the localized correctors approach their global
/// counterparts as the region grows.
pub fn decay_study(config: &RunConfig) -> Result<Vec<ReportRow>> {
    config.validate()?;
    let mut rows = Vec::new();
    for &e in &config.contrast {
        let p = prepare(config, e)?;
        let global = global_operators(&p, config)?;
        for &m in &config.m {
            let start = Instant::now();
            let ops = localized_operators(&p, config, m)?;
            let mut row = base_row(&p, config, e, m);
            row.rel_h = corrector_decay(&ops.dirichlet, &global.dirichlet, &p.a)?;
            row.rel_g = corrector_decay(&ops.neumann, &global.neumann, &p.a)?;
            row.wall_time_seconds = start.elapsed().as_secs_f64();
            rows.push(row);
        }
    }
    Ok(rows)
}

/// Solves the fine-grid problem alone and reports its size and norms as a
/// JSON object.
pub fn fine_reference(config: &RunConfig) -> Result<String> {
    config.validate()?;
    let p = prepare(config, config.contrast[0])?;
    let start = Instant::now();
    let u = fine_solve(&p.grid, &p.a, &p.loads, &p.bspec).context("fine solve")?;
    let wall = start.elapsed().as_secs_f64();
    let energy = cem::fem::form_norm(&u, &p.a).context("energy norm")?;
    let l2 = cem::fem::form_norm(&u, &p.mass).context("l2 norm")?;
    let summary = serde_json::json!({
        "nDofs": p.grid.n_dofs(),
        "energyNorm": energy,
        "l2Norm": l2,
        "wallTimeSeconds": wall,
    });
    Ok(serde_json::to_string_pretty(&summary)?)
}

/// Renders rows in the configured format.
pub fn render(config: &RunConfig, rows: &[ReportRow]) -> String {
    match config.format {
        OutputFormat::Csv => to_csv(rows),
        OutputFormat::Json => to_json(rows),
    }
}

/// Writes text to the configured destination, stdout when none is set.
pub fn write_output(config: &RunConfig, text: &str) -> Result<()> {
    match &config.out {
        Some(path) => std::fs::write(path, text)
            .with_context(|| format!("writing {}", path.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}
