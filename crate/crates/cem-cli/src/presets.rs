//! Built-in model problems and heterogeneous media on the unit square.

use std::sync::Arc;

use anyhow::{Context, Result};
use cem::boundary::{zero_fn, BoundaryKind, VectorFn};
use cem::grid::{Rect, Side};
use cem::medium::{inclusion_medium, load_raster, InclusionGroup};
use cem::{BoundarySpecF64, GridF64, MaterialFieldF64};

use crate::config::{ModelChoice, RunConfig};

/// Smooth boundary displacement used by models 1 and 3.
pub fn model1_h(p: [f64; 2]) -> [f64; 2] {
    [p[0] + (p[0] * p[1]).exp(), p[0].cos() * p[1].cos()]
}

/// Cross-shaped vertical force: the union of a horizontal and a vertical bar
/// through the middle of the square, each 1/4 wide and 3/4 long.
pub fn model1_f(p: [f64; 2]) -> [f64; 2] {
    let in_band = |t: f64| t > 0.375 && t < 0.625;
    let in_long = |t: f64| t > 0.125 && t < 0.875;
    let horizontal = in_long(p[0]) && in_band(p[1]);
    let vertical = in_band(p[0]) && in_long(p[1]);
    if horizontal || vertical {
        [1.0, 0.0]
    } else {
        [0.0, 0.0]
    }
}

/// Piecewise-constant traction used by models 2 and 3: pulls outward on the
/// left and right edges, and drags the left half of the bottom edge
/// rightward.
pub fn model2_g(side: Side, p: [f64; 2]) -> [f64; 2] {
    match side {
        Side::Left => [-1.0, 0.0],
        Side::Right => [1.0, 0.0],
        Side::Bottom => {
            if p[0] < 0.5 {
                [1.0, 0.0]
            } else {
                [0.0, 0.0]
            }
        }
        Side::Top => [0.0, 0.0],
    }
}

/// Volume force of the chosen model.
pub fn volume_force(model: ModelChoice) -> fn([f64; 2]) -> [f64; 2] {
    match model {
        ModelChoice::One | ModelChoice::Three => model1_f,
        ModelChoice::Two | ModelChoice::Custom => |_| [0.0, 0.0],
    }
}

/// Boundary conditions of the chosen model.
pub fn boundary_spec(model: ModelChoice, grid: &GridF64) -> Result<BoundarySpecF64> {
    let spec = match model {
        ModelChoice::One => BoundarySpecF64::new(
            grid,
            |_, _| BoundaryKind::Dirichlet,
            Arc::new(model1_h),
            zero_fn(),
        ),
        ModelChoice::Two => BoundarySpecF64::new(
            grid,
            |side, _| match side {
                Side::Top => BoundaryKind::Dirichlet,
                _ => BoundaryKind::Neumann,
            },
            zero_fn(),
            side_traction(grid),
        ),
        ModelChoice::Three => BoundarySpecF64::new(
            grid,
            |side, _| match side {
                Side::Top => BoundaryKind::Dirichlet,
                _ => BoundaryKind::Neumann,
            },
            Arc::new(model1_h),
            side_traction(grid),
        ),
        ModelChoice::Custom => return Ok(BoundarySpecF64::all_dirichlet(grid, zero_fn())),
    };
    spec.context("building boundary conditions")
}

/// Wraps `model2_g` as a position-only callback by recovering the side from
/// the point. Traction is only evaluated at facet midpoints, which sit on
/// exactly one side, so the resolution order never matters.
fn side_traction(grid: &GridF64) -> VectorFn<f64> {
    let d = grid.domain();
    Arc::new(move |p: [f64; 2]| {
        let side = if p[0] <= d.x0 {
            Side::Left
        } else if p[0] >= d.x1 {
            Side::Right
        } else if p[1] <= d.y0 {
            Side::Bottom
        } else if p[1] >= d.y1 {
            Side::Top
        } else {
            return [0.0, 0.0];
        };
        model2_g(side, p)
    })
}

const PRESET_IDS: [&str; 4] = ["homogeneous", "cross-blobs", "strips-blobs", "grid-channels"];

pub fn is_preset(id: &str) -> bool {
    PRESET_IDS.contains(&id)
}

/// Default medium id for each model.
pub fn default_medium(model: ModelChoice) -> &'static str {
    match model {
        ModelChoice::One => "cross-blobs",
        ModelChoice::Two => "strips-blobs",
        ModelChoice::Three => "grid-channels",
        ModelChoice::Custom => "homogeneous",
    }
}

fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> Rect<f64> {
    Rect::new(x0, y0, x1, y1)
}

/// Inclusion shapes of a named preset, on the unit square. All edges sit on
/// multiples of 1/20, so any fine grid whose resolution is a multiple of 20
/// resolves them exactly.
fn preset_shapes(id: &str) -> Option<Vec<Rect<f64>>> {
    let shapes = match id {
        "homogeneous" => Vec::new(),
        "cross-blobs" => vec![
            rect(0.40, 0.20, 0.45, 0.80),
            rect(0.20, 0.40, 0.80, 0.45),
            rect(0.15, 0.15, 0.25, 0.25),
            rect(0.75, 0.15, 0.85, 0.25),
            rect(0.15, 0.75, 0.25, 0.85),
            rect(0.75, 0.75, 0.85, 0.85),
        ],
        "strips-blobs" => vec![
            rect(0.10, 0.25, 0.90, 0.30),
            rect(0.10, 0.70, 0.90, 0.75),
            rect(0.20, 0.45, 0.30, 0.55),
            rect(0.45, 0.45, 0.55, 0.55),
            rect(0.70, 0.45, 0.80, 0.55),
        ],
        "grid-channels" => vec![
            rect(0.10, 0.25, 0.90, 0.30),
            rect(0.10, 0.65, 0.90, 0.70),
            rect(0.25, 0.10, 0.30, 0.90),
            rect(0.65, 0.10, 0.70, 0.90),
        ],
        _ => return None,
    };
    Some(shapes)
}

/// Builds the medium for one contrast value: a preset id (or the model
/// default when unset) becomes matrix material plus stiff inclusions; any
/// other string is read as a raster file with the configured legend.
pub fn build_medium(
    grid: &GridF64,
    config: &RunConfig,
    e_inclusion: f64,
) -> Result<MaterialFieldF64> {
    let id = config
        .medium
        .as_deref()
        .unwrap_or_else(|| default_medium(config.model));
    if let Some(shapes) = preset_shapes(id) {
        let groups = [InclusionGroup {
            shapes,
            e: e_inclusion,
            nu: config.inclusion_nu,
        }];
        return inclusion_medium(grid, config.matrix_e, config.matrix_nu, &groups)
            .context("building preset medium");
    }
    load_raster(std::path::Path::new(id), grid, &config.medium_legend)
        .with_context(|| format!("loading medium raster {id}"))
}
