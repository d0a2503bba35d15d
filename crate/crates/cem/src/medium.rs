//! Piecewise-constant material data on the fine mesh.
//!
//! Each fine cell carries one isotropic material, stored both in engineering
//! form (Young's modulus, Poisson ratio) and as the Lame pair the element
//! matrices consume. High contrast between a soft matrix and hard inclusions
//! is the intended regime; nothing here assumes a bounded ratio.

use std::path::Path;

use crate::grid::{Grid, Rect};
use crate::{Error, Real, Result};

/// Lame parameters (lambda, mu) from Young's modulus and Poisson ratio.
///
/// lambda = nu E / ((1 + nu)(1 - 2 nu)), mu = E / (2 (1 + nu)).
/// Requires E > 0 and 0 < nu < 1/2; at nu = 1/2 the material is
/// incompressible and lambda blows up.
pub fn lame_from_engineering<T: Real>(e: T, nu: T) -> Result<(T, T)> {
    if !(e > T::zero()) {
        return Err(Error::Material(format!(
            "Young's modulus must be positive, got {}",
            e.to_f64()
        )));
    }
    if !(nu > T::zero() && nu < T::of(0.5)) {
        return Err(Error::Material(format!(
            "Poisson ratio must lie in (0, 1/2), got {}",
            nu.to_f64()
        )));
    }
    let one = T::one();
    let lambda = nu * e / ((one + nu) * (one - T::of(2.0) * nu));
    let mu = e / (T::of(2.0) * (one + nu));
    Ok((lambda, mu))
}

/// Material constants per fine cell.
#[derive(Clone, Debug)]
pub struct MaterialField<T> {
    e: Vec<T>,
    nu: Vec<T>,
    lambda: Vec<T>,
    mu: Vec<T>,
}

impl<T: Real> MaterialField<T> {
    pub fn homogeneous(grid: &Grid<T>, e: T, nu: T) -> Result<Self> {
        Self::from_cells(
            grid,
            vec![e; grid.n_fine_cells()],
            vec![nu; grid.n_fine_cells()],
        )
    }

    pub fn from_cells(grid: &Grid<T>, e: Vec<T>, nu: Vec<T>) -> Result<Self> {
        if e.len() != grid.n_fine_cells() || nu.len() != grid.n_fine_cells() {
            return Err(Error::Material(format!(
                "expected {} cell values, got {} / {}",
                grid.n_fine_cells(),
                e.len(),
                nu.len()
            )));
        }
        let mut lambda = Vec::with_capacity(e.len());
        let mut mu = Vec::with_capacity(e.len());
        for (&ec, &nc) in e.iter().zip(&nu) {
            let (l, m) = lame_from_engineering(ec, nc)?;
            lambda.push(l);
            mu.push(m);
        }
        Ok(MaterialField { e, nu, lambda, mu })
    }

    pub fn n_cells(&self) -> usize {
        self.e.len()
    }

    pub fn young(&self, cell: usize) -> T {
        self.e[cell]
    }

    pub fn poisson(&self, cell: usize) -> T {
        self.nu[cell]
    }

    pub fn lambda(&self, cell: usize) -> T {
        self.lambda[cell]
    }

    pub fn mu(&self, cell: usize) -> T {
        self.mu[cell]
    }

    /// lambda + 2 mu, the P-wave modulus weighting the auxiliary mass form.
    pub fn stiff_modulus(&self, cell: usize) -> T {
        self.lambda[cell] + T::of(2.0) * self.mu[cell]
    }
}

/// A set of shapes sharing one material. Shapes may overlap each other.
#[derive(Clone, Debug)]
pub struct InclusionGroup<T> {
    pub shapes: Vec<Rect<T>>,
    pub e: T,
    pub nu: T,
}

/// Builds a medium from a background matrix material plus inclusion groups.
/// A fine cell belongs to a group when its center lies in one of the group's
/// shapes, which snaps shape boundaries to fine cell edges. Two groups with
/// different constants claiming the same cell is an error; equal constants
/// may overlap.
pub fn inclusion_medium<T: Real>(
    grid: &Grid<T>,
    matrix_e: T,
    matrix_nu: T,
    groups: &[InclusionGroup<T>],
) -> Result<MaterialField<T>> {
    let mut e = vec![matrix_e; grid.n_fine_cells()];
    let mut nu = vec![matrix_nu; grid.n_fine_cells()];
    let mut owner: Vec<Option<usize>> = vec![None; grid.n_fine_cells()];
    for (gi, group) in groups.iter().enumerate() {
        for cell in 0..grid.n_fine_cells() {
            let center = grid.cell_center(cell);
            if group.shapes.iter().any(|r| r.contains(center)) {
                if let Some(prev) = owner[cell] {
                    let same = groups[prev].e == group.e && groups[prev].nu == group.nu;
                    if !same {
                        return Err(Error::Material(format!(
                            "cell {cell} claimed by inclusion groups {prev} and {gi} with different constants"
                        )));
                    }
                }
                owner[cell] = Some(gi);
                e[cell] = group.e;
                nu[cell] = group.nu;
            }
        }
    }
    MaterialField::from_cells(grid, e, nu)
}

/// Parses the text raster format: a header `cols rows`, then `rows` lines of
/// `cols` integer keys. The first data line is the bottom row of fine cells,
/// matching the upward cell numbering.
pub fn parse_raster<T: Real>(
    text: &str,
    grid: &Grid<T>,
    legend: &[(u32, [f64; 2])],
) -> Result<MaterialField<T>> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| Error::Raster("empty input".into()))?;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(|t| {
            t.parse::<usize>()
                .map_err(|_| Error::Raster(format!("bad header token {t:?}")))
        })
        .collect::<Result<_>>()?;
    if dims.len() != 2 {
        return Err(Error::Raster("header must be `cols rows`".into()));
    }
    let (cols, rows) = (dims[0], dims[1]);
    if cols != grid.fine_nx() || rows != grid.fine_ny() {
        return Err(Error::Raster(format!(
            "raster is {cols}x{rows} cells but the grid is {}x{}",
            grid.fine_nx(),
            grid.fine_ny()
        )));
    }
    let mut e = vec![T::zero(); grid.n_fine_cells()];
    let mut nu = vec![T::zero(); grid.n_fine_cells()];
    let mut row = 0usize;
    for line in lines {
        if row >= rows {
            return Err(Error::Raster(format!("more than {rows} data rows")));
        }
        let keys: Vec<u32> = line
            .split_whitespace()
            .map(|t| {
                t.parse::<u32>()
                    .map_err(|_| Error::Raster(format!("bad key {t:?} in row {row}")))
            })
            .collect::<Result<_>>()?;
        if keys.len() != cols {
            return Err(Error::Raster(format!(
                "row {row} has {} keys, expected {cols}",
                keys.len()
            )));
        }
        for (cx, key) in keys.into_iter().enumerate() {
            let &(_, [ke, knu]) = legend
                .iter()
                .find(|&&(k, _)| k == key)
                .ok_or_else(|| Error::Raster(format!("key {key} missing from legend")))?;
            let cell = grid.fine_cell_index(cx, row);
            e[cell] = T::of(ke);
            nu[cell] = T::of(knu);
        }
        row += 1;
    }
    if row != rows {
        return Err(Error::Raster(format!("got {row} data rows, expected {rows}")));
    }
    MaterialField::from_cells(grid, e, nu)
}

pub fn load_raster<T: Real>(
    path: &Path,
    grid: &Grid<T>,
    legend: &[(u32, [f64; 2])],
) -> Result<MaterialField<T>> {
    let text = std::fs::read_to_string(path)?;
    parse_raster(&text, grid, legend)
}

/// Inverse of [`parse_raster`]: every cell's constants must match a legend
/// entry exactly (after the same f64 conversion), so a parse/format round
/// trip reproduces the input keys bit for bit.
pub fn format_raster<T: Real>(
    field: &MaterialField<T>,
    grid: &Grid<T>,
    legend: &[(u32, [f64; 2])],
) -> Result<String> {
    use std::fmt::Write;
    let mut out = String::new();
    let _ = writeln!(out, "{} {}", grid.fine_nx(), grid.fine_ny());
    for cy in 0..grid.fine_ny() {
        for cx in 0..grid.fine_nx() {
            let cell = grid.fine_cell_index(cx, cy);
            let key = legend
                .iter()
                .find(|&&(_, [ke, knu])| {
                    field.young(cell) == T::of(ke) && field.poisson(cell) == T::of(knu)
                })
                .map(|&(k, _)| k)
                .ok_or_else(|| {
                    Error::Raster(format!("cell {cell} has constants absent from the legend"))
                })?;
            if cx > 0 {
                out.push(' ');
            }
            let _ = write!(out, "{key}");
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn save_raster<T: Real>(
    path: &Path,
    field: &MaterialField<T>,
    grid: &Grid<T>,
    legend: &[(u32, [f64; 2])],
) -> Result<()> {
    std::fs::write(path, format_raster(field, grid, legend)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;

    fn unit_grid(cnx: usize, cny: usize, snx: usize, sny: usize) -> Grid<f64> {
        Grid::unit(GridSpec::new(cnx, cny, snx, sny)).unwrap()
    }

    #[test]
    fn lame_known_values() {
        // nu = 1/4: lambda = mu = 2E/5
        let (l, m) = lame_from_engineering(1.0f64, 0.25).unwrap();
        assert!((l - 0.4).abs() < 1e-15);
        assert!((m - 0.4).abs() < 1e-15);
        let (l, m) = lame_from_engineering(1e4f64, 0.25).unwrap();
        assert!((l - 4000.0).abs() < 1e-11);
        assert!((m - 4000.0).abs() < 1e-11);
    }

    #[test]
    fn lame_scales_linearly_in_young_modulus() {
        for nu in [0.1, 0.25, 0.45] {
            let (l1, m1) = lame_from_engineering(1.0, nu).unwrap();
            let (l4, m4) = lame_from_engineering(4.0, nu).unwrap();
            assert_eq!(l4, 4.0 * l1);
            assert_eq!(m4, 4.0 * m1);
            // and is monotone across a contrast sweep
            let (l_hi, m_hi) = lame_from_engineering(1e6, nu).unwrap();
            assert!(l_hi > l4 && m_hi > m4);
        }
    }

    #[test]
    fn lame_rejects_out_of_range() {
        assert!(lame_from_engineering(0.0, 0.25).is_err());
        assert!(lame_from_engineering(-1.0, 0.25).is_err());
        assert!(lame_from_engineering(1.0, 0.5).is_err());
        assert!(lame_from_engineering(1.0, 0.0).is_err());
        assert!(lame_from_engineering(1.0, -0.1).is_err());
    }

    #[test]
    fn homogeneous_field_everywhere() {
        let g = unit_grid(2, 2, 2, 2);
        let m = MaterialField::homogeneous(&g, 1.0, 0.25).unwrap();
        for c in 0..g.n_fine_cells() {
            assert_eq!(m.lambda(c), 0.4);
            assert_eq!(m.mu(c), 0.4);
            assert!((m.stiff_modulus(c) - 1.2).abs() < 1e-15);
        }
    }

    #[test]
    fn inclusion_covers_exactly_half_the_cells() {
        let g = unit_grid(2, 2, 4, 4);
        let groups = [InclusionGroup {
            shapes: vec![Rect::new(0.0, 0.0, 0.5, 1.0)],
            e: 1e4,
            nu: 0.45,
        }];
        let m = inclusion_medium(&g, 1.0, 0.25, &groups).unwrap();
        let hard = (0..g.n_fine_cells()).filter(|&c| m.young(c) == 1e4).count();
        assert_eq!(hard, g.n_fine_cells() / 2);
        // membership follows the cell center
        for c in 0..g.n_fine_cells() {
            let inside = g.cell_center(c)[0] < 0.5;
            assert_eq!(m.young(c) == 1e4, inside);
        }
    }

    #[test]
    fn no_inclusions_reduces_to_matrix() {
        let g = unit_grid(2, 2, 2, 2);
        let m = inclusion_medium(&g, 2.0, 0.3, &[]).unwrap();
        for c in 0..g.n_fine_cells() {
            assert_eq!(m.young(c), 2.0);
            assert_eq!(m.poisson(c), 0.3);
        }
    }

    #[test]
    fn conflicting_groups_rejected_equal_groups_allowed() {
        let g = unit_grid(2, 2, 2, 2);
        let a = InclusionGroup {
            shapes: vec![Rect::new(0.0, 0.0, 0.7, 0.7)],
            e: 1e4,
            nu: 0.45,
        };
        let clash = InclusionGroup {
            shapes: vec![Rect::new(0.3, 0.3, 1.0, 1.0)],
            e: 1e5,
            nu: 0.45,
        };
        assert!(inclusion_medium(&g, 1.0, 0.25, &[a.clone(), clash]).is_err());
        let same = InclusionGroup {
            shapes: vec![Rect::new(0.3, 0.3, 1.0, 1.0)],
            e: 1e4,
            nu: 0.45,
        };
        assert!(inclusion_medium(&g, 1.0, 0.25, &[a, same]).is_ok());
    }

    #[test]
    fn raster_round_trip_is_identical() {
        let g = unit_grid(1, 1, 2, 2);
        let legend = [(0u32, [1.0, 0.25]), (1u32, [1e4, 0.45])];
        let text = "2 2\n0 0\n1 1\n";
        let m = parse_raster(text, &g, &legend).unwrap();
        // first data row is the bottom row of cells
        assert_eq!(m.young(g.fine_cell_index(0, 0)), 1.0);
        assert_eq!(m.young(g.fine_cell_index(1, 1)), 1e4);
        assert_eq!(format_raster(&m, &g, &legend).unwrap(), text);
    }

    #[test]
    fn raster_rejects_bad_input() {
        let g = unit_grid(1, 1, 2, 2);
        let legend = [(0u32, [1.0, 0.25])];
        assert!(parse_raster("3 2\n0 0 0\n0 0 0\n", &g, &legend).is_err());
        assert!(parse_raster("2 2\n0 0\n0 7\n", &g, &legend).is_err());
        assert!(parse_raster("2 2\n0 0\n0\n", &g, &legend).is_err());
        assert!(parse_raster("2 2\n0 0\n", &g, &legend).is_err());
        assert!(parse_raster("2 2\n0 0\n0 0\n0 0\n", &g, &legend).is_err());
    }

    #[test]
    fn raster_file_io() {
        let g = unit_grid(1, 1, 2, 2);
        let legend = [(0u32, [1.0, 0.25]), (1u32, [1e4, 0.45])];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("medium.txt");
        std::fs::write(&path, "2 2\n0 1\n1 0\n").unwrap();
        let m = load_raster(&path, &g, &legend).unwrap();
        let out = dir.path().join("copy.txt");
        save_raster(&out, &m, &g, &legend).unwrap();
        assert_eq!(
            std::fs::read_to_string(&path).unwrap(),
            std::fs::read_to_string(&out).unwrap()
        );
    }
}
