//! Multiscale basis functions by energy minimization over oversampling
//! regions.
//!
//! Both flavors of the minimization reduce, after eliminating the sparse
//! region stiffness, to small dense systems in the auxiliary coefficients.
//! With `P` the matrix whose row `(j', i')` is the weighted-mass functional
//! of aux mode `i'` of element `j'` on the region's free DOFs, and
//! `Y = A^{-1} P^T`, `G = P Y`:
//!
//! * relaxed, `(A + P^T P) x = b + P^T c`: solved as
//!   `x = w + Y (I + G)^{-1} (c - P w)` with `w = A^{-1} b`;
//! * constrained, `[A P^T; P 0] [x; theta] = [b; c]`: solved as
//!   `theta = G^{-1} (P w - c)`, `x = w - Y theta`.
//!
//! One [`RegionSolver`] is built per region and shared by every basis and
//! corrector problem posed on it; `Y` and the factorizations dominate the
//! cost and are computed once.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rayon::prelude::*;

use crate::aux_space::AuxCollection;
use crate::boundary::{region_free_dofs, BoundarySpec};
use crate::error::{Error, Result};
use crate::grid::{Grid, OversampleRegion};
use crate::linalg::{BandedCholesky, SymmetricCsr};
use crate::{FineField, Real};

/// Which minimization defines the multiscale functions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Variant {
    /// Penalized form: energy plus the weighted distance of the projection
    /// from its target; always solvable.
    Relaxed,
    /// Exact weighted-orthogonality constraints via a saddle system; needs a
    /// full-rank constraint block.
    Constrained,
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Variant::Relaxed => "relaxed",
            Variant::Constrained => "constrained",
        })
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "relaxed" => Ok(Variant::Relaxed),
            "constrained" => Ok(Variant::Constrained),
            other => Err(Error::Solver(format!(
                "unknown variant {other:?}; expected \"relaxed\" or \"constrained\""
            ))),
        }
    }
}

/// Factorizations and auxiliary couplings of one oversampling region.
pub struct RegionSolver<T: Real> {
    variant: Variant,
    region: OversampleRegion,
    n_dofs: usize,
    modes: usize,
    /// Global DOF of each packed free DOF, ascending.
    global_free: Vec<usize>,
    /// Inverse of `global_free`; `usize::MAX` marks DOFs outside the free
    /// set (essential or outside the region).
    packed_of_global: Vec<usize>,
    chol: BandedCholesky<T>,
    /// (element, mode) of each constraint row, elements ascending.
    rows: Vec<(usize, usize)>,
    /// Sparse constraint rows over packed free DOFs.
    p_rows: Vec<(Vec<usize>, Vec<T>)>,
    /// `A^{-1} P^T`, one dense column per constraint row.
    y: DMatrix<T>,
    ig_chol: Cholesky<T, Dyn>,
    g_chol: Option<Cholesky<T, Dyn>>,
}

impl<T: Real> RegionSolver<T> {
    pub fn new(
        grid: &Grid<T>,
        a: &SymmetricCsr<T>,
        aux: &AuxCollection<T>,
        region: OversampleRegion,
        bspec: &BoundarySpec<T>,
        variant: Variant,
    ) -> Result<Self> {
        let local_free = region_free_dofs(grid, &region, bspec);
        let global_free: Vec<usize> = local_free.iter().map(|&l| region.local_dofs[l]).collect();
        if global_free.is_empty() {
            return Err(Error::Solver(format!(
                "region around coarse cell {} has no free DOFs",
                region.center
            )));
        }
        let mut packed_of_global = vec![usize::MAX; grid.n_dofs()];
        for (k, &dof) in global_free.iter().enumerate() {
            packed_of_global[dof] = k;
        }
        let chol = BandedCholesky::factor_csr_subset(a, &global_free)?;

        let modes = aux.modes();
        let mut rows = Vec::with_capacity(region.members.len() * modes);
        let mut p_rows = Vec::with_capacity(rows.capacity());
        for &j in &region.members {
            let basis = aux.element(j);
            for i in 0..modes {
                let mut idx = Vec::new();
                let mut val = Vec::new();
                for (k, &dof) in basis.dofs().iter().enumerate() {
                    let packed = packed_of_global[dof];
                    if packed != usize::MAX {
                        idx.push(packed);
                        val.push(basis.weighted()[(k, i)]);
                    }
                }
                rows.push((j, i));
                p_rows.push((idx, val));
            }
        }

        let nf = global_free.len();
        let k = rows.len();
        let mut y = DMatrix::zeros(nf, k);
        let mut rhs = DVector::zeros(nf);
        for r in 0..k {
            rhs.fill(T::zero());
            let (idx, val) = &p_rows[r];
            for (p, &i) in idx.iter().enumerate() {
                rhs[i] = val[p];
            }
            let col = chol.solve(&rhs);
            y.column_mut(r).copy_from(&col);
        }
        let mut g = DMatrix::zeros(k, k);
        for r in 0..k {
            let (idx, val) = &p_rows[r];
            for c in 0..k {
                let mut dot = T::zero();
                for (p, &i) in idx.iter().enumerate() {
                    dot += val[p] * y[(i, c)];
                }
                g[(r, c)] = dot;
            }
        }
        g = (&g + g.transpose()) * T::of(0.5);
        let mut ig = g.clone();
        for d in 0..k {
            ig[(d, d)] += T::one();
        }
        let ig_chol = Cholesky::new(ig).ok_or_else(|| {
            Error::NotSpd("shifted auxiliary coupling lost positive definiteness".into())
        })?;
        let g_chol = match variant {
            Variant::Relaxed => None,
            Variant::Constrained => Some(Cholesky::new(g).ok_or_else(|| {
                Error::Solver(format!(
                    "constraint block of region around coarse cell {} is rank deficient",
                    region.center
                ))
            })?),
        };
        Ok(Self {
            variant,
            region,
            n_dofs: grid.n_dofs(),
            modes,
            global_free,
            packed_of_global,
            chol,
            rows,
            p_rows,
            y,
            ig_chol,
            g_chol,
        })
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn region(&self) -> &OversampleRegion {
        &self.region
    }

    pub fn n_free(&self) -> usize {
        self.global_free.len()
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[(usize, usize)] {
        &self.rows
    }

    /// Constraint row of aux mode `(j, i)`, if element `j` is in the region.
    pub fn row_index(&self, j: usize, i: usize) -> Option<usize> {
        debug_assert!(i < self.modes);
        self.region
            .members
            .binary_search(&j)
            .ok()
            .map(|pos| pos * self.modes + i)
    }

    /// Applies `P` to a packed field.
    fn apply_p(&self, w: &DVector<T>) -> DVector<T> {
        DVector::from_iterator(
            self.p_rows.len(),
            self.p_rows.iter().map(|(idx, val)| {
                let mut dot = T::zero();
                for (p, &i) in idx.iter().enumerate() {
                    dot += val[p] * w[i];
                }
                dot
            }),
        )
    }

    /// Adds element-local values into a packed right-hand side, dropping
    /// entries that are essential or outside the region.
    pub fn pack_add(&self, target: &mut DVector<T>, dofs: &[usize], values: &DVector<T>) {
        debug_assert_eq!(dofs.len(), values.len());
        for (k, &dof) in dofs.iter().enumerate() {
            let packed = self.packed_of_global[dof];
            if packed != usize::MAX {
                target[packed] += values[k];
            }
        }
    }

    /// Expands a packed field to a global fine field, zero elsewhere.
    pub fn lift(&self, packed: &DVector<T>) -> FineField<T> {
        let mut out = DVector::zeros(self.n_dofs);
        for (k, &dof) in self.global_free.iter().enumerate() {
            out[dof] = packed[k];
        }
        out
    }

    /// Solves the region problem with load `b` and constraint data `c`
    /// (both optional, treated as zero when absent). Relaxed solves
    /// `(A + P^T P) x = b + P^T c`; constrained solves the saddle system
    /// with `P x = c`.
    pub fn solve(&self, b: Option<&DVector<T>>, c: Option<&DVector<T>>) -> DVector<T> {
        let k = self.rows.len();
        let w = b.map(|b| self.chol.solve(b));
        match self.variant {
            Variant::Relaxed => {
                let mut small = c.cloned().unwrap_or_else(|| DVector::zeros(k));
                if let Some(w) = &w {
                    small -= self.apply_p(w);
                }
                let u = self.ig_chol.solve(&small);
                let mut x = &self.y * u;
                if let Some(w) = w {
                    x += w;
                }
                x
            }
            Variant::Constrained => {
                let mut small = match &w {
                    Some(w) => self.apply_p(w),
                    None => DVector::zeros(k),
                };
                if let Some(c) = c {
                    small -= c;
                }
                let theta = self
                    .g_chol
                    .as_ref()
                    .expect("constrained solver retains its constraint factorization")
                    .solve(&small);
                let mut x = -(&self.y * theta);
                if let Some(w) = w {
                    x += w;
                }
                x
            }
        }
    }

    /// One multiscale basis function: the minimizer whose projection targets
    /// aux mode `(j, i)`, as a packed field.
    pub fn basis_column(&self, j: usize, i: usize) -> Result<DVector<T>> {
        let r = self.row_index(j, i).ok_or_else(|| {
            Error::Solver(format!(
                "element {j} is outside the region around coarse cell {}",
                self.region.center
            ))
        })?;
        let mut c = DVector::zeros(self.rows.len());
        c[r] = T::one();
        Ok(self.solve(None, Some(&c)))
    }
}

/// The assembled multiscale space: one column per (element, mode).
pub struct CemBasisSet<T: Real> {
    variant: Variant,
    layers: Option<usize>,
    modes: usize,
    columns: Vec<FineField<T>>,
    column_map: Vec<(usize, usize)>,
}

impl<T: Real> CemBasisSet<T> {
    /// Wraps prebuilt columns, in (element, mode) order with modes adjacent.
    /// Columns must come in complete per-element groups.
    pub fn from_parts(
        variant: Variant,
        layers: Option<usize>,
        modes: usize,
        columns: Vec<FineField<T>>,
    ) -> Self {
        assert!(modes > 0 && columns.len() % modes == 0);
        let column_map = (0..columns.len() / modes)
            .flat_map(|j| (0..modes).map(move |i| (j, i)))
            .collect();
        CemBasisSet {
            variant,
            layers,
            modes,
            columns,
            column_map,
        }
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    /// Oversampling layer count; `None` marks the global (whole-domain)
    /// space.
    pub fn layers(&self) -> Option<usize> {
        self.layers
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn n_columns(&self) -> usize {
        self.columns.len()
    }

    pub fn column(&self, k: usize) -> &FineField<T> {
        &self.columns[k]
    }

    /// (element, mode) of column `k`.
    pub fn source(&self, k: usize) -> (usize, usize) {
        self.column_map[k]
    }

    pub fn index_of(&self, j: usize, i: usize) -> usize {
        debug_assert!(i < self.modes);
        j * self.modes + i
    }
}

/// Builds the multiscale space. `layers = None` solves every function on the
/// whole domain through one shared factorization; `Some(m)` localizes each
/// element's functions to its `m`-layer region, one region at a time in
/// parallel.
pub fn build_space<T: Real>(
    grid: &Grid<T>,
    a: &SymmetricCsr<T>,
    aux: &AuxCollection<T>,
    bspec: &BoundarySpec<T>,
    layers: Option<usize>,
    variant: Variant,
) -> Result<CemBasisSet<T>> {
    let modes = aux.modes();
    let columns = match layers {
        None => {
            let solver = RegionSolver::new(grid, a, aux, grid.full_region(), bspec, variant)?;
            let mut columns = Vec::with_capacity(aux.n_columns());
            for j in 0..grid.n_coarse_cells() {
                for i in 0..modes {
                    columns.push(solver.lift(&solver.basis_column(j, i)?));
                }
            }
            columns
        }
        Some(m) => {
            let per_element: Vec<Vec<FineField<T>>> = (0..grid.n_coarse_cells())
                .into_par_iter()
                .map(|j| {
                    let solver =
                        RegionSolver::new(grid, a, aux, grid.oversample(j, m), bspec, variant)?;
                    (0..modes)
                        .map(|i| Ok(solver.lift(&solver.basis_column(j, i)?)))
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()?;
            per_element.into_iter().flatten().collect()
        }
    };
    Ok(CemBasisSet::from_parts(variant, layers, modes, columns))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aux_space::build_aux;
    use crate::boundary::{zero_fn, BoundaryKind};
    use crate::fem::{assemble_stiffness, form_norm, mass_weight};
    use crate::grid::{GridSpec, Rect, Side};
    use crate::medium::{InclusionGroup, MaterialField};
    use approx::assert_abs_diff_eq;
    use nalgebra::{DMatrix, DVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    struct Setup {
        grid: Grid<f64>,
        medium: MaterialField<f64>,
        a: SymmetricCsr<f64>,
        bspec: BoundarySpec<f64>,
    }

    fn dirichlet_setup(spec: GridSpec, e_incl: Option<f64>) -> Setup {
        let grid = Grid::unit(spec).unwrap();
        let medium = match e_incl {
            None => MaterialField::homogeneous(&grid, 1.0, 0.25).unwrap(),
            Some(e) => crate::medium::inclusion_medium(
                &grid,
                1.0,
                0.25,
                &[InclusionGroup {
                    shapes: vec![
                        Rect::new(0.2, 0.45, 0.8, 0.55),
                        Rect::new(0.45, 0.2, 0.55, 0.8),
                    ],
                    e,
                    nu: 0.45,
                }],
            )
            .unwrap(),
        };
        let a = assemble_stiffness(&grid, &medium);
        let bspec = BoundarySpec::all_dirichlet(&grid, zero_fn());
        Setup {
            grid,
            medium,
            a,
            bspec,
        }
    }

    fn aux_for(setup: &Setup, modes: usize) -> AuxCollection<f64> {
        let weights = mass_weight(&setup.grid, &setup.medium);
        build_aux(&setup.grid, &setup.medium, &weights, modes).unwrap()
    }

    /// Dense copies of the region operators, assembled independently from
    /// the solver's own path.
    fn dense_operators(
        setup: &Setup,
        solver: &RegionSolver<f64>,
    ) -> (DMatrix<f64>, DMatrix<f64>) {
        let dense = setup.a.to_dense();
        let nf = solver.n_free();
        let mut a_ff = DMatrix::zeros(nf, nf);
        for (r, &dr) in solver.global_free.iter().enumerate() {
            for (c, &dc) in solver.global_free.iter().enumerate() {
                a_ff[(r, c)] = dense[(dr, dc)];
            }
        }
        let k = solver.n_rows();
        let mut p = DMatrix::zeros(k, nf);
        for (r, (idx, val)) in solver.p_rows.iter().enumerate() {
            for (q, &i) in idx.iter().enumerate() {
                p[(r, i)] = val[q];
            }
        }
        (a_ff, p)
    }

    #[test]
    fn relaxed_column_matches_dense_penalized_oracle() {
        let setup = dirichlet_setup(GridSpec::new(3, 3, 2, 2), Some(1e3));
        let aux = aux_for(&setup, 3);
        let solver = RegionSolver::new(
            &setup.grid,
            &setup.a,
            &aux,
            setup.grid.oversample(4, 1),
            &setup.bspec,
            Variant::Relaxed,
        )
        .unwrap();
        let (a_ff, p) = dense_operators(&setup, &solver);
        let system = &a_ff + p.transpose() * &p;
        for i in 0..3 {
            let r = solver.row_index(4, i).unwrap();
            let rhs = p.transpose().column(r).into_owned();
            let oracle = system.clone().cholesky().unwrap().solve(&rhs);
            let x = solver.basis_column(4, i).unwrap();
            assert_abs_diff_eq!((&x - &oracle).norm(), 0.0, epsilon = 1e-10 * oracle.norm());
        }
    }

    #[test]
    fn constrained_column_matches_dense_saddle_oracle() {
        let setup = dirichlet_setup(GridSpec::new(3, 3, 2, 2), Some(1e3));
        let aux = aux_for(&setup, 2);
        let solver = RegionSolver::new(
            &setup.grid,
            &setup.a,
            &aux,
            setup.grid.oversample(4, 1),
            &setup.bspec,
            Variant::Constrained,
        )
        .unwrap();
        let (a_ff, p) = dense_operators(&setup, &solver);
        let nf = solver.n_free();
        let k = solver.n_rows();
        let mut kkt = DMatrix::zeros(nf + k, nf + k);
        kkt.view_mut((0, 0), (nf, nf)).copy_from(&a_ff);
        kkt.view_mut((nf, 0), (k, nf)).copy_from(&p);
        kkt.view_mut((0, nf), (nf, k)).copy_from(&p.transpose());
        for i in 0..2 {
            let r = solver.row_index(4, i).unwrap();
            let mut rhs = DVector::zeros(nf + k);
            rhs[nf + r] = 1.0;
            let oracle_full = kkt.clone().lu().solve(&rhs).unwrap();
            let oracle = oracle_full.rows(0, nf).into_owned();
            let x = solver.basis_column(4, i).unwrap();
            assert_abs_diff_eq!((&x - &oracle).norm(), 0.0, epsilon = 1e-8 * oracle.norm());
        }
    }

    #[test]
    fn single_cell_elements_still_match_the_saddle_oracle() {
        // Coarsest possible elements: one fine cell each. Dirichlet data on
        // the bottom only, so enough free DOFs remain for the constraints.
        let grid = Grid::unit(GridSpec::new(2, 2, 1, 1)).unwrap();
        let medium = MaterialField::homogeneous(&grid, 1.0, 0.25).unwrap();
        let a = assemble_stiffness(&grid, &medium);
        let bspec = BoundarySpec::new(
            &grid,
            |side, _| {
                if side == Side::Bottom {
                    BoundaryKind::Dirichlet
                } else {
                    BoundaryKind::Neumann
                }
            },
            zero_fn(),
            zero_fn(),
        )
        .unwrap();
        let weights = mass_weight(&grid, &medium);
        let aux = build_aux(&grid, &medium, &weights, 2).unwrap();
        let setup = Setup {
            grid,
            medium,
            a,
            bspec,
        };
        let solver = RegionSolver::new(
            &setup.grid,
            &setup.a,
            &aux,
            setup.grid.full_region(),
            &setup.bspec,
            Variant::Constrained,
        )
        .unwrap();
        let (a_ff, p) = dense_operators(&setup, &solver);
        let nf = solver.n_free();
        let k = solver.n_rows();
        let mut kkt = DMatrix::zeros(nf + k, nf + k);
        kkt.view_mut((0, 0), (nf, nf)).copy_from(&a_ff);
        kkt.view_mut((nf, 0), (k, nf)).copy_from(&p);
        kkt.view_mut((0, nf), (nf, k)).copy_from(&p.transpose());
        let r = solver.row_index(3, 1).unwrap();
        let mut rhs = DVector::zeros(nf + k);
        rhs[nf + r] = 1.0;
        let oracle = kkt.lu().solve(&rhs).unwrap().rows(0, nf).into_owned();
        let x = solver.basis_column(3, 1).unwrap();
        assert_abs_diff_eq!((&x - &oracle).norm(), 0.0, epsilon = 1e-8 * oracle.norm());
    }

    #[test]
    fn constrained_columns_are_unit_targets_under_projection() {
        let setup = dirichlet_setup(GridSpec::new(3, 3, 2, 2), Some(1e4));
        let aux = aux_for(&setup, 2);
        let space = build_space(
            &setup.grid,
            &setup.a,
            &aux,
            &setup.bspec,
            Some(2),
            Variant::Constrained,
        )
        .unwrap();
        for k in 0..space.n_columns() {
            let (j, i) = space.source(k);
            let coeffs = aux.project(space.column(k));
            let target = aux.unit_expansion(j, i);
            let gap = coeffs.minus(&target).s_norm_sq().sqrt();
            assert!(gap <= 1e-8, "column ({j},{i}): orthogonality gap {gap:e}");
        }
    }

    #[test]
    fn relaxed_column_minimizes_the_penalized_energy() {
        let setup = dirichlet_setup(GridSpec::new(3, 3, 2, 2), Some(1e2));
        let aux = aux_for(&setup, 3);
        let solver = RegionSolver::new(
            &setup.grid,
            &setup.a,
            &aux,
            setup.grid.oversample(4, 1),
            &setup.bspec,
            Variant::Relaxed,
        )
        .unwrap();
        let objective = |field: &FineField<f64>| {
            let coeffs = aux.project(field);
            let gap = coeffs.minus(&aux.unit_expansion(4, 1));
            setup.a.quad_form(field, field) + gap.s_norm_sq()
        };
        let x = solver.lift(&solver.basis_column(4, 1).unwrap());
        let best = objective(&x);
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..20 {
            let delta =
                DVector::from_fn(solver.n_free(), |_, _| rng.random_range(-1.0..1.0)) * 0.1;
            let perturbed = &x + solver.lift(&delta);
            assert!(objective(&perturbed) >= best - 1e-9);
        }
    }

    #[test]
    fn saturated_regions_reproduce_the_global_space() {
        let setup = dirichlet_setup(GridSpec::new(3, 3, 2, 2), Some(1e3));
        let aux = aux_for(&setup, 2);
        for variant in [Variant::Relaxed, Variant::Constrained] {
            let local = build_space(&setup.grid, &setup.a, &aux, &setup.bspec, Some(3), variant)
                .unwrap();
            let global =
                build_space(&setup.grid, &setup.a, &aux, &setup.bspec, None, variant).unwrap();
            for k in 0..local.n_columns() {
                let diff = local.column(k) - global.column(k);
                let gap = form_norm(&diff, &setup.a).unwrap();
                let size = form_norm(global.column(k), &setup.a).unwrap();
                assert!(
                    gap <= 1e-8 * size,
                    "{variant} column {k}: gap {gap:e} vs {size:e}"
                );
            }
        }
    }

    #[test]
    fn projection_target_gap_shrinks_with_the_region() {
        let setup = dirichlet_setup(GridSpec::new(5, 5, 2, 2), Some(1e3));
        let aux = aux_for(&setup, 2);
        let center = setup.grid.coarse_cell_index(2, 2);
        let mut previous = f64::INFINITY;
        for m in 1..=3 {
            let solver = RegionSolver::new(
                &setup.grid,
                &setup.a,
                &aux,
                setup.grid.oversample(center, m),
                &setup.bspec,
                Variant::Relaxed,
            )
            .unwrap();
            let x = solver.lift(&solver.basis_column(center, 0).unwrap());
            let gap = aux
                .project(&x)
                .minus(&aux.unit_expansion(center, 0))
                .s_norm_sq()
                .sqrt();
            assert!(
                gap <= previous + 1e-10,
                "m = {m}: gap {gap:e} grew past {previous:e}"
            );
            previous = gap;
        }
    }

    #[test]
    fn row_bookkeeping_and_support() {
        let setup = dirichlet_setup(GridSpec::new(3, 3, 2, 2), None);
        let aux = aux_for(&setup, 2);
        let region = setup.grid.oversample(0, 1);
        let solver = RegionSolver::new(
            &setup.grid,
            &setup.a,
            &aux,
            region,
            &setup.bspec,
            Variant::Relaxed,
        )
        .unwrap();
        // A corner region with one layer holds a 2x2 block of elements.
        assert_eq!(solver.n_rows(), 4 * 2);
        assert_eq!(solver.rows()[3], (1, 1));
        assert_eq!(solver.row_index(4, 0), Some(6));
        assert_eq!(solver.row_index(8, 0), None);
        assert!(solver.basis_column(8, 0).is_err());
        // Lifted fields vanish outside the region.
        let x = solver.lift(&solver.basis_column(0, 0).unwrap());
        for dof in 0..setup.grid.n_dofs() {
            if solver.packed_of_global[dof] == usize::MAX {
                assert_eq!(x[dof], 0.0);
            }
        }
        // pack_add drops what lift ignores and keeps what it writes.
        let mut packed = DVector::zeros(solver.n_free());
        let basis = aux.element(0);
        let ones = DVector::from_element(basis.dofs().len(), 1.0);
        solver.pack_add(&mut packed, basis.dofs(), &ones);
        let lifted = solver.lift(&packed);
        for &dof in basis.dofs() {
            let expect = if solver.packed_of_global[dof] == usize::MAX {
                0.0
            } else {
                1.0
            };
            assert_eq!(lifted[dof], expect);
        }
    }
}
