//! Per-coarse-element spectral spaces and the weighted projection.
//!
//! Each coarse element carries a small generalized eigenproblem: elastic
//! energy against the hat-gradient weighted mass form, both restricted to the
//! closed element with natural boundary conditions. The lowest eigenvectors
//! span the element's auxiliary space; their direct sum over elements is a
//! broken (discontinuous across coarse edges) space, so the projection onto
//! it is stored as per-element coefficient vectors, never summed into a
//! single conforming nodal field.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fem::ElementKernels;
use crate::grid::Grid;
use crate::linalg::generalized_sym_eig;
use crate::medium::MaterialField;
use crate::{FineField, Real};

/// Dense element matrices of one coarse element: elastic stiffness and the
/// weighted mass form over the element's fine cells, plus the element's
/// global fine nodes in lexicographic order. Local DOFs are node-major:
/// node `k` owns rows `2k` and `2k + 1`.
pub fn local_matrices<T: Real>(
    grid: &Grid<T>,
    medium: &MaterialField<T>,
    weights: &[[T; 4]],
    j: usize,
) -> (DMatrix<T>, DMatrix<T>, Vec<usize>) {
    let nodes = grid.coarse_cell_nodes(j);
    let ((x0, _), (y0, _)) = grid.coarse_cell_node_range(j);
    let width = grid.spec().sub_nx + 1;
    let n = 2 * nodes.len();
    let kernels = ElementKernels::new(grid.hx(), grid.hy());
    let mut a = DMatrix::zeros(n, n);
    let mut s = DMatrix::zeros(n, n);
    for cell in grid.fine_cells_of_coarse(j) {
        let ke = kernels.stiffness(medium.lambda(cell), medium.mu(cell));
        let me = kernels.weighted_mass(weights[cell]);
        let local: Vec<usize> = grid
            .cell_nodes(cell)
            .iter()
            .map(|&node| {
                let (ix, iy) = grid.fine_node_coords(node);
                (iy - y0) * width + (ix - x0)
            })
            .collect();
        for r in 0..4 {
            for c in 0..4 {
                for cr in 0..2 {
                    for cc in 0..2 {
                        let (gr, gc) = (2 * local[r] + cr, 2 * local[c] + cc);
                        a[(gr, gc)] += ke[(2 * r + cr, 2 * c + cc)];
                        s[(gr, gc)] += me[(2 * r + cr, 2 * c + cc)];
                    }
                }
            }
        }
    }
    (a, s, nodes)
}

/// The auxiliary spectral basis of one coarse element.
pub struct AuxBasis<T: Real> {
    element: usize,
    nodes: Vec<usize>,
    dofs: Vec<usize>,
    eigenvalues: DVector<T>,
    theta_next: Option<T>,
    vectors: DMatrix<T>,
    weighted: DMatrix<T>,
    a_local: DMatrix<T>,
    s_local: DMatrix<T>,
}

impl<T: Real> AuxBasis<T> {
    /// Solves the element eigenproblem and keeps the `modes` smallest pairs.
    pub fn build(
        grid: &Grid<T>,
        medium: &MaterialField<T>,
        weights: &[[T; 4]],
        j: usize,
        modes: usize,
    ) -> Result<Self> {
        let (a_local, s_local, nodes) = local_matrices(grid, medium, weights, j);
        let n = a_local.nrows();
        if modes == 0 || modes > n {
            return Err(Error::Solver(format!(
                "element {j}: {modes} modes requested from a {n}-dimensional space"
            )));
        }
        let (all_values, all_vectors) = generalized_sym_eig(&a_local, &s_local).map_err(|e| {
            Error::Solver(format!("element {j}: weighted mass form not positive: {e}"))
        })?;
        let mut vectors = all_vectors.columns(0, modes).into_owned();
        // Deterministic sign: the entry of largest magnitude is positive.
        for mut col in vectors.column_iter_mut() {
            let mut lead = 0;
            for (k, v) in col.iter().enumerate() {
                if v.abs() > col[lead].abs() {
                    lead = k;
                }
            }
            if col[lead] < T::zero() {
                col.neg_mut();
            }
        }
        let weighted = &s_local * &vectors;
        let dofs = nodes
            .iter()
            .flat_map(|&node| [grid.dof(node, 0), grid.dof(node, 1)])
            .collect();
        Ok(Self {
            element: j,
            nodes,
            dofs,
            eigenvalues: all_values.rows(0, modes).into_owned(),
            theta_next: (modes < n).then(|| all_values[modes]),
            vectors,
            weighted,
            a_local,
            s_local,
        })
    }

    pub fn element(&self) -> usize {
        self.element
    }

    /// Global fine nodes of the closed element, lexicographic.
    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    /// Global fine DOFs, node-major, aligned with the local matrices.
    pub fn dofs(&self) -> &[usize] {
        &self.dofs
    }

    /// Number of kept modes.
    pub fn count(&self) -> usize {
        self.vectors.ncols()
    }

    /// Kept eigenvalues, ascending.
    pub fn eigenvalues(&self) -> &DVector<T> {
        &self.eigenvalues
    }

    /// First eigenvalue beyond the kept ones; `None` when the kept modes
    /// exhaust the local space.
    pub fn theta_next(&self) -> Option<T> {
        self.theta_next
    }

    /// Kept eigenvectors as columns, orthonormal under the local weighted
    /// mass form.
    pub fn vectors(&self) -> &DMatrix<T> {
        &self.vectors
    }

    /// `S_j * vectors`: column `i` is the functional `v -> s_j(v, phi_i)`
    /// in local coordinates.
    pub fn weighted(&self) -> &DMatrix<T> {
        &self.weighted
    }

    pub fn a_local(&self) -> &DMatrix<T> {
        &self.a_local
    }

    pub fn s_local(&self) -> &DMatrix<T> {
        &self.s_local
    }

    /// Gathers a global fine field's values on this element's DOFs.
    pub fn restrict(&self, v: &FineField<T>) -> DVector<T> {
        DVector::from_iterator(self.dofs.len(), self.dofs.iter().map(|&d| v[d]))
    }

    /// Coefficients of the weighted projection of a local field onto the
    /// kept modes: `c_i = s_j(v, phi_i)`.
    pub fn project_coeffs(&self, local: &DVector<T>) -> DVector<T> {
        self.weighted.transpose() * local
    }

    /// Local field reconstructed from mode coefficients.
    pub fn combine(&self, coeffs: &DVector<T>) -> DVector<T> {
        &self.vectors * coeffs
    }
}

/// Auxiliary bases of every coarse element, with a uniform mode count.
pub struct AuxCollection<T: Real> {
    elements: Vec<AuxBasis<T>>,
    modes: usize,
}

/// Builds all element bases in parallel; the result is ordered by element
/// index and independent of the thread count.
pub fn build_aux<T: Real>(
    grid: &Grid<T>,
    medium: &MaterialField<T>,
    weights: &[[T; 4]],
    modes: usize,
) -> Result<AuxCollection<T>> {
    let elements = (0..grid.n_coarse_cells())
        .into_par_iter()
        .map(|j| AuxBasis::build(grid, medium, weights, j, modes))
        .collect::<Result<Vec<_>>>()?;
    Ok(AuxCollection { elements, modes })
}

impl<T: Real> AuxCollection<T> {
    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn n_elements(&self) -> usize {
        self.elements.len()
    }

    /// Total mode count over all elements: the coarse space dimension.
    pub fn n_columns(&self) -> usize {
        self.elements.len() * self.modes
    }

    pub fn element(&self, j: usize) -> &AuxBasis<T> {
        &self.elements[j]
    }

    pub fn iter(&self) -> impl Iterator<Item = &AuxBasis<T>> {
        self.elements.iter()
    }

    /// Flat column index of mode `i` of element `j`.
    pub fn column_index(&self, j: usize, i: usize) -> usize {
        debug_assert!(i < self.modes);
        j * self.modes + i
    }

    /// Smallest excluded eigenvalue over all elements; `None` when every
    /// element's kept modes span its whole local space.
    pub fn lambda_min(&self) -> Option<T> {
        self.elements
            .iter()
            .filter_map(|b| b.theta_next())
            .fold(None, |acc, t| {
                Some(match acc {
                    None => t,
                    Some(m) if t < m => t,
                    Some(m) => m,
                })
            })
    }

    /// Smallest over elements of the largest retained eigenvalue. Reported
    /// alongside [`Self::lambda_min`] since the two differ by one spectral
    /// index and only the excluded one feeds the error bound.
    pub fn min_last_kept(&self) -> T {
        self.elements
            .iter()
            .map(|b| b.eigenvalues()[b.count() - 1])
            .fold(T::of(f64::INFINITY), |acc, t| if t < acc { t } else { acc })
    }

    /// Projects a conforming fine field: per element, the coefficients of
    /// the weighted projection of its restriction.
    pub fn project(&self, v: &FineField<T>) -> AuxExpansion<T> {
        AuxExpansion {
            coeffs: self
                .elements
                .iter()
                .map(|b| b.project_coeffs(&b.restrict(v)))
                .collect(),
        }
    }

    /// The expansion holding a single unit coefficient at mode `(j, i)`.
    pub fn unit_expansion(&self, j: usize, i: usize) -> AuxExpansion<T> {
        let mut coeffs: Vec<DVector<T>> = self
            .elements
            .iter()
            .map(|_| DVector::zeros(self.modes))
            .collect();
        coeffs[j][i] = T::one();
        AuxExpansion { coeffs }
    }
}

/// A member of the broken auxiliary space, stored as mode coefficients per
/// element. The basis is orthonormal in the weighted form, so norms are
/// plain coefficient norms.
pub struct AuxExpansion<T: Real> {
    coeffs: Vec<DVector<T>>,
}

impl<T: Real> AuxExpansion<T> {
    pub fn coeffs(&self, j: usize) -> &DVector<T> {
        &self.coeffs[j]
    }

    pub fn n_elements(&self) -> usize {
        self.coeffs.len()
    }

    /// Squared norm under the weighted mass form, summed over elements.
    pub fn s_norm_sq(&self) -> T {
        self.coeffs
            .iter()
            .map(|c| c.norm_squared())
            .fold(T::zero(), |a, b| a + b)
    }

    /// Weighted-form inner product with another expansion.
    pub fn dot(&self, other: &Self) -> T {
        assert_eq!(self.coeffs.len(), other.coeffs.len());
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a.dot(b))
            .fold(T::zero(), |acc, d| acc + d)
    }

    pub fn minus(&self, other: &Self) -> Self {
        assert_eq!(self.coeffs.len(), other.coeffs.len());
        AuxExpansion {
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::mass_weight;
    use crate::grid::{GridSpec, Rect};
    use crate::linalg::sym_eig_ascending;
    use crate::medium::InclusionGroup;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn homogeneous_setup(
        spec: GridSpec,
    ) -> (Grid<f64>, MaterialField<f64>, Vec<[f64; 4]>) {
        let grid = Grid::unit(spec).unwrap();
        let medium = MaterialField::homogeneous(&grid, 1.0, 0.25).unwrap();
        let weights = mass_weight(&grid, &medium);
        (grid, medium, weights)
    }

    fn contrast_setup(
        spec: GridSpec,
        e_incl: f64,
    ) -> (Grid<f64>, MaterialField<f64>, Vec<[f64; 4]>) {
        let grid = Grid::unit(spec).unwrap();
        let medium = crate::medium::inclusion_medium(
            &grid,
            1.0,
            0.25,
            &[InclusionGroup {
                shapes: vec![
                    Rect::new(0.1, 0.4, 0.9, 0.55),
                    Rect::new(0.4, 0.1, 0.55, 0.9),
                ],
                e: e_incl,
                nu: 0.45,
            }],
        )
        .unwrap();
        let weights = mass_weight(&grid, &medium);
        (grid, medium, weights)
    }

    #[test]
    fn rigid_motions_are_null_modes() {
        // Two translations and the rotation are energy-free but have positive
        // weighted mass, so the spectrum starts with a triple zero.
        let (grid, medium, weights) = homogeneous_setup(GridSpec::new(2, 2, 3, 3));
        for j in 0..grid.n_coarse_cells() {
            let basis = AuxBasis::build(&grid, &medium, &weights, j, 4).unwrap();
            let ev = basis.eigenvalues();
            for i in 0..3 {
                assert!(ev[i].abs() <= 1e-10, "theta_{} = {:e}", i + 1, ev[i]);
            }
            assert!(ev[3] > 1e-6, "theta_4 = {:e}", ev[3]);
        }
    }

    #[test]
    fn eigenvalues_match_inverse_square_root_reduction() {
        // Alternative reduction: eigenvalues of S^{-1/2} A S^{-1/2} computed
        // through a spectral square root, a different route than the
        // Cholesky-based solver under test.
        let (grid, medium, weights) = homogeneous_setup(GridSpec::new(2, 2, 3, 3));
        let (a, s, _) = local_matrices(&grid, &medium, &weights, 1);
        let basis = AuxBasis::build(&grid, &medium, &weights, 1, 5).unwrap();
        let (d, v) = sym_eig_ascending(s.clone());
        let mut inv_sqrt = DMatrix::zeros(d.len(), d.len());
        for k in 0..d.len() {
            assert!(d[k] > 0.0);
            inv_sqrt[(k, k)] = 1.0 / d[k].sqrt();
        }
        let s_half_inv = &v * inv_sqrt * v.transpose();
        let c = &s_half_inv * &a * &s_half_inv;
        let (oracle, _) = sym_eig_ascending((&c + c.transpose()) * 0.5);
        let scale = oracle[d.len() - 1];
        for i in 0..5 {
            assert_abs_diff_eq!(
                basis.eigenvalues()[i],
                oracle[i],
                epsilon = 1e-9 * scale.max(1.0)
            );
        }
    }

    #[test]
    fn eigenvalues_are_invariant_under_common_material_scaling() {
        let grid = Grid::unit(GridSpec::new(2, 2, 3, 3)).unwrap();
        let m1 = MaterialField::homogeneous(&grid, 1.0, 0.3).unwrap();
        let m4 = MaterialField::homogeneous(&grid, 4.0, 0.3).unwrap();
        let b1 = AuxBasis::build(&grid, &m1, &mass_weight(&grid, &m1), 0, 4).unwrap();
        let b4 = AuxBasis::build(&grid, &m4, &mass_weight(&grid, &m4), 0, 4).unwrap();
        for i in 2..4 {
            assert_relative_eq!(
                b1.eigenvalues()[i],
                b4.eigenvalues()[i],
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn vectors_are_orthonormal_with_small_eigen_residual() {
        let (grid, medium, weights) = contrast_setup(GridSpec::new(3, 3, 3, 3), 1e4);
        let aux = build_aux(&grid, &medium, &weights, 3).unwrap();
        for basis in aux.iter() {
            let gram = basis.vectors().transpose() * basis.s_local() * basis.vectors();
            for r in 0..3 {
                for c in 0..3 {
                    let expect = if r == c { 1.0 } else { 0.0 };
                    assert_abs_diff_eq!(gram[(r, c)], expect, epsilon = 1e-10);
                }
            }
            for i in 0..3 {
                let phi = basis.vectors().column(i).into_owned();
                let lhs = basis.a_local() * &phi;
                let rhs = (basis.s_local() * &phi) * basis.eigenvalues()[i];
                let scale = lhs.norm() + rhs.norm() + basis.a_local()[(0, 0)].abs();
                assert!(
                    (&lhs - &rhs).norm() <= 1e-9 * scale,
                    "element {} mode {i}: residual {:e} vs scale {:e}",
                    basis.element(),
                    (&lhs - &rhs).norm(),
                    scale
                );
            }
        }
    }

    #[test]
    fn projection_fixes_kept_modes_and_is_idempotent() {
        let (grid, medium, weights) = contrast_setup(GridSpec::new(2, 2, 3, 3), 1e3);
        let aux = build_aux(&grid, &medium, &weights, 3).unwrap();
        // Projecting a kept mode's own local field returns its unit
        // coefficient vector.
        let basis = aux.element(2);
        for i in 0..3 {
            let c = basis.project_coeffs(&basis.vectors().column(i).into_owned());
            for k in 0..3 {
                let expect = if k == i { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(c[k], expect, epsilon = 1e-10);
            }
        }
        // Re-projecting the projected field changes nothing: the projection
        // is idempotent element by element.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let v = DVector::from_fn(grid.n_dofs(), |_, _| rng.random_range(-1.0..1.0));
        let first = aux.project(&v);
        for j in 0..grid.n_coarse_cells() {
            let b = aux.element(j);
            let again = b.project_coeffs(&b.combine(first.coeffs(j)));
            assert_relative_eq!(
                (&again - first.coeffs(j)).norm(),
                0.0,
                epsilon = 1e-10 * (1.0 + first.coeffs(j).norm())
            );
        }
    }

    #[test]
    fn projection_contracts_and_splits_the_weighted_norm() {
        let (grid, medium, weights) = contrast_setup(GridSpec::new(2, 2, 4, 4), 1e4);
        let aux = build_aux(&grid, &medium, &weights, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for j in 0..grid.n_coarse_cells() {
            let b = aux.element(j);
            for _ in 0..20 {
                let w = DVector::from_fn(b.dofs().len(), |_, _| rng.random_range(-1.0..1.0));
                let total = (b.s_local() * &w).dot(&w);
                let c = b.project_coeffs(&w);
                let kept = c.norm_squared();
                assert!(kept <= total + 1e-10 * (1.0 + total));
                let remainder = &w - b.combine(&c);
                let rest = (b.s_local() * &remainder).dot(&remainder);
                assert_relative_eq!(kept + rest, total, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn remainder_energy_bound_holds_for_random_fields() {
        // For any local field, the part the projection misses is controlled
        // by the element energy over the first excluded eigenvalue.
        let (grid, medium, weights) = contrast_setup(GridSpec::new(3, 3, 3, 3), 1e4);
        let modes = 3;
        let aux = build_aux(&grid, &medium, &weights, modes).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for j in 0..grid.n_coarse_cells() {
            let b = aux.element(j);
            let theta_next = b.theta_next().unwrap();
            assert!(theta_next > 0.0);
            for _ in 0..100 {
                let w = DVector::from_fn(b.dofs().len(), |_, _| rng.random_range(-1.0..1.0));
                let c = b.project_coeffs(&w);
                let remainder = &w - b.combine(&c);
                let missed = (b.s_local() * &remainder).dot(&remainder);
                let energy = (b.a_local() * &w).dot(&w);
                assert!(
                    missed <= energy / theta_next + 1e-10,
                    "element {j}: {missed:e} vs {:e}",
                    energy / theta_next
                );
            }
        }
    }

    #[test]
    fn mode_bookkeeping_and_excluded_eigenvalue() {
        let (grid, medium, weights) = homogeneous_setup(GridSpec::new(2, 2, 1, 1));
        // One fine cell per element: the local space has 8 DOFs.
        let full = build_aux(&grid, &medium, &weights, 8).unwrap();
        assert!(full.lambda_min().is_none());
        assert!(full.element(0).theta_next().is_none());
        let partial = build_aux(&grid, &medium, &weights, 3).unwrap();
        assert_eq!(partial.n_columns(), 12);
        assert_eq!(partial.column_index(2, 1), 7);
        let lam = partial.lambda_min().unwrap();
        assert!(lam > 0.0);
        let per_element = partial
            .iter()
            .filter_map(|b| b.theta_next())
            .fold(f64::INFINITY, f64::min);
        assert_eq!(lam, per_element);
        assert!(AuxBasis::build(&grid, &medium, &weights, 0, 9).is_err());
        assert!(AuxBasis::build(&grid, &medium, &weights, 0, 0).is_err());
    }

    #[test]
    fn rebuilds_are_bit_identical() {
        let (grid, medium, weights) = contrast_setup(GridSpec::new(2, 2, 3, 3), 1e5);
        let a = build_aux(&grid, &medium, &weights, 3).unwrap();
        let b = build_aux(&grid, &medium, &weights, 3).unwrap();
        for j in 0..grid.n_coarse_cells() {
            assert_eq!(a.element(j).vectors(), b.element(j).vectors());
            assert_eq!(a.element(j).eigenvalues(), b.element(j).eigenvalues());
        }
    }

    #[test]
    fn unit_expansion_and_difference_norms() {
        let (grid, medium, weights) = homogeneous_setup(GridSpec::new(2, 2, 2, 2));
        let aux = build_aux(&grid, &medium, &weights, 2).unwrap();
        let e = aux.unit_expansion(1, 0);
        assert_eq!(e.s_norm_sq(), 1.0);
        let d = e.minus(&aux.unit_expansion(1, 0));
        assert_eq!(d.s_norm_sq(), 0.0);
        let two = e.minus(&aux.unit_expansion(3, 1));
        assert_eq!(two.s_norm_sq(), 2.0);
    }
}
