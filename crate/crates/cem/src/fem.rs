//! Plane-strain Q1 elements on uniform rectangular grids.
//!
//! Every fine cell is the same rectangle, so the element integrals are computed
//! once per grid through [`ElementKernels`] and scaled by the cell's material.
//! The stiffness matrix of a cell splits exactly into `lambda * K_lambda +
//! mu * K_mu`, which keeps assembly cheap and makes equal materials produce
//! bit-identical element matrices.
//!
//! Quadrature is the 2x2 Gauss rule, which integrates Q1 stiffness and mass
//! integrands with cell-constant coefficients exactly. The weighted mass form
//! evaluates its coefficient at the same four Gauss points; that rule is part
//! of the definition of the form, not an approximation grafted on top.

use nalgebra::{DVector, SMatrix};
use rayon::prelude::*;

use crate::boundary::{BoundaryKind, BoundarySpec};
use crate::error::{Error, Result};
use crate::grid::{BoundaryFacet, Grid};
use crate::linalg::{gather, BandedCholesky, FormKind, SymmetricCsr};
use crate::medium::MaterialField;
use crate::{FineField, Real};

/// Largest normwise backward error `fine_solve` accepts before declaring
/// the factorization unusable. The backward error `|r| / (|A||x| + |b|)`
/// sits near machine epsilon for any healthy direct solve regardless of
/// conditioning, so the gate stays meaningful at high contrast where the
/// plain relative residual legitimately grows like eps times the
/// condition number.
pub const RESIDUAL_TOL: f64 = 1e-10;

/// The 2x2 Gauss points on the reference square `[-1,1]^2`, in the fixed
/// order `(-,-), (+,-), (-,+), (+,+)`. All four weights are one.
pub fn gauss_points<T: Real>() -> [(T, T); 4] {
    let g = T::of(3.0f64.sqrt().recip());
    [(-g, -g), (g, -g), (-g, g), (g, g)]
}

/// Values of the four bilinear shape functions at a reference point.
/// Node order matches [`Grid::cell_nodes`]: lower-left, lower-right,
/// upper-left, upper-right.
fn shape_values<T: Real>(xi: T, eta: T) -> [T; 4] {
    let q = T::of(0.25);
    let one = T::one();
    [
        (one - xi) * (one - eta) * q,
        (one + xi) * (one - eta) * q,
        (one - xi) * (one + eta) * q,
        (one + xi) * (one + eta) * q,
    ]
}

/// Physical-space gradients `[d/dx, d/dy]` of the shape functions at a
/// reference point, for a cell of size `dx` by `dy`.
fn shape_gradients<T: Real>(xi: T, eta: T, dx: T, dy: T) -> [[T; 2]; 4] {
    let q = T::of(0.25);
    let one = T::one();
    let sx = T::of(2.0) / dx;
    let sy = T::of(2.0) / dy;
    let d_xi = [-(one - eta), one - eta, -(one + eta), one + eta];
    let d_eta = [-(one - xi), -(one + xi), one - xi, one + xi];
    let mut out = [[T::zero(); 2]; 4];
    for a in 0..4 {
        out[a] = [d_xi[a] * q * sx, d_eta[a] * q * sy];
    }
    out
}

/// Strain-displacement matrix at one quadrature point: rows are
/// `(eps_xx, eps_yy, gamma_xy)` with engineering shear, columns follow the
/// interleaved `[u0x, u0y, ..., u3x, u3y]` element DOF order.
fn strain_matrix<T: Real>(grads: &[[T; 2]; 4]) -> SMatrix<T, 3, 8> {
    let mut b = SMatrix::<T, 3, 8>::zeros();
    for a in 0..4 {
        b[(0, 2 * a)] = grads[a][0];
        b[(1, 2 * a + 1)] = grads[a][1];
        b[(2, 2 * a)] = grads[a][1];
        b[(2, 2 * a + 1)] = grads[a][0];
    }
    b
}

/// Reference element integrals for one cell geometry.
///
/// `stiffness` and the mass variants only scale and sum the precomputed
/// blocks, so a kernel is built once per grid and shared across cells.
pub struct ElementKernels<T: Real> {
    dx: T,
    dy: T,
    k_lambda: SMatrix<T, 8, 8>,
    k_mu: SMatrix<T, 8, 8>,
    /// One `|J| * N^T N` block per Gauss point, in `gauss_points` order.
    mass_blocks: [SMatrix<T, 8, 8>; 4],
}

impl<T: Real> ElementKernels<T> {
    pub fn new(dx: T, dy: T) -> Self {
        let jac = dx * dy * T::of(0.25);
        let mut k_lambda = SMatrix::<T, 8, 8>::zeros();
        let mut k_mu = SMatrix::<T, 8, 8>::zeros();
        let mut mass_blocks = [SMatrix::<T, 8, 8>::zeros(); 4];
        let d_lambda = SMatrix::<T, 3, 3>::from_row_slice(&[
            T::one(),
            T::one(),
            T::zero(),
            T::one(),
            T::one(),
            T::zero(),
            T::zero(),
            T::zero(),
            T::zero(),
        ]);
        let d_mu = SMatrix::<T, 3, 3>::from_row_slice(&[
            T::of(2.0),
            T::zero(),
            T::zero(),
            T::zero(),
            T::of(2.0),
            T::zero(),
            T::zero(),
            T::zero(),
            T::one(),
        ]);
        for (q, (xi, eta)) in gauss_points::<T>().into_iter().enumerate() {
            let b = strain_matrix(&shape_gradients(xi, eta, dx, dy));
            k_lambda += b.transpose() * d_lambda * b * jac;
            k_mu += b.transpose() * d_mu * b * jac;
            let n = shape_values(xi, eta);
            for a in 0..4 {
                for c in 0..4 {
                    let m = n[a] * n[c] * jac;
                    mass_blocks[q][(2 * a, 2 * c)] = m;
                    mass_blocks[q][(2 * a + 1, 2 * c + 1)] = m;
                }
            }
        }
        // Matrix products leave round-off asymmetry of order machine epsilon;
        // halving the sum with the transpose restores exact symmetry.
        let half = T::of(0.5);
        k_lambda = (k_lambda + k_lambda.transpose()) * half;
        k_mu = (k_mu + k_mu.transpose()) * half;
        Self {
            dx,
            dy,
            k_lambda,
            k_mu,
            mass_blocks,
        }
    }

    pub fn dx(&self) -> T {
        self.dx
    }

    pub fn dy(&self) -> T {
        self.dy
    }

    /// Element stiffness for given Lame parameters.
    pub fn stiffness(&self, lambda: T, mu: T) -> SMatrix<T, 8, 8> {
        self.k_lambda * lambda + self.k_mu * mu
    }

    /// Element mass with the coefficient `kappa` sampled at the four Gauss
    /// points.
    pub fn weighted_mass(&self, kappa: [T; 4]) -> SMatrix<T, 8, 8> {
        let mut m = self.mass_blocks[0] * kappa[0];
        for q in 1..4 {
            m += self.mass_blocks[q] * kappa[q];
        }
        m
    }

    /// Plain element mass (unit coefficient).
    pub fn mass(&self) -> SMatrix<T, 8, 8> {
        self.weighted_mass([T::one(); 4])
    }
}

/// Physical coordinates of the Gauss points of one fine cell, in
/// `gauss_points` order.
pub fn cell_gauss_coords<T: Real>(grid: &Grid<T>, cell: usize) -> [[T; 2]; 4] {
    let origin = grid.cell_origin(cell);
    let half = T::of(0.5);
    gauss_points::<T>().map(|(xi, eta)| {
        [
            origin[0] + (xi + T::one()) * half * grid.hx(),
            origin[1] + (eta + T::one()) * half * grid.hy(),
        ]
    })
}

/// Coefficient of the auxiliary mass form, sampled per fine cell at the four
/// Gauss points: the cell's P-wave modulus `lambda + 2 mu` times the summed
/// squared gradients of the coarse-node hat functions.
pub fn mass_weight<T: Real>(grid: &Grid<T>, medium: &MaterialField<T>) -> Vec<[T; 4]> {
    let pou = grid.partition_of_unity();
    (0..grid.n_fine_cells())
        .map(|cell| {
            let kappa = medium.stiff_modulus(cell);
            cell_gauss_coords(grid, cell).map(|p| {
                let mut sum = T::zero();
                for hat in pou.cell_hats(cell, p) {
                    sum += hat.grad[0] * hat.grad[0] + hat.grad[1] * hat.grad[1];
                }
                kappa * sum
            })
        })
        .collect()
}

/// Assembles a global form from per-cell element matrices.
///
/// Element matrices are computed in parallel and collected in cell order;
/// the triplet scatter is serial, so the assembled matrix is identical no
/// matter how many threads run.
fn assemble_from_cells<T: Real>(
    grid: &Grid<T>,
    kind: FormKind,
    per_cell: impl Fn(usize) -> SMatrix<T, 8, 8> + Send + Sync,
) -> SymmetricCsr<T> {
    let mats: Vec<SMatrix<T, 8, 8>> = (0..grid.n_fine_cells())
        .into_par_iter()
        .map(per_cell)
        .collect();
    let mut triplets = Vec::with_capacity(64 * grid.n_fine_cells());
    for (cell, ke) in mats.iter().enumerate() {
        let dofs = grid.cell_dofs(cell);
        for a in 0..8 {
            for c in 0..8 {
                triplets.push((dofs[a], dofs[c], ke[(a, c)]));
            }
        }
    }
    SymmetricCsr::from_triplets(grid.n_dofs(), kind, &triplets)
}

/// Global elasticity stiffness matrix.
pub fn assemble_stiffness<T: Real>(grid: &Grid<T>, medium: &MaterialField<T>) -> SymmetricCsr<T> {
    let kernels = ElementKernels::new(grid.hx(), grid.hy());
    assemble_from_cells(grid, FormKind::Stiffness, |cell| {
        kernels.stiffness(medium.lambda(cell), medium.mu(cell))
    })
}

/// Global weighted mass matrix for precomputed per-cell Gauss-point weights
/// (see [`mass_weight`]).
pub fn assemble_weighted_mass<T: Real>(grid: &Grid<T>, weights: &[[T; 4]]) -> SymmetricCsr<T> {
    assert_eq!(weights.len(), grid.n_fine_cells());
    let kernels = ElementKernels::new(grid.hx(), grid.hy());
    assemble_from_cells(grid, FormKind::WeightedMass, |cell| {
        kernels.weighted_mass(weights[cell])
    })
}

/// Global unweighted mass matrix, used for L2 norms.
pub fn assemble_mass<T: Real>(grid: &Grid<T>) -> SymmetricCsr<T> {
    let kernels = ElementKernels::new(grid.hx(), grid.hy());
    assemble_from_cells(grid, FormKind::Mass, |_| kernels.mass())
}

/// Applies the stiffness form restricted to `cells`: the result is
/// `sum_K A_K v` over exactly those cells, evaluated element by element in
/// the given order without assembling a matrix.
pub fn apply_stiffness_on_cells<T: Real>(
    grid: &Grid<T>,
    medium: &MaterialField<T>,
    cells: &[usize],
    v: &FineField<T>,
) -> FineField<T> {
    let kernels = ElementKernels::new(grid.hx(), grid.hy());
    let mut out = DVector::zeros(grid.n_dofs());
    let mut local = SMatrix::<T, 8, 1>::zeros();
    for &cell in cells {
        let dofs = grid.cell_dofs(cell);
        for k in 0..8 {
            local[k] = v[dofs[k]];
        }
        let w = kernels.stiffness(medium.lambda(cell), medium.mu(cell)) * local;
        for k in 0..8 {
            out[dofs[k]] += w[k];
        }
    }
    out
}

/// Nodal interpolant of a vector-valued function.
pub fn interpolate<T: Real>(grid: &Grid<T>, f: impl Fn([T; 2]) -> [T; 2]) -> FineField<T> {
    let mut out = DVector::zeros(grid.n_dofs());
    for node in 0..grid.n_fine_nodes() {
        let value = f(grid.node_point(node));
        out[grid.dof(node, 0)] = value[0];
        out[grid.dof(node, 1)] = value[1];
    }
    out
}

/// Load vector of a volume force: `F[dof] = integral f . phi_dof`, by the
/// 2x2 Gauss rule per cell. Cell contributions are computed in parallel and
/// scattered serially in cell order.
pub fn volume_load<T: Real>(
    grid: &Grid<T>,
    f: impl Fn([T; 2]) -> [T; 2] + Send + Sync,
) -> FineField<T> {
    let jac = grid.hx() * grid.hy() * T::of(0.25);
    let points = gauss_points::<T>();
    let contribs: Vec<[T; 8]> = (0..grid.n_fine_cells())
        .into_par_iter()
        .map(|cell| {
            let coords = cell_gauss_coords(grid, cell);
            let mut local = [T::zero(); 8];
            for (q, (xi, eta)) in points.into_iter().enumerate() {
                let n = shape_values(xi, eta);
                let value = f(coords[q]);
                for a in 0..4 {
                    local[2 * a] += n[a] * value[0] * jac;
                    local[2 * a + 1] += n[a] * value[1] * jac;
                }
            }
            local
        })
        .collect();
    let mut out = DVector::zeros(grid.n_dofs());
    for (cell, local) in contribs.iter().enumerate() {
        let dofs = grid.cell_dofs(cell);
        for k in 0..8 {
            out[dofs[k]] += local[k];
        }
    }
    out
}

/// Contribution of one boundary facet to the traction load: the two endpoint
/// nodes and their accumulated `integral g . phi` values, by two-point Gauss
/// quadrature along the facet.
pub fn facet_traction_contrib<T: Real>(
    grid: &Grid<T>,
    facet: BoundaryFacet,
    g: impl Fn([T; 2]) -> [T; 2],
) -> ([usize; 2], [[T; 2]; 2]) {
    let nodes = grid.facet_nodes(facet);
    let (p0, p1) = grid.facet_endpoints(facet);
    let half = T::of(0.5);
    let jac = grid.facet_length(facet) * half;
    let gp = T::of(3.0f64.sqrt().recip());
    let mut contrib = [[T::zero(); 2]; 2];
    for t in [-gp, gp] {
        let x = [
            (p0[0] + p1[0]) * half + (p1[0] - p0[0]) * half * t,
            (p0[1] + p1[1]) * half + (p1[1] - p0[1]) * half * t,
        ];
        let value = g(x);
        let shapes = [(T::one() - t) * half, (T::one() + t) * half];
        for (k, s) in shapes.into_iter().enumerate() {
            contrib[k][0] += s * value[0] * jac;
            contrib[k][1] += s * value[1] * jac;
        }
    }
    (nodes, contrib)
}

/// Load vector of the boundary traction over all Neumann facets.
pub fn traction_load<T: Real>(grid: &Grid<T>, bspec: &BoundarySpec<T>) -> FineField<T> {
    let mut out = DVector::zeros(grid.n_dofs());
    for facet in bspec.facets_of_kind(grid, BoundaryKind::Neumann) {
        let (nodes, contrib) = facet_traction_contrib(grid, facet, |p| (bspec.traction)(p));
        for (k, node) in nodes.into_iter().enumerate() {
            out[grid.dof(node, 0)] += contrib[k][0];
            out[grid.dof(node, 1)] += contrib[k][1];
        }
    }
    out
}

/// The right-hand-side data of one boundary value problem.
pub struct LoadSet<T: Real> {
    /// Volume force load vector.
    pub volume: FineField<T>,
    /// Boundary traction load vector.
    pub traction: FineField<T>,
    /// Nodal interpolant of the prescribed boundary displacement, extended
    /// to every node; the lifting the solve adds back.
    pub lifting: FineField<T>,
    /// `volume + traction - A * lifting`: the right-hand side of the
    /// homogenized problem for `u - lifting`.
    pub total: FineField<T>,
}

/// Builds all load vectors for a problem with stiffness `a`.
pub fn build_loads<T: Real>(
    grid: &Grid<T>,
    a: &SymmetricCsr<T>,
    bspec: &BoundarySpec<T>,
    f: impl Fn([T; 2]) -> [T; 2] + Send + Sync,
) -> LoadSet<T> {
    let volume = volume_load(grid, f);
    let traction = traction_load(grid, bspec);
    let lifting = interpolate(grid, |p| (bspec.displacement)(p));
    let total = &volume + &traction - a.matvec(&lifting);
    LoadSet {
        volume,
        traction,
        lifting,
        total,
    }
}

/// Solves the fine-scale problem: finds the field that is zero on essential
/// nodes, satisfies the reduced system on free DOFs, and carries the lifting
/// on top. Fails if the reduced matrix is not positive definite or the
/// normwise backward error exceeds [`RESIDUAL_TOL`].
pub fn fine_solve<T: Real>(
    grid: &Grid<T>,
    a: &SymmetricCsr<T>,
    loads: &LoadSet<T>,
    bspec: &BoundarySpec<T>,
) -> Result<FineField<T>> {
    let free = bspec.free_dofs(grid);
    if free.is_empty() {
        return Ok(loads.lifting.clone());
    }
    let chol = BandedCholesky::factor_csr_subset(a, &free)?;
    let b = gather(&loads.total, &free);
    let x = chol.solve(&b);
    let mut full = DVector::zeros(grid.n_dofs());
    for (k, &dof) in free.iter().enumerate() {
        full[dof] = x[k];
    }
    let b_norm = b.norm();
    if b_norm > T::zero() {
        let r_norm = (gather(&a.matvec(&full), &free) - &b).norm();
        // Inf-norm of the full matrix bounds that of the free submatrix.
        let scale = a.inf_norm() * x.norm() + b_norm;
        let backward = r_norm / scale;
        if backward > T::of(RESIDUAL_TOL) {
            return Err(Error::Solver(format!(
                "fine solve backward error {:e} exceeds {:e}",
                backward.to_f64(),
                RESIDUAL_TOL
            )));
        }
    }
    Ok(full + &loads.lifting)
}

/// Norms of a fine-scale field under the three assembled forms.
pub struct Norms<T> {
    /// Energy norm, from the stiffness form.
    pub energy: T,
    /// Norm of the weighted mass form.
    pub weighted: T,
    /// Plain L2 norm.
    pub l2: T,
}

/// Square root of a quadratic form value, rejecting negative values beyond
/// round-off. `scale` should be a bound on the magnitude of the form.
fn checked_sqrt<T: Real>(q: T, scale: T, label: &str) -> Result<T> {
    if q < -T::of(1e-12) * scale {
        return Err(Error::NotSpd(format!(
            "{label} form returned {:e} at scale {:e}",
            q.to_f64(),
            scale.to_f64()
        )));
    }
    Ok(q.max(T::zero()).sqrt())
}

/// Norm of `v` under one assembled symmetric form.
pub fn form_norm<T: Real>(v: &FineField<T>, form: &SymmetricCsr<T>) -> Result<T> {
    let scale = T::one() + form.max_abs_diag() * v.norm_squared();
    checked_sqrt(form.quad_form(v, v), scale, form.kind().label())
}

/// L2 norm of a vector-valued function by 2x2 Gauss quadrature per fine
/// cell. Exact for piecewise-quadratic integrands whose pieces align with
/// the fine cells, indicator functions with cell-aligned edges included.
pub fn l2_norm_of<T: Real>(grid: &Grid<T>, f: impl Fn([T; 2]) -> [T; 2]) -> T {
    let jac = grid.hx() * grid.hy() * T::of(0.25);
    let mut total = T::zero();
    for cell in 0..grid.n_fine_cells() {
        for p in cell_gauss_coords(grid, cell) {
            let value = f(p);
            total += (value[0] * value[0] + value[1] * value[1]) * jac;
        }
    }
    total.sqrt()
}

/// Evaluates all three norms of `v`.
pub fn norms<T: Real>(
    v: &FineField<T>,
    a: &SymmetricCsr<T>,
    s: &SymmetricCsr<T>,
    m: &SymmetricCsr<T>,
) -> Result<Norms<T>> {
    Ok(Norms {
        energy: form_norm(v, a)?,
        weighted: form_norm(v, s)?,
        l2: form_norm(v, m)?,
    })
}
