//! The reduced multiscale solve: Galerkin system over the multiscale
//! columns, reconstruction of the fine-scale approximation, and error
//! metrics against a reference solve.
//!
//! With the columns of `B` the multiscale basis and `shift = h - Hh + Gg` the
//! combined boundary response, the approximation is `u = B beta + shift`
//! where `beta` solves the dense Galerkin system
//! `(B^T A B) beta = B^T (F - A shift)`.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::aux_space::AuxCollection;
use crate::basis::{CemBasisSet, Variant};
use crate::correctors::Corrector;
use crate::error::{Error, Result};
use crate::fem::{form_norm, LoadSet};
use crate::linalg::SymmetricCsr;
use crate::{FineField, Real};

/// The dense Galerkin system over the multiscale columns.
pub struct CoarseSystem<T: Real> {
    /// `B^T A B`, symmetric positive definite for independent columns.
    pub gram: DMatrix<T>,
    /// Column pairings with the combined load functional.
    pub rhs: DVector<T>,
}

/// The boundary response every reconstruction adds on top of the coarse
/// combination: lifting minus Dirichlet corrector plus Neumann corrector.
fn boundary_shift<T: Real>(
    loads: &LoadSet<T>,
    dirichlet: &Corrector<T>,
    neumann: &Corrector<T>,
) -> FineField<T> {
    &loads.lifting - dirichlet.field() + neumann.field()
}

/// Assembles the Galerkin system. The right-hand side pairs each column
/// with the volume and traction loads minus the energy of the boundary
/// shift, so the solved combination corrects what the shift misses.
pub fn assemble_coarse<T: Real>(
    space: &CemBasisSet<T>,
    a: &SymmetricCsr<T>,
    loads: &LoadSet<T>,
    dirichlet: &Corrector<T>,
    neumann: &Corrector<T>,
) -> Result<CoarseSystem<T>> {
    let n = a.dimension();
    if loads.volume.len() != n
        || dirichlet.field().len() != n
        || neumann.field().len() != n
        || (space.n_columns() > 0 && space.column(0).len() != n)
    {
        return Err(Error::Solver(
            "coarse assembly inputs disagree on fine dimension".into(),
        ));
    }
    let shift = boundary_shift(loads, dirichlet, neumann);
    let effective = &loads.volume + &loads.traction - a.matvec(&shift);
    let k = space.n_columns();
    let a_cols: Vec<FineField<T>> = (0..k)
        .into_par_iter()
        .map(|c| a.matvec(space.column(c)))
        .collect();
    let mut gram = DMatrix::zeros(k, k);
    for r in 0..k {
        for c in 0..k {
            gram[(r, c)] = space.column(r).dot(&a_cols[c]);
        }
    }
    gram = (&gram + gram.transpose()) * T::of(0.5);
    let rhs = DVector::from_iterator(k, (0..k).map(|c| space.column(c).dot(&effective)));
    Ok(CoarseSystem { gram, rhs })
}

/// Solves the dense Galerkin system for the column coefficients.
pub fn solve_coarse<T: Real>(sys: &CoarseSystem<T>) -> Result<DVector<T>> {
    let chol = sys.gram.clone().cholesky().ok_or_else(|| {
        Error::Solver("coarse Galerkin matrix is not positive definite".into())
    })?;
    Ok(chol.solve(&sys.rhs))
}

/// Expands coefficients to the fine approximation: the column combination
/// plus the boundary shift.
pub fn reconstruct<T: Real>(
    space: &CemBasisSet<T>,
    loads: &LoadSet<T>,
    dirichlet: &Corrector<T>,
    neumann: &Corrector<T>,
    beta: &DVector<T>,
) -> FineField<T> {
    let mut u = boundary_shift(loads, dirichlet, neumann);
    for c in 0..space.n_columns() {
        u += space.column(c) * beta[c];
    }
    u
}

/// Assembles, solves, and reconstructs in one step.
pub fn solve_multiscale<T: Real>(
    space: &CemBasisSet<T>,
    a: &SymmetricCsr<T>,
    loads: &LoadSet<T>,
    dirichlet: &Corrector<T>,
    neumann: &Corrector<T>,
) -> Result<FineField<T>> {
    let sys = assemble_coarse(space, a, loads, dirichlet, neumann)?;
    let beta = solve_coarse(&sys)?;
    Ok(reconstruct(space, loads, dirichlet, neumann, &beta))
}

/// Descriptors of the run an error report belongs to.
#[derive(Clone, Debug)]
pub struct RunMeta {
    pub coarse: (usize, usize),
    pub sub: (usize, usize),
    pub layers: Option<usize>,
    pub variant: Variant,
    pub medium: String,
}

/// Error metrics of a multiscale approximation against a reference field.
/// Relative entries are `None` when their denominator vanishes; the
/// absolute norms are always present.
pub struct ErrorReport<T: Real> {
    pub abs_energy: T,
    pub abs_l2: T,
    pub ref_energy: T,
    pub ref_l2: T,
    pub rel_energy: Option<T>,
    pub rel_l2: Option<T>,
    /// Localization gap of the Dirichlet corrector against its global
    /// counterpart, when a decay comparison was run.
    pub rel_h: Option<T>,
    /// Same for the Neumann corrector.
    pub rel_g: Option<T>,
    /// Smallest excluded auxiliary eigenvalue over elements; feeds the
    /// a-priori bound.
    pub lambda_min: Option<T>,
    /// Smallest retained top eigenvalue, recorded because it differs from
    /// `lambda_min` by one spectral index.
    pub lambda_last_kept: Option<T>,
    /// `lambda_min^{-1/2}` times the L2 norm of the volume force.
    pub theorem_bound: Option<T>,
    pub meta: Option<RunMeta>,
}

/// Energy and L2 error metrics of `u` against `reference`.
pub fn compute_errors<T: Real>(
    u: &FineField<T>,
    reference: &FineField<T>,
    a: &SymmetricCsr<T>,
    m: &SymmetricCsr<T>,
) -> Result<ErrorReport<T>> {
    let diff = u - reference;
    let abs_energy = form_norm(&diff, a)?;
    let abs_l2 = form_norm(&diff, m)?;
    let ref_energy = form_norm(reference, a)?;
    let ref_l2 = form_norm(reference, m)?;
    let ratio = |abs: T, denom: T| (denom > T::zero()).then(|| abs / denom);
    Ok(ErrorReport {
        abs_energy,
        abs_l2,
        ref_energy,
        ref_l2,
        rel_energy: ratio(abs_energy, ref_energy),
        rel_l2: ratio(abs_l2, ref_l2),
        rel_h: None,
        rel_g: None,
        lambda_min: None,
        lambda_last_kept: None,
        theorem_bound: None,
        meta: None,
    })
}

impl<T: Real> ErrorReport<T> {
    /// Fills the spectral fields from the auxiliary spaces and the L2 norm
    /// of the volume force.
    pub fn set_spectral(&mut self, aux: &AuxCollection<T>, f_l2: T) {
        self.lambda_min = aux.lambda_min();
        self.lambda_last_kept = Some(aux.min_last_kept());
        self.theorem_bound = aux.lambda_min().map(|l| f_l2 / l.sqrt());
    }
}

/// Relative energy gap of a localized corrector against its global
/// counterpart; `None` when the global corrector vanishes.
pub fn corrector_decay<T: Real>(
    local: &Corrector<T>,
    global: &Corrector<T>,
    a: &SymmetricCsr<T>,
) -> Result<Option<T>> {
    let denom = form_norm(global.field(), a)?;
    if denom == T::zero() {
        return Ok(None);
    }
    let gap = form_norm(&(local.field() - global.field()), a)?;
    Ok(Some(gap / denom))
}
