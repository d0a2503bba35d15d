//! Boundary correctors: energy-minimizing responses to inhomogeneous
//! Dirichlet and Neumann data, summed over coarse elements.
//!
//! Each coarse element `K_j` poses one corrector problem per kind of data,
//! driven by an element-local load:
//!
//! * Dirichlet: the broken energy pairing of the lifted boundary
//!   displacement, `b_j = A_j h|_{K_j}` with `A_j` the element-patch
//!   stiffness;
//! * Neumann: the traction pairing over the element's share of the traction
//!   boundary.
//!
//! The localized corrector solves each element's problem on its oversampling
//! region and sums the responses; the global corrector solves one
//! whole-domain problem with the summed load, which equals the sum of
//! whole-domain element responses by linearity. Both reuse the
//! [`RegionSolver`] machinery, so the constrained flavor keeps the corrector
//! weighted-orthogonal to the auxiliary space up to the element's own load
//! moments, and the relaxed flavor penalizes the projection instead.

use nalgebra::DVector;
use rayon::prelude::*;

use crate::aux_space::{AuxBasis, AuxCollection};
use crate::basis::{CemBasisSet, RegionSolver, Variant};
use crate::boundary::{BoundaryKind, BoundarySpec};
use crate::error::Result;
use crate::fem::facet_traction_contrib;
use crate::grid::{BoundaryFacet, Grid, Side};
use crate::linalg::{gather, SymmetricCsr};
use crate::{FineField, Real};

/// Which boundary data a corrector responds to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CorrectorKind {
    Dirichlet,
    Neumann,
}

/// A summed boundary corrector field.
pub struct Corrector<T: Real> {
    kind: CorrectorKind,
    variant: Variant,
    layers: Option<usize>,
    field: FineField<T>,
    elements_solved: usize,
}

impl<T: Real> Corrector<T> {
    pub fn kind(&self) -> CorrectorKind {
        self.kind
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn layers(&self) -> Option<usize> {
        self.layers
    }

    pub fn field(&self) -> &FineField<T> {
        &self.field
    }

    /// Number of elements whose load was nonzero and hence actually solved.
    pub fn elements_solved(&self) -> usize {
        self.elements_solved
    }
}

/// The multiscale space and both boundary correctors, built over shared
/// region factorizations.
pub struct MultiscaleOperators<T: Real> {
    pub space: CemBasisSet<T>,
    pub dirichlet: Corrector<T>,
    pub neumann: Corrector<T>,
}

/// The fine cell adjacent to a boundary facet.
fn facet_cell<T: Real>(grid: &Grid<T>, f: BoundaryFacet) -> usize {
    match f.side {
        Side::Bottom => grid.fine_cell_index(f.pos, 0),
        Side::Top => grid.fine_cell_index(f.pos, grid.fine_ny() - 1),
        Side::Left => grid.fine_cell_index(0, f.pos),
        Side::Right => grid.fine_cell_index(grid.fine_nx() - 1, f.pos),
    }
}

/// Traction facets grouped by the coarse element that owns them.
fn neumann_facets_by_element<T: Real>(
    grid: &Grid<T>,
    bspec: &BoundarySpec<T>,
) -> Vec<Vec<BoundaryFacet>> {
    let mut out = vec![Vec::new(); grid.n_coarse_cells()];
    for facet in bspec.facets_of_kind(grid, BoundaryKind::Neumann) {
        out[grid.coarse_cell_of_fine(facet_cell(grid, facet))].push(facet);
    }
    out
}

/// Element-local Dirichlet load `A_j h|_{K_j}` over the element's DOFs, or
/// `None` when the boundary displacement vanishes there.
fn dirichlet_element_load<T: Real>(
    aux_el: &AuxBasis<T>,
    h: &FineField<T>,
) -> Option<DVector<T>> {
    let h_loc = gather(h, aux_el.dofs());
    if h_loc.iter().all(|v| v.is_zero()) {
        return None;
    }
    Some(aux_el.a_local() * h_loc)
}

/// Element-local traction load over the element's DOFs, or `None` when the
/// element touches no traction facet.
fn neumann_element_load<T: Real>(
    grid: &Grid<T>,
    bspec: &BoundarySpec<T>,
    j: usize,
    facets: &[BoundaryFacet],
) -> Option<DVector<T>> {
    if facets.is_empty() {
        return None;
    }
    let ((x0, x1), (y0, _)) = grid.coarse_cell_node_range(j);
    let width = x1 - x0 + 1;
    let n_nodes = width * (grid.spec().sub_ny + 1);
    let mut b = DVector::zeros(2 * n_nodes);
    for &facet in facets {
        let (nodes, contrib) = facet_traction_contrib(grid, facet, |p| (bspec.traction)(p));
        for (k, node) in nodes.into_iter().enumerate() {
            let (ix, iy) = grid.fine_node_coords(node);
            let local = (iy - y0) * width + (ix - x0);
            b[2 * local] += contrib[k][0];
            b[2 * local + 1] += contrib[k][1];
        }
    }
    Some(b)
}

/// Solves one element's corrector problem on `solver`'s region and returns
/// the response over the region's free DOFs.
fn element_response<T: Real>(
    solver: &RegionSolver<T>,
    aux_el: &AuxBasis<T>,
    b_loc: &DVector<T>,
) -> DVector<T> {
    let mut b = DVector::zeros(solver.n_free());
    solver.pack_add(&mut b, aux_el.dofs(), b_loc);
    let c = match solver.variant() {
        Variant::Relaxed => None,
        Variant::Constrained => {
            let mut c = DVector::zeros(solver.n_rows());
            let r0 = solver
                .row_index(aux_el.element(), 0)
                .expect("a region always contains its center element");
            let moments = aux_el.vectors().transpose() * b_loc;
            for (i, value) in moments.iter().enumerate() {
                c[r0 + i] = *value;
            }
            Some(c)
        }
    };
    solver.solve(Some(&b), c.as_ref())
}

/// What one element contributes: its basis columns and its share of each
/// corrector.
struct ElementPart<T: Real> {
    columns: Vec<FineField<T>>,
    dirichlet: Option<FineField<T>>,
    neumann: Option<FineField<T>>,
}

fn element_part<T: Real>(
    solver: &RegionSolver<T>,
    aux_el: &AuxBasis<T>,
    h_interp: &FineField<T>,
    facets: &[BoundaryFacet],
    grid: &Grid<T>,
    bspec: &BoundarySpec<T>,
) -> Result<ElementPart<T>> {
    let j = aux_el.element();
    let columns = (0..aux_el.count())
        .map(|i| Ok(solver.lift(&solver.basis_column(j, i)?)))
        .collect::<Result<Vec<_>>>()?;
    let dirichlet = dirichlet_element_load(aux_el, h_interp)
        .map(|b_loc| solver.lift(&element_response(solver, aux_el, &b_loc)));
    let neumann = neumann_element_load(grid, bspec, j, facets)
        .map(|b_loc| solver.lift(&element_response(solver, aux_el, &b_loc)));
    Ok(ElementPart {
        columns,
        dirichlet,
        neumann,
    })
}

/// Builds the multiscale space and both correctors. `layers = Some(m)`
/// localizes each element's problems to its `m`-layer oversampling region
/// (regions are factored once, used for all of that element's problems, and
/// processed in parallel); `layers = None` solves everything on the whole
/// domain through one factorization.
pub fn build_operators<T: Real>(
    grid: &Grid<T>,
    a: &SymmetricCsr<T>,
    aux: &AuxCollection<T>,
    bspec: &BoundarySpec<T>,
    h_interp: &FineField<T>,
    layers: Option<usize>,
    variant: Variant,
) -> Result<MultiscaleOperators<T>> {
    let facets = neumann_facets_by_element(grid, bspec);
    let parts: Vec<ElementPart<T>> = match layers {
        Some(m) => (0..grid.n_coarse_cells())
            .into_par_iter()
            .map(|j| {
                let solver =
                    RegionSolver::new(grid, a, aux, grid.oversample(j, m), bspec, variant)?;
                element_part(&solver, aux.element(j), h_interp, &facets[j], grid, bspec)
            })
            .collect::<Result<Vec<_>>>()?,
        None => {
            let solver = RegionSolver::new(grid, a, aux, grid.full_region(), bspec, variant)?;
            (0..grid.n_coarse_cells())
                .map(|j| element_part(&solver, aux.element(j), h_interp, &facets[j], grid, bspec))
                .collect::<Result<Vec<_>>>()?
        }
    };

    let mut columns = Vec::with_capacity(aux.n_columns());
    let mut dirichlet = DVector::zeros(grid.n_dofs());
    let mut neumann = DVector::zeros(grid.n_dofs());
    let mut n_dirichlet = 0;
    let mut n_neumann = 0;
    for part in parts {
        columns.extend(part.columns);
        if let Some(field) = part.dirichlet {
            dirichlet += field;
            n_dirichlet += 1;
        }
        if let Some(field) = part.neumann {
            neumann += field;
            n_neumann += 1;
        }
    }
    let space = CemBasisSet::from_parts(variant, layers, aux.modes(), columns);
    Ok(MultiscaleOperators {
        space,
        dirichlet: Corrector {
            kind: CorrectorKind::Dirichlet,
            variant,
            layers,
            field: dirichlet,
            elements_solved: n_dirichlet,
        },
        neumann: Corrector {
            kind: CorrectorKind::Neumann,
            variant,
            layers,
            field: neumann,
            elements_solved: n_neumann,
        },
    })
}
