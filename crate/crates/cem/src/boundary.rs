//! Boundary decomposition and data.
//!
//! Every fine facet of the domain boundary is either essential (displacement
//! prescribed) or natural (traction prescribed). Oversampling regions add a
//! third flavor: facets of the region boundary that lie strictly inside the
//! domain are artificial, and functions in a region's solution space vanish
//! there so that extension by zero stays conforming. A node is constrained
//! as soon as any facet touching it along the region boundary is essential
//! or artificial; nodes on purely natural stretches stay free.

use std::sync::Arc;

use crate::grid::{BoundaryFacet, Grid, OversampleRegion, Side};
use crate::{Error, Real, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundaryKind {
    Dirichlet,
    Neumann,
}

/// Vector-valued data callback, evaluated at points of the closed domain.
pub type VectorFn<T> = Arc<dyn Fn([T; 2]) -> [T; 2] + Send + Sync>;

pub fn constant_fn<T: Real>(v: [f64; 2]) -> VectorFn<T> {
    Arc::new(move |_| [T::of(v[0]), T::of(v[1])])
}

pub fn zero_fn<T: Real>() -> VectorFn<T> {
    constant_fn([0.0, 0.0])
}

/// Facet classification plus the two data callbacks.
///
/// `displacement` must be evaluable on the whole closed domain: its nodal
/// interpolant doubles as the lifting of the essential data. `traction` is
/// only ever evaluated on natural facets.
#[derive(Clone)]
pub struct BoundarySpec<T> {
    kinds: Vec<BoundaryKind>,
    pub displacement: VectorFn<T>,
    pub traction: VectorFn<T>,
}

impl<T: Real> BoundarySpec<T> {
    /// Classifies every boundary facet by its side and midpoint. Fails if no
    /// facet ends up essential: without one the elastic problem is singular
    /// under rigid motions.
    pub fn new(
        grid: &Grid<T>,
        classify: impl Fn(Side, [T; 2]) -> BoundaryKind,
        displacement: VectorFn<T>,
        traction: VectorFn<T>,
    ) -> Result<Self> {
        let kinds: Vec<BoundaryKind> = grid
            .boundary_facets()
            .map(|f| classify(f.side, grid.facet_midpoint(f)))
            .collect();
        if !kinds.contains(&BoundaryKind::Dirichlet) {
            return Err(Error::Boundary(
                "at least one facet must carry essential data".into(),
            ));
        }
        Ok(BoundarySpec {
            kinds,
            displacement,
            traction,
        })
    }

    pub fn all_dirichlet(grid: &Grid<T>, displacement: VectorFn<T>) -> Self {
        BoundarySpec {
            kinds: vec![BoundaryKind::Dirichlet; grid.n_boundary_facets()],
            displacement,
            traction: zero_fn(),
        }
    }

    pub fn kind(&self, facet_index: usize) -> BoundaryKind {
        self.kinds[facet_index]
    }

    pub fn kind_of(&self, grid: &Grid<T>, facet: BoundaryFacet) -> BoundaryKind {
        self.kinds[grid.facet_index(facet)]
    }

    pub fn has_neumann(&self) -> bool {
        self.kinds.contains(&BoundaryKind::Neumann)
    }

    pub fn facets_of_kind(&self, grid: &Grid<T>, kind: BoundaryKind) -> Vec<BoundaryFacet> {
        grid.boundary_facets()
            .filter(|&f| self.kind_of(grid, f) == kind)
            .collect()
    }

    /// Per fine node: true when the node touches an essential facet (the
    /// closed essential boundary).
    pub fn essential_node_mask(&self, grid: &Grid<T>) -> Vec<bool> {
        let mut mask = vec![false; grid.n_fine_nodes()];
        for f in self.facets_of_kind(grid, BoundaryKind::Dirichlet) {
            for n in grid.facet_nodes(f) {
                mask[n] = true;
            }
        }
        mask
    }

    /// Unconstrained global DOFs, ascending (hence lexicographic).
    pub fn free_dofs(&self, grid: &Grid<T>) -> Vec<usize> {
        let mask = self.essential_node_mask(grid);
        let mut free = Vec::with_capacity(grid.n_dofs());
        for n in 0..grid.n_fine_nodes() {
            if !mask[n] {
                free.push(2 * n);
                free.push(2 * n + 1);
            }
        }
        free
    }
}

/// Per local node of a region: true when the node is constrained in the
/// region's solution space. Facets of the region boundary inside the domain
/// count as essential; facets on the domain boundary keep their own kind.
pub fn region_essential_nodes<T: Real>(
    grid: &Grid<T>,
    region: &OversampleRegion,
    spec: &BoundarySpec<T>,
) -> Vec<bool> {
    let mut ess = vec![false; region.n_local_nodes()];
    let (x0, x1) = region.node_x;
    let (y0, y1) = region.node_y;

    let mark = |ess: &mut Vec<bool>, ix: usize, iy: usize| {
        ess[region.local_node(ix, iy)] = true;
    };

    // bottom and top runs of the region boundary
    for ix in x0..x1 {
        let bottom_essential = if y0 == 0 {
            spec.kind_of(grid, BoundaryFacet { side: Side::Bottom, pos: ix }) == BoundaryKind::Dirichlet
        } else {
            true
        };
        if bottom_essential {
            mark(&mut ess, ix, y0);
            mark(&mut ess, ix + 1, y0);
        }
        let top_essential = if y1 == grid.fine_ny() {
            spec.kind_of(grid, BoundaryFacet { side: Side::Top, pos: ix }) == BoundaryKind::Dirichlet
        } else {
            true
        };
        if top_essential {
            mark(&mut ess, ix, y1);
            mark(&mut ess, ix + 1, y1);
        }
    }
    // left and right runs
    for iy in y0..y1 {
        let left_essential = if x0 == 0 {
            spec.kind_of(grid, BoundaryFacet { side: Side::Left, pos: iy }) == BoundaryKind::Dirichlet
        } else {
            true
        };
        if left_essential {
            mark(&mut ess, x0, iy);
            mark(&mut ess, x0, iy + 1);
        }
        let right_essential = if x1 == grid.fine_nx() {
            spec.kind_of(grid, BoundaryFacet { side: Side::Right, pos: iy }) == BoundaryKind::Dirichlet
        } else {
            true
        };
        if right_essential {
            mark(&mut ess, x1, iy);
            mark(&mut ess, x1, iy + 1);
        }
    }
    ess
}

/// Unconstrained local DOFs of a region, ascending in local numbering.
pub fn region_free_dofs<T: Real>(
    grid: &Grid<T>,
    region: &OversampleRegion,
    spec: &BoundarySpec<T>,
) -> Vec<usize> {
    let ess = region_essential_nodes(grid, region, spec);
    let mut free = Vec::with_capacity(region.n_local_dofs());
    for (node, &e) in ess.iter().enumerate() {
        if !e {
            free.push(2 * node);
            free.push(2 * node + 1);
        }
    }
    free
}
