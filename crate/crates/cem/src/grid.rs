//! Nested rectangular meshes.
//!
//! A coarse mesh of `coarse_nx x coarse_ny` rectangles covers the domain;
//! every coarse cell is refined into the same `sub_nx x sub_ny` subgrid, so
//! fine nodes, fine cells, coarse nodes, and coarse cells all live on one
//! lattice. Nodes and cells are numbered lexicographically, x fastest, and a
//! fine node with index `n` carries the two displacement DOFs `2n` and
//! `2n + 1`. The lexicographic order is what keeps constrained subblocks
//! banded, so every index map below preserves it.

use crate::{Error, Real, Result};

/// Axis-aligned rectangle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rect<T> {
    pub x0: T,
    pub y0: T,
    pub x1: T,
    pub y1: T,
}

impl<T: Real> Rect<T> {
    pub fn new(x0: T, y0: T, x1: T, y1: T) -> Self {
        Rect { x0, y0, x1, y1 }
    }

    pub fn unit() -> Self {
        Rect::new(T::zero(), T::zero(), T::one(), T::one())
    }

    pub fn width(&self) -> T {
        self.x1 - self.x0
    }

    pub fn height(&self) -> T {
        self.y1 - self.y0
    }

    pub fn contains(&self, p: [T; 2]) -> bool {
        p[0] >= self.x0 && p[0] <= self.x1 && p[1] >= self.y0 && p[1] <= self.y1
    }
}

/// Mesh resolution: coarse cells per axis and fine subdivisions per coarse
/// cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GridSpec {
    pub coarse_nx: usize,
    pub coarse_ny: usize,
    pub sub_nx: usize,
    pub sub_ny: usize,
}

impl GridSpec {
    pub fn new(coarse_nx: usize, coarse_ny: usize, sub_nx: usize, sub_ny: usize) -> Self {
        GridSpec {
            coarse_nx,
            coarse_ny,
            sub_nx,
            sub_ny,
        }
    }
}

/// Which edge of the domain (or of a region) a boundary facet lies on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Bottom,
    Top,
    Left,
    Right,
}

/// One fine edge on the domain boundary. `pos` counts facets along the side
/// from the low corner: x index for bottom/top, y index for left/right.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BoundaryFacet {
    pub side: Side,
    pub pos: usize,
}

/// The nested mesh.
#[derive(Clone, Debug)]
pub struct Grid<T> {
    spec: GridSpec,
    domain: Rect<T>,
    fine_nx: usize,
    fine_ny: usize,
    hx: T,
    hy: T,
    coarse_hx: T,
    coarse_hy: T,
}

impl<T: Real> Grid<T> {
    pub fn new(spec: GridSpec, domain: Rect<T>) -> Result<Self> {
        if spec.coarse_nx == 0 || spec.coarse_ny == 0 || spec.sub_nx == 0 || spec.sub_ny == 0 {
            return Err(Error::Grid(format!("all cell counts must be positive, got {spec:?}")));
        }
        if !(domain.width() > T::zero()) || !(domain.height() > T::zero()) {
            return Err(Error::Grid("domain must have positive extent".into()));
        }
        let fine_nx = spec.coarse_nx * spec.sub_nx;
        let fine_ny = spec.coarse_ny * spec.sub_ny;
        Ok(Grid {
            spec,
            domain,
            fine_nx,
            fine_ny,
            hx: domain.width() / T::of_usize(fine_nx),
            hy: domain.height() / T::of_usize(fine_ny),
            coarse_hx: domain.width() / T::of_usize(spec.coarse_nx),
            coarse_hy: domain.height() / T::of_usize(spec.coarse_ny),
        })
    }

    pub fn unit(spec: GridSpec) -> Result<Self> {
        Self::new(spec, Rect::unit())
    }

    pub fn spec(&self) -> GridSpec {
        self.spec
    }

    pub fn domain(&self) -> Rect<T> {
        self.domain
    }

    /// Fine cells along x over the whole domain.
    pub fn fine_nx(&self) -> usize {
        self.fine_nx
    }

    pub fn fine_ny(&self) -> usize {
        self.fine_ny
    }

    /// Fine cell extents.
    pub fn hx(&self) -> T {
        self.hx
    }

    pub fn hy(&self) -> T {
        self.hy
    }

    /// Coarse cell extents.
    pub fn coarse_hx(&self) -> T {
        self.coarse_hx
    }

    pub fn coarse_hy(&self) -> T {
        self.coarse_hy
    }

    pub fn n_fine_nodes(&self) -> usize {
        (self.fine_nx + 1) * (self.fine_ny + 1)
    }

    pub fn n_fine_cells(&self) -> usize {
        self.fine_nx * self.fine_ny
    }

    pub fn n_coarse_cells(&self) -> usize {
        self.spec.coarse_nx * self.spec.coarse_ny
    }

    pub fn n_coarse_nodes(&self) -> usize {
        (self.spec.coarse_nx + 1) * (self.spec.coarse_ny + 1)
    }

    pub fn n_dofs(&self) -> usize {
        2 * self.n_fine_nodes()
    }

    // Fine nodes.

    pub fn fine_node_index(&self, ix: usize, iy: usize) -> usize {
        debug_assert!(ix <= self.fine_nx && iy <= self.fine_ny);
        iy * (self.fine_nx + 1) + ix
    }

    pub fn fine_node_coords(&self, node: usize) -> (usize, usize) {
        (node % (self.fine_nx + 1), node / (self.fine_nx + 1))
    }

    pub fn node_point(&self, node: usize) -> [T; 2] {
        let (ix, iy) = self.fine_node_coords(node);
        [
            self.domain.x0 + T::of_usize(ix) * self.hx,
            self.domain.y0 + T::of_usize(iy) * self.hy,
        ]
    }

    pub fn dof(&self, node: usize, comp: usize) -> usize {
        debug_assert!(comp < 2);
        2 * node + comp
    }

    pub fn node_of_dof(&self, dof: usize) -> usize {
        dof / 2
    }

    pub fn comp_of_dof(&self, dof: usize) -> usize {
        dof % 2
    }

    // Fine cells.

    pub fn fine_cell_index(&self, cx: usize, cy: usize) -> usize {
        debug_assert!(cx < self.fine_nx && cy < self.fine_ny);
        cy * self.fine_nx + cx
    }

    pub fn fine_cell_coords(&self, cell: usize) -> (usize, usize) {
        (cell % self.fine_nx, cell / self.fine_nx)
    }

    /// Lower-left corner of a fine cell.
    pub fn cell_origin(&self, cell: usize) -> [T; 2] {
        let (cx, cy) = self.fine_cell_coords(cell);
        [
            self.domain.x0 + T::of_usize(cx) * self.hx,
            self.domain.y0 + T::of_usize(cy) * self.hy,
        ]
    }

    pub fn cell_center(&self, cell: usize) -> [T; 2] {
        let o = self.cell_origin(cell);
        let half = T::of(0.5);
        [o[0] + half * self.hx, o[1] + half * self.hy]
    }

    /// The four fine nodes of a cell in lexicographic order:
    /// lower-left, lower-right, upper-left, upper-right.
    pub fn cell_nodes(&self, cell: usize) -> [usize; 4] {
        let (cx, cy) = self.fine_cell_coords(cell);
        [
            self.fine_node_index(cx, cy),
            self.fine_node_index(cx + 1, cy),
            self.fine_node_index(cx, cy + 1),
            self.fine_node_index(cx + 1, cy + 1),
        ]
    }

    /// The eight DOFs of a cell, node-major with x before y.
    pub fn cell_dofs(&self, cell: usize) -> [usize; 8] {
        let n = self.cell_nodes(cell);
        [
            2 * n[0],
            2 * n[0] + 1,
            2 * n[1],
            2 * n[1] + 1,
            2 * n[2],
            2 * n[2] + 1,
            2 * n[3],
            2 * n[3] + 1,
        ]
    }

    // Coarse cells and nodes.

    pub fn coarse_cell_index(&self, cx: usize, cy: usize) -> usize {
        debug_assert!(cx < self.spec.coarse_nx && cy < self.spec.coarse_ny);
        cy * self.spec.coarse_nx + cx
    }

    pub fn coarse_cell_coords(&self, j: usize) -> (usize, usize) {
        (j % self.spec.coarse_nx, j / self.spec.coarse_nx)
    }

    pub fn coarse_node_index(&self, cx: usize, cy: usize) -> usize {
        debug_assert!(cx <= self.spec.coarse_nx && cy <= self.spec.coarse_ny);
        cy * (self.spec.coarse_nx + 1) + cx
    }

    pub fn coarse_node_coords(&self, node: usize) -> (usize, usize) {
        (
            node % (self.spec.coarse_nx + 1),
            node / (self.spec.coarse_nx + 1),
        )
    }

    pub fn coarse_node_point(&self, node: usize) -> [T; 2] {
        let (cx, cy) = self.coarse_node_coords(node);
        [
            self.domain.x0 + T::of_usize(cx) * self.coarse_hx,
            self.domain.y0 + T::of_usize(cy) * self.coarse_hy,
        ]
    }

    /// Coarse cell containing a fine cell.
    pub fn coarse_cell_of_fine(&self, cell: usize) -> usize {
        let (cx, cy) = self.fine_cell_coords(cell);
        self.coarse_cell_index(cx / self.spec.sub_nx, cy / self.spec.sub_ny)
    }

    /// Fine cells of one coarse cell, lexicographic.
    pub fn fine_cells_of_coarse(&self, j: usize) -> Vec<usize> {
        let (jx, jy) = self.coarse_cell_coords(j);
        let mut cells = Vec::with_capacity(self.spec.sub_nx * self.spec.sub_ny);
        for sy in 0..self.spec.sub_ny {
            for sx in 0..self.spec.sub_nx {
                cells.push(self.fine_cell_index(jx * self.spec.sub_nx + sx, jy * self.spec.sub_ny + sy));
            }
        }
        cells
    }

    /// Inclusive fine-node index ranges covering the closure of a coarse
    /// cell.
    pub fn coarse_cell_node_range(&self, j: usize) -> ((usize, usize), (usize, usize)) {
        let (jx, jy) = self.coarse_cell_coords(j);
        (
            (jx * self.spec.sub_nx, (jx + 1) * self.spec.sub_nx),
            (jy * self.spec.sub_ny, (jy + 1) * self.spec.sub_ny),
        )
    }

    /// Global fine nodes in the closure of a coarse cell, lexicographic.
    pub fn coarse_cell_nodes(&self, j: usize) -> Vec<usize> {
        let ((x0, x1), (y0, y1)) = self.coarse_cell_node_range(j);
        let mut nodes = Vec::with_capacity((x1 - x0 + 1) * (y1 - y0 + 1));
        for iy in y0..=y1 {
            for ix in x0..=x1 {
                nodes.push(self.fine_node_index(ix, iy));
            }
        }
        nodes
    }

    // Boundary facets.

    pub fn n_boundary_facets(&self) -> usize {
        2 * (self.fine_nx + self.fine_ny)
    }

    /// Fixed enumeration: bottom, top, left, right, each walked from its low
    /// corner.
    pub fn facet_index(&self, f: BoundaryFacet) -> usize {
        match f.side {
            Side::Bottom => f.pos,
            Side::Top => self.fine_nx + f.pos,
            Side::Left => 2 * self.fine_nx + f.pos,
            Side::Right => 2 * self.fine_nx + self.fine_ny + f.pos,
        }
    }

    pub fn facet_at(&self, index: usize) -> BoundaryFacet {
        let fnx = self.fine_nx;
        let fny = self.fine_ny;
        if index < fnx {
            BoundaryFacet { side: Side::Bottom, pos: index }
        } else if index < 2 * fnx {
            BoundaryFacet { side: Side::Top, pos: index - fnx }
        } else if index < 2 * fnx + fny {
            BoundaryFacet { side: Side::Left, pos: index - 2 * fnx }
        } else {
            debug_assert!(index < 2 * (fnx + fny));
            BoundaryFacet { side: Side::Right, pos: index - 2 * fnx - fny }
        }
    }

    pub fn boundary_facets(&self) -> impl Iterator<Item = BoundaryFacet> + '_ {
        (0..self.n_boundary_facets()).map(|i| self.facet_at(i))
    }

    /// Endpoint nodes of a facet, ascending along the side.
    pub fn facet_nodes(&self, f: BoundaryFacet) -> [usize; 2] {
        match f.side {
            Side::Bottom => [
                self.fine_node_index(f.pos, 0),
                self.fine_node_index(f.pos + 1, 0),
            ],
            Side::Top => [
                self.fine_node_index(f.pos, self.fine_ny),
                self.fine_node_index(f.pos + 1, self.fine_ny),
            ],
            Side::Left => [
                self.fine_node_index(0, f.pos),
                self.fine_node_index(0, f.pos + 1),
            ],
            Side::Right => [
                self.fine_node_index(self.fine_nx, f.pos),
                self.fine_node_index(self.fine_nx, f.pos + 1),
            ],
        }
    }

    pub fn facet_endpoints(&self, f: BoundaryFacet) -> ([T; 2], [T; 2]) {
        let [a, b] = self.facet_nodes(f);
        (self.node_point(a), self.node_point(b))
    }

    pub fn facet_midpoint(&self, f: BoundaryFacet) -> [T; 2] {
        let (a, b) = self.facet_endpoints(f);
        let half = T::of(0.5);
        [half * (a[0] + b[0]), half * (a[1] + b[1])]
    }

    pub fn facet_length(&self, f: BoundaryFacet) -> T {
        match f.side {
            Side::Bottom | Side::Top => self.hx,
            Side::Left | Side::Right => self.hy,
        }
    }

    // Oversampling regions.

    /// Grows `layers` rings of coarse cells around coarse cell `center`,
    /// clipped at the domain. Layer 0 is the element itself.
    pub fn oversample(&self, center: usize, layers: usize) -> OversampleRegion {
        let (jx, jy) = self.coarse_cell_coords(center);
        let cx0 = jx.saturating_sub(layers);
        let cy0 = jy.saturating_sub(layers);
        let cx1 = (jx + layers).min(self.spec.coarse_nx - 1);
        let cy1 = (jy + layers).min(self.spec.coarse_ny - 1);
        self.region_from_coarse_rect(center, layers, (cx0, cx1), (cy0, cy1))
    }

    /// The whole domain as a single region; used by the global variants of
    /// the basis and corrector problems.
    pub fn full_region(&self) -> OversampleRegion {
        let layers = self.spec.coarse_nx.max(self.spec.coarse_ny);
        self.region_from_coarse_rect(
            0,
            layers,
            (0, self.spec.coarse_nx - 1),
            (0, self.spec.coarse_ny - 1),
        )
    }

    fn region_from_coarse_rect(
        &self,
        center: usize,
        layers: usize,
        coarse_x: (usize, usize),
        coarse_y: (usize, usize),
    ) -> OversampleRegion {
        let mut members = Vec::with_capacity((coarse_x.1 - coarse_x.0 + 1) * (coarse_y.1 - coarse_y.0 + 1));
        for cy in coarse_y.0..=coarse_y.1 {
            for cx in coarse_x.0..=coarse_x.1 {
                members.push(self.coarse_cell_index(cx, cy));
            }
        }
        let node_x = (coarse_x.0 * self.spec.sub_nx, (coarse_x.1 + 1) * self.spec.sub_nx);
        let node_y = (coarse_y.0 * self.spec.sub_ny, (coarse_y.1 + 1) * self.spec.sub_ny);
        let mut local_dofs = Vec::with_capacity(2 * (node_x.1 - node_x.0 + 1) * (node_y.1 - node_y.0 + 1));
        for iy in node_y.0..=node_y.1 {
            for ix in node_x.0..=node_x.1 {
                let n = self.fine_node_index(ix, iy);
                local_dofs.push(2 * n);
                local_dofs.push(2 * n + 1);
            }
        }
        OversampleRegion {
            center,
            layers,
            coarse_x,
            coarse_y,
            members,
            node_x,
            node_y,
            local_dofs,
        }
    }

    pub fn partition_of_unity(&self) -> PartitionOfUnity<'_, T> {
        PartitionOfUnity { grid: self }
    }
}

/// A rectangular patch of coarse cells with its fine-scale index maps.
///
/// `local_dofs[l]` is the global DOF of local DOF `l`; local numbering is
/// lexicographic over the closed patch with the two components of a node
/// adjacent, mirroring the global order so subblocks stay banded.
#[derive(Clone, Debug)]
pub struct OversampleRegion {
    pub center: usize,
    pub layers: usize,
    /// Inclusive coarse-cell ranges.
    pub coarse_x: (usize, usize),
    pub coarse_y: (usize, usize),
    /// Member coarse cells, lexicographic.
    pub members: Vec<usize>,
    /// Inclusive fine-node index ranges of the closed patch.
    pub node_x: (usize, usize),
    pub node_y: (usize, usize),
    /// Global DOF per local DOF.
    pub local_dofs: Vec<usize>,
}

impl OversampleRegion {
    pub fn nodes_wide(&self) -> usize {
        self.node_x.1 - self.node_x.0 + 1
    }

    pub fn nodes_high(&self) -> usize {
        self.node_y.1 - self.node_y.0 + 1
    }

    pub fn n_local_nodes(&self) -> usize {
        self.nodes_wide() * self.nodes_high()
    }

    pub fn n_local_dofs(&self) -> usize {
        2 * self.n_local_nodes()
    }

    pub fn contains_node(&self, ix: usize, iy: usize) -> bool {
        ix >= self.node_x.0 && ix <= self.node_x.1 && iy >= self.node_y.0 && iy <= self.node_y.1
    }

    /// Local node index from global fine-node coordinates.
    pub fn local_node(&self, ix: usize, iy: usize) -> usize {
        debug_assert!(self.contains_node(ix, iy));
        (iy - self.node_y.0) * self.nodes_wide() + (ix - self.node_x.0)
    }

    pub fn local_of_global_dof<T: Real>(&self, grid: &Grid<T>, dof: usize) -> Option<usize> {
        let (ix, iy) = grid.fine_node_coords(dof / 2);
        if self.contains_node(ix, iy) {
            Some(2 * self.local_node(ix, iy) + dof % 2)
        } else {
            None
        }
    }

    pub fn is_global<T: Real>(&self, grid: &Grid<T>) -> bool {
        self.members.len() == grid.n_coarse_cells()
    }

    /// Fine cells of all member coarse cells, ascending.
    pub fn fine_cells<T: Real>(&self, grid: &Grid<T>) -> Vec<usize> {
        let mut cells = Vec::new();
        for &j in &self.members {
            cells.extend(grid.fine_cells_of_coarse(j));
        }
        cells.sort_unstable();
        cells
    }
}

/// Value and gradient of one coarse hat function at a point.
#[derive(Clone, Copy, Debug)]
pub struct CoarseHat<T> {
    pub coarse_node: usize,
    pub value: T,
    pub grad: [T; 2],
}

/// The coarse bilinear hat functions. On this tensor mesh each hat is the
/// product of two 1D hats, which makes global evaluation exact without any
/// cell lookup.
pub struct PartitionOfUnity<'a, T> {
    grid: &'a Grid<T>,
}

impl<'a, T: Real> PartitionOfUnity<'a, T> {
    fn hat_1d(x: T, center: T, h: T) -> T {
        let t = T::one() - ((x - center) / h).abs();
        t.max(T::zero())
    }

    /// Hat of `coarse_node` evaluated anywhere in the domain.
    pub fn value(&self, coarse_node: usize, p: [T; 2]) -> T {
        let c = self.grid.coarse_node_point(coarse_node);
        Self::hat_1d(p[0], c[0], self.grid.coarse_hx())
            * Self::hat_1d(p[1], c[1], self.grid.coarse_hy())
    }

    /// Hat of `coarse_node` at a fine node.
    pub fn node_value(&self, coarse_node: usize, fine_node: usize) -> T {
        self.value(coarse_node, self.grid.node_point(fine_node))
    }

    /// The four hats alive on the coarse cell containing `fine_cell`,
    /// evaluated at a point strictly inside that cell (gradients are
    /// undefined on coarse mesh lines).
    pub fn cell_hats(&self, fine_cell: usize, p: [T; 2]) -> [CoarseHat<T>; 4] {
        let grid = self.grid;
        let j = grid.coarse_cell_of_fine(fine_cell);
        let (jx, jy) = grid.coarse_cell_coords(j);
        let hx = grid.coarse_hx();
        let hy = grid.coarse_hy();
        let x_rel = (p[0] - grid.domain().x0 - T::of_usize(jx) * hx) / hx;
        let y_rel = (p[1] - grid.domain().y0 - T::of_usize(jy) * hy) / hy;
        let xi = [T::one() - x_rel, x_rel];
        let eta = [T::one() - y_rel, y_rel];
        let dxi = [-T::one() / hx, T::one() / hx];
        let deta = [-T::one() / hy, T::one() / hy];
        let mut out = [CoarseHat {
            coarse_node: 0,
            value: T::zero(),
            grad: [T::zero(); 2],
        }; 4];
        let mut k = 0;
        for b in 0..2 {
            for a in 0..2 {
                out[k] = CoarseHat {
                    coarse_node: grid.coarse_node_index(jx + a, jy + b),
                    value: xi[a] * eta[b],
                    grad: [dxi[a] * eta[b], xi[a] * deta[b]],
                };
                k += 1;
            }
        }
        out
    }
}
