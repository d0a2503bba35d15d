//! Constraint energy minimizing multiscale finite elements for planar
//! linear elasticity.
//!
//! The solver targets heterogeneous media whose stiffness varies by many
//! orders of magnitude between a soft matrix and hard inclusions. A fine
//! rectangular mesh resolves the coefficient; a much coarser mesh carries the
//! actual solve. For every coarse element a small spectral problem supplies a
//! handful of auxiliary modes, and each mode is turned into a multiscale
//! basis function by minimizing elastic energy over an oversampling patch of
//! coarse elements under constraints tied to the modes. Inhomogeneous
//! Dirichlet and Neumann data enter through boundary correctors built with
//! the same machinery.
//!
//! Module layout:
//!
//! * [`grid`]: nested coarse/fine rectangular meshes, oversampling regions,
//!   and the coarse partition of unity.
//! * [`boundary`]: facet classification and boundary data.
//! * [`medium`]: piecewise-constant material fields.
//! * [`fem`]: Q1 element matrices, global assembly, loads, the fine
//!   reference solve, and norms.
//! * [`aux_space`]: per-element spectral modes and the projection onto them.
//! * [`basis`]: energy-minimizing multiscale basis functions (relaxed and
//!   constrained variants) and the shared region solver.
//! * [`correctors`]: Dirichlet and Neumann boundary correctors, localized or
//!   global, plus the combined per-region build.
//! * [`msolve`]: coarse Galerkin system, reconstruction, and error reports.
//!
//! All solver paths are deterministic: parallel loops collect results in a
//! fixed order before any reduction, so outputs are bit-identical across
//! thread counts.

pub mod aux_space;
pub mod basis;
pub mod boundary;
pub mod correctors;
pub mod error;
pub mod fem;
pub mod grid;
pub mod linalg;
pub mod medium;
pub mod msolve;

pub use error::{Error, Result};

/// Scalar the solvers are generic over. Implemented for `f32` and `f64`.
pub trait Real: nalgebra::RealField + num_traits::FromPrimitive + Copy + Send + Sync {
    /// Converts an `f64` literal. Lossy for `f32`.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("finite literal")
    }

    /// Converts a count. Panics only if the count exceeds the mantissa range.
    fn of_usize(n: usize) -> Self {
        Self::from_usize(n).expect("count representable")
    }

    fn to_f64(self) -> f64;
}

impl Real for f32 {
    fn to_f64(self) -> f64 {
        self as f64
    }
}

impl Real for f64 {
    fn to_f64(self) -> f64 {
        self
    }
}

/// Displacement-like quantity on the fine mesh: two components per fine
/// node, interleaved as `[u0x, u0y, u1x, u1y, ..]` in node order.
pub type FineField<T> = nalgebra::DVector<T>;

/// Double-precision aliases for the common instantiation.
pub type FineFieldF64 = FineField<f64>;
pub type GridF64 = grid::Grid<f64>;
pub type MaterialFieldF64 = medium::MaterialField<f64>;
pub type BoundarySpecF64 = boundary::BoundarySpec<f64>;
pub type SymmetricCsrF64 = linalg::SymmetricCsr<f64>;
pub type AuxCollectionF64 = aux_space::AuxCollection<f64>;
pub type CemBasisSetF64 = basis::CemBasisSet<f64>;
pub type CorrectorF64 = correctors::Corrector<f64>;
pub type MultiscaleOperatorsF64 = correctors::MultiscaleOperators<f64>;
pub type ErrorReportF64 = msolve::ErrorReport<f64>;
