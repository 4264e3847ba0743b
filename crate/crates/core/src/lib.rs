//! Sample-average-approximation inference for box-constrained stochastic
//! variational inequalities, through the normal-map formulation
//!
//! ```text
//! (f)_S(z) = f(Π_S(z)) + z − Π_S(z) = 0,   x = Π_S(z).
//! ```
//!
//! The crate is `no_std` (it needs `alloc`). File formats, the experiment
//! harness and the command line live in the `svi-conf` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod box_geometry;
pub mod inference;
pub mod numerics;
pub mod saa_solver;
pub mod svi_model;



pub use box_geometry::{BoxSet, Cell, CoordTag, FacePattern, GeometryError, Piece, SelectionMatrix};
pub use svi_model::{AffineScenarioModel, CovarianceEstimate, ModelError, SaaMap, ScenarioBatch, TenDimOffsets};
pub use saa_solver::{SolveResult, SolverConfig, SolverError};
pub use inference::{
    ConfidenceRegion, ExactnessCondition, InferenceError, IntervalKind, IntervalSet, LimitingLaw, NormalMapDerivative,
    RegionShape,
};
pub use numerics::{EigenDecomposition, Matrix, NumericsError, RngStream, StreamRng};


