//! Incremental tracking of leading eigenspaces of evolving symmetric operators.
//!
//! The crate warm-starts block eigensolvers from the previous estimate,
//! bounds how many iterations the new solve needs, skips updates that
//! provably do not move the subspace enough to matter, and adapts the
//! tracked dimension from the spectrum.
//!
//! * [`linalg`]: dense kernels (QR, small symmetric eigensolves, subspace distance).
//! * [`operators`]: matrix-free operators (sparse graphs, deflation, dilation, Hankel).
//! * [`solvers`]: subspace iteration, block Krylov and iteration bounds.
//! * [`tracker`]: the incremental tracking loop.
//! * [`graph`]: graph models, edit batches and temporal edge streams.
//! * [`pca`]: perturbation bounds for PCA and singular spectrum analysis.
//! * [`experiments`]: end-to-end runners used by the command line tool.

pub mod error;
pub mod experiments;
pub mod graph;
pub mod linalg;
pub mod operators;
pub mod pca;
pub mod rng;
pub mod solvers;
pub mod tracker;

pub use error::{Error, Result};
pub use linalg::{DenseMatrix, OrthonormalBasis, SymmetricSpectrum};
pub use operators::{LinearOperator, OperatorExt, SharedOp};
pub use solvers::{Method, SolveResult, SolverConfig, Target};

pub use tracker::{StepReport, TrackerConfig, TrackerState, TrackerUpdate};
