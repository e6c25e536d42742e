//! Penalized Poisson maximum likelihood for doubly-stochastic spatial point
//! processes observed as counts on a partition of the domain.
//!
//! The crate is `no_std` (it needs `alloc`). File formats, the command-line
//! front end and the thread-parallel drivers live in the `coxfuse` crate.
//!
//! Module map:
//!
//! - [`graph`]: the region adjacency graph, its incidence matrix and
//!   (ridged) Laplacian, and Laplacian block partitions.
//! - [`model`]: observed data, parameters, and the Poisson log-likelihood
//!   with its gradient and Hessian blocks.
//! - [`penalty`]: soft-thresholding, the quadratic fusion penalty and the
//!   smoothed absolute-difference fusion penalty.
//! - [`solver`]: proximal gradient descent with backtracking.
//! - [`inference`]: de-biased estimates, covariance estimators and
//!   confidence intervals for covariate effects.
//! - [`predict`]: Laplacian cohesion prediction, fold plans, cross-validation
//!   and tuning-grid selection.
//! - [`simulate`]: log-Gaussian Cox process replicates on a square lattice and
//!   replicate-level evaluation metrics.
#![cfg_attr(not(any(feature = "std", test)), no_std)]
// `!(x > 0.0)` is used on purpose so that NaN fails validation, quantile
// coefficients are kept as published, and index loops mirror the matrix
// algebra they implement.
#![allow(
    clippy::neg_cmp_op_on_partial_ord,
    clippy::excessive_precision,
    clippy::needless_range_loop
)]

extern crate alloc;

pub mod graph;
pub mod inference;
pub mod linalg;
pub mod model;
pub mod penalty;
pub mod predict;
pub mod simulate;
pub mod solver;
pub mod stats;

pub use graph::{GraphError, IncidenceMatrix, LaplacianMatrix, RegionGraph};
pub use inference::{CovarianceKind, DebiasConfig, InferenceError, InferenceResult};
pub use model::{Dataset, FittedMeans, ModelError, ParamVector};
pub use penalty::{FusionKind, PenaltyConfig, PenaltyError};
pub use predict::{CvConfig, FoldPlan, PredictError, ScoreMetric, TuningGrid};
pub use simulate::{Replicate, Scenario, SimulationError};
pub use solver::{FitError, FitResult, Init, SolverConfig};
