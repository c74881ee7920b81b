//! Group subset selection with optional group-lasso or ridge shrinkage.
//!
//! The crate fits regression (square loss) and classification (logistic
//! loss) models under a per-group sparsity penalty, optionally combined with
//! group-lasso or ridge shrinkage. Predictor groups may overlap: shared
//! columns are replicated into latent per-group coefficients so each group
//! can be selected independently. On top of the block coordinate descent
//! core sit a single-swap local search, adaptive regularization paths with
//! warm starts, K-fold cross-validation, an exhaustive-enumeration oracle
//! for desk-scale certification, and a spline-based semiparametric
//! front-end in which each predictor's effect is zero, linear, or nonlinear.
//!
//! All numeric code is generic over the scalar type ([`Scalar`], implemented
//! for `f32` and `f64`); the aliases below pin the common f64 instantiation.

pub mod design;
pub mod error;
pub mod linalg;
pub mod loss;
pub mod penalty;
pub mod scalar;
pub mod solver;

pub use design::{
    predict_raw, DisjointProblem, ExpandedProblem, GroupedProblem, OrthoTransform, Prepared,
    Standardization,
};
pub use error::{Error, Result};
pub use loss::{
    group_gradient, lipschitz_constant, loss_value, sigmoid, LossKind, WorkingResidual,
};
pub use penalty::{threshold, PenaltyConfig, ScaledPenalty, ShrinkKind};
pub use scalar::Scalar;
pub use solver::{fit, CdSolver, ConvergenceReport, FitOptions};

/// The default f64 problem type.
pub type Problem = GroupedProblem<f64>;
/// f32 problem type for memory-constrained fits.
pub type Problem32 = GroupedProblem<f32>;
/// The default f64 penalty configuration.
pub type Penalty = PenaltyConfig<f64>;
