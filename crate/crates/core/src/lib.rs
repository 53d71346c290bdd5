//! Adaptive (quasi-)Monte Carlo for arrays of quantities of interest.
//!
//! A quantity of interest (QOI) `s = C(μ)` is a function of an array of
//! expectations `μ = E[f(X)]`, `X ~ U(0,1)^d`. The [`driver`] samples an
//! IID or randomized low-discrepancy sequence in doubling blocks, bounds each
//! mean with a scalar (Q)MC [`bounders`] backend, propagates the mean bounds
//! through user supplied interval functions ([`intervals`]) and stops each QOI
//! independently once its bounds satisfy the error metric ([`criteria`]).
//! Outputs that feed only converged QOI are no longer evaluated.
//!
//! [`problems`] contains builders for mean vectors (qEI acquisition values),
//! Bayesian posterior means and closed/total sensitivity indices.

pub mod array;
pub mod bounders;
pub mod criteria;
pub mod driver;
mod error;
pub mod intervals;
pub mod problems;
pub mod sequences;
pub mod stats;
pub mod study;

pub use array::{BoundsArray, FlagArray, MultiArray};
pub use bounders::{BounderConfig, BounderKind};
pub use criteria::ErrorMetric;
pub use driver::{run, ProblemSpec, RunOptions, RunReport, RunStatus};
pub use error::{Error, Result};
pub use intervals::Interval;
pub use sequences::{PointBlock, Randomization, SequenceKind, SequenceSpec};
