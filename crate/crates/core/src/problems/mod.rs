//! Builders for the worked problem families and their analytic fixtures.

mod posterior;
mod qei;
mod sensitivity;

use std::sync::Arc;

use crate::criteria::ErrorMetric;
use crate::driver::{Integrand, ProblemSpec};
use crate::error::Result;

pub use posterior::{conjugate_gaussian, make_posterior_mean_problem, PosteriorSpec};
pub use qei::{make_qei_integrand, QeiIntegrand, QeiSpec};
pub use sensitivity::{
    all_subsets, cost_tally, ishigami, ishigami_closed_indices, ishigami_problem, ishigami_total_indices,
    make_sensitivity_problem, singleton_subsets, Objective, SensitivityIntegrand, SensitivityProblem,
    SensitivitySpec, ISHIGAMI_A, ISHIGAMI_B,
};

/// QOI equal to the means of `f`, elementwise tolerances and levels.
pub fn make_mean_vector_problem(
    f: Arc<dyn Integrand>,
    metrics: Vec<ErrorMetric>,
    alpha_s: Vec<f64>,
) -> Result<ProblemSpec> {
    ProblemSpec::identity(f, alpha_s, metrics)
}

/// Repeats one metric for every entry of an array of `len` QOI.
pub fn uniform_metrics(metric: &ErrorMetric, len: usize) -> Vec<ErrorMetric> {
    vec![metric.clone(); len]
}
