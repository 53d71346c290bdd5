//! Posterior means as a ratio of two prior expectations.

use std::sync::Arc;

use ndarray::{Axis, IxDyn};

use crate::array::{FlagArray, MultiArray};
use crate::criteria::ErrorMetric;
use crate::driver::{Integrand, ProblemSpec};
use crate::error::{Error, Result};
use crate::intervals::{iv_div, Interval};
use crate::stats::normal_quantile;

pub type PriorSampler = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
pub type Likelihood = Arc<dyn Fn(f64, &[f64]) -> f64 + Send + Sync>;

/// Prior given as an inverse-CDF map from `(0,1)^dimension` to parameter
/// vectors of length `parameters`, a likelihood `ρ(y | θ)` and observations.
#[derive(Clone)]
pub struct PosteriorSpec {
    pub dimension: usize,
    pub parameters: usize,
    pub prior: PriorSampler,
    pub likelihood: Likelihood,
    pub observations: Vec<f64>,
}

impl std::fmt::Debug for PosteriorSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PosteriorSpec")
            .field("dimension", &self.dimension)
            .field("parameters", &self.parameters)
            .field("observations", &self.observations)
            .finish_non_exhaustive()
    }
}

/// Outputs `(2, parameters)`: row 0 is `θ_k L(θ)`, row 1 is `L(θ)` repeated
/// per `k`, where `L` is the likelihood product.
struct PosteriorIntegrand {
    spec: PosteriorSpec,
}

impl Integrand for PosteriorIntegrand {
    fn dimension(&self) -> usize {
        self.spec.dimension
    }

    fn output_shape(&self) -> Vec<usize> {
        vec![2, self.spec.parameters]
    }

    fn evaluate(&self, point: &[f64], skip: &[bool], out: &mut [f64]) -> Result<u64> {
        if skip.iter().all(|&s| s) {
            return Ok(0);
        }
        let p = self.spec.parameters;
        let theta = (self.spec.prior)(point);
        if theta.len() != p {
            return Err(Error::Shape {
                expected: vec![p],
                actual: vec![theta.len()],
            });
        }
        let mut lik = 1.0;
        for &y in &self.spec.observations {
            let r = (self.spec.likelihood)(y, &theta);
            if !(r.is_finite() && r >= 0.0) {
                return Err(Error::Domain(format!("likelihood value {r} is not a finite nonnegative number")));
            }
            lik *= r;
        }
        for k in 0..p {
            if !skip[k] {
                out[k] = theta[k] * lik;
            }
            if !skip[p + k] {
                out[p + k] = lik;
            }
        }
        Ok(1)
    }
}

fn quotient_bounds(lo: &MultiArray, hi: &MultiArray, upper: bool) -> MultiArray {
    let num_lo = lo.index_axis(Axis(0), 0);
    let num_hi = hi.index_axis(Axis(0), 0);
    let den_lo = lo.index_axis(Axis(0), 1);
    let den_hi = hi.index_axis(Axis(0), 1);
    let mut out = MultiArray::zeros(IxDyn(num_lo.shape()));
    for (k, o) in out.iter_mut().enumerate() {
        let q = iv_div(Interval { lo: num_lo[k], hi: num_hi[k] }, Interval { lo: den_lo[k], hi: den_hi[k] })
            .unwrap_or(Interval::ENTIRE);
        *o = if upper { q.hi } else { q.lo };
    }
    out
}

/// Posterior mean of each parameter: `s_k = E[θ_k L] / E[L]` under the prior.
pub fn make_posterior_mean_problem(
    spec: PosteriorSpec,
    metrics: Vec<ErrorMetric>,
    alpha_s: Vec<f64>,
) -> Result<ProblemSpec> {
    if spec.dimension == 0 || spec.parameters == 0 {
        return Err(Error::InvalidSpec("posterior problem needs at least one dimension and parameter".into()));
    }
    if spec.observations.iter().any(|y| !y.is_finite()) {
        return Err(Error::InvalidSpec("observations must be finite".into()));
    }
    let p = spec.parameters;
    ProblemSpec::new(
        Arc::new(PosteriorIntegrand { spec }),
        &[p],
        Arc::new(|lo: &MultiArray, hi: &MultiArray| quotient_bounds(lo, hi, false)),
        Arc::new(|lo: &MultiArray, hi: &MultiArray| quotient_bounds(lo, hi, true)),
        Arc::new(move |b: &FlagArray| {
            let row = b.view().insert_axis(Axis(0));
            ndarray::concatenate(Axis(0), &[row.view(), row.view()])
                .expect("stacked flags")
                .into_dyn()
        }),
        alpha_s,
        metrics,
    )
}

/// Prior `N(0, 1)`, likelihood `N(θ, 1)`. The posterior mean for observations
/// `y_1..y_n` is `Σ y_i / (n + 1)`.
pub fn conjugate_gaussian(observations: Vec<f64>) -> PosteriorSpec {
    let norm = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
    PosteriorSpec {
        dimension: 1,
        parameters: 1,
        prior: Arc::new(|x: &[f64]| vec![normal_quantile(x[0]).unwrap_or(f64::NAN)]),
        likelihood: Arc::new(move |y: f64, theta: &[f64]| norm * (-0.5 * (y - theta[0]).powi(2)).exp()),
        observations,
    }
}
