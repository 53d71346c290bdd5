//! Closed and total sensitivity indices via pick-freeze estimators.
//!
//! Each node `(x, z)` in `(0,1)^{2ν}` yields, for subset `u_j`, the closed
//! numerator `φ(x)[φ(x_u, z_{-u}) - φ(z)]`, the total numerator
//! `½[φ(z) - φ(x_u, z_{-u})]²`, and the moments `φ(x)`, `φ(x)²`. The moment
//! slots use the `x` half of the node and are duplicated for every
//! `(kind, subset)` pair so each mean has a single owning QOI.

use std::f64::consts::PI;
use std::sync::Arc;

use ndarray::IxDyn;

use crate::array::{num_elements, FlagArray, MultiArray};
use crate::criteria::ErrorMetric;
use crate::driver::{Integrand, ProblemSpec, RunReport};
use crate::error::{Error, Result};
use crate::intervals::{iv_clip, iv_sqr, iv_sub, Interval};

pub type Objective = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

pub const ISHIGAMI_A: f64 = 7.0;
pub const ISHIGAMI_B: f64 = 0.1;

/// Objective on `(0,1)^nu` and subsets of `0..nu` (0-based).
#[derive(Clone)]
pub struct SensitivitySpec {
    pub objective: Objective,
    pub nu: usize,
    pub subsets: Vec<Vec<usize>>,
}

impl std::fmt::Debug for SensitivitySpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SensitivitySpec")
            .field("nu", &self.nu)
            .field("subsets", &self.subsets)
            .finish_non_exhaustive()
    }
}

impl SensitivitySpec {
    pub fn validate(&self) -> Result<()> {
        if self.nu == 0 {
            return Err(Error::InvalidSpec("objective dimension must be at least 1".into()));
        }
        if self.subsets.is_empty() {
            return Err(Error::InvalidSpec("at least one subset is required".into()));
        }
        for u in &self.subsets {
            if u.is_empty() {
                return Err(Error::InvalidSpec("subsets must be nonempty".into()));
            }
            if let Some(&v) = u.iter().find(|&&v| v >= self.nu) {
                return Err(Error::InvalidSpec(format!(
                    "subset {u:?} contains input {v}, outside 0..{}",
                    self.nu
                )));
            }
        }
        Ok(())
    }
}

/// `{0}, {1}, ..., {nu-1}`.
pub fn singleton_subsets(nu: usize) -> Vec<Vec<usize>> {
    (0..nu).map(|v| vec![v]).collect()
}

/// Every nonempty subset of `0..nu`, ordered by size then lexicographically.
pub fn all_subsets(nu: usize) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = (1u32..1 << nu)
        .map(|mask| (0..nu).filter(|&v| mask >> v & 1 == 1).collect())
        .collect();
    out.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    out
}

/// Integrand with mean shape `(2, 3, c)`; cost is counted in objective calls.
pub struct SensitivityIntegrand {
    spec: SensitivitySpec,
    membership: Vec<Vec<bool>>,
}

impl SensitivityIntegrand {
    fn new(spec: SensitivitySpec) -> Result<Self> {
        spec.validate()?;
        let membership = spec
            .subsets
            .iter()
            .map(|u| (0..spec.nu).map(|v| u.contains(&v)).collect())
            .collect();
        Ok(Self { spec, membership })
    }

    pub fn subset_count(&self) -> usize {
        self.spec.subsets.len()
    }

    /// Objective calls needed at one node under `skip`.
    pub fn calls_per_node(&self, skip: &[bool]) -> u64 {
        let need = self.needs(skip);
        need.x as u64 + need.z as u64 + need.mix.iter().filter(|&&m| m).count() as u64
    }

    fn needs(&self, skip: &[bool]) -> Needs {
        let c = self.subset_count();
        let idx = |i: usize, m: usize, j: usize| i * 3 * c + m * c + j;
        let mix: Vec<bool> = (0..c).map(|j| !skip[idx(0, 0, j)] || !skip[idx(1, 0, j)]).collect();
        let z = mix.iter().any(|&m| m);
        let x = (0..c).any(|j| {
            !skip[idx(0, 0, j)] || (0..2).any(|i| !skip[idx(i, 1, j)] || !skip[idx(i, 2, j)])
        });
        Needs { x, z, mix }
    }
}

struct Needs {
    x: bool,
    z: bool,
    mix: Vec<bool>,
}

impl Integrand for SensitivityIntegrand {
    fn dimension(&self) -> usize {
        2 * self.spec.nu
    }

    fn output_shape(&self) -> Vec<usize> {
        vec![2, 3, self.subset_count()]
    }

    fn evaluate(&self, point: &[f64], skip: &[bool], out: &mut [f64]) -> Result<u64> {
        let nu = self.spec.nu;
        let c = self.subset_count();
        let (x, z) = point.split_at(nu);
        let need = self.needs(skip);
        let phi = &self.spec.objective;
        let fx = if need.x { phi(x) } else { f64::NAN };
        let fz = if need.z { phi(z) } else { f64::NAN };
        let mut cost = need.x as u64 + need.z as u64;
        let mut mixed = vec![0.0; nu];
        for j in 0..c {
            let put = |out: &mut [f64], i: usize, m: usize, v: f64| {
                let k = i * 3 * c + m * c + j;
                if !skip[k] {
                    out[k] = v;
                }
            };
            if need.mix[j] {
                for (v, slot) in mixed.iter_mut().enumerate() {
                    *slot = if self.membership[j][v] { x[v] } else { z[v] };
                }
                let fm = phi(&mixed);
                cost += 1;
                put(out, 0, 0, fx * (fm - fz));
                put(out, 1, 0, 0.5 * (fz - fm) * (fz - fm));
            }
            for i in 0..2 {
                put(out, i, 1, fx);
                put(out, i, 2, fx * fx);
            }
        }
        Ok(cost)
    }
}

fn index_bounds(lo: &MultiArray, hi: &MultiArray, upper: bool) -> MultiArray {
    let c = lo.shape()[2];
    let mut out = MultiArray::zeros(IxDyn(&[2, c]));
    for i in 0..2 {
        for j in 0..c {
            let iv = |m: usize| Interval {
                lo: lo[[i, m, j]],
                hi: hi[[i, m, j]],
            };
            let value = sensitivity_quotient(iv(0), iv(1), iv(2), upper);
            out[[i, j]] = value;
        }
    }
    out
}

/// One side of the bound on `numerator / (second - first²)`, clipped to
/// `[0,1]`; `[0,1]` when the variance bound is not strictly positive.
fn sensitivity_quotient(numerator: Interval, first: Interval, second: Interval, upper: bool) -> f64 {
    let variance = iv_sqr(first).and_then(|sq| iv_sub(second, sq));
    let variance = match variance {
        Ok(v) if v.lo > 0.0 => v,
        _ => return if upper { 1.0 } else { 0.0 },
    };
    let q = if upper {
        numerator.hi / if numerator.hi >= 0.0 { variance.lo } else { variance.hi }
    } else {
        numerator.lo / if numerator.lo >= 0.0 { variance.hi } else { variance.lo }
    };
    let q = if q.is_nan() { if upper { 1.0 } else { 0.0 } } else { q };
    let clipped = iv_clip(Interval::point(q), 0.0, 1.0).expect("point interval");
    clipped.lo
}

/// A sensitivity problem together with the data needed to audit its cost.
#[derive(Clone)]
pub struct SensitivityProblem {
    problem: ProblemSpec,
    integrand: Arc<SensitivityIntegrand>,
}

impl std::fmt::Debug for SensitivityProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SensitivityProblem")
            .field("problem", &self.problem)
            .finish_non_exhaustive()
    }
}

impl SensitivityProblem {
    pub fn problem(&self) -> &ProblemSpec {
        &self.problem
    }

    pub fn subsets(&self) -> &[Vec<usize>] {
        &self.integrand.spec.subsets
    }

    pub fn integrand(&self) -> &SensitivityIntegrand {
        &self.integrand
    }
}

/// QOI shape `(2, c)`: row 0 closed, row 1 total indices. `metrics` and
/// `alpha_s` are flat in that order.
pub fn make_sensitivity_problem(
    spec: SensitivitySpec,
    metrics: Vec<ErrorMetric>,
    alpha_s: Vec<f64>,
) -> Result<SensitivityProblem> {
    let c = spec.subsets.len();
    let integrand = Arc::new(SensitivityIntegrand::new(spec)?);
    let problem = ProblemSpec::new(
        integrand.clone(),
        &[2, c],
        Arc::new(|lo: &MultiArray, hi: &MultiArray| index_bounds(lo, hi, false)),
        Arc::new(|lo: &MultiArray, hi: &MultiArray| index_bounds(lo, hi, true)),
        Arc::new(move |b: &FlagArray| {
            FlagArray::from_shape_fn(IxDyn(&[2, 3, c]), |ix| b[[ix[0], ix[2]]])
        }),
        alpha_s,
        metrics,
    )?;
    Ok(SensitivityProblem { problem, integrand })
}

/// Recomputes the objective calls implied by the evaluation masks in the
/// trace and checks them against the cost the run recorded.
pub fn cost_tally(problem: &SensitivityProblem, report: &RunReport) -> Result<u64> {
    let sequences = report.nodes_total.checked_div(report.n_total).unwrap_or(0);
    let mut total = 0;
    for (it, rec) in report.trace.iter().enumerate() {
        let skip: Vec<bool> = rec.skipped.iter().copied().collect();
        let nodes = (rec.n_end - rec.n_start + 1) * sequences;
        let expected = nodes * problem.integrand.calls_per_node(&skip);
        if expected != rec.cost {
            return Err(Error::Accounting(format!(
                "iteration {}: expected {expected} objective calls, recorded {}",
                it + 1,
                rec.cost
            )));
        }
        total += expected;
    }
    if total != report.cost {
        return Err(Error::Accounting(format!(
            "trace accounts for {total} objective calls, run recorded {}",
            report.cost
        )));
    }
    Ok(total)
}

/// `(1 + b t_3^4) sin t_1 + a sin^2 t_2`.
pub fn ishigami(t: &[f64], a: f64, b: f64) -> f64 {
    (1.0 + b * t[2].powi(4)) * t[0].sin() + a * t[1].sin().powi(2)
}

/// Nonzero variance components: `V_1`, `V_2`, `V_{13}`, and the total `V`.
fn ishigami_components(a: f64, b: f64) -> (f64, f64, f64, f64) {
    let p4 = PI.powi(4);
    let p8 = PI.powi(8);
    let v1 = b * p4 / 5.0 + b * b * p8 / 50.0 + 0.5;
    let v2 = a * a / 8.0;
    let v13 = 8.0 * b * b * p8 / 225.0;
    (v1, v2, v13, v1 + v2 + v13)
}

/// Closed index of subset `u` (0-based inputs) of the Ishigami function.
pub fn ishigami_closed_indices(u: &[usize], a: f64, b: f64) -> f64 {
    let (v1, v2, v13, v) = ishigami_components(a, b);
    let has = |k| u.contains(&k);
    (has(0) as u8 as f64 * v1 + has(1) as u8 as f64 * v2 + (has(0) && has(2)) as u8 as f64 * v13) / v
}

/// Total index of subset `u` (0-based inputs) of the Ishigami function.
pub fn ishigami_total_indices(u: &[usize], a: f64, b: f64) -> f64 {
    let (v1, v2, v13, v) = ishigami_components(a, b);
    let has = |k| u.contains(&k);
    (has(0) as u8 as f64 * v1 + has(1) as u8 as f64 * v2 + (has(0) || has(2)) as u8 as f64 * v13) / v
}

/// Ishigami objective on `(0,1)^3` through `t = -π + 2πx`.
pub fn ishigami_problem(
    subsets: Vec<Vec<usize>>,
    a: f64,
    b: f64,
    metrics: Vec<ErrorMetric>,
    alpha_s: Vec<f64>,
) -> Result<SensitivityProblem> {
    let objective: Objective = Arc::new(move |x: &[f64]| {
        let t = [-PI + 2.0 * PI * x[0], -PI + 2.0 * PI * x[1], -PI + 2.0 * PI * x[2]];
        ishigami(&t, a, b)
    });
    let spec = SensitivitySpec {
        objective,
        nu: 3,
        subsets,
    };
    let n = 2 * spec.subsets.len();
    if metrics.len() != n || alpha_s.len() != n {
        return Err(Error::Shape {
            expected: vec![n],
            actual: vec![metrics.len(), alpha_s.len()],
        });
    }
    debug_assert_eq!(num_elements(&[2, spec.subsets.len()]), n);
    make_sensitivity_problem(spec, metrics, alpha_s)
}
