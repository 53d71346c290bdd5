//! Scalar mean bounders.
//!
//! * [`CltState`]: IID sampling, `mu_hat ± C z_{1-α/2} σ̂/√n`.
//! * [`RepState`]: `R` independent randomizations of one low-discrepancy
//!   sequence, `mu_hat ± C t_{1-α/2, R-1} σ̂_R/√R` where `σ̂_R` is the
//!   sample standard deviation of the replicate means.
//!
//! Both keep compensated running sums so blocks of evaluations can be folded
//! in as they arrive.

use crate::error::{Error, Result};
use crate::intervals::Interval;
use crate::stats::{normal_quantile, t_quantile};

pub const DEFAULT_INFLATION: f64 = 1.2;
pub const DEFAULT_REPLICATIONS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BounderKind {
    CltIid,
    Replications,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BounderConfig {
    pub kind: BounderKind,
    /// Inflation factor `C >= 1` applied to the half-width.
    pub inflation: f64,
    /// Replicate count; only used by [`BounderKind::Replications`].
    pub replications: usize,
}

impl BounderConfig {
    pub fn clt() -> Self {
        Self {
            kind: BounderKind::CltIid,
            inflation: DEFAULT_INFLATION,
            replications: 1,
        }
    }

    pub fn replications(count: usize) -> Self {
        Self {
            kind: BounderKind::Replications,
            inflation: DEFAULT_INFLATION,
            replications: count,
        }
    }

    pub fn with_inflation(mut self, inflation: f64) -> Self {
        self.inflation = inflation;
        self
    }

    /// Number of independent sequences sampled per node index.
    pub fn sequence_count(&self) -> usize {
        match self.kind {
            BounderKind::CltIid => 1,
            BounderKind::Replications => self.replications,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.inflation >= 1.0 && self.inflation.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "inflation factor must be a finite value >= 1, got {}",
                self.inflation
            )));
        }
        if self.kind == BounderKind::Replications && self.replications < 2 {
            return Err(Error::InvalidArgument(format!(
                "replications bounder needs R >= 2, got {}",
                self.replications
            )));
        }
        Ok(())
    }
}

/// Neumaier compensated sum.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn merge(&mut self, other: &CompensatedSum) {
        self.add(other.sum);
        self.add(other.compensation);
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "uncertainty level {alpha} is outside (0, 1)"
        )))
    }
}

fn check_inflation(inflation: f64) -> Result<()> {
    if inflation >= 1.0 && inflation.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "inflation factor must be >= 1, got {inflation}"
        )))
    }
}

/// Running count, sum and sum of squares for one mean index.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CltState {
    n: u64,
    sum: CompensatedSum,
    sum_sq: CompensatedSum,
}

impl CltState {
    pub fn new() -> Self {
        Self::default()
    }

    /// Folds in a block of evaluations. On a non-finite value the state is
    /// left unchanged and the error carries the offending offset.
    pub fn update(&mut self, evals: &[f64]) -> Result<()> {
        if let Some((i, &v)) = evals.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::IntegrandEvaluation {
                mean_index: vec![],
                point_index: i as u64,
                value: v,
            });
        }
        for &v in evals {
            self.sum.add(v);
            self.sum_sq.add(v * v);
        }
        self.n += evals.len() as u64;
        Ok(())
    }

    /// Adds the statistics of another state (e.g. a block reduced elsewhere).
    pub fn merge(&mut self, other: &CltState) {
        self.n += other.n;
        self.sum.merge(&other.sum);
        self.sum_sq.merge(&other.sum_sq);
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.sum.value() / self.n as f64
    }

    /// Unbiased sample variance, clamped at zero.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            return f64::NAN;
        }
        let n = self.n as f64;
        let s = self.sum.value();
        ((self.sum_sq.value() - s * s / n) / (n - 1.0)).max(0.0)
    }

    pub fn bounds(&self, alpha: f64, inflation: f64) -> Result<Interval> {
        clt_bounds(self, alpha, inflation)
    }
}

pub fn clt_bounds(state: &CltState, alpha: f64, inflation: f64) -> Result<Interval> {
    check_alpha(alpha)?;
    check_inflation(inflation)?;
    if state.n < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            have: state.n,
        });
    }
    let z = normal_quantile(1.0 - alpha / 2.0)?;
    let center = state.mean();
    let half = inflation * z * (state.variance() / state.n as f64).sqrt();
    Ok(Interval {
        lo: center - half,
        hi: center + half,
    })
}

/// Per-replicate running sums for one mean index.
#[derive(Debug, Clone, PartialEq)]
pub struct RepState {
    replicates: Vec<CltState>,
}

impl RepState {
    pub fn new(replications: usize) -> Result<Self> {
        if replications < 2 {
            return Err(Error::InsufficientData {
                needed: 2,
                have: replications as u64,
            });
        }
        Ok(Self {
            replicates: vec![CltState::new(); replications],
        })
    }

    pub fn replications(&self) -> usize {
        self.replicates.len()
    }

    pub fn update(&mut self, replicate: usize, evals: &[f64]) -> Result<()> {
        self.replicate_mut(replicate)?.update(evals)
    }

    pub fn merge(&mut self, replicate: usize, block: &CltState) -> Result<()> {
        self.replicate_mut(replicate)?.merge(block);
        Ok(())
    }

    fn replicate_mut(&mut self, replicate: usize) -> Result<&mut CltState> {
        let count = self.replicates.len();
        self.replicates.get_mut(replicate).ok_or_else(|| {
            Error::InvalidArgument(format!("replicate {replicate} out of range 0..{count}"))
        })
    }

    /// Points per replicate; all replicates share one count.
    pub fn count(&self) -> u64 {
        self.replicates[0].count()
    }

    pub fn replicate_means(&self) -> Vec<f64> {
        self.replicates.iter().map(CltState::mean).collect()
    }

    pub fn bounds(&self, alpha: f64, inflation: f64) -> Result<Interval> {
        rep_bounds(self, alpha, inflation)
    }
}

pub fn rep_bounds(state: &RepState, alpha: f64, inflation: f64) -> Result<Interval> {
    check_alpha(alpha)?;
    check_inflation(inflation)?;
    let r = state.replicates.len();
    if r < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            have: r as u64,
        });
    }
    let n = state.count();
    if n == 0 || state.replicates.iter().any(|s| s.count() != n) {
        return Err(Error::InsufficientData { needed: 1, have: 0 });
    }
    let means = state.replicate_means();
    let mut total = CompensatedSum::default();
    means.iter().for_each(|&m| total.add(m));
    let center = total.value() / r as f64;
    let mut dev = CompensatedSum::default();
    means.iter().for_each(|&m| dev.add((m - center).powi(2)));
    let sd = (dev.value() / (r - 1) as f64).max(0.0).sqrt();
    let t = t_quantile(1.0 - alpha / 2.0, (r - 1) as u64)?;
    let half = inflation * t * sd / (r as f64).sqrt();
    Ok(Interval {
        lo: center - half,
        hi: center + half,
    })
}

/// Bounder state for one mean index.
#[derive(Debug, Clone, PartialEq)]
pub enum MeanState {
    Clt(CltState),
    Rep(RepState),
}

impl MeanState {
    pub fn new(config: &BounderConfig) -> Result<Self> {
        Ok(match config.kind {
            BounderKind::CltIid => MeanState::Clt(CltState::new()),
            BounderKind::Replications => MeanState::Rep(RepState::new(config.replications)?),
        })
    }

    pub fn merge(&mut self, replicate: usize, block: &CltState) -> Result<()> {
        match self {
            MeanState::Clt(s) => {
                s.merge(block);
                Ok(())
            }
            MeanState::Rep(s) => s.merge(replicate, block),
        }
    }

    pub fn bounds(&self, alpha: f64, inflation: f64) -> Result<Interval> {
        match self {
            MeanState::Clt(s) => s.bounds(alpha, inflation),
            MeanState::Rep(s) => s.bounds(alpha, inflation),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn mean_of_small_block() {
        let mut s = CltState::new();
        s.update(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(s.mean(), 2.0);
        assert_eq!(s.count(), 3);
    }

    #[test]
    fn update_is_associative_over_blocks() {
        let mut a = CltState::new();
        a.update(&[1.0, 2.0]).unwrap();
        a.update(&[3.0]).unwrap();
        let mut b = CltState::new();
        b.update(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn non_finite_evaluations_rejected() {
        let mut s = CltState::new();
        s.update(&[1.0]).unwrap();
        let err = s.update(&[0.0, f64::NAN]).unwrap_err();
        assert!(matches!(err, Error::IntegrandEvaluation { point_index: 1, .. }));
        assert_eq!(s.count(), 1);
        assert!(s.update(&[f64::INFINITY]).is_err());
    }

    #[test]
    fn clt_constant_and_alternating() {
        let mut s = CltState::new();
        s.update(&[4.0; 10]).unwrap();
        assert_eq!(clt_bounds(&s, 0.05, 1.0).unwrap(), Interval::point(4.0));

        let evals: Vec<f64> = (0..100).map(|i| (i % 2) as f64).collect();
        let mut s = CltState::new();
        s.update(&evals).unwrap();
        let iv = clt_bounds(&s, 0.05, 1.0).unwrap();
        assert_abs_diff_eq!(0.5 * (iv.lo + iv.hi), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(s.variance().sqrt(), 0.502_518_907_629_606, epsilon = 1e-12);
        assert_abs_diff_eq!(0.5 * iv.width(), 0.098_491_896_050_443_81, epsilon = 1e-9);

        let wide = clt_bounds(&s, 0.05, 2.0).unwrap();
        assert_abs_diff_eq!(wide.width(), 2.0 * iv.width(), epsilon = 1e-12);
        assert_abs_diff_eq!(wide.lo + wide.hi, iv.lo + iv.hi, epsilon = 1e-12);
    }

    #[test]
    fn clt_needs_two_points() {
        let mut s = CltState::new();
        s.update(&[1.0]).unwrap();
        assert!(matches!(
            clt_bounds(&s, 0.05, 1.0),
            Err(Error::InsufficientData { needed: 2, have: 1 })
        ));
    }

    #[test]
    fn replicated_two_means() {
        let mut s = RepState::new(2).unwrap();
        s.update(0, &[0.0, 0.0]).unwrap();
        s.update(1, &[1.0, 1.0]).unwrap();
        let iv = rep_bounds(&s, 0.05, 1.0).unwrap();
        assert_abs_diff_eq!(0.5 * (iv.lo + iv.hi), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(0.5 * iv.width(), 6.353_102_368_087_353, epsilon = 1e-8);
        let narrower = rep_bounds(&s, 0.2, 1.0).unwrap();
        assert!(narrower.width() < iv.width());
    }

    #[test]
    fn replicated_equal_means_collapse() {
        let mut s = RepState::new(4).unwrap();
        for r in 0..4 {
            s.update(r, &[0.25, 0.75]).unwrap();
        }
        let iv = rep_bounds(&s, 0.05, 1.2).unwrap();
        assert_eq!(iv, Interval::point(0.5));
        assert!(matches!(RepState::new(1), Err(Error::InsufficientData { .. })));
    }

    #[test]
    fn config_validation() {
        assert!(BounderConfig::clt().validate().is_ok());
        assert!(BounderConfig::clt().with_inflation(0.9).validate().is_err());
        assert!(BounderConfig::replications(1).validate().is_err());
        assert_eq!(BounderConfig::replications(16).sequence_count(), 16);
    }
}
