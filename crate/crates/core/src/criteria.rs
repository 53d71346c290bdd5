//! Error metrics, the bound-width stopping test and the minimax estimator.
//!
//! For an error metric `h` that is a metric map (Lipschitz constant at most 1)
//! the requirement `|s - ŝ| <= h(s)` for every `s` in `[s-, s+]` holds for some
//! `ŝ` exactly when `s+ - s- <= h(s-) + h(s+)`, and
//! `ŝ = (s- + s+ + h(s-) - h(s+)) / 2` minimizes `sup_s |s - ŝ| - h(s)`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Domain and grid size used to vet custom metrics when none is given.
pub const DEFAULT_METRIC_DOMAIN: (f64, f64) = (-1e3, 1e3);
pub const DEFAULT_METRIC_GRID: usize = 20_001;

type MetricFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum ErrorMetric {
    /// `max(eps_abs, |s| eps_rel)`: absolute or relative tolerance met.
    AbsOrRel { eps_abs: f64, eps_rel: f64 },
    /// `min(eps_abs, |s| eps_rel)`: absolute and relative tolerance met.
    AbsAndRel { eps_abs: f64, eps_rel: f64 },
    Custom(MetricFn),
}

impl fmt::Debug for ErrorMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::AbsOrRel { eps_abs, eps_rel } => f
                .debug_struct("AbsOrRel")
                .field("eps_abs", eps_abs)
                .field("eps_rel", eps_rel)
                .finish(),
            Self::AbsAndRel { eps_abs, eps_rel } => f
                .debug_struct("AbsAndRel")
                .field("eps_abs", eps_abs)
                .field("eps_rel", eps_rel)
                .finish(),
            Self::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

fn check_tolerances(eps_abs: f64, eps_rel: f64) -> Result<()> {
    if !(eps_abs >= 0.0 && eps_abs.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "absolute tolerance must be finite and >= 0, got {eps_abs}"
        )));
    }
    if !(0.0..1.0).contains(&eps_rel) {
        return Err(Error::InvalidArgument(format!(
            "relative tolerance must lie in [0, 1) for the metric to be a metric map, got {eps_rel}"
        )));
    }
    if eps_abs == 0.0 && eps_rel == 0.0 {
        return Err(Error::InvalidArgument(
            "absolute and relative tolerances cannot both be zero".into(),
        ));
    }
    Ok(())
}

impl ErrorMetric {
    pub fn abs_or_rel(eps_abs: f64, eps_rel: f64) -> Result<Self> {
        check_tolerances(eps_abs, eps_rel)?;
        Ok(Self::AbsOrRel { eps_abs, eps_rel })
    }

    pub fn abs_and_rel(eps_abs: f64, eps_rel: f64) -> Result<Self> {
        check_tolerances(eps_abs, eps_rel)?;
        Ok(Self::AbsAndRel { eps_abs, eps_rel })
    }

    /// Pure absolute tolerance.
    pub fn absolute(eps_abs: f64) -> Result<Self> {
        Self::abs_or_rel(eps_abs, 0.0)
    }

    /// A user metric, accepted only if it passes [`check_metric_map`] on `domain`.
    pub fn custom<F>(h: F, domain: (f64, f64), grid_size: usize) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let metric = Self::Custom(Arc::new(h));
        if !check_metric_map(&metric, domain, grid_size)? {
            return Err(Error::InvalidArgument(
                "custom error metric is not 1-Lipschitz on the checked domain".into(),
            ));
        }
        Ok(metric)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::AbsOrRel { eps_abs, eps_rel } | Self::AbsAndRel { eps_abs, eps_rel } => {
                check_tolerances(eps_abs, eps_rel)
            }
            Self::Custom(_) => {
                if check_metric_map(self, DEFAULT_METRIC_DOMAIN, DEFAULT_METRIC_GRID)? {
                    Ok(())
                } else {
                    Err(Error::InvalidArgument(
                        "custom error metric is not 1-Lipschitz".into(),
                    ))
                }
            }
        }
    }

    /// `h(s)`.
    pub fn h(&self, s: f64) -> f64 {
        match self {
            Self::AbsOrRel { eps_abs, eps_rel } => eps_abs.max(s.abs() * eps_rel),
            Self::AbsAndRel { eps_abs, eps_rel } => eps_abs.min(s.abs() * eps_rel),
            Self::Custom(h) => h(s),
        }
    }
}

/// `true` iff `|h(s1) - h(s2)| <= |s1 - s2| (1 + 1e-12)` on a uniform grid over `domain`.
///
/// Checking neighbouring grid points is enough: the Lipschitz bound between
/// any two grid points follows from the bounds along the chain between them.
pub fn check_metric_map(metric: &ErrorMetric, domain: (f64, f64), grid_size: usize) -> Result<bool> {
    let (a, b) = domain;
    if a.partial_cmp(&b) != Some(std::cmp::Ordering::Less) || grid_size < 2 {
        return Err(Error::InvalidArgument(format!(
            "metric check needs a < b and at least 2 grid points, got [{a}, {b}] with {grid_size}"
        )));
    }
    let step = (b - a) / (grid_size - 1) as f64;
    let mut prev: Option<(f64, f64)> = None;
    for i in 0..grid_size {
        let s = if i + 1 == grid_size { b } else { a + step * i as f64 };
        let h = metric.h(s);
        if !h.is_finite() || h < 0.0 {
            return Err(Error::MetricEvaluation(format!("h({s}) = {h}")));
        }
        if let Some((ps, ph)) = prev {
            if (h - ph).abs() > (s - ps).abs() * (1.0 + 1e-12) {
                return Ok(false);
            }
        }
        prev = Some((s, h));
    }
    Ok(true)
}

/// `s_hi - s_lo <= h(s_lo) + h(s_hi)`; unbounded intervals never pass.
pub fn stopping_met(s_lo: f64, s_hi: f64, metric: &ErrorMetric) -> bool {
    if !(s_lo.is_finite() && s_hi.is_finite()) {
        return false;
    }
    s_hi - s_lo <= metric.h(s_lo) + metric.h(s_hi)
}

/// `(s_lo + s_hi + h(s_lo) - h(s_hi)) / 2`.
pub fn optimal_estimate(s_lo: f64, s_hi: f64, metric: &ErrorMetric) -> Result<f64> {
    if !(s_lo.is_finite() && s_hi.is_finite()) {
        return Err(Error::NoEstimate { lo: s_lo, hi: s_hi });
    }
    Ok(0.5 * (s_lo + s_hi + metric.h(s_lo) - metric.h(s_hi)))
}
