//! Batch expected improvement of a Gaussian posterior.

use ndarray::{Array1, Array2};

use crate::driver::Integrand;
use crate::error::{Error, Result};
use crate::stats::normal_quantile;

/// Posterior parameters for `d_mu` candidate batches of `d` points each.
///
/// Batch `i` has `y ~ N(means[i], factors[i] * factors[i]^T)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QeiSpec {
    pub means: Vec<Array1<f64>>,
    pub factors: Vec<Array2<f64>>,
    pub y_star: f64,
}

impl QeiSpec {
    pub fn validate(&self) -> Result<usize> {
        if self.means.is_empty() || self.means.len() != self.factors.len() {
            return Err(Error::InvalidSpec(format!(
                "need one mean and one factor per batch, got {} and {}",
                self.means.len(),
                self.factors.len()
            )));
        }
        let d = self.means[0].len();
        if d == 0 {
            return Err(Error::InvalidSpec("batch size must be at least 1".into()));
        }
        for (m, a) in self.means.iter().zip(&self.factors) {
            if m.len() != d || a.shape() != [d, d] {
                return Err(Error::Shape {
                    expected: vec![d, d],
                    actual: a.shape().to_vec(),
                });
            }
            if !m.iter().chain(a.iter()).all(|v| v.is_finite()) {
                return Err(Error::InvalidSpec("posterior parameters must be finite".into()));
            }
        }
        if !self.y_star.is_finite() {
            return Err(Error::InvalidSpec("incumbent must be finite".into()));
        }
        Ok(d)
    }
}

/// Output `i` is `max_r (A_i z + m_i - y*)_r^+` with `z = Φ^{-1}(x)`.
#[derive(Debug, Clone)]
pub struct QeiIntegrand {
    spec: QeiSpec,
    dimension: usize,
}

pub fn make_qei_integrand(spec: QeiSpec) -> Result<QeiIntegrand> {
    let dimension = spec.validate()?;
    Ok(QeiIntegrand { spec, dimension })
}

impl QeiIntegrand {
    pub fn spec(&self) -> &QeiSpec {
        &self.spec
    }

    fn improvement(&self, i: usize, z: &[f64]) -> f64 {
        let (m, a) = (&self.spec.means[i], &self.spec.factors[i]);
        let mut best = 0.0f64;
        for (r, row) in a.outer_iter().enumerate() {
            let y = m[r] + row.iter().zip(z).map(|(a, z)| a * z).sum::<f64>();
            best = best.max(y - self.spec.y_star);
        }
        best
    }
}

impl Integrand for QeiIntegrand {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn output_shape(&self) -> Vec<usize> {
        vec![self.spec.means.len()]
    }

    fn evaluate(&self, point: &[f64], skip: &[bool], out: &mut [f64]) -> Result<u64> {
        if skip.iter().all(|&s| s) {
            return Ok(0);
        }
        let z = point.iter().map(|&x| normal_quantile(x)).collect::<Result<Vec<_>>>()?;
        let mut cost = 0;
        for (i, (o, &s)) in out.iter_mut().zip(skip).enumerate() {
            if !s {
                *o = self.improvement(i, &z);
                cost += 1;
            }
        }
        Ok(cost)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{arr1, arr2};

    fn one_batch(m: Array1<f64>, a: Array2<f64>, y_star: f64) -> QeiIntegrand {
        make_qei_integrand(QeiSpec {
            means: vec![m],
            factors: vec![a],
            y_star,
        })
        .unwrap()
    }

    fn eval(f: &QeiIntegrand, x: &[f64]) -> f64 {
        let mut out = [0.0];
        f.evaluate(x, &[false], &mut out).unwrap();
        out[0]
    }

    #[test]
    fn zero_factor_below_incumbent() {
        let f = one_batch(arr1(&[0.2, -1.0]), Array2::zeros((2, 2)), 0.5);
        for x in [[0.1, 0.9], [0.5, 0.5], [0.99, 0.01]] {
            assert_eq!(eval(&f, &x), 0.0);
        }
    }

    #[test]
    fn zero_factor_above_incumbent() {
        let f = one_batch(arr1(&[0.0, 1.5]), Array2::zeros((2, 2)), 0.5);
        for x in [[0.1, 0.9], [0.5, 0.5], [0.99, 0.01]] {
            assert_eq!(eval(&f, &x), 1.0);
        }
    }

    #[test]
    fn half_normal_mean_by_quadrature() {
        let f = one_batch(arr1(&[0.0]), arr2(&[[1.0]]), 0.0);
        let n = 200_000;
        let mean = (0..n).map(|i| eval(&f, &[(i as f64 + 0.5) / n as f64])).sum::<f64>() / n as f64;
        assert!((mean - 1.0 / (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-5);
    }

    #[test]
    fn nonnegative_and_monotone_in_incumbent() {
        let a = arr2(&[[1.0, 0.0], [0.3, 0.7]]);
        let m = arr1(&[0.1, -0.2]);
        let lo = one_batch(m.clone(), a.clone(), -0.5);
        let hi = one_batch(m, a, 0.5);
        for i in 1..50 {
            let x = [i as f64 / 50.0, 1.0 - i as f64 / 51.0];
            let (vl, vh) = (eval(&lo, &x), eval(&hi, &x));
            assert!(vh >= 0.0 && vl >= vh);
        }
    }

    #[test]
    fn skipped_outputs_cost_nothing() {
        let f = make_qei_integrand(QeiSpec {
            means: vec![arr1(&[0.0]), arr1(&[1.0])],
            factors: vec![arr2(&[[1.0]]), arr2(&[[2.0]])],
            y_star: 0.0,
        })
        .unwrap();
        let mut out = [f64::NAN; 2];
        assert_eq!(f.evaluate(&[0.7], &[true, false], &mut out).unwrap(), 1);
        assert!(out[0].is_nan() && out[1] > 0.0);
        assert_eq!(f.evaluate(&[0.7], &[true, true], &mut out).unwrap(), 0);
    }

    #[test]
    fn rejects_mismatched_factor() {
        let spec = QeiSpec {
            means: vec![arr1(&[0.0, 0.0])],
            factors: vec![arr2(&[[1.0]])],
            y_star: 0.0,
        };
        assert!(make_qei_integrand(spec).is_err());
    }
}
