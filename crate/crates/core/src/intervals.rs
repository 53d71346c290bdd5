//! Closed-interval arithmetic for propagating mean bounds to QOI bounds.
//!
//! The elementary operations follow the usual corner rules. Two conventions
//! apply throughout: `±inf * 0 = 0` inside corner products, and any divisor
//! interval containing zero (interior or endpoint) yields `(-inf, +inf)`.

use crate::array::{unravel, BoundsArray, MultiArray};
use crate::error::{Error, Result};

/// A closed interval `[lo, hi]` with possibly infinite endpoints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const ENTIRE: Interval = Interval {
        lo: f64::NEG_INFINITY,
        hi: f64::INFINITY,
    };

    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        let iv = Interval { lo, hi };
        iv.validate()?;
        Ok(iv)
    }

    pub fn point(x: f64) -> Self {
        Interval { lo: x, hi: x }
    }

    pub fn validate(&self) -> Result<()> {
        if self.lo.is_nan() || self.hi.is_nan() || self.lo > self.hi {
            Err(Error::InvalidInterval {
                lo: self.lo,
                hi: self.hi,
            })
        } else {
            Ok(())
        }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn is_finite(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }
}

fn checked(a: Interval, b: Interval) -> Result<()> {
    a.validate()?;
    b.validate()
}

/// `±inf * 0 = 0`; otherwise the IEEE product.
fn corner_mul(x: f64, y: f64) -> f64 {
    if x == 0.0 || y == 0.0 {
        0.0
    } else {
        x * y
    }
}

fn min_max(values: impl IntoIterator<Item = f64>) -> Interval {
    let (lo, hi) = values
        .into_iter()
        .filter(|v| !v.is_nan())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(v), hi.max(v))
        });
    if lo > hi {
        Interval::ENTIRE
    } else {
        Interval { lo, hi }
    }
}

/// `inf - inf` endpoints (only possible with degenerate infinite operands)
/// widen to the corresponding infinity.
fn widened(lo: f64, hi: f64) -> Interval {
    Interval {
        lo: if lo.is_nan() { f64::NEG_INFINITY } else { lo },
        hi: if hi.is_nan() { f64::INFINITY } else { hi },
    }
}

pub fn iv_add(a: Interval, b: Interval) -> Result<Interval> {
    checked(a, b)?;
    Ok(widened(a.lo + b.lo, a.hi + b.hi))
}

pub fn iv_sub(a: Interval, b: Interval) -> Result<Interval> {
    checked(a, b)?;
    Ok(widened(a.lo - b.hi, a.hi - b.lo))
}

pub fn iv_min(a: Interval, b: Interval) -> Result<Interval> {
    checked(a, b)?;
    Ok(Interval {
        lo: a.lo.min(b.lo),
        hi: a.hi.min(b.hi),
    })
}

pub fn iv_max(a: Interval, b: Interval) -> Result<Interval> {
    checked(a, b)?;
    Ok(Interval {
        lo: a.lo.max(b.lo),
        hi: a.hi.max(b.hi),
    })
}

pub fn iv_mul(a: Interval, b: Interval) -> Result<Interval> {
    checked(a, b)?;
    Ok(min_max([
        corner_mul(a.lo, b.lo),
        corner_mul(a.lo, b.hi),
        corner_mul(a.hi, b.lo),
        corner_mul(a.hi, b.hi),
    ]))
}

pub fn iv_div(a: Interval, b: Interval) -> Result<Interval> {
    checked(a, b)?;
    if b.contains(0.0) {
        return Ok(Interval::ENTIRE);
    }
    // inf/inf corners are indeterminate and dropped; the remaining corners
    // already reach the extreme values.
    Ok(min_max([a.lo / b.lo, a.lo / b.hi, a.hi / b.lo, a.hi / b.hi]))
}

/// Tight enclosure of `{x^2 : x in a}`.
pub fn iv_sqr(a: Interval) -> Result<Interval> {
    a.validate()?;
    let (l2, h2) = (a.lo * a.lo, a.hi * a.hi);
    if a.contains(0.0) {
        Ok(Interval {
            lo: 0.0,
            hi: l2.max(h2),
        })
    } else {
        Ok(Interval {
            lo: l2.min(h2),
            hi: l2.max(h2),
        })
    }
}

/// Clamps both endpoints into `[lo, hi]`.
pub fn iv_clip(a: Interval, lo: f64, hi: f64) -> Result<Interval> {
    a.validate()?;
    if lo.is_nan() || hi.is_nan() || lo > hi {
        return Err(Error::InvalidArgument(format!(
            "clip range [{lo}, {hi}] is empty"
        )));
    }
    Ok(Interval {
        lo: a.lo.clamp(lo, hi),
        hi: a.hi.clamp(lo, hi),
    })
}

/// Applies user bound functions `C-`/`C+` to mean bounds and validates the result.
///
/// Both callables receive `(mu_lo, mu_hi)` and must return arrays of shape
/// `qoi_shape`; every output entry must be a valid interval.
pub fn apply_bound_pair<Lo, Hi>(
    c_minus: Lo,
    c_plus: Hi,
    mu_bounds: &BoundsArray,
    qoi_shape: &[usize],
) -> Result<BoundsArray>
where
    Lo: Fn(&MultiArray, &MultiArray) -> MultiArray,
    Hi: Fn(&MultiArray, &MultiArray) -> MultiArray,
{
    let s_lo = c_minus(mu_bounds.lo(), mu_bounds.hi());
    let s_hi = c_plus(mu_bounds.lo(), mu_bounds.hi());
    for out in [&s_lo, &s_hi] {
        if out.shape() != qoi_shape {
            return Err(Error::Propagation {
                qoi_index: vec![],
                message: format!(
                    "bound function returned shape {:?}, expected {:?}",
                    out.shape(),
                    qoi_shape
                ),
            });
        }
    }
    let s_lo = s_lo.as_standard_layout().into_owned();
    let s_hi = s_hi.as_standard_layout().into_owned();
    for (flat, (l, h)) in s_lo.iter().zip(s_hi.iter()).enumerate() {
        if l.is_nan() || h.is_nan() || l > h {
            return Err(Error::Propagation {
                qoi_index: unravel(qoi_shape, flat),
                message: format!("invalid QOI bounds [{l}, {h}]"),
            });
        }
    }
    BoundsArray::new(s_lo, s_hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::arr1;

    fn iv(lo: f64, hi: f64) -> Interval {
        Interval::new(lo, hi).unwrap()
    }

    const INF: f64 = f64::INFINITY;

    #[test]
    fn table_rows() {
        assert_eq!(iv_add(iv(1., 2.), iv(3., 4.)).unwrap(), iv(4., 6.));
        assert_eq!(iv_sub(iv(0., 1.), iv(0., 1.)).unwrap(), iv(-1., 1.));
        assert_eq!(iv_min(iv(1., 3.), iv(2., 2.)).unwrap(), iv(1., 2.));
        assert_eq!(iv_max(iv(1., 3.), iv(2., 2.)).unwrap(), iv(2., 3.));
    }

    #[test]
    fn products_by_corner_enumeration() {
        assert_eq!(iv_mul(iv(1., 2.), iv(-1., 3.)).unwrap(), iv(-2., 6.));
        assert_eq!(iv_mul(iv(-1., 1.), iv(-1., 1.)).unwrap(), iv(-1., 1.));
        assert_eq!(iv_mul(iv(0., 0.), iv(-INF, INF)).unwrap(), iv(0., 0.));
    }

    #[test]
    fn quotients() {
        assert_eq!(iv_div(iv(1., 2.), iv(-1., 1.)).unwrap(), Interval::ENTIRE);
        assert_eq!(iv_div(iv(1., 2.), iv(0., 1.)).unwrap(), Interval::ENTIRE);
        assert_eq!(iv_div(iv(1., 2.), iv(2., 4.)).unwrap(), iv(0.25, 1.));
        assert_eq!(iv_div(iv(0., 0.), iv(1., 2.)).unwrap(), iv(0., 0.));
        assert_eq!(iv_div(iv(1., INF), iv(2., INF)).unwrap(), iv(0., INF));
        assert_eq!(iv_div(iv(3., 3.), iv(0., 0.)).unwrap(), Interval::ENTIRE);
    }

    #[test]
    fn clipping() {
        assert_eq!(iv_clip(iv(-0.2, 1.4), 0., 1.).unwrap(), iv(0., 1.));
        assert_eq!(iv_clip(iv(0.3, 0.6), 0., 1.).unwrap(), iv(0.3, 0.6));
        assert_eq!(iv_clip(Interval::ENTIRE, 0., 1.).unwrap(), iv(0., 1.));
        assert!(matches!(
            iv_clip(iv(0., 1.), 1., 0.),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn squares() {
        assert_eq!(iv_sqr(iv(-1., 2.)).unwrap(), iv(0., 4.));
        assert_eq!(iv_sqr(iv(-3., -2.)).unwrap(), iv(4., 9.));
        assert_eq!(iv_sqr(iv(2., 3.)).unwrap(), iv(4., 9.));
    }

    #[test]
    fn opposite_infinities_widen() {
        let up = iv(f64::INFINITY, f64::INFINITY);
        let down = iv(f64::NEG_INFINITY, 1.0);
        assert_eq!(iv_add(up, down).unwrap(), Interval { lo: f64::NEG_INFINITY, hi: f64::INFINITY });
        assert_eq!(iv_sub(up, up).unwrap(), Interval::ENTIRE);
    }

    #[test]
    fn nan_endpoints_rejected() {
        let bad = Interval {
            lo: f64::NAN,
            hi: 1.0,
        };
        assert!(iv_add(bad, iv(0., 1.)).is_err());
        assert!(iv_mul(iv(0., 1.), bad).is_err());
        assert!(Interval::new(2.0, 1.0).is_err());
    }

    #[test]
    fn point_intervals_match_real_ops() {
        let (a, b) = (1.5, -0.25);
        let (pa, pb) = (Interval::point(a), Interval::point(b));
        assert_eq!(iv_add(pa, pb).unwrap(), Interval::point(a + b));
        assert_eq!(iv_sub(pa, pb).unwrap(), Interval::point(a - b));
        assert_eq!(iv_mul(pa, pb).unwrap(), Interval::point(a * b));
        assert_eq!(iv_div(pa, pb).unwrap(), Interval::point(a / b));
        assert_eq!(iv_div(pa, Interval::point(0.0)).unwrap(), Interval::ENTIRE);
    }

    #[test]
    fn bound_pair_identity_and_ratio() {
        let mu = BoundsArray::new(arr1(&[1.0, 2.0]).into_dyn(), arr1(&[2.0, 4.0]).into_dyn())
            .unwrap();
        let same = apply_bound_pair(|lo, _| lo.clone(), |_, hi| hi.clone(), &mu, &[2]).unwrap();
        assert_eq!(same, mu);

        let ratio = |lo: &MultiArray, hi: &MultiArray, upper: bool| {
            let q = iv_div(iv(lo[[0]], hi[[0]]), iv(lo[[1]], hi[[1]])).unwrap();
            arr1(&[if upper { q.hi } else { q.lo }]).into_dyn()
        };
        let s = apply_bound_pair(
            |lo, hi| ratio(lo, hi, false),
            |lo, hi| ratio(lo, hi, true),
            &mu,
            &[1],
        )
        .unwrap();
        assert_eq!(s.get(0), iv(0.25, 1.0));
    }

    #[test]
    fn bound_pair_reports_offending_index() {
        let mu = BoundsArray::point(arr1(&[0.0, 0.0, 0.0]).into_dyn()).unwrap();
        let err = apply_bound_pair(
            |lo, _| {
                let mut out = lo.clone();
                out[[2]] = 1.0;
                out
            },
            |_, hi| hi.clone(),
            &mu,
            &[3],
        )
        .unwrap_err();
        assert!(matches!(err, Error::Propagation { qoi_index, .. } if qoi_index == vec![2]));

        let err = apply_bound_pair(|lo, _| lo.clone(), |_, hi| hi.clone(), &mu, &[2]).unwrap_err();
        assert!(matches!(err, Error::Propagation { .. }));
    }
}
