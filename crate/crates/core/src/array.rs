//! Array containers shared by every stage of the algorithm.
//!
//! Means, QOI values and stopping flags are dense row-major arrays with an
//! explicit shape; [`ndarray::ArrayD`] supplies the storage.

use ndarray::{ArrayD, IxDyn};

use crate::error::{Error, Result};
use crate::intervals::Interval;

/// Dense array of reals with an explicit shape vector.
pub type MultiArray = ArrayD<f64>;

/// Dense array of stopping flags.
pub type FlagArray = ArrayD<bool>;

/// Number of entries in an array of the given shape.
pub fn num_elements(shape: &[usize]) -> usize {
    shape.iter().product()
}

/// Converts a flat row-major offset into a multi-index.
pub fn unravel(shape: &[usize], mut flat: usize) -> Vec<usize> {
    let mut index = vec![0; shape.len()];
    for (slot, &extent) in index.iter_mut().zip(shape).rev() {
        *slot = flat % extent;
        flat /= extent;
    }
    index
}

pub fn flags(shape: &[usize], value: bool) -> FlagArray {
    FlagArray::from_elem(IxDyn(shape), value)
}

/// Lower and upper bounds sharing one shape, `lo <= hi` elementwise.
///
/// Endpoints may be infinite; NaN is rejected.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundsArray {
    lo: MultiArray,
    hi: MultiArray,
}

impl BoundsArray {
    pub fn new(lo: MultiArray, hi: MultiArray) -> Result<Self> {
        if lo.shape() != hi.shape() {
            return Err(Error::Shape {
                expected: lo.shape().to_vec(),
                actual: hi.shape().to_vec(),
            });
        }
        if let Some(flat) = first_invalid(&lo, &hi) {
            let (l, h) = (lo.as_slice_memory_order(), hi.as_slice_memory_order());
            let (l, h) = match (l, h) {
                (Some(l), Some(h)) => (l[flat], h[flat]),
                _ => (f64::NAN, f64::NAN),
            };
            return Err(Error::InvalidInterval { lo: l, hi: h });
        }
        Ok(Self {
            lo: lo.as_standard_layout().into_owned(),
            hi: hi.as_standard_layout().into_owned(),
        })
    }

    /// Every entry is `(-inf, +inf)`.
    pub fn unbounded(shape: &[usize]) -> Self {
        Self {
            lo: MultiArray::from_elem(IxDyn(shape), f64::NEG_INFINITY),
            hi: MultiArray::from_elem(IxDyn(shape), f64::INFINITY),
        }
    }

    /// Zero-width bounds at `values`.
    pub fn point(values: MultiArray) -> Result<Self> {
        Self::new(values.clone(), values)
    }

    pub fn from_intervals(shape: &[usize], intervals: &[Interval]) -> Result<Self> {
        if intervals.len() != num_elements(shape) {
            return Err(Error::Shape {
                expected: shape.to_vec(),
                actual: vec![intervals.len()],
            });
        }
        let lo = intervals.iter().map(|iv| iv.lo).collect::<Vec<_>>();
        let hi = intervals.iter().map(|iv| iv.hi).collect::<Vec<_>>();
        let lo = MultiArray::from_shape_vec(IxDyn(shape), lo).expect("shape checked");
        let hi = MultiArray::from_shape_vec(IxDyn(shape), hi).expect("shape checked");
        Self::new(lo, hi)
    }

    pub fn lo(&self) -> &MultiArray {
        &self.lo
    }

    pub fn hi(&self) -> &MultiArray {
        &self.hi
    }

    pub fn shape(&self) -> &[usize] {
        self.lo.shape()
    }

    pub fn len(&self) -> usize {
        self.lo.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lo.is_empty()
    }

    /// Interval at a flat row-major offset.
    pub fn get(&self, flat: usize) -> Interval {
        Interval {
            lo: self.lo_slice()[flat],
            hi: self.hi_slice()[flat],
        }
    }

    pub(crate) fn set(&mut self, flat: usize, iv: Interval) {
        self.lo.as_slice_mut().expect("standard layout")[flat] = iv.lo;
        self.hi.as_slice_mut().expect("standard layout")[flat] = iv.hi;
    }

    pub fn iter(&self) -> impl Iterator<Item = Interval> + '_ {
        self.lo_slice()
            .iter()
            .zip(self.hi_slice())
            .map(|(&lo, &hi)| Interval { lo, hi })
    }

    pub fn widths(&self) -> MultiArray {
        &self.hi - &self.lo
    }

    pub fn lo_slice(&self) -> &[f64] {
        self.lo.as_slice().expect("standard layout")
    }

    pub fn hi_slice(&self) -> &[f64] {
        self.hi.as_slice().expect("standard layout")
    }
}

fn first_invalid(lo: &MultiArray, hi: &MultiArray) -> Option<usize> {
    lo.iter()
        .zip(hi.iter())
        .position(|(l, h)| l.is_nan() || h.is_nan() || l > h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::arr1;

    #[test]
    fn unravel_row_major() {
        assert_eq!(unravel(&[2, 3, 4], 0), vec![0, 0, 0]);
        assert_eq!(unravel(&[2, 3, 4], 5), vec![0, 1, 1]);
        assert_eq!(unravel(&[2, 3, 4], 23), vec![1, 2, 3]);
    }

    #[test]
    fn bounds_reject_inverted_and_nan() {
        let lo = arr1(&[0.0, 2.0]).into_dyn();
        let hi = arr1(&[1.0, 1.0]).into_dyn();
        assert!(matches!(
            BoundsArray::new(lo, hi),
            Err(Error::InvalidInterval { lo: 2.0, hi: 1.0 })
        ));
        let lo = arr1(&[f64::NAN]).into_dyn();
        let hi = arr1(&[1.0]).into_dyn();
        assert!(BoundsArray::new(lo, hi).is_err());
    }

    #[test]
    fn bounds_allow_infinite_endpoints() {
        let b = BoundsArray::unbounded(&[2, 2]);
        assert_eq!(b.len(), 4);
        assert!(b.iter().all(|iv| iv.lo == f64::NEG_INFINITY && iv.hi == f64::INFINITY));
    }
}
