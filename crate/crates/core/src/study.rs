//! Fixed-sample-size error decay of the sequence kinds on a test integrand
//! with known mean.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::sequences::{mix64, Randomization, SequenceKind, SequenceSpec};

pub type TestIntegrand = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct StudyConfig {
    pub integrand: TestIntegrand,
    pub exact: f64,
    pub dimension: usize,
    pub kinds: Vec<(SequenceKind, Randomization)>,
    /// Sample sizes `2^m` for `m` in this inclusive range.
    pub m_min: u32,
    pub m_max: u32,
    pub seeds: usize,
    pub seed: u64,
}

impl std::fmt::Debug for StudyConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("StudyConfig")
            .field("exact", &self.exact)
            .field("dimension", &self.dimension)
            .field("kinds", &self.kinds)
            .field("m_min", &self.m_min)
            .field("m_max", &self.m_max)
            .field("seeds", &self.seeds)
            .field("seed", &self.seed)
            .finish_non_exhaustive()
    }
}

impl StudyConfig {
    /// [`smooth_product`] in `dimension` inputs, all three sequence kinds,
    /// `n = 2^8..2^14`, 128 seeds.
    pub fn smooth_product(dimension: usize, seed: u64) -> Self {
        Self {
            integrand: Arc::new(smooth_product),
            exact: 1.0,
            dimension,
            kinds: vec![
                (SequenceKind::Iid, Randomization::None),
                (SequenceKind::Lattice, Randomization::Shift),
                (SequenceKind::DigitalNet, Randomization::Scramble),
            ],
            m_min: 8,
            m_max: 14,
            seeds: 128,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds < 1 || self.m_min > self.m_max || self.m_max > 24 || self.kinds.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "invalid study: m in {}..={}, {} seeds, {} kinds",
                self.m_min,
                self.m_max,
                self.seeds,
                self.kinds.len()
            )));
        }
        Ok(())
    }
}

/// `∏_j (1 + (e^{x_j} - e + 1) / j)` (1-based `j`): smooth, not periodic,
/// exact mean 1.
pub fn smooth_product(x: &[f64]) -> f64 {
    x.iter()
        .enumerate()
        .map(|(j, &v)| 1.0 + (v.exp() - std::f64::consts::E + 1.0) / (j as f64 + 1.0))
        .product()
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyRow {
    pub kind: SequenceKind,
    pub randomization: Randomization,
    pub n: u64,
    pub median_abs_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudySlope {
    pub kind: SequenceKind,
    pub randomization: Randomization,
    /// Least-squares slope of `log2(error)` on `log2(n)`; `None` when some
    /// median error is zero.
    pub slope: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyTable {
    pub rows: Vec<StudyRow>,
    pub slopes: Vec<StudySlope>,
}

pub fn convergence_study(config: &StudyConfig) -> Result<StudyTable> {
    config.validate()?;
    let n_max = 1usize << config.m_max;
    let d = config.dimension;
    let mut rows = Vec::new();
    let mut slopes = Vec::new();
    for (k, &(kind, randomization)) in config.kinds.iter().enumerate() {
        // errors[m][seed]
        let levels = (config.m_max - config.m_min + 1) as usize;
        let mut errors = vec![Vec::with_capacity(config.seeds); levels];
        for s in 0..config.seeds {
            let seed = mix64(config.seed ^ mix64((k as u64) << 32 | s as u64));
            let generator = SequenceSpec::new(kind, d, seed)
                .with_randomization(randomization)
                .generator()?;
            let mut points = vec![0.0; n_max * d];
            generator.fill_block(0, &mut points);
            let mut sum = 0.0;
            let mut next = config.m_min;
            for (i, p) in points.chunks_exact(d).enumerate() {
                sum += (config.integrand)(p);
                if i + 1 == 1 << next {
                    errors[(next - config.m_min) as usize].push((sum / (i + 1) as f64 - config.exact).abs());
                    next += 1;
                }
            }
        }
        let mut xs = Vec::with_capacity(levels);
        let mut ys = Vec::with_capacity(levels);
        for (level, errs) in errors.iter_mut().enumerate() {
            let m = config.m_min + level as u32;
            let med = median(errs);
            rows.push(StudyRow {
                kind,
                randomization,
                n: 1 << m,
                median_abs_error: med,
            });
            xs.push(m as f64);
            ys.push(med.log2());
        }
        let slope = if ys.iter().all(|y| y.is_finite()) && xs.len() >= 2 {
            Some(least_squares_slope(&xs, &ys))
        } else {
            None
        };
        slopes.push(StudySlope {
            kind,
            randomization,
            slope,
        });
    }
    Ok(StudyTable { rows, slopes })
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}
