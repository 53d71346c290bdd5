//! Masked, parallel integrand evaluation with a worker-count independent
//! reduction order.

use std::sync::Arc;

use ndarray::Array2;
use rayon::prelude::*;

use crate::array::{num_elements, unravel};
use crate::bounders::CltState;
use crate::error::{Error, Result};
use crate::sequences::{PointBlock, PointGenerator};

/// Points per work item. Partial sums are formed per chunk and combined in
/// chunk order, so results do not depend on how chunks are scheduled.
pub const CHUNK_POINTS: usize = 256;

/// An array-valued integrand over `(0,1)^d`.
pub trait Integrand: Send + Sync {
    /// Sampling dimension `d`.
    fn dimension(&self) -> usize;

    /// Shape of the mean array.
    fn output_shape(&self) -> Vec<usize>;

    /// Writes the outputs whose `skip` flag is false into `out` (flat,
    /// row-major). Entries with `skip` set must not be computed; their slots
    /// are ignored. Returns the cost of the call in integrand-defined units
    /// (for example, objective function calls).
    fn evaluate(&self, point: &[f64], skip: &[bool], out: &mut [f64]) -> Result<u64>;
}

impl<T: Integrand + ?Sized> Integrand for Arc<T> {
    fn dimension(&self) -> usize {
        (**self).dimension()
    }
    fn output_shape(&self) -> Vec<usize> {
        (**self).output_shape()
    }
    fn evaluate(&self, point: &[f64], skip: &[bool], out: &mut [f64]) -> Result<u64> {
        (**self).evaluate(point, skip, out)
    }
}

/// Wraps a closure returning every output at once. The closure is not called
/// at all when every output is skipped; each call costs one unit.
pub struct FnIntegrand<F> {
    dimension: usize,
    shape: Vec<usize>,
    f: F,
}

impl<F> FnIntegrand<F>
where
    F: Fn(&[f64]) -> Vec<f64> + Send + Sync,
{
    pub fn new(dimension: usize, shape: &[usize], f: F) -> Self {
        Self {
            dimension,
            shape: shape.to_vec(),
            f,
        }
    }
}

impl<F> Integrand for FnIntegrand<F>
where
    F: Fn(&[f64]) -> Vec<f64> + Send + Sync,
{
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn output_shape(&self) -> Vec<usize> {
        self.shape.clone()
    }

    fn evaluate(&self, point: &[f64], skip: &[bool], out: &mut [f64]) -> Result<u64> {
        if skip.iter().all(|&s| s) {
            return Ok(0);
        }
        let values = (self.f)(point);
        if values.len() != out.len() {
            return Err(Error::Shape {
                expected: self.shape.clone(),
                actual: vec![values.len()],
            });
        }
        for ((o, v), &s) in out.iter_mut().zip(values).zip(skip) {
            if !s {
                *o = v;
            }
        }
        Ok(1)
    }
}

/// Raw masked evaluations of a point block.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskedEvaluations {
    /// `points x means`; skipped entries hold NaN.
    pub values: Array2<f64>,
    /// Sum of integrand-reported costs.
    pub cost: u64,
    /// Number of (point, output) pairs computed.
    pub output_evaluations: u64,
}

fn check_output(
    shape: &[usize],
    skip: &[bool],
    out: &[f64],
    point_index: u64,
) -> Result<()> {
    for (k, (&v, &s)) in out.iter().zip(skip).enumerate() {
        if !s && !v.is_finite() {
            return Err(Error::IntegrandEvaluation {
                mean_index: unravel(shape, k),
                point_index,
                value: v,
            });
        }
    }
    Ok(())
}

fn check_mask(f: &dyn Integrand, skip: &[bool]) -> Result<Vec<usize>> {
    let shape = f.output_shape();
    if skip.len() != num_elements(&shape) {
        return Err(Error::Shape {
            expected: shape,
            actual: vec![skip.len()],
        });
    }
    Ok(shape)
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    if workers == 0 {
        return Err(Error::InvalidArgument("workers must be at least 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot start worker pool: {e}")))
}

/// Evaluates `f` at every row of `points`, computing only outputs whose
/// `skip` flag (the mean stopping flag) is false.
pub fn evaluate_masked(
    f: &dyn Integrand,
    points: &PointBlock,
    skip: &[bool],
    workers: usize,
) -> Result<MaskedEvaluations> {
    let shape = check_mask(f, skip)?;
    let n_out = skip.len();
    let rows = points.len();
    let dim = points.values.ncols();
    if dim != f.dimension() {
        return Err(Error::Shape {
            expected: vec![f.dimension()],
            actual: vec![dim],
        });
    }
    let pts = points
        .values
        .as_slice()
        .expect("point blocks are contiguous");
    let active = skip.iter().filter(|&&s| !s).count() as u64;

    let chunks: Vec<Result<(Vec<f64>, u64)>> = pool(workers)?.install(|| {
        pts.par_chunks(CHUNK_POINTS * dim)
            .enumerate()
            .map(|(c, chunk)| {
                let mut vals = vec![f64::NAN; (chunk.len() / dim) * n_out];
                let mut cost = 0;
                for (i, (p, out)) in chunk.chunks_exact(dim).zip(vals.chunks_exact_mut(n_out)).enumerate() {
                    cost += f.evaluate(p, skip, out)?;
                    let index = points.n_start + (c * CHUNK_POINTS + i) as u64;
                    check_output(&shape, skip, out, index)?;
                    for (o, &s) in out.iter_mut().zip(skip) {
                        if s {
                            *o = f64::NAN;
                        }
                    }
                }
                Ok((vals, cost))
            })
            .collect()
    });
    let mut values = Vec::with_capacity(rows * n_out);
    let mut cost = 0;
    for chunk in chunks {
        let (vals, c) = chunk?;
        values.extend(vals);
        cost += c;
    }
    Ok(MaskedEvaluations {
        values: Array2::from_shape_vec((rows, n_out), values).expect("row count preserved"),
        cost,
        output_evaluations: active * rows as u64,
    })
}

/// Reduced statistics of one block of points for every mean index.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockStats {
    pub per_mean: Vec<CltState>,
    pub cost: u64,
}

/// Generates points `first..first+count` (0-based) and reduces masked
/// evaluations into per-mean running sums without materializing the block.
pub(crate) fn accumulate_block(
    f: &dyn Integrand,
    generator: &PointGenerator,
    first: u64,
    count: u64,
    skip: &[bool],
    pool: &rayon::ThreadPool,
) -> Result<BlockStats> {
    let shape = check_mask(f, skip)?;
    let n_out = skip.len();
    let dim = generator.dimension();
    let n_chunks = count.div_ceil(CHUNK_POINTS as u64);

    let partials: Vec<Result<BlockStats>> = pool.install(|| {
        (0..n_chunks)
            .into_par_iter()
            .map(|c| {
                let start = first + c * CHUNK_POINTS as u64;
                let len = (count - c * CHUNK_POINTS as u64).min(CHUNK_POINTS as u64) as usize;
                let mut pts = vec![0.0; len * dim];
                generator.fill_block(start, &mut pts);
                let mut vals = vec![0.0; len * n_out];
                let mut cost = 0;
                for (i, (p, out)) in pts.chunks_exact(dim).zip(vals.chunks_exact_mut(n_out)).enumerate() {
                    cost += f.evaluate(p, skip, out)?;
                    check_output(&shape, skip, out, start + i as u64 + 1)?;
                }
                let mut per_mean = vec![CltState::new(); n_out];
                let mut column = Vec::with_capacity(len);
                for (k, state) in per_mean.iter_mut().enumerate() {
                    if skip[k] {
                        continue;
                    }
                    column.clear();
                    column.extend(vals.iter().skip(k).step_by(n_out));
                    state.update(&column)?;
                }
                Ok(BlockStats { per_mean, cost })
            })
            .collect()
    });

    let mut total = BlockStats {
        per_mean: vec![CltState::new(); n_out],
        cost: 0,
    };
    for partial in partials {
        let partial = partial?;
        for (acc, s) in total.per_mean.iter_mut().zip(&partial.per_mean) {
            acc.merge(s);
        }
        total.cost += partial.cost;
    }
    Ok(total)
}

pub(crate) fn worker_pool(workers: usize) -> Result<rayon::ThreadPool> {
    pool(workers)
}
