//! The adaptive loop: sample in doubling blocks, bound every unstopped mean,
//! propagate to QOI bounds, and stop QOI (and the means they own) one by one.

mod dependency;
mod evaluate;

use std::sync::Arc;
use std::time::{Duration, Instant};

use ndarray::{ArrayD, IxDyn};

use crate::array::{num_elements, unravel, BoundsArray, FlagArray, MultiArray};
use crate::bounders::{BounderConfig, BounderKind, MeanState};
use crate::criteria::{optimal_estimate, stopping_met, ErrorMetric};
use crate::error::{Error, Result};
use crate::intervals::apply_bound_pair;
use crate::sequences::{replicate, PointGenerator, SequenceKind, SequenceSpec};

pub use dependency::{allocate_alpha, validate_dependency, DependencyMatrix};
pub use evaluate::{evaluate_masked, BlockStats, FnIntegrand, Integrand, MaskedEvaluations, CHUNK_POINTS};

/// `C-` or `C+`: maps `(mu_lo, mu_hi)` to one side of the QOI bounds.
pub type BoundFn = Arc<dyn Fn(&MultiArray, &MultiArray) -> MultiArray + Send + Sync>;
/// Maps QOI stopping flags to mean stopping flags.
pub type DependencyFn = Arc<dyn Fn(&FlagArray) -> FlagArray + Send + Sync>;

/// Everything the driver needs to know about one problem.
#[derive(Clone)]
pub struct ProblemSpec {
    integrand: Arc<dyn Integrand>,
    mean_shape: Vec<usize>,
    qoi_shape: Vec<usize>,
    bound_lo: BoundFn,
    bound_hi: BoundFn,
    dependency: DependencyFn,
    qoi_alpha: Vec<f64>,
    metrics: Vec<ErrorMetric>,
    dependencies: DependencyMatrix,
    mean_alpha: Vec<f64>,
}

impl std::fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("dimension", &self.integrand.dimension())
            .field("mean_shape", &self.mean_shape)
            .field("qoi_shape", &self.qoi_shape)
            .field("qoi_alpha", &self.qoi_alpha)
            .field("metrics", &self.metrics)
            .finish_non_exhaustive()
    }
}

impl ProblemSpec {
    /// Validates shapes, uncertainty levels, metrics and the dependency
    /// structure, and derives the per-mean uncertainty levels.
    ///
    /// `qoi_alpha` and `metrics` are flat in row-major QOI order.
    pub fn new(
        integrand: Arc<dyn Integrand>,
        qoi_shape: &[usize],
        bound_lo: BoundFn,
        bound_hi: BoundFn,
        dependency: DependencyFn,
        qoi_alpha: Vec<f64>,
        metrics: Vec<ErrorMetric>,
    ) -> Result<Self> {
        let mean_shape = integrand.output_shape();
        let n_qoi = num_elements(qoi_shape);
        if qoi_alpha.len() != n_qoi {
            return Err(Error::Shape {
                expected: qoi_shape.to_vec(),
                actual: vec![qoi_alpha.len()],
            });
        }
        if metrics.len() != n_qoi {
            return Err(Error::Shape {
                expected: qoi_shape.to_vec(),
                actual: vec![metrics.len()],
            });
        }
        if let Some(a) = qoi_alpha.iter().find(|a| !(**a > 0.0 && **a < 1.0)) {
            return Err(Error::InvalidArgument(format!(
                "QOI uncertainty level {a} is outside (0, 1)"
            )));
        }
        for m in &metrics {
            m.validate()?;
        }
        let dependencies = validate_dependency(dependency.as_ref(), qoi_shape, &mean_shape)?;
        let mean_alpha = allocate_alpha(&dependencies, &qoi_alpha)?;
        Ok(Self {
            integrand,
            mean_shape,
            qoi_shape: qoi_shape.to_vec(),
            bound_lo,
            bound_hi,
            dependency,
            qoi_alpha,
            metrics,
            dependencies,
            mean_alpha,
        })
    }

    /// QOI equal to the means: identity bound functions and dependency.
    pub fn identity(integrand: Arc<dyn Integrand>, qoi_alpha: Vec<f64>, metrics: Vec<ErrorMetric>) -> Result<Self> {
        let shape = integrand.output_shape();
        Self::new(
            integrand,
            &shape,
            Arc::new(|lo: &MultiArray, _: &MultiArray| lo.clone()),
            Arc::new(|_: &MultiArray, hi: &MultiArray| hi.clone()),
            Arc::new(|b: &FlagArray| b.clone()),
            qoi_alpha,
            metrics,
        )
    }

    pub fn integrand(&self) -> &dyn Integrand {
        self.integrand.as_ref()
    }

    pub fn dimension(&self) -> usize {
        self.integrand.dimension()
    }

    pub fn mean_shape(&self) -> &[usize] {
        &self.mean_shape
    }

    pub fn qoi_shape(&self) -> &[usize] {
        &self.qoi_shape
    }

    pub fn metrics(&self) -> &[ErrorMetric] {
        &self.metrics
    }

    pub fn qoi_alpha(&self) -> &[f64] {
        &self.qoi_alpha
    }

    pub fn mean_alpha(&self) -> &[f64] {
        &self.mean_alpha
    }

    pub fn dependencies(&self) -> &DependencyMatrix {
        &self.dependencies
    }

    /// Applies `C-`/`C+` to mean bounds.
    pub fn propagate(&self, mu: &BoundsArray) -> Result<BoundsArray> {
        apply_bound_pair(
            |lo, hi| (self.bound_lo)(lo, hi),
            |lo, hi| (self.bound_hi)(lo, hi),
            mu,
            &self.qoi_shape,
        )
    }

    fn mean_flags(&self, qoi_flags: &FlagArray) -> Result<FlagArray> {
        let out = (self.dependency)(qoi_flags);
        if out.shape() != self.mean_shape.as_slice() {
            return Err(Error::Shape {
                expected: self.mean_shape.clone(),
                actual: out.shape().to_vec(),
            });
        }
        Ok(out.as_standard_layout().into_owned())
    }
}

/// Sampling and bounding configuration for one run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub sequence: SequenceSpec,
    pub bounder: BounderConfig,
    /// The first block has `2^m1` points per sequence.
    pub m1: u32,
    /// Largest admissible number of points per sequence.
    pub max_samples: u64,
    pub workers: usize,
}

impl RunOptions {
    pub fn new(sequence: SequenceSpec, bounder: BounderConfig) -> Self {
        Self {
            sequence,
            bounder,
            m1: 10,
            max_samples: 1 << 24,
            workers: 1,
        }
    }

    pub fn with_m1(mut self, m1: u32) -> Self {
        self.m1 = m1;
        self
    }

    pub fn with_max_samples(mut self, max_samples: u64) -> Self {
        self.max_samples = max_samples;
        self
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.sequence.validate()?;
        self.bounder.validate()?;
        match (self.bounder.kind, self.sequence.kind) {
            (BounderKind::Replications, SequenceKind::Iid) => {
                return Err(Error::InvalidArgument(
                    "the replications bounder needs a lattice or digital net sequence".into(),
                ))
            }
            (BounderKind::CltIid, SequenceKind::Lattice | SequenceKind::DigitalNet) => {
                return Err(Error::InvalidArgument(
                    "the CLT bounder assumes IID points; use the replications bounder with \
                     low-discrepancy sequences"
                        .into(),
                ))
            }
            _ => {}
        }
        if self.m1 < 1 || self.m1 > 32 {
            return Err(Error::InvalidArgument(format!(
                "m1 must lie in 1..=32, got {}",
                self.m1
            )));
        }
        if (1u64 << self.m1) > self.max_samples {
            return Err(Error::InvalidArgument(format!(
                "initial block 2^{} exceeds max_samples {}",
                self.m1, self.max_samples
            )));
        }
        if self.max_samples > self.sequence.capacity() {
            return Err(Error::Capacity {
                requested: self.max_samples,
                limit: self.sequence.capacity(),
            });
        }
        if self.workers == 0 {
            return Err(Error::InvalidArgument("workers must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    Converged,
    BudgetExhausted,
}

/// Snapshot after one iteration of the loop.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub n_start: u64,
    pub n_end: u64,
    /// Mean flags in force while this block was evaluated.
    pub skipped: FlagArray,
    pub mu_bounds: BoundsArray,
    pub s_bounds: BoundsArray,
    pub qoi_flags: FlagArray,
    /// Integrand-reported cost of this block, summed over sequences.
    pub cost: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub status: RunStatus,
    /// Optimal estimates; NaN where the bounds are unbounded.
    pub s_hat: MultiArray,
    pub s_bounds: BoundsArray,
    pub mu_bounds: BoundsArray,
    /// Points taken from each sequence.
    pub n_total: u64,
    /// Points taken over all sequences (`n_total * R` for replications).
    pub nodes_total: u64,
    /// Per mean index: number of integrand outputs computed.
    pub eval_counts: ArrayD<u64>,
    /// Total integrand-reported cost.
    pub cost: u64,
    pub converged: FlagArray,
    pub iterations: usize,
    pub trace: Vec<IterationRecord>,
    pub wall_time: Duration,
}

impl RunReport {
    pub fn all_converged(&self) -> bool {
        self.converged.iter().all(|&b| b)
    }
}

enum Sampler {
    Single(PointGenerator),
    Replicated(Vec<PointGenerator>),
}

impl Sampler {
    fn generators(&self) -> &[PointGenerator] {
        match self {
            Sampler::Single(g) => std::slice::from_ref(g),
            Sampler::Replicated(gs) => gs,
        }
    }
}

/// Runs the adaptive algorithm until every QOI meets its stopping criterion
/// or the next block would exceed `max_samples`.
pub fn run(problem: &ProblemSpec, options: &RunOptions) -> Result<RunReport> {
    let started = Instant::now();
    options.validate()?;
    if options.sequence.dimension != problem.dimension() {
        return Err(Error::Shape {
            expected: vec![problem.dimension()],
            actual: vec![options.sequence.dimension],
        });
    }
    let sampler = match options.bounder.kind {
        BounderKind::CltIid => Sampler::Single(options.sequence.generator()?),
        BounderKind::Replications => Sampler::Replicated(
            replicate(&options.sequence, options.bounder.replications)?
                .iter()
                .map(SequenceSpec::generator)
                .collect::<Result<_>>()?,
        ),
    };
    let pool = evaluate::worker_pool(options.workers)?;

    let mean_shape = problem.mean_shape().to_vec();
    let qoi_shape = problem.qoi_shape().to_vec();
    let n_mean = num_elements(&mean_shape);
    let n_qoi = num_elements(&qoi_shape);
    let integrand = problem.integrand();
    let inflation = options.bounder.inflation;
    let literal_doubling = options.sequence.kind == SequenceKind::Iid;

    let mut states = (0..n_mean)
        .map(|_| MeanState::new(&options.bounder))
        .collect::<Result<Vec<_>>>()?;
    let mut mu_bounds = BoundsArray::unbounded(&mean_shape);
    let mut s_bounds;
    let mut mean_flags = vec![false; n_mean];
    let mut qoi_flags = FlagArray::from_elem(IxDyn(&qoi_shape), false);
    let mut eval_counts = vec![0u64; n_mean];
    let mut cost = 0u64;
    let mut trace = Vec::new();

    let mut n_start: u64 = 1;
    let mut n_end: u64 = 1 << options.m1;
    let status = loop {
        let count = n_end - n_start + 1;
        let skipped = mean_flags.clone();
        let mut block_cost = 0;
        for (r, generator) in sampler.generators().iter().enumerate() {
            let block = evaluate::accumulate_block(integrand, generator, n_start - 1, count, &skipped, &pool)?;
            block_cost += block.cost;
            for k in (0..n_mean).filter(|&k| !skipped[k]) {
                states[k].merge(r, &block.per_mean[k])?;
                eval_counts[k] += count;
            }
        }
        cost += block_cost;

        for k in (0..n_mean).filter(|&k| !skipped[k]) {
            mu_bounds.set(k, states[k].bounds(problem.mean_alpha()[k], inflation)?);
        }
        s_bounds = problem.propagate(&mu_bounds)?;
        for (l, flag) in qoi_flags.iter_mut().enumerate() {
            let iv = s_bounds.get(l);
            *flag = stopping_met(iv.lo, iv.hi, &problem.metrics()[l]);
        }
        // Stopped means stay stopped: their statistics cover a prefix of the
        // sequence and cannot be resumed consistently.
        let next = problem.mean_flags(&qoi_flags)?;
        for (flag, &d) in mean_flags.iter_mut().zip(next.iter()) {
            *flag |= d;
        }

        trace.push(IterationRecord {
            n_start,
            n_end,
            skipped: FlagArray::from_shape_vec(IxDyn(&mean_shape), skipped).expect("mean shape"),
            mu_bounds: mu_bounds.clone(),
            s_bounds: s_bounds.clone(),
            qoi_flags: qoi_flags.clone(),
            cost: block_cost,
        });

        if qoi_flags.iter().all(|&b| b) {
            break RunStatus::Converged;
        }
        n_start = n_end + 1;
        n_end = if literal_doubling {
            2 * n_start
        } else {
            2 * (n_start - 1)
        };
        if n_end > options.max_samples {
            break RunStatus::BudgetExhausted;
        }
    };

    let s_hat: Vec<f64> = (0..n_qoi)
        .map(|l| {
            let iv = s_bounds.get(l);
            optimal_estimate(iv.lo, iv.hi, &problem.metrics()[l]).unwrap_or(f64::NAN)
        })
        .collect();
    let n_total = trace.last().map_or(0, |t| t.n_end);
    Ok(RunReport {
        status,
        s_hat: MultiArray::from_shape_vec(IxDyn(&qoi_shape), s_hat).expect("qoi shape"),
        s_bounds,
        mu_bounds,
        n_total,
        nodes_total: n_total * options.bounder.sequence_count() as u64,
        eval_counts: ArrayD::from_shape_vec(IxDyn(&mean_shape), eval_counts).expect("mean shape"),
        cost,
        converged: qoi_flags,
        iterations: trace.len(),
        trace,
        wall_time: started.elapsed(),
    })
}

/// Multi-index of a flat QOI offset, for reporting.
pub fn qoi_index(problem: &ProblemSpec, flat: usize) -> Vec<usize> {
    unravel(problem.qoi_shape(), flat)
}
