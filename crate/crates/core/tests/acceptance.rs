//! Acceptance suite: one PASS/FAIL line per criterion.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use ndarray::{arr1, arr2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qmcqoi::criteria::{optimal_estimate, stopping_met};
use qmcqoi::driver::FnIntegrand;
use qmcqoi::intervals::{iv_add, iv_div, iv_max, iv_min, iv_mul, iv_sub};
use qmcqoi::problems::{
    all_subsets, conjugate_gaussian, cost_tally, ishigami_closed_indices, ishigami_problem,
    ishigami_total_indices, make_mean_vector_problem, make_posterior_mean_problem, make_qei_integrand,
    make_sensitivity_problem, singleton_subsets, QeiSpec, SensitivitySpec, ISHIGAMI_A, ISHIGAMI_B,
};
use qmcqoi::sequences::gen;
use qmcqoi::study::{convergence_study, StudyConfig};
use qmcqoi::{
    run, BounderConfig, ErrorMetric, Interval, Randomization, RunOptions, RunReport, RunStatus, SequenceKind,
    SequenceSpec,
};

const STOPPING_RULE_CASES: usize = 1000;
const STOPPING_RULE_GRID: usize = 10_000;
const STOPPING_RULE_SLACK: f64 = 1e-10;
const STOPPING_RULE_LIMIT: Duration = Duration::from_secs(10);

const INCLUSION_PAIRS: usize = 10_000;
const INCLUSION_SAMPLES: usize = 100;
const INCLUSION_LIMIT: Duration = Duration::from_secs(30);

const SEEDS: u64 = 100;
const COVERAGE_MIN: usize = 92;
const ISHIGAMI_EPS: f64 = 0.01;
const ISHIGAMI_LIMIT: Duration = Duration::from_secs(300);
const COMPLEMENT_TOL: f64 = 0.02;

const POSTERIOR_EPS: f64 = 1e-3;
const POSTERIOR_LIMIT: Duration = Duration::from_secs(120);

const QEI_EPS: f64 = 1e-3;

const IID_SLOPE: f64 = -0.5;
const IID_SLOPE_TOL: f64 = 0.12;
const QMC_SLOPE_MAX: f64 = -0.85;
const SLOPE_LIMIT: Duration = Duration::from_secs(180);

const COST_LIMIT: Duration = Duration::from_secs(10);
const DETERMINISM_LIMIT: Duration = Duration::from_secs(30);

const ALPHA: f64 = 0.05;
const R: usize = 16;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn replicated(dimension: usize, seed: u64) -> RunOptions {
    RunOptions::new(SequenceSpec::new(SequenceKind::Lattice, dimension, seed), BounderConfig::replications(R))
        .with_m1(8)
        .with_max_samples(1 << 22)
}

fn random_metric(rng: &mut ChaCha8Rng) -> ErrorMetric {
    let eps_abs = if rng.random_bool(0.2) { 0.0 } else { 10f64.powf(rng.random_range(-4.0..0.0)) };
    let eps_rel = if eps_abs == 0.0 || rng.random_bool(0.5) { rng.random_range(0.01..0.9) } else { 0.0 };
    if rng.random_bool(0.5) {
        ErrorMetric::abs_or_rel(eps_abs, eps_rel).unwrap()
    } else if eps_abs > 0.0 && eps_rel > 0.0 {
        ErrorMetric::abs_and_rel(eps_abs, eps_rel).unwrap()
    } else {
        ErrorMetric::abs_or_rel(eps_abs, eps_rel).unwrap()
    }
}

fn stopping_rule() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut mismatches = 0;
    let mut not_optimal = 0;
    for _ in 0..STOPPING_RULE_CASES {
        let metric = random_metric(&mut rng);
        let center = rng.random_range(-5.0..5.0);
        let width = 10f64.powf(rng.random_range(-4.0..1.0));
        let (lo, hi) = (center - width * rng.random::<f64>(), center + width * rng.random::<f64>());
        let s_hat = optimal_estimate(lo, hi, &metric).unwrap();
        let grid: Vec<f64> = (0..STOPPING_RULE_GRID).map(|i| lo + (hi - lo) * i as f64 / (STOPPING_RULE_GRID - 1) as f64).collect();
        let worst = |est: f64| grid.iter().map(|&s| (s - est).abs() - metric.h(s)).fold(f64::NEG_INFINITY, f64::max);
        let raw = worst(s_hat) <= STOPPING_RULE_SLACK;
        if raw != stopping_met(lo, hi, &metric) {
            mismatches += 1;
        }
        let best = worst(s_hat);
        let resolution = 1e-3 * (hi - lo);
        let candidates = (0..=100).map(|i| lo + (hi - lo) * i as f64 / 100.0);
        if candidates.map(worst).any(|w| w < best - resolution) {
            not_optimal += 1;
        }
    }
    outcome(
        mismatches == 0 && not_optimal == 0,
        format!("{STOPPING_RULE_CASES} cases, {mismatches} criterion mismatches, {not_optimal} dominated estimates"),
    )
}

fn random_endpoint(rng: &mut ChaCha8Rng) -> f64 {
    match rng.random_range(0..20) {
        0 => 0.0,
        1 => f64::INFINITY,
        2 => f64::NEG_INFINITY,
        _ => rng.random_range(-10.0..10.0) * 10f64.powi(rng.random_range(-3..3)),
    }
}

fn random_interval(rng: &mut ChaCha8Rng) -> Interval {
    let (a, b) = (random_endpoint(rng), random_endpoint(rng));
    Interval { lo: a.min(b), hi: a.max(b) }
}

fn sample(rng: &mut ChaCha8Rng, iv: Interval) -> f64 {
    let lo = iv.lo.max(-1e6);
    let hi = iv.hi.min(1e6);
    let (lo, hi) = if lo > hi { (iv.lo, iv.lo) } else { (lo, hi) };
    if lo.is_infinite() {
        return lo;
    }
    lo + (hi - lo) * rng.random::<f64>()
}

fn interval_inclusion() -> Outcome {
    type Op = (&'static str, fn(Interval, Interval) -> qmcqoi::Result<Interval>, fn(f64, f64) -> f64);
    let ops: [Op; 6] = [
        ("add", iv_add, |x, y| x + y),
        ("sub", iv_sub, |x, y| x - y),
        ("mul", iv_mul, |x, y| x * y),
        ("div", iv_div, |x, y| x / y),
        ("min", iv_min, f64::min),
        ("max", iv_max, f64::max),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut violations = 0usize;
    let mut checked = 0usize;
    for _ in 0..INCLUSION_PAIRS {
        let (a, b) = (random_interval(&mut rng), random_interval(&mut rng));
        for (_, op, real) in &ops {
            let out = op(a, b).unwrap();
            for _ in 0..INCLUSION_SAMPLES {
                let (x, y) = (sample(&mut rng, a), sample(&mut rng, b));
                let v = real(x, y);
                if v.is_nan() {
                    continue;
                }
                checked += 1;
                if !out.contains(v) {
                    violations += 1;
                }
            }
        }
    }
    outcome(violations == 0, format!("{checked} samples, {violations} containment violations"))
}

struct SeedStats {
    covered: usize,
    accurate: usize,
    converged: usize,
}

fn ishigami_coverage() -> Outcome {
    let subsets = singleton_subsets(3);
    let metric = ErrorMetric::absolute(ISHIGAMI_EPS).unwrap();
    let truth: Vec<f64> = subsets
        .iter()
        .map(|u| ishigami_closed_indices(u, ISHIGAMI_A, ISHIGAMI_B))
        .chain(subsets.iter().map(|u| ishigami_total_indices(u, ISHIGAMI_A, ISHIGAMI_B)))
        .collect();
    let mut stats: Vec<SeedStats> = (0..truth.len()).map(|_| SeedStats { covered: 0, accurate: 0, converged: 0 }).collect();
    for seed in 0..SEEDS {
        let p = ishigami_problem(subsets.clone(), ISHIGAMI_A, ISHIGAMI_B, vec![metric.clone(); 6], vec![ALPHA; 6]).unwrap();
        let report = run(p.problem(), &replicated(6, 1000 + seed)).unwrap();
        tally(&mut stats, &report, &truth, ISHIGAMI_EPS);
    }
    summarize(&stats)
}

fn tally(stats: &mut [SeedStats], report: &RunReport, truth: &[f64], eps: f64) {
    for (l, st) in stats.iter_mut().enumerate() {
        let iv = report.s_bounds.get(l);
        let s = report.s_hat.as_slice().unwrap()[l];
        st.covered += iv.contains(truth[l]) as usize;
        st.accurate += ((s - truth[l]).abs() <= eps) as usize;
        st.converged += report.converged.as_slice().unwrap()[l] as usize;
    }
}

fn summarize(stats: &[SeedStats]) -> Outcome {
    let pass = stats.iter().all(|s| s.covered >= COVERAGE_MIN && s.accurate >= COVERAGE_MIN);
    let detail = stats
        .iter()
        .map(|s| format!("{}/{}/{}", s.covered, s.accurate, s.converged))
        .collect::<Vec<_>>()
        .join(" ");
    outcome(pass, format!("covered/accurate/converged of {SEEDS} per QOI: {detail}"))
}

fn complementarity() -> Outcome {
    let subsets = all_subsets(3);
    let c = subsets.len();
    let metric = ErrorMetric::absolute(ISHIGAMI_EPS).unwrap();
    let p = ishigami_problem(subsets.clone(), ISHIGAMI_A, ISHIGAMI_B, vec![metric; 2 * c], vec![ALPHA; 2 * c]).unwrap();
    let report = run(p.problem(), &replicated(6, 77)).unwrap();
    if report.status != RunStatus::Converged {
        return outcome(false, "run did not converge".into());
    }
    let s = report.s_hat.as_slice().unwrap();
    let mut worst: f64 = 0.0;
    for v in 0..3 {
        let u = subsets.iter().position(|x| x == &vec![v]).unwrap();
        let complement: Vec<usize> = (0..3).filter(|&k| k != v).collect();
        let uc = subsets.iter().position(|x| x == &complement).unwrap();
        worst = worst.max((s[u] + s[c + uc] - 1.0).abs());
    }
    outcome(worst <= COMPLEMENT_TOL, format!("max |closed(u) + total(u^c) - 1| = {worst:.2e}"))
}

fn posterior_mean() -> Outcome {
    let truth = [2.0 / 3.0];
    let metric = ErrorMetric::absolute(POSTERIOR_EPS).unwrap();
    let mut stats = vec![SeedStats { covered: 0, accurate: 0, converged: 0 }];
    for seed in 0..SEEDS {
        let p = make_posterior_mean_problem(conjugate_gaussian(vec![1.0, 1.0]), vec![metric.clone()], vec![ALPHA]).unwrap();
        let report = run(&p, &replicated(1, 2000 + seed)).unwrap();
        tally(&mut stats, &report, &truth, POSTERIOR_EPS);
    }
    summarize(&stats)
}

fn qei() -> Outcome {
    let truth = [1.0 / (2.0 * PI).sqrt()];
    let metric = ErrorMetric::absolute(QEI_EPS).unwrap();
    let mut stats = vec![SeedStats { covered: 0, accurate: 0, converged: 0 }];
    for seed in 0..SEEDS {
        let f = make_qei_integrand(QeiSpec {
            means: vec![arr1(&[0.0])],
            factors: vec![arr2(&[[1.0]])],
            y_star: 0.0,
        })
        .unwrap();
        let p = make_mean_vector_problem(Arc::new(f), vec![metric.clone()], vec![ALPHA]).unwrap();
        let report = run(&p, &replicated(1, 3000 + seed)).unwrap();
        tally(&mut stats, &report, &truth, QEI_EPS);
    }
    let s = &stats[0];
    let pass = s.converged == SEEDS as usize && s.covered >= COVERAGE_MIN;
    outcome(pass, format!("converged {}/{SEEDS}, covered {}/{SEEDS}", s.converged, s.covered))
}

fn convergence_slopes() -> Outcome {
    let table = convergence_study(&StudyConfig::smooth_product(3, 4)).unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for s in &table.slopes {
        let Some(slope) = s.slope else {
            pass = false;
            parts.push(format!("{:?}: undefined", s.kind));
            continue;
        };
        pass &= match s.kind {
            SequenceKind::Iid => (slope - IID_SLOPE).abs() <= IID_SLOPE_TOL,
            _ => slope <= QMC_SLOPE_MAX,
        };
        parts.push(format!("{:?}/{:?}: {slope:.3}", s.kind, s.randomization));
    }
    outcome(pass, parts.join(", "))
}

fn economic_evaluation() -> Outcome {
    // Input 0 dominates; its indices meet a loose tolerance long before the
    // tight tolerance on input 1 is met.
    let spec = || SensitivitySpec {
        objective: Arc::new(|x: &[f64]| x[0] + 0.1 * x[1]),
        nu: 2,
        subsets: singleton_subsets(2),
    };
    let loose = ErrorMetric::absolute(0.05).unwrap();
    let tight = ErrorMetric::absolute(0.0005).unwrap();
    let metrics = vec![loose.clone(), tight.clone(), loose, tight];
    let p = make_sensitivity_problem(spec(), metrics.clone(), vec![ALPHA; 4]).unwrap();
    let opts = replicated(4, 5);
    let a = run(p.problem(), &opts).unwrap();
    let b = run(make_sensitivity_problem(spec(), metrics, vec![ALPHA; 4]).unwrap().problem(), &opts).unwrap();

    let mut problems = Vec::new();
    if a.status != RunStatus::Converged {
        problems.push("did not converge".to_string());
    }
    let first = &a.trace[0];
    let c = 2;
    let full = (first.n_end - first.n_start + 1) * R as u64 * (2 + c);
    if first.cost != full {
        problems.push(format!("first block cost {} != (2+c) * nodes = {full}", first.cost));
    }
    // Each mean's count equals R times the sample size at the iteration
    // where its flag was set, or at the end if it never was.
    let counts = a.eval_counts.as_slice().unwrap();
    for (k, &count) in counts.iter().enumerate() {
        let stop = a.trace.iter().skip(1).position(|t| t.skipped.as_slice().unwrap()[k]);
        let expected = stop.map_or(a.n_total, |i| a.trace[i].n_end) * R as u64;
        if count != expected {
            problems.push(format!("mean {k}: {count} evaluations, expected {expected}"));
        }
    }
    let group0 = [0usize, 2, 4, 6, 8, 10];
    let flip = a.trace.iter().position(|t| t.qoi_flags[[0, 0]] && t.qoi_flags[[1, 0]]);
    match flip {
        Some(it) if it + 1 < a.trace.len() => {
            let frozen = a.trace[it].n_end * R as u64;
            if group0.iter().any(|&k| counts[k] != frozen) {
                problems.push("group 0 counts grew after convergence".into());
            }
            let later = &a.trace[it + 1];
            let full = (later.n_end - later.n_start + 1) * R as u64 * (2 + c);
            if later.cost >= full {
                problems.push("no saving after group 0 converged".into());
            }
        }
        _ => problems.push("group 0 did not converge before group 1".into()),
    }
    if let Err(e) = cost_tally(&p, &a) {
        problems.push(e.to_string());
    }
    if !same_report(&a, &b) {
        problems.push("repeated run differs".into());
    }
    let detail = if problems.is_empty() {
        format!("{} iterations, {} objective calls, group 0 frozen at {:?}", a.iterations, a.cost, flip.map(|i| a.trace[i].n_end))
    } else {
        problems.join("; ")
    };
    outcome(problems.is_empty(), detail)
}

fn same_report(a: &RunReport, b: &RunReport) -> bool {
    let mut b = b.clone();
    b.wall_time = a.wall_time;
    *a == b
}

fn determinism() -> Outcome {
    let mut problems = Vec::new();
    let kinds = [
        (SequenceKind::Iid, Randomization::None),
        (SequenceKind::Lattice, Randomization::Shift),
        (SequenceKind::DigitalNet, Randomization::Shift),
        (SequenceKind::DigitalNet, Randomization::Scramble),
    ];
    for (kind, randomization) in kinds {
        let spec = SequenceSpec::new(kind, 5, 9).with_randomization(randomization);
        let full = gen(&spec, 1, 1 << 14).unwrap().values;
        for m in 4..=14u64 {
            let head = gen(&spec, 1, 1 << m).unwrap().values;
            let tail = gen(&spec, (1 << m) + 1, (1 << m) * 2).unwrap().values;
            let n = 1usize << m;
            if head != full.slice(ndarray::s![..n, ..]) {
                problems.push(format!("{kind:?}/{randomization:?} prefix 2^{m}"));
            }
            if m < 14 && tail != full.slice(ndarray::s![n..2 * n, ..]) {
                problems.push(format!("{kind:?}/{randomization:?} extension 2^{m}"));
            }
        }
    }
    let subsets = singleton_subsets(3);
    let metric = ErrorMetric::absolute(ISHIGAMI_EPS).unwrap();
    let p = ishigami_problem(subsets, ISHIGAMI_A, ISHIGAMI_B, vec![metric.clone(); 6], vec![ALPHA; 6]).unwrap();
    let f = Arc::new(FnIntegrand::new(2, &[2], |x: &[f64]| vec![x[0] * x[1], (x[0] - x[1]).powi(2)]));
    let q = make_mean_vector_problem(f, vec![ErrorMetric::absolute(1e-3).unwrap(); 2], vec![ALPHA; 2]).unwrap();
    let cases = [
        (p.problem().clone(), replicated(6, 11)),
        (
            q,
            RunOptions::new(SequenceSpec::new(SequenceKind::Iid, 2, 12), BounderConfig::clt()).with_m1(10),
        ),
    ];
    for (problem, opts) in &cases {
        let base = run(problem, &opts.with_workers(1)).unwrap();
        for w in [4, 8] {
            if !same_report(&base, &run(problem, &opts.with_workers(w)).unwrap()) {
                problems.push(format!("{:?} report differs with {w} workers", opts.sequence.kind));
            }
        }
    }
    let detail = if problems.is_empty() {
        "prefixes m=4..14 for 4 sequence variants; reports identical for workers 1, 4, 8".to_string()
    } else {
        problems.join("; ")
    };
    outcome(problems.is_empty(), detail)
}

fn main() -> ExitCode {
    type Criterion = (&'static str, fn() -> Outcome, Option<Duration>);
    let criteria: [Criterion; 9] = [
        ("stopping rule equivalence and minimax estimate", stopping_rule, Some(STOPPING_RULE_LIMIT)),
        ("interval inclusion", interval_inclusion, Some(INCLUSION_LIMIT)),
        ("ishigami coverage", ishigami_coverage, Some(ISHIGAMI_LIMIT)),
        ("sensitivity complementarity", complementarity, None),
        ("posterior mean", posterior_mean, Some(POSTERIOR_LIMIT)),
        ("qei sanity", qei, None),
        ("convergence slopes", convergence_slopes, Some(SLOPE_LIMIT)),
        ("economic evaluation and cost model", economic_evaluation, Some(COST_LIMIT)),
        ("determinism and extensibility", determinism, Some(DETERMINISM_LIMIT)),
    ];
    let mut failed = 0;
    for (i, (name, check, limit)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let mut result = check();
        let elapsed = start.elapsed();
        if let Some(limit) = limit {
            if elapsed > *limit {
                result.pass = false;
                result.detail.push_str(&format!("; exceeded {limit:?}"));
            }
        }
        failed += !result.pass as usize;
        println!(
            "criterion {}: {} {name} ({:.2?}) {}",
            i + 1,
            if result.pass { "PASS" } else { "FAIL" },
            elapsed,
            result.detail
        );
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
