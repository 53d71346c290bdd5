use proptest::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

use qmcqoi::bounders::{clt_bounds, CltState};
use qmcqoi::criteria::{optimal_estimate, stopping_met};
use qmcqoi::intervals::{iv_add, iv_clip, iv_div, iv_max, iv_min, iv_mul, iv_sqr, iv_sub};
use qmcqoi::stats::{normal_quantile, t_quantile};
use qmcqoi::{ErrorMetric, Interval};

fn interval() -> impl Strategy<Value = Interval> {
    (-1e3f64..1e3, 0f64..1e3).prop_map(|(lo, w)| Interval { lo, hi: lo + w })
}

fn inside(iv: Interval, t: f64) -> f64 {
    (iv.lo + t * (iv.hi - iv.lo)).clamp(iv.lo, iv.hi)
}

fn sub_interval(iv: Interval, a: f64, b: f64) -> Interval {
    let (x, y) = (inside(iv, a.min(b)), inside(iv, a.max(b)));
    Interval { lo: x, hi: y }
}

fn contains_all(outer: Interval, inner: Interval) -> bool {
    outer.lo <= inner.lo && inner.hi <= outer.hi
}

type BinOp = fn(Interval, Interval) -> qmcqoi::Result<Interval>;
type RealOp = fn(f64, f64) -> f64;
const OPS: [(BinOp, RealOp); 6] = [
    (iv_add, |x, y| x + y),
    (iv_sub, |x, y| x - y),
    (iv_mul, |x, y| x * y),
    (iv_div, |x, y| x / y),
    (iv_min, f64::min),
    (iv_max, f64::max),
];

proptest! {
    #[test]
    fn operations_enclose_pointwise_results(a in interval(), b in interval(), s in 0f64..=1.0, t in 0f64..=1.0) {
        let (x, y) = (inside(a, s), inside(b, t));
        for (op, real) in OPS {
            let out = op(a, b).unwrap();
            let v = real(x, y);
            // One ulp of slack per endpoint for rounding in the corner terms.
            let slack = 4.0 * f64::EPSILON * v.abs().max(1.0);
            prop_assert!(out.lo - slack <= v && v <= out.hi + slack, "{:?} {:?} -> {:?} misses {}", a, b, out, v);
        }
        let sq = iv_sqr(a).unwrap();
        prop_assert!(sq.contains(x * x) && sq.lo >= 0.0);
        let cl = iv_clip(a, 0.0, 1.0).unwrap();
        prop_assert!(cl.contains(x.clamp(0.0, 1.0)));
    }

    #[test]
    fn operations_are_inclusion_monotone(a in interval(), b in interval(), p in 0f64..=1.0, q in 0f64..=1.0, r in 0f64..=1.0, u in 0f64..=1.0) {
        let (a2, b2) = (sub_interval(a, p, q), sub_interval(b, r, u));
        for (op, _) in OPS {
            prop_assert!(contains_all(op(a, b).unwrap(), op(a2, b2).unwrap()));
        }
        prop_assert!(contains_all(iv_sqr(a).unwrap(), iv_sqr(a2).unwrap()));
    }

    #[test]
    fn stopping_rule_is_the_pointwise_criterion(lo in -10f64..10.0, w in 0f64..2.0, eps_abs in 1e-3f64..0.5, eps_rel in 0f64..0.9, and in any::<bool>()) {
        let hi = lo + w;
        let metric = if and {
            ErrorMetric::abs_and_rel(eps_abs, eps_rel.max(1e-3)).unwrap()
        } else {
            ErrorMetric::abs_or_rel(eps_abs, eps_rel).unwrap()
        };
        let s_hat = optimal_estimate(lo, hi, &metric).unwrap();
        let worst = (0..=2000)
            .map(|i| lo + w * i as f64 / 2000.0)
            .map(|s| (s - s_hat).abs() - metric.h(s))
            .fold(f64::NEG_INFINITY, f64::max);
        let margin = 0.5 * (w - metric.h(lo) - metric.h(hi));
        // Away from the boundary the two must agree.
        if margin.abs() > 1e-9 {
            prop_assert_eq!(stopping_met(lo, hi, &metric), worst <= 1e-12);
        }
        prop_assert!(s_hat >= lo - 1e-12 && s_hat <= hi + 1e-12);
    }

    #[test]
    fn normal_quantile_matches_reference(p in 1e-12f64..(1.0 - 1e-12)) {
        let reference = Normal::new(0.0, 1.0).unwrap().inverse_cdf(p);
        let ours = normal_quantile(p).unwrap();
        prop_assert!((ours - reference).abs() <= 1e-8 * reference.abs().max(1.0), "{} vs {}", ours, reference);
    }

    #[test]
    fn t_quantile_matches_reference(p in 0.5f64..0.9999, df in 1u64..200) {
        let reference = StudentsT::new(0.0, 1.0, df as f64).unwrap().inverse_cdf(p);
        let ours = t_quantile(p, df).unwrap();
        prop_assert!((ours - reference).abs() <= 1e-7 * reference.abs().max(1.0), "df {}: {} vs {}", df, ours, reference);
    }

    #[test]
    fn t_quantiles_exceed_normal_and_increase(p in 0.5f64..0.999, df in 1u64..500) {
        let t = t_quantile(p, df).unwrap();
        let z = normal_quantile(p).unwrap();
        prop_assert!(t >= z - 1e-12);
        prop_assert!(t_quantile(p + 1e-4, df).unwrap() > t);
        prop_assert!(t_quantile(p, df + 1).unwrap() <= t + 1e-12);
    }
}

#[test]
fn clt_bounds_cover_at_nominal_rate() {
    use rand::{Rng, SeedableRng};
    let trials = 200;
    let alpha = 0.05;
    let mut covered = 0;
    for seed in 0..trials {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let values: Vec<f64> = (0..2000).map(|_| rng.random::<f64>().powi(3)).collect();
        let mut state = CltState::new();
        state.update(&values).unwrap();
        let iv = clt_bounds(&state, alpha, 1.0).unwrap();
        covered += iv.contains(0.25) as usize;
    }
    assert!(covered as f64 >= (1.0 - alpha - 0.03) * trials as f64, "{covered}/{trials}");
}
