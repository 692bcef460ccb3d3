//! Property tests for the set algebra, density integration and the open
//! adapters.

use proptest::prelude::*;

use mseg_core::density::{Density, Domain, Piece};
use mseg_core::interval_set::{Interval, IntervalSet};
use mseg_core::oseg::{grow_open_to_measure, IntervalSpace, SpaceAdapter, GROW_MAX};

fn arb_interval() -> impl Strategy<Value = Interval> {
    (0.0f64..1.0, 0.0f64..1.0).prop_map(|(a, b)| {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        Interval::closed(lo, hi)
    })
}

fn arb_set() -> impl Strategy<Value = IntervalSet> {
    prop::collection::vec(arb_interval(), 0..6).prop_map(IntervalSet::from_parts)
}

fn arb_step_density() -> impl Strategy<Value = Density> {
    (
        prop::collection::vec(0.01f64..0.99, 1..8),
        prop::collection::vec(-2.0f64..2.0, 9),
    )
        .prop_map(|(mut cuts, vals)| {
            cuts.push(0.0);
            cuts.push(1.0);
            cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
            cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-4);
            let pieces = cuts
                .windows(2)
                .zip(vals)
                .map(|(w, v)| Piece { from: w[0], to: w[1], coeffs: vec![v] })
                .collect();
            Density::new(Domain::unit(), pieces, None).unwrap()
        })
}

const EPS: f64 = 1e-9;

proptest! {
    #[test]
    fn union_measure_inclusion_exclusion(x in arb_set(), y in arb_set()) {
        let lhs = x.union(&y).measure() + x.intersect(&y).measure();
        prop_assert!((lhs - x.measure() - y.measure()).abs() < EPS);
    }

    #[test]
    fn subtract_partitions_measure(x in arb_set(), y in arb_set()) {
        let total = x.subtract(&y).measure() + x.intersect(&y).measure();
        prop_assert!((total - x.measure()).abs() < EPS);
    }

    #[test]
    fn subtraction_disjoint_from_subtrahend(x in arb_set(), y in arb_set()) {
        prop_assert!(x.subtract(&y).intersect(&y).measure() < EPS);
    }

    #[test]
    fn interior_and_closure_preserve_measure(x in arb_set()) {
        prop_assert!((x.interior().measure() - x.measure()).abs() < EPS);
        prop_assert!((x.closure().measure() - x.measure()).abs() < EPS);
        prop_assert!(x.interior().is_open());
    }

    #[test]
    fn prefix_is_monotone_in_mass(x in arb_set(), s in 0.0f64..1.0, t in 0.0f64..1.0) {
        let m = x.measure();
        let (a, b) = (s.min(t) * m, s.max(t) * m);
        let pa = x.prefix(a).unwrap();
        let pb = x.prefix(b).unwrap();
        prop_assert!(pa.is_subset_of(&pb));
        prop_assert!((pa.measure() - a).abs() < EPS);
        prop_assert!(pa.is_subset_of(&x));
    }

    #[test]
    fn integration_is_additive_over_disjoint_sets(
        f in arb_step_density(), x in arb_set(), y in arb_set()
    ) {
        let y = y.subtract(&x);
        let joint = f.integrate_over(&x.union(&y)).unwrap();
        let split = f.integrate_over(&x).unwrap() + f.integrate_over(&y).unwrap();
        prop_assert!((joint - split).abs() < 1e-8);
    }

    #[test]
    fn integration_matches_riemann_sums(f in arb_step_density(), a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let (a, b) = (a.min(b), a.max(b));
        let exact = f.integrate_interval(a, b);
        let n = 20_000;
        let h = (b - a) / n as f64;
        // midpoint rule is exact per piece; only cells straddling a cut err
        let riemann: f64 = (0..n)
            .map(|i| f.integrate_interval(a + i as f64 * h, a + (i + 1) as f64 * h))
            .sum();
        prop_assert!((exact - riemann).abs() < 1e-9);
    }

    #[test]
    fn abs_integral_dominates_integral(f in arb_step_density(), x in arb_set()) {
        let plain = f.integrate_over(&x).unwrap().abs();
        let abs = f.integrate_abs_over(&x).unwrap();
        prop_assert!(abs >= plain - EPS);
    }

    #[test]
    fn fuzzed_grow_returns_open_superset(
        seed in 0u64..1000,
        lo in 0.0f64..0.5,
        len in 0.05f64..0.3,
        frac in 0.1f64..0.9,
    ) {
        let sp = IntervalSpace::fuzzed(IntervalSet::open_interval(0.0, 1.0), seed).unwrap();
        let a_set = IntervalSet::open_interval(lo, lo + len);
        let target = a_set.measure() + frac * (0.99 - a_set.measure());
        let grown = grow_open_to_measure(&sp, &a_set, target, GROW_MAX).unwrap();
        prop_assert!(grown.set.is_open());
        prop_assert!(a_set.is_subset_of(&grown.set));
        prop_assert!((grown.set.measure() - target).abs() <= 1e-9);
    }

    #[test]
    fn approx_open_respects_its_budget(
        seed in 0u64..1000,
        x in arb_set(),
        eps in 1e-6f64..0.1,
    ) {
        let universe = IntervalSet::open_interval(0.0, 1.0);
        let x = x.intersect(&universe);
        prop_assume!(!x.is_empty());
        let sp = IntervalSpace::fuzzed(universe, seed).unwrap();
        let cover = sp.approx_open(&x, eps).unwrap();
        prop_assert!(cover.is_open());
        prop_assert!(x.subtract(&cover).measure() < EPS);
        prop_assert!(cover.subtract(&x).measure() <= eps + EPS);
    }
}
