//! Acceptance suite: one pass/fail line per criterion, run serially so the
//! wall-clock budgets are meaningful on a single core.

use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mseg_core::counterexample::refute_half_set;
use mseg_core::density::{Density, DensityFamily, Domain, Piece, Tail};
use mseg_core::interval_set::{Interval, IntervalSet};
use mseg_core::oseg::{
    block_chain_gap, common_o_segment, greedy_open_measure, grow_open_to_measure, BlockSpace,
    IntervalSpace, GROW_MAX,
};
use mseg_core::segment::{common_segment, universal_chord};
use mseg_core::sigma::{exhaust, glue, half_line_prefix, CaseTag};

fn pass(n: u32, what: &str, detail: String) {
    println!("criterion {n}: PASS — {what} ({detail})");
}

/// Random degree-≤3 density bounded away from zero, so its normalized
/// prefix integral is continuous, strictly increasing and onto [0, 1].
fn random_cubic(rng: &mut ChaCha8Rng) -> Density {
    let coeffs: Vec<f64> = (0..4).map(|_| rng.gen_range(0.1..2.0)).collect();
    Density::poly_unit(&coeffs)
}

fn criterion_1_chords() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let f = random_cubic(&mut rng);
        let total = f.total().unwrap();
        let prefix = |t: f64| f.integrate_interval(0.0, t) / total;
        let s = universal_chord(prefix, 1e-9).unwrap();
        assert!((s.d - s.c - 0.5).abs() < 1e-12, "chord width must be 1/2");
        let resid = (prefix(s.d) - prefix(s.c) - 0.5).abs();
        assert!(resid <= 1e-9, "chord residual {resid}");
        worst = worst.max(resid);
    }
    let dt = start.elapsed();
    assert!(dt.as_secs_f64() < 1.0, "chord sweep took {dt:?}");
    pass(1, "1000 universal chords", format!("worst residual {worst:.2e}, {dt:?}"));
}

/// Random piecewise-constant density with at most 16 pieces and total 1.
fn random_step_density(rng: &mut ChaCha8Rng) -> Density {
    let k = rng.gen_range(2..=16usize);
    let mut cuts: Vec<f64> = (0..k - 1).map(|_| rng.gen_range(0.05..0.95)).collect();
    cuts.push(0.0);
    cuts.push(1.0);
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-3);
    let pieces: Vec<Piece> = cuts
        .windows(2)
        .map(|w| Piece { from: w[0], to: w[1], coeffs: vec![rng.gen_range(0.1..3.0)] })
        .collect();
    let f = Density::new(Domain::unit(), pieces, None).unwrap();
    let total = f.total().unwrap();
    Density::linear_combine(1.0 / total, &f, 0.0, &Density::constant(1.0)).unwrap()
}

fn criterion_2_common_segments() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let universe = IntervalSet::interval(0.0, 1.0);
    let mut worst = 0.0f64;
    for i in 0..100 {
        let f = random_step_density(&mut rng);
        let g = random_step_density(&mut rng);
        let family = DensityFamily::new(vec![Density::constant(1.0), f, g]).unwrap();
        let seg = common_segment(&family, &universe, 10, 1e-9).unwrap();
        let report = seg.verify();
        assert!(report.endpoints_ok, "family {i}: bad endpoints");
        assert!(
            report.nesting_violations.is_empty(),
            "family {i}: nesting violated at {:?}",
            report.nesting_violations
        );
        assert!(
            report.worst_error() <= 1e-6,
            "family {i}: calibration error {}",
            report.worst_error()
        );
        worst = worst.max(report.worst_error());
    }
    let dt = start.elapsed();
    assert!(dt.as_secs_f64() < 30.0, "segment sweep took {dt:?}");
    pass(2, "100 depth-10 common segments", format!("worst error {worst:.2e}, {dt:?}"));
}

fn criterion_3_brute_force_oracle() {
    let universe = IntervalSet::interval(0.0, 1.0);
    let step = Density::new(
        Domain::unit(),
        vec![
            Piece { from: 0.0, to: 0.5, coeffs: vec![0.5] },
            Piece { from: 0.5, to: 1.0, coeffs: vec![1.5] },
        ],
        None,
    )
    .unwrap();
    for f in [Density::poly_unit(&[0.0, 2.0]), step] {
        let family = DensityFamily::new(vec![Density::constant(1.0), f.clone()]).unwrap();
        let seg = common_segment(&family, &universe, 3, 1e-9).unwrap();
        let mid = &seg.table()[seg.table().len() / 2];
        let built = (mid.measure(), f.integrate_over(mid).unwrap());

        // independent oracle: exhaustive 1/64-grid search for the best
        // half-length window carrying half the f-weight
        let mut best = (f64::INFINITY, 0.0, 0.0);
        for i in 0..=32 {
            let a = i as f64 / 64.0;
            let w = IntervalSet::interval(a, a + 0.5);
            let pair = (w.measure(), f.integrate_over(&w).unwrap());
            let dev = (pair.0 - 0.5).abs().max((pair.1 - 0.5).abs());
            if dev < best.0 {
                best = (dev, pair.0, pair.1);
            }
        }
        assert!((built.0 - best.1).abs() <= 1e-6, "measure {} vs {}", built.0, best.1);
        assert!((built.1 - best.2).abs() <= 1e-6, "weight {} vs {}", built.1, best.2);
    }
    pass(3, "brute-force half-measure oracle", "two densities on the 1/64 grid".into());
}

fn criterion_4_grow_sandwich() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for trial in 0..100u64 {
        let sp = IntervalSpace::fuzzed(IntervalSet::open_interval(0.0, 1.0), trial).unwrap();
        let lo = rng.gen_range(0.0..0.4);
        let hi = rng.gen_range(lo + 0.05..lo + 0.5);
        let a_set = IntervalSet::open_interval(lo, hi.min(0.95));
        let m0 = a_set.measure();
        let target = m0 + rng.gen_range(0.05..1.0 - m0 - 0.01);
        let out = grow_open_to_measure(&sp, &a_set, target, GROW_MAX).unwrap();
        let gap0 = m0 - target;
        for (n, m) in out.trajectory.iter().enumerate() {
            let k = (n + 1) as i32;
            let lower = target + f64::powi(0.75, k) * gap0;
            let upper = target + f64::powi(0.25, k) * gap0;
            assert!(
                *m >= lower - 1e-12 && *m <= upper + 1e-12,
                "trial {trial}, iteration {n}: {m} outside [{lower}, {upper}]"
            );
        }
    }
    pass(4, "open-growth contraction sandwich", "100 fuzzed anchor/target pairs".into());
}

fn criterion_5_common_o_segments() {
    let start = Instant::now();
    // symmetric seed so both weight pairs agree on it
    let d = IntervalSet::interval(0.3, 0.45).union(&IntervalSet::interval(0.55, 0.7));
    let pairs = [
        (Density::poly_unit(&[0.0, 2.0]), Density::constant(1.0)),
        (Density::poly_unit(&[0.0, 2.0]), Density::poly_unit(&[2.0, -2.0])),
    ];
    let mut worst = 0.0f64;
    for (i, (f, g)) in pairs.iter().enumerate() {
        let sp = IntervalSpace::fuzzed(IntervalSet::open_interval(0.0, 1.0), 5 + i as u64).unwrap();
        let seg = common_o_segment(&sp, f, g, &d, 8).unwrap();
        assert!(seg.all_open(), "pair {i}: non-open entry");
        for (r, set) in seg.entries() {
            let ef = (f.integrate_over(set).unwrap() - r).abs();
            let eg = (g.integrate_over(set).unwrap() - r).abs();
            assert!(ef <= 1e-4 && eg <= 1e-4, "pair {i}: defect {ef} / {eg} at {r}");
            worst = worst.max(ef.max(eg));
            assert!(
                d.subtract(set).measure() <= 1e-9,
                "pair {i}: seed not contained at {r}"
            );
        }
    }
    let dt = start.elapsed();
    assert!(dt.as_secs_f64() < 60.0, "O-segment builds took {dt:?}");
    pass(5, "depth-8 common O-segments", format!("worst defect {worst:.2e}, {dt:?}"));
}

fn criterion_6_sigma_branches() {
    let one = Density::one_on_half_line();
    let bump = Density::new(
        Domain::half_line(),
        vec![
            Piece { from: 0.0, to: 1.0, coeffs: vec![2.0] },
            Piece { from: 1.0, to: 2.0, coeffs: vec![0.0] },
        ],
        Some(Tail { c: 0.0 }),
    )
    .unwrap();
    let decay = Density::new(
        Domain::half_line(),
        vec![Piece { from: 0.0, to: 1.0, coeffs: vec![2.0] }],
        Some(Tail { c: -1.0 }),
    )
    .unwrap();

    let s1 = DensityFamily::new(vec![one.clone(), bump.clone()]).unwrap();
    let ex1 = exhaust(&s1, half_line_prefix, 40.0, 8).unwrap();
    assert_eq!(ex1.case_tag, CaseTag::RecurringZeros);
    for (k, stage) in ex1.stages.iter().enumerate() {
        let dev = (bump.integrate_over(stage).unwrap() - stage.measure()).abs();
        assert!(dev <= 1e-6, "recurring stage {k}: deviation {dev}");
    }

    let s2 = DensityFamily::new(vec![one, decay.clone()]).unwrap();
    let ex2 = exhaust(&s2, half_line_prefix, 600.0, 8).unwrap();
    assert_eq!(ex2.case_tag, CaseTag::LastZero);
    for (k, stage) in ex2.stages.iter().enumerate() {
        let dev = (decay.integrate_over(stage).unwrap() - stage.measure()).abs();
        assert!(dev <= 1e-6, "level-matched stage {k}: deviation {dev}");
    }

    let ss = glue(&ex2, &s2, 4).unwrap();
    let mut worst = 0.0f64;
    for &b in ss.boundaries() {
        let u = ss.evaluate(b).unwrap();
        worst = worst.max((u.measure() - b).abs());
        worst = worst.max((decay.integrate_over(&u).unwrap() - b).abs());
    }
    assert!(worst <= 1e-6, "glued boundary calibration {worst}");
    pass(6, "σ-finite exhaustion branches", format!("both cases, k ≤ 8, glue error {worst:.2e}"));
}

fn criterion_7_refutations() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for trial in 0..500 {
        let parts: Vec<Interval> = (0..rng.gen_range(1..=4usize))
            .map(|_| {
                let lo = rng.gen_range(0.0..0.9);
                Interval::closed(lo, (lo + rng.gen_range(0.01..0.3)).min(1.0))
            })
            .collect();
        let e = IntervalSet::from_parts(parts);
        assert!(e.measure() > 0.0);
        let cert = refute_half_set(&e, 1024).unwrap_or_else(|err| {
            panic!("trial {trial}: refutation failed: {err}")
        });
        cert.revalidate(&e).unwrap();
    }
    let half = IntervalSet::open_interval(0.0, 0.5);
    let cert = refute_half_set(&half, 1024).unwrap();
    assert!(cert.q <= 8, "left half refuted only at q = {}", cert.q);
    cert.revalidate(&half).unwrap();
    pass(7, "window-family refutations", format!("500 random sets, left half at q = {}", cert.q));
}

fn criterion_8_block_impossibility() {
    // exhaustive two-level threshold assignments for every N ≤ 12
    for n in 1..=12usize {
        let bs = BlockSpace::new(n).unwrap();
        for mask in 0..(1u64 << n) {
            let ths: Vec<f64> = (0..n)
                .map(|i| if mask >> i & 1 == 1 { 1.0 } else { 0.0 })
                .collect();
            assert!(block_chain_gap(&bs, &ths).unwrap() >= 0.5, "N = {n}, mask {mask}");
        }
    }
    let bs = BlockSpace::new(20).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for trial in 0..1000 {
        let ths: Vec<f64> = (0..20).map(|_| rng.gen::<f64>()).collect();
        assert!(block_chain_gap(&bs, &ths).unwrap() >= 0.5, "random chain {trial}");
    }
    let mut worst = 0.0f64;
    for _ in 0..4096 {
        let target = rng.gen::<f64>();
        let (_, achieved) = greedy_open_measure(&bs, target);
        worst = worst.max((achieved - target).abs());
    }
    assert!(worst <= f64::powi(2.0, -20) + 1e-15, "subset-sum gap {worst}");
    pass(8, "block-space impossibility", format!("all chains jump ≥ 1/2, coverage gap {worst:.2e}"));
}

fn criterion_9_cli_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let dens = dir.path().join("f.json");
    std::fs::write(
        &dens,
        r#"[{"domain":[0.0,1.0],"pieces":[{"from":0.0,"to":1.0,"coeffs":[0.0,2.0]}]}]"#,
    )
    .unwrap();
    let outs: Vec<Vec<u8>> = (0..2)
        .map(|i| {
            let out = dir.path().join(format!("run{i}.jsonl"));
            let status = Command::new(env!("CARGO_BIN_EXE_mseg"))
                .args([
                    "oseg-build",
                    "--densities",
                    dens.to_str().unwrap(),
                    "--depth",
                    "6",
                    "--seed",
                    "7",
                    "--out",
                    out.to_str().unwrap(),
                ])
                .status()
                .unwrap();
            assert!(status.success());
            std::fs::read(&out).unwrap()
        })
        .collect();
    assert_eq!(outs[0], outs[1], "reruns differ");
    assert!(!outs[0].is_empty());
    pass(9, "CLI determinism", format!("{} identical bytes across reruns", outs[0].len()));
}

#[test]
fn acceptance() {
    criterion_1_chords();
    criterion_2_common_segments();
    criterion_3_brute_force_oracle();
    criterion_4_grow_sandwich();
    criterion_5_common_o_segments();
    criterion_6_sigma_branches();
    criterion_7_refutations();
    criterion_8_block_impossibility();
    criterion_9_cli_determinism();
}
