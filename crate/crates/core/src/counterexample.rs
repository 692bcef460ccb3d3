//! Refutation machinery for the infinite family `f_{p,q}`.
//!
//! Each density `f_{p,q}` is the value `q` on the window
//! `I_{p,q} = [(2p−1)/2q, (2p+1)/2q]`.  A set calibrating the whole family
//! at t = 1/2 would need `λ(E ∩ I_{p,q}) = 1/(2q)` for every index, but any
//! set of positive measure is 3/4-dense on some interval `(a, b)`, and
//! summing the assumed equalities over `p` for a `q > 6/(b−a)` bounds
//! `λ(E ∩ (a,b))` by `(b−a)/2 + 3/(2q) < (3/4)(b−a)` — a contradiction.
//! [`refute_half_set`] finds an actually violated index and packages the
//! bound chain into a re-checkable certificate.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::density::{Density, Domain, Piece};
use crate::error::{Error, Result};
use crate::interval_set::{Interval, IntervalSet};

/// |λ(E∩I) − 1/(2q)| above this counts as a violation; interval arithmetic
/// is exact, so this only absorbs float endpoints.
pub const VIOLATION_TOL: f64 = 1e-9;

/// Index of one window density: `0 < p < q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FpqIndex {
    pub p: u32,
    pub q: u32,
}

impl FpqIndex {
    pub fn new(p: u32, q: u32) -> Result<Self> {
        if p == 0 || p >= q {
            return Err(Error::Range(format!(
                "window index requires 0 < p < q, got ({p}, {q})"
            )));
        }
        Ok(FpqIndex { p, q })
    }

    /// The support window `[(2p−1)/2q, (2p+1)/2q]`.
    pub fn window(&self) -> Interval {
        let q = self.q as f64;
        let p = self.p as f64;
        Interval::closed((2.0 * p - 1.0) / (2.0 * q), (2.0 * p + 1.0) / (2.0 * q))
    }
}

/// The density with value `q` on `I_{p,q}` and 0 elsewhere; total mass 1.
pub fn f_pq(p: u32, q: u32) -> Result<Density> {
    let idx = FpqIndex::new(p, q)?;
    let w = idx.window();
    let mut pieces = Vec::with_capacity(3);
    if w.lo > 0.0 {
        pieces.push(Piece { from: 0.0, to: w.lo, coeffs: vec![0.0] });
    }
    pieces.push(Piece { from: w.lo, to: w.hi, coeffs: vec![q as f64] });
    if w.hi < 1.0 {
        pieces.push(Piece { from: w.hi, to: 1.0, coeffs: vec![0.0] });
    }
    Density::new(Domain::unit(), pieces, None)
}

/// An interval on which `E` has density at least `r`: the densest single
/// part of `E`.
pub fn dense_interval(e: &IntervalSet, r: f64) -> Result<Interval> {
    if !(0.0..1.0).contains(&r) {
        return Err(Error::Range(format!("density threshold {r} outside [0, 1)")));
    }
    if e.measure() <= 0.0 {
        return Err(Error::Validation(
            "dense interval needs a set of positive measure".into(),
        ));
    }
    let best = e
        .parts()
        .iter()
        .max_by(|a, b| a.length().partial_cmp(&b.length()).unwrap())
        .unwrap();
    Ok(*best)
}

/// [`dense_interval`] along the covering argument instead: dilates `E` into
/// an open cover `U` of excess below `(1−r)·λ(E)` and scans the components
/// of `U` for one on which `E` is `r`-dense; such a component must exist,
/// since otherwise `λ(E) < r·λ(U) < r·λ(E) + r·(1−r)·λ(E)/r`.
pub fn dense_interval_cover(e: &IntervalSet, r: f64, seed: u64) -> Result<Interval> {
    if !(0.0..1.0).contains(&r) {
        return Err(Error::Range(format!("density threshold {r} outside [0, 1)")));
    }
    let total = e.measure();
    if total <= 0.0 {
        return Err(Error::Validation(
            "dense interval needs a set of positive measure".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let eps = 0.5 * (1.0 - r) * total;
    let cap = eps / (2.0 * e.parts().len() as f64);
    let cover = IntervalSet::from_parts(
        e.parts()
            .iter()
            .map(|p| {
                Interval::open(p.lo - rng.gen_range(0.0..cap), p.hi + rng.gen_range(0.0..cap))
            })
            .collect(),
    );
    for comp in cover.parts() {
        let inside = e.intersect(&IntervalSet::interval(comp.lo, comp.hi)).measure();
        if inside >= r * comp.length() {
            return Ok(*comp);
        }
    }
    Err(Error::Resolution(
        "no cover component reached the density threshold".into(),
    ))
}

/// One violated window equality.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub p: u32,
    pub q: u32,
    /// λ(E ∩ I_{p,q}) as measured.
    pub measured: f64,
    /// 1/(2q), the value a common calibrating set would need.
    pub expected: f64,
}

/// Certificate that `E` fails the window equalities: the violated indices,
/// plus the interval and bound chain showing a violation was unavoidable.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RefutationCertificate {
    /// Interval on which `E` is 3/4-dense (the whole unit interval for the
    /// trivial measure-zero branch).
    pub interval: (f64, f64),
    /// The denominator at which the recorded violations occur.
    pub q: u32,
    pub violations: Vec<Violation>,
    /// `(b−a)/2 + 3/(2 q̄)` with `q̄` the least integer above `6/(b−a)`:
    /// what the assumed equalities would force λ(E∩(a,b)) below.
    pub bound_lhs: f64,
    /// `(3/4)(b−a)`, which λ(E∩(a,b)) actually exceeds.
    pub bound_rhs: f64,
}

impl RefutationCertificate {
    /// Recomputes every recorded measurement from `e` and rechecks the
    /// bound chain.
    pub fn revalidate(&self, e: &IntervalSet) -> Result<()> {
        if self.violations.is_empty() {
            return Err(Error::Validation("certificate records no violation".into()));
        }
        for v in &self.violations {
            let idx = FpqIndex::new(v.p, v.q)?;
            let w = idx.window();
            let measured = e.intersect(&IntervalSet::interval(w.lo, w.hi)).measure();
            if (measured - v.measured).abs() > 1e-12 {
                return Err(Error::Validation(format!(
                    "recorded measure {} for ({}, {}) does not reproduce ({measured})",
                    v.measured, v.p, v.q
                )));
            }
            if (measured - v.expected).abs() <= VIOLATION_TOL {
                return Err(Error::Validation(format!(
                    "index ({}, {}) is not actually violated",
                    v.p, v.q
                )));
            }
        }
        if self.bound_lhs >= self.bound_rhs {
            return Err(Error::Validation(format!(
                "bound chain fails: {} >= {}",
                self.bound_lhs, self.bound_rhs
            )));
        }
        Ok(())
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "interval": [self.interval.0, self.interval.1],
            "q": self.q,
            "violations": self.violations,
            "bound": { "lhs": self.bound_lhs, "rhs": self.bound_rhs },
        })
    }
}

/// Shows that `E` cannot calibrate the whole window family at t = 1/2.
///
/// Scans denominators upward for the first `q` with a violated window
/// equality and returns it together with the density interval and bound
/// chain that guarantee such a violation below `q̄ = ⌈6/(b−a)⌉ + 1`.  Fails
/// with a capacity error naming the required denominator when `q_max` stops
/// the scan before the guaranteed range.
pub fn refute_half_set(e: &IntervalSet, q_max: u32) -> Result<RefutationCertificate> {
    let unit = IntervalSet::interval(0.0, 1.0);
    if e.subtract(&unit).measure() > 1e-12 {
        return Err(Error::Range("set must lie inside the unit interval".into()));
    }
    if q_max < 2 {
        return Err(Error::Range("q_max must be at least 2".into()));
    }

    // the bound-chain interval: trivial for null sets
    let (a, b) = if e.measure() <= 0.0 {
        (0.0, 1.0)
    } else {
        let j = dense_interval(e, 0.75)?;
        (j.lo, j.hi)
    };
    let q_chain = (6.0 / (b - a)).floor() as u32 + 1;
    let bound_lhs = (b - a) / 2.0 + 3.0 / (2.0 * q_chain as f64);
    let bound_rhs = 0.75 * (b - a);

    for q in 2..=q_max {
        let mut violations = Vec::new();
        for p in 1..q {
            let w = FpqIndex::new(p, q)?.window();
            let measured = e.intersect(&IntervalSet::interval(w.lo, w.hi)).measure();
            let expected = 1.0 / (2.0 * q as f64);
            if (measured - expected).abs() > VIOLATION_TOL {
                violations.push(Violation { p, q, measured, expected });
            }
        }
        if !violations.is_empty() {
            return Ok(RefutationCertificate {
                interval: (a, b),
                q,
                violations,
                bound_lhs,
                bound_rhs,
            });
        }
    }
    Err(Error::Capacity(format!(
        "no violation up to q_max = {q_max}; the density interval ({a}, {b}) guarantees one by q = {q_chain}"
    )))
}

/// [`refute_half_set`] for sets beyond the unit interval, after folding:
/// picks the first unit window `[k, k+1)` meeting `E` in positive measure
/// and refutes its shift into `[0, 1)`.
pub fn refute_half_set_periodized(e: &IntervalSet, q_max: u32) -> Result<RefutationCertificate> {
    if e.is_empty() {
        return refute_half_set(e, q_max);
    }
    let lo = e.inf().unwrap().floor();
    let hi = e.sup().unwrap().ceil();
    let mut k = lo;
    while k < hi {
        let window = IntervalSet::interval(k, k + 1.0);
        let chunk = e.intersect(&window);
        if chunk.measure() > 0.0 {
            let shifted = IntervalSet::from_parts(
                chunk
                    .parts()
                    .iter()
                    .map(|p| Interval { lo: p.lo - k, hi: p.hi - k, ..*p })
                    .collect(),
            );
            return refute_half_set(&shifted, q_max);
        }
        k += 1.0;
    }
    refute_half_set(&IntervalSet::empty(), q_max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f_pq_examples() {
        let f = f_pq(1, 2).unwrap();
        assert_eq!(f.value(0.5), 2.0);
        assert_eq!(f.value(0.2), 0.0);
        assert!((f.total().unwrap() - 1.0).abs() < 1e-15);
        let f = f_pq(1, 4).unwrap();
        assert_eq!(f.value(0.25), 4.0);
        assert_eq!(f.value(0.5), 0.0);
        assert!((f.total().unwrap() - 1.0).abs() < 1e-15);
        assert!(matches!(f_pq(3, 2), Err(Error::Range(_))));
    }

    #[test]
    fn f_pq_unit_mass_sweep() {
        for q in 2..20 {
            for p in 1..q {
                let f = f_pq(p, q).unwrap();
                assert!((f.total().unwrap() - 1.0).abs() < 1e-12, "({p}, {q})");
            }
        }
    }

    #[test]
    fn dense_interval_single_part() {
        let e = IntervalSet::open_interval(0.2, 0.4);
        let j = dense_interval(&e, 0.9).unwrap();
        assert_eq!((j.lo, j.hi), (0.2, 0.4));
    }

    #[test]
    fn dense_interval_picks_a_full_component() {
        let e = IntervalSet::interval(0.0, 0.1).union(&IntervalSet::interval(0.5, 0.6));
        let j = dense_interval(&e, 0.99).unwrap();
        let inside = e.intersect(&IntervalSet::interval(j.lo, j.hi)).measure();
        assert!(inside >= 0.99 * j.length());
    }

    #[test]
    fn dense_interval_cover_property() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for trial in 0..50 {
            let mut parts = Vec::new();
            let mut x = 0.0;
            while x < 0.95 {
                let len = rng.gen_range(0.01..0.08);
                let gap = rng.gen_range(0.0..0.05);
                parts.push(Interval::closed(x, (x + len).min(1.0)));
                x += len + gap;
            }
            let e = IntervalSet::from_parts(parts);
            let j = dense_interval_cover(&e, 0.75, trial).unwrap();
            let inside = e.intersect(&IntervalSet::interval(j.lo, j.hi)).measure();
            assert!(inside >= 0.75 * j.length() - 1e-12);
        }
    }

    #[test]
    fn refute_left_half() {
        let e = IntervalSet::open_interval(0.0, 0.5);
        let cert = refute_half_set(&e, 8).unwrap();
        assert!(cert.q <= 8);
        cert.revalidate(&e).unwrap();
        assert!(cert.bound_lhs < cert.bound_rhs);
    }

    #[test]
    fn refute_empty_trivial_branch() {
        let cert = refute_half_set(&IntervalSet::empty(), 4).unwrap();
        assert_eq!(cert.interval, (0.0, 1.0));
        cert.revalidate(&IntervalSet::empty()).unwrap();
        // every window misses the empty set entirely
        assert!(cert.violations.iter().all(|v| v.measured == 0.0));
    }

    #[test]
    fn refute_wide_interval() {
        let e = IntervalSet::open_interval(0.1, 0.9);
        let cert = refute_half_set(&e, 16).unwrap();
        cert.revalidate(&e).unwrap();
        // a window fully inside E is measured whole: 1/q, not 1/2q
        assert!(cert
            .violations
            .iter()
            .any(|v| (v.measured - 2.0 * v.expected).abs() < 1e-12));
    }

    #[test]
    fn refute_certificate_json_shape() {
        let e = IntervalSet::open_interval(0.0, 0.5);
        let cert = refute_half_set(&e, 8).unwrap();
        let j = cert.to_json();
        assert!(j["interval"].as_array().unwrap().len() == 2);
        assert!(j["q"].as_u64().is_some());
        assert!(j["bound"]["lhs"].as_f64().unwrap() < j["bound"]["rhs"].as_f64().unwrap());
        assert!(!j["violations"].as_array().unwrap().is_empty());
    }

    #[test]
    fn refute_periodized_shifts_into_unit() {
        let e = IntervalSet::open_interval(2.0, 2.5);
        let cert = refute_half_set_periodized(&e, 8).unwrap();
        let shifted = IntervalSet::open_interval(0.0, 0.5);
        cert.revalidate(&shifted).unwrap();
    }

    #[test]
    fn refute_capacity_reports_required_q() {
        // a set meeting every window at exactly half its length for q = 2
        // cannot exist, so any positive-measure set fails quickly; exercise
        // the capacity path with a tiny q_max on a set already balanced at
        // q = 2
        let e = IntervalSet::interval(0.25, 0.5);
        let cert = refute_half_set(&e, 8);
        assert!(cert.is_ok());
        match refute_half_set(&IntervalSet::interval(0.375, 0.625), 2) {
            // balanced at q = 2: λ(E∩[1/4,3/4]) = 1/4 exactly
            Err(Error::Capacity(msg)) => assert!(msg.contains("q =")),
            other => panic!("expected capacity error, got {other:?}"),
        }
    }
}
