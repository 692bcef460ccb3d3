//! O-segments: segments all of whose sets are open.
//!
//! The constructions here run behind a [`SpaceAdapter`] oracle supplying the
//! two primitives of a nonatomic weakly-outer-regular space: extracting a
//! subset of prescribed measure and covering a set by an open set of nearly
//! the same measure.  On exact interval spaces every iteration collapses to
//! one step; the fuzzed adapter perturbs both primitives so the actual
//! contraction arguments are exercised.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::atomic::{AtomicU64, Ordering};

use crate::density::{Density, DensityFamily};
use crate::error::{Error, Result};
use crate::interval_set::{Interval, IntervalSet};
use crate::segment::bisect_chord;

/// Measure tolerance targeted by the iterative builders.
pub const GROW_TOL: f64 = 1e-9;
/// Default iteration cap for [`grow_open_to_measure`].
pub const GROW_MAX: usize = 200;
/// Grid resolution of root-finding pre-scans.
const SCAN: usize = 1024;
/// |F| below this counts as a zero of the calibration defect.
const ZERO_TOL: f64 = 1e-9;
/// Slack allowed on measure-based containment checks.
const NULL_TOL: f64 = 1e-9;

/// Oracle interface to a nonatomic topological measure space whose sets are
/// represented as interval-sets.
///
/// `extract_subset` realizes nonatomicity: any measurable set contains
/// subsets of every intermediate measure.  `approx_open` realizes weak outer
/// regularity: any set has an open cover of excess measure below `eps`.
/// Implementations must be safe for concurrent queries; randomized adapters
/// derive per-call randomness from (seed, call-index) so parallel schedules
/// stay reproducible.
pub trait SpaceAdapter: Sync {
    fn universe(&self) -> &IntervalSet;

    /// True when both primitives are exact rather than perturbed.  Exact
    /// adapters let the iterative growers finish in one step.
    fn is_exact(&self) -> bool;

    /// Some `B ⊆ D` with `μ(B) = m`.
    fn extract_subset(&self, d: &IntervalSet, m: f64) -> Result<IntervalSet>;

    /// Some open `O` with `μ(A\O) = 0` and `μ(O\A) < eps`.
    fn approx_open(&self, a: &IntervalSet, eps: f64) -> Result<IntervalSet>;
}

/// Interval space on an open universe, in exact or fuzzed mode.
///
/// Exact mode extracts leftmost mass prefixes and covers sets by their
/// interiors.  Fuzzed mode extracts a randomly offset mass window and dilates
/// each part of the open hull by independent uniform amounts summing to less
/// than `eps`.
pub struct IntervalSpace {
    universe: IntervalSet,
    seed: Option<u64>,
    calls: AtomicU64,
}

impl IntervalSpace {
    pub fn exact(universe: IntervalSet) -> Result<Self> {
        Self::with_seed(universe, None)
    }

    pub fn fuzzed(universe: IntervalSet, seed: u64) -> Result<Self> {
        Self::with_seed(universe, Some(seed))
    }

    fn with_seed(universe: IntervalSet, seed: Option<u64>) -> Result<Self> {
        if !universe.is_open() {
            return Err(Error::Validation(
                "interval-space universe must be open".into(),
            ));
        }
        Ok(IntervalSpace { universe, seed, calls: AtomicU64::new(0) })
    }

    fn rng(&self, seed: u64) -> ChaCha8Rng {
        let call = self.calls.fetch_add(1, Ordering::Relaxed);
        ChaCha8Rng::seed_from_u64(seed ^ call.wrapping_mul(0x9E37_79B9_7F4A_7C15))
    }
}

impl SpaceAdapter for IntervalSpace {
    fn universe(&self) -> &IntervalSet {
        &self.universe
    }

    fn is_exact(&self) -> bool {
        self.seed.is_none()
    }

    fn extract_subset(&self, d: &IntervalSet, m: f64) -> Result<IntervalSet> {
        let md = d.measure();
        if !(-1e-12..=md + 1e-12).contains(&m) {
            return Err(Error::Range(format!(
                "extraction mass {m} outside [0, {md}]"
            )));
        }
        let m = m.clamp(0.0, md);
        match self.seed {
            None => Ok(d.mass_window(0.0, m)),
            Some(seed) => {
                let off = self.rng(seed).gen_range(0.0..=(md - m).max(0.0));
                Ok(d.mass_window(off, off + m))
            }
        }
    }

    fn approx_open(&self, a: &IntervalSet, eps: f64) -> Result<IntervalSet> {
        if eps <= 0.0 {
            return Err(Error::Range("approx_open requires eps > 0".into()));
        }
        if a.is_empty() {
            return Ok(IntervalSet::empty());
        }
        match self.seed {
            None => Ok(a.interior()),
            Some(seed) => {
                let mut rng = self.rng(seed);
                let k = a.parts().len() as f64;
                let cap = eps / (4.0 * k);
                let parts = a
                    .parts()
                    .iter()
                    .map(|p| {
                        Interval::open(
                            p.lo - rng.gen_range(0.0..cap),
                            p.hi + rng.gen_range(0.0..cap),
                        )
                    })
                    .collect();
                Ok(IntervalSet::from_parts(parts).intersect(&self.universe))
            }
        }
    }
}

/// μ(x \ y) up to null sets.
fn excess(x: &IntervalSet, y: &IntervalSet) -> f64 {
    x.subtract(y).measure()
}

/// Result of [`grow_open_to_measure`]: the grown open plus the measure after
/// each iteration, for inspecting the contraction rate.
#[derive(Debug, Clone)]
pub struct GrownOpen {
    pub set: IntervalSet,
    pub trajectory: Vec<f64>,
}

/// Grows the open set `a_set` to an open superset of measure `target`.
///
/// Each round extracts half the missing mass from the complement and adds an
/// open cover of it with excess below a quarter of the missing mass, so the
/// deficit contracts by a factor in [1/4, 3/4] per round.  Exact adapters
/// extract the full deficit instead and finish in one round.
pub fn grow_open_to_measure<S: SpaceAdapter + ?Sized>(
    sp: &S,
    a_set: &IntervalSet,
    target: f64,
    n_max: usize,
) -> Result<GrownOpen> {
    let within = sp.universe().clone();
    grow_open_within(sp, a_set, &within, target, n_max)
}

/// [`grow_open_to_measure`] with the complement taken inside `within`
/// instead of the full universe; the result stays inside `within ∪ a_set`.
fn grow_open_within<S: SpaceAdapter + ?Sized>(
    sp: &S,
    a_set: &IntervalSet,
    within: &IntervalSet,
    target: f64,
    n_max: usize,
) -> Result<GrownOpen> {
    if !a_set.is_open() {
        return Err(Error::Validation("grow anchor must be open".into()));
    }
    let m0 = a_set.measure();
    let cap = within.measure() + excess(a_set, within);
    if target < m0 - NULL_TOL || target > cap + NULL_TOL {
        return Err(Error::Range(format!(
            "grow target {target} outside [{m0}, {cap}]"
        )));
    }
    let mut o = a_set.clone();
    let mut traj = Vec::new();
    for _ in 0..n_max {
        let gap = target - o.measure();
        if gap <= GROW_TOL {
            break;
        }
        let room = within.subtract(&o);
        let want = if sp.is_exact() { gap } else { gap / 2.0 };
        let piece = sp.extract_subset(&room, want.min(room.measure()))?;
        if excess(&piece, &room) > NULL_TOL || (piece.measure() - want).abs() > NULL_TOL {
            return Err(Error::Oracle(
                "extract_subset returned a set of the wrong mass or location".into(),
            ));
        }
        let eps = if sp.is_exact() { GROW_TOL } else { gap / 4.0 };
        let cover = sp.approx_open(&piece, eps)?.intersect(within);
        if !cover.is_open() || excess(&piece, &cover) > NULL_TOL {
            return Err(Error::Oracle(
                "approx_open failed to cover the extracted set".into(),
            ));
        }
        if excess(&cover, &piece) >= eps + NULL_TOL {
            return Err(Error::Oracle(
                "approx_open exceeded its excess budget".into(),
            ));
        }
        o = o.union(&cover);
        traj.push(o.measure());
    }
    if (o.measure() - target).abs() > GROW_TOL {
        return Err(Error::Resolution(format!(
            "open growth stalled at measure {} short of {target}",
            o.measure()
        )));
    }
    Ok(GrownOpen { set: o, trajectory: traj })
}

/// An increasing family of open sets indexed by their own measure values.
///
/// `evaluate(t)` returns the largest entry whose index does not exceed `t`:
/// the lower envelope of the table, which is also how a finite table inverts
/// its (strictly increasing) calibration map.
#[derive(Debug, Clone)]
pub struct OpenSegment {
    entries: Vec<(f64, IntervalSet)>,
}

impl OpenSegment {
    fn from_entries(mut entries: Vec<(f64, IntervalSet)>) -> Result<Self> {
        entries.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let mut kept: Vec<(f64, IntervalSet)> = Vec::with_capacity(entries.len());
        for (r, set) in entries {
            if let Some((pr, pset)) = kept.last() {
                if (r - pr).abs() <= 1e-12 && excess(&set, pset) <= NULL_TOL {
                    continue;
                }
                if excess(pset, &set) > NULL_TOL {
                    return Err(Error::Validation(format!(
                        "open-segment entries not nested at index {r}"
                    )));
                }
            }
            kept.push((r, set));
        }
        if kept.is_empty() {
            return Err(Error::Validation("open segment needs at least one entry".into()));
        }
        Ok(OpenSegment { entries: kept })
    }

    pub fn entries(&self) -> &[(f64, IntervalSet)] {
        &self.entries
    }

    /// Smallest and largest index values covered.
    pub fn range(&self) -> (f64, f64) {
        (self.entries[0].0, self.entries[self.entries.len() - 1].0)
    }

    pub fn evaluate(&self, t: f64) -> Result<&IntervalSet> {
        let (lo, hi) = self.range();
        if t < lo - NULL_TOL || t > hi + NULL_TOL {
            return Err(Error::Range(format!(
                "index {t} outside the covered range [{lo}, {hi}]"
            )));
        }
        let i = self
            .entries
            .partition_point(|(r, _)| *r <= t + 1e-12)
            .saturating_sub(1);
        Ok(&self.entries[i].1)
    }

    pub fn all_open(&self) -> bool {
        self.entries.iter().all(|(_, s)| s.is_open())
    }
}

/// Dyadic O-segment anchored at the open set `a`: `2^depth` open steps from
/// ∅ up to `a` inside `a`, then `2^depth` steps from `a` up to the universe.
pub fn o_segment<S: SpaceAdapter + ?Sized>(
    sp: &S,
    a: &IntervalSet,
    depth: u32,
) -> Result<OpenSegment> {
    let x = sp.universe().clone();
    let total = x.measure();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::Validation(format!(
            "universe measure {total} is not normalized to 1"
        )));
    }
    if !a.is_open() {
        return Err(Error::Validation("o_segment anchor must be open".into()));
    }
    if excess(a, &x) > NULL_TOL {
        return Err(Error::Validation("anchor must lie inside the universe".into()));
    }
    let ma = a.measure();
    let n = 1u64 << depth;
    let mut entries = vec![(0.0, IntervalSet::empty())];
    // lower half: the same dyadic argument with `a` as the universe
    let mut cur = IntervalSet::empty();
    for m in 1..n {
        let target = m as f64 / n as f64 * ma;
        if target - cur.measure() <= GROW_TOL {
            continue;
        }
        cur = grow_open_within(sp, &cur, a, target, GROW_MAX)?.set;
        entries.push((cur.measure(), cur.clone()));
    }
    if ma > GROW_TOL {
        entries.push((ma, a.clone()));
    }
    let mut cur = a.clone();
    for m in 1..n {
        let target = ma + m as f64 / n as f64 * (1.0 - ma);
        if target - cur.measure() <= GROW_TOL {
            continue;
        }
        cur = grow_open_within(sp, &cur, &x, target, GROW_MAX)?.set;
        entries.push((cur.measure(), cur.clone()));
    }
    entries.push((total, x));
    OpenSegment::from_entries(entries)
}

/// Partial O-segment through a measurable set `a`: every entry `u(t)` is
/// open with `μ(a \ u(t)) = 0`, covering indices from just above `μ(a)` up
/// to 1.
///
/// Builds the decreasing open covers `V_i = ∩_{j≤i} approx_open(a, 2^{−j})`
/// and bridges each band `V_{i+1} → V_i` by open growth, then climbs from
/// `V_1` to the universe in `2^depth` dyadic steps.
pub fn o_segment_through<S: SpaceAdapter + ?Sized>(
    sp: &S,
    a: &IntervalSet,
    depth: u32,
) -> Result<OpenSegment> {
    let x = sp.universe().clone();
    if (x.measure() - 1.0).abs() > 1e-9 {
        return Err(Error::Validation(
            "universe measure is not normalized to 1".into(),
        ));
    }
    if excess(a, &x) > NULL_TOL {
        return Err(Error::Validation("set must lie inside the universe".into()));
    }
    let mut covers = Vec::with_capacity(depth as usize);
    let mut vcur = x.clone();
    for i in 1..=depth {
        let o = sp.approx_open(a, 2f64.powi(-(i as i32)))?;
        vcur = vcur.intersect(&o);
        if excess(a, &vcur) > NULL_TOL {
            return Err(Error::Oracle(
                "approx_open dropped a positive part of the covered set".into(),
            ));
        }
        covers.push(vcur.clone());
    }
    let mut entries = Vec::new();
    let mut cur = covers.last().cloned().unwrap_or_else(|| x.clone());
    entries.push((cur.measure(), cur.clone()));
    for top in covers.iter().rev().skip(1) {
        let mid = 0.5 * (cur.measure() + top.measure());
        if mid - cur.measure() > GROW_TOL {
            cur = grow_open_within(sp, &cur, top, mid, GROW_MAX)?.set;
            entries.push((cur.measure(), cur.clone()));
        }
        cur = top.clone();
        entries.push((cur.measure(), cur.clone()));
    }
    let base = cur.measure();
    let n = 1u64 << depth;
    for m in 1..n {
        let target = base + m as f64 / n as f64 * (1.0 - base);
        if target - cur.measure() <= GROW_TOL {
            continue;
        }
        cur = grow_open_within(sp, &cur, &x, target, GROW_MAX)?.set;
        entries.push((cur.measure(), cur.clone()));
    }
    entries.push((1.0, x));
    OpenSegment::from_entries(entries)
}

/// Continuous increasing family of open sets calibrated for one weighted
/// measure: `at(t)` is the anchor plus the leftmost open `g`-mass prefix of
/// the remaining block, so `μ_g(at(t)) = t` for all `t` in
/// `[base_value, top_value]`.
///
/// This is the per-block O-segment for `μ_g` through the anchor that the
/// open bridge consumes; `g` must be nonnegative on the block.
pub struct PrefixOpenFamily<'a> {
    base: IntervalSet,
    rest: IntervalSet,
    within: IntervalSet,
    g: &'a Density,
    base_value: f64,
    top_value: f64,
}

impl<'a> PrefixOpenFamily<'a> {
    /// `base` open anchor, `rest` the remaining block material (disjoint
    /// from `base`), `within` the open block everything must stay inside.
    pub fn new(
        base: IntervalSet,
        rest: IntervalSet,
        g: &'a Density,
        within: IntervalSet,
    ) -> Result<Self> {
        if !base.is_open() {
            return Err(Error::Validation("prefix-family anchor must be open".into()));
        }
        let base_value = g.integrate_over(&base)?;
        let top_value = base_value + g.integrate_over(&rest)?;
        Ok(PrefixOpenFamily { base, rest, within, g, base_value, top_value })
    }

    pub fn base_value(&self) -> f64 {
        self.base_value
    }

    pub fn top_value(&self) -> f64 {
        self.top_value
    }

    pub fn within(&self) -> &IntervalSet {
        &self.within
    }

    pub fn at(&self, t: f64) -> Result<IntervalSet> {
        if t < self.base_value - NULL_TOL || t > self.top_value + NULL_TOL {
            return Err(Error::Range(format!(
                "family index {t} outside [{}, {}]",
                self.base_value, self.top_value
            )));
        }
        let extra = t - self.base_value;
        if extra <= 1e-15 {
            return Ok(self.base.clone());
        }
        let w = weighted_prefix(self.g, &self.rest, extra);
        Ok(self.base.union(&w.interior()))
    }
}

/// Leftmost subset of `set` of `g`-mass `target` (`g ≥ 0` on `set`).
fn weighted_prefix(g: &Density, set: &IntervalSet, target: f64) -> IntervalSet {
    if target <= 1e-15 {
        return IntervalSet::empty();
    }
    let mut acc = 0.0;
    let mut parts: Vec<Interval> = Vec::new();
    for p in set.parts() {
        let w = g.integrate_interval(p.lo, p.hi);
        if acc + w < target - 1e-15 {
            parts.push(*p);
            acc += w;
            continue;
        }
        let need = target - acc;
        let (mut lo, mut hi) = (p.lo, p.hi);
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if g.integrate_interval(p.lo, mid) < need {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let cut = 0.5 * (lo + hi);
        if cut > p.lo {
            parts.push(Interval { lo: p.lo, hi: cut, lo_open: p.lo_open, hi_open: false });
        }
        return IntervalSet::from_parts(parts);
    }
    set.clone()
}

/// Subset of `material` carrying the fraction `alpha` of both the `f`- and
/// the `g`-weight at once, built by dyadic halving: each chord of the
/// `f`-weight along the `g`-mass sweep splits the remaining material into
/// halves of both weights, and the binary digits of `alpha` pick a side.
fn calibrated_subset(
    f: &Density,
    g: &Density,
    material: &IntervalSet,
    alpha: f64,
) -> Result<IntervalSet> {
    let mut s = IntervalSet::empty();
    let mut rem = material.clone();
    let mut frac = alpha.clamp(0.0, 1.0);
    for _ in 0..48 {
        if frac <= 1e-13 {
            break;
        }
        if frac >= 1.0 - 1e-13 {
            s = s.union(&rem);
            break;
        }
        let gap_f = f.integrate_over(&rem)?;
        let gap_g = g.integrate_over(&rem)?;
        if gap_f.min(gap_g) <= 1e-12 {
            break;
        }
        let chord = bisect_chord(
            |t| {
                f.integrate_over(&weighted_prefix(g, &rem, t * gap_g))
                    .unwrap_or(f64::NAN)
                    / gap_f
            },
            1e-10f64.max(1e-13 / gap_f),
        )?;
        let z_lo = weighted_prefix(g, &rem, chord.c * gap_g);
        let z_hi = weighted_prefix(g, &rem, chord.d * gap_g);
        let win = z_hi.subtract(&z_lo);
        if frac >= 0.5 {
            s = s.union(&win);
            rem = rem.subtract(&win);
            frac = 2.0 * (frac - 0.5);
        } else {
            rem = win;
            frac *= 2.0;
        }
    }
    Ok(s)
}

/// Open bridge: finds an open `U ⊇ B` with `μ_f(U) = μ_g(U) ∈ (a, a+eps)`.
///
/// `v` is an O-segment for `μ_g` through `B`.  The bridge first re-anchors
/// the family at an interior set carrying `f`- and `g`-weight `a` at once
/// (dyadic chords), so the calibration defect `F(t) = μ_f(v(t)) − μ_g(v(t))`
/// vanishes at `a`.  Then `F` either has a zero just above `a` (take `v`
/// there) or keeps one sign up to its first zero `t_0`; in the latter case a
/// thin band `C = v(t_0)\v(t_2)` carrying half the defect at `t_3` is
/// covered by a small open `W`, and the perturbed defect
/// `G(t) = ∫_{v(t) ∪ W} (f−g) dμ` changes sign on `[a, t_3]`, so its root
/// lands `U = v(t*) ∪ W` inside the target window.
pub fn step1_bridge<S: SpaceAdapter + ?Sized>(
    sp: &S,
    f: &Density,
    g: &Density,
    v: &PrefixOpenFamily,
    b: &IntervalSet,
    a: f64,
    eps: f64,
) -> Result<IntervalSet> {
    if eps <= 0.0 {
        return Err(Error::Range("bridge window eps must be positive".into()));
    }
    if a < v.base_value() - NULL_TOL || a >= v.top_value() {
        return Err(Error::Range(format!(
            "bridge anchor {a} outside the family range [{}, {})",
            v.base_value(),
            v.top_value()
        )));
    }
    // re-anchor at a set of equal weights a
    let span = v.top_value() - v.base_value();
    let alpha = ((a - v.base_value()) / span).clamp(0.0, 1.0);
    let v2;
    let v = if alpha > 1e-12 {
        let s = calibrated_subset(f, g, &v.rest, alpha)?;
        let core = v.base.union(&s.interior());
        let rest = v.rest.subtract(&s);
        v2 = PrefixOpenFamily::new(core, rest, v.g, v.within.clone())?;
        &v2
    } else {
        v
    };
    let a = v.base_value();
    let top = v.top_value();
    let h = Density::linear_combine(1.0, f, -1.0, g)?;
    let fdef = |t: f64| -> Result<f64> { h.integrate_over(&v.at(t)?) };

    let finish = |u: IntervalSet| -> Result<IntervalSet> {
        if excess(b, &u) > NULL_TOL {
            return Err(Error::Resolution(
                "bridge result does not contain the anchor set".into(),
            ));
        }
        let (mf, mg) = (f.integrate_over(&u)?, g.integrate_over(&u)?);
        if (mf - mg).abs() > 1e-6 {
            return Err(Error::Resolution(format!(
                "bridge calibration defect {} above tolerance",
                mf - mg
            )));
        }
        if mg < a - NULL_TOL || mg > a + eps + NULL_TOL {
            return Err(Error::Resolution(format!(
                "bridge landed at weight {mg} outside ({a}, {})",
                a + eps
            )));
        }
        Ok(u)
    };

    // zero of F inside the window itself: take v there
    let hi = (a + eps).min(top);
    let coarse = 64;
    let mut prev_t = a;
    let mut prev_f = fdef(a)?;
    let mut window_zero = None;
    for i in 1..=coarse {
        let t = a + i as f64 / coarse as f64 * (hi - a);
        let ft = fdef(t)?;
        if ft.abs() <= ZERO_TOL {
            window_zero = Some(t);
            break;
        }
        if prev_f != 0.0 && ft.signum() != prev_f.signum() {
            window_zero = Some(bisect_value(&fdef, prev_t, t, prev_f)?);
            break;
        }
        prev_t = t;
        prev_f = ft;
    }
    if let Some(t) = window_zero {
        if t > a + 1e-15 {
            return finish(v.at(t)?);
        }
    }

    // first zero t_0 of F at or beyond the window
    let mut t0 = top;
    let mut prev_t = hi;
    let mut prev_f = fdef(hi)?;
    let sign = prev_f.signum();
    for i in 1..=SCAN {
        let t = hi + i as f64 / SCAN as f64 * (top - hi);
        let ft = fdef(t)?;
        if ft.abs() <= ZERO_TOL {
            t0 = t;
            break;
        }
        if ft.signum() != sign {
            t0 = bisect_value(&fdef, prev_t, t, prev_f)?;
            break;
        }
        prev_t = t;
        prev_f = ft;
    }
    // mirror the F > 0 case by negating f − g
    let s = if sign > 0.0 { -1.0 } else { 1.0 };
    let hh = Density::linear_combine(s, f, -s, g)?;
    let fneg = |t: f64| -> Result<f64> { hh.integrate_over(&v.at(t)?) };

    // residual defect at the anchor itself; the band machinery needs the
    // defect at t_3 to dominate it
    let eta = fneg(a)?.abs();
    let (mut t2, mut t3) = (t0, a);
    let mut bounded = false;
    for j in 1..=40 {
        t3 = a + eps / f64::powi(2.0, j);
        if t3 >= t0 {
            continue;
        }
        let f3 = fneg(t3)?;
        if f3 >= -(8.0 * eta).max(1e-12) {
            // the defect already vanished this close to the anchor
            return finish(v.at(t3)?);
        }
        let level = f3 / 2.0;
        t2 = last_crossing(&fneg, t3, t0, level)?;
        if (t3 - a) + (t0 - t2) < eps / 2.0 {
            bounded = true;
            break;
        }
    }
    if !bounded {
        return Err(Error::Resolution(
            "bridge band selection did not fit the eps/2 budget".into(),
        ));
    }

    let c_band = v.at(t0)?.subtract(&v.at(t2)?);
    let half = -fneg(t2)? / 2.0;
    let fam = DensityFamily::new(vec![hh.clone()])?;
    let delta = (eps / 2.0).min(fam.ui_delta(half.max(1e-12))?);
    let w = sp.approx_open(&c_band, delta)?.intersect(v.within());
    if !w.is_open() || excess(&c_band, &w) > NULL_TOL {
        return Err(Error::Oracle(
            "approx_open failed to cover the defect band".into(),
        ));
    }
    if hh.integrate_abs_over(&w.subtract(&c_band))? > half + ZERO_TOL {
        return Err(Error::Oracle(
            "open cover of the defect band leaks too much weight".into(),
        ));
    }

    let gdef = |t: f64| -> Result<f64> { hh.integrate_over(&v.at(t)?.union(&w)) };
    let ga = gdef(a)?;
    let g3 = gdef(t3)?;
    if ga <= 0.0 || g3 >= 0.0 {
        return Err(Error::Resolution(format!(
            "perturbed defect does not change sign on the bracket ({ga}, {g3})"
        )));
    }
    let tstar = bisect_value(&gdef, a, t3, ga)?;
    finish(v.at(tstar)?.union(&w))
}

/// Root of `f` in `(lo, hi)` by bisection; `flo = f(lo)`.
fn bisect_value<F: Fn(f64) -> Result<f64>>(f: &F, lo: f64, hi: f64, flo: f64) -> Result<f64> {
    let (mut lo, mut hi) = (lo, hi);
    let sign = flo.signum();
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let v = f(mid)?;
        if v.abs() <= ZERO_TOL || hi - lo < f64::EPSILON * mid.abs().max(1.0) {
            return Ok(mid);
        }
        if v.signum() == sign {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Largest `t` in `[t3, t0]` with `f(t) = level`, assuming `f(t0) > level`.
fn last_crossing<F: Fn(f64) -> Result<f64>>(
    f: &F,
    t3: f64,
    t0: f64,
    level: f64,
) -> Result<f64> {
    let g = |t: f64| -> Result<f64> { Ok(f(t)? - level) };
    let mut prev_t = t0;
    let mut prev_g = g(t0)?;
    if prev_g <= 0.0 {
        return Ok(t0);
    }
    for i in 1..=SCAN {
        let t = t0 - i as f64 / SCAN as f64 * (t0 - t3);
        let gt = g(t)?;
        if gt <= 0.0 {
            let root = bisect_value(&g, t, prev_t, gt.min(-f64::MIN_POSITIVE))?;
            return Ok(root);
        }
        prev_t = t;
        prev_g = gt;
    }
    let _ = prev_g;
    Ok(t3)
}

/// Nested open sets with their common calibration values, one list per
/// refinement level; level `n` holds `2^n + 1` chain-ordered entries.
#[derive(Debug, Clone)]
pub struct DyadicOpenTable {
    levels: Vec<Vec<(f64, IntervalSet)>>,
}

impl DyadicOpenTable {
    pub fn levels(&self) -> &[Vec<(f64, IntervalSet)>] {
        &self.levels
    }

    /// Largest index gap between consecutive entries of one level.
    pub fn mesh(&self, level: usize) -> f64 {
        self.levels[level]
            .windows(2)
            .map(|w| w[1].0 - w[0].0)
            .fold(0.0, f64::max)
    }
}

/// Open segment calibrating two weighted measures at once, through the
/// measurable seed `d_set`.
///
/// Bisects the index range by repeated open bridges: each new entry lands in
/// the upper-half window of its block, so the table's mesh contracts by
/// nearly 1/2 per level.  The returned segment is the level-`depth` chain
/// indexed by its own calibration values; evaluation inverts that strictly
/// increasing map.
pub fn common_o_segment<S: SpaceAdapter + ?Sized>(
    sp: &S,
    f: &Density,
    g: &Density,
    d_set: &IntervalSet,
    depth: u32,
) -> Result<OpenSegment> {
    common_o_segment_with_table(sp, f, g, d_set, depth).map(|(w, _)| w)
}

pub fn common_o_segment_with_table<S: SpaceAdapter + ?Sized>(
    sp: &S,
    f: &Density,
    g: &Density,
    d_set: &IntervalSet,
    depth: u32,
) -> Result<(OpenSegment, DyadicOpenTable)> {
    let x = sp.universe().clone();
    if !x.is_open() || (x.measure() - 1.0).abs() > 1e-9 {
        return Err(Error::Validation(
            "common O-segments need an open universe of measure 1".into(),
        ));
    }
    for (name, d) in [("f", f), ("g", g)] {
        let total = d.integrate_over(&x)?;
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Validation(format!(
                "density {name} has total weight {total} over the universe, expected 1"
            )));
        }
    }
    let (df, dg) = (f.integrate_over(d_set)?, g.integrate_over(d_set)?);
    if (df - dg).abs() > 1e-9 {
        return Err(Error::Validation(format!(
            "seed set weights differ: {df} vs {dg}"
        )));
    }

    // level 0: a thin open cover of the seed, then the whole space
    let v_seed = if d_set.measure() > NULL_TOL {
        sp.approx_open(d_set, 1e-9)?.intersect(&x)
    } else {
        IntervalSet::empty()
    };
    if excess(d_set, &v_seed) > NULL_TOL {
        return Err(Error::Oracle("seed cover dropped part of the seed".into()));
    }
    let r_seed =
        0.5 * (f.integrate_over(&v_seed)? + g.integrate_over(&v_seed)?);
    let mut level = vec![(r_seed, v_seed), (1.0, x.clone())];
    let mut levels = vec![level.clone()];

    for n in 0..depth {
        let mut next = Vec::with_capacity(2 * level.len() - 1);
        for k in 0..level.len() - 1 {
            let (r_lo, o_lo) = &level[k];
            let (r_hi, o_hi) = &level[k + 1];
            next.push((*r_lo, o_lo.clone()));
            let gap = r_hi - r_lo;
            let eps = 0.9 * gap / (f64::powi(2.0, 2 * n as i32) + 1.0);
            if eps < 1e-8 {
                next.push((*r_lo, o_lo.clone()));
                continue;
            }
            let entry = bisect_block(sp, f, g, o_lo, o_hi, *r_lo, *r_hi, eps)?;
            next.push(entry);
        }
        next.push(level.last().unwrap().clone());
        level = next;
        levels.push(level.clone());
    }

    let seg = OpenSegment::from_entries(level)?;
    Ok((seg, DyadicOpenTable { levels }))
}

/// One refinement step: an open between `o_lo` and `o_hi` whose two weights
/// agree and land just above the midpoint of `(r_lo, r_hi)`.
fn bisect_block<S: SpaceAdapter + ?Sized>(
    sp: &S,
    f: &Density,
    g: &Density,
    o_lo: &IntervalSet,
    o_hi: &IntervalSet,
    r_lo: f64,
    r_hi: f64,
    eps: f64,
) -> Result<(f64, IntervalSet)> {
    let block = o_hi.subtract(o_lo);
    let gap_f = f.integrate_over(&block)?;
    let gap_g = g.integrate_over(&block)?;
    if gap_f.min(gap_g) <= 1e-7 {
        return Ok((r_lo, o_lo.clone()));
    }
    let v = PrefixOpenFamily::new(o_lo.clone(), block, g, o_hi.clone())?;
    // the bridge re-anchors at the half-weight chord of the block
    let a = v.base_value() + 0.5 * (v.top_value() - v.base_value());
    let u = step1_bridge(sp, f, g, &v, o_lo, a, eps)?;
    let u = u.intersect(o_hi);
    if excess(o_lo, &u) > NULL_TOL {
        return Err(Error::Resolution(
            "refined entry does not contain its lower neighbor".into(),
        ));
    }
    let r = 0.5 * (f.integrate_over(&u)? + g.integrate_over(&u)?);
    if r <= r_lo || r >= r_hi {
        return Err(Error::Resolution(format!(
            "refined entry value {r} escaped its block ({r_lo}, {r_hi})"
        )));
    }
    Ok((r, u))
}

/// Space of finitely many disjoint unit blocks, block `i` carrying weight
/// `2^{−i}`, whose only opens are unions of whole blocks.  Every open's
/// measure is a subset sum of the weights, so no O-segment can pass through
/// the intermediate levels: any monotone chain of opens jumps by at least
/// the largest weight 1/2.
#[derive(Debug, Clone)]
pub struct BlockSpace {
    n_blocks: usize,
}

impl BlockSpace {
    pub fn new(n_blocks: usize) -> Result<Self> {
        if n_blocks == 0 || n_blocks > 52 {
            return Err(Error::Range(format!(
                "block count {n_blocks} outside 1..=52"
            )));
        }
        Ok(BlockSpace { n_blocks })
    }

    pub fn n_blocks(&self) -> usize {
        self.n_blocks
    }

    pub fn weight(&self, i: usize) -> f64 {
        f64::powi(2.0, -(i as i32))
    }

    /// μ of the whole space: 1 − 2^{−N}.
    pub fn total(&self) -> f64 {
        1.0 - self.weight(self.n_blocks)
    }

    /// The open given by a bit mask over blocks 1..=N (bit i−1 = block i).
    pub fn open_from_mask(&self, mask: u64) -> IntervalSet {
        let parts = (1..=self.n_blocks)
            .filter(|i| mask >> (i - 1) & 1 == 1)
            .map(|i| Interval::open(2.0 * i as f64, 2.0 * i as f64 + 1.0))
            .collect();
        IntervalSet::from_parts(parts)
    }

    pub fn mask_measure(&self, mask: u64) -> f64 {
        (1..=self.n_blocks)
            .filter(|i| mask >> (i - 1) & 1 == 1)
            .map(|i| self.weight(i))
            .sum()
    }
}

/// Largest jump of the measure trajectory of the chain of opens in which
/// block `i` enters whole at time `thresholds[i−1]`.
///
/// Blocks sharing a threshold enter together.  The group containing block 1
/// weighs at least 1/2, so the result is always ≥ 1/2: the chain skips every
/// level in between, which is why this space has no O-segment even though
/// open measures fill `[0, μ(X)]` up to resolution `2^{−N}`.
pub fn block_chain_gap(bs: &BlockSpace, thresholds: &[f64]) -> Result<f64> {
    if thresholds.len() != bs.n_blocks() {
        return Err(Error::Validation(format!(
            "expected {} thresholds, got {}",
            bs.n_blocks(),
            thresholds.len()
        )));
    }
    let mut order: Vec<usize> = (0..thresholds.len()).collect();
    order.sort_by(|&a, &b| thresholds[a].partial_cmp(&thresholds[b]).unwrap());
    let mut max_jump = 0.0f64;
    let mut i = 0;
    while i < order.len() {
        let t = thresholds[order[i]];
        let mut jump = 0.0;
        while i < order.len() && thresholds[order[i]] == t {
            jump += bs.weight(order[i] + 1);
            i += 1;
        }
        max_jump = max_jump.max(jump);
    }
    Ok(max_jump)
}

/// Best open approximation of a target measure: greedy binary subset sum
/// over the block weights.  The achieved measure is within `2^{−N}` of any
/// target in `[0, 1]`.
pub fn greedy_open_measure(bs: &BlockSpace, target: f64) -> (u64, f64) {
    let mut mask = 0u64;
    let mut rem = target;
    for i in 1..=bs.n_blocks() {
        let w = bs.weight(i);
        if w <= rem + 1e-15 {
            mask |= 1 << (i - 1);
            rem -= w;
        }
    }
    (mask, bs.mask_measure(mask))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_space_exact() -> IntervalSpace {
        IntervalSpace::exact(IntervalSet::open_interval(0.0, 1.0)).unwrap()
    }

    fn unit_space_fuzzed(seed: u64) -> IntervalSpace {
        IntervalSpace::fuzzed(IntervalSet::open_interval(0.0, 1.0), seed).unwrap()
    }

    #[test]
    fn grow_exact_single_iteration() {
        let sp = unit_space_exact();
        let a = IntervalSet::open_interval(0.0, 0.3);
        let out = grow_open_to_measure(&sp, &a, 0.5, GROW_MAX).unwrap();
        assert_eq!(out.trajectory.len(), 1);
        assert!((out.set.measure() - 0.5).abs() <= GROW_TOL);
        assert!(out.set.is_open());
        assert!(a.subtract(&out.set).measure() < 1e-12);
        // (0, 0.5) minus the null point at 0.3
        assert!((out.set.sup().unwrap() - 0.5).abs() <= GROW_TOL);
    }

    #[test]
    fn grow_no_op_at_current_measure() {
        let sp = unit_space_exact();
        let a = IntervalSet::open_interval(0.2, 0.6);
        let out = grow_open_to_measure(&sp, &a, 0.4, GROW_MAX).unwrap();
        assert!(out.trajectory.is_empty());
        assert_eq!(out.set, a);
    }

    #[test]
    fn grow_fuzzed_respects_contraction_bounds() {
        let sp = unit_space_fuzzed(7);
        let a = IntervalSet::open_interval(0.0, 0.1);
        let target = 0.9;
        let out = grow_open_to_measure(&sp, &a, target, GROW_MAX).unwrap();
        let gap0 = a.measure() - target;
        for (n, m) in out.trajectory.iter().enumerate() {
            let k = (n + 1) as i32;
            let lower = target + f64::powi(0.75, k) * gap0;
            let upper = target + f64::powi(0.25, k) * gap0;
            assert!(*m >= lower - 1e-12 && *m <= upper + 1e-12, "iteration {n}: {m}");
        }
        assert!((out.set.measure() - target).abs() <= GROW_TOL);
    }

    #[test]
    fn grow_target_out_of_range() {
        let sp = unit_space_exact();
        let a = IntervalSet::open_interval(0.0, 0.5);
        assert!(matches!(
            grow_open_to_measure(&sp, &a, 0.2, GROW_MAX),
            Err(Error::Range(_))
        ));
        assert!(matches!(
            grow_open_to_measure(&sp, &a, 1.5, GROW_MAX),
            Err(Error::Range(_))
        ));
    }

    #[test]
    fn o_segment_empty_anchor_plain() {
        let sp = unit_space_fuzzed(3);
        let seg = o_segment(&sp, &IntervalSet::empty(), 3).unwrap();
        assert!(seg.all_open());
        for (r, s) in seg.entries() {
            assert!((s.measure() - r).abs() <= GROW_TOL);
        }
        let (lo, hi) = seg.range();
        assert_eq!(lo, 0.0);
        assert!((hi - 1.0).abs() <= GROW_TOL);
    }

    #[test]
    fn o_segment_half_anchor_dyadic_measures() {
        let sp = unit_space_fuzzed(11);
        let a = IntervalSet::open_interval(0.0, 0.5);
        let seg = o_segment(&sp, &a, 2).unwrap();
        for want in [0.5, 0.625, 0.75, 0.875, 1.0] {
            let hit = seg
                .entries()
                .iter()
                .any(|(r, _)| (r - want).abs() <= 1e-8);
            assert!(hit, "missing entry at {want}");
        }
        assert!(seg.all_open());
        // the anchor itself appears
        let at_half = seg.evaluate(0.5).unwrap();
        assert!((at_half.measure() - 0.5).abs() <= 1e-8);
    }

    #[test]
    fn o_segment_through_closed_set() {
        let sp = unit_space_exact();
        let a = IntervalSet::interval(0.2, 0.4);
        let seg = o_segment_through(&sp, &a, 3).unwrap();
        assert!(seg.all_open());
        for (_, s) in seg.entries() {
            assert!(a.subtract(s).measure() <= 1e-12);
        }
        let u = seg.evaluate(0.5).unwrap();
        assert!((u.measure() - 0.5).abs() <= 1e-8);
        assert!(IntervalSet::open_interval(0.2, 0.4).subtract(u).measure() <= 1e-12);
    }

    #[test]
    fn o_segment_through_excess_shrinks_downward() {
        let sp = unit_space_fuzzed(19);
        let a = IntervalSet::interval(0.3, 0.6);
        let seg = o_segment_through(&sp, &a, 5).unwrap();
        let mut prev = f64::INFINITY;
        for (_, s) in seg.entries().iter().rev() {
            let ex = s.subtract(&a).measure();
            assert!(ex <= prev + 1e-12);
            prev = ex;
        }
        // near the bottom the excess is small
        let first = &seg.entries()[0].1;
        assert!(first.subtract(&a).measure() < 0.5f64.powi(5) + 1e-9);
    }

    #[test]
    fn bridge_identical_densities_zero_branch() {
        let sp = unit_space_fuzzed(23);
        let f = Density::constant(1.0);
        let g = Density::constant(1.0);
        let b = IntervalSet::open_interval(0.0, 0.2);
        let v = PrefixOpenFamily::new(
            b.clone(),
            IntervalSet::open_interval(0.2, 1.0),
            &g,
            IntervalSet::open_interval(0.0, 1.0),
        )
        .unwrap();
        let u = step1_bridge(&sp, &f, &g, &v, &b, 0.5, 0.1).unwrap();
        let m = u.measure();
        assert!(m > 0.5 && m < 0.6 + 1e-9);
        assert!(b.subtract(&u).measure() <= 1e-12);
    }

    #[test]
    fn bridge_linear_density_postconditions() {
        let sp = unit_space_fuzzed(29);
        let f = Density::poly_unit(&[0.0, 2.0]);
        let g = Density::constant(1.0);
        let v = PrefixOpenFamily::new(
            IntervalSet::empty(),
            IntervalSet::open_interval(0.0, 1.0),
            &g,
            IntervalSet::open_interval(0.0, 1.0),
        )
        .unwrap();
        let (a, eps) = (0.3, 0.05);
        let u = step1_bridge(&sp, &f, &g, &v, &IntervalSet::empty(), a, eps).unwrap();
        assert!(u.is_open());
        let (mf, mg) = (
            f.integrate_over(&u).unwrap(),
            g.integrate_over(&u).unwrap(),
        );
        assert!((mf - mg).abs() <= 1e-6);
        assert!(mg > a - 1e-9 && mg < a + eps + 1e-9);
    }

    #[test]
    fn bridge_mirror_case() {
        // f above g near 0, so the defect starts positive
        let sp = unit_space_fuzzed(31);
        let f = Density::poly_unit(&[2.0, -2.0]);
        let g = Density::constant(1.0);
        let v = PrefixOpenFamily::new(
            IntervalSet::empty(),
            IntervalSet::open_interval(0.0, 1.0),
            &g,
            IntervalSet::open_interval(0.0, 1.0),
        )
        .unwrap();
        let (a, eps) = (0.3, 0.05);
        let u = step1_bridge(&sp, &f, &g, &v, &IntervalSet::empty(), a, eps).unwrap();
        let (mf, mg) = (
            f.integrate_over(&u).unwrap(),
            g.integrate_over(&u).unwrap(),
        );
        assert!((mf - mg).abs() <= 1e-6);
        assert!(mg > a - 1e-9 && mg < a + eps + 1e-9);
    }

    #[test]
    fn common_o_segment_trivial_identity() {
        let sp = unit_space_fuzzed(37);
        let one = Density::constant(1.0);
        let seg = common_o_segment(&sp, &one, &one, &IntervalSet::empty(), 3).unwrap();
        assert!(seg.all_open());
        for (r, s) in seg.entries() {
            assert!((s.measure() - r).abs() <= 1e-6);
        }
    }

    #[test]
    fn common_o_segment_linear_depth4() {
        let sp = unit_space_fuzzed(41);
        let f = Density::poly_unit(&[0.0, 2.0]);
        let g = Density::constant(1.0);
        let (seg, table) =
            common_o_segment_with_table(&sp, &f, &g, &IntervalSet::empty(), 4).unwrap();
        assert!(seg.all_open());
        for (r, s) in seg.entries() {
            let mf = f.integrate_over(s).unwrap();
            let mg = g.integrate_over(s).unwrap();
            assert!((mf - r).abs() <= 1e-6, "f defect {} at {r}", mf - r);
            assert!((mg - r).abs() <= 1e-6, "g defect {} at {r}", mg - r);
        }
        // mesh contracts by at most 1/2 + 1/(2^{2n}+1) per level
        for n in 0..4 {
            let bound = table.mesh(n) * (0.5 + 1.0 / (f64::powi(2.0, 2 * n as i32) + 1.0));
            assert!(table.mesh(n + 1) <= bound + 1e-9);
        }
    }

    #[test]
    fn common_o_segment_general_g_depth4() {
        let sp = unit_space_fuzzed(43);
        let f = Density::poly_unit(&[0.0, 2.0]);
        let g = Density::poly_unit(&[2.0, -2.0]);
        let seg = common_o_segment(&sp, &f, &g, &IntervalSet::empty(), 4).unwrap();
        assert!(seg.all_open());
        for (r, s) in seg.entries() {
            let mf = f.integrate_over(s).unwrap();
            let mg = g.integrate_over(s).unwrap();
            assert!((mf - r).abs() <= 1e-6);
            assert!((mg - r).abs() <= 1e-6);
        }
    }

    #[test]
    fn common_o_segment_through_seed() {
        let sp = unit_space_fuzzed(47);
        let f = Density::constant(1.0);
        let g = Density::constant(1.0);
        let d = IntervalSet::interval(0.3, 0.5);
        let seg = common_o_segment(&sp, &f, &g, &d, 3).unwrap();
        for (_, s) in seg.entries() {
            assert!(d.subtract(s).measure() <= 1e-12);
        }
    }

    #[test]
    fn common_o_segment_rejects_unbalanced_seed() {
        let sp = unit_space_fuzzed(53);
        let f = Density::poly_unit(&[0.0, 2.0]);
        let g = Density::constant(1.0);
        let d = IntervalSet::interval(0.0, 0.4);
        assert!(matches!(
            common_o_segment(&sp, &f, &g, &d, 2),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn block_chain_single_block() {
        let bs = BlockSpace::new(1).unwrap();
        assert_eq!(block_chain_gap(&bs, &[0.7]).unwrap(), 0.5);
    }

    #[test]
    fn block_chain_any_order_jumps_half() {
        let bs = BlockSpace::new(20).unwrap();
        let ths: Vec<f64> = (0..20).map(|i| ((i * 7919) % 101) as f64 / 101.0).collect();
        assert!(block_chain_gap(&bs, &ths).unwrap() >= 0.5);
    }

    #[test]
    fn block_subset_sum_close_to_target() {
        let bs = BlockSpace::new(20).unwrap();
        for k in 0..100 {
            let target = k as f64 / 99.0;
            let (_, m) = greedy_open_measure(&bs, target);
            assert!((m - target).abs() <= f64::powi(2.0, -20) + 1e-12);
        }
    }

    #[test]
    fn weighted_prefix_matches_target() {
        let g = Density::poly_unit(&[0.0, 2.0]);
        let set = IntervalSet::open_interval(0.0, 1.0);
        let w = weighted_prefix(&g, &set, 0.25);
        assert!((g.integrate_over(&w).unwrap() - 0.25).abs() <= 1e-12);
        assert!((w.sup().unwrap() - 0.5).abs() <= 1e-9);
    }
}
