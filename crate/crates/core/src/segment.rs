//! Common segments on finite measure spaces.
//!
//! The construction is the recursive dyadic one: a single density is handled
//! by leftmost prefix extraction; a family of n+1 densities refines each
//! dyadic block by building a segment for the first n densities on the block,
//! solving a universal-chord problem for the last density along that family,
//! and assigning the chord window to the block midpoint.

use std::collections::HashMap;

use serde::Serialize;

use crate::density::{Density, DensityFamily};
use crate::error::{Error, Result};
use crate::interval_set::IntervalSet;

/// Hard caps of the recursive construction; the induction cost is
/// exponential in both.
pub const MAX_FAMILY: usize = 4;
pub const MAX_DEPTH: usize = 12;

/// Block masses below this are treated as null when calibrating chords:
/// they sit at float-noise scale and cannot perturb a segment beyond it.
const MASS_FLOOR: f64 = 1e-12;

/// Tuning knobs for chord scans inside the recursive builder.
#[derive(Debug, Clone, Copy)]
pub struct SegmentConfig {
    /// Chord residual tolerance |F(d) − F(c) − 1/2| <= tol.
    pub tol: f64,
    /// Deepest dyadic level a lazy family may be refined to.
    pub max_level: u32,
}

impl Default for SegmentConfig {
    fn default() -> Self {
        SegmentConfig { tol: 1e-9, max_level: 50 }
    }
}

/// Solution of the universal-chord problem: `d − c = 1/2` exactly and
/// `F(d) − F(c) = 1/2` within the requested tolerance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChordSolution {
    pub c: f64,
    pub d: f64,
}

/// Default scan resolution of the public chord solver.
pub const CHORD_SCAN: usize = 1024;

/// Finds the smallest c in [0, 1/2] with `F(c + 1/2) − F(c) = 1/2` within
/// `tol`, for continuous `F` with `F(0) = 0` and `F(1) = 1`.
///
/// Scans `K` samples of `G(c) = F(c+1/2) − F(c) − 1/2` for a near-zero or a
/// sign change (one must exist since `G(0) = −G(1/2)`), then bisects.
pub fn universal_chord<F: FnMut(f64) -> f64>(f: F, tol: f64) -> Result<ChordSolution> {
    universal_chord_scan(f, tol, CHORD_SCAN)
}

pub fn universal_chord_scan<F: FnMut(f64) -> f64>(
    mut f: F,
    tol: f64,
    scan: usize,
) -> Result<ChordSolution> {
    let scan = scan.max(2);
    let mut g = |c: f64| f(c + 0.5) - f(c) - 0.5;
    let mut prev = g(0.0);
    if prev.abs() <= tol {
        return Ok(ChordSolution { c: 0.0, d: 0.5 });
    }
    let mut bracket = None;
    for i in 1..=scan {
        let c = 0.5 * i as f64 / scan as f64;
        let v = g(c);
        if v.abs() <= tol {
            return Ok(ChordSolution { c, d: c + 0.5 });
        }
        if prev * v < 0.0 {
            bracket = Some((0.5 * (i - 1) as f64 / scan as f64, c, prev));
            break;
        }
        prev = v;
    }
    let (mut lo, mut hi, g_lo) = bracket.ok_or_else(|| {
        Error::Resolution(format!(
            "no chord sign change at resolution {scan}; F may be discontinuous or miscalibrated"
        ))
    })?;
    let sign_lo = g_lo.signum();
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let v = g(mid);
        if v.abs() <= tol {
            return Ok(ChordSolution { c: mid, d: mid + 0.5 });
        }
        if v.signum() == sign_lo {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < f64::EPSILON {
            break;
        }
    }
    Err(Error::Resolution(
        "chord bisection did not reach tolerance; F may be discontinuous".into(),
    ))
}

/// Depth-N table of nested interval-sets indexed by dyadic rationals,
/// calibrated against a density family.
#[derive(Debug, Clone)]
pub struct DyadicSegment {
    depth: usize,
    table: Vec<IntervalSet>,
    universe: IntervalSet,
    densities: DensityFamily,
}

impl DyadicSegment {
    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn table(&self) -> &[IntervalSet] {
        &self.table
    }

    pub fn universe(&self) -> &IntervalSet {
        &self.universe
    }

    pub fn densities(&self) -> &DensityFamily {
        &self.densities
    }

    /// Set at parameter `t` using the floor rule on the dyadic grid.
    pub fn evaluate(&self, t: f64) -> Result<&IntervalSet> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::Range(format!("evaluate parameter {t} outside [0,1]")));
        }
        let n = self.table.len() - 1;
        let idx = ((t * n as f64).floor() as usize).min(n);
        Ok(&self.table[idx])
    }

    /// Checks the segment invariants and reports the worst calibration error
    /// per density together with any nesting violations.
    pub fn verify(&self) -> SegmentReport {
        let n = self.table.len() - 1;
        let mut max_errors = vec![0.0f64; self.densities.len()];
        let mut totals = Vec::with_capacity(self.densities.len());
        for f in &self.densities.members {
            totals.push(f.integrate_over(&self.universe).unwrap_or(f64::NAN));
        }
        for (m, set) in self.table.iter().enumerate() {
            let frac = m as f64 / n as f64;
            for (i, f) in self.densities.members.iter().enumerate() {
                if let Ok(v) = f.integrate_over(set) {
                    let err = (v - frac * totals[i]).abs();
                    if err > max_errors[i] {
                        max_errors[i] = err;
                    }
                }
            }
        }
        let mut nesting_violations = Vec::new();
        for m in 0..n {
            if !self.table[m].is_subset_of(&self.table[m + 1]) {
                nesting_violations.push((m, m + 1));
            }
        }
        let endpoints_ok = self.table[0].is_empty() && self.table[n] == self.universe;
        SegmentReport { max_errors, nesting_violations, endpoints_ok }
    }

    /// JSONL export: one record per grid point.
    pub fn export_jsonl<W: std::io::Write>(&self, w: &mut W) -> std::io::Result<()> {
        let n = self.table.len() - 1;
        for (m, set) in self.table.iter().enumerate() {
            let mu: Vec<f64> = self
                .densities
                .members
                .iter()
                .map(|f| f.integrate_over(set).unwrap_or(f64::NAN))
                .collect();
            let rec = SegmentRecord { t: m as f64 / n as f64, set, mu };
            serde_json::to_writer(&mut *w, &rec)?;
            writeln!(w)?;
        }
        Ok(())
    }

    /// Testing hook: construct a segment from raw parts without verification.
    pub fn from_raw(
        depth: usize,
        table: Vec<IntervalSet>,
        universe: IntervalSet,
        densities: DensityFamily,
    ) -> Self {
        DyadicSegment { depth, table, universe, densities }
    }
}

#[derive(Serialize)]
struct SegmentRecord<'a> {
    t: f64,
    set: &'a IntervalSet,
    mu: Vec<f64>,
}

/// Outcome of [`DyadicSegment::verify`].
#[derive(Debug, Clone)]
pub struct SegmentReport {
    pub max_errors: Vec<f64>,
    pub nesting_violations: Vec<(usize, usize)>,
    pub endpoints_ok: bool,
}

impl SegmentReport {
    pub fn worst_error(&self) -> f64 {
        self.max_errors.iter().cloned().fold(0.0, f64::max)
    }

    pub fn ok(&self, tol: f64) -> bool {
        self.endpoints_ok && self.nesting_violations.is_empty() && self.worst_error() <= tol
    }
}

/// Segment for the plain Lebesgue measure: leftmost prefixes of `X`.
pub fn lebesgue_segment(x: &IntervalSet, depth: usize) -> Result<DyadicSegment> {
    check_depth(depth)?;
    let n = 1usize << depth;
    let total = x.measure();
    let densities = DensityFamily::new(vec![Density::constant(1.0)])?;
    let table = if total <= 0.0 {
        vec![x.clone(); n + 1]
    } else {
        (0..=n)
            .map(|m| x.prefix_unchecked(m as f64 / n as f64 * total))
            .collect()
    };
    Ok(DyadicSegment { depth, table, universe: x.clone(), densities })
}

/// Common segment for a normalized family on `X`.
///
/// The family must contain the constant density and all members must have
/// equal mass on `X` (run [`DensityFamily::normalize`] first when `X` is the
/// whole space).
pub fn common_segment(
    s: &DensityFamily,
    x: &IntervalSet,
    depth: usize,
    tol: f64,
) -> Result<DyadicSegment> {
    common_segment_with(s, x, depth, SegmentConfig { tol, ..SegmentConfig::default() })
}

pub fn common_segment_with(
    s: &DensityFamily,
    x: &IntervalSet,
    depth: usize,
    cfg: SegmentConfig,
) -> Result<DyadicSegment> {
    check_depth(depth)?;
    let ordered = ordered_members(s)?;
    if x.measure() <= 0.0 {
        // trivial branch: constant table
        let n = 1usize << depth;
        return Ok(DyadicSegment {
            depth,
            table: vec![x.clone(); n + 1],
            universe: x.clone(),
            densities: s.clone(),
        });
    }
    let mut masses = Vec::with_capacity(ordered.len());
    for f in &ordered {
        masses.push(f.integrate_over(x)?);
    }
    let reference = masses[0];
    for &m in &masses {
        if (m - reference).abs() > 1e-6 * reference.abs().max(1.0) {
            return Err(Error::Validation(
                "family members must have equal mass on X; call normalize".into(),
            ));
        }
    }
    let mut fam = LazyFamily::new(&ordered, x.clone(), cfg)?;
    let n = 1usize << depth;
    let mut table = Vec::with_capacity(n + 1);
    for m in 0..=n {
        table.push(fam.set_at(depth as u32, m as u64)?);
    }
    Ok(DyadicSegment { depth, table, universe: x.clone(), densities: s.clone() })
}

/// Segment data known only on a finite parameter set Λ ⊂ [0,1].
#[derive(Debug, Clone)]
pub struct PartialSegment {
    lambda: Vec<f64>,
    map: Vec<IntervalSet>,
}

impl PartialSegment {
    /// Points are sorted by parameter; Λ must contain 0 and 1.
    pub fn new(points: Vec<(f64, IntervalSet)>) -> Result<Self> {
        let mut points = points;
        points.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        if points.is_empty() || points[0].0 != 0.0 || points.last().unwrap().0 != 1.0 {
            return Err(Error::Validation(
                "partial segment must cover parameters 0 and 1".into(),
            ));
        }
        for w in points.windows(2) {
            if w[0].0 >= w[1].0 {
                return Err(Error::Validation("duplicate parameter in partial segment".into()));
            }
        }
        let (lambda, map) = points.into_iter().unzip();
        Ok(PartialSegment { lambda, map })
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn map(&self) -> &[IntervalSet] {
        &self.map
    }
}

/// Dyadic level at which gap-local parameters are snapped when a partial
/// segment is filled in; the induced calibration slack is ~2⁻⁴⁰.
const GAP_SNAP_LEVEL: u32 = 40;

/// Fills the gaps of a partial segment by running the common-segment
/// construction on each `u(b)\u(a)`, keeping the anchored sets intact.
pub fn extend_partial(
    p: &PartialSegment,
    s: &DensityFamily,
    depth: usize,
    tol: f64,
) -> Result<DyadicSegment> {
    check_depth(depth)?;
    let cfg = SegmentConfig { tol, ..SegmentConfig::default() };
    let universe = p.map.last().unwrap().clone();
    if !p.map[0].is_empty() {
        return Err(Error::Validation("partial segment must map 0 to the empty set".into()));
    }
    let ordered = ordered_members(s)?;
    let mut totals = Vec::with_capacity(ordered.len());
    for f in &ordered {
        totals.push(f.integrate_over(&universe)?);
    }
    for (i, set) in p.map.iter().enumerate() {
        if i > 0 && !p.map[i - 1].is_subset_of(set) {
            return Err(Error::Validation("partial segment sets are not nested".into()));
        }
        for (f, &total) in ordered.iter().zip(&totals) {
            let v = f.integrate_over(set)?;
            if (v - p.lambda[i] * total).abs() > 1e-6 * total.abs().max(1.0) {
                return Err(Error::Validation(format!(
                    "partial segment miscalibrated at parameter {}",
                    p.lambda[i]
                )));
            }
        }
    }
    let mut fams: Vec<Option<LazyFamily>> = Vec::new();
    let mut blocks = Vec::new();
    for w in p.map.windows(2) {
        blocks.push(w[1].subtract(&w[0]));
    }
    for block in &blocks {
        fams.push(if block.measure() > 0.0 {
            Some(LazyFamily::new(&ordered, block.clone(), cfg)?)
        } else {
            None
        });
    }
    let n = 1usize << depth;
    let snap = (1u64 << GAP_SNAP_LEVEL) as f64;
    let mut table = Vec::with_capacity(n + 1);
    for m in 0..=n {
        let t = m as f64 / n as f64;
        // anchor or gap lookup along the sorted Λ
        let j = match p
            .lambda
            .binary_search_by(|v| v.partial_cmp(&t).unwrap())
        {
            Ok(j) => {
                table.push(p.map[j].clone());
                continue;
            }
            Err(j) => j - 1,
        };
        let (a, b) = (p.lambda[j], p.lambda[j + 1]);
        let set = match &mut fams[j] {
            None => p.map[j].clone(),
            Some(fam) => {
                let s_local = (t - a) / (b - a);
                let idx = (s_local * snap).round() as u64;
                p.map[j].union(&fam.set_at(GAP_SNAP_LEVEL, idx)?)
            }
        };
        table.push(set);
    }
    Ok(DyadicSegment { depth, table, universe, densities: s.clone() })
}

/// Lebesgue segment of `Y` induced by restricting an existing segment:
/// `v(s) = Y ∩ u(s)`, topped up by a prefix of the next restriction so the
/// target mass is met exactly.
pub fn induced_segment(seg: &DyadicSegment, y: &IntervalSet) -> Result<DyadicSegment> {
    if !y.is_subset_of(seg.universe()) {
        return Err(Error::Range("Y is not a subset of the segment universe".into()));
    }
    let depth = seg.depth();
    let n = seg.table().len() - 1;
    let densities = DensityFamily::new(vec![Density::constant(1.0)])?;
    let total = y.measure();
    if total <= 0.0 {
        return Ok(DyadicSegment {
            depth,
            table: vec![y.clone(); n + 1],
            universe: y.clone(),
            densities,
        });
    }
    let v: Vec<IntervalSet> = seg.table().iter().map(|u| y.intersect(u)).collect();
    let phi: Vec<f64> = v.iter().map(IntervalSet::measure).collect();
    let mut table = Vec::with_capacity(n + 1);
    for m in 0..=n {
        let target = m as f64 / n as f64 * total;
        let mut j = 0;
        for (i, &mass) in phi.iter().enumerate() {
            if mass <= target + 1e-12 {
                j = i;
            } else {
                break;
            }
        }
        let mut w = v[j].clone();
        if target - phi[j] > 1e-12 && j < n {
            let chunk = v[j + 1].subtract(&v[j]);
            w = w.union(&chunk.prefix_unchecked(target - phi[j]));
        }
        table.push(w);
    }
    let universe = table.last().unwrap().clone();
    Ok(DyadicSegment { depth, table, universe, densities })
}

/// Validates family caps and returns the members with the constant density
/// moved to the front, where the recursion expects it.
fn ordered_members(s: &DensityFamily) -> Result<Vec<Density>> {
    if s.len() > MAX_FAMILY {
        return Err(Error::Capacity(format!(
            "family of {} densities exceeds the cap of {MAX_FAMILY}",
            s.len()
        )));
    }
    let const_pos = s
        .members
        .iter()
        .position(Density::is_constant_one)
        .ok_or_else(|| {
            Error::Validation("family must contain the constant density; call normalize".into())
        })?;
    let mut ordered: Vec<Density> = vec![s.members[const_pos].clone()];
    ordered.extend(
        s.members
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != const_pos)
            .map(|(_, f)| f.clone()),
    );
    Ok(ordered)
}

fn check_depth(depth: usize) -> Result<()> {
    if depth > MAX_DEPTH {
        return Err(Error::Capacity(format!(
            "depth {depth} exceeds the cap of {MAX_DEPTH}"
        )));
    }
    Ok(())
}

/// Cumulative sweep data for fast prefix queries against one block.
struct PrefixProfile {
    parts: Vec<(f64, f64)>,
    cum_len: Vec<f64>,
}

impl PrefixProfile {
    fn new(block: &IntervalSet) -> Self {
        let parts: Vec<(f64, f64)> = block.parts().iter().map(|p| (p.lo, p.hi)).collect();
        let mut cum_len = Vec::with_capacity(parts.len() + 1);
        let mut acc = 0.0;
        cum_len.push(0.0);
        for &(lo, hi) in &parts {
            acc += hi - lo;
            cum_len.push(acc);
        }
        PrefixProfile { parts, cum_len }
    }

    fn total(&self) -> f64 {
        *self.cum_len.last().unwrap()
    }

    /// μ_f of the leftmost subset of mass `s`, using per-part cumulative
    /// integrals for the given density.
    fn prefix_integral(&self, cum_int: &[f64], f: &Density, s: f64) -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        let i = match self
            .cum_len
            .binary_search_by(|v| v.partial_cmp(&s).unwrap())
        {
            Ok(i) => return cum_int[i],
            Err(i) => i - 1,
        };
        if i >= self.parts.len() {
            return *cum_int.last().unwrap();
        }
        let (lo, _) = self.parts[i];
        cum_int[i] + f.integrate_interval(lo, lo + (s - self.cum_len[i]))
    }

    fn cum_integrals(&self, f: &Density) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.parts.len() + 1);
        let mut acc = 0.0;
        out.push(0.0);
        for &(lo, hi) in &self.parts {
            acc += f.integrate_interval(lo, hi);
            out.push(acc);
        }
        out
    }
}

/// Lazily refined common-segment family for the first `n` densities on a
/// block.  Sets are materialized at dyadic parameters on demand and memoized;
/// sibling queries share ancestors exactly, which keeps nesting exact.
struct LazyFamily<'a> {
    densities: &'a [Density],
    block: IntervalSet,
    cfg: SegmentConfig,
    profile: PrefixProfile,
    /// memo for n >= 2, keyed by canonical (level, idx) with idx odd
    nodes: HashMap<(u32, u64), IntervalSet>,
}

impl<'a> LazyFamily<'a> {
    /// `densities[0]` must be the constant density.
    fn new(densities: &'a [Density], block: IntervalSet, cfg: SegmentConfig) -> Result<Self> {
        let profile = PrefixProfile::new(&block);
        Ok(LazyFamily { densities, block, cfg, profile, nodes: HashMap::new() })
    }

    fn arity(&self) -> usize {
        self.densities.len()
    }

    /// Set at dyadic parameter `idx / 2^level`.
    fn set_at(&mut self, level: u32, idx: u64) -> Result<IntervalSet> {
        if idx == 0 {
            return Ok(IntervalSet::empty());
        }
        if idx == 1u64 << level {
            return Ok(self.block.clone());
        }
        if self.arity() == 1 {
            let t = idx as f64 / (1u64 << level) as f64;
            return Ok(self.block.prefix_unchecked(t * self.profile.total()));
        }
        let (level, idx) = canonical(level, idx);
        if let Some(s) = self.nodes.get(&(level, idx)) {
            return Ok(s.clone());
        }
        let a = self.set_at(level - 1, (idx - 1) / 2)?;
        let b = self.set_at(level - 1, (idx + 1) / 2)?;
        let sub_block = b.subtract(&a);
        let window = self.half_window(&sub_block)?;
        let mid = a.union(&window);
        self.nodes.insert((level, idx), mid.clone());
        Ok(mid)
    }

    /// Subset of `sub_block` carrying exactly half of every calibrated
    /// density's mass: segment for the first n−1 densities along the block,
    /// then a universal chord for the last one.
    fn half_window(&mut self, sub_block: &IntervalSet) -> Result<IntervalSet> {
        let last = &self.densities[self.arity() - 1];
        if sub_block.measure() <= 0.0 {
            return Ok(IntervalSet::empty());
        }
        if self.arity() == 2 {
            // segment for the constant density is the continuous prefix sweep
            let profile = PrefixProfile::new(sub_block);
            let total_len = profile.total();
            let cum = profile.cum_integrals(last);
            let mass = *cum.last().unwrap();
            if mass.abs() < MASS_FLOOR {
                // the block mass is below float noise; the half-length window
                // is exact for the constant density and off by at most the
                // (negligible) mass for the last one
                return Ok(sub_block.mass_window(0.0, 0.5 * total_len));
            }
            // normalized F carries absolute float noise ~1e-15/mass
            let tol = self.cfg.tol.max(1e-13 / mass.abs());
            let chord = bisect_chord(
                |t| profile.prefix_integral(&cum, last, t * total_len) / mass,
                tol,
            )?;
            return Ok(sub_block.mass_window(chord.c * total_len, chord.d * total_len));
        }
        let mut sub = LazyFamily::new(
            &self.densities[..self.arity() - 1],
            sub_block.clone(),
            self.cfg,
        )?;
        let mass = last.integrate_over(sub_block)?;
        if mass.abs() < MASS_FLOOR {
            return sub.set_at(1, 1);
        }
        let mut values: HashMap<(u32, u64), f64> = HashMap::new();
        let tol = self.cfg.tol.max(1e-13 / mass.abs());
        let (c_level, c_idx) = {
            let mut eval = |level: u32, idx: u64| -> Result<f64> {
                let key = canonical(level, idx);
                if let Some(v) = values.get(&key) {
                    return Ok(*v);
                }
                let set = sub.set_at(level, idx)?;
                let v = last.integrate_over(&set)? / mass;
                values.insert(key, v);
                Ok(v)
            };
            dyadic_chord(&mut eval, tol, self.cfg.max_level)?
        };
        let d_idx = c_idx + (1u64 << (c_level - 1));
        let vc = sub.set_at(c_level, c_idx)?;
        let vd = sub.set_at(c_level, d_idx)?;
        Ok(vd.subtract(&vc))
    }
}

fn canonical(mut level: u32, mut idx: u64) -> (u32, u64) {
    while level > 0 && idx % 2 == 0 {
        level -= 1;
        idx /= 2;
    }
    (level, idx)
}

/// Chord solver over a family only evaluable at dyadic parameters.  `eval`
/// returns `F(idx/2^level)`.  `G(0) = −G(1/2)` brackets a root of
/// `G(c) = F(c+1/2) − F(c) − 1/2` on [0, 1/2] for free, so the solver is a
/// descending dyadic bisection with no pre-scan.  Returns the dyadic
/// coordinates of `c`; `d = c + 1/2` shares the level.
fn dyadic_chord<E: FnMut(u32, u64) -> Result<f64>>(
    eval: &mut E,
    tol: f64,
    max_level: u32,
) -> Result<(u32, u64)> {
    let g_at = |lv: u32, i: u64, ev: &mut E| -> Result<f64> {
        let h = 1u64 << (lv - 1);
        Ok(ev(lv, i + h)? - ev(lv, i)? - 0.5)
    };
    let g0 = g_at(1, 0, eval)?;
    if g0.abs() <= tol {
        return Ok((1, 0));
    }
    let sign_lo = g0.signum();
    let mut lv = 1;
    let mut lo_idx = 0u64;
    let mut best = (lv, lo_idx, g0.abs());
    while lv < max_level {
        lv += 1;
        lo_idx *= 2;
        let mid = lo_idx + 1;
        let v = g_at(lv, mid, eval)?;
        if v.abs() <= tol {
            return Ok((lv, mid));
        }
        if v.abs() < best.2 {
            best = (lv, mid, v.abs());
        }
        if v.signum() == sign_lo {
            lo_idx = mid;
        }
    }
    Err(Error::Resolution(format!(
        "dyadic chord bisection stalled at level {max_level} with residual {}",
        best.2
    )))
}

/// Scan-free continuous chord solver: bisects `G` on the guaranteed bracket
/// [0, 1/2].  Converges to some chord, not necessarily the smallest one.
pub(crate) fn bisect_chord<F: FnMut(f64) -> f64>(mut f: F, tol: f64) -> Result<ChordSolution> {
    let mut g = |c: f64| f(c + 0.5) - f(c) - 0.5;
    let g0 = g(0.0);
    if g0.abs() <= tol {
        return Ok(ChordSolution { c: 0.0, d: 0.5 });
    }
    let sign_lo = g0.signum();
    let (mut lo, mut hi) = (0.0f64, 0.5f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let v = g(mid);
        if v.abs() <= tol {
            return Ok(ChordSolution { c: mid, d: mid + 0.5 });
        }
        if v.signum() == sign_lo {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < f64::EPSILON {
            break;
        }
    }
    Err(Error::Resolution(
        "chord bisection did not reach tolerance; F may be discontinuous".into(),
    ))
}
