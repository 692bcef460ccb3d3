//! Common segments on the half line with infinite total measure.
//!
//! Densities here deviate from 1 only on an integrable part, so the deficit
//! F(t) = ∫_{v(t)} (f − 1) dμ tends to 0.  An exhaustion picks finite stages
//! Y_k on which every density agrees with plain length, per-stage segments
//! are built by the finite construction, and gluing rescales the parameter
//! affinely into the owning stage.

use crate::density::{Density, DensityFamily};
use crate::error::{Error, Result};
use crate::interval_set::IntervalSet;
use crate::segment::{common_segment, DyadicSegment};

/// Grid step used when scanning the deficit function for zeros.
pub const SCAN_STEP: f64 = 1.0 / 256.0;

/// |F| below this counts as a zero of the deficit.
const ZERO_TOL: f64 = 1e-9;

/// How the exhaustion was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CaseTag {
    /// Zeros of the deficit recur beyond every bound scanned; stages are
    /// direct cuts of the base segment at those zeros.
    RecurringZeros,
    /// The deficit has a last zero; stages pair a shrinking lower cut with a
    /// growing upper cut at matched deficit levels.
    LastZero,
}

/// Witness data for the [`CaseTag::LastZero`] construction.
#[derive(Debug, Clone)]
pub struct LevelMatchWitness {
    /// Last zero of the deficit.
    pub last_zero: f64,
    /// Decreasing cut parameters s_k converging to the last zero.
    pub lower: Vec<f64>,
    /// Increasing cut parameters t_k with matched deficit levels.
    pub upper: Vec<f64>,
    /// Residual core below every lower cut.
    pub core: IntervalSet,
}

/// Increasing finite-measure stages on which all densities calibrate.
#[derive(Debug, Clone)]
pub struct Exhaustion {
    pub stages: Vec<IntervalSet>,
    pub case_tag: CaseTag,
    pub witness: Option<LevelMatchWitness>,
}

/// Glued segment: cumulative stage sets plus a finite segment per stage gap.
#[derive(Debug, Clone)]
pub struct SigmaSegment {
    cum_sets: Vec<IntervalSet>,
    boundaries: Vec<f64>,
    per_block: Vec<DyadicSegment>,
    densities: DensityFamily,
}

/// The base segment for plain length on `[0, ∞)`: `t ↦ [0, t)`.
pub fn half_line_prefix(t: f64) -> IntervalSet {
    if t <= 0.0 {
        IntervalSet::empty()
    } else {
        IntervalSet::interval(0.0, t)
    }
}

/// Total of `f − 1` over the whole half line, in closed form.
fn total_deviation(f: &Density) -> Result<f64> {
    let tail = f
        .tail()
        .ok_or_else(|| Error::Domain("density must live on the half line".into()))?;
    let brk = f.break_end();
    let mut v = f.integrate_minus_one_interval(f.domain().lo, brk);
    if brk > 0.0 {
        v += tail.c / brk;
    }
    Ok(v)
}

fn deficit_over(f: &Density, set: &IntervalSet) -> f64 {
    set.parts()
        .iter()
        .map(|p| f.integrate_minus_one_interval(p.lo, p.hi))
        .sum()
}

/// Builds an exhaustion for the last family member along the base segment
/// `v`, assumed common for all earlier members.
pub fn exhaust<V: Fn(f64) -> IntervalSet>(
    s: &DensityFamily,
    v: V,
    horizon: f64,
    k_max: usize,
) -> Result<Exhaustion> {
    if horizon <= 0.0 || !horizon.is_finite() {
        return Err(Error::Range(format!("horizon {horizon} must be positive")));
    }
    if k_max == 0 {
        return Err(Error::Range("k_max must be at least 1".into()));
    }
    for f in &s.members {
        let dev = total_deviation(f)?;
        if dev.abs() > 1e-6 {
            return Err(Error::Validation(format!(
                "density deviation integral {dev} is not zero"
            )));
        }
    }
    let last = s.members.last().unwrap();
    let bigf = |t: f64| deficit_over(last, &v(t));

    // zero set of F on the scan grid, refined at sign changes
    let steps = (horizon / SCAN_STEP).ceil() as usize;
    let mut zeros: Vec<f64> = Vec::new();
    let mut prev_t = 0.0;
    let mut prev_v = bigf(0.0);
    if prev_v.abs() <= ZERO_TOL {
        zeros.push(0.0);
    }
    for i in 1..=steps {
        let t = (i as f64 * SCAN_STEP).min(horizon);
        let val = bigf(t);
        if val.abs() <= ZERO_TOL {
            zeros.push(t);
        } else if prev_v.abs() > ZERO_TOL && prev_v * val < 0.0 {
            zeros.push(bisect_to_zero(&bigf, prev_t, t));
        }
        prev_t = t;
        prev_v = val;
    }
    if zeros.is_empty() {
        return Err(Error::Resolution(
            "deficit function has no zero on the scanned range, not even at 0".into(),
        ));
    }

    let last_zero = *zeros.last().unwrap();
    if last_zero >= horizon - 1.0 {
        // zeros persist to the end of the scan: cut directly at zeros
        let mut times = Vec::new();
        for k in 1..=k_max {
            let target = k as f64 / k_max as f64 * horizon;
            let cand = zeros
                .iter()
                .copied()
                .filter(|&z| z <= target + 1e-12)
                .next_back();
            if let Some(z) = cand {
                if times.last().map_or(z > 0.0, |&p| z > p) {
                    times.push(z);
                }
            }
        }
        let stages: Vec<IntervalSet> = times.iter().map(|&t| v(t)).collect();
        validate_stages(s, &stages)?;
        return Ok(Exhaustion { stages, case_tag: CaseTag::RecurringZeros, witness: None });
    }

    // last-zero case: refine the right edge of the zero set
    let t_edge = {
        let (mut lo, mut hi) = (last_zero, (last_zero + SCAN_STEP).min(horizon));
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if bigf(mid).abs() <= ZERO_TOL {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    };
    let sign = {
        let probe = bigf((t_edge + SCAN_STEP).min(horizon));
        if probe == 0.0 {
            return Err(Error::Resolution(
                "deficit sign after its last zero could not be determined".into(),
            ));
        }
        probe.signum()
    };
    let fp = |t: f64| sign * bigf(t);

    // peak of the deficit magnitude past the last zero
    let mut peak_t = t_edge;
    let mut peak_v = 0.0;
    let mut i = (t_edge / SCAN_STEP).ceil() as usize;
    while (i as f64) * SCAN_STEP <= horizon {
        let t = i as f64 * SCAN_STEP;
        let val = fp(t);
        if val > peak_v {
            peak_v = val;
            peak_t = t;
        }
        i += 1;
    }
    if peak_v <= ZERO_TOL {
        return Err(Error::Resolution(
            "deficit stays at noise level past its last zero".into(),
        ));
    }
    // start the lower cuts where the deficit is at most half its peak, so
    // every matched level has a crossing on the decreasing branch
    let mut s1 = t_edge + SCAN_STEP;
    let mut t_probe = peak_t;
    while t_probe > t_edge {
        if fp(t_probe) <= 0.5 * peak_v {
            s1 = t_probe;
            break;
        }
        t_probe -= SCAN_STEP;
    }

    let offset = s1 - t_edge;
    let mut lower = Vec::with_capacity(k_max);
    let mut upper = Vec::with_capacity(k_max);
    for k in 0..k_max {
        let s_k = t_edge + offset / (1u64 << k) as f64;
        let level = fp(s_k);
        if level <= 0.0 {
            return Err(Error::Resolution(format!(
                "deficit not positive at lower cut {s_k}"
            )));
        }
        if fp(horizon) >= level {
            return Err(Error::Horizon(format!(
                "horizon {horizon} too small: deficit has not fallen below level {level}"
            )));
        }
        // last crossing of the level, scanned from the horizon down
        let mut j = (horizon / SCAN_STEP).floor() as i64;
        let mut bracket = None;
        while j as f64 * SCAN_STEP > s_k {
            let t = j as f64 * SCAN_STEP;
            if fp(t) >= level {
                bracket = Some((t, (t + SCAN_STEP).min(horizon)));
                break;
            }
            j -= 1;
        }
        let (mut lo, mut hi) = bracket.ok_or_else(|| {
            Error::Resolution(format!("no crossing of deficit level {level} found"))
        })?;
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if fp(mid) >= level {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lower.push(s_k);
        upper.push(lo);
    }

    // core: intersection of all lower cuts, taken deep enough that its
    // deficit is negligible
    let mut core_t = t_edge + offset;
    let mut k = 0;
    while k < 64 && (fp(core_t).abs() > 1e-9 || core_t - t_edge > 1e-9) {
        core_t = t_edge + (core_t - t_edge) * 0.5;
        k += 1;
    }
    let core = v(core_t);

    let mut stages = Vec::with_capacity(k_max);
    for k in 0..k_max {
        let window = v(upper[k]).subtract(&v(lower[k]));
        stages.push(core.union(&window));
    }
    validate_stages(s, &stages)?;
    for (k, stage) in stages.iter().enumerate() {
        let expect = t_edge + (upper[k] - lower[k]);
        if (stage.measure() - expect).abs() > 1e-6 {
            return Err(Error::Resolution(format!(
                "stage {k} measure {} differs from {expect}",
                stage.measure()
            )));
        }
    }
    Ok(Exhaustion {
        stages,
        case_tag: CaseTag::LastZero,
        witness: Some(LevelMatchWitness { last_zero: t_edge, lower, upper, core }),
    })
}

fn bisect_to_zero<F: Fn(f64) -> f64>(f: &F, mut lo: f64, mut hi: f64) -> f64 {
    let sign_lo = f(lo).signum();
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        let v = f(mid);
        if v == 0.0 {
            return mid;
        }
        if v.signum() == sign_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn validate_stages(s: &DensityFamily, stages: &[IntervalSet]) -> Result<()> {
    if stages.is_empty() {
        return Err(Error::Resolution("exhaustion produced no stages".into()));
    }
    for (k, stage) in stages.iter().enumerate() {
        if k > 0 && !stages[k - 1].is_subset_of(stage) {
            return Err(Error::Resolution(format!("stage {k} does not contain its predecessor")));
        }
        let len = stage.measure();
        for f in &s.members {
            let m = f.integrate_over(stage)?;
            if (m - len).abs() > 1e-6 {
                return Err(Error::Resolution(format!(
                    "stage {k} mass {m} differs from its length {len}"
                )));
            }
        }
    }
    Ok(())
}

/// Glues per-stage finite segments into one segment on `[0, horizon_mass]`.
pub fn glue(ex: &Exhaustion, s: &DensityFamily, depth: usize) -> Result<SigmaSegment> {
    let mut cum_sets = vec![IntervalSet::empty()];
    let mut boundaries = vec![0.0];
    let mut per_block = Vec::new();
    let mut current = IntervalSet::empty();
    for stage in &ex.stages {
        let next = current.union(stage);
        let block = next.subtract(&current);
        if block.measure() <= 1e-12 {
            current = next;
            continue;
        }
        let seg = common_segment(s, &block, depth, 1e-9)?;
        per_block.push(seg);
        current = next;
        cum_sets.push(current.clone());
        boundaries.push(current.measure());
    }
    if per_block.is_empty() {
        return Err(Error::Validation("exhaustion covers nothing of positive measure".into()));
    }
    Ok(SigmaSegment { cum_sets, boundaries, per_block, densities: s.clone() })
}

impl SigmaSegment {
    /// Largest parameter the finite truncation covers.
    pub fn horizon(&self) -> f64 {
        *self.boundaries.last().unwrap()
    }

    pub fn boundaries(&self) -> &[f64] {
        &self.boundaries
    }

    pub fn densities(&self) -> &DensityFamily {
        &self.densities
    }

    /// Set at parameter `t`: the filled stages below `t` plus the owning
    /// stage's segment at the affinely rescaled local parameter.
    pub fn evaluate(&self, t: f64) -> Result<IntervalSet> {
        if t < 0.0 {
            return Err(Error::Range(format!("parameter {t} is negative")));
        }
        let top = self.horizon();
        if t > top + 1e-12 {
            return Err(Error::Horizon(format!(
                "parameter {t} beyond the covered horizon {top}"
            )));
        }
        let t = t.min(top);
        let mut i = self.boundaries.len() - 2;
        for j in 0..self.boundaries.len() - 1 {
            if t <= self.boundaries[j + 1] {
                i = j;
                break;
            }
        }
        let (a, b) = (self.boundaries[i], self.boundaries[i + 1]);
        let local = ((t - a) / (b - a)).clamp(0.0, 1.0);
        Ok(self.cum_sets[i].union(self.per_block[i].evaluate(local)?))
    }

    /// JSONL export over an even grid of the covered range.
    pub fn export_jsonl<W: std::io::Write>(&self, w: &mut W, steps: usize) -> Result<()> {
        let steps = steps.max(1);
        for m in 0..=steps {
            let t = m as f64 / steps as f64 * self.horizon();
            let set = self.evaluate(t)?;
            let mu: Vec<f64> = self
                .densities
                .members
                .iter()
                .map(|f| f.integrate_over(&set).unwrap_or(f64::NAN))
                .collect();
            let rec = serde_json::json!({"t": t, "set": set, "mu": mu});
            serde_json::to_writer(&mut *w, &rec)
                .map_err(|e| Error::Parse(e.to_string()))?;
            writeln!(w).map_err(|e| Error::Parse(e.to_string()))?;
        }
        Ok(())
    }
}
