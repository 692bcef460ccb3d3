//! Finite disjoint unions of real intervals with Lebesgue measure.
//!
//! Every set constructed by this crate is an [`IntervalSet`]: an ordered list
//! of pairwise disjoint intervals carrying open/closed endpoint flags.  The
//! flags never affect the measure; they only matter for the `is_open`
//! predicate and for exact containment checks.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Gaps strictly smaller than this are closed during normalization so that
/// sliver parts cannot accumulate under repeated boolean operations.  All
/// downstream calibration tolerances are >= 1e-9.
pub const MERGE_EPS: f64 = 1e-13;

/// A single interval `lo..hi` with open/closed endpoint flags.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    #[serde(default)]
    pub lo_open: bool,
    #[serde(default)]
    pub hi_open: bool,
}

impl Interval {
    pub fn closed(lo: f64, hi: f64) -> Self {
        Interval { lo, hi, lo_open: false, hi_open: false }
    }

    pub fn open(lo: f64, hi: f64) -> Self {
        Interval { lo, hi, lo_open: true, hi_open: true }
    }

    pub fn length(&self) -> f64 {
        (self.hi - self.lo).max(0.0)
    }

    /// A degenerate interval is a single closed point of measure zero.
    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    fn is_valid(&self) -> bool {
        if self.lo < self.hi {
            return true;
        }
        // lo == hi only survives when both endpoints are closed.
        self.lo == self.hi && !self.lo_open && !self.hi_open
    }
}

/// Boolean operations accepted by [`IntervalSet::boolean`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SetOp {
    Union,
    Intersect,
    Subtract,
    Symdiff,
}

/// A normalized finite union of disjoint intervals.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct IntervalSet {
    parts: Vec<Interval>,
}

impl IntervalSet {
    pub fn empty() -> Self {
        IntervalSet { parts: Vec::new() }
    }

    pub fn from_parts(parts: Vec<Interval>) -> Self {
        let mut s = IntervalSet { parts };
        s.normalize();
        s
    }

    pub fn interval(lo: f64, hi: f64) -> Self {
        Self::from_parts(vec![Interval::closed(lo, hi)])
    }

    pub fn open_interval(lo: f64, hi: f64) -> Self {
        Self::from_parts(vec![Interval::open(lo, hi)])
    }

    pub fn parts(&self) -> &[Interval] {
        &self.parts
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn measure(&self) -> f64 {
        self.parts.iter().map(Interval::length).sum()
    }

    pub fn is_open(&self) -> bool {
        self.parts.iter().all(|p| p.lo_open && p.hi_open)
    }

    /// Smallest point of the set, if nonempty.
    pub fn inf(&self) -> Option<f64> {
        self.parts.first().map(|p| p.lo)
    }

    pub fn sup(&self) -> Option<f64> {
        self.parts.last().map(|p| p.hi)
    }

    fn normalize(&mut self) {
        self.parts.retain(Interval::is_valid);
        self.parts
            .sort_by(|a, b| a.lo.partial_cmp(&b.lo).unwrap().then(a.hi.partial_cmp(&b.hi).unwrap()));
        let mut out: Vec<Interval> = Vec::with_capacity(self.parts.len());
        for p in self.parts.drain(..) {
            match out.last_mut() {
                Some(last) if touches(last, &p) => {
                    if p.lo == last.lo {
                        last.lo_open = last.lo_open && p.lo_open;
                    }
                    if p.hi > last.hi {
                        last.hi = p.hi;
                        last.hi_open = p.hi_open;
                    } else if p.hi == last.hi {
                        last.hi_open = last.hi_open && p.hi_open;
                    }
                }
                _ => out.push(p),
            }
        }
        self.parts = out;
    }

    pub fn boolean(&self, other: &IntervalSet, op: SetOp) -> IntervalSet {
        match op {
            SetOp::Union => self.union(other),
            SetOp::Intersect => self.intersect(other),
            SetOp::Subtract => self.subtract(other),
            SetOp::Symdiff => self.union(other).subtract(&self.intersect(other)),
        }
    }

    pub fn union(&self, other: &IntervalSet) -> IntervalSet {
        let mut parts = self.parts.clone();
        parts.extend(other.parts.iter().cloned());
        IntervalSet::from_parts(parts)
    }

    pub fn intersect(&self, other: &IntervalSet) -> IntervalSet {
        let mut parts = Vec::new();
        let mut start = 0usize;
        for a in &self.parts {
            while start < other.parts.len() && other.parts[start].hi < a.lo {
                start += 1;
            }
            for b in other.parts.iter().skip(start) {
                if b.lo > a.hi {
                    break;
                }
                let (lo, lo_open) = if a.lo > b.lo {
                    (a.lo, a.lo_open)
                } else if b.lo > a.lo {
                    (b.lo, b.lo_open)
                } else {
                    (a.lo, a.lo_open || b.lo_open)
                };
                let (hi, hi_open) = if a.hi < b.hi {
                    (a.hi, a.hi_open)
                } else if b.hi < a.hi {
                    (b.hi, b.hi_open)
                } else {
                    (a.hi, a.hi_open || b.hi_open)
                };
                parts.push(Interval { lo, hi, lo_open, hi_open });
            }
        }
        IntervalSet::from_parts(parts)
    }

    pub fn subtract(&self, other: &IntervalSet) -> IntervalSet {
        let mut parts = Vec::new();
        for a in &self.parts {
            let mut cur = *a;
            let mut dead = false;
            for b in &other.parts {
                if b.hi < cur.lo || (b.hi == cur.lo && (b.hi_open || cur.lo_open)) {
                    continue;
                }
                if b.lo > cur.hi || (b.lo == cur.hi && (b.lo_open || cur.hi_open)) {
                    break;
                }
                // left remainder of cur before b
                let left = Interval {
                    lo: cur.lo,
                    hi: b.lo,
                    lo_open: cur.lo_open,
                    hi_open: !b.lo_open,
                };
                if cover_nonempty(&left) {
                    parts.push(left);
                }
                // right remainder continues as cur
                let right = Interval {
                    lo: b.hi,
                    hi: cur.hi,
                    lo_open: !b.hi_open,
                    hi_open: cur.hi_open,
                };
                if cover_nonempty(&right) {
                    cur = right;
                } else {
                    dead = true;
                    break;
                }
            }
            if !dead {
                parts.push(cur);
            }
        }
        IntervalSet::from_parts(parts)
    }

    /// Exact point-set containment `self ⊆ other` in endpoint arithmetic.
    pub fn is_subset_of(&self, other: &IntervalSet) -> bool {
        self.subtract(other).is_empty()
    }

    /// Leftmost subset of `self` with measure exactly `mass`.
    ///
    /// Sweeps parts left to right and cuts the final part.  When the mass
    /// lands exactly on a part boundary, the completed part is included and
    /// nothing further.
    pub fn prefix(&self, mass: f64) -> Result<IntervalSet, Error> {
        let total = self.measure();
        if !(0.0..=total + 1e-12).contains(&mass) {
            return Err(Error::Range(format!(
                "prefix mass {mass} outside [0, {total}]"
            )));
        }
        Ok(self.prefix_unchecked(mass.min(total)))
    }

    pub(crate) fn prefix_unchecked(&self, mass: f64) -> IntervalSet {
        if mass <= 0.0 {
            return IntervalSet::empty();
        }
        let mut remaining = mass;
        let mut parts = Vec::new();
        for p in &self.parts {
            let len = p.length();
            if remaining >= len {
                parts.push(*p);
                remaining -= len;
                if remaining <= 0.0 {
                    break;
                }
            } else {
                let cut = p.lo + remaining;
                parts.push(Interval { lo: p.lo, hi: cut, lo_open: p.lo_open, hi_open: false });
                // remaining fully consumed
                break;
            }
        }
        IntervalSet { parts }
    }

    /// Sub-set of `self` between mass offsets `s0 <= s1` in the left-to-right
    /// sweep order.  Equivalent to `prefix(s1) \ prefix(s0)` but cheaper and
    /// sharing endpoints exactly.
    pub fn mass_window(&self, s0: f64, s1: f64) -> IntervalSet {
        self.prefix_unchecked(s1).subtract(&self.prefix_unchecked(s0))
    }

    /// All endpoint flags opened; degenerate points dropped; measure unchanged.
    pub fn interior(&self) -> IntervalSet {
        let parts = self
            .parts
            .iter()
            .filter(|p| !p.is_point())
            .map(|p| Interval::open(p.lo, p.hi))
            .collect();
        IntervalSet { parts }
    }

    /// Closure of the set: all flags closed, then re-normalized.
    pub fn closure(&self) -> IntervalSet {
        IntervalSet::from_parts(
            self.parts.iter().map(|p| Interval::closed(p.lo, p.hi)).collect(),
        )
    }
}

/// True when `b` should be merged into `a` during normalization: overlap,
/// touching with at least one closed endpoint, or a sub-`MERGE_EPS` gap.
fn touches(a: &Interval, b: &Interval) -> bool {
    if b.lo < a.hi {
        return true;
    }
    if b.lo == a.hi {
        return !(a.hi_open && b.lo_open);
    }
    b.lo - a.hi < MERGE_EPS
}

fn cover_nonempty(i: &Interval) -> bool {
    i.lo < i.hi || (i.lo == i.hi && !i.lo_open && !i.hi_open)
}

impl fmt::Display for IntervalSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.parts.is_empty() {
            return write!(f, "∅");
        }
        for (i, p) in self.parts.iter().enumerate() {
            if i > 0 {
                write!(f, " ∪ ")?;
            }
            write!(
                f,
                "{}{},{}{}",
                if p.lo_open { "(" } else { "[" },
                p.lo,
                p.hi,
                if p.hi_open { ")" } else { "]" },
            )?;
        }
        Ok(())
    }
}
