//! Signed piecewise-polynomial densities and the measures they induce.
//!
//! A [`Density`] is a list of polynomial pieces (degree at most 3) tiling a
//! bounded domain, optionally followed by a quadratic-decay tail
//! `f(t) = 1 + c/t^2` on an unbounded domain.  Integration over an
//! [`IntervalSet`] is exact antiderivative evaluation; a midpoint-rule oracle
//! is provided for cross-checks in tests.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval_set::IntervalSet;

/// Highest polynomial degree accepted for a piece.
pub const MAX_DEGREE: usize = 3;

/// One polynomial piece on `[from, to]` with coefficients in ascending order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Piece {
    pub from: f64,
    pub to: f64,
    pub coeffs: Vec<f64>,
}

impl Piece {
    fn value(&self, t: f64) -> f64 {
        poly_eval(&self.coeffs, t)
    }

    /// Exact integral of the piece polynomial over `[a, b]`.
    fn integral(&self, a: f64, b: f64) -> f64 {
        poly_integral(&self.coeffs, a, b)
    }
}

/// Quadratic-decay tail `f(t) = 1 + c/t^2` past the last breakpoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tail {
    pub c: f64,
}

/// Domain of definition: `[lo, hi]`, or `[lo, ∞)` when `hi` is `None`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Domain {
    pub lo: f64,
    pub hi: Option<f64>,
}

impl Domain {
    pub fn unit() -> Self {
        Domain { lo: 0.0, hi: Some(1.0) }
    }

    pub fn half_line() -> Self {
        Domain { lo: 0.0, hi: None }
    }

    pub fn contains_set(&self, e: &IntervalSet) -> bool {
        match (e.inf(), e.sup()) {
            (None, _) | (_, None) => true,
            (Some(lo), Some(hi)) => {
                lo >= self.lo - 1e-12 && self.hi.map_or(true, |h| hi <= h + 1e-12)
            }
        }
    }
}

/// Wire form of a domain endpoint: a number or the string `"inf"`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DomainEnd {
    Num(f64),
    Sym(String),
}

/// Wire form of a [`Density`]; the field names form the CLI ingestion
/// contract.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DensityJson {
    pub domain: (f64, DomainEnd),
    pub pieces: Vec<Piece>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tail: Option<Tail>,
}

impl TryFrom<DensityJson> for Density {
    type Error = Error;

    fn try_from(j: DensityJson) -> Result<Density> {
        let hi = match j.domain.1 {
            DomainEnd::Num(x) => Some(x),
            DomainEnd::Sym(s) if s == "inf" => None,
            DomainEnd::Sym(s) => {
                return Err(Error::Parse(format!("unknown domain end {s:?}")));
            }
        };
        Density::new(Domain { lo: j.domain.0, hi }, j.pieces, j.tail)
    }
}

impl From<Density> for DensityJson {
    fn from(d: Density) -> DensityJson {
        DensityJson {
            domain: (
                d.domain.lo,
                match d.domain.hi {
                    Some(x) => DomainEnd::Num(x),
                    None => DomainEnd::Sym("inf".into()),
                },
            ),
            pieces: d.pieces,
            tail: d.tail,
        }
    }
}

/// A signed piecewise-polynomial density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DensityJson", into = "DensityJson")]
pub struct Density {
    domain: Domain,
    pieces: Vec<Piece>,
    tail: Option<Tail>,
    /// Cumulative integral at piece starts: `cum[i] = ∫ over pieces[..i]`.
    cum: Vec<f64>,
}

impl Density {
    pub fn new(domain: Domain, pieces: Vec<Piece>, tail: Option<Tail>) -> Result<Self> {
        if pieces.is_empty() {
            return Err(Error::Validation("density needs at least one piece".into()));
        }
        for p in &pieces {
            if p.coeffs.is_empty() || p.coeffs.len() > MAX_DEGREE + 1 {
                return Err(Error::Validation(format!(
                    "piece degree must be <= {MAX_DEGREE}"
                )));
            }
            if !(p.from < p.to) {
                return Err(Error::Validation("piece with empty extent".into()));
            }
        }
        let mut prev = domain.lo;
        for p in &pieces {
            if (p.from - prev).abs() > 1e-12 {
                return Err(Error::Validation(format!(
                    "pieces must tile the domain: gap at {prev}"
                )));
            }
            prev = p.to;
        }
        match domain.hi {
            Some(hi) => {
                if (prev - hi).abs() > 1e-12 {
                    return Err(Error::Validation("pieces must reach the domain end".into()));
                }
                if tail.is_some() {
                    return Err(Error::Validation("tail requires an unbounded domain".into()));
                }
            }
            None => {
                if tail.is_none() {
                    return Err(Error::Validation(
                        "unbounded domain requires a tail term".into(),
                    ));
                }
            }
        }
        let mut cum = Vec::with_capacity(pieces.len() + 1);
        let mut acc = 0.0;
        cum.push(0.0);
        for p in &pieces {
            acc += p.integral(p.from, p.to);
            cum.push(acc);
        }
        Ok(Density { domain, pieces, tail, cum })
    }

    /// Constant density `v` on `[0, 1]`.
    pub fn constant(v: f64) -> Self {
        Density::new(
            Domain::unit(),
            vec![Piece { from: 0.0, to: 1.0, coeffs: vec![v] }],
            None,
        )
        .unwrap()
    }

    /// Constant density 1 on `[0, ∞)`: a unit piece plus a zero tail.
    pub fn one_on_half_line() -> Self {
        Density::new(
            Domain::half_line(),
            vec![Piece { from: 0.0, to: 1.0, coeffs: vec![1.0] }],
            Some(Tail { c: 0.0 }),
        )
        .unwrap()
    }

    /// Density with the given coefficients on all of `[0, 1]`.
    pub fn poly_unit(coeffs: &[f64]) -> Self {
        Density::new(
            Domain::unit(),
            vec![Piece { from: 0.0, to: 1.0, coeffs: coeffs.to_vec() }],
            None,
        )
        .unwrap()
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn tail(&self) -> Option<Tail> {
        self.tail
    }

    /// End of the piecewise part (start of the tail for unbounded domains).
    pub fn break_end(&self) -> f64 {
        self.pieces.last().map(|p| p.to).unwrap_or(self.domain.lo)
    }

    pub fn value(&self, t: f64) -> f64 {
        if t > self.break_end() {
            return match self.tail {
                Some(tail) => 1.0 + tail.c / (t * t),
                None => 0.0,
            };
        }
        // pieces are few; binary search by start point
        let idx = match self
            .pieces
            .binary_search_by(|p| p.from.partial_cmp(&t).unwrap())
        {
            Ok(i) => i,
            Err(0) => 0,
            Err(i) => i - 1,
        };
        self.pieces[idx].value(t)
    }

    pub fn is_constant_one(&self) -> bool {
        self.tail.map_or(true, |t| t.c == 0.0)
            && self.pieces.iter().all(|p| {
                p.coeffs.first() == Some(&1.0) && p.coeffs.iter().skip(1).all(|&c| c == 0.0)
            })
    }

    /// Exact integral of `f` over `[a, b]` (both inside the domain).
    pub fn integrate_interval(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        let brk = self.break_end();
        let mut total = 0.0;
        let (a0, b0) = (a.min(brk), b.min(brk));
        if b0 > a0 {
            total += self.integrate_pieces(a0, b0);
        }
        if b > brk {
            let ta = a.max(brk);
            if let Some(tail) = self.tail {
                // ∫ (1 + c/t²) dt = (b − a) + c (1/a − 1/b)
                total += (b - ta) + tail.c * (1.0 / ta - 1.0 / b);
            }
        }
        total
    }

    fn integrate_pieces(&self, a: f64, b: f64) -> f64 {
        let lo_idx = self.piece_index(a);
        let hi_idx = self.piece_index(b);
        if lo_idx == hi_idx {
            return self.pieces[lo_idx].integral(a, b);
        }
        let mut total = self.pieces[lo_idx].integral(a, self.pieces[lo_idx].to);
        total += self.cum[hi_idx] - self.cum[lo_idx + 1];
        total += self.pieces[hi_idx].integral(self.pieces[hi_idx].from, b);
        total
    }

    fn piece_index(&self, t: f64) -> usize {
        match self
            .pieces
            .binary_search_by(|p| p.from.partial_cmp(&t).unwrap())
        {
            Ok(i) => i.min(self.pieces.len() - 1),
            Err(0) => 0,
            Err(i) => i - 1,
        }
    }

    /// Integral of `f − 1` over `[a, b]`; closed form on the tail as well.
    pub fn integrate_minus_one_interval(&self, a: f64, b: f64) -> f64 {
        self.integrate_interval(a, b) - (b - a)
    }

    /// μ_f(E): exact integral over every part of `E`.
    pub fn integrate_over(&self, e: &IntervalSet) -> Result<f64> {
        if !self.domain.contains_set(e) {
            return Err(Error::Domain(format!(
                "set {e} lies outside the density domain"
            )));
        }
        Ok(e.parts()
            .iter()
            .map(|p| self.integrate_interval(p.lo, p.hi))
            .sum())
    }

    /// Total mass of the density over its full bounded domain.
    pub fn total(&self) -> Result<f64> {
        match self.domain.hi {
            Some(hi) => Ok(self.integrate_interval(self.domain.lo, hi)),
            None => Err(Error::Domain("total of an unbounded density".into())),
        }
    }

    /// Midpoint-rule approximation over `E`; used as an independent oracle in
    /// tests.
    pub fn riemann_oracle(&self, e: &IntervalSet, n_samples: usize) -> f64 {
        let n_samples = n_samples.max(1);
        let total_len = e.measure();
        if total_len == 0.0 {
            return 0.0;
        }
        let mut sum = 0.0;
        for part in e.parts() {
            let len = part.length();
            if len == 0.0 {
                continue;
            }
            let n = ((n_samples as f64 * len / total_len).round() as usize).max(1);
            let h = len / n as f64;
            for j in 0..n {
                let t = part.lo + (j as f64 + 0.5) * h;
                sum += self.value(t) * h;
            }
        }
        sum
    }

    /// Pointwise `a·self + b·other` for bounded densities on a shared domain.
    pub fn linear_combine(a: f64, f: &Density, b: f64, g: &Density) -> Result<Density> {
        if f.tail.is_some() || g.tail.is_some() {
            return Err(Error::Domain("linear_combine requires bounded densities".into()));
        }
        if f.domain != g.domain {
            return Err(Error::Domain("densities live on different domains".into()));
        }
        let mut breaks: Vec<f64> = f
            .pieces
            .iter()
            .chain(g.pieces.iter())
            .flat_map(|p| [p.from, p.to])
            .collect();
        breaks.sort_by(|x, y| x.partial_cmp(y).unwrap());
        breaks.dedup_by(|x, y| (*x - *y).abs() < 1e-13);
        let mut pieces = Vec::new();
        for w in breaks.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            let fi = &f.pieces[f.piece_index(0.5 * (lo + hi))];
            let gi = &g.pieces[g.piece_index(0.5 * (lo + hi))];
            let deg = fi.coeffs.len().max(gi.coeffs.len());
            let mut coeffs = vec![0.0; deg];
            for (k, c) in fi.coeffs.iter().enumerate() {
                coeffs[k] += a * c;
            }
            for (k, c) in gi.coeffs.iter().enumerate() {
                coeffs[k] += b * c;
            }
            pieces.push(Piece { from: lo, to: hi, coeffs });
        }
        Density::new(f.domain, pieces, None)
    }

    /// Integral of |f| over `[a, b]`, splitting at sign roots (bounded part
    /// of the domain only).
    pub fn integrate_abs_interval(&self, a: f64, b: f64) -> f64 {
        let brk = self.break_end();
        let (a0, b0) = (a.min(brk), b.min(brk));
        let mut total = 0.0;
        if b0 > a0 {
            let lo_idx = self.piece_index(a0);
            let hi_idx = self.piece_index(b0);
            for p in &self.pieces[lo_idx..=hi_idx] {
                let (lo, hi) = (p.from.max(a0), p.to.min(b0));
                if hi <= lo {
                    continue;
                }
                let mut cuts = vec![lo, hi];
                cuts.extend(roots_in(&p.coeffs, lo, hi));
                cuts.sort_by(|x, y| x.partial_cmp(y).unwrap());
                for w in cuts.windows(2) {
                    if w[1] > w[0] {
                        total += p.integral(w[0], w[1]).abs();
                    }
                }
            }
        }
        if b > brk {
            if let Some(tail) = self.tail {
                let ta = a.max(brk);
                let mut cuts = vec![ta, b];
                if tail.c < 0.0 {
                    let r = (-tail.c).sqrt();
                    if r > ta && r < b {
                        cuts.insert(1, r);
                    }
                }
                for w in cuts.windows(2) {
                    total += ((w[1] - w[0]) + tail.c * (1.0 / w[0] - 1.0 / w[1])).abs();
                }
            }
        }
        total
    }

    /// ∫_E |f| dμ.
    pub fn integrate_abs_over(&self, e: &IntervalSet) -> Result<f64> {
        if !self.domain.contains_set(e) {
            return Err(Error::Domain(format!(
                "set {e} lies outside the density domain"
            )));
        }
        Ok(e.parts()
            .iter()
            .map(|p| self.integrate_abs_interval(p.lo, p.hi))
            .sum())
    }

    /// Integral of |f| over the region where |f| > m, restricted to the
    /// bounded part of the domain (the tail satisfies |f| <= 1 + |c| and is
    /// handled by the caller's choice of m).
    fn abs_integral_above(&self, m: f64) -> f64 {
        let mut total = 0.0;
        for p in &self.pieces {
            let mut cuts = vec![p.from];
            let mut up = p.coeffs.clone();
            up[0] -= m;
            cuts.extend(roots_in(&up, p.from, p.to));
            let mut down = p.coeffs.clone();
            down[0] += m;
            cuts.extend(roots_in(&down, p.from, p.to));
            cuts.push(p.to);
            cuts.sort_by(|x, y| x.partial_cmp(y).unwrap());
            for w in cuts.windows(2) {
                let (lo, hi) = (w[0], w[1]);
                if hi <= lo {
                    continue;
                }
                let mid = 0.5 * (lo + hi);
                if p.value(mid).abs() > m {
                    total += p.integral(lo, hi).abs();
                }
            }
        }
        // tails are rejected by ui_delta before this is reached
        total
    }
}

fn poly_eval(coeffs: &[f64], t: f64) -> f64 {
    let mut v = 0.0;
    for &c in coeffs.iter().rev() {
        v = v * t + c;
    }
    v
}

fn poly_integral(coeffs: &[f64], a: f64, b: f64) -> f64 {
    let mut v = 0.0;
    let mut pa = 1.0;
    let mut pb = 1.0;
    for (k, &c) in coeffs.iter().enumerate() {
        v += c / (k as f64 + 1.0) * (pb * b - pa * a);
        pa *= a;
        pb *= b;
    }
    v
}

/// Real roots of a degree-<=3 polynomial inside `(a, b)`, found by splitting
/// at critical points and bisecting each monotone piece.
pub(crate) fn roots_in(coeffs: &[f64], a: f64, b: f64) -> Vec<f64> {
    let mut knots = vec![a, b];
    // derivative has degree <= 2
    let deriv: Vec<f64> = coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, &c)| c * k as f64)
        .collect();
    if deriv.len() == 3 && deriv[2] != 0.0 {
        let disc = deriv[1] * deriv[1] - 4.0 * deriv[2] * deriv[0];
        if disc >= 0.0 {
            let s = disc.sqrt();
            for r in [(-deriv[1] - s) / (2.0 * deriv[2]), (-deriv[1] + s) / (2.0 * deriv[2])] {
                if r > a && r < b {
                    knots.push(r);
                }
            }
        }
    } else if deriv.len() == 2 && deriv[1] != 0.0 {
        let r = -deriv[0] / deriv[1];
        if r > a && r < b {
            knots.push(r);
        }
    }
    knots.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let mut roots = Vec::new();
    for w in knots.windows(2) {
        let (mut lo, mut hi) = (w[0], w[1]);
        let (flo, fhi) = (poly_eval(coeffs, lo), poly_eval(coeffs, hi));
        if flo == 0.0 {
            roots.push(lo);
            continue;
        }
        if flo * fhi > 0.0 {
            continue;
        }
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            let fm = poly_eval(coeffs, mid);
            if fm == 0.0 {
                lo = mid;
                break;
            }
            if flo * fm < 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        roots.push(0.5 * (lo + hi));
    }
    roots
}

/// A finite family of densities over a common domain.
#[derive(Debug, Clone)]
pub struct DensityFamily {
    pub members: Vec<Density>,
}

impl DensityFamily {
    pub fn new(members: Vec<Density>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::Validation("density family must be non-empty".into()));
        }
        let d0 = members[0].domain();
        if members.iter().any(|m| m.domain() != d0) {
            return Err(Error::Validation("family members must share a domain".into()));
        }
        Ok(DensityFamily { members })
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Rescale every member to total mass 1 and prepend the constant density
    /// if it is absent.  Members of total zero are shifted by the constant 1
    /// instead of scaled.
    pub fn normalize(&self) -> Result<DensityFamily> {
        let one = Density::constant(1.0);
        let mut out = Vec::with_capacity(self.members.len() + 1);
        if !self.members.iter().any(Density::is_constant_one) {
            out.push(one.clone());
        }
        for f in &self.members {
            let total = f.total()?;
            if total.abs() < 1e-12 {
                out.push(Density::linear_combine(1.0, f, 1.0, &one)?);
            } else {
                out.push(Density::linear_combine(1.0 / total, f, 0.0, &one)?);
            }
        }
        DensityFamily::new(out)
    }

    /// Uniform-integrability modulus: returns δ > 0 such that
    /// `measure(A) < δ` implies `∫_A |f| dμ < eps` for every member.
    pub fn ui_delta(&self, eps: f64) -> Result<f64> {
        if eps <= 0.0 {
            return Err(Error::Range("ui_delta requires eps > 0".into()));
        }
        if self.members.iter().any(|f| f.tail().is_some()) {
            return Err(Error::Domain("ui_delta requires bounded densities".into()));
        }
        let mut m = 1.0;
        for _ in 0..200 {
            let worst = self
                .members
                .iter()
                .map(|f| f.abs_integral_above(m))
                .fold(0.0f64, f64::max);
            if worst < eps / 2.0 {
                return Ok(eps / (4.0 * m));
            }
            m *= 2.0;
        }
        Err(Error::Resolution("ui_delta truncation level did not converge".into()))
    }
}
