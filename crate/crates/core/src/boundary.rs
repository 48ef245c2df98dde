//! Compact sets `E` of the unit circle containing the point 1, described by
//! their complementary arcs.
//!
//! Point sequences and the Cantor set live on the angles `[0, 1]`; the flag
//! `mirror` adds the reflected copy on `[-1, 0]`.  Distances are chordal.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{usage, Error, Result};

/// Largest Cantor depth whose endpoints `k/3^N` fit in 63 bits.
pub const MAX_CANTOR_DEPTH: u32 = 38;

/// Largest number of arcs a single enumeration may return.
pub const MAX_ENUMERATED_ARCS: usize = 5_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PointRule {
    /// `a_n = 2^{-n}`, `n ≥ 0`.
    Geometric,
    /// `a_n = 2^{-2^n}`, `n ≥ 0`.
    DoublyExp,
    /// `a_n = exp(-n^{1-β})`, `n ≥ 1`.
    Beta(f64),
}

impl PointRule {
    pub fn first_index(self) -> f64 {
        match self {
            PointRule::Beta(_) => 1.0,
            _ => 0.0,
        }
    }

    /// `ℓ(n) = log(1/a_n)`, extended to real `n`.
    pub fn ell(self, n: f64) -> f64 {
        match self {
            PointRule::Geometric => n * std::f64::consts::LN_2,
            PointRule::DoublyExp => n.exp2() * std::f64::consts::LN_2,
            PointRule::Beta(b) => n.powf(1.0 - b),
        }
    }

    /// `ℓ(n+1) - ℓ(n)` without cancellation.
    pub fn ell_step(self, n: f64) -> f64 {
        match self {
            PointRule::Geometric => std::f64::consts::LN_2,
            PointRule::DoublyExp => n.exp2() * std::f64::consts::LN_2,
            PointRule::Beta(b) => {
                let e = 1.0 - b;
                n.powf(e) * (e * (1.0 / n).ln_1p()).exp_m1()
            }
        }
    }

    /// Real inverse of `ℓ`.
    pub fn ell_inv(self, l: f64) -> f64 {
        match self {
            PointRule::Geometric => l / std::f64::consts::LN_2,
            PointRule::DoublyExp => (l / std::f64::consts::LN_2).log2(),
            PointRule::Beta(b) => l.powf(1.0 / (1.0 - b)),
        }
    }

    pub fn point(self, n: f64) -> f64 {
        match self {
            PointRule::Geometric => (-n).exp2(),
            PointRule::DoublyExp => (-n.exp2()).exp2(),
            PointRule::Beta(_) => (-self.ell(n)).exp(),
        }
    }

    /// Gap ratio `1 - a_{n+1}/a_n` of arc `n`.
    pub fn gap_ratio(self, n: f64) -> f64 {
        -(-self.ell_step(n)).exp_m1()
    }

    /// Largest index `n ≥ first_index` with `ℓ(n) ≤ l`, or `None` when
    /// `ℓ(first) > l`.
    pub fn index_at_or_below(self, l: f64) -> Option<f64> {
        let n0 = self.first_index();
        if self.ell(n0) > l {
            return None;
        }
        let mut n = self.ell_inv(l).floor().max(n0);
        // Above 2^53 consecutive indices are not representable; the floor
        // estimate is then as good as it gets.
        while n > n0 && n - 1.0 < n && self.ell(n) > l {
            n -= 1.0;
        }
        while n + 1.0 > n && self.ell(n + 1.0) <= l {
            n += 1.0;
        }
        Some(n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SetKind {
    FullCircle,
    /// `E = {1}`.
    SinglePoint,
    /// The closed arc of angles `[a, b]`, `a ≤ 0 ≤ b`.
    SingleArc { a: f64, b: f64 },
    PointSeq(PointRule),
    CantorTernary { depth: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SetJson", into = "SetJson")]
pub struct BoundarySet {
    pub kind: SetKind,
    pub mirror: bool,
}

/// Open complementary arc `(a, b)` of angles on the positive side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arc {
    pub a: f64,
    pub b: f64,
}

impl Arc {
    /// `1 - a/b`.
    pub fn gap_ratio(&self) -> f64 {
        (self.b - self.a) / self.b
    }
}

/// `num / 3^exp`, exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Triadic {
    pub num: u64,
    pub exp: u32,
}

impl Triadic {
    pub fn to_f64(self) -> f64 {
        self.num as f64 / 3f64.powi(self.exp as i32)
    }
}

/// Middle-third gap `(a, b)` with exact endpoints of generation `exp`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CantorGap {
    pub a: Triadic,
    pub b: Triadic,
}

impl BoundarySet {
    pub fn new(kind: SetKind, mirror: bool) -> Result<Self> {
        match kind {
            SetKind::SingleArc { a, b } if !(a <= 0.0 && b >= 0.0 && b - a < 2.0 * std::f64::consts::PI) => {
                return usage(format!("arc [{a}, {b}] must contain 0 and be shorter than the circle"))
            }
            SetKind::PointSeq(PointRule::Beta(b)) if !(0.0..=0.5).contains(&b) => {
                return usage(format!("beta must lie in [0, 1/2], got {b}"))
            }
            SetKind::CantorTernary { depth: 0 } => return usage("Cantor depth must be at least 1"),
            SetKind::CantorTernary { depth } if depth > MAX_CANTOR_DEPTH => {
                return Err(Error::Capacity(format!(
                    "Cantor depth {depth} exceeds the exact-integer limit {MAX_CANTOR_DEPTH}"
                )))
            }
            _ => {}
        }
        Ok(BoundarySet { kind, mirror })
    }

    pub fn full() -> Self {
        BoundarySet { kind: SetKind::FullCircle, mirror: false }
    }

    pub fn point() -> Self {
        BoundarySet { kind: SetKind::SinglePoint, mirror: false }
    }

    pub fn arc(a: f64, b: f64) -> Result<Self> {
        Self::new(SetKind::SingleArc { a, b }, false)
    }

    pub fn points(rule: PointRule) -> Result<Self> {
        Self::new(SetKind::PointSeq(rule), false)
    }

    pub fn cantor(depth: u32) -> Result<Self> {
        Self::new(SetKind::CantorTernary { depth }, false)
    }

    pub fn mirrored(self, mirror: bool) -> Self {
        BoundarySet { mirror, ..self }
    }

    /// True when the set has only finitely many complementary arcs.
    pub fn is_finite(&self) -> bool {
        !matches!(self.kind, SetKind::PointSeq(_))
    }

    /// Complementary arcs on the positive side meeting `(cutoff, 1]`,
    /// with `b` clipped to 1 and sorted by decreasing `b`.
    pub fn complementary_arcs(&self, cutoff: f64) -> Result<Vec<Arc>> {
        if cutoff.is_nan() || cutoff < 0.0 || (cutoff == 0.0 && !self.is_finite()) {
            return usage(format!("cutoff must be positive, got {cutoff}"));
        }
        let mut arcs = Vec::new();
        match self.kind {
            SetKind::FullCircle => {}
            SetKind::SinglePoint => arcs.push(Arc { a: 0.0, b: 1.0 }),
            SetKind::SingleArc { b, .. } => {
                if b < 1.0 {
                    arcs.push(Arc { a: b, b: 1.0 });
                }
            }
            SetKind::PointSeq(rule) => {
                let mut n = rule.first_index();
                let top = rule.point(n);
                if top < 1.0 {
                    arcs.push(Arc { a: top, b: 1.0 });
                }
                loop {
                    let b = rule.point(n);
                    if b <= cutoff || b == 0.0 {
                        break;
                    }
                    if arcs.len() >= MAX_ENUMERATED_ARCS {
                        return Err(Error::Capacity(format!("more than {MAX_ENUMERATED_ARCS} arcs above {cutoff}")));
                    }
                    arcs.push(Arc { a: rule.point(n + 1.0), b });
                    n += 1.0;
                }
            }
            SetKind::CantorTernary { depth } => {
                for g in self.cantor_gaps(cutoff)? {
                    arcs.push(Arc { a: g.a.to_f64(), b: g.b.to_f64() });
                }
                let _ = depth;
            }
        }
        arcs.retain(|a| a.b > cutoff);
        arcs.sort_by(|x, y| y.b.total_cmp(&x.b));
        Ok(arcs)
    }

    /// All middle-third gaps of generations `1..=depth` with `b > cutoff`,
    /// in exact arithmetic.
    pub fn cantor_gaps(&self, cutoff: f64) -> Result<Vec<CantorGap>> {
        let SetKind::CantorTernary { depth } = self.kind else {
            return usage("cantor_gaps needs a Cantor set");
        };
        let mut out = Vec::new();
        // Interval [k/3^g, (k+1)/3^g] of generation g.
        let mut stack = vec![(0u64, 0u32)];
        while let Some((k, g)) = stack.pop() {
            if g >= depth {
                continue;
            }
            let right = Triadic { num: k + 1, exp: g }.to_f64();
            if right <= cutoff {
                continue;
            }
            let gap = CantorGap { a: Triadic { num: 3 * k + 1, exp: g + 1 }, b: Triadic { num: 3 * k + 2, exp: g + 1 } };
            if gap.b.to_f64() > cutoff {
                if out.len() >= MAX_ENUMERATED_ARCS {
                    return Err(Error::Capacity(format!(
                        "Cantor depth {depth} above cutoff {cutoff} has more than {MAX_ENUMERATED_ARCS} gaps"
                    )));
                }
                out.push(gap);
            }
            stack.push((3 * k, g + 1));
            stack.push((3 * k + 2, g + 1));
        }
        out.sort_by(|x, y| {
            let (bx, by) = (x.b.to_f64(), y.b.to_f64());
            by.total_cmp(&bx)
        });
        Ok(out)
    }

    /// Angle of a point of `E` nearest (along the circle) to the angle `theta`.
    pub fn nearest_angle(&self, theta: f64) -> f64 {
        use std::f64::consts::PI;
        let theta = wrap(theta);
        let mut cands: Vec<f64> = Vec::with_capacity(8);
        let populated = theta >= 0.0 || self.mirror;
        let s = if theta >= 0.0 { 1.0 } else { -1.0 };
        let x = theta.abs();
        match self.kind {
            SetKind::FullCircle => return theta,
            SetKind::SinglePoint => return 0.0,
            SetKind::SingleArc { a, b } => {
                if theta >= a && theta <= b {
                    return theta;
                }
                cands.extend([a, b]);
            }
            SetKind::PointSeq(rule) => {
                let top = rule.point(rule.first_index());
                cands.extend([0.0, top]);
                if self.mirror {
                    cands.push(-top);
                }
                if populated && x > 0.0 && x <= top {
                    if let Some(n) = rule.index_at_or_below(-x.ln()) {
                        for k in [n - 1.0, n, n + 1.0, n + 2.0] {
                            if k >= rule.first_index() {
                                cands.push(s * rule.point(k));
                            }
                        }
                    }
                }
            }
            SetKind::CantorTernary { depth } => {
                cands.extend([0.0, 1.0]);
                if self.mirror {
                    cands.push(-1.0);
                }
                if populated && x <= 1.0 {
                    match cantor_locate(x, depth) {
                        None => return theta,
                        Some((a, b)) => cands.extend([s * a, s * b]),
                    }
                }
            }
        }
        let mut best = cands[0];
        let mut best_d = PI * 4.0;
        for c in cands {
            let d = wrap(theta - c).abs();
            if d < best_d {
                best_d = d;
                best = c;
            }
        }
        best
    }

    /// Euclidean distance from `z` (`|z| ≤ 1`) to `E`.
    pub fn distance_to_set(&self, z: Complex64) -> Result<f64> {
        if !(z.norm() <= 1.0 + 1e-12) {
            return usage(format!("point {z} lies outside the closed disc"));
        }
        if z.norm() == 0.0 {
            return Ok(1.0);
        }
        let eta = self.nearest_angle(z.arg());
        Ok((z - Complex64::from_polar(1.0, eta)).norm())
    }

    /// Chordal distance from `e^{iθ}` to `E`; exactly 0 on `E`.
    pub fn distance_on_circle(&self, theta: f64) -> f64 {
        let eta = self.nearest_angle(theta);
        2.0 * (0.5 * wrap(theta - eta)).sin().abs()
    }

    /// Total length of complementary arcs inside `[eps, 1]` (positive side).
    pub fn measure_complement(&self, eps: f64) -> Result<f64> {
        if !(0.0..1.0).contains(&eps) {
            return usage(format!("eps must lie in [0, 1), got {eps}"));
        }
        Ok(match self.kind {
            SetKind::FullCircle => 0.0,
            SetKind::SinglePoint | SetKind::PointSeq(_) => 1.0 - eps,
            SetKind::SingleArc { b, .. } => (1.0 - eps.max(b)).max(0.0),
            SetKind::CantorTernary { depth } => {
                let total = (2.0f64 / 3.0).powi(depth as i32);
                (1.0 - eps) - (total - cantor_measure_below(eps, depth))
            }
        })
    }
}

fn wrap(x: f64) -> f64 {
    use std::f64::consts::PI;
    let y = x.rem_euclid(2.0 * PI);
    if y > PI {
        y - 2.0 * PI
    } else {
        y
    }
}

/// For `x ∈ [0, 1]`: `None` when `x` lies in the depth-`N` Cantor level set,
/// otherwise the endpoints of the gap containing it.
fn cantor_locate(x: f64, depth: u32) -> Option<(f64, f64)> {
    let scale = 3f64.powi(depth as i32);
    let k = ((x * scale).floor() as u64).min(3u64.pow(depth) - 1);
    let mut prefix = 0u64;
    for g in 1..=depth {
        let digit = (k / 3u64.pow(depth - g)) % 3;
        if digit == 1 {
            let a = Triadic { num: 3 * prefix + 1, exp: g }.to_f64();
            let b = Triadic { num: 3 * prefix + 2, exp: g }.to_f64();
            return Some((a, b));
        }
        prefix = 3 * prefix + digit;
    }
    None
}

/// Lebesgue measure of the depth-`N` level set intersected with `[0, x]`.
fn cantor_measure_below(x: f64, depth: u32) -> f64 {
    let mut lo = 0.0;
    let mut len = 1.0;
    let mut acc = 0.0;
    // measure of the level set inside the current interval
    let mut piece = (2.0f64 / 3.0).powi(depth as i32);
    for _ in 0..depth {
        len /= 3.0;
        piece *= 0.5;
        if x <= lo + len {
            continue;
        }
        if x < lo + 2.0 * len {
            return acc + piece;
        }
        acc += piece;
        lo += 2.0 * len;
    }
    acc + piece * ((x - lo) / len).clamp(0.0, 1.0)
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SetJson {
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    depth: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    b: Option<f64>,
    #[serde(default)]
    mirror: bool,
}

impl TryFrom<SetJson> for BoundarySet {
    type Error = Error;

    fn try_from(j: SetJson) -> Result<Self> {
        let extra = |allowed: &[&str]| -> Result<()> {
            let present = [("beta", j.beta.is_some()), ("depth", j.depth.is_some()), ("a", j.a.is_some()), ("b", j.b.is_some())];
            for (name, set) in present {
                if set && !allowed.contains(&name) {
                    return usage(format!("set kind `{}` does not take `{name}`", j.kind));
                }
            }
            Ok(())
        };
        let kind = match j.kind.as_str() {
            "full" => {
                extra(&[])?;
                SetKind::FullCircle
            }
            "point" => {
                extra(&[])?;
                SetKind::SinglePoint
            }
            "arc" => {
                extra(&["a", "b"])?;
                SetKind::SingleArc {
                    a: j.a.ok_or_else(|| Error::Usage("arc needs `a`".into()))?,
                    b: j.b.ok_or_else(|| Error::Usage("arc needs `b`".into()))?,
                }
            }
            "geometric" => {
                extra(&[])?;
                SetKind::PointSeq(PointRule::Geometric)
            }
            "doubly_exp" => {
                extra(&[])?;
                SetKind::PointSeq(PointRule::DoublyExp)
            }
            "beta" => {
                extra(&["beta"])?;
                SetKind::PointSeq(PointRule::Beta(j.beta.ok_or_else(|| Error::Usage("beta set needs `beta`".into()))?))
            }
            "cantor" => {
                extra(&["depth"])?;
                SetKind::CantorTernary { depth: j.depth.unwrap_or(30) }
            }
            other => return usage(format!("unknown set kind `{other}`")),
        };
        BoundarySet::new(kind, j.mirror)
    }
}

impl From<BoundarySet> for SetJson {
    fn from(s: BoundarySet) -> Self {
        let mut j = SetJson { kind: String::new(), beta: None, depth: None, a: None, b: None, mirror: s.mirror };
        j.kind = match s.kind {
            SetKind::FullCircle => "full",
            SetKind::SinglePoint => "point",
            SetKind::SingleArc { a, b } => {
                j.a = Some(a);
                j.b = Some(b);
                "arc"
            }
            SetKind::PointSeq(PointRule::Geometric) => "geometric",
            SetKind::PointSeq(PointRule::DoublyExp) => "doubly_exp",
            SetKind::PointSeq(PointRule::Beta(b)) => {
                j.beta = Some(b);
                "beta"
            }
            SetKind::CantorTernary { depth } => {
                j.depth = Some(depth);
                "cantor"
            }
        }
        .into();
        j
    }
}
