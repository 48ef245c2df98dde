//! Per-band evaluation of the criterion terms for each side of the set.

use std::ops::AddAssign;

use crate::boundary::{BoundarySet, PointRule, SetKind};
use crate::error::Result;
use crate::quad::sum_smooth;
use crate::weights::WeightSpec;

use super::cantor::CantorEngine;
use super::{pint_w, ArcClass};

/// Point-sequence sums switch from direct loops to smooth summation above
/// this many arcs.
pub(crate) const DIRECT_ARC_LIMIT: f64 = 20_000.0;

/// Weight data in the log variable `L = ln(1/t)`; `w` is the effective
/// `w/√c₀`, so that `Λ = 1/(t w²)`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Ctx {
    pub nu: f64,
    pub c0: f64,
    pub sqrt_c0: f64,
    half_ln_c0: f64,
    pub l_star: f64,
}

impl Ctx {
    pub fn new(weight: &WeightSpec) -> Self {
        Ctx {
            nu: weight.nu(),
            c0: weight.scale,
            sqrt_c0: weight.scale.sqrt(),
            half_ln_c0: 0.5 * weight.scale.ln(),
            l_star: weight.l_cut(),
        }
    }

    pub fn ln_w(&self, l: f64) -> f64 {
        if self.nu == 0.0 {
            -self.half_ln_c0
        } else {
            self.nu * l.ln() - self.half_ln_c0
        }
    }

    pub fn w(&self, l: f64) -> f64 {
        if self.nu == 0.0 {
            1.0 / self.sqrt_c0
        } else {
            l.powf(self.nu) / self.sqrt_c0
        }
    }

    pub fn class(&self, r: f64, l: f64) -> ArcClass {
        if r >= 0.5 {
            ArcClass::Long
        } else if r * self.w(l) < 2.0 {
            ArcClass::Short
        } else {
            ArcClass::Intermediate
        }
    }

    /// `∫ dt/(t w)` over `L ∈ [l1, l1 + width]`.
    pub fn short_int(&self, l1: f64, width: f64) -> f64 {
        self.sqrt_c0 * pint_w(self.nu, l1, width)
    }

    /// `∫ dt/(t w²)` over `L ∈ [l1, l1 + width]`.
    pub fn long_int(&self, l1: f64, width: f64) -> f64 {
        self.c0 * pint_w(2.0 * self.nu, l1, width)
    }

    /// `log(r w)/w²` at `L = l`.
    pub fn inter_term(&self, r: f64, l: f64) -> f64 {
        let lw = self.ln_w(l);
        (r.ln() + lw) * (-2.0 * lw).exp()
    }

    /// `log⁺ w / w²` at `L = l`.
    pub fn log_plus(&self, l: f64) -> f64 {
        let lw = self.ln_w(l);
        lw.max(0.0) * (-2.0 * lw).exp()
    }

    /// `log(1 + r w)/w²` at `L = l`.
    pub fn q3_term(&self, r: f64, l: f64) -> f64 {
        let lw = self.ln_w(l);
        (r * lw.exp()).ln_1p() * (-2.0 * lw).exp()
    }

    /// Scores one arc `(e^{-(lb+width)}, e^{-lb})` with gap ratio `r`.
    /// The part above `t*` is dropped and the rest reclassified; the
    /// discrete terms count in the band holding `lb`, the integrals are
    /// clipped to the band.
    #[allow(clippy::too_many_arguments)]
    pub fn gap(&self, lb: f64, width: f64, r: f64, band: Band, t: &mut Terms, classed: bool, q3: bool) {
        let (lb, width, r) = if lb < self.l_star {
            let la = lb + width;
            if la <= self.l_star {
                return;
            }
            let w = la - self.l_star;
            (self.l_star, w, if w.is_infinite() { 1.0 } else { -(-w).exp_m1() })
        } else {
            (lb, width, r)
        };
        let discrete = band.holds(lb);
        if classed {
            match self.class(r, lb) {
                ArcClass::Short => {
                    if let Some((s, w)) = band.clip(lb, width) {
                        t.es += self.short_int(s, w);
                    }
                }
                ArcClass::Intermediate => {
                    if discrete {
                        t.inter += self.inter_term(r, lb);
                    }
                }
                ArcClass::Long => {
                    if let Some((s, w)) = band.clip(lb, width) {
                        t.long += self.long_int(s, w);
                    }
                    if discrete {
                        t.long += self.log_plus(lb);
                    }
                }
            }
        }
        if q3 && discrete {
            t.q3 += self.q3_term(r, lb);
        }
    }

    /// Smallest integer `m` with `pred(m·step + off)`, for a predicate that is
    /// monotone in `L` (false below a threshold `l_thr`, true above).
    /// Returns a huge sentinel when the predicate never (or always) holds.
    pub fn first_level(&self, step: f64, off: f64, l_thr: f64, pred: impl Fn(f64) -> bool) -> i64 {
        const NEVER: i64 = i64::MAX / 4;
        if self.nu == 0.0 || !l_thr.is_finite() {
            return if pred(1.0) { -NEVER } else { NEVER };
        }
        let est = ((l_thr - off) / step).ceil().clamp(-1e15, 1e15) as i64;
        let holds = |m: i64| {
            let l = m as f64 * step + off;
            l > 0.0 && pred(l)
        };
        let mut m = est;
        while holds(m - 1) {
            m -= 1;
        }
        while !holds(m) {
            m += 1;
        }
        m
    }

    /// `L` at which `r·w(L) = x`.
    pub fn level_for(&self, x: f64, r: f64) -> f64 {
        if self.nu == 0.0 {
            return f64::NAN;
        }
        (((x / r).ln() + self.half_ln_c0) / self.nu).exp()
    }
}

/// Half-open band `[lo, hi)` of the log variable.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Band {
    pub lo: f64,
    pub hi: f64,
}

impl Band {
    pub fn holds(&self, l: f64) -> bool {
        l >= self.lo && l < self.hi
    }

    /// `[l1, l1 + width] ∩ [lo, hi]` as `(start, width)`.
    pub fn clip(&self, l1: f64, width: f64) -> Option<(f64, f64)> {
        let l2 = l1 + width;
        if l2 <= self.lo || l1 >= self.hi {
            None
        } else if l1 >= self.lo && l2 <= self.hi {
            Some((l1, width))
        } else {
            let s = l1.max(self.lo);
            Some((s, l2.min(self.hi) - s))
        }
    }
}

/// Band totals: the class-based pieces and the two set-dependent pieces of the
/// three-quantity form.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub(crate) struct Terms {
    pub es: f64,
    pub inter: f64,
    pub long: f64,
    pub q1: f64,
    pub q3: f64,
}

impl AddAssign for Terms {
    fn add_assign(&mut self, o: Terms) {
        self.es += o.es;
        self.inter += o.inter;
        self.long += o.long;
        self.q1 += o.q1;
        self.q3 += o.q3;
    }
}

/// One half-circle of the set in the coordinate `t = |angle|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Side {
    Full,
    /// `E ⊇ [0, b0]` and the complementary arc `(b0, π)`.
    Interval(f64),
    Points(PointRule),
    Cantor(u32),
}

pub(crate) fn sides(set: &BoundarySet) -> [Side; 2] {
    let positive = match set.kind {
        SetKind::FullCircle => return [Side::Full, Side::Full],
        SetKind::SinglePoint => Side::Interval(0.0),
        SetKind::SingleArc { a, b } => return [Side::Interval(b), Side::Interval(-a)],
        SetKind::PointSeq(rule) => Side::Points(rule),
        SetKind::CantorTernary { depth } => Side::Cantor(depth),
    };
    let negative = if set.mirror { positive } else { Side::Interval(0.0) };
    [positive, negative]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum RunKey {
    Short,
    Inter,
    LongNeg,
    LongPos,
}

#[derive(Debug, Clone, Copy)]
struct Run {
    n1: f64,
    n2: f64,
    key: RunKey,
}

/// Arcs of a point sequence grouped into runs of constant class.
#[derive(Debug, Clone)]
pub(crate) struct PointsPlan {
    rule: PointRule,
    /// The arc straddling `t*`, as `(lb, width, r)`.
    top: (f64, f64, f64),
    n0: f64,
    runs: Vec<Run>,
}

impl PointsPlan {
    pub fn new(ctx: &Ctx, rule: PointRule, l_max: f64) -> Self {
        let first = rule.first_index();
        let (top, n0) = match rule.index_at_or_below(ctx.l_star) {
            Some(n) => ((rule.ell(n), rule.ell_step(n), rule.gap_ratio(n)), n + 1.0),
            None => {
                let lf = rule.ell(first);
                let lpi = -std::f64::consts::PI.ln();
                ((lpi, lf - lpi, 1.0 - rule.point(first) / std::f64::consts::PI), first)
            }
        };
        let key = |n: f64| {
            let l = rule.ell(n);
            match ctx.class(rule.gap_ratio(n), l) {
                ArcClass::Short => RunKey::Short,
                ArcClass::Intermediate => RunKey::Inter,
                ArcClass::Long if ctx.ln_w(l) >= 0.0 => RunKey::LongPos,
                ArcClass::Long => RunKey::LongNeg,
            }
        };
        let mut runs = Vec::new();
        if let Some(n_last) = rule.index_at_or_below(l_max).filter(|&n| n >= n0) {
            let mut start = n0;
            let mut cur = key(n0);
            let mut n = n0;
            loop {
                let next = if n - n0 < 2048.0 { n + 1.0 } else { (n * 1.02).floor() }.min(n_last);
                if next <= n {
                    break;
                }
                if key(next) == cur {
                    n = next;
                    continue;
                }
                let (mut lo, mut hi) = (n, next);
                while hi - lo > 1.0 {
                    let mid = ((lo + hi) * 0.5).floor();
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    if key(mid) == cur {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                runs.push(Run { n1: start, n2: lo, key: cur });
                start = hi;
                cur = key(hi);
                n = hi;
            }
            runs.push(Run { n1: start, n2: n_last, key: cur });
        }
        PointsPlan { rule, top, n0, runs }
    }

    pub fn band(&self, ctx: &Ctx, band: Band) -> Terms {
        let rule = self.rule;
        let mut t = Terms::default();
        let (lb, w, r) = self.top;
        ctx.gap(lb, w, r, band, &mut t, true, true);
        let na = match rule.index_at_or_below(band.lo) {
            Some(m) if rule.ell(m) < band.lo => m + 1.0,
            Some(m) => m,
            None => rule.first_index(),
        };
        let nb = match rule.index_at_or_below(band.hi) {
            Some(m) if rule.ell(m) >= band.hi => m - 1.0,
            Some(m) => m,
            None => return t,
        };
        let (na, nb) = (na.max(self.n0), nb);
        for run in &self.runs {
            let l1 = rule.ell(run.n1);
            let width = rule.ell(run.n2 + 1.0) - l1;
            if let Some((s, w)) = band.clip(l1, width) {
                match run.key {
                    RunKey::Short => t.es += ctx.short_int(s, w),
                    RunKey::LongNeg | RunKey::LongPos => t.long += ctx.long_int(s, w),
                    RunKey::Inter => {}
                }
            }
            let (d1, d2) = (run.n1.max(na), run.n2.min(nb));
            if d1 > d2 {
                continue;
            }
            let sum = |f: &dyn Fn(f64) -> f64| sum_smooth(f, d1, d2, DIRECT_ARC_LIMIT);
            match run.key {
                RunKey::Inter => t.inter += sum(&|n| ctx.inter_term(rule.gap_ratio(n), rule.ell(n))),
                RunKey::LongPos => t.long += sum(&|n| ctx.log_plus(rule.ell(n))),
                _ => {}
            }
            t.q3 += sum(&|n| ctx.q3_term(rule.gap_ratio(n), rule.ell(n)));
        }
        t
    }
}

/// Side-specific state shared across bands.
#[derive(Debug, Clone)]
pub(crate) enum Prepared {
    Full,
    Interval(f64),
    Points(PointsPlan),
    Cantor(u32),
}

impl Prepared {
    pub fn new(ctx: &Ctx, side: Side, l_max: f64) -> Self {
        match side {
            Side::Full => Prepared::Full,
            Side::Interval(b0) => Prepared::Interval(b0),
            Side::Points(rule) => Prepared::Points(PointsPlan::new(ctx, rule, l_max)),
            Side::Cantor(depth) => Prepared::Cantor(depth),
        }
    }

    pub fn band(&self, ctx: &Ctx, band: Band) -> Result<Terms> {
        self.band_with(ctx, band, false)
    }

    pub fn band_exact(&self, ctx: &Ctx, band: Band) -> Result<Terms> {
        self.band_with(ctx, band, true)
    }

    fn band_with(&self, ctx: &Ctx, band: Band, exact: bool) -> Result<Terms> {
        let mut t = Terms::default();
        match self {
            Prepared::Full => {
                let e = ctx.short_int(band.lo, band.hi - band.lo);
                t.es += e;
                t.q1 += e;
            }
            &Prepared::Interval(b0) => {
                let lb0 = if b0 > 0.0 { -b0.ln() } else { f64::INFINITY };
                if lb0 < band.hi {
                    let s = lb0.max(band.lo);
                    let e = ctx.short_int(s, band.hi - s);
                    t.es += e;
                    t.q1 += e;
                }
                if lb0 > ctx.l_star {
                    let width = lb0 - ctx.l_star;
                    let r = if width.is_infinite() { 1.0 } else { -(-width).exp_m1() };
                    ctx.gap(ctx.l_star, width, r, band, &mut t, true, true);
                }
            }
            Prepared::Points(plan) => t = plan.band(ctx, band),
            &Prepared::Cantor(depth) => {
                let engine = CantorEngine::new(ctx, depth);
                t = if exact { engine.exact() } else { engine }.band(band)?;
            }
        }
        Ok(t)
    }
}
