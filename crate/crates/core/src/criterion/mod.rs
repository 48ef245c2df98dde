//! The arc-classification criterion.
//!
//! Complementary arcs `(a, b)` on each side of 1 are short, intermediate or
//! long by their gap ratio `r = 1 - a/b` against `2/w(b)` and `1/2`.  The
//! criterion sum is
//!
//! ```text
//! ∫_{E ∪ short} dt/(t w) + Σ_inter log(r w(b))/w(b)² + Σ_long [∫ dt/(t w²) + log w(b)/w(b)²]
//! ```
//!
//! and the three-quantity form is `∫_E dt/(t w)`, `∫ dt/(t w²)` over both
//! sides, and `Σ log(1 + r w(b))/w(b)²` over all arcs.  Everything is
//! evaluated in `L = ln(1/t)` on the pure region `L ≥ L*` and accumulated
//! over bands between checkpoints `L_k`.

mod cantor;
mod engine;
mod oracle;
mod verdict;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boundary::{Arc, BoundarySet};
use crate::error::{domain, usage, Error, Result};
use crate::weights::{ConditionKind, WeightSpec};

use engine::{sides, Band, Ctx, Prepared, Terms};

pub use oracle::{teo3_threshold, threshold_oracle, Prediction, Theorem, INCONCLUSIVE_BAND, KAPPA};
pub use verdict::{divergence_verdict, DivergenceVerdict, Model, Verdict, MIN_POINTS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArcClass {
    Short,
    Intermediate,
    Long,
}

impl ArcClass {
    pub fn tag(self) -> &'static str {
        match self {
            ArcClass::Short => "short",
            ArcClass::Intermediate => "intermediate",
            ArcClass::Long => "long",
        }
    }
}

/// `∫_{l1}^{l2} L^{-β} dL`.
pub fn pint(beta: f64, l1: f64, l2: f64) -> f64 {
    pint_w(beta, l1, l2 - l1)
}

/// `∫ L^{-β} dL` over `[l1, l1 + width]`, accurate for thin intervals.
pub(crate) fn pint_w(beta: f64, l1: f64, width: f64) -> f64 {
    if width <= 0.0 {
        return 0.0;
    }
    let e = 1.0 - beta;
    if width.is_infinite() {
        return if e < 0.0 { l1.powf(e) / -e } else { f64::INFINITY };
    }
    let rho = (width / l1).ln_1p();
    let x = e * rho;
    if x == 0.0 {
        return l1.powf(e) * rho;
    }
    l1.powf(e) * rho * (x.exp_m1() / x)
}

/// The part of an arc inside the pure region as `(L_b, width, r)`.
fn pure_part(arc: &Arc, weight: &WeightSpec) -> Result<Option<(f64, f64, f64)>> {
    if !(arc.a >= 0.0 && arc.b > arc.a && arc.b.is_finite()) {
        return usage(format!("arc needs 0 <= a < b, got ({}, {})", arc.a, arc.b));
    }
    let ls = weight.l_cut();
    let la = if arc.a > 0.0 { -arc.a.ln() } else { f64::INFINITY };
    if la <= ls {
        return Ok(None);
    }
    let lb = -arc.b.ln();
    Ok(Some(if lb < ls {
        let w = la - ls;
        (ls, w, if w.is_infinite() { 1.0 } else { -(-w).exp_m1() })
    } else {
        let r = arc.gap_ratio();
        (lb, -(-r).ln_1p(), r)
    }))
}

/// Class of the arc, after dropping its part above `t*`.
pub fn classify_arc(arc: &Arc, weight: &WeightSpec) -> Result<ArcClass> {
    match pure_part(arc, weight)? {
        Some((lb, _, r)) => Ok(Ctx::new(weight).class(r, lb)),
        None => domain(format!("arc ({}, {}) lies above t* = {}", arc.a, arc.b, weight.pure_cut())),
    }
}

/// The arc's term in the criterion sum; zero for arcs above `t*`.
pub fn arc_contribution(arc: &Arc, class: ArcClass, weight: &WeightSpec) -> Result<f64> {
    let Some((lb, width, r)) = pure_part(arc, weight)? else {
        return Ok(0.0);
    };
    let ctx = Ctx::new(weight);
    let actual = ctx.class(r, lb);
    if actual != class {
        return Err(Error::Consistency(format!(
            "arc ({}, {}) is {}, not {}",
            arc.a,
            arc.b,
            actual.tag(),
            class.tag()
        )));
    }
    Ok(match class {
        ArcClass::Short => ctx.short_int(lb, width),
        ArcClass::Intermediate => ctx.inter_term(r, lb),
        ArcClass::Long => ctx.long_int(lb, width) + ctx.log_plus(lb),
    })
}

/// `L_k = 10·10^{k/4}`, `k < count`.
pub fn default_checkpoints(count: usize) -> Vec<f64> {
    (0..count).map(|k| 10.0 * 10f64.powf(k as f64 / 4.0)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriterionRow {
    /// `L_k = ln(1/ε_k)`.
    pub ln_inv_cutoff: f64,
    pub e_and_short_part: f64,
    pub intermediate_sum: f64,
    pub long_sum: f64,
    pub total: f64,
    /// `∫_E dt/(t w)`.
    pub alt_e: f64,
    /// `∫ dt/(t w²)` over both sides.
    pub alt_global: f64,
    /// `Σ log(1 + r w(b))/w(b)²`.
    pub alt_arcs: f64,
    pub alt_total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionReport {
    /// `L*`, where the sums start.
    pub l_cut: f64,
    pub rows: Vec<CriterionRow>,
    /// Present when the checkpoints admit a verdict.
    pub verdict: Option<DivergenceVerdict>,
    pub alt_verdict: Option<DivergenceVerdict>,
    pub forms_agree: Option<bool>,
}

impl CriterionReport {
    pub fn totals(&self) -> Vec<(f64, f64)> {
        self.rows.iter().map(|r| (r.ln_inv_cutoff, r.total)).collect()
    }

    pub fn alt_totals(&self) -> Vec<(f64, f64)> {
        self.rows.iter().map(|r| (r.ln_inv_cutoff, r.alt_total)).collect()
    }
}

fn check_checkpoints(weight: &WeightSpec, checkpoints: &[f64]) -> Result<()> {
    if checkpoints.is_empty() {
        return usage("no checkpoints");
    }
    let ls = weight.l_cut();
    if !(checkpoints[0] > ls) {
        return usage(format!("checkpoints must lie beyond L* = {ls}, got {}", checkpoints[0]));
    }
    if checkpoints.windows(2).any(|w| !(w[1] > w[0])) || !checkpoints[checkpoints.len() - 1].is_finite() {
        return usage("checkpoints must be finite and increasing in ln(1/eps)");
    }
    Ok(())
}

fn verdict_if_possible(points: &[(f64, f64)]) -> Result<Option<DivergenceVerdict>> {
    let (x0, x1) = (points[0].0, points[points.len() - 1].0);
    if points.len() < verdict::MIN_POINTS || x1 / x0 < verdict::MIN_SPAN * (1.0 - 1e-12) {
        return Ok(None);
    }
    divergence_verdict(points).map(Some)
}

/// Band totals between consecutive edges `[L*, L_0, L_1, ...]`.
fn band_terms(weight: &WeightSpec, set: &BoundarySet, checkpoints: &[f64], exact: bool) -> Result<Vec<(Terms, f64)>> {
    let ctx = Ctx::new(weight);
    let l_max = checkpoints[checkpoints.len() - 1];
    let [pos, neg] = sides(set);
    let same = pos == neg;
    let prepared: Vec<_> = if same { vec![pos] } else { vec![pos, neg] }
        .into_iter()
        .map(|s| Prepared::new(&ctx, s, l_max))
        .collect();
    let factor = if same { 2.0 } else { 1.0 };
    let edges: Vec<f64> = std::iter::once(ctx.l_star).chain(checkpoints.iter().copied()).collect();
    (0..checkpoints.len())
        .into_par_iter()
        .map(|i| {
            let band = Band { lo: edges[i], hi: edges[i + 1] };
            let mut t = Terms::default();
            for p in &prepared {
                let s = if exact { p.band_exact(&ctx, band)? } else { p.band(&ctx, band)? };
                t += s;
            }
            let t = Terms {
                es: factor * t.es,
                inter: factor * t.inter,
                long: factor * t.long,
                q1: factor * t.q1,
                q3: factor * t.q3,
            };
            Ok((t, 2.0 * ctx.long_int(band.lo, band.hi - band.lo)))
        })
        .collect()
}

fn assemble(weight: &WeightSpec, checkpoints: &[f64], bands: Vec<(Terms, f64)>) -> Result<CriterionReport> {
    let mut acc = Terms::default();
    let mut q2 = 0.0;
    let mut rows = Vec::with_capacity(bands.len());
    for (&l, (t, g)) in checkpoints.iter().zip(bands) {
        acc += t;
        q2 += g;
        let alt_total = acc.q1 + q2 + acc.q3;
        rows.push(CriterionRow {
            ln_inv_cutoff: l,
            e_and_short_part: acc.es,
            intermediate_sum: acc.inter,
            long_sum: acc.long,
            total: acc.es + acc.inter + acc.long,
            alt_e: acc.q1,
            alt_global: q2,
            alt_arcs: acc.q3,
            alt_total,
        });
    }
    let mut report = CriterionReport { l_cut: weight.l_cut(), rows, verdict: None, alt_verdict: None, forms_agree: None };
    report.verdict = verdict_if_possible(&report.totals())?;
    report.alt_verdict = verdict_if_possible(&report.alt_totals())?;
    if let (Some(a), Some(b)) = (report.verdict, report.alt_verdict) {
        report.forms_agree = Some(a.verdict == b.verdict);
    }
    Ok(report)
}

/// Partial sums of the criterion and of its three-quantity form over
/// `L* ≤ L < L_k` for each checkpoint `L_k = ln(1/ε_k)` (increasing).
pub fn criterion_partials(weight: &WeightSpec, set: &BoundarySet, checkpoints: &[f64]) -> Result<CriterionReport> {
    check_checkpoints(weight, checkpoints)?;
    let bands = band_terms(weight, set, checkpoints, false)?;
    assemble(weight, checkpoints, bands)
}

/// As [`criterion_partials`], with every Cantor block summed one by one.
/// Only practical up to `L ~ 1e5`.
pub fn criterion_partials_exact(weight: &WeightSpec, set: &BoundarySet, checkpoints: &[f64]) -> Result<CriterionReport> {
    check_checkpoints(weight, checkpoints)?;
    let bands = band_terms(weight, set, checkpoints, true)?;
    assemble(weight, checkpoints, bands)
}

/// Partial integrals of a classical condition over `L* ≤ L < L_k`.
pub fn condition_partials(weight: &WeightSpec, kind: ConditionKind, checkpoints: &[f64]) -> Result<Vec<(f64, f64)>> {
    check_checkpoints(weight, checkpoints)?;
    let ls = weight.l_cut();
    let p = match kind {
        ConditionKind::Nikolski => 0.5,
        ConditionKind::Gs => 1.0,
        ConditionKind::CBeta(b) => 1.0 - b.get(),
    };
    let c = weight.scale.powf(p);
    Ok(checkpoints.iter().map(|&l| (l, c * pint(2.0 * weight.nu() * p, ls, l))).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArcRow {
    pub a: f64,
    pub b: f64,
    pub class: ArcClass,
    pub contribution: f64,
}

/// Classified positive-side arcs with `b ≥ cutoff` that reach below `t*`.
pub fn arc_rows(weight: &WeightSpec, set: &BoundarySet, cutoff: f64) -> Result<Vec<ArcRow>> {
    let mut rows = Vec::new();
    for arc in set.complementary_arcs(cutoff)? {
        if pure_part(&arc, weight)?.is_none() {
            continue;
        }
        let class = classify_arc(&arc, weight)?;
        rows.push(ArcRow { a: arc.a, b: arc.b, class, contribution: arc_contribution(&arc, class, weight)? });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests;
