//! Runs a [`CommandConfig`] and collects its tables.

use std::collections::BTreeMap;

use cyclicity::auxfun::{
    c_lambda_inverse_closed, h_lambda, keldysh_amplitude_search, kernel_at_one, ln_abs_f_lambda, ln_singular_inner,
    verify_lemma, GammaRegionSpec,
};
use cyclicity::boundary::{BoundarySet, SetKind};
use cyclicity::criterion::{
    arc_rows, condition_partials, criterion_partials, criterion_partials_exact, default_checkpoints, divergence_verdict,
    threshold_oracle, DivergenceVerdict, Model, Prediction, Verdict,
};
use cyclicity::geometry::{
    boundary_point, omega_trace, profile_y_asymptotic, solve_gamma, solve_profile_y, to_halfplane, GammaOptions,
};
use cyclicity::phragmen::{ln_sigma, sigma, validate_mc, DomainProfile};
use cyclicity::weights::{ConditionKind, WeightSpec};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::config::{CommandConfig, TheoremKind};
use crate::report::{verdict_tag, Cell, Payload, Table, VerdictSummary};
use crate::CliError;

/// Scan ranges longer than this are rejected.
pub const MAX_SCAN_POINTS: usize = 10_000;

pub struct Outcome {
    pub payload: Payload,
    pub verdict: Option<VerdictSummary>,
}

fn plain(tables: Vec<Table>, summary: BTreeMap<String, Cell>) -> Outcome {
    Outcome { payload: Payload { tables, summary }, verdict: None }
}

pub fn execute(cfg: &CommandConfig) -> Result<Outcome, CliError> {
    match cfg {
        CommandConfig::WeightsCheck { weight, grid, decades, checkpoints } => {
            weights_check(weight, *grid, *decades, *checkpoints)
        }
        CommandConfig::Gamma { weight, set, theta, normalize } => gamma(weight, set, theta, *normalize),
        CommandConfig::OmegaTrace { weight, set, from, to, points, normalize } => {
            let opts = GammaOptions { normalize_lambda1: *normalize };
            let mut t = Table::new("trace", &["theta", "gamma", "residual", "R", "phi"]);
            for r in omega_trace(weight, set, *from, *to, *points, opts)? {
                t.push(vec![r.theta.into(), r.gamma.into(), r.residual.into(), r.r.into(), r.phi.into()]);
            }
            Ok(plain(vec![t], BTreeMap::new()))
        }
        CommandConfig::OmegaProfile { weight, from, to, points } => profile(weight, *from, *to, *points),
        CommandConfig::Sigma { profile, rho } => sigma_table(profile, rho),
        CommandConfig::HmMc { profile, rho, z0, paths, seed } => {
            let v = validate_mc(profile, Complex64::new(*z0, 0.0), rho, *paths, *seed)?;
            let mut t = Table::new("harmonic_measure", &["rho", "mean", "standard_error", "sigma", "bound", "within"]);
            for r in &v.rows {
                t.push(vec![
                    r.rho.into(),
                    r.mean.into(),
                    r.standard_error.into(),
                    r.sigma.into(),
                    r.bound.into(),
                    r.within.into(),
                ]);
            }
            let summary = BTreeMap::from([("C_FIT".to_string(), v.c_fit.into()), ("PASS".to_string(), v.pass.into())]);
            Ok(plain(vec![t], summary))
        }
        CommandConfig::AuxVerifyLemma { weight, set, a, big_a, grid } => {
            let spec = GammaRegionSpec { a: *a, big_a: *big_a, weight: *weight, set: *set };
            let rep = verify_lemma(&spec, *grid)?;
            let mut t = Table::new("lemma", &["lambda_re", "lambda_im", "z_re", "z_im", "H", "case_tag"]);
            for r in &rep.rows {
                t.push(vec![r.lambda.re.into(), r.lambda.im.into(), r.z.re.into(), r.z.im.into(), r.h.into(), r.case.tag().into()]);
            }
            let mut summary = BTreeMap::from([
                ("SUP_H".to_string(), rep.sup_h.into()),
                ("LAMBDAS".to_string(), rep.lambdas.into()),
            ]);
            for (i, m) in rep.max_case.iter().enumerate() {
                summary.insert(format!("MAX_H_CASE{}", i + 1), (*m).into());
            }
            Ok(plain(vec![t], summary))
        }
        CommandConfig::AuxIdentities { weight, set, radii, angles } => identities(weight, set, radii, *angles),
        CommandConfig::AuxKeldysh { weight, set, theta } => {
            let wit = keldysh_amplitude_search(weight, set, theta)?;
            let mut t = Table::new("witness", &["theta", "w_re", "w_im", "ln_abs_unit", "target", "margin"]);
            let mut holds = true;
            for r in &wit.rows {
                let margin = wit.amplitude * r.ln_abs_unit - r.target;
                holds &= margin > 0.0;
                t.push(vec![r.theta.into(), r.w.re.into(), r.w.im.into(), r.ln_abs_unit.into(), r.target.into(), margin.into()]);
            }
            let summary = BTreeMap::from([("AMPLITUDE".to_string(), wit.amplitude.into()), ("HOLDS".to_string(), holds.into())]);
            Ok(plain(vec![t], summary))
        }
        CommandConfig::CriterionAnalyze { weight, set, checkpoints, arcs_cutoff, arcs_depth, exact } => {
            analyze(weight, set, *checkpoints, (*arcs_cutoff, *arcs_depth), *exact)
        }
        CommandConfig::Scan { theorem, alpha_from, alpha_to, step, beta, depth, checkpoints, scale, t_cut } => {
            let range = ScanRange { from: *alpha_from, to: *alpha_to, step: *step };
            scan(*theorem, range, beta, *depth, *checkpoints, *scale, *t_cut)
        }
    }
}

fn weights_check(weight: &WeightSpec, n: usize, decades: f64, checkpoints: usize) -> Result<Outcome, CliError> {
    if n < 2 || !(decades > 0.0) {
        return Err(CliError::Usage("the regularity grid needs at least two points and a positive span".into()));
    }
    let top = weight.pure_cut();
    let grid: Vec<f64> = (0..n).map(|k| top * 10f64.powf(-decades * k as f64 / (n - 1) as f64)).collect();
    let reg = weight.check_regularity(&grid)?;
    let cps = default_checkpoints(checkpoints);
    let nik = condition_partials(weight, ConditionKind::Nikolski, &cps)?;
    let gs = condition_partials(weight, ConditionKind::Gs, &cps)?;
    let mut t = Table::new("conditions", &["ln_inv_cutoff", "nikolski", "gs"]);
    for (a, b) in nik.iter().zip(&gs) {
        t.push(vec![a.0.into(), a.1.into(), b.1.into()]);
    }
    let mut summary = BTreeMap::from([
        ("L_CUT".to_string(), weight.l_cut().into()),
        ("MAX_T_LAMBDA".to_string(), reg.max_t_lambda.into()),
        ("MAX_LOG_DERIVATIVE".to_string(), reg.max_log_derivative.into()),
        ("MAX_LOG_DERIVATIVE_CLOSED".to_string(), reg.max_log_derivative_closed.into()),
        ("DECREASING".to_string(), reg.decreasing.into()),
        ("T_LAMBDA_VANISHING".to_string(), reg.t_lambda_vanishing.into()),
    ]);
    if cps.len() >= cyclicity::criterion::MIN_POINTS {
        summary.insert("NIKOLSKI_VERDICT".into(), verdict_tag(divergence_verdict(&nik)?.verdict).into());
        summary.insert("GS_VERDICT".into(), verdict_tag(divergence_verdict(&gs)?.verdict).into());
    }
    Ok(plain(vec![t], summary))
}

fn gamma(weight: &WeightSpec, set: &BoundarySet, thetas: &[f64], normalize: bool) -> Result<Outcome, CliError> {
    let opts = GammaOptions { normalize_lambda1: normalize };
    let mut t = Table::new("gamma", &["theta", "gamma", "residual", "R", "phi"]);
    for &theta in thetas {
        let sol = solve_gamma(weight, set, theta, opts)?;
        let hp = to_halfplane(boundary_point(&sol))?;
        t.push(vec![theta.into(), sol.gamma.into(), sol.residual.into(), hp.r.into(), hp.phi.into()]);
    }
    Ok(plain(vec![t], BTreeMap::new()))
}

fn profile(weight: &WeightSpec, from: f64, to: f64, points: usize) -> Result<Outcome, CliError> {
    if !(from > 0.0 && from < to) || points < 2 {
        return Err(CliError::Usage("profile needs 0 < from < to and at least two points".into()));
    }
    let mut t = Table::new("profile", &["x", "y", "asymptotic", "rel_gap"]);
    let mut worst: f64 = 0.0;
    let ratio = (to / from).ln() / (points - 1) as f64;
    for k in 0..points {
        let x = if k + 1 == points { to } else { from * (ratio * k as f64).exp() };
        let y = solve_profile_y(weight, x)?;
        let a = profile_y_asymptotic(weight, x)?;
        let gap = y / a - 1.0;
        worst = worst.max(gap.abs());
        t.push(vec![x.into(), y.into(), a.into(), gap.into()]);
    }
    Ok(plain(vec![t], BTreeMap::from([("MAX_REL_GAP".to_string(), worst.into())])))
}

fn sigma_table(profile: &DomainProfile, rhos: &[f64]) -> Result<Outcome, CliError> {
    let mut t = Table::new("sigma", &["rho", "sigma", "ln_sigma"]);
    for &rho in rhos {
        t.push(vec![rho.into(), sigma(profile, rho)?.into(), ln_sigma(profile, rho)?.into()]);
    }
    Ok(plain(vec![t], BTreeMap::new()))
}

fn identities(weight: &WeightSpec, set: &BoundarySet, radii: &[f64], angles: usize) -> Result<Outcome, CliError> {
    if angles < 2 {
        return Err(CliError::Usage("identities need at least two angles".into()));
    }
    let zs: Vec<Complex64> = [0.0, 0.3, 0.7, 0.95, 0.999]
        .iter()
        .flat_map(|&r| (0..12).map(move |k| Complex64::from_polar(r, -3.1 + 6.2 * k as f64 / 11.0)))
        .collect();
    let mut t = Table::new("identities", &["lambda_re", "lambda_im", "fs_err", "c_inv", "sup_violations", "h_err"]);
    let (mut max_fs, mut min_c, mut violations, mut max_h) = (0.0f64, f64::INFINITY, 0usize, 0.0f64);
    for &r in radii {
        for k in 0..angles {
            let lam = Complex64::from_polar(r, -3.0 + 6.0 * k as f64 / (angles - 1) as f64 + 0.013);
            let fs = (ln_abs_f_lambda(lam, lam)? + ln_singular_inner(lam)?.re).exp_m1().abs();
            let c = c_lambda_inverse_closed(lam)?;
            let bound = 2.5 * std::f64::consts::PI * kernel_at_one(lam);
            let mut bad = 0;
            for &z in &zs {
                // z = 1 lies outside the evaluation domain and has no bound to check.
                if let Ok(v) = ln_abs_f_lambda(lam, z) {
                    if v > bound * (1.0 + 1e-12) {
                        bad += 1;
                    }
                }
            }
            let want = -weight.eval_lambda_clamped(set.distance_to_set(lam)?)?;
            let h = h_lambda(weight, set, lam, lam)?;
            let h_err = (h - want).abs() / want.abs().max(1.0);
            max_fs = max_fs.max(fs);
            min_c = min_c.min(c);
            violations += bad;
            max_h = max_h.max(h_err);
            t.push(vec![lam.re.into(), lam.im.into(), fs.into(), c.into(), bad.into(), h_err.into()]);
        }
    }
    let summary = BTreeMap::from([
        ("MAX_FS_ERR".to_string(), max_fs.into()),
        ("MIN_C_INV".to_string(), min_c.into()),
        ("SUP_VIOLATIONS".to_string(), violations.into()),
        ("MAX_H_ERR".to_string(), max_h.into()),
    ]);
    Ok(plain(vec![t], summary))
}

fn model_cells(v: &Option<DivergenceVerdict>, summary: &mut BTreeMap<String, Cell>, prefix: &str) {
    if let Some(v) = v {
        summary.insert(format!("{prefix}VERDICT"), verdict_tag(v.verdict).into());
        let model = match v.model {
            Model::Bounded => "bounded",
            Model::Log => "log",
            Model::Power { .. } => "power",
        };
        summary.insert(format!("{prefix}MODEL"), model.into());
        if let Some(q) = v.exponent() {
            summary.insert(format!("{prefix}EXPONENT"), q.into());
            summary.insert(format!("{prefix}STANDARD_ERROR"), v.standard_error.into());
        }
    }
}

fn analyze(
    weight: &WeightSpec,
    set: &BoundarySet,
    k: usize,
    (arcs_cutoff, arcs_depth): (f64, u32),
    exact: bool,
) -> Result<Outcome, CliError> {
    let cps = default_checkpoints(k);
    let report = if exact { criterion_partials_exact(weight, set, &cps)? } else { criterion_partials(weight, set, &cps)? };
    let listed = match set.kind {
        SetKind::CantorTernary { depth } if depth > arcs_depth => BoundarySet::cantor(arcs_depth)?.mirrored(set.mirror),
        _ => *set,
    };
    let mut arcs = Table::new("arcs", &["a", "b", "class", "contribution"]);
    for r in arc_rows(weight, &listed, arcs_cutoff)? {
        arcs.push(vec![r.a.into(), r.b.into(), r.class.tag().into(), r.contribution.into()]);
    }
    let mut partials = Table::new(
        "partials",
        &[
            "ln_inv_cutoff",
            "e_and_short_part",
            "intermediate_sum",
            "long_sum",
            "total",
            "alt_e",
            "alt_global",
            "alt_arcs",
            "alt_total",
        ],
    );
    for r in &report.rows {
        partials.push(vec![
            r.ln_inv_cutoff.into(),
            r.e_and_short_part.into(),
            r.intermediate_sum.into(),
            r.long_sum.into(),
            r.total.into(),
            r.alt_e.into(),
            r.alt_global.into(),
            r.alt_arcs.into(),
            r.alt_total.into(),
        ]);
    }
    let mut summary = BTreeMap::from([("L_CUT".to_string(), report.l_cut.into())]);
    model_cells(&report.verdict, &mut summary, "");
    model_cells(&report.alt_verdict, &mut summary, "ALT_");
    if let Some(agree) = report.forms_agree {
        summary.insert("FORMS_AGREE".into(), agree.into());
    }
    let headline = report.verdict.map_or(Verdict::Inconclusive, |v| v.verdict);
    Ok(Outcome {
        payload: Payload { tables: vec![arcs, partials], summary },
        verdict: Some(VerdictSummary::from_verdicts(&[headline], 0, 0)),
    })
}

pub struct ScanRange {
    pub from: f64,
    pub to: f64,
    pub step: f64,
}

impl ScanRange {
    /// `from + k·step` up to `to` inclusive, rounded to the printed digits.
    pub fn values(&self) -> Result<Vec<f64>, CliError> {
        if !(self.step > 0.0 && self.step.is_finite() && self.from.is_finite() && self.to.is_finite()) {
            return Err(CliError::Usage(format!("scan needs a finite range and step > 0, got step {}", self.step)));
        }
        if self.to < self.from {
            return Ok(Vec::new());
        }
        let span = ((self.to - self.from) / self.step + 1e-9).floor();
        if span >= MAX_SCAN_POINTS as f64 {
            return Err(CliError::Usage(format!("scan range has more than {MAX_SCAN_POINTS} points")));
        }
        Ok((0..=span as usize).map(|k| crate::report::quantize(self.from + k as f64 * self.step)).collect())
    }
}

fn scan(
    kind: TheoremKind,
    range: ScanRange,
    betas: &[f64],
    depth: u32,
    checkpoints: usize,
    scale: f64,
    t_cut: Option<f64>,
) -> Result<Outcome, CliError> {
    let teo2 = kind == TheoremKind::Teo2;
    if !teo2 && !betas.is_empty() {
        return Err(CliError::Usage("--beta applies to teo2 only".into()));
    }
    let betas = if betas.is_empty() { vec![0.0] } else { betas.to_vec() };
    let mut points = Vec::new();
    for alpha in range.values()? {
        for &beta in &betas {
            points.push((alpha, beta));
        }
    }
    let cps = default_checkpoints(checkpoints);
    let rows: Vec<Result<(f64, f64, DivergenceVerdict, Prediction), CliError>> = points
        .par_iter()
        .map(|&(alpha, beta)| {
            let theorem = kind.theorem(alpha, beta);
            let prediction = threshold_oracle(theorem)?;
            let (mut weight, set) = theorem.configuration(depth)?;
            weight = weight.with_scale(scale)?;
            if let Some(t) = t_cut {
                weight = weight.with_t_cut(t)?;
            }
            let report = criterion_partials(&weight, &set, &cps)?;
            let v = report
                .verdict
                .ok_or_else(|| CliError::Usage("too few checkpoints for a verdict".into()))?;
            Ok((alpha, beta, v, prediction))
        })
        .collect();
    let header: &[&str] = if teo2 {
        &["alpha", "beta", "fitted_exponent", "verdict", "oracle", "agree"]
    } else {
        &["alpha", "fitted_exponent", "verdict", "oracle", "agree"]
    };
    let mut t = Table::new("scan", header);
    let (mut verdicts, mut in_band, mut disagreements) = (Vec::new(), 0, 0);
    for r in rows {
        let (alpha, beta, v, pred) = r?;
        let agree = pred.in_band || v.verdict == pred.verdict;
        in_band += pred.in_band as usize;
        disagreements += !agree as usize;
        verdicts.push(v.verdict);
        let q = match v.model {
            Model::Power { exponent } => Cell::num(exponent),
            Model::Log => Cell::num(0.0),
            Model::Bounded => Cell::text(""),
        };
        let mut row = vec![alpha.into()];
        if teo2 {
            row.push(beta.into());
        }
        row.extend([q, verdict_tag(v.verdict).into(), verdict_tag(pred.verdict).into(), agree.into()]);
        t.push(row);
    }
    Ok(Outcome {
        payload: Payload { tables: vec![t], summary: BTreeMap::new() },
        verdict: Some(VerdictSummary::from_verdicts(&verdicts, in_band, disagreements)),
    })
}
