//! The singular inner function `S`, the outer functions `f_λ` built on the
//! Privalov shadow of `λ`, the comparison function `H_λ`, the regions
//! `Γ_{Λ,E}(a, A)` and the outer witness `F` whose modulus dominates the
//! weight on the boundary of `Ω_{Λ,E}`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

use crate::boundary::BoundarySet;
use crate::error::{domain, usage, Error, Result};
use crate::geometry::{gamma_criterion_partial_ln, solve_gamma, GammaOptions};
use crate::quad::{integrate_checked, integrate_with_breaks, QuadOptions};
use crate::weights::{WeightSpec, T_MAX};

/// Largest `a` for which the first case of the lemma gives `H ≤ 0`.
pub const A_SMALL_MAX: f64 = 2.0 / (5.0 * PI);

fn wrap(x: f64) -> f64 {
    let y = x.rem_euclid(2.0 * PI);
    if y > PI {
        y - 2.0 * PI
    } else {
        y
    }
}

/// `(1 − |z|²)/|1 − z|²`, the Poisson kernel at the point 1.
pub fn kernel_at_one(z: Complex64) -> f64 {
    (1.0 - z.norm_sqr()) / (Complex64::new(1.0, 0.0) - z).norm_sqr()
}

/// `S(z) = exp(−(1+z)/(1−z))`.
pub fn singular_inner(z: Complex64) -> Result<Complex64> {
    if !(z.norm() < 1.0) {
        return domain(format!("S needs |z| < 1, got {z}"));
    }
    let one = Complex64::new(1.0, 0.0);
    Ok((-(one + z) / (one - z)).exp())
}

/// The arc of length `1 − |λ|` centred at `λ/|λ|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PrivalovShadow {
    pub lambda: Complex64,
    pub center: f64,
    pub half_length: f64,
}

impl PrivalovShadow {
    pub fn new(lambda: Complex64) -> Result<Self> {
        let r = lambda.norm();
        if !(r > 0.0 && r < 1.0) {
            return domain(format!("the shadow needs 0 < |λ| < 1, got {lambda}"));
        }
        Ok(PrivalovShadow { lambda, center: lambda.arg(), half_length: 0.5 * (1.0 - r) })
    }

    pub fn length(&self) -> f64 {
        2.0 * self.half_length
    }

    pub fn contains_angle(&self, theta: f64) -> bool {
        wrap(theta - self.center).abs() <= self.half_length
    }
}

/// Poisson kernel `(1 − |z|²)/|e^{iθ} − z|²` (no `1/2π`).
pub fn poisson_kernel(z: Complex64, theta: f64) -> f64 {
    (1.0 - z.norm_sqr()) / (Complex64::from_polar(1.0, theta) - z).norm_sqr()
}

/// `∫` of the Poisson kernel over the arc `[c − h, c + h]`, `0 < h < π/2`,
/// from the antiderivative `2 arg(e^{iθ} − z) − θ`.
pub fn poisson_arc_closed(z: Complex64, center: f64, h: f64) -> f64 {
    let z1 = Complex64::from_polar(1.0, center - h) - z;
    let z2 = Complex64::from_polar(1.0, center + h) - z;
    // The arg change lies in (h, π + h); recover it from the principal value.
    let raw = (z2 * z1.conj()).arg();
    2.0 * wrap(raw - h)
}

fn arc_breaks(z: Complex64, center: f64, h: f64) -> Vec<f64> {
    let off = wrap(z.arg() - center);
    let delta = (1.0 - z.norm()).max(1e-300);
    let mut out = Vec::new();
    if z.norm() > 0.0 && off.abs() < h + 50.0 * delta {
        for k in [-30.0, -10.0, -3.0, -1.0, 0.0, 1.0, 3.0, 10.0, 30.0] {
            out.push(center + off + k * delta);
        }
    }
    out
}

/// Same integral by adaptive Gauss–Kronrod.
pub fn poisson_arc_quad(z: Complex64, center: f64, h: f64, rel_tol: f64) -> Result<f64> {
    let breaks = arc_breaks(z, center, h);
    integrate_checked(|t| poisson_kernel(z, t), center - h, center + h, &breaks, QuadOptions::rel(rel_tol))
}

/// Poisson integral over the arc, switching to quadrature where the closed
/// form loses digits to cancellation.
pub fn poisson_arc(z: Complex64, center: f64, h: f64) -> Result<f64> {
    let v = poisson_arc_closed(z, center, h);
    if v >= 1e-3 * h {
        Ok(v)
    } else {
        poisson_arc_quad(z, center, h, 1e-12)
    }
}

/// `∫ (e^{iθ} + z)/(e^{iθ} − z) dθ` over the arc `[c − h, c + h]`.
pub fn herglotz_arc_closed(z: Complex64, center: f64, h: f64) -> Complex64 {
    let z1 = Complex64::from_polar(1.0, center - h) - z;
    let z2 = Complex64::from_polar(1.0, center + h) - z;
    Complex64::new(poisson_arc(z, center, h).unwrap_or_else(|_| poisson_arc_closed(z, center, h)), -2.0 * (z2.norm() / z1.norm()).ln())
}

pub fn herglotz_arc_quad(z: Complex64, center: f64, h: f64, rel_tol: f64) -> Result<Complex64> {
    let breaks = arc_breaks(z, center, h);
    let kern = |t: f64| {
        let e = Complex64::from_polar(1.0, t);
        (e + z) / (e - z)
    };
    let opts = QuadOptions::rel(rel_tol);
    let re = integrate_checked(|t| kern(t).re, center - h, center + h, &breaks, opts)?;
    let im = integrate_with_breaks(|t| kern(t).im, center - h, center + h, &breaks, QuadOptions { abs_tol: rel_tol * re.abs().max(1.0), ..opts });
    Ok(Complex64::new(re, im.value))
}

/// `c_λ` with `c_λ⁻¹ = ∫_{I_λ} (1 − |λ|²)/|e^{iθ} − λ|² dθ
/// = 4 arctan((1+r)/(1−r) · tan(h/2))`.
pub fn c_lambda(lambda: Complex64) -> Result<f64> {
    let s = PrivalovShadow::new(lambda)?;
    Ok(1.0 / poisson_arc(lambda, s.center, s.half_length)?)
}

pub fn c_lambda_inverse_closed(lambda: Complex64) -> Result<f64> {
    let s = PrivalovShadow::new(lambda)?;
    let r = lambda.norm();
    Ok(4.0 * ((1.0 + r) / (1.0 - r) * (0.5 * s.half_length).tan()).atan())
}

pub fn c_lambda_inverse_quad(lambda: Complex64) -> Result<f64> {
    let s = PrivalovShadow::new(lambda)?;
    poisson_arc_quad(lambda, s.center, s.half_length, 1e-12)
}

fn check_z(s: &PrivalovShadow, z: Complex64) -> Result<()> {
    if !(z.norm() < 1.0) {
        return domain(format!("z must lie in the open disc, got {z}"));
    }
    if 1.0 - z.norm() < 1e-12 && s.contains_angle(z.arg()) {
        return Err(Error::Numeric(format!("z = {z} lies within 1e-12 of the shadow arc")));
    }
    Ok(())
}

fn check_lambda(lambda: Complex64) -> Result<()> {
    if (Complex64::new(1.0, 0.0) - lambda).norm() == 0.0 {
        return domain("λ = 1 is excluded");
    }
    Ok(())
}

/// `log|f_λ(z)| = c_λ K(λ) ∫_{I_λ} P_z`.
pub fn ln_abs_f_lambda(lambda: Complex64, z: Complex64) -> Result<f64> {
    check_lambda(lambda)?;
    let s = PrivalovShadow::new(lambda)?;
    check_z(&s, z)?;
    let c = c_lambda(lambda)?;
    Ok(kernel_at_one(lambda) * (c * poisson_arc(z, s.center, s.half_length)?))
}

/// `log f_λ(z) = c_λ K(λ) ∫_{I_λ} (e^{iθ} + z)/(e^{iθ} − z) dθ`.
pub fn ln_f_lambda(lambda: Complex64, z: Complex64) -> Result<Complex64> {
    check_lambda(lambda)?;
    let s = PrivalovShadow::new(lambda)?;
    check_z(&s, z)?;
    let c = c_lambda(lambda)?;
    Ok(herglotz_arc_closed(z, s.center, s.half_length) * (c * kernel_at_one(lambda)))
}

/// `f_λ(z)`; overflows to infinity when `log|f_λ(z)|` exceeds the double
/// range, see [`ln_f_lambda`].
pub fn f_lambda(lambda: Complex64, z: Complex64) -> Result<Complex64> {
    Ok(ln_f_lambda(lambda, z)?.exp())
}

/// `log S(z) = −(1+z)/(1−z)`.
pub fn ln_singular_inner(z: Complex64) -> Result<Complex64> {
    if !(z.norm() < 1.0) {
        return domain(format!("S needs |z| < 1, got {z}"));
    }
    let one = Complex64::new(1.0, 0.0);
    Ok(-(one + z) / (one - z))
}

/// `Λ` at a distance, clamped to the weight domain.
fn lambda_at(weight: &WeightSpec, t: f64) -> Result<f64> {
    weight.eval_lambda(t.min(T_MAX))
}

/// `H_λ(z) = c_λ K(λ) ∫_{I_λ} P_z − K(z) − Λ(dist(z, E))`.
pub fn h_lambda(weight: &WeightSpec, set: &BoundarySet, lambda: Complex64, z: Complex64) -> Result<f64> {
    let first = ln_abs_f_lambda(lambda, z)?;
    let d = set.distance_to_set(z)?;
    Ok(first - kernel_at_one(z) - lambda_at(weight, d)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GammaRegionSpec {
    pub a: f64,
    #[serde(rename = "A")]
    pub big_a: f64,
    pub weight: WeightSpec,
    pub set: BoundarySet,
}

impl GammaRegionSpec {
    /// Defaults `a = 2/(5π)`, `A = 1000` for the full circle and 100 otherwise.
    pub fn with_defaults(weight: WeightSpec, set: BoundarySet) -> Self {
        let big_a = if matches!(set.kind, crate::boundary::SetKind::FullCircle) { 1000.0 } else { 100.0 };
        GammaRegionSpec { a: A_SMALL_MAX, big_a, weight, set }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a > 0.0) || !(self.big_a >= 1.0) {
            return usage(format!("need a > 0 and A ≥ 1, got a = {}, A = {}", self.a, self.big_a));
        }
        Ok(())
    }
}

/// `K(λ) ≤ a Λ(min(A dist(λ, E), 2))`.
pub fn in_gamma_region(spec: &GammaRegionSpec, lambda: Complex64) -> Result<bool> {
    spec.validate()?;
    if !(lambda.norm() < 1.0) {
        return domain(format!("λ must lie in the open disc, got {lambda}"));
    }
    let d = spec.set.distance_to_set(lambda)?;
    Ok(kernel_at_one(lambda) <= spec.a * lambda_at(&spec.weight, spec.big_a * d)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LemmaCase {
    /// `A dist(λ, E) ≥ dist(z, E)`.
    Near,
    /// `|1 − z| ≥ 6|1 − λ|`.
    Far,
    Middle,
}

impl LemmaCase {
    pub fn tag(self) -> &'static str {
        match self {
            LemmaCase::Near => "case1",
            LemmaCase::Far => "case2",
            LemmaCase::Middle => "case3",
        }
    }
}

pub fn lemma_case(spec: &GammaRegionSpec, lambda: Complex64, z: Complex64) -> Result<LemmaCase> {
    let one = Complex64::new(1.0, 0.0);
    Ok(if spec.big_a * spec.set.distance_to_set(lambda)? >= spec.set.distance_to_set(z)? {
        LemmaCase::Near
    } else if (one - z).norm() >= 6.0 * (one - lambda).norm() {
        LemmaCase::Far
    } else {
        LemmaCase::Middle
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LemmaRow {
    pub lambda: Complex64,
    pub z: Complex64,
    pub h: f64,
    pub case: LemmaCase,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LemmaReport {
    pub rows: Vec<LemmaRow>,
    pub lambdas: usize,
    pub sup_h: f64,
    /// Largest `H` per case, `-inf` when a case is empty.
    pub max_case: [f64; 3],
}

fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|k| (a + (b - a) * k as f64 / (n - 1) as f64).exp()).collect()
}

/// Points `λ` of `Γ_{Λ,E}(a, A)` on an `n × (2n + 1)` polar grid around 1.
pub fn gamma_region_grid(spec: &GammaRegionSpec, n: usize) -> Result<Vec<Complex64>> {
    let mut out = Vec::new();
    let mut angles = vec![0.0];
    for t in logspace(1e-7, 1.5, n) {
        angles.push(t);
        angles.push(-t);
    }
    for delta in logspace(1e-7, 0.5, n) {
        for &phi in &angles {
            let lam = Complex64::from_polar(1.0 - delta, phi);
            if in_gamma_region(spec, lam)? {
                out.push(lam);
            }
        }
    }
    Ok(out)
}

/// Evaluates `H_λ(z)` over `λ ∈` [`gamma_region_grid`] and a polar `z`-grid
/// adapted to each `λ`, tagging each pair with its case.
pub fn verify_lemma(spec: &GammaRegionSpec, n: usize) -> Result<LemmaReport> {
    if n < 2 {
        return usage("the lemma grid needs n ≥ 2");
    }
    let lambdas = gamma_region_grid(spec, n)?;
    let per: Vec<Result<Vec<LemmaRow>>> = lambdas
        .par_iter()
        .map(|&lam| {
            let delta = 1.0 - lam.norm();
            let arg = lam.arg();
            let mut psis = vec![0.0];
            for m in [-2.0, -1.0, 0.5, 0.9, 1.0, 1.1, 2.0, 5.0] {
                psis.push(arg * m);
            }
            for k in -3..=3 {
                psis.push(arg + k as f64 * delta);
            }
            let mut rows = vec![];
            let mut zs = vec![lam];
            for dz in logspace(1e-7, 0.9, n) {
                for &psi in &psis {
                    zs.push(Complex64::from_polar(1.0 - dz, wrap(psi)));
                }
            }
            for z in zs {
                let h = h_lambda(&spec.weight, &spec.set, lam, z)?;
                rows.push(LemmaRow { lambda: lam, z, h, case: lemma_case(spec, lam, z)? });
            }
            Ok(rows)
        })
        .collect();
    let mut rows = Vec::new();
    for r in per {
        rows.extend(r?);
    }
    let mut max_case = [f64::NEG_INFINITY; 3];
    for r in &rows {
        let i = match r.case {
            LemmaCase::Near => 0,
            LemmaCase::Far => 1,
            LemmaCase::Middle => 2,
        };
        max_case[i] = max_case[i].max(r.h);
    }
    let sup_h = max_case.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(LemmaReport { rows, lambdas: lambdas.len(), sup_h, max_case })
}

/// Boundary data `γ(θ)/θ²` of the witness (unit amplitude), with `Λ`
/// normalised so that `Λ(1) < 1/10`.
pub fn keldysh_data(weight: &WeightSpec, set: &BoundarySet, theta: f64) -> Result<f64> {
    let s = solve_gamma(weight, set, theta, GammaOptions { normalize_lambda1: true })?;
    Ok(s.gamma / (theta * theta))
}

/// Fails with a precondition error unless `∫ γ/θ²` looks convergent: the
/// partial integrals over `u = ln(1/θ) ∈ [8, 40]` and `[40, 200]` must
/// shrink by at least half.
pub fn keldysh_guard(weight: &WeightSpec, set: &BoundarySet) -> Result<()> {
    let opts = GammaOptions { normalize_lambda1: true };
    let d1 = gamma_criterion_partial_ln(weight, set, 40.0, 8.0, opts)?;
    let d2 = gamma_criterion_partial_ln(weight, set, 200.0, 40.0, opts)?;
    if !(d2 <= 0.5 * d1) {
        return Err(Error::Precondition(format!(
            "∫γ(θ)/θ² dθ does not look convergent (partials {d1:.6e} then {d2:.6e})"
        )));
    }
    Ok(())
}

/// Angles below this are excluded from the witness integrals.
pub const KELDYSH_EXCLUDE: f64 = 1e-8;

/// `(1/2π) ∫ kernel(w, θ) γ(θ)/θ² dθ` over `ε ≤ |θ| ≤ π`, integrated in
/// `ln|θ|` on each side.
fn keldysh_integral<K: Fn(f64) -> Complex64 + Sync>(
    weight: &WeightSpec,
    set: &BoundarySet,
    w: Complex64,
    kernel: K,
    with_imaginary: bool,
) -> Result<Complex64> {
    let mut failure: Option<Error> = None;
    let mut total = Complex64::new(0.0, 0.0);
    let (lo, hi) = (KELDYSH_EXCLUDE.ln(), PI.ln());
    let delta = (1.0 - w.norm()).max(1e-300);
    for sign in [1.0, -1.0] {
        let mut breaks: Vec<f64> = Vec::new();
        let t0 = sign * w.arg();
        if w.norm() > 0.0 && t0 > KELDYSH_EXCLUDE {
            for k in [-30.0, -10.0, -3.0, -1.0, 0.0, 1.0, 3.0, 10.0, 30.0] {
                let t = t0 + k * delta;
                if t > 0.0 {
                    breaks.push(t.ln());
                }
            }
        }
        let mut v = lo;
        while v < hi {
            breaks.push(v);
            v += 1.0;
        }
        let mut part = |f: &dyn Fn(Complex64) -> f64, tol: f64| -> f64 {
            let est = integrate_with_breaks(
                |v| {
                    let t = v.exp();
                    match keldysh_data(weight, set, sign * t) {
                        Ok(d) => f(kernel(sign * t)) * d * t,
                        Err(e) => {
                            failure.get_or_insert(e);
                            0.0
                        }
                    }
                },
                lo,
                hi,
                &breaks,
                QuadOptions { rel_tol: tol, abs_tol: 0.0, max_segments: 20_000 },
            );
            est.value
        };
        let re = part(&|k| k.re, 1e-10);
        let im = if with_imaginary { part(&|k| k.im, 1e-10) } else { 0.0 };
        total += Complex64::new(re, im);
    }
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(total / (2.0 * PI))
}

/// `log|F(w)|` for unit amplitude.
pub fn keldysh_ln_abs_unit(weight: &WeightSpec, set: &BoundarySet, w: Complex64) -> Result<f64> {
    if !(w.norm() < 1.0) {
        return domain(format!("w must lie in the open disc, got {w}"));
    }
    Ok(keldysh_integral(weight, set, w, |t| Complex64::new(poisson_kernel(w, t), 0.0), false)?.re)
}

/// The outer function with `log|F| = amplitude · γ(θ)/θ²` on the circle.
pub fn keldysh_outer(weight: &WeightSpec, set: &BoundarySet, amplitude: f64, w: Complex64) -> Result<Complex64> {
    if !(amplitude >= 0.0 && amplitude.is_finite()) {
        return usage(format!("amplitude must be nonnegative, got {amplitude}"));
    }
    if !(w.norm() < 1.0) {
        return domain(format!("w must lie in the open disc, got {w}"));
    }
    if amplitude == 0.0 {
        return Ok(Complex64::new(1.0, 0.0));
    }
    keldysh_guard(weight, set)?;
    let herglotz = keldysh_integral(weight, set, w, |t| {
        let e = Complex64::from_polar(1.0, t);
        (e + w) / (e - w)
    }, true)?;
    Ok((herglotz * amplitude).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WitnessRow {
    pub theta: f64,
    pub w: Complex64,
    /// `log|F(w)|` at unit amplitude.
    pub ln_abs_unit: f64,
    /// `K(w) + Λ(dist(w, E))`.
    pub target: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KeldyshWitness {
    pub amplitude: f64,
    pub rows: Vec<WitnessRow>,
}

/// Smallest amplitude in `1, 2, 4, …, 2¹⁰` with `log|F(w)| > K(w) + Λ(dist(w, E))`
/// at `w = (1 − γ(θ))e^{iθ}` for every sample `θ`.
pub fn keldysh_amplitude_search(weight: &WeightSpec, set: &BoundarySet, thetas: &[f64]) -> Result<KeldyshWitness> {
    keldysh_guard(weight, set)?;
    let norm = weight.normalized_lambda1();
    let rows: Vec<WitnessRow> = thetas
        .par_iter()
        .map(|&theta| {
            let s = solve_gamma(weight, set, theta, GammaOptions { normalize_lambda1: true })?;
            let w = Complex64::from_polar(1.0 - s.gamma, theta);
            let target = kernel_at_one(w) + lambda_at(&norm, set.distance_to_set(w)?)?;
            Ok(WitnessRow { theta, w, ln_abs_unit: keldysh_ln_abs_unit(weight, set, w)?, target })
        })
        .collect::<Result<_>>()?;
    for k in 0..=10 {
        let amp = (1u32 << k) as f64;
        if rows.iter().all(|r| amp * r.ln_abs_unit > r.target) {
            return Ok(KeldyshWitness { amplitude: amp, rows });
        }
    }
    Err(Error::Numeric("no amplitude up to 2^10 satisfies the witness inequality".into()))
}
