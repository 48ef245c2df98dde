//! The boundary `γ(θ)` of the region `Ω_{Λ,E}`, the half-plane coordinates
//! `(R, φ)` of a disc point and the boundary profile of `Ω_Λ` in the
//! half-plane picture.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::boundary::{BoundarySet, SetKind};
use crate::error::{domain, usage, Error, Result};
use crate::quad::{integrate_checked, QuadOptions};
use crate::roots::bisect_sign;
use crate::weights::{WeightSpec, T_MAX};

pub const MAX_BISECTION_STEPS: usize = 200;

/// Residual bound relative to `max(γ, 1e-300)`.
pub const GAMMA_RESIDUAL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct GammaOptions {
    /// Rescale `Λ` so that `Λ(1) ≤ 0.09` before solving.
    #[serde(default)]
    pub normalize_lambda1: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GammaSolution {
    pub theta: f64,
    pub gamma: f64,
    pub residual: f64,
    pub dist_at_theta: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HalfplaneCoords {
    #[serde(rename = "R")]
    pub r: f64,
    pub phi: f64,
}

fn effective(weight: &WeightSpec, opts: GammaOptions) -> WeightSpec {
    if opts.normalize_lambda1 {
        weight.normalized_lambda1()
    } else {
        *weight
    }
}

/// `ln(e^s + d)` for `d ≥ 0`, clamped at `ln 2`.
fn ln_shifted(s: f64, ln_d: Option<f64>) -> f64 {
    let v = match ln_d {
        None => s,
        Some(ld) => {
            let (hi, lo) = if s > ld { (s, ld) } else { (ld, s) };
            hi + (lo - hi).exp().ln_1p()
        }
    };
    v.min(T_MAX.ln())
}

/// Brackets `s = ln γ` for the root of `γ = θ²Λ(γ + d)` given `ln|θ|` and
/// `ln d` (`None` for `d = 0`).  Returns the bracket and the step count.
fn ln_gamma_bracket(weight: &WeightSpec, ln_theta: f64, ln_d: Option<f64>, xtol: f64) -> Result<(f64, f64, usize)> {
    let two = 2.0 * ln_theta;
    let below = |s: f64| -> bool {
        // g(e^s) < 0  ⟺  s < 2 ln|θ| + ln Λ(e^s + d)
        match weight.ln_lambda_ln(ln_shifted(s, ln_d)) {
            Ok(v) => s < two + v,
            Err(_) => false,
        }
    };
    if below(0.0) {
        return domain(format!(
            "no root on (0, 1]: θ²Λ(1 + d) ≥ 1 at θ = e^{ln_theta}; set normalize_lambda1 or reduce the scale"
        ));
    }
    let lo = two + weight.ln_lambda(T_MAX)? - 1.0;
    let lo = lo.min(-1.0);
    let b = bisect_sign(below, lo, 0.0, xtol, MAX_BISECTION_STEPS)?;
    Ok((b.lo, b.hi, b.steps))
}

/// `ln γ(θ)` with `θ = e^{ln_theta}` given in log form, for angles far below
/// the double range.  `ln_d` is `ln dist(e^{iθ}, E)` or `None` on `E`.
pub fn solve_ln_gamma(weight: &WeightSpec, ln_theta: f64, ln_d: Option<f64>, opts: GammaOptions) -> Result<f64> {
    if !(ln_theta <= std::f64::consts::PI.ln()) {
        return domain(format!("|θ| must lie in (0, π], got e^{ln_theta}"));
    }
    let weight = effective(weight, opts);
    let (lo, hi, _) = ln_gamma_bracket(&weight, ln_theta, ln_d, 1e-15 * ln_theta.abs().max(1.0))?;
    Ok(0.5 * (lo + hi))
}

/// Unique root of `γ = θ²Λ(γ + dist(e^{iθ}, E))` on `(0, 1]`.
pub fn solve_gamma(weight: &WeightSpec, set: &BoundarySet, theta: f64, opts: GammaOptions) -> Result<GammaSolution> {
    if theta == 0.0 || theta.is_nan() {
        return domain("θ = 0 is not an admissible angle");
    }
    if theta.abs() > std::f64::consts::PI {
        return domain(format!("|θ| must not exceed π, got {theta}"));
    }
    let weight = effective(weight, opts);
    let d = set.distance_on_circle(theta);
    let ln_d = if d > 0.0 { Some(d.ln()) } else { None };
    let ln_theta = theta.abs().ln();

    let (s_lo, s_hi, steps1) = ln_gamma_bracket(&weight, ln_theta, ln_d, 1e-3)?;
    let (g_lo, g_hi) = (s_lo.exp(), s_hi.exp());
    if g_lo <= 0.0 || g_hi <= 0.0 {
        return Err(Error::Numeric(format!("γ(θ) underflows at θ = {theta}; use solve_ln_gamma")));
    }
    let rhs = |g: f64| -> f64 {
        match weight.ln_lambda_ln(ln_shifted(g.ln(), ln_d)) {
            Ok(v) => (2.0 * ln_theta + v).exp(),
            Err(_) => f64::INFINITY,
        }
    };
    let b = bisect_sign(|g| g < rhs(g), g_lo, g_hi, 0.0, MAX_BISECTION_STEPS - steps1)?;
    let (r_lo, r_hi) = ((b.lo - rhs(b.lo)).abs(), (b.hi - rhs(b.hi)).abs());
    let (gamma, residual) = if r_lo <= r_hi { (b.lo, r_lo) } else { (b.hi, r_hi) };
    if !(residual <= GAMMA_RESIDUAL_TOL * gamma.max(1e-300)) {
        return Err(Error::Numeric(format!("γ residual {residual:e} above tolerance at θ = {theta}")));
    }
    Ok(GammaSolution { theta, gamma, residual, dist_at_theta: d, steps: steps1 + b.steps })
}

/// `(R, φ)` with `w = 1 − e^{iφ}/R`.
pub fn to_halfplane(w: Complex64) -> Result<HalfplaneCoords> {
    let z = Complex64::new(1.0, 0.0) - w;
    if z.norm() == 0.0 {
        return domain("w = 1 has no half-plane coordinates");
    }
    Ok(HalfplaneCoords { r: 1.0 / z.norm(), phi: z.arg() })
}

pub fn from_halfplane(c: HalfplaneCoords) -> Complex64 {
    Complex64::new(1.0, 0.0) - Complex64::from_polar(1.0 / c.r, c.phi)
}

/// The boundary point `(1 − γ)e^{iθ}` of `Ω_{Λ,E}`.
pub fn boundary_point(sol: &GammaSolution) -> Complex64 {
    Complex64::from_polar(1.0 - sol.gamma, sol.theta)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRow {
    pub theta: f64,
    pub gamma: f64,
    pub residual: f64,
    #[serde(rename = "R")]
    pub r: f64,
    pub phi: f64,
}

/// Boundary of `Ω_{Λ,E}` at `points` geometrically spaced angles in `[from, to]`.
pub fn omega_trace(
    weight: &WeightSpec,
    set: &BoundarySet,
    from: f64,
    to: f64,
    points: usize,
    opts: GammaOptions,
) -> Result<Vec<TraceRow>> {
    if !(from > 0.0 && from < to) || points < 2 {
        return usage("trace needs 0 < from < to and at least two points");
    }
    let ratio = (to / from).ln() / (points - 1) as f64;
    (0..points)
        .map(|k| {
            let theta = if k + 1 == points { to } else { from * (ratio * k as f64).exp() };
            let sol = solve_gamma(weight, set, theta, opts)?;
            let hp = to_halfplane(boundary_point(&sol))?;
            Ok(TraceRow { theta, gamma: sol.gamma, residual: sol.residual, r: hp.r, phi: hp.phi })
        })
        .collect()
}

/// Root `u ∈ (0, 2]` of `Λ(u) = x`.
pub fn profile_argument(weight: &WeightSpec, x: f64) -> Result<f64> {
    let floor = weight.eval_lambda(T_MAX)?;
    if !(x > floor && x.is_finite()) {
        return domain(format!("x = {x} must exceed Λ(2) = {floor}"));
    }
    let target = x.ln();
    // ln Λ(e^s) is decreasing in s.
    let above = |s: f64| weight.ln_lambda_ln(s).map(|v| v > target).unwrap_or(false);
    let mut lo = -1.0;
    while !above(lo) {
        lo *= 2.0;
        if lo < -1e6 {
            return domain(format!("no profile root for x = {x}"));
        }
    }
    let b = bisect_sign(above, lo, T_MAX.ln(), 0.0, MAX_BISECTION_STEPS)?;
    Ok(b.mid().exp())
}

/// The `y ≥ 0` with `Λ(4x/((x+1)² + y²)) = x`.
pub fn solve_profile_y(weight: &WeightSpec, x: f64) -> Result<f64> {
    let u = profile_argument(weight, x)?;
    let y2 = 4.0 * x / u - (x + 1.0) * (x + 1.0);
    if y2 < 0.0 {
        return domain(format!(
            "no real profile point at x = {x}: 4x/u = {} is below (x+1)²",
            4.0 * x / u
        ));
    }
    Ok(y2.sqrt())
}

/// Leading asymptotic `2√(x/u)` of the profile at the same `x`.
pub fn profile_y_asymptotic(weight: &WeightSpec, x: f64) -> Result<f64> {
    let u = profile_argument(weight, x)?;
    Ok(2.0 * (x / u).sqrt())
}

/// `∫_eps^upper γ(θ)/θ² dθ` on the positive side.
pub fn gamma_criterion_partial(
    weight: &WeightSpec,
    set: &BoundarySet,
    eps: f64,
    upper: f64,
    opts: GammaOptions,
) -> Result<f64> {
    if !(eps > 0.0) {
        return usage(format!("eps must be positive, got {eps}"));
    }
    gamma_criterion_partial_ln(weight, set, -eps.ln(), -upper.ln(), opts)
}

/// Same integral with the limits given as `u = ln(1/θ)`: `u_eps > u_upper`.
///
/// Integrates `γ/θ` in `u`.  Full, arc and point sets allow any `u_eps`;
/// point sequences and Cantor sets need `θ` inside the double range.
pub fn gamma_criterion_partial_ln(
    weight: &WeightSpec,
    set: &BoundarySet,
    u_eps: f64,
    u_upper: f64,
    opts: GammaOptions,
) -> Result<f64> {
    if !(u_eps > u_upper) {
        return usage("need eps < upper");
    }
    if u_upper < -weight.t_cut.ln() * (1.0 - 1e-12) {
        return usage(format!("upper must not exceed t_cut = {}", weight.t_cut));
    }
    let tiny_ok = matches!(set.kind, SetKind::FullCircle | SetKind::SinglePoint | SetKind::SingleArc { .. });
    if !tiny_ok && u_eps > 690.0 {
        return usage("this set needs eps ≥ 1e-300");
    }
    let weight = effective(weight, opts);
    let ln_dist = |u: f64| -> Option<f64> {
        match set.kind {
            SetKind::FullCircle => None,
            SetKind::SingleArc { b, .. } if (-u).exp() <= b => None,
            SetKind::SinglePoint if u > 30.0 => Some(-u - (-2.0 * u).exp() / 24.0),
            _ => {
                let d = set.distance_on_circle((-u).exp());
                if d > 0.0 {
                    Some(d.ln())
                } else {
                    None
                }
            }
        }
    };
    let mut failure: Option<Error> = None;
    let integrand = |u: f64| -> f64 {
        match solve_ln_gamma(&weight, -u, ln_dist(u), GammaOptions::default()) {
            Ok(s) => (s + u).exp(),
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        }
    };
    let mut breaks = Vec::new();
    let mut u = u_upper.max(1.0);
    while u < u_eps {
        breaks.push(u);
        u *= 1.5;
    }
    if !tiny_ok {
        if let Ok(arcs) = set.complementary_arcs((-u_eps).exp()) {
            for arc in arcs.iter().take(20_000) {
                for x in [arc.a, 0.5 * (arc.a + arc.b), arc.b] {
                    if x > 0.0 {
                        breaks.push(-x.ln());
                    }
                }
            }
        }
    }
    let value = integrate_checked(integrand, u_upper, u_eps, &breaks, QuadOptions::rel(1e-8))?;
    match failure {
        Some(e) => Err(e),
        None => Ok(value),
    }
}
