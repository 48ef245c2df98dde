//! Ahlfors–Carleman quantities of symmetric unbounded domains: the
//! cross-section length `s(r)`, the distortion `σ(ρ)`, the
//! Phragmén–Lindelöf divergence integrands and a walk-on-spheres estimate of
//! the harmonic measure of the far circle.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{usage, Error, Result};
use crate::quad::{integrate_checked, QuadOptions};
use crate::roots::bisect;

pub const MIN_PATHS: usize = 10_000;
pub const MAX_WALK_STEPS: usize = 100_000;
/// Absorption distance relative to `ρ`.
pub const ABSORB_TOL: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Phi {
    /// `φ(x) = x`.
    Linear,
    /// `φ(x) = x²`.
    Square,
    Const(f64),
    /// `φ(x) = 1/ln x` for `x ≥ r0`, held at `1/ln r0` below.
    InvLog { r0: f64 },
}

impl Phi {
    pub fn eval(self, x: f64) -> f64 {
        match self {
            Phi::Linear => x,
            Phi::Square => x * x,
            Phi::Const(c) => c,
            Phi::InvLog { r0 } => 1.0 / x.max(r0).ln(),
        }
    }

    pub fn derivative(self, x: f64) -> f64 {
        match self {
            Phi::Linear => 1.0,
            Phi::Square => 2.0 * x,
            Phi::Const(_) => 0.0,
            Phi::InvLog { r0 } => {
                if x < r0 {
                    0.0
                } else {
                    let l = x.ln();
                    -1.0 / (x * l * l)
                }
            }
        }
    }

    fn kink(self) -> Option<f64> {
        match self {
            Phi::InvLog { r0 } => Some(r0),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// `G = {x + iy : x > 0, |y| < φ(x)}`.
    Cartesian,
    /// `G = {R e^{iθ} : |θ| < π/2 − φ(R)}`.
    Sector,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ProfileJson", into = "ProfileJson")]
pub struct DomainProfile {
    pub variant: Variant,
    pub phi: Phi,
}

impl DomainProfile {
    pub fn new(variant: Variant, phi: Phi) -> Result<Self> {
        match (variant, phi) {
            (_, Phi::Const(c)) if !(c >= 0.0 && c.is_finite()) => return usage(format!("φ constant must be nonnegative, got {c}")),
            (Variant::Cartesian, Phi::Const(0.0)) => return usage("a Cartesian profile needs φ > 0"),
            (Variant::Sector, Phi::Const(c)) if c >= FRAC_PI_2 => return usage("a sector needs φ < π/2"),
            (Variant::Sector, Phi::Linear | Phi::Square) => return usage("sector profiles take `const`, `zero` or `invlog`"),
            (_, Phi::InvLog { r0 }) if !(r0 > std::f64::consts::E) => {
                return usage(format!("invlog needs r0 > e so that φ < 1, got {r0}"))
            }
            _ => {}
        }
        Ok(DomainProfile { variant, phi })
    }

    pub fn half_plane() -> Self {
        DomainProfile { variant: Variant::Sector, phi: Phi::Const(0.0) }
    }

    pub fn wedge() -> Self {
        DomainProfile { variant: Variant::Cartesian, phi: Phi::Linear }
    }

    pub fn half_strip() -> Self {
        DomainProfile { variant: Variant::Cartesian, phi: Phi::Const(1.0) }
    }

    pub fn contains(&self, z: Complex64) -> bool {
        match self.variant {
            Variant::Cartesian => z.re > 0.0 && z.im.abs() < self.phi.eval(z.re),
            Variant::Sector => z.norm() > 0.0 && z.arg().abs() < FRAC_PI_2 - self.phi.eval(z.norm()),
        }
    }

    /// Distance from an interior point to `∂G` (a lower bound within 1e-9
    /// relative for profiles without a closed form).
    pub fn boundary_distance(&self, z: Complex64) -> f64 {
        let (x, y) = (z.re, z.im.abs());
        match (self.variant, self.phi) {
            (Variant::Sector, Phi::Const(c)) => {
                let gap = FRAC_PI_2 - c - z.arg().abs();
                if gap >= FRAC_PI_2 {
                    z.norm()
                } else {
                    z.norm() * gap.sin()
                }
            }
            (Variant::Cartesian, Phi::Linear) => (x - y) * std::f64::consts::FRAC_1_SQRT_2,
            (Variant::Cartesian, Phi::Const(c)) => (c - y).min(x),
            (Variant::Cartesian, phi) => {
                let cap = (phi.eval(x) - y).min(x.hypot(y - phi.eval(0.0).min(y)));
                let curve = |t: f64| (t - x).hypot(phi.eval(t) - y);
                let lo = (x - cap).max(0.0);
                let d = min_on(curve, lo, x + cap).min(cap);
                if phi.eval(0.0) > 0.0 {
                    d.min(x)
                } else {
                    d
                }
            }
            (Variant::Sector, phi) => {
                let r = z.norm();
                let psi = z.arg().abs();
                let cap = r * (FRAC_PI_2 - phi.eval(r) - psi).sin().max(0.0);
                let curve = |t: f64| (Complex64::from_polar(t, FRAC_PI_2 - phi.eval(t)) - Complex64::new(x, y)).norm();
                min_on(curve, (r - cap).max(0.0), r + cap).min(cap)
            }
        }
    }
}

/// Minimum of a unimodal-near-the-minimum `f` on `[a, b]`: coarse scan, then
/// golden-section refinement.
fn min_on<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    if !(b > a) {
        return f(a);
    }
    let n = 24;
    let h = (b - a) / n as f64;
    let (mut best, mut best_t) = (f64::INFINITY, a);
    for k in 0..=n {
        let t = a + h * k as f64;
        let v = f(t);
        if v < best {
            best = v;
            best_t = t;
        }
    }
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut lo, mut hi) = ((best_t - h).max(a), (best_t + h).min(b));
    let mut c = hi - g * (hi - lo);
    let mut d = lo + g * (hi - lo);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..40 {
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - g * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + g * (hi - lo);
            fd = f(d);
        }
    }
    best.min(fc).min(fd) * (1.0 - 1e-9)
}

/// Length of the cross-section `G ∩ {|z| = r}`.
pub fn arc_length_s(profile: &DomainProfile, r: f64) -> Result<f64> {
    if !(r > 0.0 && r.is_finite()) {
        return usage(format!("r must be positive, got {r}"));
    }
    match profile.variant {
        Variant::Sector => Ok(r * (PI - 2.0 * profile.phi.eval(r))),
        Variant::Cartesian => {
            let phi = profile.phi;
            let f = |x: f64| x * x + phi.eval(x).powi(2) - r * r;
            let x = if f(0.0) >= 0.0 {
                0.0
            } else {
                bisect(f, 0.0, r, 0.0, 200)?.mid()
            };
            Ok(r * (PI - 2.0 * x.atan2(phi.eval(x))))
        }
    }
}

/// `σ(ρ) = exp(π ∫_1^ρ dr/s(r))`.
pub fn sigma(profile: &DomainProfile, rho: f64) -> Result<f64> {
    Ok(ln_sigma(profile, rho)?.exp())
}

pub fn ln_sigma(profile: &DomainProfile, rho: f64) -> Result<f64> {
    if !(rho >= 1.0) {
        return usage(format!("rho must be at least 1, got {rho}"));
    }
    if rho == 1.0 {
        return Ok(0.0);
    }
    let mut failure = None;
    let integrand = |v: f64| {
        let r = v.exp();
        match arc_length_s(profile, r) {
            Ok(s) => PI * r / s,
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        }
    };
    let breaks: Vec<f64> = profile.phi.kink().into_iter().map(f64::ln).collect();
    let v = integrate_checked(integrand, 0.0, rho.ln(), &breaks, QuadOptions::rel(1e-10))?;
    match failure {
        Some(e) => Err(e),
        None => Ok(v),
    }
}

/// `xφ′(x)/φ(x)²` (Cartesian) or `φ(R)/R` (sector).
pub fn pl_divergence_integrand(profile: &DomainProfile, x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return usage(format!("argument must be positive, got {x}"));
    }
    let phi = profile.phi.eval(x);
    Ok(match profile.variant {
        Variant::Cartesian => x * profile.phi.derivative(x) / (phi * phi),
        Variant::Sector => phi / x,
    })
}

/// `∫_from^to` of [`pl_divergence_integrand`].
pub fn pl_divergence_partial(profile: &DomainProfile, from: f64, to: f64) -> Result<f64> {
    if !(from > 0.0 && to >= from) {
        return usage("need 0 < from ≤ to");
    }
    let integrand = |v: f64| {
        let x = v.exp();
        x * pl_divergence_integrand(profile, x).unwrap_or(0.0)
    };
    let breaks: Vec<f64> = profile.phi.kink().into_iter().map(f64::ln).collect();
    integrate_checked(integrand, from.ln(), to.ln(), &breaks, QuadOptions::rel(1e-10))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub mean: f64,
    pub standard_error: f64,
    pub paths: usize,
    pub hits: usize,
    /// Paths stopped by the step cap (counted as misses).
    pub capped: usize,
}

/// Probability that Brownian motion from `z0` leaves `G ∩ {|z| < ρ}` through
/// the circle `|z| = ρ`.  Path `k` draws from the ChaCha8 stream `k` of `seed`.
pub fn harmonic_measure_mc(profile: &DomainProfile, z0: Complex64, rho: f64, paths: usize, seed: u64) -> Result<McEstimate> {
    if paths < MIN_PATHS {
        return usage(format!("at least {MIN_PATHS} paths are required, got {paths}"));
    }
    if !profile.contains(z0) {
        return usage(format!("z0 = {z0} is not inside the domain"));
    }
    if !(z0.norm() < 0.5 * rho) {
        return usage(format!("need |z0| < ρ/2, got |z0| = {} and ρ = {rho}", z0.norm()));
    }
    let tol = ABSORB_TOL * rho;
    let outcomes: Vec<(bool, bool)> = (0..paths)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            walk(profile, z0, rho, tol, &mut rng)
        })
        .collect();
    let hits = outcomes.iter().filter(|o| o.0).count();
    let capped = outcomes.iter().filter(|o| o.1).count();
    let p = hits as f64 / paths as f64;
    let se = (p * (1.0 - p) / paths as f64).sqrt();
    Ok(McEstimate { mean: p, standard_error: se, paths, hits, capped })
}

/// One walk-on-spheres path: `(hit the far circle, stopped by the cap)`.
fn walk(profile: &DomainProfile, z0: Complex64, rho: f64, tol: f64, rng: &mut ChaCha8Rng) -> (bool, bool) {
    let mut z = z0;
    for _ in 0..MAX_WALK_STEPS {
        let to_circle = rho - z.norm();
        let to_wall = profile.boundary_distance(z);
        let d = to_circle.min(to_wall);
        if d < tol {
            return (to_circle <= to_wall, false);
        }
        let angle: f64 = rng.gen::<f64>() * 2.0 * PI;
        z += Complex64::from_polar(d, angle);
        if !profile.contains(z) && z.norm() < rho {
            return (false, false);
        }
    }
    (false, true)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McRow {
    pub rho: f64,
    pub mean: f64,
    pub standard_error: f64,
    pub sigma: f64,
    pub bound: f64,
    pub within: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McValidation {
    pub c_fit: f64,
    pub rows: Vec<McRow>,
    pub pass: bool,
}

/// Fits one constant `C` with `m̂(ρ) ≈ C/σ(ρ)` (inverse-variance weighted
/// mean of `m̂σ`) and checks `m̂ ≤ C/σ + 3·se` at every `ρ`.
pub fn validate_mc(profile: &DomainProfile, z0: Complex64, rhos: &[f64], paths: usize, seed: u64) -> Result<McValidation> {
    let mut raw = Vec::with_capacity(rhos.len());
    for &rho in rhos {
        let est = harmonic_measure_mc(profile, z0, rho, paths, seed)?;
        raw.push((rho, est, sigma(profile, rho)?));
    }
    let (mut num, mut den) = (0.0, 0.0);
    for (_, est, sig) in &raw {
        let var = (est.standard_error * sig).powi(2).max(1e-300);
        num += est.mean * sig / var;
        den += 1.0 / var;
    }
    if den == 0.0 {
        return Err(Error::Numeric("no usable Monte Carlo estimates".into()));
    }
    let c_fit = num / den;
    let rows: Vec<McRow> = raw
        .into_iter()
        .map(|(rho, est, sig)| {
            let bound = c_fit / sig;
            McRow { rho, mean: est.mean, standard_error: est.standard_error, sigma: sig, bound, within: est.mean <= bound + 3.0 * est.standard_error }
        })
        .collect();
    let pass = rows.iter().all(|r| r.within);
    Ok(McValidation { c_fit, rows, pass })
}

#[derive(Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct ParamsJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    r0: Option<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProfileJson {
    variant: Variant,
    phi: String,
    #[serde(default)]
    params: ParamsJson,
}

impl TryFrom<ProfileJson> for DomainProfile {
    type Error = Error;

    fn try_from(j: ProfileJson) -> Result<Self> {
        let no_params = |p: &ParamsJson| -> Result<()> {
            if p.c.is_some() || p.r0.is_some() {
                return usage(format!("φ kind `{}` takes no parameters", j.phi));
            }
            Ok(())
        };
        let phi = match j.phi.as_str() {
            "x" => {
                no_params(&j.params)?;
                Phi::Linear
            }
            "x2" => {
                no_params(&j.params)?;
                Phi::Square
            }
            "const1" => {
                no_params(&j.params)?;
                Phi::Const(1.0)
            }
            "zero" => {
                no_params(&j.params)?;
                Phi::Const(0.0)
            }
            "const" => {
                if j.params.r0.is_some() {
                    return usage("`const` takes only `c`");
                }
                Phi::Const(j.params.c.ok_or_else(|| Error::Usage("`const` needs params.c".into()))?)
            }
            "invlog" => {
                if j.params.c.is_some() {
                    return usage("`invlog` takes only `r0`");
                }
                Phi::InvLog { r0: j.params.r0.unwrap_or((2.0f64).exp()) }
            }
            other => return usage(format!("unknown φ kind `{other}`")),
        };
        DomainProfile::new(j.variant, phi)
    }
}

impl From<DomainProfile> for ProfileJson {
    fn from(p: DomainProfile) -> Self {
        let mut params = ParamsJson::default();
        let phi = match p.phi {
            Phi::Linear => "x",
            Phi::Square => "x2",
            Phi::Const(1.0) => "const1",
            Phi::Const(0.0) => "zero",
            Phi::Const(c) => {
                params.c = Some(c);
                "const"
            }
            Phi::InvLog { r0 } => {
                params.r0 = Some(r0);
                "invlog"
            }
        };
        ProfileJson { variant: p.variant, phi: phi.into(), params }
    }
}
