//! Weight families `Λ(t) = c₀ / (t w(t)²)` with `w(t) = log^ν(1/t)`, their
//! regularity checks and the classical condition integrands.
//!
//! Near `t = 1` the logarithm vanishes and the pure formula stops being
//! decreasing, so it is used only on `(0, t*]` and continued by
//! `Λ(t*)·t*/t` up to `t = 2`.  Here `t* = min(t_cut, e^{-2ν})`: the pure
//! formula has `tΛ′/Λ = -(1 - 2ν/L)`, which changes sign at `L = 2ν`.

use serde::{Deserialize, Serialize};

use crate::error::{domain, usage, Result};

/// Largest argument accepted by [`WeightSpec::eval_lambda`].
pub const T_MAX: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    /// `Λ_α(t) = 1/(t log^α(1/t))`, i.e. `w = log^{α/2}(1/t)`.
    LogPower { alpha: f64 },
    /// `w(t) = log^p(1/t)`.
    FromW { p: f64 },
    /// `w ≡ 1`, `Λ = 1/t`.
    ConstantW,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "WeightJson", into = "WeightJson")]
pub struct WeightSpec {
    pub family: Family,
    pub t_cut: f64,
    pub scale: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConditionKind {
    Nikolski,
    Gs,
    CBeta(OrderedBeta),
}

/// A `β ∈ [0, 1/2]`, stored as its bit pattern so the kind stays `Eq`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OrderedBeta(u64);

impl OrderedBeta {
    pub fn new(beta: f64) -> Result<Self> {
        if !(0.0..=0.5).contains(&beta) {
            return usage(format!("beta must lie in [0, 1/2], got {beta}"));
        }
        Ok(OrderedBeta(beta.to_bits()))
    }
    pub fn get(self) -> f64 {
        f64::from_bits(self.0)
    }
}

impl ConditionKind {
    pub fn c_beta(beta: f64) -> Result<Self> {
        Ok(ConditionKind::CBeta(OrderedBeta::new(beta)?))
    }

    /// Power of `tΛ(t)` that makes up `t·integrand`.
    fn mass_power(self) -> f64 {
        match self {
            ConditionKind::Nikolski => 0.5,
            ConditionKind::Gs => 1.0,
            ConditionKind::CBeta(b) => 1.0 - b.get(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegularityReport {
    pub max_t_lambda: f64,
    /// `max t|Λ′|/Λ` with `Λ′` from central differences (relative step 1e-6).
    pub max_log_derivative: f64,
    /// The same maximum from the closed-form derivative.
    pub max_log_derivative_closed: f64,
    pub decreasing: bool,
    /// Heuristic reading of `tΛ(t) → 0`: `tΛ` never grows toward 0 and halves
    /// across the grid.
    pub t_lambda_vanishing: bool,
}

pub const DEFAULT_T_CUT: f64 = 0.135_335_283_236_612_7; // e^-2

impl WeightSpec {
    pub fn new(family: Family, t_cut: f64, scale: f64) -> Result<Self> {
        match family {
            Family::LogPower { alpha } if !(alpha > 0.0 && alpha.is_finite()) => {
                return usage(format!("alpha must be positive, got {alpha}"))
            }
            Family::FromW { p } if !(p > 0.0 && p.is_finite()) => {
                return usage(format!("p must be positive, got {p}"))
            }
            _ => {}
        }
        if !(t_cut > 0.0 && t_cut < 1.0) {
            return usage(format!("t_cut must lie in (0, 1), got {t_cut}"));
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return usage(format!("scale must be positive, got {scale}"));
        }
        Ok(WeightSpec { family, t_cut, scale })
    }

    pub fn log_power(alpha: f64) -> Result<Self> {
        Self::new(Family::LogPower { alpha }, DEFAULT_T_CUT, 1.0)
    }

    pub fn from_w(p: f64) -> Result<Self> {
        Self::new(Family::FromW { p }, DEFAULT_T_CUT, 1.0)
    }

    pub fn constant_w() -> Self {
        WeightSpec { family: Family::ConstantW, t_cut: DEFAULT_T_CUT, scale: 1.0 }
    }

    pub fn with_scale(self, scale: f64) -> Result<Self> {
        Self::new(self.family, self.t_cut, scale)
    }

    pub fn with_t_cut(self, t_cut: f64) -> Result<Self> {
        Self::new(self.family, t_cut, self.scale)
    }

    /// Exponent `ν` with `w = L^ν`, `L = log(1/t)`.
    pub fn nu(&self) -> f64 {
        match self.family {
            Family::LogPower { alpha } => 0.5 * alpha,
            Family::FromW { p } => p,
            Family::ConstantW => 0.0,
        }
    }

    /// `L* = log(1/t*)`, the start of the pure-formula region in log scale.
    pub fn l_cut(&self) -> f64 {
        (-self.t_cut.ln()).max(2.0 * self.nu())
    }

    /// `t*`, the end of the pure-formula region.
    pub fn pure_cut(&self) -> f64 {
        (-self.l_cut()).exp()
    }

    /// `ln Λ` at `t = e^{-l}` for `l ≥ L*` (pure region, no underflow).
    pub fn ln_lambda_at_l(&self, l: f64) -> f64 {
        self.scale.ln() + l - 2.0 * self.nu() * l.ln()
    }

    /// `w` at `t = e^{-l}` in the pure region, without the scale.
    pub fn w_at_l(&self, l: f64) -> f64 {
        match self.family {
            Family::ConstantW => 1.0,
            _ => l.powf(self.nu()),
        }
    }

    /// `ln Λ(t)` given `ln t`, for `t ∈ (0, 2]`; valid far below the double range.
    pub fn ln_lambda_ln(&self, ln_t: f64) -> Result<f64> {
        if ln_t.is_nan() || ln_t > T_MAX.ln() * (1.0 + 1e-15) {
            return domain(format!("weight argument e^{ln_t} outside (0, 2]"));
        }
        let l_cut = self.l_cut();
        let l = -ln_t;
        if l >= l_cut {
            if l < f64::EPSILON {
                return domain("weight argument at a zero of the logarithm");
            }
            Ok(self.ln_lambda_at_l(l))
        } else {
            Ok(self.ln_lambda_at_l(l_cut) - l_cut - ln_t)
        }
    }

    pub fn ln_lambda(&self, t: f64) -> Result<f64> {
        if !(t > 0.0 && t <= T_MAX) {
            return domain(format!("weight argument {t} outside (0, 2]"));
        }
        self.ln_lambda_ln(t.ln())
    }

    pub fn eval_lambda(&self, t: f64) -> Result<f64> {
        if !(t > 0.0 && t <= T_MAX) {
            return domain(format!("weight argument {t} outside (0, 2]"));
        }
        let l_cut = self.l_cut();
        let l = -t.ln();
        if l >= l_cut {
            if l < f64::EPSILON {
                return domain("weight argument at a zero of the logarithm");
            }
            Ok(self.scale * (1.0 / (t * self.w_at_l(l).powi(2))))
        } else {
            Ok(self.scale * (1.0 / (t * self.w_at_l(l_cut).powi(2))))
        }
    }

    /// `Λ` evaluated at `min(t, 2)`.
    pub fn eval_lambda_clamped(&self, t: f64) -> Result<f64> {
        self.eval_lambda(t.min(T_MAX))
    }

    /// Closed-form `Λ′(t)`.
    pub fn lambda_prime(&self, t: f64) -> Result<f64> {
        let lam = self.eval_lambda(t)?;
        let l = -t.ln();
        if l >= self.l_cut() {
            Ok(-lam / t * (1.0 - 2.0 * self.nu() / l))
        } else {
            Ok(-lam / t)
        }
    }

    pub fn eval_w(&self, t: f64) -> Result<f64> {
        if !(t > 0.0 && t <= self.pure_cut() * (1.0 + 1e-15)) {
            return domain(format!("w is defined on (0, {}], got {t}", self.pure_cut()));
        }
        Ok(self.w_at_l(-t.ln()))
    }

    /// Copy whose scale is reduced so that `Λ(1) ≤ 0.09 < 1/10`.
    pub fn normalized_lambda1(&self) -> WeightSpec {
        let at_one = self.eval_lambda(1.0).expect("1 lies in the weight domain");
        let factor = (0.09 / at_one).min(1.0);
        WeightSpec { scale: self.scale * factor, ..*self }
    }

    pub fn check_regularity(&self, grid: &[f64]) -> Result<RegularityReport> {
        if grid.len() < 8 {
            return usage(format!("regularity grid needs at least 8 points, got {}", grid.len()));
        }
        let cut = self.pure_cut();
        for w in grid.windows(2) {
            if !(w[1] < w[0]) {
                return usage("regularity grid must be strictly decreasing");
            }
        }
        if !(grid[grid.len() - 1] > 0.0 && grid[0] <= cut * (1.0 + 1e-15)) {
            return usage(format!("regularity grid must lie in (0, {cut}]"));
        }
        if grid[0] / grid[grid.len() - 1] < 1e4 * (1.0 - 1e-12) {
            return usage("regularity grid must span at least 4 decades");
        }
        let mut max_tl = 0.0f64;
        let mut max_fd = 0.0f64;
        let mut max_cf = 0.0f64;
        let mut decreasing = true;
        let mut nonincreasing_tl = true;
        let mut prev: Option<(f64, f64)> = None;
        let h = 1e-6;
        for &t in grid {
            let lam = self.eval_lambda(t)?;
            let tl = t * lam;
            max_tl = max_tl.max(tl);
            let fd = (self.eval_lambda(t * (1.0 + h))? - self.eval_lambda(t * (1.0 - h))?) / (2.0 * t * h);
            max_fd = max_fd.max(t * fd.abs() / lam);
            max_cf = max_cf.max(t * self.lambda_prime(t)?.abs() / lam);
            if let Some((plam, ptl)) = prev {
                decreasing &= lam > plam;
                nonincreasing_tl &= tl <= ptl * (1.0 + 1e-12);
            }
            prev = Some((lam, tl));
        }
        let first = grid[0] * self.eval_lambda(grid[0])?;
        let last = grid[grid.len() - 1] * self.eval_lambda(grid[grid.len() - 1])?;
        Ok(RegularityReport {
            max_t_lambda: max_tl,
            max_log_derivative: max_fd,
            max_log_derivative_closed: max_cf,
            decreasing,
            t_lambda_vanishing: nonincreasing_tl && last <= 0.5 * first,
        })
    }

    pub fn condition_integrand(&self, kind: ConditionKind, t: f64) -> Result<f64> {
        if !(t > 0.0 && t <= self.pure_cut() * (1.0 + 1e-15)) {
            return domain(format!("condition integrand needs t in (0, {}], got {t}", self.pure_cut()));
        }
        let lam = self.eval_lambda(t)?;
        Ok(match kind {
            ConditionKind::Nikolski => (lam / t).sqrt(),
            ConditionKind::Gs => lam,
            ConditionKind::CBeta(b) => {
                let b = b.get();
                lam.powf(1.0 - b) / t.powf(b)
            }
        })
    }

    /// `ln(t·integrand)` at `t = e^{-l}` in the pure region; the integrand's
    /// mass per unit of `l`.
    pub fn ln_condition_mass(&self, kind: ConditionKind, l: f64) -> f64 {
        kind.mass_power() * (self.ln_lambda_at_l(l) - l)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WeightJson {
    family: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    t_cut: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    scale: Option<f64>,
}

impl TryFrom<WeightJson> for WeightSpec {
    type Error = crate::error::Error;

    fn try_from(j: WeightJson) -> Result<Self> {
        let family = match (j.family.as_str(), j.alpha, j.p) {
            ("log_power", Some(alpha), None) => Family::LogPower { alpha },
            ("from_w", None, Some(p)) => Family::FromW { p },
            ("const_w", None, None) => Family::ConstantW,
            ("log_power", ..) => return usage("log_power needs exactly the parameter `alpha`"),
            ("from_w", ..) => return usage("from_w needs exactly the parameter `p`"),
            ("const_w", ..) => return usage("const_w takes no exponent"),
            (other, ..) => return usage(format!("unknown weight family `{other}`")),
        };
        WeightSpec::new(family, j.t_cut.unwrap_or(DEFAULT_T_CUT), j.scale.unwrap_or(1.0))
    }
}

impl From<WeightSpec> for WeightJson {
    fn from(w: WeightSpec) -> Self {
        let (family, alpha, p) = match w.family {
            Family::LogPower { alpha } => ("log_power", Some(alpha), None),
            Family::FromW { p } => ("from_w", None, Some(p)),
            Family::ConstantW => ("const_w", None, None),
        };
        // Defaults are left out so that e^-2 survives a decimal round trip.
        WeightJson {
            family: family.into(),
            alpha,
            p,
            t_cut: (w.t_cut != DEFAULT_T_CUT).then_some(w.t_cut),
            scale: (w.scale != 1.0).then_some(w.scale),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::E;

    #[test]
    fn lambda_examples() {
        // t = 1/e lies in the pure region once t_cut is above it.
        let wide = WeightSpec::log_power(1.0).unwrap().with_t_cut(0.5).unwrap();
        assert_relative_eq!(wide.eval_lambda(1.0 / E).unwrap(), E, max_relative = 1e-14);
        let w = WeightSpec::log_power(1.0).unwrap();
        assert_relative_eq!(w.eval_lambda(1.0 / E).unwrap(), E / 2.0, max_relative = 1e-14);
        assert_relative_eq!(w.eval_lambda(0.3).unwrap(), 1.0 / 0.6, max_relative = 1e-14);
        let f = WeightSpec::from_w(1.0).unwrap();
        assert_relative_eq!(f.eval_lambda((-2.0f64).exp()).unwrap(), E * E / 4.0, max_relative = 1e-14);
    }

    #[test]
    fn continuation_by_substitution() {
        // Λ(t_cut)·t_cut/t computed by hand for α = 1.
        let w = WeightSpec::log_power(1.0).unwrap();
        let tc = (-2.0f64).exp();
        let at_cut = 1.0 / (tc * 2.0);
        assert_relative_eq!(w.eval_lambda(0.3).unwrap(), at_cut * tc / 0.3, max_relative = 1e-14);
    }

    #[test]
    fn w_examples() {
        let w = WeightSpec::from_w(0.5).unwrap();
        assert_relative_eq!(w.eval_w((-4.0f64).exp()).unwrap(), 2.0, max_relative = 1e-15);
        let w1 = WeightSpec::from_w(1.0).unwrap();
        assert_relative_eq!(w1.eval_w(0.1).unwrap(), 10f64.ln(), max_relative = 1e-15);
        let t: f64 = 1e-3;
        assert_relative_eq!(w1.eval_w(t * t).unwrap() / w1.eval_w(t).unwrap(), 2.0, max_relative = 1e-15);
        assert!(w1.eval_w(0.5).is_err());
    }

    #[test]
    fn domain_errors() {
        let w = WeightSpec::log_power(1.0).unwrap();
        assert!(w.eval_lambda(0.0).is_err());
        assert!(w.eval_lambda(-1.0).is_err());
        assert!(w.eval_lambda(2.5).is_err());
        assert!(WeightSpec::log_power(-1.0).is_err());
        assert!(WeightSpec::log_power(1.0).unwrap().with_t_cut(1.0).is_err());
    }

    #[test]
    fn steep_families_move_the_cut() {
        let w = WeightSpec::log_power(4.0).unwrap();
        assert_relative_eq!(w.l_cut(), 4.0);
        let mut prev = f64::INFINITY;
        for k in 1..400 {
            let t = 2.0 * (k as f64 / 400.0).powi(6);
            let v = w.eval_lambda(t).unwrap();
            assert!(v < prev);
            prev = v;
        }
    }

    fn decade_grid(from: f64, to: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| from * (to / from).powf(i as f64 / (n - 1) as f64)).collect()
    }

    #[test]
    fn regularity_log_power_one() {
        let w = WeightSpec::log_power(1.0).unwrap();
        let grid = decade_grid(1e-2, 1e-8, 13);
        let r = w.check_regularity(&grid).unwrap();
        assert_relative_eq!(r.max_t_lambda, 1.0 / 100f64.ln(), max_relative = 1e-12);
        // t|Λ′|/Λ = (L-1)/L, largest at the smallest t.
        let l = 1e8f64.ln();
        assert_relative_eq!(r.max_log_derivative_closed, (l - 1.0) / l, max_relative = 1e-12);
        assert_relative_eq!(r.max_log_derivative, r.max_log_derivative_closed, max_relative = 1e-6);
        assert!(r.max_log_derivative < 1.0);
        assert!(r.decreasing && r.t_lambda_vanishing);
    }

    #[test]
    fn regularity_constant_w() {
        let w = WeightSpec::constant_w();
        let grid = decade_grid(1e-2, 1e-8, 10);
        let r = w.check_regularity(&grid).unwrap();
        assert_relative_eq!(r.max_t_lambda, 1.0, max_relative = 1e-14);
        assert!(!r.t_lambda_vanishing);
        assert!(r.decreasing);
    }

    #[test]
    fn regularity_grid_validation() {
        let w = WeightSpec::log_power(1.0).unwrap();
        assert!(w.check_regularity(&decade_grid(1e-2, 1e-4, 10)).is_err());
        assert!(w.check_regularity(&decade_grid(1e-2, 1e-8, 5)).is_err());
        assert!(w.check_regularity(&decade_grid(0.5, 1e-8, 10)).is_err());
    }

    #[test]
    fn symbolic_derivative_oracle() {
        // Λ′ = -(L-1)/(tL)² for α = 1.
        let w = WeightSpec::log_power(1.0).unwrap();
        for &t in &[1e-3, 0.05, 1e-9] {
            let l = -f64::ln(t);
            assert_relative_eq!(w.lambda_prime(t).unwrap(), -(l - 1.0) / (t * l).powi(2), max_relative = 1e-13);
        }
    }

    #[test]
    fn condition_integrand_examples() {
        let w2 = WeightSpec::log_power(2.0).unwrap();
        let t = (-4.0f64).exp();
        assert_relative_eq!(
            w2.condition_integrand(ConditionKind::Nikolski, t).unwrap(),
            4f64.exp() / 4.0,
            max_relative = 1e-13
        );
        let w1 = WeightSpec::log_power(1.0).unwrap();
        assert!(w1.condition_integrand(ConditionKind::Gs, 1.0 / E).is_err());
        let wide = w1.with_t_cut(0.5).unwrap();
        assert_relative_eq!(wide.condition_integrand(ConditionKind::Gs, 1.0 / E).unwrap(), E, max_relative = 1e-14);
        let t = 0.1;
        assert_relative_eq!(
            w1.condition_integrand(ConditionKind::Gs, t).unwrap(),
            w1.eval_lambda(t).unwrap(),
            max_relative = 1e-15
        );
        let half = ConditionKind::c_beta(0.5).unwrap();
        for &t in &[1e-2, 1e-5, 1e-30] {
            assert_relative_eq!(
                w2.condition_integrand(half, t).unwrap(),
                w2.condition_integrand(ConditionKind::Nikolski, t).unwrap(),
                max_relative = 1e-12
            );
        }
        assert!(ConditionKind::c_beta(0.7).is_err());
    }

    #[test]
    fn condition_mass_matches_integrand() {
        let w = WeightSpec::log_power(1.3).unwrap().with_scale(3.0).unwrap();
        let kinds = [ConditionKind::Nikolski, ConditionKind::Gs, ConditionKind::c_beta(0.25).unwrap()];
        for kind in kinds {
            let l: f64 = 9.0;
            let t = (-l).exp();
            let direct = t * w.condition_integrand(kind, t).unwrap();
            assert_relative_eq!(w.ln_condition_mass(kind, l).exp(), direct, max_relative = 1e-12);
        }
    }

    #[test]
    fn normalization_caps_lambda_at_one() {
        for w in [WeightSpec::log_power(0.5).unwrap(), WeightSpec::log_power(2.0).unwrap(), WeightSpec::constant_w()] {
            let n = w.normalized_lambda1();
            assert!(n.eval_lambda(1.0).unwrap() <= 0.09 * (1.0 + 1e-14));
        }
    }

    #[test]
    fn json_round_trip() {
        let w = WeightSpec::log_power(1.5).unwrap().with_scale(10.0).unwrap();
        let s = serde_json::to_string(&w).unwrap();
        let back: WeightSpec = serde_json::from_str(&s).unwrap();
        assert_eq!(w, back);
        let f: WeightSpec = serde_json::from_str(r#"{"family":"from_w","p":0.4}"#).unwrap();
        assert_eq!(f.family, Family::FromW { p: 0.4 });
        assert!(serde_json::from_str::<WeightSpec>(r#"{"family":"from_w","p":0.4,"extra":1}"#).is_err());
        assert!(serde_json::from_str::<WeightSpec>(r#"{"family":"log_power","p":0.4}"#).is_err());
    }

    fn any_weight() -> impl Strategy<Value = WeightSpec> {
        (0usize..3, 0.1f64..4.0, 0.05f64..20.0, 2.0f64..4.0).prop_map(|(k, e, c, lc)| {
            let fam = match k {
                0 => Family::LogPower { alpha: e },
                1 => Family::FromW { p: e / 2.0 },
                _ => Family::ConstantW,
            };
            WeightSpec::new(fam, (-lc).exp(), c).unwrap()
        })
    }

    proptest! {
        #[test]
        fn strictly_decreasing(w in any_weight(), a in -60.0f64..0.69, b in -60.0f64..0.69) {
            prop_assume!((a - b).abs() > 1e-9);
            let (t1, t2) = if a < b { (a.exp(), b.exp()) } else { (b.exp(), a.exp()) };
            prop_assert!(w.eval_lambda(t1).unwrap() > w.eval_lambda(t2).unwrap());
        }

        #[test]
        fn factorization_identity(w in any_weight(), l in 4.0f64..600.0) {
            let t = (-l).exp();
            let v = w.eval_lambda(t).unwrap() * t * w.eval_w(t).unwrap().powi(2);
            prop_assert!((v / w.scale - 1.0).abs() < 1e-12);
        }

        #[test]
        fn continuous_at_cut(w in any_weight()) {
            let tc = w.pure_cut();
            let lo = w.eval_lambda(tc * (1.0 - 1e-13)).unwrap();
            let hi = w.eval_lambda(tc * (1.0 + 1e-13)).unwrap();
            prop_assert!((lo / hi - 1.0).abs() < 1e-12);
        }

        #[test]
        fn scale_covariance(w in any_weight(), t in 1e-12f64..2.0) {
            let unit = WeightSpec { scale: 1.0, ..w };
            prop_assert_eq!(w.eval_lambda(t).unwrap(), w.scale * unit.eval_lambda(t).unwrap());
        }

        #[test]
        fn log_space_agrees(w in any_weight(), t in 1e-200f64..2.0) {
            let direct = w.eval_lambda(t).unwrap().ln();
            prop_assert!((w.ln_lambda(t).unwrap() - direct).abs() < 1e-12 * direct.abs().max(1.0));
        }
    }
}
