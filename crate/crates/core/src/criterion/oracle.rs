//! Closed-form thresholds and growth exponents of the theorem families.

use serde::{Deserialize, Serialize};

use crate::boundary::{BoundarySet, PointRule};
use crate::error::{usage, Result};
use crate::weights::WeightSpec;

use super::verdict::Verdict;

/// `κ = log 2 / log 3`, the dimension of the Cantor set.
pub const KAPPA: f64 = std::f64::consts::LN_2 / 1.098_612_288_668_109_8;

/// Half-width of the band around a threshold where verdicts are not compared.
pub const INCONCLUSIVE_BAND: f64 = 0.05;

/// `1/(1 - κ/2)`.
pub fn teo3_threshold() -> f64 {
    1.0 / (1.0 - 0.5 * KAPPA)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "theorem", rename_all = "snake_case")]
pub enum Theorem {
    /// `Λ_α` against the sequence `exp(-n^{1-β})`.
    Teo2 { alpha: f64, beta: f64 },
    /// `Λ_α` against the Cantor set.
    Teo3 { alpha: f64 },
    /// `Λ_α` against the whole circle.
    Nikolski { alpha: f64 },
    /// `Λ_α` against `E = {1}`.
    Gs { alpha: f64 },
    /// `w = log^p(1/t)` against `2^{-n}`.
    Geometric { p: f64 },
    /// `w = log^p(1/t)` against `2^{-2^n}`.
    DoublyExp { p: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub verdict: Verdict,
    /// The family parameter in `α` units (`2p` for the `w`-families).
    pub alpha: f64,
    pub threshold: f64,
    pub in_band: bool,
    /// Predicted `q` in `S(L) ~ L^q` (0 means logarithmic growth).
    pub exponent: f64,
}

impl Theorem {
    /// The weight and set the theorem speaks about; `depth` is used for the
    /// Cantor set.
    pub fn configuration(&self, depth: u32) -> Result<(WeightSpec, BoundarySet)> {
        Ok(match *self {
            Theorem::Teo2 { alpha, beta } => {
                (WeightSpec::log_power(alpha)?, BoundarySet::points(PointRule::Beta(beta))?)
            }
            Theorem::Teo3 { alpha } => (WeightSpec::log_power(alpha)?, BoundarySet::cantor(depth)?),
            Theorem::Nikolski { alpha } => (WeightSpec::log_power(alpha)?, BoundarySet::full()),
            Theorem::Gs { alpha } => (WeightSpec::log_power(alpha)?, BoundarySet::point()),
            Theorem::Geometric { p } => (WeightSpec::from_w(p)?, BoundarySet::points(PointRule::Geometric)?),
            Theorem::DoublyExp { p } => (WeightSpec::from_w(p)?, BoundarySet::points(PointRule::DoublyExp)?),
        })
    }
}

pub fn threshold_oracle(theorem: Theorem) -> Result<Prediction> {
    let positive = |name: &str, v: f64| {
        if v > 0.0 && v.is_finite() {
            Ok(())
        } else {
            usage(format!("{name} must be positive, got {v}"))
        }
    };
    let (alpha, threshold, exponent) = match theorem {
        Theorem::Teo2 { alpha, beta } => {
            positive("alpha", alpha)?;
            if !(0.0..=0.5).contains(&beta) {
                return usage(format!("beta must lie in [0, 1/2], got {beta}"));
            }
            let s = alpha * (1.0 - beta);
            let arcs = if beta == 0.0 {
                1.0 - alpha
            } else if 0.5 * s > beta {
                (1.0 - s) / (1.0 - beta)
            } else {
                1.0 - 0.5 * alpha
            };
            (alpha, 1.0 / (1.0 - beta), arcs.max(1.0 - alpha))
        }
        Theorem::Teo3 { alpha } => {
            positive("alpha", alpha)?;
            (alpha, teo3_threshold(), 1.0 - alpha * (1.0 - 0.5 * KAPPA))
        }
        Theorem::Nikolski { alpha } => {
            positive("alpha", alpha)?;
            (alpha, 2.0, 1.0 - 0.5 * alpha)
        }
        Theorem::Gs { alpha } => {
            positive("alpha", alpha)?;
            (alpha, 1.0, 1.0 - alpha)
        }
        Theorem::Geometric { p } | Theorem::DoublyExp { p } => {
            positive("p", p)?;
            (2.0 * p, 1.0, 1.0 - 2.0 * p)
        }
    };
    Ok(Prediction {
        verdict: if alpha <= threshold { Verdict::Divergent } else { Verdict::Convergent },
        alpha,
        threshold,
        in_band: (alpha - threshold).abs() < INCONCLUSIVE_BAND,
        exponent,
    })
}
