//! Numerical reading of "diverges at 0" from partial sums at geometric
//! checkpoints.
//!
//! The sums are read against `x = L = ln(1/ε)`.  Over the last four decades
//! of `x` the windowed increments `d = ΔS/Δln x` are fitted by
//! `ln d = c + q ln x`.  A flat tail is Bounded; a fit that barely beats the
//! constant model is Log (`S ~ b ln x`); otherwise Power (`S ~ x^q`).

use serde::{Deserialize, Serialize};

use crate::error::{usage, Result};

pub const MIN_POINTS: usize = 6;
/// Required ratio between the last and first abscissa.
pub const MIN_SPAN: f64 = 1e4;
/// Bounded when the last increment is below this share of the total.
pub const CAUCHY_TAIL: f64 = 1e-3;
/// Model-selection margin on the relative RSS improvement.
pub const DELTA: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Divergent,
    Convergent,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Model {
    Bounded,
    Log,
    Power { exponent: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DivergenceVerdict {
    pub verdict: Verdict,
    pub model: Model,
    /// RMS residual of the selected model in `ln d`.
    pub fit_residual: f64,
    /// Standard error of the fitted exponent (0 when no fit was made).
    pub standard_error: f64,
    /// Relative RSS improvement of the power fit over the constant one.
    pub improvement: f64,
}

impl DivergenceVerdict {
    pub fn exponent(&self) -> Option<f64> {
        match self.model {
            Model::Power { exponent } => Some(exponent),
            _ => None,
        }
    }
}

/// Classifies partial sums `points = [(x_k, S_k)]` with `x` increasing.
pub fn divergence_verdict(points: &[(f64, f64)]) -> Result<DivergenceVerdict> {
    if points.len() < MIN_POINTS {
        return usage(format!("need at least {MIN_POINTS} checkpoints, got {}", points.len()));
    }
    for w in points.windows(2) {
        let ((x0, s0), (x1, s1)) = (w[0], w[1]);
        if !(x0 > 0.0 && x1 > x0 && x1.is_finite()) {
            return usage("checkpoints must be positive and increasing");
        }
        if !(s0.is_finite() && s1.is_finite()) || s1 < s0 - 1e-12 * s0.abs() {
            return usage("partial sums must be finite and nondecreasing");
        }
    }
    let (x_first, _) = points[0];
    let (x_last, total) = points[points.len() - 1];
    if x_last / x_first < MIN_SPAN * (1.0 - 1e-12) {
        return usage(format!("checkpoints span {:.3e}, need {MIN_SPAN:e}", x_last / x_first));
    }
    let last_inc = total - points[points.len() - 2].1;
    let bounded = DivergenceVerdict {
        verdict: Verdict::Convergent,
        model: Model::Bounded,
        fit_residual: 0.0,
        standard_error: 0.0,
        improvement: 0.0,
    };
    if total <= 0.0 || last_inc <= CAUCHY_TAIL * total {
        return Ok(bounded);
    }

    let x_tail = x_last / MIN_SPAN * (1.0 - 1e-12);
    let tail: Vec<_> = points.iter().copied().filter(|&(x, _)| x >= x_tail).collect();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for w in tail.windows(2) {
        let ((x0, s0), (x1, s1)) = (w[0], w[1]);
        let d = (s1 - s0) / (x1 / x0).ln();
        if d > 0.0 {
            xs.push(0.5 * (x0.ln() + x1.ln()));
            ys.push(d.ln());
        }
    }
    let n = xs.len();
    if n < 3 {
        return Ok(DivergenceVerdict { verdict: Verdict::Inconclusive, ..bounded });
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let rss_const: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let q = sxy / sxx;
    let rss_pow: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - my - q * (x - mx)).powi(2)).sum();
    // Increments equal to rounding are a constant, not a trend.
    let improvement = if rss_const > 1e-18 * nf { (rss_const - rss_pow) / rss_const } else { 0.0 };
    let se = (rss_pow / (nf - 2.0) / sxx).sqrt();
    if improvement < DELTA {
        return Ok(DivergenceVerdict {
            verdict: Verdict::Divergent,
            model: Model::Log,
            fit_residual: (rss_const / nf).sqrt(),
            standard_error: se,
            improvement,
        });
    }
    let verdict = if q.abs() < 2.0 * se {
        Verdict::Inconclusive
    } else if q > 0.0 {
        Verdict::Divergent
    } else {
        Verdict::Convergent
    };
    Ok(DivergenceVerdict {
        verdict,
        model: Model::Power { exponent: q },
        fit_residual: (rss_pow / nf).sqrt(),
        standard_error: se,
        improvement,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Vec<f64> {
        (0..29).map(|k| 10.0 * 10f64.powf(k as f64 / 4.0)).collect()
    }

    #[test]
    fn logarithm_is_divergent_log() {
        let pts: Vec<_> = grid().into_iter().map(|x| (x, x.ln())).collect();
        let v = divergence_verdict(&pts).unwrap();
        assert_eq!(v.verdict, Verdict::Divergent);
        assert_eq!(v.model, Model::Log);
    }

    #[test]
    fn geometric_tail_is_bounded() {
        let pts: Vec<_> = grid().into_iter().enumerate().map(|(k, x)| (x, 5.0 - 0.5f64.powi(k as i32))).collect();
        let v = divergence_verdict(&pts).unwrap();
        assert_eq!(v.verdict, Verdict::Convergent);
        assert_eq!(v.model, Model::Bounded);
    }

    #[test]
    fn power_laws_give_their_exponent() {
        for q in [0.3, -0.2] {
            let pts: Vec<_> = grid().into_iter().map(|x| (x, 1.0 + x.powf(q) / q)).collect();
            let v = divergence_verdict(&pts).unwrap();
            assert!((v.exponent().unwrap() - q).abs() < 1e-3, "{v:?}");
            let want = if q > 0.0 { Verdict::Divergent } else { Verdict::Convergent };
            assert_eq!(v.verdict, want);
        }
    }

    #[test]
    fn bad_input_is_a_usage_error() {
        let g = grid();
        let short: Vec<_> = g[..5].iter().map(|&x| (x, x)).collect();
        assert!(divergence_verdict(&short).unwrap_err().is_usage());
        let narrow: Vec<_> = g[..8].iter().map(|&x| (x, x)).collect();
        assert!(divergence_verdict(&narrow).unwrap_err().is_usage());
        let mut down: Vec<_> = g.iter().map(|&x| (x, x.ln())).collect();
        down[10].1 = 0.0;
        assert!(divergence_verdict(&down).unwrap_err().is_usage());
    }
}
