use proptest::prelude::*;

use super::engine::Ctx;
use super::*;
use crate::boundary::PointRule;

fn w1() -> WeightSpec {
    WeightSpec::from_w(1.0).unwrap()
}

fn arc(a: f64, b: f64) -> Arc {
    Arc { a, b }
}

#[test]
fn classification_examples() {
    let b = 2f64.powi(-10);
    assert_eq!(classify_arc(&arc(0.95 * b, b), &w1()).unwrap(), ArcClass::Short);
    assert_eq!(classify_arc(&arc(0.6 * b, b), &w1()).unwrap(), ArcClass::Intermediate);
    for w in [w1(), WeightSpec::log_power(0.3).unwrap(), WeightSpec::constant_w()] {
        assert_eq!(classify_arc(&arc(0.4 * b, b), &w).unwrap(), ArcClass::Long);
    }
}

#[test]
fn class_boundaries_are_half_open() {
    let ctx = Ctx::new(&w1());
    // w(8) = 8, so r = 1/4 sits exactly on 2/w.
    assert_eq!(ctx.class(0.25, 8.0), ArcClass::Intermediate);
    assert_eq!(ctx.class(0.25 - 1e-12, 8.0), ArcClass::Short);
    assert_eq!(ctx.class(0.5, 8.0), ArcClass::Long);
    assert_eq!(ctx.class(0.5 - 1e-12, 8.0), ArcClass::Intermediate);
}

/// Midpoint rule in `L` for `∫ dt/(t w^k)` with `w = L`, an independent check
/// of the closed forms.
fn midpoint_oracle(lb: f64, la: f64, k: i32) -> f64 {
    let n = 200_000;
    let h = (la - lb) / n as f64;
    (0..n).map(|i| (lb + (i as f64 + 0.5) * h).powi(-k) * h).sum()
}

#[test]
fn contribution_examples() {
    let b = 2f64.powi(-10);
    let v = arc_contribution(&arc(0.6 * b, b), ArcClass::Intermediate, &w1()).unwrap();
    assert!((v - 0.02123).abs() < 5e-6, "{v}");
    let w = 10.0 * std::f64::consts::LN_2;
    assert!((v - (0.4 * w).ln() / (w * w)).abs() < 1e-15);

    let b = (-4.0f64).exp();
    let v = arc_contribution(&arc(b / 4.0, b), ArcClass::Long, &w1()).unwrap();
    assert!((v - 0.15098).abs() < 1e-5, "{v}");
    let want = midpoint_oracle(4.0, 4.0 + 4f64.ln(), 2) + 4f64.ln() / 16.0;
    assert!((v - want).abs() < 1e-9);

    let b = 2f64.powi(-10);
    let v = arc_contribution(&arc(0.95 * b, b), ArcClass::Short, &w1()).unwrap();
    assert!((v - 0.0074).abs() < 0.01 * 0.0074, "{v}");
    let lb = 10.0 * std::f64::consts::LN_2;
    let want = midpoint_oracle(lb, lb - 0.95f64.ln(), 1);
    assert!((v - want).abs() < 1e-12 * want.max(1.0));
}

#[test]
fn wrong_class_is_a_consistency_error() {
    let b = 2f64.powi(-10);
    let e = arc_contribution(&arc(0.6 * b, b), ArcClass::Short, &w1()).unwrap_err();
    assert!(matches!(e, Error::Consistency(_)));
}

#[test]
fn arcs_above_t_star_are_split() {
    let w = w1();
    let ts = w.pure_cut();
    assert!(classify_arc(&arc(0.5, 0.9), &w).is_err());
    assert_eq!(arc_contribution(&arc(0.5, 0.9), ArcClass::Long, &w).unwrap(), 0.0);
    let inner = arc(0.9 * ts, ts);
    let straddling = arc(0.9 * ts, 0.5);
    let c = classify_arc(&straddling, &w).unwrap();
    assert_eq!(c, classify_arc(&inner, &w).unwrap());
    let a = arc_contribution(&straddling, c, &w).unwrap();
    let b = arc_contribution(&inner, c, &w).unwrap();
    assert!((a - b).abs() < 1e-14);
}

#[test]
fn full_circle_is_log_of_l() {
    let r = criterion_partials(&w1(), &BoundarySet::full(), &[100.0]).unwrap();
    let row = r.rows[0];
    // Both half-circles contribute ∫_2^100 dL/L.
    assert!((row.total - 2.0 * 50f64.ln()).abs() < 1e-12, "{row:?}");
    assert!((0.5 * row.total - 3.912).abs() < 5e-4);
    assert_eq!(row.intermediate_sum, 0.0);
    assert_eq!(row.long_sum, 0.0);
    assert_eq!(row.alt_e, row.total);
    assert!((row.alt_global - 2.0 * (0.5 - 0.01)).abs() < 1e-12);
}

#[test]
fn condition_partials_closed_forms() {
    let w = WeightSpec::log_power(2.0).unwrap();
    let pts = condition_partials(&w, ConditionKind::Nikolski, &[10.0, 100.0]).unwrap();
    assert!((pts[1].1 - 50f64.ln()).abs() < 1e-12);
    let pts = condition_partials(&w, ConditionKind::Gs, &[100.0]).unwrap();
    assert!((pts[0].1 - (0.5 - 0.01)).abs() < 1e-12);
    // Same value from the weights module's mass function.
    let direct = midpoint_mass(&w, ConditionKind::Gs, 2.0, 100.0);
    assert!((pts[0].1 - direct).abs() < 1e-8);
}

fn midpoint_mass(w: &WeightSpec, kind: ConditionKind, l1: f64, l2: f64) -> f64 {
    let n = 200_000;
    let h = (l2 - l1) / n as f64;
    (0..n).map(|i| w.ln_condition_mass(kind, l1 + (i as f64 + 0.5) * h).exp() * h).sum()
}

/// Closed forms used by the brute-force oracles, written independently of
/// the engine.
struct Plain {
    nu: f64,
    c0: f64,
}

impl Plain {
    fn w(&self, l: f64) -> f64 {
        l.powf(self.nu) / self.c0.sqrt()
    }
    fn int(&self, beta: f64, l1: f64, l2: f64) -> f64 {
        if (beta - 1.0).abs() < 1e-15 {
            (l2 / l1).ln()
        } else {
            (l2.powf(1.0 - beta) - l1.powf(1.0 - beta)) / (1.0 - beta)
        }
    }
    fn short(&self, l1: f64, l2: f64) -> f64 {
        self.c0.sqrt() * self.int(self.nu, l1, l2)
    }
    fn long(&self, l1: f64, l2: f64) -> f64 {
        self.c0 * self.int(2.0 * self.nu, l1, l2)
    }
}

/// `(class-based total, log(1+rw) sum)` for the positive side from an explicit arc
/// list, over `L ∈ [ls, lmax)`.  Whatever is not inside a listed arc is
/// scored with the short/E density.
fn brute_positive(p: &Plain, ls: f64, lmax: f64, arcs: &[Arc]) -> (f64, f64) {
    let mut total = p.short(ls, lmax);
    let mut q3 = 0.0;
    for a in arcs {
        let la0 = if a.a > 0.0 { -a.a.ln() } else { f64::INFINITY };
        let lb0 = -a.b.ln();
        if la0 <= ls || lb0 >= lmax {
            continue;
        }
        let (lb, r) = if lb0 < ls { (ls, 1.0 - (ls - la0).exp()) } else { (lb0, (a.b - a.a) / a.b) };
        let la = la0.min(lmax);
        total -= p.short(lb, la);
        let w = p.w(lb);
        total += if r >= 0.5 {
            p.long(lb, la) + w.ln().max(0.0) / (w * w)
        } else if r * w < 2.0 {
            p.short(lb, la)
        } else {
            (r * w).ln() / (w * w)
        };
        q3 += (r * w).ln_1p() / (w * w);
    }
    (total, q3)
}

fn negative_long_arc(p: &Plain, ls: f64, lmax: f64) -> (f64, f64) {
    let w = p.w(ls);
    (p.long(ls, lmax) + w.ln().max(0.0) / (w * w), w.ln_1p() / (w * w))
}

#[test]
fn cantor_engine_matches_enumerated_gaps() {
    for (alpha, c0) in [(1.0, 1.0), (2.0, 0.01), (1.4, 0.1)] {
        let w = WeightSpec::log_power(alpha).unwrap().with_scale(c0).unwrap();
        let p = Plain { nu: 0.5 * alpha, c0 };
        let ls = w.l_cut();
        let lmax = 12.0;
        let set = BoundarySet::cantor(30).unwrap();
        let report = criterion_partials(&w, &set, &[4.0, 7.0, lmax]).unwrap();
        let row = report.rows[2];
        let gaps = BoundarySet::cantor(17).unwrap().complementary_arcs((-lmax).exp()).unwrap();
        let (tp, qp) = brute_positive(&p, ls, lmax, &gaps);
        let (tn, qn) = negative_long_arc(&p, ls, lmax);
        assert!((row.total - (tp + tn)).abs() < 1e-9 * row.total, "alpha {alpha}: {} vs {}", row.total, tp + tn);
        // The engine sums log(1+x) as x once x <= 0.1, at most 5 % high.
        assert!((row.alt_arcs - (qp + qn)).abs() < 0.05 * (qp + qn), "{} vs {}", row.alt_arcs, qp + qn);
        assert!(row.alt_arcs >= qp + qn - 1e-12);
    }
}

#[test]
fn cantor_windows_match_block_by_block_sums() {
    let cps = [2500.0, 3500.0, 6000.0];
    for alpha in [1.0, 1.4, 2.0] {
        let w = WeightSpec::log_power(alpha).unwrap();
        let set = BoundarySet::cantor(30).unwrap();
        let fast = criterion_partials(&w, &set, &cps).unwrap();
        let slow = criterion_partials_exact(&w, &set, &cps).unwrap();
        for (a, b) in fast.rows.iter().zip(&slow.rows) {
            for (x, y) in [
                (a.e_and_short_part, b.e_and_short_part),
                (a.intermediate_sum, b.intermediate_sum),
                (a.long_sum, b.long_sum),
                (a.alt_arcs, b.alt_arcs),
            ] {
                assert!((x - y).abs() <= 1e-7 * y.abs().max(1e-12), "alpha {alpha}: {x} vs {y}");
            }
        }
    }
}

#[test]
fn cantor_partial_sums_scale_like_l_to_q() {
    let w = WeightSpec::log_power(1.0).unwrap();
    let set = BoundarySet::cantor(30).unwrap();
    let r = criterion_partials(&w, &set, &[1e6, 2e6, 1e7, 2e7]).unwrap();
    let q = 1.0 - (1.0 - 0.5 * KAPPA);
    let total = |i: usize| r.rows[i].total;
    let ratio = total(3) / total(2);
    assert!((ratio - 2f64.powf(q)).abs() < 0.1, "{ratio}");
    // Increments are much closer to the pure power.
    let inc = (total(3) - total(2)) / (total(1) - total(0));
    assert!((inc.log(10.0) - q).abs() < 0.01, "{}", inc.log(10.0));
    assert!(r.rows[3].intermediate_sum > r.rows[3].long_sum);
}

#[test]
fn cantor_depth_shortfall_is_a_capacity_error() {
    let w = WeightSpec::log_power(2.0).unwrap();
    let e = criterion_partials(&w, &BoundarySet::cantor(3).unwrap(), &[1e4]).unwrap_err();
    assert!(matches!(e, Error::Capacity(_)), "{e}");
}

fn brute_points(w: &WeightSpec, rule: PointRule, n_end: f64) -> (f64, f64, f64) {
    let p = Plain { nu: w.nu(), c0: w.scale };
    let lmax = rule.ell(n_end);
    let set = BoundarySet::points(rule).unwrap();
    let arcs = set.complementary_arcs(rule.point(n_end) * (1.0 + 1e-9)).unwrap();
    let (tp, qp) = brute_positive(&p, w.l_cut(), lmax, &arcs);
    let (tn, qn) = negative_long_arc(&p, w.l_cut(), lmax);
    (lmax, tp + tn, qp + qn)
}

#[test]
fn point_sequences_match_direct_loops() {
    let cases = [
        (WeightSpec::log_power(1.0).unwrap(), PointRule::Beta(0.25), 3000.0),
        (WeightSpec::log_power(1.5).unwrap(), PointRule::Beta(0.5), 400_000.0),
        (WeightSpec::log_power(2.5).unwrap().with_scale(0.1).unwrap(), PointRule::Beta(0.5), 90_000.0),
        (WeightSpec::from_w(0.4).unwrap().with_scale(10.0).unwrap(), PointRule::Geometric, 1000.0),
        (WeightSpec::from_w(0.6).unwrap(), PointRule::DoublyExp, 9.0),
    ];
    for (w, rule, n_end) in cases {
        let (lmax, total, q3) = brute_points(&w, rule, n_end);
        let set = BoundarySet::points(rule).unwrap();
        let r = criterion_partials(&w, &set, &[0.5 * (w.l_cut() + lmax), lmax]).unwrap();
        let row = r.rows[1];
        assert!((row.total - total).abs() < 1e-8 * total, "{rule:?}: {} vs {total}", row.total);
        assert!((row.alt_arcs - q3).abs() < 1e-8 * q3, "{rule:?}: {} vs {q3}", row.alt_arcs);
    }
}

#[test]
fn report_rows_are_monotone_and_verdicts_present() {
    let w = WeightSpec::log_power(1.5).unwrap();
    let set = BoundarySet::points(PointRule::Beta(0.25)).unwrap();
    let r = criterion_partials(&w, &set, &default_checkpoints(29)).unwrap();
    for pair in r.rows.windows(2) {
        assert!(pair[1].total >= pair[0].total);
        assert!(pair[1].alt_total >= pair[0].alt_total);
    }
    assert!(r.verdict.is_some() && r.forms_agree.is_some());
    let short = criterion_partials(&w, &set, &default_checkpoints(4)).unwrap();
    assert!(short.verdict.is_none());
}

#[test]
fn bad_checkpoints_are_usage_errors() {
    let w = w1();
    let full = BoundarySet::full();
    assert!(criterion_partials(&w, &full, &[]).unwrap_err().is_usage());
    assert!(criterion_partials(&w, &full, &[1.0, 10.0]).unwrap_err().is_usage());
    assert!(criterion_partials(&w, &full, &[10.0, 5.0]).unwrap_err().is_usage());
}

#[test]
fn arc_rows_cover_the_listed_arcs() {
    let w = WeightSpec::log_power(1.0).unwrap();
    let rows = arc_rows(&w, &BoundarySet::cantor(8).unwrap(), 1e-4).unwrap();
    assert!(!rows.is_empty());
    for r in &rows {
        assert!(r.contribution > 0.0);
        assert_eq!(classify_arc(&Arc { a: r.a, b: r.b }, &w).unwrap(), r.class);
    }
}

proptest! {
    #[test]
    fn pint_is_additive(beta in 0.0f64..3.0, l1 in 1.0f64..1e6, f1 in 0.0f64..2.0, f2 in 0.0f64..2.0) {
        let l2 = l1 * (1.0 + f1);
        let l3 = l2 * (1.0 + f2);
        let a = pint(beta, l1, l2) + pint(beta, l2, l3);
        let b = pint(beta, l1, l3);
        prop_assert!((a - b).abs() <= 1e-11 * b.abs().max(1e-300));
    }

    #[test]
    fn classes_partition_and_intermediate_is_bounded_below(
        lb in 2.5f64..200.0, r in 1e-6f64..0.999, alpha in 0.2f64..3.0
    ) {
        let w = WeightSpec::log_power(alpha).unwrap();
        let b = (-lb).exp();
        let a = b * (1.0 - r);
        let c = classify_arc(&arc(a, b), &w).unwrap();
        let rr = (b - a) / b;
        let wb = lb.powf(0.5 * alpha);
        let want = if rr >= 0.5 { ArcClass::Long } else if rr * wb < 2.0 { ArcClass::Short } else { ArcClass::Intermediate };
        prop_assert_eq!(c, want);
        let v = arc_contribution(&arc(a, b), c, &w).unwrap();
        prop_assert!(v >= 0.0);
        if c == ArcClass::Intermediate {
            prop_assert!(v >= 2f64.ln() / (wb * wb) * (1.0 - 1e-12));
        }
    }
}
