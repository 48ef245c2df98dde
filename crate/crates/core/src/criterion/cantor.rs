//! Criterion sums for the middle-thirds Cantor set, block by block.
//!
//! Block `m` is `t ∈ [3^{-m-1}, 3^{-m}]`, i.e. `L ∈ [m ln 3, (m+1) ln 3]`.
//! Scaled to `[1/3, 1]`, it holds the long gap `(1/3, 2/3)` and the copy
//! `2/3 + C/3`, whose nodes `(k, g)` cover `[k/3^g, (k+1)/3^g]` with middle
//! gap ratio `1/(3k+2)`.  The root is `(2, 1)`; the children of `(k, g)` are
//! `(3k, g+1)` and `(3k+2, g+1)`.  Relative depth `g + 1` is the gap
//! generation inside the block.
//!
//! Every term is a smooth function of `m` once the node's status is fixed,
//! so whole runs of blocks are summed with [`sum_smooth`].  A node whose
//! widest possible `r·w` stays below 2 contributes the integral of
//! `dt/(t w)` over its span (all gaps below it are short).  For the
//! `log(1 + r w)` sum the same cut uses `r·w ≤ η` with `log(1+x) ≈ x`.

use crate::error::{Error, Result};
use crate::quad::sum_smooth;

use super::engine::{Band, Ctx, Terms};

const LN2: f64 = std::f64::consts::LN_2;
const LN3: f64 = 1.098_612_288_668_109_8;
const ETA: f64 = 0.1;

/// Blocks below this index are always summed one by one.
const EXACT_BELOW: i64 = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Mode {
    /// Node still owes both the class-based and `log(1+rw)` terms.
    Both,
    /// An ancestor already paid the class-based terms.
    Q3,
}

pub(crate) struct CantorEngine<'a> {
    ctx: &'a Ctx,
    depth: u32,
    exact_all: bool,
}

struct Node {
    k: u64,
    g: u32,
    r: f64,
    /// `L` of the node's top end, minus `m ln 3`.
    top_off: f64,
    span_w: f64,
    /// `L` of the gap's right end `b`, minus `m ln 3`.
    gap_off: f64,
    gap_w: f64,
}

impl Node {
    fn new(k: u64, g: u32) -> Self {
        let kf = k as f64;
        let gl = g as f64 * LN3;
        Node {
            k,
            g,
            r: 1.0 / (3.0 * kf + 2.0),
            top_off: gl - (kf + 1.0).ln(),
            span_w: (1.0 / kf).ln_1p(),
            gap_off: gl + LN3 - (3.0 * kf + 2.0).ln(),
            gap_w: (1.0 / (3.0 * kf + 1.0)).ln_1p(),
        }
    }

    fn bottom_off(&self) -> f64 {
        self.g as f64 * LN3 - (self.k as f64).ln()
    }
}

impl<'a> CantorEngine<'a> {
    pub fn new(ctx: &'a Ctx, depth: u32) -> Self {
        CantorEngine { ctx, depth, exact_all: false }
    }

    /// Sums every block one by one; the reference for the windowed sums.
    pub fn exact(mut self) -> Self {
        self.exact_all = true;
        self
    }

    fn sum(&self, m1: i64, m2: i64, f: impl Fn(f64) -> f64) -> f64 {
        if m1 > m2 {
            return 0.0;
        }
        let limit = if self.exact_all || m1 < EXACT_BELOW { f64::INFINITY } else { 2.0 };
        sum_smooth(f, m1 as f64, m2 as f64, limit)
    }

    pub fn band(&self, band: Band) -> Result<Terms> {
        let mut t = Terms::default();
        let lo = band.lo.max(self.ctx.l_star);
        let mut first = (lo / LN3).ceil() as i64;
        while first as f64 * LN3 < lo {
            first += 1;
        }
        let mut last = (band.hi / LN3).floor() as i64 - 1;
        while (last + 1) as f64 * LN3 > band.hi {
            last -= 1;
        }
        if first <= last {
            self.long_window(first, last, &mut t);
            self.visit(Node::new(2, 1), first, last, Mode::Both, &mut t)?;
            if first as f64 * LN3 > lo {
                self.clipped(first - 1, band, &mut t)?;
            }
            if ((last + 1) as f64) * LN3 < band.hi {
                self.clipped(last + 1, band, &mut t)?;
            }
        } else {
            let m1 = (lo / LN3).floor() as i64;
            let m2 = (band.hi / LN3).ceil() as i64 - 1;
            for m in m1..=m2 {
                self.clipped(m, band, &mut t)?;
            }
        }
        Ok(t)
    }

    fn long_window(&self, m1: i64, m2: i64, t: &mut Terms) {
        let ctx = self.ctx;
        let lb = |m: f64| (m + 1.0) * LN3 - LN2;
        t.long += self.sum(m1, m2, |m| ctx.long_int(lb(m), LN2));
        let thr = ctx.level_for(1.0, 1.0);
        let mk = ctx.first_level(LN3, LN3 - LN2, thr, |l| ctx.ln_w(l) >= 0.0);
        t.long += self.sum(m1.max(mk), m2, |m| ctx.log_plus(lb(m)));
        t.q3 += self.sum(m1, m2, |m| ctx.q3_term(0.5, lb(m)));
    }

    fn capacity(&self, node: &Node) -> Error {
        Error::Capacity(format!(
            "Cantor node k={} at relative generation {} needs depth >= {}, have {}",
            node.k,
            node.g,
            node.g + 1,
            self.depth
        ))
    }

    /// Adds the node's subtree terms for every whole block `m ∈ [m1, m2]`.
    fn visit(&self, node: Node, m1: i64, m2: i64, mode: Mode, t: &mut Terms) -> Result<()> {
        if m1 > m2 {
            return Ok(());
        }
        let ctx = self.ctx;
        let r = node.r;
        let bot = node.bottom_off();
        let mq = ctx.first_level(LN3, bot, ctx.level_for(ETA, r), |l| r * ctx.w(l) > ETA);
        let span = |m: f64| ctx.short_int(m * LN3 + node.top_off, node.span_w);

        let a2 = m2.min(mq - 1);
        if m1 <= a2 {
            let s = self.sum(m1, a2, span);
            t.q3 += s;
            if mode == Mode::Both {
                t.es += s;
            }
        }
        let b1 = m1.max(mq);
        if b1 > m2 {
            return Ok(());
        }
        if node.g + 1 > self.depth {
            return Err(self.capacity(&node));
        }
        let lb = |m: f64| m * LN3 + node.gap_off;
        t.q3 += self.sum(b1, m2, |m| ctx.q3_term(r, lb(m)));
        let (q3_hi, both_lo) = if mode == Mode::Both {
            let mc = ctx.first_level(LN3, bot, ctx.level_for(2.0, r), |l| r * ctx.w(l) >= 2.0);
            let c2 = m2.min(mc - 1);
            t.es += self.sum(b1, c2, span);
            let c1 = b1.max(mc);
            if c1 <= m2 {
                let ms = ctx.first_level(LN3, node.gap_off, ctx.level_for(2.0, r), |l| r * ctx.w(l) >= 2.0);
                t.es += self.sum(c1, m2.min(ms - 1), |m| ctx.short_int(lb(m), node.gap_w));
                t.inter += self.sum(c1.max(ms), m2, |m| ctx.inter_term(r, lb(m)));
            }
            (c2, c1)
        } else {
            (m2, m2 + 1)
        };
        for child in [3 * node.k, 3 * node.k + 2] {
            self.visit(Node::new(child, node.g + 1), b1, q3_hi, Mode::Q3, t)?;
            self.visit(Node::new(child, node.g + 1), both_lo, m2, Mode::Both, t)?;
        }
        Ok(())
    }

    /// One block scored exactly against the band, with the part above `t*`
    /// dropped.
    fn clipped(&self, m: i64, band: Band, t: &mut Terms) -> Result<()> {
        let ml = m as f64 * LN3;
        self.ctx.gap(ml + LN3 - LN2, LN2, 0.5, band, t, true, true);
        self.clipped_node(Node::new(2, 1), ml, band, Mode::Both, t)
    }

    fn clipped_node(&self, node: Node, ml: f64, band: Band, mode: Mode, t: &mut Terms) -> Result<()> {
        let ctx = self.ctx;
        let l_top = ml + node.top_off;
        let l_end = l_top + node.span_w;
        if l_top >= band.hi || l_end <= band.lo || l_end <= ctx.l_star {
            return Ok(());
        }
        let straddles = l_top < ctx.l_star;
        let rw = node.r * ctx.w(l_end);
        let span = |t: &mut Terms, mode: Mode| {
            if let Some((s, w)) = band.clip(l_top, node.span_w) {
                let v = ctx.short_int(s, w);
                t.q3 += v;
                if mode == Mode::Both {
                    t.es += v;
                }
            }
        };
        if !straddles && rw <= ETA {
            span(t, mode);
            return Ok(());
        }
        if node.g + 1 > self.depth {
            if straddles {
                span(t, mode);
                return Ok(());
            }
            return Err(self.capacity(&node));
        }
        let mut child_mode = mode;
        if mode == Mode::Both && !straddles && rw < 2.0 {
            if let Some((s, w)) = band.clip(l_top, node.span_w) {
                t.es += ctx.short_int(s, w);
            }
            child_mode = Mode::Q3;
        }
        ctx.gap(ml + node.gap_off, node.gap_w, node.r, band, t, child_mode == Mode::Both, true);
        for child in [3 * node.k, 3 * node.k + 2] {
            self.clipped_node(Node::new(child, node.g + 1), ml, band, child_mode, t)?;
        }
        Ok(())
    }
}
