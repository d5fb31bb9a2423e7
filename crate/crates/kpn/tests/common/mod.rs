#![allow(dead_code)]

pub mod bridge;
pub mod classical;
pub mod naive;

use kpn::algebra::*;

pub fn mi(v: &[i64]) -> MultiIndex {
    MultiIndex::new(v.to_vec())
}

/// Context with x-window `[lo, hi]`, times `0 ⊂ a ⊆ -lo` and ∂-box
/// `[-top, top]` where `top = -lo`.
pub fn window_ctx(lo: &[i64], hi: &[i64], t_degree: u32) -> CtxRef {
    let n = lo.len();
    let top = -&mi(lo);
    let mut c = TruncationConfig::with_boxes(n, 0, 0, t_degree, &top);
    c.d_box_lo = -&top;
    c.d_box_hi = top;
    c.x_lo = mi(lo);
    c.x_hi = mi(hi);
    Ctx::from_config(&c).unwrap()
}

pub fn series(ctx: &CtxRef, terms: &[(&[i64], Q)]) -> XSeries {
    XSeries::from_rationals(ctx, terms.iter().map(|(f, c)| (mi(f), c.clone())).collect())
}
