//! Term maps shared by series and operators.

use std::collections::BTreeMap;

use super::ctx::{Ctx, F_TDEG, F_WEIGHT};
use super::multi::MultiIndex;
use super::prec::{Prec, INF, NEG_INF};
use super::timepoly::{Mono, TimePoly};

pub(crate) type Terms = BTreeMap<MultiIndex, TimePoly>;

/// Series terms are `t^κ x^f`; operator terms `t^κ ∂^e` are graded like
/// `t^κ x^{-e}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Kind {
    Series,
    Operator,
}

pub(crate) fn term_values(ctx: &Ctx, kind: Kind, m: &Mono, e: &MultiIndex) -> Vec<i64> {
    match kind {
        Kind::Series => ctx.values(m, e),
        Kind::Operator => ctx.values(m, &-e),
    }
}

/// Lower bounds observed on a finite support.
pub(crate) fn support_lb(ctx: &Ctx, kind: Kind, terms: &Terms) -> Vec<i64> {
    let mut lb = vec![INF; ctx.nfun()];
    for (e, p) in terms {
        for (m, _) in p.iter() {
            let v = term_values(ctx, kind, m, e);
            for (l, x) in lb.iter_mut().zip(v) {
                if x < *l {
                    *l = x;
                }
            }
        }
    }
    lb
}

fn in_window(e: &MultiIndex, w: &(MultiIndex, MultiIndex)) -> bool {
    w.0.subset_of(e) && e.subset_of(&w.1)
}

/// Pick the functional whose cap is lowered when the term with values `v`
/// and exponent `f` (series convention) is clipped to the window `[lo, hi]`.
fn clip_functional(
    ctx: &Ctx,
    kind: Kind,
    prec: &Prec,
    v: &[i64],
    f: &MultiIndex,
    win: &(MultiIndex, MultiIndex),
) -> usize {
    let usable = |j: usize| prec.lb[j] != NEG_INF && prec.lb[j] != INF && v[j] > prec.lb[j];
    // Above the window in coordinate i: the grade-i cap is the natural one.
    for i in (0..ctx.n).rev() {
        let j = super::ctx::F_GRADE0 + i;
        if f.get(i) > win.1.get(i) && usable(j) {
            return j;
        }
    }
    // Below the window: for series, the time part of the grade pushed it
    // there.
    if kind == Kind::Series {
        for i in (0..ctx.n).rev() {
            let j = ctx.f_y(i);
            if f.get(i) < win.0.get(i) && usable(j) {
                return j;
            }
        }
    }
    let mut best: Option<(i64, usize)> = None;
    for j in 0..prec.k() {
        if prec.lb[j] == NEG_INF || prec.lb[j] == INF {
            continue;
        }
        // Time derivatives in the Leibniz rule lower the time degrees, so
        // operators never cap them.
        if kind == Kind::Operator && ctx.series_only(j) {
            continue;
        }
        if j == F_TDEG && v[j] == 0 {
            continue;
        }
        let slack = v[j] - 1 - prec.lb[j];
        if best.is_none_or(|(s, _)| slack > s) {
            best = Some((slack, j));
        }
    }
    best.map(|(_, j)| j).unwrap_or(F_WEIGHT)
}

/// Drop terms outside the exact region, clip to the window (lowering caps so
/// that the region excludes every clipped term) and prune zeros.
pub(crate) fn normalize(
    ctx: &Ctx,
    kind: Kind,
    terms: Terms,
    prec: &mut Prec,
    window: Option<&(MultiIndex, MultiIndex)>,
) -> Terms {
    if let Some(w) = window {
        let (lo, hi) = match kind {
            Kind::Series => (w.0.clone(), w.1.clone()),
            Kind::Operator => (-&w.1, -&w.0),
        };
        let win = (lo, hi);
        let mut lowered: Vec<(usize, i64)> = Vec::new();
        for (e, p) in &terms {
            let f = match kind {
                Kind::Series => e.clone(),
                Kind::Operator => -e,
            };
            if in_window(&f, &win) {
                continue;
            }
            if kind == Kind::Series && ctx.trust_below && f.subset_of(&win.1) {
                continue;
            }
            for (m, _) in p.iter() {
                let v = term_values(ctx, kind, m, e);
                if !prec.contains(&v) {
                    continue;
                }
                let j = clip_functional(ctx, kind, prec, &v, &f, &win);
                lowered.push((j, v[j] - 1));
            }
        }
        for (j, c) in lowered {
            prec.lower_cap(j, c);
        }
    }
    let mut out = Terms::new();
    for (e, p) in terms {
        if let Some(w) = window {
            if !in_window(&e, w) {
                continue;
            }
        }
        let mut p = p;
        if !prec.is_exact() {
            p.retain(|m| prec.contains(&term_values(ctx, kind, m, &e)));
        }
        if !p.is_zero() {
            out.insert(e, p);
        }
    }
    out
}

/// Accumulator for products.
#[derive(Default)]
pub(crate) struct Acc {
    map: BTreeMap<MultiIndex, BTreeMap<Mono, super::timepoly::Q>>,
}

impl Acc {
    pub fn add(&mut self, e: MultiIndex, m: Mono, c: super::timepoly::Q) {
        use num_traits::Zero;
        if c.is_zero() {
            return;
        }
        let row = self.map.entry(e).or_default();
        match row.entry(m) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += c;
            }
        }
    }

    pub fn into_terms(self) -> Terms {
        let mut out = Terms::new();
        for (e, row) in self.map {
            let p = TimePoly::from_terms(row);
            if !p.is_zero() {
                out.insert(e, p);
            }
        }
        out
    }
}

/// Flattened term list with precomputed functional values, sorted by weight.
pub(crate) struct Flat<'a> {
    pub items: Vec<(&'a MultiIndex, Mono, &'a super::timepoly::Q, Vec<i64>)>,
}

impl<'a> Flat<'a> {
    pub fn new(ctx: &Ctx, kind: Kind, terms: &'a Terms) -> Self {
        let mut items = Vec::new();
        for (e, p) in terms {
            for (m, c) in p.iter() {
                items.push((e, *m, c, term_values(ctx, kind, m, e)));
            }
        }
        items.sort_by_key(|it| it.3[F_WEIGHT]);
        Flat { items }
    }
}
