//! Points of the Grassmannian of `V = Q((x_1))...((x_N))` inside a finite
//! x-window, the big cell, Baker-Akhiezer functions and the correspondence
//! with wave functions.
//!
//! A point is stored in reduced echelon form: one element per leading
//! exponent (revlex valuation), leading coefficient 1, and no element has a
//! term at another element's leading exponent.

use std::collections::BTreeMap;

use log::debug;
use num_traits::{One, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::ctx::CtxRef;
use crate::algebra::multi::MultiIndex;
use crate::algebra::timepoly::{Mono, TimePoly, Q};
use crate::algebra::xseries::{exponential_windowed, pairing, wave_exponential, XSeries};
use crate::error::{Error, Result};
use crate::hierarchy::{DressingOp, WaveFunction};
use crate::pdo::Pdo;

#[derive(Clone, Debug)]
pub struct GrPoint {
    ctx: CtxRef,
    basis: BTreeMap<MultiIndex, XSeries>,
    /// Outside the window the point is `span{x^f}` for the missing `f ⊆ 0`
    /// and every element's tail lies inside the window.
    trivial_outside: bool,
}

/// Leading exponents that keep a point out of the big cell.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct F0Report {
    pub missing: Vec<MultiIndex>,
    pub extra: Vec<MultiIndex>,
}

impl F0Report {
    pub fn holds(&self) -> bool {
        self.missing.is_empty() && self.extra.is_empty()
    }
}

impl std::fmt::Display for F0Report {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let show = |v: &[MultiIndex]| {
            v.iter()
                .map(|m| m.to_string())
                .collect::<Vec<_>>()
                .join(" ")
        };
        write!(
            f,
            "missing [{}], extra [{}]",
            show(&self.missing),
            show(&self.extra)
        )
    }
}

fn window(ctx: &CtxRef) -> Result<(MultiIndex, MultiIndex)> {
    ctx.x_window
        .clone()
        .ok_or_else(|| Error::Usage("points live in an x-window; the context has none".into()))
}

/// Exponents `f ⊆ 0` inside the window, in revlex order.
pub fn cell_exponents(ctx: &CtxRef) -> Result<Vec<MultiIndex>> {
    let (lo, _) = window(ctx)?;
    Ok(MultiIndex::box_iter(&lo, &MultiIndex::zero(ctx.n)))
}

impl GrPoint {
    pub fn empty(ctx: &CtxRef) -> Self {
        GrPoint {
            ctx: ctx.clone(),
            basis: BTreeMap::new(),
            trivial_outside: false,
        }
    }

    /// `span{x^f : f ⊆ 0}`.
    pub fn trivial(ctx: &CtxRef) -> Result<Self> {
        let mut p = Self::empty(ctx);
        for f in cell_exponents(ctx)? {
            p.basis
                .insert(f.clone(), XSeries::monomial(ctx, f, TimePoly::one()));
        }
        p.trivial_outside = true;
        Ok(p)
    }

    /// Reduce a linearly independent family. A dependent element means the
    /// window cannot tell the family apart.
    pub fn from_basis(ctx: &CtxRef, family: Vec<XSeries>) -> Result<Self> {
        let mut p = Self::empty(ctx);
        for (i, g) in family.into_iter().enumerate() {
            if p.insert(g)?.is_none() {
                return Err(Error::WindowTooSmall(format!(
                    "element {i} reduces to zero: duplicate leading exponents within the window"
                )));
            }
        }
        Ok(p)
    }

    /// Reduce a spanning family, dropping dependent elements. Returns the
    /// point and the number of elements dropped.
    pub fn span(ctx: &CtxRef, family: Vec<XSeries>) -> Result<(Self, usize)> {
        let mut p = Self::empty(ctx);
        let mut dropped = 0;
        for g in family {
            if p.insert(g)?.is_none() {
                dropped += 1;
            }
        }
        Ok((p, dropped))
    }

    pub fn ctx(&self) -> &CtxRef {
        &self.ctx
    }

    /// Declare that the point is trivial outside the window. Exact elements
    /// then give exact wave functions inside it.
    pub fn assume_trivial_outside(mut self) -> Self {
        self.trivial_outside = true;
        self
    }

    pub fn trivial_outside(&self) -> bool {
        self.trivial_outside
    }

    pub fn len(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    pub fn basis(&self) -> impl Iterator<Item = (&MultiIndex, &XSeries)> {
        self.basis.iter()
    }

    pub fn element(&self, f: &MultiIndex) -> Option<&XSeries> {
        self.basis.get(f)
    }

    pub fn leading_set(&self) -> Vec<MultiIndex> {
        self.basis.keys().cloned().collect()
    }

    /// Remainder of `g` after subtracting multiples of basis elements at
    /// every pivot. Zero exactly when `g` lies in the span.
    pub fn reduce(&self, g: &XSeries) -> Result<XSeries> {
        if !g.is_time_free() {
            return Err(Error::Usage(
                "points are spanned by time-independent series".into(),
            ));
        }
        let mut g = g.clone();
        for (p, u) in &self.basis {
            let c = g.rational_coeff(p);
            if !c.is_zero() {
                g = g.sub(&u.scale(&c))?;
            }
        }
        Ok(g)
    }

    pub fn contains(&self, g: &XSeries) -> Result<bool> {
        Ok(self.reduce(g)?.is_zero())
    }

    /// Add `g` to the span. Returns its new leading exponent, or `None` when
    /// it was already in the span.
    pub fn insert(&mut self, g: XSeries) -> Result<Option<MultiIndex>> {
        self.ctx.check_same(g.ctx())?;
        let g = self.reduce(&g)?;
        let v = match g.valuation() {
            Ok(v) => v,
            Err(_) => return Ok(None),
        };
        let c = g.rational_coeff(&v);
        let g = g.scale(&(Q::one() / c));
        for u in self.basis.values_mut() {
            let c = u.rational_coeff(&v);
            if !c.is_zero() {
                *u = u.sub(&g.scale(&c))?;
            }
        }
        self.basis.insert(v.clone(), g);
        Ok(Some(v))
    }

    /// Compare leading sets against `{f ⊆ 0 in the window}`.
    pub fn f0_report(&self) -> Result<F0Report> {
        let want = cell_exponents(&self.ctx)?;
        let zero = MultiIndex::zero(self.ctx.n);
        let missing = want
            .iter()
            .filter(|f| !self.basis.contains_key(*f))
            .cloned()
            .collect();
        let extra = self
            .basis
            .keys()
            .filter(|f| !f.subset_of(&zero))
            .cloned()
            .collect();
        Ok(F0Report { missing, extra })
    }

    pub fn is_f0(&self) -> Result<(bool, F0Report)> {
        let r = self.f0_report()?;
        Ok((r.holds(), r))
    }

    /// First difference against another point on the common exact region.
    pub fn diff(&self, other: &GrPoint) -> Result<Option<String>> {
        if self.leading_set() != other.leading_set() {
            return Ok(Some("leading sets differ".into()));
        }
        for (f, u) in &self.basis {
            if let Some((e, _, c)) = u.diff_on_common(&other.basis[f])? {
                return Ok(Some(format!("element {f} differs at x^{e} by {c}")));
            }
        }
        Ok(None)
    }

    /// Multiply every element by `h` and reduce again.
    pub fn mul_series(&self, h: &XSeries) -> Result<GrPoint> {
        let fam = self
            .basis
            .values()
            .map(|u| u.mul(h))
            .collect::<Result<Vec<_>>>()?;
        GrPoint::from_basis(&self.ctx, fam)
    }

    /// Same point, elements re-expressed in another context with more times.
    pub fn embed(&self, ctx: &CtxRef) -> Result<GrPoint> {
        let basis = self
            .basis
            .iter()
            .map(|(f, u)| Ok((f.clone(), u.embed(ctx)?)))
            .collect::<Result<_>>()?;
        Ok(GrPoint {
            ctx: ctx.clone(),
            basis,
            trivial_outside: self.trivial_outside,
        })
    }

    pub(crate) fn from_reduced(ctx: &CtxRef, basis: BTreeMap<MultiIndex, XSeries>) -> Self {
        GrPoint {
            ctx: ctx.clone(),
            basis,
            trivial_outside: false,
        }
    }
}

/// Shape of random big-cell points.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RandomPointSpec {
    pub max_tails: usize,
    pub max_coeff: i64,
    /// Largest `x_N`-exponent allowed in a tail.
    pub max_tail_order: Option<i64>,
}

impl Default for RandomPointSpec {
    fn default() -> Self {
        RandomPointSpec {
            max_tails: 2,
            max_coeff: 3,
            max_tail_order: None,
        }
    }
}

/// A random point of the big cell: `u_f = x^f + Σ c_h x^h` with a few tails
/// at revlex-positive exponents `h` of larger weight. Such a family is
/// already reduced and exact.
pub fn random_f0_point<R: Rng>(
    ctx: &CtxRef,
    rng: &mut R,
    spec: &RandomPointSpec,
) -> Result<GrPoint> {
    let (lo, hi) = window(ctx)?;
    let tails: Vec<MultiIndex> = MultiIndex::box_iter(&lo, &hi)
        .into_iter()
        .filter(|h| h.revlex_sign() > 0 && spec.max_tail_order.is_none_or(|m| h.last() <= m))
        .collect();
    let mut basis = BTreeMap::new();
    for f in cell_exponents(ctx)? {
        let wf = f.dot(&ctx.grading);
        let cands: Vec<&MultiIndex> = tails.iter().filter(|h| h.dot(&ctx.grading) > wf).collect();
        let mut terms = vec![(f.clone(), Q::one())];
        if !cands.is_empty() {
            for _ in 0..rng.gen_range(0..=spec.max_tails) {
                let h = cands[rng.gen_range(0..cands.len())].clone();
                let mut num = rng.gen_range(-spec.max_coeff..=spec.max_coeff);
                if num == 0 {
                    num = 1;
                }
                let den = rng.gen_range(1..=3);
                terms.push((h, Q::new(num.into(), den.into())));
            }
        }
        basis.insert(f, XSeries::from_rationals(ctx, terms));
    }
    Ok(GrPoint::from_reduced(ctx, basis).assume_trivial_outside())
}

/// A random point `span{x^{f'} v_{f_N}}` built from one-variable elements
/// `v_j = x_N^j + Σ c_{jk} x_N^k` with `0 < k ≤ max_tail_order`. Its
/// K-extension has index zero, so the adjoint side is non-trivial.
pub fn random_split_point<R: Rng>(
    ctx: &CtxRef,
    rng: &mut R,
    spec: &RandomPointSpec,
) -> Result<GrPoint> {
    let (lo, hi) = window(ctx)?;
    let n = ctx.n;
    let top = spec.max_tail_order.unwrap_or(hi.last()).min(hi.last());
    let mut rows: BTreeMap<i64, Vec<(i64, Q)>> = BTreeMap::new();
    for j in lo.last()..=0 {
        let mut row = vec![(j, Q::one())];
        if top >= 1 {
            for _ in 0..rng.gen_range(0..=spec.max_tails) {
                let k = rng.gen_range(1..=top);
                let num = match rng.gen_range(-spec.max_coeff..=spec.max_coeff) {
                    0 => 1,
                    v => v,
                };
                row.push((k, Q::new(num.into(), rng.gen_range(1..=3).into())));
            }
        }
        rows.insert(j, row);
    }
    let mut basis = BTreeMap::new();
    for f in cell_exponents(ctx)? {
        let terms = rows[&f.last()]
            .iter()
            .map(|(k, c)| (f.with(n - 1, *k), c.clone()))
            .collect();
        basis.insert(f, XSeries::from_rationals(ctx, terms));
    }
    Ok(GrPoint::from_reduced(ctx, basis).assume_trivial_outside())
}

fn unit_mono(ctx: &CtxRef, a: &MultiIndex) -> Mono {
    let mut m = Mono::ONE;
    for i in 0..ctx.n {
        m = m.with(ctx.unit_slot(i), a.get(i) as u32);
    }
    m
}

fn factorial(a: &MultiIndex) -> Q {
    let mut r = num_bigint::BigInt::one();
    for &k in a.entries() {
        for j in 2..=k {
            r *= j;
        }
    }
    Q::from_integer(r)
}

/// `u_a = e^{-ξ} ∂^a w |_{t=0}` for every `a ⊇ 0` with `-a` in the window,
/// where `∂^a` differentiates in the unit times. Computed from the symbol
/// through `symbol(∂_i ∘ P) = x_i^{-1} symbol(P) + ∂_{t_{e_i}} symbol(P)`.
pub fn generating_family(wave: &WaveFunction) -> Result<BTreeMap<MultiIndex, XSeries>> {
    let home = wave.sym.ctx().clone();
    // The recursion only lowers x-exponents, so terms leaving the window
    // below never return.
    let ctx = home.with_trust_below();
    let (lo, _) = window(&ctx)?;
    let non_unit: Vec<usize> = (0..ctx.nt()).filter(|&k| !ctx.is_unit_slot(k)).collect();
    let sym0 = wave.sym.embed(&ctx)?.time_coeff(&Mono::ONE, &non_unit);
    let top = -&lo;
    let mut phi: BTreeMap<MultiIndex, XSeries> = BTreeMap::new();
    let mut out = BTreeMap::new();
    let mut alphas = MultiIndex::box_iter(&MultiIndex::zero(ctx.n), &top);
    // Predecessors come first in graded order.
    alphas.sort_by_key(|a| a.total());
    for a in alphas {
        let cur = if a.is_zero() {
            sym0.clone()
        } else {
            let i = (0..ctx.n).find(|&i| a.get(i) > 0).expect("nonzero index");
            let ei = MultiIndex::unit(ctx.n, i);
            let prev = &phi[&(&a - &ei)];
            prev.shift(&-&ei).add(&prev.derive_t(ctx.unit_slot(i)))?
        };
        out.insert(a.clone(), cur.at_t0().embed(&home)?);
        phi.insert(a, cur);
    }
    Ok(out)
}

/// Indices `a` whose family element does not start with `x^{-a}` with
/// coefficient 1.
pub fn leading_term_defects(family: &BTreeMap<MultiIndex, XSeries>) -> Vec<MultiIndex> {
    family
        .iter()
        .filter(|(a, u)| match u.valuation() {
            Ok(v) => v != -*a || !u.rational_coeff(&v).is_one(),
            Err(_) => true,
        })
        .map(|(a, _)| a.clone())
        .collect()
}

/// The point spanned by the unit-time derivatives of a wave function at
/// `t = 0`, checked against a second route through the coefficients of `w`
/// and against the derivatives in the remaining active times.
pub fn point_from_wave(wave: &WaveFunction) -> Result<GrPoint> {
    let ctx = wave.sym.ctx().clone();
    let family = generating_family(wave)?;
    // Second route: a! times the coefficient of t^a in w itself.
    let all: Vec<usize> = (0..ctx.nt()).collect();
    for (a, u) in &family {
        let other = wave
            .w
            .time_coeff(&unit_mono(&ctx, a), &all)
            .scale(&factorial(a));
        if let Some((e, _, c)) = u.diff_on_common(&other)? {
            return Err(Error::Consistency(format!(
                "coefficient of t^{a} in w disagrees with the symbol route at x^{e} by {c}"
            )));
        }
    }
    // Leading-term defects can make the truncated family dependent.
    let (p, _) = GrPoint::span(&ctx, family.into_values().collect())?;
    for k in 0..ctx.nt() {
        if ctx.is_unit_slot(k) {
            continue;
        }
        let d = wave.w.time_coeff(&Mono::var(k), &all);
        let r = p.reduce(&d)?;
        if let Ok(v) = r.valuation() {
            return Err(Error::Consistency(format!(
                "∂w/∂{:?} at t=0 is not in the point (remainder at x^{v})",
                ctx.times[k].index
            )));
        }
    }
    let (ok, rep) = p.is_f0()?;
    if !ok {
        return Err(Error::NotTransversal(rep.to_string()));
    }
    Ok(p)
}

/// Active times `a` (unit times included) whose derivative
/// `e^{-ξ} ∂_{t_a} w` at `t = 0` does not start with `x^{-a}` with
/// coefficient 1.
pub fn active_leading_defects(wave: &WaveFunction) -> Result<Vec<MultiIndex>> {
    let ctx = wave.w.ctx();
    let all: Vec<usize> = (0..ctx.nt()).collect();
    let mut out = Vec::new();
    for k in 0..ctx.nt() {
        let a = &ctx.times[k].index;
        let d = wave.w.time_coeff(&Mono::var(k), &all);
        let ok = match d.valuation() {
            Ok(v) => v == -a && d.rational_coeff(&v).is_one(),
            Err(_) => false,
        };
        if !ok {
            out.push(a.clone());
        }
    }
    Ok(out)
}

/// Split by total time degree.
fn tdeg_slices(e: &XSeries) -> Vec<XSeries> {
    let max = e
        .terms()
        .flat_map(|(_, p)| p.iter().map(|(m, _)| m.degree()))
        .max()
        .unwrap_or(0);
    (0..=max)
        .map(|d| e.filter_monos(|m| m.degree() == d))
        .collect()
}

/// Solve for `sym` with `sym·E` having every time coefficient in the point:
/// degree by degree, `sym_d = -π(Σ_k sym_{d-k} E_k)` where `π` removes the
/// pivot part using the basis.
fn solve_wave(
    e: &XSeries,
    start: XSeries,
    project: impl Fn(&XSeries) -> Result<XSeries>,
) -> Result<XSeries> {
    let slices = tdeg_slices(e);
    let ctx = e.ctx();
    // Every time has a grade of size at least 1, so the caps on the time
    // grade bound the degree.
    let dmax = (0..ctx.n)
        .map(|i| e.prec().cap[ctx.f_y(i)])
        .try_fold(0i64, |acc, c| {
            (c != crate::algebra::prec::INF).then_some(acc + c)
        })
        .ok_or_else(|| Error::Usage("the exponential must cap the time grade".into()))?
        as usize;
    let mut syms = vec![start];
    for d in 1..=dmax {
        let mut known = XSeries::zero(ctx);
        for k in 1..=d.min(slices.len() - 1) {
            if slices[k].is_zero() || syms[d - k].is_zero() {
                continue;
            }
            known = known.add(&syms[d - k].mul(&slices[k])?)?;
        }
        let sd = project(&known)?.neg();
        debug!("wave solve: degree {d}, {} terms", sd.n_terms());
        syms.push(sd);
    }
    let mut sym = XSeries::zero(ctx);
    for s in syms {
        sym = sym.add(&s)?;
    }
    Ok(sym)
}

/// The wave function of a point of the big cell: `w = sym·e^ξ` with
/// `sym - 1` supported off the cell exponents and every time coefficient of
/// `w` in the point.
pub fn wave_from_point(p: &GrPoint) -> Result<WaveFunction> {
    let (ok, rep) = p.is_f0()?;
    if !ok {
        return Err(Error::NotTransversal(rep.to_string()));
    }
    let home = p.ctx().clone();
    // Below-window terms of the products never re-enter the window when the
    // point is trivial outside it: the exponential only lowers exponents and
    // the elements there have no tails.
    let lifted;
    let p = if p.trivial_outside {
        lifted = p.embed(&home.with_trust_below())?;
        &lifted
    } else {
        p
    };
    let ctx = p.ctx().clone();
    let zero = MultiIndex::zero(ctx.n);
    let e = wave_exponential(&ctx, 1)?;
    let project = |g: &XSeries| -> Result<XSeries> {
        let mut r = g.clone();
        for (f, _) in g.terms() {
            if !f.subset_of(&zero) {
                continue;
            }
            let u = p
                .element(f)
                .ok_or_else(|| Error::WindowTooSmall(format!("no element at {f}")))?;
            r = r.sub(&u.mul(&g.term_at(f))?)?;
        }
        Ok(r)
    };
    let start = p.element(&zero).expect("big-cell point has u_0").clone();
    let sym = solve_wave(&e, start, project)?;
    let w = sym.mul(&e)?;
    Ok(WaveFunction {
        w: w.embed(&home)?,
        sym: sym.embed(&home)?,
    })
}

/// Exponents of `sym - 1` that are not revlex-positive.
pub fn non_revlex_symbol_support(wave: &WaveFunction) -> Vec<MultiIndex> {
    let zero = MultiIndex::zero(wave.sym.ctx().n);
    wave.sym
        .terms()
        .filter(|(f, p)| {
            !(f.revlex_sign() > 0 || (**f == zero && p.iter().all(|(m, _)| m.is_one())))
        })
        .map(|(f, _)| f.clone())
        .collect()
}

/// First time monomial of `w` whose coefficient is not in the point.
pub fn wave_outside_point(p: &GrPoint, wave: &WaveFunction, limit: usize) -> Result<Option<Mono>> {
    let ctx = p.ctx();
    let all: Vec<usize> = (0..ctx.nt()).collect();
    let mut monos: Vec<Mono> = wave
        .w
        .terms()
        .flat_map(|(_, q)| q.iter().map(|(m, _)| *m))
        .collect();
    monos.sort();
    monos.dedup();
    for m in monos.into_iter().take(limit) {
        if !p.contains(&wave.w.time_coeff(&m, &all))? {
            return Ok(Some(m));
        }
    }
    Ok(None)
}

/// The dressing operator whose symbol is the wave function's symbol.
pub fn dressing_of(wave: &WaveFunction) -> Result<DressingOp> {
    Ok(DressingOp {
        s: Pdo::from_symbol(&wave.sym)?,
        s_inv: None,
    })
}

/// `ω = u_0 + Σ_{f ≠ 0} t_{-f} u_f`.
pub fn ba_function(p: &GrPoint) -> Result<XSeries> {
    let ctx = p.ctx();
    let mut w = XSeries::zero(ctx);
    let mut missing = Vec::new();
    for (f, u) in p.basis() {
        if f.is_zero() {
            w = w.add(u)?;
            continue;
        }
        let a = -f;
        match ctx.time_slot(&a) {
            Some(k) => w = w.add(&u.mul_poly(&TimePoly::var(k))?)?,
            None => missing.push(a),
        }
    }
    if !missing.is_empty() {
        let list: Vec<String> = missing.iter().take(4).map(|a| a.to_string()).collect();
        return Err(Error::Usage(format!(
            "the point needs {} inactive times, e.g. {}; use an x-window with x_lo = -(largest time)",
            missing.len(),
            list.join(" ")
        )));
    }
    Ok(w)
}

/// A subspace of `K((x_N))`, `K = Q((x_1))...((x_{N-1}))`, in echelon form
/// over `K`: one element per `x_N`-order with `K`-leading coefficient 1.
#[derive(Clone, Debug)]
pub struct KPoint {
    ctx: CtxRef,
    basis: BTreeMap<i64, XSeries>,
}

impl KPoint {
    pub fn ctx(&self) -> &CtxRef {
        &self.ctx
    }

    pub fn orders(&self) -> Vec<i64> {
        self.basis.keys().copied().collect()
    }

    pub fn element(&self, k: i64) -> Option<&XSeries> {
        self.basis.get(&k)
    }

    pub fn basis(&self) -> impl Iterator<Item = (&i64, &XSeries)> {
        self.basis.iter()
    }

    pub fn len(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    /// Remainder of `g` after removing every pivot order, lowest first.
    pub fn reduce(&self, g: &XSeries) -> Result<XSeries> {
        let mut g = g.clone();
        for (k, u) in &self.basis {
            let c = g.x_last_coeff(*k);
            if !c.is_zero() {
                g = g.sub(&u.mul(&c)?)?;
            }
        }
        Ok(g)
    }

    fn insert(&mut self, g: XSeries) -> Result<bool> {
        let mut g = g;
        loop {
            let Some(k) = g.x_last_order() else {
                return Ok(false);
            };
            let lead = g.x_last_coeff(k);
            if let Some(u) = self.basis.get(&k) {
                g = g.sub(&u.mul(&lead)?)?;
                continue;
            }
            let inv = lead.invert().map_err(|e| {
                Error::WindowTooSmall(format!("K-leading coefficient at order {k}: {e}"))
            })?;
            let mut g = g.mul(&inv)?;
            for (q, u) in &self.basis {
                if *q > k {
                    let c = g.x_last_coeff(*q);
                    if !c.is_zero() {
                        g = g.sub(&u.mul(&c)?)?;
                    }
                }
            }
            for u in self.basis.values_mut() {
                let c = u.x_last_coeff(k);
                if !c.is_zero() {
                    *u = u.sub(&g.mul(&c)?)?;
                }
            }
            self.basis.insert(k, g);
            return Ok(true);
        }
    }
}

/// The `K`-span of a point, reduced over `K`.
pub fn k_extend(p: &GrPoint) -> Result<KPoint> {
    let mut q = KPoint {
        ctx: p.ctx().clone(),
        basis: BTreeMap::new(),
    };
    // Elements with pure x_N leading exponents first: they carry the
    // K-structure of the big cell.
    let (pure, rest): (Vec<_>, Vec<_>) = p
        .basis()
        .partition(|(f, _)| f.entries()[..f.len() - 1].iter().all(|&v| v == 0));
    for (_, u) in pure.into_iter().chain(rest) {
        q.insert(u.clone())?;
    }
    Ok(q)
}

/// `x_N`-orders `m` whose graph partner `-1-m` is also in the window.
fn dual_range(ctx: &CtxRef) -> Result<(i64, i64)> {
    let (lo, hi) = window(ctx)?;
    let (l, h) = (lo.last(), hi.last());
    Ok((l.max(-1 - h), h.min(-1 - l)))
}

/// The annihilator of `q` under the residue pairing. For reduced `q` with
/// elements `x_N^p + Σ_{m ∉ P} c_{p,m} x_N^m` it is spanned by
/// `x_N^{-1-m} - Σ_p c_{p,m} x_N^{-1-p}` for the non-pivot orders `m`.
/// Orders are restricted to the self-dual range of the window.
pub fn perp(q: &KPoint) -> Result<KPoint> {
    let ctx = q.ctx().clone();
    let n = ctx.n;
    let (l, h) = dual_range(&ctx)?;
    let en = MultiIndex::unit(n, n - 1);
    let mut basis = BTreeMap::new();
    for m in l..=h {
        if q.basis.contains_key(&m) {
            continue;
        }
        let mut g = XSeries::monomial(&ctx, en.scale(-1 - m), TimePoly::one());
        for (p, u) in &q.basis {
            let c = u.x_last_coeff(m);
            if !c.is_zero() {
                g = g.sub(&c.shift(&en.scale(-1 - p)))?;
            }
        }
        basis.insert(-1 - m, g);
    }
    Ok(KPoint { ctx, basis })
}

/// Wave function of a `K`-point whose pivots in the window form a full cone
/// `{lo_N, ..., p_max}`, in adjoint times `s_1..s_m` with `m = -lo_N`:
/// `ψ = sym·exp(Σ s_i x_N^{-i})` with `sym` leading with the element at
/// `p_max` and every `s`-coefficient of `ψ` in the span.
pub fn one_variable_wave(q: &KPoint) -> Result<(XSeries, CtxRef)> {
    let ctx = q.ctx().clone();
    let n = ctx.n;
    let (lo, _) = window(&ctx)?;
    let l = lo.last();
    let orders = q.orders();
    let pmax = *orders
        .iter()
        .filter(|&&k| k >= l)
        .max()
        .ok_or_else(|| Error::NotTransversal("no pivots in the window".into()))?;
    let cone: Vec<i64> = (l..=pmax).collect();
    let have: Vec<i64> = orders
        .iter()
        .copied()
        .filter(|&k| k >= l && k <= pmax)
        .collect();
    if have != cone {
        return Err(Error::NotTransversal(format!(
            "pivot orders {orders:?} do not form a full cone up to {pmax}"
        )));
    }
    let m = (-l) as usize;
    let sctx = ctx.with_s_times(m)?;
    let en = MultiIndex::unit(n, n - 1);
    let elems: BTreeMap<i64, XSeries> = q
        .basis
        .iter()
        .map(|(k, u)| Ok((*k, u.embed(&sctx)?)))
        .collect::<Result<_>>()?;
    let slots: Vec<(usize, MultiIndex, bool)> = (1..=m)
        .map(|i| {
            (
                sctx.s_slot(i).expect("s time"),
                en.scale(-(i as i64)),
                false,
            )
        })
        .collect();
    let e = exponential_windowed(&sctx, &slots, 1, 0)?;
    let project = |g: &XSeries| -> Result<XSeries> {
        let mut r = g.clone();
        let ks: std::collections::BTreeSet<i64> = g
            .terms()
            .map(|(f, _)| f.last())
            .filter(|&k| k <= pmax)
            .collect();
        for k in ks {
            let u = elems
                .get(&k)
                .ok_or_else(|| Error::WindowTooSmall(format!("no element at order {k}")))?;
            r = r.sub(&u.mul(&g.x_last_coeff(k))?)?;
        }
        Ok(r)
    };
    let sym = solve_wave(&e, elems[&pmax].clone(), project)?;
    Ok((sym.mul(&e)?, sctx))
}

/// `ψ`: the one-variable wave function of the annihilator of the point's
/// `K`-span.
pub fn adjoint_wave(q: &KPoint) -> Result<(XSeries, CtxRef)> {
    one_variable_wave(&perp(q)?)
}

/// `<f, g> = res_{x_N}(f g)`, with `f` moved into the context of `g`.
pub fn bilinear_check(f: &XSeries, g: &XSeries) -> Result<XSeries> {
    pairing(&f.embed(g.ctx())?, g)
}
