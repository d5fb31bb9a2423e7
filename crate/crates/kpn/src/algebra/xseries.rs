use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use super::ctx::{CtxRef, F_GRADE0};
use super::graded::{normalize, support_lb, Acc, Flat, Kind, Terms};
use super::multi::MultiIndex;
use super::prec::{Prec, INF};
use super::timepoly::{Mono, TimePoly, Q};
use crate::error::{Error, Result};

/// Truncated Laurent series in `x_1..x_N` with time-polynomial coefficients.
///
/// Stored terms are exactly the terms of the underlying series that lie in
/// the exact region described by `prec`, clipped to the context window.
#[derive(Clone)]
pub struct XSeries {
    ctx: CtxRef,
    terms: Terms,
    prec: Prec,
}

impl XSeries {
    pub fn zero(ctx: &CtxRef) -> Self {
        XSeries {
            ctx: ctx.clone(),
            terms: Terms::new(),
            prec: Prec::exact_unbounded(ctx.nfun()),
        }
    }

    pub fn one(ctx: &CtxRef) -> Self {
        Self::monomial(ctx, MultiIndex::zero(ctx.n), TimePoly::one())
    }

    pub fn monomial(ctx: &CtxRef, f: MultiIndex, c: TimePoly) -> Self {
        let mut t = Terms::new();
        if !c.is_zero() {
            t.insert(f, c);
        }
        Self::exact(ctx, t)
    }

    /// A series given by finitely many exact terms.
    pub(crate) fn exact(ctx: &CtxRef, terms: Terms) -> Self {
        let lb = support_lb(ctx, Kind::Series, &terms);
        Self::with_prec(ctx, terms, Prec::exact(lb))
    }

    pub fn from_terms(ctx: &CtxRef, terms: Vec<(MultiIndex, TimePoly)>) -> Self {
        let mut t = Terms::new();
        for (f, p) in terms {
            let e = t.entry(f).or_insert_with(TimePoly::zero);
            e.add_assign_ref(&p);
        }
        t.retain(|_, p| !p.is_zero());
        Self::exact(ctx, t)
    }

    /// Rational-coefficient series from `(exponent, value)` pairs.
    pub fn from_rationals(ctx: &CtxRef, terms: Vec<(MultiIndex, Q)>) -> Self {
        Self::from_terms(
            ctx,
            terms
                .into_iter()
                .map(|(f, c)| (f, TimePoly::constant(c)))
                .collect(),
        )
    }

    pub(crate) fn with_prec(ctx: &CtxRef, terms: Terms, mut prec: Prec) -> Self {
        let terms = normalize(ctx, Kind::Series, terms, &mut prec, ctx.x_window.as_ref());
        if prec.is_exact() {
            prec.lb = support_lb(ctx, Kind::Series, &terms);
        }
        XSeries {
            ctx: ctx.clone(),
            terms,
            prec,
        }
    }

    /// Same terms, with the stated precision. The caller vouches for it.
    pub fn truncated(&self, prec: Prec) -> Self {
        Self::with_prec(&self.ctx, self.terms.clone(), prec)
    }

    /// Restrict to the region where the grade of every coordinate is at
    /// most `hi`.
    pub fn clip_grades(&self, hi: &MultiIndex) -> Self {
        let mut p = self.prec.clone();
        for i in 0..self.ctx.n {
            p.lower_cap(F_GRADE0 + i, hi.get(i));
        }
        self.truncated(p)
    }

    /// Restrict to weight at most `w`.
    pub fn clip_weight(&self, w: i64) -> Self {
        let mut p = self.prec.clone();
        p.lower_cap(super::ctx::F_WEIGHT, w);
        self.truncated(p)
    }

    /// Restrict to total time degree at most `d`.
    pub fn clip_tdeg(&self, d: u32) -> Self {
        let mut p = self.prec.clone();
        p.lower_cap(super::ctx::F_TDEG, d as i64);
        self.truncated(p)
    }

    pub fn ctx(&self) -> &CtxRef {
        &self.ctx
    }

    pub fn prec(&self) -> &Prec {
        &self.prec
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_exact(&self) -> bool {
        self.prec.is_exact()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &TimePoly)> {
        self.terms.iter()
    }

    pub(crate) fn term_map(&self) -> &Terms {
        &self.terms
    }

    pub fn coeff(&self, f: &MultiIndex) -> TimePoly {
        self.terms.get(f).cloned().unwrap_or_else(TimePoly::zero)
    }

    /// Whether the term `t^m x^f` lies in the exact region and window.
    pub fn knows(&self, m: &Mono, f: &MultiIndex) -> bool {
        if let Some(w) = &self.ctx.x_window {
            if !(w.0.subset_of(f) && f.subset_of(&w.1)) {
                return false;
            }
        }
        self.prec.contains(&self.ctx.values(m, f))
    }

    /// Whether the time-independent term `x^f` is known.
    pub fn knows_exp(&self, f: &MultiIndex) -> bool {
        self.knows(&Mono::ONE, f)
    }

    pub fn exponents(&self) -> Vec<MultiIndex> {
        self.terms.keys().cloned().collect()
    }

    fn same(&self, o: &XSeries) -> Result<()> {
        self.ctx.check_same(&o.ctx)
    }

    pub fn add(&self, o: &XSeries) -> Result<XSeries> {
        self.same(o)?;
        let mut t = self.terms.clone();
        for (f, p) in &o.terms {
            t.entry(f.clone())
                .or_insert_with(TimePoly::zero)
                .add_assign_ref(p);
        }
        t.retain(|_, p| !p.is_zero());
        Ok(Self::with_prec(
            &self.ctx,
            t,
            Prec::meet(&self.prec, &o.prec),
        ))
    }

    pub fn sub(&self, o: &XSeries) -> Result<XSeries> {
        self.add(&o.neg())
    }

    pub fn neg(&self) -> XSeries {
        XSeries {
            ctx: self.ctx.clone(),
            terms: self
                .terms
                .iter()
                .map(|(f, p)| (f.clone(), p.neg()))
                .collect(),
            prec: self.prec.clone(),
        }
    }

    pub fn scale(&self, c: &Q) -> XSeries {
        if c.is_zero() {
            return XSeries {
                terms: Terms::new(),
                ..self.clone()
            };
        }
        XSeries {
            ctx: self.ctx.clone(),
            terms: self
                .terms
                .iter()
                .map(|(f, p)| (f.clone(), p.scale(c)))
                .collect(),
            prec: self.prec.clone(),
        }
    }

    /// Multiply by the monomial `x^f`.
    pub fn shift(&self, f: &MultiIndex) -> XSeries {
        let by = self.ctx.shift_values(f);
        let terms = self.terms.iter().map(|(g, p)| (g + f, p.clone())).collect();
        Self::with_prec(&self.ctx, terms, self.prec.shifted(&by))
    }

    /// Convolution product, exact on the product region.
    pub fn mul(&self, o: &XSeries) -> Result<XSeries> {
        self.same(o)?;
        let prec = Prec::product(&self.prec, &o.prec);
        let a = Flat::new(&self.ctx, Kind::Series, &self.terms);
        let b = Flat::new(&self.ctx, Kind::Series, &o.terms);
        let wcap = prec.cap[super::ctx::F_WEIGHT];
        let mut acc = Acc::default();
        let mut vals = vec![0i64; prec.k()];
        for (fa, ma, ca, va) in &a.items {
            for (fb, mb, cb, vb) in &b.items {
                if wcap != INF && va[0] + vb[0] > wcap {
                    break;
                }
                for j in 0..vals.len() {
                    vals[j] = va[j] + vb[j];
                }
                if !prec.contains(&vals) {
                    continue;
                }
                acc.add(*fa + *fb, ma.mul(mb), *ca * *cb);
            }
        }
        Ok(Self::with_prec(&self.ctx, acc.into_terms(), prec))
    }

    /// Multiply every coefficient by a time polynomial.
    pub fn mul_poly(&self, p: &TimePoly) -> Result<XSeries> {
        self.mul(&XSeries::monomial(
            &self.ctx,
            MultiIndex::zero(self.ctx.n),
            p.clone(),
        ))
    }

    /// `∂/∂t` in time slot `k`, applied coefficientwise.
    pub fn derive_t(&self, k: usize) -> XSeries {
        let by: Vec<i64> = self.ctx.time_values(k).iter().map(|v| -v).collect();
        let terms = self
            .terms
            .iter()
            .map(|(f, p)| (f.clone(), p.derive(k)))
            .filter(|(_, p)| !p.is_zero())
            .collect();
        Self::with_prec(&self.ctx, terms, self.prec.shifted(&by))
    }

    /// Coefficient of the time monomial `m`, restricted to the time slots in
    /// `slots` (other slots may still appear). With `slots` listing every
    /// slot this is the plain coefficient of `t^m`.
    pub fn time_coeff(&self, m: &Mono, slots: &[usize]) -> XSeries {
        let mut by = vec![0i64; self.prec.k()];
        for (k, e) in m.support() {
            for (b, v) in by.iter_mut().zip(self.ctx.time_values(k)) {
                *b -= v * e as i64;
            }
        }
        let terms = self
            .terms
            .iter()
            .map(|(f, p)| (f.clone(), p.extract(m, slots)))
            .filter(|(_, p)| !p.is_zero())
            .collect();
        let mut prec = self.prec.shifted(&by);
        // The result is independent of the extracted slots; other slots keep
        // their own bounds.
        for j in 0..prec.k() {
            if prec.lb[j] != super::prec::NEG_INF && prec.lb[j] != INF && by[j] != 0 {
                prec.lb[j] = prec.lb[j].min(self.prec.lb[j]);
            }
        }
        Self::with_prec(&self.ctx, terms, prec)
    }

    /// Evaluate all times at zero.
    pub fn at_t0(&self) -> XSeries {
        let all: Vec<usize> = (0..self.ctx.nt()).collect();
        self.time_coeff(&Mono::ONE, &all)
    }

    /// Whether all coefficients are constant in time.
    pub fn is_time_free(&self) -> bool {
        self.terms.values().all(|p| p.as_constant().is_some())
    }

    /// Coefficient of `x^f` as a rational, for time-free series.
    pub fn rational_coeff(&self, f: &MultiIndex) -> Q {
        self.coeff(f).at_zero()
    }

    /// Revlex-minimal stored exponent.
    pub fn valuation(&self) -> Result<MultiIndex> {
        self.terms.keys().next().cloned().ok_or(Error::NoValuation)
    }

    /// Coefficient of `x_N^{-1}`, returned as a series with `x_N`-exponent 0.
    pub fn residue(&self) -> XSeries {
        let n = self.ctx.n;
        let en = MultiIndex::unit(n, n - 1);
        let terms: Terms = self
            .terms
            .iter()
            .filter(|(f, _)| f.last() == -1)
            .map(|(f, p)| (f + &en, p.clone()))
            .collect();
        let by = self.ctx.shift_values(&en);
        Self::with_prec(&self.ctx, terms, self.prec.shifted(&by))
    }

    /// Slice at `x_N`-exponent `k`, moved to exponent 0.
    pub fn x_last_coeff(&self, k: i64) -> XSeries {
        let n = self.ctx.n;
        let sh = MultiIndex::unit(n, n - 1).scale(-k);
        let terms: Terms = self
            .terms
            .iter()
            .filter(|(f, _)| f.last() == k)
            .map(|(f, p)| (f + &sh, p.clone()))
            .collect();
        let by = self.ctx.shift_values(&sh);
        Self::with_prec(&self.ctx, terms, self.prec.shifted(&by))
    }

    /// Keep only the terms whose time monomial satisfies `keep`. The region
    /// is unchanged, so the result is exact there for the correspondingly
    /// filtered series.
    pub fn filter_monos(&self, keep: impl Fn(&Mono) -> bool) -> XSeries {
        let terms = self
            .terms
            .iter()
            .map(|(f, p)| (f.clone(), p.filter(&keep)))
            .filter(|(_, p)| !p.is_zero())
            .collect();
        XSeries {
            ctx: self.ctx.clone(),
            terms,
            prec: self.prec.clone(),
        }
    }

    /// The coefficient of `x^f` as a series supported at exponent 0.
    pub fn term_at(&self, f: &MultiIndex) -> XSeries {
        let mut terms = Terms::new();
        if let Some(p) = self.terms.get(f) {
            terms.insert(MultiIndex::zero(self.ctx.n), p.clone());
        }
        let by: Vec<i64> = self.ctx.shift_values(f).iter().map(|v| -v).collect();
        Self::with_prec(&self.ctx, terms, self.prec.shifted(&by))
    }

    /// Smallest stored `x_N`-exponent.
    pub fn x_last_order(&self) -> Option<i64> {
        self.terms.keys().map(|f| f.last()).min()
    }

    /// Inverse of a series whose revlex-leading coefficient has a nonzero
    /// constant term.
    pub fn invert(&self) -> Result<XSeries> {
        let mu = self
            .valuation()
            .map_err(|_| Error::NotInvertible("zero series".into()))?;
        let lead = self.coeff(&mu);
        let c = lead.at_zero();
        if c.is_zero() {
            return Err(Error::NotInvertible(format!(
                "leading coefficient at {mu} has no constant term"
            )));
        }
        let cinv = Q::one() / &c;
        let neg_mu = -&mu;
        // f = c x^mu (1 + h)
        let h = self
            .shift(&neg_mu)
            .scale(&cinv)
            .sub(&XSeries::one(&self.ctx))?;
        let hlb = h.prec.lb.clone();
        let mut sum = XSeries::one(&self.ctx);
        let mut pw = XSeries::one(&self.ctx);
        let mut sign = Q::one();
        for _ in 0..100_000 {
            pw = pw.mul(&h)?;
            sign = -sign;
            let done = pw.is_zero();
            sum = sum.add(&pw.scale(&sign))?;
            if done {
                break;
            }
        }
        if !sum.prec.is_exact() {
            for j in 0..sum.prec.k() {
                if sum.prec.cap[j] != INF && h.prec.cap[j] == INF && hlb[j] < 0 {
                    return Err(Error::NotInvertible(format!(
                        "tail of the geometric series is not bounded in functional {j}"
                    )));
                }
            }
        }
        Ok(sum.shift(&neg_mu).scale(&cinv))
    }

    /// Exact comparison on the common exact region. Returns the first
    /// differing `(exponent, monomial)` if any.
    pub fn diff_on_common(&self, o: &XSeries) -> Result<Option<(MultiIndex, Mono, Q)>> {
        let d = self.sub(o)?;
        Ok(d.terms
            .iter()
            .next()
            .and_then(|(f, p)| p.iter().next().map(|(m, c)| (f.clone(), *m, c.clone()))))
    }

    pub fn eq_on_common(&self, o: &XSeries) -> Result<bool> {
        Ok(self.diff_on_common(o)?.is_none())
    }

    /// Number of stored `(exponent, monomial)` pairs.
    pub fn n_terms(&self) -> usize {
        self.terms.values().map(|p| p.len()).sum()
    }

    /// Re-express in another context with a superset of the time alphabet.
    pub fn embed(&self, ctx: &CtxRef) -> Result<XSeries> {
        let map = time_map(&self.ctx, ctx)?;
        let terms = self
            .terms
            .iter()
            .map(|(f, p)| (f.clone(), remap_poly(p, &map)))
            .collect();
        // Functional values are unchanged by relabelling times.
        let mut prec = self.prec.clone();
        if prec.k() != ctx.nfun() {
            return Err(Error::Usage("contexts differ in N".into()));
        }
        prec.cap = prec.cap.clone();
        Ok(Self::with_prec(ctx, terms, prec))
    }
}

pub(crate) fn time_map(from: &CtxRef, to: &CtxRef) -> Result<Vec<usize>> {
    if from.n != to.n || from.grading != to.grading {
        return Err(Error::Usage("incompatible contexts".into()));
    }
    from.times
        .iter()
        .map(|t| {
            to.times.iter().position(|u| u == t).ok_or_else(|| {
                Error::Usage(format!("time {:?} missing in target context", t.index))
            })
        })
        .collect()
}

pub(crate) fn remap_poly(p: &TimePoly, map: &[usize]) -> TimePoly {
    let mut r = TimePoly::zero();
    for (m, c) in p.iter() {
        let mut n = Mono::ONE;
        for (k, e) in m.support() {
            n = n.with(map[k], e);
        }
        r.add_term(n, c.clone());
    }
    r
}

impl fmt::Debug for XSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "XSeries[")?;
        for (i, (e, p)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{e:?}: {p:?}")?;
        }
        write!(f, "]")
    }
}

/// Residue pairing `<f, g> = res_{x_N}(f g)`.
pub fn pairing(f: &XSeries, g: &XSeries) -> Result<XSeries> {
    Ok(f.mul(g)?.residue())
}

/// `exp(sign · Σ_β t_β x^{-β})` over the `T` times, to total time degree
/// `t_degree` of the context.
pub fn build_exponential(ctx: &CtxRef, sign: i64) -> XSeries {
    let slots: Vec<(usize, MultiIndex)> = ctx
        .times
        .iter()
        .enumerate()
        .filter(|(_, t)| t.family == super::ctx::Family::T)
        .map(|(k, t)| (k, -&t.index))
        .collect();
    exponential_of(ctx, &slots, sign, ctx.t_degree)
}

/// `exp(sign · Σ_k t_k x^{f_k})` to total time degree `deg`, for `(slot,
/// exponent)` pairs with `t_k x^{f_k}` of grade zero.
pub fn exponential_of(ctx: &CtxRef, slots: &[(usize, MultiIndex)], sign: i64, deg: u32) -> XSeries {
    // Enumerate monomials of degree <= deg directly: t^κ/κ! x^{Σ κ_k f_k}.
    let mut terms = Terms::new();
    let mut stack: Vec<(usize, Mono, MultiIndex, u32)> =
        vec![(0, Mono::ONE, MultiIndex::zero(ctx.n), 0)];
    while let Some((i, m, f, d)) = stack.pop() {
        if i == slots.len() {
            let sgn = if sign < 0 && d % 2 == 1 { -1 } else { 1 };
            let c = Q::new(BigInt::from(sgn), m.factorial());
            terms.entry(f).or_insert_with(TimePoly::zero).add_term(m, c);
            continue;
        }
        let (k, ref fk) = slots[i];
        let mut mm = m;
        let mut ff = f.clone();
        for e in 0..=(deg - d) {
            stack.push((i + 1, mm, ff.clone(), d + e));
            mm = mm.with(k, e + 1);
            ff = &ff + fk;
        }
    }
    let mut lb = vec![0i64; ctx.nfun()];
    // ndeg/tdeg/weight/grades are all >= 0 on the untruncated exponential.
    lb.iter_mut().for_each(|v| *v = 0);
    let mut prec = Prec::exact(lb);
    prec.cap[super::ctx::F_TDEG] = deg as i64;
    XSeries::with_prec(ctx, terms, prec)
}

/// `exp(sign · Σ_k t_k x^{f_k})` with every monomial whose exponent stays in
/// the x-window. Slots flagged `budget` share a total degree bound of `deg`;
/// the others are limited by the window alone.
pub fn exponential_windowed(
    ctx: &CtxRef,
    slots: &[(usize, MultiIndex, bool)],
    sign: i64,
    deg: u32,
) -> Result<XSeries> {
    let (lo, _) = ctx
        .x_window
        .clone()
        .ok_or_else(|| Error::Usage("a windowed exponential needs an x-window".into()))?;
    let mut terms = Terms::new();
    let mut stack: Vec<(usize, Mono, MultiIndex, u32, u32)> =
        vec![(0, Mono::ONE, MultiIndex::zero(ctx.n), 0, 0)];
    while let Some((i, m, f, d, tot)) = stack.pop() {
        if i == slots.len() {
            let sgn = if sign < 0 && tot % 2 == 1 { -1 } else { 1 };
            let c = Q::new(BigInt::from(sgn), m.factorial());
            terms.entry(f).or_insert_with(TimePoly::zero).add_term(m, c);
            continue;
        }
        let (k, ref fk, budget) = slots[i];
        let mut mm = m;
        let mut ff = f.clone();
        let mut e = 0u32;
        while lo.subset_of(&ff) && (!budget || d + e <= deg) {
            stack.push((
                i + 1,
                mm,
                ff.clone(),
                if budget { d + e } else { d },
                tot + e,
            ));
            e += 1;
            mm = mm.with(k, e);
            ff = &ff + fk;
            if fk.is_zero() {
                return Err(Error::Usage("exponential slot with zero exponent".into()));
            }
        }
    }
    let mut prec = Prec::exact(vec![0i64; ctx.nfun()]);
    if slots.iter().any(|s| s.2) {
        prec.cap[super::ctx::F_NDEG] = deg as i64;
    }
    for i in 0..ctx.n {
        prec.cap[ctx.f_y(i)] = -lo.get(i);
    }
    Ok(XSeries::with_prec(ctx, terms, prec))
}

/// `exp(sign · ξ)` with the unit times to every order the x-window allows
/// and the other `T` times to degree `t_degree`.
pub fn wave_exponential(ctx: &CtxRef, sign: i64) -> Result<XSeries> {
    let slots: Vec<(usize, MultiIndex, bool)> = ctx
        .times
        .iter()
        .enumerate()
        .filter(|(_, t)| t.family == super::ctx::Family::T)
        .map(|(k, t)| (k, -&t.index, !ctx.is_unit_slot(k)))
        .collect();
    exponential_windowed(ctx, &slots, sign, ctx.t_degree)
}
