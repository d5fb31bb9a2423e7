//! Pseudodifferential operators `Σ a_α(t) ∂^α` in `N` variables.
//!
//! Coefficients are polynomials in the times; `∂_i` acts on them as the
//! derivative in the unit time `t_{e_i}`.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::algebra::ctx::{Ctx, CtxRef, SplitMode, F_NDEG, F_WEIGHT};
use crate::algebra::graded::{normalize, support_lb, Acc, Flat, Kind, Terms};
use crate::algebra::multi::{gen_binom_int, MultiIndex};
use crate::algebra::prec::{Prec, INF};
use crate::algebra::timepoly::{Mono, TimePoly, Q};
use crate::algebra::xseries::XSeries;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Part {
    Plus,
    Minus,
}

#[derive(Clone)]
pub struct Pdo {
    ctx: CtxRef,
    terms: Terms,
    prec: Prec,
}

impl Pdo {
    pub fn zero(ctx: &CtxRef) -> Self {
        Self::with_prec(ctx, Terms::new(), Prec::exact_unbounded(ctx.nfun()))
    }

    pub fn one(ctx: &CtxRef) -> Self {
        Self::monomial(ctx, MultiIndex::zero(ctx.n), TimePoly::one())
    }

    /// `c(t) ∂^e`.
    pub fn monomial(ctx: &CtxRef, e: MultiIndex, c: TimePoly) -> Self {
        Self::from_terms(ctx, vec![(e, c)])
    }

    /// `∂_i` (zero-based).
    pub fn d(ctx: &CtxRef, i: usize) -> Self {
        Self::monomial(ctx, MultiIndex::unit(ctx.n, i), TimePoly::one())
    }

    pub fn from_terms(ctx: &CtxRef, terms: Vec<(MultiIndex, TimePoly)>) -> Self {
        let mut t = Terms::new();
        for (e, p) in terms {
            t.entry(e).or_insert_with(TimePoly::zero).add_assign_ref(&p);
        }
        t.retain(|_, p| !p.is_zero());
        let lb = support_lb(ctx, Kind::Operator, &t);
        Self::with_prec(ctx, t, Prec::exact(lb))
    }

    /// Every operator is exact at most up to the context's weight cap and
    /// non-unit time degree.
    pub(crate) fn with_prec(ctx: &CtxRef, terms: Terms, mut prec: Prec) -> Self {
        prec.lower_cap(F_WEIGHT, ctx.weight);
        prec.lower_cap(F_NDEG, ctx.t_degree as i64);
        for j in 0..prec.k() {
            if ctx.series_only(j) {
                prec.cap[j] = INF;
                if prec.lb[j] != INF {
                    prec.lb[j] = 0;
                }
            }
        }
        let terms = normalize(ctx, Kind::Operator, terms, &mut prec, ctx.d_box.as_ref());
        Pdo {
            ctx: ctx.clone(),
            terms,
            prec,
        }
    }

    /// Same terms, restricted to a smaller region.
    pub fn truncated(&self, prec: Prec) -> Self {
        Self::with_prec(&self.ctx, self.terms.clone(), prec)
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

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &TimePoly)> {
        self.terms.iter()
    }

    pub(crate) fn term_map(&self) -> &Terms {
        &self.terms
    }

    pub fn coeff(&self, e: &MultiIndex) -> TimePoly {
        self.terms.get(e).cloned().unwrap_or_else(TimePoly::zero)
    }

    pub fn n_terms(&self) -> usize {
        self.terms.values().map(|p| p.len()).sum()
    }

    /// Whether `t^m ∂^e` lies in the exact region.
    pub fn knows(&self, m: &Mono, e: &MultiIndex) -> bool {
        if let Some((lo, hi)) = &self.ctx.d_box {
            if !(lo.subset_of(e) && e.subset_of(hi)) {
                return false;
            }
        }
        self.prec.contains(&self.ctx.values(m, &-e))
    }

    fn same(&self, o: &Pdo) -> Result<()> {
        self.ctx.check_same(&o.ctx)
    }

    pub fn add(&self, o: &Pdo) -> Result<Pdo> {
        self.same(o)?;
        let mut t = self.terms.clone();
        for (e, p) in &o.terms {
            t.entry(e.clone())
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

    pub fn sub(&self, o: &Pdo) -> Result<Pdo> {
        self.add(&o.neg())
    }

    pub fn neg(&self) -> Pdo {
        Pdo {
            ctx: self.ctx.clone(),
            terms: self
                .terms
                .iter()
                .map(|(e, p)| (e.clone(), p.neg()))
                .collect(),
            prec: self.prec.clone(),
        }
    }

    pub fn scale(&self, c: &Q) -> Pdo {
        let terms = if c.is_zero() {
            Terms::new()
        } else {
            self.terms
                .iter()
                .map(|(e, p)| (e.clone(), p.scale(c)))
                .collect()
        };
        Pdo {
            ctx: self.ctx.clone(),
            terms,
            prec: self.prec.clone(),
        }
    }

    /// Generalized Leibniz product.
    pub fn mul(&self, o: &Pdo) -> Result<Pdo> {
        self.same(o)?;
        let ctx = &self.ctx;
        let prec = Prec::product(&self.prec, &o.prec);
        let a = Flat::new(ctx, Kind::Operator, &self.terms);
        let b = Flat::new(ctx, Kind::Operator, &o.terms);
        let wcap = prec.cap[F_WEIGHT];
        let units: Vec<usize> = (0..ctx.n).map(|i| ctx.unit_slot(i)).collect();
        let mut acc = Acc::default();
        let mut vals = vec![0i64; prec.k()];
        for (ea, ma, ca, va) in &a.items {
            for (eb, mb, cb, vb) in &b.items {
                if wcap != INF && va[0] + vb[0] > wcap {
                    break;
                }
                for j in 0..vals.len() {
                    vals[j] = va[j] + vb[j];
                }
                if !prec.contains(&vals) {
                    continue;
                }
                leibniz_terms(ctx, &units, ea, ma, eb, mb, &(*ca * *cb), &mut acc);
            }
        }
        Ok(Self::with_prec(ctx, acc.into_terms(), prec))
    }

    /// `[A, B] = AB - BA`.
    pub fn commutator(&self, o: &Pdo) -> Result<Pdo> {
        self.mul(o)?.sub(&o.mul(self)?)
    }

    /// The `+` or `-` part under the context's splitting mode.
    pub fn split(&self, part: Part) -> Pdo {
        self.split_with(part, self.ctx.split)
    }

    pub fn plus(&self) -> Pdo {
        self.split(Part::Plus)
    }

    pub fn minus(&self) -> Pdo {
        self.split(Part::Minus)
    }

    pub fn split_with(&self, part: Part, mode: SplitMode) -> Pdo {
        let zero = MultiIndex::zero(self.ctx.n);
        let terms = self
            .terms
            .iter()
            .filter(|(e, _)| is_plus(e, &zero, mode) == (part == Part::Plus))
            .map(|(e, p)| (e.clone(), p.clone()))
            .collect();
        Pdo {
            ctx: self.ctx.clone(),
            terms,
            prec: self.prec.clone(),
        }
    }

    /// Neumann inverse of `1 + Q`, where some capped functional is strictly
    /// positive on the support of `Q`.
    pub fn invert(&self) -> Result<Pdo> {
        let one = Pdo::one(&self.ctx);
        let mut q = self.sub(&one)?;
        // Cancelling the unit term leaves the stored support as the best
        // available lower bound; the caller guarantees that `P - 1` has no
        // terms below it outside the exact region.
        let lb = support_lb(&self.ctx, Kind::Operator, &q.terms);
        for (j, l) in lb.into_iter().enumerate() {
            if l != INF && !self.ctx.series_only(j) {
                q.prec.tighten_lb(j, l);
            }
        }
        if q.is_zero() && q.prec.lb.iter().all(|&l| l == INF) {
            return Ok(one.truncated(self.prec.clone()));
        }
        let ok = (0..q.prec.k()).any(|j| {
            !self.ctx.series_only(j)
                && q.prec.cap[j] != INF
                && q.prec.lb[j] != INF
                && q.prec.lb[j] >= 1
        });
        if !ok && !q.is_zero() {
            return Err(Error::NotInvertible(
                "P - 1 is not small in any truncated direction (need weight or non-unit degree >= 1)".into(),
            ));
        }
        let mq = q.neg();
        let mut sum = one.clone();
        let mut pw = one;
        loop {
            pw = pw.mul(&mq)?;
            sum = sum.add(&pw)?;
            if pw.is_zero() {
                break;
            }
        }
        Ok(sum)
    }

    /// `L_1^{a_1} ··· L_N^{a_N}`.
    pub fn pow(a: &MultiIndex, basis: &[Pdo]) -> Result<Pdo> {
        let ctx = basis
            .first()
            .map(|p| p.ctx.clone())
            .ok_or_else(|| Error::Usage("empty operator basis".into()))?;
        if basis.len() != ctx.n || a.len() != ctx.n {
            return Err(Error::Usage(
                "pow needs one exponent and one operator per variable".into(),
            ));
        }
        if !MultiIndex::zero(ctx.n).subset_of(a) {
            return Err(Error::Usage(format!(
                "pow exponent {a} has a negative entry"
            )));
        }
        let mut r = Pdo::one(&ctx);
        for (i, l) in basis.iter().enumerate() {
            for _ in 0..a.get(i) {
                r = r.mul(l)?;
            }
        }
        Ok(r)
    }

    /// Formal adjoint `Σ (-∂)^α ∘ a_α`, in normal form.
    pub fn adjoint(&self) -> Result<Pdo> {
        let ctx = &self.ctx;
        let units: Vec<usize> = (0..ctx.n).map(|i| ctx.unit_slot(i)).collect();
        let zero = MultiIndex::zero(ctx.n);
        let mut acc = Acc::default();
        for (e, p) in &self.terms {
            let sign = if e.total().rem_euclid(2) == 0 {
                Q::one()
            } else {
                -Q::one()
            };
            for (m, c) in p.iter() {
                leibniz_terms(ctx, &units, e, &Mono::ONE, &zero, m, &(&sign * c), &mut acc);
            }
        }
        // Each term keeps its functional values, so the region is unchanged.
        Ok(Self::with_prec(ctx, acc.into_terms(), self.prec.clone()))
    }

    /// `∂/∂t` in slot `k`, coefficientwise.
    pub fn derive_t(&self, k: usize) -> Pdo {
        let by: Vec<i64> = self.ctx.time_values(k).iter().map(|v| -v).collect();
        let terms = self
            .terms
            .iter()
            .map(|(e, p)| (e.clone(), p.derive(k)))
            .filter(|(_, p)| !p.is_zero())
            .collect();
        Self::with_prec(&self.ctx, terms, self.prec.shifted(&by))
    }

    /// `Σ a_α x^{-α}`.
    pub fn symbol(&self) -> XSeries {
        let terms = self.terms.iter().map(|(e, p)| (-e, p.clone())).collect();
        XSeries::with_prec(&self.ctx, terms, self.prec.clone())
    }

    /// The operator whose symbol is `sym`. Caps on the time part of the
    /// grade, which operators cannot carry, are traded for grade and weight
    /// caps using the ∂-box.
    pub fn from_symbol(sym: &XSeries) -> Result<Pdo> {
        let ctx = sym.ctx().clone();
        let mut prec = sym.prec().clone();
        let n = ctx.n;
        if (0..prec.k()).any(|j| ctx.series_only(j) && prec.cap[j] != INF) {
            let (_, hi) = ctx.d_box.clone().ok_or_else(|| {
                Error::Usage("converting a truncated symbol needs a ∂-box".into())
            })?;
            for i in 0..n {
                let c = prec.cap[ctx.f_y(i)];
                if c != INF {
                    // y_i = grade_i + e_i <= grade_i + hi_i
                    prec.lower_cap(crate::algebra::ctx::F_GRADE0 + i, c - hi.get(i));
                }
            }
            let c = prec.cap[crate::algebra::ctx::F_TDEG];
            if c != INF {
                // Every time has weight >= wmin, and Σ d_i y_i = weight + <d, e>.
                let wmin = (0..ctx.nt()).map(|k| ctx.time_weight(k)).min().unwrap_or(1);
                prec.lower_cap(F_WEIGHT, c * wmin - hi.dot(&ctx.grading));
            }
        }
        let terms = sym
            .term_map()
            .iter()
            .map(|(f, p)| (-f, p.clone()))
            .collect();
        Ok(Self::with_prec(&ctx, terms, prec))
    }

    /// Whether `self - 1` only has exponents in the minus part.
    pub fn is_unipotent(&self) -> bool {
        let zero = MultiIndex::zero(self.ctx.n);
        self.terms.iter().all(|(e, p)| {
            if e.is_zero() {
                p == &TimePoly::one()
            } else {
                !is_plus(e, &zero, self.ctx.split)
            }
        })
    }

    pub fn diff_on_common(&self, o: &Pdo) -> Result<Option<(MultiIndex, Mono, Q)>> {
        let d = self.sub(o)?;
        Ok(d.terms
            .iter()
            .next()
            .and_then(|(e, p)| p.iter().next().map(|(m, c)| (e.clone(), *m, c.clone()))))
    }

    pub fn eq_on_common(&self, o: &Pdo) -> Result<bool> {
        Ok(self.diff_on_common(o)?.is_none())
    }

    /// Keep only the terms whose time monomial satisfies `keep`. The region
    /// is unchanged.
    pub(crate) fn filter_monos(&self, keep: impl Fn(&Mono) -> bool) -> Pdo {
        let terms = self
            .terms
            .iter()
            .map(|(e, p)| (e.clone(), p.filter(&keep)))
            .filter(|(_, p)| !p.is_zero())
            .collect();
        Pdo {
            ctx: self.ctx.clone(),
            terms,
            prec: self.prec.clone(),
        }
    }

    pub(crate) fn from_parts(ctx: &CtxRef, terms: Terms, prec: Prec) -> Pdo {
        Self::with_prec(ctx, terms, prec)
    }
}

/// Add `c·t^{ma} ∂^{ea} ∘ t^{mb} ∂^{eb}` in normal form to `acc`.
#[allow(clippy::too_many_arguments)]
fn leibniz_terms(
    ctx: &Ctx,
    units: &[usize],
    ea: &MultiIndex,
    ma: &Mono,
    eb: &MultiIndex,
    mb: &Mono,
    base: &Q,
    acc: &mut Acc,
) {
    let sum = ea + eb;
    // γ ranges over the box 0 ⊆ γ with γ_i bounded by the
    // t_{e_i}-degree of b and, for α_i >= 0, by α_i.
    let bound: Vec<u32> = (0..ctx.n)
        .map(|i| {
            let d = mb.get(units[i]);
            let a = ea.get(i);
            if a >= 0 {
                d.min(a as u32)
            } else {
                d
            }
        })
        .collect();
    let mut gamma = vec![0u32; ctx.n];
    loop {
        let mut c = BigInt::one();
        let mut m = *mb;
        for i in 0..ctx.n {
            let g = gamma[i];
            if g > 0 {
                c *= gen_binom_int(ea.get(i), g);
                let d = mb.get(units[i]);
                for j in 0..g {
                    c *= BigInt::from(d - j);
                }
                m = m.with(units[i], d - g);
            }
        }
        if !c.is_zero() {
            let e = MultiIndex::new((0..ctx.n).map(|i| sum.get(i) - gamma[i] as i64).collect());
            acc.add(e, ma.mul(&m), base * Q::from_integer(c));
        }
        // next γ
        let mut i = 0;
        loop {
            if i == ctx.n {
                break;
            }
            if gamma[i] < bound[i] {
                gamma[i] += 1;
                break;
            }
            gamma[i] = 0;
            i += 1;
        }
        if i == ctx.n {
            break;
        }
    }
}

pub(crate) fn is_plus(e: &MultiIndex, zero: &MultiIndex, mode: SplitMode) -> bool {
    match mode {
        SplitMode::Revlex => e.revlex_sign() >= 0,
        SplitMode::Componentwise => zero.subset_of(e),
    }
}

impl fmt::Debug for Pdo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Pdo[")?;
        for (i, (e, p)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{p:?}·∂{e:?}")?;
        }
        write!(f, "]")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::ctx::Ctx;
    use crate::algebra::timepoly::q;

    fn mi(v: &[i64]) -> MultiIndex {
        MultiIndex::new(v.to_vec())
    }

    fn ctx1() -> CtxRef {
        Ctx::plain(1, &[mi(&[1])], 3, 12).unwrap()
    }

    #[test]
    fn product_rule() {
        let c = ctx1();
        let u = Pdo::monomial(&c, mi(&[0]), TimePoly::var(0));
        let p = Pdo::d(&c, 0).mul(&u).unwrap();
        let want = Pdo::from_terms(
            &c,
            vec![(mi(&[1]), TimePoly::var(0)), (mi(&[0]), TimePoly::one())],
        );
        assert!(p.eq_on_common(&want).unwrap());
    }

    #[test]
    fn inverse_derivative_past_coefficient() {
        let c = ctx1();
        let u = Pdo::monomial(&c, mi(&[0]), TimePoly::var(0));
        let di = Pdo::monomial(&c, mi(&[-1]), TimePoly::one());
        let p = di.mul(&u).unwrap();
        let want = Pdo::from_terms(
            &c,
            vec![
                (mi(&[-1]), TimePoly::var(0)),
                (mi(&[-2]), TimePoly::constant(q(-1))),
            ],
        );
        assert!(p.eq_on_common(&want).unwrap());
    }

    #[test]
    fn split_examples() {
        let c = Ctx::plain(2, &[mi(&[1, 0]), mi(&[0, 1])], 1, 10).unwrap();
        let p = Pdo::from_terms(
            &c,
            vec![
                (mi(&[1, -1]), TimePoly::constant(q(2))),
                (mi(&[-3, 0]), TimePoly::constant(q(5))),
            ],
        );
        assert!(p.plus().is_zero());
        assert!(p.minus().eq_on_common(&p).unwrap());
        let r = Pdo::monomial(&c, mi(&[-1, 2]), TimePoly::one());
        assert!(!r.plus().is_zero());
        assert!(r.split_with(Part::Plus, SplitMode::Componentwise).is_zero());
    }

    #[test]
    fn invert_constant() {
        let c = ctx1();
        let p = Pdo::from_terms(
            &c,
            vec![
                (mi(&[0]), TimePoly::one()),
                (mi(&[-1]), TimePoly::constant(q(3))),
            ],
        );
        let inv = p.invert().unwrap();
        assert_eq!(inv.coeff(&mi(&[-2])), TimePoly::constant(q(9)));
        assert!(p.mul(&inv).unwrap().eq_on_common(&Pdo::one(&c)).unwrap());
    }

    #[test]
    fn adjoint_of_derivative() {
        let c = ctx1();
        let a = Pdo::d(&c, 0).adjoint().unwrap();
        assert!(a.eq_on_common(&Pdo::d(&c, 0).neg()).unwrap());
    }
}
