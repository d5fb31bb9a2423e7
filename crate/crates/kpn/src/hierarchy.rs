//! Dressing, flow integration and the Lax and wave-function identities.

use std::collections::BTreeSet;

use log::{debug, info};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::ctx::{CtxRef, F_NDEG, F_WEIGHT};
use crate::algebra::graded::{Acc, Terms};
use crate::algebra::multi::MultiIndex;
use crate::algebra::prec::Prec;
use crate::algebra::timepoly::{q, Mono, TimePoly};
use crate::algebra::xseries::{build_exponential, wave_exponential, XSeries};
use crate::error::{Error, Result};
use crate::pdo::Pdo;

/// `L_1, ..., L_N`.
#[derive(Clone, Debug)]
pub struct LaxTuple {
    pub ops: Vec<Pdo>,
}

#[derive(Clone, Debug)]
pub struct DressingOp {
    pub s: Pdo,
    pub s_inv: Option<Pdo>,
}

#[derive(Clone, Debug)]
pub struct WaveFunction {
    pub w: XSeries,
    pub sym: XSeries,
}

/// A mismatch between two flows recovering the same coefficient.
#[derive(Clone, Debug)]
pub struct FlowDefect {
    pub beta: MultiIndex,
    pub gamma: MultiIndex,
    pub exponent: MultiIndex,
    pub mono: Mono,
    pub degree: u32,
    pub value: crate::algebra::timepoly::Q,
}

impl DressingOp {
    pub fn new(s: Pdo) -> Result<Self> {
        if !s.is_unipotent() {
            return Err(Error::Usage(
                "a dressing operator must be 1 plus terms of the minus part".into(),
            ));
        }
        Ok(DressingOp { s, s_inv: None })
    }

    pub fn identity(ctx: &CtxRef) -> Self {
        DressingOp {
            s: Pdo::one(ctx),
            s_inv: Some(Pdo::one(ctx)),
        }
    }

    pub fn ctx(&self) -> &CtxRef {
        self.s.ctx()
    }

    pub fn inverse(&self) -> Result<Pdo> {
        match &self.s_inv {
            Some(i) => Ok(i.clone()),
            None => self.s.invert(),
        }
    }

    pub fn with_inverse(mut self) -> Result<Self> {
        if self.s_inv.is_none() {
            self.s_inv = Some(self.s.invert()?);
        }
        Ok(self)
    }

    /// `S` evaluated at zero in all unit times.
    pub fn at_unit_zero(&self) -> Pdo {
        let ctx = self.ctx().clone();
        self.s
            .filter_monos(|m| (0..ctx.n).all(|i| m.get(ctx.unit_slot(i)) == 0))
    }

    /// `S` evaluated at zero in all non-unit times.
    pub fn at_flow_zero(&self) -> Pdo {
        let ctx = self.ctx().clone();
        self.s
            .filter_monos(|m| (0..ctx.nt()).all(|k| ctx.is_unit_slot(k) || m.get(k) == 0))
    }
}

impl LaxTuple {
    pub fn ctx(&self) -> &CtxRef {
        self.ops[0].ctx()
    }

    /// `L^a = L_1^{a_1} ··· L_N^{a_N}`.
    pub fn power(&self, a: &MultiIndex) -> Result<Pdo> {
        Pdo::pow(a, &self.ops)
    }

    /// Exponents of `L_i - ∂_i` that are not componentwise below zero.
    pub fn shape_exceptions(&self) -> Vec<(usize, MultiIndex)> {
        let n = self.ctx().n;
        let zero = MultiIndex::zero(n);
        let mut out = Vec::new();
        for (i, l) in self.ops.iter().enumerate() {
            let ei = MultiIndex::unit(n, i);
            for (e, _) in l.terms() {
                if *e != ei && !e.proper_subset_of(&zero) {
                    out.push((i, e.clone()));
                }
            }
        }
        out
    }

    /// First nonvanishing `[L_i, L_j]`, if any.
    pub fn commutator_defect(&self) -> Result<Option<(usize, usize, Pdo)>> {
        for i in 0..self.ops.len() {
            for j in i + 1..self.ops.len() {
                let c = self.ops[i].commutator(&self.ops[j])?;
                if !c.is_zero() {
                    return Ok(Some((i, j, c)));
                }
            }
        }
        Ok(None)
    }
}

/// `L_i = S ∂_i S^{-1}`.
pub fn dress(s: &DressingOp) -> Result<LaxTuple> {
    let ctx = s.ctx().clone();
    let inv = s.inverse()?;
    let mut ops = Vec::with_capacity(ctx.n);
    for i in 0..ctx.n {
        let l = s.s.mul(&Pdo::d(&ctx, i))?.mul(&inv)?;
        let lp = l.plus();
        if !lp.eq_on_common(&Pdo::d(&ctx, i))? {
            return Err(Error::Consistency(format!(
                "(L_{})+ is not ∂_{}: {lp:?}",
                i + 1,
                i + 1
            )));
        }
        ops.push(l);
    }
    let lax = LaxTuple { ops };
    if let Some((i, j, c)) = lax.commutator_defect()? {
        return Err(Error::Consistency(format!(
            "[L_{}, L_{}] = {c:?}",
            i + 1,
            j + 1
        )));
    }
    Ok(lax)
}

/// Recover `S` from `L` by integrating `∂_{t_{e_i}} S = -(L_i - ∂_i) S` in
/// increasing weight. `normalization` is `S` at zero unit times.
pub fn undress(lax: &LaxTuple, normalization: &Pdo) -> Result<DressingOp> {
    let ctx = lax.ctx().clone();
    let n = ctx.n;
    let shifted: Vec<Pdo> = (0..n)
        .map(|i| lax.ops[i].sub(&Pdo::d(&ctx, i)).map(|p| p.neg()))
        .collect::<Result<_>>()?;
    for (e, p) in normalization.terms() {
        if p.iter()
            .any(|(m, _)| (0..n).any(|i| m.get(ctx.unit_slot(i)) > 0))
        {
            return Err(Error::Usage(format!(
                "normalization coefficient at {e} depends on a unit time"
            )));
        }
    }
    let wmin = normalization.prec().lb[F_WEIGHT].min(1);
    let mut s = capped_weight(normalization, wmin - 1);
    let mut w = wmin;
    while w <= ctx.weight {
        let mut pieces: Vec<(usize, Pdo)> = Vec::new();
        for (i, m_i) in shifted.iter().enumerate() {
            let r = m_i.mul(&s)?;
            let di = ctx.grading[i];
            let slot = ctx.unit_slot(i);
            let mut acc = Acc::default();
            for (e, p) in r.terms() {
                for (m, c) in p.iter() {
                    if ctx.values(m, &-e)[F_WEIGHT] != w - di {
                        continue;
                    }
                    let k = m.get(slot);
                    acc.add(e.clone(), m.with(slot, k + 1), c / q(k as i64 + 1));
                }
            }
            let prec = r.prec().shifted(&ctx.time_values(slot));
            pieces.push((i, Pdo::from_parts(&ctx, acc.into_terms(), prec)));
        }
        // Cross-check: two unit flows must agree on shared monomials.
        for a in 0..pieces.len() {
            for b in a + 1..pieces.len() {
                let (ia, pa) = &pieces[a];
                let (ib, pb) = &pieces[b];
                let sa = ctx.unit_slot(*ia);
                let sb = ctx.unit_slot(*ib);
                let d = pa
                    .filter_monos(|m| m.get(sb) > 0)
                    .sub(&pb.filter_monos(|m| m.get(sa) > 0))?;
                let first = d.terms().next().map(|(e, p)| format!("∂^{e}: {p:?}"));
                if let Some(at) = first {
                    return Err(Error::NotDressable(format!(
                        "flows of t_e{} and t_e{} disagree at {at}",
                        ia + 1,
                        ib + 1
                    )));
                }
            }
        }
        let mut next_terms: Terms = s.term_map().clone();
        let mut prec = s.prec().clone();
        prec.cap[F_WEIGHT] = w;
        for (i, p) in &pieces {
            prec = Prec::meet(&prec, p.prec());
            let earlier: Vec<usize> = (0..*i).map(|j| ctx.unit_slot(j)).collect();
            for (e, c) in p.terms() {
                let keep = c.filter(|m| earlier.iter().all(|&k| m.get(k) == 0));
                next_terms
                    .entry(e.clone())
                    .or_insert_with(TimePoly::zero)
                    .add_assign_ref(&keep);
            }
        }
        prec.cap[F_WEIGHT] = prec.cap[F_WEIGHT].min(w);
        for (e, p) in normalization.terms() {
            for (m, c) in p.iter() {
                if ctx.values(m, &-e)[F_WEIGHT] == w {
                    next_terms
                        .entry(e.clone())
                        .or_insert_with(TimePoly::zero)
                        .add_term(*m, c.clone());
                }
            }
        }
        next_terms.retain(|_, p| !p.is_zero());
        s = Pdo::from_parts(&ctx, next_terms, prec);
        w += 1;
    }
    let mut p = s.prec().clone();
    p = Prec::meet(&p, normalization.prec());
    DressingOp::new(s.truncated(p))
}

fn capped_weight(p: &Pdo, w: i64) -> Pdo {
    let mut prec = p.prec().clone();
    prec.lower_cap(F_WEIGHT, w);
    p.truncated(prec)
}

/// Solve `∂_β S = -(S ∂^β S^{-1})_- S` for all active non-unit `β`, with
/// `S = S0` at zero non-unit times. Coefficients recovered from different
/// flows are cross-checked; any mismatch is an error.
pub fn integrate_flows(s0: &Pdo) -> Result<DressingOp> {
    let (s, defects) = integrate_flows_checked(s0)?;
    if let Some(d) = defects.first() {
        return Err(Error::FlowInconsistency(format!(
            "{} mismatches; first: flows {} and {} disagree on {:?}·∂^{} at non-unit degree {}",
            defects.len(),
            d.beta,
            d.gamma,
            d.mono,
            d.exponent,
            d.degree
        )));
    }
    Ok(s)
}

/// As [`integrate_flows`], returning the mismatches instead of failing.
/// The returned `S` takes each coefficient from the first flow that reaches
/// it.
pub fn integrate_flows_checked(s0: &Pdo) -> Result<(DressingOp, Vec<FlowDefect>)> {
    let ctx = s0.ctx().clone();
    check_seed(s0)?;
    let flows: Vec<(MultiIndex, usize)> = ctx
        .flow_times()
        .into_iter()
        .map(|b| {
            let k = ctx.time_slot(&b).expect("flow time has a slot");
            (b, k)
        })
        .collect();
    let mut s = {
        let mut p = s0.prec().clone();
        p.lower_cap(F_NDEG, 0);
        s0.truncated(p)
    };
    let mut defects = Vec::new();
    for m in 0..ctx.t_degree {
        let inv = s.invert()?;
        let mut pieces: Vec<(usize, Pdo)> = Vec::new();
        for (b, slot) in &flows {
            let lb = s
                .mul(&Pdo::monomial(&ctx, b.clone(), TimePoly::one()))?
                .mul(&inv)?;
            let r = lb.minus().mul(&s)?.neg();
            let mut acc = Acc::default();
            for (e, p) in r.terms() {
                for (mono, c) in p.iter() {
                    if ctx.values(mono, &-e)[F_NDEG] != m as i64 {
                        continue;
                    }
                    let k = mono.get(*slot);
                    acc.add(e.clone(), mono.with(*slot, k + 1), c / q(k as i64 + 1));
                }
            }
            let prec = r.prec().shifted(&ctx.time_values(*slot));
            pieces.push((*slot, Pdo::from_parts(&ctx, acc.into_terms(), prec)));
        }
        for a in 0..pieces.len() {
            for bi in a + 1..pieces.len() {
                let (sa, pa) = &pieces[a];
                let (sb, pb) = &pieces[bi];
                let d = pa
                    .filter_monos(|x| x.get(*sb) > 0)
                    .sub(&pb.filter_monos(|x| x.get(*sa) > 0))?;
                for (e, p) in d.terms() {
                    for (mono, c) in p.iter() {
                        defects.push(FlowDefect {
                            value: c.clone(),
                            beta: ctx.times[*sa].index.clone(),
                            gamma: ctx.times[*sb].index.clone(),
                            exponent: e.clone(),
                            mono: *mono,
                            degree: m + 1,
                        });
                    }
                }
            }
        }
        let mut next_terms: Terms = s.term_map().clone();
        let mut prec = s.prec().clone();
        prec.cap[F_NDEG] = m as i64 + 1;
        for (idx, (slot, p)) in pieces.iter().enumerate() {
            prec = Prec::meet(&prec, p.prec());
            let earlier: Vec<usize> = pieces[..idx].iter().map(|(k, _)| *k).collect();
            let _ = slot;
            for (e, c) in p.terms() {
                let keep = c.filter(|x| earlier.iter().all(|&k| x.get(k) == 0));
                next_terms
                    .entry(e.clone())
                    .or_insert_with(TimePoly::zero)
                    .add_assign_ref(&keep);
            }
        }
        prec.cap[F_NDEG] = prec.cap[F_NDEG].min(m as i64 + 1);
        next_terms.retain(|_, p| !p.is_zero());
        s = Pdo::from_parts(&ctx, next_terms, prec);
        debug!(
            "integrate_flows: degree {} done, {} terms",
            m + 1,
            s.n_terms()
        );
    }
    info!(
        "integrate_flows: {} terms, {} flow mismatches",
        s.n_terms(),
        defects.len()
    );
    Ok((DressingOp { s, s_inv: None }, defects))
}

/// Seeds are `1` plus minus-part terms whose coefficients depend on the
/// unit times only, each of weight at least 1.
pub fn check_seed(s0: &Pdo) -> Result<()> {
    let ctx = s0.ctx();
    if !s0.is_unipotent() {
        return Err(Error::Usage(
            "seed must be 1 plus terms of the minus part".into(),
        ));
    }
    for (e, p) in s0.terms() {
        if e.is_zero() {
            continue;
        }
        for (m, _) in p.iter() {
            if (0..ctx.nt()).any(|k| !ctx.is_unit_slot(k) && m.get(k) > 0) {
                return Err(Error::Usage(format!(
                    "seed coefficient at ∂^{e} depends on a non-unit time"
                )));
            }
            let w = ctx.values(m, &-e)[F_WEIGHT];
            if w < 1 {
                return Err(Error::Usage(format!(
                    "seed term {m:?}·∂^{e} has weight {w} < 1; choose a grading vector that makes it positive"
                )));
            }
        }
    }
    Ok(())
}

pub(crate) fn exponential(ctx: &CtxRef, sign: i64) -> Result<XSeries> {
    if ctx.x_window.is_some() {
        wave_exponential(ctx, sign)
    } else {
        Ok(build_exponential(ctx, sign))
    }
}

/// `∂_a L_i - [(L^a)_+, L_i]`.
pub fn lax_residual(lax: &LaxTuple, a: &MultiIndex, i: usize) -> Result<Pdo> {
    let ctx = lax.ctx();
    let slot = ctx
        .time_slot(a)
        .ok_or_else(|| Error::Usage(format!("time {a} is not active")))?;
    let b = lax.power(a)?.plus();
    let li = &lax.ops[i];
    li.derive_t(slot).sub(&b.commutator(li)?)
}

/// `w = symbol(S) · e^ξ`. With an x-window the exponential carries the
/// unit times to every order the window allows.
pub fn wave_function(s: &DressingOp) -> Result<WaveFunction> {
    let sym = s.s.symbol();
    let w = sym.mul(&exponential(s.ctx(), 1)?)?;
    Ok(WaveFunction { w, sym })
}

/// `e^{-ξ} ∂_a w - symbol((L^a)_+ S)`, which vanishes for solutions.
pub fn wave_residual(
    wave: &WaveFunction,
    lax: &LaxTuple,
    s: &DressingOp,
    a: &MultiIndex,
) -> Result<XSeries> {
    let ctx = s.ctx();
    let slot = ctx
        .time_slot(a)
        .ok_or_else(|| Error::Usage(format!("time {a} is not active")))?;
    let lhs = wave.w.derive_t(slot).mul(&exponential(ctx, -1)?)?;
    let rhs = lax.power(a)?.plus().mul(&s.s)?.symbol();
    lhs.sub(&rhs)
}

/// Indices `0 ⊂ a ⊆ search_box` with `(L^a)_-` vanishing in the exact
/// region.
pub fn finite_gap_certificate(
    s: &DressingOp,
    search_box: &MultiIndex,
) -> Result<BTreeSet<MultiIndex>> {
    let lax = dress(s)?;
    finite_gap_certificate_lax(&lax, search_box)
}

pub fn finite_gap_certificate_lax(
    lax: &LaxTuple,
    search_box: &MultiIndex,
) -> Result<BTreeSet<MultiIndex>> {
    let n = lax.ctx().n;
    let zero = MultiIndex::zero(n);
    if !zero.subset_of(search_box) {
        return Err(Error::Usage("search box must contain 0".into()));
    }
    let mut out = BTreeSet::new();
    for a in MultiIndex::box_iter(&zero, search_box) {
        if a.is_zero() {
            continue;
        }
        if lax.power(&a)?.minus().is_zero() {
            out.insert(a);
        }
    }
    Ok(out)
}

/// `∂_a ∂_b S - ∂_b ∂_a S` is zero by construction on stored polynomials;
/// this checks the flow equations themselves through mixed derivatives:
/// the first mismatch of `∂_b(-(L^a)_- S)` against `∂_a(-(L^b)_- S)`.
pub fn mixed_partials_defect(
    s: &DressingOp,
    a: &MultiIndex,
    b: &MultiIndex,
) -> Result<Option<Pdo>> {
    let ctx = s.ctx();
    let (sa, sb) = match (ctx.time_slot(a), ctx.time_slot(b)) {
        (Some(x), Some(y)) => (x, y),
        _ => return Err(Error::Usage("mixed partials need active times".into())),
    };
    let lax = dress(s)?;
    let fa = lax.power(a)?.minus().mul(&s.s)?.neg();
    let fb = lax.power(b)?.minus().mul(&s.s)?.neg();
    // Direct route: derivatives of the stored S.
    let direct = s.s.derive_t(sa).derive_t(sb);
    // Through the flow equations.
    let via_a = fa.derive_t(sb);
    let via_b = fb.derive_t(sa);
    for d in [direct.sub(&via_a)?, direct.sub(&via_b)?] {
        if !d.is_zero() {
            return Ok(Some(d));
        }
    }
    Ok(None)
}

/// Shape of random seeds: up to `max_terms` exponents `e ⊂ 0` with entries
/// in `[-max_order, 0]`, coefficients polynomial in the unit
/// times of degree at most `max_x_degree` with integer coefficients bounded
/// by `max_coeff`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SeedSpec {
    pub max_terms: usize,
    pub max_order: i64,
    pub max_x_degree: u32,
    pub max_coeff: i64,
}

impl Default for SeedSpec {
    fn default() -> Self {
        SeedSpec {
            max_terms: 2,
            max_order: 2,
            max_x_degree: 1,
            max_coeff: 3,
        }
    }
}

/// A seed `1 + Σ a_e(x) ∂^e` passing [`check_seed`], with at least one
/// coefficient depending on the unit times.
pub fn random_seed<R: Rng>(ctx: &CtxRef, rng: &mut R, spec: &SeedSpec) -> Result<Pdo> {
    let n = ctx.n;
    let zero = MultiIndex::zero(n);
    let r = MultiIndex::new(vec![spec.max_order; n]);
    // Exponents with a positive entry have weight-zero powers, which the
    // ∂-box cannot bound.
    let candidates: Vec<MultiIndex> = MultiIndex::box_iter(&-&r, &zero)
        .into_iter()
        .filter(|e| *e != zero)
        .filter(|e| {
            ctx.d_box
                .as_ref()
                .is_none_or(|(lo, hi)| lo.subset_of(e) && e.subset_of(hi))
        })
        .collect();
    if candidates.is_empty() || spec.max_terms == 0 {
        return Err(Error::Usage(
            "seed spec admits no minus-part exponent".into(),
        ));
    }
    let units: Vec<Mono> = {
        let mut out = vec![Mono::ONE];
        for _ in 0..spec.max_x_degree {
            let mut next = out.clone();
            for m in &out {
                for i in 0..n {
                    let k = ctx.unit_slot(i);
                    next.push(m.with(k, m.get(k) + 1));
                }
            }
            next.sort();
            next.dedup();
            out = next;
        }
        out
    };
    let c = spec.max_coeff.max(1);
    loop {
        let k = rng.gen_range(1..=spec.max_terms.min(candidates.len()));
        let mut picked: Vec<MultiIndex> = Vec::new();
        while picked.len() < k {
            let e = candidates[rng.gen_range(0..candidates.len())].clone();
            if !picked.contains(&e) {
                picked.push(e);
            }
        }
        let mut terms = vec![(zero.clone(), TimePoly::one())];
        for e in picked {
            let mut p = TimePoly::zero();
            for m in &units {
                if ctx.values(m, &-&e)[F_WEIGHT] < 1 || rng.gen_bool(0.5) {
                    continue;
                }
                p.add_term(*m, q(rng.gen_range(-c..=c)));
            }
            terms.push((e, p));
        }
        let s0 = Pdo::from_terms(ctx, terms);
        let depends = s0
            .terms()
            .any(|(e, p)| !e.is_zero() && p.iter().any(|(m, _)| !m.is_one()));
        if depends && check_seed(&s0).is_ok() {
            return Ok(s0);
        }
    }
}
