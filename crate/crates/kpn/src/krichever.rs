//! Points of the Grassmannian from local expansions of functions on a
//! variety with a marked point and divisors through it.

use std::collections::{BTreeMap, BTreeSet};

use log::debug;
use num_traits::Zero;

use crate::algebra::{q, CtxRef, Mono, MultiIndex, TimePoly, XSeries, Q};
use crate::error::{Error, Result};
use crate::grassmann::{F0Report, GrPoint};
use crate::hierarchy::{integrate_flows, DressingOp};
use crate::pdo::Pdo;

/// A local expansion together with the pole multi-order it is allowed.
#[derive(Clone, Debug)]
pub struct Generator {
    pub pole: MultiIndex,
    pub series: XSeries,
}

#[derive(Clone, Debug)]
pub struct GeometryData {
    pub n_vars: usize,
    pub name: Option<String>,
    pub params: BTreeMap<String, Vec<Q>>,
    pub generators: Vec<Generator>,
}

/// Which generator monomials enter the ring.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum ValuationFilter {
    /// Keep `f` with `v(f) ⊆ 0`.
    #[default]
    Poles,
    /// Keep `f` with `0 ⊆ v(f)`: only functions regular at the point.
    Literal,
}

pub const BUILTINS: [&str; 6] = ["p1n", "p1-multi", "cusp", "node", "elliptic", "p2-lines"];

fn window(ctx: &CtxRef) -> Result<(MultiIndex, MultiIndex)> {
    ctx.x_window
        .clone()
        .ok_or_else(|| Error::Usage("geometry needs an x-window".into()))
}

fn param(params: &BTreeMap<String, Vec<Q>>, key: &str, len: usize) -> Result<Vec<Q>> {
    let v = params
        .get(key)
        .ok_or_else(|| Error::Geometry(format!("missing parameter {key}")))?;
    if v.len() != len {
        return Err(Error::Geometry(format!(
            "parameter {key} needs {len} values, got {}",
            v.len()
        )));
    }
    Ok(v.clone())
}

fn mono(ctx: &CtxRef, f: MultiIndex, c: Q) -> XSeries {
    XSeries::monomial(ctx, f, TimePoly::constant(c))
}

/// `1/(x_i - c)` expanded at 0 one step past the window, so that the clip
/// records where it stops being exact.
fn pole_at(ctx: &CtxRef, i: usize, c: &Q, hi: i64) -> XSeries {
    let n = ctx.n;
    let mut terms = Vec::new();
    let mut coef = -c.recip();
    for k in 0..=hi.max(0) + 1 {
        terms.push((MultiIndex::unit(n, i).scale(k), coef.clone()));
        coef /= c;
    }
    XSeries::from_rationals(ctx, terms)
}

/// Laurent coefficients of `℘ = x^{-2} + Σ_{k≥2} c_k x^{2k-2}` up to `c_kmax`.
pub fn weierstrass_coefficients(g2: &Q, g3: &Q, kmax: usize) -> Vec<Q> {
    let mut c = vec![Q::zero(); kmax.max(3) + 1];
    c[2] = g2 / q(20);
    c[3] = g3 / q(28);
    for k in 4..=kmax {
        let mut s = Q::zero();
        for m in 2..=k - 2 {
            s += &c[m] * &c[k - m];
        }
        c[k] = s * q(3) / q(((2 * k + 1) * (k - 3)) as i64);
    }
    c.truncate(kmax + 1);
    c
}

/// `(℘, ℘')` in the local coordinate, through one step past the window.
pub fn weierstrass_pair(ctx: &CtxRef, g2: &Q, g3: &Q) -> Result<(XSeries, XSeries)> {
    let (_, hi) = window(ctx)?;
    let top = hi.get(0) + 1;
    // ℘' loses one order, so ℘ runs one step further.
    let kmax = ((top + 4) / 2).max(3) as usize;
    let c = weierstrass_coefficients(g2, g3, kmax);
    let mut p = vec![(MultiIndex::new(vec![-2]), q(1))];
    let mut dp = vec![(MultiIndex::new(vec![-3]), q(-2))];
    for (k, ck) in c.iter().enumerate().skip(2) {
        let e = 2 * k as i64 - 2;
        p.push((MultiIndex::new(vec![e]), ck.clone()));
        dp.push((MultiIndex::new(vec![e - 1]), ck * q(e)));
    }
    Ok((
        XSeries::from_rationals(ctx, p),
        XSeries::from_rationals(ctx, dp),
    ))
}

/// The builtin geometries, expanded in the window of `ctx`.
pub fn builtin_geometry(
    ctx: &CtxRef,
    name: &str,
    params: &BTreeMap<String, Vec<Q>>,
) -> Result<GeometryData> {
    let n = ctx.n;
    let (_, hi) = window(ctx)?;
    let one = Generator {
        pole: MultiIndex::zero(n),
        series: XSeries::one(ctx),
    };
    let inv = |i: usize| Generator {
        pole: MultiIndex::unit(n, i),
        series: mono(ctx, MultiIndex::unit(n, i).scale(-1), q(1)),
    };
    let need_n1 = |what: &str| -> Result<()> {
        if n != 1 {
            return Err(Error::Geometry(format!(
                "{what} is a curve: n_vars must be 1"
            )));
        }
        Ok(())
    };
    let mut gens = vec![one];
    match name {
        "p1n" => gens.extend((0..n).map(inv)),
        "p1-multi" => {
            let cs = param(params, "c", n)?;
            for (i, c) in cs.iter().enumerate() {
                if c.is_zero() {
                    return Err(Error::Geometry(format!("c_{} must be nonzero", i + 1)));
                }
                gens.push(inv(i));
                gens.push(Generator {
                    pole: MultiIndex::unit(n, i),
                    series: pole_at(ctx, i, c, hi.get(i)),
                });
            }
        }
        "cusp" => {
            need_n1(name)?;
            for k in [2, 3] {
                gens.push(Generator {
                    pole: MultiIndex::new(vec![k]),
                    series: mono(ctx, MultiIndex::new(vec![-k]), q(1)),
                });
            }
        }
        "node" => {
            need_n1(name)?;
            let l = param(params, "lambda", 1)?.remove(0);
            if l.is_zero() {
                return Err(Error::Geometry("lambda must be nonzero".into()));
            }
            let l2 = &l * &l;
            let x = |k: i64, c: Q| (MultiIndex::new(vec![k]), c);
            gens.push(Generator {
                pole: MultiIndex::new(vec![2]),
                series: XSeries::from_rationals(ctx, vec![x(-2, q(1)), x(0, -l2.clone())]),
            });
            gens.push(Generator {
                pole: MultiIndex::new(vec![3]),
                series: XSeries::from_rationals(ctx, vec![x(-3, q(1)), x(-1, -l2)]),
            });
        }
        "elliptic" => {
            need_n1(name)?;
            let g2 = param(params, "g2", 1)?.remove(0);
            let g3 = param(params, "g3", 1)?.remove(0);
            let disc = &g2 * &g2 * &g2 - q(27) * &g3 * &g3;
            if disc.is_zero() {
                return Err(Error::Geometry(
                    "g2^3 = 27 g3^2: the cubic is singular".into(),
                ));
            }
            let (p, dp) = weierstrass_pair(ctx, &g2, &g3)?;
            gens.push(Generator {
                pole: MultiIndex::new(vec![2]),
                series: p,
            });
            gens.push(Generator {
                pole: MultiIndex::new(vec![3]),
                series: dp,
            });
        }
        "p2-lines" => {
            if n != 2 {
                return Err(Error::Geometry("p2-lines needs n_vars = 2".into()));
            }
            gens.extend((0..2).map(inv));
            // The section x_2/x_1 of the line bundle of the first line.
            gens.push(Generator {
                pole: MultiIndex::new(vec![1, 0]),
                series: mono(ctx, MultiIndex::new(vec![-1, 1]), q(1)),
            });
        }
        other => {
            return Err(Error::Geometry(format!(
                "unknown builtin {other}; expected one of {}",
                BUILTINS.join(", ")
            )));
        }
    }
    let data = GeometryData {
        n_vars: n,
        name: Some(name.to_string()),
        params: params.clone(),
        generators: gens,
    };
    data.validate(ctx)?;
    Ok(data)
}

impl GeometryData {
    /// Pole tags contain 0, valuations respect them, and 1 is present.
    pub fn validate(&self, ctx: &CtxRef) -> Result<()> {
        let zero = MultiIndex::zero(self.n_vars);
        if ctx.n != self.n_vars {
            return Err(Error::Geometry(format!(
                "geometry has n_vars {} but the context has {}",
                self.n_vars, ctx.n
            )));
        }
        let mut has_one = false;
        for (j, g) in self.generators.iter().enumerate() {
            if g.pole.len() != self.n_vars || !zero.subset_of(&g.pole) {
                return Err(Error::Geometry(format!(
                    "generator {j}: pole tag {} must be ⊇ 0",
                    g.pole
                )));
            }
            let v = g
                .series
                .valuation()
                .map_err(|_| Error::Geometry(format!("generator {j} vanishes in the window")))?;
            if !(-&g.pole).subset_of(&v) {
                return Err(Error::Geometry(format!(
                    "generator {j}: valuation {v} exceeds pole tag {}",
                    g.pole
                )));
            }
            if g.pole.is_zero() {
                if g.series.sub(&XSeries::one(ctx))?.is_zero() {
                    has_one = true;
                } else {
                    return Err(Error::Geometry(format!(
                        "generator {j}: only the constant 1 may have pole tag 0"
                    )));
                }
            }
        }
        if !has_one {
            return Err(Error::Geometry(
                "generators must include the constant 1".into(),
            ));
        }
        Ok(())
    }
}

/// Products of generators (with their pole tags) whose tags stay within the
/// window.
pub fn generator_monomials(ctx: &CtxRef, g: &GeometryData) -> Result<Vec<(MultiIndex, XSeries)>> {
    let (lo, _) = window(ctx)?;
    let bound = -&lo;
    let gens: Vec<&Generator> = g.generators.iter().filter(|x| !x.pole.is_zero()).collect();
    let mut out = vec![(MultiIndex::zero(ctx.n), XSeries::one(ctx))];
    // Depth-first over non-decreasing generator indices, so each monomial
    // appears once.
    let mut stack: Vec<(usize, MultiIndex, XSeries)> =
        vec![(0, MultiIndex::zero(ctx.n), XSeries::one(ctx))];
    while let Some((start, tag, f)) = stack.pop() {
        for (j, gj) in gens.iter().enumerate().skip(start) {
            let t = &tag + &gj.pole;
            if !t.subset_of(&bound) {
                continue;
            }
            let h = f.mul(&gj.series)?;
            out.push((t.clone(), h.clone()));
            stack.push((j, t, h));
        }
    }
    debug!("geometry: {} generator monomials", out.len());
    Ok(out)
}

fn passes(filter: ValuationFilter, f: &XSeries) -> bool {
    let Ok(v) = f.valuation() else {
        return false;
    };
    let zero = MultiIndex::zero(v.len());
    match filter {
        ValuationFilter::Poles => v.subset_of(&zero),
        ValuationFilter::Literal => zero.subset_of(&v),
    }
}

/// A product of basis elements that does not reduce to zero.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClosureDefect {
    pub left: MultiIndex,
    pub right: MultiIndex,
    pub remainder_at: MultiIndex,
}

#[derive(Clone, Debug, Default)]
pub struct ClosureReport {
    pub checked: usize,
    pub defects: Vec<ClosureDefect>,
    /// Set when positive pivots make the window check meaningless.
    pub skipped: Option<String>,
}

impl ClosureReport {
    pub fn holds(&self) -> bool {
        self.defects.is_empty() && self.skipped.is_none()
    }
}

#[derive(Clone, Debug)]
pub struct RingBasis {
    pub point: GrPoint,
    pub monomials: usize,
    pub dropped: usize,
    pub closure: ClosureReport,
}

/// Span of the filtered generator monomials in reduced form, with a
/// multiplicative closure check inside the window.
pub fn ring_basis(ctx: &CtxRef, g: &GeometryData, filter: ValuationFilter) -> Result<RingBasis> {
    g.validate(ctx)?;
    let monos = generator_monomials(ctx, g)?;
    let count = monos.len();
    let fam: Vec<XSeries> = monos
        .into_iter()
        .map(|(_, f)| f)
        .filter(|f| passes(filter, f))
        .collect();
    let kept = fam.len();
    let (mut point, dropped) = GrPoint::span(ctx, fam)?;
    if g.generators
        .iter()
        .all(|x| x.series.n_terms() == 1 && x.series.is_exact())
    {
        // Monomial rings have monomial elements outside the window too.
        point = point.assume_trivial_outside();
    }
    debug!("ring basis: {count} monomials, {kept} kept, {dropped} dependent");
    let closure = closure_check(&point)?;
    Ok(RingBasis {
        point,
        monomials: count,
        dropped,
        closure,
    })
}

/// Products `u_f u_g` with `f + g` in the window must reduce to zero. Only
/// meaningful when every pivot is `⊆ 0`: then pole order and leading
/// exponent agree and the window holds all of the ring it can see.
pub fn closure_check(p: &GrPoint) -> Result<ClosureReport> {
    let ctx = p.ctx();
    let (lo, _) = window(ctx)?;
    let zero = MultiIndex::zero(ctx.n);
    let leads = p.leading_set();
    if let Some(f) = leads.iter().find(|f| !f.subset_of(&zero)) {
        return Ok(ClosureReport {
            checked: 0,
            defects: vec![],
            skipped: Some(format!("pivot at {f} is not ⊆ 0")),
        });
    }
    let mut rep = ClosureReport::default();
    for (i, f) in leads.iter().enumerate() {
        for g in &leads[i..] {
            if f.is_zero() || g.is_zero() || !lo.subset_of(&(f + g)) {
                continue;
            }
            let prod = p.element(f).unwrap().mul(p.element(g).unwrap())?;
            let r = p.reduce(&prod)?;
            rep.checked += 1;
            if let Ok(v) = r.valuation() {
                rep.defects.push(ClosureDefect {
                    left: f.clone(),
                    right: g.clone(),
                    remainder_at: v,
                });
            }
        }
    }
    Ok(rep)
}

#[derive(Clone, Debug)]
pub struct KricheverPoint {
    pub ring: RingBasis,
    pub f0: F0Report,
}

impl KricheverPoint {
    pub fn point(&self) -> &GrPoint {
        &self.ring.point
    }

    pub fn in_big_cell(&self) -> bool {
        self.f0.holds()
    }
}

pub fn krichever_point(
    ctx: &CtxRef,
    g: &GeometryData,
    filter: ValuationFilter,
) -> Result<KricheverPoint> {
    let ring = ring_basis(ctx, g, filter)?;
    let f0 = ring.point.f0_report()?;
    Ok(KricheverPoint { ring, f0 })
}

/// Exponents `-a` of the window for which `x^{-a}` lies in the point; for
/// ring points these are the pole tags of pure monomials.
pub fn pure_monomial_tags(p: &GrPoint) -> Vec<MultiIndex> {
    p.basis()
        .filter(|(f, u)| !f.is_zero() && u.n_terms() == 1)
        .map(|(f, _)| -f)
        .collect()
}

/// `S0 = 1 - (c + x)^{-1} ∂^{-1}` with the coefficient expanded in the unit
/// time `x = t_1` to the weight cap.
pub fn shifted_cusp_seed(ctx: &CtxRef, c: &Q) -> Result<Pdo> {
    if ctx.n != 1 {
        return Err(Error::Usage("the cusp seed lives in one variable".into()));
    }
    if c.is_zero() {
        return Err(Error::Usage("the shift must be nonzero".into()));
    }
    let slot = ctx.unit_slot(0);
    let mut coef = TimePoly::zero();
    // -(c + x)^{-1} = -Σ (-1)^k x^k / c^{k+1}
    let mut a = -c.recip();
    for k in 0..ctx.weight.max(1) {
        coef.add_term(Mono::ONE.with(slot, k as u32), a.clone());
        a = -a / c;
    }
    Ok(Pdo::from_terms(
        ctx,
        vec![
            (MultiIndex::zero(1), TimePoly::one()),
            (MultiIndex::new(vec![-1]), coef),
        ],
    ))
}

/// Evidence that the cusp ring acts on a shifted point of the big cell.
#[derive(Clone, Debug)]
pub struct CuspCertificate {
    pub shift: Q,
    pub dressing: DressingOp,
    pub certificate: BTreeSet<MultiIndex>,
    /// Basis exponents `f` of the shifted point for which `x^{-2} u_f` or
    /// `x^{-3} u_f` does not reduce to zero.
    pub module_defects: Vec<MultiIndex>,
}

impl CuspCertificate {
    pub fn holds(&self) -> bool {
        let has = |k: i64| self.certificate.contains(&MultiIndex::new(vec![k]));
        has(2) && has(3) && !has(1) && self.module_defects.is_empty()
    }
}

/// Certify the cusp through the one-variable pipeline: the shifted seed
/// flows to a dressing operator whose second and third Lax powers are
/// differential, and the ring `C[x^{-2}, x^{-3}]` acts on the point of its
/// wave function.
pub fn certify_cusp(ctx: &CtxRef, c: &Q, search_box: &MultiIndex) -> Result<CuspCertificate> {
    let s = integrate_flows(&shifted_cusp_seed(ctx, c)?)?;
    let certificate = crate::hierarchy::finite_gap_certificate(&s, search_box)?;
    let wave = crate::hierarchy::wave_function(&s)?;
    let p = crate::grassmann::point_from_wave(&wave)?;
    let (lo, _) = window(ctx)?;
    let mut module_defects = Vec::new();
    for (f, u) in p.basis() {
        for k in [2, 3] {
            let shift = MultiIndex::new(vec![-k]);
            if !lo.subset_of(&(f + &shift)) {
                continue;
            }
            if p.reduce(&u.shift(&shift))?.valuation().is_ok() {
                module_defects.push(f.clone());
                break;
            }
        }
    }
    Ok(CuspCertificate {
        shift: c.clone(),
        dressing: s,
        certificate,
        module_defects,
    })
}

/// Predicted leading set of a ring in one variable with the given
/// generator pole orders: minus the numerical semigroup they generate.
pub fn semigroup_leads(gens: &[i64], bound: i64) -> Vec<i64> {
    let mut reach = vec![false; bound as usize + 1];
    reach[0] = true;
    for k in 1..=bound as usize {
        reach[k] = gens
            .iter()
            .any(|&g| g as usize <= k && reach[k - g as usize]);
    }
    let mut out: Vec<i64> = (0..=bound)
        .filter(|&k| reach[k as usize])
        .map(|k| -k)
        .collect();
    out.sort();
    out
}

/// Positive integers outside the semigroup.
pub fn semigroup_gaps(gens: &[i64], bound: i64) -> Vec<i64> {
    let leads: BTreeSet<i64> = semigroup_leads(gens, bound).into_iter().collect();
    (1..=bound).filter(|k| !leads.contains(&-k)).collect()
}
