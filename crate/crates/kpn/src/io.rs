//! JSON forms of the library's values.
//!
//! Rationals are strings `"p/q"` in lowest terms with `q > 0`. Multi-indices
//! are integer arrays. A time polynomial is a list of `{monomial, coeff}`
//! records, a monomial a list of `[time, exponent]` pairs where a `T` time is
//! its index array and an adjoint time `s_i` is `{"s": i}`. Series and
//! operators are lists of `[exponent, polynomial]` pairs in revlex order;
//! their exact regions are separate `precision` records. Monomials are sorted
//! by their serialized text, so output is canonical and round trips are
//! bit-exact.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::Zero;
use serde_json::{json, Value};

use crate::algebra::ctx::{CtxRef, Family, F_GRADE0, F_NDEG, F_TDEG, F_WEIGHT};
use crate::algebra::prec::{Prec, INF, NEG_INF};
use crate::algebra::{Mono, MultiIndex, TimePoly, XSeries, Q};
use crate::error::{Error, Result};
use crate::grassmann::GrPoint;
use crate::krichever::{Generator, GeometryData};
use crate::pdo::Pdo;

fn bad(msg: impl Into<String>) -> Error {
    Error::Serde(msg.into())
}

pub fn format_q(c: &Q) -> String {
    format!("{}/{}", c.numer(), c.denom())
}

/// Accepts `"p/q"` or an integer `"p"`.
pub fn parse_q(s: &str) -> Result<Q> {
    let (n, d) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s.trim(), "1"),
    };
    let n: BigInt = n.parse().map_err(|_| bad(format!("bad rational {s:?}")))?;
    let d: BigInt = d.parse().map_err(|_| bad(format!("bad rational {s:?}")))?;
    if d.is_zero() {
        return Err(bad(format!("zero denominator in {s:?}")));
    }
    Ok(Q::new(n, d))
}

fn q_from_json(v: &Value) -> Result<Q> {
    match v {
        Value::String(s) => parse_q(s),
        Value::Number(n) if n.is_i64() => {
            Ok(Q::from_integer(BigInt::from(n.as_i64().unwrap_or(0))))
        }
        _ => Err(bad(format!("expected a rational, got {v}"))),
    }
}

pub fn multi_from_json(v: &Value) -> Result<MultiIndex> {
    serde_json::from_value(v.clone()).map_err(|e| bad(format!("bad multi-index {v}: {e}")))
}

fn time_key(ctx: &CtxRef, k: usize) -> Value {
    let t = &ctx.times[k];
    match t.family {
        Family::T => json!(t.index),
        Family::S => json!({ "s": t.index.last() }),
    }
}

fn slot_of_key(ctx: &CtxRef, key: &Value) -> Result<usize> {
    (0..ctx.nt())
        .find(|&k| time_key(ctx, k) == *key)
        .ok_or_else(|| bad(format!("time {key} is not active")))
}

pub fn mono_to_json(ctx: &CtxRef, m: &Mono) -> Value {
    Value::Array(
        m.support()
            .into_iter()
            .map(|(k, e)| json!([time_key(ctx, k), e]))
            .collect(),
    )
}

pub fn mono_from_json(ctx: &CtxRef, v: &Value) -> Result<Mono> {
    let items = v.as_array().ok_or_else(|| bad("monomial must be a list"))?;
    let mut m = Mono::ONE;
    for it in items {
        let pair = it
            .as_array()
            .filter(|p| p.len() == 2)
            .ok_or_else(|| bad("monomial factor must be [time, exponent]"))?;
        let k = slot_of_key(ctx, &pair[0])?;
        let e = pair[1]
            .as_u64()
            .ok_or_else(|| bad("exponent must be a non-negative integer"))?;
        let e = u32::try_from(e).map_err(|_| bad("exponent too large"))?;
        m = m.with(k, m.get(k) + e);
    }
    Ok(m)
}

pub fn timepoly_to_json(ctx: &CtxRef, p: &TimePoly) -> Value {
    let mut items: Vec<(String, Value)> = p
        .iter()
        .map(|(m, c)| {
            let mj = mono_to_json(ctx, m);
            (
                mj.to_string(),
                json!({ "monomial": mj, "coeff": format_q(c) }),
            )
        })
        .collect();
    items.sort_by(|a, b| a.0.cmp(&b.0));
    Value::Array(items.into_iter().map(|(_, v)| v).collect())
}

pub fn timepoly_from_json(ctx: &CtxRef, v: &Value) -> Result<TimePoly> {
    let items = v
        .as_array()
        .ok_or_else(|| bad("time polynomial must be a list"))?;
    let mut p = TimePoly::zero();
    for it in items {
        let m = mono_from_json(
            ctx,
            it.get("monomial").ok_or_else(|| bad("missing monomial"))?,
        )?;
        let c = q_from_json(it.get("coeff").ok_or_else(|| bad("missing coeff"))?)?;
        p.add_term(m, c);
    }
    Ok(p)
}

fn terms_to_json<'a>(
    ctx: &CtxRef,
    terms: impl Iterator<Item = (&'a MultiIndex, &'a TimePoly)>,
) -> Value {
    Value::Array(
        terms
            .map(|(e, p)| json!([e, timepoly_to_json(ctx, p)]))
            .collect(),
    )
}

fn terms_from_json(ctx: &CtxRef, v: &Value) -> Result<Vec<(MultiIndex, TimePoly)>> {
    let items = v
        .as_array()
        .ok_or_else(|| bad("expected a list of [exponent, polynomial]"))?;
    items
        .iter()
        .map(|it| {
            let pair = it
                .as_array()
                .filter(|p| p.len() == 2)
                .ok_or_else(|| bad("term must be [exponent, polynomial]"))?;
            let e = multi_from_json(&pair[0])?;
            if e.len() != ctx.n {
                return Err(bad(format!("exponent {e} has wrong length")));
            }
            Ok((e, timepoly_from_json(ctx, &pair[1])?))
        })
        .collect()
}

pub fn xseries_to_json(s: &XSeries) -> Value {
    terms_to_json(s.ctx(), s.terms())
}

pub fn pdo_to_json(p: &Pdo) -> Value {
    terms_to_json(p.ctx(), p.terms())
}

/// Names of the precision functionals, in storage order.
pub fn functional_names(ctx: &CtxRef) -> Vec<String> {
    let mut out = vec![String::new(); ctx.nfun()];
    out[F_WEIGHT] = "weight".into();
    out[F_NDEG] = "nonunit_degree".into();
    out[F_TDEG] = "time_degree".into();
    for i in 0..ctx.n {
        out[F_GRADE0 + i] = format!("grade_{}", i + 1);
        out[ctx.f_y(i)] = format!("time_grade_{}", i + 1);
    }
    out
}

fn bound_to_json(v: i64) -> Value {
    match v {
        INF => json!("inf"),
        NEG_INF => json!("-inf"),
        _ => json!(v),
    }
}

fn bound_from_json(v: &Value) -> Result<i64> {
    match v {
        Value::String(s) if s == "inf" => Ok(INF),
        Value::String(s) if s == "-inf" => Ok(NEG_INF),
        Value::Number(n) => n.as_i64().ok_or_else(|| bad("bound must be an integer")),
        _ => Err(bad(format!("bad bound {v}"))),
    }
}

pub fn prec_to_json(ctx: &CtxRef, p: &Prec) -> Value {
    json!({
        "functionals": functional_names(ctx),
        "cap": p.cap.iter().map(|&v| bound_to_json(v)).collect::<Vec<_>>(),
        "lb": p.lb.iter().map(|&v| bound_to_json(v)).collect::<Vec<_>>(),
    })
}

pub fn prec_from_json(ctx: &CtxRef, v: &Value) -> Result<Prec> {
    let list = |key: &str| -> Result<Vec<i64>> {
        let a = v
            .get(key)
            .and_then(Value::as_array)
            .ok_or_else(|| bad(format!("precision needs {key}")))?;
        a.iter().map(bound_from_json).collect()
    };
    let (cap, lb) = (list("cap")?, list("lb")?);
    if cap.len() != ctx.nfun() || lb.len() != ctx.nfun() {
        return Err(bad(format!("precision needs {} functionals", ctx.nfun())));
    }
    Ok(Prec { cap, lb })
}

/// `{terms, precision}`.
pub fn series_record(s: &XSeries) -> Value {
    json!({ "terms": xseries_to_json(s), "precision": prec_to_json(s.ctx(), s.prec()) })
}

pub fn series_from_record(ctx: &CtxRef, v: &Value) -> Result<XSeries> {
    let s = XSeries::from_terms(ctx, terms_from_json(ctx, v.get("terms").unwrap_or(v))?);
    match v.get("precision") {
        Some(p) => Ok(s.truncated(prec_from_json(ctx, p)?)),
        None => Ok(s),
    }
}

pub fn pdo_record(p: &Pdo) -> Value {
    json!({ "terms": pdo_to_json(p), "precision": prec_to_json(p.ctx(), p.prec()) })
}

/// Reads `{terms, precision}` or a bare term list (exact up to the context's
/// caps).
pub fn pdo_from_record(ctx: &CtxRef, v: &Value) -> Result<Pdo> {
    let p = Pdo::from_terms(ctx, terms_from_json(ctx, v.get("terms").unwrap_or(v))?);
    match v.get("precision") {
        Some(pr) => Ok(p.truncated(prec_from_json(ctx, pr)?)),
        None => Ok(p),
    }
}

pub fn grpoint_to_json(p: &GrPoint) -> Value {
    let basis: Vec<Value> = p
        .basis()
        .map(|(f, u)| json!({ "pivot": f, "element": series_record(u) }))
        .collect();
    json!({
        "basis": basis,
        "leading_set": p.leading_set(),
        "trivial_outside": p.trivial_outside(),
    })
}

pub fn grpoint_from_json(ctx: &CtxRef, v: &Value) -> Result<GrPoint> {
    let items = v
        .get("basis")
        .and_then(Value::as_array)
        .ok_or_else(|| bad("point needs a basis list"))?;
    let family = items
        .iter()
        .map(|it| {
            series_from_record(
                ctx,
                it.get("element")
                    .ok_or_else(|| bad("basis entry needs element"))?,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let p = GrPoint::from_basis(ctx, family)?;
    if let Some(ls) = v.get("leading_set") {
        let want: Vec<MultiIndex> = ls
            .as_array()
            .ok_or_else(|| bad("leading_set must be a list"))?
            .iter()
            .map(multi_from_json)
            .collect::<Result<_>>()?;
        if want != p.leading_set() {
            return Err(bad("leading_set does not match the basis"));
        }
    }
    Ok(match v.get("trivial_outside").and_then(Value::as_bool) {
        Some(true) => p.assume_trivial_outside(),
        _ => p,
    })
}

pub fn geometry_to_json(g: &GeometryData) -> Value {
    let params: BTreeMap<&String, Vec<String>> = g
        .params
        .iter()
        .map(|(k, v)| (k, v.iter().map(format_q).collect()))
        .collect();
    let gens: Vec<Value> = g
        .generators
        .iter()
        .map(|x| json!({ "pole": x.pole, "series": xseries_to_json(&x.series), "precision": prec_to_json(x.series.ctx(), x.series.prec()) }))
        .collect();
    json!({ "n_vars": g.n_vars, "name": g.name, "params": params, "generators": gens })
}

/// Generators without a `precision` record are exact polynomials in the
/// `x_i^{±1}`.
pub fn geometry_from_json(ctx: &CtxRef, v: &Value) -> Result<GeometryData> {
    let n_vars = v
        .get("n_vars")
        .and_then(Value::as_u64)
        .ok_or_else(|| bad("geometry needs n_vars"))? as usize;
    if n_vars != ctx.n {
        return Err(Error::Usage(format!(
            "geometry has n_vars {n_vars} but the run uses {}",
            ctx.n
        )));
    }
    let name = v.get("name").and_then(Value::as_str).map(str::to_string);
    let mut params = BTreeMap::new();
    if let Some(ps) = v.get("params").and_then(Value::as_object) {
        for (k, x) in ps {
            let vals = match x {
                Value::Array(a) => a.iter().map(q_from_json).collect::<Result<Vec<_>>>()?,
                other => vec![q_from_json(other)?],
            };
            params.insert(k.clone(), vals);
        }
    }
    let gens = v
        .get("generators")
        .and_then(Value::as_array)
        .ok_or_else(|| bad("geometry needs generators"))?;
    let generators = gens
        .iter()
        .map(|x| {
            let pole = multi_from_json(x.get("pole").ok_or_else(|| bad("generator needs pole"))?)?;
            let series = XSeries::from_terms(
                ctx,
                terms_from_json(
                    ctx,
                    x.get("series")
                        .ok_or_else(|| bad("generator needs series"))?,
                )?,
            );
            let series = match x.get("precision") {
                Some(p) => series.truncated(prec_from_json(ctx, p)?),
                None => series,
            };
            Ok(Generator { pole, series })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GeometryData {
        n_vars,
        name,
        params,
        generators,
    })
}

/// Nonzero rationals as `"p/q"`, zero as `"0"`: the residual summary form.
pub fn residual_value(c: Option<&Q>) -> Value {
    match c {
        None => json!("0"),
        Some(c) if c.is_zero() => json!("0"),
        Some(c) => json!(format_q(c)),
    }
}
