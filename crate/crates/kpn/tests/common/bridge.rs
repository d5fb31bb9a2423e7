//! Conversions between the library's one-variable operators and the
//! classical solver's representation, over the times `t_1, t_2, t_3`.

use kpn::algebra::*;
use kpn::hierarchy::integrate_flows;
use kpn::pdo::Pdo;

use super::classical::{Classical, Op};
use super::mi;

pub fn slots(ctx: &CtxRef) -> Vec<usize> {
    (1..=3).map(|k| ctx.time_slot(&mi(&[k])).unwrap()).collect()
}

pub fn to_classical(ctx: &CtxRef, p: &Pdo) -> Op {
    let sl = slots(ctx);
    let mut out = Op::new();
    for (e, tp) in p.terms() {
        let row = out.entry(e.get(0)).or_default();
        for (m, c) in tp.iter() {
            row.insert(sl.iter().map(|&k| m.get(k)).collect(), c.clone());
        }
    }
    out
}

fn mono(sl: &[usize], e: &[u32]) -> Mono {
    sl.iter()
        .zip(e)
        .fold(Mono::ONE, |m, (&slot, &x)| m.with(slot, x))
}

pub fn from_classical(ctx: &CtxRef, op: &Op) -> Pdo {
    let sl = slots(ctx);
    let terms = op
        .iter()
        .map(|(k, row)| {
            let mut p = TimePoly::zero();
            for (e, c) in row {
                p.add_term(mono(&sl, e), c.clone());
            }
            (mi(&[*k]), p)
        })
        .collect();
    Pdo::from_terms(&ctx.unwindowed(), terms)
}

/// `S(t)` of the classical solver for the seed `s0`.
pub fn classical_flow(ctx: &CtxRef, s0: &Pdo) -> Op {
    let oracle = Classical {
        m: 3,
        weight: ctx.weight,
    };
    oracle.flow(&to_classical(ctx, s0), ctx.t_degree)
}

/// Term-by-term agreement of the pipeline's `S(t)` with the classical
/// solver wherever the pipeline claims exactness. Returns the number of
/// terms compared.
pub fn compare_with_classical(ctx: &CtxRef, s0: &Pdo) -> Result<usize, String> {
    let s = integrate_flows(s0).map_err(|e| e.to_string())?.s;
    let want = classical_flow(ctx, s0);
    let got = to_classical(ctx, &s);
    let sl = slots(ctx);
    let mut compared = 0;
    for (&k, row) in &want {
        for (e, c) in row {
            if !s.knows(&mono(&sl, e), &mi(&[k])) {
                continue;
            }
            compared += 1;
            let g = got
                .get(&k)
                .and_then(|r| r.get(e))
                .cloned()
                .unwrap_or_default();
            if &g != c {
                return Err(format!("∂^{k} t^{e:?}: pipeline {g}, classical {c}"));
            }
        }
    }
    for (&k, row) in &got {
        for (e, c) in row {
            let w = want
                .get(&k)
                .and_then(|r| r.get(e))
                .cloned()
                .unwrap_or_default();
            if &w != c {
                return Err(format!("∂^{k} t^{e:?}: pipeline {c}, classical {w}"));
            }
        }
    }
    Ok(compared)
}
