//! Operator products by repeated elementary commutations: `∂_i b = b ∂_i +
//! b_{x_i}` and `∂_i^{-1} b = Σ_j (-1)^j b^{(j)} ∂_i^{-1-j}`.

use std::collections::BTreeMap;

use kpn::algebra::{CtxRef, Mono, MultiIndex, TimePoly, Q};
use kpn::pdo::Pdo;
use num_traits::Zero;

/// Polynomial in every time slot: exponent vector to coefficient.
pub type Poly = BTreeMap<Vec<u32>, Q>;
/// `∂`-exponent to coefficient.
pub type Op = BTreeMap<Vec<i64>, Poly>;

fn add_into(p: &mut Poly, e: Vec<u32>, c: Q) {
    let slot = p.entry(e).or_insert_with(Q::zero);
    *slot += c;
}

fn clean(op: Op) -> Op {
    op.into_iter()
        .map(|(e, p)| {
            (
                e,
                p.into_iter()
                    .filter(|(_, c)| !c.is_zero())
                    .collect::<Poly>(),
            )
        })
        .filter(|(_, p)| !p.is_empty())
        .collect()
}

fn deriv(p: &Poly, slot: usize) -> Poly {
    let mut out = Poly::new();
    for (e, c) in p {
        if e[slot] > 0 {
            let mut f = e.clone();
            f[slot] -= 1;
            add_into(&mut out, f, c * Q::from_integer(e[slot].into()));
        }
    }
    out
}

fn poly_mul(a: &Poly, b: &Poly) -> Poly {
    let mut out = Poly::new();
    for (ea, ca) in a {
        for (eb, cb) in b {
            let e = ea.iter().zip(eb).map(|(x, y)| x + y).collect();
            add_into(&mut out, e, ca * cb);
        }
    }
    out
}

fn shifted(e: &[i64], i: usize, by: i64) -> Vec<i64> {
    let mut f = e.to_vec();
    f[i] += by;
    f
}

/// `∂_i^{±1} ∘ B`.
fn step(b: &Op, i: usize, slot: usize, up: bool) -> Op {
    let mut out = Op::new();
    for (e, p) in b {
        if up {
            for (k, c) in p {
                add_into(
                    out.entry(shifted(e, i, 1)).or_default(),
                    k.clone(),
                    c.clone(),
                );
            }
            for (k, c) in deriv(p, slot) {
                add_into(out.entry(e.clone()).or_default(), k, c);
            }
        } else {
            let mut d = p.clone();
            let mut j = 0i64;
            while !d.is_empty() {
                let sign = if j % 2 == 0 {
                    Q::from_integer(1.into())
                } else {
                    Q::from_integer((-1).into())
                };
                for (k, c) in &d {
                    add_into(
                        out.entry(shifted(e, i, -1 - j)).or_default(),
                        k.clone(),
                        c * &sign,
                    );
                }
                d = deriv(&d, slot);
                j += 1;
            }
        }
    }
    clean(out)
}

pub fn from_pdo(p: &Pdo) -> Op {
    let nt = p.ctx().nt();
    let mut out = Op::new();
    for (e, tp) in p.terms() {
        let row = out.entry(e.entries().to_vec()).or_default();
        for (m, c) in tp.iter() {
            add_into(row, (0..nt).map(|k| m.get(k)).collect(), c.clone());
        }
    }
    clean(out)
}

pub fn to_pdo(ctx: &CtxRef, op: &Op) -> Pdo {
    let terms = op
        .iter()
        .map(|(e, p)| {
            let mut tp = TimePoly::zero();
            for (k, c) in p {
                let mut m = Mono::ONE;
                for (slot, x) in k.iter().enumerate() {
                    m = m.with(slot, *x);
                }
                tp.add_term(m, c.clone());
            }
            (MultiIndex::new(e.clone()), tp)
        })
        .collect();
    Pdo::from_terms(ctx, terms)
}

/// `A ∘ B` without truncation; `units[i]` is the slot of `t_{e_i}`.
pub fn mul(a: &Op, b: &Op, units: &[usize]) -> Op {
    let mut out = Op::new();
    for (ea, pa) in a {
        let mut cur = b.clone();
        for (i, &k) in ea.iter().enumerate() {
            for _ in 0..k.unsigned_abs() {
                cur = step(&cur, i, units[i], k > 0);
            }
        }
        for (e, p) in cur {
            let row = out.entry(e).or_default();
            for (k, c) in poly_mul(pa, &p) {
                add_into(row, k, c);
            }
        }
    }
    clean(out)
}

/// `Σ (-∂)^α ∘ a_α`.
pub fn adjoint(a: &Op, units: &[usize]) -> Op {
    let mut out = Op::new();
    for (e, p) in a {
        let zero = vec![0u32; p.keys().next().map_or(0, |k| k.len())];
        let sign = if e.iter().sum::<i64>().rem_euclid(2) == 0 {
            1
        } else {
            -1
        };
        let d = Op::from([(
            e.clone(),
            Poly::from([(zero.clone(), Q::from_integer(sign.into()))]),
        )]);
        let c = Op::from([(vec![0; e.len()], p.clone())]);
        for (f, q) in mul(&d, &c, units) {
            let row = out.entry(f).or_default();
            for (k, x) in q {
                add_into(row, k, x);
            }
        }
    }
    clean(out)
}
