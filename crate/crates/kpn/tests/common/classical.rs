//! One-variable Sato flows: `∂_n S = -(S ∂^n S^{-1})_- S`, with `S` a
//! series in `∂^{-1}` whose coefficients are polynomials in
//! `x = t_1, t_2, ..., t_m`, truncated by weight `Σ k·deg_{t_k} - order`.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{One, Zero};

pub type Q = num_rational::BigRational;
/// Exponents of `(t_1, ..., t_m)`.
pub type Poly = BTreeMap<Vec<u32>, Q>;
/// Order of `∂` to coefficient.
pub type Op = BTreeMap<i64, Poly>;

#[derive(Clone, Debug)]
pub struct Classical {
    pub m: usize,
    pub weight: i64,
}

fn qi(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

/// `k(k-1)...(k-j+1)/j!` for any integer `k`.
fn binom(k: i64, j: u32) -> Q {
    let mut r = Q::one();
    for i in 0..j as i64 {
        r = r * qi(k - i) / qi(i + 1);
    }
    r
}

impl Classical {
    fn mono_weight(&self, e: &[u32]) -> i64 {
        e.iter()
            .enumerate()
            .map(|(k, &x)| (k as i64 + 1) * x as i64)
            .sum()
    }

    fn keep(&self, e: &[u32], order: i64) -> bool {
        self.mono_weight(e) - order <= self.weight
    }

    fn dx(p: &Poly) -> Poly {
        let mut out = Poly::new();
        for (e, c) in p {
            if e[0] > 0 {
                let mut f = e.clone();
                f[0] -= 1;
                *out.entry(f).or_insert_with(Q::zero) += c * qi(e[0] as i64);
            }
        }
        out
    }

    fn add(&self, a: &Op, b: &Op, sign: i64) -> Op {
        let mut out = a.clone();
        for (k, p) in b {
            let row = out.entry(*k).or_default();
            for (e, c) in p {
                *row.entry(e.clone()).or_insert_with(Q::zero) += c * qi(sign);
            }
        }
        Self::clean(out)
    }

    fn clean(op: Op) -> Op {
        op.into_iter()
            .map(|(k, p)| {
                (
                    k,
                    p.into_iter()
                        .filter(|(_, c)| !c.is_zero())
                        .collect::<Poly>(),
                )
            })
            .filter(|(_, p)| !p.is_empty())
            .collect()
    }

    pub fn mul(&self, a: &Op, b: &Op) -> Op {
        let mut out = Op::new();
        for (&ka, pa) in a {
            for (&kb, pb) in b {
                let mut d = pb.clone();
                let mut j = 0u32;
                while !d.is_empty() && (ka < 0 || j as i64 <= ka) {
                    let c = binom(ka, j);
                    let order = ka + kb - j as i64;
                    for (ea, ca) in pa {
                        for (eb, cb) in &d {
                            let e: Vec<u32> = ea.iter().zip(eb).map(|(x, y)| x + y).collect();
                            if self.keep(&e, order) {
                                *out.entry(order)
                                    .or_default()
                                    .entry(e)
                                    .or_insert_with(Q::zero) += ca * cb * &c;
                            }
                        }
                    }
                    d = Self::dx(&d);
                    j += 1;
                }
            }
        }
        Self::clean(out)
    }

    pub fn one(&self) -> Op {
        Op::from([(0, Poly::from([(vec![0; self.m], Q::one())]))])
    }

    pub fn d_pow(&self, n: i64) -> Op {
        Op::from([(n, Poly::from([(vec![0; self.m], Q::one())]))])
    }

    pub fn inverse(&self, s: &Op) -> Op {
        let r = self.add(s, &self.one(), -1);
        let mut term = self.one();
        let mut acc = self.one();
        for k in 1.. {
            term = self.mul(&term, &r);
            if term.is_empty() {
                break;
            }
            acc = self.add(&acc, &term, if k % 2 == 0 { 1 } else { -1 });
        }
        acc
    }

    fn minus(op: &Op) -> Op {
        op.iter()
            .filter(|(k, _)| **k < 0)
            .map(|(k, p)| (*k, p.clone()))
            .collect()
    }

    /// Coefficient of the non-unit monomial `κ` (exponents of `t_2..t_m`).
    fn slice(op: &Op, kappa: &[u32]) -> Op {
        let mut out = Op::new();
        for (k, p) in op {
            for (e, c) in p {
                if &e[1..] == kappa {
                    let mut f = vec![0; e.len()];
                    f[0] = e[0];
                    out.entry(*k).or_default().insert(f, c.clone());
                }
            }
        }
        out
    }

    fn times(op: &Op, kappa: &[u32]) -> Op {
        op.iter()
            .map(|(k, p)| {
                let q = p
                    .iter()
                    .map(|(e, c)| {
                        let mut f = e.clone();
                        for (i, x) in kappa.iter().enumerate() {
                            f[i + 1] += x;
                        }
                        (f, c.clone())
                    })
                    .collect();
                (*k, q)
            })
            .collect()
    }

    /// `S(t)` with `S(x, 0, ..., 0) = s0`, to total non-unit degree `deg`.
    pub fn flow(&self, s0: &Op, deg: u32) -> Op {
        let mut s = s0.clone();
        let mut kappas: Vec<Vec<u32>> = Vec::new();
        let mut cur = vec![vec![0u32; self.m - 1]];
        for _ in 1..=deg {
            let mut next = Vec::new();
            for k in &cur {
                for i in 0..self.m - 1 {
                    let mut f = k.clone();
                    f[i] += 1;
                    if !next.contains(&f) {
                        next.push(f);
                    }
                }
            }
            next.sort();
            kappas.extend(next.iter().cloned());
            cur = next;
        }
        let mut by_degree: BTreeMap<u32, Vec<Vec<u32>>> = BTreeMap::new();
        for k in kappas {
            by_degree.entry(k.iter().sum()).or_default().push(k);
        }
        for (_, ks) in by_degree {
            let sinv = self.inverse(&s);
            let mut rhs: BTreeMap<usize, Op> = BTreeMap::new();
            let mut add = Op::new();
            for k in ks {
                let i = k.iter().position(|&x| x > 0).unwrap();
                let n = i as i64 + 2;
                let r = rhs.entry(i).or_insert_with(|| {
                    let ln = self.mul(&self.mul(&s, &self.d_pow(n)), &sinv);
                    let m = self.mul(&Self::minus(&ln), &s);
                    self.add(&Op::new(), &m, -1)
                });
                let mut prev = k.clone();
                prev[i] -= 1;
                let part = Self::slice(r, &prev);
                let scale = Q::one() / qi(k[i] as i64);
                let part: Op = part
                    .into_iter()
                    .map(|(o, p)| (o, p.into_iter().map(|(e, c)| (e, c * &scale)).collect()))
                    .collect();
                let lifted: Op = Self::times(&part, &k)
                    .into_iter()
                    .map(|(o, p)| {
                        (
                            o,
                            p.into_iter()
                                .filter(|(e, _)| self.keep(e, o))
                                .collect::<Poly>(),
                        )
                    })
                    .collect();
                add = self.add(&add, &lifted, 1);
            }
            s = self.add(&s, &add, 1);
        }
        s
    }
}
