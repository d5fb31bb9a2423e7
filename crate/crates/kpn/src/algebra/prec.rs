//! Exactness bookkeeping for truncated objects.
//!
//! A truncated series or operator is exact on the region where every
//! functional value is at most its cap. Each functional also carries a lower
//! bound valid for the untruncated object, which is what makes product caps
//! computable: a product term is exact when `value <= cap_A + lb_B` and
//! `value <= cap_B + lb_A`.

use serde::{Deserialize, Serialize};

pub const INF: i64 = i64::MAX;
pub const NEG_INF: i64 = i64::MIN;

fn add_cap_lb(cap: i64, lb: i64) -> i64 {
    if cap == INF || lb == INF {
        INF
    } else if lb == NEG_INF || cap == NEG_INF {
        NEG_INF
    } else {
        cap + lb
    }
}

fn add_lb(a: i64, b: i64) -> i64 {
    if a == INF || b == INF {
        INF
    } else if a == NEG_INF || b == NEG_INF {
        NEG_INF
    } else {
        a + b
    }
}

fn shift(v: i64, by: i64) -> i64 {
    if v == INF || v == NEG_INF {
        v
    } else {
        v + by
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prec {
    pub cap: Vec<i64>,
    pub lb: Vec<i64>,
}

impl Prec {
    /// Exact object whose support has the given lower bounds.
    pub fn exact(lb: Vec<i64>) -> Self {
        Prec {
            cap: vec![INF; lb.len()],
            lb,
        }
    }

    /// Exact object with nothing known about its support (the zero object).
    pub fn exact_unbounded(k: usize) -> Self {
        Prec {
            cap: vec![INF; k],
            lb: vec![INF; k],
        }
    }

    pub fn k(&self) -> usize {
        self.cap.len()
    }

    pub fn is_exact(&self) -> bool {
        self.cap.iter().all(|&c| c == INF)
    }

    pub fn contains(&self, vals: &[i64]) -> bool {
        vals.iter()
            .zip(&self.cap)
            .all(|(v, c)| *c == INF || (*c != NEG_INF && v <= c))
    }

    pub fn product(a: &Prec, b: &Prec) -> Prec {
        let k = a.k();
        let mut cap = Vec::with_capacity(k);
        let mut lb = Vec::with_capacity(k);
        for j in 0..k {
            cap.push(add_cap_lb(a.cap[j], b.lb[j]).min(add_cap_lb(b.cap[j], a.lb[j])));
            lb.push(add_lb(a.lb[j], b.lb[j]));
        }
        Prec { cap, lb }
    }

    /// Precision of a sum or of a combination of objects.
    pub fn meet(a: &Prec, b: &Prec) -> Prec {
        Prec {
            cap: a.cap.iter().zip(&b.cap).map(|(x, y)| *x.min(y)).collect(),
            lb: a.lb.iter().zip(&b.lb).map(|(x, y)| *x.min(y)).collect(),
        }
    }

    /// Translate all functionals by `by` (multiplication by a monomial).
    pub fn shifted(&self, by: &[i64]) -> Prec {
        Prec {
            cap: self
                .cap
                .iter()
                .zip(by)
                .map(|(c, b)| shift(*c, *b))
                .collect(),
            lb: self.lb.iter().zip(by).map(|(l, b)| shift(*l, *b)).collect(),
        }
    }

    pub fn lower_cap(&mut self, j: usize, v: i64) {
        if v < self.cap[j] {
            self.cap[j] = v;
        }
    }

    pub fn cap_of(&self, j: usize) -> Option<i64> {
        (self.cap[j] != INF).then_some(self.cap[j])
    }

    /// Replace infinite lower bounds by bounds observed on an exact support.
    pub fn with_lb(mut self, lb: Vec<i64>) -> Prec {
        self.lb = lb;
        self
    }

    /// Raise lower bounds that are known to be loose.
    pub fn tighten_lb(&mut self, j: usize, v: i64) {
        if self.lb[j] == NEG_INF || v > self.lb[j] {
            self.lb[j] = v;
        }
    }
}
