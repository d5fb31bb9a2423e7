use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

pub type Q = BigRational;

pub const MAX_TIMES: usize = 32;

pub fn q(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn qf(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

/// Exponent vector of a time monomial, one slot per active time.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Mono([u8; MAX_TIMES]);

impl Mono {
    pub const ONE: Mono = Mono([0; MAX_TIMES]);

    pub fn var(k: usize) -> Mono {
        let mut m = Mono::ONE;
        m.0[k] = 1;
        m
    }

    pub fn from_exps(e: &[u32]) -> Mono {
        let mut m = Mono::ONE;
        for (k, &v) in e.iter().enumerate() {
            m.0[k] = u8::try_from(v).expect("time exponent exceeds 255");
        }
        m
    }

    pub fn get(&self, k: usize) -> u32 {
        self.0[k] as u32
    }

    pub fn is_one(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|&e| e as u32).sum()
    }

    pub fn mul(&self, o: &Mono) -> Mono {
        let mut m = *self;
        for k in 0..MAX_TIMES {
            m.0[k] = m.0[k].checked_add(o.0[k]).expect("time exponent overflow");
        }
        m
    }

    /// `self / o` when `o` divides `self`.
    pub fn div(&self, o: &Mono) -> Option<Mono> {
        let mut m = *self;
        for k in 0..MAX_TIMES {
            m.0[k] = m.0[k].checked_sub(o.0[k])?;
        }
        Some(m)
    }

    pub fn with(&self, k: usize, e: u32) -> Mono {
        let mut m = *self;
        m.0[k] = u8::try_from(e).expect("time exponent exceeds 255");
        m
    }

    /// Nonzero `(slot, exponent)` pairs.
    pub fn support(&self) -> Vec<(usize, u32)> {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &e)| e > 0)
            .map(|(k, &e)| (k, e as u32))
            .collect()
    }

    /// Product of factorials of the exponents.
    pub fn factorial(&self) -> BigInt {
        let mut f = BigInt::one();
        for &e in self.0.iter() {
            for j in 2..=e as u32 {
                f *= BigInt::from(j);
            }
        }
        f
    }
}

impl fmt::Debug for Mono {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = self.support();
        if s.is_empty() {
            return write!(f, "1");
        }
        for (i, (k, e)) in s.iter().enumerate() {
            if i > 0 {
                write!(f, "*")?;
            }
            write!(f, "t{k}^{e}")?;
        }
        Ok(())
    }
}

/// Sparse polynomial in the time variables with rational coefficients.
/// Zero coefficients are never stored.
#[derive(Clone, PartialEq, Eq, Default)]
pub struct TimePoly {
    terms: BTreeMap<Mono, Q>,
}

impl TimePoly {
    pub fn zero() -> Self {
        TimePoly {
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(c: Q) -> Self {
        let mut p = TimePoly::zero();
        p.add_term(Mono::ONE, c);
        p
    }

    pub fn one() -> Self {
        Self::constant(Q::one())
    }

    pub fn monomial(m: Mono, c: Q) -> Self {
        let mut p = TimePoly::zero();
        p.add_term(m, c);
        p
    }

    pub fn var(k: usize) -> Self {
        Self::monomial(Mono::var(k), Q::one())
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Mono, &Q)> {
        self.terms.iter()
    }

    pub fn coeff(&self, m: &Mono) -> Q {
        self.terms.get(m).cloned().unwrap_or_else(Q::zero)
    }

    /// Constant term.
    pub fn at_zero(&self) -> Q {
        self.coeff(&Mono::ONE)
    }

    pub fn as_constant(&self) -> Option<Q> {
        match self.terms.len() {
            0 => Some(Q::zero()),
            1 => self.terms.get(&Mono::ONE).cloned(),
            _ => None,
        }
    }

    pub fn add_term(&mut self, m: Mono, c: Q) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn add_assign_ref(&mut self, o: &TimePoly) {
        for (m, c) in &o.terms {
            self.add_term(*m, c.clone());
        }
    }

    pub fn sub_assign_ref(&mut self, o: &TimePoly) {
        for (m, c) in &o.terms {
            self.add_term(*m, -c.clone());
        }
    }

    pub fn add(&self, o: &TimePoly) -> TimePoly {
        let mut r = self.clone();
        r.add_assign_ref(o);
        r
    }

    pub fn sub(&self, o: &TimePoly) -> TimePoly {
        let mut r = self.clone();
        r.sub_assign_ref(o);
        r
    }

    pub fn neg(&self) -> TimePoly {
        TimePoly {
            terms: self.terms.iter().map(|(m, c)| (*m, -c.clone())).collect(),
        }
    }

    pub fn scale(&self, c: &Q) -> TimePoly {
        if c.is_zero() {
            return TimePoly::zero();
        }
        TimePoly {
            terms: self.terms.iter().map(|(m, v)| (*m, v * c)).collect(),
        }
    }

    /// Exact product.
    pub fn mul(&self, o: &TimePoly) -> TimePoly {
        self.mul_filtered(o, |_| true)
    }

    /// Product keeping only monomials accepted by `keep`.
    pub fn mul_filtered(&self, o: &TimePoly, keep: impl Fn(&Mono) -> bool) -> TimePoly {
        let mut r = TimePoly::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &o.terms {
                let m = ma.mul(mb);
                if keep(&m) {
                    r.add_term(m, ca * cb);
                }
            }
        }
        r
    }

    /// Product truncated to total degree `<= deg`.
    pub fn mul_trunc(&self, o: &TimePoly, deg: u32) -> TimePoly {
        self.mul_filtered(o, |m| m.degree() <= deg)
    }

    pub fn truncate(&self, deg: u32) -> TimePoly {
        self.filter(|m| m.degree() <= deg)
    }

    pub fn filter(&self, keep: impl Fn(&Mono) -> bool) -> TimePoly {
        TimePoly {
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| keep(m))
                .map(|(m, c)| (*m, c.clone()))
                .collect(),
        }
    }

    pub fn retain(&mut self, keep: impl Fn(&Mono) -> bool) {
        self.terms.retain(|m, _| keep(m));
    }

    /// Formal partial derivative in the time at slot `k`.
    pub fn derive(&self, k: usize) -> TimePoly {
        let mut r = TimePoly::zero();
        for (m, c) in &self.terms {
            let e = m.get(k);
            if e > 0 {
                r.add_term(m.with(k, e - 1), c * q(e as i64));
            }
        }
        r
    }

    /// Iterated derivative `∂^n` in slot `k`.
    pub fn derive_n(&self, k: usize, n: u32) -> TimePoly {
        let mut r = TimePoly::zero();
        for (m, c) in &self.terms {
            let e = m.get(k);
            if e >= n {
                let mut f = BigInt::one();
                for j in 0..n {
                    f *= BigInt::from(e - j);
                }
                r.add_term(m.with(k, e - n), c * Q::from_integer(f));
            }
        }
        r
    }

    /// Multiply by the monomial `m`.
    pub fn shift(&self, m: &Mono) -> TimePoly {
        TimePoly {
            terms: self
                .terms
                .iter()
                .map(|(k, c)| (k.mul(m), c.clone()))
                .collect(),
        }
    }

    /// Coefficient extraction: the terms divisible by `m`, divided by `m`,
    /// restricted to monomials that have no other factor in `slots`.
    pub fn extract(&self, m: &Mono, slots: &[usize]) -> TimePoly {
        let mut r = TimePoly::zero();
        for (k, c) in &self.terms {
            if let Some(rest) = k.div(m) {
                if slots.iter().all(|&s| rest.get(s) == 0) {
                    r.add_term(rest, c.clone());
                }
            }
        }
        r
    }

    /// Evaluate the slots in `zero_slots` at zero.
    pub fn set_zero(&self, zero_slots: &[usize]) -> TimePoly {
        self.filter(|m| zero_slots.iter().all(|&s| m.get(s) == 0))
    }

    pub fn max_degree(&self) -> u32 {
        self.terms.keys().map(|m| m.degree()).max().unwrap_or(0)
    }

    /// Largest exponent of slot `k`.
    pub fn max_exp(&self, k: usize) -> u32 {
        self.terms.keys().map(|m| m.get(k)).max().unwrap_or(0)
    }

    pub fn max_abs_height(&self) -> usize {
        self.terms
            .values()
            .map(|c| c.numer().abs().bits().max(c.denom().bits()) as usize)
            .max()
            .unwrap_or(0)
    }

    pub(crate) fn from_terms(terms: BTreeMap<Mono, Q>) -> Self {
        let mut p = TimePoly { terms };
        p.terms.retain(|_, c| !c.is_zero());
        p
    }
}

impl fmt::Debug for TimePoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (m, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{c}*{m:?}")?;
        }
        Ok(())
    }
}

/// Sum, product or scaling of time polynomials, truncated to `t_degree`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PolyOp {
    Add,
    Mul,
    Scale,
}

pub fn tpoly_arith(p: &TimePoly, qp: &TimePoly, op: PolyOp, t_degree: u32) -> Result<TimePoly> {
    Ok(match op {
        PolyOp::Add => p.add(qp).truncate(t_degree),
        PolyOp::Mul => p.mul_trunc(qp, t_degree),
        PolyOp::Scale => {
            let c = qp
                .as_constant()
                .ok_or_else(|| Error::Usage("scale expects a constant factor".into()))?;
            p.scale(&c).truncate(t_degree)
        }
    })
}
