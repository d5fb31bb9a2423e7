use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An element of `Z^N`.
///
/// The derived `Ord` is the reverse lexicographic order, so maps keyed by
/// multi-indices iterate in canonical order.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiIndex(Vec<i64>);

impl MultiIndex {
    pub fn new(entries: Vec<i64>) -> Self {
        MultiIndex(entries)
    }

    pub fn zero(n: usize) -> Self {
        MultiIndex(vec![0; n])
    }

    /// The unit vector `e_i`.
    pub fn unit(n: usize, i: usize) -> Self {
        let mut v = vec![0; n];
        v[i] = 1;
        MultiIndex(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn entries(&self) -> &[i64] {
        &self.0
    }

    pub fn get(&self, i: usize) -> i64 {
        self.0[i]
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&a| a == 0)
    }

    /// Sum of the entries.
    pub fn total(&self) -> i64 {
        self.0.iter().sum()
    }

    pub fn dot(&self, d: &[i64]) -> i64 {
        self.0.iter().zip(d).map(|(a, b)| a * b).sum()
    }

    pub fn scale(&self, k: i64) -> Self {
        MultiIndex(self.0.iter().map(|a| a * k).collect())
    }

    /// Drop the last coordinate.
    pub fn head(&self) -> Self {
        MultiIndex(self.0[..self.0.len() - 1].to_vec())
    }

    pub fn last(&self) -> i64 {
        *self.0.last().expect("empty multi-index")
    }

    pub fn with(&self, i: usize, v: i64) -> Self {
        let mut e = self.0.clone();
        e[i] = v;
        MultiIndex(e)
    }

    /// `self ⊆ other`: componentwise `<=`.
    pub fn subset_of(&self, other: &Self) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    /// Strict variant `self ⊂ other`.
    pub fn proper_subset_of(&self, other: &Self) -> bool {
        self != other && self.subset_of(other)
    }

    /// Sign of the last nonzero entry (0 for the zero index).
    pub fn revlex_sign(&self) -> i32 {
        match self.0.iter().rev().find(|&&a| a != 0) {
            Some(&a) if a > 0 => 1,
            Some(_) => -1,
            None => 0,
        }
    }

    pub fn componentwise_min(&self, other: &Self) -> Self {
        MultiIndex(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| *a.min(b))
                .collect(),
        )
    }

    pub fn componentwise_max(&self, other: &Self) -> Self {
        MultiIndex(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| *a.max(b))
                .collect(),
        )
    }

    /// All indices `v` with `lo ⊆ v ⊆ hi`, in revlex order.
    pub fn box_iter(lo: &MultiIndex, hi: &MultiIndex) -> Vec<MultiIndex> {
        let n = lo.len();
        if lo.0.iter().zip(&hi.0).any(|(a, b)| a > b) {
            return Vec::new();
        }
        let mut out = Vec::new();
        let mut cur = lo.0.clone();
        loop {
            out.push(MultiIndex(cur.clone()));
            let mut i = 0;
            loop {
                if i == n {
                    return out;
                }
                if cur[i] < hi.0[i] {
                    cur[i] += 1;
                    break;
                }
                cur[i] = lo.0[i];
                i += 1;
            }
        }
    }
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0
            .len()
            .cmp(&other.0.len())
            .then_with(|| self.0.iter().rev().cmp(other.0.iter().rev()))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Add for &MultiIndex {
    type Output = MultiIndex;
    fn add(self, rhs: &MultiIndex) -> MultiIndex {
        MultiIndex(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect())
    }
}

impl Sub for &MultiIndex {
    type Output = MultiIndex;
    fn sub(self, rhs: &MultiIndex) -> MultiIndex {
        MultiIndex(self.0.iter().zip(&rhs.0).map(|(a, b)| a - b).collect())
    }
}

impl Neg for &MultiIndex {
    type Output = MultiIndex;
    fn neg(self) -> MultiIndex {
        MultiIndex(self.0.iter().map(|a| -a).collect())
    }
}

impl From<Vec<i64>> for MultiIndex {
    fn from(v: Vec<i64>) -> Self {
        MultiIndex(v)
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, a) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, ")")
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

fn check_len(a: &MultiIndex, b: &MultiIndex) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::Usage(format!(
            "multi-index length mismatch: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    Ok(())
}

/// Reverse lexicographic comparison: decided at the largest index where the
/// entries differ.
pub fn revlex_cmp(a: &MultiIndex, b: &MultiIndex) -> Result<Ordering> {
    check_len(a, b)?;
    Ok(a.cmp(b))
}

/// The componentwise order `a ⊆ b`.
pub fn subset_leq(a: &MultiIndex, b: &MultiIndex) -> Result<bool> {
    check_len(a, b)?;
    Ok(a.subset_of(b))
}

/// `a (a-1) ... (a-k+1) / k!` for any integer `a`.
pub fn gen_binom(a: i64, k: u32) -> BigRational {
    BigRational::from_integer(gen_binom_int(a, k))
}

pub(crate) fn gen_binom_int(a: i64, k: u32) -> BigInt {
    let mut num = BigInt::one();
    let mut den = BigInt::one();
    for j in 0..k as i64 {
        num *= BigInt::from(a - j);
        den *= BigInt::from(j + 1);
    }
    if num.is_zero() {
        return num;
    }
    num / den
}
