use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::multi::MultiIndex;
use super::timepoly::{Mono, MAX_TIMES};
use crate::error::{Error, Result};

/// Which splitting `P = P+ + P-` is in force.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SplitMode {
    #[default]
    Revlex,
    Componentwise,
}

/// Time alphabets. `T` times `t_α` drive the hierarchy; `S` times are the
/// separate alphabet of adjoint wave functions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Family {
    T,
    S,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Time {
    pub family: Family,
    /// For `T` this is `α`; for `S` the time `s_i` is stored as `i·e_N`.
    pub index: MultiIndex,
}

/// User-facing truncation parameters.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruncationConfig {
    pub n_vars: usize,
    pub d_box_lo: MultiIndex,
    pub d_box_hi: MultiIndex,
    pub x_lo: MultiIndex,
    pub x_hi: MultiIndex,
    /// Cap on time degree: total degree for series, degree in the
    /// non-unit times for operators.
    pub t_degree: u32,
    pub active_times: Vec<MultiIndex>,
    #[serde(default)]
    pub split_mode: SplitMode,
    /// Cap on the graded weight; `None` picks a default from `t_degree`.
    #[serde(default)]
    pub weight: Option<i64>,
    /// Positive grading vector `d`; empty means all ones.
    #[serde(default)]
    pub grading: Vec<i64>,
}

impl TruncationConfig {
    /// Boxes `[-b, b]^N` and `[-x, x]^N`, times `0 ⊂ α ⊆ top`.
    pub fn with_boxes(n: usize, d: i64, x: i64, t_degree: u32, top: &MultiIndex) -> Self {
        let zero = MultiIndex::zero(n);
        let active_times = MultiIndex::box_iter(&zero, top)
            .into_iter()
            .filter(|a| !a.is_zero())
            .collect();
        TruncationConfig {
            n_vars: n,
            d_box_lo: MultiIndex::new(vec![-d; n]),
            d_box_hi: MultiIndex::new(vec![d; n]),
            x_lo: MultiIndex::new(vec![-x; n]),
            x_hi: MultiIndex::new(vec![x; n]),
            t_degree,
            active_times,
            split_mode: SplitMode::Revlex,
            weight: None,
            grading: Vec::new(),
        }
    }

    /// N=2, ∂-box `[-6,6]²`, x-window `[-12,12]²`, t_degree 3, times up to (2,2).
    pub fn cli_default() -> Self {
        Self::with_boxes(2, 6, 12, 3, &MultiIndex::new(vec![2, 2]))
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_vars;
        if n == 0 {
            return Err(Error::Usage("n_vars must be positive".into()));
        }
        for (name, v) in [
            ("d_box_lo", &self.d_box_lo),
            ("d_box_hi", &self.d_box_hi),
            ("x_lo", &self.x_lo),
            ("x_hi", &self.x_hi),
        ] {
            if v.len() != n {
                return Err(Error::Usage(format!(
                    "{name} has length {} but n_vars is {n}",
                    v.len()
                )));
            }
        }
        let zero = MultiIndex::zero(n);
        if !self.d_box_lo.subset_of(&zero) || !zero.subset_of(&self.d_box_hi) {
            return Err(Error::Usage("∂-box must contain 0".into()));
        }
        if !self.x_lo.subset_of(&zero) || !zero.subset_of(&self.x_hi) {
            return Err(Error::Usage("x-window must contain 0".into()));
        }
        for a in &self.active_times {
            if a.len() != n {
                return Err(Error::Usage(format!("time index {a} has wrong length")));
            }
            if !zero.proper_subset_of(a) {
                return Err(Error::Usage(format!(
                    "time index {a} does not satisfy 0 ⊂ α"
                )));
            }
            if !a.subset_of(&self.d_box_hi) {
                return Err(Error::Usage(format!(
                    "time index {a} lies outside the ∂-box"
                )));
            }
        }
        for i in 0..n {
            if !self.active_times.contains(&MultiIndex::unit(n, i)) {
                return Err(Error::Usage(format!(
                    "active_times must contain e_{}",
                    i + 1
                )));
            }
        }
        if !self.grading.is_empty()
            && (self.grading.len() != n || self.grading.iter().any(|&g| g <= 0))
        {
            return Err(Error::Usage(
                "grading must have n_vars positive entries".into(),
            ));
        }
        Ok(())
    }

    /// Problems that do not prevent a run but usually produce clipped results.
    pub fn advisories(&self) -> Vec<String> {
        let mut out = Vec::new();
        let d = self.grading_vec();
        let maxw = self
            .active_times
            .iter()
            .map(|a| a.dot(&d))
            .max()
            .unwrap_or(0);
        let w = self.weight_cap();
        if w < maxw {
            out.push(format!("weight cap {w} is below the weight {maxw} of the heaviest time; its flow is not resolved"));
        }
        let reach = self.x_lo.entries().iter().map(|v| -v).min().unwrap_or(0);
        let tmax = self
            .active_times
            .iter()
            .flat_map(|a| a.entries().to_vec())
            .max()
            .unwrap_or(0);
        if (self.t_degree as i64) * tmax > reach {
            out.push(format!(
                "t_degree {} times largest time entry {tmax} exceeds the x-window depth {reach}; the exponential is clipped",
                self.t_degree
            ));
        }
        out
    }

    pub fn grading_vec(&self) -> Vec<i64> {
        if self.grading.is_empty() {
            vec![1; self.n_vars]
        } else {
            self.grading.clone()
        }
    }

    pub fn weight_cap(&self) -> i64 {
        self.weight.unwrap_or_else(|| {
            let d = self.grading_vec();
            let maxw = self
                .active_times
                .iter()
                .map(|a| a.dot(&d))
                .max()
                .unwrap_or(1);
            maxw + self.t_degree as i64 + 1
        })
    }
}

/// Index of a precision functional. After the `N` grade coordinates come `N`
/// more holding the time part of the grade (series only).
pub const F_WEIGHT: usize = 0;
pub const F_NDEG: usize = 1;
pub const F_TDEG: usize = 2;
pub const F_GRADE0: usize = 3;

/// Shared description of the variables: `N`, the time alphabet, grading,
/// windows and the splitting mode. Every series and operator points to one.
#[derive(Debug, PartialEq, Eq)]
pub struct Ctx {
    pub n: usize,
    pub times: Vec<Time>,
    pub grading: Vec<i64>,
    pub split: SplitMode,
    pub d_box: Option<(MultiIndex, MultiIndex)>,
    pub x_window: Option<(MultiIndex, MultiIndex)>,
    pub t_degree: u32,
    pub weight: i64,
    /// Drop series terms below the window without lowering caps. Sound for
    /// computations where such terms can never move back into the window.
    pub trust_below: bool,
    time_grade: Vec<MultiIndex>,
    time_weight: Vec<i64>,
    unit_slot: Vec<usize>,
    unit_of: Vec<Option<usize>>,
}

pub type CtxRef = Arc<Ctx>;

impl Ctx {
    pub fn from_config(cfg: &TruncationConfig) -> Result<CtxRef> {
        cfg.validate()?;
        let times = cfg
            .active_times
            .iter()
            .map(|a| Time {
                family: Family::T,
                index: a.clone(),
            })
            .collect();
        let mut c = Self::build(cfg.n_vars, times, cfg.grading_vec(), cfg.split_mode)?;
        c.d_box = Some((cfg.d_box_lo.clone(), cfg.d_box_hi.clone()));
        c.x_window = Some((cfg.x_lo.clone(), cfg.x_hi.clone()));
        c.t_degree = cfg.t_degree;
        c.weight = cfg.weight_cap();
        Ok(Arc::new(c))
    }

    /// A context without windows, with the given `T` times.
    pub fn plain(n: usize, times: &[MultiIndex], t_degree: u32, weight: i64) -> Result<CtxRef> {
        let times = times
            .iter()
            .map(|a| Time {
                family: Family::T,
                index: a.clone(),
            })
            .collect();
        let mut c = Self::build(n, times, vec![1; n], SplitMode::Revlex)?;
        c.t_degree = t_degree;
        c.weight = weight;
        Ok(Arc::new(c))
    }

    fn build(n: usize, mut times: Vec<Time>, grading: Vec<i64>, split: SplitMode) -> Result<Ctx> {
        times.sort();
        times.dedup();
        if times.len() > MAX_TIMES {
            return Err(Error::Usage(format!(
                "at most {MAX_TIMES} time variables are supported, got {}",
                times.len()
            )));
        }
        for t in &times {
            if t.index.len() != n {
                return Err(Error::Usage(format!(
                    "time index {} has wrong length",
                    t.index
                )));
            }
        }
        let time_grade: Vec<MultiIndex> = times.iter().map(|t| t.index.clone()).collect();
        let time_weight = time_grade.iter().map(|g| g.dot(&grading)).collect();
        let mut unit_slot = vec![usize::MAX; n];
        let mut unit_of = vec![None; times.len()];
        for (k, t) in times.iter().enumerate() {
            if t.family == Family::T {
                for i in 0..n {
                    if t.index == MultiIndex::unit(n, i) {
                        unit_slot[i] = k;
                        unit_of[k] = Some(i);
                    }
                }
            }
        }
        if unit_slot.contains(&usize::MAX) {
            return Err(Error::Usage(
                "the unit times t_{e_i} must all be active".into(),
            ));
        }
        Ok(Ctx {
            n,
            times,
            grading,
            split,
            d_box: None,
            x_window: None,
            t_degree: 0,
            weight: 0,
            trust_below: false,
            time_grade,
            time_weight,
            unit_slot,
            unit_of,
        })
    }

    /// A copy of this context extended by the adjoint times `s_1..s_m`.
    pub fn with_s_times(&self, m: usize) -> Result<CtxRef> {
        let mut times = self.times.clone();
        for i in 1..=m {
            times.push(Time {
                family: Family::S,
                index: MultiIndex::unit(self.n, self.n - 1).scale(i as i64),
            });
        }
        let mut c = Self::build(self.n, times, self.grading.clone(), self.split)?;
        c.d_box = self.d_box.clone();
        c.x_window = self.x_window.clone();
        c.t_degree = self.t_degree;
        c.weight = self.weight;
        c.trust_below = self.trust_below;
        Ok(Arc::new(c))
    }

    /// The same context with `trust_below` set.
    pub fn with_trust_below(&self) -> CtxRef {
        let mut c = self.clone_fields();
        c.trust_below = true;
        Arc::new(c)
    }

    fn clone_fields(&self) -> Ctx {
        let mut c = Self::build(self.n, self.times.clone(), self.grading.clone(), self.split)
            .expect("rebuilding a valid context");
        c.d_box = self.d_box.clone();
        c.x_window = self.x_window.clone();
        c.t_degree = self.t_degree;
        c.weight = self.weight;
        c.trust_below = self.trust_below;
        c
    }

    /// The same context with windows removed.
    pub fn unwindowed(&self) -> CtxRef {
        let mut c = Self::build(self.n, self.times.clone(), self.grading.clone(), self.split)
            .expect("rebuilding a valid context");
        c.t_degree = self.t_degree;
        c.weight = self.weight;
        Arc::new(c)
    }

    /// The same context with a different splitting mode.
    pub fn with_split(&self, split: SplitMode) -> CtxRef {
        let mut c = self.clone_fields();
        c.split = split;
        Arc::new(c)
    }

    pub fn nt(&self) -> usize {
        self.times.len()
    }

    pub fn nfun(&self) -> usize {
        F_GRADE0 + 2 * self.n
    }

    /// Index of the functional holding the time part of grade coordinate `i`.
    pub fn f_y(&self, i: usize) -> usize {
        F_GRADE0 + self.n + i
    }

    /// Whether functional `j` is one that operators never cap.
    pub fn series_only(&self, j: usize) -> bool {
        j == F_TDEG || j >= F_GRADE0 + self.n
    }

    /// Slot of the `T` time with index `a`.
    pub fn time_slot(&self, a: &MultiIndex) -> Option<usize> {
        self.times
            .iter()
            .position(|t| t.family == Family::T && &t.index == a)
    }

    /// Slot of the adjoint time `s_i`.
    pub fn s_slot(&self, i: usize) -> Option<usize> {
        let idx = MultiIndex::unit(self.n, self.n - 1).scale(i as i64);
        self.times
            .iter()
            .position(|t| t.family == Family::S && t.index == idx)
    }

    pub fn unit_slot(&self, i: usize) -> usize {
        self.unit_slot[i]
    }

    /// `Some(i)` when slot `k` holds the unit time `t_{e_i}`.
    pub fn unit_of(&self, k: usize) -> Option<usize> {
        self.unit_of[k]
    }

    pub fn is_unit_slot(&self, k: usize) -> bool {
        self.unit_of[k].is_some()
    }

    pub fn time_grade(&self, k: usize) -> &MultiIndex {
        &self.time_grade[k]
    }

    pub fn time_weight(&self, k: usize) -> i64 {
        self.time_weight[k]
    }

    /// The active `T` times, in canonical order.
    pub fn t_times(&self) -> Vec<MultiIndex> {
        self.times
            .iter()
            .filter(|t| t.family == Family::T)
            .map(|t| t.index.clone())
            .collect()
    }

    /// Non-unit `T` times.
    pub fn flow_times(&self) -> Vec<MultiIndex> {
        self.times
            .iter()
            .enumerate()
            .filter(|(k, t)| t.family == Family::T && !self.is_unit_slot(*k))
            .map(|(_, t)| t.index.clone())
            .collect()
    }

    /// Functional values `[weight, ndeg, tdeg, grade_1..grade_N, y_1..y_N]`
    /// of the term `t^κ x^f` (series) or `t^κ ∂^{-f}` (operators, pass
    /// `f = -e`), where `y` is the contribution of `t^κ` to the grade.
    pub fn values(&self, m: &Mono, f: &MultiIndex) -> Vec<i64> {
        let n = self.n;
        let mut y = vec![0i64; n];
        let mut ndeg = 0i64;
        let mut tdeg = 0i64;
        for k in 0..self.nt() {
            let e = m.get(k) as i64;
            if e == 0 {
                continue;
            }
            tdeg += e;
            if !self.is_unit_slot(k) {
                ndeg += e;
            }
            for (yi, ti) in y.iter_mut().zip(self.time_grade[k].entries()) {
                *yi += e * ti;
            }
        }
        let mut out = Vec::with_capacity(self.nfun());
        let g: Vec<i64> = (0..n).map(|i| y[i] + f.get(i)).collect();
        out.push(g.iter().zip(&self.grading).map(|(a, b)| a * b).sum());
        out.push(ndeg);
        out.push(tdeg);
        out.extend(g);
        out.extend(y);
        out
    }

    /// Functional values of a monomial shift `x^f` (no time part).
    pub fn shift_values(&self, f: &MultiIndex) -> Vec<i64> {
        let w = f.dot(&self.grading);
        let mut out = vec![w, 0, 0];
        out.extend(f.entries().iter().copied());
        out.extend(std::iter::repeat_n(0, self.n));
        out
    }

    /// Functional values of the time `t_k` alone.
    pub fn time_values(&self, k: usize) -> Vec<i64> {
        let g = &self.time_grade[k];
        let mut out = vec![
            self.time_weight[k],
            if self.is_unit_slot(k) { 0 } else { 1 },
            1,
        ];
        out.extend(g.entries().iter().copied());
        out.extend(g.entries().iter().copied());
        out
    }

    pub fn check_same(&self, other: &Ctx) -> Result<()> {
        if std::ptr::eq(self, other) || self == other {
            Ok(())
        } else {
            Err(Error::Usage("operands live in different contexts".into()))
        }
    }
}
