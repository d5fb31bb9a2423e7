//! Multi-indices, time polynomials and truncated Laurent series.

pub mod ctx;
pub(crate) mod graded;
pub mod multi;
pub mod prec;
pub mod timepoly;
pub mod xseries;

pub use ctx::{Ctx, CtxRef, Family, SplitMode, Time, TruncationConfig};
pub use multi::{gen_binom, revlex_cmp, subset_leq, MultiIndex};
pub use prec::Prec;
pub use timepoly::{q, qf, tpoly_arith, Mono, PolyOp, TimePoly, Q};
pub use xseries::{build_exponential, exponential_windowed, pairing, wave_exponential, XSeries};
