//! Rearrangement-invariant norms, weight transforms and Fourier inequality
//! checks on the half-line.

// Negated comparisons are deliberate: they reject NaN alongside out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod conditions;
pub mod error;
pub mod evalfn;
pub mod fourier;
pub mod nfunction;
pub mod norms;
pub mod ops;
pub mod quad;
pub mod serde_ext;
pub mod step;
pub mod weights;

pub use error::{Error, Result};
pub use evalfn::{EvalFn, Monotone};
pub use quad::{Integral, OriginBound, QuadSpec, TailEnvelope};
pub use step::{distribution, rearrange, StepFn};
pub use weights::{Piece, Weight, WeightFn};
pub use nfunction::NFunction;
pub use norms::{Norm, NormSpec};
