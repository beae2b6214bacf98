//! Fuzzy ensemble feature importance.
//!
//! Feature-importance coefficients are produced by an ensemble of
//! (learner, importance method, resampling fold) runs, then fused through
//! data-driven fuzzy membership functions, Wang–Mendel rule induction and
//! Mamdani inference. Crisp mean / median / majority-vote fusion is
//! provided as the baseline.

pub mod error;
pub mod learners;
pub mod matrix;
pub mod rng;

pub use error::{FefiError, Result};
pub use matrix::Matrix;
pub mod stats;
pub mod synthgen;
pub mod importance;
pub mod table;
pub mod fuzzy;
pub mod rulegen;
pub mod inference;
pub mod pipeline;
pub mod harness;
