//! Econometrics for patent landscapes: corpus linkage, portfolio and
//! concentration indices, first-citation survival, PPML gravity with
//! dyad-clustered inference, two-step selection correction, and seeded
//! synthetic data with recorded ground truth.
//!
//! With the default `parallel` feature, row-blocked reductions run on rayon.
//! Blocks are fixed-size and combined in order, so results are bit-identical
//! to the sequential build and independent of the thread count.

pub mod corpus;
pub mod error;
pub mod gravity;
pub mod indices;
mod linalg;
pub mod par;
pub mod registry;
pub mod selection;
pub mod survival;
pub mod synth;

pub use error::{Error, Result, RowIssue};
