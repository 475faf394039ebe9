// `Real` is f64 by default and f32 under the `f32` feature, so widening
// casts that are no-ops in one build are needed in the other.
#![allow(clippy::unnecessary_cast)]

pub mod dataset;
pub mod error;
pub mod nn;
pub mod pdbml;
pub mod seq;
pub mod synth;
pub mod train;

pub use error::{Error, Result};
