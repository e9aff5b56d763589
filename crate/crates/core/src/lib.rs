//! Multi-bit extraction from non-oblivious bit-fixing sources.
//!
//! A source of `n` bits has a set of bad coordinates chosen by an adversary
//! after seeing the rest, which are drawn from a `t`-wise independent (or
//! small-bias) distribution. The extractor in [`bfext`] applies a resilient
//! function to each block of the input and compresses the block outputs with
//! the generator matrix of a linear code.

pub mod bfext;
pub mod cli;
pub mod codes;
pub mod distribution;
pub mod error;
pub mod field;
pub mod gf2;
pub mod limits;
pub mod resilient;
pub mod rng;
pub mod sources;
pub mod stats;

pub use bfext::{extract, BfextParams, ExtractionTrace};
pub use codes::LinearCode;
pub use distribution::Distribution;
pub use error::{Error, Result};
pub use gf2::{BitMatrix, BitVector};
pub use limits::Limits;
pub use resilient::ResilientFunction;
pub use sources::{AdversaryStrategy, GoodBitDistribution, NobfSourceSpec};
