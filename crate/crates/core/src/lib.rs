//! Generalised polar codes over the binary erasure channel.
//!
//! * [`gf2`]: GF(2) vectors and matrices, kernels, partial distances and
//!   kernel enumeration.
//! * [`bec`]: exact erasure-probability evolution, polarisation distance and
//!   the block-error union bound.
//! * [`survey`]: grouping kernels by polarisation behaviour.
//! * [`codec`]: code construction, encoding and successive-cancellation
//!   decoding for any kernel.
//! * [`sim`]: reproducible Monte-Carlo simulation over the erasure channel.
//! * [`cli`]: the `genpolar` command-line front end.

pub mod bec;
pub mod cli;
pub mod codec;
pub mod error;
pub mod gf2;
pub mod io;
pub mod sim;
pub mod survey;

pub use error::{Error, Result};
