//! Square-root-free adaptive gradient methods at desk scale.
//!
//! This crate implements diagonal, full-matrix, and Kronecker-factored
//! adaptive optimizers in matched root-based / square-root-free pairs, the
//! aggregated-gradient empirical Fisher constructions that justify dropping
//! the root, an inverse-free variant that tolerates very low precision, and
//! an executable verification harness for the properties that distinguish
//! the two families (affine invariance, loss-scale invariance, mini-batch
//! Fisher unbiasedness, first-order equivalence of the inverse-free update,
//! positive-definiteness preservation, and low-precision stress behavior).
//!
//! Start with the `examples/` directory: each example is a runnable
//! demonstration of one capability. The `rootfree` binary exposes the same
//! machinery as `run`, `verify`, and `fisher-dump` subcommands.

pub mod cli;
pub mod config;
pub mod fisher;
pub mod linalg;
pub mod optim;
pub mod precision;
pub mod problems;
pub mod verify;

pub use linalg::Mat;
pub use optim::{Hyper, Method};
pub use precision::{FloatFormat, PrecisionPolicy, PrecisionScope};
