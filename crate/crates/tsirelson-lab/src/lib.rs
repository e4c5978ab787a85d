//! Exact-arithmetic laboratory for the Tsirelson norm and its comparison
//! diagnostics on finite sections of `c00`.
//!
//! The crate computes the Figiel–Johnson norm iterates and their limit with
//! exact rational arithmetic, certifies distortion constants between norms of
//! a small catalog, evaluates the pair formula
//! `phi(a, b) = 1 - log D(a, b) / (1 + log D(a, b))`, and runs finite
//! double-limit diagnostics (the `sup_{i<j} = inf_{j<i}` criterion and the
//! König–Kuhn `u = v` relation) over matrices of `phi` values.
//!
//! Modules:
//! - [`ratvec`]: exact rational vectors, intervals, and the base norms.
//! - [`tsirelson`]: norm iterates, the limit norm, admissible partitions and
//!   a brute-force oracle.
//! - [`distortion`]: distortion estimates with checkable witnesses and the
//!   pair formula.
//! - [`limits`]: phi matrices and the double-limit reports.
//! - [`lab`]: experiment configs, deterministic runs, and persistence.

pub mod distortion;
pub mod lab;
pub mod limits;
pub mod ratvec;
pub mod tsirelson;

pub use ratvec::{IndexInterval, Rational, Vec00};
pub use tsirelson::{AdmissiblePartition, NormComputation, NormLevel};
