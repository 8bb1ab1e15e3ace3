//! Simulation and verification laboratory for loop-erased random walks in the
//! upper half-plane, at and near the critical point.
//!
//! The crate has three layers:
//!
//! * exact evaluators: half-plane kernels ([`geometry`]), boundary-to-boundary
//!   local-time correlators ([`correlators`]), closed-form and first-order
//!   hitting probabilities ([`hitting`]), and a solvable one-dimensional
//!   reference model ([`walk1d`]);
//! * samplers: weighted lattice walks with loop erasure ([`lattice`]) and
//!   Loewner evolutions driven by sampled or prescribed driving functions
//!   ([`loewner`]);
//! * harness: named experiments that cross-validate the two layers against
//!   each other and emit machine-readable records ([`experiments`]).
//!
//! Everything is deterministic given a seed: per-sample random streams are
//! keyed by `(seed, sample index)`, and parallel reductions merge partial
//! results in a fixed order, so the worker count never affects output.

pub mod correlators;
pub mod error;
pub mod field;
pub mod geometry;
pub mod hitting;
pub mod lattice;
pub mod loewner;
pub mod mc;
pub mod quad;
pub mod rng;
pub mod walk1d;

pub use error::{Error, Result};
pub use field::NuField;
pub use mc::Estimate;
