pub mod absint;
pub mod boundscheck;
pub mod config;
pub mod harness;
pub mod ir;
pub mod numdom;
pub mod pointsto;

pub use num_bigint::BigInt;

/// Arbitrary-precision integer used for all analysis arithmetic.
pub type Int = BigInt;
/// Interval state over analysis dimensions.
pub type IntervalState = numdom::Intervals<numdom::Dimension, Int>;
/// Polyhedron state over analysis dimensions.
pub type PolyState = numdom::Polyhedron<numdom::Dimension, Int>;
