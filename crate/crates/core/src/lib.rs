//! Constructive common segments and O-segments.
//!
//! The crate builds increasing families of interval-sets `u(t)` calibrated so
//! that several signed densities simultaneously integrate to `t` over `u(t)`:
//! dyadic common segments on finite spaces, glued segments on σ-finite
//! spaces, all-open O-segments behind an abstract space oracle, and the
//! machinery refuting the infinite-family case.

pub mod counterexample;
pub mod density;
pub mod error;
pub mod interval_set;
pub mod oseg;
pub mod segment;
pub mod sigma;

pub use density::{Density, DensityFamily};
pub use error::{Error, Result};
pub use interval_set::{Interval, IntervalSet, SetOp};
pub use segment::{common_segment, lebesgue_segment, universal_chord, ChordSolution, DyadicSegment, SegmentConfig};
