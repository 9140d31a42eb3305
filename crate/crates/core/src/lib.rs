//! Exact Keisler measures over finite structures.
//!
//! The crate evaluates first-order formulas over finite structures, computes
//! measures and their products exactly over big rationals, and runs the
//! finite checks around definability, finite approximation, idempotent
//! measures on finite groups, and tail stability along sequences of
//! structures.

pub mod approx;
pub mod defnlab;
pub mod exact;
pub mod fol;
pub mod groups;
pub mod measures;
pub mod seqlab;
pub mod structures;
pub mod tuples;

pub use num_rational::BigRational;
