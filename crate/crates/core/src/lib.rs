//! Digit-by-digit constructions of absolutely normal numbers together with
//! exact tools for measuring how fast their orbits equidistribute.
//!
//! * [`arith`]: exact rationals, modular fractional parts, certified floors
//!   and cross-base digit extraction.
//! * [`constants`]: explicit constants of the trigonometric-product estimate
//!   for a pair of multiplicatively independent bases.
//! * [`plan`]: the base sequences and their repetition function.
//! * [`schedule`] and [`schmidt`]: the exhaustive-minimisation construction.
//! * [`equidist`]: discrepancy, Weyl sums, Erdős–Turán bounds and friends.
//! * [`sierpinski`]: the interval-removal construction.

pub mod arith;
pub mod constants;
pub mod equidist;
pub mod error;
pub mod plan;
pub mod report;
pub mod schedule;
pub mod schmidt;
pub mod sierpinski;

pub use arith::Rational;
pub use error::{Error, Result};

/// Version string embedded in state files and reports.
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
