//! qrs: an exact-arithmetic engine for multiple basic hypergeometric series
//! identities over the root systems A_n, C_n and D_n.
//!
//! The engine evaluates both sides of each registered identity independently
//! at rational parameter points: terminating cases compare exact rationals
//! for equality, non-terminating cases compare exact partial sums under a
//! truncation plan with a convergence-trend check. Identity bodies live in a
//! small declarative language (`.qid` documents) and are compiled to
//! evaluators; only the kernels and Bailey matrices are hand-coded.

pub mod bailey;
pub mod cli;
pub mod error;
pub mod exact;
pub mod kernels;
pub mod multiindex;
pub mod qpoch;

pub mod dsl;

pub mod identities;
pub mod numeric;
pub mod report;
pub fn run_cli() -> i32 {
    cli::run()
}
