//! Nash social welfare for agents with budget-additive valuations.
//!
//! The crate relaxes an allocation problem into a linear Fisher market in
//! which buyers have utility caps and sellers have earning caps, computes an
//! exact equilibrium of a perturbed version of that market with a
//! descending-price algorithm, and rounds the equilibrium allocation into an
//! integral assignment whose Nash social welfare is within a constant factor
//! of the optimum.
//!
//! All solver arithmetic is exact (`BigRational`). Floats appear only in
//! human-readable reports.
//!
//! Layout:
//! - [`instance`]: allocation and market instances, perturbation, valuations.
//! - [`io`]: the line-oriented instance and state file formats.
//! - [`flow`]: max-flow with lower bounds, the exact simplex, and the two
//!   market LPs (minimum price factor, feasible flow).
//! - [`equilibrium`]: equilibrium state, the no-utility-cap initializer, the
//!   descending-price FPTAS and the equilibrium verifiers.
//! - [`rounding`]: forest extraction, normalization, the upper bound, tree
//!   rounding and the end-to-end pipeline.
//! - [`gen`]: random instances, the three structural fixture markets and the
//!   hardness gadget.
//! - [`oracle`]: brute-force references used by the tests.
//!
//! Runnable walkthroughs live in the crate's `examples/` directory.

pub mod equilibrium;
pub mod error;
pub mod flow;
pub mod gen;
pub mod instance;
pub mod io;
pub mod oracle;
pub mod rational;
pub mod report;
pub mod rounding;

pub use error::{Error, Result};
pub use instance::{Allocation, MarketInstance, NswInstance, PerturbedMarket};
pub use rational::Rational;
