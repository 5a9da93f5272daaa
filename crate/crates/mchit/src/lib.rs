//! Finite-Markov-chain hitting and mixing toolkit.
//!
//! The crate builds randomized stationary stopping rules (hitting times of a
//! random nested set), computes hitting- and mixing-time functionals exactly
//! on small chains, simulates everything with seeded Monte Carlo, and
//! certifies a suite of inequalities relating the two families of
//! quantities. Chains are dense matrices: a generator Q (rows sum to zero)
//! in continuous time or a stochastic P in discrete time.

pub mod chain;
pub mod error;
pub mod families;
pub mod hitting;
pub mod mixing;
pub mod montecarlo;
pub mod poisson;
pub mod report;
pub mod stopping;
pub mod tolerances;
pub mod verify;

pub use chain::{validate_chain, ChainSpec, Distribution, Kernel, MarkovChain, Mode};
pub use error::{Error, Result};
pub use tolerances::Tolerances;
