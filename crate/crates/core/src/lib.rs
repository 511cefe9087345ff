//! Mean-field Ising models on approximately regular coupling matrices.
//!
//! The crate is organized around the Gibbs measure
//! `P(sigma) = exp((beta/2) sigma' A sigma + B sum_i sigma_i) / Z` on
//! spin vectors `sigma` in `{-1,+1}^n`, where `A` is a symmetric
//! nonnegative coupling matrix with zero diagonal:
//!
//! * [`coupling`] builds the matrix ensembles (regular graphs,
//!   Erdos-Renyi, stochastic block models, block spin, Wigner, line
//!   graphs, disjoint unions) and computes spectral/regularity
//!   diagnostics and theorem rate terms.
//! * [`meanfield`] solves `t = tanh(beta t + B)`, classifies the
//!   `(beta, B)` regime, and evaluates the mean-field prediction for
//!   the log-partition function.
//! * [`exact`] enumerates partition functions and magnetization laws
//!   exactly (full enumeration, sufficient statistics, block sums).
//! * [`sampler`] draws configurations by single-site Glauber dynamics,
//!   by the exact auxiliary-variable mixture for the Curie-Weiss
//!   model, and from the analytic limit laws.
//! * [`analysis`] compares laws by Kolmogorov-Smirnov distance,
//!   evaluates centering statistics, concentration curves, and
//!   event-probability comparisons.

pub mod analysis;
pub mod coupling;
pub mod error;
pub mod exact;
pub mod meanfield;
pub mod sampler;

mod quadrature;

pub use error::{Error, Result};
