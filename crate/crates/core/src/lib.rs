//! Exact and approximate waiting-time analysis for the alternating-service
//! recursion `W = max{0, B − A − W}`.
//!
//! `A` is exponential with rate `μ`; `B` lives on `[0, 1]`. For polynomial
//! CDFs of `B` the stationary law of `W` is computed exactly ([`solver`]);
//! other bounded laws are approximated by Bernstein fits ([`bernstein`]) with
//! certified error bounds ([`bounds`]). Two independent references, a
//! fixed-point iteration of the defining contraction and a Monte Carlo run
//! of the recursion, live in [`oracle`].

pub mod bernstein;
pub mod bounds;
pub mod distributions;
pub mod error;
pub mod export;
pub mod oracle;
pub mod poly;
pub mod random;
pub mod solver;

pub use distributions::{Cdf, DistSpec, ExponentialService, PiecewisePolynomialCdf, PolynomialCdf, Preparation};
pub use error::{Error, Result};
pub use solver::{solve, WaitingTimeSolution};
