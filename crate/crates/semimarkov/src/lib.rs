//! Monte Carlo simulation of first exit times for time-changed
//! (semi-Markov) processes `X(t) = M(L(t))`, where `M` is a Gauss-Markov
//! process and `L` is the inverse of a stable subordinator, together with
//! the closed-form predictors the simulated distributions are verified
//! against: power-law and Mittag-Leffler tails at large times, regular
//! variation and rapid-decay behaviour at small times, and the
//! transformation calculus connecting Gauss-Markov processes to Wiener and
//! Ornstein-Uhlenbeck targets. A threshold-and-reset leaky
//! integrate-and-fire membrane model with heavy-tailed inter-spike
//! intervals builds on the same machinery.

pub mod asymptotics;
pub mod error;
pub mod exit_mc;
pub mod gauss_markov;
pub mod lif;
pub mod quad;
pub mod rng;
pub mod special;
pub mod subordination;

pub use error::{Error, Result};
