//! Analytical link budget and Monte Carlo cross-check for a coherent optical
//! system that carries Gaussian-modulated key material and QPSK classical
//! bits on the same pulses, received with a locally generated oscillator.
//!
//! The crate computes, for a lossy fiber channel with phase noise split into
//! trusted and untrusted parts:
//!
//! * the QPSK displacement amplitude that meets a target classical bit error
//!   rate ([`classical::solve_displacement`]),
//! * the full noise decomposition seen by receiver and eavesdropper
//!   ([`noise::assemble`]),
//! * the asymptotic reverse-reconciliation secure key rate against collective
//!   attacks, including the optimum modulation variance
//!   ([`keyrate::key_rate`], [`keyrate::optimize_va`]),
//! * shot-limited carrier phase recovery statistics ([`phase`]),
//! * and an independent symbol-by-symbol simulation of the same link used to
//!   validate the closed forms ([`sim`]).
//!
//! All variances are in shot-noise units with the vacuum quadrature variance
//! fixed at `N0 = 1/4`. Every model type is generic over the scalar via
//! [`Real`]; `f64` is the intended precision and the aliases at the crate
//! root refer to it.

pub mod classical;
pub mod erf;
pub mod error;
pub mod keyrate;
pub mod noise;
pub mod optimize;
pub mod params;
pub mod phase;
pub mod rng;
pub mod scalar;
pub mod sim;

pub use error::{Error, Result};
pub use scalar::{real, Real};

pub use params::{channel_transmittance, PhaseNoiseBudget, QuadraturePair, SystemParams};

/// Double precision instantiations of the core model types.
pub type SystemParams64 = params::SystemParams<f64>;
pub type PhaseNoiseBudget64 = params::PhaseNoiseBudget<f64>;
pub type QuadraturePair64 = params::QuadraturePair<f64>;
pub type NoiseDecomposition64 = noise::NoiseDecomposition<f64>;
pub type DisplacementSolution64 = classical::DisplacementSolution<f64>;
pub type KeyRateReport64 = keyrate::KeyRateReport<f64>;
pub type EmpiricalReport64 = sim::EmpiricalReport<f64>;
