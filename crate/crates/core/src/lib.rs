//! Topological amplification in driven-dissipative parametric oscillator arrays.
//!
//! The library builds the non-Hermitian Bogoliubov-de Gennes dynamical matrix of a
//! 1D chain of parametrically driven, lossy (and optionally collectively pumped)
//! bosonic modes, and computes:
//!
//! * singular spectra of `ω - H_nh`, zero-mode censuses and stability ([`spectral`]),
//! * winding-number invariants and phase diagrams ([`topology`]),
//! * finite and semi-infinite Green's functions via decimation ([`greens`]),
//! * amplifier gain, added noise, quadrature squeezing ([`observables`]),
//! * seeded disorder ensembles ([`disorder`]),
//! * effective-parameter maps for two experimental driving schemes ([`floquet`]).
//!
//! All energies and rates are expressed in units of the hopping `J`.

pub mod checks;
pub mod disorder;
pub mod error;
pub mod floquet;
pub mod greens;
pub mod model;
pub mod observables;
pub mod spectral;
pub mod topology;

pub use error::{Result, TwpaError};
pub use model::{Boundary, DynamicalMatrix, ModelConfig, ModelParams};
