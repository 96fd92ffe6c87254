//! Simulation and analysis toolkit for the uplink of an RIS-assisted
//! multi-user massive MIMO system with imperfect hardware.
//!
//! The surface applies per-element phase shifts to Rician-fading channels;
//! the base station suffers RF-chain impairments and low-resolution ADC
//! quantization, while the surface itself adds Von Mises phase noise.
//!
//! The crate provides
//! - a Monte Carlo estimator of the exact per-user ergodic achievable rate
//!   ([`mc_rate`]),
//! - closed-form rate approximations with all coefficient terms, asymptotic
//!   limits and power-scaling laws ([`closed_form`]),
//! - a genetic-algorithm phase-shift optimizer, continuous and discrete
//!   ([`ga_opt`]),
//! - reproducible experiment sweeps with CSV output ([`experiments`]).
//!
//! Everything is deterministic given a scenario seed: random draws come from
//! counter-based streams keyed by (seed, realization index, entity tag).

pub mod arrays;
pub mod channel;
pub mod closed_form;
pub mod error;
pub mod experiments;
pub mod ga_opt;
pub mod hardware;
pub mod mc_rate;
pub mod rng;
pub mod scenario;

pub use error::{Error, Result};
pub use scenario::ScenarioConfig;
