//! Link-level simulator for Q-learning driven adaptive modulation and coding
//! over a beam-swept mmWave downlink.
//!
//! The crate models a single base station serving one mobile UE: a geometric
//! multipath channel with pathloss, shadowing and Doppler; periodic
//! exhaustive beam sweeping over DFT codebooks; a parametric BLER link
//! abstraction over the 25-entry 64QAM MCS set; and three link-adaptation
//! policies (tabular Q-learning, a fixed lookup table, and outer-loop
//! adjustment) evaluated by a two-phase Monte Carlo protocol: one long
//! learning run that populates the Q-table, then paired deployment runs that
//! compare all policies on identical channel realizations.
//!
//! Entry points: [`config::RunConfig`] describes a scenario,
//! [`sim::run_learning_phase`] trains a Q-table, and
//! [`sim::run_deployment_phase`] produces per-run and aggregate metrics.
//! With the default `parallel` feature the deployment runs execute on a
//! rayon pool; without it the same code runs sequentially with identical
//! output.

pub mod agents;
pub mod beams;
pub mod channel;
pub mod config;
pub mod error;
pub mod link;
pub mod report;
pub mod sim;

pub use error::{Error, Result};
