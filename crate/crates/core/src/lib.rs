//! Neutral copy-or-innovate choice dynamics on fixed networks.
//!
//! [`netgen`] builds the four topologies, [`dynamics`] runs the update rule,
//! [`metrics`] reduces a run to its statistics and [`experiment`] sweeps
//! ensembles over networks and innovation rates.

pub mod cli;
pub mod dynamics;
pub mod experiment;
pub mod metrics;
pub mod netgen;
