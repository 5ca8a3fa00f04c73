//! Exact stochastic simulation of compartmental epidemics on static,
//! multiplex and activity-driven temporal contact networks, with mean-field
//! calibration and batch analysis.
//!
//! The crate is organized bottom-up:
//!
//! - [`netgen`] builds and measures contact networks;
//! - [`epimodel`] describes compartment models;
//! - [`calibrate`] holds the closed-form mean-field relations;
//! - [`engine`] runs continuous- and discrete-time simulations;
//! - [`analyze`] turns batches into metrics and artifacts;
//! - [`harness`] runs declarative scenario files.

pub mod analyze;
pub mod calibrate;
pub mod engine;
pub mod epimodel;
pub mod error;
pub mod fmt;
pub mod harness;
pub mod netgen;
pub mod rng;

pub use error::{Error, Result};
