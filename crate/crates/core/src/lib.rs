//! Simulation of dynamical N-photon bundle emission from a longitudinally
//! coupled qubit–resonator system driven by STIRAP pulse trains.

pub mod config;
pub mod error;
pub mod hilbert;
pub mod lindblad;
pub mod model;
pub mod observables;
pub mod ode;
pub mod special;
pub mod trajectories;

pub use error::{Error, Result};
