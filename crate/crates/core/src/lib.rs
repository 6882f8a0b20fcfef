//! Spontaneous-collapse field dynamics on a periodic 1+1 null lattice.
//!
//! The crate is organised bottom-up:
//!
//! * [`lattice`]: surfaces, elementary motions, the causal DAG of crossed
//!   vertices and enumeration of its linear extensions.
//! * [`quantum`]: the surface state vector, R-matrix application, GRW jump
//!   factors, hits and outcome distributions.
//! * [`dynamics`]: seeded trajectories for the GRW, Samols and purely unitary
//!   dynamics, producing [`dynamics::RunRecord`]s.
//! * [`oracle`]: exact enumeration of history probabilities and checks of
//!   labeling independence, spacelike commutation, the Heisenberg form and
//!   no-signaling.
//! * [`experiments`]: macroscopic collapse, noise structure and
//!   initial-state dependence studies.
//! * [`config`], [`record`], [`render`], [`verify`] and [`cli`]: the
//!   command-line front end and its file formats.

pub mod cli;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod lattice;
pub mod oracle;
pub mod quantum;
pub mod record;
pub mod render;
pub mod stats;
pub mod verify;

pub use error::{Error, Result};
