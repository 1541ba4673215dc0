//! Numerical toolkit for compound Poisson processes with unit drift and
//! heavy-tailed jumps in heavy traffic.

pub mod asymptotics;
pub mod bmax;
pub mod distributions;
pub mod engine;
pub mod error;
pub mod experiment;
pub mod lattice;
pub mod model;
pub mod quadrature;
pub mod sim;
pub mod special;

pub use distributions::{ExcessLaw, JumpLaw, LawKind, Moments};
pub use error::{Error, Result};
pub use engine::{build_stationary, Grid, StationaryTable};
pub use model::ModelParams;
