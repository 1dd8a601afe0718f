//! Landscape-modified Metropolis-Hastings: transformed energies, exact chain
//! analysis, Curie-Weiss and Ehrenfest models, and annealing schedules.

pub mod analysis;
pub mod annealing;
pub mod chain;
pub mod cli;
pub mod curie_weiss;
pub mod ehrenfest;
pub mod error;
pub mod linalg;
pub mod quadrature;
pub mod stats;
pub mod transform;

pub use error::{Error, Result};
