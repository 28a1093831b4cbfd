//! Simulation, sampling and statistical validation for the directed age-dependent
//! random connection model with reciprocity.

pub mod clustering;
pub mod degrees;
pub mod error;
pub mod export;
pub mod generator;
pub mod marking;
pub mod model;
pub mod percolation;
pub mod quad;
pub mod stats;
pub mod validation;

pub use error::{Error, Result};
pub use generator::{ArcKind, Digraph, Direction};
pub use marking::{SampleMode, Seed};
pub use model::{Delta, Metric, ModelParams, TorusSpec, Vertex};
