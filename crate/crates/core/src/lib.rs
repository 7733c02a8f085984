//! Dynamic model, steady state, linearization, loop synthesis, closed-loop
//! simulation and efficiency analysis for a phosphate-pebble rotary dryer.

pub mod config;
pub mod control;
pub mod efficiency;
pub mod error;
pub mod exec;
pub mod linearize;
pub mod model;
pub mod params;
pub mod sim;
pub mod steady;

pub use error::{DryerError, Result};
pub use exec::Exec;
pub use model::{ExogenousInputs, ModelVariant, PlantState};
pub use params::{derive_constants, DerivedConstants, PlantParameters};
