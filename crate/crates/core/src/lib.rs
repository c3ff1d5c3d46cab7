//! Monte Carlo study of photonic state tomography over lossy fiber.

pub mod channel;
pub mod cli;
pub mod error;
pub mod estimator;
pub mod exec;
pub mod experiment;
pub mod metrics;
pub mod povm;
pub mod qlinalg;
pub mod states;
pub mod validation;

pub use error::{Error, Result};
