//! QAOA workbench for hardware-grid, 3-regular and Sherrington-Kirkpatrick
//! Ising instances on a square-lattice Sycamore-style device.

pub mod analysis;
pub mod circuit;
pub mod error;
pub mod mitigation;
pub mod optimizer;
pub mod par;
pub mod problems;
pub mod rng;
pub mod routing;
pub mod simulator;
pub mod synthesis;

pub use error::{Error, Result};
