pub mod config;
pub mod error;
pub mod fdt;
pub mod integrator;
pub mod kernels;
pub mod medium;
pub mod output;
pub mod pulses;
pub mod quad;
pub mod regions;
pub mod units;
pub mod waveplate;

pub use error::{Error, Result};
