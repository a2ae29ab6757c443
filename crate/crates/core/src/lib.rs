//! Outage analysis, power allocation and Monte Carlo validation for
//! relay-assisted free-space optical links under Gamma-Gamma turbulence.

pub mod channel;
pub mod error;
pub mod montecarlo;
pub mod numerics;
pub mod power_alloc;
pub mod protocols;

pub use error::{Error, Result};
