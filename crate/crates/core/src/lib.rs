//! Flight and downlink co-design for a solar-powered high-altitude platform.
//!
//! By day the platform maximises the NOMA sum rate of its cells while banking
//! energy for the night; by night it flies the minimum-power state and spends
//! the stored energy on a fixed transmit budget.

// Validation is written as `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod aero;
pub mod atmosphere;
pub mod channel;
pub mod config;
pub mod energy;
pub mod error;
pub mod noma;
pub mod optimizer;
pub mod oracle;
pub mod output;
pub mod solar;

pub use error::{Error, Result};
