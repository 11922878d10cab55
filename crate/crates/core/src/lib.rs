//! Two-stage stochastic recourse for day-ahead EV charging under uncertain
//! PV output, solved exactly by enumeration and approximately by a QAOA whose
//! scenario distribution is amplitude-encoded into its own qubit register.

pub mod cli;
pub mod encoding;
pub mod error;
pub mod model;
pub mod oracle;
pub mod qaoa;
pub mod simulator;

pub use error::{Error, Result};
