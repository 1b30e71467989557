//! Steady-state angle stability limits of classic multi-machine power
//! systems, estimated mode by mode from generalized power-angle curves.
//!
//! The pipeline runs power flow → network reduction → swing-model Jacobian
//! → modal decomposition → limit search on each mode's curve →
//! reconstruction of the limiting steady state → MW margins. The
//! [`oracle`] module provides a brute-force ray-scanning reference.

pub mod dynamics;
pub mod error;
pub mod limits;
pub mod linalg;
pub mod modal;
pub mod netmodel;
pub mod options;
pub mod oracle;
pub mod pipeline;
pub mod powerflow;
pub mod validate;

pub use error::{Error, Result};
pub use options::AnalysisOptions;
