//! Numerical engine for embedding quantum simulations of time parity,
//! spatial parity and Galilean boosts in a trapped-ion system.

pub mod error;
pub mod hilbert;
pub mod ion_model;
pub mod lindblad;
pub mod measurement;
pub mod oracle;
pub mod protocols;
pub mod simulation;

pub use error::{Error, Result};
