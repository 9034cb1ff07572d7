//! Overdamped Frenkel–Kontorova chains driven by a pulsating site potential:
//! simulation on periodic cells, measure statistics, exact circle transport
//! distances, continued fractions, and closed-form lower bounds on the
//! transport speed.

pub mod bounds;
pub mod dynamics;
pub mod error;
pub mod harness;
pub mod measure;
pub mod numtheory;
pub mod potentials;

pub use error::{Error, Result};
