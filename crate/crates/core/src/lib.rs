//! Contact variational integrators for Herglotz-Lagrangian systems.

pub mod bea;
pub mod continuous;
pub mod error;
pub mod exact;
pub mod geometry;
pub mod harness;
pub mod integrators;
pub mod newton;
pub mod system;
pub mod variational;

pub use error::{Error, Result};
pub use system::{ContactState, DampingKind, Forcing, OscillatorSystem, Potential, Trajectory};
