//! Phase spaces over locally compact abelian groups: Weyl operators,
//! uncertainty measures, ground-state trade-off curves, covariant phase-space
//! measurements, and optimal cloning.

pub mod analytic;
pub mod cloning;
pub mod covariant;
pub mod error;
pub mod group;
pub mod groundstate;
pub mod linalg;
pub mod metrics;
pub mod operators;
pub mod state;

pub use error::{Error, Result};
pub use group::{Axis, AxisKind, Group, PhasePoint, Side};
