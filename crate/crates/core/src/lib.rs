//! Numerical library for entanglement-harvesting observables of two uniformly
//! accelerated Unruh-DeWitt detectors coupled to a massless scalar field
//! through a Gaussian switching window.
//!
//! The library computes, per squared coupling, the transition probability P,
//! the non-local correlation term X, the concurrence of the two-detector
//! state, and the maximum harvesting-achievable separation L_max, for
//! detectors at rest and in parallel, anti-parallel, and mutually
//! perpendicular acceleration. All quantities are expressed in units of the
//! switching duration sigma.

pub mod kernels;
pub mod observables;
pub mod quadrature;
pub mod rangefinder;
pub mod specfun;

pub use kernels::{PhysicalConfig, Scenario};
pub use observables::{ObservableRecord, Tolerances};
pub use rangefinder::{RangeResult, SweepSpec, VaryParam};
