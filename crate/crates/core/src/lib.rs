//! Joint hybrid analog/digital beamforming and trajectory design for
//! multi-UAV cell-free multi-static ISAC.
//!
//! The crate is organised around the optimisation pipeline:
//!
//! * [`scenario`] holds the physical model (geometry, line-of-sight channels,
//!   the rank-one multi-static sensing matrix) and the initial trajectory.
//! * [`metrics`] evaluates SINR, weighted sum-rate, transmit power, sensing SNR
//!   and certifies candidate solutions against every constraint.
//! * [`pdd`] is the penalty dual decomposition solver: the augmented
//!   Lagrangian, the closed-form block updates and the outer/inner driver.
//! * [`trajectory`] solves the trajectory block by successive convex
//!   approximation with a trust region and a small barrier method.
//! * [`baselines`] maps the comparison schemes onto the solver.

pub mod baselines;
pub mod error;
pub mod linalg;
pub mod metrics;
pub mod pdd;
pub mod scenario;
pub mod trajectory;

pub use error::{Error, Result};

/// Complex scalar used throughout.
pub type Cx = num_complex::Complex64;
/// Dense complex matrix.
pub type CMatrix = nalgebra::DMatrix<Cx>;
/// Dense complex column vector.
pub type CVector = nalgebra::DVector<Cx>;
/// Horizontal position in meters.
pub type Point = nalgebra::Vector2<f64>;
