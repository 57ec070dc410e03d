//! Penalty dual decomposition solver.
//!
//! The joint problem is rewritten with auxiliary blocks `P = H^H F W`,
//! `V = F W` and `Z = A F W`, whose couplings are moved into an augmented
//! Lagrangian with multipliers `U, Y, T` and a per-slot penalty `rho`. The
//! inner loop cycles through the blocks W, F, V, Z, P, Q; the outer loop
//! either updates the multipliers or shrinks `rho`.
//!
//! Internally the solver works in reference units: transmit powers are
//! measured relative to the largest power budget and every channel is
//! divided by its norm in a reference geometry (UAV directly above the
//! ground point), so all channel matrices have norm of order one. Noise
//! powers and the sensing threshold are rescaled to match. Residuals and
//! tolerances refer to these units. Results are converted back to physical
//! units before they are returned.

pub mod blocks;
mod solver;

pub use solver::{solve, Block, PddSolver, Residuals, SlotChannels, StepInfo};

use crate::metrics::{Beamformers, FeasibilityReport};
use crate::scenario::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Initial penalty `rho`.
    pub rho0: f64,
    /// Penalty shrink factor `xi` in `(0, 1)`.
    pub shrink: f64,
    /// Violation below which the multipliers are updated instead of `rho`.
    pub eta: f64,
    /// Relative AL change that ends the inner loop.
    pub eps_inner: f64,
    /// Largest residual that ends the outer loop.
    pub eps_outer: f64,
    pub max_inner: usize,
    pub max_outer: usize,
    pub mm_iters_p: usize,
    pub mm_iters_z: usize,
    pub bcd_iters_f: usize,
    pub sca_iters_q: usize,
    /// Relative tolerance of the MM, BCD and SCA sub-loops.
    pub inner_tol: f64,
    /// Duality-gap target of the trajectory subsolver.
    pub convex_tol: f64,
    /// Trust-region radius (m).
    pub trust_region: f64,
    pub max_halvings: usize,
    /// Seed of the beamformer initialisation.
    pub seed: u64,
    /// When false the trajectory stays at its initial value.
    pub optimize_trajectory: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            rho0: 0.3,
            shrink: 0.8,
            eta: 1e-4,
            eps_inner: 1e-6,
            eps_outer: 1e-8,
            max_inner: 100,
            max_outer: 100,
            mm_iters_p: 50,
            mm_iters_z: 50,
            bcd_iters_f: 50,
            sca_iters_q: 2,
            inner_tol: 1e-10,
            convex_tol: 1e-7,
            trust_region: 2.0,
            max_halvings: 5,
            seed: 0,
            optimize_trajectory: true,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> std::result::Result<(), Vec<String>> {
        let mut errs = Vec::new();
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            errs.push(format!("shrink must lie in (0, 1) (got {})", self.shrink));
        }
        for (name, v) in [
            ("rho0", self.rho0),
            ("eta", self.eta),
            ("eps_inner", self.eps_inner),
            ("eps_outer", self.eps_outer),
            ("inner_tol", self.inner_tol),
            ("convex_tol", self.convex_tol),
        ] {
            if !(v.is_finite() && v > 0.0) {
                errs.push(format!("{name} must be finite and positive (got {v})"));
            }
        }
        if !(self.trust_region.is_finite() && self.trust_region >= 0.0) {
            errs.push("trust_region must be non-negative".into());
        }
        if self.max_outer == 0 || self.max_inner == 0 {
            errs.push("iteration caps must be at least 1".into());
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(errs)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Converged,
    IterationCapped,
}

/// One row per outer iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct OuterRecord {
    /// 1-based outer index.
    pub outer: usize,
    /// Inner iterations run in this outer iteration.
    pub inner: usize,
    pub al: f64,
    /// Weighted sum-rate of the current beamformers and trajectory.
    pub wsr: f64,
    /// Weighted sum-rate of the auxiliary block `P`.
    pub wsr_aux: f64,
    /// `max_t E(t)` before the dual/penalty update.
    pub violation: f64,
    pub rho_min: f64,
    pub rho_max: f64,
    /// Seconds since the start of the solve.
    pub elapsed: f64,
}

#[derive(Debug, Clone, Default)]
pub struct SolutionTrace {
    pub outer: Vec<OuterRecord>,
    /// Trajectory subproblems that hit the Newton cap.
    pub subsolver_stalls: usize,
    /// Times the sensing auxiliary had to be re-seeded from zero.
    pub z_reseeds: usize,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub trajectory: Trajectory,
    /// Physical-unit beamformers.
    pub beams: Beamformers,
    pub status: Status,
    pub wsr: f64,
    pub report: FeasibilityReport,
    pub outer_iterations: usize,
    pub inner_iterations: usize,
}
