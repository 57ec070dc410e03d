//! Trajectory block: reconstruction loss, its gradient, and the SCA loop.
//!
//! With the beamformers and auxiliary targets fixed, the trajectory only
//! enters the augmented Lagrangian through
//! `L_q(t) = ||H(q)^H X - Gamma||^2 + ||A(q) X - Lambda||^2` with `X = F W`.
//! Each SCA step linearises `L_q`, linearises the separation constraint from
//! below and solves the convex program in [`barrier`].

pub mod barrier;

use nalgebra::DVector;

pub use barrier::{solve_convex, ConvexSolution};

use crate::linalg::frob_sq;
use crate::scenario::{ChannelScale, Scenario, Trajectory};
use crate::{CMatrix, Cx, Point};

/// Fixed quantities of one slot seen by the trajectory block.
#[derive(Debug, Clone)]
pub struct SlotTargets {
    /// Effective precoder `F W`.
    pub precoder: CMatrix,
    /// Target for `H^H F W` (`K x (K+S)`).
    pub gamma: CMatrix,
    /// Target for `A F W` (`(Mr Nr) x (K+S)`).
    pub lambda: CMatrix,
    /// Multiplier of this slot's loss in the total, `1 / (2 rho(t))` in the solver.
    pub weight: f64,
}

/// Evaluates `L_q` and its gradient under a given channel scaling.
#[derive(Debug, Clone, Copy)]
pub struct LqModel<'a> {
    pub scenario: &'a Scenario,
    pub scale: &'a ChannelScale,
}

impl LqModel<'_> {
    /// Unweighted `L_q` at one slot, built from the channel model directly.
    pub fn value(&self, positions: &[Point], t: usize, tg: &SlotTargets) -> f64 {
        let h = self.scenario.scaled_user_channels(positions, t, self.scale);
        let a = self.scenario.scaled_sensing(positions, t, self.scale);
        frob_sq(&(h.adjoint() * &tg.precoder - &tg.gamma)) + frob_sq(&(a * &tg.precoder - &tg.lambda))
    }

    /// Weighted sum of `L_q` over all slots.
    pub fn total(&self, traj: &Trajectory, targets: &[SlotTargets]) -> f64 {
        targets
            .iter()
            .enumerate()
            .map(|(t, tg)| tg.weight * self.value(traj.slot(t), t, tg))
            .sum()
    }

    /// Analytic gradient of the unweighted `L_q` with respect to the stacked
    /// positions `[q_1; ..; q_M]` at one slot.
    ///
    /// Every channel entry depends on a UAV position only through its 3D
    /// distance `d` to the ground point, via `1/d` and the phase
    /// `kappa n H / d`, so the chain rule runs through `d`.
    pub fn gradient(&self, positions: &[Point], t: usize, tg: &SlotTargets) -> DVector<f64> {
        let sc = self.scenario;
        let p = &sc.params;
        let kappa_h = p.phase_constant() * p.altitude;
        let (mt, mr, nt, nr) = (sc.mt, sc.mr, sc.nt, sc.nr);
        let x = &tg.precoder;
        let cols = x.ncols();
        let mut grad = DVector::zeros(2 * sc.n_uavs());
        let mut push = |m: usize, ground: &Point, d: f64, dl_dd: f64| {
            let dir = (positions[m] - ground) / d;
            grad[2 * m] += dl_dd * dir.x;
            grad[2 * m + 1] += dl_dd * dir.y;
        };

        // S_i = sum_n conj(a_n) x_{n,i} and dS_i/dd for one Tx UAV
        let tx_projection = |m: usize, d: f64| -> (Vec<Cx>, Vec<Cx>) {
            let mut s = vec![Cx::new(0.0, 0.0); cols];
            let mut ds = vec![Cx::new(0.0, 0.0); cols];
            for n in 0..nt {
                let phase = kappa_h * n as f64 / d;
                let a_conj = Cx::from_polar(1.0, -phase);
                let da_conj = a_conj * Cx::new(0.0, kappa_h * n as f64 / (d * d));
                for i in 0..cols {
                    let xv = x[(m * nt + n, i)];
                    s[i] += a_conj * xv;
                    ds[i] += da_conj * xv;
                }
            }
            (s, ds)
        };

        // communication term
        let users = sc.users_at(t);
        let amp0 = p.ref_pathloss.sqrt();
        for (k, g) in users.iter().enumerate() {
            let ck = amp0 * self.scale.user[k];
            let per_uav: Vec<(f64, Vec<Cx>, Vec<Cx>)> = (0..mt)
                .map(|m| {
                    let d = p.distance(&positions[m], g);
                    let (s, ds) = tx_projection(m, d);
                    (d, s, ds)
                })
                .collect();
            let err: Vec<Cx> = (0..cols)
                .map(|i| per_uav.iter().map(|(d, s, _)| s[i] * (ck / d)).sum::<Cx>() - tg.gamma[(k, i)])
                .collect();
            for (m, (d, s, ds)) in per_uav.iter().enumerate() {
                let dl: f64 = (0..cols)
                    .map(|i| 2.0 * (err[i].conj() * (-s[i] / (d * d) + ds[i] / *d) * ck).re)
                    .sum();
                push(m, g, *d, dl);
            }
        }

        // sensing term
        let target = sc.target_positions[t];
        let gs = p.echo_gain() * self.scale.sensing;
        let tx: Vec<(f64, Vec<Cx>, Vec<Cx>)> = (0..mt)
            .map(|m| {
                let d = p.distance(&positions[m], &target);
                let (s, ds) = tx_projection(m, d);
                (d, s, ds)
            })
            .collect();
        // u_i = a_t^H x_i
        let u: Vec<Cx> = (0..cols).map(|i| tx.iter().map(|(d, s, _)| s[i] / *d).sum()).collect();
        let rx_dist: Vec<f64> = (0..mr).map(|r| p.distance(&positions[mt + r], &target)).collect();
        let ar = |r: usize, n: usize| Cx::from_polar(1.0, kappa_h * n as f64 / rx_dist[r]) / rx_dist[r];
        let mut err = CMatrix::zeros(mr * nr, cols);
        for r in 0..mr {
            for n in 0..nr {
                let a = ar(r, n) * gs;
                for i in 0..cols {
                    err[(r * nr + n, i)] = a * u[i] - tg.lambda[(r * nr + n, i)];
                }
            }
        }
        // v_i = a_r^H e_i
        let v: Vec<Cx> = (0..cols)
            .map(|i| (0..mr * nr).map(|rn| ar(rn / nr, rn % nr).conj() * err[(rn, i)]).sum())
            .collect();
        for (m, (d, s, ds)) in tx.iter().enumerate() {
            let dl: f64 = (0..cols)
                .map(|i| 2.0 * (v[i].conj() * (-s[i] / (d * d) + ds[i] / *d) * gs).re)
                .sum();
            push(m, &target, *d, dl);
        }
        for r in 0..mr {
            let d = rx_dist[r];
            let mut dl = 0.0;
            for n in 0..nr {
                let phase = kappa_h * n as f64 / d;
                // d/dd [exp(j phase) / d]
                let da = -Cx::from_polar(1.0, phase) * Cx::new(1.0, phase) / (d * d);
                for i in 0..cols {
                    dl += 2.0 * (err[(r * nr + n, i)].conj() * da * gs * u[i]).re;
                }
            }
            push(mt + r, &target, d, dl);
        }
        grad
    }
}

/// Linearised separation constraint `normal . (q_a - q_b) >= offset` at one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct Separation {
    pub slot: usize,
    pub a: usize,
    pub b: usize,
    pub normal: Point,
    pub offset: f64,
}

/// Convex trajectory subproblem around an expansion point.
///
/// Minimise `sum_t cost[t] . q(t)` over the free slots subject to fixed
/// endpoints, the per-step speed ball of radius `step_radius`, the
/// linearised separations and a trust-region ball of radius `trust_radius`
/// around the expansion point.
#[derive(Debug, Clone)]
pub struct ConvexSubproblem {
    pub anchor: Trajectory,
    /// `cost[t][m]`; entries of the endpoint slots are ignored.
    pub cost: Vec<Vec<Point>>,
    pub step_radius: f64,
    pub trust_radius: f64,
    pub separations: Vec<Separation>,
}

/// Offset used when two UAVs coincide at the expansion point.
const COINCIDENT_NUDGE: f64 = 1e-3;

/// Builds the convex subproblem from per-slot gradients (stacked per UAV).
pub fn build_subproblem(anchor: &Trajectory, grads: &[DVector<f64>], scenario: &Scenario, trust_radius: f64) -> ConvexSubproblem {
    let n_slots = anchor.num_slots();
    let n_uavs = anchor.num_uavs();
    let cost = grads
        .iter()
        .map(|g| (0..n_uavs).map(|m| Point::new(g[2 * m], g[2 * m + 1])).collect())
        .collect();
    let d2 = scenario.d_min * scenario.d_min;
    let mut separations = Vec::new();
    if scenario.d_min > 0.0 {
        for t in 1..n_slots.saturating_sub(1) {
            for a in 0..n_uavs {
                for b in a + 1..n_uavs {
                    let mut diff = anchor.at(a, t) - anchor.at(b, t);
                    if diff == Point::zeros() {
                        diff = Point::new(COINCIDENT_NUDGE, 0.0);
                    }
                    // ||q_a - q_b||^2 >= ||diff||^2 + 2 diff . ((q_a - q_b) - diff)
                    separations.push(Separation {
                        slot: t,
                        a,
                        b,
                        normal: diff * 2.0,
                        offset: diff.norm_squared() + d2,
                    });
                }
            }
        }
    }
    ConvexSubproblem {
        anchor: anchor.clone(),
        cost,
        step_radius: scenario.v_max * scenario.delta_t,
        trust_radius,
        separations,
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ScaSettings {
    pub trust_radius: f64,
    pub max_iters: usize,
    /// Relative decrease of the weighted loss below which the loop stops.
    pub tol: f64,
    /// Duality-gap target of the convex subsolver.
    pub convex_tol: f64,
    /// Trust-region halvings tried before giving up on an iteration.
    pub max_halvings: usize,
}

#[derive(Debug, Clone)]
pub struct ScaOutcome {
    pub trajectory: Trajectory,
    pub accepted: usize,
    pub rejected: usize,
    pub loss_before: f64,
    pub loss_after: f64,
    /// Some subproblem hit the Newton cap.
    pub subsolver_stalled: bool,
}

/// SCA loop on the weighted loss with trust-region backtracking.
///
/// Each iteration starts from the full trust radius; a step that increases
/// the true loss is rejected and the radius halved.
pub fn sca_update_q(model: &LqModel, start: &Trajectory, targets: &[SlotTargets], settings: &ScaSettings) -> ScaOutcome {
    let mut q = start.clone();
    let mut loss = model.total(&q, targets);
    let loss_before = loss;
    let (mut accepted, mut rejected) = (0, 0);
    let mut stalled = false;
    for _ in 0..settings.max_iters {
        let grads: Vec<DVector<f64>> = targets
            .iter()
            .enumerate()
            .map(|(t, tg)| model.gradient(q.slot(t), t, tg) * tg.weight)
            .collect();
        let mut radius = settings.trust_radius;
        let mut step = None;
        for _ in 0..=settings.max_halvings {
            let sub = build_subproblem(&q, &grads, model.scenario, radius);
            let sol = solve_convex(&sub, settings.convex_tol);
            stalled |= sol.stalled;
            if sol.trajectory == q {
                break;
            }
            let next = model.total(&sol.trajectory, targets);
            if next <= loss {
                step = Some((sol.trajectory, next));
                break;
            }
            rejected += 1;
            radius *= 0.5;
        }
        let Some((next_q, next_loss)) = step else { break };
        let decrease = loss - next_loss;
        q = next_q;
        accepted += 1;
        let rel = decrease / loss.abs().max(f64::MIN_POSITIVE);
        loss = next_loss;
        if rel <= settings.tol {
            break;
        }
    }
    ScaOutcome {
        trajectory: q,
        accepted,
        rejected,
        loss_before,
        loss_after: loss,
        subsolver_stalled: stalled,
    }
}
