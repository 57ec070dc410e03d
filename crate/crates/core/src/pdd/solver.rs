use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::blocks::{self, BlockLayout};
use super::{OuterRecord, Solution, SolutionTrace, SolverConfig, Status};
use crate::linalg::{all_finite, frob_sq, max_abs};
use crate::metrics::{certify, uav_powers, wsr, Beamformers, Tolerances};
use crate::scenario::{init_trajectory, Architecture, ChannelScale, Scenario, Trajectory};
use crate::trajectory::{sca_update_q, LqModel, ScaSettings, SlotTargets};
use crate::{CMatrix, CVector, Cx, Error, Result};

/// Normalised channels of one slot.
#[derive(Debug, Clone)]
pub struct SlotChannels {
    /// `(Mt Nt) x K`.
    pub h: CMatrix,
    /// `(Mr Nr) x (Mt Nt)`.
    pub a: CMatrix,
    /// `I + A^H A + H H^H`.
    pub phi: CMatrix,
    /// Unit vector along the receive steering direction of `A`.
    pub a_dir: CVector,
}

/// The six blocks of the inner loop, in update order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Block {
    W,
    F,
    V,
    Z,
    P,
    Q,
}

impl Block {
    pub const ORDER: [Block; 6] = [Block::W, Block::F, Block::V, Block::Z, Block::P, Block::Q];
}

/// Diagnostics of one block update.
#[derive(Debug, Clone, Copy, Default)]
pub struct StepInfo {
    pub sub_iterations: usize,
    pub stalled: bool,
    pub reseeded: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residuals {
    pub p: f64,
    pub v: f64,
    pub z: f64,
}

impl Residuals {
    /// `E(t)`, the largest of the three entrywise residual maxima.
    pub fn max(&self) -> f64 {
        self.p.max(self.v).max(self.z)
    }
}

/// Primal, auxiliary and dual state of the PDD iteration in normalised units.
///
/// Fields are public so tests can drive individual block updates.
#[derive(Debug, Clone)]
pub struct PddSolver<'a> {
    pub scenario: &'a Scenario,
    pub config: SolverConfig,
    pub scale: ChannelScale,
    /// Power unit (W).
    pub p_ref: f64,
    /// Per-Tx-UAV budgets divided by `p_ref`.
    pub budgets: Vec<f64>,
    /// User noise powers in solver units.
    pub noise: Vec<f64>,
    /// Lower bound on `||Z||_F^2` encoding the sensing constraint.
    pub z_threshold: f64,
    pub layout: BlockLayout,
    pub q: Trajectory,
    pub f: Vec<CMatrix>,
    pub w: Vec<CMatrix>,
    pub p: Vec<CMatrix>,
    pub v: Vec<CMatrix>,
    pub z: Vec<CMatrix>,
    pub u: Vec<CMatrix>,
    pub y: Vec<CMatrix>,
    pub t: Vec<CMatrix>,
    pub rho: Vec<f64>,
    pub channels: Vec<SlotChannels>,
    pub stalls: usize,
    pub reseeds: usize,
}

impl<'a> PddSolver<'a> {
    /// Validates the inputs and builds the initial state: straight-line
    /// trajectory, random analog phases, Gaussian digital beamformers at
    /// full power, auxiliaries consistent with them and zero multipliers.
    pub fn new(scenario: &'a Scenario, config: SolverConfig) -> Result<Self> {
        scenario.validate().map_err(Error::InvalidScenario)?;
        config.validate().map_err(|e| Error::InvalidConfig(e.join("; ")))?;
        let q = init_trajectory(scenario)?;
        let p_ref = scenario.power_budget.iter().copied().fold(0.0, f64::max);
        let scale = ChannelScale::reference(scenario);
        let noise = scale.user_noise(&scenario.params, p_ref);
        let z_threshold = scenario.gamma_s * scale.sensing_noise(&scenario.params, p_ref);
        let budgets = scenario.power_budget.iter().map(|b| b / p_ref).collect();
        let layout = BlockLayout { mt: scenario.mt, nt: scenario.nt, nrf: scenario.nrf };
        let slots = scenario.slots;
        let (k, cols) = (scenario.k, scenario.streams());
        let (tx_ant, rx_ant) = (scenario.mt * scenario.nt, scenario.mr * scenario.nr);
        let mut me = Self {
            scenario,
            config,
            scale,
            p_ref,
            budgets,
            noise,
            z_threshold,
            layout,
            q,
            f: Vec::with_capacity(slots),
            w: Vec::with_capacity(slots),
            p: Vec::new(),
            v: Vec::new(),
            z: Vec::new(),
            u: vec![CMatrix::zeros(k, cols); slots],
            y: vec![CMatrix::zeros(tx_ant, cols); slots],
            t: vec![CMatrix::zeros(rx_ant, cols); slots],
            rho: vec![config.rho0; slots],
            channels: Vec::new(),
            stalls: 0,
            reseeds: 0,
        };
        me.refresh_channels();
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        for _ in 0..slots {
            let f = me.random_analog(&mut rng);
            let w = me.random_digital(&mut rng, &f);
            me.f.push(f);
            me.w.push(w);
        }
        for t in 0..slots {
            let x = &me.f[t] * &me.w[t];
            let ch = &me.channels[t];
            me.p.push(ch.h.adjoint() * &x);
            let mut z = &ch.a * &x;
            let energy = frob_sq(&z);
            let need = me.z_threshold;
            if energy < need && energy > 0.0 {
                z.scale_mut((need / energy).sqrt());
            }
            me.z.push(z);
            me.v.push(x);
        }
        Ok(me)
    }

    fn random_analog(&self, rng: &mut ChaCha8Rng) -> CMatrix {
        let sc = self.scenario;
        let rows = sc.mt * sc.nt;
        let cols = sc.mt * sc.nrf;
        if sc.architecture == Architecture::FullyDigital {
            return CMatrix::identity(rows, cols);
        }
        let alphabet = sc.phase_mode.alphabet();
        let mut f = CMatrix::zeros(rows, cols);
        for (r, c) in self.layout.support() {
            f[(r, c)] = match &alphabet {
                None => Cx::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU)),
                Some(points) => points[rng.random_range(0..points.len())],
            };
        }
        f
    }

    fn random_digital(&self, rng: &mut ChaCha8Rng, f: &CMatrix) -> CMatrix {
        let sc = self.scenario;
        let cols = sc.streams();
        let mut w = CMatrix::from_fn(sc.mt * sc.nrf, cols, |_, _| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Cx::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
        });
        let powers = uav_powers(f, &w, sc.mt, sc.nt, sc.nrf);
        for m in 0..sc.mt {
            if powers[m] > 0.0 {
                let s = (self.budgets[m] / powers[m]).sqrt();
                w.rows_mut(m * sc.nrf, sc.nrf).scale_mut(s);
            }
        }
        w
    }

    /// Recomputes the normalised channels from the current trajectory.
    pub fn refresh_channels(&mut self) {
        let sc = self.scenario;
        self.channels = (0..sc.slots)
            .map(|t| {
                let pos = self.q.slot(t);
                let h = sc.scaled_user_channels(pos, t, &self.scale);
                let sensing = sc.sensing(pos, t);
                let a = sensing.matrix.scale(self.scale.sensing);
                let phi = blocks::quadratic_form(&h, &a);
                let norm = sensing.a_r.norm();
                let a_dir = if norm > 0.0 { sensing.a_r.unscale(norm) } else { sensing.a_r };
                SlotChannels { h, a, phi, a_dir }
            })
            .collect();
    }

    pub fn precoder(&self, t: usize) -> CMatrix {
        &self.f[t] * &self.w[t]
    }

    fn rate_sum(&self, gains: &CMatrix) -> f64 {
        let sc = self.scenario;
        (0..sc.k)
            .map(|k| {
                let row: Vec<Cx> = gains.row(k).iter().copied().collect();
                sc.weights[k] * blocks::user_rate(&row, k, self.noise[k])
            })
            .sum()
    }

    /// Augmented Lagrangian value summed over slots.
    pub fn al_value(&self) -> f64 {
        (0..self.scenario.slots).map(|t| self.al_slot(t)).sum()
    }

    pub fn al_slot(&self, t: usize) -> f64 {
        let ch = &self.channels[t];
        let x = self.precoder(t);
        let rho = self.rho[t];
        let pen = frob_sq(&(&self.p[t] - ch.h.adjoint() * &x + self.u[t].scale(rho)))
            + frob_sq(&(&self.v[t] - &x + self.y[t].scale(rho)))
            + frob_sq(&(&self.z[t] - &ch.a * &x + self.t[t].scale(rho)));
        self.rate_sum(&self.p[t]) - pen / (2.0 * rho)
    }

    /// Weighted sum-rate of the current beamformers (normalised channels).
    pub fn wsr_current(&self) -> f64 {
        (0..self.scenario.slots)
            .map(|t| self.rate_sum(&(self.channels[t].h.adjoint() * self.precoder(t))))
            .sum()
    }

    /// Weighted sum-rate of the auxiliary block `P`.
    pub fn wsr_aux(&self) -> f64 {
        self.p.iter().map(|p| self.rate_sum(p)).sum()
    }

    pub fn residuals(&self, t: usize) -> Residuals {
        let ch = &self.channels[t];
        let x = self.precoder(t);
        Residuals {
            p: max_abs(&(&self.p[t] - ch.h.adjoint() * &x)),
            v: max_abs(&(&self.v[t] - &x)),
            z: max_abs(&(&self.z[t] - &ch.a * &x)),
        }
    }

    /// Dual ascent on slots whose violation is at most `eta`, penalty
    /// shrink on the others. Returns the violations used for the decision.
    pub fn dual_penalty_step(&mut self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.scenario.slots);
        for t in 0..self.scenario.slots {
            let e = self.residuals(t).max();
            out.push(e);
            if e <= self.config.eta {
                let ch = &self.channels[t];
                let x = self.precoder(t);
                let inv = 1.0 / self.rho[t];
                self.u[t] += (&self.p[t] - ch.h.adjoint() * &x).scale(inv);
                self.y[t] += (&self.v[t] - &x).scale(inv);
                self.t[t] += (&self.z[t] - &ch.a * &x).scale(inv);
            } else {
                self.rho[t] *= self.config.shrink;
            }
        }
        out
    }

    fn gamma(&self, t: usize) -> CMatrix {
        &self.p[t] + self.u[t].scale(self.rho[t])
    }

    fn upsilon(&self, t: usize) -> CMatrix {
        &self.v[t] + self.y[t].scale(self.rho[t])
    }

    fn lambda(&self, t: usize) -> CMatrix {
        &self.z[t] + self.t[t].scale(self.rho[t])
    }

    fn xi(&self, t: usize) -> CMatrix {
        let ch = &self.channels[t];
        blocks::linear_term(&ch.h, &ch.a, &self.gamma(t), &self.upsilon(t), &self.lambda(t))
    }

    /// Applies one block update on every slot.
    pub fn step(&mut self, block: Block) -> StepInfo {
        let mut info = StepInfo::default();
        let slots = self.scenario.slots;
        let cfg = self.config;
        match block {
            Block::W => {
                for t in 0..slots {
                    let xi = self.xi(t);
                    self.w[t] = blocks::update_w(&self.f[t], &self.channels[t].phi, &xi);
                }
            }
            Block::F => {
                if self.scenario.architecture == Architecture::FullyDigital {
                    return info;
                }
                for t in 0..slots {
                    let c = self.xi(t) * self.w[t].adjoint();
                    let d = &self.w[t] * self.w[t].adjoint();
                    let out = blocks::update_f(
                        &mut self.f[t],
                        &self.channels[t].phi,
                        &c,
                        &d,
                        self.layout,
                        self.scenario.phase_mode,
                        cfg.inner_tol,
                        cfg.bcd_iters_f,
                    );
                    info.sub_iterations = info.sub_iterations.max(out.sweeps);
                }
            }
            Block::V => {
                for t in 0..slots {
                    let x = self.precoder(t) - self.y[t].scale(self.rho[t]);
                    self.v[t] = blocks::update_v(&x, self.scenario.nt, &self.budgets);
                }
            }
            Block::Z => {
                for t in 0..slots {
                    let omega = &self.channels[t].a * self.precoder(t) - self.t[t].scale(self.rho[t]);
                    let out = blocks::update_z(
                        &omega,
                        &self.z[t],
                        self.z_threshold,
                        &self.channels[t].a_dir,
                        cfg.mm_iters_z,
                        cfg.inner_tol,
                    );
                    info.sub_iterations = info.sub_iterations.max(out.iterations);
                    if out.reseeded {
                        info.reseeded = true;
                        self.reseeds += 1;
                    }
                    self.z[t] = out.z;
                }
            }
            Block::P => {
                for t in 0..slots {
                    let psi = self.channels[t].h.adjoint() * self.precoder(t) - self.u[t].scale(self.rho[t]);
                    let (p, iters) = blocks::update_p(
                        &psi,
                        &self.p[t],
                        &self.scenario.weights,
                        &self.noise,
                        self.rho[t],
                        cfg.mm_iters_p,
                        cfg.inner_tol,
                    );
                    info.sub_iterations = info.sub_iterations.max(iters);
                    self.p[t] = p;
                }
            }
            Block::Q => {
                if !cfg.optimize_trajectory || slots < 3 {
                    return info;
                }
                let targets: Vec<SlotTargets> = (0..slots)
                    .map(|t| SlotTargets {
                        precoder: self.precoder(t),
                        gamma: self.gamma(t),
                        lambda: self.lambda(t),
                        weight: 1.0 / (2.0 * self.rho[t]),
                    })
                    .collect();
                let model = LqModel { scenario: self.scenario, scale: &self.scale };
                let settings = ScaSettings {
                    trust_radius: cfg.trust_region,
                    max_iters: cfg.sca_iters_q,
                    tol: cfg.inner_tol,
                    convex_tol: cfg.convex_tol,
                    max_halvings: cfg.max_halvings,
                };
                let out = sca_update_q(&model, &self.q, &targets, &settings);
                info.sub_iterations = out.accepted;
                info.stalled = out.subsolver_stalled;
                if out.subsolver_stalled {
                    self.stalls += 1;
                }
                if out.accepted > 0 {
                    self.q = out.trajectory;
                    self.refresh_channels();
                }
            }
        }
        info
    }

    /// One full BSUM pass over the blocks.
    pub fn inner_iteration(&mut self) {
        for block in Block::ORDER {
            self.step(block);
        }
    }

    fn state_finite(&self) -> bool {
        [&self.f, &self.w, &self.p, &self.v, &self.z]
            .iter()
            .all(|blocks| blocks.iter().all(all_finite))
    }

    /// Physical-unit beamformers, with each Tx UAV's digital rows scaled
    /// down if round-off left its power above the budget.
    pub fn physical_beams(&self) -> Beamformers {
        let sc = self.scenario;
        let amp = self.p_ref.sqrt();
        let mut w: Vec<CMatrix> = self.w.iter().map(|w| w.scale(amp)).collect();
        for (t, wt) in w.iter_mut().enumerate() {
            let powers = uav_powers(&self.f[t], wt, sc.mt, sc.nt, sc.nrf);
            for m in 0..sc.mt {
                let budget = sc.power_budget[m];
                if powers[m] > budget {
                    wt.rows_mut(m * sc.nrf, sc.nrf).scale_mut((budget / powers[m]).sqrt() * (1.0 - 1e-12));
                }
            }
        }
        Beamformers { f: self.f.clone(), w }
    }

    /// Runs the outer/inner loops to termination.
    pub fn run(mut self) -> Result<(Solution, SolutionTrace)> {
        let start = Instant::now();
        let cfg = self.config;
        let mut trace = SolutionTrace::default();
        let mut al = self.al_value();
        if !al.is_finite() {
            return Err(Error::NonFiniteValue { what: "augmented Lagrangian", outer: 0 });
        }
        let mut status = Status::IterationCapped;
        let mut inner_total = 0;
        for outer in 1..=cfg.max_outer {
            let mut inner = 0;
            while inner < cfg.max_inner {
                self.inner_iteration();
                inner += 1;
                let next = self.al_value();
                if !next.is_finite() || !self.state_finite() {
                    return Err(Error::NonFiniteValue { what: "augmented Lagrangian", outer });
                }
                let change = (next - al).abs();
                al = next;
                if change <= cfg.eps_inner * al.abs().max(f64::MIN_POSITIVE) {
                    break;
                }
            }
            inner_total += inner;
            let violation = (0..self.scenario.slots).map(|t| self.residuals(t).max()).fold(0.0, f64::max);
            let (rho_min, rho_max) = self
                .rho
                .iter()
                .fold((f64::INFINITY, 0.0f64), |(lo, hi), &r| (lo.min(r), hi.max(r)));
            trace.outer.push(OuterRecord {
                outer,
                inner,
                al,
                wsr: self.wsr_current(),
                wsr_aux: self.wsr_aux(),
                violation,
                rho_min,
                rho_max,
                elapsed: start.elapsed().as_secs_f64(),
            });
            if violation <= cfg.eps_outer {
                status = Status::Converged;
                break;
            }
            self.dual_penalty_step();
            al = self.al_value();
        }
        trace.subsolver_stalls = self.stalls;
        trace.z_reseeds = self.reseeds;
        let beams = self.physical_beams();
        let report = certify(self.scenario, &self.q, &beams, &Tolerances::default());
        let solution = Solution {
            wsr: wsr(self.scenario, &self.q, &beams),
            trajectory: self.q,
            beams,
            status,
            report,
            outer_iterations: trace.outer.len(),
            inner_iterations: inner_total,
        };
        Ok((solution, trace))
    }
}

/// Solves the joint problem from the default initialisation.
pub fn solve(scenario: &Scenario, config: &SolverConfig) -> Result<(Solution, SolutionTrace)> {
    PddSolver::new(scenario, *config)?.run()
}
