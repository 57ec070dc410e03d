//! Objective and constraint evaluation in physical units.

use crate::linalg::frob_sq;
use crate::scenario::{Architecture, PhaseMode, Scenario, SensingChannel, Trajectory};
use crate::{CMatrix, Cx};

/// Per-slot hybrid beamformers. Columns of `w[t]` are the K user streams
/// followed by the S sensing streams.
#[derive(Debug, Clone, PartialEq)]
pub struct Beamformers {
    /// Block-diagonal analog stage, `(Mt Nt) x (Mt Nrf)`.
    pub f: Vec<CMatrix>,
    /// Digital stage, `(Mt Nrf) x (K + S)`.
    pub w: Vec<CMatrix>,
}

impl Beamformers {
    /// Effective precoder `F W` at slot `t`.
    pub fn precoder(&self, t: usize) -> CMatrix {
        &self.f[t] * &self.w[t]
    }
}

/// `sum_i ||F w_i||^2` for one Tx UAV.
pub fn tx_power(f_m: &CMatrix, w_rows: &CMatrix) -> f64 {
    frob_sq(&(f_m * w_rows))
}

/// Per-Tx-UAV transmit power at one slot.
pub fn uav_powers(f_bar: &CMatrix, w_bar: &CMatrix, mt: usize, nt: usize, nrf: usize) -> Vec<f64> {
    (0..mt)
        .map(|m| {
            let f_m = f_bar.view((m * nt, m * nrf), (nt, nrf)).clone_owned();
            let w_m = w_bar.rows(m * nrf, nrf).clone_owned();
            tx_power(&f_m, &w_m)
        })
        .collect()
}

/// SINR of user `k` from its row of effective gains `p_i = h_k^H F w_i`.
pub fn sinr_from_gains(gains: &[Cx], k: usize, sigma2: f64) -> f64 {
    let signal = gains[k].norm_sqr();
    let interference: f64 = gains
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != k)
        .map(|(_, g)| g.norm_sqr())
        .sum();
    signal / (interference + sigma2)
}

/// SINR of user `k` given the stacked channel matrix `H` (columns = users).
pub fn sinr_user(h_bar: &CMatrix, f_bar: &CMatrix, w_bar: &CMatrix, k: usize, sigma2: f64) -> f64 {
    let gains: Vec<Cx> = (h_bar.column(k).adjoint() * f_bar * w_bar).iter().copied().collect();
    sinr_from_gains(&gains, k, sigma2)
}

pub fn rate(sinr: f64) -> f64 {
    (1.0 + sinr).log2()
}

/// Weighted sum-rate summed over every slot.
pub fn wsr(scenario: &Scenario, traj: &Trajectory, beams: &Beamformers) -> f64 {
    (0..scenario.slots).map(|t| slot_wsr(scenario, traj, beams, t)).sum()
}

/// Weighted sum-rate of a single slot.
pub fn slot_wsr(scenario: &Scenario, traj: &Trajectory, beams: &Beamformers, t: usize) -> f64 {
    let h = scenario.user_channels(traj.slot(t), t);
    let gains = h.adjoint() * beams.precoder(t);
    (0..scenario.k)
        .map(|k| {
            let row: Vec<Cx> = gains.row(k).iter().copied().collect();
            scenario.weights[k] * rate(sinr_from_gains(&row, k, scenario.params.noise_user[k]))
        })
        .sum()
}

/// `||A F W||_F^2 / sigma_n^2`.
pub fn sensing_snr(a_bar: &CMatrix, f_bar: &CMatrix, w_bar: &CMatrix, sigma_n2: f64) -> f64 {
    frob_sq(&(a_bar * f_bar * w_bar)) / sigma_n2
}

/// Same quantity through the rank-one factorisation of the echo channel.
pub fn sensing_snr_rank_one(sensing: &SensingChannel, f_bar: &CMatrix, w_bar: &CMatrix, sigma_n2: f64) -> f64 {
    let beam = sensing.a_t.adjoint() * f_bar * w_bar;
    sensing.gain * sensing.gain * sensing.a_r.norm_squared() * beam.norm_squared() / sigma_n2
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Absolute power slack (W).
    pub power: f64,
    /// Relative sensing SNR slack.
    pub snr_rel: f64,
    /// Geometry slack (m for endpoints, m^2 for squared-distance constraints).
    pub geometry: f64,
    /// Slack on the phase-shifter alphabet.
    pub phase: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { power: 1e-9, snr_rel: 1e-6, geometry: 1e-6, phase: 1e-9 }
    }
}

/// Worst-case constraint report. Margins are `>= 0` when satisfied,
/// violations are `<= 0` when satisfied.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityReport {
    pub max_power_violation: f64,
    /// `min_t SNR(t) - gamma_s` (linear).
    pub min_sensing_snr_margin: f64,
    /// `max ||q(t+1) - q(t)||^2 - (v_max dt)^2` (m^2).
    pub max_velocity_violation: f64,
    /// `min ||q_m - q_m'||^2 - d_min^2` (m^2).
    pub min_pairwise_sep_margin: f64,
    /// Largest endpoint displacement (m).
    pub endpoint_error: f64,
    /// Largest distance of an analog entry from the alphabet, or of an
    /// off-block entry from zero.
    pub max_phase_violation: f64,
    pub feasible: bool,
}

impl FeasibilityReport {
    pub fn sensing_ok(&self, gamma_s: f64, tol: &Tolerances) -> bool {
        self.min_sensing_snr_margin >= -tol.snr_rel * gamma_s.max(f64::MIN_POSITIVE)
    }
}

/// Evaluates every constraint of the joint problem on a candidate.
pub fn certify(scenario: &Scenario, traj: &Trajectory, beams: &Beamformers, tol: &Tolerances) -> FeasibilityReport {
    let (mt, nt, nrf) = (scenario.mt, scenario.nt, scenario.nrf);
    let mut max_power_violation = f64::NEG_INFINITY;
    let mut min_snr_margin = f64::INFINITY;
    let mut max_phase_violation: f64 = 0.0;
    let alphabet = scenario.phase_mode.alphabet();
    for t in 0..scenario.slots {
        let powers = uav_powers(&beams.f[t], &beams.w[t], mt, nt, nrf);
        for (p, budget) in powers.iter().zip(&scenario.power_budget) {
            max_power_violation = max_power_violation.max(p - budget);
        }
        let sensing = scenario.sensing(traj.slot(t), t);
        let snr = sensing_snr(&sensing.matrix, &beams.f[t], &beams.w[t], scenario.params.noise_sensing);
        min_snr_margin = min_snr_margin.min(snr - scenario.gamma_s);
        if scenario.architecture == Architecture::Hybrid {
            max_phase_violation = max_phase_violation.max(analog_violation(&beams.f[t], mt, nt, nrf, alphabet.as_deref()));
        }
    }

    let m_total = scenario.n_uavs();
    let step2 = (scenario.v_max * scenario.delta_t).powi(2);
    let mut max_vel = f64::NEG_INFINITY;
    for m in 0..m_total {
        for t in 0..scenario.slots.saturating_sub(1) {
            max_vel = max_vel.max((traj.at(m, t + 1) - traj.at(m, t)).norm_squared() - step2);
        }
    }
    if scenario.slots < 2 {
        max_vel = 0.0;
    }
    let d2 = scenario.d_min * scenario.d_min;
    let mut min_sep = f64::INFINITY;
    for t in 0..scenario.slots {
        let s = traj.slot(t);
        for a in 0..m_total {
            for b in a + 1..m_total {
                min_sep = min_sep.min((s[a] - s[b]).norm_squared() - d2);
            }
        }
    }
    let last = scenario.slots - 1;
    let endpoint_error = (0..m_total)
        .map(|m| {
            (traj.at(m, 0) - scenario.q_init[m])
                .norm()
                .max((traj.at(m, last) - scenario.q_final[m]).norm())
        })
        .fold(0.0, f64::max);

    let mut report = FeasibilityReport {
        max_power_violation,
        min_sensing_snr_margin: min_snr_margin,
        max_velocity_violation: max_vel,
        min_pairwise_sep_margin: min_sep,
        endpoint_error,
        max_phase_violation,
        feasible: false,
    };
    report.feasible = report.max_power_violation <= tol.power
        && report.sensing_ok(scenario.gamma_s, tol)
        && report.max_velocity_violation <= tol.geometry
        && report.min_pairwise_sep_margin >= -tol.geometry
        && report.endpoint_error <= tol.geometry
        && report.max_phase_violation <= tol.phase;
    report
}

fn analog_violation(f_bar: &CMatrix, mt: usize, nt: usize, nrf: usize, alphabet: Option<&[Cx]>) -> f64 {
    let mut worst: f64 = 0.0;
    for r in 0..f_bar.nrows() {
        for c in 0..f_bar.ncols() {
            let z = f_bar[(r, c)];
            let on_block = r / nt == c / nrf && r / nt < mt;
            let v = if !on_block {
                z.norm()
            } else if let Some(alpha) = alphabet {
                alpha.iter().map(|a| (z - a).norm()).fold(f64::INFINITY, f64::min)
            } else {
                (z.norm() - 1.0).abs()
            };
            worst = worst.max(v);
        }
    }
    worst
}

/// Discrete-alphabet check helper used by tests and reports.
pub fn on_alphabet(z: Cx, mode: PhaseMode) -> bool {
    match mode.alphabet() {
        Some(a) => a.contains(&z),
        None => (z.norm() - 1.0).abs() < 1e-12,
    }
}
