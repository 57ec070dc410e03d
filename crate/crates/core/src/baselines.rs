//! Comparison schemes expressed as scenario/config transforms of the solver.

use std::fmt;
use std::str::FromStr;

use crate::linalg::pinv_psd;
use crate::metrics::{certify, uav_powers, wsr, Beamformers, Tolerances};
use crate::pdd::blocks::{best_phase, update_f, BlockLayout, PINV_CUTOFF};
use crate::pdd::{solve, Solution, SolutionTrace, SolverConfig};
use crate::scenario::{Architecture, PhaseMode, Scenario};
use crate::{CMatrix, Cx, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    /// Joint hybrid beamforming and trajectory design.
    Proposed,
    /// Fully digital beamforming with the sensing constraint.
    FdJoint,
    /// Fully digital beamforming without the sensing constraint.
    FdCommOnly,
    /// Hybrid beamforming on the straight-line trajectory.
    FixedTraj,
    /// Fully digital design approximated by a hybrid factorisation.
    Map,
    /// Proposed pipeline with a single Tx and a single Rx UAV.
    BiStatic,
}

impl Scheme {
    pub const ALL: [Scheme; 6] = [
        Scheme::Proposed,
        Scheme::FdJoint,
        Scheme::FdCommOnly,
        Scheme::FixedTraj,
        Scheme::Map,
        Scheme::BiStatic,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Proposed => "proposed",
            Scheme::FdJoint => "fd_joint",
            Scheme::FdCommOnly => "fd_comm_only",
            Scheme::FixedTraj => "fixed_traj",
            Scheme::Map => "map",
            Scheme::BiStatic => "bistatic",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let key = s.trim().to_ascii_lowercase().replace('-', "_");
        Scheme::ALL
            .into_iter()
            .find(|k| k.name() == key)
            .ok_or_else(|| format!("unknown scheme '{s}'"))
    }
}

/// Outcome of [`run_scheme`].
#[derive(Debug, Clone)]
pub struct SchemeRun {
    pub scheme: Scheme,
    /// Scenario the solution is certified against.
    pub scenario: Scenario,
    pub solution: Solution,
    pub trace: SolutionTrace,
    /// The terminal sensing margin is negative.
    pub infeasible: bool,
    pub warnings: Vec<String>,
}

/// Same scenario with one RF chain per antenna and no analog stage.
pub fn fully_digital(scenario: &Scenario) -> Scenario {
    let mut sc = scenario.clone();
    sc.nrf = sc.nt;
    sc.architecture = Architecture::FullyDigital;
    sc.phase_mode = PhaseMode::Continuous;
    sc
}

/// Keeps Tx UAV 0 and the first Rx UAV. If `K + S` no longer fits the RF
/// chains, the last users are dropped and a warning is returned.
pub fn bistatic_scenario(scenario: &Scenario) -> (Scenario, Vec<String>) {
    let mut sc = scenario.clone();
    let mut warnings = Vec::new();
    if sc.mt == 1 && sc.mr == 1 {
        return (sc, warnings);
    }
    let rx0 = scenario.mt;
    sc.q_init = vec![scenario.q_init[0], scenario.q_init[rx0]];
    sc.q_final = vec![scenario.q_final[0], scenario.q_final[rx0]];
    sc.power_budget = vec![scenario.power_budget[0]];
    sc.mt = 1;
    sc.mr = 1;
    if sc.k + sc.s > sc.nrf {
        let keep = sc.nrf.saturating_sub(sc.s);
        warnings.push(format!(
            "bi-static reduction: K + S = {} exceeds Nrf = {}; keeping the first {keep} users",
            sc.k + sc.s,
            sc.nrf
        ));
        sc.k = keep;
        sc.user_positions.truncate(keep);
        sc.weights.truncate(keep);
        sc.params.noise_user.truncate(keep);
    }
    (sc, warnings)
}

/// Hybrid factorisation `F W ~ V` per Tx UAV and slot.
///
/// `v_fd[t]` is a `(Mt Nt) x (K+S)` precoder. Each UAV block starts from
/// the phases of its leading left singular vectors with the least-squares
/// `W`, then alternates one element-wise sweep over `F` with a
/// least-squares `W`. A final rescale keeps every UAV within its budget.
pub fn map_decompose(v_fd: &[CMatrix], scenario: &Scenario, iters: usize) -> Beamformers {
    let (mt, nt, nrf) = (scenario.mt, scenario.nt, scenario.nrf);
    let alphabet = scenario.phase_mode.alphabet();
    let layout = BlockLayout { mt: 1, nt, nrf };
    let identity = CMatrix::identity(nt, nt);
    let mut fs = Vec::with_capacity(v_fd.len());
    let mut ws = Vec::with_capacity(v_fd.len());
    for v in v_fd {
        let cols = v.ncols();
        let mut f_bar = CMatrix::zeros(mt * nt, mt * nrf);
        let mut w_bar = CMatrix::zeros(mt * nrf, cols);
        for m in 0..mt {
            let target = v.rows(m * nt, nt).clone_owned();
            let mut f = initial_analog(&target, nrf, alphabet.as_deref());
            let mut w = least_squares(&f, &target);
            for _ in 0..iters {
                let c = &target * w.adjoint();
                let d = &w * w.adjoint();
                update_f(&mut f, &identity, &c, &d, layout, scenario.phase_mode, 0.0, 1);
                w = least_squares(&f, &target);
            }
            f_bar.view_mut((m * nt, m * nrf), (nt, nrf)).copy_from(&f);
            w_bar.rows_mut(m * nrf, nrf).copy_from(&w);
        }
        let powers = uav_powers(&f_bar, &w_bar, mt, nt, nrf);
        for m in 0..mt {
            let budget = scenario.power_budget[m];
            if powers[m] > budget {
                w_bar.rows_mut(m * nrf, nrf).scale_mut((budget / powers[m]).sqrt() * (1.0 - 1e-12));
            }
        }
        fs.push(f_bar);
        ws.push(w_bar);
    }
    Beamformers { f: fs, w: ws }
}

fn initial_analog(target: &CMatrix, nrf: usize, alphabet: Option<&[Cx]>) -> CMatrix {
    let nt = target.nrows();
    let one = Cx::new(1.0, 0.0);
    let gram = target * target.adjoint();
    let eig = nalgebra::SymmetricEigen::new(gram);
    let mut order: Vec<usize> = (0..nt).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    CMatrix::from_fn(nt, nrf, |r, c| {
        let z = eig.eigenvectors[(r, order[c % nt])];
        best_phase(z, one, alphabet)
    })
}

fn least_squares(f: &CMatrix, target: &CMatrix) -> CMatrix {
    let fh = f.adjoint();
    pinv_psd(&(&fh * f), PINV_CUTOFF) * (fh * target)
}

/// Runs one comparison scheme. The returned solution is certified against
/// the scenario the scheme actually solves, except for [`Scheme::Map`]
/// which is certified against the original hybrid scenario.
pub fn run_scheme(scheme: Scheme, scenario: &Scenario, config: &SolverConfig) -> Result<SchemeRun> {
    let mut warnings = Vec::new();
    let (sc, solution, trace) = match scheme {
        Scheme::Proposed => {
            let (s, t) = solve(scenario, config)?;
            (scenario.clone(), s, t)
        }
        Scheme::FdJoint => {
            let sc = fully_digital(scenario);
            let (s, t) = solve(&sc, config)?;
            (sc, s, t)
        }
        Scheme::FdCommOnly => {
            let mut sc = fully_digital(scenario);
            sc.gamma_s = 0.0;
            let (s, t) = solve(&sc, config)?;
            (sc, s, t)
        }
        Scheme::FixedTraj => {
            let cfg = SolverConfig { optimize_trajectory: false, ..*config };
            let (s, t) = solve(scenario, &cfg)?;
            (scenario.clone(), s, t)
        }
        Scheme::Map => {
            let fd = fully_digital(scenario);
            let (fd_sol, t) = solve(&fd, config)?;
            let v_fd: Vec<CMatrix> = (0..fd.slots).map(|i| fd_sol.beams.precoder(i)).collect();
            let beams = map_decompose(&v_fd, scenario, MAP_ITERS);
            let report = certify(scenario, &fd_sol.trajectory, &beams, &Tolerances::default());
            let solution = Solution {
                wsr: wsr(scenario, &fd_sol.trajectory, &beams),
                beams,
                report,
                ..fd_sol
            };
            (scenario.clone(), solution, t)
        }
        Scheme::BiStatic => {
            let (sc, w) = bistatic_scenario(scenario);
            warnings.extend(w);
            let (s, t) = solve(&sc, config)?;
            (sc, s, t)
        }
    };
    let infeasible = solution.report.min_sensing_snr_margin < 0.0
        && !solution.report.sensing_ok(sc.gamma_s, &Tolerances::default());
    Ok(SchemeRun { scheme, scenario: sc, solution, trace, infeasible, warnings })
}

/// Alternations used by the MAP scheme.
pub const MAP_ITERS: usize = 50;
