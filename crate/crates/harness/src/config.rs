//! Experiment configuration: TOML ingestion, presets and scenario building.
//!
//! A config file has three optional sections:
//!
//! ```toml
//! [scenario]
//! preset = "small"        # or "paper"; fields below override the preset
//! power_dbm = 20
//! gamma_s_db = 5
//! phase_bits = 0          # 0 = continuous phase shifters
//!
//! [solver]
//! max_outer = 100
//!
//! [experiment]
//! schemes = ["proposed", "fixed_traj"]
//! num_seeds = 2
//! sweep_param = "power_dbm"
//! sweep_values = [0, 10, 20]
//! ```
//!
//! Powers are given in dBm, ratios in dB; everything is converted to linear
//! units once, here.

use std::path::PathBuf;

use isac_core::baselines::Scheme;
use isac_core::pdd::SolverConfig;
use isac_core::scenario::{sample_linear_motion, Architecture, PhaseMode, PhysicalParams, Scenario};
use isac_core::Point;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

/// Identifier of the only supported generator.
pub const RNG_ID: &str = "chacha8";

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("parse error at line {line}{}: {message}", field.as_ref().map(|f| format!(" (field `{f}`)")).unwrap_or_default())]
    Parse { line: usize, field: Option<String>, message: String },
    #[error("invalid configuration:\n  - {}", .0.join("\n  - "))]
    Validation(Vec<String>),
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(w: f64) -> f64 {
    10.0 * w.log10() + 30.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Small,
    Paper,
}

impl std::str::FromStr for Preset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "small" => Ok(Preset::Small),
            "paper" => Ok(Preset::Paper),
            other => Err(format!("unknown preset '{other}' (expected small or paper)")),
        }
    }
}

/// Parameter that a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    PowerDbm,
    GammaSDb,
    Nrf,
    /// Phase-shifter bits; 0 selects continuous phases.
    Kappa,
}

impl SweepParam {
    pub fn name(&self) -> &'static str {
        match self {
            SweepParam::PowerDbm => "power_dbm",
            SweepParam::GammaSDb => "gamma_s_db",
            SweepParam::Nrf => "nrf",
            SweepParam::Kappa => "kappa",
        }
    }
}

impl std::str::FromStr for SweepParam {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "power_dbm" => Ok(SweepParam::PowerDbm),
            "gamma_s_db" => Ok(SweepParam::GammaSDb),
            "nrf" => Ok(SweepParam::Nrf),
            "kappa" => Ok(SweepParam::Kappa),
            other => Err(format!("unknown sweep parameter '{other}'")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub param: SweepParam,
    pub values: Vec<f64>,
}

/// Everything a scenario needs except the seeded ground motion.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub mt: usize,
    pub mr: usize,
    pub nt: usize,
    pub nr: usize,
    pub nrf: usize,
    pub k: usize,
    pub s: usize,
    pub slots: usize,
    pub delta_t: f64,
    pub area: (f64, f64),
    pub altitude: f64,
    pub carrier_freq: f64,
    /// Element spacing in wavelengths.
    pub spacing: f64,
    /// Linear.
    pub beta0: f64,
    pub rcs_variance: f64,
    /// Watts, one per user.
    pub noise_user: Vec<f64>,
    /// Watts.
    pub noise_sensing: f64,
    /// Watts, one per Tx UAV.
    pub power: Vec<f64>,
    /// Linear.
    pub gamma_s: f64,
    pub weights: Vec<f64>,
    pub phase_mode: PhaseMode,
    pub v_max: f64,
    pub d_min: f64,
    pub q_init: Vec<Point>,
    pub q_final: Vec<Point>,
    pub user_speed: f64,
    pub target_speed: f64,
}

fn pts(v: &[[f64; 2]]) -> Vec<Point> {
    v.iter().map(|p| Point::new(p[0], p[1])).collect()
}

impl ScenarioSpec {
    pub fn preset(p: Preset) -> Self {
        match p {
            Preset::Paper => Self {
                mt: 2,
                mr: 2,
                nt: 16,
                nr: 16,
                nrf: 8,
                k: 7,
                s: 1,
                slots: 30,
                delta_t: 1.0,
                area: (200.0, 200.0),
                altitude: 50.0,
                carrier_freq: 1.9e9,
                spacing: 0.5,
                beta0: db_to_linear(-50.0),
                rcs_variance: 1.0,
                noise_user: vec![dbm_to_watts(-110.0); 7],
                noise_sensing: dbm_to_watts(-94.0),
                power: vec![dbm_to_watts(20.0); 2],
                gamma_s: db_to_linear(5.0),
                weights: vec![1.0 / 7.0; 7],
                phase_mode: PhaseMode::Continuous,
                v_max: 20.0,
                d_min: 10.0,
                q_init: pts(&[[180.0, 150.0], [20.0, 50.0], [180.0, 110.0], [20.0, 90.0]]),
                q_final: pts(&[[20.0, 150.0], [180.0, 50.0], [20.0, 110.0], [180.0, 90.0]]),
                user_speed: 1.5,
                target_speed: 1.5,
            },
            Preset::Small => Self {
                mt: 2,
                mr: 2,
                nt: 8,
                nr: 8,
                nrf: 4,
                k: 3,
                s: 1,
                slots: 10,
                delta_t: 1.0,
                area: (100.0, 100.0),
                altitude: 50.0,
                carrier_freq: 1.9e9,
                spacing: 0.5,
                beta0: db_to_linear(-50.0),
                rcs_variance: 1.0,
                noise_user: vec![dbm_to_watts(-110.0); 3],
                noise_sensing: dbm_to_watts(-94.0),
                power: vec![dbm_to_watts(20.0); 2],
                gamma_s: db_to_linear(5.0),
                weights: vec![1.0 / 3.0; 3],
                phase_mode: PhaseMode::Continuous,
                v_max: 20.0,
                d_min: 5.0,
                q_init: pts(&[[90.0, 75.0], [10.0, 25.0], [90.0, 55.0], [10.0, 45.0]]),
                q_final: pts(&[[10.0, 75.0], [90.0, 25.0], [10.0, 55.0], [90.0, 45.0]]),
                user_speed: 1.5,
                target_speed: 1.5,
            },
        }
    }

    /// Returns a copy with one sweep parameter set.
    pub fn with_param(&self, param: SweepParam, value: f64) -> Self {
        let mut s = self.clone();
        match param {
            SweepParam::PowerDbm => s.power = vec![dbm_to_watts(value); s.mt],
            SweepParam::GammaSDb => s.gamma_s = db_to_linear(value),
            SweepParam::Nrf => s.nrf = value as usize,
            SweepParam::Kappa => {
                s.phase_mode = if value == 0.0 {
                    PhaseMode::Continuous
                } else {
                    PhaseMode::Discrete { bits: value as u32 }
                }
            }
        }
        s
    }

    /// Builds the scenario, drawing user and target tracks from `seed`.
    ///
    /// Ground motion uses stream 1 of the generator; the solver's own
    /// initialisation uses stream 0, so the two never overlap.
    pub fn build(&self, seed: u64) -> Scenario {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(1);
        let (lx, ly) = self.area;
        let edge = 0.05 * lx.min(ly);
        let user_positions = (0..self.k)
            .map(|_| sample_linear_motion(&mut rng, self.area, edge, self.user_speed, self.slots, self.delta_t))
            .collect();
        let centre = 0.25 * lx.min(ly);
        let target_positions =
            sample_linear_motion(&mut rng, self.area, centre, self.target_speed, self.slots, self.delta_t);
        Scenario {
            mt: self.mt,
            mr: self.mr,
            nt: self.nt,
            nr: self.nr,
            nrf: self.nrf,
            k: self.k,
            s: self.s,
            slots: self.slots,
            delta_t: self.delta_t,
            area: self.area,
            user_positions,
            target_positions,
            q_init: self.q_init.clone(),
            q_final: self.q_final.clone(),
            v_max: self.v_max,
            d_min: self.d_min,
            power_budget: self.power.clone(),
            gamma_s: self.gamma_s,
            weights: self.weights.clone(),
            phase_mode: self.phase_mode,
            architecture: Architecture::Hybrid,
            params: PhysicalParams::new(
                self.altitude,
                self.carrier_freq,
                self.spacing,
                self.beta0,
                self.rcs_variance,
                self.noise_user.clone(),
                self.noise_sensing,
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub scenario: ScenarioSpec,
    pub solver: SolverConfig,
    pub schemes: Vec<Scheme>,
    pub sweep: Option<Sweep>,
    pub num_seeds: u64,
    pub first_seed: u64,
    pub output_dir: PathBuf,
    /// Write measured wall time into results.csv (breaks byte determinism).
    pub record_wall_time: bool,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    scenario: RawScenario,
    #[serde(default)]
    solver: RawSolver,
    #[serde(default)]
    experiment: RawExperiment,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum OneOrMany {
    One(f64),
    Many(Vec<f64>),
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    preset: Option<String>,
    mt: Option<usize>,
    mr: Option<usize>,
    nt: Option<usize>,
    nr: Option<usize>,
    nrf: Option<usize>,
    k: Option<usize>,
    s: Option<usize>,
    slots: Option<usize>,
    delta_t: Option<f64>,
    area: Option<[f64; 2]>,
    altitude: Option<f64>,
    carrier_freq: Option<f64>,
    antenna_spacing: Option<f64>,
    beta0_db: Option<f64>,
    rcs_variance: Option<f64>,
    noise_user_dbm: Option<OneOrMany>,
    noise_sensing_dbm: Option<f64>,
    power_dbm: Option<OneOrMany>,
    gamma_s_db: Option<f64>,
    weights: Option<Vec<f64>>,
    phase_bits: Option<u32>,
    v_max: Option<f64>,
    d_min: Option<f64>,
    q_init: Option<Vec<[f64; 2]>>,
    q_final: Option<Vec<[f64; 2]>>,
    user_speed: Option<f64>,
    target_speed: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSolver {
    rho0: Option<f64>,
    shrink: Option<f64>,
    eta: Option<f64>,
    eps_inner: Option<f64>,
    eps_outer: Option<f64>,
    max_inner: Option<usize>,
    max_outer: Option<usize>,
    mm_iters_p: Option<usize>,
    mm_iters_z: Option<usize>,
    bcd_iters_f: Option<usize>,
    sca_iters_q: Option<usize>,
    inner_tol: Option<f64>,
    convex_tol: Option<f64>,
    trust_region: Option<f64>,
    max_halvings: Option<usize>,
    optimize_trajectory: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawExperiment {
    schemes: Option<Vec<String>>,
    num_seeds: Option<u64>,
    first_seed: Option<u64>,
    sweep_param: Option<String>,
    sweep_values: Option<Vec<f64>>,
    output_dir: Option<String>,
    rng: Option<String>,
    record_wall_time: Option<bool>,
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].bytes().filter(|&b| b == b'\n').count() + 1
}

/// Parses and validates a config. `preset` overrides the file's preset key.
pub fn load_config(text: &str, preset: Option<Preset>) -> Result<ExperimentConfig, ConfigError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| {
        let line = e.span().map_or(1, |s| line_of(text, s.start));
        // the key on the offending line, whether the span covers key or value
        let field = e.span().and_then(|s| {
            let start = text[..s.start.min(text.len())].rfind('\n').map_or(0, |i| i + 1);
            let line = text[start..].lines().next()?;
            let (key, _) = line.split_once('=')?;
            let key = key.trim();
            (!key.is_empty() && key.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')).then(|| key.to_string())
        });
        ConfigError::Parse { line, field, message: e.message().to_string() }
    })?;
    let mut errs = Vec::new();

    let rs = raw.scenario;
    let preset = match (preset, rs.preset.as_deref()) {
        (Some(p), _) => p,
        (None, Some(name)) => name.parse().unwrap_or_else(|e: String| {
            errs.push(e);
            Preset::Small
        }),
        (None, None) => Preset::Small,
    };
    let mut sc = ScenarioSpec::preset(preset);
    macro_rules! set {
        ($($f:ident),*) => { $( if let Some(v) = rs.$f { sc.$f = v; } )* };
    }
    set!(mt, mr, nt, nr, nrf, slots, delta_t, altitude, carrier_freq, rcs_variance, v_max, d_min, user_speed, target_speed);
    if let Some(k) = rs.k {
        if k != sc.k {
            sc.weights = vec![1.0 / k as f64; k];
            sc.noise_user = vec![sc.noise_user[0]; k];
        }
        sc.k = k;
    }
    if let Some(s) = rs.s {
        sc.s = s;
    }
    if let Some([lx, ly]) = rs.area {
        sc.area = (lx, ly);
    }
    if let Some(v) = rs.antenna_spacing {
        sc.spacing = v;
    }
    if let Some(v) = rs.beta0_db {
        sc.beta0 = db_to_linear(v);
    }
    match rs.noise_user_dbm {
        Some(OneOrMany::One(v)) => sc.noise_user = vec![dbm_to_watts(v); sc.k],
        Some(OneOrMany::Many(v)) => sc.noise_user = v.into_iter().map(dbm_to_watts).collect(),
        None => {}
    }
    if let Some(v) = rs.noise_sensing_dbm {
        sc.noise_sensing = dbm_to_watts(v);
    }
    match rs.power_dbm {
        Some(OneOrMany::One(v)) => sc.power = vec![dbm_to_watts(v); sc.mt],
        Some(OneOrMany::Many(v)) => sc.power = v.into_iter().map(dbm_to_watts).collect(),
        None => {
            if sc.power.len() != sc.mt {
                sc.power = vec![sc.power[0]; sc.mt];
            }
        }
    }
    if let Some(v) = rs.gamma_s_db {
        sc.gamma_s = db_to_linear(v);
    }
    if let Some(w) = rs.weights {
        sc.weights = w;
    }
    if let Some(b) = rs.phase_bits {
        sc.phase_mode = if b == 0 { PhaseMode::Continuous } else { PhaseMode::Discrete { bits: b } };
    }
    if let Some(q) = rs.q_init {
        sc.q_init = pts(&q);
    }
    if let Some(q) = rs.q_final {
        sc.q_final = pts(&q);
    }

    let mut solver = SolverConfig::default();
    let rv = raw.solver;
    macro_rules! set_solver {
        ($($f:ident),*) => { $( if let Some(v) = rv.$f { solver.$f = v; } )* };
    }
    set_solver!(
        rho0, shrink, eta, eps_inner, eps_outer, max_inner, max_outer, mm_iters_p, mm_iters_z, bcd_iters_f,
        sca_iters_q, inner_tol, convex_tol, trust_region, max_halvings, optimize_trajectory
    );
    if let Err(e) = solver.validate() {
        errs.extend(e);
    }

    let re = raw.experiment;
    let schemes = match re.schemes {
        None => vec![Scheme::Proposed],
        Some(names) => names
            .iter()
            .filter_map(|n| n.parse::<Scheme>().map_err(|e| errs.push(e)).ok())
            .collect(),
    };
    if schemes.is_empty() {
        errs.push("at least one scheme is required".into());
    }
    let num_seeds = re.num_seeds.unwrap_or(1);
    if num_seeds == 0 {
        errs.push("num_seeds must be at least 1".into());
    }
    if let Some(rng) = &re.rng {
        if rng != RNG_ID {
            errs.push(format!("unsupported rng '{rng}' (only '{RNG_ID}')"));
        }
    }
    let sweep = match (re.sweep_param, re.sweep_values) {
        (None, None) => None,
        (Some(p), Some(values)) => match p.parse::<SweepParam>() {
            Ok(param) => {
                check_sweep(param, &values, &mut errs);
                Some(Sweep { param, values })
            }
            Err(e) => {
                errs.push(e);
                None
            }
        },
        _ => {
            errs.push("sweep_param and sweep_values must be given together".into());
            None
        }
    };

    let config = ExperimentConfig {
        scenario: sc,
        solver,
        schemes,
        sweep,
        num_seeds,
        first_seed: re.first_seed.unwrap_or(0),
        output_dir: PathBuf::from(re.output_dir.unwrap_or_else(|| "out".into())),
        record_wall_time: re.record_wall_time.unwrap_or(false),
    };
    errs.extend(validate_scenarios(&config));
    if errs.is_empty() {
        Ok(config)
    } else {
        Err(ConfigError::Validation(errs))
    }
}

/// Sweep values must be finite and sorted ascending; integer parameters must be integral.
pub fn check_sweep(param: SweepParam, values: &[f64], errs: &mut Vec<String>) {
    if values.is_empty() {
        errs.push("sweep_values must not be empty".into());
    }
    if values.iter().any(|v| !v.is_finite()) {
        errs.push("sweep values must be finite".into());
    }
    if values.windows(2).any(|w| w[0] > w[1]) {
        errs.push("sweep values must be sorted ascending".into());
    }
    if matches!(param, SweepParam::Nrf | SweepParam::Kappa) && values.iter().any(|v| v.fract() != 0.0 || *v < 0.0) {
        errs.push(format!("{} values must be non-negative integers", param.name()));
    }
}

/// Scenario invariants for every sweep point, checked on the first seed.
pub fn validate_scenarios(config: &ExperimentConfig) -> Vec<String> {
    let points: Vec<ScenarioSpec> = match &config.sweep {
        None => vec![config.scenario.clone()],
        Some(s) => s.values.iter().map(|&v| config.scenario.with_param(s.param, v)).collect(),
    };
    let mut errs = Vec::new();
    let (lx, ly) = config.scenario.area;
    if !(lx.is_finite() && ly.is_finite() && lx > 0.0 && ly > 0.0) {
        errs.push(format!("area must be positive (got {lx} x {ly})"));
        return errs;
    }
    for spec in points {
        if let Err(e) = spec.build(config.first_seed).validate() {
            for msg in e {
                if !errs.contains(&msg) {
                    errs.push(msg);
                }
            }
        }
    }
    errs
}
