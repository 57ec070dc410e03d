//! Seeded batch execution with incremental CSV output.

use std::fs::{self, File};
use std::io;
use std::path::{Path, PathBuf};
use std::time::Instant;

use isac_core::baselines::{run_scheme, Scheme};
use isac_core::pdd::{SolutionTrace, SolverConfig};
use isac_core::scenario::Trajectory;

use crate::config::{ExperimentConfig, ScenarioSpec, SweepParam};
use crate::output;

pub const RESULTS_HEADER: [&str; 9] =
    ["scheme", "seed", "sweep_param", "sweep_value", "wsr", "violation", "feasible", "iters", "seconds"];
pub const CONVERGENCE_HEADER: [&str; 7] =
    ["scheme", "seed", "sweep_param", "sweep_value", "outer_iter", "wsr", "violation"];
pub const TRAJECTORY_HEADER: [&str; 8] = ["scheme", "seed", "sweep_param", "sweep_value", "uav", "slot", "x", "y"];

/// One line of results.csv.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRecord {
    pub scheme: Scheme,
    pub seed: u64,
    pub sweep: Option<(SweepParam, f64)>,
    pub wsr: f64,
    /// Largest consensus residual at the last outer iteration.
    pub violation: f64,
    pub feasible: bool,
    /// Outer iterations used.
    pub iters: usize,
    pub seconds: f64,
    /// Set when the run failed; the numeric fields are then placeholders.
    pub error: Option<String>,
}

impl ResultRecord {
    fn key(&self) -> [String; 4] {
        let (param, value) = match self.sweep {
            Some((p, v)) => (p.name().to_string(), v.to_string()),
            None => (String::new(), String::new()),
        };
        [self.scheme.name().to_string(), self.seed.to_string(), param, value]
    }

    fn row(&self) -> Vec<String> {
        let mut row = self.key().to_vec();
        row.extend([
            self.wsr.to_string(),
            self.violation.to_string(),
            self.feasible.to_string(),
            self.iters.to_string(),
            self.seconds.to_string(),
        ]);
        row
    }
}

/// A finished run with everything the output files need.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub record: ResultRecord,
    pub trace: Option<SolutionTrace>,
    pub trajectory: Option<Trajectory>,
}

/// Runs one scheme on the scenario drawn from `seed`. Errors are folded
/// into the record.
pub fn run_one(
    spec: &ScenarioSpec,
    solver: &SolverConfig,
    scheme: Scheme,
    seed: u64,
    sweep: Option<(SweepParam, f64)>,
    wall_time: bool,
) -> RunOutput {
    let start = Instant::now();
    let scenario = spec.build(seed);
    let cfg = SolverConfig { seed, ..*solver };
    let outcome = run_scheme(scheme, &scenario, &cfg);
    let seconds = if wall_time { start.elapsed().as_secs_f64() } else { 0.0 };
    match outcome {
        Ok(run) => {
            let violation = run.trace.outer.last().map_or(0.0, |r| r.violation);
            RunOutput {
                record: ResultRecord {
                    scheme,
                    seed,
                    sweep,
                    wsr: run.solution.wsr,
                    violation,
                    feasible: run.solution.report.feasible,
                    iters: run.solution.outer_iterations,
                    seconds,
                    error: None,
                },
                trace: Some(run.trace),
                trajectory: Some(run.solution.trajectory),
            }
        }
        Err(e) => RunOutput {
            record: ResultRecord {
                scheme,
                seed,
                sweep,
                wsr: 0.0,
                violation: f64::INFINITY,
                feasible: false,
                iters: 0,
                seconds,
                error: Some(e.to_string()),
            },
            trace: None,
            trajectory: None,
        },
    }
}

/// CSV writers for the three tables, flushed after every run.
struct Tables {
    results: csv::Writer<File>,
    convergence: csv::Writer<File>,
    trajectories: csv::Writer<File>,
}

impl Tables {
    fn create(dir: &Path) -> io::Result<Self> {
        fs::create_dir_all(dir)?;
        let open = |name: &str, header: &[&str]| -> io::Result<csv::Writer<File>> {
            let mut w = csv::Writer::from_writer(File::create(dir.join(name))?);
            w.write_record(header)?;
            w.flush()?;
            Ok(w)
        };
        Ok(Self {
            results: open("results.csv", &RESULTS_HEADER)?,
            convergence: open("convergence.csv", &CONVERGENCE_HEADER)?,
            trajectories: open("trajectories.csv", &TRAJECTORY_HEADER)?,
        })
    }

    fn append(&mut self, run: &RunOutput) -> io::Result<()> {
        let key = run.record.key();
        if let Some(trace) = &run.trace {
            for r in &trace.outer {
                let mut row = key.to_vec();
                row.extend([r.outer.to_string(), r.wsr.to_string(), r.violation.to_string()]);
                self.convergence.write_record(&row)?;
            }
        }
        if let Some(q) = &run.trajectory {
            for m in 0..q.num_uavs() {
                for t in 0..q.num_slots() {
                    let p = q.at(m, t);
                    let mut row = key.to_vec();
                    row.extend([m.to_string(), t.to_string(), p.x.to_string(), p.y.to_string()]);
                    self.trajectories.write_record(&row)?;
                }
            }
        }
        self.results.write_record(run.record.row())?;
        self.convergence.flush()?;
        self.trajectories.flush()?;
        self.results.flush()
    }
}

/// Scheme, sweep point and seed of one run.
pub type RunKey = (Scheme, Option<(SweepParam, f64)>, u64);

/// Every (scheme, sweep value, seed) combination in execution order.
pub fn plan(config: &ExperimentConfig) -> Vec<RunKey> {
    let points: Vec<Option<(SweepParam, f64)>> = match &config.sweep {
        None => vec![None],
        Some(s) => s.values.iter().map(|&v| Some((s.param, v))).collect(),
    };
    let mut out = Vec::new();
    for &scheme in &config.schemes {
        for &point in &points {
            for i in 0..config.num_seeds {
                out.push((scheme, point, config.first_seed + i));
            }
        }
    }
    out
}

/// Runs the whole batch, appending to the tables in `config.output_dir`
/// after each run and rendering the plots at the end. Failed runs are
/// reported on stderr and recorded, never aborting the batch.
pub fn run_experiment(config: &ExperimentConfig) -> io::Result<Vec<RunOutput>> {
    let dir: PathBuf = config.output_dir.clone();
    let mut tables = Tables::create(&dir)?;
    let mut runs = Vec::new();
    for (scheme, point, seed) in plan(config) {
        let spec = match point {
            Some((p, v)) => config.scenario.with_param(p, v),
            None => config.scenario.clone(),
        };
        let run = run_one(&spec, &config.solver, scheme, seed, point, config.record_wall_time);
        if let Some(e) = &run.record.error {
            eprintln!("run {scheme} seed {seed} failed: {e}");
        }
        tables.append(&run)?;
        runs.push(run);
    }
    output::write_plots(&dir, &runs, config.sweep.as_ref().map(|s| s.param))?;
    Ok(runs)
}

/// Writes the results table alone, e.g. for records gathered elsewhere.
pub fn write_results(path: &Path, records: &[ResultRecord]) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(File::create(path)?);
    w.write_record(RESULTS_HEADER)?;
    for r in records {
        w.write_record(r.row())?;
    }
    w.flush()
}
