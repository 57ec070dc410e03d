use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use isac_core::baselines::Scheme;
use isac_harness::config::{check_sweep, load_config, validate_scenarios, ExperimentConfig, Preset, Sweep, SweepParam};
use isac_harness::experiment::run_experiment;

const EXIT_INVALID: u8 = 2;
const EXIT_RUN_FAILED: u8 = 3;

#[derive(Parser)]
#[command(name = "isac", about = "Joint hybrid beamforming and UAV trajectory design for multi-static ISAC")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the configured scenario.
    Solve {
        #[arg(long)]
        config: PathBuf,
        /// Run only this scheme.
        #[arg(long)]
        scheme: Option<String>,
        /// Run only this seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        preset: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep one parameter over a list of values.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// power_dbm, gamma_s_db, nrf or kappa.
        #[arg(long)]
        param: String,
        /// Comma-separated values, e.g. 0,10,20.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        values: Vec<f64>,
        #[arg(long)]
        preset: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Validate the config without running anything.
    Check {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        preset: Option<String>,
    },
}

fn load(path: &PathBuf, preset: Option<&str>) -> Result<ExperimentConfig, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let preset = preset.map(|p| p.parse::<Preset>()).transpose()?;
    load_config(&text, preset).map_err(|e| e.to_string())
}

fn prepare(cmd: Command) -> Result<(ExperimentConfig, bool), String> {
    match cmd {
        Command::Check { config, preset } => Ok((load(&config, preset.as_deref())?, false)),
        Command::Solve { config, scheme, seed, preset, out } => {
            let mut cfg = load(&config, preset.as_deref())?;
            if let Some(name) = scheme {
                cfg.schemes = vec![name.parse::<Scheme>()?];
            }
            if let Some(seed) = seed {
                cfg.first_seed = seed;
                cfg.num_seeds = 1;
            }
            if let Some(out) = out {
                cfg.output_dir = out;
            }
            cfg.sweep = None;
            let errs = validate_scenarios(&cfg);
            if !errs.is_empty() {
                return Err(errs.join("; "));
            }
            Ok((cfg, true))
        }
        Command::Sweep { config, param, values, preset, out } => {
            let mut cfg = load(&config, preset.as_deref())?;
            let param: SweepParam = param.parse()?;
            let mut errs = Vec::new();
            check_sweep(param, &values, &mut errs);
            cfg.sweep = Some(Sweep { param, values });
            if let Some(out) = out {
                cfg.output_dir = out;
            }
            errs.extend(validate_scenarios(&cfg));
            if !errs.is_empty() {
                return Err(errs.join("; "));
            }
            Ok((cfg, true))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (cfg, run) = match prepare(cli.command) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_INVALID);
        }
    };
    if !run {
        println!("config OK");
        return ExitCode::SUCCESS;
    }
    let runs = match run_experiment(&cfg) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_RUN_FAILED);
        }
    };
    let mut failed = false;
    for r in &runs {
        let rec = &r.record;
        match &rec.error {
            Some(e) => {
                failed = true;
                println!("{} seed {}: failed: {e}", rec.scheme, rec.seed);
            }
            None => {
                let point = rec.sweep.map(|(p, v)| format!(" {}={v}", p.name())).unwrap_or_default();
                println!(
                    "{} seed {}{point}: wsr {:.4} violation {:.3e} feasible {} iters {}",
                    rec.scheme, rec.seed, rec.wsr, rec.violation, rec.feasible, rec.iters
                );
            }
        }
    }
    println!("results written to {}", cfg.output_dir.display());
    if failed {
        ExitCode::from(EXIT_RUN_FAILED)
    } else {
        ExitCode::SUCCESS
    }
}
