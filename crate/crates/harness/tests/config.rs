use isac_core::baselines::Scheme;
use isac_core::pdd::SolverConfig;
use isac_core::scenario::PhaseMode;
use isac_harness::config::{
    db_to_linear, dbm_to_watts, linear_to_db, load_config, watts_to_dbm, ConfigError, Preset, ScenarioSpec,
    SweepParam,
};
use proptest::prelude::*;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

#[test]
fn decibel_keys_convert_exactly() {
    let cfg = load_config("[scenario]\ngamma_s_db = 5\npower_dbm = 20\n", None).unwrap();
    assert!((cfg.scenario.gamma_s - 3.1623).abs() < 1e-4);
    assert!(rel(cfg.scenario.gamma_s, 10f64.powf(0.5)) < 1e-15);
    assert!(cfg.scenario.power.iter().all(|&p| rel(p, 0.1) < 1e-15));

    let cfg = load_config("[scenario]\npower_dbm = [10, 30]\nnoise_sensing_dbm = -94\n", None).unwrap();
    assert!(rel(cfg.scenario.power[0], 0.01) < 1e-15);
    assert!(rel(cfg.scenario.power[1], 1.0) < 1e-15);
    assert!(rel(cfg.scenario.noise_sensing, 10f64.powf(-12.4)) < 1e-15);
}

#[test]
fn empty_solver_section_gives_defaults() {
    let cfg = load_config("[solver]\n", None).unwrap();
    let s = cfg.solver;
    assert_eq!((s.rho0, s.shrink, s.eta, s.eps_inner, s.eps_outer), (0.3, 0.8, 1e-4, 1e-6, 1e-8));
    assert_eq!((s.trust_region, s.max_inner, s.max_outer), (2.0, 100, 100));
    assert_eq!(s, SolverConfig::default());
    assert_eq!(cfg.schemes, vec![Scheme::Proposed]);
    assert_eq!((cfg.num_seeds, cfg.first_seed), (1, 0));
    assert!(cfg.sweep.is_none());
    assert!(!cfg.record_wall_time);
}

#[test]
fn empty_text_is_the_small_preset() {
    let cfg = load_config("", None).unwrap();
    assert_eq!(cfg.scenario, ScenarioSpec::preset(Preset::Small));
    let paper = load_config("[scenario]\npreset = \"paper\"\n", None).unwrap();
    assert_eq!(paper.scenario, ScenarioSpec::preset(Preset::Paper));
    // the command-line preset wins over the file
    let forced = load_config("[scenario]\npreset = \"paper\"\n", Some(Preset::Small)).unwrap();
    assert_eq!(forced.scenario, ScenarioSpec::preset(Preset::Small));
}

#[test]
fn small_preset_dimensions() {
    let s = ScenarioSpec::preset(Preset::Small);
    assert_eq!((s.mt, s.mr, s.nt, s.nr, s.nrf, s.k, s.s, s.slots), (2, 2, 8, 8, 4, 3, 1, 10));
    let p = ScenarioSpec::preset(Preset::Paper);
    assert_eq!((p.mt, p.mr, p.nt, p.nr, p.nrf, p.k, p.s, p.slots), (2, 2, 16, 16, 8, 7, 1, 30));
    assert!(p.build(0).validate().is_ok());
    assert!(s.build(0).validate().is_ok());
}

#[test]
fn experiment_section() {
    let text = r#"
[scenario]
phase_bits = 2

[experiment]
schemes = ["proposed", "fixed_traj"]
num_seeds = 3
first_seed = 7
sweep_param = "power_dbm"
sweep_values = [0, 10, 20]
output_dir = "runs/a"
rng = "chacha8"
"#;
    let cfg = load_config(text, None).unwrap();
    assert_eq!(cfg.scenario.phase_mode, PhaseMode::Discrete { bits: 2 });
    assert_eq!(cfg.schemes, vec![Scheme::Proposed, Scheme::FixedTraj]);
    assert_eq!((cfg.num_seeds, cfg.first_seed), (3, 7));
    let sweep = cfg.sweep.unwrap();
    assert_eq!(sweep.param, SweepParam::PowerDbm);
    assert_eq!(sweep.values, vec![0.0, 10.0, 20.0]);
    assert_eq!(cfg.output_dir.to_str(), Some("runs/a"));
}

#[test]
fn parse_errors_carry_line_and_field() {
    let err = load_config("[scenario]\nmt = 2\nnt = \"eight\"\n", None).unwrap_err();
    match err {
        ConfigError::Parse { line, field, .. } => {
            assert_eq!(line, 3);
            assert_eq!(field.as_deref(), Some("nt"));
        }
        e => panic!("expected a parse error, got {e}"),
    }
    assert!(matches!(load_config("[scenario]\nbogus = 1\n", None), Err(ConfigError::Parse { line: 2, .. })));
    assert!(matches!(load_config("[scenario\n", None), Err(ConfigError::Parse { line: 1, .. })));
}

#[test]
fn validation_lists_every_violation() {
    let text = r#"
[scenario]
nrf = 1
d_min = -1
[solver]
shrink = 1.5
[experiment]
schemes = ["wmmse"]
rng = "mt19937"
"#;
    match load_config(text, None).unwrap_err() {
        ConfigError::Validation(errs) => {
            assert!(errs.len() >= 5, "{errs:?}");
            assert!(errs.iter().any(|e| e.contains("wmmse")));
            assert!(errs.iter().any(|e| e.contains("mt19937")));
        }
        e => panic!("expected validation errors, got {e}"),
    }
    let unsorted = "[experiment]\nsweep_param = \"gamma_s_db\"\nsweep_values = [10, 0]\n";
    assert!(matches!(load_config(unsorted, None), Err(ConfigError::Validation(_))));
    let half = "[experiment]\nsweep_param = \"nrf\"\n";
    assert!(matches!(load_config(half, None), Err(ConfigError::Validation(_))));
    let fractional = "[experiment]\nsweep_param = \"kappa\"\nsweep_values = [1.5]\n";
    assert!(matches!(load_config(fractional, None), Err(ConfigError::Validation(_))));
}

#[test]
fn sweep_points_modify_one_parameter() {
    let base = ScenarioSpec::preset(Preset::Small);
    let s = base.with_param(SweepParam::PowerDbm, 30.0);
    assert!(s.power.iter().all(|&p| rel(p, 1.0) < 1e-15));
    assert_eq!(ScenarioSpec { power: base.power.clone(), ..s }, base);
    assert_eq!(base.with_param(SweepParam::Kappa, 0.0).phase_mode, PhaseMode::Continuous);
    assert_eq!(base.with_param(SweepParam::Kappa, 3.0).phase_mode, PhaseMode::Discrete { bits: 3 });
    assert_eq!(base.with_param(SweepParam::Nrf, 6.0).nrf, 6);
}

#[test]
fn ground_tracks_are_seeded() {
    let spec = ScenarioSpec::preset(Preset::Small);
    assert_eq!(spec.build(4), spec.build(4));
    assert_ne!(spec.build(4).user_positions, spec.build(5).user_positions);
    let sc = spec.build(4);
    let first = (sc.target_positions[1] - sc.target_positions[0]).norm();
    let margin = 0.25 * spec.area.0.min(spec.area.1);
    for t in 1..sc.slots {
        let step = (sc.target_positions[t] - sc.target_positions[t - 1]).norm();
        assert!((step - first).abs() < 1e-9);
        assert!(step <= spec.target_speed * spec.delta_t + 1e-12);
        let p = sc.target_positions[t];
        assert!(p.x >= margin && p.x <= spec.area.0 - margin && p.y >= margin && p.y <= spec.area.1 - margin);
    }
}

proptest! {
    #[test]
    fn db_round_trip(x in -200.0f64..200.0) {
        prop_assert!(rel(linear_to_db(db_to_linear(x)), x) <= 1e-12 || (linear_to_db(db_to_linear(x)) - x).abs() <= 1e-12);
        prop_assert!(rel(watts_to_dbm(dbm_to_watts(x)), x) <= 1e-12 || (watts_to_dbm(dbm_to_watts(x)) - x).abs() <= 1e-12);
    }

    #[test]
    fn linear_round_trip(e in -20.0f64..20.0) {
        let x = 10f64.powf(e);
        prop_assert!(rel(db_to_linear(linear_to_db(x)), x) <= 1e-12);
    }
}
