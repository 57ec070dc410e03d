#![allow(dead_code)]

use isac_core::scenario::{Architecture, PhaseMode, PhysicalParams, Scenario};
use isac_core::{CMatrix, Cx, Point};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn cgauss(rng: &mut ChaCha8Rng) -> Cx {
    // Box-Muller keeps the helper free of distribution crates
    let u1: f64 = rng.random::<f64>().max(1e-300);
    let u2: f64 = rng.random();
    let r = (-2.0 * u1.ln()).sqrt();
    let th = 2.0 * std::f64::consts::PI * u2;
    Cx::new(r * th.cos(), r * th.sin()) / std::f64::consts::SQRT_2
}

pub fn cmat(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| cgauss(rng))
}

pub fn hermitian_psd(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
    let g = cmat(rng, n, n);
    &g * g.adjoint() + CMatrix::identity(n, n)
}

pub fn params(k: usize) -> PhysicalParams {
    PhysicalParams::new(50.0, 1.9e9, 0.5, 1e-5, 1.0, vec![1e-14; k], 10f64.powf(-12.4))
}

/// Small random scenario on a 100 x 100 m area. Tx UAVs fly west to east,
/// Rx UAVs east to west, on separate lanes.
#[allow(clippy::too_many_arguments)]
pub fn scenario(mt: usize, mr: usize, nt: usize, nrf: usize, k: usize, s: usize, slots: usize, seed: u64) -> Scenario {
    let mut r = rng(seed);
    let ground = |r: &mut ChaCha8Rng| Point::new(r.random_range(10.0..90.0), r.random_range(10.0..90.0));
    let user_positions = (0..k)
        .map(|_| {
            let p = ground(&mut r);
            vec![p; slots]
        })
        .collect();
    let tp = ground(&mut r);
    let target_positions = (0..slots).map(|t| tp + Point::new(0.5 * t as f64, 0.0)).collect();
    let m = mt + mr;
    let lane = |i: usize| 10.0 + 80.0 * (i as f64 + 0.5) / m as f64;
    let span = (((slots - 1) as f64) * 20.0 * 0.8).min(60.0);
    let mut q_init = Vec::new();
    let mut q_final = Vec::new();
    for i in 0..m {
        let (a, b) = if i < mt { (20.0, 20.0 + span) } else { (20.0 + span, 20.0) };
        q_init.push(Point::new(a, lane(i)));
        q_final.push(Point::new(b, lane(i)));
    }
    Scenario {
        mt,
        mr,
        nt,
        nr: nt,
        nrf,
        k,
        s,
        slots,
        delta_t: 1.0,
        area: (100.0, 100.0),
        user_positions,
        target_positions,
        q_init,
        q_final,
        v_max: 20.0,
        d_min: 5.0,
        power_budget: vec![0.1; mt],
        gamma_s: 10f64.powf(0.5),
        weights: vec![1.0 / k as f64; k],
        phase_mode: PhaseMode::Continuous,
        architecture: Architecture::Hybrid,
        params: params(k),
    }
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(a.abs()).max(f64::MIN_POSITIVE)
}
