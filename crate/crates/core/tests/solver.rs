mod common;

use std::f64::consts::LN_2;

use common::{cmat, rel, rng, scenario};
use isac_core::pdd::{solve, Block, PddSolver, SolverConfig, Status};
use isac_core::scenario::Scenario;
use isac_core::Cx;
use rand::Rng;

fn consistent(s: &mut PddSolver) {
    for t in 0..s.scenario.slots {
        let x = s.precoder(t);
        let ch = &s.channels[t];
        s.p[t] = ch.h.adjoint() * &x;
        s.v[t] = x.clone();
        s.z[t] = &ch.a * &x;
    }
}

fn randomise(s: &mut PddSolver, seed: u64) {
    let mut r = rng(seed);
    for t in 0..s.scenario.slots {
        let (pr, pc) = s.p[t].shape();
        s.p[t] = cmat(&mut r, pr, pc);
        let (vr, vc) = s.v[t].shape();
        s.v[t] = cmat(&mut r, vr, vc);
        let (zr, zc) = s.z[t].shape();
        s.z[t] = cmat(&mut r, zr, zc);
        s.u[t] = cmat(&mut r, pr, pc);
        s.y[t] = cmat(&mut r, vr, vc);
        s.t[t] = cmat(&mut r, zr, zc);
        s.rho[t] = r.random_range(0.05..1.0);
    }
}

/// Term-by-term re-summation of the augmented Lagrangian with explicit loops.
fn al_oracle(s: &PddSolver) -> f64 {
    let sc = s.scenario;
    let mut total = 0.0;
    for t in 0..sc.slots {
        let ch = &s.channels[t];
        let x = s.precoder(t);
        let rho = s.rho[t];
        let cols = sc.streams();
        for k in 0..sc.k {
            let mut interf = s.noise[k];
            for i in 0..cols {
                if i != k {
                    interf += s.p[t][(k, i)].norm_sqr();
                }
            }
            total += sc.weights[k] * (1.0 + s.p[t][(k, k)].norm_sqr() / interf).ln() / LN_2;
        }
        let mut pen = 0.0;
        for i in 0..cols {
            for k in 0..sc.k {
                let hx: Cx = (0..x.nrows()).map(|a| ch.h[(a, k)].conj() * x[(a, i)]).sum();
                pen += (s.p[t][(k, i)] - hx + s.u[t][(k, i)] * rho).norm_sqr();
            }
            for a in 0..x.nrows() {
                pen += (s.v[t][(a, i)] - x[(a, i)] + s.y[t][(a, i)] * rho).norm_sqr();
            }
            for b in 0..ch.a.nrows() {
                let ax: Cx = (0..x.nrows()).map(|a| ch.a[(b, a)] * x[(a, i)]).sum();
                pen += (s.z[t][(b, i)] - ax + s.t[t][(b, i)] * rho).norm_sqr();
            }
        }
        total -= pen / (2.0 * rho);
    }
    total
}

fn small() -> Scenario {
    scenario(2, 2, 4, 2, 2, 1, 5, 31)
}

#[test]
fn augmented_lagrangian_matches_resummation() {
    let sc = small();
    let mut s = PddSolver::new(&sc, SolverConfig::default()).unwrap();
    randomise(&mut s, 1);
    assert!(rel(s.al_value(), al_oracle(&s)) < 1e-10);

    consistent(&mut s);
    for t in 0..sc.slots {
        s.u[t].fill(Cx::new(0.0, 0.0));
        s.y[t].fill(Cx::new(0.0, 0.0));
        s.t[t].fill(Cx::new(0.0, 0.0));
    }
    assert!(rel(s.al_value(), s.wsr_aux()) < 1e-12);

    for t in 0..sc.slots {
        s.w[t].fill(Cx::new(0.0, 0.0));
        s.p[t].fill(Cx::new(0.0, 0.0));
        s.v[t].fill(Cx::new(0.0, 0.0));
        s.z[t].fill(Cx::new(0.0, 0.0));
    }
    assert_eq!(s.al_value(), 0.0);
}

#[test]
fn residuals_are_entrywise_maxima() {
    let sc = small();
    let mut s = PddSolver::new(&sc, SolverConfig::default()).unwrap();
    consistent(&mut s);
    for t in 0..sc.slots {
        assert!(s.residuals(t).max() < 1e-15);
    }
    s.p[2][(1, 0)] += Cx::new(0.0, 3e-3);
    let r = s.residuals(2);
    assert!((r.max() - 3e-3).abs() < 1e-15);
    assert_eq!(r.max(), r.p);

    randomise(&mut s, 2);
    for t in 0..sc.slots {
        let ch = &s.channels[t];
        let x = s.precoder(t);
        let mut worst: f64 = 0.0;
        for m in [&s.p[t] - ch.h.adjoint() * &x, &s.v[t] - &x, &s.z[t] - &ch.a * &x] {
            for z in m.iter() {
                worst = worst.max(z.norm());
            }
        }
        assert_eq!(s.residuals(t).max(), worst);
    }
}

#[test]
fn dual_step_is_slotwise() {
    let sc = small();
    let mut s = PddSolver::new(&sc, SolverConfig::default()).unwrap();
    consistent(&mut s);
    let before = s.clone();
    s.dual_penalty_step();
    assert_eq!(s.rho, before.rho);
    for t in 0..sc.slots {
        assert!(s.u[t].norm() < 1e-12 && s.y[t].norm() < 1e-12 && s.t[t].norm() < 1e-12);
    }

    // slot 1 violates, the others do not
    s.v[1][(0, 0)] += Cx::new(1.0, 0.0);
    s.p[3][(0, 0)] += Cx::new(1e-6, 0.0);
    let e = s.dual_penalty_step();
    assert!(e[1] >= 1.0 - 1e-12);
    for t in 0..sc.slots {
        if t == 1 {
            assert_eq!(s.rho[t], before.rho[t] * 0.8);
            assert!(s.y[t].norm() < 1e-12);
        } else {
            assert_eq!(s.rho[t], before.rho[t]);
        }
    }
    let expect = 1e-6 / before.rho[3];
    assert!((s.u[3][(0, 0)].re - expect).abs() < 1e-9 * expect);
}

#[test]
fn every_block_update_keeps_al_non_decreasing() {
    let sc = small();
    let cfg = SolverConfig::default();
    let mut s = PddSolver::new(&sc, cfg).unwrap();
    let mut al = s.al_value();
    for _ in 0..10 {
        for block in Block::ORDER {
            s.step(block);
            let next = s.al_value();
            assert!(next - al >= -1e-6 * al.abs(), "{block:?}: {al} -> {next}");
            al = next;
        }
    }
}

/// K = S = 1, one Tx and one Rx UAV with four antennas, three slots. The
/// 1 W budget keeps the sensing constraint attainable in every slot.
fn degenerate() -> Scenario {
    let mut sc = scenario(1, 1, 4, 2, 1, 1, 3, 5);
    sc.power_budget = vec![1.0];
    sc
}

#[test]
fn degenerate_instance_converges() {
    let sc = degenerate();
    let (sol, trace) = solve(&sc, &SolverConfig::default()).unwrap();
    assert_eq!(sol.status, Status::Converged);
    assert!(trace.outer.last().unwrap().violation <= 1e-8);
    assert!(sol.outer_iterations <= 100);
    assert!(sol.report.feasible, "{:?}", sol.report);
    assert_eq!(sol.trajectory.slot(0), sc.q_init.as_slice());
    assert_eq!(sol.trajectory.slot(2), sc.q_final.as_slice());
}

#[test]
fn dropping_sensing_does_not_lower_rate() {
    let mut sc = degenerate();
    sc.gamma_s = 10.0;
    let (tight, _) = solve(&sc, &SolverConfig::default()).unwrap();
    sc.gamma_s = 0.0;
    let (free, _) = solve(&sc, &SolverConfig::default()).unwrap();
    assert!(free.wsr >= tight.wsr * (1.0 - 1e-4), "{} < {}", free.wsr, tight.wsr);
}

#[test]
fn same_seed_same_solution() {
    let sc = degenerate();
    let cfg = SolverConfig { max_outer: 5, ..SolverConfig::default() };
    let (a, ta) = solve(&sc, &cfg).unwrap();
    let (b, tb) = solve(&sc, &cfg).unwrap();
    assert_eq!(a.beams, b.beams);
    assert_eq!(a.trajectory, b.trajectory);
    assert_eq!(a.wsr.to_bits(), b.wsr.to_bits());
    let al = |t: &isac_core::pdd::SolutionTrace| t.outer.iter().map(|r| r.al.to_bits()).collect::<Vec<_>>();
    assert_eq!(al(&ta), al(&tb));
}

#[test]
fn rejects_invalid_input() {
    let mut sc = degenerate();
    sc.k = 4;
    assert!(PddSolver::new(&sc, SolverConfig::default()).is_err());
    let cfg = SolverConfig { shrink: 1.5, ..SolverConfig::default() };
    assert!(PddSolver::new(&degenerate(), cfg).is_err());
}
