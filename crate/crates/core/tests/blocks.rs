mod common;

use common::{cgauss, cmat, hermitian_psd, rel, rng};
use isac_core::linalg::{frob_sq, max_abs};
use isac_core::pdd::blocks::{
    analog_objective, digital_objective, linear_term, quadratic_form, update_f, update_p, update_v, update_w,
    update_z, user_rate, BlockLayout, RateSurrogate,
};
use isac_core::scenario::PhaseMode;
use isac_core::{CMatrix, CVector, Cx};
use rand::Rng;

/// Dense least squares on `[H^H F; F; A F] W = [Gamma; Upsilon; Lambda]` via SVD.
fn stacked_ls(h: &CMatrix, a: &CMatrix, f: &CMatrix, g: &CMatrix, u: &CMatrix, l: &CMatrix) -> CMatrix {
    let blocks = [h.adjoint() * f, f.clone(), a * f];
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut m = CMatrix::zeros(rows, f.ncols());
    let mut rhs = CMatrix::zeros(rows, g.ncols());
    let mut at = 0;
    for (b, y) in blocks.iter().zip([g, u, l]) {
        m.rows_mut(at, b.nrows()).copy_from(b);
        rhs.rows_mut(at, b.nrows()).copy_from(y);
        at += b.nrows();
    }
    m.svd(true, true).solve(&rhs, 1e-14).unwrap()
}

#[test]
fn digital_update_matches_stacked_least_squares() {
    let mut r = rng(21);
    for _ in 0..20 {
        let (n, nrf, k, cols, nr) = (8, 4, 3, 4, 6);
        let h = cmat(&mut r, n, k);
        let a = cmat(&mut r, nr, n);
        let f = cmat(&mut r, n, nrf);
        let (g, u, l) = (cmat(&mut r, k, cols), cmat(&mut r, n, cols), cmat(&mut r, nr, cols));
        let phi = quadratic_form(&h, &a);
        let w = update_w(&f, &phi, &linear_term(&h, &a, &g, &u, &l));
        let oracle = stacked_ls(&h, &a, &f, &g, &u, &l);
        let ours = digital_objective(&h, &a, &f, &w, &g, &u, &l);
        let best = digital_objective(&h, &a, &f, &oracle, &g, &u, &l);
        assert!(ours <= best * (1.0 + 1e-8), "{ours} vs {best}");
    }
}

#[test]
fn digital_update_interpolates_and_vanishes() {
    let mut r = rng(22);
    let f = cmat(&mut r, 6, 3);
    let w0 = cmat(&mut r, 3, 2);
    let (h, a) = (CMatrix::zeros(6, 2), CMatrix::zeros(4, 6));
    let phi = quadratic_form(&h, &a);
    let xi = linear_term(&h, &a, &CMatrix::zeros(2, 2), &(&f * &w0), &CMatrix::zeros(4, 2));
    assert!((update_w(&f, &phi, &xi) - &w0).norm() < 1e-10 * w0.norm());
    let zero = linear_term(&h, &a, &CMatrix::zeros(2, 2), &CMatrix::zeros(6, 2), &CMatrix::zeros(4, 2));
    assert_eq!(update_w(&f, &phi, &zero), CMatrix::zeros(3, 2));
}

/// Projection onto `||v||^2 <= budget` found by bisection on the KKT multiplier.
fn kkt_bisection(x: &CMatrix, budget: f64) -> CMatrix {
    let e = frob_sq(x);
    if e <= budget {
        return x.clone();
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while e / (1.0 + hi).powi(2) > budget {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if e / (1.0 + mid).powi(2) > budget {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    x.unscale(1.0 + 0.5 * (lo + hi))
}

#[test]
fn power_projection_matches_kkt_bisection() {
    let mut r = rng(23);
    for _ in 0..50 {
        let nt = 4;
        let x = cmat(&mut r, 2 * nt, 3).scale(r.random_range(0.1..3.0));
        let budgets = [r.random_range(0.5..20.0), r.random_range(0.5..20.0)];
        let v = update_v(&x, nt, &budgets);
        for (m, &b) in budgets.iter().enumerate() {
            let oracle = kkt_bisection(&x.rows(m * nt, nt).clone_owned(), b);
            let diff = max_abs(&(v.rows(m * nt, nt) - &oracle));
            assert!(diff <= 1e-10 * max_abs(&oracle).max(1.0));
        }
    }
}

#[test]
fn sensing_auxiliary_matches_sphere_lift() {
    let mut r = rng(24);
    for _ in 0..30 {
        let omega = cmat(&mut r, 6, 3);
        let threshold = frob_sq(&omega) * r.random_range(1.5..10.0);
        let start = cmat(&mut r, 6, 3);
        let dir = CVector::from_element(6, Cx::new(1.0, 0.0));
        let out = update_z(&omega, &start, threshold, &dir, 10_000, 1e-15);
        let oracle = omega.scale((threshold / frob_sq(&omega)).sqrt());
        assert!(max_abs(&(&out.z - &oracle)) <= 1e-6, "{}", max_abs(&(&out.z - &oracle)));
        assert!(frob_sq(&out.z) >= threshold * (1.0 - 1e-12));
    }
    // already feasible: Omega is the exact minimiser
    let omega = cmat(&mut r, 3, 2);
    let out = update_z(&omega, &CMatrix::zeros(3, 2), 0.5 * frob_sq(&omega), &CVector::zeros(3), 5, 1e-9);
    assert_eq!(out.z, omega);
    assert_eq!(out.iterations, 0);
}

/// One sweep of the element rule, with every coordinate chosen by
/// evaluating the full objective on each alphabet point.
fn enumerated_sweep(f: &mut CMatrix, b: &CMatrix, c: &CMatrix, d: &CMatrix, layout: BlockLayout, alphabet: &[Cx]) {
    for (p, q) in layout.support().collect::<Vec<_>>() {
        let mut best = (f64::INFINITY, 0);
        for (i, &z) in alphabet.iter().enumerate() {
            f[(p, q)] = z;
            let v = analog_objective(f, b, c, d);
            if v < best.0 {
                best = (v, i);
            }
        }
        f[(p, q)] = alphabet[best.1];
    }
}

#[test]
fn analog_element_rule_matches_enumeration() {
    let mut r = rng(25);
    let layout = BlockLayout { mt: 2, nt: 3, nrf: 2 };
    for bits in 1..=3u32 {
        let mode = PhaseMode::Discrete { bits };
        let alphabet = mode.alphabet().unwrap();
        for _ in 0..20 {
            let b = hermitian_psd(&mut r, 6);
            let d = hermitian_psd(&mut r, 4);
            let c = cmat(&mut r, 6, 4);
            let mut f0 = CMatrix::zeros(6, 4);
            for (p, q) in layout.support() {
                f0[(p, q)] = alphabet[r.random_range(0..alphabet.len())];
            }
            let mut ours = f0.clone();
            update_f(&mut ours, &b, &c, &d, layout, mode, 0.0, 1);
            let mut oracle = f0;
            enumerated_sweep(&mut oracle, &b, &c, &d, layout, &alphabet);
            assert_eq!(ours, oracle, "bits={bits}");
        }
    }
}

#[test]
fn analog_sweeps_never_increase_objective() {
    let mut r = rng(26);
    let layout = BlockLayout { mt: 2, nt: 4, nrf: 2 };
    let b = hermitian_psd(&mut r, 8);
    let d = hermitian_psd(&mut r, 4);
    let c = cmat(&mut r, 8, 4);
    let mut f = CMatrix::zeros(8, 4);
    for (p, q) in layout.support() {
        f[(p, q)] = Cx::from_polar(1.0, r.random_range(0.0..std::f64::consts::TAU));
    }
    let mut prev = analog_objective(&f, &b, &c, &d);
    for _ in 0..10 {
        let out = update_f(&mut f, &b, &c, &d, layout, PhaseMode::Continuous, 0.0, 1);
        assert!(out.objective <= prev + 1e-10 * prev.abs());
        assert!(rel(out.objective, analog_objective(&f, &b, &c, &d)) < 1e-9);
        prev = out.objective;
    }
    for (p, q) in layout.support() {
        assert!((f[(p, q)].norm() - 1.0).abs() < 1e-12);
    }
    assert_eq!(f[(0, 2)], Cx::new(0.0, 0.0));
}

#[test]
fn surrogate_is_tight_minoriser() {
    let mut r = rng(27);
    for _ in 0..500 {
        let n = r.random_range(2..6);
        let k = r.random_range(0..n);
        let sigma2 = 10f64.powf(r.random_range(-3.0..1.0));
        let scale = 10f64.powf(r.random_range(-2.0..1.0));
        let expansion: Vec<Cx> = (0..n).map(|_| cgauss(&mut r) * scale).collect();
        let point: Vec<Cx> = (0..n).map(|_| cgauss(&mut r) * scale * 2.0).collect();
        let s = RateSurrogate::at(&expansion, k, sigma2);
        assert!(s.c <= 0.0);
        let exact = user_rate(&expansion, k, sigma2);
        assert!((s.eval(&expansion) - exact).abs() <= 1e-10 * exact.max(1.0));
        assert!(s.eval(&point) <= user_rate(&point, k, sigma2) + 1e-12);
    }
}

#[test]
fn scalar_mm_step_maximises_surrogate() {
    // K = 1, S = 0: maximise w (c |p|^2 + Re(d^* p)) - |p - psi|^2 / (2 rho)
    let (w, sigma2, rho) = (0.8, 0.5, 0.3);
    let psi = CMatrix::from_element(1, 1, Cx::new(0.6, -0.4));
    let start = CMatrix::from_element(1, 1, Cx::new(1.1, 0.2));
    let (p, _) = update_p(&psi, &start, &[w], &[sigma2], rho, 1, 0.0);
    let s = RateSurrogate::at(&[start[(0, 0)]], 0, sigma2);
    let g = |z: Cx| w * s.eval(&[z]) - (z - psi[(0, 0)]).norm_sqr() / (2.0 * rho);
    // stationarity: 2 w c p + w d - (p - psi) / rho = 0
    let z = p[(0, 0)];
    let grad = z * (2.0 * w * s.c) + s.d[0] * w - (z - psi[(0, 0)]) / rho;
    assert!(grad.norm() < 1e-12);
    for i in 0..16 {
        let dz = Cx::from_polar(1e-3, i as f64 * 0.39);
        assert!(g(z + dz) < g(z));
    }
}

#[test]
fn p_update_reaches_scalar_optimum() {
    let (w, sigma2, rho) = (1.0, 0.2, 0.5);
    let psi_v = Cx::from_polar(0.7, 0.9);
    let psi = CMatrix::from_element(1, 1, psi_v);
    let (p, _) = update_p(&psi, &psi, &[w], &[sigma2], rho, 10_000, 1e-14);
    // the maximiser shares psi's phase; golden-section on the magnitude
    let obj = |m: f64| w * (1.0 + m * m / sigma2).log2() - (m - psi_v.norm()).powi(2) / (2.0 * rho);
    let (mut a, mut b) = (psi_v.norm(), psi_v.norm() + 10.0);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..200 {
        let (x1, x2) = (b - g * (b - a), a + g * (b - a));
        if obj(x1) < obj(x2) {
            a = x1;
        } else {
            b = x2;
        }
    }
    let best = Cx::from_polar(0.5 * (a + b), psi_v.arg());
    assert!((p[(0, 0)] - best).norm() < 1e-6);
}

#[test]
fn p_update_pinned_for_tiny_rho() {
    let mut r = rng(28);
    let psi = cmat(&mut r, 3, 4);
    let (p, _) = update_p(&psi, &psi, &[0.3, 0.3, 0.4], &[0.1, 0.1, 0.1], 1e-9, 50, 1e-12);
    assert!(max_abs(&(&p - &psi)) < 1e-6 * max_abs(&psi));
}

#[test]
fn p_update_does_not_lower_row_objective() {
    let mut r = rng(29);
    for _ in 0..20 {
        let psi = cmat(&mut r, 3, 4);
        let start = cmat(&mut r, 3, 4);
        let weights = [0.2, 0.5, 0.3];
        let sigma2 = [1e-2, 1e-3, 5e-2];
        let rho = 0.3;
        let obj = |p: &CMatrix| -> f64 {
            (0..3)
                .map(|k| {
                    let row: Vec<Cx> = p.row(k).iter().copied().collect();
                    weights[k] * user_rate(&row, k, sigma2[k])
                })
                .sum::<f64>()
                - frob_sq(&(p - &psi)) / (2.0 * rho)
        };
        let (p, _) = update_p(&psi, &start, &weights, &sigma2, rho, 50, 1e-10);
        assert!(obj(&p) >= obj(&start) - 1e-12);
    }
}
