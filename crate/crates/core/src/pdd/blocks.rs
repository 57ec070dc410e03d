//! Closed-form and majorisation-minimisation block updates for one slot.
//!
//! Every function here is unit-agnostic: the driver feeds it the
//! noise-normalised slot problem, the tests feed it raw numbers.

use std::f64::consts::LN_2;

use crate::linalg::{frob_sq, pinv_psd, re_inner};
use crate::scenario::PhaseMode;
use crate::{CMatrix, CVector, Cx};

/// Relative eigenvalue cut-off of the pseudo-inverse in the digital update.
pub const PINV_CUTOFF: f64 = 1e-12;

/// Layout of the block-diagonal analog beamformer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockLayout {
    pub mt: usize,
    pub nt: usize,
    pub nrf: usize,
}

impl BlockLayout {
    /// Indices `(p, q)` of the analog entries, row-major inside each block,
    /// blocks in UAV order.
    pub fn support(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.mt).flat_map(move |m| {
            (0..self.nt).flat_map(move |r| (0..self.nrf).map(move |c| (m * self.nt + r, m * self.nrf + c)))
        })
    }

    pub fn on_support(&self, p: usize, q: usize) -> bool {
        p / self.nt == q / self.nrf && p / self.nt < self.mt
    }
}

/// `Phi = I + A^H A + H H^H`, shared by the digital and analog updates.
pub fn quadratic_form(h: &CMatrix, a: &CMatrix) -> CMatrix {
    let n = h.nrows();
    CMatrix::identity(n, n) + a.adjoint() * a + h * h.adjoint()
}

/// `Xi = H Gamma + Upsilon + A^H Lambda`.
pub fn linear_term(h: &CMatrix, a: &CMatrix, gamma: &CMatrix, upsilon: &CMatrix, lambda: &CMatrix) -> CMatrix {
    h * gamma + upsilon + a.adjoint() * lambda
}

/// Objective of the digital subproblem
/// `||H^H F W - Gamma||^2 + ||F W - Upsilon||^2 + ||A F W - Lambda||^2`.
pub fn digital_objective(
    h: &CMatrix,
    a: &CMatrix,
    f: &CMatrix,
    w: &CMatrix,
    gamma: &CMatrix,
    upsilon: &CMatrix,
    lambda: &CMatrix,
) -> f64 {
    let x = f * w;
    frob_sq(&(h.adjoint() * &x - gamma)) + frob_sq(&(&x - upsilon)) + frob_sq(&(a * &x - lambda))
}

/// Digital beamformer minimising [`digital_objective`]:
/// `W = (F^H Phi F)^+ F^H Xi`.
pub fn update_w(f: &CMatrix, phi: &CMatrix, xi: &CMatrix) -> CMatrix {
    let fh = f.adjoint();
    let gram = &fh * phi * f;
    pinv_psd(&gram, PINV_CUTOFF) * (fh * xi)
}

/// `Re tr(F^H B F D) - 2 Re tr(F^H C)`.
pub fn analog_objective(f: &CMatrix, b: &CMatrix, c: &CMatrix, d: &CMatrix) -> f64 {
    re_inner(f, &(b * f * d)) - 2.0 * re_inner(f, c)
}

/// Maximiser of `Re{b^* f}` over the phase alphabet. A zero coefficient keeps
/// `prev`; ties between discrete points go to the lower index.
pub fn best_phase(b: Cx, prev: Cx, alphabet: Option<&[Cx]>) -> Cx {
    match alphabet {
        None => {
            let mag = b.norm();
            if mag == 0.0 {
                prev
            } else {
                b / mag
            }
        }
        Some(points) => {
            if b == Cx::new(0.0, 0.0) {
                return prev;
            }
            let mut best = points[0];
            let mut best_val = (b.conj() * points[0]).re;
            for &z in &points[1..] {
                let v = (b.conj() * z).re;
                if v > best_val + 1e-15 {
                    best = z;
                    best_val = v;
                }
            }
            best
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct BcdOutcome {
    pub sweeps: usize,
    pub objective: f64,
}

/// Element-wise block coordinate descent on the analog beamformer.
///
/// Minimises [`analog_objective`] over unit-modulus (or discrete) entries on
/// the block-diagonal support; entries off the support stay zero.
#[allow(clippy::too_many_arguments)]
pub fn update_f(
    f: &mut CMatrix,
    b: &CMatrix,
    c: &CMatrix,
    d: &CMatrix,
    layout: BlockLayout,
    mode: PhaseMode,
    tol: f64,
    max_sweeps: usize,
) -> BcdOutcome {
    let alphabet = mode.alphabet();
    let support: Vec<(usize, usize)> = layout.support().collect();
    let mut objective = analog_objective(f, b, c, d);
    let mut sweeps = 0;
    while sweeps < max_sweeps {
        // M = B F D kept in sync with rank-one corrections
        let mut bfd = b * &*f * d;
        for &(p, q) in &support {
            let old = f[(p, q)];
            let coef = b[(p, p)] * old * d[(q, q)] - bfd[(p, q)] + c[(p, q)];
            let new = best_phase(coef, old, alphabet.as_deref());
            let delta = new - old;
            if delta != Cx::new(0.0, 0.0) {
                f[(p, q)] = new;
                for s in 0..bfd.ncols() {
                    let dq = delta * d[(q, s)];
                    if dq == Cx::new(0.0, 0.0) {
                        continue;
                    }
                    for r in 0..bfd.nrows() {
                        bfd[(r, s)] += b[(r, p)] * dq;
                    }
                }
            }
        }
        sweeps += 1;
        let next = re_inner(f, &bfd) - 2.0 * re_inner(f, c);
        let change = (objective - next).abs();
        objective = next;
        if change <= tol * objective.abs().max(f64::MIN_POSITIVE) {
            break;
        }
    }
    BcdOutcome { sweeps, objective }
}

/// Projection of `x` onto the per-UAV power balls `sum_i ||v_{m,i}||^2 <= budget_m`;
/// UAV `m` owns rows `m*nt..(m+1)*nt`.
pub fn update_v(x: &CMatrix, nt: usize, budgets: &[f64]) -> CMatrix {
    let mut v = x.clone();
    for (m, &budget) in budgets.iter().enumerate() {
        let mut block = v.rows_mut(m * nt, nt);
        let energy: f64 = block.iter().map(|z| z.norm_sqr()).sum();
        if energy > budget {
            block.scale_mut((budget / energy).sqrt());
        }
    }
    v
}

#[derive(Debug, Clone)]
pub struct ZOutcome {
    pub z: CMatrix,
    pub iterations: usize,
    /// The starting iterate was zero and had to be re-seeded.
    pub reseeded: bool,
}

/// Minimises `||Z - Omega||_F^2` subject to `||Z||_F^2 >= threshold` by
/// majorisation-minimisation on the linearised constraint.
///
/// When `Omega` is itself feasible it is returned directly (it is the exact
/// minimiser). A zero starting iterate is replaced by `fallback` (the leading
/// left singular direction of the echo channel) replicated over the columns
/// and scaled to the threshold sphere.
pub fn update_z(
    omega: &CMatrix,
    z_start: &CMatrix,
    threshold: f64,
    fallback: &CVector,
    max_iters: usize,
    tol: f64,
) -> ZOutcome {
    if threshold <= 0.0 || frob_sq(omega) >= threshold {
        return ZOutcome { z: omega.clone(), iterations: 0, reseeded: false };
    }
    let mut z = z_start.clone();
    let mut reseeded = false;
    if frob_sq(&z) == 0.0 {
        z = seed_on_sphere(fallback, omega.ncols(), threshold);
        reseeded = true;
    }
    let mut iterations = 0;
    while iterations < max_iters {
        let next = z_step(omega, &z, threshold);
        iterations += 1;
        let moved = frob_sq(&(&next - &z)).sqrt();
        let scale = frob_sq(&next).sqrt();
        z = next;
        if moved <= tol * scale {
            break;
        }
    }
    ZOutcome { z, iterations, reseeded }
}

/// One MM step `Z+ = Omega + [gamma' - Re<Z, Omega>]^+ / ||Z||^2 * Z` with
/// `gamma' = (threshold + ||Z||^2) / 2`.
pub fn z_step(omega: &CMatrix, z: &CMatrix, threshold: f64) -> CMatrix {
    let zz = frob_sq(z);
    let target = 0.5 * (threshold + zz);
    let lift = (target - re_inner(z, omega)).max(0.0) / zz;
    omega + z.scale(lift)
}

fn seed_on_sphere(dir: &CVector, cols: usize, threshold: f64) -> CMatrix {
    let mut z = CMatrix::zeros(dir.len(), cols);
    for mut col in z.column_iter_mut() {
        col.copy_from(dir);
    }
    let norm = frob_sq(&z).sqrt();
    if norm > 0.0 {
        z.scale_mut(threshold.sqrt() / norm);
    } else if !z.is_empty() {
        let v = (threshold / (z.nrows() * z.ncols()) as f64).sqrt();
        z.fill(Cx::new(v, 0.0));
    }
    z
}

/// `log2(1 + SINR_k)` from user `k`'s row of effective gains.
pub fn user_rate(p: &[Cx], k: usize, sigma2: f64) -> f64 {
    let signal = p[k].norm_sqr();
    let interference: f64 = p.iter().enumerate().filter(|&(i, _)| i != k).map(|(_, z)| z.norm_sqr()).sum();
    (1.0 + signal / (interference + sigma2)).log2()
}

/// Concave quadratic minoriser of user `k`'s rate, tight at its expansion point:
/// `R_k(p) >= c * sum_i |p_i|^2 + sum_i Re{d_i^* p_i} + constant`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateSurrogate {
    pub c: f64,
    pub d: Vec<Cx>,
    pub constant: f64,
}

impl RateSurrogate {
    pub fn at(expansion: &[Cx], k: usize, sigma2: f64) -> Self {
        let own = expansion[k].norm_sqr();
        let alpha: f64 = expansion
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != k)
            .map(|(_, z)| z.norm_sqr())
            .sum::<f64>()
            + sigma2;
        let beta = alpha + own;
        let c = -own / (alpha * beta * LN_2);
        let mut d = vec![Cx::new(0.0, 0.0); expansion.len()];
        d[k] = expansion[k] * (2.0 / (alpha * LN_2));
        let constant = ((beta / alpha).ln() - own / alpha - own * sigma2 / (alpha * beta)) / LN_2;
        Self { c, d, constant }
    }

    pub fn eval(&self, p: &[Cx]) -> f64 {
        let quad: f64 = p.iter().map(|z| z.norm_sqr()).sum();
        let lin: f64 = p.iter().zip(&self.d).map(|(z, d)| (d.conj() * z).re).sum();
        self.c * quad + lin + self.constant
    }
}

/// Row objective `w R_k(p) - ||p - psi||^2 / (2 rho)`.
fn p_row_objective(p: &[Cx], psi: &[Cx], k: usize, weight: f64, sigma2: f64, rho: f64) -> f64 {
    let dist: f64 = p.iter().zip(psi).map(|(a, b)| (a - b).norm_sqr()).sum();
    weight * user_rate(p, k, sigma2) - dist / (2.0 * rho)
}

/// One MM step on a row: maximiser of the surrogate objective.
fn p_row_mm(row: &[Cx], psi: &[Cx], k: usize, weight: f64, sigma2: f64, rho: f64) -> Vec<Cx> {
    let sur = RateSurrogate::at(row, k, sigma2);
    let denom = 1.0 - 2.0 * weight * sur.c * rho;
    psi.iter().zip(&sur.d).map(|(p, d)| (d * (weight * rho) + p) / denom).collect()
}

fn max_step(a: &[Cx], b: &[Cx]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).norm()))
}

/// MM ascent on `sum_k w_k R_k(P) - ||P - Psi||^2 / (2 rho)`.
///
/// Rows decouple, so each user's row is iterated independently. The plain
/// MM map contracts slowly when the interference-plus-noise power is small
/// next to `1 / rho`, so cycles of two MM steps are extrapolated (SQUAREM)
/// and the extrapolated point is kept only if it does not lower the
/// objective. A row stops once an MM step moves no entry by more than
/// `tol` relative to the row's largest entry, or after `max_iters` MM
/// steps. Returns the new `P` and the largest number of MM steps used by a row.
pub fn update_p(
    psi: &CMatrix,
    p_start: &CMatrix,
    weights: &[f64],
    sigma2: &[f64],
    rho: f64,
    max_iters: usize,
    tol: f64,
) -> (CMatrix, usize) {
    let mut p = p_start.clone();
    let cols = psi.ncols();
    let mut worst = 0;
    for k in 0..psi.nrows() {
        let (w, s2) = (weights[k], sigma2[k]);
        let psi_row: Vec<Cx> = psi.row(k).iter().copied().collect();
        if w == 0.0 {
            for i in 0..cols {
                p[(k, i)] = psi_row[i];
            }
            continue;
        }
        let obj = |r: &[Cx]| p_row_objective(r, &psi_row, k, w, s2, rho);
        let converged = |a: &[Cx], b: &[Cx]| {
            let scale = b.iter().fold(0.0f64, |m, z| m.max(z.norm()));
            max_step(a, b) <= tol * scale.max(f64::MIN_POSITIVE)
        };
        let mut row: Vec<Cx> = p.row(k).iter().copied().collect();
        let mut iters = 0;
        while iters < max_iters {
            let x1 = p_row_mm(&row, &psi_row, k, w, s2, rho);
            iters += 1;
            if converged(&row, &x1) || iters == max_iters {
                row = x1;
                break;
            }
            let x2 = p_row_mm(&x1, &psi_row, k, w, s2, rho);
            iters += 1;
            let r: Vec<Cx> = x1.iter().zip(&row).map(|(a, b)| a - b).collect();
            let v: Vec<Cx> = x2.iter().zip(&x1).zip(&r).map(|((a, b), c)| a - b - c).collect();
            let rn = r.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            let vn = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            let mut next = x2;
            if vn > 0.0 && iters < max_iters {
                let alpha = (-rn / vn).min(-1.0);
                let jump: Vec<Cx> = row
                    .iter()
                    .zip(&r)
                    .zip(&v)
                    .map(|((x, r), v)| x - r * (2.0 * alpha) + v * (alpha * alpha))
                    .collect();
                let stabilised = p_row_mm(&jump, &psi_row, k, w, s2, rho);
                iters += 1;
                if obj(&stabilised) >= obj(&next) {
                    next = stabilised;
                }
            }
            let done = converged(&row, &next);
            row = next;
            if done {
                break;
            }
        }
        worst = worst.max(iters);
        for i in 0..cols {
            p[(k, i)] = row[i];
        }
    }
    (p, worst)
}
