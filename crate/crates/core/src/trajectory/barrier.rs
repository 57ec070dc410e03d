//! Log-barrier interior-point solver for the trajectory subproblem.
//!
//! The subproblem has a linear objective over the free slots, convex ball
//! constraints (speed limit, trust region) and linear half-spaces (linearised
//! separation). Ordering the variables slot by slot makes the barrier Hessian
//! block tridiagonal with `2M x 2M` blocks, which is factored directly.

use nalgebra::{DMatrix, DVector};

use super::ConvexSubproblem;
use crate::scenario::Trajectory;
use crate::Point;

/// Result of [`solve_convex`].
#[derive(Debug, Clone)]
pub struct ConvexSolution {
    pub trajectory: Trajectory,
    /// Linear objective over the free slots at the returned point.
    pub objective: f64,
    /// Final barrier duality gap `m / tau`, relative to the objective range.
    pub gap: f64,
    pub newton_steps: usize,
    /// The Newton budget ran out before the gap target was met.
    pub stalled: bool,
}

const MAX_NEWTON: usize = 600;
const TAU_GROWTH: f64 = 20.0;
/// Weight of the first central point mixed into the returned solution.
/// Slacks are concave, so the mix stays feasible while every slack keeps a
/// margin proportional to its value at that central point; the next
/// expansion point then does not sit on an active boundary.
const CENTRE_MIX: f64 = 1e-6;

enum Con {
    /// `r^2 - ||q_m(t+1) - q_m(t)||^2`
    Step { m: usize, t: usize },
    /// `Delta^2 - ||q_m(t) - anchor||^2`
    Trust { m: usize, t: usize },
    /// `n . (q_a - q_b) - offset`
    Half { t: usize, a: usize, b: usize, normal: Point, offset: f64 },
}

struct Layout<'a> {
    sub: &'a ConvexSubproblem,
    n_uavs: usize,
    n_slots: usize,
    bs: usize,
}

impl Layout<'_> {
    fn free(&self, t: usize) -> bool {
        t > 0 && t + 1 < self.n_slots
    }

    fn pos(&self, x: &[f64], m: usize, t: usize) -> Point {
        if self.free(t) {
            let i = (t - 1) * self.bs + 2 * m;
            Point::new(x[i], x[i + 1])
        } else {
            self.sub.anchor.at(m, t)
        }
    }

    fn idx(&self, m: usize, t: usize) -> usize {
        (t - 1) * self.bs + 2 * m
    }
}

/// Minimises the linear objective of `sub` over its feasible set.
///
/// The expansion point must be strictly feasible; if it is not (for
/// example when a speed limit is met with equality) it is returned unchanged.
/// The returned objective never exceeds the one at the expansion point.
pub fn solve_convex(sub: &ConvexSubproblem, tol: f64) -> ConvexSolution {
    let n_slots = sub.anchor.num_slots();
    let n_uavs = sub.anchor.num_uavs();
    let bs = 2 * n_uavs;
    let nb = n_slots.saturating_sub(2);
    let lay = Layout { sub, n_uavs, n_slots, bs };

    let mut x = vec![0.0; nb * bs];
    for t in 1..n_slots.saturating_sub(1) {
        for m in 0..n_uavs {
            let q = sub.anchor.at(m, t);
            let i = lay.idx(m, t);
            x[i] = q.x;
            x[i + 1] = q.y;
        }
    }
    let mut c = vec![0.0; nb * bs];
    for t in 1..n_slots.saturating_sub(1) {
        for m in 0..n_uavs {
            let g = sub.cost[t][m];
            let i = lay.idx(m, t);
            c[i] = g.x;
            c[i + 1] = g.y;
        }
    }
    let anchor_obj = dot(&c, &x);
    let unchanged = |gap: f64| ConvexSolution {
        trajectory: sub.anchor.clone(),
        objective: anchor_obj,
        gap,
        newton_steps: 0,
        stalled: false,
    };
    let cmax = c.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    if nb == 0 || sub.trust_radius <= 0.0 || cmax == 0.0 {
        return unchanged(0.0);
    }
    let cn: Vec<f64> = c.iter().map(|v| v / cmax).collect();

    let mut cons = Vec::new();
    for m in 0..n_uavs {
        for t in 0..n_slots - 1 {
            if lay.free(t) || lay.free(t + 1) {
                cons.push(Con::Step { m, t });
            }
        }
        for t in 1..n_slots - 1 {
            cons.push(Con::Trust { m, t });
        }
    }
    for h in &sub.separations {
        if lay.free(h.slot) {
            cons.push(Con::Half { t: h.slot, a: h.a, b: h.b, normal: h.normal, offset: h.offset });
        }
    }
    if slacks(&lay, &cons, &x).is_none() {
        return unchanged(f64::INFINITY);
    }
    if let Some(xt) = trust_only_optimum(&lay, &cons, &x, &c) {
        return ConvexSolution {
            trajectory: assemble(&lay, &xt),
            objective: dot(&c, &xt),
            gap: 0.0,
            newton_steps: 0,
            stalled: false,
        };
    }

    let n_con = cons.len() as f64;
    let range = sub.trust_radius * cn.iter().map(|v| v.abs()).sum::<f64>();
    let mut tau = n_con / range;
    let mut steps = 0;
    let mut stalled = false;
    let mut centre: Option<Vec<f64>> = None;
    loop {
        // centering
        loop {
            if steps >= MAX_NEWTON {
                stalled = true;
                break;
            }
            let s = slacks(&lay, &cons, &x).expect("iterate left the interior");
            let (grad, diag, off) = derivatives(&lay, &cons, &x, &s, &cn, tau);
            let Some(dx) = regularised_solve(&diag, &off, &grad) else {
                stalled = true;
                break;
            };
            let dx: Vec<f64> = dx.iter().map(|v| -v).collect();
            let slope = dot(&grad, &dx);
            steps += 1;
            if -slope / 2.0 <= 1e-14 * (1.0 + tau * range) {
                break;
            }
            let phi0 = barrier_value(&cn, &x, &s, tau);
            let mut step = 1.0;
            let mut accepted = false;
            for _ in 0..80 {
                let trial: Vec<f64> = x.iter().zip(&dx).map(|(a, b)| a + step * b).collect();
                if let Some(st) = slacks(&lay, &cons, &trial) {
                    if barrier_value(&cn, &trial, &st, tau) <= phi0 + 0.25 * step * slope {
                        x = trial;
                        accepted = true;
                        break;
                    }
                }
                step *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        let centre = centre.get_or_insert_with(|| x.clone());
        let gap = n_con / tau;
        if stalled || gap <= tol * range {
            for (xi, ci) in x.iter_mut().zip(centre.iter()) {
                *xi += CENTRE_MIX * (ci - *xi);
            }
            let objective = dot(&c, &x);
            if objective > anchor_obj {
                let mut out = unchanged(gap / range);
                out.stalled = stalled;
                return out;
            }
            return ConvexSolution {
                trajectory: assemble(&lay, &x),
                objective,
                gap: gap / range,
                newton_steps: steps,
                stalled,
            };
        }
        tau *= TAU_GROWTH;
    }
}

/// Relative slack a shortcut solution must keep on the speed and
/// separation constraints.
const SHORTCUT_MARGIN: f64 = 1e-6;

/// The trust-region balls alone separate per UAV and slot, with optimum
/// `anchor - Delta c / |c|`. When that point also satisfies the remaining
/// constraints with some margin it solves the full problem.
fn trust_only_optimum(lay: &Layout, cons: &[Con], anchor: &[f64], c: &[f64]) -> Option<Vec<f64>> {
    let delta = lay.sub.trust_radius;
    let mut x = anchor.to_vec();
    for i in (0..x.len()).step_by(2) {
        let n = c[i].hypot(c[i + 1]);
        if n > 0.0 {
            x[i] -= delta * c[i] / n;
            x[i + 1] -= delta * c[i + 1] / n;
        }
    }
    let r2 = lay.sub.step_radius * lay.sub.step_radius;
    for con in cons {
        let ok = match *con {
            Con::Step { m, t } => {
                r2 - (lay.pos(&x, m, t + 1) - lay.pos(&x, m, t)).norm_squared() > SHORTCUT_MARGIN * r2
            }
            Con::Trust { .. } => true,
            Con::Half { t, a, b, normal, offset } => {
                normal.dot(&(lay.pos(&x, a, t) - lay.pos(&x, b, t))) - offset > SHORTCUT_MARGIN * offset.abs().max(1.0)
            }
        };
        if !ok {
            return None;
        }
    }
    Some(x)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn assemble(lay: &Layout, x: &[f64]) -> Trajectory {
    let slots = (0..lay.n_slots)
        .map(|t| (0..lay.n_uavs).map(|m| lay.pos(x, m, t)).collect())
        .collect();
    Trajectory::from_slots(slots)
}

fn slacks(lay: &Layout, cons: &[Con], x: &[f64]) -> Option<Vec<f64>> {
    let r2 = lay.sub.step_radius * lay.sub.step_radius;
    let d2 = lay.sub.trust_radius * lay.sub.trust_radius;
    let mut out = Vec::with_capacity(cons.len());
    for c in cons {
        let s = match *c {
            Con::Step { m, t } => r2 - (lay.pos(x, m, t + 1) - lay.pos(x, m, t)).norm_squared(),
            Con::Trust { m, t } => d2 - (lay.pos(x, m, t) - lay.sub.anchor.at(m, t)).norm_squared(),
            Con::Half { t, a, b, normal, offset } => normal.dot(&(lay.pos(x, a, t) - lay.pos(x, b, t))) - offset,
        };
        if !(s > 0.0) {
            return None;
        }
        out.push(s);
    }
    Some(out)
}

fn barrier_value(c: &[f64], x: &[f64], s: &[f64], tau: f64) -> f64 {
    tau * dot(c, x) - s.iter().map(|v| v.ln()).sum::<f64>()
}

type Blocks = Vec<DMatrix<f64>>;

fn derivatives(lay: &Layout, cons: &[Con], x: &[f64], s: &[f64], c: &[f64], tau: f64) -> (Vec<f64>, Blocks, Blocks) {
    let bs = lay.bs;
    let nb = lay.n_slots - 2;
    let mut grad: Vec<f64> = c.iter().map(|v| tau * v).collect();
    let mut diag = vec![DMatrix::<f64>::zeros(bs, bs); nb];
    let mut off = vec![DMatrix::<f64>::zeros(bs, bs); nb.saturating_sub(1)];

    // adds g g^T / s^2 + k/s I on the 2x2 (m,t) x (m2,t2) block
    let add_outer = |diag: &mut Blocks, off: &mut Blocks, (m1, t1, g1): (usize, usize, Point), (m2, t2, g2): (usize, usize, Point), w: f64| {
        if !(lay.free(t1) && lay.free(t2)) {
            return;
        }
        let (b1, b2) = (t1 - 1, t2 - 1);
        let (r, c) = (2 * m1, 2 * m2);
        let target = if b1 == b2 {
            &mut diag[b1]
        } else if b2 == b1 + 1 {
            &mut off[b1]
        } else {
            return; // lower triangle is implied by symmetry
        };
        for i in 0..2 {
            for j in 0..2 {
                target[(r + i, c + j)] += w * g1[i] * g2[j];
            }
        }
    };
    let add_identity = |diag: &mut Blocks, off: &mut Blocks, (m1, t1): (usize, usize), (m2, t2): (usize, usize), v: f64| {
        if !(lay.free(t1) && lay.free(t2)) {
            return;
        }
        let (b1, b2) = (t1 - 1, t2 - 1);
        let (r, c) = (2 * m1, 2 * m2);
        let target = if b1 == b2 { &mut diag[b1] } else if b2 == b1 + 1 { &mut off[b1] } else { return };
        target[(r, c)] += v;
        target[(r + 1, c + 1)] += v;
    };
    let add_grad = |grad: &mut Vec<f64>, m: usize, t: usize, g: Point, si: f64| {
        if lay.free(t) {
            let i = lay.idx(m, t);
            grad[i] -= g.x / si;
            grad[i + 1] -= g.y / si;
        }
    };

    for (con, &si) in cons.iter().zip(s) {
        let inv2 = 1.0 / (si * si);
        match *con {
            Con::Step { m, t } => {
                let u = lay.pos(x, m, t + 1) - lay.pos(x, m, t);
                let (ga, gb) = (u * 2.0, u * -2.0); // d s / d q(t), d s / d q(t+1)
                add_grad(&mut grad, m, t, ga, si);
                add_grad(&mut grad, m, t + 1, gb, si);
                add_outer(&mut diag, &mut off, (m, t, ga), (m, t, ga), inv2);
                add_outer(&mut diag, &mut off, (m, t + 1, gb), (m, t + 1, gb), inv2);
                add_outer(&mut diag, &mut off, (m, t, ga), (m, t + 1, gb), inv2);
                add_identity(&mut diag, &mut off, (m, t), (m, t), 2.0 / si);
                add_identity(&mut diag, &mut off, (m, t + 1), (m, t + 1), 2.0 / si);
                add_identity(&mut diag, &mut off, (m, t), (m, t + 1), -2.0 / si);
            }
            Con::Trust { m, t } => {
                let g = (lay.pos(x, m, t) - lay.sub.anchor.at(m, t)) * -2.0;
                add_grad(&mut grad, m, t, g, si);
                add_outer(&mut diag, &mut off, (m, t, g), (m, t, g), inv2);
                add_identity(&mut diag, &mut off, (m, t), (m, t), 2.0 / si);
            }
            Con::Half { t, a, b, normal, .. } => {
                let (ga, gb) = (normal, -normal);
                add_grad(&mut grad, a, t, ga, si);
                add_grad(&mut grad, b, t, gb, si);
                add_outer(&mut diag, &mut off, (a, t, ga), (a, t, ga), inv2);
                add_outer(&mut diag, &mut off, (b, t, gb), (b, t, gb), inv2);
                add_outer(&mut diag, &mut off, (a, t, ga), (b, t, gb), inv2);
                add_outer(&mut diag, &mut off, (b, t, gb), (a, t, ga), inv2);
            }
        }
    }
    (grad, diag, off)
}

/// Newton system solve. Near-active constraints make the barrier Hessian a
/// sum of huge rank-one terms whose cancellation can break the
/// factorisation; a growing diagonal shift is added until it succeeds.
fn regularised_solve(diag: &[DMatrix<f64>], upper: &[DMatrix<f64>], b: &[f64]) -> Option<Vec<f64>> {
    if let Some(x) = block_tridiag_solve(diag, upper, b) {
        return Some(x);
    }
    let scale = diag.iter().map(|d| d.diagonal().amax()).fold(0.0, f64::max);
    let mut shift = 1e-14 * scale;
    for _ in 0..14 {
        let shifted: Vec<DMatrix<f64>> = diag
            .iter()
            .map(|d| d + DMatrix::identity(d.nrows(), d.ncols()) * shift)
            .collect();
        if let Some(x) = block_tridiag_solve(&shifted, upper, b) {
            return Some(x);
        }
        shift *= 10.0;
    }
    None
}

/// Solves `H x = b` for symmetric positive definite block-tridiagonal `H`
/// given its diagonal blocks and upper off-diagonal blocks.
pub fn block_tridiag_solve(diag: &[DMatrix<f64>], upper: &[DMatrix<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let nb = diag.len();
    if nb == 0 {
        return Some(Vec::new());
    }
    let bs = diag[0].nrows();
    let mut lower = Vec::with_capacity(nb);
    let mut coupling: Vec<DMatrix<f64>> = Vec::with_capacity(nb.saturating_sub(1));
    for i in 0..nb {
        let mut d = diag[i].clone();
        if i > 0 {
            let y: &DMatrix<f64> = &coupling[i - 1];
            d -= y.transpose() * y;
        }
        let l = nalgebra::Cholesky::new(d)?.l();
        if i + 1 < nb {
            coupling.push(l.solve_lower_triangular(&upper[i])?);
        }
        lower.push(l);
    }
    let mut z: Vec<DVector<f64>> = Vec::with_capacity(nb);
    for i in 0..nb {
        let mut rhs = DVector::from_column_slice(&b[i * bs..(i + 1) * bs]);
        if i > 0 {
            rhs -= coupling[i - 1].transpose() * &z[i - 1];
        }
        z.push(lower[i].solve_lower_triangular(&rhs)?);
    }
    let mut x = vec![DVector::<f64>::zeros(bs); nb];
    for i in (0..nb).rev() {
        let mut rhs = z[i].clone();
        if i + 1 < nb {
            rhs -= &coupling[i] * &x[i + 1];
        }
        x[i] = lower[i].tr_solve_lower_triangular(&rhs)?;
    }
    Some(x.into_iter().flat_map(|v| v.iter().copied().collect::<Vec<_>>()).collect())
}
