//! Physical scenario, line-of-sight channel model and initial trajectories.
//!
//! UAVs are indexed Tx first (`0..mt`) and then Rx (`mt..mt + mr`). All UAVs
//! fly at the common altitude stored in [`PhysicalParams`]; positions are the
//! horizontal coordinates only.

use std::f64::consts::PI;

use rand::Rng;

use crate::{CMatrix, CVector, Cx, Error, Point, Result};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalParams {
    /// Common flight altitude H (m).
    pub altitude: f64,
    /// Carrier frequency (Hz).
    pub carrier_freq: f64,
    /// ULA element spacing (m).
    pub antenna_spacing: f64,
    /// Carrier wavelength (m), always `SPEED_OF_LIGHT / carrier_freq`.
    pub wavelength: f64,
    /// Reference path loss at 1 m (linear).
    pub ref_pathloss: f64,
    /// Variance of the bi-static RCS.
    pub rcs_variance: f64,
    /// Receiver noise power of each user (W).
    pub noise_user: Vec<f64>,
    /// Noise power per Rx antenna (W).
    pub noise_sensing: f64,
}

impl PhysicalParams {
    /// Builds the parameter set with `d = spacing_wavelengths * lambda`.
    pub fn new(
        altitude: f64,
        carrier_freq: f64,
        spacing_wavelengths: f64,
        ref_pathloss: f64,
        rcs_variance: f64,
        noise_user: Vec<f64>,
        noise_sensing: f64,
    ) -> Self {
        let wavelength = SPEED_OF_LIGHT / carrier_freq;
        Self {
            altitude,
            carrier_freq,
            antenna_spacing: spacing_wavelengths * wavelength,
            wavelength,
            ref_pathloss,
            rcs_variance,
            noise_user,
            noise_sensing,
        }
    }

    /// Phase increment per antenna index and unit of `cos(theta)`.
    pub fn phase_constant(&self) -> f64 {
        2.0 * PI * self.antenna_spacing / self.wavelength
    }

    /// `sqrt(lambda^2 sigma_rcs^2 / (4 pi)^3)`, the amplitude of the echo channel.
    pub fn echo_gain(&self) -> f64 {
        (self.wavelength * self.wavelength * self.rcs_variance / (4.0 * PI).powi(3)).sqrt()
    }

    /// 3D distance from a UAV to a ground point.
    pub fn distance(&self, uav: &Point, ground: &Point) -> f64 {
        ((uav - ground).norm_squared() + self.altitude * self.altitude).sqrt()
    }
}

/// Alphabet of the analog phase shifters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseMode {
    Continuous,
    /// `2^bits` uniformly spaced phases.
    Discrete { bits: u32 },
}

impl PhaseMode {
    /// Discrete alphabet `exp(j 2 pi m / 2^bits)`, or `None` when continuous.
    pub fn alphabet(&self) -> Option<Vec<Cx>> {
        match *self {
            PhaseMode::Continuous => None,
            PhaseMode::Discrete { bits } => {
                let levels = 1usize << bits;
                Some(
                    (0..levels)
                        .map(|m| Cx::from_polar(1.0, 2.0 * PI * m as f64 / levels as f64))
                        .collect(),
                )
            }
        }
    }
}

/// Transmit front-end architecture.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Architecture {
    /// Unit-modulus analog network followed by `nrf` RF chains.
    Hybrid,
    /// One RF chain per antenna; the analog stage is the identity.
    FullyDigital,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub mt: usize,
    pub mr: usize,
    pub nt: usize,
    pub nr: usize,
    pub nrf: usize,
    /// Number of ground users.
    pub k: usize,
    /// Number of sensing streams (all pointed at the single target).
    pub s: usize,
    /// Number of time slots.
    pub slots: usize,
    pub delta_t: f64,
    /// Rectangle `[0, lx] x [0, ly]`.
    pub area: (f64, f64),
    /// `user_positions[k][t]`.
    pub user_positions: Vec<Vec<Point>>,
    /// `target_positions[t]`.
    pub target_positions: Vec<Point>,
    pub q_init: Vec<Point>,
    pub q_final: Vec<Point>,
    pub v_max: f64,
    pub d_min: f64,
    /// Per-Tx-UAV power budget (W).
    pub power_budget: Vec<f64>,
    /// Linear sensing SNR threshold.
    pub gamma_s: f64,
    pub weights: Vec<f64>,
    pub phase_mode: PhaseMode,
    pub architecture: Architecture,
    pub params: PhysicalParams,
}

impl Scenario {
    pub fn n_uavs(&self) -> usize {
        self.mt + self.mr
    }

    /// Number of streams `K + S`.
    pub fn streams(&self) -> usize {
        self.k + self.s
    }

    pub fn is_tx(&self, m: usize) -> bool {
        m < self.mt
    }

    /// Collects every violated invariant instead of stopping at the first.
    pub fn validate(&self) -> std::result::Result<(), Vec<String>> {
        let mut errs = Vec::new();
        let p = &self.params;
        for (name, v) in [
            ("altitude", p.altitude),
            ("carrier_freq", p.carrier_freq),
            ("antenna_spacing", p.antenna_spacing),
            ("wavelength", p.wavelength),
            ("ref_pathloss", p.ref_pathloss),
            ("rcs_variance", p.rcs_variance),
            ("noise_sensing", p.noise_sensing),
            ("delta_t", self.delta_t),
            ("v_max", self.v_max),
        ] {
            if !(v.is_finite() && v > 0.0) {
                errs.push(format!("{name} must be finite and positive (got {v})"));
            }
        }
        if !(self.d_min.is_finite() && self.d_min >= 0.0) {
            errs.push(format!("d_min must be non-negative (got {})", self.d_min));
        }
        if p.carrier_freq > 0.0 {
            let expect = SPEED_OF_LIGHT / p.carrier_freq;
            if ((p.wavelength - expect) / expect).abs() > 1e-12 {
                errs.push("wavelength must equal c / carrier_freq".into());
            }
        }
        if p.noise_user.len() != self.k {
            errs.push(format!("expected {} user noise powers, got {}", self.k, p.noise_user.len()));
        }
        if p.noise_user.iter().any(|&n| !(n.is_finite() && n > 0.0)) {
            errs.push("user noise powers must be positive".into());
        }
        for (name, v) in [
            ("mt", self.mt),
            ("mr", self.mr),
            ("nt", self.nt),
            ("nr", self.nr),
            ("k", self.k),
            ("slots", self.slots),
        ] {
            if v == 0 {
                errs.push(format!("{name} must be at least 1"));
            }
        }
        match self.architecture {
            Architecture::Hybrid => {
                if !(1 <= self.nrf && self.nrf < self.nt) {
                    errs.push(format!(
                        "hybrid architecture needs 1 <= nrf < nt (nrf={}, nt={})",
                        self.nrf, self.nt
                    ));
                }
            }
            Architecture::FullyDigital => {
                if self.nrf != self.nt {
                    errs.push("fully digital architecture needs nrf == nt".into());
                }
            }
        }
        if self.k + self.s > self.mt * self.nrf {
            errs.push(format!(
                "K + S = {} exceeds Mt * Nrf = {}",
                self.k + self.s,
                self.mt * self.nrf
            ));
        }
        if self.user_positions.len() != self.k
            || self.user_positions.iter().any(|u| u.len() != self.slots)
        {
            errs.push("user_positions must hold K tracks of T slots".into());
        }
        if self.target_positions.len() != self.slots {
            errs.push("target_positions must hold T slots".into());
        }
        let m = self.n_uavs();
        if self.q_init.len() != m || self.q_final.len() != m {
            errs.push(format!("q_init/q_final must hold {m} points"));
        }
        if self.power_budget.len() != self.mt {
            errs.push(format!("expected {} power budgets", self.mt));
        }
        if self.power_budget.iter().any(|&b| !(b.is_finite() && b > 0.0)) {
            errs.push("power budgets must be positive".into());
        }
        if !(self.gamma_s.is_finite() && self.gamma_s >= 0.0) {
            errs.push("gamma_s must be finite and non-negative".into());
        }
        if self.weights.len() != self.k {
            errs.push(format!("expected {} weights", self.k));
        }
        if self.weights.iter().any(|&w| !(w.is_finite() && w >= 0.0)) {
            errs.push("weights must be non-negative".into());
        }
        if self.weights.iter().sum::<f64>() <= 0.0 {
            errs.push("weights must sum to a positive value".into());
        }
        if let PhaseMode::Discrete { bits } = self.phase_mode {
            if !(1..=16).contains(&bits) {
                errs.push(format!("phase bits must be in 1..=16 (got {bits})"));
            }
        }
        let (lx, ly) = self.area;
        let inside = |q: &Point| q.x >= 0.0 && q.x <= lx && q.y >= 0.0 && q.y <= ly;
        let all_ground = self
            .user_positions
            .iter()
            .flatten()
            .chain(self.target_positions.iter());
        if all_ground.clone().any(|q| !inside(q)) {
            errs.push("user/target positions must lie within the area".into());
        }
        if self.q_init.iter().chain(self.q_final.iter()).any(|q| !inside(q)) {
            errs.push("UAV endpoints must lie within the area".into());
        }
        if self.q_init.len() == m && self.q_final.len() == m && self.slots >= 1 {
            let reach = (self.slots.saturating_sub(1)) as f64 * self.v_max * self.delta_t;
            for i in 0..m {
                let dist = (self.q_final[i] - self.q_init[i]).norm();
                if dist > reach * (1.0 + 1e-12) {
                    errs.push(format!(
                        "UAV {i} cannot reach its final point ({dist:.3} m > {reach:.3} m)"
                    ));
                }
            }
            let d2 = self.d_min * self.d_min;
            for ends in [&self.q_init, &self.q_final] {
                for a in 0..m {
                    for b in a + 1..m {
                        if (ends[a] - ends[b]).norm_squared() < d2 {
                            errs.push(format!("UAV endpoints {a} and {b} are closer than d_min"));
                        }
                    }
                }
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(errs)
        }
    }

    pub fn users_at(&self, t: usize) -> Vec<Point> {
        self.user_positions.iter().map(|u| u[t]).collect()
    }

    /// Stacked user channel matrix `H(t)` of shape `(Mt Nt) x K`; column `k`
    /// is user `k`'s channel stacked over the Tx UAVs.
    pub fn user_channels(&self, positions: &[Point], t: usize) -> CMatrix {
        stacked_user_channels(positions, &self.users_at(t), self.mt, self.nt, &self.params)
    }

    pub fn sensing(&self, positions: &[Point], t: usize) -> SensingChannel {
        sensing_matrix(positions, &self.target_positions[t], self.mt, self.mr, self.nt, self.nr, &self.params)
    }
}

/// Amplitude factors applied to the channels before they enter the solver.
///
/// User `k`'s channel is multiplied by `user[k]` and the echo channel by
/// `sensing`. [`ChannelScale::unit`] leaves the physical model untouched.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelScale {
    pub user: Vec<f64>,
    pub sensing: f64,
}

impl ChannelScale {
    pub fn unit(k: usize) -> Self {
        Self { user: vec![1.0; k], sensing: 1.0 }
    }

    /// Scaling that turns every noise power into 1 and powers into multiples
    /// of `p_ref`: `h_k -> h_k sqrt(p_ref) / sigma_k`, `A -> A sqrt(p_ref) / sigma_n`.
    pub fn noise_normalised(params: &PhysicalParams, p_ref: f64) -> Self {
        Self {
            user: params.noise_user.iter().map(|n| (p_ref / n).sqrt()).collect(),
            sensing: (p_ref / params.noise_sensing).sqrt(),
        }
    }

    /// Scaling that gives the channels unit norm in a reference geometry
    /// where every UAV hovers directly above the ground point:
    /// `||h_ref|| = sqrt(beta0 Mt Nt) / H` and
    /// `||A_ref||_F = gain sqrt(Mt Nt Mr Nr) / H^2`.
    pub fn reference(scenario: &Scenario) -> Self {
        let p = &scenario.params;
        let h = p.altitude;
        let tx = (scenario.mt * scenario.nt) as f64;
        let rx = (scenario.mr * scenario.nr) as f64;
        let user = h / (p.ref_pathloss * tx).sqrt();
        let sensing = h * h / (p.echo_gain() * (tx * rx).sqrt());
        Self { user: vec![user; scenario.k], sensing }
    }

    /// User noise powers once channels are scaled and transmit powers are
    /// measured in units of `p_ref`.
    pub fn user_noise(&self, params: &PhysicalParams, p_ref: f64) -> Vec<f64> {
        params.noise_user.iter().zip(&self.user).map(|(n, s)| n * s * s / p_ref).collect()
    }

    /// Sensing noise power in the same units as [`ChannelScale::user_noise`].
    pub fn sensing_noise(&self, params: &PhysicalParams, p_ref: f64) -> f64 {
        params.noise_sensing * self.sensing * self.sensing / p_ref
    }
}

impl Scenario {
    pub fn scaled_user_channels(&self, positions: &[Point], t: usize, scale: &ChannelScale) -> CMatrix {
        let mut h = self.user_channels(positions, t);
        for (k, &s) in scale.user.iter().enumerate() {
            h.column_mut(k).scale_mut(s);
        }
        h
    }

    pub fn scaled_sensing(&self, positions: &[Point], t: usize, scale: &ChannelScale) -> CMatrix {
        self.sensing(positions, t).matrix.scale(scale.sensing)
    }
}

/// ULA steering vector with element `n` equal to `exp(j (2 pi d / lambda) n cos(theta))`,
/// `cos(theta) = H / dist`.
pub fn steering_vector(uav: &Point, ground: &Point, n_antennas: usize, params: &PhysicalParams) -> CVector {
    let dist = params.distance(uav, ground);
    let step = params.phase_constant() * params.altitude / dist;
    CVector::from_iterator(n_antennas, (0..n_antennas).map(|n| Cx::from_polar(1.0, step * n as f64)))
}

/// Line-of-sight channel `sqrt(beta0) / dist * a`.
pub fn user_channel(uav: &Point, user: &Point, nt: usize, params: &PhysicalParams) -> CVector {
    let dist = params.distance(uav, user);
    steering_vector(uav, user, nt, params).scale(params.ref_pathloss.sqrt() / dist)
}

/// `[h_1, .., h_K]` with each column stacked over Tx UAVs `0..mt` of `positions`.
pub fn stacked_user_channels(
    positions: &[Point],
    users: &[Point],
    mt: usize,
    nt: usize,
    params: &PhysicalParams,
) -> CMatrix {
    let mut h = CMatrix::zeros(mt * nt, users.len());
    for (k, g) in users.iter().enumerate() {
        for m in 0..mt {
            let hk = user_channel(&positions[m], g, nt, params);
            h.view_mut((m * nt, k), (nt, 1)).copy_from(&hk);
        }
    }
    h
}

/// Rank-one multi-static sensing channel `A = gain * a_r a_t^H`.
#[derive(Debug, Clone)]
pub struct SensingChannel {
    /// Rx steering vectors over distance, stacked over Rx UAVs.
    pub a_r: CVector,
    /// Tx steering vectors over distance, stacked over Tx UAVs.
    pub a_t: CVector,
    /// `sqrt(lambda^2 sigma_rcs^2 / (4 pi)^3)`.
    pub gain: f64,
    pub matrix: CMatrix,
}

pub fn sensing_matrix(
    positions: &[Point],
    target: &Point,
    mt: usize,
    mr: usize,
    nt: usize,
    nr: usize,
    params: &PhysicalParams,
) -> SensingChannel {
    let stack = |range: std::ops::Range<usize>, n: usize| {
        let mut v = CVector::zeros(range.len() * n);
        for (i, m) in range.enumerate() {
            let d = params.distance(&positions[m], target);
            let a = steering_vector(&positions[m], target, n, params).unscale(d);
            v.rows_mut(i * n, n).copy_from(&a);
        }
        v
    };
    let a_t = stack(0..mt, nt);
    let a_r = stack(mt..mt + mr, nr);
    let gain = params.echo_gain();
    let matrix = (&a_r * a_t.adjoint()).scale(gain);
    SensingChannel { a_r, a_t, gain, matrix }
}

/// UAV positions over the mission, stored slot-major: `slot(t)[m]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    slots: Vec<Vec<Point>>,
}

impl Trajectory {
    pub fn from_slots(slots: Vec<Vec<Point>>) -> Self {
        Self { slots }
    }

    pub fn num_slots(&self) -> usize {
        self.slots.len()
    }

    pub fn num_uavs(&self) -> usize {
        self.slots.first().map_or(0, |s| s.len())
    }

    pub fn slot(&self, t: usize) -> &[Point] {
        &self.slots[t]
    }

    pub fn slot_mut(&mut self, t: usize) -> &mut [Point] {
        &mut self.slots[t]
    }

    pub fn at(&self, m: usize, t: usize) -> Point {
        self.slots[t][m]
    }

    pub fn set(&mut self, m: usize, t: usize, q: Point) {
        self.slots[t][m] = q;
    }

    /// Stacked `[q_1; ..; q_M]` for one slot.
    pub fn stacked(&self, t: usize) -> nalgebra::DVector<f64> {
        nalgebra::DVector::from_iterator(
            2 * self.num_uavs(),
            self.slots[t].iter().flat_map(|q| [q.x, q.y]),
        )
    }

    pub fn slots(&self) -> &[Vec<Point>] {
        &self.slots
    }
}

/// Straight-line trajectory between the endpoints, nudged sideways where two
/// UAVs would come closer than `d_min`.
pub fn init_trajectory(scenario: &Scenario) -> Result<Trajectory> {
    let m_total = scenario.n_uavs();
    let t_total = scenario.slots;
    if t_total == 0 {
        return Err(Error::InfeasibleInit("no time slots".into()));
    }
    let mut slots = vec![vec![Point::zeros(); m_total]; t_total];
    for m in 0..m_total {
        let (a, b) = (scenario.q_init[m], scenario.q_final[m]);
        for (t, slot) in slots.iter_mut().enumerate() {
            slot[m] = if t == 0 {
                a
            } else if t == t_total - 1 {
                b
            } else {
                let frac = t as f64 / (t_total - 1) as f64;
                a + (b - a) * frac
            };
        }
    }
    let mut traj = Trajectory::from_slots(slots);
    let clashes = collision_pairs(&traj, scenario.d_min);
    if clashes.is_empty() {
        return Ok(traj);
    }
    for &(t, a, b) in &clashes {
        if t == 0 || t == t_total - 1 {
            return Err(Error::InfeasibleInit(format!(
                "UAVs {a} and {b} clash at a fixed endpoint slot {t}"
            )));
        }
    }
    let mut nudged = vec![vec![false; m_total]; t_total];
    for &(t, a, b) in &clashes {
        for m in [a, b] {
            if nudged[t][m] {
                continue;
            }
            nudged[t][m] = true;
            let dir = scenario.q_final[m] - scenario.q_init[m];
            let normal = if dir.norm() > 0.0 {
                Point::new(-dir.y, dir.x) / dir.norm()
            } else {
                Point::new(0.0, 1.0)
            };
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            let q = traj.at(m, t) + normal * (sign * scenario.d_min);
            traj.set(m, t, q);
        }
    }
    if let Some(&(t, a, b)) = collision_pairs(&traj, scenario.d_min).first() {
        return Err(Error::InfeasibleInit(format!(
            "UAVs {a} and {b} still closer than d_min at slot {t} after nudging"
        )));
    }
    let step = scenario.v_max * scenario.delta_t;
    for m in 0..m_total {
        for t in 0..t_total - 1 {
            if (traj.at(m, t + 1) - traj.at(m, t)).norm_squared() > step * step * (1.0 + 1e-12) {
                return Err(Error::InfeasibleInit(format!(
                    "nudge of UAV {m} at slot {t} breaks the speed limit"
                )));
            }
        }
    }
    Ok(traj)
}

/// `(slot, a, b)` for every pair closer than `d_min`.
fn collision_pairs(traj: &Trajectory, d_min: f64) -> Vec<(usize, usize, usize)> {
    let d2 = d_min * d_min;
    let mut out = Vec::new();
    for t in 0..traj.num_slots() {
        let s = traj.slot(t);
        for a in 0..s.len() {
            for b in a + 1..s.len() {
                if (s[a] - s[b]).norm_squared() < d2 {
                    out.push((t, a, b));
                }
            }
        }
    }
    out
}

/// Constant-velocity ground track sampled at every slot. The start point is
/// uniform in `[margin, L - margin]^2`, the speed uniform in `[0, max_speed]`;
/// the heading is flipped per axis if the track would leave that box.
pub fn sample_linear_motion<R: Rng + ?Sized>(
    rng: &mut R,
    area: (f64, f64),
    margin: f64,
    max_speed: f64,
    slots: usize,
    delta_t: f64,
) -> Vec<Point> {
    let (lo_x, hi_x) = (margin, area.0 - margin);
    let (lo_y, hi_y) = (margin, area.1 - margin);
    let start = Point::new(rng.random_range(lo_x..=hi_x), rng.random_range(lo_y..=hi_y));
    let speed = max_speed * rng.random::<f64>();
    let heading = 2.0 * std::f64::consts::PI * rng.random::<f64>();
    let mut vel = Point::new(heading.cos(), heading.sin()) * speed;
    let span = (slots.saturating_sub(1)) as f64 * delta_t;
    let end = start + vel * span;
    if end.x < lo_x || end.x > hi_x {
        vel.x = -vel.x;
    }
    if end.y < lo_y || end.y > hi_y {
        vel.y = -vel.y;
    }
    (0..slots)
        .map(|t| {
            let p = start + vel * (t as f64 * delta_t);
            Point::new(p.x.clamp(lo_x, hi_x), p.y.clamp(lo_y, hi_y))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(h: f64) -> PhysicalParams {
        PhysicalParams::new(h, 1.9e9, 0.5, 1e-5, 1.0, vec![1e-14], 4e-13)
    }

    #[test]
    fn overhead_steering_alternates() {
        let p = params(50.0);
        let a = steering_vector(&Point::new(10.0, 20.0), &Point::new(10.0, 20.0), 4, &p);
        let expect = [1.0, -1.0, 1.0, -1.0];
        for (z, e) in a.iter().zip(expect) {
            assert!((z.re - e).abs() < 1e-12 && z.im.abs() < 1e-12);
        }
    }

    #[test]
    fn steering_hand_evaluated() {
        let p = params(40.0);
        let a = steering_vector(&Point::new(30.0, 0.0), &Point::new(0.0, 0.0), 2, &p);
        assert_eq!(a[0], Cx::new(1.0, 0.0));
        let e = Cx::from_polar(1.0, 0.8 * PI);
        assert!((a[1] - e).norm() < 1e-12);
    }

    #[test]
    fn channel_magnitude_and_single_antenna() {
        let p = params(50.0);
        let h = user_channel(&Point::new(0.0, 0.0), &Point::new(0.0, 0.0), 3, &p);
        for z in h.iter() {
            assert!((z.norm() - 6.3246e-5).abs() < 1e-9);
        }
        let h1 = user_channel(&Point::new(30.0, 40.0), &Point::new(0.0, 0.0), 1, &p);
        let expect = 1e-5f64.sqrt() / (2500.0f64 + 2500.0).sqrt();
        assert!((h1[0].re - expect).abs() < 1e-18 && h1[0].im == 0.0);
    }

    #[test]
    fn sensing_single_antenna_scalar() {
        let p = params(50.0);
        let pos = [Point::new(0.0, 0.0), Point::new(120.0, 0.0)];
        let target = Point::new(0.0, 0.0);
        let s = sensing_matrix(&pos, &target, 1, 1, 1, 1, &p);
        let dt = 50.0;
        let dr = (120.0f64 * 120.0 + 2500.0).sqrt();
        let expect = p.echo_gain() / (dt * dr);
        assert!((s.matrix[(0, 0)].re - expect).abs() < 1e-15 * expect.max(1.0));
        assert_eq!(s.matrix.shape(), (1, 1));
    }

    #[test]
    fn linear_motion_stays_inside() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let track = sample_linear_motion(&mut rng, (100.0, 80.0), 5.0, 3.0, 30, 1.0);
            assert_eq!(track.len(), 30);
            assert!(track.iter().all(|q| q.x >= 5.0 && q.x <= 95.0 && q.y >= 5.0 && q.y <= 75.0));
        }
    }
}
