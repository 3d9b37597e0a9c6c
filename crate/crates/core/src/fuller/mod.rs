//! The Fuller problem `x' = y, y' = u, |u| <= 1, 1/2 int x^2 -> min`.
//!
//! Every nonzero optimal trajectory reaches the origin in finite time after
//! infinitely many switches. The switching curve is `x + C y|y| = 0`; above
//! it the control is `-1`, below it `+1`. Consecutive switch gaps shrink by
//! the factor `mu`, the root in `(0, 1)` of `mu^4 - 3mu^3 - 4mu^2 - 3mu + 1`.
//!
//! Arcs are propagated in closed form and their costs integrated exactly, so
//! the only approximation is the truncation of the switch sequence once the
//! homogeneous size `(x^2 + y^4)^(1/4)` drops below `eps`. The remaining time
//! and cost from a switching point are geometric series and are added back
//! exactly.

mod finite;

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use finite::{
    solve_finite_time, solve_finite_time_eps, verify_pmp_certificate, CostateSample,
    FiniteTimeSolution, PmpReport,
};

/// Default truncation tolerance for the switch sequence.
pub const DEFAULT_EPS: f64 = 1e-12;

/// Hard cap on listed arcs per trajectory.
const MAX_ARCS: usize = 4096;

/// A state `(x, y)` of the double integrator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct PhasePoint {
    pub x: f64,
    pub y: f64,
}

impl PhasePoint {
    pub const ORIGIN: PhasePoint = PhasePoint { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        PhasePoint { x, y }
    }

    /// `(x^2 + y^4)^(1/4)`, homogeneous of degree one under `(l^2 x, l y)`.
    pub fn homogeneous_size(&self) -> f64 {
        (self.x * self.x + self.y.powi(4)).sqrt().sqrt()
    }

    /// `(l^2 x, l y)`.
    pub fn scaled(&self, lambda: f64) -> Self {
        PhasePoint::new(lambda * lambda * self.x, lambda * self.y)
    }

    /// `(x, -y)`: the start of the time-reversed problem.
    pub fn reflected(&self) -> Self {
        PhasePoint::new(self.x, -self.y)
    }

    pub fn is_origin(&self) -> bool {
        self.x == 0.0 && self.y == 0.0
    }
}

/// Constants of the optimal synthesis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FullerConstants {
    pub mu: f64,
    /// `C` in the switching curve `x = -C y|y|`.
    pub switch_coeff: f64,
    /// Upper bound of `T_F` on the oval `x^2 + y^4 = 1`, with a 10% margin.
    pub tail_time_bound: f64,
    /// Upper bound of `J_F` on the oval `x^2 + y^4 = 1`, with a 10% margin.
    pub tail_cost_bound: f64,
    /// Cost of one arc between switching points starting at `|y| = 1`.
    pub unit_arc_cost: f64,
}

/// A constant-control arc with its closed-form state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BangArc {
    pub t_start: f64,
    pub duration: f64,
    /// Control value in `{-1, 0, 1}`.
    pub u: i8,
    pub start: PhasePoint,
}

impl BangArc {
    pub fn t_end(&self) -> f64 {
        self.t_start + self.duration
    }

    pub fn end(&self) -> PhasePoint {
        propagate_arc(self.start, self.u, self.duration)
    }

    /// State at absolute time `t` (clamped to the arc).
    pub fn state_at(&self, t: f64) -> PhasePoint {
        propagate_arc(self.start, self.u, (t - self.t_start).clamp(0.0, self.duration))
    }

    /// `1/2 int x^2` over the arc.
    pub fn cost(&self) -> f64 {
        arc_cost(self.start, self.u, self.duration)
    }
}

/// A truncated optimal trajectory from `p0` to the origin.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChatteringTrajectory {
    pub start: PhasePoint,
    pub arcs: Vec<BangArc>,
    /// Offset in `t_k = T_reach - tau mu^k`: time from the first switch to arrival.
    pub tau: f64,
    /// Arrival time at the origin, including the exact geometric tail.
    pub t_reach: f64,
    /// End of the last listed arc; the state is snapped to the origin after it.
    pub t_snap: f64,
    pub truncation_eps: f64,
    /// Time of the omitted switches after `t_snap`.
    pub tail_time: f64,
    /// Cost of the omitted switches after `t_snap`.
    pub tail_cost: f64,
}

impl ChatteringTrajectory {
    /// Switch instants: the ends of all listed arcs except the last.
    pub fn switch_times(&self) -> Vec<f64> {
        self.arcs
            .iter()
            .take(self.arcs.len().saturating_sub(1))
            .map(BangArc::t_end)
            .collect()
    }

    /// Durations of the arcs between consecutive switches.
    pub fn switch_gaps(&self) -> Vec<f64> {
        self.arcs.iter().skip(1).map(|a| a.duration).collect()
    }

    /// Sum of listed arc costs plus the tail.
    pub fn cost(&self) -> f64 {
        self.arcs.iter().map(BangArc::cost).sum::<f64>() + self.tail_cost
    }

    /// State and control at time `t`; the origin with `u = 0` after `t_snap`.
    pub fn state_at(&self, t: f64) -> (PhasePoint, i8) {
        match locate(&self.arcs, t) {
            Some(i) => (self.arcs[i].state_at(t), self.arcs[i].u),
            None if t < 0.0 => (self.start, 0),
            None => (PhasePoint::ORIGIN, 0),
        }
    }
}

/// Index of the arc containing `t` (half-open `[t_start, t_end)`, last arc closed).
pub(crate) fn locate(arcs: &[BangArc], t: f64) -> Option<usize> {
    if arcs.is_empty() || t < arcs[0].t_start || t > arcs[arcs.len() - 1].t_end() {
        return None;
    }
    let i = arcs.partition_point(|a| a.t_start <= t);
    Some(i.saturating_sub(1))
}

/// Root of `mu^4 - 3mu^3 - 4mu^2 - 3mu + 1` in `(0, 1)`.
pub fn solve_mu() -> f64 {
    let q = |m: f64| (((m - 3.0) * m - 4.0) * m - 3.0) * m + 1.0;
    let dq = |m: f64| ((4.0 * m - 9.0) * m - 8.0) * m - 3.0;
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if q(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut m = 0.5 * (lo + hi);
    for _ in 0..3 {
        m -= q(m) / dq(m);
    }
    m
}

/// Quartic residual at `m`.
pub fn mu_residual(m: f64) -> f64 {
    (((m - 3.0) * m - 4.0) * m - 3.0) * m + 1.0
}

/// Closed-form `(x + y dt + u dt^2/2, y + u dt)`.
pub fn propagate_arc(start: PhasePoint, u: i8, dt: f64) -> PhasePoint {
    let u = f64::from(u);
    PhasePoint::new(
        start.x + start.y * dt + 0.5 * u * dt * dt,
        start.y + u * dt,
    )
}

/// `1/2 int_0^d x(t)^2 dt` along `x = a + b t + c t^2`, `c = u/2`.
pub fn arc_cost(start: PhasePoint, u: i8, d: f64) -> f64 {
    let (a, b, c) = (start.x, start.y, 0.5 * f64::from(u));
    let d2 = d * d;
    let d3 = d2 * d;
    0.5 * (a * a * d
        + a * b * d2
        + (b * b + 2.0 * a * c) * d3 / 3.0
        + b * c * d2 * d2 / 2.0
        + c * c * d3 * d2 / 5.0)
}

/// Duration of the `u = +-1` arc from `p` to the opposite branch of the
/// switching curve `x + c y|y| = 0`, and `|y|` at the hit point.
///
/// With `u = -1` the energy `x + y^2/2` is conserved and the hit point is
/// `y = -s`, `s = sqrt(E / (c + 1/2))`; the `u = +1` case is the mirror image.
fn arc_to_curve(p: PhasePoint, u: i8, c: f64) -> Result<(f64, f64)> {
    let (e, y_dir) = if u < 0 {
        (p.x + 0.5 * p.y * p.y, p.y)
    } else {
        (-(p.x - 0.5 * p.y * p.y), -p.y)
    };
    let scale = p.x.abs() + p.y * p.y;
    if e < -1e-12 * scale {
        return Err(Error::Convergence(format!(
            "arc from ({}, {}) with u = {u} does not reach the switching curve",
            p.x, p.y
        )));
    }
    let s = (e.max(0.0) / (c + 0.5)).sqrt();
    let t = y_dir + s;
    if t < -1e-9 * (1.0 + s) {
        return Err(Error::Convergence(format!(
            "negative time {t} to reach the switching curve from ({}, {})",
            p.x, p.y
        )));
    }
    Ok((t.max(0.0), s))
}

/// `|y|` at which the `u = +1` arc from the curve point `(c, -1)` meets the
/// upper branch of `x = -c y|y|`, minus `mu`.
pub fn self_similarity_residual(c: f64, mu: f64) -> Result<f64> {
    let (_, s) = arc_to_curve(PhasePoint::new(c, -1.0), 1, c)?;
    Ok(s - mu)
}

/// The switching-curve coefficient: the `C` for which the curve is carried
/// onto itself scaled by `mu`, found by bisection on the arc-mapping condition.
pub fn derive_switch_coeff() -> Result<f64> {
    let mu = solve_mu();
    let (mut lo, mut hi) = (1e-9_f64, 0.5 - 1e-9);
    let (rlo, rhi) = (self_similarity_residual(lo, mu)?, self_similarity_residual(hi, mu)?);
    if rlo.signum() == rhi.signum() {
        return Err(Error::Convergence("switch coefficient is not bracketed".into()));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let r = self_similarity_residual(mid, mu)?;
        if r == 0.0 {
            return Ok(mid);
        }
        if r.signum() == rlo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 4.0 * f64::EPSILON * hi {
            break;
        }
    }
    let c = 0.5 * (lo + hi);
    if self_similarity_residual(c, mu)?.abs() > 1e-10 {
        return Err(Error::Convergence("switch coefficient bisection stalled".into()));
    }
    Ok(c)
}

struct Basic {
    mu: f64,
    c: f64,
    j1: f64,
}

fn basic() -> &'static Basic {
    static BASIC: OnceLock<Basic> = OnceLock::new();
    BASIC.get_or_init(|| {
        let mu = solve_mu();
        let c = derive_switch_coeff().expect("switch coefficient converges");
        let j1 = arc_cost(PhasePoint::new(-c, 1.0), -1, 1.0 + mu);
        Basic { mu, c, j1 }
    })
}

/// The synthesis constants, computed once per process.
pub fn constants() -> &'static FullerConstants {
    static CONSTANTS: OnceLock<FullerConstants> = OnceLock::new();
    CONSTANTS.get_or_init(|| {
        let b = basic();
        let (tmax, jmax) = oval_extrema(1000)
            .map(|(_, tmax, _, jmax)| (tmax, jmax))
            .expect("oval sampling succeeds");
        FullerConstants {
            mu: b.mu,
            switch_coeff: b.c,
            tail_time_bound: 1.1 * tmax,
            tail_cost_bound: 1.1 * jmax,
            unit_arc_cost: b.j1,
        }
    })
}

/// `(min T_F, max T_F, min J_F, max J_F)` over `n` points of `x^2 + y^4 = 1`,
/// parameterized by `x = cos th`, `y = sign(sin th) sqrt|sin th|`.
pub fn oval_extrema(n: usize) -> Result<(f64, f64, f64, f64)> {
    let mut out = (f64::INFINITY, 0.0_f64, f64::INFINITY, 0.0_f64);
    for k in 0..n {
        let th = std::f64::consts::TAU * (k as f64 + 0.5) / n as f64;
        let p = oval_point(th);
        let traj = simulate_with(p, DEFAULT_EPS)?;
        let t = traj.t_reach;
        let j = traj.cost();
        out = (out.0.min(t), out.1.max(t), out.2.min(j), out.3.max(j));
    }
    Ok(out)
}

/// Point of the oval `x^2 + y^4 = 1` at parameter `theta`.
pub fn oval_point(theta: f64) -> PhasePoint {
    let s = theta.sin();
    PhasePoint::new(theta.cos(), s.signum() * s.abs().sqrt())
}

/// `x + C y|y|`.
pub fn switching_function(p: PhasePoint) -> f64 {
    p.x + basic().c * p.y * p.y.abs()
}

/// The optimal feedback: `0` at the origin, `-1` above the switching curve,
/// `+1` below it, and on the curve `-sign(y)` (the arc about to start).
pub fn control_law(p: PhasePoint) -> i8 {
    if p.is_origin() {
        return 0;
    }
    let s = switching_function(p);
    if s > 0.0 {
        -1
    } else if s < 0.0 {
        1
    } else if p.y > 0.0 {
        -1
    } else {
        1
    }
}

/// Optimal trajectory from `p0`, truncated once the switching point has
/// homogeneous size below `eps`.
pub fn simulate(p0: PhasePoint, eps: f64) -> Result<ChatteringTrajectory> {
    if !(eps > 0.0) {
        return Err(Error::InvalidInput(format!("eps must be positive, got {eps}")));
    }
    if !(p0.x.is_finite() && p0.y.is_finite()) {
        return Err(Error::InvalidInput("start point must be finite".into()));
    }
    simulate_with(p0, eps)
}

fn simulate_with(p0: PhasePoint, eps: f64) -> Result<ChatteringTrajectory> {
    let b = basic();
    let mut traj = ChatteringTrajectory {
        start: p0,
        arcs: Vec::new(),
        tau: 0.0,
        t_reach: 0.0,
        t_snap: 0.0,
        truncation_eps: eps,
        tail_time: 0.0,
        tail_cost: 0.0,
    };
    if p0.is_origin() {
        return Ok(traj);
    }
    let mut p = p0;
    let mut u = control_law(p0);
    let mut t = 0.0;
    let mut s;
    loop {
        let (d, hit) = arc_to_curve(p, u, b.c)?;
        let arc = BangArc {
            t_start: t,
            duration: d,
            u,
            start: p,
        };
        traj.arcs.push(arc);
        t += d;
        p = arc.end();
        s = hit;
        u = -u;
        if s < eps || s == 0.0 || traj.arcs.len() >= MAX_ARCS {
            break;
        }
    }
    traj.t_snap = t;
    traj.tail_time = s * (1.0 + b.mu) / (1.0 - b.mu);
    traj.tail_cost = s.powi(5) * b.j1 / (1.0 - b.mu.powi(5));
    traj.t_reach = t + traj.tail_time;
    traj.tau = traj.t_reach - traj.arcs[0].t_end();
    Ok(traj)
}

/// A value with a certified bound on its truncation error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub error_bound: f64,
}

/// `T_F(p0)`: arc durations plus the geometric tail after truncation.
pub fn time_to_origin(p0: PhasePoint, eps: f64) -> Result<Estimate> {
    let traj = simulate(p0, eps)?;
    let k = constants();
    Ok(Estimate {
        value: traj.t_reach,
        error_bound: if traj.arcs.is_empty() {
            0.0
        } else {
            k.tail_time_bound * eps / (1.0 - k.mu)
        },
    })
}

/// `J_F(p0)`: exact per-arc quadrature plus the geometric tail.
pub fn cost_to_origin(p0: PhasePoint, eps: f64) -> Result<Estimate> {
    let traj = simulate(p0, eps)?;
    let k = constants();
    Ok(Estimate {
        value: traj.cost(),
        error_bound: if traj.arcs.is_empty() {
            0.0
        } else {
            k.tail_cost_bound * eps.powi(5) / (1.0 - k.mu.powi(5))
        },
    })
}

/// Serializable summary of a trajectory.
#[derive(Debug, Clone, Serialize)]
pub struct FullerReport {
    pub mu: f64,
    pub switch_times: Vec<f64>,
    #[serde(rename = "T_reach")]
    pub t_reach: f64,
    pub cost: f64,
    pub tail_bounds: TailBounds,
}

#[derive(Debug, Clone, Serialize)]
pub struct TailBounds {
    pub time: f64,
    pub cost: f64,
}

impl FullerReport {
    pub fn new(traj: &ChatteringTrajectory) -> Self {
        let k = constants();
        let eps = traj.truncation_eps;
        FullerReport {
            mu: k.mu,
            switch_times: traj.switch_times(),
            t_reach: traj.t_reach,
            cost: traj.cost(),
            tail_bounds: TailBounds {
                time: k.tail_time_bound * eps / (1.0 - k.mu),
                cost: k.tail_cost_bound * eps.powi(5) / (1.0 - k.mu.powi(5)),
            },
        }
    }
}

/// `(t, x, y, u)` rows at every arc start plus `n` uniform samples on `[t0, t1]`,
/// sorted by time.
pub fn sample_rows(arcs: &[BangArc], t0: f64, t1: f64, n: usize) -> Vec<(f64, f64, f64, i8)> {
    let mut rows: Vec<(f64, f64, f64, i8)> = arcs
        .iter()
        .map(|a| (a.t_start, a.start.x, a.start.y, a.u))
        .collect();
    if let Some(last) = arcs.last() {
        let e = last.end();
        rows.push((last.t_end(), e.x, e.y, last.u));
    }
    for k in 0..n {
        let t = if n == 1 {
            t0
        } else {
            t0 + (t1 - t0) * k as f64 / (n - 1) as f64
        };
        let (p, u) = match locate(arcs, t) {
            Some(i) => (arcs[i].state_at(t), arcs[i].u),
            None => (PhasePoint::ORIGIN, 0),
        };
        rows.push((t, p.x, p.y, u));
    }
    rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    rows
}
