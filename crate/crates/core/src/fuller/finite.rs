//! Fixed-horizon Fuller problem between two states.
//!
//! When `t1 >= T_F(p0) + T_F(x1, -y1)` the optimal trajectory chatters into
//! the origin, rests there, and chatters out along the time reversal
//! `(x(t1 - t), -y(t1 - t), u(t1 - t))` of the optimal trajectory from
//! `(x1, -y1)`. The costate is `p = q = 0` on the rest segment and obeys
//! `p' = x`, `q' = -p` elsewhere; the maximum condition is `u = sign(q)`.

use serde::Serialize;

use super::{locate, simulate, BangArc, ChatteringTrajectory, PhasePoint, DEFAULT_EPS};
use crate::error::{Error, Result};

/// Chatter in, rest, chatter out.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FiniteTimeSolution {
    pub p0: PhasePoint,
    pub p1: PhasePoint,
    pub t1: f64,
    /// Contiguous arcs on `[0, t1]`; the rest segment is the single `u = 0` arc.
    pub arcs: Vec<BangArc>,
    /// `1/2 int x^2` including the exact chattering tails.
    pub cost: f64,
    /// Optimal trajectory from `p0`.
    pub forward: ChatteringTrajectory,
    /// Optimal trajectory from `(x1, -y1)`, whose reversal ends the solution.
    pub backward: ChatteringTrajectory,
    /// Costate samples, filled in by [`verify_pmp_certificate`].
    pub costate: Option<Vec<CostateSample>>,
}

impl FiniteTimeSolution {
    pub fn state_at(&self, t: f64) -> (PhasePoint, i8) {
        match locate(&self.arcs, t) {
            Some(i) => (self.arcs[i].state_at(t), self.arcs[i].u),
            None if t <= 0.0 => (self.p0, 0),
            None => (self.p1, 0),
        }
    }

    /// Switch instants (sign changes of `u`, including entry to and exit from rest).
    pub fn switch_times(&self) -> Vec<f64> {
        self.arcs
            .windows(2)
            .filter(|w| w[0].u != w[1].u)
            .map(|w| w[1].t_start)
            .collect()
    }
}

/// Solves the fixed-horizon problem under `t1 >= T_F(p0) + T_F(x1, -y1)`.
pub fn solve_finite_time(p0: PhasePoint, p1: PhasePoint, t1: f64) -> Result<FiniteTimeSolution> {
    solve_finite_time_eps(p0, p1, t1, DEFAULT_EPS)
}

pub fn solve_finite_time_eps(
    p0: PhasePoint,
    p1: PhasePoint,
    t1: f64,
    eps: f64,
) -> Result<FiniteTimeSolution> {
    if !(t1.is_finite() && t1 >= 0.0) {
        return Err(Error::InvalidInput(format!("t1 must be a finite non-negative time, got {t1}")));
    }
    let forward = simulate(p0, eps)?;
    let backward = simulate(p1.reflected(), eps)?;
    let required = forward.t_reach + backward.t_reach;
    if t1 < required * (1.0 - 1e-12) {
        return Err(Error::HypothesisViolated { t1, required });
    }

    let mut arcs = forward.arcs.clone();
    let rest_start = forward.t_snap;
    let rest_end = (t1 - backward.t_snap).max(rest_start);
    if rest_end > rest_start {
        arcs.push(BangArc {
            t_start: rest_start,
            duration: rest_end - rest_start,
            u: 0,
            start: PhasePoint::ORIGIN,
        });
    }
    // arc on [s, s + d] of the backward trajectory maps to [t1 - s - d, t1 - s]
    for a in backward.arcs.iter().rev() {
        let e = a.end();
        arcs.push(BangArc {
            t_start: t1 - a.t_start - a.duration,
            duration: a.duration,
            u: a.u,
            start: PhasePoint::new(e.x, -e.y),
        });
    }
    let cost = arcs.iter().map(BangArc::cost).sum::<f64>() + forward.tail_cost + backward.tail_cost;
    Ok(FiniteTimeSolution {
        p0,
        p1,
        t1,
        arcs,
        cost,
        forward,
        backward,
        costate: None,
    })
}

/// Costate `(p, q)` at time `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CostateSample {
    pub t: f64,
    pub p: f64,
    pub q: f64,
    pub u: i8,
}

/// Outcome of the maximum-condition check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PmpReport {
    pub samples_checked: usize,
    /// Samples where `|q|` exceeded the cutoff and the sign was compared.
    pub samples_signed: usize,
    pub max_abs_q: f64,
    /// Largest jump between consecutive arcs.
    pub dynamics_residual: f64,
    pub boundary_residual: f64,
    /// Largest `|q|` on the rest segment.
    pub rest_q: f64,
}

/// Costate values at the start of each arc, integrated outward from the
/// start of the rest segment where `p = q = 0`.
fn costate_at_arc_starts(arcs: &[BangArc], anchor: usize) -> Vec<(f64, f64)> {
    let mut pq = vec![(0.0, 0.0); arcs.len() + 1];
    // backward over arcs before the anchor: p_s = p_e - int x, q_s = q_e + int p
    for k in (0..anchor).rev() {
        let (pe, qe) = pq[k + 1];
        let a = &arcs[k];
        let (x0, y0, u, d) = (a.start.x, a.start.y, f64::from(a.u), a.duration);
        let int_x = x0 * d + y0 * d * d / 2.0 + u * d.powi(3) / 6.0;
        let ps = pe - int_x;
        let int_p = ps * d + x0 * d * d / 2.0 + y0 * d.powi(3) / 6.0 + u * d.powi(4) / 24.0;
        pq[k] = (ps, qe + int_p);
    }
    // forward from the anchor
    pq[anchor] = (0.0, 0.0);
    for k in anchor..arcs.len() {
        let (ps, qs) = pq[k];
        let (p, q) = costate_along(&arcs[k], ps, qs, arcs[k].duration);
        pq[k + 1] = (p, q);
    }
    pq
}

/// `(p, q)` after time `tau` on `arc` from `(ps, qs)` at its start.
fn costate_along(arc: &BangArc, ps: f64, qs: f64, tau: f64) -> (f64, f64) {
    let (x0, y0, u) = (arc.start.x, arc.start.y, f64::from(arc.u));
    let p = ps + x0 * tau + y0 * tau * tau / 2.0 + u * tau.powi(3) / 6.0;
    let q = qs - ps * tau - x0 * tau * tau / 2.0 - y0 * tau.powi(3) / 6.0 - u * tau.powi(4) / 24.0;
    (p, q)
}

/// Re-derives the costate from the arcs alone and checks the maximum
/// condition `u = sign(q)` wherever `|q| > 1e-12 max|q|`, plus `q = 0` on the
/// rest segment, continuity of the state and the boundary values.
///
/// On success the solution's `costate` is filled with `samples` points.
pub fn verify_pmp_certificate(sol: &mut FiniteTimeSolution, samples: usize) -> Result<PmpReport> {
    let arcs = &sol.arcs;
    let mut report = PmpReport {
        samples_checked: 0,
        samples_signed: 0,
        max_abs_q: 0.0,
        dynamics_residual: 0.0,
        boundary_residual: 0.0,
        rest_q: 0.0,
    };
    if arcs.is_empty() {
        let b = (sol.p0.x - sol.p1.x).abs().max((sol.p0.y - sol.p1.y).abs());
        if b > 1e-9 {
            return Err(Error::CertificateFailed {
                time: 0.0,
                reason: format!("empty solution with distinct endpoints (gap {b:e})"),
            });
        }
        sol.costate = Some(Vec::new());
        return Ok(report);
    }

    for w in arcs.windows(2) {
        let e = w[0].end();
        let r = (e.x - w[1].start.x).abs().max((e.y - w[1].start.y).abs());
        let gap = (w[0].t_end() - w[1].t_start).abs();
        report.dynamics_residual = report.dynamics_residual.max(r);
        if r > 1e-9 || gap > 1e-9 * (1.0 + sol.t1) {
            return Err(Error::CertificateFailed {
                time: w[1].t_start,
                reason: format!("state jump {r:e} or time gap {gap:e} between arcs"),
            });
        }
    }
    let first = arcs[0].start;
    let last = arcs[arcs.len() - 1].end();
    report.boundary_residual = (first.x - sol.p0.x)
        .abs()
        .max((first.y - sol.p0.y).abs())
        .max((last.x - sol.p1.x).abs())
        .max((last.y - sol.p1.y).abs());
    if report.boundary_residual > 1e-9 {
        return Err(Error::CertificateFailed {
            time: 0.0,
            reason: format!("boundary mismatch {:e}", report.boundary_residual),
        });
    }

    let anchor = match arcs.iter().position(|a| a.u == 0) {
        Some(i) => i,
        None => {
            return Err(Error::CertificateFailed {
                time: 0.0,
                reason: "no rest segment to anchor the costate".into(),
            })
        }
    };
    let pq = costate_at_arc_starts(arcs, anchor);
    let q_at = |t: f64| -> (f64, f64, i8) {
        let k = locate(arcs, t).unwrap_or(arcs.len() - 1);
        let a = &arcs[k];
        let (p, q) = costate_along(a, pq[k].0, pq[k].1, (t - a.t_start).clamp(0.0, a.duration));
        (p, q, a.u)
    };

    let t0 = arcs[0].t_start;
    let t_end = arcs[arcs.len() - 1].t_end();
    let mut times: Vec<f64> = (0..samples)
        .map(|i| t0 + (t_end - t0) * (i as f64 + 0.5) / samples as f64)
        .collect();
    times.extend(arcs.iter().map(|a| a.t_start + 0.5 * a.duration));
    let values: Vec<CostateSample> = times
        .iter()
        .map(|&t| {
            let (p, q, u) = q_at(t);
            CostateSample { t, p, q, u }
        })
        .collect();
    report.max_abs_q = values.iter().fold(0.0, |m, s| m.max(s.q.abs()));
    let cutoff = 1e-12 * report.max_abs_q;
    for s in &values {
        report.samples_checked += 1;
        if s.u == 0 {
            report.rest_q = report.rest_q.max(s.q.abs());
            if s.q.abs() > cutoff {
                return Err(Error::CertificateFailed {
                    time: s.t,
                    reason: format!("q = {:e} on the rest segment", s.q),
                });
            }
        } else if s.q.abs() > cutoff {
            report.samples_signed += 1;
            if s.q.signum() != f64::from(s.u) {
                return Err(Error::CertificateFailed {
                    time: s.t,
                    reason: format!("u = {} but q = {:e}", s.u, s.q),
                });
            }
        }
    }
    let mut grid: Vec<CostateSample> = values.into_iter().take(samples).collect();
    grid.sort_by(|a, b| a.t.total_cmp(&b.t));
    sol.costate = Some(grid);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fuller::{cost_to_origin, time_to_origin};

    #[test]
    fn zero_data_gives_zero_solution() {
        let mut s = solve_finite_time(PhasePoint::ORIGIN, PhasePoint::ORIGIN, 1.0).unwrap();
        assert_eq!(s.cost, 0.0);
        assert_eq!(s.arcs.len(), 1);
        assert_eq!(s.arcs[0].u, 0);
        let r = verify_pmp_certificate(&mut s, 100).unwrap();
        assert_eq!(r.max_abs_q, 0.0);
        assert_eq!(r.samples_signed, 0);
    }

    #[test]
    fn one_sided_chattering_costs_j_f() {
        let p0 = PhasePoint::new(1.0, 0.0);
        let tf = time_to_origin(p0, DEFAULT_EPS).unwrap().value;
        let jf = cost_to_origin(p0, DEFAULT_EPS).unwrap().value;
        let s = solve_finite_time(p0, PhasePoint::ORIGIN, 2.0 * tf).unwrap();
        assert!((s.cost - jf).abs() < 1e-14);
        let (mid, u) = s.state_at(1.5 * tf);
        assert_eq!((mid, u), (PhasePoint::ORIGIN, 0));
    }

    #[test]
    fn boundary_values_match() {
        let p0 = PhasePoint::new(-0.4, 0.9);
        let p1 = PhasePoint::new(0.7, 0.2);
        let need = time_to_origin(p0, DEFAULT_EPS).unwrap().value
            + time_to_origin(p1.reflected(), DEFAULT_EPS).unwrap().value;
        let s = solve_finite_time(p0, p1, need + 0.5).unwrap();
        let first = s.arcs[0].start;
        let last = s.arcs.last().unwrap().end();
        assert!((first.x - p0.x).abs() + (first.y - p0.y).abs() < 1e-12);
        assert!((last.x - p1.x).abs() + (last.y - p1.y).abs() < 1e-9);
        assert!((s.arcs.last().unwrap().t_end() - s.t1).abs() < 1e-12);
    }

    #[test]
    fn short_horizon_violates_hypothesis() {
        let r = solve_finite_time(PhasePoint::new(1.0, 0.0), PhasePoint::ORIGIN, 0.01);
        assert!(matches!(r, Err(Error::HypothesisViolated { .. })));
    }

    #[test]
    fn certificate_accepts_solution_and_rejects_flipped_control() {
        let p0 = PhasePoint::new(1.0, 0.0);
        let p1 = PhasePoint::new(0.3, -0.5);
        let need = time_to_origin(p0, DEFAULT_EPS).unwrap().value
            + time_to_origin(p1.reflected(), DEFAULT_EPS).unwrap().value;
        let mut s = solve_finite_time(p0, p1, need + 1.0).unwrap();
        let r = verify_pmp_certificate(&mut s, 10_000).unwrap();
        assert!(r.samples_signed > 5_000, "{r:?}");
        assert_eq!(s.costate.as_ref().unwrap().len(), 10_000);

        let mut bad = s.clone();
        bad.arcs[1].u = -bad.arcs[1].u;
        assert!(matches!(
            verify_pmp_certificate(&mut bad, 1000),
            Err(Error::CertificateFailed { .. })
        ));
    }
}
