//! Chattering shortest paths on `R^4 = {(x, y, z, w)}` for the system
//! `q' = v f1(q) + u f2(q)`, i.e. `x' = v y`, `y' = u`, `z' = v x^2/2`, `w' = v`.
//!
//! When `z1 - z0 = J_F(x0, y0) + J_F(x1, -y1)` and
//! `w1 - w0 >= T_F(x0, y0) + T_F(x1, -y1)`, the shortest path under the unit
//! ball `conv(+-f1 +- f2)` is the fixed-horizon Fuller trajectory with
//! `t1 = w1 - w0` and `v = 1`. The same curve is the shortest path for the
//! Finsler ball `conv(+-f1 +- f2, +-f3, +-f6)`.

use nalgebra::{Matrix4, Vector4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fuller::{
    arc_cost, cost_to_origin, propagate_arc, solve_finite_time, time_to_origin, FiniteTimeSolution,
    PhasePoint, DEFAULT_EPS,
};
use crate::norm::{
    curve_length, explicit_r4_finsler_norm, FnNorm, NormValue, PiecewiseCurve, VNorm,
};
use crate::systems::r4_fields;

/// A point `(x, y, z, w)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct StateR4 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub w: f64,
}

impl StateR4 {
    pub fn new(x: f64, y: f64, z: f64, w: f64) -> Self {
        StateR4 { x, y, z, w }
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.x, self.y, self.z, self.w]
    }

    pub fn from_slice(v: &[f64]) -> Self {
        StateR4::new(v[0], v[1], v[2], v[3])
    }

    pub fn phase(&self) -> PhasePoint {
        PhasePoint::new(self.x, self.y)
    }

    /// `(l^2 x, l y, l^5 z, l w)`.
    pub fn scaled(&self, l: f64) -> Self {
        StateR4::new(l * l * self.x, l * self.y, l.powi(5) * self.z, l * self.w)
    }

    pub fn max_abs_diff(&self, other: &StateR4) -> f64 {
        self.to_array()
            .iter()
            .zip(other.to_array())
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPair {
    pub q0: StateR4,
    pub q1: StateR4,
}

impl BoundaryPair {
    pub fn scaled(&self, l: f64) -> Self {
        BoundaryPair {
            q0: self.q0.scaled(l),
            q1: self.q1.scaled(l),
        }
    }
}

/// Residuals of the two admissibility conditions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AdmissibilityReport {
    pub admissible: bool,
    /// `z1 - z0 - (J_F(x0, y0) + J_F(x1, -y1))`.
    pub z_residual: f64,
    /// `w1 - w0 - (T_F(x0, y0) + T_F(x1, -y1))`, must be non-negative.
    pub w_slack: f64,
    pub j_sum: f64,
    pub t_sum: f64,
    /// Tolerance applied to both conditions (truncation bounds plus rounding).
    pub tolerance: f64,
}

/// Evaluates both conditions with certified tail bounds.
pub fn check_boundary_admissible(pair: &BoundaryPair) -> Result<AdmissibilityReport> {
    let a = pair.q0.phase();
    let b = pair.q1.phase().reflected();
    let (ta, tb) = (time_to_origin(a, DEFAULT_EPS)?, time_to_origin(b, DEFAULT_EPS)?);
    let (ja, jb) = (cost_to_origin(a, DEFAULT_EPS)?, cost_to_origin(b, DEFAULT_EPS)?);
    let j_sum = ja.value + jb.value;
    let t_sum = ta.value + tb.value;
    let z_residual = pair.q1.z - pair.q0.z - j_sum;
    let w_slack = pair.q1.w - pair.q0.w - t_sum;
    let scale = 1.0 + j_sum.abs() + t_sum.abs() + pair.q1.z.abs() + pair.q0.z.abs();
    let tolerance = 1e-12 * scale + ja.error_bound + jb.error_bound + ta.error_bound + tb.error_bound;
    Ok(AdmissibilityReport {
        admissible: z_residual.abs() <= tolerance && w_slack >= -tolerance,
        z_residual,
        w_slack,
        j_sum,
        t_sum,
        tolerance,
    })
}

/// `q0 = (x0, y0, 0, 0)`, `q1 = (x1, y1, J-sum, T-sum + slack)`.
pub fn make_admissible_endpoint(x0: f64, y0: f64, x1: f64, y1: f64, slack: f64) -> Result<BoundaryPair> {
    if !(slack >= 0.0) {
        return Err(Error::InvalidInput(format!("slack must be non-negative, got {slack}")));
    }
    let a = PhasePoint::new(x0, y0);
    let b = PhasePoint::new(x1, -y1);
    let j = cost_to_origin(a, DEFAULT_EPS)?.value + cost_to_origin(b, DEFAULT_EPS)?.value;
    let t = time_to_origin(a, DEFAULT_EPS)?.value + time_to_origin(b, DEFAULT_EPS)?.value;
    Ok(BoundaryPair {
        q0: StateR4::new(x0, y0, 0.0, 0.0),
        q1: StateR4::new(x1, y1, j, t + slack),
    })
}

/// One constant-control arc of a geodesic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ArcR4 {
    pub t_start: f64,
    pub duration: f64,
    pub u: i8,
    pub v: f64,
    pub start: StateR4,
}

impl ArcR4 {
    /// State after time `tau` in the arc (exact; `v = 1`).
    pub fn state_after(&self, tau: f64) -> StateR4 {
        let p = propagate_arc(self.start.phase(), self.u, tau);
        StateR4::new(
            p.x,
            p.y,
            self.start.z + arc_cost(self.start.phase(), self.u, tau),
            self.start.w + tau,
        )
    }

    pub fn end(&self) -> StateR4 {
        self.state_after(self.duration)
    }
}

/// Which norm a geodesic was built for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum R4Norm {
    SubFinsler,
    Finsler,
}

/// The explicit shortest path.
#[derive(Debug, Clone, Serialize)]
pub struct GeodesicR4 {
    pub pair: BoundaryPair,
    pub norm: R4Norm,
    pub t1: f64,
    pub arcs: Vec<ArcR4>,
    /// Length measured with the structure's norm.
    pub length: f64,
    /// `max |q(t1) - q1|`.
    pub endpoint_error: f64,
    #[serde(skip)]
    pub fuller: FiniteTimeSolution,
}

impl GeodesicR4 {
    pub fn state_at(&self, t: f64) -> (StateR4, i8) {
        let k = self
            .arcs
            .partition_point(|a| a.t_start <= t)
            .saturating_sub(1)
            .min(self.arcs.len().saturating_sub(1));
        match self.arcs.get(k) {
            Some(a) => (a.state_after((t - a.t_start).clamp(0.0, a.duration)), a.u),
            None => (self.pair.q0, 0),
        }
    }

    pub fn endpoint(&self) -> StateR4 {
        self.arcs.last().map_or(self.pair.q0, ArcR4::end)
    }

    /// Switch instants of `u`.
    pub fn switch_times(&self) -> Vec<f64> {
        self.fuller.switch_times()
    }

    /// `(t, state, u, v)` at every arc start, the end point, and `n` uniform samples.
    pub fn samples(&self, n: usize) -> Vec<(f64, StateR4, i8, f64)> {
        let mut rows: Vec<(f64, StateR4, i8, f64)> =
            self.arcs.iter().map(|a| (a.t_start, a.start, a.u, a.v)).collect();
        if let Some(a) = self.arcs.last() {
            rows.push((a.t_start + a.duration, a.end(), a.u, a.v));
        }
        for k in 0..n {
            let t = if n > 1 { self.t1 * k as f64 / (n - 1) as f64 } else { 0.0 };
            let (s, u) = self.state_at(t);
            rows.push((t, s, u, 1.0));
        }
        rows.sort_by(|a, b| a.0.total_cmp(&b.0));
        rows
    }
}

impl PiecewiseCurve for GeodesicR4 {
    fn pieces(&self) -> Vec<(f64, f64)> {
        self.arcs
            .iter()
            .map(|a| (a.t_start, a.t_start + a.duration))
            .collect()
    }

    fn position(&self, piece: usize, t: f64) -> Vec<f64> {
        let a = &self.arcs[piece];
        a.state_after(t - a.t_start).to_array().to_vec()
    }

    fn velocity(&self, piece: usize, t: f64) -> Vec<f64> {
        let a = &self.arcs[piece];
        let s = a.state_after(t - a.t_start);
        vec![a.v * s.y, f64::from(a.u), 0.5 * a.v * s.x * s.x, a.v]
    }
}

/// Unit ball `conv(+-f1 +- f2)`.
pub fn subfinsler_norm() -> VNorm {
    let f = r4_fields();
    VNorm::new(vec![
        &f[0] + &f[1],
        &f[0] - &f[1],
        &(-&f[0]) + &f[1],
        &(-&f[0]) - &f[1],
    ])
    .expect("valid ball")
}

/// Unit ball `conv(+-f1 +- f2, +-f3, +-f6)`, the 8-vertex hyperoctahedron.
pub fn finsler_vnorm() -> VNorm {
    let f = r4_fields();
    VNorm::new(vec![
        &f[0] + &f[1],
        &(-&f[0]) - &f[1],
        &f[0] - &f[1],
        &(-&f[0]) + &f[1],
        f[2].clone(),
        -&f[2],
        f[5].clone(),
        -&f[5],
    ])
    .expect("valid ball")
}

fn build(pair: &BoundaryPair, norm: R4Norm) -> Result<GeodesicR4> {
    let adm = check_boundary_admissible(pair)?;
    if !adm.admissible {
        return Err(Error::InadmissibleBoundary(format!(
            "z residual {:e}, w slack {:e} (tolerance {:e})",
            adm.z_residual, adm.w_slack, adm.tolerance
        )));
    }
    let t1 = pair.q1.w - pair.q0.w;
    let sol = solve_finite_time(pair.q0.phase(), pair.q1.phase(), t1.max(adm.t_sum))?;
    let mut arcs = Vec::with_capacity(sol.arcs.len());
    let mut z = pair.q0.z;
    for a in &sol.arcs {
        arcs.push(ArcR4 {
            t_start: a.t_start,
            duration: a.duration,
            u: a.u,
            v: 1.0,
            start: StateR4::new(a.start.x, a.start.y, z, pair.q0.w + a.t_start),
        });
        z += a.cost();
    }
    let mut g = GeodesicR4 {
        pair: *pair,
        norm,
        t1,
        arcs,
        length: 0.0,
        endpoint_error: 0.0,
        fuller: sol,
    };
    g.endpoint_error = g.endpoint().max_abs_diff(&pair.q1);
    g.length = match norm {
        R4Norm::SubFinsler => curve_length(&subfinsler_norm(), &g)?,
        R4Norm::Finsler => curve_length(&explicit_finsler(), &g)?,
    };
    Ok(g)
}

/// The explicit Finsler norm as a [`crate::norm::TangentNorm`].
pub fn explicit_finsler() -> FnNorm<fn(&[f64], &[f64]) -> NormValue> {
    fn eval(q: &[f64], xi: &[f64]) -> NormValue {
        NormValue::Finite(explicit_r4_finsler_norm(q, xi))
    }
    FnNorm(eval)
}

/// Shortest path for the sub-Finsler ball `conv(+-f1 +- f2)`.
pub fn build_subfinsler_geodesic(pair: &BoundaryPair) -> Result<GeodesicR4> {
    build(pair, R4Norm::SubFinsler)
}

/// Shortest path for the 8-vertex Finsler ball; same curve, Finsler length.
pub fn build_finsler_geodesic(pair: &BoundaryPair) -> Result<GeodesicR4> {
    build(pair, R4Norm::Finsler)
}

/// Endpoint of piecewise-constant controls `(u_k, v_k)` on pieces of length `h`.
///
/// Per piece: `y = y0 + u t`, `x = x0 + v (y0 t + u t^2/2)`,
/// `z = z0 + v/2 int x^2`, `w = w0 + v t`, all in closed form.
pub fn integrate_controls(q0: StateR4, controls: &[(f64, f64)], h: f64) -> StateR4 {
    let mut q = q0;
    for &(u, v) in controls {
        q = piece_end(q, u, v, h);
    }
    q
}

fn piece_end(q: StateR4, u: f64, v: f64, h: f64) -> StateR4 {
    // x(t) = a + b t + c t^2 with a = x0, b = v y0, c = v u / 2
    let (a, b, c) = (q.x, v * q.y, 0.5 * v * u);
    let h2 = h * h;
    let h3 = h2 * h;
    let int_x2 = a * a * h + a * b * h2 + (b * b + 2.0 * a * c) * h3 / 3.0 + b * c * h2 * h2 / 2.0
        + c * c * h3 * h2 / 5.0;
    StateR4::new(
        a + b * h + c * h2,
        q.y + u * h,
        q.z + 0.5 * v * int_x2,
        q.w + v * h,
    )
}

/// Outcome of the randomized competitor search.
#[derive(Debug, Clone, Serialize)]
pub struct AdversarialReport {
    pub t1: f64,
    pub samples: usize,
    pub seed: u64,
    /// Competitors whose endpoint landed within `delta` of `q1`.
    pub reached: usize,
    pub delta: f64,
    /// `min (length - t1)` over reaching competitors (`+inf` if none).
    pub min_gap: f64,
    /// Allowed undershoot `eps(delta) = delta`, from `|w(T) - w1| <= delta`.
    pub allowed_undershoot: f64,
    /// Gap of the constructed geodesic itself.
    pub geodesic_gap: f64,
    pub passed: bool,
    pub note: &'static str,
}

const SHOOT_DELTA: f64 = 1e-9;

/// Random piecewise-constant competitors `|u|, |v| <= 1` on at most 64
/// pieces, steered toward `q1` by damped Gauss-Newton shooting with
/// clipping. Every competitor that lands within `delta` of `q1` must have
/// length `int max(|u|, |v|) >= t1 - delta`. Deterministic for a given seed.
pub fn adversarial_length_check(pair: &BoundaryPair, samples: usize, seed: u64) -> Result<AdversarialReport> {
    let geo = build_subfinsler_geodesic(pair)?;
    let t1 = geo.t1;
    let results: Vec<Option<f64>> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ i as u64);
            shoot_competitor(pair, t1, &mut rng)
        })
        .collect();
    let gaps: Vec<f64> = results.iter().flatten().map(|len| len - t1).collect();
    let min_gap = gaps.iter().cloned().fold(f64::INFINITY, f64::min);
    let geodesic_gap = geo.length - t1;
    Ok(AdversarialReport {
        t1,
        samples,
        seed,
        reached: gaps.len(),
        delta: SHOOT_DELTA,
        min_gap,
        allowed_undershoot: SHOOT_DELTA,
        geodesic_gap,
        passed: min_gap >= -SHOOT_DELTA && geodesic_gap.abs() <= 1e-9,
        note: "randomized falsification attempt, not a proof",
    })
}

fn shoot_competitor(pair: &BoundaryPair, t1: f64, rng: &mut ChaCha8Rng) -> Option<f64> {
    let n: usize = rng.random_range(4..=64);
    // horizons both shorter and longer than t1
    let horizon = (t1 * rng.random_range(0.9..1.4)).max(1e-3);
    let h = horizon / n as f64;
    let mut theta: Vec<f64> = (0..n)
        .flat_map(|_| [rng.random_range(-1.0..1.0), rng.random_range(0.3..1.0)])
        .collect();
    let target = pair.q1;
    let residual = |th: &[f64]| -> Vector4<f64> {
        let c: Vec<(f64, f64)> = th.chunks(2).map(|p| (p[0], p[1])).collect();
        let e = integrate_controls(pair.q0, &c, h);
        Vector4::new(e.x - target.x, e.y - target.y, e.z - target.z, e.w - target.w)
    };
    let mut r = residual(&theta);
    let mut damping = 1e-6;
    for _ in 0..200 {
        if r.amax() < SHOOT_DELTA {
            break;
        }
        // forward-difference Jacobian, 4 x 2n
        let m = theta.len();
        let mut jac = vec![Vector4::zeros(); m];
        for (k, col) in jac.iter_mut().enumerate() {
            let step = 1e-7;
            let mut tp = theta.clone();
            tp[k] += step;
            *col = (residual(&tp) - r) / step;
        }
        let mut jjt = Matrix4::<f64>::zeros();
        for col in &jac {
            jjt += col * col.transpose();
        }
        let mut improved = false;
        for _ in 0..12 {
            let lhs = jjt + Matrix4::identity() * damping;
            let Some(y) = lhs.lu().solve(&r) else {
                damping *= 10.0;
                continue;
            };
            let trial: Vec<f64> = theta
                .iter()
                .zip(&jac)
                .map(|(t, col)| (t - col.dot(&y)).clamp(-1.0, 1.0))
                .collect();
            let rt = residual(&trial);
            if rt.norm() < r.norm() {
                theta = trial;
                r = rt;
                damping = (damping * 0.3).max(1e-12);
                improved = true;
                break;
            }
            damping *= 10.0;
        }
        if !improved {
            break;
        }
    }
    if r.amax() >= SHOOT_DELTA {
        return None;
    }
    Some(theta.chunks(2).map(|p| h * p[0].abs().max(p[1].abs())).sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_data_is_a_straight_segment() {
        let pair = make_admissible_endpoint(0.0, 0.0, 0.0, 0.0, 1.0).unwrap();
        assert_eq!(pair.q1, StateR4::new(0.0, 0.0, 0.0, 1.0));
        let g = build_subfinsler_geodesic(&pair).unwrap();
        assert_eq!(g.arcs.len(), 1);
        assert_eq!(g.arcs[0].u, 0);
        assert!((g.length - 1.0).abs() < 1e-12);
        let f = build_finsler_geodesic(&pair).unwrap();
        assert!((f.length - 1.0).abs() < 1e-12);
    }

    #[test]
    fn admissibility_examples() {
        let mut pair = BoundaryPair {
            q0: StateR4::default(),
            q1: StateR4::new(0.0, 0.0, 0.0, 1.0),
        };
        assert!(check_boundary_admissible(&pair).unwrap().admissible);
        pair.q1.z = 0.5;
        assert!(!check_boundary_admissible(&pair).unwrap().admissible);

        let mut p = make_admissible_endpoint(1.0, 0.0, 0.0, 0.0, 1.0).unwrap();
        assert!(check_boundary_admissible(&p).unwrap().admissible);
        p.q1.z += 0.1;
        let r = check_boundary_admissible(&p).unwrap();
        assert!(!r.admissible);
        assert!((r.z_residual - 0.1).abs() < 1e-12);
        assert!(matches!(
            build_subfinsler_geodesic(&p),
            Err(Error::InadmissibleBoundary(_))
        ));
    }

    #[test]
    fn chattering_geodesic_hits_endpoint_with_length_t1() {
        let pair = make_admissible_endpoint(1.0, 0.0, 0.0, 0.0, 1.0).unwrap();
        let g = build_subfinsler_geodesic(&pair).unwrap();
        assert!(g.endpoint_error < 1e-8, "{}", g.endpoint_error);
        assert!((g.length - g.t1).abs() < 1e-9);
        assert!(g.switch_times().len() > 10);
        let f = build_finsler_geodesic(&pair).unwrap();
        assert!((f.length - g.length).abs() < 1e-9);
    }

    #[test]
    fn closed_form_pieces_match_geodesic_arcs() {
        let pair = make_admissible_endpoint(0.5, 0.5, -0.2, 0.3, 0.25).unwrap();
        let g = build_subfinsler_geodesic(&pair).unwrap();
        for a in &g.arcs {
            let e = piece_end(a.start, f64::from(a.u), 1.0, a.duration);
            assert!(e.max_abs_diff(&a.end()) < 1e-14);
        }
    }

    #[test]
    fn competitors_never_beat_t1() {
        let pair = make_admissible_endpoint(1.0, 0.0, 0.0, 0.0, 0.5).unwrap();
        let r = adversarial_length_check(&pair, 24, 7).unwrap();
        assert!(r.passed, "{r:?}");
        assert!(r.reached > 0);
        let again = adversarial_length_check(&pair, 24, 7).unwrap();
        assert_eq!(r.min_gap.to_bits(), again.min_gap.to_bits());
    }

    #[test]
    fn dilation_maps_geodesics_to_geodesics() {
        let pair = make_admissible_endpoint(0.7, -0.4, 0.3, 0.5, 0.2).unwrap();
        let g = build_subfinsler_geodesic(&pair).unwrap();
        for l in [0.5, 2.0] {
            let sp = pair.scaled(l);
            assert!(check_boundary_admissible(&sp).unwrap().admissible);
            let gs = build_subfinsler_geodesic(&sp).unwrap();
            assert!((gs.length - l * g.length).abs() < 1e-9 * l);
            for k in 0..=50 {
                let t = g.t1 * k as f64 / 50.0;
                let a = g.state_at(t).0.scaled(l);
                let b = gs.state_at(l * t).0;
                assert!(a.max_abs_diff(&b) < 1e-9 * (1.0 + l.powi(5)), "{a:?} {b:?}");
            }
        }
    }

    #[test]
    fn construction_is_deterministic() {
        let pair = make_admissible_endpoint(1.0, 0.0, 1.0, 0.0, 0.0).unwrap();
        let a = build_subfinsler_geodesic(&pair).unwrap();
        let b = build_finsler_geodesic(&pair).unwrap();
        assert_eq!(a.switch_times(), b.switch_times());
        assert_eq!(a.samples(10).len() + 90, a.samples(100).len());
    }

    #[test]
    fn slow_w_cannot_reach() {
        let pair = make_admissible_endpoint(0.0, 0.0, 0.0, 0.0, 1.0).unwrap();
        // v = 1/2 for the whole horizon only reaches w = 1/2
        let e = integrate_controls(pair.q0, &[(0.0, 0.5); 4], 0.25);
        assert!((e.w - 0.5).abs() < 1e-15);
        let e = integrate_controls(pair.q0, &[(0.0, 0.5); 8], 0.25);
        assert!(e.max_abs_diff(&pair.q1) < 1e-15);
        // reaching q1 with v = 1/2 takes length 2 > t1 = 1
    }
}
