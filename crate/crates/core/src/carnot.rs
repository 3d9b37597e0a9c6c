//! The six-dimensional step-5 Carnot group in Fuller coordinates.
//!
//! The left-invariant frame is `g1, ..., g6` (see [`crate::systems::carnot_fields`])
//! with brackets `[g1,g2] = g3`, `[g1,g3] = g4`, `[g1,g4] = g5`,
//! `[g2,g5] = -[g3,g4] = g6`. The group law, exponential coordinates and
//! dilations are written once over [`Scalar`] so they run on `f64`, exact
//! rationals and symbolic polynomials alike.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fuller::{arc_cost, propagate_arc, FiniteTimeSolution, PhasePoint};
use crate::geodesic_r4::{build_subfinsler_geodesic, BoundaryPair, GeodesicR4, StateR4};
use crate::geodesic_r4::{check_boundary_admissible, make_admissible_endpoint};
use crate::fuller::solve_finite_time;
use crate::norm::{curve_length, FnNorm, NormValue, PiecewiseCurve, DELTA_TOL};
use crate::scalar::{Field, Scalar};

/// A point of the group in Fuller coordinates `(x1, ..., x6)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupElement<T = f64>(pub [T; 6]);

/// Coefficients `(a1, ..., a6)` on `g1, ..., g6`, either exponential
/// coordinates or frame coefficients `eta` of a tangent vector.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlgebraVector<T = f64>(pub [T; 6]);

impl<T: Scalar> GroupElement<T> {
    pub fn identity() -> Self {
        GroupElement(std::array::from_fn(|_| T::zero()))
    }
}

impl GroupElement<f64> {
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

fn k<T: Scalar>(n: i64, d: i64) -> T {
    T::from_ratio(n, d)
}

/// `x * y`.
pub fn multiply<T: Scalar>(x: &GroupElement<T>, y: &GroupElement<T>) -> GroupElement<T> {
    let [x1, x2, x3, x4, x5, x6] = x.0.clone();
    let [y1, y2, y3, y4, y5, y6] = y.0.clone();
    let y1s = y1.clone() * y1.clone();
    let y1c = y1s.clone() * y1.clone();
    let z1 = x1.clone() + y1.clone();
    let z2 = x2.clone() + y2;
    let z3 = x3.clone() + y3 - x2.clone() * y1.clone();
    let z4 = x4 + y4.clone() - x3.clone() * y1.clone() + k::<T>(1, 2) * x2.clone() * y1s.clone();
    let z5 = x5 + y5.clone() + x1.clone() * y4.clone() - x1.clone() * x3.clone() * y1.clone()
        + k::<T>(1, 3) * x2.clone() * y1c.clone()
        - k::<T>(1, 2) * x3.clone() * y1s.clone()
        + k::<T>(1, 2) * x1 * x2.clone() * y1s.clone();
    let z6 = x6 + y6 - x3.clone() * y4 + x2.clone() * y5
        + k::<T>(1, 2) * x3.clone() * x3.clone() * y1
        - k::<T>(1, 2) * x2.clone() * x3 * y1s
        + k::<T>(1, 6) * x2.clone() * x2 * y1c;
    GroupElement([z1, z2, z3, z4, z5, z6])
}

/// `x^-1`, by back-substitution: coordinate `i` of `x * y` is
/// `x_i + y_i + P_i(x, y_1, ..., y_{i-1})`.
pub fn inverse<T: Scalar>(x: &GroupElement<T>) -> GroupElement<T> {
    let mut y = GroupElement::<T>::identity();
    for i in 0..6 {
        let z = multiply(x, &y);
        y.0[i] = y.0[i].clone() - z.0[i].clone();
    }
    y
}

/// `Exp(sum a_i g_i)(0)`.
pub fn exp_coords<T: Scalar>(a: &AlgebraVector<T>) -> GroupElement<T> {
    let [a1, a2, a3, a4, a5, a6] = a.0.clone();
    let a1s = a1.clone() * a1.clone();
    let a1c = a1s.clone() * a1.clone();
    let x3 = a3.clone() - k::<T>(1, 2) * a1.clone() * a2.clone();
    let x4 = a4.clone() + k::<T>(1, 6) * a1s.clone() * a2.clone()
        - k::<T>(1, 2) * a1.clone() * a3.clone();
    let x5 = a5.clone() + k::<T>(1, 8) * a1c.clone() * a2.clone()
        - k::<T>(1, 3) * a1s.clone() * a3.clone()
        + k::<T>(1, 2) * a1.clone() * a4.clone();
    let x6 = a6 + k::<T>(1, 40) * a1c * a2.clone() * a2.clone()
        - k::<T>(1, 8) * a1s * a2.clone() * a3.clone()
        + k::<T>(1, 6) * a1.clone() * (a3.clone() * a3.clone() + a2.clone() * a4.clone())
        - k::<T>(1, 2) * a3 * a4
        + k::<T>(1, 2) * a2.clone() * a5;
    GroupElement([a1, a2, x3, x4, x5, x6])
}

/// Inverse of [`exp_coords`], by triangular back-substitution.
pub fn log_coords<T: Scalar>(x: &GroupElement<T>) -> AlgebraVector<T> {
    let mut a = AlgebraVector(std::array::from_fn(|_| T::zero()));
    for i in 0..6 {
        let e = exp_coords(&a);
        a.0[i] = a.0[i].clone() + x.0[i].clone() - e.0[i].clone();
    }
    a
}

/// Homogeneous weights of the coordinates.
pub const WEIGHTS: [u32; 6] = [1, 1, 2, 3, 4, 5];

/// A dilation `delta_lambda`, `lambda > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Dilation {
    lambda: f64,
}

impl Dilation {
    pub fn new(lambda: f64) -> Result<Self> {
        if lambda > 0.0 && lambda.is_finite() {
            Ok(Dilation { lambda })
        } else {
            Err(Error::InvalidInput(format!("dilation factor must be positive, got {lambda}")))
        }
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn apply(&self, x: &GroupElement) -> GroupElement {
        dilate(&self.lambda, x)
    }
}

/// `x_i -> lambda^{w_i} x_i`, for any coefficient ring.
pub fn dilate<T: Scalar>(lambda: &T, x: &GroupElement<T>) -> GroupElement<T> {
    let mut out = x.clone();
    for (c, w) in out.0.iter_mut().zip(WEIGHTS) {
        for _ in 0..w {
            *c = c.clone() * lambda.clone();
        }
    }
    out
}

/// `pi(x) = (-x3, x2, x6, x1)`.
pub fn project_pi(x: &GroupElement) -> StateR4 {
    StateR4::new(-x.0[2], x.0[1], x.0[5], x.0[0])
}

/// A point over `q` with free coordinates `x4`, `x5`.
pub fn lift_point(q: &StateR4, x4: f64, x5: f64) -> GroupElement {
    GroupElement([q.w, q.y, -q.x, x4, x5, q.z])
}

/// Coefficients `eta` of `xi = sum eta_i g_i(x)`.
pub fn frame_coefficients<T: Scalar>(x: &GroupElement<T>, xi: &[T; 6]) -> AlgebraVector<T> {
    let [x1, x2, x3, ..] = x.0.clone();
    let [s1, s2, s3, s4, s5, s6] = xi.clone();
    let e3 = s3 + x2.clone() * s1.clone();
    let e4 = s4.clone() + x3.clone() * s1.clone();
    let e5 = s5.clone() - x1.clone() * s4.clone();
    let e6 = s6 + k::<T>(1, 2) * x3.clone() * x3.clone() * s1.clone()
        + (x1 * x2.clone() + x3) * s4
        - x2 * s5;
    AlgebraVector([s1, s2, e3, e4, e5, e6])
}

/// `sum eta_i g_i(x)`.
pub fn frame_vector<T: Scalar>(x: &GroupElement<T>, eta: &AlgebraVector<T>) -> [T; 6] {
    let [x1, x2, x3, ..] = x.0.clone();
    let [e1, e2, e3, e4, e5, e6] = eta.0.clone();
    [
        e1.clone(),
        e2,
        e3 - x2.clone() * e1.clone(),
        e4.clone() - x3.clone() * e1.clone(),
        e5.clone() - x1.clone() * x3.clone() * e1.clone() + x1 * e4.clone(),
        e6 + k::<T>(1, 2) * x3.clone() * x3.clone() * e1 - x3 * e4 + x2 * e5,
    ]
}

/// Left-invariant sub-Finsler norm: `max(|eta1|, |eta2|)` on the
/// horizontal plane, `+inf` off it.
pub fn subfinsler_norm_g(x: &GroupElement, xi: &[f64; 6]) -> NormValue {
    let eta = frame_coefficients(x, xi).0;
    let size = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
    if eta[2..].iter().any(|e| e.abs() > DELTA_TOL * (1.0 + size)) {
        NormValue::Infinite
    } else {
        NormValue::Finite(eta[0].abs().max(eta[1].abs()))
    }
}

/// Left-invariant Finsler norm with the 12-vertex hyperoctahedron
/// `conv(+-g1 +- g2, +-g3, +-g4, +-g5, +-g6)` as unit ball.
pub fn finsler_norm_g(x: &GroupElement, xi: &[f64; 6]) -> f64 {
    let [x1, x2, x3, ..] = x.0;
    let [s1, s2, s3, s4, s5, s6] = *xi;
    s1.abs().max(s2.abs())
        + (s3 + x2 * s1).abs()
        + (s4 + x3 * s1).abs()
        + (s5 - x1 * s4).abs()
        + (s6 + 0.5 * x3 * x3 * s1 + (x1 * x2 + x3) * s4 - x2 * s5).abs()
}

fn as6(v: &[f64]) -> [f64; 6] {
    std::array::from_fn(|i| v[i])
}

/// [`subfinsler_norm_g`] as a [`crate::norm::TangentNorm`].
pub fn subfinsler_tangent_norm() -> FnNorm<fn(&[f64], &[f64]) -> NormValue> {
    fn eval(x: &[f64], xi: &[f64]) -> NormValue {
        subfinsler_norm_g(&GroupElement(as6(x)), &as6(xi))
    }
    FnNorm(eval)
}

/// [`finsler_norm_g`] as a [`crate::norm::TangentNorm`].
pub fn finsler_tangent_norm() -> FnNorm<fn(&[f64], &[f64]) -> NormValue> {
    fn eval(x: &[f64], xi: &[f64]) -> NormValue {
        NormValue::Finite(finsler_norm_g(&GroupElement(as6(x)), &as6(xi)))
    }
    FnNorm(eval)
}

/// One constant-control arc `x' = u1 g1(x) + u2 g2(x)`.
#[derive(Debug, Clone, Serialize)]
pub struct CarnotArc {
    pub t_start: f64,
    pub duration: f64,
    pub u1: f64,
    pub u2: f64,
    pub start: GroupElement,
}

impl CarnotArc {
    /// Right translation by the one-parameter subgroup `exp(tau (u1 g1 + u2 g2))`.
    pub fn state_after(&self, tau: f64) -> GroupElement {
        let step = exp_coords(&AlgebraVector([
            tau * self.u1,
            tau * self.u2,
            0.0,
            0.0,
            0.0,
            0.0,
        ]));
        multiply(&self.start, &step)
    }

    pub fn velocity_at(&self, tau: f64) -> [f64; 6] {
        let x = self.state_after(tau);
        frame_vector(&x, &AlgebraVector([self.u1, self.u2, 0.0, 0.0, 0.0, 0.0]))
    }
}

/// A horizontal curve made of constant-control arcs.
#[derive(Debug, Clone, Serialize)]
pub struct CarnotCurve {
    pub arcs: Vec<CarnotArc>,
    pub start: GroupElement,
}

impl CarnotCurve {
    pub fn duration(&self) -> f64 {
        self.arcs.last().map_or(0.0, |a| a.t_start + a.duration)
    }

    pub fn endpoint(&self) -> GroupElement {
        self.arcs
            .last()
            .map_or_else(|| self.start.clone(), |a| a.state_after(a.duration))
    }

    pub fn state_at(&self, t: f64) -> (GroupElement, f64, f64) {
        let i = self
            .arcs
            .partition_point(|a| a.t_start <= t)
            .saturating_sub(1);
        match self.arcs.get(i) {
            Some(a) => (a.state_after((t - a.t_start).clamp(0.0, a.duration)), a.u1, a.u2),
            None => (self.start.clone(), 0.0, 0.0),
        }
    }

    /// Rows `(t, x1..x6, u1, u2)` at arc starts, the end, and `n` uniform times.
    pub fn samples(&self, n: usize) -> Vec<(f64, GroupElement, f64, f64)> {
        let mut rows: Vec<_> = self
            .arcs
            .iter()
            .map(|a| (a.t_start, a.start.clone(), a.u1, a.u2))
            .collect();
        if let Some(a) = self.arcs.last() {
            rows.push((a.t_start + a.duration, a.state_after(a.duration), a.u1, a.u2));
        }
        let t1 = self.duration();
        for j in 0..n {
            let t = if n > 1 { t1 * j as f64 / (n - 1) as f64 } else { 0.0 };
            let (x, u1, u2) = self.state_at(t);
            rows.push((t, x, u1, u2));
        }
        rows.sort_by(|a, b| a.0.total_cmp(&b.0));
        rows
    }
}

impl PiecewiseCurve for CarnotCurve {
    fn pieces(&self) -> Vec<(f64, f64)> {
        self.arcs.iter().map(|a| (a.t_start, a.t_start + a.duration)).collect()
    }

    fn position(&self, piece: usize, t: f64) -> Vec<f64> {
        let a = &self.arcs[piece];
        a.state_after(t - a.t_start).0.to_vec()
    }

    fn velocity(&self, piece: usize, t: f64) -> Vec<f64> {
        let a = &self.arcs[piece];
        a.velocity_at(t - a.t_start).to_vec()
    }
}

/// Horizontal lift from `x0` of piecewise-constant controls
/// `(duration, u1, u2)`, where the base curve is `q' = u1 f1 + u2 f2`.
pub fn horizontal_lift(controls: &[(f64, f64, f64)], x0: &GroupElement) -> CarnotCurve {
    let mut arcs = Vec::with_capacity(controls.len());
    let mut x = x0.clone();
    let mut t = 0.0;
    for &(d, u1, u2) in controls {
        let arc = CarnotArc {
            t_start: t,
            duration: d,
            u1,
            u2,
            start: x,
        };
        x = arc.state_after(d);
        t += d;
        arcs.push(arc);
    }
    CarnotCurve {
        arcs,
        start: x0.clone(),
    }
}

/// Controls `(duration, v, u)` of an R^4 geodesic, ready for [`horizontal_lift`].
pub fn geodesic_controls(g: &GeodesicR4) -> Vec<(f64, f64, f64)> {
    g.arcs
        .iter()
        .map(|a| (a.duration, a.v, f64::from(a.u)))
        .collect()
}

/// The lifted sub-Finsler shortest path.
#[derive(Debug, Clone, Serialize)]
pub struct CarnotSubfinslerGeodesic {
    pub base: GeodesicR4,
    pub curve: CarnotCurve,
    pub x0: GroupElement,
    pub x1: GroupElement,
    /// Sub-Finsler length of the lift.
    pub length: f64,
    /// `max |pi(x(t)) - q(t)|` over arc ends and uniform samples.
    pub projection_error: f64,
}

/// Horizontal lift from `x0` of the R^4 sub-Finsler geodesic for `base_pair`.
pub fn build_carnot_subfinsler_geodesic(
    x0: &GroupElement,
    base_pair: &BoundaryPair,
) -> Result<CarnotSubfinslerGeodesic> {
    let q0 = project_pi(x0);
    let scale = 1.0 + base_pair.q0.to_array().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if q0.max_abs_diff(&base_pair.q0) > 1e-12 * scale {
        return Err(Error::InvalidInput(format!(
            "pi(x0) = {:?} differs from q0 = {:?}",
            q0, base_pair.q0
        )));
    }
    let base = build_subfinsler_geodesic(base_pair)?;
    let curve = horizontal_lift(&geodesic_controls(&base), x0);
    let length = curve_length(&subfinsler_tangent_norm(), &curve)?;
    let mut projection_error = 0.0f64;
    for (t, x, _, _) in curve.samples(2001) {
        let q = base.state_at(t).0;
        projection_error = projection_error.max(project_pi(&x).max_abs_diff(&q));
    }
    Ok(CarnotSubfinslerGeodesic {
        x1: curve.endpoint(),
        x0: x0.clone(),
        base,
        curve,
        length,
        projection_error,
    })
}

/// Boundary data of the Finsler construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CarnotFinslerParams {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
    pub w0: f64,
    pub w1: f64,
    pub z0: f64,
    pub z1: f64,
}

impl CarnotFinslerParams {
    /// Admissible data with `z0 = w0 = 0` and the given slack in `w`.
    pub fn admissible(x0: f64, y0: f64, x1: f64, y1: f64, slack: f64) -> Result<Self> {
        let p = make_admissible_endpoint(x0, y0, x1, y1, slack)?;
        Ok(CarnotFinslerParams {
            x0,
            y0,
            x1,
            y1,
            w0: 0.0,
            w1: p.q1.w,
            z0: 0.0,
            z1: p.q1.z,
        })
    }

    fn pair(&self) -> BoundaryPair {
        BoundaryPair {
            q0: StateR4::new(self.x0, self.y0, self.z0, self.w0),
            q1: StateR4::new(self.x1, self.y1, self.z1, self.w1),
        }
    }
}

/// One arc of the explicit curve, with the running integrals at its start.
#[derive(Debug, Clone, Serialize)]
pub struct FinslerArc {
    pub t_start: f64,
    pub duration: f64,
    pub u: i8,
    pub start: GroupElement,
}

impl FinslerArc {
    /// Closed-form integrals of `x_F = a + b s + c s^2` over `[0, tau]`.
    pub fn state_after(&self, tau: f64) -> GroupElement {
        let s = &self.start.0;
        let p = PhasePoint::new(-s[2], s[1]);
        let end = propagate_arc(p, self.u, tau);
        let (a, b, c) = (p.x, p.y, 0.5 * f64::from(self.u));
        let t2 = tau * tau;
        let t3 = t2 * tau;
        let int_x = a * tau + b * t2 / 2.0 + c * t3 / 3.0;
        let int_sx = a * t2 / 2.0 + b * t3 / 3.0 + c * t2 * t2 / 4.0;
        GroupElement([
            s[0] + tau,
            end.y,
            -end.x,
            s[3] + int_x,
            s[4] + s[0] * int_x + int_sx,
            s[5] + arc_cost(p, self.u, tau),
        ])
    }

    /// Derivative read off the integral formulas.
    pub fn velocity_at(&self, tau: f64) -> [f64; 6] {
        let x = self.state_after(tau);
        let xf = -x.0[2];
        [1.0, f64::from(self.u), -x.0[1], xf, x.0[0] * xf, 0.5 * xf * xf]
    }
}

/// The explicit Finsler shortest path and its endpoints.
#[derive(Debug, Clone, Serialize)]
pub struct CarnotFinslerGeodesic {
    pub params: CarnotFinslerParams,
    pub t1: f64,
    pub arcs: Vec<FinslerArc>,
    /// `(w0, y0, -x0, 0, 0, z0)`.
    pub x_start: GroupElement,
    /// `(w1, y1, -x1, A, B, z1)`.
    pub x_end: GroupElement,
    pub a: f64,
    pub b: f64,
    /// `max |x(t1) - x_end|`.
    pub endpoint_error: f64,
    #[serde(skip)]
    pub fuller: FiniteTimeSolution,
}

impl CarnotFinslerGeodesic {
    pub fn state_at(&self, t: f64) -> (GroupElement, i8) {
        let i = self
            .arcs
            .partition_point(|a| a.t_start <= t)
            .saturating_sub(1);
        match self.arcs.get(i) {
            Some(a) => (a.state_after((t - a.t_start).clamp(0.0, a.duration)), a.u),
            None => (self.x_start.clone(), 0),
        }
    }

    pub fn endpoint(&self) -> GroupElement {
        self.arcs
            .last()
            .map_or_else(|| self.x_start.clone(), |a| a.state_after(a.duration))
    }

    /// `max |1 - ||x'(t)|||` over `n` uniform times, arc interiors only.
    pub fn max_speed_deviation(&self, n: usize) -> f64 {
        let mut worst = 0.0f64;
        for j in 0..n {
            let t = self.t1 * (j as f64 + 0.5) / n as f64;
            let i = self
                .arcs
                .partition_point(|a| a.t_start <= t)
                .saturating_sub(1);
            let Some(a) = self.arcs.get(i) else { continue };
            let tau = (t - a.t_start).clamp(0.0, a.duration);
            let x = a.state_after(tau);
            worst = worst.max((finsler_norm_g(&x, &a.velocity_at(tau)) - 1.0).abs());
        }
        worst
    }

    /// Rows `(t, x1..x6, u1 = 1, u2 = u)`.
    pub fn samples(&self, n: usize) -> Vec<(f64, GroupElement, f64, f64)> {
        let mut rows: Vec<_> = self
            .arcs
            .iter()
            .map(|a| (a.t_start, a.start.clone(), 1.0, f64::from(a.u)))
            .collect();
        if let Some(a) = self.arcs.last() {
            rows.push((a.t_start + a.duration, a.state_after(a.duration), 1.0, f64::from(a.u)));
        }
        for j in 0..n {
            let t = if n > 1 { self.t1 * j as f64 / (n - 1) as f64 } else { 0.0 };
            let (x, u) = self.state_at(t);
            rows.push((t, x, 1.0, f64::from(u)));
        }
        rows.sort_by(|a, b| a.0.total_cmp(&b.0));
        rows
    }
}

impl PiecewiseCurve for CarnotFinslerGeodesic {
    fn pieces(&self) -> Vec<(f64, f64)> {
        self.arcs.iter().map(|a| (a.t_start, a.t_start + a.duration)).collect()
    }

    fn position(&self, piece: usize, t: f64) -> Vec<f64> {
        let a = &self.arcs[piece];
        a.state_after(t - a.t_start).0.to_vec()
    }

    fn velocity(&self, piece: usize, t: f64) -> Vec<f64> {
        let a = &self.arcs[piece];
        a.velocity_at(t - a.t_start).to_vec()
    }
}

/// The explicit curve `x^(t)` built from the Fuller solution with `t1 = w1 - w0`.
pub fn build_carnot_finsler_geodesic(params: &CarnotFinslerParams) -> Result<CarnotFinslerGeodesic> {
    let pair = params.pair();
    let adm = check_boundary_admissible(&pair)?;
    if !adm.admissible {
        return Err(Error::InadmissibleBoundary(format!(
            "z residual {:e}, w slack {:e} (tolerance {:e})",
            adm.z_residual, adm.w_slack, adm.tolerance
        )));
    }
    let t1 = params.w1 - params.w0;
    let sol = solve_finite_time(
        PhasePoint::new(params.x0, params.y0),
        PhasePoint::new(params.x1, params.y1),
        t1.max(adm.t_sum),
    )?;
    let x_start = GroupElement([params.w0, params.y0, -params.x0, 0.0, 0.0, params.z0]);
    let mut arcs = Vec::with_capacity(sol.arcs.len());
    let mut x = x_start.clone();
    for a in &sol.arcs {
        let mut start = x.clone();
        // x2, x3 are taken from the Fuller arc itself so junction rounding does not accumulate
        start.0[1] = a.start.y;
        start.0[2] = -a.start.x;
        start.0[0] = params.w0 + a.t_start;
        let arc = FinslerArc {
            t_start: a.t_start,
            duration: a.duration,
            u: a.u,
            start,
        };
        x = arc.state_after(a.duration);
        arcs.push(arc);
    }
    let (a, b) = (x.0[3], x.0[4]);
    let x_end = GroupElement([params.w1, params.y1, -params.x1, a, b, params.z1]);
    let endpoint_error = x.max_abs_diff(&x_end);
    Ok(CarnotFinslerGeodesic {
        params: *params,
        t1,
        arcs,
        x_start,
        x_end,
        a,
        b,
        endpoint_error,
        fuller: sol,
    })
}

/// `true` when `xi` has zero frame coefficients on `g3, ..., g6` exactly.
pub fn is_horizontal_exact<T: Field>(x: &GroupElement<T>, xi: &[T; 6]) -> bool {
    frame_coefficients(x, xi).0[2..].iter().all(|e| e.is_negligible())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::norm::{minkowski_norm, VNorm};
    use crate::poly::{Poly, PolyVectorField};
    use crate::scalar::rat;
    use crate::systems::{carnot_fields, r4_fields};
    use num_rational::BigRational;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rand_rat(rng: &mut ChaCha8Rng) -> BigRational {
        rat(rng.random_range(-40..=40), rng.random_range(1..=9))
    }

    fn rand_elem(rng: &mut ChaCha8Rng) -> GroupElement<BigRational> {
        GroupElement(std::array::from_fn(|_| rand_rat(rng)))
    }

    #[test]
    fn group_axioms_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let e = GroupElement::<BigRational>::identity();
        for _ in 0..100 {
            let (a, b, c) = (rand_elem(&mut rng), rand_elem(&mut rng), rand_elem(&mut rng));
            assert_eq!(multiply(&multiply(&a, &b), &c), multiply(&a, &multiply(&b, &c)));
            assert_eq!(multiply(&e, &a), a);
            assert_eq!(multiply(&a, &e), a);
            let ai = inverse(&a);
            assert_eq!(multiply(&a, &ai), e);
            assert_eq!(multiply(&ai, &a), e);
            assert_eq!(inverse(&ai), a);
            let v = AlgebraVector(a.0.clone());
            assert_eq!(log_coords(&exp_coords(&v)), v);
            assert_eq!(exp_coords(&log_coords(&a)), a);
            let l = rand_rat(&mut rng);
            assert_eq!(dilate(&l, &multiply(&a, &b)), multiply(&dilate(&l, &a), &dilate(&l, &b)));
        }
        assert_eq!(inverse(&e), e);
    }

    #[test]
    fn log_third_coordinate() {
        let x = GroupElement([rat(3, 1), rat(5, 2), rat(1, 7), rat(0, 1), rat(0, 1), rat(0, 1)]);
        let a = log_coords(&x);
        assert_eq!(a.0[2], rat(1, 7) + rat(1, 2) * rat(3, 1) * rat(5, 2));
    }

    fn poly_elem(offset: usize) -> GroupElement<Poly> {
        GroupElement(std::array::from_fn(|i| Poly::var(offset + i)))
    }

    #[test]
    fn frame_is_left_invariant() {
        // d/dt (x * exp(t g_i)) at t = 0 equals g_i(x)
        let x = poly_elem(0);
        let y = poly_elem(6);
        let prod = multiply(&x, &y);
        let g = carnot_fields();
        for (i, gi) in g.iter().enumerate() {
            let ge = gi.evaluate_exact(&vec![rat(0, 1); 6]);
            let zero_y: Vec<Poly> = (0..12)
                .map(|j| if j < 6 { Poly::var(j) } else { Poly::zero() })
                .collect();
            for (r, comp) in prod.0.iter().enumerate() {
                let mut d = Poly::zero();
                for (j, c) in ge.iter().enumerate() {
                    d = &d + &comp.derivative(6 + j).substitute(&zero_y).scale(c);
                }
                assert_eq!(d, gi.components()[r], "g{} component {}", i + 1, r + 1);
            }
        }
    }

    #[test]
    fn projection_intertwines_frames() {
        let g = carnot_fields();
        let f = r4_fields();
        let x = |i: usize| Poly::var(i);
        let subs = vec![-&x(2), x(1), x(5), x(0)];
        for (gi, fi) in g.iter().zip(&f) {
            let c = gi.components();
            let dpi = PolyVectorField::new(vec![-&c[2], c[1].clone(), c[5].clone(), c[0].clone()]);
            let fpi = PolyVectorField::new(fi.components().iter().map(|p| p.substitute(&subs)).collect());
            assert_eq!(dpi, fpi);
        }
    }

    #[test]
    fn frame_coefficients_invert_frame_vector() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g = carnot_fields();
        for _ in 0..20 {
            let x = rand_elem(&mut rng);
            let eta = AlgebraVector(std::array::from_fn(|_| rand_rat(&mut rng)));
            let xi = frame_vector(&x, &eta);
            assert_eq!(frame_coefficients(&x, &xi), eta);
            let mut sum = vec![rat(0, 1); 6];
            for (gi, e) in g.iter().zip(&eta.0) {
                for (s, v) in sum.iter_mut().zip(gi.evaluate_exact(&x.0)) {
                    *s = s.clone() + v * e.clone();
                }
            }
            assert_eq!(sum, xi.to_vec());
        }
    }

    #[test]
    fn norms_on_frame_vectors() {
        let x = GroupElement([0.3, -1.2, 0.7, 2.0, -0.4, 1.1]);
        let unit = |i: usize| {
            let mut e = [0.0; 6];
            e[i] = 1.0;
            frame_vector(&x, &AlgebraVector(e))
        };
        assert_eq!(subfinsler_norm_g(&x, &unit(0)), NormValue::Finite(1.0));
        assert_eq!(subfinsler_norm_g(&x, &unit(2)), NormValue::Infinite);
        assert!((finsler_norm_g(&x, &unit(5)) - 1.0).abs() < 1e-12);
        let v: [f64; 6] = std::array::from_fn(|i| unit(0)[i] + unit(1)[i]);
        assert!((finsler_norm_g(&x, &v) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn finsler_formula_matches_lp() {
        let g = carnot_fields();
        let mut gens = vec![
            &g[0] + &g[1],
            &g[0] - &g[1],
            &(-&g[0]) + &g[1],
            &(-&g[0]) - &g[1],
        ];
        for gi in &g[2..] {
            gens.push(gi.clone());
            gens.push(-gi);
        }
        let ball = VNorm::new(gens).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let x: [f64; 6] = std::array::from_fn(|_| rng.random_range(-2.0..2.0));
            let xi: [f64; 6] = std::array::from_fn(|_| rng.random_range(-2.0..2.0));
            let lp = minkowski_norm(&ball, &x, &xi).unwrap().value();
            let f = finsler_norm_g(&GroupElement(x), &xi);
            assert!((lp - f).abs() < 1e-9 * (1.0 + f), "{lp} {f}");
        }
    }

    fn rk4_exp(a: &[f64; 6], steps: usize) -> [f64; 6] {
        let g = carnot_fields();
        let rhs = |x: &[f64; 6]| -> [f64; 6] {
            let mut out = [0.0; 6];
            for (gi, c) in g.iter().zip(a) {
                for (o, v) in out.iter_mut().zip(gi.evaluate(x)) {
                    *o += c * v;
                }
            }
            out
        };
        let h = 1.0 / steps as f64;
        let mut x = [0.0; 6];
        for _ in 0..steps {
            let k1 = rhs(&x);
            let k2 = rhs(&std::array::from_fn(|i| x[i] + 0.5 * h * k1[i]));
            let k3 = rhs(&std::array::from_fn(|i| x[i] + 0.5 * h * k2[i]));
            let k4 = rhs(&std::array::from_fn(|i| x[i] + h * k3[i]));
            for i in 0..6 {
                x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
        x
    }

    #[test]
    fn exp_coords_matches_flow() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..10 {
            let a: [f64; 6] = std::array::from_fn(|_| rng.random_range(-1.5..1.5));
            let flow = rk4_exp(&a, 400);
            let e = exp_coords(&AlgebraVector(a));
            assert!(e.max_abs_diff(&GroupElement(flow)) < 1e-9);
        }
    }

    #[test]
    fn dilation_scales_sixth_coordinate() {
        let d = Dilation::new(2.0).unwrap();
        let x = GroupElement([0.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        assert_eq!(d.apply(&x).0[5], 32.0);
        assert_eq!(Dilation::new(1.0).unwrap().apply(&x), x);
        assert!(Dilation::new(0.0).is_err());
    }

    #[test]
    fn projection_examples() {
        assert_eq!(project_pi(&GroupElement::identity()), StateR4::default());
        assert_eq!(
            project_pi(&GroupElement([0.0, 1.0, 0.0, 0.0, 0.0, 0.0])),
            StateR4::new(0.0, 1.0, 0.0, 0.0)
        );
    }

    #[test]
    fn lift_of_chattering_geodesic() {
        let pair = make_admissible_endpoint(1.0, 0.0, 0.0, 0.0, 1.0).unwrap();
        let x0 = lift_point(&pair.q0, 0.25, -0.5);
        let lift = build_carnot_subfinsler_geodesic(&x0, &pair).unwrap();
        assert!(lift.projection_error < 1e-9, "{}", lift.projection_error);
        assert!(project_pi(&lift.x1).max_abs_diff(&pair.q1) < 1e-8);
        assert!((lift.length - lift.base.length).abs() < 1e-9);
        let switches: Vec<f64> = lift
            .curve
            .arcs
            .windows(2)
            .filter(|w| w[0].u2 != w[1].u2)
            .map(|w| w[1].t_start)
            .collect();
        assert_eq!(switches, lift.base.switch_times());
        let bad = lift_point(&pair.q1, 0.0, 0.0);
        assert!(build_carnot_subfinsler_geodesic(&bad, &pair).is_err());
    }

    #[test]
    fn zero_data_lift_is_a_subgroup() {
        let pair = make_admissible_endpoint(0.0, 0.0, 0.0, 0.0, 2.0).unwrap();
        let lift = build_carnot_subfinsler_geodesic(&GroupElement::identity(), &pair).unwrap();
        assert_eq!(lift.x1, exp_coords(&AlgebraVector([2.0, 0.0, 0.0, 0.0, 0.0, 0.0])));
        assert_eq!(lift.length, 2.0);
    }

    #[test]
    fn finsler_curve_is_unit_speed_and_hits_endpoints() {
        let p = CarnotFinslerParams::admissible(1.0, 0.0, 0.0, 0.0, 1.0).unwrap();
        let g = build_carnot_finsler_geodesic(&p).unwrap();
        assert!(g.endpoint_error < 1e-8, "{}", g.endpoint_error);
        assert!(g.max_speed_deviation(10_000) < 1e-9);
        let len = curve_length(&finsler_tangent_norm(), &g).unwrap();
        assert!((len - g.t1).abs() < 1e-9);
        assert_eq!(g.x_start, GroupElement([0.0, 0.0, -1.0, 0.0, 0.0, 0.0]));
        // the explicit curve is also the horizontal lift of the same controls
        let controls: Vec<_> = g.arcs.iter().map(|a| (a.duration, 1.0, f64::from(a.u))).collect();
        let lift = horizontal_lift(&controls, &g.x_start);
        assert!(lift.endpoint().max_abs_diff(&g.x_end) < 1e-8);
        let mut bad = p;
        bad.z1 += 0.1;
        assert!(matches!(
            build_carnot_finsler_geodesic(&bad),
            Err(Error::InadmissibleBoundary(_))
        ));
    }

    #[test]
    fn zero_finsler_data_gives_subgroup_moments() {
        let p = CarnotFinslerParams::admissible(0.0, 0.0, 0.0, 0.0, 3.0).unwrap();
        let g = build_carnot_finsler_geodesic(&p).unwrap();
        assert_eq!((g.a, g.b), (0.0, 0.0));
        assert_eq!(g.x_end, GroupElement([3.0, 0.0, 0.0, 0.0, 0.0, 0.0]));
    }

    #[test]
    fn exact_horizontality() {
        let x = GroupElement([rat(1, 2), rat(2, 3), rat(-1, 1), rat(0, 1), rat(5, 1), rat(1, 1)]);
        let xi = frame_vector(&x, &AlgebraVector([rat(1, 1), rat(-1, 1), rat(0, 1), rat(0, 1), rat(0, 1), rat(0, 1)]));
        assert!(is_horizontal_exact(&x, &xi));
    }
}
