//! Polyhedral (sub-)Finsler norms in vertex and half-space form, and curve length.
//!
//! A [`VNorm`] takes the unit ball to be the convex hull of its generator
//! fields and evaluates the Minkowski functional by LP. An [`HNorm`] restricts
//! to the distribution cut out by its constraint forms and takes the maximum
//! of its bounding forms there. The two are different objects in general and
//! nothing here converts one into the other.

use num_rational::BigRational;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::lp::{LinearProgram, LpSolution, Relation};
use crate::poly::{Poly, PolyVectorField};
use crate::scalar::Field;

/// Distribution membership cutoff: `|zeta_i[xi]| <= DELTA_TOL * (1 + |xi|)`.
pub const DELTA_TOL: f64 = 1e-10;

/// A norm value in `[0, +inf]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub enum NormValue {
    Finite(f64),
    Infinite,
}

impl NormValue {
    pub fn value(self) -> f64 {
        match self {
            NormValue::Finite(v) => v,
            NormValue::Infinite => f64::INFINITY,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, NormValue::Finite(_))
    }
}

impl Serialize for NormValue {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            NormValue::Finite(v) => s.serialize_f64(*v),
            NormValue::Infinite => s.serialize_str("inf"),
        }
    }
}

/// A 1-form with polynomial coefficients on `dx_1, ..., dx_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct OneForm {
    coefficients: Vec<Poly>,
}

impl OneForm {
    pub fn new(coefficients: Vec<Poly>) -> Self {
        OneForm { coefficients }
    }

    pub fn coefficients(&self) -> &[Poly] {
        &self.coefficients
    }

    pub fn dimension(&self) -> usize {
        self.coefficients.len()
    }

    /// `lambda(x)[xi]`.
    pub fn apply(&self, x: &[f64], xi: &[f64]) -> f64 {
        self.coefficients
            .iter()
            .zip(xi)
            .map(|(c, v)| c.eval(x) * v)
            .sum()
    }
}

/// Vertex representation: `B(x) = conv(f_1(x), ..., f_N(x))`.
#[derive(Debug, Clone, PartialEq)]
pub struct VNorm {
    generators: Vec<PolyVectorField>,
}

impl VNorm {
    pub fn new(generators: Vec<PolyVectorField>) -> Result<Self> {
        let Some(first) = generators.first() else {
            return Err(Error::InvalidInput("a norm needs at least one generator".into()));
        };
        let n = first.dimension();
        if let Some(bad) = generators.iter().find(|g| g.dimension() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: bad.dimension(),
            });
        }
        Ok(VNorm { generators })
    }

    pub fn generators(&self) -> &[PolyVectorField] {
        &self.generators
    }

    pub fn dimension(&self) -> usize {
        self.generators[0].dimension()
    }

    /// Generators evaluated at `x`.
    pub fn vertices_at(&self, x: &[f64]) -> Vec<Vec<f64>> {
        self.generators.iter().map(|g| g.evaluate(x)).collect()
    }

    pub fn vertices_at_exact(&self, x: &[BigRational]) -> Vec<Vec<BigRational>> {
        self.generators.iter().map(|g| g.evaluate_exact(x)).collect()
    }
}

/// Half-space representation: `B(x) = {xi : zeta_i[xi] = 0, lambda_j[xi] <= 1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct HNorm {
    constraint_forms: Vec<OneForm>,
    bounding_forms: Vec<OneForm>,
}

impl HNorm {
    pub fn new(constraint_forms: Vec<OneForm>, bounding_forms: Vec<OneForm>) -> Result<Self> {
        let Some(first) = bounding_forms.first() else {
            return Err(Error::InvalidInput("a norm needs at least one bounding form".into()));
        };
        let n = first.dimension();
        if let Some(bad) = constraint_forms
            .iter()
            .chain(&bounding_forms)
            .find(|f| f.dimension() != n)
        {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: bad.dimension(),
            });
        }
        Ok(HNorm {
            constraint_forms,
            bounding_forms,
        })
    }

    pub fn constraint_forms(&self) -> &[OneForm] {
        &self.constraint_forms
    }

    pub fn bounding_forms(&self) -> &[OneForm] {
        &self.bounding_forms
    }

    pub fn dimension(&self) -> usize {
        self.bounding_forms[0].dimension()
    }

    /// Whether `B(x)` is bounded: every coordinate stays bounded over it.
    pub fn is_compact_at(&self, x: &[f64]) -> Result<bool> {
        let n = self.dimension();
        for k in 0..n {
            for sign in [1.0, -1.0] {
                let mut lp = LinearProgram::<f64>::new(n);
                (0..n).for_each(|j| lp.set_free(j));
                let mut obj = vec![0.0; n];
                obj[k] = sign;
                lp.maximize(obj);
                for z in &self.constraint_forms {
                    let row = z.coefficients.iter().map(|c| c.eval(x)).collect();
                    lp.add_constraint(row, Relation::Eq, 0.0);
                }
                for l in &self.bounding_forms {
                    let row = l.coefficients.iter().map(|c| c.eval(x)).collect();
                    lp.add_constraint(row, Relation::Le, 1.0);
                }
                if !lp.solve()?.is_optimal() {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }
}

/// Anything that assigns a norm value to a tangent vector at a point.
pub trait TangentNorm {
    fn norm_at(&self, x: &[f64], xi: &[f64]) -> Result<NormValue>;
}

impl TangentNorm for VNorm {
    fn norm_at(&self, x: &[f64], xi: &[f64]) -> Result<NormValue> {
        minkowski_norm(self, x, xi)
    }
}

impl TangentNorm for HNorm {
    fn norm_at(&self, x: &[f64], xi: &[f64]) -> Result<NormValue> {
        Ok(dual_norm(self, x, xi))
    }
}

/// Adapter turning a plain function into a [`TangentNorm`].
pub struct FnNorm<F>(pub F);

impl<F: Fn(&[f64], &[f64]) -> NormValue> TangentNorm for FnNorm<F> {
    fn norm_at(&self, x: &[f64], xi: &[f64]) -> Result<NormValue> {
        Ok((self.0)(x, xi))
    }
}

/// Whether `0` is in the relative interior of `conv(vertices)`: maximize `t`
/// with `lambda_i >= t`, `sum lambda = 1`, `sum lambda_i v_i = 0`.
pub fn origin_in_relative_interior<T: Field>(vertices: &[Vec<T>]) -> Result<bool> {
    let k = vertices.len();
    let n = vertices.first().map_or(0, Vec::len);
    // variables: lambda_1..lambda_k, t (free)
    let mut lp = LinearProgram::<T>::new(k + 1);
    lp.set_free(k);
    let mut obj = vec![T::zero(); k + 1];
    obj[k] = T::one();
    lp.maximize(obj);
    for i in 0..k {
        let mut row = vec![T::zero(); k + 1];
        row[i] = T::one();
        row[k] = -T::one();
        lp.add_constraint(row, Relation::Ge, T::zero());
    }
    let mut sum = vec![T::one(); k + 1];
    sum[k] = T::zero();
    lp.add_constraint(sum, Relation::Eq, T::one());
    for d in 0..n {
        let mut row: Vec<T> = vertices.iter().map(|v| v[d].clone()).collect();
        row.push(T::zero());
        lp.add_constraint(row, Relation::Eq, T::zero());
    }
    Ok(match lp.solve()? {
        LpSolution::Optimal { x, .. } => x[k].is_positive(),
        _ => false,
    })
}

/// Minkowski functional of `conv(vertices)` at `xi`: `min sum c_i` with
/// `sum c_i v_i = xi`, `c >= 0`; `None` when infeasible.
pub fn minkowski_lp<T: Field>(vertices: &[Vec<T>], xi: &[T]) -> Result<Option<T>> {
    let k = vertices.len();
    let mut lp = LinearProgram::<T>::new(k);
    lp.minimize(vec![T::one(); k]);
    for (d, target) in xi.iter().enumerate() {
        let row = vertices.iter().map(|v| v[d].clone()).collect();
        lp.add_constraint(row, Relation::Eq, target.clone());
    }
    match lp.solve()? {
        LpSolution::Optimal { value, .. } => Ok(Some(value)),
        LpSolution::Infeasible => Ok(None),
        LpSolution::Unbounded => Err(Error::Convergence(
            "Minkowski LP unbounded; coefficients are non-negative so this is a solver fault".into(),
        )),
    }
}

fn check_point(n: usize, x: usize, xi: usize) -> Result<()> {
    for found in [x, xi] {
        if found != n {
            return Err(Error::DimensionMismatch { expected: n, found });
        }
    }
    Ok(())
}

/// Norm of `xi` at `x` for the vertex representation.
pub fn minkowski_norm(norm: &VNorm, x: &[f64], xi: &[f64]) -> Result<NormValue> {
    check_point(norm.dimension(), x.len(), xi.len())?;
    let vertices = norm.vertices_at(x);
    if !origin_in_relative_interior(&vertices)? {
        return Err(Error::DegenerateBall);
    }
    Ok(match minkowski_lp(&vertices, xi)? {
        Some(v) => NormValue::Finite(v.max(0.0)),
        None => NormValue::Infinite,
    })
}

/// Exact rational evaluation of the vertex-representation norm; `None` is `+inf`.
pub fn minkowski_norm_exact(
    norm: &VNorm,
    x: &[BigRational],
    xi: &[BigRational],
) -> Result<Option<BigRational>> {
    check_point(norm.dimension(), x.len(), xi.len())?;
    let vertices = norm.vertices_at_exact(x);
    if !origin_in_relative_interior(&vertices)? {
        return Err(Error::DegenerateBall);
    }
    minkowski_lp(&vertices, xi)
}

fn euclid(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

/// Norm of `xi` at `x` for the half-space representation.
pub fn dual_norm(norm: &HNorm, x: &[f64], xi: &[f64]) -> NormValue {
    let tol = DELTA_TOL * (1.0 + euclid(xi));
    if norm
        .constraint_forms
        .iter()
        .any(|z| z.apply(x, xi).abs() > tol)
    {
        return NormValue::Infinite;
    }
    let m = norm
        .bounding_forms
        .iter()
        .map(|l| l.apply(x, xi))
        .fold(f64::NEG_INFINITY, f64::max);
    NormValue::Finite(m.max(0.0))
}

/// `max(|xi2|, |xi4|) + |xi1 - y xi4| + |xi3 - x^2/2 xi4|` at `q = (x, y, z, w)`.
pub fn explicit_r4_finsler_norm(q: &[f64], xi: &[f64]) -> f64 {
    let (x, y) = (q[0], q[1]);
    xi[1].abs().max(xi[3].abs()) + (xi[0] - y * xi[3]).abs() + (xi[2] - 0.5 * x * x * xi[3]).abs()
}

/// A curve made of smooth pieces, each queried with its own index so that
/// one-sided velocities at the joins are unambiguous.
pub trait PiecewiseCurve {
    /// Time intervals `[t0, t1]` of the smooth pieces, in order.
    fn pieces(&self) -> Vec<(f64, f64)>;
    fn position(&self, piece: usize, t: f64) -> Vec<f64>;
    fn velocity(&self, piece: usize, t: f64) -> Vec<f64>;
}

const SIMPSON_TOL: f64 = 1e-12;
const SIMPSON_DEPTH: u32 = 40;

fn speed<N: TangentNorm + ?Sized, C: PiecewiseCurve + ?Sized>(
    norm: &N,
    curve: &C,
    piece: usize,
    t: f64,
) -> Result<f64> {
    let v = norm.norm_at(&curve.position(piece, t), &curve.velocity(piece, t))?;
    match v {
        NormValue::Finite(s) => Ok(s),
        NormValue::Infinite => Err(Error::InfiniteLength { time: t }),
    }
}

/// `integral ||x'(t)|| dt`.
///
/// Pieces on which the speed is the same at both ends and the midpoint
/// (constant-control arcs) are integrated exactly as `duration * speed`;
/// other pieces use adaptive Simpson quadrature. The speed is only sampled
/// at interior points of each piece.
pub fn curve_length<N, C>(norm: &N, curve: &C) -> Result<f64>
where
    N: TangentNorm + ?Sized,
    C: PiecewiseCurve + ?Sized,
{
    let mut total = 0.0;
    for (i, (a, b)) in curve.pieces().into_iter().enumerate() {
        let d = b - a;
        if d <= 0.0 {
            continue;
        }
        let probe = [a + 0.25 * d, a + 0.5 * d, a + 0.75 * d];
        let s: Vec<f64> = probe
            .iter()
            .map(|&t| speed(norm, curve, i, t))
            .collect::<Result<_>>()?;
        let scale = s.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
        if (s[0] - s[1]).abs() <= 1e-14 * scale && (s[2] - s[1]).abs() <= 1e-14 * scale {
            total += d * s[1];
        } else {
            // open-interval Simpson: nudge endpoints inward by a negligible amount
            let eps = d * 1e-15;
            let (lo, hi) = (a + eps, b - eps);
            let f = |t: f64| speed(norm, curve, i, t);
            let (fa, fm, fb) = (f(lo)?, f(0.5 * (lo + hi))?, f(hi)?);
            let whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
            total += simpson(&f, lo, hi, fa, fm, fb, whole, SIMPSON_TOL * d.max(1.0), SIMPSON_DEPTH)?;
        }
    }
    Ok(total)
}

#[allow(clippy::too_many_arguments)]
fn simpson<F: Fn(f64) -> Result<f64>>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm)?, f(rm)?);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    Ok(simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?
        + simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?)
}
