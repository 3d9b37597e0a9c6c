//! Exact polynomial vector fields and their Lie brackets.
//!
//! Bracket convention: `[f, g]^k = sum_j (f_j * d_j g^k - g_j * d_j f^k)`.
//! With the drift and control fields of the four-dimensional example this
//! gives `[f1, f2] = f3 = (-1, 0, 0, 0)`, which is the orientation the
//! commutation tables in this crate are written in.

mod parse;
mod polynomial;

use std::ops::{Add, Neg, Sub};

use num_rational::BigRational;

pub use parse::{format_field, parse_field, parse_poly};
pub use polynomial::{Monomial, Poly};

use crate::error::{Error, Result};
use crate::linalg;

/// A point at which fields are evaluated: exact rationals or floats.
#[derive(Debug, Clone, PartialEq)]
pub enum Point {
    Exact(Vec<BigRational>),
    Real(Vec<f64>),
}

impl Point {
    pub fn len(&self) -> usize {
        match self {
            Point::Exact(v) => v.len(),
            Point::Real(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn to_f64(&self) -> Vec<f64> {
        match self {
            Point::Exact(v) => v.iter().map(crate::scalar::Field::to_f64).collect(),
            Point::Real(v) => v.clone(),
        }
    }
}

impl From<Vec<f64>> for Point {
    fn from(v: Vec<f64>) -> Self {
        Point::Real(v)
    }
}

impl From<Vec<BigRational>> for Point {
    fn from(v: Vec<BigRational>) -> Self {
        Point::Exact(v)
    }
}

/// A vector field on R^n with polynomial components.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PolyVectorField {
    components: Vec<Poly>,
}

impl PolyVectorField {
    pub fn new(components: Vec<Poly>) -> Self {
        PolyVectorField { components }
    }

    pub fn zero(dimension: usize) -> Self {
        PolyVectorField {
            components: vec![Poly::zero(); dimension],
        }
    }

    /// The constant coordinate field `d/dx_index`.
    pub fn coordinate(dimension: usize, index: usize) -> Self {
        let mut f = Self::zero(dimension);
        f.components[index] = Poly::from_int(1);
        f
    }

    pub fn dimension(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[Poly] {
        &self.components
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(Poly::is_zero)
    }

    pub fn scale(&self, c: &BigRational) -> Self {
        PolyVectorField::new(self.components.iter().map(|p| p.scale(c)).collect())
    }

    /// Multiplies every component by the function `p`.
    pub fn mul_poly(&self, p: &Poly) -> Self {
        PolyVectorField::new(self.components.iter().map(|c| c * p).collect())
    }

    /// Floating evaluation.
    pub fn evaluate(&self, x: &[f64]) -> Vec<f64> {
        self.components.iter().map(|p| p.eval(x)).collect()
    }

    /// Exact evaluation at a rational point.
    pub fn evaluate_exact(&self, x: &[BigRational]) -> Vec<BigRational> {
        self.components.iter().map(|p| p.eval_exact(x)).collect()
    }

    /// Directional derivative of every component along `v`: `(v . grad) self`.
    pub fn derivative_along(&self, v: &PolyVectorField) -> PolyVectorField {
        let comps = self
            .components
            .iter()
            .map(|c| {
                v.components
                    .iter()
                    .enumerate()
                    .filter(|(_, vj)| !vj.is_zero())
                    .fold(Poly::zero(), |acc, (j, vj)| &acc + &(vj * &c.derivative(j)))
            })
            .collect();
        PolyVectorField::new(comps)
    }

    fn check_dim(&self, other: &PolyVectorField) -> Result<()> {
        if self.dimension() != other.dimension() {
            return Err(Error::DimensionMismatch {
                expected: self.dimension(),
                found: other.dimension(),
            });
        }
        Ok(())
    }
}

impl Add for &PolyVectorField {
    type Output = PolyVectorField;
    fn add(self, rhs: &PolyVectorField) -> PolyVectorField {
        assert_eq!(self.dimension(), rhs.dimension(), "field dimensions differ");
        PolyVectorField::new(
            self.components
                .iter()
                .zip(&rhs.components)
                .map(|(a, b)| a + b)
                .collect(),
        )
    }
}

impl Sub for &PolyVectorField {
    type Output = PolyVectorField;
    fn sub(self, rhs: &PolyVectorField) -> PolyVectorField {
        assert_eq!(self.dimension(), rhs.dimension(), "field dimensions differ");
        PolyVectorField::new(
            self.components
                .iter()
                .zip(&rhs.components)
                .map(|(a, b)| a - b)
                .collect(),
        )
    }
}

impl Neg for &PolyVectorField {
    type Output = PolyVectorField;
    fn neg(self) -> PolyVectorField {
        PolyVectorField::new(self.components.iter().map(|a| -a).collect())
    }
}

/// Exact Lie bracket `[f, g]`.
pub fn lie_bracket(f: &PolyVectorField, g: &PolyVectorField) -> Result<PolyVectorField> {
    f.check_dim(g)?;
    Ok(&g.derivative_along(f) - &f.derivative_along(g))
}

/// Exact equality of two fields, component by component.
pub fn verify_identity(lhs: &PolyVectorField, rhs: &PolyVectorField) -> bool {
    lhs == rhs
}

/// Rank of the matrix whose rows are the fields evaluated at `x`.
///
/// Rational points use exact elimination; floating points count singular
/// values above `1e-10 * sigma_max`.
pub fn rank_at_point(fields: &[PolyVectorField], x: &Point) -> Result<usize> {
    if let Some(first) = fields.first() {
        for f in fields {
            first.check_dim(f)?;
        }
        if first.dimension() != x.len() {
            return Err(Error::DimensionMismatch {
                expected: first.dimension(),
                found: x.len(),
            });
        }
    }
    Ok(match x {
        Point::Exact(p) => linalg::rank(fields.iter().map(|f| f.evaluate_exact(p)).collect()),
        Point::Real(p) => {
            let rows: Vec<Vec<f64>> = fields.iter().map(|f| f.evaluate(p)).collect();
            linalg::rank_svd(&rows, 1e-10)
        }
    })
}

/// A random polynomial field with `terms` monomials per component of degree
/// at most `max_degree` and small rational coefficients.
pub fn random_field<R: rand::Rng>(rng: &mut R, dim: usize, max_degree: u32, terms: usize) -> PolyVectorField {
    let comps = (0..dim)
        .map(|_| {
            Poly::from_terms((0..terms).map(|_| {
                let mut e = vec![0u32; dim];
                for _ in 0..rng.random_range(0..=max_degree) {
                    e[rng.random_range(0..dim)] += 1;
                }
                let c = BigRational::new(rng.random_range(-5i64..=5).into(), rng.random_range(1i64..=4).into());
                (Monomial::new(e), c)
            }))
        })
        .collect();
    PolyVectorField::new(comps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rat;
    use crate::systems::{carnot_fields, r4_fields};

    #[test]
    fn bracket_dimension_mismatch() {
        let a = PolyVectorField::zero(2);
        let b = PolyVectorField::zero(3);
        assert!(matches!(
            lie_bracket(&a, &b),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn r4_fields_evaluate_as_written() {
        let f = r4_fields();
        let q = [2.0, 3.0, 0.7, -1.1];
        assert_eq!(f[1].evaluate(&q), vec![0.0, 1.0, 0.0, 0.0]);
        assert_eq!(f[0].evaluate(&q), vec![3.0, 0.0, 2.0, 1.0]);
        let qe = vec![rat(2, 1), rat(3, 1), rat(5, 7), rat(-1, 3)];
        assert_eq!(
            f[0].evaluate_exact(&qe),
            vec![rat(3, 1), rat(0, 1), rat(2, 1), rat(1, 1)]
        );
    }

    #[test]
    fn g6_is_constant() {
        let g = carnot_fields();
        let x = [0.3, -1.2, 4.0, 2.0, 0.1, 9.0];
        assert_eq!(g[5].evaluate(&x), vec![0.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn identities_f4_f5() {
        let f = r4_fields();
        let x = Poly::var(0);
        let y = Poly::var(1);
        assert!(verify_identity(&f[3], &f[5].mul_poly(&x)));
        assert!(verify_identity(&f[4], &f[5].mul_poly(&y)));
        assert!(!verify_identity(&f[3], &f[5].mul_poly(&y)));
    }

    #[test]
    fn rank_examples() {
        let f = r4_fields();
        let span = [f[0].clone(), f[1].clone(), f[2].clone(), f[5].clone()];
        let q = Point::Exact(vec![rat(3, 2), rat(-2, 1), rat(7, 1), rat(1, 5)]);
        assert_eq!(rank_at_point(&span, &q).unwrap(), 4);
        let qr = Point::Real(vec![0.31, -2.2, 1.0, 4.0]);
        assert_eq!(rank_at_point(&span, &qr).unwrap(), 4);
        let pair = [f[0].clone(), f[0].scale(&rat(2, 1))];
        assert_eq!(rank_at_point(&pair, &q).unwrap(), 1);
        assert_eq!(rank_at_point(&pair, &qr).unwrap(), 1);
    }
}
