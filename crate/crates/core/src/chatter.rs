//! Checkable hypotheses for chattering extremals of a polyhedral norm
//! `B(x) = conv(f_i(x))`: exposed edges, the seven-field independence
//! condition, the length-five brackets and the search for a Fuller covector.
//!
//! All field algebra is exact. Evaluation points are converted to rationals
//! exactly, so the linear algebra and the LPs below are exact as well.

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{rank, solve_affine};
use crate::lp::{LinearProgram, LpSolution, Relation};
use crate::poly::{lie_bracket, Poly, PolyVectorField};
use crate::scalar::{rat_from_f64, Field};

/// Minimal ambient dimension for the seven-field condition.
pub const REQUIRED_DIM: usize = 7;

/// The two vertices of an edge, as indices into a generator list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct EdgeSpec {
    pub vertex_index_a: usize,
    pub vertex_index_b: usize,
}

impl EdgeSpec {
    pub fn new(a: usize, b: usize) -> Result<Self> {
        if a == b {
            return Err(Error::InvalidInput(format!("edge needs two distinct vertices, got {a} twice")));
        }
        Ok(EdgeSpec {
            vertex_index_a: a,
            vertex_index_b: b,
        })
    }
}

fn exact_point(x0: &[f64]) -> Result<Vec<BigRational>> {
    x0.iter()
        .map(|&v| rat_from_f64(v).ok_or_else(|| Error::InvalidInput(format!("non-finite coordinate {v}"))))
        .collect()
}

fn dot(a: &[BigRational], b: &[BigRational]) -> BigRational {
    a.iter()
        .zip(b)
        .fold(BigRational::zero(), |s, (x, y)| s + x * y)
}

fn sub(a: &[BigRational], b: &[BigRational]) -> Vec<BigRational> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Maximal `m` with `<p, a - v> >= m` for the non-edge vertices `v`,
/// `<p, b - a> = 0` and `|p_j| <= bound`, over `p = base + sum c_k dirs_k`.
/// Returns `(m, p)`, or `None` when the constraints are infeasible.
fn separation_lp(
    vertices: &[Vec<BigRational>],
    edge: EdgeSpec,
    base: &[BigRational],
    dirs: &[Vec<BigRational>],
    bound: &BigRational,
) -> Result<Option<(BigRational, Vec<BigRational>)>> {
    let a = &vertices[edge.vertex_index_a];
    let b = &vertices[edge.vertex_index_b];
    let nk = dirs.len();
    // variables: c_0..c_{nk-1}, m
    let mut lp = LinearProgram::<BigRational>::new(nk + 1);
    for v in 0..=nk {
        lp.set_free(v);
    }
    let mut obj = vec![BigRational::zero(); nk + 1];
    obj[nk] = BigRational::one();
    lp.maximize(obj);
    for (i, v) in vertices.iter().enumerate() {
        if i == edge.vertex_index_a || i == edge.vertex_index_b {
            continue;
        }
        let d = sub(a, v);
        let mut row: Vec<BigRational> = dirs.iter().map(|n| dot(n, &d)).collect();
        row.push(-BigRational::one());
        lp.add_constraint(row, Relation::Ge, -dot(base, &d));
    }
    let e = sub(b, a);
    let mut row: Vec<BigRational> = dirs.iter().map(|n| dot(n, &e)).collect();
    row.push(BigRational::zero());
    lp.add_constraint(row, Relation::Eq, -dot(base, &e));
    for j in 0..base.len() {
        let mut row: Vec<BigRational> = dirs.iter().map(|n| n[j].clone()).collect();
        row.push(BigRational::zero());
        lp.add_constraint(row.clone(), Relation::Le, bound - &base[j]);
        lp.add_constraint(row, Relation::Ge, -bound - &base[j]);
    }
    match lp.solve()? {
        LpSolution::Optimal { x, value } => {
            let mut p = base.to_vec();
            for (c, n) in x.iter().zip(dirs) {
                for (pj, nj) in p.iter_mut().zip(n) {
                    *pj = pj.clone() + c * nj;
                }
            }
            Ok(Some((value, p)))
        }
        LpSolution::Infeasible => Ok(None),
        LpSolution::Unbounded => Err(Error::Convergence("separation LP unbounded despite box".into())),
    }
}

/// Exact separation margin of the edge line from the other vertices over
/// covectors with `|p_j| <= 1`; positive iff the edge is exposed.
pub fn edge_separation_margin(
    generators: &[PolyVectorField],
    edge: EdgeSpec,
    x0: &[f64],
) -> Result<BigRational> {
    let x = exact_point(x0)?;
    let vertices: Vec<Vec<BigRational>> = generators.iter().map(|g| g.evaluate_exact(&x)).collect();
    let n = x.len();
    let dirs: Vec<Vec<BigRational>> = (0..n)
        .map(|i| {
            let mut e = vec![BigRational::zero(); n];
            e[i] = BigRational::one();
            e
        })
        .collect();
    let zero = vec![BigRational::zero(); n];
    Ok(separation_lp(&vertices, edge, &zero, &dirs, &BigRational::one())?
        .map_or_else(BigRational::zero, |(m, _)| m))
}

/// Whether `conv(f_a(x0), f_b(x0))` is an exposed edge of `conv(f_i(x0))`.
pub fn is_exposed_edge(generators: &[PolyVectorField], edge: EdgeSpec, x0: &[f64]) -> Result<bool> {
    if generators.len() < 3 {
        return Err(Error::InvalidInput(format!(
            "an edge needs at least 3 generators, got {}",
            generators.len()
        )));
    }
    let n = generators.len();
    if edge.vertex_index_a >= n || edge.vertex_index_b >= n {
        return Err(Error::InvalidInput(format!("edge index out of range for {n} generators")));
    }
    let x = exact_point(x0)?;
    if generators[edge.vertex_index_a].evaluate_exact(&x) == generators[edge.vertex_index_b].evaluate_exact(&x) {
        return Ok(false);
    }
    Ok(edge_separation_margin(generators, edge, x0)? > BigRational::zero())
}

/// The seven fields of the Fuller-covector definition and the six
/// length-five brackets at `x0`.
#[derive(Debug, Clone, PartialEq)]
pub struct BracketBundle {
    /// `f2 - f1, [f1,f2], [f1,[f1,f2]], [f2,[f1,f2]], [f1,[f1,[f1,f2]]],
    /// [f2,[f1,[f1,f2]]], [f2,[f2,[f1,f2]]]`.
    pub seven_fields: Vec<PolyVectorField>,
    pub x0: Vec<BigRational>,
    pub alpha: Vec<BigRational>,
    pub beta: Vec<BigRational>,
    pub gamma: Vec<BigRational>,
    pub delta: Vec<BigRational>,
    pub epsilon: Vec<BigRational>,
    pub zeta: Vec<BigRational>,
}

impl BracketBundle {
    pub fn dimension(&self) -> usize {
        self.x0.len()
    }

    /// The seven fields evaluated at `x0`.
    pub fn seven_at_x0(&self) -> Vec<Vec<BigRational>> {
        self.seven_fields.iter().map(|f| f.evaluate_exact(&self.x0)).collect()
    }

    /// The twelve vectors that a Fuller covector must annihilate:
    /// the seven fields and `alpha, gamma, delta, epsilon, zeta`.
    pub fn orthogonality_rows(&self) -> Vec<Vec<BigRational>> {
        let mut rows = self.seven_at_x0();
        rows.extend([
            self.alpha.clone(),
            self.gamma.clone(),
            self.delta.clone(),
            self.epsilon.clone(),
            self.zeta.clone(),
        ]);
        rows
    }
}

/// Computes all brackets exactly, with `f = f1 + f2`, `g = f2 - f1`.
pub fn compute_bundle(f1: &PolyVectorField, f2: &PolyVectorField, x0: &[f64]) -> Result<BracketBundle> {
    if f1.dimension() != f2.dimension() || f1.dimension() != x0.len() {
        return Err(Error::DimensionMismatch {
            expected: f1.dimension(),
            found: if f1.dimension() != f2.dimension() { f2.dimension() } else { x0.len() },
        });
    }
    let x = exact_point(x0)?;
    let b12 = lie_bracket(f1, f2)?;
    let b112 = lie_bracket(f1, &b12)?;
    let b212 = lie_bracket(f2, &b12)?;
    let seven = vec![
        f2 - f1,
        b12.clone(),
        b112.clone(),
        b212.clone(),
        lie_bracket(f1, &b112)?,
        lie_bracket(f2, &b112)?,
        lie_bracket(f2, &b212)?,
    ];
    let f = f1 + f2;
    let g = f2 - f1;
    let fg = lie_bracket(&f, &g)?;
    let ffg = lie_bracket(&f, &fg)?;
    let gfg = lie_bracket(&g, &fg)?;
    let fffg = lie_bracket(&f, &ffg)?;
    let gffg = lie_bracket(&g, &ffg)?;
    let ggfg = lie_bracket(&g, &gfg)?;
    let at = |h: PolyVectorField| h.evaluate_exact(&x);
    Ok(BracketBundle {
        seven_fields: seven,
        alpha: at(lie_bracket(&f, &fffg)?),
        beta: at(lie_bracket(&g, &fffg)?),
        gamma: at(lie_bracket(&f, &gffg)?),
        delta: at(lie_bracket(&g, &gffg)?),
        epsilon: at(lie_bracket(&f, &ggfg)?),
        zeta: at(lie_bracket(&g, &ggfg)?),
        x0: x,
    })
}

/// Whether the seven fields are linearly independent at `x0`.
pub fn check_independence(bundle: &BracketBundle) -> Result<bool> {
    let dim = bundle.dimension();
    if dim < REQUIRED_DIM {
        return Err(Error::DimensionTooSmall {
            dim,
            required: REQUIRED_DIM,
        });
    }
    Ok(rank(bundle.seven_at_x0()) == REQUIRED_DIM)
}

/// A covector certifying the hypotheses of the chattering theorem.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FullerCovectorCertificate {
    pub x0: Vec<f64>,
    pub edge: EdgeSpec,
    pub p0: Vec<f64>,
    /// Exact components of `p0` as `num/den` strings.
    pub p0_exact: Vec<String>,
    /// `<p0, f_a> - max over the other vertices of <p0, v>`, with `|p0_j| <= bound`.
    pub separation_margin: f64,
    pub bound: f64,
    /// `max |<p0, h>|` over the twelve annihilated vectors.
    pub orthogonality_residual: f64,
    /// `<p0, beta>`, normalized to `-1`.
    pub beta_pairing: f64,
    pub rank7: bool,
    /// Rank of the twelve annihilated vectors at `x0`.
    pub equality_rank: usize,
    /// Dimension of the annihilator of those vectors.
    pub covector_space_dimension: usize,
}

/// Solves the equalities exactly, then maximizes the separation margin.
pub fn find_fuller_covector(
    generators: &[PolyVectorField],
    edge: EdgeSpec,
    bundle: &BracketBundle,
) -> Result<FullerCovectorCertificate> {
    let x0f: Vec<f64> = bundle.x0.iter().map(Field::to_f64).collect();
    if !is_exposed_edge(generators, edge, &x0f)? {
        return Err(Error::NotFound("exposed edge".into()));
    }
    if !check_independence(bundle)? {
        return Err(Error::NotFound("independence".into()));
    }
    let n = bundle.dimension();
    let mut rows = bundle.orthogonality_rows();
    let equality_rank = rank(rows.clone());
    let mut rhs = vec![BigRational::zero(); rows.len()];
    rows.push(bundle.beta.clone());
    rhs.push(-BigRational::one());
    let Some((base, dirs)) = solve_affine(&rows, &rhs) else {
        return Err(Error::NotFound("orthogonality".into()));
    };
    let vertices: Vec<Vec<BigRational>> = generators.iter().map(|g| g.evaluate_exact(&bundle.x0)).collect();
    let max_base = base.iter().map(|v| v.abs()).fold(BigRational::one(), |m, v| if v > m { v } else { m });
    let Some((margin, p)) = separation_lp(&vertices, edge, &base, &dirs, &max_base)? else {
        return Err(Error::NotFound("separation".into()));
    };
    if margin <= BigRational::zero() {
        return Err(Error::NotFound("separation".into()));
    }
    let p0: Vec<f64> = p.iter().map(Field::to_f64).collect();
    let ortho = bundle
        .orthogonality_rows()
        .iter()
        .map(|r| dot(&p, r).abs())
        .fold(BigRational::zero(), |m, v| if v > m { v } else { m });
    Ok(FullerCovectorCertificate {
        x0: x0f,
        edge,
        p0_exact: p.iter().map(ToString::to_string).collect(),
        p0,
        separation_margin: margin.to_f64(),
        bound: max_base.to_f64(),
        orthogonality_residual: ortho.to_f64(),
        beta_pairing: dot(&p, &bundle.beta).to_f64(),
        rank7: true,
        equality_rank,
        covector_space_dimension: n - equality_rank,
    })
}

/// Independent floating-point re-check of a certificate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertificateCheck {
    pub orthogonality_residual: f64,
    pub beta_pairing: f64,
    pub separation_margin: f64,
    pub edge_residual: f64,
    pub rank7: bool,
    pub passed: bool,
}

/// Re-evaluates every recorded condition from `p0` alone, at tolerance `tol`.
pub fn verify_certificate(
    cert: &FullerCovectorCertificate,
    generators: &[PolyVectorField],
    bundle: &BracketBundle,
    tol: f64,
) -> Result<CertificateCheck> {
    let p = &cert.p0;
    let fdot = |v: &[f64]| v.iter().zip(p).map(|(a, b)| a * b).sum::<f64>();
    let to_f = |v: &[BigRational]| v.iter().map(Field::to_f64).collect::<Vec<f64>>();
    let orthogonality_residual = bundle
        .orthogonality_rows()
        .iter()
        .map(|r| fdot(&to_f(r)).abs())
        .fold(0.0, f64::max);
    let beta_pairing = fdot(&to_f(&bundle.beta));
    let verts: Vec<Vec<f64>> = generators.iter().map(|g| g.evaluate(&cert.x0)).collect();
    let (ia, ib) = (cert.edge.vertex_index_a, cert.edge.vertex_index_b);
    let on_edge = fdot(&verts[ia]);
    let edge_residual = (fdot(&verts[ib]) - on_edge).abs();
    let rest = verts
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != ia && *i != ib)
        .map(|(_, v)| fdot(v))
        .fold(f64::NEG_INFINITY, f64::max);
    let separation_margin = on_edge - rest;
    let rank7 = check_independence(bundle)?;
    Ok(CertificateCheck {
        passed: orthogonality_residual <= tol
            && (beta_pairing + 1.0).abs() <= tol
            && edge_residual <= tol
            && separation_margin > 0.0
            && rank7,
        orthogonality_residual,
        beta_pairing,
        separation_margin,
        edge_residual,
        rank7,
    })
}

/// `<p, h(x)>` as a polynomial in `(x_1..x_n, p_1..p_n)`.
pub fn momentum_hamiltonian(h: &PolyVectorField) -> Poly {
    let n = h.dimension();
    h.components()
        .iter()
        .enumerate()
        .fold(Poly::zero(), |acc, (j, c)| &acc + &(&Poly::var(n + j) * c))
}

/// `{a, b} = sum_j da/dp_j db/dx_j - da/dx_j db/dp_j` on `T*R^n`.
pub fn poisson_bracket(a: &Poly, b: &Poly, n: usize) -> Poly {
    (0..n).fold(Poly::zero(), |acc, j| {
        let t = &(&a.derivative(n + j) * &b.derivative(j)) - &(&a.derivative(j) * &b.derivative(n + j));
        &acc + &t
    })
}
