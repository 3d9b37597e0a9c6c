//! Small dense linear algebra over [`Field`]: row reduction, rank, solves.

use nalgebra::DMatrix;

use crate::scalar::Field;

/// Reduced row echelon form. Returns the reduced matrix and the pivot columns.
pub fn rref<T: Field>(mut m: Vec<Vec<T>>) -> (Vec<Vec<T>>, Vec<usize>) {
    let rows = m.len();
    let cols = m.first().map_or(0, Vec::len);
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        // partial pivoting on magnitude
        let best = (r..rows)
            .max_by(|&a, &b| {
                m[a][c]
                    .magnitude()
                    .partial_cmp(&m[b][c].magnitude())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .unwrap();
        if m[best][c].is_negligible() {
            continue;
        }
        m.swap(r, best);
        let p = m[r][c].clone();
        for v in m[r].iter_mut() {
            *v = v.clone() / p.clone();
        }
        for i in 0..rows {
            if i == r || m[i][c].is_zero() {
                continue;
            }
            let factor = m[i][c].clone();
            for j in 0..cols {
                let delta = factor.clone() * m[r][j].clone();
                m[i][j] = m[i][j].clone() - delta;
            }
        }
        pivots.push(c);
        r += 1;
    }
    (m, pivots)
}

pub fn rank<T: Field>(m: Vec<Vec<T>>) -> usize {
    rref(m).1.len()
}

/// Numerical rank: singular values above `rel_tol * sigma_max`.
pub fn rank_svd(rows: &[Vec<f64>], rel_tol: f64) -> usize {
    let nr = rows.len();
    let nc = rows.first().map_or(0, Vec::len);
    if nr == 0 || nc == 0 {
        return 0;
    }
    let m = DMatrix::from_fn(nr, nc, |i, j| rows[i][j]);
    let sv = m.singular_values();
    let smax = sv.iter().cloned().fold(0.0_f64, f64::max);
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * smax).count()
}

/// General solution of `A x = b`: a particular solution and a basis of the
/// null space of `A`, or `None` when the system is inconsistent.
pub fn solve_affine<T: Field>(a: &[Vec<T>], b: &[T]) -> Option<(Vec<T>, Vec<Vec<T>>)> {
    let n = a.first().map_or(0, Vec::len);
    let aug: Vec<Vec<T>> = a
        .iter()
        .zip(b)
        .map(|(row, bi)| {
            let mut r = row.clone();
            r.push(bi.clone());
            r
        })
        .collect();
    let (red, pivots) = rref(aug);
    if pivots.contains(&n) {
        return None;
    }
    let mut particular = vec![T::zero(); n];
    for (r, &c) in pivots.iter().enumerate() {
        particular[c] = red[r][n].clone();
    }
    let free: Vec<usize> = (0..n).filter(|c| !pivots.contains(c)).collect();
    let basis = free
        .iter()
        .map(|&fc| {
            let mut v = vec![T::zero(); n];
            v[fc] = T::one();
            for (r, &c) in pivots.iter().enumerate() {
                v[c] = -red[r][fc].clone();
            }
            v
        })
        .collect();
    Some((particular, basis))
}

/// Solves the 2x2 system `[a b; c d] x = r`.
pub fn solve2(a: f64, b: f64, c: f64, d: f64, r: [f64; 2]) -> Option<[f64; 2]> {
    let det = a * d - b * c;
    if det.abs() < 1e-300 {
        return None;
    }
    Some([(r[0] * d - b * r[1]) / det, (a * r[1] - c * r[0]) / det])
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}
