//! Dense two-phase primal simplex with Bland's rule.
//!
//! Written against [`Field`] so the same code runs in `f64` for everyday
//! queries and in exact rationals for certification runs. Problems here are
//! tiny (at most a few dozen columns), so a full tableau is the simplest
//! robust choice.

use crate::error::{Error, Result};
use crate::scalar::Field;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpSolution<T> {
    Optimal { x: Vec<T>, value: T },
    Infeasible,
    Unbounded,
}

impl<T> LpSolution<T> {
    pub fn is_optimal(&self) -> bool {
        matches!(self, LpSolution::Optimal { .. })
    }
}

/// `minimize c.x` subject to linear rows; variables are non-negative unless
/// marked free.
#[derive(Debug, Clone)]
pub struct LinearProgram<T> {
    free: Vec<bool>,
    objective: Vec<T>,
    maximizing: bool,
    rows: Vec<(Vec<T>, Relation, T)>,
}

const MAX_PIVOTS: usize = 50_000;

impl<T: Field> LinearProgram<T> {
    pub fn new(num_vars: usize) -> Self {
        LinearProgram {
            free: vec![false; num_vars],
            objective: vec![T::zero(); num_vars],
            maximizing: false,
            rows: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.free.len()
    }

    pub fn set_free(&mut self, var: usize) {
        self.free[var] = true;
    }

    pub fn minimize(&mut self, objective: Vec<T>) {
        assert_eq!(objective.len(), self.num_vars());
        self.objective = objective;
        self.maximizing = false;
    }

    pub fn maximize(&mut self, objective: Vec<T>) {
        self.minimize(objective.into_iter().map(|c| -c).collect());
        self.maximizing = true;
    }

    pub fn add_constraint(&mut self, coeffs: Vec<T>, relation: Relation, rhs: T) {
        assert_eq!(coeffs.len(), self.num_vars());
        self.rows.push((coeffs, relation, rhs));
    }

    /// Solves the program; `value` is the optimum of the objective as given.
    pub fn solve(&self) -> Result<LpSolution<T>> {
        // column layout: split variables, then slacks, then artificials
        let mut col_of = Vec::with_capacity(self.num_vars());
        let mut ncols = 0;
        for &f in &self.free {
            col_of.push(ncols);
            ncols += if f { 2 } else { 1 };
        }
        let n_struct = ncols;
        let n_slack = self.rows.iter().filter(|r| r.1 != Relation::Eq).count();
        let m = self.rows.len();
        let n_real = n_struct + n_slack;
        let total = n_real + m;
        let rhs = total;

        let mut tab: Vec<Vec<T>> = Vec::with_capacity(m);
        let mut slack = n_struct;
        for (i, (coeffs, rel, b)) in self.rows.iter().enumerate() {
            let mut row = vec![T::zero(); total + 1];
            for (v, c) in coeffs.iter().enumerate() {
                row[col_of[v]] = c.clone();
                if self.free[v] {
                    row[col_of[v] + 1] = -c.clone();
                }
            }
            match rel {
                Relation::Le => {
                    row[slack] = T::one();
                    slack += 1;
                }
                Relation::Ge => {
                    row[slack] = -T::one();
                    slack += 1;
                }
                Relation::Eq => {}
            }
            row[rhs] = b.clone();
            if b.is_negative() {
                for v in row.iter_mut() {
                    *v = -v.clone();
                }
            }
            row[n_real + i] = T::one();
            tab.push(row);
        }
        let mut basis: Vec<usize> = (n_real..total).collect();

        // phase 1: minimize the sum of artificials
        let mut obj = vec![T::zero(); total + 1];
        for row in &tab {
            for j in 0..n_real {
                obj[j] = obj[j].clone() - row[j].clone();
            }
            obj[rhs] = obj[rhs].clone() - row[rhs].clone();
        }
        run_simplex(&mut tab, &mut obj, &mut basis, n_real)?;
        let scale = tab
            .iter()
            .fold(T::one(), |acc, r| acc + r[rhs].magnitude());
        let infeas = -obj[rhs].clone();
        if infeas > T::tolerance() * scale {
            return Ok(LpSolution::Infeasible);
        }

        // pivot artificials out of the basis; drop redundant rows
        let mut i = 0;
        while i < tab.len() {
            if basis[i] >= n_real {
                let pivot_col = (0..n_real).find(|&j| !tab[i][j].is_negligible());
                match pivot_col {
                    Some(j) => pivot(&mut tab, &mut obj, &mut basis, i, j),
                    None => {
                        tab.remove(i);
                        basis.remove(i);
                        continue;
                    }
                }
            }
            i += 1;
        }

        // phase 2 with the true objective
        let mut cost = vec![T::zero(); n_real];
        for (v, c) in self.objective.iter().enumerate() {
            cost[col_of[v]] = c.clone();
            if self.free[v] {
                cost[col_of[v] + 1] = -c.clone();
            }
        }
        let mut obj = vec![T::zero(); total + 1];
        obj[..n_real].clone_from_slice(&cost);
        for (r, &bv) in tab.iter().zip(&basis) {
            let cb = cost[bv].clone();
            if cb.is_zero() {
                continue;
            }
            for j in 0..n_real {
                obj[j] = obj[j].clone() - cb.clone() * r[j].clone();
            }
            obj[rhs] = obj[rhs].clone() - cb.clone() * r[rhs].clone();
        }
        if !run_simplex(&mut tab, &mut obj, &mut basis, n_real)? {
            return Ok(LpSolution::Unbounded);
        }

        let mut cols = vec![T::zero(); n_real];
        for (r, &bv) in tab.iter().zip(&basis) {
            cols[bv] = r[rhs].clone();
        }
        let x = (0..self.num_vars())
            .map(|v| {
                let c = col_of[v];
                if self.free[v] {
                    cols[c].clone() - cols[c + 1].clone()
                } else {
                    cols[c].clone()
                }
            })
            .collect();
        let value = -obj[rhs].clone();
        Ok(LpSolution::Optimal {
            x,
            value: if self.maximizing { -value } else { value },
        })
    }
}

/// Runs Bland-rule pivots over columns `< allowed`. Returns `false` when the
/// objective is unbounded below.
fn run_simplex<T: Field>(
    tab: &mut [Vec<T>],
    obj: &mut [T],
    basis: &mut [usize],
    allowed: usize,
) -> Result<bool> {
    let rhs = obj.len() - 1;
    for _ in 0..MAX_PIVOTS {
        let Some(enter) = (0..allowed).find(|&j| obj[j].is_negative()) else {
            return Ok(true);
        };
        let mut leave: Option<(usize, T)> = None;
        for (i, row) in tab.iter().enumerate() {
            if !row[enter].is_positive() {
                continue;
            }
            let ratio = row[rhs].clone() / row[enter].clone();
            leave = match leave {
                None => Some((i, ratio)),
                Some((li, lr)) => {
                    if ratio < lr || (ratio == lr && basis[i] < basis[li]) {
                        Some((i, ratio))
                    } else {
                        Some((li, lr))
                    }
                }
            };
        }
        match leave {
            None => return Ok(false),
            Some((i, _)) => pivot(tab, obj, basis, i, enter),
        }
    }
    Err(Error::MaxIterations(MAX_PIVOTS))
}

fn pivot<T: Field>(tab: &mut [Vec<T>], obj: &mut [T], basis: &mut [usize], r: usize, c: usize) {
    let p = tab[r][c].clone();
    for v in tab[r].iter_mut() {
        *v = v.clone() / p.clone();
    }
    let prow = tab[r].clone();
    for (i, row) in tab.iter_mut().enumerate() {
        if i == r || row[c].is_zero() {
            continue;
        }
        let f = row[c].clone();
        for (v, pv) in row.iter_mut().zip(&prow) {
            *v = v.clone() - f.clone() * pv.clone();
        }
        row[c] = T::zero();
    }
    if !obj[c].is_zero() {
        let f = obj[c].clone();
        for (v, pv) in obj.iter_mut().zip(&prow) {
            *v = v.clone() - f.clone() * pv.clone();
        }
        obj[c] = T::zero();
    }
    basis[r] = c;
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rat;
    use num_rational::BigRational;

    #[test]
    fn textbook_maximization() {
        // max 3x + 5y, x <= 4, 2y <= 12, 3x + 2y <= 18 -> 36 at (2, 6)
        let mut lp = LinearProgram::<f64>::new(2);
        lp.maximize(vec![3.0, 5.0]);
        lp.add_constraint(vec![1.0, 0.0], Relation::Le, 4.0);
        lp.add_constraint(vec![0.0, 2.0], Relation::Le, 12.0);
        lp.add_constraint(vec![3.0, 2.0], Relation::Le, 18.0);
        match lp.solve().unwrap() {
            LpSolution::Optimal { x, value } => {
                assert!((x[0] - 2.0).abs() < 1e-12 && (x[1] - 6.0).abs() < 1e-12);
                assert!((value - 36.0).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn exact_rational_solution() {
        // min x + y, x + 2y = 1, 3x + y >= 1
        let mut lp = LinearProgram::<BigRational>::new(2);
        lp.minimize(vec![rat(1, 1), rat(1, 1)]);
        lp.add_constraint(vec![rat(1, 1), rat(2, 1)], Relation::Eq, rat(1, 1));
        lp.add_constraint(vec![rat(3, 1), rat(1, 1)], Relation::Ge, rat(1, 1));
        match lp.solve().unwrap() {
            LpSolution::Optimal { x, value } => {
                assert_eq!(x, vec![rat(1, 5), rat(2, 5)]);
                assert_eq!(value, rat(3, 5));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn detects_infeasible_and_unbounded() {
        let mut lp = LinearProgram::<f64>::new(1);
        lp.add_constraint(vec![1.0], Relation::Le, -1.0);
        assert_eq!(lp.solve().unwrap(), LpSolution::Infeasible);

        let mut lp = LinearProgram::<f64>::new(2);
        lp.minimize(vec![-1.0, 0.0]);
        lp.add_constraint(vec![1.0, -1.0], Relation::Le, 1.0);
        assert_eq!(lp.solve().unwrap(), LpSolution::Unbounded);
    }

    #[test]
    fn free_variables_and_redundant_rows() {
        // min |-ish|: min t s.t. t >= x - 3, t >= 3 - x, x free, with a duplicated row
        let mut lp = LinearProgram::<f64>::new(2);
        lp.set_free(0);
        lp.minimize(vec![0.0, 1.0]);
        lp.add_constraint(vec![-1.0, 1.0], Relation::Ge, -3.0);
        lp.add_constraint(vec![1.0, 1.0], Relation::Ge, 3.0);
        lp.add_constraint(vec![1.0, 0.0], Relation::Eq, -2.0);
        lp.add_constraint(vec![2.0, 0.0], Relation::Eq, -4.0);
        match lp.solve().unwrap() {
            LpSolution::Optimal { x, .. } => {
                assert!((x[0] + 2.0).abs() < 1e-12);
                assert!((x[1] - 5.0).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn degenerate_cycling_example_terminates() {
        // Beale's example, which cycles under the textbook largest-coefficient rule
        let mut lp = LinearProgram::<BigRational>::new(4);
        lp.minimize(vec![rat(-3, 4), rat(150, 1), rat(-1, 50), rat(6, 1)]);
        lp.add_constraint(
            vec![rat(1, 4), rat(-60, 1), rat(-1, 25), rat(9, 1)],
            Relation::Le,
            rat(0, 1),
        );
        lp.add_constraint(
            vec![rat(1, 2), rat(-90, 1), rat(-1, 50), rat(3, 1)],
            Relation::Le,
            rat(0, 1),
        );
        lp.add_constraint(
            vec![rat(0, 1), rat(0, 1), rat(1, 1), rat(0, 1)],
            Relation::Le,
            rat(1, 1),
        );
        match lp.solve().unwrap() {
            LpSolution::Optimal { value, .. } => assert_eq!(value, rat(-1, 20)),
            other => panic!("{other:?}"),
        }
    }
}
