//! Exact two-phase simplex with Bland's rule.
//!
//! The general entry point is [`minimize`] for `min c·x, A x = b, x ≥ 0`.
//! [`lp_min_l1`] solves `min ‖u‖₁, A u = b` through the split `u = u⁺ − u⁻`.

use crate::linalg::{self, RMatrix, WindowVector};
use crate::rational::Rational;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LpError {
    #[error("equality system is infeasible")]
    Infeasible,
    #[error("objective is unbounded below")]
    Unbounded,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

/// Optimal basic solution with its dual certificate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LpSolution {
    pub x: Vec<Rational>,
    pub value: Rational,
    /// Dual vector `y` with `c − Aᵀy ≥ 0` and `b·y = value`.
    pub dual: Vec<Rational>,
    pub basis: Vec<usize>,
}

struct Tableau {
    // m constraint rows of width ncols+1 (last entry is the rhs)
    rows: Vec<Vec<Rational>>,
    // reduced costs, last entry is minus the objective value
    obj: Vec<Rational>,
    basis: Vec<usize>,
    ncols: usize,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let inv = self.rows[r][c].recip();
        for v in self.rows[r].iter_mut() {
            if !v.is_zero() {
                *v = &*v * &inv;
            }
        }
        let prow = self.rows[r].clone();
        let nz: Vec<usize> = (0..=self.ncols).filter(|&j| !prow[j].is_zero()).collect();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r || row[c].is_zero() {
                continue;
            }
            let f = row[c].clone();
            for &j in &nz {
                row[j] = &row[j] - &(&f * &prow[j]);
            }
        }
        if !self.obj[c].is_zero() {
            let f = self.obj[c].clone();
            for &j in &nz {
                self.obj[j] = &self.obj[j] - &(&f * &prow[j]);
            }
        }
        self.basis[r] = c;
    }

    /// Bland's rule on columns `< limit`; returns false when unbounded.
    fn run(&mut self, limit: usize) -> bool {
        loop {
            let Some(c) = (0..limit).find(|&j| self.obj[j].is_negative()) else {
                return true;
            };
            let mut best: Option<(usize, Rational)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                if !row[c].is_positive() {
                    continue;
                }
                let ratio = &row[self.ncols] / &row[c];
                best = match best {
                    None => Some((i, ratio)),
                    Some((bi, br)) => {
                        if ratio < br || (ratio == br && self.basis[i] < self.basis[bi]) {
                            Some((i, ratio))
                        } else {
                            Some((bi, br))
                        }
                    }
                };
            }
            match best {
                None => return false,
                Some((r, _)) => self.pivot(r, c),
            }
        }
    }
}

/// `min c·x` subject to `A x = b`, `x ≥ 0`.
pub fn minimize(a: &RMatrix, b: &[Rational], c: &[Rational]) -> Result<LpSolution, LpError> {
    let (m, n) = (a.rows(), a.cols());
    if b.len() != m || c.len() != n {
        return Err(LpError::Dimension(format!("A is {m}x{n}, |b| = {}, |c| = {}", b.len(), c.len())));
    }
    let ncols = n + m;
    let mut rows = Vec::with_capacity(m);
    for i in 0..m {
        let flip = b[i].is_negative();
        let mut row = Vec::with_capacity(ncols + 1);
        for j in 0..n {
            let v = a.at(i, j).clone();
            row.push(if flip { -v } else { v });
        }
        for k in 0..m {
            row.push(if k == i { Rational::one() } else { Rational::zero() });
        }
        row.push(if flip { -&b[i] } else { b[i].clone() });
        rows.push(row);
    }
    // phase 1: minimize the sum of artificials
    let mut obj = vec![Rational::zero(); ncols + 1];
    for row in &rows {
        for j in 0..n {
            obj[j] -= &row[j];
        }
        obj[ncols] -= &row[ncols];
    }
    let mut t = Tableau { rows, obj, basis: (n..n + m).collect(), ncols };
    t.run(ncols);
    if !t.obj[ncols].is_zero() {
        return Err(LpError::Infeasible);
    }
    // drive artificials out of the basis, dropping redundant rows
    let mut i = 0;
    while i < t.rows.len() {
        if t.basis[i] >= n {
            match (0..n).find(|&j| !t.rows[i][j].is_zero()) {
                Some(j) => t.pivot(i, j),
                None => {
                    t.rows.remove(i);
                    t.basis.remove(i);
                    continue;
                }
            }
        }
        i += 1;
    }
    // phase 2
    let mut obj = vec![Rational::zero(); ncols + 1];
    obj[..n].clone_from_slice(c);
    for (r, &bv) in t.basis.iter().enumerate() {
        if obj[bv].is_zero() {
            continue;
        }
        let f = obj[bv].clone();
        for j in 0..=ncols {
            if !t.rows[r][j].is_zero() {
                obj[j] = &obj[j] - &(&f * &t.rows[r][j]);
            }
        }
    }
    t.obj = obj;
    if !t.run(n) {
        return Err(LpError::Unbounded);
    }
    let mut x = vec![Rational::zero(); n];
    for (r, &bv) in t.basis.iter().enumerate() {
        x[bv] = t.rows[r][ncols].clone();
    }
    let value: Rational = x.iter().zip(c).map(|(xi, ci)| xi * ci).sum();
    let dual = dual_from_basis(a, c, &t.basis).unwrap_or_else(|| vec![Rational::zero(); m]);
    let mut basis = t.basis.clone();
    basis.sort_unstable();
    Ok(LpSolution { x, value, dual, basis })
}

// Solve Bᵀ y = c_B over the original rows; redundant rows get y = 0 via free variables.
fn dual_from_basis(a: &RMatrix, c: &[Rational], basis: &[usize]) -> Option<Vec<Rational>> {
    let bt = RMatrix::from_rows(basis.iter().map(|&j| a.col_vec(j)).collect()).ok()?;
    if basis.is_empty() {
        return Some(vec![Rational::zero(); a.rows()]);
    }
    let cb: Vec<Rational> = basis.iter().map(|&j| c[j].clone()).collect();
    linalg::solve(&bt, &cb)
}

/// Result of [`lp_min_l1`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct L1Solution {
    pub u: WindowVector,
    pub value: Rational,
    /// Dual `y` with `‖Aᵀy‖∞ ≤ 1` and `b·y = value`.
    pub dual: Vec<Rational>,
}

/// `min ‖u‖₁` subject to `A u = b`. The returned vector lives on `[0, cols)`.
pub fn lp_min_l1(a: &RMatrix, b: &[Rational]) -> Result<L1Solution, LpError> {
    let (m, n) = (a.rows(), a.cols());
    let mut split = RMatrix::zeros(m, 2 * n);
    for i in 0..m {
        for j in 0..n {
            let v = a.at(i, j);
            if !v.is_zero() {
                split.set(i, j, v.clone());
                split.set(i, n + j, -v);
            }
        }
    }
    let sol = minimize(&split, b, &vec![Rational::one(); 2 * n])?;
    let u: Vec<Rational> = (0..n).map(|j| &sol.x[j] - &sol.x[n + j]).collect();
    Ok(L1Solution { u: WindowVector::new(0, u), value: sol.value, dual: sol.dual })
}

/// Check a dual certificate for [`lp_min_l1`]: `‖Aᵀy‖∞ ≤ 1` and `b·y = value`.
pub fn certify_l1(a: &RMatrix, b: &[Rational], sol: &L1Solution) -> bool {
    let aty = a.transpose().mul_vec(&sol.dual);
    let feasible = aty.iter().all(|v| v.abs() <= Rational::one());
    let by: Rational = b.iter().zip(&sol.dual).map(|(x, y)| x * y).sum();
    let primal = a.mul_vec(&sol.u.coords) == b;
    feasible && primal && by == sol.value && sol.u.l1_norm() == sol.value
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;

    #[test]
    fn identity_system() {
        let b = vec![q(1, 2), q(-3, 1), q(0, 1)];
        let s = lp_min_l1(&RMatrix::identity(3), &b).unwrap();
        assert_eq!(s.u.coords, b);
        assert_eq!(s.value, q(7, 2));
        assert!(certify_l1(&RMatrix::identity(3), &b, &s));
    }

    #[test]
    fn single_equality() {
        let a = RMatrix::from_int_rows(&[&[1, 1]]);
        let s = lp_min_l1(&a, &[q(1, 1)]).unwrap();
        assert_eq!(s.value, q(1, 1));
        assert!(certify_l1(&a, &[q(1, 1)], &s));
    }

    #[test]
    fn inconsistent() {
        let a = RMatrix::from_int_rows(&[&[1], &[1]]);
        assert_eq!(lp_min_l1(&a, &[q(0, 1), q(1, 1)]), Err(LpError::Infeasible));
    }

    #[test]
    fn redundant_rows() {
        let a = RMatrix::from_int_rows(&[&[1, 2], &[2, 4]]);
        let s = lp_min_l1(&a, &[q(2, 1), q(4, 1)]).unwrap();
        assert_eq!(s.value, q(1, 1));
        assert!(certify_l1(&a, &[q(2, 1), q(4, 1)], &s));
    }

    #[test]
    fn unbounded_detected() {
        let a = RMatrix::from_int_rows(&[&[1, -1]]);
        assert_eq!(minimize(&a, &[q(0, 1)], &[q(0, 1), q(-1, 1)]), Err(LpError::Unbounded));
    }
}
