//! Vertices of symmetric polytopes `{c : |⟨a_i, c⟩| ≤ 1}` and exact maxima of
//! `‖N c‖∞` over them.

use std::collections::BTreeSet;

use crate::linalg::{self, RMatrix};
use crate::lp;
use crate::rational::Rational;

pub const DEFAULT_VERTEX_CAP: usize = 6;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum VertexError {
    #[error("constraint set has rank {rank} < dimension {dim}; the ball is unbounded")]
    Unbounded { rank: usize, dim: usize },
    #[error("dimension {dim} exceeds the vertex cap {cap}")]
    DimensionCap { dim: usize, cap: usize },
    #[error("numerator has {num} columns, constraints have {den}")]
    Dimension { num: usize, den: usize },
}

/// Distinct constraint directions, each scaled to its tightest bound. Zero rows
/// are dropped. Rows are normalized so that the first nonzero entry is positive.
pub fn reduce_rows(a: &RMatrix) -> RMatrix {
    let mut best: std::collections::BTreeMap<Vec<Rational>, Rational> = Default::default();
    for i in 0..a.rows() {
        let row = a.row(i);
        let Some(lead) = row.iter().find(|x| !x.is_zero()) else {
            continue;
        };
        let dir: Vec<Rational> = row.iter().map(|x| x / lead).collect();
        let s = lead.abs();
        best.entry(dir)
            .and_modify(|cur| {
                if s > *cur {
                    *cur = s.clone();
                }
            })
            .or_insert(s);
    }
    let rows: Vec<Vec<Rational>> = best.into_iter().map(|(d, s)| d.iter().map(|x| x * &s).collect()).collect();
    if rows.is_empty() {
        return RMatrix::zeros(0, a.cols());
    }
    RMatrix::from_rows(rows).expect("rows share a width")
}

fn feasible(a: &RMatrix, c: &[Rational]) -> bool {
    let one = Rational::one();
    (0..a.rows()).all(|i| {
        let v: Rational = a.row(i).iter().zip(c).filter(|(x, _)| !x.is_zero()).map(|(x, y)| x * y).sum();
        v.abs() <= one
    })
}

fn next_combination(idx: &mut [usize], m: usize) -> bool {
    let d = idx.len();
    let mut i = d;
    while i > 0 {
        i -= 1;
        if idx[i] < m - d + i {
            idx[i] += 1;
            for j in i + 1..d {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// All vertices of `{c : |a_i · c| ≤ 1}`, sorted.
pub fn vertex_enumerate(a: &RMatrix, cap: usize) -> Result<Vec<Vec<Rational>>, VertexError> {
    let d = a.cols();
    if d > cap {
        return Err(VertexError::DimensionCap { dim: d, cap });
    }
    if d == 0 {
        return Ok(vec![vec![]]);
    }
    let rows = reduce_rows(a);
    let rank = linalg::rank(&rows);
    if rank < d {
        return Err(VertexError::Unbounded { rank, dim: d });
    }
    let m = rows.rows();
    let mut out = BTreeSet::new();
    let mut idx: Vec<usize> = (0..d).collect();
    loop {
        let sub = rows.select_rows(&idx);
        if let Ok(inv) = linalg::invert(&sub) {
            for mask in 0u64..(1u64 << d) {
                let s: Vec<Rational> = (0..d)
                    .map(|k| if mask >> k & 1 == 1 { -Rational::one() } else { Rational::one() })
                    .collect();
                let c = inv.mul_vec(&s);
                if feasible(&rows, &c) {
                    out.insert(c);
                }
            }
        }
        if !next_combination(&mut idx, m) {
            break;
        }
    }
    Ok(out.into_iter().collect())
}

/// Exact maximum of `‖num · c‖∞` over `{c : |den · c| ≤ 1}` with a maximizing `c`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaxRatio {
    pub value: Rational,
    pub witness: Vec<Rational>,
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let mut r: u128 = 1;
    for i in 0..k as u128 {
        r = r * (n as u128 - i) / (i + 1);
    }
    r
}

// Subset budget above which the LP route is used instead of vertices.
const VERTEX_WORK_LIMIT: u128 = 50_000;

/// Maximum of `‖num·c‖∞` over the symmetric polytope `{c : |den·c| ≤ 1}`.
///
/// Small instances enumerate vertices; larger ones solve one exact LP per
/// distinct numerator direction. Both are exact.
pub fn max_ratio(num: &RMatrix, den: &RMatrix, cap: usize) -> Result<MaxRatio, VertexError> {
    let d = den.cols();
    if num.cols() != d {
        return Err(VertexError::Dimension { num: num.cols(), den: d });
    }
    if d > cap {
        return Err(VertexError::DimensionCap { dim: d, cap });
    }
    let rows = reduce_rows(den);
    let rank = linalg::rank(&rows);
    if rank < d {
        return Err(VertexError::Unbounded { rank, dim: d });
    }
    let nrows = reduce_rows(num);
    if binomial(rows.rows(), d) * (1u128 << d.min(100)) <= VERTEX_WORK_LIMIT * 16 {
        let verts = vertex_enumerate(&rows, cap)?;
        let mut best = MaxRatio { value: Rational::zero(), witness: verts[0].clone() };
        for v in &verts {
            let val = nrows.mul_vec(v).iter().map(|x| x.abs()).fold(Rational::zero(), Rational::max);
            if val > best.value {
                best = MaxRatio { value: val, witness: v.clone() };
            }
        }
        return Ok(best);
    }
    max_ratio_lp(&nrows, &rows)
}

/// LP route: for each numerator row `r`, maximize `r·c` subject to `|den·c| ≤ 1`.
pub fn max_ratio_lp(num: &RMatrix, den: &RMatrix) -> Result<MaxRatio, VertexError> {
    let (m, d) = (den.rows(), den.cols());
    // variables: p (d), q (d), s (m), t (m); den(p-q) + s = 1, -den(p-q) + t = 1
    let nv = 2 * d + 2 * m;
    let mut a = RMatrix::zeros(2 * m, nv);
    for i in 0..m {
        for j in 0..d {
            let v = den.at(i, j);
            if v.is_zero() {
                continue;
            }
            a.set(i, j, v.clone());
            a.set(i, d + j, -v);
            a.set(m + i, j, -v);
            a.set(m + i, d + j, v.clone());
        }
        a.set(i, 2 * d + i, Rational::one());
        a.set(m + i, 2 * d + m + i, Rational::one());
    }
    let b = vec![Rational::one(); 2 * m];
    let mut best = MaxRatio { value: Rational::zero(), witness: vec![Rational::zero(); d] };
    for r in 0..num.rows() {
        let mut c = vec![Rational::zero(); nv];
        for j in 0..d {
            c[j] = -num.at(r, j);
            c[d + j] = num.at(r, j).clone();
        }
        let sol = lp::minimize(&a, &b, &c).map_err(|_| VertexError::Unbounded { rank: 0, dim: d })?;
        let val = -sol.value;
        if val > best.value {
            let w = (0..d).map(|j| &sol.x[j] - &sol.x[d + j]).collect();
            best = MaxRatio { value: val, witness: w };
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;

    #[test]
    fn square() {
        let v = vertex_enumerate(&RMatrix::identity(2), 6).unwrap();
        assert_eq!(v.len(), 4);
        assert!(v.contains(&vec![q(1, 1), q(-1, 1)]));
    }

    #[test]
    fn segment() {
        let v = vertex_enumerate(&RMatrix::from_int_rows(&[&[1]]), 6).unwrap();
        assert_eq!(v, vec![vec![q(-1, 1)], vec![q(1, 1)]]);
    }

    #[test]
    fn unbounded_and_cap() {
        let a = RMatrix::from_int_rows(&[&[1, 1], &[2, 2]]);
        assert!(matches!(vertex_enumerate(&a, 6), Err(VertexError::Unbounded { rank: 1, dim: 2 })));
        assert!(matches!(
            vertex_enumerate(&RMatrix::identity(7), 6),
            Err(VertexError::DimensionCap { dim: 7, cap: 6 })
        ));
    }

    #[test]
    fn duplicate_rows_keep_tightest() {
        let a = RMatrix::from_int_rows(&[&[1, 0], &[-3, 0], &[0, 1]]);
        let r = reduce_rows(&a);
        assert_eq!(r.rows(), 2);
        let v = vertex_enumerate(&a, 6).unwrap();
        assert!(v.contains(&vec![q(1, 3), q(1, 1)]));
    }

    #[test]
    fn lp_and_vertex_routes_agree() {
        let den = RMatrix::from_int_rows(&[&[1, 1], &[1, -1], &[2, 0]]);
        let num = RMatrix::from_int_rows(&[&[1, 0], &[0, 3]]);
        let a = max_ratio(&num, &den, 6).unwrap();
        let b = max_ratio_lp(&reduce_rows(&num), &reduce_rows(&den)).unwrap();
        assert_eq!(a.value, b.value);
        assert_eq!(a.value, q(3, 1));
    }
}
