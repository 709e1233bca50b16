use std::collections::BTreeSet;

use proptest::prelude::*;
use quotforge::linalg::{block_compose, invert, op_norm_inf, op_norm_witness, LinalgError};
use quotforge::lp::{certify_l1, lp_min_l1, LpError};
use quotforge::rational::q;
use quotforge::vertex::{vertex_enumerate, VertexError};
use quotforge::{BlockLayout, RMatrix, Rational, WindowVector};

fn arb_rat() -> impl Strategy<Value = Rational> {
    (-9i64..=9, 1i64..=4).prop_map(|(p, d)| q(p, d))
}

fn arb_matrix(r: usize, c: usize) -> impl Strategy<Value = RMatrix> {
    prop::collection::vec(prop::collection::vec(arb_rat(), c), r).prop_map(|rows| RMatrix::from_rows(rows).unwrap())
}

fn sign_vectors(n: usize) -> impl Iterator<Item = Vec<Rational>> {
    (0u32..1 << n).map(move |m| (0..n).map(|k| if m >> k & 1 == 1 { -Rational::one() } else { Rational::one() }).collect())
}

fn sup(v: &[Rational]) -> Rational {
    v.iter().map(|x| x.abs()).fold(Rational::zero(), Rational::max)
}

fn brute_op_norm(m: &RMatrix) -> Rational {
    sign_vectors(m.cols()).map(|s| sup(&m.mul_vec(&s))).fold(Rational::zero(), Rational::max)
}

// Determinant by cofactor expansion; independent of the elimination code.
fn det(m: &[Vec<Rational>]) -> Rational {
    let n = m.len();
    if n == 0 {
        return Rational::one();
    }
    let mut acc = Rational::zero();
    for j in 0..n {
        let minor: Vec<Vec<Rational>> = m[1..].iter().map(|r| [&r[..j], &r[j + 1..]].concat()).collect();
        let term = &m[0][j] * &det(&minor);
        if j % 2 == 0 { acc += term } else { acc -= &term }
    }
    acc
}

fn cramer(a: &[Vec<Rational>], b: &[Rational]) -> Option<Vec<Rational>> {
    let d = det(a);
    if d.is_zero() {
        return None;
    }
    Some(
        (0..a.len())
            .map(|j| {
                let aj: Vec<Vec<Rational>> =
                    a.iter().zip(b).map(|(r, bi)| r.iter().enumerate().map(|(k, x)| if k == j { bi.clone() } else { x.clone() }).collect()).collect();
                det(&aj) / &d
            })
            .collect(),
    )
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    (0u32..1 << n).filter(|m| m.count_ones() as usize == k).map(|m| (0..n).filter(|i| m >> i & 1 == 1).collect()).collect()
}

#[test]
fn op_norm_examples() {
    assert_eq!(op_norm_inf(&RMatrix::identity(3)), Rational::one());
    assert_eq!(op_norm_inf(&RMatrix::from_int_rows(&[&[1, -2], &[0, 3]])), Rational::from_int(3));
    assert_eq!(op_norm_inf(&RMatrix::zeros(0, 0)), Rational::zero());
}

#[test]
fn invert_examples() {
    assert_eq!(invert(&RMatrix::identity(4)).unwrap(), RMatrix::identity(4));
    let d = RMatrix::diag(&[q(2, 1), q(1, 3)]);
    assert_eq!(invert(&d).unwrap(), RMatrix::diag(&[q(1, 2), q(3, 1)]));
    assert_eq!(invert(&RMatrix::from_int_rows(&[&[1, 2], &[2, 4]])), Err(LinalgError::Singular));
}

#[test]
fn block_compose_examples() {
    let b = RMatrix::from_int_rows(&[&[1, 2], &[3, -4]]);
    let one = block_compose(&[b.clone()], &BlockLayout::new(vec![0, 2]).unwrap()).unwrap();
    assert_eq!(one.to_rows(), b.to_rows());
    let two = block_compose(
        &[RMatrix::from_int_rows(&[&[2]]), RMatrix::from_int_rows(&[&[3]])],
        &BlockLayout::new(vec![0, 1, 2]).unwrap(),
    )
    .unwrap();
    assert_eq!(two.to_rows(), RMatrix::diag(&[q(2, 1), q(3, 1)]).to_rows());
    assert_eq!(op_norm_inf(&two), Rational::from_int(3));
    assert!(block_compose(&[b], &BlockLayout::new(vec![0, 3]).unwrap()).is_err());
    assert!(BlockLayout::new(vec![0, 2, 2]).is_err());
}

#[test]
fn lp_examples() {
    let b = vec![q(3, 1), q(-1, 2), q(0, 1)];
    let s = lp_min_l1(&RMatrix::identity(3), &b).unwrap();
    assert_eq!(s.u.coords, b);
    assert_eq!(s.value, q(7, 2));
    let one = lp_min_l1(&RMatrix::from_int_rows(&[&[1, 1]]), &[Rational::one()]).unwrap();
    assert_eq!(one.value, Rational::one());
    let bad = lp_min_l1(&RMatrix::from_int_rows(&[&[1], &[1]]), &[Rational::zero(), Rational::one()]);
    assert_eq!(bad.unwrap_err(), LpError::Infeasible);
}

#[test]
fn vertex_examples() {
    let cube = vertex_enumerate(&RMatrix::identity(2), 6).unwrap();
    let expect: BTreeSet<Vec<Rational>> =
        [(1, 1), (1, -1), (-1, 1), (-1, -1)].iter().map(|&(a, b)| vec![Rational::from_int(a), Rational::from_int(b)]).collect();
    assert_eq!(cube.into_iter().collect::<BTreeSet<_>>(), expect);
    let seg = vertex_enumerate(&RMatrix::from_int_rows(&[&[1]]), 6).unwrap();
    assert_eq!(seg, vec![vec![Rational::from_int(-1)], vec![Rational::one()]]);
    assert!(matches!(vertex_enumerate(&RMatrix::from_int_rows(&[&[1, 1]]), 6), Err(VertexError::Unbounded { .. })));
    assert!(matches!(vertex_enumerate(&RMatrix::identity(7), 6), Err(VertexError::DimensionCap { .. })));
}

#[test]
fn json_forms() {
    let r: Rational = "6/-4".parse().unwrap();
    assert_eq!(serde_json::to_string(&r).unwrap(), "\"-3/2\"");
    assert_eq!(serde_json::to_string(&Rational::from_int(5)).unwrap(), "\"5/1\"");
    let m = RMatrix::from_int_rows(&[&[1, 0], &[0, 2]]).with_windows(3, 3);
    let back: RMatrix = serde_json::from_str(&serde_json::to_string(&m).unwrap()).unwrap();
    assert_eq!(back, m);
}

#[test]
fn empty_window_objects() {
    let v = WindowVector::zeros(5, 0);
    assert_eq!(v.sup_norm(), Rational::zero());
    assert_eq!(v.l1_norm(), Rational::zero());
    assert_eq!(invert(&RMatrix::zeros(0, 0)).unwrap().rows(), 0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn op_norm_matches_sign_vectors(m in (1usize..=4, 1usize..=4).prop_flat_map(|(r, c)| arb_matrix(r, c))) {
        let n = op_norm_inf(&m);
        prop_assert_eq!(&n, &brute_op_norm(&m));
        // attained at the sign vector of the maximizing row
        let s = op_norm_witness(&m);
        prop_assert_eq!(sup(&m.mul_vec(&s)), n);
    }

    #[test]
    fn op_norm_bounds_every_vector(m in arb_matrix(3, 4), v in prop::collection::vec(arb_rat(), 4)) {
        prop_assert!(sup(&m.mul_vec(&v)) <= op_norm_inf(&m) * sup(&v));
    }

    #[test]
    fn inverse_is_two_sided(m in arb_matrix(5, 5)) {
        match invert(&m) {
            Ok(inv) => {
                prop_assert!(m.mul(&inv).unwrap().is_identity());
                prop_assert!(inv.mul(&m).unwrap().is_identity());
            }
            Err(e) => {
                prop_assert_eq!(e, LinalgError::Singular);
                prop_assert!(det(&m.to_rows()).is_zero());
            }
        }
    }

    #[test]
    fn block_norm_is_max(blocks in prop::collection::vec((1usize..=3).prop_flat_map(|k| arb_matrix(k, k)), 1..4)) {
        let mut cuts = vec![2];
        for b in &blocks {
            cuts.push(cuts.last().unwrap() + b.rows());
        }
        let m = block_compose(&blocks, &BlockLayout::new(cuts.clone()).unwrap()).unwrap();
        let max = blocks.iter().map(op_norm_inf).fold(Rational::zero(), Rational::max);
        prop_assert_eq!(op_norm_inf(&m), max);
        // entries outside the blocks vanish
        let layout = BlockLayout::new(cuts).unwrap();
        for (i, j, _) in m.triplets() {
            prop_assert_eq!(layout.block_of(i), layout.block_of(j));
        }
    }

    #[test]
    fn lp_matches_basic_solutions(a in (1usize..=3, 1usize..=4).prop_flat_map(|(r, c)| arb_matrix(r, c)), x in prop::collection::vec(arb_rat(), 4)) {
        // b = A x is feasible by construction
        let x = &x[..a.cols()];
        let b = a.mul_vec(x);
        let sol = lp_min_l1(&a, &b).unwrap();
        prop_assert!(certify_l1(&a, &b, &sol));
        prop_assert_eq!(a.mul_vec(&sol.u.coords), b.clone());
        prop_assert_eq!(sol.u.l1_norm(), sol.value.clone());
        prop_assert!(sol.value <= sup(x) * Rational::from(x.len()));
        let l1 = |v: &[Rational]| v.iter().map(|t| t.abs()).sum::<Rational>();
        prop_assert!(sol.value <= l1(x));
        // oracle: minimum over supports S with A_S of full column rank and a consistent square subsystem
        let mut best: Option<Rational> = if b.iter().all(|t| t.is_zero()) { Some(Rational::zero()) } else { None };
        for k in 1..=a.rows().min(a.cols()) {
            for cols in subsets(a.cols(), k) {
                for rows in subsets(a.rows(), k) {
                    let sq: Vec<Vec<Rational>> = rows.iter().map(|&i| cols.iter().map(|&j| a.at(i, j).clone()).collect()).collect();
                    let rhs: Vec<Rational> = rows.iter().map(|&i| b[i].clone()).collect();
                    if let Some(us) = cramer(&sq, &rhs) {
                        let mut u = vec![Rational::zero(); a.cols()];
                        for (j, v) in cols.iter().zip(us) {
                            u[*j] = v;
                        }
                        if a.mul_vec(&u) == b {
                            let v = l1(&u);
                            best = Some(best.map_or(v.clone(), |bb| bb.min(v)));
                        }
                    }
                }
            }
        }
        prop_assert_eq!(Some(sol.value), best);
    }

    #[test]
    fn vertices_match_triple_oracle(a in (3usize..=5).prop_flat_map(|m| arb_matrix(m, 3))) {
        let rows = a.to_rows();
        let mut oracle = BTreeSet::new();
        for t in subsets(rows.len(), 3) {
            let sq: Vec<Vec<Rational>> = t.iter().map(|&i| rows[i].clone()).collect();
            for s in sign_vectors(3) {
                if let Some(c) = cramer(&sq, &s) {
                    if rows.iter().all(|r| r.iter().zip(&c).map(|(x, y)| x * y).sum::<Rational>().abs() <= Rational::one()) {
                        oracle.insert(c);
                    }
                }
            }
        }
        match vertex_enumerate(&a, 6) {
            Ok(vs) => {
                let got: BTreeSet<Vec<Rational>> = vs.into_iter().collect();
                prop_assert_eq!(&got, &oracle);
                for v in &got {
                    let tight: Vec<Vec<Rational>> = rows
                        .iter()
                        .filter(|r| r.iter().zip(v).map(|(x, y)| x * y).sum::<Rational>().abs() == Rational::one())
                        .cloned()
                        .collect();
                    prop_assert!(subsets(tight.len(), 3).iter().any(|t| !det(&t.iter().map(|&i| tight[i].clone()).collect::<Vec<_>>()).is_zero()));
                }
            }
            Err(VertexError::Unbounded { .. }) => prop_assert!(subsets(rows.len(), 3).iter().all(|t| det(&t.iter().map(|&i| rows[i].clone()).collect::<Vec<_>>()).is_zero())),
            Err(e) => prop_assert!(false, "{e}"),
        }
    }

    #[test]
    fn rational_round_trip(r in arb_rat()) {
        let s = r.to_canonical();
        prop_assert_eq!(s.parse::<Rational>().unwrap(), r.clone());
        let j: Rational = serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
        prop_assert_eq!(j, r);
    }
}
