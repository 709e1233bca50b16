//! Projections onto subspaces, complement matching and rational rescaling.

use num_bigint::BigInt;
use num_traits::One;
use serde::{Deserialize, Serialize};

use super::{hahn_banach_extend, lower_bound, map_norm, GeomError, LinMap, Subspace};
use crate::linalg::{self, op_norm_inf, RMatrix, WindowVector};
use crate::lp;
use crate::rational::Rational;

/// `P = B S⁻¹ U` where the rows of `U` represent Hahn–Banach extensions of the
/// coordinate functionals of `S`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Projection {
    pub p: RMatrix,
    pub u: RMatrix,
    pub s_inv: RMatrix,
    /// `op_norm_inf(P)`.
    pub norm: Rational,
    /// `‖S⁻¹‖ · max_j ‖u_j‖₁`, the a priori bound.
    pub bound: Rational,
}

impl Projection {
    /// Basis of `ker P = ker U` with unit entries at the free coordinates.
    pub fn kernel(&self, lo: usize) -> Result<Subspace, GeomError> {
        let n = self.p.cols();
        let basis = linalg::nullspace(&self.u).into_iter().map(|v| WindowVector::new(lo, v)).collect();
        Subspace::new(lo, lo + n, basis)
    }

    /// `I − P`.
    pub fn complement(&self) -> RMatrix {
        let n = self.p.rows();
        RMatrix::identity(n)
            .with_windows(self.p.row_lo, self.p.col_lo)
            .sub(&self.p)
            .expect("square")
    }
}

/// The coordinate witness `v_k ↦ e_k`.
pub fn coordinate_witness(y: &Subspace) -> LinMap {
    LinMap::from_coefficients(y.clone(), 0, &RMatrix::identity(y.dim())).expect("square witness")
}

/// Projection of `ℓ∞[lo, hi)` onto `Y` built from the witness `S : Y → ℓ∞^h`
/// (coordinate witness when `None`).
pub fn build_projection(y: &Subspace, s: Option<&LinMap>) -> Result<Projection, GeomError> {
    let h = y.dim();
    let smat = match s {
        Some(s) => {
            if s.domain != *y || s.hi - s.lo != h {
                return Err(GeomError::Precondition("witness must map Y onto an h-dimensional space".into()));
            }
            s.image_matrix().with_windows(0, 0)
        }
        None => RMatrix::identity(h),
    };
    let s_inv = linalg::invert(&smat).map_err(|_| GeomError::Precondition("witness S is not invertible".into()))?;
    let n = y.ambient_dim();
    let mut urows = Vec::with_capacity(h);
    let mut max_l1 = Rational::zero();
    for j in 0..h {
        let e = hahn_banach_extend(y, smat.row(j))?;
        max_l1 = max_l1.max(e.norm.clone());
        urows.push(e.representer.coords);
    }
    let u = if h == 0 { RMatrix::zeros(0, n) } else { RMatrix::from_rows(urows)? }.with_windows(0, y.lo);
    let b = y.matrix();
    let bs = b.mul(&s_inv)?;
    let p = if h == 0 { RMatrix::zeros(n, n) } else { bs.mul(&u)? }.with_windows(y.lo, y.lo);
    let bound = op_norm_inf(&bs) * max_l1;
    if p.mul(&b)? != b.clone().with_windows(y.lo, 0) {
        return Err(GeomError::Verification("projection does not fix the basis".into()));
    }
    if p.mul(&p)? != p {
        return Err(GeomError::Verification("projection is not idempotent".into()));
    }
    let norm = op_norm_inf(&p);
    Ok(Projection { p, u, s_inv, norm, bound })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComplementStage {
    Identity,
    Support,
    SignPattern,
    LpPolish,
}

/// Isomorphism `Q : Z1 → Z2` given by ambient matrices extending `Q` and `Q⁻¹`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComplementIso {
    pub forward: RMatrix,
    pub backward: RMatrix,
    /// Verified upper bounds for `‖Q‖` and `‖Q⁻¹‖`.
    pub norm_bound: Rational,
    pub inv_norm_bound: Rational,
    pub stage: ComplementStage,
}

impl ComplementIso {
    pub fn distortion_bound(&self) -> Rational {
        &self.norm_bound * &self.inv_norm_bound
    }
}

// Basis of Z normalized to the identity on a set of pivot coordinates.
fn normalized_basis(z: &Subspace) -> Result<(RMatrix, Vec<usize>), GeomError> {
    let b = z.matrix().with_windows(0, 0);
    let (_, piv) = linalg::rref(&b.transpose());
    let sel = b.select_rows(&piv);
    let inv = linalg::invert(&sel)?;
    Ok((b.mul(&inv)?, piv))
}

// Ambient matrix N2·Π·E1 for the pairing `pair[i]` (column i of N1 goes to column pair[i] of N2).
fn pairing_matrix(n2: &RMatrix, f1: &[usize], pair: &[usize], n: usize) -> RMatrix {
    let mut q = RMatrix::zeros(n, n);
    for (i, &fi) in f1.iter().enumerate() {
        let j = pair[i];
        for r in 0..n {
            let v = n2.at(r, j);
            if !v.is_zero() {
                q.set(r, fi, v.clone());
            }
        }
    }
    q
}

fn inverse_pair(pair: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; pair.len()];
    for (i, &j) in pair.iter().enumerate() {
        inv[j] = i;
    }
    inv
}

fn sign_distance(a: &RMatrix, i: usize, b: &RMatrix, j: usize) -> usize {
    (0..a.rows()).filter(|&r| a.at(r, i).signum() != b.at(r, j).signum()).count()
}

// Minimal ℓ₁ extension of each row functional `z ↦ (Qz)_r` from Z1 to the
// ambient space. The maximum of these ℓ₁-norms is exactly ‖Q‖.
fn polish(target: &RMatrix, n1: &RMatrix) -> Result<(RMatrix, Rational), GeomError> {
    let n = target.rows();
    let nt = n1.transpose();
    let mut rows = Vec::with_capacity(n);
    let mut norm = Rational::zero();
    for r in 0..n {
        let rhs = target.row_vec(r);
        if rhs.iter().all(|x| x.is_zero()) {
            rows.push(vec![Rational::zero(); n]);
            continue;
        }
        let sol = lp::lp_min_l1(&nt, &rhs)?;
        norm = norm.max(sol.value);
        rows.push(sol.u.coords);
    }
    Ok((RMatrix::from_rows(rows)?, norm))
}

// Largest ambient dimension for which the LP polish is attempted.
const POLISH_CAP: usize = 24;

/// Search for `Q : Z1 → Z2` with `‖Q‖·‖Q⁻¹‖ ≤ budget²`. Every returned map is
/// verified: the forward extension carries `Z1` into `Z2`, the backward one
/// inverts it on `Z1`, and the stated bounds are genuine upper bounds.
pub fn complement_iso(z1: &Subspace, z2: &Subspace, budget: &Rational) -> Result<ComplementIso, GeomError> {
    if z1.dim() != z2.dim() || z1.ambient_dim() != z2.ambient_dim() {
        return Err(GeomError::Precondition(format!(
            "dimensions differ: {} in {} vs {} in {}",
            z1.dim(),
            z1.ambient_dim(),
            z2.dim(),
            z2.ambient_dim()
        )));
    }
    let n = z1.ambient_dim();
    let k = z1.dim();
    let (lo1, lo2) = (z1.lo, z2.lo);
    let finish = |f: RMatrix, b: RMatrix, nb: Rational, ib: Rational, stage| ComplementIso {
        forward: f.with_windows(lo2, lo1),
        backward: b.with_windows(lo1, lo2),
        norm_bound: nb,
        inv_norm_bound: ib,
        stage,
    };
    if k == 0 {
        return Ok(finish(RMatrix::zeros(n, n), RMatrix::zeros(n, n), Rational::zero(), Rational::zero(), ComplementStage::Identity));
    }
    let budget_sq = budget * budget;
    let b2 = z2.matrix().with_windows(0, 0);
    if z1.basis.iter().all(|v| z2.contains(&WindowVector::new(z2.lo, v.coords.clone()))) && lo1 == lo2 {
        let id = RMatrix::identity(n);
        return Ok(finish(id.clone(), id, Rational::one(), Rational::one(), ComplementStage::Identity));
    }
    let (n1, f1) = normalized_basis(z1)?;
    let (n2, f2) = normalized_basis(z2)?;
    let identity_pair: Vec<usize> = (0..k).collect();
    let mut greedy = Vec::with_capacity(k);
    let mut used = vec![false; k];
    for i in 0..k {
        let j = (0..k)
            .filter(|&j| !used[j])
            .min_by_key(|&j| (sign_distance(&n1, i, &n2, j), j))
            .expect("k columns available");
        used[j] = true;
        greedy.push(j);
    }
    let mut best: Option<ComplementIso> = None;
    for (pair, stage) in [(identity_pair, ComplementStage::Support), (greedy, ComplementStage::SignPattern)] {
        let fwd = pairing_matrix(&n2, &f1, &pair, n);
        let bwd = pairing_matrix(&n1, &f2, &inverse_pair(&pair), n);
        // E1 has norm 1, so ‖Q‖ ≤ ‖N2 Π‖
        let nb = op_norm_inf(&fwd);
        let ib = op_norm_inf(&bwd);
        let cand = finish(fwd, bwd, nb, ib, stage);
        verify_complement(&cand, &n1, &b2)?;
        if cand.distortion_bound() <= budget_sq {
            return Ok(cand);
        }
        if best.as_ref().map_or(true, |b| cand.distortion_bound() < b.distortion_bound()) {
            best = Some(cand);
        }
    }
    let best = best.expect("two candidates");
    if n <= POLISH_CAP {
        let target_f = best.forward.mul(&n1)?;
        let target_b = best.backward.mul(&n2)?;
        let (fwd, nb) = polish(&target_f, &n1)?;
        let (bwd, ib) = polish(&target_b, &n2)?;
        let cand = finish(fwd, bwd, nb, ib, ComplementStage::LpPolish);
        verify_complement(&cand, &n1, &b2)?;
        if cand.distortion_bound() <= budget_sq {
            return Ok(cand);
        }
        return Err(GeomError::NotFound { budget: budget.clone(), best: cand.distortion_bound() });
    }
    Err(GeomError::NotFound { budget: budget.clone(), best: best.distortion_bound() })
}

fn verify_complement(c: &ComplementIso, n1: &RMatrix, b2: &RMatrix) -> Result<(), GeomError> {
    let img = c.forward.mul(n1)?.with_windows(0, 0);
    // every image column lies in Z2
    let aug_rank = linalg::rank(&b2.transpose().stack(&img.transpose())?);
    if aug_rank != b2.cols() {
        return Err(GeomError::Verification("forward map leaves Z2".into()));
    }
    if c.backward.mul(&img)?.with_windows(0, 0) != n1.clone().with_windows(0, 0) {
        return Err(GeomError::Verification("backward map does not invert forward on Z1".into()));
    }
    Ok(())
}

/// Smallest-denominator dyadic `s = k/2^j` with
/// `max(s·a, b/s) ≤ (1+δ)·√(a·b)`, i.e. `s² ∈ [(b/a)/(1+δ)², (b/a)(1+δ)²]`.
pub fn balance_factor(a: &Rational, b: &Rational, delta: &Rational) -> Rational {
    assert!(a.is_positive() && b.is_positive() && delta.is_positive(), "positive inputs");
    let target = b / a;
    let slack = (Rational::one() + delta).pow(2);
    let lo = &target / &slack;
    let hi = &target * &slack;
    let mut scale = BigInt::one();
    loop {
        let sq = Rational::from_big(&scale * &scale);
        // candidates k and k+1 around the square root
        let k = (&target * &sq).isqrt_floor();
        for cand in [k.clone(), k + 1] {
            if cand == BigInt::from(0) {
                continue;
            }
            let s = Rational::from_bigs(cand, scale.clone());
            let s2 = &s * &s;
            if s2 >= lo && s2 <= hi {
                return s;
            }
        }
        scale *= 2;
    }
}

/// `s·Q` with the rational `s` of [`balance_factor`] computed from exact norms.
pub fn balanced_rescale(q: &LinMap, cap: usize, delta: &Rational) -> Result<(LinMap, Rational), GeomError> {
    let a = map_norm(q, cap)?.value;
    let lb = lower_bound(q, cap)?.value;
    if lb.is_zero() {
        return Err(GeomError::Precondition("Q is not invertible".into()));
    }
    let b = lb.recip();
    let s = balance_factor(&a, &b, delta);
    Ok((q.compose_scalar(&s), s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;

    fn wv(v: &[i64]) -> WindowVector {
        WindowVector::from_ints(0, v)
    }

    #[test]
    fn coordinate_projection() {
        let y = Subspace::new(0, 3, vec![wv(&[1, 0, 0])]).unwrap();
        let p = build_projection(&y, None).unwrap();
        assert_eq!(p.norm, q(1, 1));
        assert_eq!(p.p, RMatrix::diag(&[q(1, 1), q(0, 1), q(0, 1)]));
    }

    #[test]
    fn disjoint_signs_projection() {
        let y = Subspace::new(0, 4, vec![wv(&[1, -1, 0, 0]), wv(&[0, 0, 1, 1])]).unwrap();
        let p = build_projection(&y, None).unwrap();
        assert_eq!(p.norm, q(1, 1));
        assert_eq!(p.p.mul(&p.p).unwrap(), p.p);
    }

    #[test]
    fn complement_identity_and_coordinates() {
        let z = Subspace::new(0, 3, vec![wv(&[0, 1, 0]), wv(&[0, 0, 1])]).unwrap();
        let c = complement_iso(&z, &z, &q(2, 1)).unwrap();
        assert_eq!(c.stage, ComplementStage::Identity);
        assert_eq!(c.distortion_bound(), q(1, 1));
        let z2 = Subspace::new(0, 3, vec![wv(&[1, 0, 0]), wv(&[0, 1, 0])]).unwrap();
        let c = complement_iso(&z, &z2, &q(1, 1)).unwrap();
        assert_eq!(c.distortion_bound(), q(1, 1));
    }

    #[test]
    fn balance_scalar() {
        assert_eq!(balance_factor(&q(3, 1), &q(3, 1), &q(1, 100)), q(1, 1));
        assert_eq!(balance_factor(&q(4, 1), &q(1, 4), &q(1, 100)), q(1, 4));
    }
}
