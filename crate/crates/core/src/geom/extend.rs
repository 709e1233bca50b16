//! Extension of an isomorphism between subspaces of `ℓ∞ⁿ` to an automorphism.
//!
//! With projections `P_i = B_i S_i⁻¹ U_i` onto `Y_i` and a complement map
//! `Q : ker U_1 → ker U_2`, the extension is
//! `W = T P_1 + s Q (I − P_1)` with inverse `W⁻¹ = T⁻¹ P_2 + s⁻¹ Q⁻¹ (I − P_2)`.

use serde::{Deserialize, Serialize};

use super::projection::{balance_factor, build_projection, complement_iso, ComplementStage};
use super::{ExtensionConfig, GeomError, LinMap};
use crate::linalg::{op_norm_inf, RMatrix};
use crate::rational::Rational;
use crate::vertex;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Extension {
    pub w: RMatrix,
    pub w_inv: RMatrix,
    pub norm: Rational,
    pub inv_norm: Rational,
    pub scale: Rational,
    pub stage: ComplementStage,
    /// Measured `‖S_1‖·‖S_1⁻¹‖`, `‖S_2‖·‖S_2⁻¹‖`, `‖T‖`, `‖T⁻¹‖`.
    pub s1_distortion: Rational,
    pub s2_distortion: Rational,
    pub t_norm: Rational,
    pub t_inv_norm: Rational,
}

fn distortion(smat: &RMatrix, b: &RMatrix, cap: usize) -> Result<Rational, GeomError> {
    let s = vertex::max_ratio(smat, b, cap)?.value;
    let s_inv = vertex::max_ratio(b, smat, cap)?.value;
    Ok(s * s_inv)
}

/// Extend `T : Y1 → ℓ∞[lo, hi)` (same window as `Y1`) to an automorphism `W`
/// with `W v_k = T v_k`, `‖W‖, ‖W⁻¹‖ ≤ c2`. Witnesses default to `v_k ↦ e_k`.
pub fn extend_isomorphism(
    t: &LinMap,
    s1: Option<&LinMap>,
    s2: Option<&LinMap>,
    cfg: &ExtensionConfig,
) -> Result<Extension, GeomError> {
    cfg.validate()?;
    let y1 = &t.domain;
    if t.lo != y1.lo || t.hi != y1.hi {
        return Err(GeomError::Precondition("T must map into the ambient window of its domain".into()));
    }
    let y2 = t.range().map_err(|_| GeomError::Precondition("T is not injective".into()))?;
    let h = y1.dim();
    let n = y1.ambient_dim();
    let hh = Rational::from(h * h);
    if hh > &cfg.c1 * &cfg.c1 * Rational::from(n) {
        return Err(GeomError::Precondition(format!("dimension {h} exceeds c1*sqrt({n}) with c1 = {}", cfg.c1)));
    }
    let b1 = y1.matrix().with_windows(0, 0);
    let b2 = y2.matrix().with_windows(0, 0);
    let s2 = match s2 {
        Some(s) => Some(LinMap { domain: y2.clone(), ..s.clone() }),
        None => None,
    };
    let smat = |s: Option<&LinMap>| s.map_or_else(|| RMatrix::identity(h), |s| s.image_matrix().with_windows(0, 0));
    let (sm1, sm2) = (smat(s1), smat(s2.as_ref()));
    let cap = cfg.vertex_cap;
    let (d1, d2, tn, ti) = if h == 0 {
        (Rational::one(), Rational::one(), Rational::zero(), Rational::zero())
    } else {
        (
            distortion(&sm1, &b1, cap)?,
            distortion(&sm2, &b2, cap)?,
            vertex::max_ratio(&b2, &b1, cap)?.value,
            vertex::max_ratio(&b1, &b2, cap)?.value,
        )
    };
    for (name, v) in [("|S1||S1^-1|", &d1), ("|S2||S2^-1|", &d2), ("|T|", &tn), ("|T^-1|", &ti)] {
        if *v >= cfg.rho {
            return Err(GeomError::Precondition(format!("{name} = {v} is not below rho = {}", cfg.rho)));
        }
    }
    let p1 = build_projection(y1, s1)?;
    let p2 = build_projection(&y2, s2.as_ref())?;
    let z1 = p1.kernel(y1.lo)?;
    let z2 = p2.kernel(y2.lo)?;
    let q = complement_iso(&z1, &z2, &cfg.c2)?;
    let scale = if z1.dim() == 0 {
        Rational::one()
    } else {
        balance_factor(&q.norm_bound, &q.inv_norm_bound, &cfg.delta)
    };
    let tp1 = if h == 0 { RMatrix::zeros(n, n) } else { b2.mul(&p1.s_inv)?.mul(&p1.u.clone().with_windows(0, 0))? };
    let tinv_p2 = if h == 0 { RMatrix::zeros(n, n) } else { b1.mul(&p2.s_inv)?.mul(&p2.u.clone().with_windows(0, 0))? };
    let qf = q.forward.clone().with_windows(0, 0).mul(&p1.complement().with_windows(0, 0))?;
    let qb = q.backward.clone().with_windows(0, 0).mul(&p2.complement().with_windows(0, 0))?;
    let w = tp1.add(&qf.scale(&scale))?.with_windows(y1.lo, y1.lo);
    let w_inv = tinv_p2.add(&qb.scale(&scale.recip()))?.with_windows(y1.lo, y1.lo);
    if !w.mul(&w_inv)?.is_identity() {
        return Err(GeomError::Verification("W * W^-1 is not the identity".into()));
    }
    if w.mul(&b1)?.with_windows(0, 0) != b2 {
        return Err(GeomError::Verification("W does not extend T on the basis".into()));
    }
    let norm = op_norm_inf(&w);
    let inv_norm = op_norm_inf(&w_inv);
    if norm > cfg.c2 || inv_norm > cfg.c2 {
        return Err(GeomError::NormBudget { norm, inv_norm, budget: cfg.c2.clone() });
    }
    Ok(Extension {
        w,
        w_inv,
        norm,
        inv_norm,
        scale,
        stage: q.stage,
        s1_distortion: d1,
        s2_distortion: d2,
        t_norm: tn,
        t_inv_norm: ti,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Subspace;
    use crate::linalg::WindowVector;
    use crate::rational::q;

    fn wv(v: &[i64]) -> WindowVector {
        WindowVector::from_ints(0, v)
    }

    #[test]
    fn full_dimension_gives_t() {
        let y = Subspace::ambient(0, 2);
        let img = vec![WindowVector::new(0, vec![q(1, 1), q(0, 1)]), WindowVector::new(0, vec![q(1, 2), q(1, 1)])];
        let t = LinMap::new(y, 0, 2, img).unwrap();
        let mut cfg = ExtensionConfig::default();
        cfg.c1 = q(2, 1);
        let e = extend_isomorphism(&t, None, None, &cfg).unwrap();
        assert_eq!(e.w.to_rows(), vec![vec![q(1, 1), q(1, 2)], vec![q(0, 1), q(1, 1)]]);
    }

    #[test]
    fn single_axis_identity() {
        let y = Subspace::new(0, 2, vec![wv(&[1, 0])]).unwrap();
        let t = LinMap::new(y, 0, 2, vec![wv(&[1, 0])]).unwrap();
        let e = extend_isomorphism(&t, None, None, &ExtensionConfig::default()).unwrap();
        assert!(e.w.is_identity());
    }

    #[test]
    fn indicator_to_indicator() {
        let y = Subspace::new(0, 4, vec![wv(&[1, 1, 0, 0])]).unwrap();
        let t = LinMap::new(y, 0, 4, vec![wv(&[0, 0, 1, 1])]).unwrap();
        let e = extend_isomorphism(&t, None, None, &ExtensionConfig::default()).unwrap();
        assert_eq!(e.w.mul_vec(&[q(1, 1), q(1, 1), q(0, 1), q(0, 1)]), vec![q(0, 1), q(0, 1), q(1, 1), q(1, 1)]);
        assert!(e.norm <= q(64, 1) && e.inv_norm <= q(64, 1));
    }
}
