//! Subspaces of finite-dimensional ℓ∞ and linear maps between them.
//!
//! A [`Subspace`] is stored as its basis matrix `B` (ambient × dim), so every
//! vector of the subspace is `B c` for a coefficient vector `c`. Norm questions
//! reduce to maxima of `‖N c‖∞` over polytopes `{c : ‖D c‖∞ ≤ 1}`, which
//! [`crate::vertex::max_ratio`] answers exactly.

mod extend;
mod projection;

pub use extend::{extend_isomorphism, Extension};
pub use projection::{
    balance_factor, balanced_rescale, build_projection, complement_iso, coordinate_witness, ComplementIso, ComplementStage, Projection,
};

use serde::{Deserialize, Serialize};

use crate::linalg::{self, LinalgError, RMatrix, WindowVector};
use crate::lp::{self, LpError};
use crate::rational::Rational;
use crate::vertex::{self, VertexError};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GeomError {
    #[error("basis vectors are linearly dependent (rank {rank} of {dim})")]
    Dependent { rank: usize, dim: usize },
    #[error("vector window [{lo}, {hi}) does not match ambient [{alo}, {ahi})")]
    Window { lo: usize, hi: usize, alo: usize, ahi: usize },
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("no complement isomorphism within budget {budget} (best distortion bound {best})")]
    NotFound { budget: Rational, best: Rational },
    #[error("norm budget exceeded: |W| = {norm}, |W^-1| = {inv_norm}, budget {budget}")]
    NormBudget { norm: Rational, inv_norm: Rational, budget: Rational },
    #[error("verification failed: {0}")]
    Verification(String),
    #[error(transparent)]
    Vertex(#[from] VertexError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Lp(#[from] LpError),
}

/// Constants of the extension step: `ρ`, the density coefficient `c1`, the
/// norm budget `c2`, the rescaling slack `δ` and the vertex dimension cap.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtensionConfig {
    pub rho: Rational,
    pub c1: Rational,
    pub c2: Rational,
    pub delta: Rational,
    pub vertex_cap: usize,
}

impl Default for ExtensionConfig {
    fn default() -> Self {
        ExtensionConfig {
            rho: Rational::from_int(4),
            c1: Rational::one(),
            c2: Rational::from_int(64),
            delta: Rational::new(1, 100),
            vertex_cap: vertex::DEFAULT_VERTEX_CAP,
        }
    }
}

impl ExtensionConfig {
    pub fn validate(&self) -> Result<(), GeomError> {
        if self.rho <= Rational::one() {
            return Err(GeomError::Precondition(format!("rho = {} must exceed 1", self.rho)));
        }
        if self.c2 < self.rho {
            return Err(GeomError::Precondition(format!("c2 = {} below rho = {}", self.c2, self.rho)));
        }
        if !self.c1.is_positive() || !self.delta.is_positive() {
            return Err(GeomError::Precondition("c1 and delta must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Subspace {
    pub lo: usize,
    pub hi: usize,
    pub basis: Vec<WindowVector>,
}

impl Subspace {
    pub fn new(lo: usize, hi: usize, basis: Vec<WindowVector>) -> Result<Self, GeomError> {
        let basis: Vec<WindowVector> = basis
            .into_iter()
            .map(|v| {
                if v.lo < lo || v.hi() > hi {
                    if v.coords.iter().enumerate().any(|(i, c)| !c.is_zero() && (v.lo + i < lo || v.lo + i >= hi)) {
                        return Err(GeomError::Window { lo: v.lo, hi: v.hi(), alo: lo, ahi: hi });
                    }
                }
                Ok(v.restrict(lo, hi))
            })
            .collect::<Result<_, _>>()?;
        let sub = Subspace { lo, hi, basis };
        let rank = linalg::rank(&sub.matrix());
        if rank < sub.dim() {
            return Err(GeomError::Dependent { rank, dim: sub.dim() });
        }
        Ok(sub)
    }

    /// The whole of `ℓ∞[lo, hi)` with its unit vector basis.
    pub fn ambient(lo: usize, hi: usize) -> Self {
        let n = hi - lo;
        let basis = (0..n)
            .map(|k| {
                let mut v = WindowVector::zeros(lo, n);
                v.coords[k] = Rational::one();
                v
            })
            .collect();
        Subspace::new(lo, hi, basis).expect("unit vectors are independent")
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn ambient_dim(&self) -> usize {
        self.hi - self.lo
    }

    /// Basis matrix `B`, ambient × dim.
    pub fn matrix(&self) -> RMatrix {
        RMatrix::from_cols(&self.basis.iter().map(|v| v.coords.clone()).collect::<Vec<_>>(), self.ambient_dim())
            .with_windows(self.lo, 0)
    }

    /// Coefficients of `v` in this basis, if `v` lies in the subspace.
    pub fn coords_of(&self, v: &WindowVector) -> Option<Vec<Rational>> {
        let b = self.matrix();
        let x = v.restrict(self.lo, self.hi);
        if v.coords.iter().enumerate().any(|(i, c)| !c.is_zero() && (v.lo + i < self.lo || v.lo + i >= self.hi)) {
            return None;
        }
        let c = linalg::solve(&b, &x.coords)?;
        (b.mul_vec(&c) == x.coords).then_some(c)
    }

    pub fn contains(&self, v: &WindowVector) -> bool {
        self.coords_of(v).is_some()
    }
}

/// Linear map from a subspace into `ℓ∞[lo, hi)` given by the images of the
/// domain basis.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinMap {
    pub domain: Subspace,
    pub lo: usize,
    pub hi: usize,
    pub images: Vec<WindowVector>,
}

impl LinMap {
    pub fn new(domain: Subspace, lo: usize, hi: usize, images: Vec<WindowVector>) -> Result<Self, GeomError> {
        if images.len() != domain.dim() {
            return Err(GeomError::Precondition(format!(
                "{} images for a {}-dimensional domain",
                images.len(),
                domain.dim()
            )));
        }
        for v in &images {
            if v.coords.iter().enumerate().any(|(i, c)| !c.is_zero() && (v.lo + i < lo || v.lo + i >= hi)) {
                return Err(GeomError::Window { lo: v.lo, hi: v.hi(), alo: lo, ahi: hi });
            }
        }
        let images = images.into_iter().map(|v| v.restrict(lo, hi)).collect();
        Ok(LinMap { domain, lo, hi, images })
    }

    /// Map into a declared codomain subspace; membership of every image is checked.
    pub fn into_subspace(domain: Subspace, codomain: &Subspace, images: Vec<WindowVector>) -> Result<Self, GeomError> {
        for (k, v) in images.iter().enumerate() {
            if !codomain.contains(v) {
                return Err(GeomError::Precondition(format!("image {k} is outside the codomain")));
            }
        }
        LinMap::new(domain, codomain.lo, codomain.hi, images)
    }

    /// Map from coefficient matrix: `T(Σ c_k v_k) = A c` into `ℓ∞[lo, lo + rows)`.
    pub fn from_coefficients(domain: Subspace, lo: usize, a: &RMatrix) -> Result<Self, GeomError> {
        let images = (0..a.cols()).map(|j| WindowVector::new(lo, a.col_vec(j))).collect();
        LinMap::new(domain, lo, lo + a.rows(), images)
    }

    /// Image matrix (codomain × dim): column k is `T v_k`.
    pub fn image_matrix(&self) -> RMatrix {
        RMatrix::from_cols(&self.images.iter().map(|v| v.coords.clone()).collect::<Vec<_>>(), self.hi - self.lo)
            .with_windows(self.lo, 0)
    }

    pub fn apply_coeffs(&self, c: &[Rational]) -> WindowVector {
        WindowVector::new(self.lo, self.image_matrix().mul_vec(c))
    }

    pub fn apply(&self, v: &WindowVector) -> Option<WindowVector> {
        self.domain.coords_of(v).map(|c| self.apply_coeffs(&c))
    }

    pub fn is_injective(&self) -> bool {
        linalg::rank(&self.image_matrix()) == self.domain.dim()
    }

    /// The range as a subspace (requires injectivity).
    pub fn range(&self) -> Result<Subspace, GeomError> {
        Subspace::new(self.lo, self.hi, self.images.clone())
    }

    /// `T⁻¹ : range(T) → ambient of the domain`.
    pub fn inverse(&self) -> Result<LinMap, GeomError> {
        let range = self.range()?;
        LinMap::new(range, self.domain.lo, self.domain.hi, self.domain.basis.clone())
    }

    pub fn compose_scalar(&self, s: &Rational) -> LinMap {
        LinMap { images: self.images.iter().map(|v| v.scale(s)).collect(), ..self.clone() }
    }
}

/// `‖T‖` exactly, with a coefficient vector `c` attaining it on the unit sphere.
pub fn map_norm(t: &LinMap, cap: usize) -> Result<vertex::MaxRatio, GeomError> {
    if t.domain.dim() == 0 {
        return Ok(vertex::MaxRatio { value: Rational::zero(), witness: vec![] });
    }
    Ok(vertex::max_ratio(&t.image_matrix(), &t.domain.matrix(), cap)?)
}

/// Best lower bound `r` with `r‖x‖ ≤ ‖Tx‖`, plus an extremal domain vector.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LowerBound {
    pub value: Rational,
    /// Coefficients of the witness `x`; `‖Tx‖ = value · ‖x‖`.
    pub witness: Vec<Rational>,
}

pub fn lower_bound(t: &LinMap, cap: usize) -> Result<LowerBound, GeomError> {
    let h = t.domain.dim();
    if h > cap {
        return Err(VertexError::DimensionCap { dim: h, cap }.into());
    }
    if h == 0 {
        return Ok(LowerBound { value: Rational::zero(), witness: vec![] });
    }
    let img = t.image_matrix();
    if linalg::rank(&img) < h {
        let ns = linalg::nullspace(&img);
        return Ok(LowerBound { value: Rational::zero(), witness: ns[0].clone() });
    }
    let m = vertex::max_ratio(&t.domain.matrix(), &img, cap)?;
    Ok(LowerBound { value: m.value.recip(), witness: m.witness })
}

/// Hahn–Banach extension of `φ` (given on the basis of `Y`) with its ℓ₁ representer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HbExtension {
    pub representer: WindowVector,
    pub norm: Rational,
}

pub fn hahn_banach_extend(y: &Subspace, phi: &[Rational]) -> Result<HbExtension, GeomError> {
    if phi.len() != y.dim() {
        return Err(GeomError::Precondition(format!("{} values for dimension {}", phi.len(), y.dim())));
    }
    let bt = y.matrix().transpose();
    let sol = lp::lp_min_l1(&bt, phi)?;
    let rep = WindowVector::new(y.lo, sol.u.coords);
    Ok(HbExtension { representer: rep, norm: sol.value })
}

/// `‖φ‖` on `Y` by vertex enumeration of the unit ball of `Y`.
pub fn dual_norm(y: &Subspace, phi: &[Rational], cap: usize) -> Result<Rational, GeomError> {
    if y.dim() == 0 {
        return Ok(Rational::zero());
    }
    let row = RMatrix::from_rows(vec![phi.to_vec()])?;
    Ok(vertex::max_ratio(&row, &y.matrix(), cap)?.value)
}
