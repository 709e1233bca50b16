//! Eventually periodic sequences and norm computations in ℓ∞/c₀.
//!
//! A span of [`TailVector`]s is handled through its coefficient rows: row `i`
//! is `(f_1(i), …, f_h(i))`, so `(Σ c_k f_k)(i) = row_i · c`. Past the longest
//! prefix the rows repeat with the lcm of the periods, and the quotient norm of
//! a combination is the maximum over that finite set of tail rows.

use std::collections::BTreeSet;

use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::geom::{self, GeomError, LinMap, Subspace};
use crate::linalg::{self, RMatrix, WindowVector};
use crate::rational::Rational;
use crate::vertex::{self, VertexError};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum QuotientError {
    #[error("tail pattern must be nonempty")]
    EmptyPeriod,
    #[error("π is not injective on the span: a nonzero combination is eventually zero")]
    NotInjective,
    #[error("restriction to [{n}, {n2}) is not injective")]
    NotInvertible { n: usize, n2: usize },
    #[error("epsilon {0} must lie in (0, 1)")]
    Epsilon(Rational),
    #[error("cut points must satisfy n < n2, got {n} and {n2}")]
    Cuts { n: usize, n2: usize },
    #[error("no index {0} in the family")]
    UnknownIndex(usize),
    #[error(transparent)]
    Vertex(#[from] VertexError),
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error(transparent)]
    Linalg(#[from] linalg::LinalgError),
}

/// Finite prefix on `[0, m)` followed by a repeated nonempty pattern.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TailVector {
    pub prefix: Vec<Rational>,
    pub period: Vec<Rational>,
}

impl TailVector {
    pub fn new(prefix: Vec<Rational>, period: Vec<Rational>) -> Result<Self, QuotientError> {
        if period.is_empty() {
            return Err(QuotientError::EmptyPeriod);
        }
        Ok(TailVector { prefix, period })
    }

    pub fn from_ints(prefix: &[i64], period: &[i64]) -> Self {
        let r = |v: &[i64]| v.iter().map(|&x| Rational::from_int(x)).collect();
        TailVector::new(r(prefix), r(period)).expect("nonempty period")
    }

    /// Finitely supported vector (zero tail).
    pub fn finite(w: &WindowVector) -> Self {
        TailVector { prefix: w.restrict(0, w.hi()).coords, period: vec![Rational::zero()] }
    }

    pub fn constant(v: Rational) -> Self {
        TailVector { prefix: vec![], period: vec![v] }
    }

    pub fn start(&self) -> usize {
        self.prefix.len()
    }

    pub fn period_len(&self) -> usize {
        self.period.len()
    }

    pub fn get(&self, i: usize) -> Rational {
        let m = self.prefix.len();
        if i < m {
            self.prefix[i].clone()
        } else {
            self.period[(i - m) % self.period.len()].clone()
        }
    }

    pub fn window(&self, lo: usize, hi: usize) -> WindowVector {
        WindowVector::new(lo, (lo..hi).map(|i| self.get(i)).collect())
    }

    pub fn sup_norm(&self) -> Rational {
        self.prefix.iter().chain(&self.period).map(|x| x.abs()).fold(Rational::zero(), Rational::max)
    }

    /// `sup_{i ≥ k} |f(i)|`.
    pub fn tail_sup(&self, k: usize) -> Rational {
        let from_prefix =
            self.prefix.iter().skip(k).map(|x| x.abs()).fold(Rational::zero(), Rational::max);
        from_prefix.max(quotient_norm(self))
    }

    pub fn scale(&self, s: &Rational) -> TailVector {
        TailVector {
            prefix: self.prefix.iter().map(|x| x * s).collect(),
            period: self.period.iter().map(|x| x * s).collect(),
        }
    }

    /// Shortest prefix and minimal period representing the same sequence.
    pub fn normalized(&self) -> TailVector {
        let l = self.period.len();
        let mut p = l;
        for d in 1..=l {
            if l % d == 0 && (0..l).all(|i| self.period[i] == self.period[i % d]) {
                p = d;
                break;
            }
        }
        let mut period: Vec<Rational> = self.period[..p].to_vec();
        let mut prefix = self.prefix.clone();
        while let Some(last) = prefix.last() {
            if *last == period[p - 1] {
                prefix.pop();
                period.rotate_right(1);
            } else {
                break;
            }
        }
        TailVector { prefix, period }
    }

    /// Pointwise `Σ c_k f_k`, or `None` when the period lcm exceeds `lcm_cap`.
    pub fn combine(fs: &[&TailVector], c: &[Rational], lcm_cap: usize) -> Option<TailVector> {
        let (m, l) = alignment(fs)?;
        if l > lcm_cap {
            return None;
        }
        let val = |i: usize| fs.iter().zip(c).map(|(f, ck)| ck * &f.get(i)).sum::<Rational>();
        Some(TailVector { prefix: (0..m).map(val).collect(), period: (m..m + l).map(val).collect() }.normalized())
    }

    pub fn sub(&self, other: &TailVector, lcm_cap: usize) -> Option<TailVector> {
        TailVector::combine(&[self, other], &[Rational::one(), -Rational::one()], lcm_cap)
    }
}

/// `limsup |f|`: the largest absolute value in the repeated pattern.
pub fn quotient_norm(f: &TailVector) -> Rational {
    f.period.iter().map(|x| x.abs()).fold(Rational::zero(), Rational::max)
}

/// `f − g ∈ c₀`, decided by period alignment.
pub fn eventually_equal(f: &TailVector, g: &TailVector) -> bool {
    let (m, l) = alignment(&[f, g]).expect("two periods");
    (m..m + l).all(|i| f.get(i) == g.get(i))
}

// (max prefix length, lcm of periods); None only for an empty list.
fn alignment(fs: &[&TailVector]) -> Option<(usize, usize)> {
    if fs.is_empty() {
        return None;
    }
    let m = fs.iter().map(|f| f.start()).max().unwrap_or(0);
    let l = fs.iter().fold(1usize, |acc, f| acc.lcm(&f.period_len()));
    Some((m, l))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuotientConfig {
    /// Period lcm above which computations fall back to horizon mode.
    pub lcm_cap: usize,
    /// Horizon used in horizon mode.
    pub horizon: usize,
    pub vertex_cap: usize,
}

impl Default for QuotientConfig {
    fn default() -> Self {
        QuotientConfig { lcm_cap: 4096, horizon: 512, vertex_cap: vertex::DEFAULT_VERTEX_CAP }
    }
}

/// Coefficient rows of a finite span of tail vectors.
#[derive(Debug, Clone)]
pub struct SpanRows<'a> {
    fs: Vec<&'a TailVector>,
    /// Max prefix length.
    pub start: usize,
    /// Period of the rows (lcm), or the horizon window length in horizon mode.
    pub period: usize,
    /// Set when the lcm exceeded the cap; tail claims then hold on `[start, horizon)` only.
    pub horizon: Option<usize>,
}

impl<'a> SpanRows<'a> {
    pub fn new(fs: Vec<&'a TailVector>, cfg: &QuotientConfig) -> Self {
        let m = fs.iter().map(|f| f.start()).max().unwrap_or(0);
        let l = fs.iter().fold(1usize, |acc, f| acc.lcm(&f.period_len()));
        if l > cfg.lcm_cap {
            let h = cfg.horizon.max(m + 1);
            SpanRows { fs, start: m, period: h - m, horizon: Some(h) }
        } else {
            SpanRows { fs, start: m, period: l, horizon: None }
        }
    }

    pub fn dim(&self) -> usize {
        self.fs.len()
    }

    pub fn row(&self, i: usize) -> Vec<Rational> {
        self.fs.iter().map(|f| f.get(i)).collect()
    }

    /// Rows `i ∈ [lo, hi)` as a matrix (hi − lo) × dim.
    pub fn rows(&self, lo: usize, hi: usize) -> RMatrix {
        if hi <= lo {
            return RMatrix::zeros(0, self.dim());
        }
        RMatrix::from_rows((lo..hi).map(|i| self.row(i)).collect()).expect("uniform width").with_windows(lo, 0)
    }

    /// Distinct rows of one full period of the tail.
    pub fn tail_rows(&self) -> RMatrix {
        let set: BTreeSet<Vec<Rational>> = (self.start..self.start + self.period).map(|i| self.row(i)).collect();
        if set.is_empty() {
            return RMatrix::zeros(0, self.dim());
        }
        RMatrix::from_rows(set.into_iter().collect()).expect("uniform width")
    }

    fn check_injective(&self) -> Result<RMatrix, QuotientError> {
        let t = self.tail_rows();
        if linalg::rank(&t) < self.dim() {
            return Err(QuotientError::NotInjective);
        }
        Ok(t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowKind {
    TailLift,
    PrefixRestriction,
}

/// Window index `N` with the ratio it certifies.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LiftWindow {
    pub n: usize,
    pub epsilon: Rational,
    pub direction: WindowKind,
    /// The extremal ratio at `N` (≤ 1/(1−ε)) and the coefficient vector attaining it.
    pub ratio: Rational,
    pub witness: Vec<Rational>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
}

fn check_eps(eps: &Rational) -> Result<Rational, QuotientError> {
    if !eps.is_positive() || *eps >= Rational::one() {
        return Err(QuotientError::Epsilon(eps.clone()));
    }
    Ok((Rational::one() - eps).recip())
}

// Smallest n in [lo, hi] with ok(n), assuming monotonicity and ok(hi).
fn first_true<T>(lo: usize, hi: usize, mut ok: impl FnMut(usize) -> Result<Option<T>, QuotientError>) -> Result<(usize, T), QuotientError> {
    let mut best = (hi, ok(hi)?.expect("upper end must succeed"));
    let (mut a, mut b) = (lo, hi);
    while a < b {
        let mid = a + (b - a) / 2;
        match ok(mid)? {
            Some(v) => {
                best = (mid, v);
                b = mid;
            }
            None => a = mid + 1,
        }
    }
    Ok(best)
}

/// Smallest `N` such that `(1−ε)‖y_{[N,∞)}‖ ≤ ‖π(y)‖` on the span.
pub fn lifting_index(fs: &[TailVector], eps: &Rational, cfg: &QuotientConfig) -> Result<LiftWindow, QuotientError> {
    let bound = check_eps(eps)?;
    let rows = SpanRows::new(fs.iter().collect(), cfg);
    if rows.dim() > cfg.vertex_cap {
        return Err(VertexError::DimensionCap { dim: rows.dim(), cap: cfg.vertex_cap }.into());
    }
    let tail = rows.check_injective()?;
    let m = rows.start;
    let (n, (ratio, witness)) = first_true(0, m, |n| {
        if n >= m {
            return Ok(Some((Rational::one(), vec![Rational::zero(); rows.dim()])));
        }
        let r = vertex::max_ratio(&rows.rows(n, m), &tail, cfg.vertex_cap)?;
        let value = r.value.max(Rational::one());
        Ok((value <= bound).then_some((value, r.witness)))
    })?;
    Ok(LiftWindow { n, epsilon: eps.clone(), direction: WindowKind::TailLift, ratio, witness, horizon: rows.horizon })
}

/// Smallest `N ≥ 1` such that `(1−ε)‖y‖ ≤ ‖y_{[0,N)}‖` on the span.
pub fn restriction_index(fs: &[TailVector], eps: &Rational, cfg: &QuotientConfig) -> Result<LiftWindow, QuotientError> {
    let bound = check_eps(eps)?;
    let rows = SpanRows::new(fs.iter().collect(), cfg);
    let h = rows.dim();
    if h > cfg.vertex_cap {
        return Err(VertexError::DimensionCap { dim: h, cap: cfg.vertex_cap }.into());
    }
    let top = rows.start + rows.period;
    let all = rows.rows(0, top);
    if linalg::rank(&all) < h {
        return Err(QuotientError::NotInjective);
    }
    let (n, (ratio, witness)) = first_true(1, top, |n| {
        let den = rows.rows(0, n);
        if linalg::rank(&den) < h {
            return Ok(None);
        }
        let r = vertex::max_ratio(&all, &den, cfg.vertex_cap)?;
        Ok((r.value <= bound).then_some((r.value, r.witness)))
    })?;
    Ok(LiftWindow { n, epsilon: eps.clone(), direction: WindowKind::PrefixRestriction, ratio, witness, horizon: rows.horizon })
}

/// A measured norm with the coefficient vector attaining it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Measured {
    pub value: Rational,
    pub witness: Vec<Rational>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
}

fn select<'a>(fs: &'a [TailVector], a: &[usize]) -> Result<Vec<&'a TailVector>, QuotientError> {
    a.iter().map(|&k| fs.get(k).ok_or(QuotientError::UnknownIndex(k))).collect()
}

/// `‖Π_{F,a,n}‖`: the largest `‖y_{[n,∞)}‖` over `‖π(y)‖ ≤ 1`, `y ∈ span{f_ξ : ξ ∈ a}`.
pub fn pi_section_norm(fs: &[TailVector], a: &[usize], n: usize, cfg: &QuotientConfig) -> Result<Measured, QuotientError> {
    let sel = select(fs, a)?;
    if sel.is_empty() {
        return Ok(Measured { value: Rational::zero(), witness: vec![], horizon: None });
    }
    let rows = SpanRows::new(sel, cfg);
    let tail = rows.check_injective()?;
    let m = rows.start;
    if n >= m {
        let w = vertex::max_ratio(&tail, &tail, cfg.vertex_cap)?;
        return Ok(Measured { value: Rational::one(), witness: w.witness, horizon: rows.horizon });
    }
    let num = rows.rows(n, m).stack(&tail)?;
    let r = vertex::max_ratio(&num, &tail, cfg.vertex_cap)?;
    Ok(Measured { value: r.value, witness: r.witness, horizon: rows.horizon })
}

/// `R_{F,a,n,n'} = P_{[0,n')} ∘ Π_{F,a,n}` on coefficient space.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ROperator {
    /// Domain is the span of the tail-row columns, whose ℓ∞ norm is the quotient norm.
    pub map: LinMap,
    pub n: usize,
    pub n2: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
}

pub fn r_operator(fs: &[TailVector], a: &[usize], n: usize, n2: usize, cfg: &QuotientConfig) -> Result<ROperator, QuotientError> {
    if n >= n2 {
        return Err(QuotientError::Cuts { n, n2 });
    }
    let sel = select(fs, a)?;
    let rows = SpanRows::new(sel, cfg);
    let tail = rows.check_injective()?;
    let h = rows.dim();
    let win = rows.rows(n, n2);
    if linalg::rank(&win) < h {
        return Err(QuotientError::NotInvertible { n, n2 });
    }
    let domain = Subspace::new(0, tail.rows(), (0..h).map(|k| WindowVector::new(0, tail.col_vec(k))).collect())?;
    let images = (0..h).map(|k| WindowVector::new(n, win.col_vec(k))).collect();
    let map = LinMap::new(domain, n, n2, images)?;
    Ok(ROperator { map, n, n2, horizon: rows.horizon })
}

/// `‖R⁻¹‖`: the largest quotient norm over `‖y_{[n,n')}‖ ≤ 1`.
pub fn r_operator_inverse_norm(r: &ROperator, cap: usize) -> Result<Measured, QuotientError> {
    if r.map.domain.dim() == 0 {
        return Ok(Measured { value: Rational::zero(), witness: vec![], horizon: r.horizon });
    }
    let lb = geom::lower_bound(&r.map, cap)?;
    Ok(Measured { value: lb.value.recip(), witness: lb.witness, horizon: r.horizon })
}
