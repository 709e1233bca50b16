//! Certified injections into ℕ: affine maps on residue classes and fiber
//! enumerations over ordinal windows, each with a finite patch.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use super::certset::{CertSet, Prog};
use super::nice_ext::{nice_ext, verify_nice_ext};
use super::ordinal::{Ordinal, Pos};
use super::AdfError;

pub trait Domain: Clone + fmt::Debug {
    type Pos: Ord + Copy + fmt::Debug + fmt::Display + Serialize;
    fn has(&self, x: &Self::Pos) -> bool;
    fn same(&self, other: &Self) -> Result<bool, AdfError>;
    fn within(&self, other: &Self) -> Result<bool, AdfError>;
    /// Whether `self ∖ sub` is infinite.
    fn infinite_beyond(&self, sub: &Self) -> Result<bool, AdfError>;
    /// The `k` smallest elements of `self ∖ sub` outside `skip`.
    fn smallest_beyond(&self, sub: &Self, k: usize, skip: &BTreeSet<Self::Pos>) -> Result<Vec<Self::Pos>, AdfError>;
}

impl Domain for CertSet {
    type Pos = u64;

    fn has(&self, x: &u64) -> bool {
        self.contains(*x)
    }

    fn same(&self, other: &Self) -> Result<bool, AdfError> {
        self.same_as(other)
    }

    fn within(&self, other: &Self) -> Result<bool, AdfError> {
        self.is_subset(other)
    }

    fn infinite_beyond(&self, sub: &Self) -> Result<bool, AdfError> {
        Ok(self.minus(sub)?.is_infinite())
    }

    fn smallest_beyond(&self, sub: &Self, k: usize, skip: &BTreeSet<u64>) -> Result<Vec<u64>, AdfError> {
        Ok(self.minus(sub)?.smallest(k, skip))
    }
}

/// The window `ω·α`: positions `(β, j)` with `β < α`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrdWindow {
    pub alpha: Ordinal,
}

impl OrdWindow {
    pub fn new(alpha: Ordinal) -> Self {
        OrdWindow { alpha }
    }
}

impl Domain for OrdWindow {
    type Pos = Pos;

    fn has(&self, x: &Pos) -> bool {
        x.fiber < self.alpha
    }

    fn same(&self, other: &Self) -> Result<bool, AdfError> {
        Ok(self == other)
    }

    fn within(&self, other: &Self) -> Result<bool, AdfError> {
        Ok(self.alpha <= other.alpha)
    }

    fn infinite_beyond(&self, sub: &Self) -> Result<bool, AdfError> {
        Ok(sub.alpha < self.alpha)
    }

    fn smallest_beyond(&self, sub: &Self, k: usize, skip: &BTreeSet<Pos>) -> Result<Vec<Pos>, AdfError> {
        if sub.alpha >= self.alpha {
            return Ok(Vec::new());
        }
        Ok((0..).map(|j| Pos::new(sub.alpha, j)).filter(|p| !skip.contains(p)).take(k).collect())
    }
}

pub type PosOf<I> = <<I as Injection>::D as Domain>::Pos;

pub trait Injection: Sized {
    type D: Domain;
    fn domain(&self) -> &Self::D;
    /// `None` outside the domain.
    fn eval(&self, x: &PosOf<Self>) -> Result<Option<u64>, AdfError>;
    fn preimage(&self, v: u64) -> Result<Option<PosOf<Self>>, AdfError>;
    fn range(&self) -> Result<CertSet, AdfError>;
    fn patch(&self) -> &BTreeMap<PosOf<Self>, u64>;
    /// Points of the common domain where the two maps differ, or `None` when
    /// the rules do not match structurally on an infinite part.
    fn differences(&self, other: &Self) -> Result<Option<BTreeSet<PosOf<Self>>>, AdfError>;
    /// Same rule on a new domain with a replacement patch.
    fn repatch(&self, domain: Self::D, patch: BTreeMap<PosOf<Self>, u64>) -> Result<Self, AdfError>;
    /// Rule-level disjointness of images plus patch collision check.
    fn check_injective(&self) -> Result<(), AdfError>;
}

/// `x ↦ m·x + c` on the progression `dom`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Affine {
    pub dom: Prog,
    pub m: u64,
    pub c: i64,
}

impl Affine {
    pub fn apply(&self, x: u64) -> Result<u64, AdfError> {
        let v = self.m as i128 * x as i128 + self.c as i128;
        u64::try_from(v).map_err(|_| AdfError::Overflow)
    }

    fn image(&self, s: &CertSet) -> Result<CertSet, AdfError> {
        let progs = s
            .progs()
            .iter()
            .map(|p| Ok(Prog::new(self.apply(p.a)?, p.d.checked_mul(self.m).ok_or(AdfError::Overflow)?)))
            .collect::<Result<Vec<_>, AdfError>>()?;
        let add = s.added().iter().map(|&x| self.apply(x)).collect::<Result<Vec<_>, _>>()?;
        let rem = s.removed().iter().map(|&x| self.apply(x)).collect::<Result<Vec<_>, _>>()?;
        CertSet::from_parts(progs, add, rem)
    }

    fn invert(&self, v: u64) -> Option<u64> {
        let d = v as i128 - self.c as i128;
        (d >= 0 && d % self.m as i128 == 0).then(|| (d / self.m as i128) as u64).filter(|&x| self.dom.contains(x))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NatInjection {
    domain: CertSet,
    pieces: Vec<Affine>,
    patch: BTreeMap<u64, u64>,
    #[serde(skip)]
    inv: BTreeMap<u64, u64>,
}

impl NatInjection {
    pub fn new(domain: CertSet, pieces: Vec<Affine>, patch: BTreeMap<u64, u64>) -> Result<Self, AdfError> {
        for (i, p) in pieces.iter().enumerate() {
            if p.m == 0 {
                return Err(AdfError::Domain("affine slope must be positive".into()));
            }
            p.apply(p.dom.a)?;
            for q in &pieces[i + 1..] {
                if p.dom.intersect(&q.dom)?.is_some() {
                    return Err(AdfError::Domain("affine pieces overlap".into()));
                }
            }
        }
        if let Some(k) = patch.keys().find(|k| !domain.contains(**k)) {
            return Err(AdfError::Domain(format!("patched point {k} lies outside the domain")));
        }
        let covered = CertSet::from_parts(pieces.iter().map(|p| p.dom), [], [])?;
        let bare = domain
            .minus(&covered)?
            .elements()
            .ok_or_else(|| AdfError::Domain("domain has infinitely many points without a rule".into()))?;
        if let Some(x) = bare.iter().find(|x| !patch.contains_key(x)) {
            return Err(AdfError::Domain(format!("no rule or patch value at {x}")));
        }
        let inv = patch.iter().map(|(&k, &v)| (v, k)).collect();
        Ok(NatInjection { domain, pieces, patch, inv })
    }

    /// A single affine map on the whole domain.
    pub fn affine(domain: CertSet, m: u64, c: i64) -> Result<Self, AdfError> {
        NatInjection::new(domain, vec![Affine { dom: Prog::new(0, 1), m, c }], BTreeMap::new())
    }

    pub fn pieces(&self) -> &[Affine] {
        &self.pieces
    }

    /// The restriction to a subdomain.
    pub fn restrict(&self, domain: CertSet) -> Result<Self, AdfError> {
        let patch = self.patch.iter().filter(|(k, _)| domain.contains(**k)).map(|(&k, &v)| (k, v)).collect();
        self.repatch(domain, patch)
    }

    fn rule(&self, x: u64) -> Result<Option<u64>, AdfError> {
        match self.pieces.iter().find(|p| p.dom.contains(x)) {
            Some(p) => Ok(Some(p.apply(x)?)),
            None => Ok(None),
        }
    }

    fn rule_images(&self) -> Result<Vec<CertSet>, AdfError> {
        let keys = CertSet::finite(self.patch.keys().copied());
        self.pieces
            .iter()
            .map(|p| p.image(&self.domain.intersect(&CertSet::progression(p.dom.a, p.dom.d))?.minus(&keys)?))
            .collect()
    }
}

impl Injection for NatInjection {
    type D = CertSet;

    fn domain(&self) -> &CertSet {
        &self.domain
    }

    fn eval(&self, x: &u64) -> Result<Option<u64>, AdfError> {
        if !self.domain.contains(*x) {
            return Ok(None);
        }
        if let Some(v) = self.patch.get(x) {
            return Ok(Some(*v));
        }
        self.rule(*x)?.map(Some).ok_or_else(|| AdfError::Domain(format!("no rule at {x}")))
    }

    fn preimage(&self, v: u64) -> Result<Option<u64>, AdfError> {
        if let Some(k) = self.inv.get(&v) {
            return Ok(Some(*k));
        }
        Ok(self
            .pieces
            .iter()
            .filter_map(|p| p.invert(v))
            .find(|x| self.domain.contains(*x) && !self.patch.contains_key(x)))
    }

    fn range(&self) -> Result<CertSet, AdfError> {
        let rule = CertSet::union_all(&self.rule_images()?)?;
        rule.union(&CertSet::finite(self.patch.values().copied()))
    }

    fn patch(&self) -> &BTreeMap<u64, u64> {
        &self.patch
    }

    fn differences(&self, other: &Self) -> Result<Option<BTreeSet<u64>>, AdfError> {
        let common = self.domain.intersect(&other.domain)?;
        let mut cands: BTreeSet<u64> = self.patch.keys().chain(other.patch.keys()).copied().collect();
        for p in &self.pieces {
            for q in &other.pieces {
                if p.m == q.m && p.c == q.c {
                    continue;
                }
                let Some(r) = p.dom.intersect(&q.dom)? else { continue };
                match CertSet::progression(r.a, r.d).intersect(&common)?.elements() {
                    Some(pts) => cands.extend(pts),
                    None => return Ok(None),
                }
            }
        }
        let mut out = BTreeSet::new();
        for x in cands.into_iter().filter(|x| common.contains(*x)) {
            if self.eval(&x)? != other.eval(&x)? {
                out.insert(x);
            }
        }
        Ok(Some(out))
    }

    fn repatch(&self, domain: CertSet, patch: BTreeMap<u64, u64>) -> Result<Self, AdfError> {
        NatInjection::new(domain, self.pieces.clone(), patch)
    }

    fn check_injective(&self) -> Result<(), AdfError> {
        let images = self.rule_images()?;
        for i in 0..images.len() {
            for j in i + 1..images.len() {
                let meet = images[i].intersect(&images[j])?;
                if !meet.is_empty() {
                    return Err(AdfError::Verification(format!("affine images overlap in {meet}")));
                }
            }
        }
        if self.inv.len() != self.patch.len() {
            return Err(AdfError::Verification("two patched points share a value".into()));
        }
        for (k, v) in &self.patch {
            if images.iter().any(|s| s.contains(*v)) {
                return Err(AdfError::Verification(format!("patched value {v} at {k} is also a rule value")));
            }
        }
        Ok(())
    }
}

/// Supplies the fiber sets `E_β` enumerated by fiber injections.
pub trait FiberSource: Send + Sync + fmt::Debug {
    fn fiber(&self, beta: Ordinal) -> Result<CertSet, AdfError>;
    /// The fiber whose set contains `v`, if any.
    fn locate(&self, v: u64) -> Result<Option<Ordinal>, AdfError>;
}

#[derive(Debug, Default)]
pub struct NoFibers;

impl FiberSource for NoFibers {
    fn fiber(&self, beta: Ordinal) -> Result<CertSet, AdfError> {
        Err(AdfError::BeyondStages(format!("no fiber set for {beta}")))
    }

    fn locate(&self, _v: u64) -> Result<Option<Ordinal>, AdfError> {
        Ok(None)
    }
}

/// On `ω·α`: fibers `β ≥ from` map `(β, j)` to the `j`-th element of `E_β`;
/// fibers below `from` are delegated to a limit stage.
#[derive(Clone)]
pub struct FiberInjection {
    source: Arc<dyn FiberSource>,
    below: Option<Arc<LimitStage>>,
    from: Ordinal,
    window: OrdWindow,
    extra: BTreeMap<Ordinal, CertSet>,
    patch: BTreeMap<Pos, u64>,
    inv: BTreeMap<u64, Pos>,
}

impl fmt::Debug for FiberInjection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FiberInjection")
            .field("from", &self.from)
            .field("window", &self.window.alpha)
            .field("below", &self.below.as_ref().map(|b| b.xi))
            .field("extra", &self.extra.keys().collect::<Vec<_>>())
            .field("patch", &self.patch.len())
            .finish()
    }
}

impl FiberInjection {
    pub fn fibers(
        source: Arc<dyn FiberSource>,
        below: Option<Arc<LimitStage>>,
        from: Ordinal,
        end: Ordinal,
    ) -> Self {
        FiberInjection {
            source,
            below,
            from,
            window: OrdWindow::new(end),
            extra: BTreeMap::new(),
            patch: BTreeMap::new(),
            inv: BTreeMap::new(),
        }
    }

    /// The empty map on `ω·0`.
    pub fn empty() -> Self {
        FiberInjection::fibers(Arc::new(NoFibers), None, Ordinal::ZERO, Ordinal::ZERO)
    }

    pub fn from(&self) -> Ordinal {
        self.from
    }

    pub fn below(&self) -> Option<&Arc<LimitStage>> {
        self.below.as_ref()
    }

    /// Append the fiber `I_α ↦ e` at the top of the window.
    pub fn push_fiber(&self, e: CertSet) -> Result<Self, AdfError> {
        let alpha = self.window.alpha;
        if alpha < self.from {
            return Err(AdfError::Domain("window ends below the fiber region".into()));
        }
        let mut out = self.clone();
        out.extra.insert(alpha, e);
        out.window = OrdWindow::new(alpha.succ());
        Ok(out)
    }

    pub fn fiber_set(&self, beta: Ordinal) -> Result<CertSet, AdfError> {
        match self.extra.get(&beta) {
            Some(e) => Ok(e.clone()),
            None => self.source.fiber(beta),
        }
    }

    /// Fibers handled by the enumeration rule, ascending.
    pub fn rule_fibers(&self) -> Result<Vec<Ordinal>, AdfError> {
        let (lo, hi) = (self.from, self.window.alpha);
        if hi <= lo {
            return Ok(Vec::new());
        }
        if hi.c2 != lo.c2 || hi.c1 != lo.c1 {
            return Err(AdfError::UnsupportedOrdinal(format!("fiber region [{lo}, {hi}) is infinite")));
        }
        Ok((0..hi.c0 - lo.c0).map(|i| lo.plus_finite(i)).collect())
    }

    pub fn rule_eval(&self, x: &Pos) -> Result<u64, AdfError> {
        if x.fiber >= self.from {
            self.fiber_set(x.fiber)?.select(x.j).ok_or(AdfError::Overflow)
        } else {
            let b = self.below.as_ref().ok_or_else(|| AdfError::Domain(format!("no rule at {x}")))?;
            b.eval(x)?.ok_or_else(|| AdfError::Domain(format!("{x} outside the lower stage")))
        }
    }

    /// The image of the fiber `I_β`.
    pub fn fiber_image(&self, beta: Ordinal) -> Result<CertSet, AdfError> {
        if beta >= self.window.alpha {
            return Err(AdfError::BeyondStages(format!("fiber {beta} outside ω·{}", self.window.alpha)));
        }
        let base = if beta >= self.from {
            self.fiber_set(beta)?
        } else {
            let b = self.below.as_ref().ok_or_else(|| AdfError::Domain(format!("no rule on fiber {beta}")))?;
            b.fiber_image(beta)?
        };
        let keys: Vec<&Pos> = self.patch.keys().filter(|k| k.fiber == beta).collect();
        if keys.is_empty() {
            return Ok(base);
        }
        let lost = keys.iter().map(|k| self.rule_eval(k)).collect::<Result<Vec<_>, _>>()?;
        base.minus(&CertSet::finite(lost))?.union(&CertSet::finite(keys.iter().map(|k| self.patch[*k])))
    }

    fn rule_preimage(&self, v: u64) -> Result<Option<Pos>, AdfError> {
        let in_region = |b: Ordinal| b >= self.from && b < self.window.alpha;
        for (&beta, e) in &self.extra {
            if in_region(beta) && e.contains(v) {
                return Ok(Some(Pos::new(beta, e.count_below(v))));
            }
        }
        if let Some(beta) = self.source.locate(v)? {
            if in_region(beta) && !self.extra.contains_key(&beta) {
                let e = self.source.fiber(beta)?;
                if e.contains(v) {
                    return Ok(Some(Pos::new(beta, e.count_below(v))));
                }
            }
        }
        if let Some(b) = &self.below {
            if let Some(p) = b.preimage(v)? {
                if p.fiber < self.from && self.window.has(&p) {
                    return Ok(Some(p));
                }
            }
        }
        Ok(None)
    }

    fn rule_range(&self) -> Result<CertSet, AdfError> {
        let mut acc = match &self.below {
            Some(b) if self.window.alpha >= self.from => b.w.clone(),
            Some(_) if self.window.alpha.is_zero() => CertSet::empty(),
            Some(_) => return Err(AdfError::UnsupportedOrdinal("window ends inside the lower stage".into())),
            None => CertSet::empty(),
        };
        for beta in self.rule_fibers()? {
            acc = acc.union(&self.fiber_set(beta)?)?;
        }
        Ok(acc)
    }

    fn same_rule(&self, other: &Self) -> bool {
        let below_eq = match (&self.below, &other.below) {
            (None, None) => true,
            (Some(a), Some(b)) => Arc::ptr_eq(a, b),
            _ => false,
        };
        Arc::ptr_eq(&self.source, &other.source) && below_eq && self.from == other.from && self.extra == other.extra
    }
}

impl Injection for FiberInjection {
    type D = OrdWindow;

    fn domain(&self) -> &OrdWindow {
        &self.window
    }

    fn eval(&self, x: &Pos) -> Result<Option<u64>, AdfError> {
        if !self.window.has(x) {
            return Ok(None);
        }
        if let Some(v) = self.patch.get(x) {
            return Ok(Some(*v));
        }
        self.rule_eval(x).map(Some)
    }

    fn preimage(&self, v: u64) -> Result<Option<Pos>, AdfError> {
        if let Some(p) = self.inv.get(&v) {
            return Ok(Some(*p));
        }
        Ok(self.rule_preimage(v)?.filter(|p| !self.patch.contains_key(p)))
    }

    fn range(&self) -> Result<CertSet, AdfError> {
        let mut lost = Vec::with_capacity(self.patch.len());
        for k in self.patch.keys() {
            lost.push(self.rule_eval(k)?);
        }
        self.rule_range()?.minus(&CertSet::finite(lost))?.union(&CertSet::finite(self.patch.values().copied()))
    }

    fn patch(&self) -> &BTreeMap<Pos, u64> {
        &self.patch
    }

    fn differences(&self, other: &Self) -> Result<Option<BTreeSet<Pos>>, AdfError> {
        if !self.same_rule(other) {
            return Ok(None);
        }
        let common = OrdWindow::new(self.window.alpha.min(other.window.alpha));
        let mut out = BTreeSet::new();
        for x in self.patch.keys().chain(other.patch.keys()).filter(|x| common.has(x)) {
            if self.eval(x)? != other.eval(x)? {
                out.insert(*x);
            }
        }
        Ok(Some(out))
    }

    fn repatch(&self, domain: OrdWindow, patch: BTreeMap<Pos, u64>) -> Result<Self, AdfError> {
        if let Some(k) = patch.keys().find(|k| !domain.has(k)) {
            return Err(AdfError::Domain(format!("patched position {k} outside ω·{}", domain.alpha)));
        }
        let inv = patch.iter().map(|(&k, &v)| (v, k)).collect();
        Ok(FiberInjection { window: domain, patch, inv, ..self.clone() })
    }

    fn check_injective(&self) -> Result<(), AdfError> {
        let fibers = self.rule_fibers()?;
        let sets = fibers.iter().map(|&b| self.fiber_set(b)).collect::<Result<Vec<_>, _>>()?;
        for (b, e) in fibers.iter().zip(&sets) {
            if e.is_finite() {
                return Err(AdfError::FiniteFiber(b.to_string()));
            }
        }
        for i in 0..sets.len() {
            for j in i + 1..sets.len() {
                if !sets[i].intersect(&sets[j])?.is_empty() {
                    return Err(AdfError::Verification(format!("fibers {} and {} overlap", fibers[i], fibers[j])));
                }
            }
            if let Some(b) = &self.below {
                if !sets[i].intersect(&b.w)?.is_empty() {
                    return Err(AdfError::Verification(format!("fiber {} meets the lower stage", fibers[i])));
                }
            }
        }
        if self.inv.len() != self.patch.len() {
            return Err(AdfError::Verification("two patched positions share a value".into()));
        }
        for (k, v) in &self.patch {
            if let Some(p) = self.rule_preimage(*v)? {
                if !self.patch.contains_key(&p) {
                    return Err(AdfError::Verification(format!("patched value {v} at {k} is the rule value at {p}")));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepLog {
    pub n: u64,
    pub d1: usize,
    pub d2: usize,
    pub d3: usize,
    pub patch: usize,
}

/// `s_ξ = ⋃ t_n` at a limit `ξ = ω·a`, built lazily: `t_n` extends `t_{n−1}`
/// from `ω·ξ_{n−1}` to `ω·ξ_n`, is almost `s_{ξ_n}` and covers `σ[n]`.
pub struct LimitStage {
    pub xi: Ordinal,
    /// `W_ξ`, the range of `s_ξ`.
    pub w: CertSet,
    source: Arc<dyn FiberSource>,
    below: Option<Arc<LimitStage>>,
    ts: Mutex<Vec<FiberInjection>>,
    log: Mutex<Vec<StepLog>>,
}

impl fmt::Debug for LimitStage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LimitStage").field("xi", &self.xi).field("w", &self.w.to_string()).finish()
    }
}

impl LimitStage {
    pub fn new(
        xi: Ordinal,
        w: CertSet,
        source: Arc<dyn FiberSource>,
        below: Option<Arc<LimitStage>>,
    ) -> Result<Arc<Self>, AdfError> {
        xi.fundamental(1)?;
        if w.is_finite() {
            return Err(AdfError::Verification(format!("W_{xi} is finite")));
        }
        if below.as_ref().map(|b| b.xi) != (xi.c1 > 1).then(|| Ordinal::omega_times(xi.c1 - 1, 0)) {
            return Err(AdfError::Domain(format!("lower stage of {xi} must be ω·{}", xi.c1 - 1)));
        }
        Ok(Arc::new(LimitStage { xi, w, source, below, ts: Mutex::new(Vec::new()), log: Mutex::new(Vec::new()) }))
    }

    /// `ω·(a−1)`, where the fibers of `s_{ξ_n}` begin.
    pub fn from(&self) -> Ordinal {
        Ordinal::omega_times(self.xi.c1 - 1, 0)
    }

    /// `s_{ξ_n}`.
    pub fn g(&self, n: u64) -> Result<FiberInjection, AdfError> {
        let end = self.xi.fundamental(n)?;
        Ok(FiberInjection::fibers(self.source.clone(), self.below.clone(), self.from(), end))
    }

    /// `σ[n]`: the first `n` elements of `W_ξ`.
    pub fn sigma(&self, n: u64) -> BTreeSet<u64> {
        self.w.smallest(n as usize, &BTreeSet::new()).into_iter().collect()
    }

    pub fn t(&self, n: u64) -> Result<FiberInjection, AdfError> {
        let mut ts = self.ts.lock().expect("stage lock");
        if ts.is_empty() {
            ts.push(self.g(0)?);
        }
        while ts.len() as u64 <= n {
            let k = ts.len() as u64;
            let f = &ts[k as usize - 1];
            let g = self.g(k)?;
            let a = OrdWindow::new(self.xi.fundamental(k - 1)?);
            let b = OrdWindow::new(self.xi.fundamental(k)?);
            let fset = self.sigma(k);
            let out = nice_ext(&a, &b, &self.w, f, &g, &fset)?;
            verify_nice_ext(&a, &self.w, f, &g, &fset, &out)?;
            self.log.lock().expect("log lock").push(StepLog {
                n: k,
                d1: out.d1.len(),
                d2: out.d2.len(),
                d3: out.d3.len(),
                patch: out.h.patch().len(),
            });
            ts.push(out.h);
        }
        Ok(ts[n as usize].clone())
    }

    pub fn steps(&self) -> Vec<StepLog> {
        self.log.lock().expect("log lock").clone()
    }

    /// Least `n` with `x ∈ ω·ξ_n`.
    pub fn level(&self, x: &Pos) -> u64 {
        let from = self.from();
        if x.fiber >= from {
            x.fiber.c0 + 1
        } else {
            1
        }
    }

    pub fn eval(&self, x: &Pos) -> Result<Option<u64>, AdfError> {
        if x.fiber >= self.xi {
            return Ok(None);
        }
        self.t(self.level(x))?.eval(x)
    }

    pub fn fiber_image(&self, beta: Ordinal) -> Result<CertSet, AdfError> {
        self.t(self.level(&Pos::new(beta, 0)))?.fiber_image(beta)
    }

    pub fn preimage(&self, v: u64) -> Result<Option<Pos>, AdfError> {
        let Some(r) = self.w.rank(v) else { return Ok(None) };
        match self.t(r + 1)?.preimage(v)? {
            Some(p) => Ok(Some(p)),
            None => Err(AdfError::Verification(format!("σ({r}) = {v} is not covered by t_{}", r + 1))),
        }
    }
}
