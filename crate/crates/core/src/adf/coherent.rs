//! Coherent families `⟨s_α : ω·α → ℕ⟩` built along a separating chain, the
//! derived almost disjoint family and the Boolean monomorphism `h`.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use super::certset::CertSet;
use super::chain::Chain;
use super::family::Family;
use super::injection::{FiberInjection, FiberSource, Injection, LimitStage, StepLog};
use super::ordinal::{Ordinal, Pos};
use super::AdfError;

/// `E_β = A_β ∖ W_β`.
#[derive(Debug)]
struct ChainFibers {
    chain: Arc<Chain>,
    cache: Mutex<BTreeMap<Ordinal, CertSet>>,
}

impl FiberSource for ChainFibers {
    fn fiber(&self, beta: Ordinal) -> Result<CertSet, AdfError> {
        if let Some(e) = self.cache.lock().expect("fiber cache").get(&beta) {
            return Ok(e.clone());
        }
        let e = self.chain.family.member(beta)?.minus(&self.chain.w(beta)?)?;
        self.cache.lock().expect("fiber cache").insert(beta, e.clone());
        Ok(e)
    }

    fn locate(&self, v: u64) -> Result<Option<Ordinal>, AdfError> {
        let fam = &self.chain.family;
        if let Some(g) = &fam.generator {
            return Ok(g.locate(v));
        }
        for &xi in &fam.indices {
            if self.fiber(xi)?.contains(v) {
                return Ok(Some(xi));
            }
        }
        Ok(None)
    }
}

/// The stages `s_α` for `α < cap`.
pub struct CoherentFamily {
    pub chain: Arc<Chain>,
    pub cap: Ordinal,
    source: Arc<ChainFibers>,
    /// `stages[a − 1] = s_{ω·a}`.
    stages: Vec<Arc<LimitStage>>,
}

impl std::fmt::Debug for CoherentFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CoherentFamily").field("cap", &self.cap).field("stages", &self.stages).finish()
    }
}

impl CoherentFamily {
    pub fn new(chain: &Chain, cap: Ordinal) -> Result<Self, AdfError> {
        if cap.c2 != 0 {
            return Err(AdfError::UnsupportedOrdinal(format!("cap {cap} is at or above ω²")));
        }
        let fam = &chain.family;
        match fam.generator {
            None if cap > fam.indices.iter().map(|o| o.succ()).max().unwrap_or(Ordinal::ZERO) => {
                return Err(AdfError::BeyondStages(format!("cap {cap} exceeds the materialized family")));
            }
            Some(_) if !chain.uniform => {
                return Err(AdfError::Chain("limit separators do not cover the generated members".into()));
            }
            _ => {}
        }
        let chain = Arc::new(chain.clone());
        let source = Arc::new(ChainFibers { chain: chain.clone(), cache: Mutex::new(BTreeMap::new()) });
        let mut stages: Vec<Arc<LimitStage>> = Vec::new();
        let top = if cap.c0 > 0 { cap.c1 } else { cap.c1.saturating_sub(1) };
        for a in 1..=top {
            let xi = Ordinal::omega_times(a, 0);
            let w = chain.w(xi)?;
            let below = stages.last().cloned();
            let src: Arc<dyn FiberSource> = source.clone();
            stages.push(LimitStage::new(xi, w, src, below)?);
        }
        Ok(CoherentFamily { chain, cap, source, stages })
    }

    pub fn stage(&self, a: u64) -> Result<Arc<LimitStage>, AdfError> {
        a.checked_sub(1)
            .and_then(|i| self.stages.get(i as usize))
            .cloned()
            .ok_or_else(|| AdfError::BeyondStages(format!("ω·{a}")))
    }

    pub fn limit_stages(&self) -> &[Arc<LimitStage>] {
        &self.stages
    }

    /// `s_α` for `α < cap`.
    pub fn s(&self, alpha: Ordinal) -> Result<FiberInjection, AdfError> {
        if alpha >= self.cap && alpha != Ordinal::ZERO {
            return Err(AdfError::BeyondStages(format!("{alpha} ≥ cap {}", self.cap)));
        }
        let (lambda, _) = alpha.split();
        let below = if lambda.is_zero() { None } else { Some(self.stage(lambda.c1)?) };
        let src: Arc<dyn FiberSource> = self.source.clone();
        Ok(FiberInjection::fibers(src, below, lambda, alpha))
    }

    pub fn eval(&self, alpha: Ordinal, x: &Pos) -> Result<Option<u64>, AdfError> {
        if alpha.is_limit() && !alpha.is_zero() {
            let st = self.stage(alpha.c1)?;
            return st.eval(x);
        }
        self.s(alpha)?.eval(x)
    }

    /// `s_α[I_ξ]` for `ξ < α`.
    pub fn fiber_image(&self, alpha: Ordinal, xi: Ordinal) -> Result<CertSet, AdfError> {
        if xi >= alpha {
            return Err(AdfError::BeyondStages(format!("fiber {xi} outside ω·{alpha}")));
        }
        if alpha.is_limit() {
            return self.stage(alpha.c1)?.fiber_image(xi);
        }
        self.s(alpha)?.fiber_image(xi)
    }

    /// Exact set of points of `ω·β` where `s_α` and `s_β` differ.
    pub fn coherence(&self, alpha: Ordinal, beta: Ordinal) -> Result<BTreeSet<Pos>, AdfError> {
        if beta > alpha {
            return self.coherence(beta, alpha);
        }
        let cands = self.coherence_candidates(alpha, beta)?;
        let mut out = BTreeSet::new();
        for x in cands.into_iter().filter(|x| x.fiber < beta) {
            if self.eval(alpha, &x)? != self.eval(beta, &x)? {
                out.insert(x);
            }
        }
        Ok(out)
    }

    fn coherence_candidates(&self, alpha: Ordinal, beta: Ordinal) -> Result<BTreeSet<Pos>, AdfError> {
        let (lambda, _) = alpha.split();
        if beta >= lambda || lambda.is_zero() {
            // same enumeration rule on ω·β
            return Ok(BTreeSet::new());
        }
        let st = self.stage(lambda.c1)?;
        let from = st.from();
        let n = if beta >= from { beta.c0.max(1) } else { 1 };
        let t = st.t(n)?;
        let g = st.g(n)?;
        let mut cands = t.differences(&g)?.ok_or_else(|| AdfError::Verification("t_n and s_{ξ_n} disagree in rule".into()))?;
        if beta < from {
            cands.extend(self.coherence_candidates(from, beta)?);
        }
        Ok(cands)
    }

    pub fn steps(&self) -> Vec<(Ordinal, Vec<StepLog>)> {
        self.stages.iter().map(|s| (s.xi, s.steps())).collect()
    }
}

/// Extend `s` on `ω·ξ` by enumerating `A_ξ ∖ W_ξ` along `I_ξ`.
pub fn coherent_successor(s: &FiberInjection, a_xi: &CertSet, w_xi: &CertSet) -> Result<FiberInjection, AdfError> {
    let e = a_xi.minus(w_xi)?;
    if e.is_finite() {
        return Err(AdfError::FiniteFiber(s.domain().alpha.to_string()));
    }
    let clash = e.intersect(&s.range()?)?;
    if !clash.is_empty() {
        return Err(AdfError::Verification(format!("A_ξ ∖ W_ξ meets ran(s) in {clash}")));
    }
    let out = s.push_fiber(e)?;
    out.check_injective()?;
    Ok(out)
}

/// The limit stage `s_{ω·a}` with `t_1, …, t_steps` built and verified.
pub fn coherent_limit(cf: &CoherentFamily, xi: Ordinal, steps: u64) -> Result<Arc<LimitStage>, AdfError> {
    if !xi.is_limit() || xi.is_zero() || xi.c2 != 0 {
        return Err(AdfError::UnsupportedOrdinal(xi.to_string()));
    }
    let st = cf.stage(xi.c1)?;
    st.t(steps)?;
    Ok(st)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DerivedCert {
    pub index: Ordinal,
    /// `s_{ξ+1}[I_ξ]`.
    pub set: CertSet,
    /// Symmetric difference with `A_ξ`.
    pub exceptions: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoherenceCert {
    pub alpha: Ordinal,
    pub beta: Ordinal,
    pub exceptions: Vec<Pos>,
}

#[derive(Debug)]
pub struct IsoChain {
    pub family: CoherentFamily,
    pub derived: Vec<DerivedCert>,
    pub coherence: Vec<CoherenceCert>,
}

impl IsoChain {
    /// Checkpoint stages: `0`, the limits below the cap and `ξ + 1` for materialized `ξ`.
    pub fn checkpoints(&self) -> Vec<Ordinal> {
        checkpoints(&self.family)
    }
}

fn checkpoints(cf: &CoherentFamily) -> Vec<Ordinal> {
    let mut s: BTreeSet<Ordinal> = BTreeSet::from([Ordinal::ZERO]);
    s.extend(cf.stages.iter().map(|st| st.xi));
    s.extend(cf.chain.family.indices.iter().map(|o| o.succ()).filter(|o| *o < cf.cap));
    s.into_iter().collect()
}

pub fn iso_chain(family: &Family, chain: &Chain, cap: Ordinal) -> Result<IsoChain, AdfError> {
    let cf = CoherentFamily::new(chain, cap)?;
    let mut derived = Vec::new();
    for (&xi, a) in family.indices.iter().zip(&family.members) {
        if xi.succ() >= cap {
            continue;
        }
        let set = cf.fiber_image(xi.succ(), xi)?;
        let exceptions = set
            .almost_eq(a)?
            .ok_or_else(|| AdfError::Verification(format!("s_{}[I_{xi}] is not almost A_{xi}", xi.succ())))?;
        derived.push(DerivedCert { index: xi, set, exceptions });
    }
    let stages = checkpoints(&cf);
    let mut coherence = Vec::new();
    for (i, &alpha) in stages.iter().enumerate() {
        for &beta in &stages[..i] {
            let exc = cf.coherence(alpha, beta)?;
            coherence.push(CoherenceCert { alpha, beta, exceptions: exc.into_iter().collect() });
        }
    }
    Ok(IsoChain { family: cf, derived, coherence })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "indices")]
pub enum IndexSet {
    Finite(BTreeSet<Ordinal>),
    /// Everything below the cap except the listed indices.
    Cofinite(BTreeSet<Ordinal>),
}

/// `α(X) = max X + 1`, the least `α` with `U_X ⊆ ω·α`.
pub fn alpha_of(x: &BTreeSet<Ordinal>) -> Ordinal {
    x.iter().next_back().map_or(Ordinal::ZERO, |m| m.succ())
}

/// A representative of `h(U_X)`.
pub fn boolean_mono(cf: &CoherentFamily, x: &IndexSet) -> Result<CertSet, AdfError> {
    match x {
        IndexSet::Finite(x) => {
            let alpha = alpha_of(x);
            let mut acc = CertSet::empty();
            for &xi in x {
                acc = acc.union(&cf.fiber_image(alpha, xi)?)?;
            }
            Ok(acc)
        }
        IndexSet::Cofinite(y) => boolean_mono(cf, &IndexSet::Finite(y.clone()))?.complement(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeparatorCert {
    pub v: CertSet,
    /// `A_ξ ∖ V` for `ξ ∈ F`.
    pub inside: Vec<(Ordinal, Vec<u64>)>,
    /// `A_ξ ∩ V` for the other constructed `ξ`.
    pub outside: Vec<(Ordinal, Vec<u64>)>,
}

/// `V_F = s_{α(F)}[U_F]`, checked against every materialized index below the cap.
pub fn separator_from_embedding(cf: &CoherentFamily, f: &BTreeSet<Ordinal>) -> Result<SeparatorCert, AdfError> {
    let v = boolean_mono(cf, &IndexSet::Finite(f.clone()))?;
    let fam = &cf.chain.family;
    let mut inside = Vec::new();
    let mut outside = Vec::new();
    for (&xi, a) in fam.indices.iter().zip(&fam.members).filter(|(xi, _)| **xi < cf.cap) {
        if f.contains(&xi) {
            let e = a.almost_subset(&v)?.ok_or_else(|| AdfError::Verification(format!("A_{xi} ⊄* V_F")))?;
            inside.push((xi, e));
        } else {
            let e = a.intersect(&v)?.elements().ok_or_else(|| AdfError::Verification(format!("A_{xi} meets V_F")))?;
            outside.push((xi, e));
        }
    }
    Ok(SeparatorCert { v, inside, outside })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LawCert {
    pub law: String,
    pub exceptions: Vec<u64>,
}

/// `h(X ∩ Y) =* h(X) ∩ h(Y)`, and likewise for `∪` and `∖`, with the finite
/// symmetric differences as certificates.
pub fn homomorphism_laws(
    cf: &CoherentFamily,
    x: &BTreeSet<Ordinal>,
    y: &BTreeSet<Ordinal>,
) -> Result<Vec<LawCert>, AdfError> {
    let h = |s: &BTreeSet<Ordinal>| boolean_mono(cf, &IndexSet::Finite(s.clone()));
    let (hx, hy) = (h(x)?, h(y)?);
    let cases = [
        ("meet", x.intersection(y).copied().collect::<BTreeSet<_>>(), hx.intersect(&hy)?),
        ("join", x.union(y).copied().collect(), hx.union(&hy)?),
        ("difference", x.difference(y).copied().collect(), hx.minus(&hy)?),
    ];
    let mut out = Vec::new();
    for (law, set, rhs) in cases {
        let lhs = h(&set)?;
        let exceptions = lhs
            .almost_eq(&rhs)?
            .ok_or_else(|| AdfError::Verification(format!("h fails the {law} law")))?;
        out.push(LawCert { law: law.into(), exceptions });
    }
    Ok(out)
}
