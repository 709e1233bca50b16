//! Separating chains `⟨V_α⟩`: successor steps `V_{α+1} = V_α ∪ A_α`,
//! limit stages by separation.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::certset::CertSet;
use super::family::{separation_find, Family};
use super::ordinal::Ordinal;
use super::AdfError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// `A_ξ ⊆* V_α`, exceptions `A_ξ ∖ V_α`.
    Inside,
    /// `A_ξ ∩ V_α =* ∅`, exceptions `A_ξ ∩ V_α`.
    Outside,
    /// `V_β ⊆* V_α` for the previous checkpoint `β`.
    Increasing,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainCert {
    pub stage: Ordinal,
    pub index: Ordinal,
    pub relation: Relation,
    pub exceptions: Vec<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Chain {
    pub family: Family,
    /// `V_{ω·a}` keyed by `a`; `V_0 = ∅`.
    pub limits: BTreeMap<u64, CertSet>,
    pub certs: Vec<ChainCert>,
    /// Limit separators are exactly the block classes of the uniform generator,
    /// so the certificates extend to every generated member.
    pub uniform: bool,
}

impl Chain {
    /// `V_α` for `α = ω·a + b`: `V_{ω·a} ∪ A_{ω·a} ∪ … ∪ A_{ω·a+b−1}`.
    pub fn v(&self, alpha: Ordinal) -> Result<CertSet, AdfError> {
        if alpha.c2 != 0 {
            return Err(AdfError::UnsupportedOrdinal(alpha.to_string()));
        }
        let (lambda, b) = alpha.split();
        let mut acc = self
            .limits
            .get(&lambda.c1)
            .cloned()
            .ok_or_else(|| AdfError::BeyondStages(format!("no limit stage {lambda}")))?;
        for i in 0..b {
            acc = acc.union(&self.family.member(lambda.plus_finite(i))?)?;
        }
        Ok(acc)
    }

    /// `W_α`: `V_α` at limits, `V_β ∪ ⋃_{i<k} A_{β+i}` at `α = β + k`.
    pub fn w(&self, alpha: Ordinal) -> Result<CertSet, AdfError> {
        let (beta, k) = alpha.split();
        let mut acc = self.v(beta)?;
        for i in 0..k {
            acc = acc.union(&self.family.member(beta.plus_finite(i))?)?;
        }
        Ok(acc)
    }

    pub fn top_limit(&self) -> u64 {
        self.limits.keys().next_back().copied().unwrap_or(0)
    }
}

pub fn chain_build(family: &Family) -> Result<Chain, AdfError> {
    if family.indices.iter().any(|o| o.c2 != 0) {
        return Err(AdfError::UnsupportedOrdinal("indices at or above ω²".into()));
    }
    let top = family.indices.iter().map(|o| o.c1 + 1).max().unwrap_or(0);
    let by_index = family.by_index();
    let mut limits = BTreeMap::new();
    limits.insert(0, CertSet::empty());
    let mut uniform = family.generator.is_some();
    for a in 1..=top {
        let lambda = Ordinal::omega_times(a, 0);
        let mut bs: Vec<CertSet> = by_index.range(..lambda).map(|(_, s)| (*s).clone()).collect();
        let mut cs: Vec<CertSet> = by_index.range(lambda..).map(|(_, s)| (*s).clone()).collect();
        bs.push(limits[&(a - 1)].clone());
        if let Some(g) = &family.generator {
            // each block of the generator lies inside one residue class mod k
            for r in 0..g.blocks {
                let class = CertSet::progression(r, g.blocks);
                if r < a { bs.push(class) } else { cs.push(class) }
            }
        }
        let sep = separation_find(&bs, &cs)?;
        if let Some(g) = &family.generator {
            uniform &= sep.v.same_as(&g.block_separator(a))?;
        }
        limits.insert(a, sep.v);
    }
    let mut chain = Chain { family: family.clone(), limits, certs: Vec::new(), uniform };
    chain.certs = certify(&chain)?;
    Ok(chain)
}

fn checkpoints(chain: &Chain) -> BTreeSet<Ordinal> {
    let mut out: BTreeSet<Ordinal> = chain.limits.keys().map(|&a| Ordinal::omega_times(a, 0)).collect();
    out.extend(chain.family.indices.iter().map(|o| o.succ()));
    out
}

fn certify(chain: &Chain) -> Result<Vec<ChainCert>, AdfError> {
    let mut certs = Vec::new();
    let mut prev: Option<(Ordinal, CertSet)> = None;
    for stage in checkpoints(chain) {
        let v = chain.v(stage)?;
        if let Some((beta, vb)) = &prev {
            let exc = vb
                .almost_subset(&v)?
                .ok_or_else(|| AdfError::Chain(format!("V_{beta} is not almost contained in V_{stage}")))?;
            certs.push(ChainCert { stage, index: *beta, relation: Relation::Increasing, exceptions: exc });
        }
        for (&xi, a) in chain.family.indices.iter().zip(&chain.family.members) {
            let (relation, exc) = if xi < stage {
                (Relation::Inside, a.almost_subset(&v)?)
            } else {
                (Relation::Outside, a.intersect(&v)?.elements())
            };
            let exceptions =
                exc.ok_or_else(|| AdfError::Chain(format!("A_{xi} against V_{stage} ({relation:?})")))?;
            certs.push(ChainCert { stage, index: xi, relation, exceptions });
        }
        prev = Some((stage, v));
    }
    Ok(certs)
}
