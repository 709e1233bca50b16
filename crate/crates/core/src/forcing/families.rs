use num_integer::Integer;
use serde::{Deserialize, Serialize};

use super::ForcingError;
use crate::adf::CertSet;
use crate::linalg;
use crate::quotient::{quotient_norm, QuotientConfig, SpanRows, TailVector};
use crate::rational::Rational;

/// Two indexed families `f_ξ`, `g_ξ` over the index set `0..κ`, with the
/// declared `ρ` bounding the norms of `π(g_ξ) ↦ π(f_ξ)` and its inverse.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairedFamilies {
    pub f: Vec<TailVector>,
    pub g: Vec<TailVector>,
    pub rho: Rational,
}

impl PairedFamilies {
    pub fn new(f: Vec<TailVector>, g: Vec<TailVector>, rho: Rational) -> Result<Self, ForcingError> {
        let p = PairedFamilies { f, g, rho };
        p.validate(&QuotientConfig::default())?;
        Ok(p)
    }

    /// Indicators of two certified families, matched index by index.
    pub fn from_sets(f: &[CertSet], g: &[CertSet], rho: Rational, lcm_cap: usize) -> Result<Self, ForcingError> {
        let conv = |s: &[CertSet]| -> Result<Vec<TailVector>, ForcingError> {
            s.iter()
                .map(|x| indicator(x, lcm_cap).ok_or_else(|| ForcingError::Input(format!("period of {x} exceeds {lcm_cap}"))))
                .collect()
        };
        PairedFamilies::new(conv(f)?, conv(g)?, rho)
    }

    pub fn len(&self) -> usize {
        self.f.len()
    }

    pub fn is_empty(&self) -> bool {
        self.f.is_empty()
    }

    pub fn validate(&self, cfg: &QuotientConfig) -> Result<(), ForcingError> {
        if self.f.len() != self.g.len() {
            return Err(ForcingError::Input(format!("{} f-vectors but {} g-vectors", self.f.len(), self.g.len())));
        }
        for (name, fam) in [("f", &self.f), ("g", &self.g)] {
            for (k, v) in fam.iter().enumerate() {
                if v.sup_norm() != quotient_norm(v) {
                    return Err(ForcingError::Input(format!(
                        "{name}_{k} is not normalized: sup {} vs quotient norm {}",
                        v.sup_norm(),
                        quotient_norm(v)
                    )));
                }
            }
            let rows = SpanRows::new(fam.iter().collect(), cfg);
            if linalg::rank(&rows.tail_rows()) < fam.len() {
                return Err(ForcingError::Input(format!("π is not injective on the span of the {name}-family")));
            }
        }
        Ok(())
    }
}

/// `1_A` as a tail vector: the prefix runs past every patched point and every
/// progression start, the period is the lcm of the differences.
pub fn indicator(set: &CertSet, lcm_cap: usize) -> Option<TailVector> {
    let mut l: u64 = 1;
    for p in set.progs() {
        l = l.lcm(&p.d);
        if l > lcm_cap as u64 {
            return None;
        }
    }
    let patched = set.added().iter().chain(set.removed()).map(|&x| x + 1);
    let m = patched.chain(set.progs().iter().map(|p| p.a)).max().unwrap_or(0);
    let bit = |i: u64| if set.contains(i) { Rational::one() } else { Rational::zero() };
    Some(TailVector::new((0..m).map(bit).collect(), (m..m + l).map(bit).collect()).ok()?.normalized())
}
