//! Family generators, almost-disjointness certificates and separations.

use std::collections::{BTreeMap, BTreeSet};

use num_integer::Integer;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::certset::{CertSet, Prog};
use super::ordinal::Ordinal;
use super::AdfError;

pub const MAX_COUNT: usize = 4096;
pub const MAX_DEPTH: u32 = 20;
pub const MAX_HORIZON: u64 = 4096;
pub const MAX_BLOCKS: u64 = 64;
const DIVISOR_CAP: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyKind {
    Progression,
    Branch,
    Luzin,
    Explicit,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct FamilyGenerator {
    pub kind: FamilyKind,
    pub count: usize,
    /// Progression: number of ω-blocks the indices are spread over.
    pub blocks: u64,
    pub depth: u32,
    pub horizon: u64,
    pub seed: u64,
    pub explicit: Vec<CertSet>,
}

impl Default for FamilyGenerator {
    fn default() -> Self {
        FamilyGenerator {
            kind: FamilyKind::Progression,
            count: 3,
            blocks: 1,
            depth: 4,
            horizon: 64,
            seed: 0,
            explicit: Vec::new(),
        }
    }
}

impl FamilyGenerator {
    pub fn progression(count: usize, blocks: u64) -> Self {
        FamilyGenerator { count, blocks, ..Default::default() }
    }

    pub fn branch(depth: u32, count: usize, seed: u64) -> Self {
        FamilyGenerator { kind: FamilyKind::Branch, depth, count, seed, ..Default::default() }
    }

    pub fn luzin(count: usize, horizon: u64) -> Self {
        FamilyGenerator { kind: FamilyKind::Luzin, count, horizon, ..Default::default() }
    }

    pub fn explicit(sets: Vec<CertSet>) -> Self {
        FamilyGenerator { kind: FamilyKind::Explicit, count: sets.len(), explicit: sets, ..Default::default() }
    }
}

/// The uniform progression generator with `k` blocks:
/// `A_{ω·a+b} = {a + k·2^b·m : m odd}` for `a < k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stratified {
    pub blocks: u64,
}

impl Stratified {
    pub fn member(&self, xi: Ordinal) -> Result<CertSet, AdfError> {
        let k = self.blocks;
        if xi.c2 != 0 || xi.c1 >= k {
            return Err(AdfError::BeyondStages(format!("{xi} with {k} blocks")));
        }
        if xi.c0 > 60 {
            return Err(AdfError::Caps(format!("valuation {} exceeds 60", xi.c0)));
        }
        let step = k.checked_mul(1u64 << (xi.c0 + 1)).ok_or(AdfError::Overflow)?;
        Ok(CertSet::progression(xi.c1 + step / 2, step))
    }

    /// The unique index whose member contains `v`.
    pub fn locate(&self, v: u64) -> Option<Ordinal> {
        let k = self.blocks;
        let a = v % k;
        let m = (v - a) / k;
        (m != 0).then(|| Ordinal::omega_times(a, m.trailing_zeros() as u64))
    }

    /// `{n : n mod k < a}`, separating blocks below `a` from the rest.
    pub fn block_separator(&self, a: u64) -> CertSet {
        let progs: Vec<Prog> = (0..a.min(self.blocks)).map(|r| Prog::new(r, self.blocks)).collect();
        CertSet::from_parts(progs, [], []).expect("residue classes are disjoint")
    }

    /// Indices of a `count`-member family spread evenly over the blocks.
    pub fn indices(&self, count: usize) -> Vec<Ordinal> {
        let per = (count as u64).div_ceil(self.blocks.max(1)).max(1);
        (0..count as u64).map(|i| Ordinal::omega_times(i / per, i % per)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairCert {
    pub i: usize,
    pub j: usize,
    pub points: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LuzinReport {
    pub horizon: u64,
    /// `L(n) = n`.
    pub bound: String,
    /// `worst[n] = max_α |{β < α : A_α ∩ A_β ⊆ [0,n)}|`.
    pub worst: Vec<u64>,
    pub holds: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Family {
    pub kind: FamilyKind,
    pub indices: Vec<Ordinal>,
    pub members: Vec<CertSet>,
    pub intersections: Vec<PairCert>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generator: Option<Stratified>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub luzin: Option<LuzinReport>,
}

impl Family {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// `A_ξ`, from the materialized members or the uniform generator.
    pub fn member(&self, xi: Ordinal) -> Result<CertSet, AdfError> {
        if let Some(i) = self.indices.iter().position(|&o| o == xi) {
            return Ok(self.members[i].clone());
        }
        match &self.generator {
            Some(g) => g.member(xi),
            None => Err(AdfError::BeyondStages(format!("no member {xi}"))),
        }
    }

    pub fn by_index(&self) -> BTreeMap<Ordinal, &CertSet> {
        self.indices.iter().copied().zip(&self.members).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdCheck {
    Finite(Vec<u64>),
    NotAd(Prog),
}

pub fn almost_disjoint_check(a: &CertSet, b: &CertSet) -> Result<AdCheck, AdfError> {
    let i = a.intersect(b)?;
    Ok(match i.elements() {
        Some(pts) => AdCheck::Finite(pts),
        None => AdCheck::NotAd(i.progs()[0]),
    })
}

fn pairwise(members: &[CertSet]) -> Result<Vec<PairCert>, AdfError> {
    let mut out = Vec::new();
    for i in 0..members.len() {
        for j in i + 1..members.len() {
            match almost_disjoint_check(&members[i], &members[j])? {
                AdCheck::Finite(points) => out.push(PairCert { i, j, points }),
                AdCheck::NotAd(witness) => return Err(AdfError::NotAd { i, j, witness }),
            }
        }
    }
    Ok(out)
}

pub fn make_family(gen: &FamilyGenerator) -> Result<Family, AdfError> {
    if gen.count > MAX_COUNT {
        return Err(AdfError::Caps(format!("count {} > {MAX_COUNT}", gen.count)));
    }
    match gen.kind {
        FamilyKind::Progression => {
            if gen.blocks == 0 || gen.blocks > MAX_BLOCKS {
                return Err(AdfError::Caps(format!("blocks must lie in 1..={MAX_BLOCKS}")));
            }
            let s = Stratified { blocks: gen.blocks };
            let indices = s.indices(gen.count);
            let members = indices.iter().map(|&xi| s.member(xi)).collect::<Result<Vec<_>, _>>()?;
            let intersections = pairwise(&members)?;
            Ok(Family {
                kind: gen.kind,
                indices,
                members,
                intersections,
                generator: Some(s),
                luzin: None,
            })
        }
        FamilyKind::Branch => branch_family(gen),
        FamilyKind::Luzin => luzin_family(gen),
        FamilyKind::Explicit => {
            let members = gen.explicit.clone();
            let intersections = pairwise(&members)?;
            Ok(Family {
                kind: gen.kind,
                indices: (0..members.len() as u64).map(Ordinal::finite).collect(),
                members,
                intersections,
                generator: None,
                luzin: None,
            })
        }
    }
}

/// Heap code `2^ℓ − 1 + bin(s)` of the length-`ℓ` prefix of the branch `x`.
fn node_code(x: u64, depth: u32, level: u32) -> u64 {
    (1u64 << level) - 1 + (x >> (depth - level))
}

/// Branch sets: the tree nodes along `x` at levels `< depth` together with
/// the tail class `{n ≥ 2^depth : n ≡ x mod 2^depth}`.
pub fn branch_set(x: u64, depth: u32) -> CertSet {
    let base = 1u64 << depth;
    let nodes = (0..depth).map(|l| node_code(x, depth, l));
    CertSet::from_parts([Prog::new(base + x, base)], nodes, []).expect("nodes lie below the tail")
}

/// Length of the common prefix of two depth-`d` branches.
pub fn common_prefix(x: u64, y: u64, depth: u32) -> u32 {
    let diff = x ^ y;
    if diff == 0 {
        depth
    } else {
        depth - (64 - diff.leading_zeros())
    }
}

fn branch_family(gen: &FamilyGenerator) -> Result<Family, AdfError> {
    let d = gen.depth;
    if d == 0 || d > MAX_DEPTH {
        return Err(AdfError::Caps(format!("depth must lie in 1..={MAX_DEPTH}")));
    }
    let leaves = 1usize << d;
    if gen.count > leaves {
        return Err(AdfError::Caps(format!("count {} exceeds 2^{d} branches", gen.count)));
    }
    let mut chosen: Vec<u64> = if gen.count == leaves {
        (0..leaves as u64).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(gen.seed);
        sample(&mut rng, leaves, gen.count).into_iter().map(|i| i as u64).collect()
    };
    chosen.sort_unstable();
    let members: Vec<CertSet> = chosen.iter().map(|&x| branch_set(x, d)).collect();
    let intersections = pairwise(&members)?;
    for c in &intersections {
        let shared = common_prefix(chosen[c.i], chosen[c.j], d) as usize + 1;
        if c.points.len() != shared {
            return Err(AdfError::Verification(format!("branch pair ({}, {}) breaks the prefix bound", c.i, c.j)));
        }
    }
    Ok(Family {
        kind: FamilyKind::Branch,
        indices: (0..members.len() as u64).map(Ordinal::finite).collect(),
        members,
        intersections,
        generator: None,
        luzin: None,
    })
}

// Tails are the classes α mod N; A_α takes min(β+1, horizon+1) fresh points of
// each earlier class β, drawn upward from a per-class counter.
fn luzin_family(gen: &FamilyGenerator) -> Result<Family, AdfError> {
    let n = gen.count as u64;
    let h = gen.horizon;
    if h > MAX_HORIZON {
        return Err(AdfError::Caps(format!("horizon {h} > {MAX_HORIZON}")));
    }
    let k = h + 1;
    let mut counter = vec![1u64; gen.count];
    let mut meets: Vec<Vec<Vec<u64>>> = Vec::with_capacity(gen.count);
    let mut members = Vec::with_capacity(gen.count);
    for alpha in 0..n {
        let mut row = Vec::with_capacity(alpha as usize);
        for beta in 0..alpha {
            let c = &mut counter[beta as usize];
            let take = (beta + 1).min(k);
            let pts: Vec<u64> = (*c..*c + take).map(|t| beta + n * t).collect();
            *c += take;
            row.push(pts);
        }
        let adds: Vec<u64> = row.iter().flatten().copied().collect();
        members.push(CertSet::from_parts([Prog::new(alpha, n.max(1))], adds, [])?);
        meets.push(row);
    }
    // Every added point is drawn once, so two members can only share the
    // points one of them drew from the other's class.
    let mut seen = BTreeSet::new();
    for pts in meets.iter().flatten().flatten() {
        if !seen.insert(*pts) {
            return Err(AdfError::Verification(format!("point {pts} drawn twice")));
        }
    }
    let mut intersections = Vec::new();
    let mut worst = vec![0u64; h as usize + 1];
    for (alpha, row) in meets.iter().enumerate() {
        let mut maxes = Vec::with_capacity(row.len());
        for (beta, pts) in row.iter().enumerate() {
            if !pts.iter().all(|&x| members[alpha].contains(x) && members[beta].contains(x)) {
                return Err(AdfError::Verification(format!("meeting points of ({beta}, {alpha})")));
            }
            maxes.push(pts.iter().max().copied());
            intersections.push(PairCert { i: beta, j: alpha, points: pts.clone() });
        }
        for (m, w) in worst.iter_mut().enumerate() {
            let cnt = maxes.iter().filter(|mx| mx.map_or(true, |x| x < m as u64)).count() as u64;
            *w = (*w).max(cnt);
        }
    }
    let holds = worst.iter().enumerate().all(|(m, &w)| w <= m as u64);
    intersections.sort_by_key(|c| (c.i, c.j));
    Ok(Family {
        kind: FamilyKind::Luzin,
        indices: (0..n).map(Ordinal::finite).collect(),
        members,
        intersections,
        generator: None,
        luzin: Some(LuzinReport { horizon: h, bound: "L(n) = n".into(), worst, holds }),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Separation {
    pub v: CertSet,
    pub modulus: u64,
    /// `A ∖ V` for each member of the first family.
    pub b_exceptions: Vec<Vec<u64>>,
    /// `A ∩ V` for each member of the second family.
    pub c_exceptions: Vec<Vec<u64>>,
}

fn divisors(n: u64) -> Vec<u64> {
    let mut factors: Vec<(u64, u32)> = Vec::new();
    let mut m = n;
    let mut p = 2u64;
    while p * p <= m && p < 1_000_000 {
        if m % p == 0 {
            let mut e = 0;
            while m % p == 0 {
                m /= p;
                e += 1;
            }
            factors.push((p, e));
        }
        p += 1;
    }
    if m > 1 {
        factors.push((m, 1));
    }
    let mut divs = vec![1u64];
    for (p, e) in factors {
        let mut next = Vec::new();
        for d in &divs {
            let mut x = *d;
            for _ in 0..=e {
                next.push(x);
                x = x.saturating_mul(p);
            }
        }
        divs = next;
    }
    divs.sort_unstable();
    divs.dedup();
    if divs.len() > DIVISOR_CAP {
        divs.truncate(DIVISOR_CAP);
        divs.push(n);
    }
    divs
}

/// A set `V` with `A ⊆* V` for the first family and `A ∩ V =* ∅` for the
/// second: the union of the first family's residue classes modulo the
/// smallest modulus whose classes miss every progression of the second.
pub fn separation_find(bs: &[CertSet], cs: &[CertSet]) -> Result<Separation, AdfError> {
    let mut l: u64 = 1;
    for p in bs.iter().chain(cs).flat_map(|s| s.progs()) {
        l = (l as u128).lcm(&(p.d as u128)).try_into().map_err(|_| AdfError::Overflow)?;
    }
    let mut found = None;
    for m in divisors(l) {
        let mut pieces: Vec<Prog> = bs
            .iter()
            .flat_map(|s| s.progs())
            .map(|p| {
                let g = p.d.gcd(&m);
                Prog::new(p.a % g, g)
            })
            .collect();
        pieces.sort_unstable();
        pieces.dedup();
        let mut clear = true;
        'outer: for q in cs.iter().flat_map(|s| s.progs()) {
            for p in &pieces {
                if p.intersect(q)?.is_some() {
                    clear = false;
                    break 'outer;
                }
            }
        }
        if clear {
            found = Some((m, CertSet::from_parts(pieces, [], [])?));
            break;
        }
    }
    let (modulus, v) =
        found.ok_or_else(|| AdfError::NotFound("the families share an infinite progression".into()))?;
    let mut b_exceptions = Vec::new();
    for b in bs {
        b_exceptions.push(b.almost_subset(&v)?.ok_or_else(|| AdfError::NotFound("member not almost contained".into()))?);
    }
    let mut c_exceptions = Vec::new();
    for c in cs {
        c_exceptions.push(c.intersect(&v)?.elements().ok_or_else(|| AdfError::NotFound("member meets V".into()))?);
    }
    Ok(Separation { v, modulus, b_exceptions, c_exceptions })
}
