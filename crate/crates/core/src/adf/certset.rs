//! Eventually periodic subsets of ℕ: a disjoint union of arithmetic
//! progressions with a finite patch of additions and removals.

use std::collections::BTreeSet;
use std::fmt;

use num_integer::Integer;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::AdfError;

/// Maximum number of pieces one progression may split into during a difference.
pub const SPLIT_CAP: u64 = 1 << 16;

/// `{a + d·k : k ≥ 0}` with `d ≥ 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Prog {
    pub a: u64,
    pub d: u64,
}

impl Prog {
    pub fn new(a: u64, d: u64) -> Self {
        assert!(d >= 1, "progression step must be positive");
        Prog { a, d }
    }

    pub fn contains(&self, n: u64) -> bool {
        n >= self.a && (n - self.a) % self.d == 0
    }

    /// Number of members below `n`.
    pub fn count_below(&self, n: u64) -> u64 {
        if n <= self.a {
            0
        } else {
            (n - self.a - 1) / self.d + 1
        }
    }

    pub fn nth(&self, k: u64) -> Result<u64, AdfError> {
        self.d.checked_mul(k).and_then(|x| x.checked_add(self.a)).ok_or(AdfError::Overflow)
    }

    fn same_class(&self, n: u64) -> bool {
        n % self.d == self.a % self.d
    }

    /// `self ∩ other`, which is empty or again a progression.
    pub fn intersect(&self, other: &Prog) -> Result<Option<Prog>, AdfError> {
        let (a1, d1, a2, d2) = (self.a as i128, self.d as i128, other.a as i128, other.d as i128);
        let g = d1.gcd(&d2);
        if (a2 - a1).rem_euclid(g) != 0 {
            return Ok(None);
        }
        let l = d1 / g * d2;
        if l > u64::MAX as i128 {
            return Err(AdfError::Overflow);
        }
        // a1 + d1 t ≡ a2 (mod d2)
        let m = d2 / g;
        let t = if m == 1 { 0 } else { ((a2 - a1) / g).rem_euclid(m) * mod_inverse(d1 / g, m) % m };
        let x = (a1 + d1 * t).rem_euclid(l);
        let lo = a1.max(a2);
        let start = if x >= lo { x } else { x + (lo - x + l - 1) / l * l };
        if start > u64::MAX as i128 {
            return Err(AdfError::Overflow);
        }
        Ok(Some(Prog { a: start as u64, d: l as u64 }))
    }

    /// `self ∖ other` as progressions plus finitely many extra points.
    pub fn minus(&self, other: &Prog) -> Result<(Vec<Prog>, Vec<u64>), AdfError> {
        if self.intersect(other)?.is_none() {
            return Ok((vec![*self], vec![]));
        }
        let l = (self.d as u128).lcm(&(other.d as u128));
        let r = l / self.d as u128;
        if r > SPLIT_CAP as u128 {
            return Err(AdfError::SplitCap { pieces: r });
        }
        let l = l as u64;
        let mut keep = Vec::new();
        let mut extra = Vec::new();
        for t in 0..r as u64 {
            let start = self.a.checked_add(t * self.d).ok_or(AdfError::Overflow)?;
            let piece = Prog { a: start, d: l };
            if other.same_class(start) {
                let mut x = start;
                while x < other.a {
                    extra.push(x);
                    x = match x.checked_add(l) {
                        Some(v) => v,
                        None => break,
                    };
                }
            } else {
                keep.push(piece);
            }
        }
        Ok((keep, extra))
    }
}

fn mod_inverse(a: i128, m: i128) -> i128 {
    let (mut old_r, mut r) = (a.rem_euclid(m), m);
    let (mut old_s, mut s) = (1i128, 0i128);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
    }
    old_s.rem_euclid(m)
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CertSet {
    progs: Vec<Prog>,
    add: BTreeSet<u64>,
    remove: BTreeSet<u64>,
}

impl CertSet {
    pub fn empty() -> Self {
        CertSet::default()
    }

    pub fn naturals() -> Self {
        CertSet::progression(0, 1)
    }

    pub fn progression(a: u64, d: u64) -> Self {
        CertSet { progs: vec![Prog::new(a, d)], ..Default::default() }
    }

    pub fn finite(items: impl IntoIterator<Item = u64>) -> Self {
        CertSet { add: items.into_iter().collect(), ..Default::default() }
    }

    /// Union of possibly overlapping progressions, then `∪ add ∖ remove`.
    pub fn from_parts(
        progs: impl IntoIterator<Item = Prog>,
        add: impl IntoIterator<Item = u64>,
        remove: impl IntoIterator<Item = u64>,
    ) -> Result<Self, AdfError> {
        let progs: Vec<Prog> = progs.into_iter().collect();
        let add: BTreeSet<u64> = add.into_iter().collect();
        let remove: BTreeSet<u64> = remove.into_iter().collect();
        let raw = progs.clone();
        let truth = |x: u64| !remove.contains(&x) && (add.contains(&x) || raw.iter().any(|p| p.contains(x)));
        let cands: Vec<u64> = add.iter().chain(&remove).copied().collect();
        build(progs, truth, cands)
    }

    pub fn progs(&self) -> &[Prog] {
        &self.progs
    }

    pub fn added(&self) -> &BTreeSet<u64> {
        &self.add
    }

    pub fn removed(&self) -> &BTreeSet<u64> {
        &self.remove
    }

    pub fn contains(&self, n: u64) -> bool {
        if self.add.contains(&n) {
            return true;
        }
        !self.remove.contains(&n) && self.progs.iter().any(|p| p.contains(n))
    }

    pub fn is_finite(&self) -> bool {
        self.progs.is_empty()
    }

    pub fn is_infinite(&self) -> bool {
        !self.progs.is_empty()
    }

    pub fn is_empty(&self) -> bool {
        self.progs.is_empty() && self.add.is_empty()
    }

    /// Members of a finite set, ascending; `None` if infinite.
    pub fn elements(&self) -> Option<Vec<u64>> {
        self.is_finite().then(|| self.add.iter().copied().collect())
    }

    /// Members below `n`, ascending.
    pub fn members_below(&self, n: u64) -> Vec<u64> {
        let mut out: BTreeSet<u64> = self.add.range(..n).copied().collect();
        for p in &self.progs {
            let mut x = p.a;
            while x < n {
                if !self.remove.contains(&x) {
                    out.insert(x);
                }
                x = match x.checked_add(p.d) {
                    Some(v) => v,
                    None => break,
                };
            }
        }
        out.into_iter().collect()
    }

    /// `|{x ∈ S : x < n}|`.
    pub fn count_below(&self, n: u64) -> u64 {
        let base: u64 = self.progs.iter().map(|p| p.count_below(n)).sum();
        base + self.add.range(..n).count() as u64 - self.remove.range(..n).count() as u64
    }

    /// Position of `x` in the increasing enumeration, if `x` is a member.
    pub fn rank(&self, x: u64) -> Option<u64> {
        self.contains(x).then(|| self.count_below(x))
    }

    /// The `k`-th member (0-based) in increasing order.
    pub fn select(&self, k: u64) -> Option<u64> {
        if self.progs.len() == 1 && self.add.is_empty() && self.remove.is_empty() {
            return self.progs[0].nth(k).ok();
        }
        if self.is_finite() {
            return self.add.iter().nth(k as usize).copied();
        }
        let mut hi: u64 = 1;
        while self.count_below(hi) <= k {
            hi = hi.checked_mul(2)?;
        }
        let mut lo = 0u64;
        // smallest x with count_below(x + 1) > k
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            if self.count_below(mid + 1) > k {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        Some(lo)
    }

    pub fn min(&self) -> Option<u64> {
        self.select(0)
    }

    /// The `k` smallest members not in `skip`.
    pub fn smallest(&self, k: usize, skip: &BTreeSet<u64>) -> Vec<u64> {
        let mut out = Vec::with_capacity(k);
        let mut i = 0u64;
        while out.len() < k {
            match self.select(i) {
                Some(x) => {
                    if !skip.contains(&x) {
                        out.push(x);
                    }
                }
                None => break,
            }
            i += 1;
        }
        out
    }

    fn patch_points(&self) -> impl Iterator<Item = u64> + '_ {
        self.add.iter().chain(&self.remove).copied()
    }

    pub fn union(&self, other: &CertSet) -> Result<CertSet, AdfError> {
        let progs = self.progs.iter().chain(&other.progs).copied().collect();
        let cands: Vec<u64> = self.patch_points().chain(other.patch_points()).collect();
        build(progs, |x| self.contains(x) || other.contains(x), cands)
    }

    pub fn intersect(&self, other: &CertSet) -> Result<CertSet, AdfError> {
        let mut progs = Vec::new();
        for p in &self.progs {
            for q in &other.progs {
                if let Some(r) = p.intersect(q)? {
                    progs.push(r);
                }
            }
        }
        let cands: Vec<u64> = self.patch_points().chain(other.patch_points()).collect();
        build(progs, |x| self.contains(x) && other.contains(x), cands)
    }

    pub fn minus(&self, other: &CertSet) -> Result<CertSet, AdfError> {
        let mut progs = Vec::new();
        let mut cands: Vec<u64> = self.patch_points().chain(other.patch_points()).collect();
        for p in &self.progs {
            let mut pieces = vec![*p];
            for q in &other.progs {
                let mut next = Vec::new();
                for piece in &pieces {
                    let (keep, extra) = piece.minus(q)?;
                    next.extend(keep);
                    cands.extend(extra);
                }
                pieces = next;
                check_size(pieces.len())?;
            }
            progs.extend(pieces);
        }
        build(progs, |x| self.contains(x) && !other.contains(x), cands)
    }

    pub fn complement(&self) -> Result<CertSet, AdfError> {
        CertSet::naturals().minus(self)
    }

    pub fn union_all<'a>(sets: impl IntoIterator<Item = &'a CertSet>) -> Result<CertSet, AdfError> {
        let mut acc = CertSet::empty();
        for s in sets {
            acc = acc.union(s)?;
        }
        Ok(acc)
    }

    pub fn is_subset(&self, other: &CertSet) -> Result<bool, AdfError> {
        Ok(self.minus(other)?.is_empty())
    }

    /// `self ⊆* other`: the finite exception set `self ∖ other`, or `None`.
    pub fn almost_subset(&self, other: &CertSet) -> Result<Option<Vec<u64>>, AdfError> {
        Ok(self.minus(other)?.elements())
    }

    /// `self =* other`: the finite symmetric difference, or `None`.
    pub fn almost_eq(&self, other: &CertSet) -> Result<Option<Vec<u64>>, AdfError> {
        let a = self.minus(other)?;
        let b = other.minus(self)?;
        match (a.elements(), b.elements()) {
            (Some(x), Some(y)) => {
                let mut s: BTreeSet<u64> = x.into_iter().collect();
                s.extend(y);
                Ok(Some(s.into_iter().collect()))
            }
            _ => Ok(None),
        }
    }

    /// Exact set equality.
    pub fn same_as(&self, other: &CertSet) -> Result<bool, AdfError> {
        Ok(self.almost_eq(other)?.is_some_and(|e| e.is_empty()))
    }

    /// Largest period among the progressions (1 for finite sets).
    pub fn max_period(&self) -> u64 {
        self.progs.iter().map(|p| p.d).max().unwrap_or(1)
    }
}

fn check_size(n: usize) -> Result<(), AdfError> {
    if n as u64 > SPLIT_CAP {
        return Err(AdfError::SplitCap { pieces: n as u128 });
    }
    Ok(())
}

// Disjointify `progs`, then patch every candidate point so that membership
// agrees with `truth`. The caller guarantees agreement away from the candidates.
fn build(progs: Vec<Prog>, truth: impl Fn(u64) -> bool, cands: Vec<u64>) -> Result<CertSet, AdfError> {
    let mut disjoint: Vec<Prog> = Vec::new();
    let mut cands: BTreeSet<u64> = cands.into_iter().collect();
    let mut sorted = progs;
    sorted.sort_by_key(|p| (p.d, p.a));
    sorted.dedup();
    for p in sorted {
        let mut pieces = vec![p];
        for q in &disjoint {
            let mut next = Vec::new();
            for piece in &pieces {
                let (keep, extra) = piece.minus(q)?;
                next.extend(keep);
                cands.extend(extra);
            }
            pieces = next;
            check_size(pieces.len())?;
        }
        disjoint.extend(pieces);
        check_size(disjoint.len())?;
    }
    disjoint.sort();
    let mut add = BTreeSet::new();
    let mut remove = BTreeSet::new();
    for x in cands {
        let in_progs = disjoint.iter().any(|p| p.contains(x));
        match (truth(x), in_progs) {
            (true, false) => {
                add.insert(x);
            }
            (false, true) => {
                remove.insert(x);
            }
            _ => {}
        }
    }
    Ok(CertSet { progs: disjoint, add, remove })
}

#[derive(Serialize, Deserialize)]
struct CertSetRepr {
    progressions: Vec<[u64; 2]>,
    add: Vec<u64>,
    remove: Vec<u64>,
}

impl Serialize for CertSet {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        CertSetRepr {
            progressions: self.progs.iter().map(|p| [p.a, p.d]).collect(),
            add: self.add.iter().copied().collect(),
            remove: self.remove.iter().copied().collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for CertSet {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let r = CertSetRepr::deserialize(d)?;
        if r.progressions.iter().any(|p| p[1] == 0) {
            return Err(serde::de::Error::custom("progression step must be positive"));
        }
        CertSet::from_parts(r.progressions.iter().map(|p| Prog::new(p[0], p[1])), r.add, r.remove)
            .map_err(serde::de::Error::custom)
    }
}

impl fmt::Display for CertSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> = self.progs.iter().map(|p| format!("{}+{}k", p.a, p.d)).collect();
        if !self.add.is_empty() {
            parts.push(format!("{:?}", self.add));
        }
        write!(f, "{{{}}}", parts.join(" ∪ "))?;
        if !self.remove.is_empty() {
            write!(f, " ∖ {:?}", self.remove)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v2_class(b: u32) -> CertSet {
        CertSet::progression(1 << b, 1 << (b + 1))
    }

    #[test]
    fn crt_intersection() {
        let p = Prog::new(0, 2).intersect(&Prog::new(1, 3)).unwrap().unwrap();
        assert_eq!(p, Prog::new(4, 6));
        assert_eq!(Prog::new(0, 2).intersect(&Prog::new(1, 2)).unwrap(), None);
        let q = Prog::new(10, 4).intersect(&Prog::new(2, 8)).unwrap().unwrap();
        assert_eq!(q, Prog::new(10, 8));
    }

    #[test]
    fn evens_odds_and_fours() {
        let ev = CertSet::progression(0, 2);
        let od = CertSet::progression(1, 2);
        assert!(ev.intersect(&od).unwrap().is_empty());
        let fours = CertSet::progression(0, 4);
        assert!(ev.intersect(&fours).unwrap().is_infinite());
        assert!(v2_class(1).intersect(&v2_class(2)).unwrap().is_empty());
    }

    #[test]
    fn residual_of_three_classes() {
        let u = CertSet::union_all(&[v2_class(0), v2_class(1), v2_class(2)]).unwrap();
        let r = CertSet::naturals().minus(&u).unwrap();
        assert!(r.same_as(&CertSet::progression(0, 8)).unwrap());
    }

    #[test]
    fn patches_and_rank() {
        let s = CertSet::from_parts([Prog::new(0, 3)], [1, 2], [3]).unwrap();
        assert_eq!(s.members_below(10), vec![0, 1, 2, 6, 9]);
        assert_eq!(s.count_below(7), 4);
        assert_eq!(s.select(3), Some(6));
        assert_eq!(s.rank(9), Some(4));
        assert_eq!(s.rank(3), None);
    }

    #[test]
    fn almost_relations() {
        let a = CertSet::from_parts([Prog::new(0, 2)], [5], []).unwrap();
        let b = CertSet::from_parts([Prog::new(4, 2)], [], []).unwrap();
        assert_eq!(a.almost_eq(&b).unwrap(), Some(vec![0, 2, 5]));
        assert_eq!(b.almost_subset(&a).unwrap(), Some(vec![]));
        assert_eq!(a.almost_subset(&CertSet::progression(0, 4)).unwrap(), None);
    }

    #[test]
    fn json_round_trip() {
        let s = CertSet::from_parts([Prog::new(2, 4)], [1], [6]).unwrap();
        let j = serde_json::to_string(&s).unwrap();
        assert_eq!(j, r#"{"progressions":[[2,4]],"add":[1],"remove":[6]}"#);
        let back: CertSet = serde_json::from_str(&j).unwrap();
        assert!(back.same_as(&s).unwrap());
    }

    #[test]
    fn complement_of_union_of_classes() {
        let c = CertSet::progression(0, 3).union(&CertSet::progression(1, 3)).unwrap();
        assert!(c.complement().unwrap().same_as(&CertSet::progression(2, 3)).unwrap());
    }
}
