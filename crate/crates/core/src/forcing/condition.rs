use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::families::PairedFamilies;
use super::{two, ForcingConfig, ForcingError};
use crate::linalg::{self, block_compose, detect_blocks, op_norm_inf, BlockLayout, RMatrix};
use crate::quotient::pi_section_norm;
use crate::rational::Rational;

/// A condition `p = (n_p, M_p, a_p)`. `M_p` is kept as its diagonal blocks on
/// the cuts `0 = k_0 < … < k_B = n_p`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Condition {
    pub n: usize,
    pub cuts: Vec<usize>,
    pub blocks: Vec<RMatrix>,
    pub a: BTreeSet<usize>,
}

impl Condition {
    pub fn trivial() -> Self {
        Condition { n: 0, cuts: vec![0], blocks: vec![], a: BTreeSet::new() }
    }

    /// Split an explicit `n × n` matrix into its finest diagonal blocks.
    pub fn from_matrix(m: &RMatrix, a: BTreeSet<usize>) -> Result<Self, ForcingError> {
        if !m.is_square() {
            return Err(ForcingError::Invalid(format!("M is {}x{}", m.rows(), m.cols())));
        }
        let cuts = detect_blocks(m);
        let blocks = cuts.windows(2).map(|w| m.submatrix(w[0], w[1], w[0], w[1]).with_windows(w[0], w[0])).collect();
        Ok(Condition { n: m.rows(), cuts, blocks, a })
    }

    pub fn matrix(&self) -> Result<RMatrix, ForcingError> {
        Ok(block_compose(&self.blocks, &BlockLayout::new(self.cuts.clone())?)?)
    }

    /// Same `n` and the same matrix, the stem shared by a linked pair.
    pub fn same_stem(&self, other: &Condition) -> bool {
        if self.n != other.n {
            return false;
        }
        if self.cuts == other.cuts {
            return self.blocks.iter().zip(&other.blocks).all(|(x, y)| x.to_rows() == y.to_rows());
        }
        matches!((self.matrix(), other.matrix()), (Ok(x), Ok(y)) if x.to_rows() == y.to_rows())
    }

    pub fn block_of(&self, i: usize) -> Option<usize> {
        if i >= self.n || self.cuts.len() < 2 {
            return None;
        }
        Some(self.cuts.partition_point(|&c| c <= i) - 1)
    }

    pub fn entry(&self, i: usize, j: usize) -> Rational {
        match (self.block_of(i), self.block_of(j)) {
            (Some(b), Some(c)) if b == c => {
                let s = self.cuts[b];
                self.blocks[b].at(i - s, j - s).clone()
            }
            _ => Rational::zero(),
        }
    }

    fn layout_problem(&self) -> Option<String> {
        if self.cuts.first() != Some(&0) || self.cuts.last() != Some(&self.n) {
            return Some(format!("cuts {:?} do not span [0, {})", self.cuts, self.n));
        }
        if self.cuts.windows(2).any(|w| w[0] >= w[1]) {
            return Some(format!("cuts {:?} are not strictly increasing", self.cuts));
        }
        if self.blocks.len() + 1 != self.cuts.len() {
            return Some(format!("{} blocks for {} cuts", self.blocks.len(), self.cuts.len()));
        }
        for (k, (b, w)) in self.blocks.iter().zip(self.cuts.windows(2)).enumerate() {
            if b.rows() != w[1] - w[0] || b.cols() != w[1] - w[0] {
                return Some(format!("block {k} is {}x{} on [{}, {})", b.rows(), b.cols(), w[0], w[1]));
            }
        }
        None
    }
}

/// A failed clause of the definition with the measured quantity.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub clause: String,
    pub detail: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub measured: Option<Rational>,
}

fn violation(clause: &str, detail: String, measured: Option<Rational>) -> Violation {
    Violation { clause: clause.into(), detail, measured }
}

/// Clauses (a) shape and rational entries, (b) `‖M‖, ‖M⁻¹‖ ≤ c₂`,
/// (c) `‖Π_{F,a,n}‖, ‖Π_{G,a,n}‖ ≤ 2`.
pub fn validate_condition(p: &Condition, fam: &PairedFamilies, cfg: &ForcingConfig) -> Vec<Violation> {
    let mut out = Vec::new();
    if let Some(d) = p.layout_problem() {
        out.push(violation("a", d, None));
        return out;
    }
    if let Some(x) = p.a.iter().find(|&&x| x >= fam.len()) {
        out.push(violation("a", format!("index {x} outside the family of size {}", fam.len()), None));
        return out;
    }
    let mut norm = Rational::zero();
    let mut inv_norm = Rational::zero();
    for (k, b) in p.blocks.iter().enumerate() {
        norm = norm.max(op_norm_inf(b));
        match linalg::invert(b) {
            Ok(inv) => inv_norm = inv_norm.max(op_norm_inf(&inv)),
            Err(_) => out.push(violation("b", format!("block {k} is singular"), None)),
        }
    }
    if norm > cfg.c2 {
        out.push(violation("b", format!("|M| exceeds c2 = {}", cfg.c2), Some(norm)));
    }
    if inv_norm > cfg.c2 {
        out.push(violation("b", format!("|M^-1| exceeds c2 = {}", cfg.c2), Some(inv_norm)));
    }
    let a: Vec<usize> = p.a.iter().copied().collect();
    for (name, vs) in [("F", &fam.f), ("G", &fam.g)] {
        match pi_section_norm(vs, &a, p.n, &cfg.quotient()) {
            Ok(m) if m.value > two() => {
                out.push(violation("c", format!("|Pi_{{{name},a,{}}}| exceeds 2", p.n), Some(m.value)))
            }
            Ok(_) => {}
            Err(e) => out.push(violation("c", format!("Pi_{name}: {e}"), None)),
        }
    }
    out
}

/// Outcome of `p ≤ q` with the first failing clause.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LeqWitness {
    pub holds: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub clause: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub xi: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coordinate: Option<usize>,
}

impl LeqWitness {
    fn ok() -> Self {
        LeqWitness { holds: true, clause: None, detail: None, xi: None, coordinate: None }
    }

    fn fail(clause: &str, detail: String) -> Self {
        LeqWitness { holds: false, clause: Some(clause.into()), detail: Some(detail), xi: None, coordinate: None }
    }
}

/// `p ≤ q`: (i) `n_p ≥ n_q`, (ii) `M_p = [[M_q, 0], [0, M_qp]]`, (iii) `a_p ⊇ a_q`,
/// (iv) `M_qp (f_ξ|[n_q, n_p)) = g_ξ|[n_q, n_p)` for `ξ ∈ a_q`.
pub fn cond_leq(p: &Condition, q: &Condition, fam: &PairedFamilies) -> LeqWitness {
    if p.n < q.n {
        return LeqWitness::fail("i", format!("n_p = {} < n_q = {}", p.n, q.n));
    }
    let nq = q.n;
    for (b, blk) in p.blocks.iter().enumerate() {
        let s = p.cuts[b];
        if s >= nq {
            break;
        }
        for i in 0..blk.rows() {
            for j in 0..blk.cols() {
                let (gi, gj) = (s + i, s + j);
                let v = blk.at(i, j);
                let crossing = (gi < nq) != (gj < nq);
                if (crossing && !v.is_zero()) || (!crossing && gi < nq && *v != q.entry(gi, gj)) {
                    return LeqWitness::fail("ii", format!("M_p[{gi}][{gj}] = {v} breaks the block form over M_q"));
                }
            }
        }
    }
    for (b, blk) in q.blocks.iter().enumerate() {
        let s = q.cuts[b];
        for i in 0..blk.rows() {
            for j in 0..blk.cols() {
                let v = blk.at(i, j);
                if !v.is_zero() && p.entry(s + i, s + j) != *v {
                    return LeqWitness::fail("ii", format!("M_q[{}][{}] = {v} is not kept in M_p", s + i, s + j));
                }
            }
        }
    }
    if let Some(x) = q.a.difference(&p.a).next() {
        return LeqWitness::fail("iii", format!("{x} ∈ a_q is missing from a_p"));
    }
    for &xi in &q.a {
        let (f, g) = (&fam.f[xi], &fam.g[xi]);
        for (b, blk) in p.blocks.iter().enumerate() {
            let (s, e) = (p.cuts[b], p.cuts[b + 1]);
            if e <= nq {
                continue;
            }
            let lo = s.max(nq);
            let fw: Vec<Rational> = (lo..e).map(|j| f.get(j)).collect();
            for i in lo..e {
                let v: Rational = (lo..e).map(|j| blk.at(i - s, j - s) * &fw[j - lo]).sum();
                if v != g.get(i) {
                    let mut w = LeqWitness::fail("iv", format!("(M_qp f_{xi})[{i}] = {v} but g_{xi}[{i}] = {}", g.get(i)));
                    w.xi = Some(xi);
                    w.coordinate = Some(i);
                    return w;
                }
            }
        }
    }
    LeqWitness::ok()
}
