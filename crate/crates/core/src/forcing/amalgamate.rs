use std::collections::BTreeSet;

use num_integer::Integer;
use serde::{Deserialize, Serialize};

use super::condition::{cond_leq, validate_condition, Condition};
use super::families::PairedFamilies;
use super::{two, ForcingConfig, ForcingError};
use crate::geom::{extend_isomorphism, lower_bound, map_norm, ComplementStage, LinMap, Subspace};
use crate::linalg::{RMatrix, WindowVector};
use crate::quotient::{pi_section_norm, r_operator, r_operator_inverse_norm, QuotientError, SpanRows, TailVector};
use crate::rational::Rational;
use crate::vertex;

/// Measured quantities behind one amalgamation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AmalgamationReport {
    pub n: usize,
    pub n_r: usize,
    pub a_r: Vec<usize>,
    /// Every cut tried, in order; the last one was accepted.
    pub candidates: Vec<usize>,
    pub section_f: Rational,
    pub section_g: Rational,
    pub r_inv_f: Rational,
    pub r_inv_g: Rational,
    /// `‖V_GF‖` and `‖V_FG‖ = ‖V_GF⁻¹‖`.
    pub v_norm: Rational,
    pub v_inv_norm: Rational,
    /// `π(g_ξ) ↦ π(f_ξ)` and its inverse, measured on the finite span only.
    pub ts_norm: Rational,
    pub st_norm: Rational,
    pub w_norm: Rational,
    pub w_inv_norm: Rational,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stage: Option<ComplementStage>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Amalgamation {
    pub r: Condition,
    /// `None` when the input already belonged to the dense set.
    pub report: Option<AmalgamationReport>,
}

fn windows(vs: &[TailVector], a: &[usize], n: usize, n_r: usize) -> Vec<WindowVector> {
    a.iter().map(|&k| vs[k].window(n, n_r)).collect()
}

fn check_valid(p: &Condition, fam: &PairedFamilies, cfg: &ForcingConfig, name: &str) -> Result<(), ForcingError> {
    let v = validate_condition(p, fam, cfg);
    if let Some(x) = v.first() {
        return Err(ForcingError::Invalid(format!("{name}: clause ({}) {}", x.clause, x.detail)));
    }
    Ok(())
}

// ‖T S⁻¹‖ and ‖S T⁻¹‖ on span{π(g_ξ)} ↦ span{π(f_ξ)}.
fn span_norms(fam: &PairedFamilies, a: &[usize], cfg: &ForcingConfig) -> Result<(Rational, Rational), ForcingError> {
    let h = a.len();
    let vs: Vec<&TailVector> = a.iter().map(|&k| &fam.f[k]).chain(a.iter().map(|&k| &fam.g[k])).collect();
    let rows = SpanRows::new(vs, &cfg.quotient()).tail_rows();
    let fpart = rows.submatrix(0, rows.rows(), 0, h);
    let gpart = rows.submatrix(0, rows.rows(), h, 2 * h);
    let ts = vertex::max_ratio(&fpart, &gpart, cfg.vertex_cap).map_err(QuotientError::from)?.value;
    let st = vertex::max_ratio(&gpart, &fpart, cfg.vertex_cap).map_err(QuotientError::from)?.value;
    Ok((ts, st))
}

struct Window {
    n_r: usize,
    section_f: Rational,
    section_g: Rational,
    r_inv_f: Rational,
    r_inv_g: Rational,
}

// Checks the three norm conditions at one candidate; Err(reason) when it fails.
fn try_cut(fam: &PairedFamilies, a: &[usize], n: usize, n_r: usize, cfg: &ForcingConfig) -> Result<Result<Window, String>, ForcingError> {
    let h = Rational::from(a.len());
    if &h * &h > &cfg.c1 * &cfg.c1 * Rational::from(n_r - n) {
        return Ok(Err(format!("|a_r| = {h} exceeds c1*sqrt({})", n_r - n)));
    }
    let qc = cfg.quotient();
    let section_f = pi_section_norm(&fam.f, a, n_r, &qc)?.value;
    let section_g = pi_section_norm(&fam.g, a, n_r, &qc)?.value;
    if section_f > two() || section_g > two() {
        return Ok(Err(format!("section norms {section_f}, {section_g} at {n_r}")));
    }
    let mut inv = Vec::new();
    for vs in [&fam.f, &fam.g] {
        match r_operator(vs, a, n, n_r, &qc) {
            Ok(r) => inv.push(r_operator_inverse_norm(&r, cfg.vertex_cap)?.value),
            Err(QuotientError::NotInvertible { .. }) => return Ok(Err(format!("R is not invertible on [{n}, {n_r})"))),
            Err(e) => return Err(e.into()),
        }
    }
    let r_inv_g = inv.pop().expect("two operators");
    let r_inv_f = inv.pop().expect("two operators");
    if r_inv_f > two() || r_inv_g > two() {
        return Ok(Err(format!("|R^-1| = {r_inv_f}, {r_inv_g} on [{n}, {n_r})")));
    }
    Ok(Ok(Window { n_r, section_f, section_g, r_inv_f, r_inv_g }))
}

/// Common extension `r ≤ p, q` with `n_r ≥ N` of two conditions sharing `(n, M)`.
pub fn amalgamate(p: &Condition, q: &Condition, big_n: usize, fam: &PairedFamilies, cfg: &ForcingConfig) -> Result<Amalgamation, ForcingError> {
    check_valid(p, fam, cfg, "p")?;
    check_valid(q, fam, cfg, "q")?;
    if !p.same_stem(q) {
        return Err(ForcingError::Input("p and q do not share (n, M)".into()));
    }
    let n = p.n;
    let a_set: BTreeSet<usize> = p.a.union(&q.a).copied().collect();
    let a: Vec<usize> = a_set.iter().copied().collect();
    let start = n.max(big_n) + 1;
    let mut candidates = Vec::new();
    let mut found = None;
    let mut reason = String::from("no candidate below the cap");
    // Widths are multiples of the common period so that the new block, repeated,
    // carries the tails exactly.
    let period = a.iter().flat_map(|&k| [fam.f[k].period_len(), fam.g[k].period_len()]).try_fold(1usize, |l, p| {
        let l = l.lcm(&p);
        (l <= cfg.lcm_cap).then_some(l)
    });
    let mut d = start - n;
    if let Some(l) = period {
        d = d.div_ceil(l) * l;
    }
    while n + d <= cfg.max_cut {
        let n_r = n + d;
        candidates.push(n_r);
        if a.is_empty() {
            found = Some(Window { n_r, section_f: Rational::zero(), section_g: Rational::zero(), r_inv_f: Rational::zero(), r_inv_g: Rational::zero() });
            break;
        }
        match try_cut(fam, &a, n, n_r, cfg)? {
            Ok(w) => {
                found = Some(w);
                break;
            }
            Err(why) => reason = why,
        }
        d *= 2;
    }
    let win = found.ok_or(ForcingError::SearchExhausted { from: start.max(n + 1), cap: cfg.max_cut, reason })?;
    let n_r = win.n_r;
    let (w, report_tail) = if a.is_empty() {
        let id = RMatrix::identity(n_r - n).with_windows(n, n);
        (id, (Rational::one(), Rational::one(), Rational::zero(), Rational::zero(), Rational::one(), Rational::one(), None))
    } else {
        let y1 = Subspace::new(n, n_r, windows(&fam.f, &a, n, n_r))?;
        let v = LinMap::new(y1, n, n_r, windows(&fam.g, &a, n, n_r))?;
        let v_norm = map_norm(&v, cfg.vertex_cap)?.value;
        let lb = lower_bound(&v, cfg.vertex_cap)?.value;
        if lb.is_zero() {
            return Err(ForcingError::Verification("V_GF is not injective".into()));
        }
        let v_inv_norm = lb.recip();
        for (what, m) in [("|V_GF|", &v_norm), ("|V_FG|", &v_inv_norm)] {
            if *m > cfg.rho {
                return Err(ForcingError::NormBudget { what: what.into(), measured: m.clone(), budget: cfg.rho.clone() });
            }
        }
        let (ts, st) = span_norms(fam, &a, cfg)?;
        let ext = extend_isomorphism(&v, None, None, &cfg.extension())?;
        (ext.w, (v_norm, v_inv_norm, ts, st, ext.norm, ext.inv_norm, Some(ext.stage)))
    };
    let (v_norm, v_inv_norm, ts_norm, st_norm, w_norm, w_inv_norm, stage) = report_tail;
    let mut r = p.clone();
    r.n = n_r;
    r.cuts.push(n_r);
    r.blocks.push(w);
    r.a = a_set;
    check_valid(&r, fam, cfg, "r")?;
    for (name, other) in [("p", p), ("q", q)] {
        let wit = cond_leq(&r, other, fam);
        if !wit.holds {
            return Err(ForcingError::Verification(format!(
                "r ≤ {name} fails at clause ({}): {}",
                wit.clause.unwrap_or_default(),
                wit.detail.unwrap_or_default()
            )));
        }
    }
    let report = AmalgamationReport {
        n,
        n_r,
        a_r: a,
        candidates,
        section_f: win.section_f,
        section_g: win.section_g,
        r_inv_f: win.r_inv_f,
        r_inv_g: win.r_inv_g,
        v_norm,
        v_inv_norm,
        ts_norm,
        st_norm,
        w_norm,
        w_inv_norm,
        stage,
    };
    Ok(Amalgamation { r, report: Some(report) })
}

/// `r ≤ p` with `n_r ≥ n`; `p` itself when it already reaches `n`.
pub fn dense_hit_d(p: &Condition, n: usize, fam: &PairedFamilies, cfg: &ForcingConfig) -> Result<Amalgamation, ForcingError> {
    if p.n >= n {
        check_valid(p, fam, cfg, "p")?;
        return Ok(Amalgamation { r: p.clone(), report: None });
    }
    amalgamate(p, p, n, fam, cfg)
}

/// `r ≤ p` with `ξ ∈ a_r`, by amalgamating `p` with `(n_p, M_p, {ξ})`.
pub fn dense_hit_e(p: &Condition, xi: usize, fam: &PairedFamilies, cfg: &ForcingConfig) -> Result<Amalgamation, ForcingError> {
    if xi >= fam.len() {
        return Err(ForcingError::Input(format!("index {xi} outside the family of size {}", fam.len())));
    }
    if p.a.contains(&xi) {
        check_valid(p, fam, cfg, "p")?;
        return Ok(Amalgamation { r: p.clone(), report: None });
    }
    let q = Condition { a: BTreeSet::from([xi]), ..p.clone() };
    amalgamate(p, &q, p.n, fam, cfg)
}
