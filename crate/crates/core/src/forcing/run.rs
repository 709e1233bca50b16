use std::collections::BTreeMap;

use num_integer::Integer;
use serde::{Deserialize, Serialize};

use super::amalgamate::{dense_hit_d, dense_hit_e, AmalgamationReport};
use super::condition::{cond_leq, Condition};
use super::families::PairedFamilies;
use super::{two, ForcingConfig, ForcingError};
use crate::linalg::{self, op_norm_inf, RMatrix};
use crate::quotient::pi_section_norm;
use crate::rational::Rational;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    /// `E_ξ = {p : ξ ∈ a_p}`.
    E { xi: usize },
    /// `D_n = {p : n_p ≥ n}`.
    D { n: usize },
}

/// Every `E_ξ` in index order, then `D_{2^j}` up to the horizon and `D_horizon`.
pub fn default_schedule(kappa: usize, horizon: usize) -> Vec<Target> {
    let mut out: Vec<Target> = (0..kappa).map(|xi| Target::E { xi }).collect();
    let mut n = 1;
    while n < horizon {
        out.push(Target::D { n });
        n *= 2;
    }
    if horizon > 0 {
        out.push(Target::D { n: horizon });
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunStep {
    pub target: Target,
    /// `n` and `a` of the condition after this step.
    pub n: usize,
    pub a: Vec<usize>,
    pub changed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<AmalgamationReport>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepFailure {
    pub step: usize,
    pub target: Target,
    pub error: String,
}

/// Nonzero entries of the assembled block-diagonal matrix.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SparseMatrix {
    pub n: usize,
    pub triplets: Vec<(usize, usize, Rational)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Entry {
    pub step: usize,
    /// Start of the first block built with `ξ` committed.
    pub n: usize,
}

/// A decreasing chain from the trivial condition with its hit log, block
/// layout and matrix. `failure` is set when a step could not be taken; the
/// chain up to that step is kept.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenericRun {
    pub config: ForcingConfig,
    pub horizon: usize,
    pub schedule: Vec<Target>,
    pub steps: Vec<RunStep>,
    pub cuts: Vec<usize>,
    pub matrix: SparseMatrix,
    pub entry: BTreeMap<usize, Entry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<StepFailure>,
}

fn sparse(blocks: &[RMatrix], cuts: &[usize]) -> SparseMatrix {
    let mut triplets = Vec::new();
    for (b, s) in blocks.iter().zip(cuts) {
        for i in 0..b.rows() {
            for j in 0..b.cols() {
                let v = b.at(i, j);
                if !v.is_zero() {
                    triplets.push((s + i, s + j, v.clone()));
                }
            }
        }
    }
    SparseMatrix { n: *cuts.last().unwrap_or(&0), triplets }
}

pub fn run_generic(fam: &PairedFamilies, schedule: &[Target], horizon: usize, cfg: &ForcingConfig) -> Result<GenericRun, ForcingError> {
    fam.validate(&cfg.quotient())?;
    let mut p = Condition::trivial();
    let mut steps = Vec::new();
    let mut entry = BTreeMap::new();
    let mut failure = None;
    for (k, &target) in schedule.iter().enumerate() {
        let res = match target {
            Target::E { xi } => dense_hit_e(&p, xi, fam, cfg),
            Target::D { n } => dense_hit_d(&p, n, fam, cfg),
        };
        match res {
            Ok(am) => {
                let changed = am.report.is_some();
                for &xi in am.r.a.difference(&p.a) {
                    entry.insert(xi, Entry { step: k, n: p.n });
                }
                p = am.r;
                steps.push(RunStep { target, n: p.n, a: p.a.iter().copied().collect(), changed, report: am.report });
            }
            Err(e) => {
                failure = Some(StepFailure { step: k, target, error: e.to_string() });
                break;
            }
        }
    }
    Ok(GenericRun {
        config: cfg.clone(),
        horizon,
        schedule: schedule.to_vec(),
        steps,
        matrix: sparse(&p.blocks, &p.cuts),
        cuts: p.cuts,
        entry,
        failure,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub ok: bool,
    pub detail: String,
}

/// How far the certificate `M f_ξ = g_ξ` reaches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailMode {
    /// Exact on `[entry, horizon)` only.
    Horizon,
    /// The last block starts past both prefixes and spans a multiple of both
    /// periods, so its periodic repetition carries `f_ξ` to `g_ξ` on the whole tail.
    Symbolic,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub config: ForcingConfig,
    pub horizon: usize,
    pub checks: Vec<Check>,
    pub failures: usize,
    pub tails: BTreeMap<usize, TailMode>,
}

impl VerifyReport {
    pub fn ok(&self) -> bool {
        self.failures == 0
    }
}

struct Checks(Vec<Check>);

impl Checks {
    fn push(&mut self, name: &str, errors: &[String], summary: String) {
        let ok = errors.is_empty();
        let detail = if ok { summary } else { format!("{} failure(s); first: {}", errors.len(), errors[0]) };
        self.0.push(Check { name: name.into(), ok, detail });
    }
}

// Blocks of the stored matrix, or the reason they cannot be rebuilt.
fn rebuild_blocks(run: &GenericRun) -> Result<Vec<RMatrix>, String> {
    let cuts = &run.cuts;
    if cuts.first() != Some(&0) || cuts.windows(2).any(|w| w[0] >= w[1]) {
        return Err(format!("cuts {cuts:?} are not a layout from 0"));
    }
    let n = *cuts.last().expect("nonempty");
    if run.matrix.n != n {
        return Err(format!("matrix size {} differs from the last cut {n}", run.matrix.n));
    }
    let mut blocks: Vec<RMatrix> = cuts.windows(2).map(|w| RMatrix::zeros(w[1] - w[0], w[1] - w[0]).with_windows(w[0], w[0])).collect();
    for (i, j, v) in &run.matrix.triplets {
        let bi = cuts.partition_point(|&c| c <= *i).checked_sub(1);
        let bj = cuts.partition_point(|&c| c <= *j).checked_sub(1);
        match (bi, bj) {
            (Some(b), Some(c)) if b == c && b < blocks.len() => {
                let s = cuts[b];
                blocks[b].set(i - s, j - s, v.clone());
            }
            _ => return Err(format!("entry ({i}, {j}) lies outside the diagonal blocks")),
        }
    }
    Ok(blocks)
}

/// Re-checks a run from its JSON content alone: the chain order, every block,
/// exact interpolation up to the horizon and the row ℓ₁ bound.
pub fn verify_run(run: &GenericRun, fam: &PairedFamilies) -> VerifyReport {
    let cfg = &run.config;
    let mut checks = Checks(Vec::new());
    let mut tails = BTreeMap::new();
    let fam_err: Vec<String> = fam.validate(&cfg.quotient()).err().map(|e| e.to_string()).into_iter().collect();
    checks.push("families", &fam_err, format!("{} paired vectors", fam.len()));
    let aborted: Vec<String> = run.failure.iter().map(|f| format!("step {} ({:?}): {}", f.step, f.target, f.error)).collect();
    checks.push("completed", &aborted, format!("{} steps", run.steps.len()));
    let blocks = match rebuild_blocks(run) {
        Ok(b) => {
            checks.push("layout", &[], format!("{} blocks on [0, {})", b.len(), run.matrix.n));
            b
        }
        Err(e) => {
            checks.push("layout", &[e], String::new());
            let failures = checks.0.iter().filter(|c| !c.ok).count();
            return VerifyReport { config: cfg.clone(), horizon: run.horizon, checks: checks.0, failures, tails };
        }
    };
    if !fam_err.is_empty() {
        let failures = checks.0.iter().filter(|c| !c.ok).count();
        return VerifyReport { config: cfg.clone(), horizon: run.horizon, checks: checks.0, failures, tails };
    }

    // (1) chain order and clause (c) for every condition of the chain
    let mut order_err = Vec::new();
    let mut section_err = Vec::new();
    let mut prev = Condition::trivial();
    let qc = cfg.quotient();
    for (k, st) in run.steps.iter().enumerate() {
        let Some(b) = run.cuts.iter().position(|&c| c == st.n) else {
            order_err.push(format!("step {k}: n = {} is not a cut", st.n));
            break;
        };
        let cond = Condition { n: st.n, cuts: run.cuts[..=b].to_vec(), blocks: blocks[..b].to_vec(), a: st.a.iter().copied().collect() };
        if cond.a.iter().any(|&x| x >= fam.len()) {
            order_err.push(format!("step {k}: index outside the family"));
            break;
        }
        let w = cond_leq(&cond, &prev, fam);
        if !w.holds {
            order_err.push(format!("step {k}: clause ({}) {}", w.clause.unwrap_or_default(), w.detail.unwrap_or_default()));
        }
        if st.changed != (cond != prev) {
            order_err.push(format!("step {k}: change flag disagrees with the chain"));
        }
        let a: Vec<usize> = cond.a.iter().copied().collect();
        for (name, vs) in [("F", &fam.f), ("G", &fam.g)] {
            match pi_section_norm(vs, &a, cond.n, &qc) {
                Ok(m) if m.value > two() => section_err.push(format!("step {k}: |Pi_{name}| = {}", m.value)),
                Ok(_) => {}
                Err(e) => section_err.push(format!("step {k}: Pi_{name}: {e}")),
            }
        }
        prev = cond;
    }
    checks.push("chain_order", &order_err, format!("{} steps, each below its predecessor", run.steps.len()));
    checks.push("sections", &section_err, "all section norms at most 2".into());

    // (2) blocks and inverse blocks within c₂
    let mut block_err = Vec::new();
    let mut worst = (Rational::zero(), Rational::zero());
    for (k, b) in blocks.iter().enumerate() {
        let norm = op_norm_inf(b);
        match linalg::invert(b) {
            Ok(inv) => {
                let inv_norm = op_norm_inf(&inv);
                if norm > cfg.c2 || inv_norm > cfg.c2 {
                    block_err.push(format!("block {k}: |M_k| = {norm}, |M_k^-1| = {inv_norm}"));
                }
                worst.1 = worst.1.clone().max(inv_norm);
            }
            Err(_) => block_err.push(format!("block {k} is singular")),
        }
        worst.0 = worst.0.clone().max(norm);
    }
    checks.push("blocks", &block_err, format!("max |M_k| = {}, max |M_k^-1| = {}", worst.0, worst.1));

    // (3) exact interpolation beyond the entry stage
    let n_final = run.matrix.n;
    let mut interp_err = Vec::new();
    if !run.entry.is_empty() && n_final < run.horizon {
        interp_err.push(format!("matrix covers [0, {n_final}) only, horizon is {}", run.horizon));
    }
    for (&xi, e) in &run.entry {
        if xi >= fam.len() {
            interp_err.push(format!("entry for unknown index {xi}"));
            continue;
        }
        let (f, g) = (&fam.f[xi], &fam.g[xi]);
        'outer: for (k, b) in blocks.iter().enumerate() {
            let (s, t) = (run.cuts[k], run.cuts[k + 1]);
            if t <= e.n {
                continue;
            }
            let fw: Vec<Rational> = (s..t).map(|j| f.get(j)).collect();
            for i in s.max(e.n)..t {
                let v: Rational = (0..t - s).map(|j| b.at(i - s, j) * &fw[j]).sum();
                if v != g.get(i) {
                    interp_err.push(format!("(M f_{xi} - g_{xi})[{i}] = {}", v - g.get(i)));
                    break 'outer;
                }
            }
        }
        let mode = match run.cuts.len().checked_sub(2) {
            Some(k) => {
                let (s, t) = (run.cuts[k], run.cuts[k + 1]);
                let l = f.period_len().lcm(&g.period_len());
                if s >= e.n && s >= f.start() && s >= g.start() && (t - s) % l == 0 {
                    TailMode::Symbolic
                } else {
                    TailMode::Horizon
                }
            }
            None => TailMode::Horizon,
        };
        tails.insert(xi, mode);
    }
    checks.push("interpolation", &interp_err, format!("{} indices exact on [entry, {n_final})", run.entry.len()));

    // (4) rows of the assembled matrix are in ℓ₁ with norm at most c₂
    let row_err: Vec<String> = blocks
        .iter()
        .enumerate()
        .flat_map(|(k, b)| (0..b.rows()).filter(|&i| b.row_l1(i) > cfg.c2).map(move |i| format!("row {} of block {k}", i)))
        .collect();
    checks.push("row_l1", &row_err, format!("every row ℓ1-norm at most {}", cfg.c2));

    let failures = checks.0.iter().filter(|c| !c.ok).count();
    VerifyReport { config: cfg.clone(), horizon: run.horizon, checks: checks.0, failures, tails }
}
