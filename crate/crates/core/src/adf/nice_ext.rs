//! Extending an injection `f : A → C` to `h : B → C` that is almost equal to
//! a given `g` and covers a finite set `F`.

use std::collections::BTreeSet;

use serde::Serialize;

use super::certset::CertSet;
use super::injection::{Domain, Injection, PosOf};
use super::AdfError;

#[derive(Debug, Clone, Serialize)]
pub struct NiceExt<I: Injection> {
    #[serde(skip)]
    pub h: I,
    /// `{x ∈ B∖A : g(x) ∉ C}`.
    pub d1: Vec<PosOf<I>>,
    /// `{x ∈ B∖A : g(x) ∈ ran f}`.
    pub d2: Vec<PosOf<I>>,
    pub d3: Vec<PosOf<I>>,
    /// Points of `A` where `f` and `g` differ.
    pub f_exceptions: Vec<PosOf<I>>,
    /// `D₃ ∪ f_exceptions`: everywhere else `h = g`.
    pub exceptions: Vec<PosOf<I>>,
    pub assigned: Vec<(PosOf<I>, u64)>,
}

fn hyp(index: u8, detail: impl Into<String>) -> AdfError {
    AdfError::Hypothesis { index, detail: detail.into() }
}

pub fn nice_ext<I: Injection>(
    a: &I::D,
    b: &I::D,
    c: &CertSet,
    f: &I,
    g: &I,
    fset: &BTreeSet<u64>,
) -> Result<NiceExt<I>, AdfError> {
    if !f.domain().same(a)? || !g.domain().same(b)? {
        return Err(AdfError::Domain("f must be defined on A and g on B".into()));
    }
    if !a.within(b)? {
        return Err(hyp(1, "A is not a subset of B"));
    }
    if !b.infinite_beyond(a)? {
        return Err(hyp(1, "B ∖ A is finite"));
    }
    f.check_injective().map_err(|e| hyp(2, format!("f is not injective: {e}")))?;
    let ran_f = f.range()?;
    let out = ran_f.minus(c)?;
    if !out.is_empty() {
        return Err(hyp(2, format!("f takes values outside C: {out}")));
    }
    g.check_injective().map_err(|e| hyp(3, format!("g is not injective: {e}")))?;
    let ran_g = g.range()?;
    let exc4 = ran_g.minus(c)?.elements().ok_or_else(|| hyp(4, "ran(g) ∖ C is infinite"))?;
    if c.minus(&ran_g)?.is_finite() {
        return Err(hyp(5, "C ∖ ran(g) is finite"));
    }
    let exc6 = f.differences(g)?.ok_or_else(|| hyp(6, "f and g differ on an infinite part of A"))?;
    if let Some(v) = fset.iter().find(|v| !c.contains(**v)) {
        return Err(hyp(7, format!("{v} ∈ F lies outside C")));
    }

    let in_gap = |x: &PosOf<I>| b.has(x) && !a.has(x);
    let value = |m: &I, x: &PosOf<I>| -> Result<u64, AdfError> {
        m.eval(x)?.ok_or_else(|| AdfError::Domain(format!("{x} outside the domain")))
    };
    let mut d1 = BTreeSet::new();
    for v in exc4 {
        if let Some(x) = g.preimage(v)?.filter(|x| in_gap(x)) {
            d1.insert(x);
        }
    }
    let mut d2 = BTreeSet::new();
    let (mut f_vals, mut g_vals) = (Vec::new(), Vec::new());
    for y in &exc6 {
        let v = value(f, y)?;
        f_vals.push(v);
        g_vals.push(value(g, y)?);
        if let Some(x) = g.preimage(v)?.filter(|x| in_gap(x)) {
            d2.insert(x);
        }
    }
    let mut d3: BTreeSet<PosOf<I>> = d1.union(&d2).copied().collect();
    if d3.len() < fset.len() {
        let more = b.smallest_beyond(a, fset.len() - d3.len(), &d3)?;
        d3.extend(more);
    }

    // ran(h') = ran f ∪ g[B∖A ∖ D₃], with g[A] = (ran f ∖ f[exc]) ∪ g[exc]
    let g_on_a = ran_f.minus(&CertSet::finite(f_vals))?.union(&CertSet::finite(g_vals))?;
    let g_d3 = d3.iter().map(|x| value(g, x)).collect::<Result<Vec<_>, _>>()?;
    let ran_h1 = ran_f.union(&ran_g.minus(&g_on_a)?.minus(&CertSet::finite(g_d3))?)?;
    let free = c.minus(&ran_h1)?;
    let mut values: Vec<u64> = fset.iter().copied().filter(|v| !ran_h1.contains(*v)).collect();
    let taken: BTreeSet<u64> = values.iter().copied().collect();
    values.extend(free.smallest(d3.len().saturating_sub(values.len()), &taken));
    if values.len() < d3.len() {
        return Err(AdfError::Verification("not enough free values in C".into()));
    }
    let assigned: Vec<(PosOf<I>, u64)> = d3.iter().copied().zip(values).collect();

    let mut patch = g.patch().clone();
    patch.retain(|k, _| b.has(k));
    for y in &exc6 {
        patch.insert(*y, value(f, y)?);
    }
    patch.extend(assigned.iter().copied());
    let h = g.repatch(b.clone(), patch)?;
    let exceptions: BTreeSet<PosOf<I>> = exc6.iter().chain(&d3).copied().collect();
    Ok(NiceExt {
        h,
        d1: d1.into_iter().collect(),
        d2: d2.into_iter().collect(),
        d3: d3.into_iter().collect(),
        f_exceptions: exc6.into_iter().collect(),
        exceptions: exceptions.into_iter().collect(),
        assigned,
    })
}

/// The four postconditions: `h` injective into `C`, `f ⊆ h`, `h = g` off the
/// stated exceptions, `F ⊆ ran h`.
pub fn verify_nice_ext<I: Injection>(
    a: &I::D,
    c: &CertSet,
    f: &I,
    g: &I,
    fset: &BTreeSet<u64>,
    out: &NiceExt<I>,
) -> Result<(), AdfError> {
    let h = &out.h;
    let fail = |m: String| AdfError::Verification(m);
    h.check_injective().map_err(|e| fail(format!("h is not injective: {e}")))?;
    let stray = h.range()?.minus(c)?;
    if !stray.is_empty() {
        return Err(fail(format!("h takes values outside C: {stray}")));
    }
    match h.differences(f)? {
        Some(d) if d.iter().all(|x| !a.has(x)) => {}
        _ => return Err(fail("h does not extend f".into())),
    }
    let stated: BTreeSet<PosOf<I>> = out.exceptions.iter().copied().collect();
    match h.differences(g)? {
        Some(d) if d.is_subset(&stated) => {}
        _ => return Err(fail("h differs from g outside the stated exceptions".into())),
    }
    for &v in fset {
        let covered = match h.preimage(v)? {
            Some(p) => h.eval(&p)? == Some(v),
            None => false,
        };
        if !covered {
            return Err(fail(format!("{v} ∈ F is not in ran(h)")));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adf::injection::NatInjection;

    fn setup() -> (CertSet, CertSet, NatInjection) {
        let a = CertSet::progression(0, 2);
        let b = CertSet::naturals();
        let g = NatInjection::affine(b.clone(), 2, 0).unwrap();
        (a, b, g)
    }

    #[test]
    fn covers_one() {
        let (a, b, g) = setup();
        let c = CertSet::naturals();
        let f = g.restrict(a.clone()).unwrap();
        let fset = BTreeSet::from([1]);
        let out = nice_ext(&a, &b, &c, &f, &g, &fset).unwrap();
        verify_nice_ext(&a, &c, &f, &g, &fset, &out).unwrap();
        assert_eq!(out.d3, vec![1]);
        assert_eq!(out.h.eval(&1).unwrap(), Some(1));
    }

    #[test]
    fn empty_f_set_gives_g() {
        let (a, b, g) = setup();
        let c = CertSet::naturals();
        let f = g.restrict(a.clone()).unwrap();
        let out = nice_ext(&a, &b, &c, &f, &g, &BTreeSet::new()).unwrap();
        assert!(out.exceptions.is_empty());
        assert_eq!(out.h.differences(&g).unwrap(), Some(BTreeSet::new()));
    }

    #[test]
    fn hypothesis_five() {
        let (a, b, g) = setup();
        let c = CertSet::progression(0, 2);
        let f = g.restrict(a.clone()).unwrap();
        let err = nice_ext(&a, &b, &c, &f, &g, &BTreeSet::new()).unwrap_err();
        assert_eq!(err.to_string(), "hypothesis (5) violated: C ∖ ran(g) is finite");
    }
}
