use std::collections::BTreeSet;
use std::path::Path;

use quotforge::adf::{
    chain_build, homomorphism_laws, iso_chain, mad_census, make_family, separation_find, separator_from_embedding, CertSet,
    Family, FamilyGenerator, Ordinal,
};
use serde_json::{json, Value};

use crate::{from_payload, read_payload, to_value, CliError, Report, RunConfig};

/// A family from a build-adf report, or a bare family document.
pub fn load_family(path: &Path) -> Result<Family, CliError> {
    let v = read_payload(path)?;
    let v = match v {
        Value::Object(mut m) if m.contains_key("family") => m.remove("family").unwrap_or(Value::Null),
        other => other,
    };
    from_payload(path, v)
}

pub fn parse_indices(s: &str) -> Result<BTreeSet<Ordinal>, CliError> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse().map_err(|e| CliError::Usage(format!("index list: {e}"))))
        .collect()
}

pub fn build_adf(cfg: &RunConfig, gen: &FamilyGenerator) -> Result<Report, CliError> {
    let family = make_family(gen)?;
    let failures = usize::from(family.luzin.as_ref().is_some_and(|l| !l.holds));
    Ok(Report::new("build-adf", cfg, json!({ "generator": to_value(gen), "family": to_value(&family) }), failures))
}

fn members(family: &Family, idx: &BTreeSet<Ordinal>) -> Result<Vec<CertSet>, CliError> {
    idx.iter().map(|&o| family.member(o).map_err(CliError::from)).collect()
}

/// Separate the members listed in `inside` from those in `outside` (every
/// other materialized member when absent), then recheck the certificates.
pub fn check_separation(
    cfg: &RunConfig,
    family: &Family,
    inside: &BTreeSet<Ordinal>,
    outside: Option<&BTreeSet<Ordinal>>,
) -> Result<Report, CliError> {
    let rest: BTreeSet<Ordinal> = family.indices.iter().copied().filter(|o| !inside.contains(o)).collect();
    let outside = outside.unwrap_or(&rest);
    if let Some(o) = inside.intersection(outside).next() {
        return Err(CliError::Usage(format!("index {o} is on both sides")));
    }
    let (bs, cs) = (members(family, inside)?, members(family, outside)?);
    let sep = match separation_find(&bs, &cs) {
        Ok(s) => s,
        Err(e @ quotforge::adf::AdfError::NotFound(_)) => {
            let result = json!({ "inside": to_value(inside), "outside": to_value(outside), "separation": null, "reason": e.to_string() });
            return Ok(Report::new("check-separation", cfg, result, 1));
        }
        Err(e) => return Err(e.into()),
    };
    let mut problems = Vec::new();
    for (k, a) in bs.iter().enumerate() {
        if a.minus(&sep.v)?.elements().as_ref() != Some(&sep.b_exceptions[k]) {
            problems.push(format!("inside member {k}: A minus V differs from its certificate"));
        }
    }
    for (k, a) in cs.iter().enumerate() {
        if a.intersect(&sep.v)?.elements().as_ref() != Some(&sep.c_exceptions[k]) {
            problems.push(format!("outside member {k}: A meet V differs from its certificate"));
        }
    }
    let failures = problems.len();
    let result = json!({
        "inside": to_value(inside),
        "outside": to_value(outside),
        "separation": to_value(&sep),
        "problems": problems,
    });
    Ok(Report::new("check-separation", cfg, result, failures))
}

/// Coherent family up to the configured cap, with the derived-set, coherence,
/// homomorphism-law and separator certificates.
pub fn build_coherent(
    cfg: &RunConfig,
    family: &Family,
    laws_on: &BTreeSet<Ordinal>,
    separate: &BTreeSet<Ordinal>,
) -> Result<Report, CliError> {
    let cap = cfg.cap()?;
    if laws_on.len() > 8 {
        return Err(CliError::Usage("the law check enumerates subset pairs of at most 8 indices".into()));
    }
    let chain = chain_build(family)?;
    let ic = iso_chain(family, &chain, cap)?;
    let cf = &ic.family;
    let mut problems: Vec<String> = Vec::new();

    // derived sets are pairwise almost disjoint, with the exact meets
    let mut meets = Vec::new();
    for (i, x) in ic.derived.iter().enumerate() {
        for y in &ic.derived[i + 1..] {
            match x.set.intersect(&y.set)?.elements() {
                Some(pts) => meets.push(json!({ "pair": [to_value(&x.index), to_value(&y.index)], "points": pts })),
                None => problems.push(format!("derived sets {} and {} meet infinitely", x.index, y.index)),
            }
        }
    }

    let idx: Vec<Ordinal> = laws_on.iter().copied().filter(|o| *o < cap).collect();
    let subsets: Vec<BTreeSet<Ordinal>> =
        (0u32..1 << idx.len()).map(|m| idx.iter().enumerate().filter(|(k, _)| m >> k & 1 == 1).map(|(_, &o)| o).collect()).collect();
    let mut law_pairs = 0usize;
    let mut max_exceptions = 0usize;
    for x in &subsets {
        for y in &subsets {
            match homomorphism_laws(cf, x, y) {
                Ok(certs) => {
                    law_pairs += 1;
                    max_exceptions = max_exceptions.max(certs.iter().map(|c| c.exceptions.len()).max().unwrap_or(0));
                }
                Err(e) => problems.push(format!("laws on {x:?}, {y:?}: {e}")),
            }
        }
    }

    let below: BTreeSet<Ordinal> = family.indices.iter().copied().filter(|o| *o < cap).collect();
    let other: BTreeSet<Ordinal> = below.difference(separate).copied().collect();
    let mut separators = Vec::new();
    for side in [separate, &other] {
        match separator_from_embedding(cf, side) {
            Ok(s) => separators.push(json!({ "indices": to_value(side), "certificate": to_value(&s) })),
            Err(e) => problems.push(format!("separator for {side:?}: {e}")),
        }
    }

    let failures = problems.len();
    let result = json!({
        "cap": cap.to_string(),
        "checkpoints": ic.checkpoints().iter().map(|o| o.to_string()).collect::<Vec<_>>(),
        "derived": to_value(&ic.derived),
        "coherence": to_value(&ic.coherence),
        "derived_meets": meets,
        "laws": { "indices": to_value(&idx), "subset_pairs": law_pairs, "max_exceptions": max_exceptions },
        "separators": separators,
        "problems": problems,
    });
    Ok(Report::new("build-coherent", cfg, result, failures))
}

pub fn census(cfg: &RunConfig, family: &Family, x: &CertSet) -> Result<Report, CliError> {
    let c = mad_census(family, x)?;
    Ok(Report::new("mad-census", cfg, json!({ "set": to_value(x), "census": to_value(&c) }), 0))
}
