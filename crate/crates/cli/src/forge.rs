use std::path::Path;

use quotforge::adf::Family;
use quotforge::forcing::{default_schedule, run_generic, verify_run, GenericRun, PairedFamilies};
use serde_json::{json, Value};

use crate::{from_payload, read_payload, to_value, CliError, Report, RunConfig};

/// Paired families from a JSON file: a forge report, `{"families": …}` or a bare
/// `{"f", "g", "rho"}` document.
pub fn load_families(path: &Path) -> Result<PairedFamilies, CliError> {
    let v = match read_payload(path)? {
        Value::Object(mut m) if m.contains_key("families") => m.remove("families").unwrap_or(Value::Null),
        other => other,
    };
    let fam: PairedFamilies = from_payload(path, v)?;
    Ok(fam)
}

/// Indicator families of two almost disjoint families, matched index by index.
pub fn families_from_sets(cfg: &RunConfig, from: &Family, to: &Family) -> Result<PairedFamilies, CliError> {
    if from.len() != to.len() {
        return Err(CliError::Usage(format!("families of sizes {} and {}", from.len(), to.len())));
    }
    Ok(PairedFamilies::from_sets(&from.members, &to.members, cfg.rho.clone(), cfg.lcm_cap)?)
}

/// Generic run through the configured schedule, then its verification.
pub fn forge_matrix(cfg: &RunConfig, fam: &PairedFamilies) -> Result<Report, CliError> {
    let schedule = cfg.schedule.clone().unwrap_or_else(|| default_schedule(fam.len(), cfg.horizon));
    let run = run_generic(fam, &schedule, cfg.horizon, &cfg.forcing())?;
    let report = verify_run(&run, fam);
    let result = json!({ "families": to_value(fam), "run": to_value(&run), "verification": to_value(&report) });
    Ok(Report::new("forge-matrix", cfg, result, report.failures))
}

/// The run inside a forge-matrix report, or a bare run document, together with
/// the families embedded next to it.
pub fn load_run(path: &Path) -> Result<(GenericRun, Option<PairedFamilies>), CliError> {
    match read_payload(path)? {
        Value::Object(mut m) if m.contains_key("run") => {
            let run = from_payload(path, m.remove("run").unwrap_or(Value::Null))?;
            let fam = match m.remove("families") {
                Some(f) => Some(from_payload(path, f)?),
                None => None,
            };
            Ok((run, fam))
        }
        other => Ok((from_payload(path, other)?, None)),
    }
}

pub fn verify(cfg: &RunConfig, run: &GenericRun, fam: &PairedFamilies) -> Report {
    let report = verify_run(run, fam);
    Report::new("verify-run", cfg, json!({ "verification": to_value(&report) }), report.failures)
}
