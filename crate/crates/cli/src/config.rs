use std::path::{Path, PathBuf};

use quotforge::adf::Ordinal;
use quotforge::forcing::{ForcingConfig, Target};
use quotforge::geom::ExtensionConfig;
use quotforge::Rational;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Environment variable naming the default config file.
pub const CONFIG_ENV: &str = "QF_CONFIG";

/// Every knob of a run. Embedded verbatim in each report.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub rho: Rational,
    pub c1: Rational,
    pub c2: Rational,
    pub delta: Rational,
    pub horizon: usize,
    /// Written like `w*2`, `w+3` or `ω·2`.
    pub ordinal_cap: String,
    pub vertex_cap: usize,
    pub lcm_cap: usize,
    pub quotient_horizon: usize,
    pub max_cut: usize,
    pub seed: u64,
    /// Dense sets hit by forge-matrix; the default schedule when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub schedule: Option<Vec<Target>>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let f = ForcingConfig::default();
        RunConfig {
            rho: f.rho,
            c1: f.c1,
            c2: f.c2,
            delta: f.delta,
            horizon: 512,
            ordinal_cap: "w*2".into(),
            vertex_cap: f.vertex_cap,
            lcm_cap: f.lcm_cap,
            quotient_horizon: f.quotient_horizon,
            max_cut: f.max_cut,
            seed: 0,
            schedule: None,
        }
    }
}

impl RunConfig {
    /// The file at `path`, else the one named by `QF_CONFIG`, else the defaults.
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let from_env = std::env::var_os(CONFIG_ENV).map(PathBuf::from);
        match path.map(Path::to_path_buf).or(from_env) {
            Some(p) => crate::read_json(&p),
            None => Ok(RunConfig::default()),
        }
    }

    pub fn forcing(&self) -> ForcingConfig {
        ForcingConfig {
            rho: self.rho.clone(),
            c1: self.c1.clone(),
            c2: self.c2.clone(),
            delta: self.delta.clone(),
            vertex_cap: self.vertex_cap,
            lcm_cap: self.lcm_cap,
            quotient_horizon: self.quotient_horizon,
            max_cut: self.max_cut,
        }
    }

    pub fn extension(&self) -> ExtensionConfig {
        self.forcing().extension()
    }

    pub fn cap(&self) -> Result<Ordinal, CliError> {
        self.ordinal_cap.parse().map_err(|e| CliError::Usage(format!("ordinal_cap: {e}")))
    }
}
