//! The poset of finite block-diagonal approximations `(n, M, a)` and the
//! generic run that assembles a block-diagonal matrix carrying one family of
//! tail vectors onto another.

mod amalgamate;
mod condition;
mod families;
mod run;

pub use amalgamate::{amalgamate, dense_hit_d, dense_hit_e, Amalgamation, AmalgamationReport};
pub use condition::{cond_leq, validate_condition, Condition, LeqWitness, Violation};
pub use families::{indicator, PairedFamilies};
pub use run::{default_schedule, run_generic, verify_run, Check, GenericRun, RunStep, StepFailure, Target, TailMode, VerifyReport};

use serde::{Deserialize, Serialize};

use crate::geom::{ExtensionConfig, GeomError};
use crate::linalg::LinalgError;
use crate::quotient::{QuotientConfig, QuotientError};
use crate::rational::Rational;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ForcingError {
    #[error("invalid input: {0}")]
    Input(String),
    #[error("invalid condition: {0}")]
    Invalid(String),
    #[error("no admissible n_r in ({from}, {cap}]: {reason}")]
    SearchExhausted { from: usize, cap: usize, reason: String },
    #[error("norm budget exceeded: {what} = {measured} > {budget}")]
    NormBudget { what: String, measured: Rational, budget: Rational },
    #[error("verification failed: {0}")]
    Verification(String),
    #[error(transparent)]
    Quotient(#[from] QuotientError),
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// `ρ`, `c₁`, `c₂`, `δ` and the resource caps shared by every forcing operation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForcingConfig {
    pub rho: Rational,
    pub c1: Rational,
    pub c2: Rational,
    pub delta: Rational,
    pub vertex_cap: usize,
    pub lcm_cap: usize,
    /// Horizon used when tail periods exceed `lcm_cap`.
    pub quotient_horizon: usize,
    /// Largest `n_r` tried by the amalgamation search.
    pub max_cut: usize,
}

impl Default for ForcingConfig {
    fn default() -> Self {
        ForcingConfig {
            rho: Rational::from_int(4),
            c1: Rational::one(),
            c2: Rational::from_int(64),
            delta: Rational::new(1, 100),
            vertex_cap: 8,
            lcm_cap: 4096,
            quotient_horizon: 512,
            max_cut: 8192,
        }
    }
}

impl ForcingConfig {
    pub fn quotient(&self) -> QuotientConfig {
        QuotientConfig { lcm_cap: self.lcm_cap, horizon: self.quotient_horizon, vertex_cap: self.vertex_cap }
    }

    pub fn extension(&self) -> ExtensionConfig {
        ExtensionConfig {
            rho: self.rho.clone(),
            c1: self.c1.clone(),
            c2: self.c2.clone(),
            delta: self.delta.clone(),
            vertex_cap: self.vertex_cap,
        }
    }
}

/// Section-norm and `R⁻¹` bound of the poset.
pub(crate) fn two() -> Rational {
    Rational::from_int(2)
}
