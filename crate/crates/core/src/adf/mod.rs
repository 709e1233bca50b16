//! Almost disjoint families with explicit finiteness certificates, coherent
//! families of injections and the Boolean monomorphism they induce.

pub mod census;
pub mod certset;
pub mod chain;
pub mod coherent;
pub mod family;
pub mod injection;
pub mod nice_ext;
pub mod ordinal;

pub use census::{mad_census, Census, MemberMeet};
pub use certset::{CertSet, Prog};
pub use chain::{chain_build, Chain, ChainCert};
pub use coherent::{
    alpha_of, boolean_mono, coherent_limit, coherent_successor, homomorphism_laws, iso_chain,
    separator_from_embedding, CoherenceCert, CoherentFamily, DerivedCert, IndexSet, IsoChain, LawCert, SeparatorCert,
};
pub use family::{
    almost_disjoint_check, make_family, separation_find, AdCheck, Family, FamilyGenerator, FamilyKind,
    Separation, Stratified,
};
pub use injection::{Affine, Domain, FiberInjection, FiberSource, Injection, LimitStage, NatInjection, OrdWindow, StepLog};
pub use nice_ext::{nice_ext, verify_nice_ext, NiceExt};
pub use ordinal::{Ordinal, Pos};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AdfError {
    #[error("arithmetic overflow in set representation")]
    Overflow,
    #[error("progression split into {pieces} pieces exceeds the cap")]
    SplitCap { pieces: u128 },
    #[error("ordinal {0} is outside the supported range")]
    UnsupportedOrdinal(String),
    #[error("parameter caps exceeded: {0}")]
    Caps(String),
    #[error("members {i} and {j} are not almost disjoint: common progression {witness:?}")]
    NotAd { i: usize, j: usize, witness: Prog },
    #[error("no separation found: {0}")]
    NotFound(String),
    #[error("hypothesis ({index}) violated: {detail}")]
    Hypothesis { index: u8, detail: String },
    #[error("chain property violated: {0}")]
    Chain(String),
    #[error("fiber {0} would be finite")]
    FiniteFiber(String),
    #[error("index beyond constructed stages: {0}")]
    BeyondStages(String),
    #[error("domain mismatch: {0}")]
    Domain(String),
    #[error("verification failed: {0}")]
    Verification(String),
}
