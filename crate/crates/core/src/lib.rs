//! Exact ℓ∞ operator geometry, certified almost disjoint families and a
//! block-diagonal matrix forging engine for families in ℓ∞/c₀.

pub mod adf;
pub mod forcing;
pub mod geom;
pub mod linalg;
pub mod lp;
pub mod quotient;
pub mod rational;
pub mod vertex;

pub use linalg::{BlockLayout, RMatrix, WindowVector};
pub use rational::Rational;
