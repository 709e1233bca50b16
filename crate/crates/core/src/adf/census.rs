//! Which members of a family meet a set infinitely, and whether the family
//! almost covers it.

use serde::{Deserialize, Serialize};

use super::certset::CertSet;
use super::family::Family;
use super::ordinal::Ordinal;
use super::AdfError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemberMeet {
    pub index: Ordinal,
    pub infinite: bool,
    /// `A ∩ X` when finite.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<u64>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Census {
    pub members: Vec<MemberMeet>,
    /// `X ∖ ⋃ family`.
    pub residual: CertSet,
    pub covered: bool,
    /// Members meeting `X` infinitely; they cover `X` up to a finite set when `covered`.
    pub cover: Vec<Ordinal>,
}

pub fn mad_census(family: &Family, x: &CertSet) -> Result<Census, AdfError> {
    let mut members = Vec::with_capacity(family.len());
    let mut residual = x.clone();
    for (&index, a) in family.indices.iter().zip(&family.members) {
        let meet = a.intersect(x)?;
        let points = meet.elements();
        members.push(MemberMeet { index, infinite: points.is_none(), points });
        residual = residual.minus(a)?;
    }
    let covered = residual.is_finite();
    let cover = members.iter().filter(|m| m.infinite).map(|m| m.index).collect();
    Ok(Census { members, residual, covered, cover })
}
