//! Ordinals below ω³ in Cantor normal form and positions inside `ω·α`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::AdfError;

/// `ω²·c2 + ω·c1 + c0`. Field order makes the derived ordering the ordinal one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(into = "[u64; 3]", from = "[u64; 3]")]
pub struct Ordinal {
    pub c2: u64,
    pub c1: u64,
    pub c0: u64,
}

impl From<Ordinal> for [u64; 3] {
    fn from(o: Ordinal) -> Self {
        [o.c2, o.c1, o.c0]
    }
}

impl From<[u64; 3]> for Ordinal {
    fn from(a: [u64; 3]) -> Self {
        Ordinal { c2: a[0], c1: a[1], c0: a[2] }
    }
}

impl Ordinal {
    pub const ZERO: Ordinal = Ordinal { c2: 0, c1: 0, c0: 0 };
    pub const OMEGA: Ordinal = Ordinal { c2: 0, c1: 1, c0: 0 };

    pub fn finite(n: u64) -> Self {
        Ordinal { c2: 0, c1: 0, c0: n }
    }

    /// `ω·a + b`.
    pub fn omega_times(a: u64, b: u64) -> Self {
        Ordinal { c2: 0, c1: a, c0: b }
    }

    pub fn succ(self) -> Self {
        Ordinal { c0: self.c0 + 1, ..self }
    }

    pub fn is_limit(self) -> bool {
        self.c0 == 0
    }

    pub fn is_zero(self) -> bool {
        self == Ordinal::ZERO
    }

    /// Predecessor of a successor ordinal.
    pub fn pred(self) -> Option<Self> {
        (self.c0 > 0).then(|| Ordinal { c0: self.c0 - 1, ..self })
    }

    /// `(λ, k)` with `self = λ + k` and `λ` a limit or zero.
    pub fn split(self) -> (Ordinal, u64) {
        (Ordinal { c0: 0, ..self }, self.c0)
    }

    pub fn plus_finite(self, k: u64) -> Self {
        Ordinal { c0: self.c0 + k, ..self }
    }

    /// Canonical fundamental sequence of a nonzero limit `ω·a` below `ω²`:
    /// `ξ_0 = 0`, `ξ_n = ω·(a−1) + n`.
    pub fn fundamental(self, n: u64) -> Result<Ordinal, AdfError> {
        if !self.is_limit() || self.is_zero() || self.c2 != 0 {
            return Err(AdfError::UnsupportedOrdinal(self.to_string()));
        }
        Ok(if n == 0 { Ordinal::ZERO } else { Ordinal::omega_times(self.c1 - 1, n) })
    }
}

impl fmt::Display for Ordinal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        match self.c2 {
            0 => {}
            1 => parts.push("ω²".to_string()),
            c => parts.push(format!("ω²·{c}")),
        }
        match self.c1 {
            0 => {}
            1 => parts.push("ω".to_string()),
            c => parts.push(format!("ω·{c}")),
        }
        if self.c0 > 0 || parts.is_empty() {
            parts.push(self.c0.to_string());
        }
        write!(f, "{}", parts.join("+"))
    }
}

impl FromStr for Ordinal {
    type Err = AdfError;

    /// Accepts sums of `n`, `w`, `w*n`, `w^2`, `w^2*n` (or with `ω`, `²`, `·`).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || AdfError::UnsupportedOrdinal(s.to_string());
        let norm = s.replace('ω', "w").replace('²', "^2").replace('·', "*").replace(' ', "");
        if norm.is_empty() {
            return Err(bad());
        }
        let mut o = Ordinal::ZERO;
        for term in norm.split('+') {
            let (head, coef) = match term.split_once('*') {
                Some((h, c)) => (h, c.parse::<u64>().map_err(|_| bad())?),
                None => (term, 1),
            };
            match head {
                "w^2" => o.c2 += coef,
                "w" => o.c1 += coef,
                _ if term.chars().all(|c| c.is_ascii_digit()) => o.c0 += term.parse::<u64>().map_err(|_| bad())?,
                _ => return Err(bad()),
            }
        }
        Ok(o)
    }
}

/// The position `ω·fiber + j` inside a window `ω·α` (requires `fiber < α`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Pos {
    pub fiber: Ordinal,
    pub j: u64,
}

impl Pos {
    pub fn new(fiber: Ordinal, j: u64) -> Self {
        Pos { fiber, j }
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.fiber, self.j)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_and_display() {
        let a: Ordinal = "w*2+3".parse().unwrap();
        assert_eq!(a, Ordinal::omega_times(2, 3));
        assert!(Ordinal::finite(100) < Ordinal::OMEGA);
        assert!(Ordinal::omega_times(1, 5) < Ordinal::omega_times(2, 0));
        assert_eq!(a.to_string(), "ω·2+3");
        assert_eq!("ω+1".parse::<Ordinal>().unwrap(), Ordinal::omega_times(1, 1));
        assert_eq!(Ordinal::ZERO.to_string(), "0");
    }

    #[test]
    fn fundamental_sequence() {
        let w2 = Ordinal::omega_times(2, 0);
        assert_eq!(w2.fundamental(0).unwrap(), Ordinal::ZERO);
        assert_eq!(w2.fundamental(3).unwrap(), Ordinal::omega_times(1, 3));
        assert!(Ordinal::finite(3).fundamental(1).is_err());
    }

    #[test]
    fn json_form() {
        let p = Pos::new(Ordinal::omega_times(1, 2), 7);
        assert_eq!(serde_json::to_string(&p).unwrap(), r#"{"fiber":[0,1,2],"j":7}"#);
    }
}
