use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// One factor of a pregroup type: a base name with an adjoint winding.
/// `z = -1` is the left adjoint `b^l`, `z = 1` the right adjoint `b^r`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "(String, i32)", into = "(String, i32)")]
pub struct Factor {
    pub base: String,
    pub z: i32,
}

impl Factor {
    pub fn new(base: impl Into<String>, z: i32) -> Factor {
        Factor { base: base.into(), z }
    }

    pub fn left_adjoint(&self) -> Factor {
        Factor::new(self.base.clone(), self.z - 1)
    }

    pub fn right_adjoint(&self) -> Factor {
        Factor::new(self.base.clone(), self.z + 1)
    }

    /// `self · other ≤ 1` in the free pregroup: `a^l a` or `a a^r`.
    pub fn contracts_with(&self, right: &Factor) -> bool {
        self.base == right.base && right.z == self.z + 1
    }
}

impl From<(String, i32)> for Factor {
    fn from((base, z): (String, i32)) -> Factor {
        Factor { base, z }
    }
}

impl From<Factor> for (String, i32) {
    fn from(f: Factor) -> (String, i32) {
        (f.base, f.z)
    }
}

impl fmt::Display for Factor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.base)?;
        let suffix = if self.z < 0 { ".l" } else { ".r" };
        for _ in 0..self.z.unsigned_abs() {
            f.write_str(suffix)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// An object of the diagram category: a flat list of factors. The empty
/// list is the monoidal unit `I`, so unitors and associators are strict.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PregroupType(pub Vec<Factor>);

impl PregroupType {
    pub fn unit() -> PregroupType {
        PregroupType(Vec::new())
    }

    pub fn base(name: impl Into<String>) -> PregroupType {
        PregroupType(vec![Factor::new(name, 0)])
    }

    pub fn from_factors(factors: impl IntoIterator<Item = Factor>) -> PregroupType {
        PregroupType(factors.into_iter().collect())
    }

    pub fn factors(&self) -> &[Factor] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn tensor(&self, other: &PregroupType) -> PregroupType {
        let mut v = self.0.clone();
        v.extend(other.0.iter().cloned());
        PregroupType(v)
    }

    pub fn slice(&self, start: usize, end: usize) -> PregroupType {
        PregroupType(self.0[start..end].to_vec())
    }

    pub fn left_adjoint(&self) -> PregroupType {
        PregroupType(self.0.iter().rev().map(Factor::left_adjoint).collect())
    }

    pub fn right_adjoint(&self) -> PregroupType {
        PregroupType(self.0.iter().rev().map(Factor::right_adjoint).collect())
    }

    pub fn adjoint(&self, side: Side) -> PregroupType {
        match side {
            Side::Left => self.left_adjoint(),
            Side::Right => self.right_adjoint(),
        }
    }

    /// Applies `|z|` adjoints: right ones for positive `z`, left for negative.
    pub fn wind(&self, z: i32) -> PregroupType {
        let side = if z < 0 { Side::Left } else { Side::Right };
        (0..z.unsigned_abs()).fold(self.clone(), |t, _| t.adjoint(side))
    }

    /// `times` copies of the factor `(base, z)`.
    pub fn repeat(base: &str, z: i32, times: usize) -> PregroupType {
        PregroupType(vec![Factor::new(base, z); times])
    }
}

impl fmt::Display for PregroupType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("I");
        }
        for (i, factor) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("@")?;
            }
            write!(f, "{factor}")?;
        }
        Ok(())
    }
}

/// Parses the `Display` form, e.g. `"s@n.l@n.l"` or `"I"`.
impl FromStr for PregroupType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.is_empty() || s == "I" {
            return Ok(PregroupType::unit());
        }
        s.split('@')
            .map(|part| {
                let mut pieces = part.trim().split('.');
                let base = pieces
                    .next()
                    .filter(|b| !b.is_empty())
                    .ok_or_else(|| format!("empty factor in {s:?}"))?;
                let mut z = 0;
                for p in pieces {
                    match p {
                        "l" => z -= 1,
                        "r" => z += 1,
                        other => return Err(format!("bad adjoint marker {other:?} in {s:?}")),
                    }
                }
                Ok(Factor::new(base, z))
            })
            .collect::<Result<Vec<_>, _>>()
            .map(PregroupType)
    }
}

/// A generator morphism. Its identity is the whole `(name, dom, cod)` triple.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DiagramBox {
    pub name: String,
    pub dom: PregroupType,
    pub cod: PregroupType,
}

pub const CUP_PREFIX: &str = "cup_";
pub const CAP_PREFIX: &str = "cap_";

impl DiagramBox {
    pub fn new(name: impl Into<String>, dom: PregroupType, cod: PregroupType) -> DiagramBox {
        let name = name.into();
        assert!(!name.is_empty(), "box names must be non-empty");
        DiagramBox { name, dom, cod }
    }

    /// Word state `I -> ty`.
    pub fn word(name: impl Into<String>, ty: PregroupType) -> DiagramBox {
        DiagramBox::new(name, PregroupType::unit(), ty)
    }

    /// Cup contracting `left` with `right`, which must be adjoint
    /// (`right.z == left.z + 1`).
    pub fn cup(left: &Factor, right: &Factor) -> DiagramBox {
        debug_assert!(left.contracts_with(right));
        DiagramBox::new(
            format!("{CUP_PREFIX}{}", left.base),
            PregroupType(vec![left.clone(), right.clone()]),
            PregroupType::unit(),
        )
    }

    /// Cap creating the pair `left right` with `left.z == right.z + 1`.
    pub fn cap(left: &Factor, right: &Factor) -> DiagramBox {
        debug_assert!(right.contracts_with(left));
        DiagramBox::new(
            format!("{CAP_PREFIX}{}", left.base),
            PregroupType::unit(),
            PregroupType(vec![left.clone(), right.clone()]),
        )
    }

    pub fn is_cup(&self) -> bool {
        self.name.starts_with(CUP_PREFIX) && self.cod.is_empty() && self.dom.len() == 2 && self.dom.0[0].contracts_with(&self.dom.0[1])
    }

    pub fn is_cap(&self) -> bool {
        self.name.starts_with(CAP_PREFIX) && self.dom.is_empty() && self.cod.len() == 2 && self.cod.0[1].contracts_with(&self.cod.0[0])
    }

    pub fn dagger(&self) -> DiagramBox {
        DiagramBox::new(self.name.clone(), self.cod.clone(), self.dom.clone())
    }
}

impl fmt::Display for DiagramBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {} -> {}", self.name, self.dom, self.cod)
    }
}
