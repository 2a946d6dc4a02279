use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::AnsatzError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GateKind {
    H,
    RX,
    RZ,
    CRZ,
}

impl GateKind {
    pub const ALL: [GateKind; 4] = [GateKind::H, GateKind::RX, GateKind::RZ, GateKind::CRZ];

    pub fn arity(self) -> usize {
        match self {
            GateKind::CRZ => 2,
            _ => 1,
        }
    }

    pub fn is_parametrized(self) -> bool {
        self != GateKind::H
    }

    pub fn as_str(self) -> &'static str {
        match self {
            GateKind::H => "H",
            GateKind::RX => "RX",
            GateKind::RZ => "RZ",
            GateKind::CRZ => "CRZ",
        }
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GateKind {
    type Err = AnsatzError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        GateKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| AnsatzError::UnknownGate(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Angle {
    Sym(String),
    Const(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Gate {
    pub kind: GateKind,
    pub qubits: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angle: Option<Angle>,
}

impl Gate {
    pub fn h(q: usize) -> Gate {
        Gate {
            kind: GateKind::H,
            qubits: vec![q],
            angle: None,
        }
    }

    pub fn rotation(kind: GateKind, q: usize, angle: Angle) -> Gate {
        Gate {
            kind,
            qubits: vec![q],
            angle: Some(angle),
        }
    }

    pub fn crz(control: usize, target: usize, angle: Angle) -> Gate {
        Gate {
            kind: GateKind::CRZ,
            qubits: vec![control, target],
            angle: Some(angle),
        }
    }

    pub fn symbol(&self) -> Option<&str> {
        match &self.angle {
            Some(Angle::Sym(s)) => Some(s),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParametrizedCircuit {
    pub n_qubits: usize,
    pub gates: Vec<Gate>,
    /// Post-selected qubit -> required bit (always 0 here).
    pub postselect: BTreeMap<usize, u8>,
    pub output_qubits: Vec<usize>,
}

impl ParametrizedCircuit {
    pub fn symbols(&self) -> BTreeSet<&str> {
        self.gates.iter().filter_map(Gate::symbol).collect()
    }

    /// Checks the gate set, qubit ranges and the output/post-selection
    /// partition.
    pub fn validate(&self) -> Result<(), AnsatzError> {
        let bad = |m: String| Err(AnsatzError::InvalidCircuit(m));
        for (i, g) in self.gates.iter().enumerate() {
            if g.qubits.len() != g.kind.arity() {
                return bad(format!("gate {i} ({}) acts on {} qubits", g.kind, g.qubits.len()));
            }
            if let Some(q) = g.qubits.iter().find(|&&q| q >= self.n_qubits) {
                return bad(format!("gate {i} uses qubit {q} of {}", self.n_qubits));
            }
            if g.kind.arity() == 2 && g.qubits[0] == g.qubits[1] {
                return bad(format!("gate {i} uses qubit {} twice", g.qubits[0]));
            }
            if g.kind.is_parametrized() != g.angle.is_some() {
                return bad(format!("gate {i} ({}) has a wrong angle", g.kind));
            }
        }
        let outputs: BTreeSet<usize> = self.output_qubits.iter().copied().collect();
        if outputs.len() != self.output_qubits.len() {
            return bad("repeated output qubit".into());
        }
        for q in 0..self.n_qubits {
            match (outputs.contains(&q), self.postselect.get(&q)) {
                (true, Some(_)) => return bad(format!("qubit {q} is both output and post-selected")),
                (false, None) => return bad(format!("qubit {q} is neither output nor post-selected")),
                _ => {}
            }
        }
        if let Some((q, _)) = self.postselect.iter().find(|(&q, _)| q >= self.n_qubits) {
            return bad(format!("post-selected qubit {q} out of range"));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("circuit JSON is always serializable")
    }

    pub fn from_json(text: &str) -> Result<Self, AnsatzError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let c: ParametrizedCircuit =
            serde_path_to_error::deserialize(de).map_err(|e| AnsatzError::Format(format!("{}: {}", e.path(), e.inner())))?;
        c.validate()?;
        Ok(c)
    }
}
