//! IQP-style compilation of capless pregroup diagrams into parametrized
//! circuits over a shared symbol space.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diagram::{Diagram, DiagramBox, PregroupType};
use crate::grammar::pregroup::{NOUN, SENTENCE};

mod circuit;
mod stats;

pub use circuit::{Angle, Gate, GateKind, ParametrizedCircuit};
pub use stats::{circuit_stats, collect_symbols, write_stats_csv, Checkpoint, CircuitStats, ParamSpace};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnsatzError {
    #[error("diagram still contains a cap ({0})")]
    NotCapless(String),
    #[error("diagram codomain {found} is not the sentence type")]
    Arity { found: String },
    #[error("unsupported wire type {0}")]
    UnsupportedType(String),
    #[error("invalid ansatz configuration: {0}")]
    Config(String),
    #[error("unknown gate kind {0:?}")]
    UnknownGate(String),
    #[error("invalid circuit: {0}")]
    InvalidCircuit(String),
    #[error("circuit format error at {0}")]
    Format(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnsatzConfig {
    pub qubits_for_n: usize,
    pub qubits_for_s: usize,
    pub layers: usize,
    pub params_per_single_wire_box: usize,
}

impl Default for AnsatzConfig {
    fn default() -> Self {
        AnsatzConfig {
            qubits_for_n: 1,
            qubits_for_s: 1,
            layers: 1,
            params_per_single_wire_box: 3,
        }
    }
}

impl AnsatzConfig {
    pub fn with_qs(qs: usize) -> Self {
        AnsatzConfig {
            qubits_for_s: qs,
            ..Self::default()
        }
    }

    pub fn n_classes(&self) -> usize {
        1 << self.qubits_for_s
    }

    pub fn validate(&self) -> Result<(), AnsatzError> {
        if self.qubits_for_n != 1 {
            return Err(AnsatzError::Config(format!("qubits_for_n must be 1, got {}", self.qubits_for_n)));
        }
        if !(1..=8).contains(&self.qubits_for_s) {
            return Err(AnsatzError::Config(format!(
                "qubits_for_s must be in 1..=8, got {}",
                self.qubits_for_s
            )));
        }
        if self.layers == 0 || self.params_per_single_wire_box == 0 {
            return Err(AnsatzError::Config("layers and params_per_single_wire_box must be positive".into()));
        }
        Ok(())
    }

    fn width(&self, ty: &PregroupType) -> Result<usize, AnsatzError> {
        ty.factors()
            .iter()
            .map(|f| match f.base.as_str() {
                NOUN => Ok(self.qubits_for_n),
                SENTENCE => Ok(self.qubits_for_s),
                _ => Err(AnsatzError::UnsupportedType(f.to_string())),
            })
            .sum()
    }
}

/// Symbol of the `k`-th parameter of a box. Boxes equal as generators share
/// their symbols across every circuit.
pub fn symbol_name(op: &DiagramBox, k: usize) -> String {
    format!("{}__{}__{}__{}", op.name, op.dom, op.cod, k)
}

struct Builder {
    n_qubits: usize,
    gates: Vec<Gate>,
    postselect: BTreeMap<usize, u8>,
}

impl Builder {
    fn fresh(&mut self, count: usize) -> Vec<usize> {
        let out = (self.n_qubits..self.n_qubits + count).collect();
        self.n_qubits += count;
        out
    }

    fn box_gates(&mut self, op: &DiagramBox, qubits: &[usize], cfg: &AnsatzConfig) {
        let sym = |k| Angle::Sym(symbol_name(op, k));
        match qubits {
            [] => {}
            [q] => {
                for k in 0..cfg.params_per_single_wire_box {
                    let kind = if k % 2 == 0 { GateKind::RX } else { GateKind::RZ };
                    self.gates.push(Gate::rotation(kind, *q, sym(k)));
                }
            }
            _ => {
                let mut k = 0;
                for _ in 0..cfg.layers {
                    self.gates.extend(qubits.iter().map(|&q| Gate::h(q)));
                    for pair in qubits.windows(2) {
                        self.gates.push(Gate::crz(pair[0], pair[1], sym(k)));
                        k += 1;
                    }
                }
            }
        }
    }

    /// Bell effect `<00| + <11|` on `(a, b)`: a CNOT from H-CRZ(pi)-H with
    /// the control phase undone, then H on `a`, then post-selection.
    fn bell_effect(&mut self, a: usize, b: usize) {
        self.gates.push(Gate::h(b));
        self.gates.push(Gate::crz(a, b, Angle::Const(PI)));
        self.gates.push(Gate::rotation(GateKind::RZ, a, Angle::Const(PI / 2.0)));
        self.gates.push(Gate::h(b));
        self.gates.push(Gate::h(a));
        self.postselect.insert(a, 0);
        self.postselect.insert(b, 0);
    }
}

/// Compiles a capless diagram `I -> s` to a circuit.
///
/// Each box acts on `max(|dom|, |cod|)` qubits in wire units: its input
/// qubits plus fresh ones when it widens, with surplus inputs post-selected
/// when it narrows. One-qubit boxes get an RX/RZ chain, wider boxes get
/// `layers` rounds of Hadamards and a CRZ ladder.
pub fn build_circuit(d: &Diagram, cfg: &AnsatzConfig) -> Result<ParametrizedCircuit, AnsatzError> {
    cfg.validate()?;
    if let Some(cap) = d.boxes().find(|b| b.is_cap()) {
        return Err(AnsatzError::NotCapless(cap.to_string()));
    }
    if d.cod() != &PregroupType::base(SENTENCE) {
        return Err(AnsatzError::Arity {
            found: d.cod().to_string(),
        });
    }
    let mut b = Builder {
        n_qubits: 0,
        gates: Vec::new(),
        postselect: BTreeMap::new(),
    };
    // qubits of each running wire
    let mut running: Vec<Vec<usize>> = Vec::new();
    for f in d.dom().factors() {
        let w = cfg.width(&PregroupType(vec![f.clone()]))?;
        running.push(b.fresh(w));
    }
    for layer in d.layers() {
        let op = &layer.op;
        let at = layer.offset;
        let k = op.dom.len();
        if op.is_cup() {
            let left = &running[at];
            let right = &running[at + 1];
            let pairs: Vec<(usize, usize)> = left.iter().copied().zip(right.iter().rev().copied()).collect();
            for (a, q) in pairs {
                b.bell_effect(a, q);
            }
            running.drain(at..at + 2);
            continue;
        }
        let mut qubits: Vec<usize> = running[at..at + k].iter().flatten().copied().collect();
        let widths: Vec<usize> = op
            .cod
            .factors()
            .iter()
            .map(|f| cfg.width(&PregroupType(vec![f.clone()])))
            .collect::<Result<_, _>>()?;
        let out: usize = widths.iter().sum();
        if out > qubits.len() {
            let extra = b.fresh(out - qubits.len());
            qubits.extend(extra);
        }
        b.box_gates(op, &qubits, cfg);
        for &q in &qubits[out..] {
            b.postselect.insert(q, 0);
        }
        let mut it = qubits[..out].iter().copied();
        let wires: Vec<Vec<usize>> = widths.iter().map(|&w| it.by_ref().take(w).collect()).collect();
        running.splice(at..at + k, wires);
    }
    let output_qubits: Vec<usize> = running.into_iter().flatten().collect();
    let c = ParametrizedCircuit {
        n_qubits: b.n_qubits,
        gates: b.gates,
        postselect: b.postselect,
        output_qubits,
    };
    c.validate()?;
    Ok(c)
}
