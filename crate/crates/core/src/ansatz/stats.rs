use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{GateKind, ParametrizedCircuit};

/// Symbols in lexicographic order with their vector indices.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParamSpace {
    names: Vec<String>,
    index: BTreeMap<String, usize>,
}

impl ParamSpace {
    pub fn from_names<I, S>(names: I) -> ParamSpace
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let set: BTreeSet<String> = names.into_iter().map(Into::into).collect();
        let names: Vec<String> = set.into_iter().collect();
        let index = names.iter().enumerate().map(|(i, n)| (n.clone(), i)).collect();
        ParamSpace { names, index }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn contains(&self, name: &str) -> bool {
        self.index.contains_key(name)
    }
}

pub fn collect_symbols<'a>(circuits: impl IntoIterator<Item = &'a ParametrizedCircuit>) -> ParamSpace {
    ParamSpace::from_names(circuits.into_iter().flat_map(|c| c.symbols()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CircuitStats {
    pub circuits: usize,
    pub n_params: usize,
    pub avg_depth: f64,
    pub avg_qubits: f64,
    pub gate_counts: BTreeMap<GateKind, usize>,
}

/// Longest chain of gates sharing qubits.
pub fn depth(c: &ParametrizedCircuit) -> usize {
    let mut level = vec![0usize; c.n_qubits];
    for g in &c.gates {
        let l = g.qubits.iter().map(|&q| level[q]).max().unwrap_or(0) + 1;
        for &q in &g.qubits {
            level[q] = l;
        }
    }
    level.into_iter().max().unwrap_or(0)
}

pub fn circuit_stats(circuits: &[ParametrizedCircuit]) -> CircuitStats {
    let mut gate_counts: BTreeMap<GateKind, usize> = GateKind::ALL.iter().map(|&k| (k, 0)).collect();
    for g in circuits.iter().flat_map(|c| &c.gates) {
        *gate_counts.entry(g.kind).or_default() += 1;
    }
    let n = circuits.len();
    let mean = |xs: Vec<usize>| if n == 0 { 0.0 } else { xs.iter().sum::<usize>() as f64 / n as f64 };
    CircuitStats {
        circuits: n,
        n_params: collect_symbols(circuits).len(),
        avg_depth: mean(circuits.iter().map(depth).collect()),
        avg_qubits: mean(circuits.iter().map(|c| c.n_qubits).collect()),
        gate_counts,
    }
}

pub fn write_stats_csv<W: Write>(stats: &CircuitStats, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["circuits", "params", "avg_depth", "avg_qubits", "H", "RX", "RZ", "CRZ"])?;
    let count = |k| stats.gate_counts.get(&k).copied().unwrap_or(0).to_string();
    w.write_record([
        stats.circuits.to_string(),
        stats.n_params.to_string(),
        format!("{:.3}", stats.avg_depth),
        format!("{:.3}", stats.avg_qubits),
        count(GateKind::H),
        count(GateKind::RX),
        count(GateKind::RZ),
        count(GateKind::CRZ),
    ])?;
    w.flush()?;
    Ok(())
}

/// Parameter values in radians by symbol name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub symbols: BTreeMap<String, f64>,
    pub iteration: u64,
}

impl Checkpoint {
    pub fn from_values(space: &ParamSpace, values: &[f64], iteration: u64) -> Checkpoint {
        Checkpoint {
            symbols: space.names().iter().cloned().zip(values.iter().copied()).collect(),
            iteration,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("checkpoint JSON is always serializable")
    }
}
