use rayon::prelude::*;

use crate::ansatz::{Angle, ParamSpace, ParametrizedCircuit};
use crate::sim::{distribution_of, StateVector};

use super::TrainError;

/// Probability floor mixed into every model distribution.
pub const SMOOTHING: f64 = 1e-9;

/// A circuit whose symbols are resolved to indices of a parameter vector.
#[derive(Debug, Clone)]
pub struct CompiledCircuit {
    circuit: ParametrizedCircuit,
    slots: Vec<Option<usize>>,
}

impl CompiledCircuit {
    /// `None` when some symbol of the circuit is not in `space`.
    pub fn new(circuit: &ParametrizedCircuit, space: &ParamSpace) -> Option<CompiledCircuit> {
        let mut slots = Vec::with_capacity(circuit.gates.len());
        for g in &circuit.gates {
            slots.push(match &g.angle {
                Some(Angle::Sym(s)) => Some(space.index_of(s)?),
                _ => None,
            });
        }
        Some(CompiledCircuit {
            circuit: circuit.clone(),
            slots,
        })
    }

    pub fn n_classes(&self) -> usize {
        1 << self.circuit.output_qubits.len()
    }

    /// Output distribution; the uniform one when post-selection fails.
    pub fn distribution(&self, theta: &[f64]) -> Vec<f64> {
        let mut psi = StateVector::zero(self.circuit.n_qubits);
        for (g, slot) in self.circuit.gates.iter().zip(&self.slots) {
            let angle = match (slot, &g.angle) {
                (Some(i), _) => theta[*i],
                (None, Some(Angle::Const(v))) => *v,
                _ => 0.0,
            };
            psi.apply(g.kind, &g.qubits, angle);
        }
        let k = self.n_classes();
        distribution_of(&self.circuit, &psi).unwrap_or_else(|_| vec![1.0 / k as f64; k])
    }
}

#[derive(Debug, Clone)]
pub struct Example {
    pub circuit: CompiledCircuit,
    pub label: usize,
}

pub fn smoothed(p: f64, n_classes: usize) -> f64 {
    (p + SMOOTHING) / (1.0 + n_classes as f64 * SMOOTHING)
}

/// Mean smoothed cross-entropy. Per-circuit terms are computed in parallel
/// and summed in index order.
pub fn loss(theta: &[f64], batch: &[Example]) -> Result<f64, TrainError> {
    if batch.is_empty() {
        return Err(TrainError::EmptyBatch);
    }
    let terms: Vec<f64> = batch
        .par_iter()
        .map(|ex| {
            let d = ex.circuit.distribution(theta);
            -smoothed(d[ex.label], d.len()).ln()
        })
        .collect();
    Ok(terms.iter().sum::<f64>() / batch.len() as f64)
}

/// Index of the largest entry; the lowest index wins ties.
pub fn argmax(p: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in p.iter().enumerate() {
        if v > p[best] {
            best = i;
        }
    }
    best
}

/// Percentage of circuits whose most likely class is their label.
pub fn accuracy(theta: &[f64], batch: &[Example]) -> f64 {
    if batch.is_empty() {
        return f64::NAN;
    }
    let hits: Vec<bool> = batch
        .par_iter()
        .map(|ex| argmax(&ex.circuit.distribution(theta)) == ex.label)
        .collect();
    100.0 * hits.iter().filter(|&&h| h).count() as f64 / batch.len() as f64
}
