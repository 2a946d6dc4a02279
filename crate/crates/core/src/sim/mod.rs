//! Statevector simulation with post-selection.
//!
//! Basis index bit `q` is the value of qubit `q` (little-endian), so for two
//! output qubits the outcomes are listed as 00, 10, 01, 11 by qubit.

use std::collections::{BTreeMap, HashMap};

use num_complex::Complex64;
use thiserror::Error;

use crate::ansatz::{Angle, GateKind, ParamSpace, ParametrizedCircuit};

#[cfg(any(test, feature = "oracle"))]
pub mod oracle;

/// Post-selection below this success probability is degenerate.
pub const DEGENERATE_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("symbol {0:?} is not bound")]
    UnboundSymbol(String),
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("qubit {qubit} out of range for {n_qubits} qubits")]
    QubitRange { qubit: usize, n_qubits: usize },
    #[error("post-selection succeeds with probability {0:e}")]
    Degenerate(f64),
}

pub type C64 = Complex64;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GateMatrix {
    One([[C64; 2]; 2]),
    /// Basis index `a + 2b` for the gate's qubit list `[a, b]`.
    Two([[C64; 4]; 4]),
}

/// The unitary of a gate. CRZ is controlled on its first qubit.
pub fn gate_matrix(kind: GateKind, angle: f64) -> GateMatrix {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let half = angle / 2.0;
    let (c, s) = (half.cos(), half.sin());
    let em = C64::from_polar(1.0, -half);
    let ep = C64::from_polar(1.0, half);
    match kind {
        GateKind::H => GateMatrix::One([[C64::new(h, 0.0), C64::new(h, 0.0)], [C64::new(h, 0.0), C64::new(-h, 0.0)]]),
        GateKind::RX => GateMatrix::One([[C64::new(c, 0.0), C64::new(0.0, -s)], [C64::new(0.0, -s), C64::new(c, 0.0)]]),
        GateKind::RZ => GateMatrix::One([[em, ZERO], [ZERO, ep]]),
        GateKind::CRZ => {
            let mut m = [[ZERO; 4]; 4];
            m[0][0] = ONE;
            m[1][1] = em;
            m[2][2] = ONE;
            m[3][3] = ep;
            GateMatrix::Two(m)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    pub n_qubits: usize,
    pub amplitudes: Vec<C64>,
}

impl StateVector {
    /// `|0...0>`
    pub fn zero(n_qubits: usize) -> StateVector {
        let mut amplitudes = vec![ZERO; 1 << n_qubits];
        amplitudes[0] = ONE;
        StateVector { n_qubits, amplitudes }
    }

    pub fn from_amplitudes(amplitudes: Vec<C64>) -> StateVector {
        assert!(amplitudes.len().is_power_of_two(), "amplitude count must be a power of two");
        StateVector {
            n_qubits: amplitudes.len().trailing_zeros() as usize,
            amplitudes,
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn normalized(mut self) -> StateVector {
        let n = self.norm_sqr().sqrt();
        if n > 0.0 {
            for a in &mut self.amplitudes {
                *a /= n;
            }
        }
        self
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn apply_1q(&mut self, q: usize, m: &[[C64; 2]; 2]) {
        let bit = 1usize << q;
        for i in 0..self.amplitudes.len() {
            if i & bit == 0 {
                let a0 = self.amplitudes[i];
                let a1 = self.amplitudes[i | bit];
                self.amplitudes[i] = m[0][0] * a0 + m[0][1] * a1;
                self.amplitudes[i | bit] = m[1][0] * a0 + m[1][1] * a1;
            }
        }
    }

    /// Phases `e^{∓iθ/2}` on the control-1 half, by target bit.
    pub fn apply_crz(&mut self, control: usize, target: usize, angle: f64) {
        let (cb, tb) = (1usize << control, 1usize << target);
        let em = C64::from_polar(1.0, -angle / 2.0);
        let ep = C64::from_polar(1.0, angle / 2.0);
        for (i, a) in self.amplitudes.iter_mut().enumerate() {
            if i & cb != 0 {
                *a *= if i & tb == 0 { em } else { ep };
            }
        }
    }

    pub fn apply_2q(&mut self, a: usize, b: usize, m: &[[C64; 4]; 4]) {
        let (ab, bb) = (1usize << a, 1usize << b);
        for i in 0..self.amplitudes.len() {
            if i & ab == 0 && i & bb == 0 {
                let idx = [i, i | ab, i | bb, i | ab | bb];
                let v = idx.map(|j| self.amplitudes[j]);
                for (r, &j) in idx.iter().enumerate() {
                    self.amplitudes[j] = (0..4).map(|k| m[r][k] * v[k]).sum();
                }
            }
        }
    }

    pub fn apply(&mut self, kind: GateKind, qubits: &[usize], angle: f64) {
        match (kind, qubits) {
            (GateKind::CRZ, [c, t]) => self.apply_crz(*c, *t, angle),
            (_, [q]) => match gate_matrix(kind, angle) {
                GateMatrix::One(m) => self.apply_1q(*q, &m),
                GateMatrix::Two(_) => unreachable!("single-qubit gate kind"),
            },
            (_, [a, b]) => match gate_matrix(kind, angle) {
                GateMatrix::Two(m) => self.apply_2q(*a, *b, &m),
                GateMatrix::One(_) => unreachable!("two-qubit gate kind"),
            },
            _ => panic!("gate {kind} on {} qubits", qubits.len()),
        }
    }
}

/// Values for circuit symbols.
pub trait Binding {
    fn value(&self, symbol: &str) -> Option<f64>;
}

impl Binding for BTreeMap<String, f64> {
    fn value(&self, symbol: &str) -> Option<f64> {
        self.get(symbol).copied()
    }
}

impl Binding for HashMap<String, f64> {
    fn value(&self, symbol: &str) -> Option<f64> {
        self.get(symbol).copied()
    }
}

/// A parameter vector indexed by a [`ParamSpace`].
pub struct Bound<'a> {
    pub space: &'a ParamSpace,
    pub values: &'a [f64],
}

impl Binding for Bound<'_> {
    fn value(&self, symbol: &str) -> Option<f64> {
        self.space.index_of(symbol).map(|i| self.values[i])
    }
}

fn resolve(angle: &Option<Angle>, params: &dyn Binding) -> Result<f64, SimError> {
    match angle {
        None => Ok(0.0),
        Some(Angle::Const(v)) => Ok(*v),
        Some(Angle::Sym(s)) => params.value(s).ok_or_else(|| SimError::UnboundSymbol(s.clone())),
    }
}

fn check_qubits(c: &ParametrizedCircuit) -> Result<(), SimError> {
    for q in c
        .gates
        .iter()
        .flat_map(|g| &g.qubits)
        .chain(c.postselect.keys())
        .chain(&c.output_qubits)
    {
        if *q >= c.n_qubits {
            return Err(SimError::QubitRange {
                qubit: *q,
                n_qubits: c.n_qubits,
            });
        }
    }
    Ok(())
}

pub fn evolve(c: &ParametrizedCircuit, params: &dyn Binding) -> Result<StateVector, SimError> {
    check_qubits(c)?;
    let angles: Vec<f64> = c.gates.iter().map(|g| resolve(&g.angle, params)).collect::<Result<_, _>>()?;
    let mut psi = StateVector::zero(c.n_qubits);
    for (g, &theta) in c.gates.iter().zip(&angles) {
        psi.apply(g.kind, &g.qubits, theta);
    }
    Ok(psi)
}

/// Projects onto the masked bit values and drops those qubits. The reduced
/// state keeps the remaining qubits in ascending order and is returned
/// unnormalized together with its squared norm.
pub fn post_select(state: &StateVector, mask: &BTreeMap<usize, u8>) -> (StateVector, f64) {
    let kept: Vec<usize> = (0..state.n_qubits).filter(|q| !mask.contains_key(q)).collect();
    let fixed: usize = mask.iter().filter(|(_, &b)| b != 0).map(|(&q, _)| 1usize << q).sum();
    let mut out = vec![ZERO; 1 << kept.len()];
    for (j, slot) in out.iter_mut().enumerate() {
        let mut i = fixed;
        for (k, &q) in kept.iter().enumerate() {
            if j >> k & 1 == 1 {
                i |= 1 << q;
            }
        }
        *slot = state.amplitudes[i];
    }
    let reduced = StateVector {
        n_qubits: kept.len(),
        amplitudes: out,
    };
    let p = reduced.norm_sqr();
    (reduced, p)
}

/// Born probabilities over the output qubits, conditioned on the
/// post-selection. Class index bit `k` is `output_qubits[k]`.
pub fn output_distribution(c: &ParametrizedCircuit, params: &dyn Binding) -> Result<Vec<f64>, SimError> {
    let psi = evolve(c, params)?;
    distribution_of(c, &psi)
}

pub fn distribution_of(c: &ParametrizedCircuit, psi: &StateVector) -> Result<Vec<f64>, SimError> {
    let (reduced, p) = post_select(psi, &c.postselect);
    if p <= DEGENERATE_EPS {
        return Err(SimError::Degenerate(p));
    }
    let kept: Vec<usize> = (0..c.n_qubits).filter(|q| !c.postselect.contains_key(q)).collect();
    let pos: Vec<usize> = c
        .output_qubits
        .iter()
        .map(|q| kept.iter().position(|k| k == q).expect("output qubits are not post-selected"))
        .collect();
    let mut dist = vec![0.0; 1 << c.output_qubits.len()];
    for (j, a) in reduced.amplitudes.iter().enumerate() {
        let class: usize = pos.iter().enumerate().map(|(k, &r)| (j >> r & 1) << k).sum();
        dist[class] += a.norm_sqr() / p;
    }
    Ok(dist)
}

pub fn state_fidelity(a: &StateVector, b: &StateVector) -> Result<f64, SimError> {
    if a.amplitudes.len() != b.amplitudes.len() {
        return Err(SimError::DimensionMismatch(a.amplitudes.len(), b.amplitudes.len()));
    }
    let inner: C64 = a.amplitudes.iter().zip(&b.amplitudes).map(|(x, y)| x.conj() * y).sum();
    Ok(inner.norm_sqr().min(1.0))
}
