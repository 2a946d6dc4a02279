//! Brute-force reference implementations built from explicit full-size
//! matrices. Slow by design; only for cross-checking.

use num_complex::Complex64 as C64;

use super::{gate_matrix, Binding, GateMatrix, SimError};
use crate::ansatz::{Angle, ParametrizedCircuit};

pub type Dense = Vec<Vec<C64>>;

fn identity(dim: usize) -> Dense {
    (0..dim)
        .map(|i| {
            (0..dim)
                .map(|j| if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) })
                .collect()
        })
        .collect()
}

/// Kronecker product `a ⊗ b`, with `b` on the less significant index.
pub fn kron(a: &Dense, b: &Dense) -> Dense {
    let (ra, rb) = (a.len(), b.len());
    let mut out = vec![vec![C64::new(0.0, 0.0); ra * rb]; ra * rb];
    for i in 0..ra {
        for j in 0..ra {
            for k in 0..rb {
                for l in 0..rb {
                    out[i * rb + k][j * rb + l] = a[i][j] * b[k][l];
                }
            }
        }
    }
    out
}

pub fn matmul(a: &Dense, b: &Dense) -> Dense {
    let n = a.len();
    let m = b[0].len();
    (0..n)
        .map(|i| (0..m).map(|j| (0..b.len()).map(|k| a[i][k] * b[k][j]).sum()).collect())
        .collect()
}

pub fn dagger(a: &Dense) -> Dense {
    (0..a[0].len()).map(|i| (0..a.len()).map(|j| a[j][i].conj()).collect()).collect()
}

pub fn small_matrix(m: &GateMatrix) -> Dense {
    match m {
        GateMatrix::One(m) => m.iter().map(|r| r.to_vec()).collect(),
        GateMatrix::Two(m) => m.iter().map(|r| r.to_vec()).collect(),
    }
}

/// Full `2^n × 2^n` matrix of a gate on the given qubits.
pub fn full_matrix(m: &GateMatrix, qubits: &[usize], n: usize) -> Dense {
    match m {
        GateMatrix::One(u) => {
            let u: Dense = u.iter().map(|r| r.to_vec()).collect();
            // highest qubit is the most significant Kronecker factor
            (0..n).rev().fold(identity(1), |acc, q| {
                kron(&acc, &if q == qubits[0] { u.clone() } else { identity(2) })
            })
        }
        GateMatrix::Two(u) => {
            let dim = 1usize << n;
            let (a, b) = (qubits[0], qubits[1]);
            let sub = |i: usize| (i >> a & 1) + 2 * (i >> b & 1);
            let rest = |i: usize| i & !(1 << a) & !(1 << b);
            (0..dim)
                .map(|i| {
                    (0..dim)
                        .map(|j| {
                            if rest(i) == rest(j) {
                                u[sub(i)][sub(j)]
                            } else {
                                C64::new(0.0, 0.0)
                            }
                        })
                        .collect()
                })
                .collect()
        }
    }
}

pub fn evolve_dense(c: &ParametrizedCircuit, params: &dyn Binding) -> Result<Vec<C64>, SimError> {
    let dim = 1usize << c.n_qubits;
    let mut psi = vec![C64::new(0.0, 0.0); dim];
    psi[0] = C64::new(1.0, 0.0);
    for g in &c.gates {
        let theta = match &g.angle {
            None => 0.0,
            Some(Angle::Const(v)) => *v,
            Some(Angle::Sym(s)) => params.value(s).ok_or_else(|| SimError::UnboundSymbol(s.clone()))?,
        };
        let full = full_matrix(&gate_matrix(g.kind, theta), &g.qubits, c.n_qubits);
        psi = (0..dim).map(|i| (0..dim).map(|j| full[i][j] * psi[j]).sum()).collect();
    }
    Ok(psi)
}

/// Conditional distribution by enumerating every basis outcome.
pub fn distribution_dense(c: &ParametrizedCircuit, params: &dyn Binding) -> Result<Vec<f64>, SimError> {
    let psi = evolve_dense(c, params)?;
    let mut joint = vec![0.0; 1 << c.output_qubits.len()];
    let mut total = 0.0;
    for (i, a) in psi.iter().enumerate() {
        if c.postselect.iter().all(|(&q, &b)| (i >> q & 1) as u8 == b) {
            let class: usize = c.output_qubits.iter().enumerate().map(|(k, &q)| (i >> q & 1) << k).sum();
            joint[class] += a.norm_sqr();
            total += a.norm_sqr();
        }
    }
    if total <= super::DEGENERATE_EPS {
        return Err(SimError::Degenerate(total));
    }
    Ok(joint.into_iter().map(|p| p / total).collect())
}

/// Reduced density matrix of `keep` (in the listed order, first qubit
/// least significant) by explicit partial trace.
pub fn reduced_density(psi: &[C64], n: usize, keep: &[usize]) -> Dense {
    let traced: Vec<usize> = (0..n).filter(|q| !keep.contains(q)).collect();
    let dk = 1usize << keep.len();
    let mut rho = vec![vec![C64::new(0.0, 0.0); dk]; dk];
    let index = |kbits: usize, tbits: usize| -> usize {
        let mut i = 0;
        for (k, &q) in keep.iter().enumerate() {
            i |= (kbits >> k & 1) << q;
        }
        for (k, &q) in traced.iter().enumerate() {
            i |= (tbits >> k & 1) << q;
        }
        i
    };
    for r in 0..dk {
        for s in 0..dk {
            for t in 0..(1usize << traced.len()) {
                rho[r][s] += psi[index(r, t)] * psi[index(s, t)].conj();
            }
        }
    }
    rho
}

pub fn purity(rho: &Dense) -> f64 {
    matmul(rho, rho).iter().enumerate().map(|(i, r)| r[i].re).sum()
}
