//! Expressibility against the Haar fidelity distribution and Meyer-Wallach
//! entangling capability.

use std::f64::consts::TAU;
use std::io::Write;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::ansatz::{collect_symbols, ParametrizedCircuit};
use crate::sim::{evolve, post_select, state_fidelity, Bound, SimError, StateVector, DEGENERATE_EPS};
use crate::trainer::iteration_rng;

pub const DEFAULT_BINS: usize = 75;
pub const DEFAULT_PAIRS: usize = 5000;
/// Redraws allowed per fidelity pair.
pub const RETRIES_PER_PAIR: usize = 100;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("invalid bin [{lo}, {hi}] for dimension {n}")]
    InvalidBin { lo: f64, hi: f64, n: usize },
    #[error("bin count mismatch: {0} vs {1}")]
    BinMismatch(usize, usize),
    #[error("divergence is infinite: bin {0} has mass under p but none under q")]
    InfiniteDivergence(usize),
    #[error("post-selection failed on {discarded} of {attempts} draws")]
    Sampling { discarded: usize, attempts: usize },
    #[error("qubit {qubit} out of range for {n_qubits} qubits")]
    QubitRange { qubit: usize, n_qubits: usize },
    #[error("nothing to analyze: {0}")]
    Empty(String),
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// `(1 - f)^(N-1)`, the Haar probability that the fidelity exceeds `f`,
/// rounded to a multiple of 2^-53. On that grid, differences and partial
/// sums of tail values are exact, so bin masses telescope to exactly 1.
fn haar_tail(f: f64, n: usize) -> f64 {
    let scale = 2f64.powi(53);
    ((1.0 - f).powi(n as i32 - 1) * scale).round() / scale
}

/// Haar probability mass of fidelities in `[lo, hi]` for dimension `n`.
pub fn haar_bin_mass(lo: f64, hi: f64, n: usize) -> Result<f64, AnalysisError> {
    if !(0.0 <= lo && lo < hi && hi <= 1.0) || n < 2 {
        return Err(AnalysisError::InvalidBin { lo, hi, n });
    }
    Ok(haar_tail(lo, n) - haar_tail(hi, n))
}

pub fn uniform_edges(n_bins: usize) -> Vec<f64> {
    (0..=n_bins).map(|i| i as f64 / n_bins as f64).collect()
}

pub fn haar_masses(edges: &[f64], n: usize) -> Result<Vec<f64>, AnalysisError> {
    edges.windows(2).map(|w| haar_bin_mass(w[0], w[1], n)).collect()
}

/// `Σ p_i ln(p_i / q_i)` in nats, with `0 ln 0 = 0`.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> Result<f64, AnalysisError> {
    if p.len() != q.len() {
        return Err(AnalysisError::BinMismatch(p.len(), q.len()));
    }
    let mut kl = 0.0;
    for (i, (&pi, &qi)) in p.iter().zip(q).enumerate() {
        if pi > 0.0 {
            if qi <= 0.0 {
                return Err(AnalysisError::InfiniteDivergence(i));
            }
            kl += pi * (pi / qi).ln();
        }
    }
    Ok(kl.max(0.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct FidelityHistogram {
    pub n_bins: usize,
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
    pub total_samples: usize,
    pub discarded: usize,
}

impl FidelityHistogram {
    pub fn probabilities(&self) -> Vec<f64> {
        self.counts.iter().map(|&c| c as f64 / self.total_samples as f64).collect()
    }

    fn bin_of(&self, f: f64) -> usize {
        ((f * self.n_bins as f64) as usize).min(self.n_bins - 1)
    }
}

fn random_values(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.gen_range(0.0..TAU)).collect()
}

/// Normalized post-selected output state, `None` when post-selection fails.
fn output_state(c: &ParametrizedCircuit, bound: &Bound) -> Result<Option<StateVector>, SimError> {
    let psi = evolve(c, bound)?;
    let (reduced, p) = post_select(&psi, &c.postselect);
    Ok((p > DEGENERATE_EPS).then(|| reduced.normalized()))
}

/// Fidelities of output-state pairs. Each pair draws one circuit uniformly
/// and two parameter vectors for it from the pair's own random stream, and
/// is redrawn when either post-selection fails.
pub fn sample_fidelities(
    circuits: &[ParametrizedCircuit],
    n_pairs: usize,
    n_bins: usize,
    seed: u64,
) -> Result<FidelityHistogram, AnalysisError> {
    if circuits.is_empty() || n_pairs == 0 || n_bins == 0 {
        return Err(AnalysisError::Empty("fidelity sampling needs circuits, pairs and bins".into()));
    }
    let spaces: Vec<_> = circuits.iter().map(|c| collect_symbols([c])).collect();
    let draws: Vec<Result<(Option<f64>, usize), AnalysisError>> = (0..n_pairs)
        .into_par_iter()
        .map(|pair| {
            let mut rng = iteration_rng(seed, pair as u64);
            for attempt in 0..RETRIES_PER_PAIR {
                let i = rng.gen_range(0..circuits.len());
                let (c, space) = (&circuits[i], &spaces[i]);
                let a = random_values(&mut rng, space.len());
                let b = random_values(&mut rng, space.len());
                let sa = output_state(c, &Bound { space, values: &a })?;
                let sb = output_state(c, &Bound { space, values: &b })?;
                if let (Some(sa), Some(sb)) = (sa, sb) {
                    return Ok((Some(state_fidelity(&sa, &sb)?), attempt));
                }
            }
            Ok((None, RETRIES_PER_PAIR))
        })
        .collect();
    let mut hist = FidelityHistogram {
        n_bins,
        edges: uniform_edges(n_bins),
        counts: vec![0; n_bins],
        total_samples: 0,
        discarded: 0,
    };
    let mut failed = false;
    for d in draws {
        let (f, discarded) = d?;
        hist.discarded += discarded;
        match f {
            Some(f) => {
                let b = hist.bin_of(f);
                hist.counts[b] += 1;
                hist.total_samples += 1;
            }
            None => failed = true,
        }
    }
    if failed {
        return Err(AnalysisError::Sampling {
            discarded: hist.discarded,
            attempts: hist.discarded + hist.total_samples,
        });
    }
    Ok(hist)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpressibilityReport {
    pub kl_divergence: f64,
    pub n_bins: usize,
    pub total_samples: usize,
    pub hilbert_dim: usize,
    pub histogram: FidelityHistogram,
}

/// KL divergence of the pooled fidelity histogram from the Haar one over
/// the `2^q_s`-dimensional output space.
pub fn expressibility(
    circuits: &[ParametrizedCircuit],
    n_pairs: usize,
    n_bins: usize,
    seed: u64,
) -> Result<ExpressibilityReport, AnalysisError> {
    let q_s = circuits.first().map(|c| c.output_qubits.len()).unwrap_or(0);
    let histogram = sample_fidelities(circuits, n_pairs, n_bins, seed)?;
    let hilbert_dim = 1usize << q_s;
    let haar = haar_masses(&histogram.edges, hilbert_dim)?;
    Ok(ExpressibilityReport {
        kl_divergence: kl_divergence(&histogram.probabilities(), &haar)?,
        n_bins,
        total_samples: histogram.total_samples,
        hilbert_dim,
        histogram,
    })
}

pub fn write_expressibility_csv<W: Write>(r: &ExpressibilityReport, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["bin", "fidelity_probability"])?;
    for (i, p) in r.histogram.probabilities().iter().enumerate() {
        let center = (r.histogram.edges[i] + r.histogram.edges[i + 1]) / 2.0;
        w.write_record([format!("{center:.6}"), format!("{p:.8}")])?;
    }
    w.write_record(["kl".to_string(), format!("{:.8}", r.kl_divergence)])?;
    w.flush()?;
    Ok(())
}

/// `Tr(ρ_k²)` of the single-qubit reduced state of qubit `k`.
pub fn reduced_purity(state: &StateVector, k: usize) -> Result<f64, AnalysisError> {
    if k >= state.n_qubits {
        return Err(AnalysisError::QubitRange {
            qubit: k,
            n_qubits: state.n_qubits,
        });
    }
    let bit = 1usize << k;
    let (mut p0, mut p1) = (0.0, 0.0);
    let mut off = num_complex::Complex64::new(0.0, 0.0);
    for (i, a) in state.amplitudes.iter().enumerate() {
        if i & bit == 0 {
            let b = state.amplitudes[i | bit];
            p0 += a.norm_sqr();
            p1 += b.norm_sqr();
            off += a * b.conj();
        }
    }
    Ok(p0 * p0 + p1 * p1 + 2.0 * off.norm_sqr())
}

/// `2 (1 - mean_k Tr ρ_k²)` for one state.
pub fn meyer_wallach_term(state: &StateVector) -> f64 {
    let n = state.n_qubits;
    if n == 0 {
        return 0.0;
    }
    let mean: f64 = (0..n).map(|k| reduced_purity(state, k).expect("qubit in range")).sum::<f64>() / n as f64;
    2.0 * (1.0 - mean)
}

/// Meyer-Wallach Q of a circuit's full pre-measurement state, averaged over
/// `n_samples` uniform parameter draws. Sample `j` uses stream `stream0 + j`.
pub fn meyer_wallach(c: &ParametrizedCircuit, n_samples: usize, seed: u64, stream0: u64) -> Result<f64, AnalysisError> {
    if n_samples == 0 {
        return Err(AnalysisError::Empty("Meyer-Wallach needs at least one sample".into()));
    }
    let space = collect_symbols([c]);
    let terms: Vec<Result<f64, AnalysisError>> = (0..n_samples)
        .into_par_iter()
        .map(|j| {
            let mut rng = iteration_rng(seed, stream0 + j as u64);
            let values = random_values(&mut rng, space.len());
            let psi = evolve(
                c,
                &Bound {
                    space: &space,
                    values: &values,
                },
            )?;
            Ok(meyer_wallach_term(&psi))
        })
        .collect();
    let mut sum = 0.0;
    for t in terms {
        sum += t?;
    }
    Ok(sum / n_samples as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntanglementReport {
    pub rows: Vec<(String, f64)>,
    pub mean: f64,
}

/// Q for every circuit; circuit `i` samples from streams `i << 32` onward.
pub fn entangling_report(
    circuits: &[(String, ParametrizedCircuit)],
    n_samples: usize,
    seed: u64,
) -> Result<EntanglementReport, AnalysisError> {
    if circuits.is_empty() {
        return Err(AnalysisError::Empty("no circuits".into()));
    }
    let mut rows = Vec::with_capacity(circuits.len());
    for (i, (id, c)) in circuits.iter().enumerate() {
        rows.push((id.clone(), meyer_wallach(c, n_samples, seed, (i as u64) << 32)?));
    }
    Ok(EntanglementReport::from_rows(rows))
}

impl EntanglementReport {
    pub fn from_rows(rows: Vec<(String, f64)>) -> EntanglementReport {
        let mean = rows.iter().map(|(_, q)| q).sum::<f64>() / rows.len().max(1) as f64;
        EntanglementReport { rows, mean }
    }

    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["id", "entangling_capability"])?;
        for (id, q) in &self.rows {
            w.write_record([id.clone(), format!("{q:.8}")])?;
        }
        w.write_record(["mean".to_string(), format!("{:.8}", self.mean)])?;
        w.flush()?;
        Ok(())
    }
}
