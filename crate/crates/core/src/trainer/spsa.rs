use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::TrainError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpsaConfig {
    pub a: f64,
    pub c: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub iterations: usize,
    pub seed: u64,
}

impl Default for SpsaConfig {
    fn default() -> Self {
        SpsaConfig {
            a: 0.1,
            c: 0.1,
            alpha: 0.602,
            gamma: 0.101,
            iterations: 1000,
            seed: 0,
        }
    }
}

impl SpsaConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let ok = self.a > 0.0 && self.c > 0.0 && 0.0 < self.gamma && self.gamma < self.alpha && self.alpha <= 1.0;
        if !ok {
            return Err(TrainError::Config(format!(
                "SPSA needs a, c > 0 and 0 < gamma < alpha <= 1 (a={}, c={}, alpha={}, gamma={})",
                self.a, self.c, self.alpha, self.gamma
            )));
        }
        if self.iterations == 0 {
            return Err(TrainError::Config("SPSA iterations must be positive".into()));
        }
        Ok(())
    }

    pub fn a_k(&self, k: usize) -> f64 {
        self.a / ((k + 1) as f64).powf(self.alpha)
    }

    pub fn c_k(&self, k: usize) -> f64 {
        self.c / ((k + 1) as f64).powf(self.gamma)
    }
}

/// Random stream for global iteration `k`: independent of how many draws
/// earlier iterations made.
pub fn iteration_rng(seed: u64, k: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(k);
    rng
}

pub fn rademacher<R: Rng>(dim: usize, rng: &mut R) -> Vec<f64> {
    (0..dim).map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 }).collect()
}

/// The two-sided gradient estimate along `delta`.
pub fn spsa_gradient<F>(theta: &[f64], delta: &[f64], ck: f64, loss: &mut F) -> Result<Vec<f64>, TrainError>
where
    F: FnMut(&[f64]) -> f64,
{
    let plus: Vec<f64> = theta.iter().zip(delta).map(|(t, d)| t + ck * d).collect();
    let minus: Vec<f64> = theta.iter().zip(delta).map(|(t, d)| t - ck * d).collect();
    let lp = loss(&plus);
    let lm = loss(&minus);
    if !lp.is_finite() || !lm.is_finite() {
        return Err(TrainError::NonFinite(format!(
            "loss(theta + c_k delta) = {lp}, loss(theta - c_k delta) = {lm} at theta = {theta:?}"
        )));
    }
    Ok(delta.iter().map(|d| (lp - lm) / (2.0 * ck * d)).collect())
}

/// One SPSA update with an explicit perturbation.
pub fn spsa_step_with_delta<F>(theta: &[f64], k: usize, cfg: &SpsaConfig, delta: &[f64], loss: &mut F) -> Result<Vec<f64>, TrainError>
where
    F: FnMut(&[f64]) -> f64,
{
    let g = spsa_gradient(theta, delta, cfg.c_k(k), loss).map_err(|e| match e {
        TrainError::NonFinite(m) => TrainError::NonFinite(format!("iteration {k}: {m}")),
        other => other,
    })?;
    let ak = cfg.a_k(k);
    Ok(theta.iter().zip(&g).map(|(t, gi)| t - ak * gi).collect())
}

/// One SPSA update: exactly two loss evaluations.
pub fn spsa_step<F, R>(theta: &[f64], k: usize, cfg: &SpsaConfig, loss: &mut F, rng: &mut R) -> Result<Vec<f64>, TrainError>
where
    F: FnMut(&[f64]) -> f64,
    R: Rng,
{
    let delta = rademacher(theta.len(), rng);
    spsa_step_with_delta(theta, k, cfg, &delta, loss)
}

/// Runs `cfg.iterations` steps, drawing iteration `k`'s perturbation from
/// stream `first_stream + k`.
pub fn minimize<F>(theta: &[f64], cfg: &SpsaConfig, first_stream: u64, loss: &mut F) -> Result<Vec<f64>, TrainError>
where
    F: FnMut(&[f64]) -> f64,
{
    let mut theta = theta.to_vec();
    for k in 0..cfg.iterations {
        let mut rng = iteration_rng(cfg.seed, first_stream + k as u64);
        theta = spsa_step(&theta, k, cfg, loss, &mut rng)?;
    }
    Ok(theta)
}

pub const GRID_A: [f64; 4] = [0.01, 0.05, 0.1, 0.5];
pub const GRID_C: [f64; 3] = [0.01, 0.05, 0.1];

/// Picks `(a, c)` from the grid with the lowest final loss; ties keep the
/// first in grid order.
pub fn grid_search<F>(theta: &[f64], base: &SpsaConfig, loss: &mut F) -> Result<(f64, f64), TrainError>
where
    F: FnMut(&[f64]) -> f64,
{
    let mut best: Option<(f64, f64, f64)> = None;
    for &a in &GRID_A {
        for &c in &GRID_C {
            let cfg = SpsaConfig { a, c, ..base.clone() };
            let out = minimize(theta, &cfg, 0, loss)?;
            let l = loss(&out);
            if best.is_none_or(|(bl, _, _)| l < bl) {
                best = Some((l, a, c));
            }
        }
    }
    let (_, a, c) = best.expect("grid is non-empty");
    Ok((a, c))
}
