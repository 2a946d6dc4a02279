use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use sql2circuits_core::ansatz::AnsatzConfig;
use sql2circuits_core::trainer::{SpsaConfig, TrainConfig};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    ExecutionTime,
    Cardinality,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnsatzSection {
    pub layers: usize,
    pub params_per_single_wire_box: usize,
}

impl Default for AnsatzSection {
    fn default() -> Self {
        let d = AnsatzConfig::default();
        AnsatzSection {
            layers: d.layers,
            params_per_single_wire_box: d.params_per_single_wire_box,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainingSection {
    pub a: f64,
    pub c: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub iterations: usize,
    pub schedule: Vec<usize>,
    pub record_wall_time: bool,
    /// Iterations per grid point when choosing `a` and `c` by grid search;
    /// zero keeps the values above.
    pub grid_search_iterations: usize,
}

impl Default for TrainingSection {
    fn default() -> Self {
        let t = TrainConfig::default();
        TrainingSection {
            a: t.spsa.a,
            c: t.spsa.c,
            alpha: t.spsa.alpha,
            gamma: t.spsa.gamma,
            iterations: t.spsa.iterations,
            schedule: t.schedule,
            record_wall_time: t.record_wall_time,
            grid_search_iterations: t.grid_search_iterations,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisSection {
    pub n_pairs: usize,
    pub n_bins: usize,
    /// Parameter draws per circuit for the entangling capability.
    pub entanglement_samples: usize,
}

impl Default for AnalysisSection {
    fn default() -> Self {
        AnalysisSection {
            n_pairs: 5000,
            n_bins: 75,
            entanglement_samples: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub task: Task,
    /// Output qubits; the model has `2^qs` classes.
    pub qs: usize,
    pub seed: u64,
    /// Number of queries to generate.
    pub queries: usize,
    /// Seed JSON for the generator; the bundled one when absent.
    pub seed_spec: Option<PathBuf>,
    /// Label CSV. With neither this nor `executor`, the toy executor labels.
    pub labels: Option<PathBuf>,
    pub executor: Option<Vec<String>>,
    /// Train/test/validation ratios; by default 0.67/0.165/0.165 for two
    /// classes and 0.67/0.33/0 otherwise.
    pub split_ratios: Option<[f64; 3]>,
    pub ansatz: AnsatzSection,
    pub training: TrainingSection,
    pub analysis: AnalysisSection,
    pub workdir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            task: Task::ExecutionTime,
            qs: 1,
            seed: 0,
            queries: 670,
            seed_spec: None,
            labels: None,
            executor: None,
            split_ratios: None,
            ansatz: AnsatzSection::default(),
            training: TrainingSection::default(),
            analysis: AnalysisSection::default(),
            workdir: PathBuf::from("work"),
        }
    }
}

/// Command-line values that take precedence over the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub task: Option<Task>,
    pub qs: Option<usize>,
    pub workdir: Option<PathBuf>,
}

impl RunConfig {
    /// Reads a config file; relative paths inside it are taken relative to
    /// the file's directory.
    pub fn load(path: &Path) -> Result<RunConfig, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg: RunConfig = serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let rebase = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        rebase(&mut cfg.workdir);
        if let Some(p) = cfg.seed_spec.as_mut() {
            rebase(p);
        }
        if let Some(p) = cfg.labels.as_mut() {
            rebase(p);
        }
        Ok(cfg)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(t) = o.task {
            self.task = t;
        }
        if let Some(q) = o.qs {
            self.qs = q;
        }
        if let Some(w) = &o.workdir {
            self.workdir = w.clone();
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let usage = |m: String| Err(CliError::Usage(m));
        if self.qs == 0 {
            return usage("qs must be at least 1".into());
        }
        self.ansatz_config().validate().map_err(|e| CliError::Usage(e.to_string()))?;
        self.train_config().spsa.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        if self.labels.is_some() && self.executor.is_some() {
            return usage("give either labels or executor, not both".into());
        }
        if matches!(&self.executor, Some(cmd) if cmd.is_empty()) {
            return usage("executor command is empty".into());
        }
        for p in [&self.seed_spec, &self.labels].into_iter().flatten() {
            if !p.exists() {
                return usage(format!("{} does not exist", p.display()));
            }
        }
        let a = &self.analysis;
        if a.n_pairs == 0 || a.n_bins == 0 || a.entanglement_samples == 0 {
            return usage("analysis sample and bin counts must be positive".into());
        }
        Ok(())
    }

    pub fn ansatz_config(&self) -> AnsatzConfig {
        AnsatzConfig {
            layers: self.ansatz.layers,
            params_per_single_wire_box: self.ansatz.params_per_single_wire_box,
            ..AnsatzConfig::with_qs(self.qs)
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        let t = &self.training;
        TrainConfig {
            spsa: SpsaConfig {
                a: t.a,
                c: t.c,
                alpha: t.alpha,
                gamma: t.gamma,
                iterations: t.iterations,
                seed: self.seed,
            },
            schedule: t.schedule.clone(),
            record_wall_time: t.record_wall_time,
            grid_search_iterations: t.grid_search_iterations,
        }
    }

    /// SHA-256 of the config without its workdir.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.workdir = PathBuf::new();
        sha256_hex(serde_json::to_string(&c).expect("config serializes").as_bytes())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_then_flags() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.json");
        std::fs::write(&path, r#"{"qs": 2, "seed": 4, "workdir": "w", "training": {"schedule": [4, 8]}}"#).unwrap();
        let mut cfg = RunConfig::load(&path).unwrap();
        assert_eq!(cfg.workdir, dir.path().join("w"));
        assert_eq!(cfg.training.iterations, 1000);
        cfg.apply(&Overrides {
            seed: Some(9),
            ..Overrides::default()
        });
        assert_eq!((cfg.seed, cfg.qs), (9, 2));
        cfg.validate().unwrap();
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.json");
        std::fs::write(&path, r#"{"q_s": 2}"#).unwrap();
        assert!(matches!(RunConfig::load(&path), Err(CliError::Usage(_))));
    }

    #[test]
    fn hash_ignores_workdir_only() {
        let a = RunConfig::default();
        let mut b = a.clone();
        b.workdir = "elsewhere".into();
        assert_eq!(a.hash(), b.hash());
        b.seed = 1;
        assert_ne!(a.hash(), b.hash());
    }

    #[test]
    fn bad_values() {
        let mut c = RunConfig {
            qs: 0,
            ..RunConfig::default()
        };
        assert!(c.validate().is_err());
        c.qs = 1;
        c.training.alpha = 0.05;
        assert!(c.validate().is_err());
    }
}
