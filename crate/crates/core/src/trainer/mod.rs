//! Label binning, loss, SPSA and incremental training.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::TAU;
use std::io::Write;
use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ansatz::{Checkpoint, ParamSpace, ParametrizedCircuit};

mod binning;
mod model;
mod spsa;

pub use binning::{bin_labels, class_bits, ClassBinning};
pub use model::{accuracy, argmax, loss, smoothed, CompiledCircuit, Example, SMOOTHING};
pub use spsa::{
    grid_search, iteration_rng, minimize, rademacher, spsa_gradient, spsa_step, spsa_step_with_delta, SpsaConfig, GRID_A, GRID_C,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrainError {
    #[error("binning error: {0}")]
    Binning(String),
    #[error("empty batch")]
    EmptyBatch,
    #[error("non-finite loss: {0}")]
    NonFinite(String),
    #[error("invalid schedule: {0}")]
    Schedule(String),
    #[error("invalid training configuration: {0}")]
    Config(String),
}

/// Streams at and above this index seed new-symbol initialisation; lower
/// ones are SPSA iterations.
const INIT_STREAM: u64 = 1 << 63;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub spsa: SpsaConfig,
    pub schedule: Vec<usize>,
    /// Fill the `seconds` trace column with wall-clock time. Off by default
    /// so that reruns produce identical traces.
    pub record_wall_time: bool,
    /// When positive, `a` and `c` are chosen by grid search on the first
    /// stage's circuits, each grid point running this many iterations.
    pub grid_search_iterations: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            spsa: SpsaConfig::default(),
            schedule: vec![5, 10, 20, 40, 80, 160, 320],
            record_wall_time: false,
            grid_search_iterations: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledCircuit {
    pub id: String,
    pub circuit: ParametrizedCircuit,
    pub label: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub train_circuits: usize,
    pub train_acc: f64,
    /// `None` when no test circuit shares only trained symbols.
    pub test_acc: Option<f64>,
    pub valid_acc: Option<f64>,
    pub loss: f64,
    pub seconds: f64,
    pub test_evaluable: usize,
    pub valid_evaluable: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingTrace {
    pub rows: Vec<TraceRow>,
}

pub const TRACE_HEADER: [&str; 6] = ["train/circ", "train/acc", "test/acc", "valid/acc", "loss", "seconds"];

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.4}")).unwrap_or_default()
}

impl TrainingTrace {
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(TRACE_HEADER)?;
        for r in &self.rows {
            w.write_record([
                r.train_circuits.to_string(),
                format!("{:.4}", r.train_acc),
                opt(r.test_acc),
                opt(r.valid_acc),
                format!("{:.10}", r.loss),
                format!("{:.3}", r.seconds),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_ratio_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["train/circ", "test_train_ratio"])?;
        for (r, ratio) in self.rows.iter().zip(test_train_ratio(self)) {
            w.write_record([r.train_circuits.to_string(), format!("{ratio:.4}")])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Evaluable test circuits per training circuit, per trace row.
pub fn test_train_ratio(trace: &TrainingTrace) -> Vec<f64> {
    trace
        .rows
        .iter()
        .map(|r| r.test_evaluable as f64 / r.train_circuits as f64)
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    /// The optimizer settings used, after any grid search.
    pub spsa: SpsaConfig,
    pub checkpoint: Checkpoint,
    pub stages: Vec<Checkpoint>,
    pub trace: TrainingTrace,
}

fn compile(items: &[LabeledCircuit], space: &ParamSpace) -> Vec<Example> {
    items
        .iter()
        .filter_map(|lc| CompiledCircuit::new(&lc.circuit, space).map(|circuit| Example { circuit, label: lc.label }))
        .collect()
}

pub fn validate_schedule(schedule: &[usize], n_train: usize) -> Result<(), TrainError> {
    if schedule.is_empty() || schedule[0] == 0 {
        return Err(TrainError::Schedule("first stage must train at least one circuit".into()));
    }
    if schedule.windows(2).any(|w| w[1] < w[0]) {
        return Err(TrainError::Schedule(format!("stage sizes {schedule:?} decrease")));
    }
    if let Some(&last) = schedule.last() {
        if last > n_train {
            return Err(TrainError::Schedule(format!(
                "stage size {last} exceeds the {n_train} training circuits"
            )));
        }
    }
    Ok(())
}

/// Trains on growing prefixes of `train`, warm-starting each stage from the
/// previous one. After each stage, accuracy is measured on every circuit
/// whose symbols have all been trained.
pub fn train_incremental(
    train: &[LabeledCircuit],
    test: &[LabeledCircuit],
    valid: &[LabeledCircuit],
    cfg: &TrainConfig,
) -> Result<TrainOutcome, TrainError> {
    cfg.spsa.validate()?;
    validate_schedule(&cfg.schedule, train.len())?;
    let started = Instant::now();
    let mut trained: BTreeMap<String, f64> = BTreeMap::new();
    let mut trace = TrainingTrace::default();
    let mut stages = Vec::new();
    let mut global_k: u64 = 0;
    let mut spsa = cfg.spsa.clone();
    for (stage, &size) in cfg.schedule.iter().enumerate() {
        let batch_items = &train[..size];
        let symbols: BTreeSet<&str> = batch_items.iter().flat_map(|lc| lc.circuit.symbols()).collect();
        let mut init = iteration_rng(cfg.spsa.seed, INIT_STREAM + stage as u64);
        for s in &symbols {
            if !trained.contains_key(*s) {
                trained.insert(s.to_string(), init.gen_range(0.0..TAU));
            }
        }
        let space = ParamSpace::from_names(symbols.iter().copied());
        let mut theta: Vec<f64> = space.names().iter().map(|s| trained[s]).collect();
        let batch = compile(batch_items, &space);
        let mut objective = |t: &[f64]| loss(t, &batch).expect("stage batch is non-empty");
        if stage == 0 && cfg.grid_search_iterations > 0 {
            let base = SpsaConfig {
                iterations: cfg.grid_search_iterations,
                ..spsa.clone()
            };
            (spsa.a, spsa.c) = grid_search(&theta, &base, &mut objective)?;
            log::info!("grid search chose a = {}, c = {}", spsa.a, spsa.c);
        }
        for k in 0..spsa.iterations {
            let mut rng = iteration_rng(spsa.seed, global_k);
            theta = spsa_step(&theta, k, &spsa, &mut objective, &mut rng)?;
            global_k += 1;
        }
        for (name, v) in space.names().iter().zip(&theta) {
            trained.insert(name.clone(), *v);
        }
        let final_loss = objective(&theta);
        let all = ParamSpace::from_names(trained.keys().cloned());
        let values: Vec<f64> = all.names().iter().map(|s| trained[s]).collect();
        let test_set = compile(test, &all);
        let valid_set = compile(valid, &all);
        let acc = |set: &[Example]| (!set.is_empty()).then(|| accuracy(&values, set));
        let row = TraceRow {
            train_circuits: size,
            train_acc: accuracy(&theta, &batch),
            test_acc: acc(&test_set),
            valid_acc: acc(&valid_set),
            loss: final_loss,
            seconds: if cfg.record_wall_time {
                started.elapsed().as_secs_f64()
            } else {
                0.0
            },
            test_evaluable: test_set.len(),
            valid_evaluable: valid_set.len(),
        };
        log::info!(
            "stage {stage}: {size} circuits, loss {:.4}, train {:.1}%, test {:?}",
            row.loss,
            row.train_acc,
            row.test_acc
        );
        trace.rows.push(row);
        stages.push(Checkpoint {
            symbols: trained.clone(),
            iteration: global_k,
        });
    }
    let checkpoint = stages.last().cloned().expect("schedule is non-empty");
    Ok(TrainOutcome {
        spsa,
        checkpoint,
        stages,
        trace,
    })
}
