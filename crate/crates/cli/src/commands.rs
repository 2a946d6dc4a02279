use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;
use sql2circuits_core::analysis::{entangling_report, expressibility, write_expressibility_csv};
use sql2circuits_core::ansatz::{build_circuit, circuit_stats, write_stats_csv, AnsatzConfig, ParametrizedCircuit};
use sql2circuits_core::diagram::serialize_diagram;
use sql2circuits_core::grammar::{ast_to_cfg_diagram, cfg_to_pregroup, remove_caps, PregroupGrammarSpec};
use sql2circuits_core::sql::{self, QueryAst};
use sql2circuits_core::trainer::{bin_labels, class_bits, iteration_rng, train_incremental, validate_schedule, LabeledCircuit};
use sql2circuits_core::workload::{
    acquire_labels, default_ratios, generate_queries, read_dataset, split_dataset, write_dataset, LabelSource, Query, SeedSpec, Split,
};

use crate::config::{sha256_hex, RunConfig, Task};
use crate::workdir::{now, Manifest, StageRecord, Workdir};
use crate::CliError;

/// RNG stream for query generation, apart from the training and analysis
/// streams.
const GENERATE_STREAM: u64 = 1 << 62;

pub const QUERIES: &str = "queries/queries.csv";
pub const DATASET: &str = "queries/dataset.csv";
pub const TRACE: &str = "results/trace.csv";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Expressibility,
    Entanglement,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Generate,
    Labels,
    Encode,
    Train,
    Analyze(Metric),
}

impl Command {
    pub fn stage(self) -> &'static str {
        match self {
            Command::Generate => "generate",
            Command::Labels => "labels",
            Command::Encode => "encode",
            Command::Train => "train",
            Command::Analyze(Metric::Expressibility) => "analyze-expressibility",
            Command::Analyze(Metric::Entanglement) => "analyze-entanglement",
        }
    }

    fn invocation(self) -> String {
        match self {
            Command::Analyze(Metric::Expressibility) => "analyze --metric expressibility".into(),
            Command::Analyze(Metric::Entanglement) => "analyze --metric entanglement".into(),
            other => other.stage().into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Status {
    /// The stage ran; `written` files changed on disk.
    Ran {
        written: usize,
    },
    NoOp,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Report {
    pub stage: &'static str,
    pub status: Status,
    pub summary: String,
}

type Outputs = BTreeMap<String, Vec<u8>>;

struct Plan {
    fingerprint: String,
    inputs: BTreeMap<String, String>,
}

struct Ctx<'a> {
    cfg: &'a RunConfig,
    w: Workdir,
    manifest: Manifest,
}

fn data(e: impl std::fmt::Display) -> CliError {
    CliError::Data(e.to_string())
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> csv::Result<()>) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    f(&mut buf).map_err(data)?;
    Ok(buf)
}

fn seed_text(cfg: &RunConfig) -> Result<Option<String>, CliError> {
    cfg.seed_spec
        .as_ref()
        .map(|p| std::fs::read_to_string(p).map_err(|e| data(format!("cannot read {}: {e}", p.display()))))
        .transpose()
}

fn label_source(cfg: &RunConfig) -> LabelSource {
    match (&cfg.labels, &cfg.executor) {
        (Some(p), _) => LabelSource::Csv(p.clone()),
        (None, Some(cmd)) => LabelSource::Executor(cmd.clone()),
        (None, None) => LabelSource::Toy,
    }
}

fn circuit_files(rec: &StageRecord) -> impl Iterator<Item = &String> {
    rec.outputs.keys().filter(|k| k.starts_with("circuits/"))
}

impl Ctx<'_> {
    fn plan(&self, cmd: Command) -> Result<Plan, CliError> {
        let cfg = self.cfg;
        let mut inputs = BTreeMap::new();
        let mut input = |rel: &str| -> Result<(), CliError> {
            let d = self.w.digest(rel).ok_or_else(|| data(format!("{rel} is missing")))?;
            inputs.insert(rel.to_string(), d);
            Ok(())
        };
        let slice = match cmd {
            Command::Generate => {
                let seed = seed_text(cfg)?.map(|t| sha256_hex(t.as_bytes()));
                json!({"seed": cfg.seed, "queries": cfg.queries, "seed_spec": seed})
            }
            Command::Labels => {
                self.require(Command::Generate)?;
                input(QUERIES)?;
                let source = match label_source(cfg) {
                    LabelSource::Csv(p) => {
                        let bytes = std::fs::read(&p).map_err(|e| data(format!("cannot read {}: {e}", p.display())))?;
                        json!({"csv": sha256_hex(&bytes)})
                    }
                    LabelSource::Executor(cmd) => json!({"executor": cmd}),
                    LabelSource::Toy => json!("toy"),
                };
                json!({"task": cfg.task, "qs": cfg.qs, "seed": cfg.seed, "split_ratios": cfg.split_ratios, "source": source})
            }
            Command::Encode => {
                self.require(Command::Generate)?;
                input(QUERIES)?;
                json!({"ansatz": cfg.ansatz_config()})
            }
            Command::Train => {
                self.require(Command::Labels)?;
                let encoded = self.require(Command::Encode)?;
                input(DATASET)?;
                for rel in circuit_files(&encoded) {
                    input(rel)?;
                }
                json!({"training": cfg.train_config(), "qs": cfg.qs})
            }
            Command::Analyze(metric) => {
                let encoded = self.require(Command::Encode)?;
                for rel in circuit_files(&encoded) {
                    input(rel)?;
                }
                json!({"metric": metric, "analysis": cfg.analysis, "seed": cfg.seed})
            }
        };
        let fingerprint = sha256_hex(
            json!({"stage": cmd.stage(), "config": slice, "inputs": inputs})
                .to_string()
                .as_bytes(),
        );
        Ok(Plan { fingerprint, inputs })
    }

    /// The record of an earlier stage, provided it is current for this
    /// config and its outputs are untouched.
    fn require(&self, cmd: Command) -> Result<StageRecord, CliError> {
        let missing = |what: &str| CliError::Prerequisite {
            what: format!("{} output is {what}", cmd.stage()),
            run: cmd.invocation(),
        };
        let rec = self.manifest.stages.get(cmd.stage()).ok_or_else(|| missing("missing"))?;
        let current = match self.plan(cmd) {
            Ok(plan) => plan.fingerprint == rec.fingerprint,
            Err(CliError::Data(_)) => false,
            Err(e) => return Err(e),
        };
        if !current || !self.w.intact(&rec.outputs) {
            return Err(missing("out of date"));
        }
        Ok(rec.clone())
    }

    fn read_queries(&self) -> Result<Vec<Query>, CliError> {
        let bytes = self.w.read(QUERIES)?;
        let mut r = csv::Reader::from_reader(bytes.as_slice());
        let mut out = Vec::new();
        for rec in r.records() {
            let rec = rec.map_err(data)?;
            if rec.len() != 2 {
                return Err(data(format!("{QUERIES}: expected query_id,sql rows")));
            }
            out.push(Query {
                id: rec[0].to_string(),
                sql: rec[1].to_string(),
            });
        }
        Ok(out)
    }

    fn load_circuits(&self) -> Result<Vec<(String, ParametrizedCircuit)>, CliError> {
        let rec = self.manifest.stages.get(Command::Encode.stage()).expect("encode was required");
        circuit_files(rec)
            .map(|rel| {
                let text = String::from_utf8(self.w.read(rel)?).map_err(data)?;
                let c = ParametrizedCircuit::from_json(&text).map_err(|e| data(format!("{rel}: {e}")))?;
                let id = rel.trim_start_matches("circuits/").trim_end_matches(".json").to_string();
                Ok((id, c))
            })
            .collect()
    }

    fn generate(&self) -> Result<(Outputs, String), CliError> {
        let spec = match seed_text(self.cfg)? {
            Some(text) => SeedSpec::from_json(&text).map_err(data)?,
            None => SeedSpec::bundled(),
        };
        let queries = generate_queries(&spec, self.cfg.queries, &mut iteration_rng(self.cfg.seed, GENERATE_STREAM)).map_err(data)?;
        let width = queries.len().to_string().len().max(4);
        let bytes = csv_bytes(|buf| {
            let mut w = csv::Writer::from_writer(buf);
            w.write_record(["query_id", "sql"])?;
            for (i, q) in queries.iter().enumerate() {
                w.write_record([format!("q{:0width$}", i + 1), q.clone()])?;
            }
            w.flush()?;
            Ok(())
        })?;
        let summary = format!("{} distinct queries", queries.len());
        Ok((BTreeMap::from([(QUERIES.to_string(), bytes)]), summary))
    }

    fn labels(&self) -> Result<(Outputs, String), CliError> {
        let cfg = self.cfg;
        let queries = self.read_queries()?;
        let mut rows = acquire_labels(&queries, &label_source(cfg)).map_err(data)?;
        let n_classes = 1usize << cfg.qs;
        let values: Vec<f64> = rows
            .iter()
            .map(|r| match cfg.task {
                Task::ExecutionTime => r.execution_ms,
                Task::Cardinality => r.cardinality as f64,
            })
            .collect();
        let binning = bin_labels(&values, n_classes).map_err(data)?;
        for (r, &c) in rows.iter_mut().zip(&binning.assignments) {
            r.class = class_bits(c, cfg.qs);
        }
        let classes: Vec<String> = rows.iter().map(|r| r.class.clone()).collect();
        let ratios = cfg.split_ratios.unwrap_or_else(|| default_ratios(n_classes));
        let splits = split_dataset(&classes, ratios, cfg.seed).map_err(data)?;
        for (r, s) in rows.iter_mut().zip(splits) {
            r.split = Some(s);
        }
        let dataset = csv_bytes(|buf| write_dataset(&rows, buf))?;
        let sizes = binning.class_sizes();
        let ranges = csv_bytes(|buf| {
            let mut w = csv::Writer::from_writer(buf);
            w.write_record(["class", "bits", "lo", "hi", "count"])?;
            for (c, [lo, hi]) in binning.class_ranges.iter().enumerate() {
                w.write_record([
                    c.to_string(),
                    class_bits(c, cfg.qs),
                    lo.to_string(),
                    hi.to_string(),
                    sizes[c].to_string(),
                ])?;
            }
            w.flush()?;
            Ok(())
        })?;
        let count = |s: Split| rows.iter().filter(|r| r.split == Some(s)).count();
        let summary = format!(
            "{} of {} queries labeled; {} train, {} test, {} validation",
            rows.len(),
            queries.len(),
            count(Split::Train),
            count(Split::Test),
            count(Split::Validation)
        );
        Ok((
            BTreeMap::from([(DATASET.to_string(), dataset), ("results/class_ranges.csv".to_string(), ranges)]),
            summary,
        ))
    }

    fn encode(&self) -> Result<(Outputs, String), CliError> {
        let queries = self.read_queries()?;
        let mut parsed: Vec<(&Query, QueryAst)> = Vec::new();
        for q in &queries {
            match sql::parse(&q.sql) {
                Ok(ast) => parsed.push((q, ast)),
                Err(e) => log::warn!("skipping {}: {e}", q.id),
            }
        }
        let spec = PregroupGrammarSpec::from_queries(parsed.iter().map(|(_, a)| a)).map_err(data)?;
        let acfg = self.cfg.ansatz_config();
        let results: Vec<Result<(Outputs, ParametrizedCircuit), String>> = parsed
            .par_iter()
            .map(|(q, ast)| encode_one(&q.id, ast, &spec, &acfg).map_err(|e| format!("skipping {}: {e}", q.id)))
            .collect();
        let mut outputs = Outputs::new();
        let mut circuits = Vec::new();
        for r in results {
            match r {
                Ok((files, c)) => {
                    outputs.extend(files);
                    circuits.push(c);
                }
                Err(e) => log::warn!("{e}"),
            }
        }
        if circuits.is_empty() {
            return Err(data("no query could be encoded"));
        }
        let stats = circuit_stats(&circuits);
        outputs.insert("results/circuit_stats.csv".into(), csv_bytes(|buf| write_stats_csv(&stats, buf))?);
        let summary = format!(
            "{} of {} queries encoded; {} parameters, {:.2} qubits on average",
            circuits.len(),
            queries.len(),
            stats.n_params,
            stats.avg_qubits
        );
        Ok((outputs, summary))
    }

    fn train(&self) -> Result<(Outputs, String), CliError> {
        let cfg = self.cfg;
        let rows = read_dataset(self.w.read(DATASET)?.as_slice()).map_err(data)?;
        let circuits: BTreeMap<String, ParametrizedCircuit> = self.load_circuits()?.into_iter().collect();
        let (mut train, mut test, mut valid) = (Vec::new(), Vec::new(), Vec::new());
        for r in rows {
            let Some(circuit) = circuits.get(&r.query_id) else {
                log::warn!("{} has no circuit; left out of training", r.query_id);
                continue;
            };
            let label = class_index(&r.class, cfg.qs)
                .ok_or_else(|| data(format!("{}: class {:?} is not a {}-bit label", r.query_id, r.class, cfg.qs)))?;
            if circuit.output_qubits.len() != cfg.qs {
                return Err(data(format!(
                    "{} has {} output qubits, expected {}",
                    r.query_id,
                    circuit.output_qubits.len(),
                    cfg.qs
                )));
            }
            let item = LabeledCircuit {
                id: r.query_id,
                circuit: circuit.clone(),
                label,
            };
            match r.split {
                Some(Split::Train) => train.push(item),
                Some(Split::Test) => test.push(item),
                Some(Split::Validation) => valid.push(item),
                None => {}
            }
        }
        let tc = cfg.train_config();
        validate_schedule(&tc.schedule, train.len()).map_err(|e| data(format!("{e}; adjust training.schedule")))?;
        let outcome = train_incremental(&train, &test, &valid, &tc).map_err(data)?;
        let mut outputs = Outputs::new();
        for (i, cp) in outcome.stages.iter().enumerate() {
            outputs.insert(format!("checkpoints/stage_{:02}.json", i + 1), (cp.to_json() + "\n").into_bytes());
        }
        outputs.insert("checkpoints/final.json".into(), (outcome.checkpoint.to_json() + "\n").into_bytes());
        outputs.insert(TRACE.into(), csv_bytes(|buf| outcome.trace.write_csv(buf))?);
        outputs.insert(
            "results/test_train_ratio.csv".into(),
            csv_bytes(|buf| outcome.trace.write_ratio_csv(buf))?,
        );
        if tc.grid_search_iterations > 0 {
            let chosen = format!("a,c\n{},{}\n", outcome.spsa.a, outcome.spsa.c);
            outputs.insert("results/grid_search.csv".into(), chosen.into_bytes());
        }
        let last = outcome.trace.rows.last().expect("schedule is non-empty");
        let pct = |v: Option<f64>| v.map(|x| format!("{x:.1}%")).unwrap_or_else(|| "n/a".into());
        let summary = format!(
            "{} stages on {} circuits; train {:.1}%, test {}, validation {}",
            outcome.trace.rows.len(),
            last.train_circuits,
            last.train_acc,
            pct(last.test_acc),
            pct(last.valid_acc)
        );
        Ok((outputs, summary))
    }

    fn analyze(&self, metric: Metric) -> Result<(Outputs, String), CliError> {
        let a = &self.cfg.analysis;
        let circuits = self.load_circuits()?;
        match metric {
            Metric::Expressibility => {
                let list: Vec<ParametrizedCircuit> = circuits.into_iter().map(|(_, c)| c).collect();
                let r = expressibility(&list, a.n_pairs, a.n_bins, self.cfg.seed).map_err(data)?;
                let bytes = csv_bytes(|buf| write_expressibility_csv(&r, buf))?;
                let summary = format!("KL divergence from Haar {:.6} over {} pairs", r.kl_divergence, r.total_samples);
                Ok((BTreeMap::from([("results/expressibility.csv".to_string(), bytes)]), summary))
            }
            Metric::Entanglement => {
                let r = entangling_report(&circuits, a.entanglement_samples, self.cfg.seed).map_err(data)?;
                let bytes = csv_bytes(|buf| r.write_csv(buf))?;
                let summary = format!("mean entangling capability {:.6} over {} circuits", r.mean, r.rows.len());
                Ok((BTreeMap::from([("results/entanglement.csv".to_string(), bytes)]), summary))
            }
        }
    }
}

fn encode_one(id: &str, ast: &QueryAst, spec: &PregroupGrammarSpec, acfg: &AnsatzConfig) -> Result<(Outputs, ParametrizedCircuit), String> {
    let cfg = ast_to_cfg_diagram(ast).map_err(|e| e.to_string())?;
    let pregroup = cfg_to_pregroup(&cfg, spec).map_err(|e| e.to_string())?;
    let capless = remove_caps(&pregroup).map_err(|e| e.to_string())?;
    let circuit = build_circuit(&capless, acfg).map_err(|e| e.to_string())?;
    let mut files = Outputs::new();
    for (kind, d) in [("cfg", &cfg), ("pregroup", &pregroup), ("capless", &capless)] {
        files.insert(format!("diagrams/{id}.{kind}.json"), (serialize_diagram(d) + "\n").into_bytes());
    }
    files.insert(format!("circuits/{id}.json"), (circuit.to_json() + "\n").into_bytes());
    Ok((files, circuit))
}

/// Inverse of `class_bits`.
fn class_index(bits: &str, qs: usize) -> Option<usize> {
    if bits.len() != qs {
        return None;
    }
    bits.chars().enumerate().try_fold(0, |acc, (k, ch)| match ch {
        '0' => Some(acc),
        '1' => Some(acc | 1 << k),
        _ => None,
    })
}

/// Runs one pipeline command against the config's workdir.
pub fn execute(cmd: Command, cfg: &RunConfig, allow_override: bool) -> Result<Report, CliError> {
    cfg.validate()?;
    let w = Workdir::open(&cfg.workdir)?;
    let mut manifest = w.manifest()?.unwrap_or_default();
    let hash = cfg.hash();
    if !manifest.config_hash.is_empty() && manifest.config_hash != hash {
        if !allow_override {
            return Err(CliError::Usage(format!(
                "{} was set up with config {}, not {hash}; pass --override to continue with the new config",
                cfg.workdir.display(),
                manifest.config_hash
            )));
        }
        log::warn!("config changed from {}; continuing under --override", manifest.config_hash);
    }
    manifest.config_hash = hash;
    let mut ctx = Ctx { cfg, w, manifest };
    let plan = ctx.plan(cmd)?;
    let stage = cmd.stage();

    if let Some(rec) = ctx.manifest.stages.get_mut(stage) {
        if rec.fingerprint == plan.fingerprint && ctx.w.intact(&rec.outputs) {
            rec.last_run = "no-op".into();
            ctx.w.save_manifest(&ctx.manifest)?;
            return Ok(Report {
                stage,
                status: Status::NoOp,
                summary: "up to date".into(),
            });
        }
    }

    let (outputs, summary) = match cmd {
        Command::Generate => ctx.generate(),
        Command::Labels => ctx.labels(),
        Command::Encode => ctx.encode(),
        Command::Train => ctx.train(),
        Command::Analyze(m) => ctx.analyze(m),
    }?;
    let mut written = 0;
    let mut digests = BTreeMap::new();
    for (rel, bytes) in &outputs {
        if ctx.w.write(rel, bytes)? {
            written += 1;
        }
        digests.insert(rel.clone(), sha256_hex(bytes));
    }
    if let Some(old) = ctx.manifest.stages.get(stage) {
        for rel in old.outputs.keys().filter(|k| !digests.contains_key(*k)) {
            let _ = std::fs::remove_file(ctx.w.path(rel));
        }
    }
    ctx.manifest.stages.insert(
        stage.to_string(),
        StageRecord {
            fingerprint: plan.fingerprint,
            inputs: plan.inputs,
            outputs: digests,
            completed_at: now(),
            last_run: "ran".into(),
        },
    );
    ctx.w.save_manifest(&ctx.manifest)?;
    Ok(Report {
        stage,
        status: Status::Ran { written },
        summary,
    })
}
