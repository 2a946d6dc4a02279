use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::PathBuf;
use std::process::{Command, Stdio};

use rayon::prelude::*;

use super::{Split, WorkloadError};
use crate::sql;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Query {
    pub id: String,
    pub sql: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledQuery {
    pub query_id: String,
    pub sql: String,
    pub execution_ms: f64,
    pub cardinality: u64,
    /// Class bit string; empty until binned.
    pub class: String,
    pub split: Option<Split>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LabelSource {
    /// CSV with at least `query_id,execution_ms,cardinality` columns.
    Csv(PathBuf),
    /// Program and arguments; SQL on stdin, `ms,cardinality` on stdout.
    Executor(Vec<String>),
    /// The built-in deterministic stand-in.
    Toy,
}

pub const DATASET_HEADER: [&str; 6] = ["query_id", "sql", "execution_ms", "cardinality", "class", "split"];

fn fnv1a(text: &str) -> u64 {
    text.bytes()
        .fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3))
}

/// Synthetic execution time and cardinality from query shape: each
/// relation multiplies the cost, each filter divides it, and a hash of the
/// text adds a small spread.
pub fn toy_execute(text: &str) -> Option<(f64, u64)> {
    let ast = sql::parse(text).ok()?;
    let relations = ast.from_relations.len() as i32;
    let (joins, filters) = match &ast.where_expr {
        Some(e) => (e.joining_count(), e.predicate_count() - e.joining_count()),
        None => (0, 0),
    };
    let u = (fnv1a(&ast.to_string()) % 10_000) as f64 / 10_000.0;
    let ms = 2.0 * 4f64.powi(relations - 1) * (1 + joins) as f64 / (1 + filters) as f64 * (1.0 + 0.25 * u);
    let card = (1000.0 * 3f64.powi(relations - 1) / (1 + 2 * filters) as f64 * (1.0 + u)).round() as u64;
    Some(((ms * 1000.0).round() / 1000.0, card))
}

fn parse_line(line: &str) -> Option<(f64, u64)> {
    let (ms, card) = line.trim().split_once(',')?;
    let ms: f64 = ms.trim().parse().ok()?;
    let card: u64 = card.trim().parse().ok()?;
    (ms.is_finite() && ms >= 0.0).then_some((ms, card))
}

fn run_executor(cmd: &[String], text: &str) -> Result<(f64, u64), String> {
    let (program, args) = cmd.split_first().ok_or("empty executor command")?;
    let mut child = Command::new(program)
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .map_err(|e| format!("cannot start {program}: {e}"))?;
    {
        let mut stdin = child.stdin.take().expect("stdin is piped");
        // a child that exits without reading stdin is judged by its output
        let _ = stdin.write_all(text.as_bytes()).and_then(|_| stdin.write_all(b"\n"));
    }
    let mut out = String::new();
    child
        .stdout
        .take()
        .expect("stdout is piped")
        .read_to_string(&mut out)
        .map_err(|e| format!("reading output: {e}"))?;
    let status = child.wait().map_err(|e| format!("waiting: {e}"))?;
    if !status.success() {
        return Err(format!("exited with {status}"));
    }
    let line = out.lines().next().unwrap_or("");
    parse_line(line).ok_or_else(|| format!("malformed output {line:?}"))
}

fn labeled(q: &Query, ms: f64, card: u64) -> LabeledQuery {
    LabeledQuery {
        query_id: q.id.clone(),
        sql: q.sql.clone(),
        execution_ms: ms,
        cardinality: card,
        class: String::new(),
        split: None,
    }
}

/// Labels every query from the given source. Executor and toy failures
/// drop the query with a warning; CSV mode requires every id.
pub fn acquire_labels(queries: &[Query], source: &LabelSource) -> Result<Vec<LabeledQuery>, WorkloadError> {
    match source {
        LabelSource::Csv(path) => {
            let mut r = csv::Reader::from_path(path)?;
            let headers = r.headers()?.clone();
            let col = |name: &str| {
                headers
                    .iter()
                    .position(|h| h == name)
                    .ok_or_else(|| WorkloadError::Dataset(format!("{} has no {name} column", path.display())))
            };
            let (ci, cm, cc) = (col("query_id")?, col("execution_ms")?, col("cardinality")?);
            let mut rows = BTreeMap::new();
            for (line, rec) in r.records().enumerate() {
                let rec = rec?;
                let bad = |what: &str| WorkloadError::Dataset(format!("{} row {}: bad {what}", path.display(), line + 2));
                let ms: f64 = rec[cm].trim().parse().map_err(|_| bad("execution_ms"))?;
                let card: u64 = rec[cc].trim().parse().map_err(|_| bad("cardinality"))?;
                if !ms.is_finite() || ms < 0.0 {
                    return Err(bad("execution_ms"));
                }
                rows.insert(rec[ci].to_string(), (ms, card));
            }
            let missing: Vec<String> = queries.iter().filter(|q| !rows.contains_key(&q.id)).map(|q| q.id.clone()).collect();
            if !missing.is_empty() {
                return Err(WorkloadError::MissingLabels(missing));
            }
            Ok(queries.iter().map(|q| labeled(q, rows[&q.id].0, rows[&q.id].1)).collect())
        }
        LabelSource::Executor(cmd) => {
            let results: Vec<Result<(f64, u64), String>> = queries.par_iter().map(|q| run_executor(cmd, &q.sql)).collect();
            Ok(queries
                .iter()
                .zip(results)
                .filter_map(|(q, r)| match r {
                    Ok((ms, card)) => Some(labeled(q, ms, card)),
                    Err(e) => {
                        log::warn!("dropping {}: executor {e}", q.id);
                        None
                    }
                })
                .collect())
        }
        LabelSource::Toy => Ok(queries
            .iter()
            .filter_map(|q| match toy_execute(&q.sql) {
                Some((ms, card)) => Some(labeled(q, ms, card)),
                None => {
                    log::warn!("dropping {}: query does not parse", q.id);
                    None
                }
            })
            .collect()),
    }
}

pub fn write_dataset<W: Write>(rows: &[LabeledQuery], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(DATASET_HEADER)?;
    for r in rows {
        w.write_record([
            r.query_id.as_str(),
            r.sql.as_str(),
            &r.execution_ms.to_string(),
            &r.cardinality.to_string(),
            r.class.as_str(),
            r.split.map(Split::as_str).unwrap_or(""),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_dataset<R: Read>(input: R) -> Result<Vec<LabeledQuery>, WorkloadError> {
    let mut r = csv::Reader::from_reader(input);
    if r.headers()?.iter().collect::<Vec<_>>() != DATASET_HEADER {
        return Err(WorkloadError::Dataset(format!(
            "dataset header must be {}",
            DATASET_HEADER.join(",")
        )));
    }
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let bad = |what: &str| WorkloadError::Dataset(format!("row {}: bad {what}", i + 2));
        let split = match &rec[5] {
            "" => None,
            s => Some(s.parse::<Split>().map_err(|_| bad("split"))?),
        };
        out.push(LabeledQuery {
            query_id: rec[0].to_string(),
            sql: rec[1].to_string(),
            execution_ms: rec[2].parse().map_err(|_| bad("execution_ms"))?,
            cardinality: rec[3].parse().map_err(|_| bad("cardinality"))?,
            class: rec[4].to_string(),
            split,
        });
    }
    Ok(out)
}
