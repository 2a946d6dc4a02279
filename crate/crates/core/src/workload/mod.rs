//! Synthetic query generation, label acquisition and dataset splits.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sql::{self, tokenize, CompareOp, TokenKind};

mod labels;
mod split;

pub use labels::{acquire_labels, read_dataset, toy_execute, write_dataset, LabelSource, LabeledQuery, Query, DATASET_HEADER};
pub use split::{default_ratios, split_dataset, Split};

#[derive(Debug, Error)]
pub enum WorkloadError {
    #[error("invalid seed: {0}")]
    Seed(String),
    #[error("seed format error at {0}")]
    SeedFormat(String),
    #[error("label CSV has no row for query ids {0:?}")]
    MissingLabels(Vec<String>),
    #[error("invalid split ratios {0:?}")]
    Ratios([f64; 3]),
    #[error("dataset error: {0}")]
    Dataset(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttrType {
    Int,
    Text,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Attribute {
    pub name: String,
    #[serde(rename = "type")]
    pub ty: AttrType,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Relation {
    pub name: String,
    pub attributes: Vec<Attribute>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredicateTemplate {
    pub attribute: String,
    pub operator: String,
    pub literals: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JoinTemplate {
    pub left: String,
    pub right: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Limits {
    pub max_relations: usize,
    pub max_predicates: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedSpec {
    pub relations: Vec<Relation>,
    #[serde(default)]
    pub predicates: Vec<PredicateTemplate>,
    #[serde(default)]
    pub joins: Vec<JoinTemplate>,
    /// Aggregate functions that may replace the projection list.
    #[serde(default)]
    pub aggregates: Vec<String>,
    pub limits: Limits,
}

/// A JOB-like seed over a subset of the IMDB schema.
pub const BUNDLED_SEED: &str = include_str!("job_seed.json");

impl SeedSpec {
    pub fn bundled() -> SeedSpec {
        SeedSpec::from_json(BUNDLED_SEED).expect("bundled seed is valid")
    }

    pub fn from_json(text: &str) -> Result<SeedSpec, WorkloadError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let seed: SeedSpec =
            serde_path_to_error::deserialize(de).map_err(|e| WorkloadError::SeedFormat(format!("{}: {}", e.path(), e.inner())))?;
        seed.validate()?;
        Ok(seed)
    }

    fn owner(&self) -> BTreeMap<&str, &str> {
        self.relations
            .iter()
            .flat_map(|r| r.attributes.iter().map(move |a| (a.name.as_str(), r.name.as_str())))
            .collect()
    }

    pub fn validate(&self) -> Result<(), WorkloadError> {
        let bad = |m: String| Err(WorkloadError::Seed(m));
        if self.relations.is_empty() {
            return bad("no relations".into());
        }
        if self.limits.max_relations == 0 {
            return bad("max_relations must be at least 1".into());
        }
        let names: BTreeSet<&str> = self.relations.iter().map(|r| r.name.as_str()).collect();
        if names.len() != self.relations.len() {
            return bad("duplicate relation name".into());
        }
        if let Some(r) = self.relations.iter().find(|r| r.attributes.is_empty()) {
            return bad(format!("relation {} has no attributes", r.name));
        }
        let owner = self.owner();
        for p in &self.predicates {
            if !owner.contains_key(p.attribute.as_str()) {
                return bad(format!("predicate attribute {} is not in any relation", p.attribute));
            }
            if CompareOp::from_lexeme(&p.operator).is_none() {
                return bad(format!("unknown operator {:?}", p.operator));
            }
            if p.literals.is_empty() {
                return bad(format!("predicate on {} has an empty literal pool", p.attribute));
            }
            for lit in &p.literals {
                let ok = matches!(tokenize(lit).as_deref(), Ok([t]) if matches!(t.kind, TokenKind::String | TokenKind::Integer | TokenKind::Decimal));
                if !ok {
                    return bad(format!("{lit:?} is not a single SQL literal"));
                }
            }
        }
        for j in &self.joins {
            for a in [&j.left, &j.right] {
                if !owner.contains_key(a.as_str()) {
                    return bad(format!("join attribute {a} is not in any relation"));
                }
            }
        }
        for f in &self.aggregates {
            if !["COUNT", "MIN", "MAX", "SUM", "AVG"].contains(&f.as_str()) {
                return bad(format!("unknown aggregate {f:?}"));
            }
        }
        Ok(())
    }
}

fn one_query<R: Rng>(seed: &SeedSpec, rng: &mut R) -> String {
    let owner = seed.owner();
    let joined = |a: &str, b: &str| {
        seed.joins.iter().any(|j| {
            (owner[j.left.as_str()] == a && owner[j.right.as_str()] == b) || (owner[j.left.as_str()] == b && owner[j.right.as_str()] == a)
        })
    };
    let n_rel = rng.gen_range(1..=seed.limits.max_relations.min(seed.relations.len()));
    let mut chosen: Vec<&Relation> = vec![&seed.relations[rng.gen_range(0..seed.relations.len())]];
    while chosen.len() < n_rel {
        let rest: Vec<&Relation> = seed.relations.iter().filter(|r| !chosen.iter().any(|c| c.name == r.name)).collect();
        let linked: Vec<&Relation> = rest
            .iter()
            .copied()
            .filter(|r| chosen.iter().any(|c| joined(&c.name, &r.name)))
            .collect();
        let pool = if linked.is_empty() { rest } else { linked };
        chosen.push(pool[rng.gen_range(0..pool.len())]);
    }
    let present = |attr: &str| chosen.iter().any(|r| r.name == owner[attr]);

    let mut preds: Vec<String> = seed
        .joins
        .iter()
        .filter(|j| present(&j.left) && present(&j.right))
        .map(|j| format!("{} = {}", j.left, j.right))
        .take(seed.limits.max_predicates)
        .collect();
    let mut filters: Vec<&PredicateTemplate> = seed.predicates.iter().filter(|p| present(&p.attribute)).collect();
    let room = seed.limits.max_predicates.saturating_sub(preds.len()).min(filters.len());
    let n_filters = rng.gen_range(0..=room);
    filters.shuffle(rng);
    for p in &filters[..n_filters] {
        let lit = &p.literals[rng.gen_range(0..p.literals.len())];
        preds.push(format!("{} {} {lit}", p.attribute, p.operator));
    }

    let attrs: Vec<&str> = chosen.iter().flat_map(|r| r.attributes.iter().map(|a| a.name.as_str())).collect();
    let projection = if !seed.aggregates.is_empty() && rng.gen_bool(0.3) {
        let f = &seed.aggregates[rng.gen_range(0..seed.aggregates.len())];
        format!("{f}({})", attrs[rng.gen_range(0..attrs.len())])
    } else {
        let k = rng.gen_range(1..=attrs.len().min(2));
        let mut picked: Vec<&str> = attrs.choose_multiple(rng, k).copied().collect();
        picked.sort_by_key(|a| attrs.iter().position(|b| b == a));
        picked.join(", ")
    };

    let from: Vec<&str> = chosen.iter().map(|r| r.name.as_str()).collect();
    let mut sql = format!("SELECT {projection} FROM {}", from.join(", "));
    if !preds.is_empty() {
        sql.push_str(" WHERE ");
        for (i, p) in preds.iter().enumerate() {
            if i > 0 {
                // an occasional disjunction between filters
                let or = i >= 2 && rng.gen_bool(0.1);
                sql.push_str(if or { " OR " } else { " AND " });
            }
            sql.push_str(p);
        }
    }
    sql
}

/// Up to `count` distinct queries (by normalized SQL text). Fewer are
/// returned, with a warning, when the seed cannot produce that many.
pub fn generate_queries<R: Rng>(seed: &SeedSpec, count: usize, rng: &mut R) -> Result<Vec<String>, WorkloadError> {
    seed.validate()?;
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(count);
    let budget = 100 * count + 100;
    let mut attempts = 0;
    while out.len() < count && attempts < budget {
        attempts += 1;
        let text = one_query(seed, rng);
        let ast = sql::parse(&text).map_err(|e| WorkloadError::Seed(format!("generated {text:?} does not parse: {e}")))?;
        let normalized = ast.to_string();
        if seen.insert(normalized.clone()) {
            out.push(normalized);
        }
    }
    if out.len() < count {
        log::warn!("seed yields only {} distinct queries of the {count} requested", out.len());
    }
    Ok(out)
}
