//! The functor from CFG diagrams to pregroup diagrams, and the
//! grammaticality check.

use std::collections::{BTreeMap, BTreeSet};

use crate::diagram::{Diagram, DiagramBox, FunctorSpec, PregroupType};
use crate::sql::QueryAst;

use super::cfg::{ast_to_cfg_diagram, cat, rule};
use super::reduce::{reduce_to, reduction_diagram, Reduction};
use super::{word_sequence, GrammarError};

pub const NOUN: &str = "n";
pub const SENTENCE: &str = "s";

/// A pregroup grammar `(B, Δ, s)` over `B = {n, s}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PregroupGrammarSpec {
    pub basic_types: BTreeSet<String>,
    pub dictionary: BTreeMap<String, BTreeSet<PregroupType>>,
    pub sentence_type: PregroupType,
}

impl Default for PregroupGrammarSpec {
    fn default() -> Self {
        PregroupGrammarSpec {
            basic_types: [NOUN, SENTENCE].into_iter().map(String::from).collect(),
            dictionary: BTreeMap::new(),
            sentence_type: PregroupType::base(SENTENCE),
        }
    }
}

impl PregroupGrammarSpec {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_word(&mut self, word: impl Into<String>, ty: PregroupType) {
        self.dictionary.entry(word.into()).or_default().insert(ty);
    }

    pub fn contains(&self, word: &str, ty: &PregroupType) -> bool {
        self.dictionary.get(word).is_some_and(|types| types.contains(ty))
    }

    /// The dictionary typing every word of the given queries.
    pub fn from_queries<'a>(queries: impl IntoIterator<Item = &'a QueryAst>) -> Result<Self, GrammarError> {
        let mut spec = Self::new();
        for q in queries {
            let d = ast_to_cfg_diagram(q)?;
            for (word, ty) in lexicon(&d)? {
                spec.add_word(word, ty);
            }
        }
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), GrammarError> {
        let foreign = |ty: &PregroupType| ty.factors().iter().find(|f| !self.basic_types.contains(&f.base)).cloned();
        if let Some(f) = foreign(&self.sentence_type) {
            return Err(GrammarError::Encoding(format!("sentence type uses unknown basic type {f}")));
        }
        for (word, types) in &self.dictionary {
            if let Some(f) = types.iter().find_map(foreign) {
                return Err(GrammarError::Encoding(format!("word {word:?} uses unknown basic type {f}")));
            }
        }
        Ok(())
    }
}

fn count_in(op: &DiagramBox, category: &str) -> usize {
    op.cod.factors().iter().filter(|f| f.base == category).count()
}

/// Object images for one query. SELECT carries one `n.l` per select item,
/// relation and WHERE predicate; keyword and punctuation categories vanish.
fn object_map(cfg: &Diagram) -> BTreeMap<String, PregroupType> {
    let mut items = 0;
    let mut relations = 0;
    let mut predicates = 0;
    for op in cfg.boxes() {
        match op.name.as_str() {
            rule::RESULT_COLUMN_LIST => items += count_in(op, cat::RESULT_COLUMN),
            rule::TABLE_LIST => relations += count_in(op, cat::TABLE_NAME),
            rule::SELECT_STMT => predicates += count_in(op, cat::WHERE_CLAUSE),
            _ => {}
        }
    }
    let n = PregroupType::base(NOUN);
    let s = PregroupType::base(SENTENCE);
    let n_l = n.left_adjoint();
    let mut map = BTreeMap::new();
    let mut put = |c: &str, ty: PregroupType| {
        map.insert(c.to_string(), ty);
    };
    put(cat::QUERY, s.clone());
    put(
        cat::KW_SELECT,
        s.tensor(&PregroupType::repeat(NOUN, -1, items + relations + predicates)),
    );
    put(
        cat::SELECT_CLAUSE,
        s.tensor(&PregroupType::repeat(NOUN, -1, relations + predicates)),
    );
    put(cat::RESULT_COLUMNS, PregroupType::repeat(NOUN, 0, items));
    put(cat::TABLE_LIST, PregroupType::repeat(NOUN, 0, relations));
    put(cat::FROM_CLAUSE, PregroupType::repeat(NOUN, 0, relations));
    for c in [
        cat::RESULT_COLUMN,
        cat::COLUMN_NAME,
        cat::TABLE_NAME,
        cat::EXPR,
        cat::LITERAL_VALUE,
        cat::WHERE_CLAUSE,
    ] {
        put(c, n.clone());
    }
    put(cat::BINARY_EXPRESSION, n.right_adjoint().tensor(&n).tensor(&n_l));
    put(cat::FUNCTION_NAME, n.tensor(&n_l));
    for c in [cat::COMMA, cat::KW_FROM, cat::KW_WHERE, cat::LPAREN, cat::RPAREN] {
        put(c, PregroupType::unit());
    }
    map
}

fn cfg_functor(cfg: &Diagram, spec: Option<&PregroupGrammarSpec>) -> Result<FunctorSpec, GrammarError> {
    let mut f = FunctorSpec::new();
    f.object_map = object_map(cfg);
    for op in cfg.boxes() {
        let reversed = op.dagger();
        if reversed.dom.is_empty() {
            let [category] = reversed.cod.factors() else {
                return Err(GrammarError::Encoding(format!("terminal box {op} has no single category")));
            };
            let ty = f.map_type(&PregroupType(vec![category.clone()]))?;
            let image = if ty.is_empty() {
                Diagram::id(ty)
            } else {
                if let Some(spec) = spec {
                    if !spec.contains(&op.name, &ty) {
                        return Err(GrammarError::DictionaryMiss {
                            word: op.name.clone(),
                            ty: ty.to_string(),
                        });
                    }
                }
                Diagram::from_box(DiagramBox::word(op.name.clone(), ty))
            };
            f.map_box(reversed, image)?;
        } else {
            let from = f.map_type(&reversed.dom)?;
            let to = f.map_type(&reversed.cod)?;
            let image = reduction_diagram(&from, &to).ok_or_else(|| GrammarError::RuleReduction {
                rule: op.name.clone(),
                from: from.to_string(),
                to: to.to_string(),
            })?;
            f.map_box(reversed, image)?;
        }
    }
    Ok(f)
}

/// Words of a CFG diagram with their pregroup types, in text order.
fn lexicon(cfg: &Diagram) -> Result<Vec<(String, PregroupType)>, GrammarError> {
    let f = cfg_functor(cfg, None)?;
    let d = f.apply(&cfg.dagger())?;
    word_sequence(&d)
}

/// Maps a CFG diagram produced by [`ast_to_cfg_diagram`] to its pregroup
/// diagram: words in text order followed by the cups of every rule.
pub fn cfg_to_pregroup(d: &Diagram, spec: &PregroupGrammarSpec) -> Result<Diagram, GrammarError> {
    if d.dom() != &PregroupType::base(cat::QUERY) || !d.cod().is_empty() {
        return Err(GrammarError::Encoding(format!(
            "expected a CFG diagram {} -> I, got {} -> {}",
            cat::QUERY,
            d.dom(),
            d.cod()
        )));
    }
    let f = cfg_functor(d, Some(spec))?;
    Ok(f.apply(&d.dagger())?)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrammarCheck {
    pub grammatical: bool,
    pub words: Vec<(String, PregroupType)>,
    /// Contraction steps over the concatenated word types, when grammatical.
    pub witness: Option<Reduction>,
}

pub fn check_word_types(types: &[PregroupType], sentence: &PregroupType) -> Option<Reduction> {
    let all: Vec<_> = types.iter().flat_map(|t| t.0.iter().cloned()).collect();
    reduce_to(&all, sentence.factors())
}

/// Decides whether the words of `d`, typed as in `d`, form a sentence of
/// the grammar. Words whose type is not in the dictionary fail the check.
pub fn check_grammatical(d: &Diagram, spec: &PregroupGrammarSpec) -> GrammarCheck {
    let Ok(words) = word_sequence(d) else {
        return GrammarCheck {
            grammatical: false,
            words: Vec::new(),
            witness: None,
        };
    };
    let known = words.iter().all(|(w, ty)| spec.contains(w, ty));
    let types: Vec<PregroupType> = words.iter().map(|(_, t)| t.clone()).collect();
    let witness = if known {
        check_word_types(&types, &spec.sentence_type)
    } else {
        None
    };
    GrammarCheck {
        grammatical: witness.is_some(),
        words,
        witness,
    }
}
