//! From parsed queries to capless pregroup diagrams.

use thiserror::Error;

use crate::diagram::DiagramError;

pub mod caps;
pub mod cfg;
pub mod pregroup;
pub mod reduce;

pub use caps::{remove_caps, word_sequence};
pub use cfg::{ast_to_cfg_diagram, CfgSpec};
pub use pregroup::{cfg_to_pregroup, check_grammatical, check_word_types, GrammarCheck, PregroupGrammarSpec};
pub use reduce::{reduce_to, reduction_diagram, Reduction};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GrammarError {
    #[error("encoding error: {0}")]
    Encoding(String),
    #[error("word {word:?} has no dictionary entry of type {ty}")]
    DictionaryMiss { word: String, ty: String },
    #[error("rule {rule} cannot reduce {from} to {to}")]
    RuleReduction { rule: String, from: String, to: String },
    #[error("cap with both legs on the diagram boundary")]
    IrreducibleCap,
    #[error("not a pregroup diagram: {0}")]
    NotPregroup(String),
    #[error("non-planar linkage: {0}")]
    NonPlanar(String),
    #[error(transparent)]
    Diagram(#[from] DiagramError),
}
