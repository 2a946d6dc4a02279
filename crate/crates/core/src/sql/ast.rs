use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AggregateFn {
    Count,
    Min,
    Max,
    Sum,
    Avg,
}

impl AggregateFn {
    pub fn as_str(self) -> &'static str {
        match self {
            AggregateFn::Count => "COUNT",
            AggregateFn::Min => "MIN",
            AggregateFn::Max => "MAX",
            AggregateFn::Sum => "SUM",
            AggregateFn::Avg => "AVG",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SelectItem {
    Column(String),
    Aggregate { func: AggregateFn, arg: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LiteralKind {
    String,
    Integer,
    Decimal,
}

/// A literal together with its exact source lexeme (quotes included).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Literal {
    pub kind: LiteralKind,
    pub lexeme: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CompareOp {
    Eq,
    Lt,
    Gt,
    LtEq,
    GtEq,
    NotEq,
    Like,
}

impl CompareOp {
    pub fn from_lexeme(s: &str) -> Option<CompareOp> {
        Some(match s {
            "=" => CompareOp::Eq,
            "<" => CompareOp::Lt,
            ">" => CompareOp::Gt,
            "<=" => CompareOp::LtEq,
            ">=" => CompareOp::GtEq,
            "<>" => CompareOp::NotEq,
            _ if s.eq_ignore_ascii_case("LIKE") => CompareOp::Like,
            _ => return None,
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            CompareOp::Eq => "=",
            CompareOp::Lt => "<",
            CompareOp::Gt => ">",
            CompareOp::LtEq => "<=",
            CompareOp::GtEq => ">=",
            CompareOp::NotEq => "<>",
            CompareOp::Like => "LIKE",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LogicalOp {
    And,
    Or,
}

impl LogicalOp {
    pub fn as_str(self) -> &'static str {
        match self {
            LogicalOp::And => "AND",
            LogicalOp::Or => "OR",
        }
    }
}

/// Filtering predicates compare an attribute against a literal, joining
/// predicates compare two attributes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PredicateClass {
    Filtering,
    Joining,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Expr {
    Column(String),
    Literal(Literal),
    Compare {
        op: CompareOp,
        class: PredicateClass,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    Logical {
        op: LogicalOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
}

impl Expr {
    pub fn compare(op: CompareOp, lhs: Expr, rhs: Expr) -> Expr {
        let class = match (&lhs, &rhs) {
            (Expr::Column(_), Expr::Column(_)) => PredicateClass::Joining,
            _ => PredicateClass::Filtering,
        };
        Expr::Compare {
            op,
            class,
            lhs: Box::new(lhs),
            rhs: Box::new(rhs),
        }
    }

    pub fn logical(op: LogicalOp, lhs: Expr, rhs: Expr) -> Expr {
        Expr::Logical {
            op,
            lhs: Box::new(lhs),
            rhs: Box::new(rhs),
        }
    }

    // Higher binds tighter.
    fn precedence(&self) -> u8 {
        match self {
            Expr::Column(_) | Expr::Literal(_) => 4,
            Expr::Compare { .. } => 3,
            Expr::Logical { op: LogicalOp::And, .. } => 2,
            Expr::Logical { op: LogicalOp::Or, .. } => 1,
        }
    }

    /// Number of comparison nodes in the tree.
    pub fn predicate_count(&self) -> usize {
        match self {
            Expr::Column(_) | Expr::Literal(_) => 0,
            Expr::Compare { .. } => 1,
            Expr::Logical { lhs, rhs, .. } => lhs.predicate_count() + rhs.predicate_count(),
        }
    }

    pub fn joining_count(&self) -> usize {
        match self {
            Expr::Column(_) | Expr::Literal(_) => 0,
            Expr::Compare { class, .. } => usize::from(*class == PredicateClass::Joining),
            Expr::Logical { lhs, rhs, .. } => lhs.joining_count() + rhs.joining_count(),
        }
    }
}

fn write_operand(f: &mut fmt::Formatter<'_>, child: &Expr, parent: u8, right: bool) -> fmt::Result {
    // Operators are left-associative, so an equal-precedence right child
    // needs parentheses to keep its shape.
    let needs = child.precedence() < parent || (right && child.precedence() == parent);
    if needs {
        write!(f, "({child})")
    } else {
        write!(f, "{child}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Column(name) => f.write_str(name),
            Expr::Literal(lit) => f.write_str(&lit.lexeme),
            Expr::Compare { op, lhs, rhs, .. } => {
                write_operand(f, lhs, self.precedence(), false)?;
                write!(f, " {} ", op.as_str())?;
                write_operand(f, rhs, self.precedence(), true)
            }
            Expr::Logical { op, lhs, rhs } => {
                write_operand(f, lhs, self.precedence(), false)?;
                write!(f, " {} ", op.as_str())?;
                write_operand(f, rhs, self.precedence(), true)
            }
        }
    }
}

impl fmt::Display for SelectItem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SelectItem::Column(name) => f.write_str(name),
            SelectItem::Aggregate { func, arg } => write!(f, "{}({arg})", func.as_str()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct QueryAst {
    pub select_items: Vec<SelectItem>,
    pub from_relations: Vec<String>,
    pub where_expr: Option<Expr>,
}

/// Prints the query back as SQL; the output parses to an equal AST.
impl fmt::Display for QueryAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("SELECT ")?;
        for (i, item) in self.select_items.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{item}")?;
        }
        f.write_str(" FROM ")?;
        f.write_str(&self.from_relations.join(", "))?;
        if let Some(expr) = &self.where_expr {
            write!(f, " WHERE {expr}")?;
        }
        Ok(())
    }
}
