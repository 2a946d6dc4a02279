//! Context-free grammar diagrams of parsed queries.
//!
//! The diagram reads top-down from the start variable: every production
//! rule is a box from its variable to the tensor of its children, and every
//! terminal is a box from its category into the unit `I`.

use std::collections::BTreeSet;

use crate::diagram::{Diagram, DiagramBox, PregroupType};
use crate::sql::{Expr, QueryAst, SelectItem};

use super::GrammarError;

/// Grammar categories (objects of the CFG category).
pub mod cat {
    pub const QUERY: &str = "query";
    pub const SELECT_CLAUSE: &str = "select_clause";
    pub const KW_SELECT: &str = "kw_select";
    pub const RESULT_COLUMNS: &str = "result_columns";
    pub const RESULT_COLUMN: &str = "result_column";
    pub const FUNCTION_NAME: &str = "function_name";
    pub const LPAREN: &str = "lparen";
    pub const RPAREN: &str = "rparen";
    pub const COLUMN_NAME: &str = "column_name";
    pub const COMMA: &str = "comma";
    pub const FROM_CLAUSE: &str = "from_clause";
    pub const KW_FROM: &str = "kw_from";
    pub const TABLE_LIST: &str = "table_list";
    pub const TABLE_NAME: &str = "table_name";
    pub const WHERE_CLAUSE: &str = "where_clause";
    pub const KW_WHERE: &str = "kw_where";
    pub const EXPR: &str = "expr";
    pub const BINARY_EXPRESSION: &str = "binary_expression";
    pub const LITERAL_VALUE: &str = "literal_value";
}

/// Production rule names (box names of rule boxes).
pub mod rule {
    pub const SELECT_STMT: &str = "select-stmt";
    pub const SELECT_CLAUSE: &str = "select-clause";
    pub const RESULT_COLUMN_LIST: &str = "result-column-list";
    pub const RESULT_COLUMN: &str = "result-column";
    pub const AGGREGATE_FUNCTION: &str = "aggregate-function";
    pub const FROM_CLAUSE: &str = "from-clause";
    pub const TABLE_LIST: &str = "table-list";
    pub const WHERE_CLAUSE: &str = "where-clause";
    pub const BINARY_EXPRESSION: &str = "binary-expression";
    pub const COLUMN_EXPR: &str = "column-expr";
    pub const LITERAL_EXPR: &str = "literal-expr";

    pub const ALL: [&str; 11] = [
        SELECT_STMT,
        SELECT_CLAUSE,
        RESULT_COLUMN_LIST,
        RESULT_COLUMN,
        AGGREGATE_FUNCTION,
        FROM_CLAUSE,
        TABLE_LIST,
        WHERE_CLAUSE,
        BINARY_EXPRESSION,
        COLUMN_EXPR,
        LITERAL_EXPR,
    ];
}

/// A context-free grammar `(V, Σ, R, s)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CfgSpec {
    pub variables: BTreeSet<String>,
    pub terminals: BTreeSet<String>,
    pub rules: BTreeSet<(String, Vec<String>)>,
    pub start: String,
}

impl CfgSpec {
    pub fn validate(&self) -> Result<(), GrammarError> {
        if !self.variables.contains(&self.start) {
            return Err(GrammarError::Encoding(format!("start variable {:?} is not a variable", self.start)));
        }
        if let Some(t) = self.terminals.iter().find(|t| self.variables.contains(*t)) {
            return Err(GrammarError::Encoding(format!("{t:?} is both a variable and a terminal")));
        }
        for (head, body) in &self.rules {
            if !self.variables.contains(head) {
                return Err(GrammarError::Encoding(format!("rule head {head:?} is not a variable")));
            }
            if let Some(sym) = body.iter().find(|s| !self.variables.contains(*s) && !self.terminals.contains(*s)) {
                return Err(GrammarError::Encoding(format!("rule body symbol {sym:?} is undeclared")));
            }
        }
        Ok(())
    }

    /// The grammar realised by a CFG diagram: categories are variables,
    /// words are terminals and each rule box contributes `head -> body`
    /// (terminal boxes contribute `category -> word`).
    pub fn from_diagram(d: &Diagram) -> Result<CfgSpec, GrammarError> {
        let mut spec = CfgSpec {
            variables: BTreeSet::new(),
            terminals: BTreeSet::new(),
            rules: BTreeSet::new(),
            start: String::new(),
        };
        let [start] = d.dom().factors() else {
            return Err(GrammarError::Encoding(format!(
                "CFG diagram must start from one variable, got {}",
                d.dom()
            )));
        };
        spec.start = start.base.clone();
        for op in d.boxes() {
            let [head] = op.dom.factors() else {
                return Err(GrammarError::Encoding(format!("box {op} does not rewrite a single variable")));
            };
            spec.variables.insert(head.base.clone());
            if op.cod.is_empty() {
                spec.terminals.insert(op.name.clone());
                spec.rules.insert((head.base.clone(), vec![op.name.clone()]));
            } else {
                let body: Vec<String> = op.cod.factors().iter().map(|f| f.base.clone()).collect();
                spec.variables.extend(body.iter().cloned());
                spec.rules.insert((head.base.clone(), body));
            }
        }
        spec.validate()?;
        Ok(spec)
    }
}

/// Parse tree of a query; leaves are words under their category.
#[derive(Debug, Clone)]
struct Node {
    category: &'static str,
    kind: NodeKind,
}

#[derive(Debug, Clone)]
enum NodeKind {
    Rule { name: &'static str, children: Vec<Node> },
    Word(String),
}

fn word(category: &'static str, text: impl Into<String>) -> Node {
    Node {
        category,
        kind: NodeKind::Word(text.into()),
    }
}

fn rule(category: &'static str, name: &'static str, children: Vec<Node>) -> Node {
    Node {
        category,
        kind: NodeKind::Rule { name, children },
    }
}

fn separated(items: Vec<Node>) -> Vec<Node> {
    let mut out = Vec::with_capacity(items.len() * 2);
    for (i, item) in items.into_iter().enumerate() {
        if i > 0 {
            out.push(word(cat::COMMA, ","));
        }
        out.push(item);
    }
    out
}

fn expr_node(e: &Expr) -> Node {
    match e {
        Expr::Column(name) => rule(cat::EXPR, rule::COLUMN_EXPR, vec![word(cat::COLUMN_NAME, name.clone())]),
        Expr::Literal(lit) => rule(cat::EXPR, rule::LITERAL_EXPR, vec![word(cat::LITERAL_VALUE, lit.lexeme.clone())]),
        Expr::Compare { op, lhs, rhs, .. } => rule(
            cat::EXPR,
            rule::BINARY_EXPRESSION,
            vec![expr_node(lhs), word(cat::BINARY_EXPRESSION, op.as_str()), expr_node(rhs)],
        ),
        Expr::Logical { op, lhs, rhs } => rule(
            cat::EXPR,
            rule::BINARY_EXPRESSION,
            vec![expr_node(lhs), word(cat::BINARY_EXPRESSION, op.as_str()), expr_node(rhs)],
        ),
    }
}

fn query_tree(ast: &QueryAst) -> Result<Node, GrammarError> {
    if ast.select_items.is_empty() {
        return Err(GrammarError::Encoding("select list is empty".into()));
    }
    if ast.from_relations.is_empty() {
        return Err(GrammarError::Encoding("relation list is empty".into()));
    }
    let columns = ast
        .select_items
        .iter()
        .map(|item| match item {
            SelectItem::Column(name) => rule(cat::RESULT_COLUMN, rule::RESULT_COLUMN, vec![word(cat::COLUMN_NAME, name.clone())]),
            SelectItem::Aggregate { func, arg } => rule(
                cat::RESULT_COLUMN,
                rule::AGGREGATE_FUNCTION,
                vec![
                    word(cat::FUNCTION_NAME, func.as_str()),
                    word(cat::LPAREN, "("),
                    word(cat::COLUMN_NAME, arg.clone()),
                    word(cat::RPAREN, ")"),
                ],
            ),
        })
        .collect();
    let select = rule(
        cat::SELECT_CLAUSE,
        rule::SELECT_CLAUSE,
        vec![
            word(cat::KW_SELECT, "SELECT"),
            rule(cat::RESULT_COLUMNS, rule::RESULT_COLUMN_LIST, separated(columns)),
        ],
    );
    let tables = ast.from_relations.iter().map(|r| word(cat::TABLE_NAME, r.clone())).collect();
    let from = rule(
        cat::FROM_CLAUSE,
        rule::FROM_CLAUSE,
        vec![
            word(cat::KW_FROM, "FROM"),
            rule(cat::TABLE_LIST, rule::TABLE_LIST, separated(tables)),
        ],
    );
    let mut clauses = vec![select, from];
    if let Some(e) = &ast.where_expr {
        clauses.push(rule(
            cat::WHERE_CLAUSE,
            rule::WHERE_CLAUSE,
            vec![word(cat::KW_WHERE, "WHERE"), expr_node(e)],
        ));
    }
    Ok(rule(cat::QUERY, rule::SELECT_STMT, clauses))
}

/// Pre-order emission of rule boxes. `left` counts the frontier factors
/// to the left of `node`, which are all preterminals at that point.
fn emit_rules(node: &Node, left: &mut usize, d: &mut Diagram, words: &mut Vec<DiagramBox>) -> Result<(), GrammarError> {
    match &node.kind {
        NodeKind::Word(text) => {
            words.push(DiagramBox::new(
                text.clone(),
                PregroupType::base(node.category),
                PregroupType::unit(),
            ));
            *left += 1;
        }
        NodeKind::Rule { name, children } => {
            let cod = PregroupType::from_factors(children.iter().flat_map(|c| PregroupType::base(c.category).0));
            d.push(*left, DiagramBox::new(*name, PregroupType::base(node.category), cod))?;
            for child in children {
                emit_rules(child, left, d, words)?;
            }
        }
    }
    Ok(())
}

/// Builds the CFG diagram `query -> I` of a parsed query. Rule boxes come
/// first in pre-order; terminal boxes follow, last word first, so the
/// reversed diagram introduces words in query-text order.
pub fn ast_to_cfg_diagram(ast: &QueryAst) -> Result<Diagram, GrammarError> {
    let tree = query_tree(ast)?;
    let mut d = Diagram::id(PregroupType::base(cat::QUERY));
    let mut words = Vec::new();
    emit_rules(&tree, &mut 0, &mut d, &mut words)?;
    for (i, w) in words.into_iter().enumerate().rev() {
        d.push(i, w)?;
    }
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sql::parse;

    fn names(d: &Diagram) -> Vec<&str> {
        d.boxes().map(|b| b.name.as_str()).collect()
    }

    #[test]
    fn example_query_diagram() {
        let ast = parse("SELECT cat_name, favourite_food FROM cats WHERE cat_name = 'Whiskers';").unwrap();
        let d = ast_to_cfg_diagram(&ast).unwrap();
        d.validate().unwrap();
        assert_eq!(d.dom(), &PregroupType::base(cat::QUERY));
        assert!(d.cod().is_empty());
        let n = names(&d);
        for r in [rule::SELECT_CLAUSE, rule::FROM_CLAUSE, rule::WHERE_CLAUSE, rule::BINARY_EXPRESSION] {
            assert!(n.contains(&r), "missing {r}");
        }
        for w in [
            "cat_name",
            "favourite_food",
            "cats",
            "'Whiskers'",
            "=",
            "SELECT",
            "FROM",
            "WHERE",
            ",",
        ] {
            assert!(n.contains(&w), "missing {w}");
        }
        // the binary-expression rule has the shape expr ⊗ binary_expression ⊗ expr
        let bin = d.boxes().find(|b| b.name == rule::BINARY_EXPRESSION).unwrap();
        assert_eq!(bin.cod.to_string(), "expr@binary_expression@expr");
        assert_eq!(bin.dom.to_string(), "expr");
        // terminals: last word first
        let terminals: Vec<&str> = d.boxes().filter(|b| b.cod.is_empty()).map(|b| b.name.as_str()).collect();
        assert_eq!(terminals.first(), Some(&"'Whiskers'"));
        assert_eq!(terminals.last(), Some(&"SELECT"));
        let spec = CfgSpec::from_diagram(&d).unwrap();
        assert_eq!(spec.start, cat::QUERY);
        assert!(spec.terminals.contains("cats"));
    }

    #[test]
    fn optional_where() {
        let d = ast_to_cfg_diagram(&parse("SELECT a FROM t").unwrap()).unwrap();
        assert!(!names(&d).contains(&rule::WHERE_CLAUSE));
        let stmt = d.boxes().next().unwrap();
        assert_eq!(stmt.cod.to_string(), "select_clause@from_clause");
    }

    #[test]
    fn nested_binary_expressions() {
        let d = ast_to_cfg_diagram(&parse("SELECT a FROM t WHERE x = 1 AND y = 2").unwrap()).unwrap();
        let bins: Vec<usize> = d
            .layers()
            .iter()
            .enumerate()
            .filter(|(_, l)| l.op.name == rule::BINARY_EXPRESSION)
            .map(|(i, _)| i)
            .collect();
        // AND on the outside, one per comparison inside it
        assert_eq!(bins.len(), 3);
        let words: Vec<&str> = d
            .boxes()
            .filter(|b| b.dom.to_string() == cat::BINARY_EXPRESSION)
            .map(|b| b.name.as_str())
            .collect();
        assert_eq!(words, ["=", "AND", "="]);
    }

    #[test]
    fn invalid_cfg_spec() {
        let mut spec = CfgSpec::from_diagram(&ast_to_cfg_diagram(&parse("SELECT a FROM t").unwrap()).unwrap()).unwrap();
        spec.terminals.insert(cat::QUERY.into());
        assert!(spec.validate().is_err());
    }
}
