use super::ast::{AggregateFn, CompareOp, Expr, Literal, LiteralKind, LogicalOp, QueryAst, SelectItem};
use super::lexer::{tokenize, Keyword, Token, TokenKind};
use super::{Position, SqlError};

struct Parser<'a> {
    tokens: &'a [Token],
    pos: usize,
    eof: Position,
}

fn end_position(sql: &str) -> Position {
    let mut p = Position { line: 1, column: 1 };
    for c in sql.chars() {
        if c == '\n' {
            p.line += 1;
            p.column = 1;
        } else {
            p.column += 1;
        }
    }
    p
}

fn unsupported_clause(tok: &Token) -> Option<&'static str> {
    let TokenKind::Keyword(kw) = tok.kind else {
        return None;
    };
    Some(match kw {
        Keyword::Group => "GROUP BY",
        Keyword::Order => "ORDER BY",
        Keyword::Having => "HAVING",
        Keyword::Limit => "LIMIT",
        Keyword::Join => "JOIN",
        Keyword::Union => "UNION",
        Keyword::Distinct => "DISTINCT",
        Keyword::Not => "NOT",
        Keyword::As => "AS",
        Keyword::Select => "nested SELECT",
        _ => return None,
    })
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&'a Token> {
        self.tokens.get(self.pos)
    }

    fn here(&self) -> Position {
        self.peek().map_or(self.eof, |t| t.position)
    }

    fn next(&mut self) -> Option<&'a Token> {
        let t = self.tokens.get(self.pos);
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn syntax(&self, message: impl Into<String>) -> SqlError {
        SqlError::Syntax {
            position: self.here(),
            message: message.into(),
        }
    }

    fn found(&self) -> String {
        match self.peek() {
            Some(t) => format!("{:?}", t.lexeme),
            None => "end of input".to_string(),
        }
    }

    /// Rejects clauses outside the SELECT-FROM-WHERE fragment with a
    /// dedicated error instead of a generic syntax error.
    fn check_unsupported(&self) -> Result<(), SqlError> {
        if let Some(tok) = self.peek() {
            if let Some(feature) = unsupported_clause(tok) {
                return Err(SqlError::Unsupported {
                    position: tok.position,
                    feature: feature.to_string(),
                });
            }
            if tok.kind == TokenKind::Star {
                return Err(SqlError::Unsupported {
                    position: tok.position,
                    feature: "*".to_string(),
                });
            }
        }
        Ok(())
    }

    fn eat(&mut self, kind: TokenKind) -> bool {
        if self.peek().is_some_and(|t| t.kind == kind) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_keyword(&mut self, kw: Keyword) -> Result<(), SqlError> {
        if self.eat(TokenKind::Keyword(kw)) {
            return Ok(());
        }
        self.check_unsupported()?;
        Err(self.syntax(format!("expected {kw}, found {}", self.found())))
    }

    fn identifier(&mut self, what: &str) -> Result<String, SqlError> {
        self.check_unsupported()?;
        match self.peek() {
            Some(t) if t.kind == TokenKind::Identifier => {
                self.pos += 1;
                Ok(t.lexeme.clone())
            }
            _ => Err(self.syntax(format!("expected {what}, found {}", self.found()))),
        }
    }

    fn query(&mut self) -> Result<QueryAst, SqlError> {
        self.expect_keyword(Keyword::Select)?;
        let mut select_items = vec![self.select_item()?];
        while self.eat(TokenKind::Comma) {
            select_items.push(self.select_item()?);
        }
        self.expect_keyword(Keyword::From)?;
        let mut from_relations = vec![self.identifier("relation name")?];
        while self.eat(TokenKind::Comma) {
            from_relations.push(self.identifier("relation name")?);
        }
        let where_expr = if self.eat(TokenKind::Keyword(Keyword::Where)) {
            Some(self.expr()?)
        } else {
            None
        };
        self.eat(TokenKind::Semicolon);
        if self.peek().is_some() {
            self.check_unsupported()?;
            return Err(self.syntax(format!("unexpected {}", self.found())));
        }
        Ok(QueryAst {
            select_items,
            from_relations,
            where_expr,
        })
    }

    fn select_item(&mut self) -> Result<SelectItem, SqlError> {
        self.check_unsupported()?;
        let func = match self.peek().map(|t| t.kind) {
            Some(TokenKind::Keyword(Keyword::Count)) => AggregateFn::Count,
            Some(TokenKind::Keyword(Keyword::Min)) => AggregateFn::Min,
            Some(TokenKind::Keyword(Keyword::Max)) => AggregateFn::Max,
            Some(TokenKind::Keyword(Keyword::Sum)) => AggregateFn::Sum,
            Some(TokenKind::Keyword(Keyword::Avg)) => AggregateFn::Avg,
            _ => return Ok(SelectItem::Column(self.identifier("attribute name")?)),
        };
        self.pos += 1;
        if !self.eat(TokenKind::LParen) {
            return Err(self.syntax(format!("expected '(', found {}", self.found())));
        }
        let arg = self.identifier("attribute name")?;
        if !self.eat(TokenKind::RParen) {
            return Err(self.syntax(format!("expected ')', found {}", self.found())));
        }
        Ok(SelectItem::Aggregate { func, arg })
    }

    fn expr(&mut self) -> Result<Expr, SqlError> {
        let mut lhs = self.conjunction()?;
        while self.eat(TokenKind::Keyword(Keyword::Or)) {
            let rhs = self.conjunction()?;
            lhs = Expr::logical(LogicalOp::Or, lhs, rhs);
        }
        Ok(lhs)
    }

    fn conjunction(&mut self) -> Result<Expr, SqlError> {
        let mut lhs = self.comparison()?;
        while self.eat(TokenKind::Keyword(Keyword::And)) {
            let rhs = self.comparison()?;
            lhs = Expr::logical(LogicalOp::And, lhs, rhs);
        }
        Ok(lhs)
    }

    fn comparison(&mut self) -> Result<Expr, SqlError> {
        let lhs = self.primary()?;
        let op = match self.peek() {
            Some(t) if t.kind == TokenKind::Operator || t.is_keyword(Keyword::Like) => {
                CompareOp::from_lexeme(&t.lexeme).expect("lexer only emits known operators")
            }
            _ => return Ok(lhs),
        };
        self.pos += 1;
        let rhs = self.primary()?;
        Ok(Expr::compare(op, lhs, rhs))
    }

    fn primary(&mut self) -> Result<Expr, SqlError> {
        self.check_unsupported()?;
        let Some(tok) = self.peek() else {
            return Err(self.syntax("expected expression, found end of input"));
        };
        let lit = |kind| {
            Expr::Literal(Literal {
                kind,
                lexeme: tok.lexeme.clone(),
            })
        };
        let e = match tok.kind {
            TokenKind::Identifier => Expr::Column(tok.lexeme.clone()),
            TokenKind::String => lit(LiteralKind::String),
            TokenKind::Integer => lit(LiteralKind::Integer),
            TokenKind::Decimal => lit(LiteralKind::Decimal),
            TokenKind::LParen => {
                self.pos += 1;
                let inner = self.expr()?;
                if !self.eat(TokenKind::RParen) {
                    return Err(self.syntax(format!("expected ')', found {}", self.found())));
                }
                return Ok(inner);
            }
            _ => return Err(self.syntax(format!("expected expression, found {}", self.found()))),
        };
        self.next();
        Ok(e)
    }
}

/// Parses one SELECT-FROM-WHERE statement.
pub fn parse(sql: &str) -> Result<QueryAst, SqlError> {
    let tokens = tokenize(sql)?;
    let mut parser = Parser {
        tokens: &tokens,
        pos: 0,
        eof: end_position(sql),
    };
    parser.query()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sql::ast::PredicateClass;

    fn col(s: &str) -> Expr {
        Expr::Column(s.into())
    }

    #[test]
    fn example_query() {
        let ast = parse("SELECT cat_name, favourite_food FROM cats WHERE cat_name = 'Whiskers';").unwrap();
        assert_eq!(
            ast.select_items,
            vec![SelectItem::Column("cat_name".into()), SelectItem::Column("favourite_food".into())]
        );
        assert_eq!(ast.from_relations, vec!["cats".to_string()]);
        let expected = Expr::Compare {
            op: CompareOp::Eq,
            class: PredicateClass::Filtering,
            lhs: Box::new(col("cat_name")),
            rhs: Box::new(Expr::Literal(Literal {
                kind: LiteralKind::String,
                lexeme: "'Whiskers'".into(),
            })),
        };
        assert_eq!(ast.where_expr, Some(expected));
    }

    #[test]
    fn minimal_query_has_no_where() {
        let ast = parse("SELECT a FROM t").unwrap();
        assert!(ast.where_expr.is_none());
        assert_eq!(ast.to_string(), "SELECT a FROM t");
    }

    #[test]
    fn attribute_pairs_are_joining() {
        let ast = parse("SELECT a FROM t, u WHERE t.x = u.y").unwrap();
        match ast.where_expr.unwrap() {
            Expr::Compare { class, lhs, rhs, .. } => {
                assert_eq!(class, PredicateClass::Joining);
                assert_eq!(*lhs, col("t.x"));
                assert_eq!(*rhs, col("u.y"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn precedence() {
        let ast = parse("SELECT a FROM t WHERE x = 1 OR y = 2 AND z = 3").unwrap();
        let Some(Expr::Logical {
            op: LogicalOp::Or, rhs, ..
        }) = ast.where_expr
        else {
            panic!("OR should be the root");
        };
        assert!(matches!(*rhs, Expr::Logical { op: LogicalOp::And, .. }));

        let ast = parse("select a from t where (x = 1 or y = 2) and z = 3").unwrap();
        let Some(Expr::Logical {
            op: LogicalOp::And, lhs, ..
        }) = &ast.where_expr
        else {
            panic!("AND should be the root");
        };
        assert!(matches!(**lhs, Expr::Logical { op: LogicalOp::Or, .. }));
        assert_eq!(ast.to_string(), "SELECT a FROM t WHERE (x = 1 OR y = 2) AND z = 3");
    }

    #[test]
    fn print_keeps_right_nesting() {
        let sql = "SELECT a FROM t WHERE x = 1 AND (y = 2 AND z LIKE '%q%')";
        let ast = parse(sql).unwrap();
        assert_eq!(parse(&ast.to_string()).unwrap(), ast);
        assert_eq!(ast.to_string(), sql);
    }

    #[test]
    fn aggregates_and_case() {
        let ast = parse("select count(id), Max(t.year) FROM Title").unwrap();
        assert_eq!(
            ast.select_items,
            vec![
                SelectItem::Aggregate {
                    func: AggregateFn::Count,
                    arg: "id".into()
                },
                SelectItem::Aggregate {
                    func: AggregateFn::Max,
                    arg: "t.year".into()
                },
            ]
        );
        assert_eq!(ast.from_relations, vec!["Title".to_string()]);
    }

    #[test]
    fn missing_from() {
        let err = parse("SELECT a WHERE a = 1").unwrap_err();
        assert!(
            matches!(
                err,
                SqlError::Syntax {
                    position: Position { line: 1, column: 10 },
                    ..
                }
            ),
            "{err}"
        );
        assert!(matches!(parse("SELECT a").unwrap_err(), SqlError::Syntax { .. }));
    }

    #[test]
    fn unsupported_clauses() {
        let cases = [
            ("SELECT a FROM t GROUP BY a", "GROUP BY"),
            ("SELECT a FROM t WHERE a = 1 ORDER BY a", "ORDER BY"),
            ("SELECT a FROM t WHERE a = (SELECT b FROM u)", "nested SELECT"),
            ("SELECT * FROM t", "*"),
        ];
        for (sql, feature) in cases {
            match parse(sql) {
                Err(SqlError::Unsupported { feature: f, .. }) => assert_eq!(f, feature, "{sql}"),
                other => panic!("{sql}: {other:?}"),
            }
        }
    }

    #[test]
    fn error_positions_are_one_based() {
        let err = parse("SELECT a\nFROM t\nWHERE a =").unwrap_err();
        assert_eq!(err.position(), Position { line: 3, column: 10 });
    }
}
