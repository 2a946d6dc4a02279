use std::fmt;

use super::{Position, SqlError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Keyword {
    Select,
    From,
    Where,
    And,
    Or,
    Like,
    Not,
    Group,
    Order,
    By,
    Having,
    Limit,
    Join,
    Union,
    Distinct,
    As,
    Count,
    Min,
    Max,
    Sum,
    Avg,
}

impl Keyword {
    pub fn lookup(word: &str) -> Option<Keyword> {
        let kw = match word.to_ascii_uppercase().as_str() {
            "SELECT" => Keyword::Select,
            "FROM" => Keyword::From,
            "WHERE" => Keyword::Where,
            "AND" => Keyword::And,
            "OR" => Keyword::Or,
            "LIKE" => Keyword::Like,
            "NOT" => Keyword::Not,
            "GROUP" => Keyword::Group,
            "ORDER" => Keyword::Order,
            "BY" => Keyword::By,
            "HAVING" => Keyword::Having,
            "LIMIT" => Keyword::Limit,
            "JOIN" => Keyword::Join,
            "UNION" => Keyword::Union,
            "DISTINCT" => Keyword::Distinct,
            "AS" => Keyword::As,
            "COUNT" => Keyword::Count,
            "MIN" => Keyword::Min,
            "MAX" => Keyword::Max,
            "SUM" => Keyword::Sum,
            "AVG" => Keyword::Avg,
            _ => return None,
        };
        Some(kw)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Keyword::Select => "SELECT",
            Keyword::From => "FROM",
            Keyword::Where => "WHERE",
            Keyword::And => "AND",
            Keyword::Or => "OR",
            Keyword::Like => "LIKE",
            Keyword::Not => "NOT",
            Keyword::Group => "GROUP",
            Keyword::Order => "ORDER",
            Keyword::By => "BY",
            Keyword::Having => "HAVING",
            Keyword::Limit => "LIMIT",
            Keyword::Join => "JOIN",
            Keyword::Union => "UNION",
            Keyword::Distinct => "DISTINCT",
            Keyword::As => "AS",
            Keyword::Count => "COUNT",
            Keyword::Min => "MIN",
            Keyword::Max => "MAX",
            Keyword::Sum => "SUM",
            Keyword::Avg => "AVG",
        }
    }
}

impl fmt::Display for Keyword {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenKind {
    Keyword(Keyword),
    Identifier,
    String,
    Integer,
    Decimal,
    /// Comparison operator: `=`, `<`, `>`, `<=`, `>=`, `<>`.
    Operator,
    Comma,
    LParen,
    RParen,
    Star,
    Semicolon,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub lexeme: String,
    /// Byte offset of the first character.
    pub offset: usize,
    pub position: Position,
}

impl Token {
    pub fn end(&self) -> usize {
        self.offset + self.lexeme.len()
    }

    pub fn is_keyword(&self, kw: Keyword) -> bool {
        self.kind == TokenKind::Keyword(kw)
    }
}

struct Cursor<'a> {
    src: &'a str,
    offset: usize,
    line: usize,
    column: usize,
}

impl<'a> Cursor<'a> {
    fn peek(&self) -> Option<char> {
        self.src[self.offset..].chars().next()
    }

    fn peek_second(&self) -> Option<char> {
        let mut it = self.src[self.offset..].chars();
        it.next();
        it.next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.offset += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn position(&self) -> Position {
        Position {
            line: self.line,
            column: self.column,
        }
    }
}

fn is_ident_start(c: char) -> bool {
    c.is_alphabetic() || c == '_'
}

fn is_ident_continue(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

/// Splits `sql` into tokens. Whitespace is skipped but every token keeps its
/// byte offset, so `&sql[t.offset..t.end()] == t.lexeme` for every token.
pub fn tokenize(sql: &str) -> Result<Vec<Token>, SqlError> {
    let mut cur = Cursor {
        src: sql,
        offset: 0,
        line: 1,
        column: 1,
    };
    let mut tokens = Vec::new();

    while let Some(c) = cur.peek() {
        if c.is_whitespace() {
            cur.bump();
            continue;
        }
        let start = cur.offset;
        let position = cur.position();
        let kind = if is_ident_start(c) {
            cur.bump();
            // Qualified names keep the dot inside one identifier token.
            loop {
                match cur.peek() {
                    Some(ch) if is_ident_continue(ch) => {
                        cur.bump();
                    }
                    Some('.') if cur.peek_second().is_some_and(is_ident_start) => {
                        cur.bump();
                    }
                    _ => break,
                }
            }
            match Keyword::lookup(&sql[start..cur.offset]) {
                Some(kw) => TokenKind::Keyword(kw),
                None => TokenKind::Identifier,
            }
        } else if c.is_ascii_digit() {
            while cur.peek().is_some_and(|ch| ch.is_ascii_digit()) {
                cur.bump();
            }
            if cur.peek() == Some('.') && cur.peek_second().is_some_and(|ch| ch.is_ascii_digit()) {
                cur.bump();
                while cur.peek().is_some_and(|ch| ch.is_ascii_digit()) {
                    cur.bump();
                }
                TokenKind::Decimal
            } else {
                TokenKind::Integer
            }
        } else if c == '\'' {
            cur.bump();
            loop {
                match cur.bump() {
                    None => {
                        return Err(SqlError::Lexical {
                            position,
                            message: "unterminated string literal".into(),
                        })
                    }
                    // '' is an escaped quote inside the literal
                    Some('\'') if cur.peek() == Some('\'') => {
                        cur.bump();
                    }
                    Some('\'') => break,
                    Some(_) => {}
                }
            }
            TokenKind::String
        } else {
            cur.bump();
            match c {
                ',' => TokenKind::Comma,
                '(' => TokenKind::LParen,
                ')' => TokenKind::RParen,
                '*' => TokenKind::Star,
                ';' => TokenKind::Semicolon,
                '=' => TokenKind::Operator,
                '<' => {
                    if matches!(cur.peek(), Some('=') | Some('>')) {
                        cur.bump();
                    }
                    TokenKind::Operator
                }
                '>' => {
                    if cur.peek() == Some('=') {
                        cur.bump();
                    }
                    TokenKind::Operator
                }
                other => {
                    return Err(SqlError::Lexical {
                        position,
                        message: format!("illegal character {other:?}"),
                    })
                }
            }
        };
        tokens.push(Token {
            kind,
            lexeme: sql[start..cur.offset].to_string(),
            offset: start,
            position,
        });
    }
    Ok(tokens)
}
