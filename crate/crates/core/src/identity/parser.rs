//! Recursive-descent parser for the identity language.
//!
//! ```text
//! identity := expr "<=" expr quant* param*
//! quant    := ";" "forall" names ":" sort
//! param    := ";" "param" name ("=" INT)?
//! expr     := compexpr ("+" compexpr)*
//! compexpr := meetexpr (("o" | "o[" (INT | name) "]") meetexpr)*
//! meetexpr := atom ("&" atom)*
//! atom     := name | "conv(" expr ")" | "(" expr ")"
//! ```

use std::collections::HashSet;
use std::fmt;

use thiserror::Error;

use super::ast::{Count, IdentityAst, ParamDecl, RelExpr, Sort};

const KEYWORDS: &[&str] = &["o", "conv", "forall", "param"];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{column}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    Lexical(char),
    Unexpected { found: String, expected: &'static str },
    UnboundVariable(String),
    DuplicateVariable(String),
    UnknownSort(String),
    UndeclaredParameter(String),
    ParameterAsRelation(String),
    DuplicateParameter(String),
    ZeroCount,
    IntegerOverflow,
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseErrorKind::Lexical(c) => write!(f, "unexpected character `{c}`"),
            ParseErrorKind::Unexpected { found, expected } => {
                write!(f, "expected {expected}, found {found}")
            }
            ParseErrorKind::UnboundVariable(v) => write!(f, "variable `{v}` is not quantified"),
            ParseErrorKind::DuplicateVariable(v) => write!(f, "variable `{v}` quantified twice"),
            ParseErrorKind::UnknownSort(s) => write!(f, "unknown sort `{s}`"),
            ParseErrorKind::UndeclaredParameter(p) => write!(f, "parameter `{p}` is not declared"),
            ParseErrorKind::ParameterAsRelation(p) => {
                write!(f, "parameter `{p}` used outside a composition count")
            }
            ParseErrorKind::DuplicateParameter(p) => write!(f, "parameter `{p}` declared twice"),
            ParseErrorKind::ZeroCount => write!(f, "composition count must be at least 1"),
            ParseErrorKind::IntegerOverflow => write!(f, "integer too large"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Name(String),
    Int(String),
    Le,
    Amp,
    Plus,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Semi,
    Colon,
    Comma,
    Eq,
    End,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Name(n) => write!(f, "`{n}`"),
            Tok::Int(i) => write!(f, "`{i}`"),
            Tok::Le => f.write_str("`<=`"),
            Tok::Amp => f.write_str("`&`"),
            Tok::Plus => f.write_str("`+`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::LBracket => f.write_str("`[`"),
            Tok::RBracket => f.write_str("`]`"),
            Tok::Semi => f.write_str("`;`"),
            Tok::Colon => f.write_str("`:`"),
            Tok::Comma => f.write_str("`,`"),
            Tok::Eq => f.write_str("`=`"),
            Tok::End => f.write_str("end of input"),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    column: usize,
}

fn lex(text: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut line, mut column) = (1, 1);
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let (l, col) = (line, column);
        let mut advance = 1;
        let tok = match c {
            '\n' => {
                line += 1;
                column = 1;
                i += 1;
                continue;
            }
            c if c.is_whitespace() => None,
            '<' if chars.get(i + 1) == Some(&'=') => {
                advance = 2;
                Some(Tok::Le)
            }
            '&' => Some(Tok::Amp),
            '+' => Some(Tok::Plus),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            '[' => Some(Tok::LBracket),
            ']' => Some(Tok::RBracket),
            ';' => Some(Tok::Semi),
            ':' => Some(Tok::Colon),
            ',' => Some(Tok::Comma),
            '=' => Some(Tok::Eq),
            c if c.is_ascii_digit() => {
                let s: String = chars[i..].iter().take_while(|c| c.is_ascii_digit()).collect();
                advance = s.len();
                Some(Tok::Int(s))
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let s: String = chars[i..]
                    .iter()
                    .take_while(|c| c.is_ascii_alphanumeric() || **c == '_')
                    .collect();
                advance = s.len();
                Some(Tok::Name(s))
            }
            other => {
                return Err(ParseError {
                    line: l,
                    column: col,
                    kind: ParseErrorKind::Lexical(other),
                })
            }
        };
        if let Some(tok) = tok {
            out.push(Token {
                tok,
                line: l,
                column: col,
            });
        }
        i += advance;
        column += advance;
    }
    out.push(Token {
        tok: Tok::End,
        line,
        column,
    });
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    /// Positions of variable occurrences, for later binding checks.
    occurrences: Vec<(String, usize, usize)>,
    count_uses: Vec<(String, usize, usize)>,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn error_here(&self, kind: ParseErrorKind) -> ParseError {
        let t = &self.tokens[self.pos];
        ParseError {
            line: t.line,
            column: t.column,
            kind,
        }
    }

    fn unexpected(&self, expected: &'static str) -> ParseError {
        self.error_here(ParseErrorKind::Unexpected {
            found: self.peek().to_string(),
            expected,
        })
    }

    fn expect(&mut self, tok: Tok, expected: &'static str) -> Result<(), ParseError> {
        if *self.peek() == tok {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.unexpected(expected))
        }
    }

    fn is_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Name(n) if n == kw)
    }

    fn name(&mut self, expected: &'static str) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Name(n) if !KEYWORDS.contains(&n.as_str()) => {
                self.pos += 1;
                Ok(n)
            }
            _ => Err(self.unexpected(expected)),
        }
    }

    fn integer(&mut self) -> Result<usize, ParseError> {
        match self.peek().clone() {
            Tok::Int(s) => {
                let v = s
                    .parse()
                    .map_err(|_| self.error_here(ParseErrorKind::IntegerOverflow))?;
                self.pos += 1;
                Ok(v)
            }
            _ => Err(self.unexpected("an integer")),
        }
    }

    fn expr(&mut self) -> Result<RelExpr, ParseError> {
        let mut e = self.comp_expr()?;
        while *self.peek() == Tok::Plus {
            self.pos += 1;
            e = RelExpr::join(e, self.comp_expr()?);
        }
        Ok(e)
    }

    fn comp_expr(&mut self) -> Result<RelExpr, ParseError> {
        let mut e = self.meet_expr()?;
        while self.is_keyword("o") {
            self.pos += 1;
            if *self.peek() == Tok::LBracket {
                self.pos += 1;
                let count = match self.peek().clone() {
                    Tok::Int(_) => {
                        let k = self.integer()?;
                        if k == 0 {
                            self.pos -= 1;
                            return Err(self.error_here(ParseErrorKind::ZeroCount));
                        }
                        Count::Fixed(k)
                    }
                    Tok::Name(_) => {
                        let t = &self.tokens[self.pos];
                        let (line, column) = (t.line, t.column);
                        let p = self.name("a count")?;
                        self.count_uses.push((p.clone(), line, column));
                        Count::Param(p)
                    }
                    _ => return Err(self.unexpected("a count")),
                };
                self.expect(Tok::RBracket, "`]`")?;
                e = RelExpr::comp_k(e, self.meet_expr()?, count);
            } else {
                e = RelExpr::comp(e, self.meet_expr()?);
            }
        }
        Ok(e)
    }

    fn meet_expr(&mut self) -> Result<RelExpr, ParseError> {
        let mut e = self.atom()?;
        while *self.peek() == Tok::Amp {
            self.pos += 1;
            e = RelExpr::meet(e, self.atom()?);
        }
        Ok(e)
    }

    fn atom(&mut self) -> Result<RelExpr, ParseError> {
        match self.peek().clone() {
            Tok::LParen => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Tok::Name(n) if n == "conv" => {
                self.pos += 1;
                self.expect(Tok::LParen, "`(` after conv")?;
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(RelExpr::conv(e))
            }
            Tok::Name(_) => {
                let t = &self.tokens[self.pos];
                let (line, column) = (t.line, t.column);
                let n = self.name("a relation")?;
                self.occurrences.push((n.clone(), line, column));
                Ok(RelExpr::Var(n))
            }
            _ => Err(self.unexpected("a relation")),
        }
    }
}

pub fn parse_identity(text: &str) -> Result<IdentityAst, ParseError> {
    let mut p = Parser {
        tokens: lex(text)?,
        pos: 0,
        occurrences: Vec::new(),
        count_uses: Vec::new(),
    };
    let lhs = p.expr()?;
    p.expect(Tok::Le, "`<=`")?;
    let rhs = p.expr()?;

    let mut quantifiers: Vec<(String, Sort)> = Vec::new();
    let mut params: Vec<ParamDecl> = Vec::new();
    while *p.peek() == Tok::Semi {
        p.pos += 1;
        if p.is_keyword("forall") {
            if !params.is_empty() {
                return Err(p.unexpected("`param` (quantifiers come first)"));
            }
            p.pos += 1;
            let mut names = Vec::new();
            loop {
                let at = p.pos;
                let n = p.name("a variable name")?;
                if quantifiers.iter().any(|(q, _)| *q == n) || names.iter().any(|(q, _)| *q == n) {
                    p.pos = at;
                    return Err(p.error_here(ParseErrorKind::DuplicateVariable(n)));
                }
                names.push((n, at));
                if *p.peek() != Tok::Comma {
                    break;
                }
                p.pos += 1;
            }
            p.expect(Tok::Colon, "`:`")?;
            let sort_name = p.name("a sort")?;
            let sort = Sort::from_keyword(&sort_name).ok_or_else(|| {
                p.pos -= 1;
                p.error_here(ParseErrorKind::UnknownSort(sort_name.clone()))
            })?;
            quantifiers.extend(names.into_iter().map(|(n, _)| (n, sort)));
        } else if p.is_keyword("param") {
            p.pos += 1;
            let at = p.pos;
            let name = p.name("a parameter name")?;
            if params.iter().any(|q| q.name == name) {
                p.pos = at;
                return Err(p.error_here(ParseErrorKind::DuplicateParameter(name)));
            }
            let value = if *p.peek() == Tok::Eq {
                p.pos += 1;
                let v = p.integer()?;
                if v == 0 {
                    p.pos -= 1;
                    return Err(p.error_here(ParseErrorKind::ZeroCount));
                }
                Some(v)
            } else {
                None
            };
            params.push(ParamDecl { name, value });
        } else {
            return Err(p.unexpected("`forall` or `param`"));
        }
    }
    if *p.peek() != Tok::End {
        return Err(p.unexpected("`;` or end of input"));
    }

    let param_names: HashSet<&str> = params.iter().map(|q| q.name.as_str()).collect();
    for (v, line, column) in &p.occurrences {
        let kind = if param_names.contains(v.as_str()) {
            Some(ParseErrorKind::ParameterAsRelation(v.clone()))
        } else if !quantifiers.iter().any(|(q, _)| q == v) {
            Some(ParseErrorKind::UnboundVariable(v.clone()))
        } else {
            None
        };
        if let Some(kind) = kind {
            return Err(ParseError {
                line: *line,
                column: *column,
                kind,
            });
        }
    }
    for (c, line, column) in &p.count_uses {
        if !param_names.contains(c.as_str()) {
            return Err(ParseError {
                line: *line,
                column: *column,
                kind: ParseErrorKind::UndeclaredParameter(c.clone()),
            });
        }
    }
    if let Some((q, _)) = quantifiers.iter().find(|(q, _)| param_names.contains(q.as_str())) {
        return Err(ParseError {
            line: 1,
            column: 1,
            kind: ParseErrorKind::ParameterAsRelation(q.clone()),
        });
    }
    Ok(IdentityAst {
        lhs,
        rhs,
        quantifiers,
        params,
    })
}
