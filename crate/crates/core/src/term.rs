//! Term syntax trees over named variables and basic operations, with
//! exhaustive equation checking on a finite algebra.

use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::algebra::FiniteAlgebra;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Term {
    Var(String),
    App(String, Vec<Term>),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TermError {
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("unknown operation `{0}`")]
    UnknownOperation(String),
    #[error("operation `{op}` expects {expected} arguments, got {found}")]
    Arity {
        op: String,
        expected: usize,
        found: usize,
    },
    #[error("term syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
}

impl Term {
    pub fn var(name: &str) -> Term {
        Term::Var(name.to_string())
    }

    pub fn app(op: &str, args: Vec<Term>) -> Term {
        Term::App(op.to_string(), args)
    }

    pub fn parse(text: &str) -> Result<Term, TermError> {
        let mut p = TermParser {
            src: text.as_bytes(),
            pos: 0,
        };
        let t = p.term()?;
        p.skip_ws();
        if p.pos != p.src.len() {
            return Err(p.error("trailing input"));
        }
        Ok(t)
    }

    pub fn depth(&self) -> usize {
        match self {
            Term::Var(_) => 0,
            Term::App(_, args) => 1 + args.iter().map(Term::depth).max().unwrap_or(0),
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => f.write_str(v),
            Term::App(op, args) if args.is_empty() => f.write_str(op),
            Term::App(op, args) => {
                write!(f, "{op}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

struct TermParser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl TermParser<'_> {
    fn error(&self, message: &str) -> TermError {
        TermError::Syntax {
            offset: self.pos,
            message: message.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn ident(&mut self) -> Result<String, TermError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_alphanumeric() || b"_-".contains(&self.src[self.pos]))
        {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.error("expected a name"));
        }
        Ok(String::from_utf8_lossy(&self.src[start..self.pos]).into_owned())
    }

    fn term(&mut self) -> Result<Term, TermError> {
        let name = self.ident()?;
        self.skip_ws();
        if self.src.get(self.pos) != Some(&b'(') {
            return Ok(Term::Var(name));
        }
        self.pos += 1;
        let mut args = Vec::new();
        self.skip_ws();
        if self.src.get(self.pos) == Some(&b')') {
            self.pos += 1;
            return Ok(Term::App(name, args));
        }
        loop {
            args.push(self.term()?);
            self.skip_ws();
            match self.src.get(self.pos) {
                Some(b',') => self.pos += 1,
                Some(b')') => {
                    self.pos += 1;
                    return Ok(Term::App(name, args));
                }
                _ => return Err(self.error("expected `,` or `)`")),
            }
        }
    }
}

/// A term resolved against an algebra and a variable list.
#[derive(Debug, Clone)]
enum Compiled {
    Var(usize),
    App(usize, Vec<Compiled>),
}

fn compile(alg: &FiniteAlgebra, vars: &[&str], t: &Term) -> Result<Compiled, TermError> {
    match t {
        Term::Var(name) => {
            if let Some(i) = vars.iter().position(|v| v == name) {
                Ok(Compiled::Var(i))
            } else {
                // a bare name that is not a variable may still be a constant
                match alg.operation_index(name) {
                    Some(op) if alg.operations()[op].arity() == 0 => {
                        Ok(Compiled::App(op, Vec::new()))
                    }
                    _ => Err(TermError::UnknownVariable(name.clone())),
                }
            }
        }
        Term::App(name, args) => {
            let op = alg
                .operation_index(name)
                .ok_or_else(|| TermError::UnknownOperation(name.clone()))?;
            let expected = alg.operations()[op].arity();
            if expected != args.len() {
                return Err(TermError::Arity {
                    op: name.clone(),
                    expected,
                    found: args.len(),
                });
            }
            let args = args
                .iter()
                .map(|a| compile(alg, vars, a))
                .collect::<Result<_, _>>()?;
            Ok(Compiled::App(op, args))
        }
    }
}

fn eval_compiled(alg: &FiniteAlgebra, t: &Compiled, assignment: &[usize]) -> usize {
    match t {
        Compiled::Var(i) => assignment[*i],
        Compiled::App(op, args) => {
            let vals: Vec<usize> = args
                .iter()
                .map(|a| eval_compiled(alg, a, assignment))
                .collect();
            alg.apply_unchecked(*op, &vals)
        }
    }
}

/// Evaluates `t` under `assignment`, where `assignment[i]` is the value of `vars[i]`.
pub fn evaluate_term(
    alg: &FiniteAlgebra,
    t: &Term,
    vars: &[&str],
    assignment: &[usize],
) -> Result<usize, TermError> {
    let c = compile(alg, vars, t)?;
    Ok(eval_compiled(alg, &c, assignment))
}

/// The table of `t` as a map `A^vars -> A`, row-major over `vars`.
pub fn term_table(alg: &FiniteAlgebra, t: &Term, vars: &[&str]) -> Result<Vec<usize>, TermError> {
    let c = compile(alg, vars, t)?;
    let n = alg.size();
    let total = n.pow(vars.len() as u32);
    Ok((0..total)
        .map(|i| eval_compiled(alg, &c, &crate::algebra::unflatten(n, i, vars.len())))
        .collect())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum EquationCheck {
    Holds,
    Fails {
        assignment: Vec<usize>,
        lhs: usize,
        rhs: usize,
    },
}

impl EquationCheck {
    pub fn holds(&self) -> bool {
        matches!(self, EquationCheck::Holds)
    }
}

/// Checks `lhs = rhs` under every assignment of universe elements to
/// `vars`. Assignments are visited in lexicographic order, so a failure
/// reports the first failing one.
pub fn check_equation_on_a(
    alg: &FiniteAlgebra,
    lhs: &Term,
    rhs: &Term,
    vars: &[&str],
) -> Result<EquationCheck, TermError> {
    let l = compile(alg, vars, lhs)?;
    let r = compile(alg, vars, rhs)?;
    let n = alg.size();
    let total = n.pow(vars.len() as u32);
    for i in 0..total {
        let assignment = crate::algebra::unflatten(n, i, vars.len());
        let lv = eval_compiled(alg, &l, &assignment);
        let rv = eval_compiled(alg, &r, &assignment);
        if lv != rv {
            return Ok(EquationCheck::Fails {
                assignment,
                lhs: lv,
                rhs: rv,
            });
        }
    }
    Ok(EquationCheck::Holds)
}
