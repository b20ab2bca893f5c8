use std::fmt;

use serde::{Deserialize, Serialize};

/// Number of factors of an alternating composition.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Count {
    Fixed(usize),
    Param(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum RelExpr {
    Var(String),
    Meet(Box<RelExpr>, Box<RelExpr>),
    Join(Box<RelExpr>, Box<RelExpr>),
    Comp(Box<RelExpr>, Box<RelExpr>),
    /// `e1 ∘ e2 ∘ e1 ∘ ...` with the given number of factors.
    CompK(Box<RelExpr>, Box<RelExpr>, Count),
    Conv(Box<RelExpr>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sort {
    Congruence,
    Tolerance,
    Representable,
    Relation,
}

impl Sort {
    pub fn keyword(self) -> &'static str {
        match self {
            Sort::Congruence => "congruence",
            Sort::Tolerance => "tolerance",
            Sort::Representable => "representable",
            Sort::Relation => "relation",
        }
    }

    pub fn from_keyword(s: &str) -> Option<Sort> {
        Some(match s {
            "congruence" => Sort::Congruence,
            "tolerance" => Sort::Tolerance,
            "representable" => Sort::Representable,
            "relation" => Sort::Relation,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ParamDecl {
    pub name: String,
    pub value: Option<usize>,
}

/// A containment `lhs ⊆ rhs` with its quantified variables and integer
/// parameters.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct IdentityAst {
    pub lhs: RelExpr,
    pub rhs: RelExpr,
    pub quantifiers: Vec<(String, Sort)>,
    pub params: Vec<ParamDecl>,
}

impl RelExpr {
    pub fn var(name: &str) -> Self {
        RelExpr::Var(name.to_string())
    }

    pub fn meet(a: RelExpr, b: RelExpr) -> Self {
        RelExpr::Meet(Box::new(a), Box::new(b))
    }

    pub fn join(a: RelExpr, b: RelExpr) -> Self {
        RelExpr::Join(Box::new(a), Box::new(b))
    }

    pub fn comp(a: RelExpr, b: RelExpr) -> Self {
        RelExpr::Comp(Box::new(a), Box::new(b))
    }

    pub fn comp_k(a: RelExpr, b: RelExpr, count: Count) -> Self {
        RelExpr::CompK(Box::new(a), Box::new(b), count)
    }

    pub fn conv(a: RelExpr) -> Self {
        RelExpr::Conv(Box::new(a))
    }

    /// Visits every subexpression, parents before children.
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a RelExpr)) {
        f(self);
        match self {
            RelExpr::Var(_) => {}
            RelExpr::Conv(e) => e.walk(f),
            RelExpr::Meet(a, b) | RelExpr::Join(a, b) | RelExpr::Comp(a, b) | RelExpr::CompK(a, b, _) => {
                a.walk(f);
                b.walk(f);
            }
        }
    }

    pub fn variables(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.walk(&mut |e| {
            if let RelExpr::Var(v) = e {
                if !out.contains(&v.as_str()) {
                    out.push(v.as_str());
                }
            }
        });
        out
    }

    pub fn count_params(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.walk(&mut |e| {
            if let RelExpr::CompK(_, _, Count::Param(p)) = e {
                if !out.contains(&p.as_str()) {
                    out.push(p.as_str());
                }
            }
        });
        out
    }

    fn level(&self) -> u8 {
        match self {
            RelExpr::Join(..) => 0,
            RelExpr::Comp(..) | RelExpr::CompK(..) => 1,
            RelExpr::Meet(..) => 2,
            RelExpr::Var(_) | RelExpr::Conv(_) => 3,
        }
    }

    /// Operands of `o`, `o[k]` and `+`: meets are bracketed even where precedence makes it optional.
    fn fmt_operand(&self, f: &mut fmt::Formatter<'_>, min_level: u8) -> fmt::Result {
        match self {
            RelExpr::Meet(..) => self.fmt_at(f, 3),
            _ => self.fmt_at(f, min_level),
        }
    }

    fn fmt_at(&self, f: &mut fmt::Formatter<'_>, min_level: u8) -> fmt::Result {
        if self.level() < min_level {
            f.write_str("(")?;
            self.fmt_at(f, 0)?;
            return f.write_str(")");
        }
        // binary operators are left-associative: the right operand must bind tighter
        match self {
            RelExpr::Var(v) => f.write_str(v),
            RelExpr::Conv(e) => {
                f.write_str("conv(")?;
                e.fmt_at(f, 0)?;
                f.write_str(")")
            }
            RelExpr::Meet(a, b) => {
                a.fmt_at(f, 2)?;
                f.write_str(" & ")?;
                b.fmt_at(f, 3)
            }
            RelExpr::Comp(a, b) => {
                a.fmt_operand(f, 1)?;
                f.write_str(" o ")?;
                b.fmt_operand(f, 2)
            }
            RelExpr::CompK(a, b, count) => {
                a.fmt_operand(f, 1)?;
                match count {
                    Count::Fixed(k) => write!(f, " o[{k}] ")?,
                    Count::Param(p) => write!(f, " o[{p}] ")?,
                }
                b.fmt_operand(f, 2)
            }
            RelExpr::Join(a, b) => {
                a.fmt_operand(f, 0)?;
                f.write_str(" + ")?;
                b.fmt_operand(f, 1)
            }
        }
    }
}

impl fmt::Display for RelExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_at(f, 0)
    }
}

impl fmt::Display for IdentityAst {
    /// Canonical text: consecutive quantified variables of one sort share a
    /// `forall` clause.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} <= {}", self.lhs, self.rhs)?;
        let mut i = 0;
        while i < self.quantifiers.len() {
            let sort = self.quantifiers[i].1;
            let mut j = i;
            while j < self.quantifiers.len() && self.quantifiers[j].1 == sort {
                j += 1;
            }
            let names: Vec<&str> = self.quantifiers[i..j].iter().map(|(n, _)| n.as_str()).collect();
            write!(f, "; forall {}: {}", names.join(", "), sort.keyword())?;
            i = j;
        }
        for p in &self.params {
            match p.value {
                Some(v) => write!(f, "; param {} = {v}", p.name)?,
                None => write!(f, "; param {}", p.name)?,
            }
        }
        Ok(())
    }
}

pub fn pretty_print(ast: &IdentityAst) -> String {
    ast.to_string()
}
