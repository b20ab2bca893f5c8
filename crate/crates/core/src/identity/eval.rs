use std::collections::HashMap;

use thiserror::Error;

use super::ast::{Count, RelExpr};
use crate::relations::{chain_fixpoint, circ_h, BinaryRelation, RelationError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("no relation bound to `{0}`")]
    Unbound(String),
    #[error("no value for parameter `{0}`")]
    MissingParameter(String),
    #[error(transparent)]
    Relation(#[from] RelationError),
}

/// How symbolic composition counts are resolved.
#[derive(Debug, Clone, Copy)]
pub(crate) enum CountMode<'a> {
    Params(&'a HashMap<String, usize>),
    /// Every parametrized `o[k]` takes the limit of its alternating chain.
    Limit(&'a HashMap<String, usize>),
}

/// Expression with variables resolved to binding slots.
#[derive(Debug, Clone)]
pub(crate) enum Compiled {
    Var(usize),
    Meet(Box<Compiled>, Box<Compiled>),
    Join(Box<Compiled>, Box<Compiled>),
    Comp(Box<Compiled>, Box<Compiled>),
    CompK(Box<Compiled>, Box<Compiled>, Count),
    Conv(Box<Compiled>),
}

pub(crate) fn compile(expr: &RelExpr, names: &[&str]) -> Result<Compiled, EvalError> {
    let bx = |e: &RelExpr| compile(e, names).map(Box::new);
    Ok(match expr {
        RelExpr::Var(v) => Compiled::Var(
            names
                .iter()
                .position(|n| n == v)
                .ok_or_else(|| EvalError::Unbound(v.clone()))?,
        ),
        RelExpr::Meet(a, b) => Compiled::Meet(bx(a)?, bx(b)?),
        RelExpr::Join(a, b) => Compiled::Join(bx(a)?, bx(b)?),
        RelExpr::Comp(a, b) => Compiled::Comp(bx(a)?, bx(b)?),
        RelExpr::CompK(a, b, c) => Compiled::CompK(bx(a)?, bx(b)?, c.clone()),
        RelExpr::Conv(a) => Compiled::Conv(bx(a)?),
    })
}

pub(crate) fn eval_compiled(
    e: &Compiled,
    binding: &[&BinaryRelation],
    mode: CountMode<'_>,
) -> Result<BinaryRelation, EvalError> {
    Ok(match e {
        Compiled::Var(i) => binding[*i].clone(),
        Compiled::Meet(a, b) => eval_compiled(a, binding, mode)?.intersect(&eval_compiled(b, binding, mode)?)?,
        Compiled::Join(a, b) => eval_compiled(a, binding, mode)?
            .union(&eval_compiled(b, binding, mode)?)?
            .equivalence_closure(),
        Compiled::Comp(a, b) => eval_compiled(a, binding, mode)?.compose(&eval_compiled(b, binding, mode)?)?,
        Compiled::Conv(a) => eval_compiled(a, binding, mode)?.converse(),
        Compiled::CompK(a, b, count) => {
            let left = eval_compiled(a, binding, mode)?;
            let right = eval_compiled(b, binding, mode)?;
            match (count, mode) {
                (Count::Fixed(k), _) => circ_h(&left, &right, *k)?,
                (Count::Param(p), CountMode::Params(params)) => {
                    let k = *params.get(p).ok_or_else(|| EvalError::MissingParameter(p.clone()))?;
                    circ_h(&left, &right, k)?
                }
                (Count::Param(p), CountMode::Limit(params)) => match params.get(p) {
                    Some(&k) => circ_h(&left, &right, k)?,
                    None => chain_fixpoint(&left, &right)?.0,
                },
            }
        }
    })
}

/// Evaluates `expr` with `binding` for its variables and `params` for
/// symbolic composition counts. Joins are equivalence closures of unions.
pub fn evaluate(
    expr: &RelExpr,
    binding: &HashMap<String, BinaryRelation>,
    params: &HashMap<String, usize>,
) -> Result<BinaryRelation, EvalError> {
    let names: Vec<&str> = binding.keys().map(String::as_str).collect();
    let slots: Vec<&BinaryRelation> = names.iter().map(|n| &binding[*n]).collect();
    let compiled = compile(expr, &names)?;
    if let Some(first) = slots.first() {
        if let Some(other) = slots.iter().find(|r| r.size() != first.size()) {
            return Err(RelationError::SizeMismatch(first.size(), other.size()).into());
        }
    }
    eval_compiled(&compiled, &slots, CountMode::Params(params))
}
