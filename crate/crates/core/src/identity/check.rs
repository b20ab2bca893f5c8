use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::ast::{IdentityAst, RelExpr, Sort};
use super::eval::{compile, eval_compiled, Compiled, CountMode, EvalError};
use crate::algebra::FiniteAlgebra;
use crate::relations::{
    all_congruences_bounded, is_compatible, representable_family, tolerance_family,
    BinaryRelation, RelationError, SampleSpec, DEFAULT_CONGRUENCE_BOUND,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CheckError {
    #[error("quantification over arbitrary relations is not supported")]
    RelationSortUnsupported,
    #[error("join of `{0}` is only defined for congruences")]
    JoinOfNonCongruence(String),
    #[error("parameter `{0}` has no value")]
    UnresolvedParameter(String),
    #[error("value given for undeclared parameter `{0}`")]
    UnknownParameter(String),
    #[error("expected exactly one free parameter, found {0}")]
    FreeParameterCount(usize),
    #[error("parameter `{0}` occurs on the left-hand side")]
    NonMonotoneParameter(String),
    #[error(transparent)]
    Relation(#[from] RelationError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CheckOptions {
    /// Worker threads for binding sweeps; 0 or 1 means sequential.
    pub jobs: usize,
    pub congruence_bound: usize,
    pub sample: SampleSpec,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions {
            jobs: 1,
            congruence_bound: DEFAULT_CONGRUENCE_BOUND,
            sample: SampleSpec::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Holds,
    Fails,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundVariable {
    pub name: String,
    pub sort: Sort,
    pub relation: BinaryRelation,
}

/// A binding and a pair in `eval(lhs)` but not in `eval(rhs)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counterexample {
    pub binding: Vec<BoundVariable>,
    pub pair: (usize, usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub status: Status,
    /// Number of bindings in the quantified family.
    pub bindings: usize,
    pub counterexample: Option<Counterexample>,
}

impl Verdict {
    pub fn holds(&self) -> bool {
        self.status == Status::Holds
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "result", rename_all = "snake_case")]
pub enum MinParam {
    /// The identity fails even with every parametrized count at its limit.
    NoK { witness: Counterexample },
    MinK {
        k: usize,
        /// A binding that fails at `k - 1`, when `k > 1`.
        witness_below: Option<Counterexample>,
    },
    /// Some binding needs a count larger than the requested maximum.
    AboveLimit { k_max: usize },
}

/// Binding index and the pair it puts on the left but not the right.
type Failure = (usize, (usize, usize));

/// Quantified variables with their candidate relations, and the compiled sides.
struct Prepared {
    names: Vec<String>,
    sorts: Vec<Sort>,
    families: Vec<Vec<BinaryRelation>>,
    lhs: Compiled,
    rhs: Compiled,
    total: usize,
}

impl Prepared {
    fn new(alg: &FiniteAlgebra, ast: &IdentityAst, opts: &CheckOptions) -> Result<Self, CheckError> {
        check_join_sorts(ast)?;
        let mut cache: HashMap<Sort, Vec<BinaryRelation>> = HashMap::new();
        let mut families = Vec::new();
        for (_, sort) in &ast.quantifiers {
            if !cache.contains_key(sort) {
                let fam = family(alg, *sort, opts)?;
                cache.insert(*sort, fam);
            }
            families.push(cache[sort].clone());
        }
        let names: Vec<String> = ast.quantifiers.iter().map(|(n, _)| n.clone()).collect();
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        let total = families.iter().map(Vec::len).product();
        Ok(Prepared {
            lhs: compile(&ast.lhs, &refs)?,
            rhs: compile(&ast.rhs, &refs)?,
            sorts: ast.quantifiers.iter().map(|(_, s)| *s).collect(),
            names,
            families,
            total,
        })
    }

    /// Family indices of the `index`-th binding; the first variable is most significant.
    fn digits(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.families.len()];
        for (slot, fam) in out.iter_mut().zip(&self.families).rev() {
            *slot = index % fam.len();
            index /= fam.len();
        }
        out
    }

    fn binding(&self, index: usize) -> Vec<&BinaryRelation> {
        self.digits(index)
            .into_iter()
            .zip(&self.families)
            .map(|(d, fam)| &fam[d])
            .collect()
    }

    fn counterexample(&self, index: usize, pair: (usize, usize)) -> Counterexample {
        Counterexample {
            binding: self
                .binding(index)
                .into_iter()
                .enumerate()
                .map(|(i, r)| BoundVariable {
                    name: self.names[i].clone(),
                    sort: self.sorts[i],
                    relation: r.clone(),
                })
                .collect(),
            pair,
        }
    }

    fn failing_pair(&self, index: usize, mode: CountMode<'_>) -> Result<Option<(usize, usize)>, CheckError> {
        let binding = self.binding(index);
        let lhs = eval_compiled(&self.lhs, &binding, mode)?;
        let rhs = eval_compiled(&self.rhs, &binding, mode)?;
        Ok(lhs.first_pair_not_in(&rhs))
    }

    /// First binding index (in order) whose containment fails.
    fn first_failure(
        &self,
        mode: CountMode<'_>,
        jobs: usize,
    ) -> Result<Option<Failure>, CheckError> {
        let probe = |i: usize| match self.failing_pair(i, mode) {
            Ok(None) => None,
            Ok(Some(p)) => Some(Ok((i, p))),
            Err(e) => Some(Err(e)),
        };
        let found = if jobs > 1 {
            with_pool(jobs, || (0..self.total).into_par_iter().find_map_first(probe))
        } else {
            (0..self.total).find_map(probe)
        };
        found.transpose()
    }
}

fn with_pool<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> T {
    match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}

fn family(alg: &FiniteAlgebra, sort: Sort, opts: &CheckOptions) -> Result<Vec<BinaryRelation>, CheckError> {
    Ok(match sort {
        Sort::Congruence => all_congruences_bounded(alg, opts.congruence_bound)?
            .into_iter()
            .map(|c| c.matrix().clone())
            .collect(),
        Sort::Tolerance => tolerance_family(alg, opts.sample)
            .into_iter()
            .map(|t| t.matrix().clone())
            .collect(),
        Sort::Representable => representable_family(alg, opts.sample)
            .into_iter()
            .map(|t| t.matrix().clone())
            .collect(),
        Sort::Relation => return Err(CheckError::RelationSortUnsupported),
    })
}

fn check_join_sorts(ast: &IdentityAst) -> Result<(), CheckError> {
    let sort_of = |v: &str| ast.quantifiers.iter().find(|(n, _)| n == v).map(|(_, s)| *s);
    let mut bad = None;
    for side in [&ast.lhs, &ast.rhs] {
        side.walk(&mut |e| {
            if let RelExpr::Join(..) = e {
                if bad.is_none() {
                    bad = e
                        .variables()
                        .into_iter()
                        .find(|v| sort_of(v) != Some(Sort::Congruence))
                        .map(str::to_string);
                }
            }
        });
    }
    match bad {
        Some(v) => Err(CheckError::JoinOfNonCongruence(v)),
        None => Ok(()),
    }
}

/// Declared parameters merged with explicit values; explicit values win.
fn resolve_params(
    ast: &IdentityAst,
    given: &HashMap<String, usize>,
) -> Result<HashMap<String, usize>, CheckError> {
    if let Some(unknown) = given.keys().find(|k| !ast.params.iter().any(|p| &p.name == *k)) {
        return Err(CheckError::UnknownParameter(unknown.clone()));
    }
    let mut out = HashMap::new();
    for p in &ast.params {
        if let Some(v) = given.get(&p.name).copied().or(p.value) {
            out.insert(p.name.clone(), v);
        }
    }
    Ok(out)
}

/// Checks `lhs ⊆ rhs` for every binding of the quantified variables to
/// members of their sort's family, in lexicographic binding order.
///
/// Congruence variables range over all congruences of `alg`; tolerance and
/// representable variables over the sampled families of `opts.sample`.
pub fn check_quantified(
    alg: &FiniteAlgebra,
    ast: &IdentityAst,
    params: &HashMap<String, usize>,
    opts: &CheckOptions,
) -> Result<Verdict, CheckError> {
    let values = resolve_params(ast, params)?;
    if let Some(p) = ast.params.iter().find(|p| !values.contains_key(&p.name)) {
        return Err(CheckError::UnresolvedParameter(p.name.clone()));
    }
    let prepared = Prepared::new(alg, ast, opts)?;
    let failure = prepared.first_failure(CountMode::Params(&values), opts.jobs)?;
    Ok(match failure {
        None => Verdict {
            status: Status::Holds,
            bindings: prepared.total,
            counterexample: None,
        },
        Some((index, pair)) => Verdict {
            status: Status::Fails,
            bindings: prepared.total,
            counterexample: Some(prepared.counterexample(index, pair)),
        },
    })
}

/// Smallest value of the single free parameter for which the identity holds.
///
/// The parameter may only occur on the right-hand side, where every
/// alternating composition of reflexive relations grows with its count.
/// With `k_max = None` the search runs until every binding is satisfied,
/// which terminates because each chain stabilizes.
pub fn find_min_parameter(
    alg: &FiniteAlgebra,
    ast: &IdentityAst,
    params: &HashMap<String, usize>,
    k_max: Option<usize>,
    opts: &CheckOptions,
) -> Result<MinParam, CheckError> {
    let values = resolve_params(ast, params)?;
    let free: Vec<&str> = ast
        .params
        .iter()
        .filter(|p| !values.contains_key(&p.name))
        .map(|p| p.name.as_str())
        .collect();
    if free.len() != 1 {
        return Err(CheckError::FreeParameterCount(free.len()));
    }
    let param = free[0].to_string();
    if ast.lhs.count_params().contains(&param.as_str()) {
        return Err(CheckError::NonMonotoneParameter(param));
    }
    let prepared = Prepared::new(alg, ast, opts)?;

    if let Some((index, pair)) = prepared.first_failure(CountMode::Limit(&values), opts.jobs)? {
        return Ok(MinParam::NoK {
            witness: prepared.counterexample(index, pair),
        });
    }

    let hard_cap = 2 * alg.size() * alg.size() + 3;
    let per_binding = |index: usize| -> Result<usize, CheckError> {
        let binding = prepared.binding(index);
        let lhs = eval_compiled(&prepared.lhs, &binding, CountMode::Params(&values))?;
        let mut with_k = values.clone();
        for k in 1..=hard_cap.max(k_max.unwrap_or(0)) {
            if k_max.is_some_and(|m| k > m) {
                return Ok(k);
            }
            with_k.insert(param.clone(), k);
            let rhs = eval_compiled(&prepared.rhs, &binding, CountMode::Params(&with_k))?;
            if lhs.is_subset(&rhs) {
                return Ok(k);
            }
        }
        unreachable!("alternating chains stabilize within the cap")
    };
    let needed: Vec<usize> = if opts.jobs > 1 {
        with_pool(opts.jobs, || {
            (0..prepared.total)
                .into_par_iter()
                .map(per_binding)
                .collect::<Result<_, _>>()
        })?
    } else {
        (0..prepared.total).map(per_binding).collect::<Result<_, _>>()?
    };
    let k = needed.iter().copied().max().unwrap_or(1);
    if k_max.is_some_and(|m| k > m) {
        return Ok(MinParam::AboveLimit {
            k_max: k_max.expect("checked"),
        });
    }
    let witness_below = if k > 1 {
        let mut below = values.clone();
        below.insert(param, k - 1);
        prepared
            .first_failure(CountMode::Params(&below), opts.jobs)?
            .map(|(i, p)| prepared.counterexample(i, p))
    } else {
        None
    };
    Ok(MinParam::MinK { k, witness_below })
}

/// Re-checks a counterexample from scratch: each bound relation must belong
/// to its sort, and the pair must be in `eval(lhs)` but not in `eval(rhs)`.
/// Representable variables are only checked to be tolerances.
pub fn verify_counterexample(
    alg: &FiniteAlgebra,
    ast: &IdentityAst,
    params: &HashMap<String, usize>,
    cex: &Counterexample,
) -> Result<bool, CheckError> {
    let values = resolve_params(ast, params)?;
    let n = alg.size();
    let names: Vec<&str> = cex.binding.iter().map(|b| b.name.as_str()).collect();
    for (q, sort) in &ast.quantifiers {
        match cex.binding.iter().find(|b| &b.name == q) {
            Some(b) if b.sort == *sort => {}
            _ => return Ok(false),
        }
    }
    for b in &cex.binding {
        let r = &b.relation;
        if r.size() != n {
            return Ok(false);
        }
        let ok = match b.sort {
            Sort::Congruence => r.is_equivalence() && is_compatible(alg, r),
            Sort::Tolerance | Sort::Representable => {
                r.is_reflexive() && r.is_symmetric() && is_compatible(alg, r)
            }
            Sort::Relation => true,
        };
        if !ok {
            return Ok(false);
        }
    }
    let (a, b) = cex.pair;
    if a >= n || b >= n {
        return Ok(false);
    }
    let slots: Vec<&BinaryRelation> = cex.binding.iter().map(|b| &b.relation).collect();
    let lhs = eval_compiled(&compile(&ast.lhs, &names)?, &slots, CountMode::Params(&values))?;
    let rhs = eval_compiled(&compile(&ast.rhs, &names)?, &slots, CountMode::Params(&values))?;
    Ok(lhs.contains(a, b) && !rhs.contains(a, b))
}
