//! The free algebra on four generators in the variety generated by a finite
//! algebra `A`, realized as the subalgebra of `A^(A^4)` generated by the four
//! projections.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use thiserror::Error;

use crate::algebra::{flat_index, unflatten, AlgebraError, FiniteAlgebra};
use crate::term::Term;

pub const DEFAULT_ELEMENT_CAP: usize = 500_000;

/// Largest number of entries materialized for one induced operation table.
const MAX_INDUCED_TABLE: usize = 1 << 30;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FreeError {
    #[error("free algebra exceeds the element cap {cap} (reached {reached})")]
    CapExceeded { cap: usize, reached: usize },
    #[error("base algebra of size {0} is too large for table storage (max 256)")]
    BaseTooLarge(usize),
    #[error("induced table of `{op}` would need {entries} entries")]
    InducedTableTooLarge { op: String, entries: u128 },
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Generator {
    X,
    Y,
    Z,
    W,
}

impl Generator {
    pub const ALL: [Generator; 4] = [Generator::X, Generator::Y, Generator::Z, Generator::W];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        ["x", "y", "z", "w"][self.index()]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Provenance {
    Generator(Generator),
    /// Operation index in the base algebra and the element indices it was applied to.
    Applied { op: usize, args: Vec<usize> },
}

/// A 4-ary term operation of the base algebra, stored as its table over
/// `A^4` (row-major in `(x, y, z, w)`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TermTable {
    values: Vec<u8>,
    provenance: Provenance,
}

impl TermTable {
    pub fn values(&self) -> &[u8] {
        &self.values
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    /// Value at `(x, y, z, w)` for a base algebra of size `n`.
    #[inline]
    pub fn at(&self, n: usize, args: [usize; 4]) -> usize {
        self.values[flat_index(n, &args)] as usize
    }
}

/// Projection table of a generator over a universe of size `n`.
pub fn projection_table(n: usize, g: Generator) -> Vec<u8> {
    (0..n.pow(4))
        .map(|t| unflatten(n, t, 4)[g.index()] as u8)
        .collect()
}

#[derive(Debug, Clone)]
pub struct FreeAlgebra {
    base: FiniteAlgebra,
    elements: Vec<TermTable>,
    generator_ids: [usize; 4],
    induced: FiniteAlgebra,
}

fn apply_tables(base: &FiniteAlgebra, op: usize, args: &[&[u8]], len: usize) -> Vec<u8> {
    let n = base.size();
    let table = base.operations()[op].table();
    match args.len() {
        0 => vec![table[0] as u8; len],
        1 => args[0].iter().map(|&a| table[a as usize] as u8).collect(),
        2 => args[0]
            .iter()
            .zip(args[1])
            .map(|(&a, &b)| table[a as usize * n + b as usize] as u8)
            .collect(),
        _ => (0..len)
            .map(|t| {
                let idx = args.iter().fold(0, |acc, col| acc * n + col[t] as usize);
                table[idx] as u8
            })
            .collect(),
    }
}

/// Computes the free algebra with the default element cap.
pub fn free_algebra(base: &FiniteAlgebra) -> Result<FreeAlgebra, FreeError> {
    free_algebra_with_cap(base, DEFAULT_ELEMENT_CAP)
}

/// Closure by rounds: round 0 holds the distinct projections; every later
/// round applies each operation to the argument tuples that use at least one
/// element from the previous round. New elements of a round are appended in
/// lexicographic order of their tables.
pub fn free_algebra_with_cap(base: &FiniteAlgebra, cap: usize) -> Result<FreeAlgebra, FreeError> {
    let n = base.size();
    if n > 256 {
        return Err(FreeError::BaseTooLarge(n));
    }
    let len = n.pow(4);
    let mut elements: Vec<TermTable> = Vec::new();
    let mut index: HashMap<Vec<u8>, usize> = HashMap::new();
    let mut generator_ids = [0; 4];
    for g in Generator::ALL {
        let values = projection_table(n, g);
        generator_ids[g.index()] = *index.entry(values.clone()).or_insert_with(|| {
            elements.push(TermTable {
                values,
                provenance: Provenance::Generator(g),
            });
            elements.len() - 1
        });
    }
    if elements.len() > cap {
        return Err(FreeError::CapExceeded {
            cap,
            reached: elements.len(),
        });
    }

    let mut prev_start = 0;
    let mut first_round = true;
    loop {
        let total = elements.len();
        let mut fresh: BTreeMap<Vec<u8>, Provenance> = BTreeMap::new();
        for (op, operation) in base.operations().iter().enumerate() {
            let arity = operation.arity();
            if arity == 0 {
                if first_round {
                    let values = apply_tables(base, op, &[], len);
                    if !index.contains_key(&values) {
                        fresh.entry(values).or_insert(Provenance::Applied {
                            op,
                            args: Vec::new(),
                        });
                    }
                }
                continue;
            }
            let per_first: Vec<Vec<(Vec<u8>, Vec<usize>)>> = (0..total)
                .into_par_iter()
                .map(|a0| {
                    let mut found = Vec::new();
                    let rest_count = total.pow(arity as u32 - 1);
                    for rest in 0..rest_count {
                        let mut args = vec![a0];
                        args.extend(unflatten(total, rest, arity - 1));
                        if args.iter().all(|&a| a < prev_start) {
                            continue;
                        }
                        let cols: Vec<&[u8]> =
                            args.iter().map(|&a| elements[a].values.as_slice()).collect();
                        let values = apply_tables(base, op, &cols, len);
                        if !index.contains_key(&values) {
                            found.push((values, args));
                        }
                    }
                    found
                })
                .collect();
            for (values, args) in per_first.into_iter().flatten() {
                fresh
                    .entry(values)
                    .or_insert(Provenance::Applied { op, args });
            }
            if total + fresh.len() > cap {
                return Err(FreeError::CapExceeded {
                    cap,
                    reached: total + fresh.len(),
                });
            }
        }
        first_round = false;
        if fresh.is_empty() {
            break;
        }
        prev_start = total;
        for (values, provenance) in fresh {
            index.insert(values.clone(), elements.len());
            elements.push(TermTable { values, provenance });
        }
    }

    let size = elements.len();
    let mut induced_ops = Vec::with_capacity(base.operations().len());
    for (op, operation) in base.operations().iter().enumerate() {
        let arity = operation.arity();
        let entries = (size as u128).pow(arity as u32);
        if entries > MAX_INDUCED_TABLE as u128 {
            return Err(FreeError::InducedTableTooLarge {
                op: operation.name().to_string(),
                entries,
            });
        }
        let table: Vec<usize> = (0..entries as usize)
            .into_par_iter()
            .map(|i| {
                let args = unflatten(size, i, arity);
                let cols: Vec<&[u8]> = args.iter().map(|&a| elements[a].values.as_slice()).collect();
                index[&apply_tables(base, op, &cols, len)]
            })
            .collect();
        induced_ops.push((operation.name().to_string(), arity, table));
    }
    let induced = FiniteAlgebra::new(format!("F4({})", base.name()), size, induced_ops)?;
    Ok(FreeAlgebra {
        base: base.clone(),
        elements,
        generator_ids,
        induced,
    })
}

impl FreeAlgebra {
    pub fn base(&self) -> &FiniteAlgebra {
        &self.base
    }

    pub fn elements(&self) -> &[TermTable] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn generator_ids(&self) -> [usize; 4] {
        self.generator_ids
    }

    pub fn generator(&self, g: Generator) -> usize {
        self.generator_ids[g.index()]
    }

    /// The free algebra as an algebra on element indices, with the induced
    /// operation tables.
    pub fn as_algebra(&self) -> &FiniteAlgebra {
        &self.induced
    }

    pub fn index_of(&self, values: &[u8]) -> Option<usize> {
        self.elements.iter().position(|e| e.values == values)
    }

    /// Recomputes the table of element `e` from its provenance record.
    pub fn table_from_provenance(&self, e: usize) -> Vec<u8> {
        let n = self.base.size();
        match &self.elements[e].provenance {
            Provenance::Generator(g) => projection_table(n, *g),
            Provenance::Applied { op, args } => {
                let cols: Vec<&[u8]> = args.iter().map(|&a| self.elements[a].values()).collect();
                apply_tables(&self.base, *op, &cols, n.pow(4))
            }
        }
    }
}

/// Term over `x, y, z, w` and the base operations whose table is element `e`.
pub fn term_expression_of(free: &FreeAlgebra, e: usize) -> Term {
    let mut memo: HashMap<usize, Term> = HashMap::new();
    expression(free, e, &mut memo)
}

fn expression(free: &FreeAlgebra, e: usize, memo: &mut HashMap<usize, Term>) -> Term {
    if let Some(t) = memo.get(&e) {
        return t.clone();
    }
    let t = match &free.elements[e].provenance {
        Provenance::Generator(g) => Term::Var(g.name().to_string()),
        Provenance::Applied { op, args } => Term::App(
            free.base.operations()[*op].name().to_string(),
            args.iter().map(|&a| expression(free, a, memo)).collect(),
        ),
    };
    memo.insert(e, t.clone());
    t
}
