//! Finite algebras given by operation tables.
//!
//! The universe of an algebra of size `n` is `0..n`. An operation of arity
//! `r` is stored as a flat table of `n^r` entries, where the argument tuple
//! `(a_1, ..., a_r)` lives at index `a_1·n^(r-1) + ... + a_r`.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlgebraError {
    #[error("universe size must be at least 1")]
    EmptyUniverse,
    #[error("operation `{op}`: table length {found} ≠ {expected}")]
    TableLength {
        op: String,
        expected: usize,
        found: usize,
    },
    #[error("operation `{op}`: entry {entry} out of range for size {size}")]
    EntryOutOfRange { op: String, entry: usize, size: usize },
    #[error("duplicate operation name `{0}`")]
    DuplicateName(String),
    #[error("operation `{op}` of arity {arity} is too large for size {size}")]
    TableTooLarge { op: String, arity: usize, size: usize },
    #[error("operation index {0} out of range")]
    NoSuchOperation(usize),
    #[error("operation `{op}` expects {expected} arguments, got {found}")]
    ArityMismatch {
        op: String,
        expected: usize,
        found: usize,
    },
    #[error("element {element} out of range for size {size}")]
    ElementOutOfRange { element: usize, size: usize },
}

/// Raw, unvalidated description of an algebra, as found in JSON files.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlgebraDocument {
    pub name: String,
    pub size: usize,
    pub operations: Vec<OperationDocument>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OperationDocument {
    pub name: String,
    pub arity: usize,
    pub table: Vec<usize>,
}

/// A basic operation together with its full table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Operation {
    name: String,
    arity: usize,
    table: Vec<usize>,
}

impl Operation {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn table(&self) -> &[usize] {
        &self.table
    }

    /// Table lookup without range checks beyond the slice bound.
    #[inline]
    pub fn value_at(&self, index: usize) -> usize {
        self.table[index]
    }
}

/// An operation given as a function of its argument tuple.
pub type OpFn<'a> = &'a dyn Fn(&[usize]) -> usize;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteAlgebra {
    name: String,
    size: usize,
    operations: Vec<Operation>,
}

/// Row-major flat index of an argument tuple over a universe of size `n`.
#[inline]
pub fn flat_index(n: usize, args: &[usize]) -> usize {
    args.iter().fold(0, |acc, &a| acc * n + a)
}

/// Inverse of [`flat_index`] for a tuple of the given length.
pub fn unflatten(n: usize, mut index: usize, len: usize) -> Vec<usize> {
    let mut out = vec![0; len];
    for slot in out.iter_mut().rev() {
        *slot = index % n;
        index /= n;
    }
    out
}

pub fn validate_algebra(doc: &AlgebraDocument) -> Result<FiniteAlgebra, AlgebraError> {
    let n = doc.size;
    if n == 0 {
        return Err(AlgebraError::EmptyUniverse);
    }
    let mut names = HashSet::new();
    let mut operations = Vec::with_capacity(doc.operations.len());
    for op in &doc.operations {
        if !names.insert(op.name.as_str()) {
            return Err(AlgebraError::DuplicateName(op.name.clone()));
        }
        let expected = u32::try_from(op.arity)
            .ok()
            .and_then(|r| n.checked_pow(r))
            .ok_or_else(|| AlgebraError::TableTooLarge {
                op: op.name.clone(),
                arity: op.arity,
                size: n,
            })?;
        if op.table.len() != expected {
            return Err(AlgebraError::TableLength {
                op: op.name.clone(),
                expected,
                found: op.table.len(),
            });
        }
        if let Some(&entry) = op.table.iter().find(|&&v| v >= n) {
            return Err(AlgebraError::EntryOutOfRange {
                op: op.name.clone(),
                entry,
                size: n,
            });
        }
        operations.push(Operation {
            name: op.name.clone(),
            arity: op.arity,
            table: op.table.clone(),
        });
    }
    Ok(FiniteAlgebra {
        name: doc.name.clone(),
        size: n,
        operations,
    })
}

impl FiniteAlgebra {
    /// Builds an algebra from already-checked parts.
    pub fn new(
        name: impl Into<String>,
        size: usize,
        operations: Vec<(String, usize, Vec<usize>)>,
    ) -> Result<Self, AlgebraError> {
        validate_algebra(&AlgebraDocument {
            name: name.into(),
            size,
            operations: operations
                .into_iter()
                .map(|(name, arity, table)| OperationDocument { name, arity, table })
                .collect(),
        })
    }

    /// Builds an algebra whose operations are given as closures on the universe.
    pub fn from_fns(
        name: impl Into<String>,
        size: usize,
        ops: Vec<(&str, usize, OpFn<'_>)>,
    ) -> Result<Self, AlgebraError> {
        let operations = ops
            .into_iter()
            .map(|(op_name, arity, f)| {
                let len = size.pow(arity as u32);
                let table = (0..len).map(|i| f(&unflatten(size, i, arity))).collect();
                (op_name.to_string(), arity, table)
            })
            .collect();
        Self::new(name, size, operations)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn operations(&self) -> &[Operation] {
        &self.operations
    }

    pub fn operation_index(&self, name: &str) -> Option<usize> {
        self.operations.iter().position(|op| op.name == name)
    }

    pub fn apply_op(&self, op: usize, args: &[usize]) -> Result<usize, AlgebraError> {
        let operation = self
            .operations
            .get(op)
            .ok_or(AlgebraError::NoSuchOperation(op))?;
        if operation.arity != args.len() {
            return Err(AlgebraError::ArityMismatch {
                op: operation.name.clone(),
                expected: operation.arity,
                found: args.len(),
            });
        }
        if let Some(&element) = args.iter().find(|&&a| a >= self.size) {
            return Err(AlgebraError::ElementOutOfRange {
                element,
                size: self.size,
            });
        }
        Ok(operation.table[flat_index(self.size, args)])
    }

    /// Same lookup as [`apply_op`](Self::apply_op) for callers that already
    /// validated the arguments.
    #[inline]
    pub fn apply_unchecked(&self, op: usize, args: &[usize]) -> usize {
        self.operations[op].table[flat_index(self.size, args)]
    }

    pub fn to_document(&self) -> AlgebraDocument {
        AlgebraDocument {
            name: self.name.clone(),
            size: self.size,
            operations: self
                .operations
                .iter()
                .map(|op| OperationDocument {
                    name: op.name.clone(),
                    arity: op.arity,
                    table: op.table.clone(),
                })
                .collect(),
        }
    }

    /// Hex SHA-256 over the size and every operation's arity and table.
    /// Operation names do not contribute.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update((self.size as u64).to_le_bytes());
        for op in &self.operations {
            hasher.update((op.arity as u64).to_le_bytes());
            for &v in &op.table {
                hasher.update((v as u64).to_le_bytes());
            }
        }
        hex::encode(hasher.finalize())
    }

    /// Same algebra with its operations listed in a different order.
    pub fn with_operation_order(&self, order: &[usize]) -> Self {
        FiniteAlgebra {
            name: self.name.clone(),
            size: self.size,
            operations: order.iter().map(|&i| self.operations[i].clone()).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(size: usize, ops: Vec<(&str, usize, Vec<usize>)>) -> AlgebraDocument {
        AlgebraDocument {
            name: "t".into(),
            size,
            operations: ops
                .into_iter()
                .map(|(name, arity, table)| OperationDocument {
                    name: name.into(),
                    arity,
                    table,
                })
                .collect(),
        }
    }

    #[test]
    fn accepts_two_element_meet() {
        let a = validate_algebra(&doc(2, vec![("meet", 2, vec![0, 0, 0, 1])])).unwrap();
        assert_eq!(a.size(), 2);
        assert_eq!(a.operations()[0].arity(), 2);
    }

    #[test]
    fn rejects_short_table() {
        let err = validate_algebra(&doc(2, vec![("meet", 2, vec![0, 0, 0])])).unwrap_err();
        assert_eq!(err.to_string(), "operation `meet`: table length 3 ≠ 4");
    }

    #[test]
    fn rejects_out_of_range_entry() {
        let err = validate_algebra(&doc(3, vec![("f", 1, vec![0, 3, 1])])).unwrap_err();
        assert!(matches!(err, AlgebraError::EntryOutOfRange { entry: 3, .. }));
        assert!(err.to_string().contains("entry 3 out of range"));
    }

    #[test]
    fn rejects_duplicates_and_empty() {
        let err = validate_algebra(&doc(1, vec![("f", 1, vec![0]), ("f", 1, vec![0])]));
        assert_eq!(err.unwrap_err(), AlgebraError::DuplicateName("f".into()));
        assert_eq!(
            validate_algebra(&doc(0, vec![])).unwrap_err(),
            AlgebraError::EmptyUniverse
        );
    }

    #[test]
    fn apply_op_lookups() {
        let a = validate_algebra(&doc(
            3,
            vec![
                ("meet", 2, vec![0, 0, 0, 0, 1, 1, 0, 1, 2]),
                ("join", 2, vec![0, 1, 2, 1, 1, 2, 2, 2, 2]),
                ("c", 0, vec![2]),
            ],
        ))
        .unwrap();
        assert_eq!(a.apply_op(0, &[0, 1]), Ok(0));
        assert_eq!(a.apply_op(1, &[0, 1]), Ok(1));
        assert_eq!(a.apply_op(2, &[]), Ok(2));
        assert!(matches!(
            a.apply_op(0, &[1]),
            Err(AlgebraError::ArityMismatch { .. })
        ));
        assert!(matches!(
            a.apply_op(0, &[1, 3]),
            Err(AlgebraError::ElementOutOfRange { element: 3, .. })
        ));
    }

    #[test]
    fn flat_index_roundtrip() {
        for i in 0..81 {
            assert_eq!(flat_index(3, &unflatten(3, i, 4)), i);
        }
        assert_eq!(flat_index(5, &[1, 2]), 7);
    }
}
