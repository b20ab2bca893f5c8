//! Binary relations, congruences, tolerances and admissible relations of a
//! finite algebra, with the closure operators that generate them.

mod congruence;
mod matrix;

pub use congruence::{
    all_congruences, all_congruences_bounded, cg, compatible_closure, is_compatible, join,
    representable_family, representable_tolerance, tolerance_family, tolerance_generated,
    AdmissibleRelation, Congruence, SampleSpec, Tolerance, DEFAULT_CONGRUENCE_BOUND,
};
pub use matrix::{chain_fixpoint, circ_h, BinaryRelation};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RelationError {
    #[error("relation size mismatch: {0} vs {1}")]
    SizeMismatch(usize, usize),
    #[error("alternating composition needs at least one factor")]
    ZeroFactors,
    #[error("chain fixpoint requires reflexive relations")]
    NotReflexive,
    #[error("element {element} out of range for size {size}")]
    ElementOutOfRange { element: usize, size: usize },
    #[error("congruence enumeration bound exceeded: size {size} > {bound}")]
    BoundExceeded { size: usize, bound: usize },
    #[error("relation is not a {0}")]
    NotA(&'static str),
}

/// Disjoint-set forest with path halving and union by size.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    pub fn find(&mut self, mut a: usize) -> usize {
        while self.parent[a] != a {
            self.parent[a] = self.parent[self.parent[a]];
            a = self.parent[a];
        }
        a
    }

    /// Merges the classes of `a` and `b`; returns false if already merged.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
        true
    }
}
