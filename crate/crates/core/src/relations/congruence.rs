use std::collections::HashSet;
use std::fmt;

use tuples::odometer;
use serde::{Deserialize, Serialize};

use super::{BinaryRelation, RelationError, UnionFind};
use crate::algebra::FiniteAlgebra;

pub const DEFAULT_CONGRUENCE_BOUND: usize = 60;

/// A congruence, carried both as a canonical partition (each element mapped
/// to the least element of its block) and as a relation matrix.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "Vec<usize>", try_from = "Vec<usize>")]
pub struct Congruence {
    partition: Vec<usize>,
    matrix: BinaryRelation,
}

impl Congruence {
    /// From arbitrary block labels (equal labels mean same block).
    pub fn from_labels(labels: &[usize]) -> Self {
        let n = labels.len();
        let mut partition = vec![usize::MAX; n];
        for a in 0..n {
            if partition[a] == usize::MAX {
                for b in a..n {
                    if labels[b] == labels[a] {
                        partition[b] = a;
                    }
                }
            }
        }
        let mut matrix = BinaryRelation::empty(n);
        for a in 0..n {
            for b in 0..n {
                if partition[a] == partition[b] {
                    matrix.insert(a, b);
                }
            }
        }
        Congruence { partition, matrix }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_labels(&(0..n).collect::<Vec<_>>())
    }

    pub fn full(n: usize) -> Self {
        Self::from_labels(&vec![0; n])
    }

    /// The relation as an equivalence, if it is one. Compatibility is not checked.
    pub fn from_equivalence(r: &BinaryRelation) -> Option<Self> {
        if !r.is_equivalence() {
            return None;
        }
        let n = r.size();
        let labels: Vec<usize> = (0..n)
            .map(|a| r.successors(a).next().expect("reflexive"))
            .collect();
        Some(Self::from_labels(&labels))
    }

    pub fn size(&self) -> usize {
        self.partition.len()
    }

    pub fn partition(&self) -> &[usize] {
        &self.partition
    }

    pub fn matrix(&self) -> &BinaryRelation {
        &self.matrix
    }

    #[inline]
    pub fn related(&self, a: usize, b: usize) -> bool {
        self.partition[a] == self.partition[b]
    }

    pub fn block_count(&self) -> usize {
        self.partition.iter().enumerate().filter(|&(a, &r)| a == r).count()
    }

    pub fn blocks(&self) -> Vec<Vec<usize>> {
        let n = self.size();
        (0..n)
            .filter(|&a| self.partition[a] == a)
            .map(|r| (0..n).filter(|&b| self.partition[b] == r).collect())
            .collect()
    }

    pub fn meet(&self, other: &Self) -> Result<Self, RelationError> {
        if self.size() != other.size() {
            return Err(RelationError::SizeMismatch(self.size(), other.size()));
        }
        let n = self.size();
        let labels: Vec<usize> = (0..n)
            .map(|a| self.partition[a] * n + other.partition[a])
            .collect();
        Ok(Self::from_labels(&labels))
    }

    pub fn is_below(&self, other: &Self) -> bool {
        self.size() == other.size()
            && (0..self.size()).all(|a| other.related(a, self.partition[a]))
    }

    /// Compatibility with every basic operation, checked by changing one
    /// argument at a time (enough for an equivalence relation).
    pub fn is_compatible_with(&self, alg: &FiniteAlgebra) -> bool {
        let n = self.size();
        (0..n).filter(|&a| self.partition[a] != a).all(|a| {
            let b = self.partition[a];
            translations_agree(alg, a, b, |x, y| self.related(x, y))
        })
    }
}

/// Runs over every basic translation `f(.., _, ..)` and asks whether the
/// images of `a` and `b` satisfy `ok`.
fn translations_agree(
    alg: &FiniteAlgebra,
    a: usize,
    b: usize,
    mut ok: impl FnMut(usize, usize) -> bool,
) -> bool {
    let mut all = true;
    for_each_translation(alg, a, b, |x, y| {
        if all && !ok(x, y) {
            all = false;
        }
    });
    all
}

fn for_each_translation(alg: &FiniteAlgebra, a: usize, b: usize, mut visit: impl FnMut(usize, usize)) {
    let n = alg.size();
    for (op, operation) in alg.operations().iter().enumerate() {
        let arity = operation.arity();
        if arity == 0 {
            continue;
        }
        for pos in 0..arity {
            odometer(n, arity - 1, |rest| {
                let mut args: Vec<usize> = Vec::with_capacity(arity);
                args.extend_from_slice(&rest[..pos]);
                args.push(a);
                args.extend_from_slice(&rest[pos..]);
                let x = alg.apply_unchecked(op, &args);
                args[pos] = b;
                let y = alg.apply_unchecked(op, &args);
                visit(x, y);
            });
        }
    }
}

impl From<Congruence> for Vec<usize> {
    fn from(c: Congruence) -> Self {
        c.partition
    }
}

impl TryFrom<Vec<usize>> for Congruence {
    type Error = String;

    fn try_from(labels: Vec<usize>) -> Result<Self, Self::Error> {
        let c = Congruence::from_labels(&labels);
        if c.partition != labels {
            return Err("partition is not canonical".into());
        }
        Ok(c)
    }
}

impl fmt::Display for Congruence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let blocks: Vec<String> = self
            .blocks()
            .iter()
            .map(|b| b.iter().map(|e| e.to_string()).collect::<Vec<_>>().join(","))
            .collect();
        write!(f, "{{{}}}", blocks.join("|"))
    }
}

impl fmt::Debug for Congruence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Congruence{self}")
    }
}

/// A reflexive, symmetric, compatible relation.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Tolerance {
    matrix: BinaryRelation,
}

impl Tolerance {
    pub fn new(alg: &FiniteAlgebra, matrix: BinaryRelation) -> Result<Self, RelationError> {
        if matrix.size() != alg.size()
            || !matrix.is_reflexive()
            || !matrix.is_symmetric()
            || !is_compatible(alg, &matrix)
        {
            return Err(RelationError::NotA("tolerance"));
        }
        Ok(Tolerance { matrix })
    }

    pub fn matrix(&self) -> &BinaryRelation {
        &self.matrix
    }
}

/// A reflexive, compatible relation.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AdmissibleRelation {
    matrix: BinaryRelation,
}

impl AdmissibleRelation {
    pub fn new(alg: &FiniteAlgebra, matrix: BinaryRelation) -> Result<Self, RelationError> {
        if matrix.size() != alg.size() || !matrix.is_reflexive() || !is_compatible(alg, &matrix) {
            return Err(RelationError::NotA("admissible relation"));
        }
        Ok(AdmissibleRelation { matrix })
    }

    pub fn matrix(&self) -> &BinaryRelation {
        &self.matrix
    }
}

/// Visits every tuple in `0..n` of length `len`, in lexicographic order.
mod tuples {
    pub fn odometer(n: usize, len: usize, mut visit: impl FnMut(&[usize])) {
        let mut tuple = vec![0; len];
        if len > 0 && n == 0 {
            return;
        }
        loop {
            visit(&tuple);
            let mut i = len;
            loop {
                if i == 0 {
                    return;
                }
                i -= 1;
                tuple[i] += 1;
                if tuple[i] < n {
                    break;
                }
                tuple[i] = 0;
            }
        }
    }
}

/// Whether `r` is closed under every operation applied componentwise.
pub fn is_compatible(alg: &FiniteAlgebra, r: &BinaryRelation) -> bool {
    let pairs = r.pairs();
    for (op, operation) in alg.operations().iter().enumerate() {
        let arity = operation.arity();
        let mut ok = true;
        odometer(pairs.len(), arity, |choice| {
            if !ok {
                return;
            }
            let left: Vec<usize> = choice.iter().map(|&i| pairs[i].0).collect();
            let right: Vec<usize> = choice.iter().map(|&i| pairs[i].1).collect();
            if !r.contains(alg.apply_unchecked(op, &left), alg.apply_unchecked(op, &right)) {
                ok = false;
            }
        });
        if !ok {
            return false;
        }
    }
    true
}

/// Least reflexive compatible relation containing `r`.
pub fn compatible_closure(alg: &FiniteAlgebra, r: &BinaryRelation) -> AdmissibleRelation {
    let mut current = r
        .union(&BinaryRelation::identity(alg.size()))
        .expect("sizes agree");
    loop {
        let pairs = current.pairs();
        let mut next = current.clone();
        for (op, operation) in alg.operations().iter().enumerate() {
            odometer(pairs.len(), operation.arity(), |choice| {
                let left: Vec<usize> = choice.iter().map(|&i| pairs[i].0).collect();
                let right: Vec<usize> = choice.iter().map(|&i| pairs[i].1).collect();
                next.insert(alg.apply_unchecked(op, &left), alg.apply_unchecked(op, &right));
            });
        }
        if next == current {
            return AdmissibleRelation { matrix: current };
        }
        current = next;
    }
}

/// Least congruence containing `pairs`.
///
/// Every pair that merges two classes is pushed through all basic
/// translations and the images are merged in turn; the classes stop
/// changing exactly when the equivalence is compatible.
pub fn cg(alg: &FiniteAlgebra, pairs: &[(usize, usize)]) -> Result<Congruence, RelationError> {
    let n = alg.size();
    if let Some(&element) = pairs.iter().flat_map(|(a, b)| [a, b]).find(|&&e| e >= n) {
        return Err(RelationError::ElementOutOfRange { element, size: n });
    }
    let mut uf = UnionFind::new(n);
    let mut pending: Vec<(usize, usize)> = pairs.iter().rev().copied().collect();
    while let Some((a, b)) = pending.pop() {
        if !uf.union(a, b) {
            continue;
        }
        for_each_translation(alg, a, b, |x, y| {
            if x != y {
                pending.push((x, y));
            }
        });
    }
    let labels: Vec<usize> = (0..n).map(|a| uf.find(a)).collect();
    Ok(Congruence::from_labels(&labels))
}

/// Join in the congruence lattice: equivalence closure of the union.
pub fn join(alg: &FiniteAlgebra, a: &Congruence, b: &Congruence) -> Result<Congruence, RelationError> {
    if a.size() != b.size() {
        return Err(RelationError::SizeMismatch(a.size(), b.size()));
    }
    let n = a.size();
    let mut uf = UnionFind::new(n);
    for e in 0..n {
        uf.union(e, a.partition[e]);
        uf.union(e, b.partition[e]);
    }
    let labels: Vec<usize> = (0..n).map(|e| uf.find(e)).collect();
    let joined = Congruence::from_labels(&labels);
    debug_assert!(joined.is_compatible_with(alg), "join of congruences lost compatibility");
    Ok(joined)
}

pub fn all_congruences(alg: &FiniteAlgebra) -> Result<Vec<Congruence>, RelationError> {
    all_congruences_bounded(alg, DEFAULT_CONGRUENCE_BOUND)
}

/// Every congruence of `alg`, as joins of principal congruences. Sorted by
/// rank (number of merges) and then by partition vector, so the identity
/// comes first and the full congruence last.
pub fn all_congruences_bounded(
    alg: &FiniteAlgebra,
    bound: usize,
) -> Result<Vec<Congruence>, RelationError> {
    let n = alg.size();
    if n > bound {
        return Err(RelationError::BoundExceeded { size: n, bound });
    }
    let mut seen: HashSet<Vec<usize>> = HashSet::new();
    let mut found: Vec<Congruence> = Vec::new();
    let identity = Congruence::identity(n);
    seen.insert(identity.partition.clone());
    found.push(identity);
    let mut principals = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            let c = cg(alg, &[(a, b)])?;
            if seen.insert(c.partition.clone()) {
                found.push(c.clone());
                principals.push(c);
            }
        }
    }
    // joining with principals alone reaches every join of principals
    let mut frontier: Vec<Congruence> = found.clone();
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for c in &frontier {
            for p in &principals {
                let j = join(alg, c, p)?;
                if seen.insert(j.partition.clone()) {
                    next.push(j.clone());
                    found.push(j);
                }
            }
        }
        frontier = next;
    }
    found.sort_by(|x, y| {
        (n - x.block_count(), &x.partition).cmp(&(n - y.block_count(), &y.partition))
    });
    Ok(found)
}

/// `R` = compatible closure of `pairs`, and the tolerance `R ∘ R˘`.
pub fn representable_tolerance(
    alg: &FiniteAlgebra,
    pairs: &[(usize, usize)],
) -> Result<(AdmissibleRelation, Tolerance), RelationError> {
    let n = alg.size();
    if let Some(&element) = pairs.iter().flat_map(|(a, b)| [a, b]).find(|&&e| e >= n) {
        return Err(RelationError::ElementOutOfRange { element, size: n });
    }
    let r = compatible_closure(alg, &BinaryRelation::from_pairs(n, pairs.iter().copied()));
    let delta = r.matrix.compose_unchecked(&r.matrix.converse());
    debug_assert!(delta.is_reflexive() && delta.is_symmetric() && is_compatible(alg, &delta));
    Ok((r, Tolerance { matrix: delta }))
}

/// Least tolerance containing `pairs`.
pub fn tolerance_generated(
    alg: &FiniteAlgebra,
    pairs: &[(usize, usize)],
) -> Result<Tolerance, RelationError> {
    let n = alg.size();
    if let Some(&element) = pairs.iter().flat_map(|(a, b)| [a, b]).find(|&&e| e >= n) {
        return Err(RelationError::ElementOutOfRange { element, size: n });
    }
    let sym = BinaryRelation::from_pairs(n, pairs.iter().flat_map(|&(a, b)| [(a, b), (b, a)]));
    // componentwise operations commute with swapping, so symmetry survives
    Ok(Tolerance {
        matrix: compatible_closure(alg, &sym).matrix,
    })
}

/// Which generating pair sets a sampled tolerance family draws from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleSpec {
    pub max_pairs: usize,
}

impl Default for SampleSpec {
    fn default() -> Self {
        SampleSpec { max_pairs: 2 }
    }
}

/// Sets of distinct off-diagonal pairs of size at most `max_pairs`, in
/// order of size and then lexicographically.
fn pair_sets(n: usize, max_pairs: usize) -> Vec<Vec<(usize, usize)>> {
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|a| (0..n).filter(move |&b| b != a).map(move |b| (a, b)))
        .collect();
    let mut out = vec![Vec::new()];
    let mut layer: Vec<Vec<usize>> = vec![Vec::new()];
    for _ in 0..max_pairs {
        let mut next = Vec::new();
        for set in &layer {
            let start = set.last().map_or(0, |&i| i + 1);
            for i in start..pairs.len() {
                let mut s = set.clone();
                s.push(i);
                next.push(s);
            }
        }
        out.extend(next.iter().map(|s| s.iter().map(|&i| pairs[i]).collect()));
        layer = next;
    }
    out
}

/// Distinct representable tolerances `R ∘ R˘` where `R` is the compatible
/// closure of a sampled pair set; first occurrence order.
pub fn representable_family(alg: &FiniteAlgebra, spec: SampleSpec) -> Vec<Tolerance> {
    let mut seen = HashSet::new();
    pair_sets(alg.size(), spec.max_pairs)
        .into_iter()
        .map(|ps| representable_tolerance(alg, &ps).expect("pairs in range").1)
        .filter(|t| seen.insert(t.clone()))
        .collect()
}

/// Distinct tolerances generated by sampled pair sets.
pub fn tolerance_family(alg: &FiniteAlgebra, spec: SampleSpec) -> Vec<Tolerance> {
    let mut seen = HashSet::new();
    pair_sets(alg.size(), spec.max_pairs)
        .into_iter()
        .map(|ps| tolerance_generated(alg, &ps).expect("pairs in range"))
        .filter(|t| seen.insert(t.clone()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::builtin;

    fn part(labels: &[usize]) -> Congruence {
        Congruence::from_labels(labels)
    }

    #[test]
    fn canonical_partition() {
        let c = part(&[7, 3, 7, 3]);
        assert_eq!(c.partition(), &[0, 1, 0, 1]);
        assert_eq!(c.to_string(), "{0,2|1,3}");
        assert_eq!(c.block_count(), 2);
        assert_eq!(Congruence::from_equivalence(c.matrix()), Some(c));
    }

    #[test]
    fn meet_of_set_partitions() {
        let a = part(&[0, 0, 1, 1]);
        let b = part(&[0, 1, 2, 0]);
        assert_eq!(a.meet(&b).unwrap(), Congruence::identity(4));
    }

    #[test]
    fn cg_examples() {
        let set4 = builtin("set4").unwrap();
        assert_eq!(cg(&set4, &[(2, 2)]).unwrap(), Congruence::identity(4));
        assert_eq!(cg(&set4, &[(0, 1), (2, 3)]).unwrap(), part(&[0, 0, 1, 1]));
        let chain = builtin("chain3-semilattice").unwrap();
        assert_eq!(cg(&chain, &[(1, 2)]).unwrap(), part(&[0, 1, 1]));
        assert!(matches!(
            cg(&chain, &[(1, 3)]),
            Err(RelationError::ElementOutOfRange { element: 3, .. })
        ));
        let lat = builtin("chain3-lattice").unwrap();
        assert_eq!(cg(&lat, &[(0, 1)]).unwrap(), part(&[0, 0, 2]));
    }

    #[test]
    fn join_examples() {
        let set4 = builtin("set4").unwrap();
        let t = part(&[0, 0, 1, 1]);
        assert_eq!(join(&set4, &t, &Congruence::identity(4)).unwrap(), t);
        assert_eq!(join(&set4, &t, &t).unwrap(), t);
        assert_eq!(
            join(&set4, &t, &part(&[0, 1, 1, 3])).unwrap(),
            Congruence::full(4)
        );
    }

    #[test]
    fn congruence_counts() {
        assert_eq!(all_congruences(&builtin("set4").unwrap()).unwrap().len(), 15);
        let lat2 = all_congruences(&builtin("lattice2").unwrap()).unwrap();
        assert_eq!(lat2, vec![Congruence::identity(2), Congruence::full(2)]);
        assert!(all_congruences(&builtin("z2").unwrap()).unwrap().len() <= 2);
        assert!(matches!(
            all_congruences_bounded(&builtin("set4").unwrap(), 3),
            Err(RelationError::BoundExceeded { size: 4, bound: 3 })
        ));
    }

    #[test]
    fn compatible_closure_examples() {
        let set3 = builtin("set3").unwrap();
        let r = BinaryRelation::from_pairs(3, [(0, 1)]);
        let expected = r.union(&BinaryRelation::identity(3)).unwrap();
        assert_eq!(compatible_closure(&set3, &r).matrix(), &expected);

        let lat = builtin("lattice2").unwrap();
        let le = BinaryRelation::from_pairs(2, [(0, 0), (1, 1), (0, 1)]);
        let once = compatible_closure(&lat, &le);
        assert_eq!(once.matrix(), &le);
        assert_eq!(compatible_closure(&lat, once.matrix()), once);
    }

    #[test]
    fn representable_tolerance_examples() {
        let lat = builtin("chain3-lattice").unwrap();
        let (r, d) = representable_tolerance(&lat, &[]).unwrap();
        assert_eq!(r.matrix(), &BinaryRelation::identity(3));
        assert_eq!(d.matrix(), &BinaryRelation::identity(3));

        let (r, d) = representable_tolerance(&lat, &[(0, 1), (2, 1)]).unwrap();
        assert!(r.matrix().is_subset(d.matrix()));
        assert!(r.matrix().converse().is_subset(d.matrix()));
        assert!(Tolerance::new(&lat, d.matrix().clone()).is_ok());

        let theta = cg(&lat, &[(1, 2)]).unwrap();
        let (_, d) = representable_tolerance(&lat, &theta.matrix().pairs()).unwrap();
        assert_eq!(d.matrix(), theta.matrix());
    }

    #[test]
    fn families_are_tolerances() {
        let lat = builtin("chain3-lattice").unwrap();
        assert_eq!(pair_sets(3, 2).len(), 1 + 6 + 15);
        for t in representable_family(&lat, SampleSpec::default())
            .into_iter()
            .chain(tolerance_family(&lat, SampleSpec::default()))
        {
            assert!(Tolerance::new(&lat, t.matrix().clone()).is_ok());
        }
    }

    #[test]
    fn rejects_non_admissible() {
        let lat = builtin("lattice2").unwrap();
        assert!(AdmissibleRelation::new(&lat, BinaryRelation::from_pairs(2, [(0, 1)])).is_err());
        assert!(Tolerance::new(&lat, BinaryRelation::identity(2)).is_ok());
    }
}
