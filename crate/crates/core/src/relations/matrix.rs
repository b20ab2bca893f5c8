use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::RelationError;

/// A binary relation on `0..n`, stored as one bitset row per element.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BinaryRelation {
    n: usize,
    words: usize,
    bits: Vec<u64>,
}

impl BinaryRelation {
    pub fn empty(n: usize) -> Self {
        let words = n.div_ceil(64).max(1);
        BinaryRelation {
            n,
            words,
            bits: vec![0; n * words],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut r = Self::empty(n);
        for a in 0..n {
            r.insert(a, a);
        }
        r
    }

    pub fn full(n: usize) -> Self {
        let mut r = Self::empty(n);
        for a in 0..n {
            for b in 0..n {
                r.insert(a, b);
            }
        }
        r
    }

    pub fn from_pairs(n: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut r = Self::empty(n);
        for (a, b) in pairs {
            r.insert(a, b);
        }
        r
    }

    pub fn size(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn contains(&self, a: usize, b: usize) -> bool {
        self.bits[a * self.words + b / 64] >> (b % 64) & 1 == 1
    }

    /// Inserts `(a, b)`; returns whether it was new.
    #[inline]
    pub fn insert(&mut self, a: usize, b: usize) -> bool {
        let w = &mut self.bits[a * self.words + b / 64];
        let mask = 1u64 << (b % 64);
        let fresh = *w & mask == 0;
        *w |= mask;
        fresh
    }

    fn row(&self, a: usize) -> &[u64] {
        &self.bits[a * self.words..(a + 1) * self.words]
    }

    /// Elements related to `a`, in increasing order.
    pub fn successors(&self, a: usize) -> impl Iterator<Item = usize> + '_ {
        let n = self.n;
        self.row(a).iter().enumerate().flat_map(move |(wi, &word)| {
            (0..64)
                .filter(move |bit| word >> bit & 1 == 1)
                .map(move |bit| wi * 64 + bit)
                .filter(move |&b| b < n)
        })
    }

    /// All pairs in lexicographic order.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        (0..self.n)
            .flat_map(|a| self.successors(a).map(move |b| (a, b)))
            .collect()
    }

    pub fn count(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    fn check_size(&self, other: &Self) -> Result<(), RelationError> {
        if self.n != other.n {
            return Err(RelationError::SizeMismatch(self.n, other.n));
        }
        Ok(())
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.n == other.n && self.bits.iter().zip(&other.bits).all(|(a, b)| a & !b == 0)
    }

    /// Lexicographically first pair of `self` missing from `other`.
    pub fn first_pair_not_in(&self, other: &Self) -> Option<(usize, usize)> {
        (0..self.n).find_map(|a| {
            self.successors(a)
                .find(|&b| !other.contains(a, b))
                .map(|b| (a, b))
        })
    }

    pub fn is_reflexive(&self) -> bool {
        (0..self.n).all(|a| self.contains(a, a))
    }

    pub fn is_symmetric(&self) -> bool {
        self.pairs().into_iter().all(|(a, b)| self.contains(b, a))
    }

    pub fn is_transitive(&self) -> bool {
        self.compose_unchecked(self).is_subset(self)
    }

    pub fn is_equivalence(&self) -> bool {
        self.is_reflexive() && self.is_symmetric() && self.is_transitive()
    }

    /// `(a, c)` is in the result iff `a R b` and `b S c` for some `b`.
    pub fn compose(&self, other: &Self) -> Result<Self, RelationError> {
        self.check_size(other)?;
        Ok(self.compose_unchecked(other))
    }

    pub(crate) fn compose_unchecked(&self, other: &Self) -> Self {
        let mut out = Self::empty(self.n);
        for a in 0..self.n {
            let start = a * self.words;
            for b in self.successors(a) {
                let src = other.row(b);
                for (dst, &w) in out.bits[start..start + self.words].iter_mut().zip(src) {
                    *dst |= w;
                }
            }
        }
        out
    }

    pub fn converse(&self) -> Self {
        let mut out = Self::empty(self.n);
        for (a, b) in self.pairs() {
            out.insert(b, a);
        }
        out
    }

    pub fn intersect(&self, other: &Self) -> Result<Self, RelationError> {
        self.check_size(other)?;
        Ok(self.zip_words(other, |a, b| a & b))
    }

    pub fn union(&self, other: &Self) -> Result<Self, RelationError> {
        self.check_size(other)?;
        Ok(self.zip_words(other, |a, b| a | b))
    }

    fn zip_words(&self, other: &Self, f: impl Fn(u64, u64) -> u64) -> Self {
        BinaryRelation {
            n: self.n,
            words: self.words,
            bits: self.bits.iter().zip(&other.bits).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    /// Least equivalence relation containing `self`.
    pub fn equivalence_closure(&self) -> Self {
        let mut uf = super::UnionFind::new(self.n);
        for (a, b) in self.pairs() {
            uf.union(a, b);
        }
        let labels: Vec<usize> = (0..self.n).map(|a| uf.find(a)).collect();
        let mut out = Self::empty(self.n);
        for a in 0..self.n {
            for b in 0..self.n {
                if labels[a] == labels[b] {
                    out.insert(a, b);
                }
            }
        }
        out
    }
}

/// Alternating composition `b ∘ g ∘ b ∘ ...` with exactly `h` factors.
pub fn circ_h(b: &BinaryRelation, g: &BinaryRelation, h: usize) -> Result<BinaryRelation, RelationError> {
    if h == 0 {
        return Err(RelationError::ZeroFactors);
    }
    b.check_size(g)?;
    let mut acc = b.clone();
    let mut unchanged = 0;
    for i in 1..h {
        let next = acc.compose_unchecked(if i % 2 == 0 { b } else { g });
        // two consecutive steps without growth: every later step is a no-op too
        if next == acc {
            unchanged += 1;
            if unchanged == 2 {
                break;
            }
        } else {
            unchanged = 0;
        }
        acc = next;
    }
    Ok(acc)
}

/// Limit of the increasing chain `circ_h(b, g, h)`, h = 1, 2, ..., together
/// with the first `h` at which the limit is reached.
pub fn chain_fixpoint(
    b: &BinaryRelation,
    g: &BinaryRelation,
) -> Result<(BinaryRelation, usize), RelationError> {
    b.check_size(g)?;
    if !b.is_reflexive() || !g.is_reflexive() {
        return Err(RelationError::NotReflexive);
    }
    let n = b.size();
    let cap = 2 * n * n + 2;
    let mut chain = vec![b.clone()];
    loop {
        let h = chain.len();
        let next = chain[h - 1].compose_unchecked(if h % 2 == 0 { b } else { g });
        chain.push(next);
        let len = chain.len();
        if len >= 3 && chain[len - 1] == chain[len - 2] && chain[len - 2] == chain[len - 3] {
            let limit = chain.pop().expect("nonempty");
            let k_stab = chain.iter().position(|r| *r == limit).expect("limit present") + 1;
            return Ok((limit, k_stab));
        }
        assert!(len <= cap, "alternating chain failed to stabilize");
    }
}

impl fmt::Debug for BinaryRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BinaryRelation({}; {:?})", self.n, self.pairs())
    }
}

#[derive(Serialize, Deserialize)]
struct RelationDoc {
    size: usize,
    pairs: Vec<(usize, usize)>,
}

impl Serialize for BinaryRelation {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        RelationDoc {
            size: self.n,
            pairs: self.pairs(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for BinaryRelation {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let doc = RelationDoc::deserialize(d)?;
        if let Some(&(a, b)) = doc.pairs.iter().find(|&&(a, b)| a >= doc.size || b >= doc.size) {
            return Err(serde::de::Error::custom(format!(
                "pair ({a}, {b}) out of range for size {}",
                doc.size
            )));
        }
        Ok(BinaryRelation::from_pairs(doc.size, doc.pairs))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(n: usize, pairs: &[(usize, usize)]) -> BinaryRelation {
        BinaryRelation::from_pairs(n, pairs.iter().copied())
    }

    fn refl(n: usize, pairs: &[(usize, usize)]) -> BinaryRelation {
        rel(n, pairs).union(&BinaryRelation::identity(n)).unwrap()
    }

    #[test]
    fn compose_basics() {
        let s = rel(3, &[(0, 2), (1, 1)]);
        assert_eq!(BinaryRelation::identity(3).compose(&s).unwrap(), s);
        assert_eq!(BinaryRelation::empty(3).compose(&s).unwrap(), BinaryRelation::empty(3));
        let r = refl(3, &[(0, 1)]);
        let s = refl(3, &[(1, 2)]);
        assert!(r.compose(&s).unwrap().contains(0, 2));
        assert_eq!(
            r.compose(&BinaryRelation::identity(4)),
            Err(RelationError::SizeMismatch(3, 4))
        );
    }

    #[test]
    fn converse_basics() {
        let r = rel(3, &[(0, 1), (2, 2)]);
        assert_eq!(r.converse().converse(), r);
        assert_eq!(r.converse(), rel(3, &[(1, 0), (2, 2)]));
        let sym = rel(3, &[(0, 1), (1, 0)]);
        assert_eq!(sym.converse(), sym);
    }

    #[test]
    fn intersect_basics() {
        let r = rel(3, &[(0, 1), (2, 0)]);
        assert_eq!(r.intersect(&BinaryRelation::full(3)).unwrap(), r);
        assert_eq!(r.intersect(&r).unwrap(), r);
    }

    #[test]
    fn circ_h_counts_factors() {
        let b = refl(4, &[(0, 1)]);
        let g = refl(4, &[(1, 2)]);
        assert_eq!(circ_h(&b, &g, 1).unwrap(), b);
        assert_eq!(circ_h(&b, &g, 2).unwrap(), b.compose(&g).unwrap());
        assert_eq!(
            circ_h(&b, &g, 3).unwrap(),
            b.compose(&g).unwrap().compose(&b).unwrap()
        );
        assert_eq!(circ_h(&b, &g, 0), Err(RelationError::ZeroFactors));
    }

    #[test]
    fn circ_h_early_exit_matches_naive() {
        // not transitive: one unchanged step is not yet stable
        let b = refl(4, &[(0, 1), (1, 2), (2, 3)]);
        let g = BinaryRelation::identity(4);
        for h in 1..8 {
            let mut naive = b.clone();
            for i in 1..h {
                naive = naive.compose(if i % 2 == 0 { &b } else { &g }).unwrap();
            }
            assert_eq!(circ_h(&b, &g, h).unwrap(), naive, "h = {h}");
        }
    }

    #[test]
    fn equivalence_closure_basics() {
        assert_eq!(
            BinaryRelation::empty(3).equivalence_closure(),
            BinaryRelation::identity(3)
        );
        assert_eq!(
            rel(3, &[(0, 1), (1, 2)]).equivalence_closure(),
            BinaryRelation::full(3)
        );
        let eq = refl(3, &[(0, 2), (2, 0)]);
        assert_eq!(eq.equivalence_closure(), eq);
    }

    #[test]
    fn chain_fixpoint_examples() {
        let id = BinaryRelation::identity(4);
        assert_eq!(chain_fixpoint(&id, &id).unwrap(), (id.clone(), 1));
        let g = refl(4, &[(1, 2), (2, 1)]);
        let (limit, k) = chain_fixpoint(&id, &g).unwrap();
        assert_eq!(limit, g);
        assert!(k <= 2);
        let b = refl(4, &[(0, 1), (1, 0), (2, 3), (3, 2)]);
        assert_eq!(chain_fixpoint(&b, &g).unwrap().0, BinaryRelation::full(4));
        assert_eq!(
            chain_fixpoint(&rel(2, &[(0, 1)]), &id.clone()),
            Err(RelationError::SizeMismatch(2, 4))
        );
        assert_eq!(
            chain_fixpoint(&rel(2, &[(0, 1)]), &BinaryRelation::identity(2)),
            Err(RelationError::NotReflexive)
        );
    }

    #[test]
    fn successors_cross_word_boundary() {
        let r = rel(130, &[(5, 0), (5, 63), (5, 64), (5, 129)]);
        assert_eq!(r.successors(5).collect::<Vec<_>>(), vec![0, 63, 64, 129]);
        assert_eq!(r.count(), 4);
    }

    #[test]
    fn serde_roundtrip() {
        let r = rel(3, &[(0, 1), (2, 2)]);
        let s = serde_json::to_string(&r).unwrap();
        assert_eq!(s, r#"{"size":3,"pairs":[[0,1],[2,2]]}"#);
        let back: BinaryRelation = serde_json::from_str(&s).unwrap();
        assert_eq!(back, r);
        assert!(serde_json::from_str::<BinaryRelation>(r#"{"size":2,"pairs":[[0,2]]}"#).is_err());
    }
}
