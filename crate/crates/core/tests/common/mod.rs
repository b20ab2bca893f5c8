//! Brute-force oracles, random generators and golden data shared by the
//! integration tests.
#![allow(dead_code)]

use std::collections::BTreeSet;

use maltsev_kit::algebra::{unflatten, FiniteAlgebra};
use maltsev_kit::relations::BinaryRelation;
use rand::Rng;

/// Every partition of `0..n` as labels "least element of my block".
pub fn partitions(n: usize) -> Vec<Vec<usize>> {
    fn grow(n: usize, labels: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        let a = labels.len();
        if a == n {
            out.push(labels.clone());
            return;
        }
        let mut reps: Vec<usize> = labels.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
        reps.push(a);
        for r in reps {
            labels.push(r);
            grow(n, labels, out);
            labels.pop();
        }
    }
    let mut out = Vec::new();
    grow(n, &mut Vec::new(), &mut out);
    out
}

/// Componentwise compatibility of a partition with every operation,
/// checked over all pairs of argument tuples.
pub fn partition_is_compatible(alg: &FiniteAlgebra, labels: &[usize]) -> bool {
    let n = alg.size();
    alg.operations().iter().all(|op| {
        let r = op.arity();
        let tuples = n.pow(r as u32);
        (0..tuples).all(|s| {
            let u = unflatten(n, s, r);
            (0..tuples).all(|t| {
                let v = unflatten(n, t, r);
                if u.iter().zip(&v).any(|(a, b)| labels[*a] != labels[*b]) {
                    return true;
                }
                labels[op.value_at(s)] == labels[op.value_at(t)]
            })
        })
    })
}

pub fn brute_congruences(alg: &FiniteAlgebra) -> BTreeSet<Vec<usize>> {
    partitions(alg.size())
        .into_iter()
        .filter(|p| partition_is_compatible(alg, p))
        .collect()
}

/// Least compatible partition relating every listed pair.
pub fn brute_cg(alg: &FiniteAlgebra, pairs: &[(usize, usize)]) -> Vec<usize> {
    let candidates: Vec<Vec<usize>> = brute_congruences(alg)
        .into_iter()
        .filter(|p| pairs.iter().all(|&(a, b)| p[a] == p[b]))
        .collect();
    let below = |p: &Vec<usize>, q: &Vec<usize>| (0..p.len()).all(|a| q[a] == q[p[a]]);
    let least = candidates
        .iter()
        .find(|p| candidates.iter().all(|q| below(p, q)))
        .expect("compatible partitions form a lattice");
    least.clone()
}

/// Congruence partitions as "least element of my block" labels.
pub fn labels_of(r: &BinaryRelation) -> Vec<usize> {
    (0..r.size())
        .map(|a| (0..r.size()).find(|&b| r.contains(a, b)).expect("reflexive"))
        .collect()
}

pub fn random_relation(rng: &mut impl Rng, n: usize, density: f64) -> BinaryRelation {
    let mut r = BinaryRelation::empty(n);
    for a in 0..n {
        for b in 0..n {
            if rng.gen_bool(density) {
                r.insert(a, b);
            }
        }
    }
    r
}

pub fn random_reflexive(rng: &mut impl Rng, n: usize, density: f64) -> BinaryRelation {
    let mut r = random_relation(rng, n, density);
    for a in 0..n {
        r.insert(a, a);
    }
    r
}

/// Equivalence relation from random block labels.
pub fn random_equivalence(rng: &mut impl Rng, n: usize) -> BinaryRelation {
    let blocks = rng.gen_range(1..=n.max(1));
    let labels: Vec<usize> = (0..n).map(|_| rng.gen_range(0..blocks)).collect();
    BinaryRelation::from_pairs(
        n,
        (0..n).flat_map(|a| (0..n).map(move |b| (a, b))).filter(|&(a, b)| labels[a] == labels[b]),
    )
}

/// Least transitive relation containing `r`, by Warshall's algorithm.
pub fn transitive_closure(r: &BinaryRelation) -> BinaryRelation {
    let n = r.size();
    let mut m: Vec<Vec<bool>> = (0..n).map(|a| (0..n).map(|b| r.contains(a, b)).collect()).collect();
    for k in 0..n {
        for a in 0..n {
            if m[a][k] {
                let row = m[k].clone();
                for (cell, reach) in m[a].iter_mut().zip(row) {
                    *cell |= reach;
                }
            }
        }
    }
    BinaryRelation::from_pairs(
        n,
        (0..n).flat_map(|a| (0..n).map(move |b| (a, b))).filter(|&(a, b)| m[a][b]),
    )
}

/// Relational composition straight from the definition.
pub fn naive_compose(r: &BinaryRelation, s: &BinaryRelation) -> BinaryRelation {
    let n = r.size();
    BinaryRelation::from_pairs(
        n,
        (0..n)
            .flat_map(|a| (0..n).map(move |c| (a, c)))
            .filter(|&(a, c)| (0..n).any(|b| r.contains(a, b) && s.contains(b, c))),
    )
}

/// Corpus algebras small enough for brute-force partition enumeration.
pub const SMALL_CORPUS: &[&str] = &[
    "trivial",
    "set2",
    "set3",
    "set4",
    "semilattice2",
    "chain3-semilattice",
    "lattice2",
    "chain3-lattice",
    "z2",
    "d01-majority",
];

/// Identity texts and their canonical printed forms.
pub const IDENTITY_GOLDEN: &[(&str, &str)] = &[
    (
        "a & (b o c o b) <= (a & b) + c; forall a, b, c: congruence",
        "a & (b o c o b) <= (a & b) + c; forall a, b, c: congruence",
    ),
    (
        "a & (b o c o b) <= (a&b) o[k] c ; forall a,b,c: congruence; param k",
        "a & (b o c o b) <= (a & b) o[k] c; forall a, b, c: congruence; param k",
    ),
    (
        "a & (b o c o b) <= b o[k] (a&c) ; forall a,b,c: congruence; param k",
        "a & (b o c o b) <= b o[k] (a & c); forall a, b, c: congruence; param k",
    ),
    (
        "a&(t o c o t) <= (a&t) o[k] c; forall a: congruence; forall t: representable; forall c: congruence; param k",
        "a & (t o c o t) <= (a & t) o[k] c; forall a: congruence; forall t: representable; forall c: congruence; param k",
    ),
    (
        "a & (b o[m] c) <= (a & b) o[n] c; forall a,b,c: congruence; param m = 7; param n",
        "a & (b o[m] c) <= (a & b) o[n] c; forall a, b, c: congruence; param m = 7; param n",
    ),
    (
        "a & (b o[h] c) <= (a & b) o[k] c; forall a,b,c: congruence; param h; param k",
        "a & (b o[h] c) <= (a & b) o[k] c; forall a, b, c: congruence; param h; param k",
    ),
    (
        "a & (b o c) <= (a & b) o[k] c; forall a,b,c: congruence; param k",
        "a & (b o c) <= (a & b) o[k] c; forall a, b, c: congruence; param k",
    ),
    (
        "a & (b o c o b) <= (a & b) o[r] (a & c); forall a,b,c: congruence; param r",
        "a & (b o c o b) <= (a & b) o[r] (a & c); forall a, b, c: congruence; param r",
    ),
    (
        "a & (b o[3] c) <= (a&b) o[5] (a&c); forall a, b, c: congruence",
        "a & (b o[3] c) <= (a & b) o[5] (a & c); forall a, b, c: congruence",
    ),
    (
        "a & (b + c) <= (a & b) + (a & c); forall a,b,c: congruence",
        "a & (b + c) <= (a & b) + (a & c); forall a, b, c: congruence",
    ),
    (
        "a & (b + (a & c)) <= (a & b) + (a & c); forall a,b,c: congruence",
        "a & (b + (a & c)) <= (a & b) + (a & c); forall a, b, c: congruence",
    ),
    (
        "conv(a o b) <= conv(b) o conv(a); forall a, b: tolerance",
        "conv(a o b) <= conv(b) o conv(a); forall a, b: tolerance",
    ),
    ("a o b <= b o a; forall a,b: congruence", "a o b <= b o a; forall a, b: congruence"),
    ("a <= a o a; forall a: representable", "a <= a o a; forall a: representable"),
    (
        "(a o b) o c <= a o (b o c); forall a,b,c: congruence",
        "a o b o c <= a o (b o c); forall a, b, c: congruence",
    ),
    (
        "a o (b o c) <= (a o b) o c; forall a,b,c: congruence",
        "a o (b o c) <= a o b o c; forall a, b, c: congruence",
    ),
    (
        "a & b & c <= a & (b & c); forall a,b,c: congruence",
        "a & b & c <= a & (b & c); forall a, b, c: congruence",
    ),
    (
        "a + b + c <= a + (b + c); forall a,b,c: congruence",
        "a + b + c <= a + (b + c); forall a, b, c: congruence",
    ),
    (
        "conv(conv(t)) & s <= t; forall t, s: tolerance",
        "conv(conv(t)) & s <= t; forall t, s: tolerance",
    ),
    (
        "a & (b o c o b) <= (a & b) o[k] c\n; forall a: congruence\n; forall b, c: congruence\n; param k = 4",
        "a & (b o c o b) <= (a & b) o[k] c; forall a, b, c: congruence; param k = 4",
    ),
];

/// Malformed identity texts with the expected error position.
pub const MALFORMED: &[(&str, (usize, usize))] = &[
    ("a <= b o", (1, 9)),
    ("a <= ; forall a: congruence", (1, 6)),
    ("a <= a; forall a: lattice", (1, 19)),
    ("a <= a o[0] a; forall a: congruence", (1, 10)),
    ("a <= a; forall a congruence", (1, 18)),
    ("a <= a $ a; forall a: congruence", (1, 8)),
    ("a <= (a o a; forall a: congruence", (1, 12)),
    ("a <= a; forall a: congruence;\nparam", (2, 6)),
    ("conv a <= a; forall a: congruence", (1, 6)),
    ("a <= a o[k a; forall a: congruence; param k", (1, 12)),
    ("o <= o; forall o: congruence", (1, 1)),
    ("a <= a; forall a: congruence; param k = 99999999999999999999999", (1, 41)),
];

pub const JOIN_IDENTITY: &str = "a & (b o c o b) <= (a & b) + c; forall a, b, c: congruence";
pub const K_IDENTITY: &str = "a & (b o c o b) <= (a & b) o[k] c; forall a, b, c: congruence; param k";

/// Runs the command-line tool in-process.
pub fn run_cli(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("maltsev-kit").chain(args.iter().copied());
    let code = maltsev_kit::cli::run(argv, &mut out, &mut err);
    (
        code,
        String::from_utf8(out).expect("utf-8"),
        String::from_utf8(err).expect("utf-8"),
    )
}
