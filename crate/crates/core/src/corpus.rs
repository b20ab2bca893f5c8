//! Built-in algebras addressable by name.

use crate::algebra::FiniteAlgebra;

pub const BUILTIN_NAMES: &[&str] = &[
    "trivial",
    "set2",
    "set3",
    "set4",
    "semilattice2",
    "chain3-semilattice",
    "lattice2",
    "chain3-lattice",
    "N5",
    "M3",
    "z2",
    "d01-majority",
];

/// Lattice on `0..n` from its order relation; meet and join are read off
/// as greatest lower and least upper bounds.
fn lattice_from_order(name: &str, n: usize, le: impl Fn(usize, usize) -> bool) -> FiniteAlgebra {
    let below = |c: usize| (0..n).filter(|&d| le(d, c)).count();
    let meet = |args: &[usize]| {
        (0..n)
            .filter(|&c| le(c, args[0]) && le(c, args[1]))
            .max_by_key(|&c| below(c))
            .expect("lattice has a bottom")
    };
    let join = |args: &[usize]| {
        (0..n)
            .filter(|&c| le(args[0], c) && le(args[1], c))
            .min_by_key(|&c| below(c))
            .expect("lattice has a top")
    };
    FiniteAlgebra::from_fns(name, n, vec![("meet", 2, &meet), ("join", 2, &join)])
        .expect("builtin lattice is valid")
}

fn set(name: &str, n: usize) -> FiniteAlgebra {
    FiniteAlgebra::new(name, n, vec![]).expect("valid")
}

pub fn builtin(name: &str) -> Option<FiniteAlgebra> {
    let alg = match name {
        "trivial" => set("trivial", 1),
        "set2" => set("set2", 2),
        "set3" => set("set3", 3),
        "set4" => set("set4", 4),
        "semilattice2" => FiniteAlgebra::from_fns(
            "semilattice2",
            2,
            vec![("meet", 2, &|a: &[usize]| a[0].min(a[1]))],
        )
        .ok()?,
        "chain3-semilattice" => FiniteAlgebra::from_fns(
            "chain3-semilattice",
            3,
            vec![("meet", 2, &|a: &[usize]| a[0].min(a[1]))],
        )
        .ok()?,
        "lattice2" => lattice_from_order("lattice2", 2, |a, b| a <= b),
        "chain3-lattice" => lattice_from_order("chain3-lattice", 3, |a, b| a <= b),
        // 0 < 1 < 2 < 4 and 0 < 3 < 4
        "N5" => lattice_from_order("N5", 5, |a, b| {
            a == b || a == 0 || b == 4 || (a, b) == (1, 2)
        }),
        // atoms 1, 2, 3
        "M3" => lattice_from_order("M3", 5, |a, b| a == b || a == 0 || b == 4),
        "z2" => FiniteAlgebra::from_fns(
            "z2",
            2,
            vec![
                ("add", 2, &|a: &[usize]| (a[0] + a[1]) % 2),
                ("neg", 1, &|a: &[usize]| a[0]),
                ("zero", 0, &|_: &[usize]| 0),
            ],
        )
        .ok()?,
        "d01-majority" => FiniteAlgebra::from_fns(
            "d01-majority",
            2,
            vec![("maj", 3, &|a: &[usize]| usize::from(a[0] + a[1] + a[2] >= 2))],
        )
        .ok()?,
        _ => return None,
    };
    Some(alg)
}
