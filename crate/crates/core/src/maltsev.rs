//! Deciding `(x,w) ∈ (α∧β) ∘_k γ` in the free algebra on four generators, and extraction of
//! the 4-ary terms `d_0, ..., d_k` from an alternating chain.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::{unflatten, FiniteAlgebra};
use crate::free::{free_algebra_with_cap, projection_table, FreeAlgebra, FreeError, Generator};
use crate::relations::{cg, join, Congruence, RelationError};
use crate::term::{term_table, Term, TermError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MaltsevError {
    #[error(transparent)]
    Free(#[from] FreeError),
    #[error(transparent)]
    Relation(#[from] RelationError),
    #[error(transparent)]
    Term(#[from] TermError),
    #[error("no alternating chain of length {0} from x to w")]
    NoPath(usize),
    #[error("term table has length {found}, expected {expected}")]
    TableLength { expected: usize, found: usize },
    #[error("a term chain needs at least two tables")]
    ShortChain,
}

/// The free algebra `F(4)` with `α = Cg(x,w)`, `β = Cg((x,y),(z,w))` and `γ = Cg(y,z)`.
#[derive(Debug, Clone)]
pub struct ConditionIISetup {
    pub free: FreeAlgebra,
    pub alpha: Congruence,
    pub beta: Congruence,
    pub gamma: Congruence,
    pub alpha_beta: Congruence,
    pub x: usize,
    pub y: usize,
    pub z: usize,
    pub w: usize,
}

pub fn condition_ii_setup(base: &FiniteAlgebra, cap: usize) -> Result<ConditionIISetup, MaltsevError> {
    let free = free_algebra_with_cap(base, cap)?;
    let [x, y, z, w] = free.generator_ids();
    let f = free.as_algebra();
    let alpha = cg(f, &[(x, w)])?;
    let beta = cg(f, &[(x, y), (z, w)])?;
    let gamma = cg(f, &[(y, z)])?;
    let alpha_beta = alpha.meet(&beta)?;
    assert!(alpha.related(x, w));
    assert!(beta.related(x, y) && gamma.related(y, z) && beta.related(z, w));
    Ok(ConditionIISetup {
        free,
        alpha,
        beta,
        gamma,
        alpha_beta,
        x,
        y,
        z,
        w,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "result", rename_all = "snake_case")]
pub enum ConditionII {
    /// `(x,w)` is not in `αβ + γ`, so no number of factors suffices.
    NoK,
    MinK { k: usize },
    AboveLimit { k_max: usize },
}

impl ConditionII {
    pub fn min_k(self) -> Option<usize> {
        match self {
            ConditionII::MinK { k } => Some(k),
            _ => None,
        }
    }
}

impl ConditionIISetup {
    /// Relation used by link `j` of `(α∧β) ∘_k γ`.
    fn link(&self, j: usize) -> &Congruence {
        if j.is_multiple_of(2) {
            &self.alpha_beta
        } else {
            &self.gamma
        }
    }

    /// Elements reachable from `x` after `j` links, for `j = 0, 1, ...`,
    /// until `w` is reached or `limit` links were taken.
    fn layers(&self, limit: usize) -> Vec<Vec<bool>> {
        let n = self.free.len();
        let mut layer = vec![false; n];
        layer[self.x] = true;
        let mut out = vec![layer];
        for j in 0..limit {
            let last = out.last().expect("nonempty");
            if j >= 1 && last[self.w] {
                break;
            }
            let theta = self.link(j).partition();
            let mut hit = vec![false; n];
            for (e, &on) in last.iter().enumerate() {
                if on {
                    hit[theta[e]] = true;
                }
            }
            out.push((0..n).map(|e| hit[theta[e]]).collect());
        }
        out
    }

    pub fn link_name(&self, j: usize) -> &'static str {
        if j.is_multiple_of(2) {
            "alpha_beta"
        } else {
            "gamma"
        }
    }

    /// Checks that consecutive chain elements are related by the alternating links.
    pub fn verify_links(&self, ids: &[usize]) -> Vec<bool> {
        ids.windows(2)
            .enumerate()
            .map(|(j, p)| self.link(j).related(p[0], p[1]))
            .collect()
    }
}

/// Least `k ≥ 1` with `(x,w) ∈ (α∧β) ∘_k γ` in `F(4)`.
///
/// Membership in the limit `αβ + γ` is decided first, so `NoK` never
/// depends on `k_max`.
pub fn decide_condition_ii(setup: &ConditionIISetup, k_max: Option<usize>) -> Result<ConditionII, MaltsevError> {
    let f = setup.free.as_algebra();
    let limit = join(f, &setup.alpha_beta, &setup.gamma)?;
    if !limit.related(setup.x, setup.w) {
        return Ok(ConditionII::NoK);
    }
    let bound = k_max.unwrap_or(usize::MAX).min(2 * setup.free.len() + 2);
    let layers = setup.layers(bound.max(1));
    let k = layers.len() - 1;
    if layers[k][setup.w] {
        Ok(ConditionII::MinK { k: k.max(1) })
    } else {
        Ok(ConditionII::AboveLimit {
            k_max: k_max.expect("the limit is reached within 2|F|+2 links"),
        })
    }
}

/// Tables `d_0, ..., d_k` over the base algebra, each of length `n^4`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermChain {
    pub base_size: usize,
    pub tables: Vec<Vec<u8>>,
    /// Free-algebra element indices, when the chain was extracted from `F(4)`.
    pub element_ids: Option<Vec<usize>>,
}

impl TermChain {
    pub fn new(base_size: usize, tables: Vec<Vec<u8>>) -> Result<Self, MaltsevError> {
        if tables.len() < 2 {
            return Err(MaltsevError::ShortChain);
        }
        let expected = base_size.pow(4);
        if let Some(t) = tables.iter().find(|t| t.len() != expected) {
            return Err(MaltsevError::TableLength {
                expected,
                found: t.len(),
            });
        }
        Ok(TermChain {
            base_size,
            tables,
            element_ids: None,
        })
    }

    /// Chain from terms in the variables `x, y, z, w`.
    pub fn from_terms(alg: &FiniteAlgebra, terms: &[Term]) -> Result<Self, MaltsevError> {
        let tables = terms
            .iter()
            .map(|t| {
                term_table(alg, t, &["x", "y", "z", "w"]).map(|v| v.into_iter().map(|a| a as u8).collect())
            })
            .collect::<Result<Vec<_>, _>>()?;
        TermChain::new(alg.size(), tables)
    }

    pub fn k(&self) -> usize {
        self.tables.len() - 1
    }

    /// Lengthens the chain to `k` links by repeating the last table.
    pub fn padded(&self, k: usize) -> TermChain {
        let mut out = self.clone();
        while out.k() < k {
            out.tables.push(out.tables.last().expect("nonempty").clone());
            if let Some(ids) = out.element_ids.as_mut() {
                ids.push(*ids.last().expect("nonempty"));
            }
        }
        out
    }

    #[inline]
    pub fn value(&self, i: usize, args: [usize; 4]) -> usize {
        let n = self.base_size;
        self.tables[i][((args[0] * n + args[1]) * n + args[2]) * n + args[3]] as usize
    }
}

/// Term chain read off the deterministic breadth-first path
/// `x = e_0, e_1, ..., e_k = w` in `F(4)`.
///
/// Each element's predecessor is the least element of the previous layer in
/// its block.
pub fn extract_terms(setup: &ConditionIISetup, k: usize) -> Result<TermChain, MaltsevError> {
    let k = k.max(1);
    let layers = setup.layers(k);
    let reached = layers.len() - 1;
    if !layers[reached][setup.w] {
        return Err(MaltsevError::NoPath(k));
    }
    let mut ids = vec![setup.w];
    for j in (0..reached).rev() {
        let e = *ids.last().expect("nonempty");
        let theta = setup.link(j);
        let pred = (0..setup.free.len())
            .find(|&p| layers[j][p] && theta.related(p, e))
            .ok_or(MaltsevError::NoPath(k))?;
        ids.push(pred);
    }
    ids.reverse();
    debug_assert_eq!(ids[0], setup.x);
    let n = setup.free.base().size();
    let tables = ids.iter().map(|&e| setup.free.elements()[e].values().to_vec()).collect();
    let mut chain = TermChain::new(n, tables)?;
    chain.element_ids = Some(ids);
    Ok(chain.padded(k))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EquationFailure {
    /// Index `i` of the first term involved.
    pub index: usize,
    pub tuple: [usize; 4],
    pub lhs: usize,
    pub rhs: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EquationReport {
    pub label: String,
    pub formula: String,
    pub holds: bool,
    pub checked: usize,
    pub first_failure: Option<EquationFailure>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainReport {
    pub k: usize,
    pub equations: Vec<EquationReport>,
}

impl ChainReport {
    pub fn holds(&self) -> bool {
        self.equations.iter().all(|e| e.holds)
    }

    pub fn equation(&self, label: &str) -> Option<&EquationReport> {
        self.equations.iter().find(|e| e.label == label)
    }
}

/// Checks `lhs(i, t) = rhs(i, t)` for every listed index and every tuple of `A^4`.
fn equation(
    chain: &TermChain,
    label: &str,
    formula: &str,
    indices: impl IntoIterator<Item = usize>,
    sides: impl Fn(usize, [usize; 4]) -> (usize, usize),
) -> EquationReport {
    let n = chain.base_size;
    let mut checked = 0;
    for i in indices {
        for t in 0..n.pow(4) {
            let u = unflatten(n, t, 4);
            let tuple = [u[0], u[1], u[2], u[3]];
            let (lhs, rhs) = sides(i, tuple);
            checked += 1;
            if lhs != rhs {
                return EquationReport {
                    label: label.to_string(),
                    formula: formula.to_string(),
                    holds: false,
                    checked,
                    first_failure: Some(EquationFailure { index: i, tuple, lhs, rhs }),
                };
            }
        }
    }
    EquationReport {
        label: label.to_string(),
        formula: formula.to_string(),
        holds: true,
        checked,
        first_failure: None,
    }
}

fn eq_a(c: &TermChain) -> EquationReport {
    equation(c, "a", "d_0(x,y,z,w) = x", [0], |_, [x, y, z, w]| (x, c.value(0, [x, y, z, w])))
}

fn eq_b(c: &TermChain) -> EquationReport {
    equation(c, "b", "d_i(x,x,w,w) = d_i+1(x,x,w,w), i even", (0..c.k()).step_by(2), |i, [x, _, _, w]| {
        (c.value(i, [x, x, w, w]), c.value(i + 1, [x, x, w, w]))
    })
}

fn eq_c(c: &TermChain) -> EquationReport {
    equation(c, "c", "d_i(x,y,z,x) = d_i+1(x,y,z,x), i even", (0..c.k()).step_by(2), |i, [x, y, z, _]| {
        (c.value(i, [x, y, z, x]), c.value(i + 1, [x, y, z, x]))
    })
}

fn eq_d(c: &TermChain) -> EquationReport {
    equation(c, "d", "d_i(x,y,y,w) = d_i+1(x,y,y,w), i odd", (1..c.k()).step_by(2), |i, [x, y, _, w]| {
        (c.value(i, [x, y, y, w]), c.value(i + 1, [x, y, y, w]))
    })
}

fn eq_e(c: &TermChain) -> EquationReport {
    let k = c.k();
    equation(c, "e", "d_k(x,y,z,w) = w", [k], |i, t| (c.value(i, t), t[3]))
}

fn eq_f(c: &TermChain) -> EquationReport {
    equation(c, "f", "d_i(x,y,y,x) = x", 0..=c.k(), |i, [x, y, _, _]| (c.value(i, [x, y, y, x]), x))
}

/// The defining equations (labels `a` to `e`) of the chain, exhaustively over `A^4`.
pub fn verify_term_chain(chain: &TermChain) -> ChainReport {
    ChainReport {
        k: chain.k(),
        equations: vec![eq_a(chain), eq_b(chain), eq_c(chain), eq_d(chain), eq_e(chain)],
    }
}

/// `d_i(x,y,y,x) = x` for every `i`.
pub fn verify_condition_f(chain: &TermChain) -> ChainReport {
    ChainReport {
        k: chain.k(),
        equations: vec![eq_f(chain)],
    }
}

/// Day's conditions for congruence modularity: equations `a`, `b`, `d`, `e` and `f`.
pub fn verify_day_conditions(chain: &TermChain) -> ChainReport {
    ChainReport {
        k: chain.k(),
        equations: vec![eq_a(chain), eq_b(chain), eq_d(chain), eq_e(chain), eq_f(chain)],
    }
}

/// The chain `x, m(x,y,w), m(x,z,w), w` for the lattice majority term
/// `m(u,v,t) = (u∧v) ∨ (u∧t) ∨ (v∧t)`.
pub fn lattice_majority_terms() -> Vec<Term> {
    let m = |u: &str, v: &str, t: &str| {
        let meet = |a: &str, b: &str| Term::app("meet", vec![Term::var(a), Term::var(b)]);
        Term::app(
            "join",
            vec![Term::app("join", vec![meet(u, v), meet(u, t)]), meet(v, t)],
        )
    };
    vec![Term::var("x"), m("x", "y", "w"), m("x", "z", "w"), Term::var("w")]
}

/// Projection chain `x, w`, valid only where `x = w` holds identically.
pub fn projection_chain(n: usize) -> TermChain {
    TermChain {
        base_size: n,
        tables: vec![projection_table(n, Generator::X), projection_table(n, Generator::W)],
        element_ids: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::builtin;
    use crate::free::DEFAULT_ELEMENT_CAP;

    fn setup(name: &str) -> ConditionIISetup {
        condition_ii_setup(&builtin(name).unwrap(), DEFAULT_ELEMENT_CAP).unwrap()
    }

    #[test]
    fn set4_congruences_are_equivalence_closures() {
        let s = setup("set4");
        assert_eq!(s.free.len(), 4);
        assert_eq!(s.alpha.blocks(), vec![vec![0, 3], vec![1], vec![2]]);
        assert_eq!(s.beta.blocks(), vec![vec![0, 1], vec![2, 3]]);
        assert_eq!(s.gamma.blocks(), vec![vec![0], vec![1, 2], vec![3]]);
        assert_eq!(decide_condition_ii(&s, None).unwrap(), ConditionII::NoK);
    }

    #[test]
    fn trivial_algebra_has_k_one() {
        let s = setup("trivial");
        assert_eq!(s.alpha.block_count(), 1);
        assert_eq!(decide_condition_ii(&s, None).unwrap(), ConditionII::MinK { k: 1 });
        let chain = extract_terms(&s, 1).unwrap();
        assert_eq!(chain.tables.len(), 2);
        assert_eq!(chain.tables[0], chain.tables[1]);
        assert!(verify_term_chain(&chain).holds());
    }

    #[test]
    fn decisions_match_oracle() {
        for (name, expected) in [
            ("semilattice2", ConditionII::NoK),
            ("chain3-semilattice", ConditionII::NoK),
            ("z2", ConditionII::NoK),
            ("lattice2", ConditionII::MinK { k: 3 }),
            ("chain3-lattice", ConditionII::MinK { k: 3 }),
            ("d01-majority", ConditionII::MinK { k: 3 }),
        ] {
            let s = setup(name);
            assert_eq!(decide_condition_ii(&s, None).unwrap(), expected, "{name}");
            if expected == ConditionII::NoK {
                assert_eq!(decide_condition_ii(&s, Some(1)).unwrap(), ConditionII::NoK);
            }
        }
        assert_eq!(
            decide_condition_ii(&setup("lattice2"), Some(2)).unwrap(),
            ConditionII::AboveLimit { k_max: 2 }
        );
    }

    #[test]
    fn extracted_chain_satisfies_all_equations() {
        let s = setup("lattice2");
        let chain = extract_terms(&s, 3).unwrap();
        let ids = chain.element_ids.clone().unwrap();
        assert_eq!(ids.first(), Some(&s.x));
        assert_eq!(ids.last(), Some(&s.w));
        assert!(s.verify_links(&ids).iter().all(|&ok| ok));
        assert!(verify_term_chain(&chain).holds());
        assert!(verify_condition_f(&chain).holds());
        assert!(verify_day_conditions(&chain).holds());
        assert!(verify_term_chain(&chain.padded(6)).holds());
        assert!(matches!(extract_terms(&s, 2), Err(MaltsevError::NoPath(2))));
    }

    #[test]
    fn broken_chains_are_reported() {
        let s = setup("lattice2");
        let mut chain = extract_terms(&s, 3).unwrap();
        chain.tables[0] = projection_table(2, Generator::Y);
        let report = verify_term_chain(&chain);
        let a = report.equation("a").unwrap();
        assert!(!a.holds);
        let f = a.first_failure.as_ref().unwrap();
        assert_ne!(f.tuple[0], f.tuple[1]);

        let mut chain = extract_terms(&s, 3).unwrap();
        // d_1(1,0,0,1) := 0
        chain.tables[1][0b1001] = 0;
        assert!(!verify_condition_f(&chain).holds());
        assert!(!verify_day_conditions(&chain).holds());
    }

    #[test]
    fn majority_chain_on_five_element_lattices() {
        for name in ["N5", "M3", "lattice2"] {
            let alg = builtin(name).unwrap();
            let chain = TermChain::from_terms(&alg, &lattice_majority_terms()).unwrap();
            assert!(verify_term_chain(&chain).holds(), "{name}");
            assert!(verify_day_conditions(&chain).holds(), "{name}");
        }
    }

    #[test]
    fn table_length_is_checked() {
        assert_eq!(
            TermChain::new(2, vec![vec![0; 16], vec![0; 15]]),
            Err(MaltsevError::TableLength { expected: 16, found: 15 })
        );
        assert!(verify_term_chain(&projection_chain(1)).holds());
    }
}
