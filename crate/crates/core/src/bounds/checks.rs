use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::{bip_exponent, r_of_k, s_of, BoundsError};
use crate::algebra::FiniteAlgebra;
use crate::free::FreeError;
use crate::identity::{
    check_quantified, find_min_parameter, parse_identity, pretty_print, CheckOptions, MinParam, Verdict,
};
use crate::maltsev::{
    condition_ii_setup, decide_condition_ii, verify_term_chain, ConditionII, MaltsevError, TermChain,
};
use crate::relations::SampleSpec;

/// Largest `ℓ` accepted by [`check_bip`]; the left side then has `2^ℓ − 1 = 31` factors.
pub const BIP_MAX_ELL: u64 = 5;

const K_IDENTITY: &str = "a & (b o c o b) <= (a & b) o[k] c; forall a, b, c: congruence; param k";
const LEVEL: &str = "a & (b o c o b) <= (a & b) o[r] (a & c); forall a, b, c: congruence; param r";
const NTE: &str =
    "a & (t o c o t) <= (a & t) o[k] c; forall a: congruence; forall t: representable; forall c: congruence; param k";
const NTE_CONGRUENCE: &str =
    "a & (t o c o t) <= (a & t) o[k] c; forall a: congruence; forall t: congruence; forall c: congruence; param k";
const BIP: &str = "a & (b o[m] c) <= (a & b) o[n] c; forall a, b, c: congruence; param m; param n";
const COR: &str = "a & (b o[m] c) <= (a & b) o[n] (a & c); forall a, b, c: congruence; param m; param n";

/// What establishes `a & (b o c o b) <= (a & b) o[k] c` before a consequence is checked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "grounds", rename_all = "snake_case")]
pub enum Hypothesis {
    /// Decided in the free algebra on four generators: it holds in the whole
    /// variety from `k_star` factors on.
    Variety { k_star: usize },
    /// A supplied term chain with `k` links satisfies the term equations, so
    /// the identity holds in the variety at `k`.
    TermChain { k: usize },
    /// The free algebra was out of reach; the identity holds for every
    /// congruence triple of the algebra itself.
    AlgebraTriples,
    NotMet,
}

impl Hypothesis {
    pub fn is_met(self) -> bool {
        self != Hypothesis::NotMet
    }
}

/// An algebra, a factor count `k`, and how the `k`-identity was established.
#[derive(Debug, Clone)]
pub struct BoundsContext<'a> {
    pub algebra: &'a FiniteAlgebra,
    pub k: usize,
    pub hypothesis: Hypothesis,
    pub options: CheckOptions,
}

impl<'a> BoundsContext<'a> {
    /// Decides the hypothesis in `F(4)` when it fits in `cap` elements, and on
    /// the algebra's own congruence triples otherwise.
    pub fn new(algebra: &'a FiniteAlgebra, k: usize, cap: usize, options: CheckOptions) -> Result<Self, BoundsError> {
        let hypothesis = match condition_ii_setup(algebra, cap) {
            Ok(setup) => match decide_condition_ii(&setup, Some(k))? {
                ConditionII::MinK { k: k_star } => Hypothesis::Variety { k_star },
                _ => Hypothesis::NotMet,
            },
            Err(MaltsevError::Free(FreeError::CapExceeded { .. })) => {
                if check_k_identity(algebra, k, &options)?.holds() {
                    Hypothesis::AlgebraTriples
                } else {
                    Hypothesis::NotMet
                }
            }
            Err(e) => return Err(e.into()),
        };
        Ok(BoundsContext {
            algebra,
            k,
            hypothesis,
            options,
        })
    }

    /// Context at the algebra's own least `k`: decided in `F(4)` when it fits
    /// in `cap` elements, otherwise the least `k` for the algebra's own
    /// congruence triples. `None` when no `k` exists.
    pub fn own_k(algebra: &'a FiniteAlgebra, cap: usize, options: CheckOptions) -> Result<Option<Self>, BoundsError> {
        let (k, hypothesis) = match condition_ii_setup(algebra, cap) {
            Ok(setup) => match decide_condition_ii(&setup, None)? {
                ConditionII::MinK { k } => (k, Hypothesis::Variety { k_star: k }),
                _ => return Ok(None),
            },
            Err(MaltsevError::Free(FreeError::CapExceeded { .. })) => {
                let ast = parse_identity(K_IDENTITY).expect("built-in identity parses");
                match find_min_parameter(algebra, &ast, &HashMap::new(), None, &options)? {
                    MinParam::MinK { k, .. } => (k, Hypothesis::AlgebraTriples),
                    _ => return Ok(None),
                }
            }
            Err(e) => return Err(e.into()),
        };
        Ok(Some(BoundsContext::with_hypothesis(algebra, k, hypothesis, options)))
    }

    /// Context grounded by a term chain that passes the term equations on the
    /// algebra; `None` if the chain fails them.
    pub fn from_term_chain(algebra: &'a FiniteAlgebra, chain: &TermChain, options: CheckOptions) -> Option<Self> {
        if chain.base_size != algebra.size() || !verify_term_chain(chain).holds() {
            return None;
        }
        let k = chain.k();
        Some(BoundsContext::with_hypothesis(algebra, k, Hypothesis::TermChain { k }, options))
    }

    /// Context with a hypothesis established elsewhere.
    pub fn with_hypothesis(algebra: &'a FiniteAlgebra, k: usize, hypothesis: Hypothesis, options: CheckOptions) -> Self {
        BoundsContext {
            algebra,
            k,
            hypothesis,
            options,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundsVerdict {
    pub identity: String,
    pub params: BTreeMap<String, usize>,
    pub hypothesis: Hypothesis,
    /// `None` when the hypothesis is not met.
    pub verdict: Option<Verdict>,
}

impl BoundsVerdict {
    pub fn holds(&self) -> bool {
        self.verdict.as_ref().is_some_and(Verdict::holds)
    }
}

fn run(
    ctx: &BoundsContext<'_>,
    text: &str,
    params: &[(&str, usize)],
) -> Result<BoundsVerdict, BoundsError> {
    let ast = parse_identity(text).expect("built-in identity parses");
    let map: HashMap<String, usize> = params.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    let verdict = if ctx.hypothesis.is_met() {
        Some(check_quantified(ctx.algebra, &ast, &map, &ctx.options)?)
    } else {
        None
    };
    Ok(BoundsVerdict {
        identity: pretty_print(&ast),
        params: map.into_iter().collect(),
        hypothesis: ctx.hypothesis,
        verdict,
    })
}

/// `a & (b o c o b) <= (a & b) o[k] c` over the congruence triples of `alg`.
pub fn check_k_identity(alg: &FiniteAlgebra, k: usize, opts: &CheckOptions) -> Result<Verdict, BoundsError> {
    let ast = parse_identity(K_IDENTITY).expect("built-in identity parses");
    Ok(check_quantified(alg, &ast, &[("k".to_string(), k)].into(), opts)?)
}

/// `a & (b o c o b) <= (a & b) o[r] (a & c)` with `r = r(max(k, 3))`.
pub fn check_level_identity(ctx: &BoundsContext<'_>) -> Result<BoundsVerdict, BoundsError> {
    let r = r_of_k(ctx.k.max(3) as u64)? as usize;
    run(ctx, LEVEL, &[("r", r)])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NteFamily {
    /// `R ∘ R˘` for the compatible closures of small pair sets.
    Representable(SampleSpec),
    /// The tolerance ranges over congruences.
    Congruences,
}

/// `a & (t o c o t) <= (a & t) o[k] c` with `t` from the chosen family.
pub fn check_nte(ctx: &BoundsContext<'_>, family: NteFamily) -> Result<BoundsVerdict, BoundsError> {
    match family {
        NteFamily::Representable(sample) => {
            let sampled = BoundsContext {
                options: CheckOptions { sample, ..ctx.options },
                ..ctx.clone()
            };
            run(&sampled, NTE, &[("k", ctx.k)])
        }
        NteFamily::Congruences => run(ctx, NTE_CONGRUENCE, &[("k", ctx.k)]),
    }
}

/// `a & (b o[2^ℓ−1] c) <= (a & b) o[2·r^(ℓ−1)] c`.
pub fn check_bip(ctx: &BoundsContext<'_>, ell: u64) -> Result<BoundsVerdict, BoundsError> {
    if !(2..=BIP_MAX_ELL).contains(&ell) {
        return Err(BoundsError::OutOfRange {
            name: "ell",
            value: ell,
            need: "2 <= ell <= 5",
        });
    }
    let n = bip_exponent(ctx.k.max(2) as u64, ell)? as usize;
    run(ctx, BIP, &[("m", (1 << ell) - 1), ("n", n)])
}

/// `a & (b o[2^ℓ−1] c) <= (a & b) o[2^s+1] (a & c)`, `s = (p−1)²(ℓ−1)+1`,
/// for a context whose `k` is `2^p`.
///
/// Factor counts past `usize` saturate: every alternating chain on a finite
/// algebra is stable long before that.
pub fn check_cor(ctx: &BoundsContext<'_>, p: u64, ell: u64) -> Result<BoundsVerdict, BoundsError> {
    let s = s_of(p, ell)?;
    let lhs = 1usize
        .checked_shl(u32::try_from(ell).map_err(|_| BoundsError::Overflow)?)
        .map_or(usize::MAX, |v| v - 1);
    let rhs = u32::try_from(s)
        .ok()
        .and_then(|s| 1usize.checked_shl(s))
        .map_or(usize::MAX, |v| v + 1);
    run(ctx, COR, &[("m", lhs), ("n", rhs)])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::builtin;
    use crate::free::DEFAULT_ELEMENT_CAP;
    use crate::maltsev::lattice_majority_terms;

    fn ctx(alg: &FiniteAlgebra, k: usize) -> BoundsContext<'_> {
        BoundsContext::new(alg, k, DEFAULT_ELEMENT_CAP, CheckOptions::default()).unwrap()
    }

    #[test]
    fn lattice2_consequences_hold() {
        let alg = builtin("lattice2").unwrap();
        let c = ctx(&alg, 3);
        assert_eq!(c.hypothesis, Hypothesis::Variety { k_star: 3 });
        assert!(check_level_identity(&c).unwrap().holds());
        assert!(check_bip(&c, 2).unwrap().holds());
        assert!(check_bip(&c, 3).unwrap().holds());
        assert!(check_nte(&c, NteFamily::Representable(SampleSpec { max_pairs: 1 })).unwrap().holds());
        assert!(check_nte(&c, NteFamily::Congruences).unwrap().holds());
        let c4 = ctx(&alg, 4);
        assert!(check_cor(&c4, 2, 2).unwrap().holds());
        assert!(check_bip(&c, 6).is_err());
    }

    #[test]
    fn hypothesis_not_met() {
        let alg = builtin("lattice2").unwrap();
        let c = ctx(&alg, 2);
        assert_eq!(c.hypothesis, Hypothesis::NotMet);
        let v = check_cor(&c, 1, 2).unwrap();
        assert!(v.verdict.is_none());
        assert!(!v.holds());
        let set = builtin("set3").unwrap();
        assert_eq!(ctx(&set, 5).hypothesis, Hypothesis::NotMet);
    }

    #[test]
    fn trivial_algebra_holds_everywhere() {
        let alg = builtin("trivial").unwrap();
        let c = ctx(&alg, 1);
        assert_eq!(c.hypothesis, Hypothesis::Variety { k_star: 1 });
        assert!(check_level_identity(&c).unwrap().holds());
        assert!(check_bip(&c, 3).unwrap().holds());
        assert!(check_cor(&c, 1, 2).unwrap().holds());
    }

    #[test]
    fn algebra_triples_fallback() {
        let alg = builtin("N5").unwrap();
        let c = BoundsContext::new(&alg, 3, 1000, CheckOptions::default()).unwrap();
        assert_eq!(c.hypothesis, Hypothesis::AlgebraTriples);
        assert!(check_level_identity(&c).unwrap().holds());
        for name in ["N5", "M3"] {
            let alg = builtin(name).unwrap();
            let own = BoundsContext::own_k(&alg, 1000, CheckOptions::default()).unwrap().unwrap();
            // the algebra's own triples need fewer factors than its variety
            assert_eq!((own.k, own.hypothesis), (2, Hypothesis::AlgebraTriples), "{name}");
            let chain = TermChain::from_terms(&alg, &lattice_majority_terms()).unwrap();
            let grounded = BoundsContext::from_term_chain(&alg, &chain, CheckOptions::default()).unwrap();
            assert_eq!(grounded.hypothesis, Hypothesis::TermChain { k: 3 });
            assert!(check_level_identity(&grounded).unwrap().holds());
            assert!(check_bip(&grounded, 3).unwrap().holds());
        }
        let set = builtin("set2").unwrap();
        assert!(BoundsContext::own_k(&set, 1000, CheckOptions::default()).unwrap().is_none());
    }
}
