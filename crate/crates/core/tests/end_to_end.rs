mod common;

use common::SMALL_CORPUS;
use maltsev_kit::bounds::{
    build_level_chain, check_bip, check_k_identity, check_level_identity, check_nte, level_instances, r_of_k,
    BoundsContext, Hypothesis, NteFamily,
};
use maltsev_kit::corpus::builtin;
use maltsev_kit::free::{free_algebra, DEFAULT_ELEMENT_CAP};
use maltsev_kit::identity::CheckOptions;
use maltsev_kit::maltsev::{
    condition_ii_setup, decide_condition_ii, extract_terms, verify_condition_f, verify_day_conditions,
    verify_term_chain, ConditionII, TermChain,
};
use maltsev_kit::relations::all_congruences;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Free-algebra sizes and least k from the independent oracle script.
const GOLDEN: &[(&str, usize, Option<usize>)] = &[
    ("trivial", 1, Some(1)),
    ("set4", 4, None),
    ("semilattice2", 15, None),
    ("chain3-semilattice", 15, None),
    ("z2", 16, None),
    ("lattice2", 166, Some(3)),
    ("chain3-lattice", 166, Some(3)),
    ("d01-majority", 12, Some(3)),
];

fn extracted(name: &str) -> Option<TermChain> {
    let setup = condition_ii_setup(&builtin(name).unwrap(), DEFAULT_ELEMENT_CAP).unwrap();
    let k = decide_condition_ii(&setup, None).unwrap().min_k()?;
    Some(extract_terms(&setup, k).unwrap())
}

#[test]
fn free_sizes_and_decisions_match_oracle() {
    for &(name, size, k) in GOLDEN {
        let alg = builtin(name).unwrap();
        assert_eq!(free_algebra(&alg).unwrap().len(), size, "{name}");
        let setup = condition_ii_setup(&alg, DEFAULT_ELEMENT_CAP).unwrap();
        let expected = k.map_or(ConditionII::NoK, |k| ConditionII::MinK { k });
        assert_eq!(decide_condition_ii(&setup, None).unwrap(), expected, "{name}");
        if k.is_none() {
            for k_max in 1..=10 {
                assert_eq!(decide_condition_ii(&setup, Some(k_max)).unwrap(), ConditionII::NoK);
            }
        }
    }
}

#[test]
fn extracted_chains_satisfy_every_equation() {
    for &(name, _, k) in GOLDEN {
        let Some(k) = k else { continue };
        let setup = condition_ii_setup(&builtin(name).unwrap(), DEFAULT_ELEMENT_CAP).unwrap();
        let chain = extract_terms(&setup, k).unwrap();
        assert_eq!(chain.k(), k);
        assert!(setup.verify_links(chain.element_ids.as_ref().unwrap()).iter().all(|&ok| ok));
        assert!(verify_term_chain(&chain).holds(), "{name}");
        assert!(verify_condition_f(&chain).holds(), "{name}");
        assert!(verify_day_conditions(&chain).holds(), "{name}");
    }
}

#[test]
fn term_chains_give_the_identity_on_the_algebra() {
    for &(name, _, k) in GOLDEN {
        let Some(k) = k else { continue };
        let alg = builtin(name).unwrap();
        assert!(check_k_identity(&alg, k, &CheckOptions::default()).unwrap().holds(), "{name}");
    }
}

#[test]
fn condition_f_follows_from_a_c_d() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut premises_held = 0;
    for name in ["lattice2", "d01-majority", "chain3-lattice"] {
        let base = extracted(name).unwrap().padded(5);
        let n = base.base_size;
        for _ in 0..300 {
            let mut chain = base.clone();
            for _ in 0..rng.gen_range(1..4) {
                let i = rng.gen_range(1..chain.k());
                let t = rng.gen_range(0..n.pow(4));
                chain.tables[i][t] = rng.gen_range(0..n) as u8;
            }
            let r = verify_term_chain(&chain);
            let premises = ["a", "c", "d"].iter().all(|l| r.equation(l).unwrap().holds);
            if premises {
                premises_held += 1;
                assert!(verify_condition_f(&chain).holds(), "{name}");
            }
        }
    }
    assert!(premises_held > 0);
}

#[test]
fn level_certificates_for_every_instance() {
    for name in ["lattice2", "chain3-lattice"] {
        let alg = builtin(name).unwrap();
        let chain = extracted(name).unwrap();
        let congs = all_congruences(&alg).unwrap();
        let mut max = 0;
        for inst in level_instances(&congs) {
            let cert =
                build_level_chain(&chain, inst.elements, &congs[inst.alpha], &congs[inst.beta], &congs[inst.gamma])
                    .unwrap();
            assert!(cert.is_verified());
            max = max.max(cert.factors());
        }
        assert!(max as u64 <= r_of_k(3).unwrap());
    }
}

#[test]
fn bip_is_monotone_in_ell() {
    for name in ["lattice2", "chain3-lattice", "d01-majority"] {
        let alg = builtin(name).unwrap();
        let ctx = BoundsContext::own_k(&alg, DEFAULT_ELEMENT_CAP, CheckOptions::default()).unwrap().unwrap();
        let holds: Vec<bool> = (2..=4).map(|ell| check_bip(&ctx, ell).unwrap().holds()).collect();
        for w in holds.windows(2) {
            assert!(!w[1] || w[0], "{name}");
        }
        assert!(holds[0]);
        assert!(check_level_identity(&ctx).unwrap().holds());
    }
}

#[test]
fn nte_over_congruences_agrees_with_hk3() {
    let opts = CheckOptions::default();
    for name in SMALL_CORPUS {
        let alg = builtin(name).unwrap();
        for k in 1..=4 {
            let ctx = BoundsContext::with_hypothesis(&alg, k, Hypothesis::AlgebraTriples, opts);
            let nte = check_nte(&ctx, NteFamily::Congruences).unwrap();
            assert_eq!(nte.holds(), check_k_identity(&alg, k, &opts).unwrap().holds(), "{name} k={k}");
        }
    }
}
