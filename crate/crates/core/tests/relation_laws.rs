mod common;

use common::{naive_compose, random_equivalence, random_reflexive, random_relation, transitive_closure};
use maltsev_kit::relations::{chain_fixpoint, circ_h, BinaryRelation};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const INSTANCES: usize = 200;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[test]
fn compose_is_associative_and_matches_definition() {
    let mut rng = rng(1);
    for _ in 0..INSTANCES {
        let n = rng.gen_range(1..=9);
        let d = rng.gen_range(0.05..0.6);
        let (r, s, t) = (
            random_relation(&mut rng, n, d),
            random_relation(&mut rng, n, d),
            random_relation(&mut rng, n, d),
        );
        let rs = r.compose(&s).unwrap();
        assert_eq!(rs, naive_compose(&r, &s));
        assert_eq!(rs.compose(&t).unwrap(), r.compose(&s.compose(&t).unwrap()).unwrap());
    }
}

#[test]
fn converse_reverses_composition() {
    let mut rng = rng(2);
    for _ in 0..INSTANCES {
        let n = rng.gen_range(1..=9);
        let (r, s) = (random_relation(&mut rng, n, 0.3), random_relation(&mut rng, n, 0.3));
        assert_eq!(
            r.compose(&s).unwrap().converse(),
            s.converse().compose(&r.converse()).unwrap()
        );
        assert_eq!(r.converse().converse(), r);
    }
}

#[test]
fn circ_h_grows_with_h_on_reflexive_inputs() {
    let mut rng = rng(3);
    for _ in 0..INSTANCES {
        let n = rng.gen_range(1..=8);
        let (b, g) = (random_reflexive(&mut rng, n, 0.15), random_reflexive(&mut rng, n, 0.15));
        let mut prev = circ_h(&b, &g, 1).unwrap();
        assert_eq!(prev, b);
        for h in 2..=7 {
            let next = circ_h(&b, &g, h).unwrap();
            assert!(prev.is_subset(&next), "h = {h}");
            prev = next;
        }
    }
}

#[test]
fn chain_fixpoint_is_the_join() {
    let mut rng = rng(4);
    for _ in 0..INSTANCES {
        let n = rng.gen_range(1..=9);
        let (b, g) = (random_equivalence(&mut rng, n), random_equivalence(&mut rng, n));
        let (limit, k) = chain_fixpoint(&b, &g).unwrap();
        let join = transitive_closure(&b.union(&g).unwrap());
        assert_eq!(limit, join);
        assert_eq!(circ_h(&b, &g, k).unwrap(), join);
        assert!(limit.is_equivalence());
    }
}

#[test]
fn chain_fixpoint_of_reflexive_relations_is_transitive_closure() {
    let mut rng = rng(5);
    for _ in 0..INSTANCES {
        let n = rng.gen_range(1..=8);
        let (b, g) = (random_reflexive(&mut rng, n, 0.12), random_reflexive(&mut rng, n, 0.12));
        let (limit, _) = chain_fixpoint(&b, &g).unwrap();
        assert_eq!(limit, transitive_closure(&b.union(&g).unwrap()));
    }
}

#[test]
fn relations_round_trip_through_json() {
    let mut rng = rng(6);
    for _ in 0..50 {
        let n = rng.gen_range(1..=70);
        let r = random_relation(&mut rng, n, 0.1);
        let text = serde_json::to_string(&r).unwrap();
        assert_eq!(serde_json::from_str::<BinaryRelation>(&text).unwrap(), r);
    }
    assert!(serde_json::from_str::<BinaryRelation>(r#"{"size":2,"pairs":[[0,2]]}"#).is_err());
}
