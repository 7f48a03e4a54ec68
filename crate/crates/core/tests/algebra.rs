use apbw_core::algebroid::AdaptedPair;
use apbw_core::catalog::*;
use apbw_core::envelope::Envelope;
use apbw_core::modcat::{differential, quotient_module, random_element, Cochain, FlatModule};
use apbw_core::pbwiso::{project_word, symmetrize};
use apbw_core::ring::{q, CoefficientRing, Q};
use num_traits::{One, Zero};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rings() -> Vec<CoefficientRing> {
    vec![
        CoefficientRing::rational_field(),
        CoefficientRing::dual_numbers("eps"),
        CoefficientRing::polynomial(vec!["x".into(), "y".into()]),
        // Q[t]/(t^3) written out by hand.
        CoefficientRing::finite_dim(
            vec!["1".into(), "t".into(), "t2".into()],
            &[(1, 1, 2, q(1))],
            vec![false, true, true],
        )
        .unwrap(),
    ]
}

#[test]
fn catalog_rings_validate() {
    for ring in rings() {
        assert!(ring.validate().is_valid());
    }
}

#[test]
fn sl2_and_borel_pairs_validate() {
    assert!(sl2().validate().is_valid());
    for sub in [vec!["h"], vec!["h", "e"], vec!["h", "f"]] {
        assert!(pair_spanned_by(&sl2(), &sub).unwrap().validate().is_valid());
    }
    // span(e, f) is not closed.
    assert!(!pair_spanned_by(&sl2(), &["e", "f"])
        .unwrap()
        .validate()
        .is_valid());
}

#[test]
fn quotient_module_is_flat() {
    for (alg, sub) in [
        (sl2(), vec!["h", "e"]),
        (heisenberg(), vec!["x", "z"]),
        (dual_number_algebroid(), vec!["X"]),
        (plane_vector_fields(), vec!["dx"]),
    ] {
        let pair = pair_spanned_by(&alg, &sub).unwrap();
        assert!(quotient_module(&pair)
            .validate(&pair.sub_algebroid())
            .is_valid());
    }
}

#[test]
fn borel_action_on_the_quotient() {
    let pair = pair_spanned_by(&sl2(), &["h", "e"]).unwrap();
    let m = pair.quotient_action_matrix(0);
    assert_eq!(m[0][0].constant_term(), q(-2));
}

#[test]
fn degree_zero_differential_is_the_action() {
    let alg = plane_vector_fields();
    let ring = alg.ring();
    let x = ring.variable(0);
    let y = ring.variable(1);
    let e = FlatModule::new(
        "twisted",
        2,
        vec![
            vec![vec![y.clone(), ring.one()], vec![ring.zero(), y.clone()]],
            vec![vec![x.clone(), ring.zero()], vec![ring.zero(), x.clone()]],
        ],
    )
    .unwrap();
    let v = vec![ring.parse("x*y").unwrap(), ring.parse("y^2 + 1").unwrap()];
    let mut w = Cochain::zero(0, 2);
    w.set(vec![], v.clone());
    let dw = differential(&alg, &e, &w);
    for a in 0..alg.rank() {
        assert_eq!(dw.eval(&[a]), e.act(&alg, a, &v));
    }
}

#[test]
fn envelope_ranks_of_lie_algebras() {
    let env = Envelope::new(std::sync::Arc::new(sl2()));
    let ranks: Vec<usize> = (0..4).map(|k| env.gr_rank(k).unwrap()).collect();
    assert_eq!(ranks, vec![1, 3, 6, 10]);
    let plane = Envelope::new(std::sync::Arc::new(plane_vector_fields()));
    assert!(plane.gr_rank(1).is_err());
}

fn envelope_for(which: usize) -> Envelope {
    let pair = match which {
        0 => pair_spanned_by(&sl2(), &["h"]).unwrap(),
        1 => pair_spanned_by(&heisenberg(), &["x", "z"]).unwrap(),
        2 => pair_spanned_by(&dual_number_algebroid(), &["D"]).unwrap(),
        _ => AdaptedPair::new(std::sync::Arc::new(abelian(3)), 1).unwrap(),
    };
    Envelope::for_pair(&pair)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn ring_axioms(seed in any::<u64>(), which in 0usize..4) {
        let ring = rings().swap_remove(which);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let [a, b, c] = [0, 1, 2].map(|_| random_element(&ring, &mut rng, 2));
        prop_assert_eq!(ring.mul(&a, &b), ring.mul(&b, &a));
        prop_assert_eq!(ring.mul(&ring.mul(&a, &b), &c), ring.mul(&a, &ring.mul(&b, &c)));
        prop_assert_eq!(ring.mul(&a, &b.add(&c)), ring.mul(&a, &b).add(&ring.mul(&a, &c)));
        prop_assert_eq!(ring.mul(&ring.one(), &a), a.clone());
        prop_assert_eq!(ring.parse(&ring.format(&a)).unwrap(), a);
    }

    #[test]
    fn anchors_are_derivations(seed in any::<u64>()) {
        let alg = plane_vector_fields();
        let ring = alg.ring();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_element(ring, &mut rng, 3);
        let b = random_element(ring, &mut rng, 3);
        for l in 0..alg.rank() {
            let lhs = alg.act(l, &ring.mul(&a, &b));
            let rhs = ring.mul(&alg.act(l, &a), &b).add(&ring.mul(&a, &alg.act(l, &b)));
            prop_assert_eq!(lhs, rhs);
        }
    }

    /// Symmetrization is a section of the projection to the symmetric
    /// algebra.
    #[test]
    fn symmetrize_is_a_section(word in proptest::collection::vec(0usize..3, 0..5)) {
        let terms = symmetrize(&word);
        let total: Q = terms.iter().map(|(_, c)| c.clone()).sum();
        prop_assert!(total.is_one());
        let sorted = project_word(&word);
        for (w, c) in &terms {
            prop_assert!(!c.is_zero());
            prop_assert_eq!(project_word(w), sorted.clone());
        }
    }

    /// Straightening is idempotent and leaves the sorted word on top.
    #[test]
    fn straightening(word in proptest::collection::vec(0usize..3, 0..5), which in 0usize..4) {
        let env = envelope_for(which);
        let n = env.algebroid().rank();
        let word: Vec<usize> = word.into_iter().map(|x| x % n).collect();
        let s = env.straighten_word(&word);
        prop_assert_eq!(env.straighten(&s), s.clone());
        for (w, _) in s.terms() {
            prop_assert!(env.is_normal(w));
        }
        let top = s.component(word.len());
        let terms: Vec<_> = top.terms().collect();
        prop_assert_eq!(terms.len(), 1);
        let (w, c) = terms[0];
        prop_assert_eq!(project_word(w), project_word(&word));
        prop_assert_eq!(c, &env.ring().one());
    }
}
