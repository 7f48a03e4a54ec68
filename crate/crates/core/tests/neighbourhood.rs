use std::sync::Arc;

use apbw_core::algebroid::AdaptedPair;
use apbw_core::catalog::*;
use apbw_core::envelope::UElement;
use apbw_core::modcat::{
    quotient_module, random_element, vec_scale, vec_sub, zero_vector, FlatModule, Vector,
};
use apbw_core::neighborhood::*;
use apbw_core::obstruction::{certified_lift, CertifiedLift};
use apbw_core::pbwiso::eta_map;
use apbw_core::ring::RingElement;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn pairs_with_lifts() -> Vec<(&'static str, AdaptedPair)> {
    vec![
        (
            "plane",
            pair_spanned_by(&plane_vector_fields(), &["dx"]).unwrap(),
        ),
        (
            "dual_D",
            pair_spanned_by(&dual_number_algebroid(), &["D"]).unwrap(),
        ),
        (
            "dual_X",
            pair_spanned_by(&dual_number_algebroid(), &["X"]).unwrap(),
        ),
        ("sl2_h", pair_spanned_by(&sl2(), &["h"]).unwrap()),
        ("heis_x", pair_spanned_by(&heisenberg(), &["x"]).unwrap()),
    ]
}

fn lift_of_quotient(pair: &AdaptedPair) -> CertifiedLift {
    certified_lift(pair, &quotient_module(pair), Some(2))
        .unwrap()
        .expect("quotient class vanishes")
}

/// Random tensor of degree below the truncation.
fn random_tensor(pair: &AdaptedPair, t: &TensorAlgebra, rng: &mut ChaCha8Rng) -> Vector {
    let mut p = zero_vector(t.module.rank);
    for (i, w) in t.words.iter().enumerate() {
        if w.len() < t.truncation && rng.gen_bool(0.4) {
            p[i] = random_element(pair.ring(), rng, 1);
        }
    }
    p
}

#[test]
fn free_envelope_moves_coefficients_left() {
    let alg = plane_vector_fields();
    let ring = alg.ring();
    let r = ring.parse("x^2*y - 3*y").unwrap();
    for m in 0..alg.rank() {
        let got = free_envelope_normalize(&alg, &[Factor::Letter(m), Factor::Coeff(r.clone())], 2)
            .unwrap();
        let mut want = UElement::term(vec![m], r.clone());
        want.add_term(vec![], alg.act(m, &r));
        assert_eq!(got, want);
    }
    assert!(free_envelope_normalize(&alg, &vec![Factor::Letter(0); 3], 2).is_err());
}

#[test]
fn free_envelope_ranks_are_powers() {
    assert_eq!(free_envelope_ranks(&sl2(), 3).unwrap(), vec![1, 3, 9, 27]);
    assert_eq!(
        free_envelope_ranks(&abelian(2), 4).unwrap(),
        vec![1, 2, 4, 8, 16]
    );
}

#[test]
fn frozen_neighbourhood_ranks() {
    for (name, alg, sub, want) in [
        ("sl2_h", sl2(), vec!["h"], vec![1, 2, 4, 8]),
        ("sl2_he", sl2(), vec!["h", "e"], vec![1, 1, 1, 1]),
        ("heis_x", heisenberg(), vec!["x"], vec![1, 2, 4, 8]),
        ("heis_xz", heisenberg(), vec!["x", "z"], vec![1, 1, 1, 1]),
        (
            "dual_D",
            dual_number_algebroid(),
            vec!["D"],
            vec![1, 1, 1, 1],
        ),
    ] {
        let pair = pair_spanned_by(&alg, &sub).unwrap();
        let a1 = a1_quotient(&pair, 3, None).unwrap();
        assert_eq!(a1.ranks, want, "{name}");
        assert!(rank_defects(&a1, &pair).is_empty(), "{name}");
    }
}

#[test]
fn trivial_pairs_have_degenerate_neighbourhoods() {
    let full = AdaptedPair::new(Arc::new(sl2()), 3).unwrap();
    assert_eq!(a1_quotient(&full, 3, None).unwrap().ranks, vec![1, 0, 0, 0]);
    assert_eq!(tensor_ranks(&full, 3), vec![1, 0, 0, 0]);
}

#[test]
fn bullet_relations_hold_for_certified_lifts() {
    for (name, pair) in pairs_with_lifts() {
        let t = tensor_algebra(&pair, 3);
        let lift = lift_of_quotient(&pair);
        assert!(check_bullet_relations(&pair, &t, &lift).unwrap(), "{name}");
    }
}

#[test]
fn bullet_needs_a_lift_of_the_quotient() {
    let pair = pair_spanned_by(&dual_number_algebroid(), &["D"]).unwrap();
    let one = FlatModule::trivial(&pair.sub_algebroid());
    let lift = certified_lift(&pair, &one, None).unwrap().unwrap();
    let t = tensor_algebra(&pair, 2);
    let p = zero_vector(t.module.rank);
    assert!(bullet_action(&pair, &t, &lift, 0, &p).is_err());
}

#[test]
fn well_definedness_of_eta() {
    for (name, pair) in pairs_with_lifts() {
        if !pair.ring().is_finite_dim() {
            continue;
        }
        let e = quotient_module(&pair);
        let lift = lift_of_quotient(&pair);
        let report = eta_map(&pair, &e, &lift, 2, None).unwrap();
        assert_eq!(report.extra.get("well_defined"), Some(&true), "{name}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// `r (l • P) - l • (r P) = -l(r) P`.
    #[test]
    fn bullet_is_leibniz_in_coefficients(seed in any::<u64>(), which in 0usize..5) {
        let (_, pair) = pairs_with_lifts().swap_remove(which);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = tensor_algebra(&pair, 3);
        let lift = lift_of_quotient(&pair);
        let ring = pair.ring();
        let p = random_tensor(&pair, &t, &mut rng);
        let r = random_element(ring, &mut rng, 2);
        for l in 0..pair.ambient().rank() {
            let left = vec_sub(
                &vec_scale(ring, &r, &bullet_action(&pair, &t, &lift, l, &p).unwrap()),
                &bullet_action(&pair, &t, &lift, l, &vec_scale(ring, &r, &p)).unwrap(),
            );
            let lr = pair.ambient().act(l, &r);
            let right = vec_scale(ring, &lr.neg(), &p);
            prop_assert_eq!(left, right);
        }
    }

    /// Letters of `A` act on tensors without raising the degree.
    #[test]
    fn sub_letters_preserve_degree(seed in any::<u64>(), which in 0usize..5, k in 0usize..3) {
        let (_, pair) = pairs_with_lifts().swap_remove(which);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = tensor_algebra(&pair, 3);
        let lift = lift_of_quotient(&pair);
        let mut p = random_tensor(&pair, &t, &mut rng);
        for (i, w) in t.words.iter().enumerate() {
            if w.len() != k {
                p[i] = RingElement::zero();
            }
        }
        for a in 0..pair.sub_rank() {
            let out = bullet_action(&pair, &t, &lift, a, &p).unwrap();
            for (i, c) in out.iter().enumerate() {
                prop_assert!(c.is_zero() || t.words[i].len() == k);
            }
        }
    }

    /// `(r a) · c = r (a · c)` for the action of `A` on `L/A`.
    #[test]
    fn quotient_action_is_linear_in_the_ring(seed in any::<u64>(), which in 0usize..5) {
        let (_, pair) = pairs_with_lifts().swap_remove(which);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ring = pair.ring();
        let sub = pair.sub_algebroid();
        let q = quotient_module(&pair);
        let c: Vector = (0..q.rank).map(|_| random_element(ring, &mut rng, 2)).collect();
        let r = random_element(ring, &mut rng, 2);
        for a in 0..pair.sub_rank() {
            let mut ra = vec![RingElement::zero(); pair.sub_rank()];
            ra[a] = r.clone();
            prop_assert_eq!(q.act_by(&sub, &ra, &c), vec_scale(ring, &r, &q.act(&sub, a, &c)));
        }
    }
}
