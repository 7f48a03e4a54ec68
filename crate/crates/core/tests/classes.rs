use apbw_core::catalog::*;
use apbw_core::modcat::{quotient_module, FlatModule};
use apbw_core::obstruction::*;
use apbw_core::pbwiso::{filtered_iso_search, recheck_iso, IsoSearch};
use apbw_core::ring::q;

fn scalar(pair: &apbw_core::algebroid::AdaptedPair, weights: &[i64]) -> FlatModule {
    let ring = pair.ring();
    let ops = weights
        .iter()
        .map(|&w| vec![vec![ring.constant(q(w))]])
        .collect();
    FlatModule::new("chi", 1, ops).unwrap()
}

#[test]
fn borel_quotient_class_is_nonzero_and_certified() {
    for sub in [["h", "e"], ["h", "f"]] {
        let pair = pair_spanned_by(&sl2(), &sub).unwrap();
        let e = quotient_module(&pair);
        let alpha = alpha_vanishing(&pair, &e, None).unwrap();
        assert_eq!(alpha.verdict, Verdict::NonVanishing);
        let cert = alpha.certificate.unwrap();
        assert!(recheck_alpha(&pair, &e, alpha.bound, &cert).unwrap());
        let tilde = tilde_vanishing(&pair, &e, None).unwrap();
        assert_eq!(tilde.verdict, Verdict::NonVanishing);
        assert!(certified_lift(&pair, &e, None).unwrap().is_none());
    }
}

#[test]
fn splittings_give_neighbourhood_lifts() {
    for (alg, sub) in [
        (sl2(), vec!["h"]),
        (heisenberg(), vec!["x", "z"]),
        (dual_number_algebroid(), vec!["X"]),
        (plane_vector_fields(), vec!["dx"]),
    ] {
        let pair = pair_spanned_by(&alg, &sub).unwrap();
        let e = quotient_module(&pair);
        let alpha = alpha_vanishing(&pair, &e, Some(2)).unwrap();
        assert_eq!(alpha.verdict, Verdict::Vanishes);
        let s = alpha.splitting.unwrap();
        assert!(recheck_splitting(&pair, &e, ClassKind::Extension, &s).unwrap());
        let lift = lift_from_extension_splitting(&pair, &e, &s);
        assert!(promote_to_neighbourhood(&pair, &e, &lift).is_ok());

        let tilde = tilde_vanishing(&pair, &e, Some(2)).unwrap();
        assert_eq!(tilde.verdict, Verdict::Vanishes);
        let s = tilde.splitting.unwrap();
        let lift = lift_from_jet_splitting(&pair, &e, &s);
        assert!(promote_to_neighbourhood(&pair, &e, &lift).is_ok());
    }
}

#[test]
fn comparison_map_vanishes_on_the_sub_algebroid() {
    for (alg, sub) in [
        (sl2(), vec!["h", "e"]),
        (heisenberg(), vec!["x"]),
        (dual_number_algebroid(), vec!["D"]),
    ] {
        let pair = pair_spanned_by(&alg, &sub).unwrap();
        let e = quotient_module(&pair);
        let c = compare_classes(&pair, &e, None).unwrap();
        assert!(c.vanishes_on_sub && c.lands_in_kernel && c.mutually_inverse && c.a_linear);
        assert!(c.verdicts_agree);
    }
}

#[test]
fn scalar_module_over_the_f_line() {
    // A character of span(f) extends to sl2 only when f acts by zero.
    let pair = pair_spanned_by(&sl2(), &["f"]).unwrap();
    let e = scalar(&pair, &[2]);
    let alpha = alpha_vanishing(&pair, &e, None).unwrap();
    assert_eq!(alpha.verdict, Verdict::NonVanishing);
    match filtered_iso_search(&pair, &e, 2, None).unwrap() {
        IsoSearch::NotExists(cert) => {
            let bound = apbw_core::modcat::default_bound(pair.ambient(), &[&e], &[]);
            assert!(recheck_iso(&pair, &e, 2, bound, &cert).unwrap());
        }
        _ => panic!("expected an obstruction"),
    }
    let trivial = scalar(&pair, &[0]);
    assert_eq!(
        alpha_vanishing(&pair, &trivial, None).unwrap().verdict,
        Verdict::Vanishes
    );
}
