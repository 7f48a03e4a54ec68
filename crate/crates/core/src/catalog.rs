//! Small standard algebroids and pairs used by tests, examples and the
//! fixture registry.

use std::sync::Arc;

use crate::algebroid::{AdaptedPair, Algebroid, LieElement};
use crate::error::{Error, Result};
use crate::ring::{CoefficientRing, RingElement};

/// Bracket table from entries `[l_i, l_j] = ... + c l_k ...`, filled in
/// antisymmetrically.
pub fn structure_from(
    n: usize,
    entries: &[(usize, usize, usize, RingElement)],
) -> Vec<Vec<LieElement>> {
    let mut s = vec![vec![vec![RingElement::zero(); n]; n]; n];
    for (i, j, k, c) in entries {
        s[*i][*j][*k].add_assign(c);
        s[*j][*i][*k].add_assign(&c.neg());
    }
    s
}

/// The same algebroid with generator `i` of the result being generator
/// `order[i]` of `alg`.
pub fn reorder(alg: &Algebroid, order: &[usize]) -> Result<Algebroid> {
    let n = alg.rank();
    let mut seen = vec![false; n];
    if order.len() != n
        || order
            .iter()
            .any(|&i| i >= n || std::mem::replace(&mut seen[i], true))
    {
        return Err(Error::Structural(format!(
            "{order:?} is not a permutation of 0..{n}"
        )));
    }
    let structure = order
        .iter()
        .map(|&i| {
            order
                .iter()
                .map(|&j| {
                    order
                        .iter()
                        .map(|&k| alg.structure(i, j)[k].clone())
                        .collect()
                })
                .collect()
        })
        .collect();
    Algebroid::new(
        alg.ring_arc(),
        order.iter().map(|&i| alg.names()[i].clone()).collect(),
        structure,
        order.iter().map(|&i| alg.anchor(i).clone()).collect(),
    )
}

/// Adapted pair whose sub-algebroid is spanned by the named generators; the
/// remaining generators keep their relative order.
pub fn pair_spanned_by(alg: &Algebroid, sub: &[&str]) -> Result<AdaptedPair> {
    let mut order = Vec::with_capacity(alg.rank());
    for name in sub {
        let i = alg
            .names()
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::Structural(format!("no generator named {name}")))?;
        order.push(i);
    }
    let rest: Vec<usize> = (0..alg.rank()).filter(|i| !order.contains(i)).collect();
    order.extend(rest);
    AdaptedPair::new(Arc::new(reorder(alg, &order)?), sub.len())
}

fn over_q(names: &[&str], entries: &[(usize, usize, usize, i64)]) -> Algebroid {
    let ring = Arc::new(CoefficientRing::rational_field());
    let n = names.len();
    let entries: Vec<_> = entries
        .iter()
        .map(|&(i, j, k, c)| (i, j, k, ring.from_int(c)))
        .collect();
    Algebroid::new(
        ring.clone(),
        names.iter().map(|s| s.to_string()).collect(),
        structure_from(n, &entries),
        vec![ring.zero_derivation(); n],
    )
    .expect("well-formed Lie algebra")
}

/// `sl_2` on `h, e, f`.
pub fn sl2() -> Algebroid {
    over_q(
        &["h", "e", "f"],
        &[(0, 1, 1, 2), (0, 2, 2, -2), (1, 2, 0, 1)],
    )
}

/// Heisenberg algebra on `x, y, z` with `[x, y] = z` central.
pub fn heisenberg() -> Algebroid {
    over_q(&["x", "y", "z"], &[(0, 1, 2, 1)])
}

pub fn abelian(n: usize) -> Algebroid {
    let names: Vec<String> = (1..=n).map(|i| format!("e{i}")).collect();
    Algebroid::abelian(Arc::new(CoefficientRing::rational_field()), names)
}

/// Over `Q[ε]/(ε²)`: `D` acts by `ε d/dε` and `X` has zero anchor, with
/// `[D, X] = X`.
pub fn dual_number_algebroid() -> Algebroid {
    let ring = Arc::new(CoefficientRing::dual_numbers("eps"));
    let eps = ring.basis_element(1);
    let d = ring
        .derivation(vec![ring.zero(), eps])
        .expect("ε d/dε is a derivation");
    Algebroid::new(
        ring.clone(),
        vec!["D".into(), "X".into()],
        structure_from(2, &[(0, 1, 1, ring.one())]),
        vec![d, ring.zero_derivation()],
    )
    .expect("well-formed algebroid")
}

/// Coordinate vector fields `∂_x, ∂_y` on `Q[x, y]`.
pub fn plane_vector_fields() -> Algebroid {
    let ring = Arc::new(CoefficientRing::polynomial(vec!["x".into(), "y".into()]));
    Algebroid::new(
        ring.clone(),
        vec!["dx".into(), "dy".into()],
        structure_from(2, &[]),
        vec![ring.partial(0), ring.partial(1)],
    )
    .expect("well-formed algebroid")
}

/// `Q[x] ∂`.
pub fn weyl_line() -> Algebroid {
    let ring = Arc::new(CoefficientRing::polynomial(vec!["x".into()]));
    Algebroid::new(
        ring.clone(),
        vec!["d".into()],
        structure_from(1, &[]),
        vec![ring.partial(0)],
    )
    .expect("well-formed algebroid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_validates() {
        for alg in [
            sl2(),
            heisenberg(),
            abelian(3),
            dual_number_algebroid(),
            plane_vector_fields(),
            weyl_line(),
        ] {
            let r = alg.validate();
            assert!(
                r.is_valid(),
                "{}: {:?}",
                alg.names().join(","),
                r.violations
            );
        }
    }

    #[test]
    fn reordering_preserves_brackets() {
        let pair = pair_spanned_by(&sl2(), &["e", "h"]).unwrap();
        let l = pair.ambient();
        assert_eq!(l.names(), ["e", "h", "f"]);
        // [h, e] = 2e in the new basis (e = 0, h = 1).
        assert_eq!(l.structure(1, 0)[0], l.ring().from_int(2));
        assert!(pair.validate().is_valid());
        assert!(!pair_spanned_by(&sl2(), &["e", "f"])
            .unwrap()
            .validate()
            .is_valid());
    }
}
