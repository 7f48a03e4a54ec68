//! Truncated computations in the enveloping algebra of the free algebroid
//! on `L` and of the first-order neighbourhood `A^(1)` of `A` in `L`.
//!
//! `A^(1)` is never built as an algebroid. Its enveloping algebra is
//! presented by the words in the generators of `L` modulo
//! `a l - l a - [a, l]_L` for `a` in `A`, and only truncated pieces of the
//! induced module `U(A^(1)) ⊗_{U(A)} E` are computed.

use std::collections::{BTreeMap, HashMap};

use crate::algebroid::{AdaptedPair, Algebroid};
use crate::envelope::{move_left, times_ring, UElement, Word};
use crate::error::{Error, Result};
use crate::modcat::{
    column, unit_vector, vec_add, vec_scale, zero_matrix, zero_vector, FlatModule, Matrix, Vector,
};
use crate::obstruction::CertifiedLift;
use crate::pbwiso::{check_filtered_map, FilteredMapReport};
use crate::rewrite::{CompletionReport, RewriteSystem};
use crate::ring::RingElement;

/// Factor of a word expression in the free envelope.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Factor {
    Coeff(RingElement),
    Letter(usize),
}

/// Moves every coefficient of `expr` to the left with `m r = r m + m(r)`,
/// never reordering letters.
pub fn free_envelope_normalize(
    alg: &Algebroid,
    expr: &[Factor],
    truncation: usize,
) -> Result<UElement> {
    let ring = alg.ring();
    let letters = expr
        .iter()
        .filter(|f| matches!(f, Factor::Letter(_)))
        .count();
    if letters > truncation {
        return Err(Error::Truncation {
            length: letters,
            truncation,
        });
    }
    let mut acc = UElement::one(ring);
    for f in expr {
        acc = match f {
            Factor::Coeff(r) => times_ring(alg, &acc, r),
            Factor::Letter(x) => {
                let mut out = UElement::zero();
                for (w, c) in acc.terms() {
                    let mut v = w.clone();
                    v.push(*x);
                    out.add_term(v, c.clone());
                }
                out
            }
        };
    }
    Ok(acc)
}

/// R-ranks of the degree pieces of the truncated free envelope, read off
/// from the leading words of normalized monomials.
pub fn free_envelope_ranks(alg: &Algebroid, truncation: usize) -> Result<Vec<usize>> {
    let mut out = Vec::with_capacity(truncation + 1);
    for k in 0..=truncation {
        let mut tops = std::collections::BTreeSet::new();
        for w in crate::envelope::all_words(alg.rank(), k) {
            let expr: Vec<Factor> = w.iter().map(|&x| Factor::Letter(x)).collect();
            let u = free_envelope_normalize(alg, &expr, truncation)?;
            for (v, c) in u.component(k).terms() {
                if alg.ring().is_unit(c) {
                    tops.insert(v.clone());
                }
            }
        }
        out.push(tops.len());
    }
    Ok(out)
}

/// `F^N(U(A^(1)) ⊗_{U(A)} E)` on the basis `w ⊗ e_s` of irreducible coset
/// words, with its `A`-action and the class map from arbitrary words.
pub struct NeighbourhoodQuotient {
    pub truncation: usize,
    pub module: FlatModule,
    pub words: Vec<Word>,
    pub e_rank: usize,
    /// R-rank of each graded piece `F^k / F^{k-1}`.
    pub ranks: Vec<usize>,
    pub completion: CompletionReport,
    e: FlatModule,
    system: RewriteSystem,
    index: HashMap<Word, usize>,
}

/// `j^* j_!(1_A)` truncated at `N`, computed by completing the oriented
/// relations with tails in `A` killed.
pub fn a1_quotient(
    pair: &AdaptedPair,
    truncation: usize,
    budget: Option<usize>,
) -> Result<NeighbourhoodQuotient> {
    let one = FlatModule::trivial(&pair.sub_algebroid());
    build(pair, &one, truncation, budget, true)
}

/// `j^* j_!(E)` truncated at `N`.
pub fn neighbourhood_induced(
    pair: &AdaptedPair,
    e: &FlatModule,
    truncation: usize,
    budget: Option<usize>,
) -> Result<NeighbourhoodQuotient> {
    build(pair, e, truncation, budget, false)
}

fn build(
    pair: &AdaptedPair,
    e: &FlatModule,
    truncation: usize,
    budget: Option<usize>,
    kill_tail: bool,
) -> Result<NeighbourhoodQuotient> {
    let sub = pair.sub_algebroid();
    e.check_algebroid(&sub)?;
    let ring = pair.ring();
    let mut system = RewriteSystem::neighbourhood(pair, kill_tail);
    // The action of A raises word length by one before reducing.
    let completion = system.complete(truncation + 1, budget)?;
    let mut words = Vec::new();
    let mut ranks = Vec::with_capacity(truncation + 1);
    for k in 0..=truncation {
        let level: Vec<Word> = system
            .irreducible_words(k)
            .into_iter()
            .filter(|w| w.iter().all(|&x| !pair.is_sub_letter(x)))
            .collect();
        ranks.push(level.len() * e.rank);
        words.extend(level);
    }
    let index: HashMap<Word, usize> = words
        .iter()
        .enumerate()
        .map(|(i, w)| (w.clone(), i))
        .collect();
    let names = pair.ambient().names();
    let m = e.rank;
    let mut labels = Vec::with_capacity(words.len() * m);
    let mut degrees = Vec::with_capacity(words.len() * m);
    for w in &words {
        for s in 0..m {
            labels.push(format!("{}⊗{}", word_label(names, w), e.labels[s]));
            degrees.push(w.len());
        }
    }
    let mut quotient = NeighbourhoodQuotient {
        truncation,
        module: FlatModule {
            name: format!("jj({})", e.name),
            rank: words.len() * m,
            ops: Vec::new(),
            degrees,
            labels,
        },
        words: words.clone(),
        e_rank: m,
        ranks,
        completion,
        e: e.clone(),
        system,
        index,
    };
    let mut ops = Vec::with_capacity(pair.sub_rank());
    for a in 0..pair.sub_rank() {
        let mut mat = zero_matrix(quotient.module.rank, quotient.module.rank);
        for (wi, w) in words.iter().enumerate() {
            let mut aw = vec![a];
            aw.extend_from_slice(w);
            for s in 0..m {
                let col =
                    quotient.xi(pair, &UElement::word(ring, &aw), &unit_vector(ring, m, s))?;
                for (row, x) in col.into_iter().enumerate() {
                    mat[row][wi * m + s] = x;
                }
            }
        }
        ops.push(mat);
    }
    quotient.module.ops = ops;
    Ok(quotient)
}

pub fn word_label(names: &[String], w: &[usize]) -> String {
    if w.is_empty() {
        "1".into()
    } else {
        w.iter()
            .map(|&x| names[x].as_str())
            .collect::<Vec<_>>()
            .join("*")
    }
}

impl NeighbourhoodQuotient {
    pub fn position(&self, w: &[usize], s: usize) -> Option<usize> {
        self.index.get(w).map(|i| i * self.e_rank + s)
    }

    pub fn system(&self) -> &RewriteSystem {
        &self.system
    }

    /// Coordinates of the class of `u ⊗ v`.
    pub fn xi(&self, pair: &AdaptedPair, u: &UElement, v: &[RingElement]) -> Result<Vector> {
        let alg = pair.ambient();
        let ring = alg.ring();
        let sub = pair.sub_algebroid();
        let mut out = zero_vector(self.module.rank);
        for (s, r) in v.iter().enumerate() {
            if r.is_zero() {
                continue;
            }
            let normal = self.system.reduce(&times_ring(alg, u, r));
            for (w, c) in normal.terms() {
                let split = w
                    .iter()
                    .position(|&x| pair.is_sub_letter(x))
                    .unwrap_or(w.len());
                let (head, tail) = w.split_at(split);
                if tail.iter().any(|&x| !pair.is_sub_letter(x)) {
                    return Err(Error::Internal(format!(
                        "irreducible word {w:?} mixes letters after an A-letter"
                    )));
                }
                let mut vec = unit_vector(ring, self.e_rank, s);
                for &x in tail.iter().rev() {
                    vec = self.e.act(&sub, x, &vec);
                }
                for (t, d) in vec.iter().enumerate() {
                    if d.is_zero() {
                        continue;
                    }
                    for (d2, h) in move_left(alg, head, d) {
                        let pos = self.position(&h, t).ok_or(Error::Truncation {
                            length: h.len(),
                            truncation: self.truncation,
                        })?;
                        out[pos].add_assign(&ring.mul(c, &d2));
                    }
                }
            }
        }
        Ok(out)
    }

    /// Left multiplication by the generator `l` of `L`.
    pub fn left_mul(&self, pair: &AdaptedPair, l: usize, x: &[RingElement]) -> Result<Vector> {
        let alg = pair.ambient();
        let ring = alg.ring();
        let mut out = zero_vector(self.module.rank);
        for (i, c) in x.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let (wi, s) = (i / self.e_rank, i % self.e_rank);
            out[i].add_assign(&alg.act(l, c));
            let mut lw = vec![l];
            lw.extend_from_slice(&self.words[wi]);
            let img = self.xi(
                pair,
                &UElement::word(ring, &lw),
                &unit_vector(ring, self.e_rank, s),
            )?;
            out = vec_add(&out, &vec_scale(ring, c, &img));
        }
        Ok(out)
    }
}

/// `T^{≤N}(L/A)` on words in coset indices, with `A` acting by derivations.
pub struct TensorAlgebra {
    pub module: FlatModule,
    pub words: Vec<Word>,
    pub truncation: usize,
    index: HashMap<Word, usize>,
}

impl TensorAlgebra {
    pub fn position(&self, w: &[usize]) -> Option<usize> {
        self.index.get(w).copied()
    }
}

pub fn tensor_algebra(pair: &AdaptedPair, truncation: usize) -> TensorAlgebra {
    let q = pair.quotient_rank();
    let mut words = Vec::new();
    for k in 0..=truncation {
        words.extend(crate::envelope::all_words(q, k));
    }
    let index: HashMap<Word, usize> = words
        .iter()
        .enumerate()
        .map(|(i, w)| (w.clone(), i))
        .collect();
    let names = pair.ambient().names();
    let letters: Vec<String> = (0..q)
        .map(|t| names[pair.coset_letter(t)].clone())
        .collect();
    let mut t = TensorAlgebra {
        module: FlatModule {
            name: "T(L/A)".into(),
            rank: words.len(),
            ops: Vec::new(),
            degrees: words.iter().map(Vec::len).collect(),
            labels: words
                .iter()
                .map(|w| {
                    if w.is_empty() {
                        "1".into()
                    } else {
                        w.iter()
                            .map(|&i| letters[i].as_str())
                            .collect::<Vec<_>>()
                            .join("⊗")
                    }
                })
                .collect(),
        },
        words,
        truncation,
        index,
    };
    let ops = (0..pair.sub_rank())
        .map(|a| {
            let op = pair.quotient_action_matrix(a);
            let mut mat = zero_matrix(t.module.rank, t.module.rank);
            for col in 0..t.module.rank {
                let img = derive_words(
                    pair.ring(),
                    &t,
                    &op,
                    &unit_vector(pair.ring(), t.module.rank, col),
                )
                .expect("derivations preserve word length");
                for (row, x) in img.into_iter().enumerate() {
                    mat[row][col] = x;
                }
            }
            mat
        })
        .collect();
    t.module.ops = ops;
    t
}

/// Extends an operator on `L/A` to tensor words by the Leibniz rule, without
/// touching coefficients.
fn derive_words(
    ring: &crate::ring::CoefficientRing,
    t: &TensorAlgebra,
    op: &Matrix,
    p: &[RingElement],
) -> Result<Vector> {
    let mut out = zero_vector(t.module.rank);
    for (i, c) in p.iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        let w = &t.words[i];
        for k in 0..w.len() {
            for (u, row) in op.iter().enumerate() {
                let d = &row[w[k]];
                if d.is_zero() {
                    continue;
                }
                let mut v = w.clone();
                v[k] = u;
                let pos = t.position(&v).expect("same length");
                out[pos].add_assign(&ring.mul(c, d));
            }
        }
    }
    Ok(out)
}

/// `l • P = ∇_l P + l̄ ⊗ P`, with `∇` the certified lift on `L/A` extended to
/// tensor words and acting on coefficients through the anchor.
pub fn bullet_action(
    pair: &AdaptedPair,
    t: &TensorAlgebra,
    lift: &CertifiedLift,
    l: usize,
    p: &[RingElement],
) -> Result<Vector> {
    if lift.module() != &crate::modcat::quotient_module(pair) {
        return Err(Error::Contract(
            "bullet action needs a certified lift of L/A".into(),
        ));
    }
    let alg = pair.ambient();
    let ring = alg.ring();
    let mut out = derive_words(ring, t, &lift.lift().ops[l], p)?;
    for (i, c) in p.iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        out[i].add_assign(&alg.act(l, c));
        if !pair.is_sub_letter(l) {
            let mut v = vec![l - pair.sub_rank()];
            v.extend_from_slice(&t.words[i]);
            let pos = t.position(&v).ok_or(Error::Truncation {
                length: v.len(),
                truncation: t.truncation,
            })?;
            out[pos].add_assign(c);
        }
    }
    Ok(out)
}

/// `P • 1` for a word `P` in generators of `L`.
pub fn bullet_word(
    pair: &AdaptedPair,
    t: &TensorAlgebra,
    lift: &CertifiedLift,
    w: &[usize],
) -> Result<Vector> {
    let ring = pair.ring();
    let mut v = unit_vector(ring, t.module.rank, t.position(&[]).expect("empty word"));
    for &x in w.iter().rev() {
        v = bullet_action(pair, t, lift, x, &v)?;
    }
    Ok(v)
}

/// Checks `[a, l]_L • P = a • (l • P) - l • (a • P)` on all generator pairs
/// and tensor words of degree below the truncation.
pub fn check_bullet_relations(
    pair: &AdaptedPair,
    t: &TensorAlgebra,
    lift: &CertifiedLift,
) -> Result<bool> {
    let alg = pair.ambient();
    let ring = alg.ring();
    for a in 0..pair.sub_rank() {
        for l in 0..alg.rank() {
            for (i, w) in t.words.iter().enumerate() {
                if w.len() + 2 > t.truncation {
                    continue;
                }
                let p = unit_vector(ring, t.module.rank, i);
                let lp = bullet_action(pair, t, lift, l, &p)?;
                let ap = bullet_action(pair, t, lift, a, &p)?;
                let lhs = crate::modcat::vec_sub(
                    &bullet_action(pair, t, lift, a, &lp)?,
                    &bullet_action(pair, t, lift, l, &ap)?,
                );
                let mut rhs = zero_vector(t.module.rank);
                for (k, c) in alg.structure(a, l).iter().enumerate() {
                    if !c.is_zero() {
                        rhs = vec_add(
                            &rhs,
                            &vec_scale(ring, c, &bullet_action(pair, t, lift, k, &p)?),
                        );
                    }
                }
                if lhs != rhs {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

/// The map `P ↦ P • 1` from `j^* j_!(1_A)` to `T(L/A)`, with its verdicts.
/// Fails with an internal error if any verdict is false.
pub fn phi_map(
    pair: &AdaptedPair,
    lift: &CertifiedLift,
    truncation: usize,
    budget: Option<usize>,
) -> Result<FilteredMapReport> {
    let quotient = a1_quotient(pair, truncation, budget)?;
    let t = tensor_algebra(pair, truncation);
    let report = phi_report(pair, lift, &quotient, &t)?;
    report.ensure()?;
    Ok(report)
}

pub fn phi_matrix(
    pair: &AdaptedPair,
    lift: &CertifiedLift,
    quotient: &NeighbourhoodQuotient,
    t: &TensorAlgebra,
) -> Result<Matrix> {
    let mut mat = zero_matrix(t.module.rank, quotient.module.rank);
    for (j, w) in quotient.words.iter().enumerate() {
        for (row, x) in bullet_word(pair, t, lift, w)?.into_iter().enumerate() {
            mat[row][j] = x;
        }
    }
    Ok(mat)
}

fn phi_report(
    pair: &AdaptedPair,
    lift: &CertifiedLift,
    quotient: &NeighbourhoodQuotient,
    t: &TensorAlgebra,
) -> Result<FilteredMapReport> {
    let alg = pair.ambient();
    let ring = alg.ring();
    let sub = pair.sub_algebroid();
    let mat = phi_matrix(pair, lift, quotient, t)?;
    let coset_word = |w: &[usize]| -> Word { w.iter().map(|&x| x - pair.sub_rank()).collect() };
    let canonical: Vec<Option<usize>> = quotient
        .words
        .iter()
        .map(|w| t.position(&coset_word(w)))
        .collect();
    let mut report = check_filtered_map(
        "phi",
        &sub,
        &quotient.module,
        &t.module,
        &mat,
        &canonical,
        quotient.truncation,
    );

    // gr(φ ∘ ξ) = π on every free word.
    let mut gr_xi = true;
    for k in 0..=quotient.truncation {
        for w in crate::envelope::all_words(alg.rank(), k) {
            let x = quotient.xi(pair, &UElement::word(ring, &w), &[ring.one()])?;
            let img = crate::modcat::mat_vec(ring, &mat, &x);
            let mut expected = zero_vector(t.module.rank);
            if w.iter().all(|&l| !pair.is_sub_letter(l)) {
                expected[t.position(&coset_word(&w)).expect("word present")] = ring.one();
            }
            for (row, v) in img.iter().enumerate() {
                if t.module.degrees[row] == k && *v != expected[row] {
                    gr_xi = false;
                }
            }
        }
    }
    report.extra.insert("gr_phi_xi_is_projection".into(), gr_xi);

    // φ(l · x) = l • φ(x) for every generator of L.
    let mut a1_linear = true;
    for l in 0..alg.rank() {
        for j in 0..quotient.module.rank {
            if quotient.module.degrees[j] + 1 > quotient.truncation {
                continue;
            }
            let x = unit_vector(ring, quotient.module.rank, j);
            let lhs = crate::modcat::mat_vec(ring, &mat, &quotient.left_mul(pair, l, &x)?);
            let rhs = bullet_action(pair, t, lift, l, &column(&mat, j))?;
            if lhs != rhs {
                a1_linear = false;
            }
        }
    }
    report
        .extra
        .insert("neighbourhood_linear".into(), a1_linear);
    report.extra.insert(
        "bullet_relations".into(),
        check_bullet_relations(pair, t, lift)?,
    );
    Ok(report)
}

/// Per-degree ranks of `T^k(L/A)`, for comparison with the quotient.
pub fn tensor_ranks(pair: &AdaptedPair, truncation: usize) -> Vec<usize> {
    (0..=truncation)
        .map(|k| pair.quotient_rank().pow(k as u32))
        .collect()
}

/// Degrees where the quotient rank differs from the tensor rank.
pub fn rank_defects(
    quotient: &NeighbourhoodQuotient,
    pair: &AdaptedPair,
) -> BTreeMap<usize, (usize, usize)> {
    quotient
        .ranks
        .iter()
        .zip(tensor_ranks(pair, quotient.truncation))
        .enumerate()
        .filter(|(_, (a, b))| *a != b)
        .map(|(k, (a, b))| (k, (*a, b)))
        .collect()
}
