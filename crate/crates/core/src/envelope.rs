//! The universal enveloping algebra `U(L)` with coefficients written on the
//! left of words in the generators, and a memoised PBW straightener.

use std::cell::RefCell;
use std::collections::btree_map::Entry;
use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use crate::algebroid::{AdaptedPair, Algebroid};
use crate::error::{Error, Result};
use crate::linalg::{Echelon, SparseVec};
use crate::ring::{CoefficientRing, Monomial, RingElement};

pub type Word = Vec<usize>;

/// Finite sum `sum c_w w` with coefficients to the left of each word.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct UElement {
    terms: BTreeMap<Word, RingElement>,
}

impl UElement {
    pub fn zero() -> Self {
        UElement::default()
    }

    pub fn one(ring: &CoefficientRing) -> Self {
        Self::term(vec![], ring.one())
    }

    pub fn term(w: Word, c: RingElement) -> Self {
        let mut out = UElement::zero();
        out.add_term(w, c);
        out
    }

    pub fn word(ring: &CoefficientRing, w: &[usize]) -> Self {
        Self::term(w.to_vec(), ring.one())
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Word, &RingElement)> {
        self.terms.iter()
    }

    pub fn into_terms(self) -> BTreeMap<Word, RingElement> {
        self.terms
    }

    pub fn coefficient(&self, w: &[usize]) -> RingElement {
        self.terms.get(w).cloned().unwrap_or_default()
    }

    pub fn add_term(&mut self, w: Word, c: RingElement) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(w) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                o.get_mut().add_assign(&c);
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn add_assign(&mut self, other: &UElement) {
        for (w, c) in &other.terms {
            self.add_term(w.clone(), c.clone());
        }
    }

    pub fn sub(&self, other: &UElement) -> UElement {
        let mut out = self.clone();
        for (w, c) in &other.terms {
            out.add_term(w.clone(), c.neg());
        }
        out
    }

    /// Left multiplication by a coefficient.
    pub fn scale_left(&self, ring: &CoefficientRing, r: &RingElement) -> UElement {
        let mut out = UElement::zero();
        for (w, c) in &self.terms {
            out.add_term(w.clone(), ring.mul(r, c));
        }
        out
    }

    pub fn degree(&self) -> Option<usize> {
        self.terms.keys().map(Vec::len).max()
    }

    /// Terms whose word has exactly length `k`.
    pub fn component(&self, k: usize) -> UElement {
        UElement {
            terms: self
                .terms
                .iter()
                .filter(|(w, _)| w.len() == k)
                .map(|(w, c)| (w.clone(), c.clone()))
                .collect(),
        }
    }

    pub fn format(&self, ring: &CoefficientRing, names: &[String]) -> String {
        if self.terms.is_empty() {
            return "0".into();
        }
        self.terms
            .iter()
            .map(|(w, c)| {
                let word = if w.is_empty() {
                    "1".to_string()
                } else {
                    w.iter()
                        .map(|&i| names[i].as_str())
                        .collect::<Vec<_>>()
                        .join("*")
                };
                format!("({})*{}", ring.format(c), word)
            })
            .collect::<Vec<_>>()
            .join(" + ")
    }
}

/// `w * r` rewritten with coefficients on the left: the sum over subsets of
/// letters acting on `r`, each followed by the complementary subword.
pub fn move_left(alg: &Algebroid, word: &[usize], r: &RingElement) -> Vec<(RingElement, Word)> {
    let mut acc: Vec<(RingElement, Word)> = vec![(r.clone(), Vec::new())];
    for &x in word.iter().rev() {
        let mut next = Vec::with_capacity(acc.len() * 2);
        for (c, w) in acc {
            let dc = alg.act(x, &c);
            let mut xw = Vec::with_capacity(w.len() + 1);
            xw.push(x);
            xw.extend_from_slice(&w);
            next.push((c, xw));
            if !dc.is_zero() {
                next.push((dc, w));
            }
        }
        acc = next;
    }
    acc
}

/// Right multiplication of an element by a coefficient.
pub fn times_ring(alg: &Algebroid, u: &UElement, r: &RingElement) -> UElement {
    let ring = alg.ring();
    let mut out = UElement::zero();
    for (w, c) in u.terms() {
        for (d, v) in move_left(alg, w, r) {
            out.add_term(v, ring.mul(c, &d));
        }
    }
    out
}

/// Action of a word on a coefficient: `u_1(u_2(... u_k(r)))`.
pub fn act_word_on_ring(alg: &Algebroid, w: &[usize], r: &RingElement) -> RingElement {
    let mut out = r.clone();
    for &x in w.iter().rev() {
        out = alg.act(x, &out);
        if out.is_zero() {
            break;
        }
    }
    out
}

/// Deglex comparison under a letter priority.
pub fn word_cmp(priority: &[usize], a: &[usize], b: &[usize]) -> std::cmp::Ordering {
    a.len().cmp(&b.len()).then_with(|| {
        a.iter()
            .map(|&x| priority[x])
            .cmp(b.iter().map(|&x| priority[x]))
    })
}

/// Letter priority for a pair: coset letters first, sub-algebroid letters
/// last, so PBW-normal words are an `L/A`-part followed by an `A`-tail.
pub fn pair_priority(pair: &AdaptedPair) -> Vec<usize> {
    let p = pair.sub_rank();
    let q = pair.quotient_rank();
    (0..p + q)
        .map(|i| if i >= p { i - p } else { q + i })
        .collect()
}

pub struct Envelope {
    alg: Arc<Algebroid>,
    priority: Vec<usize>,
    memo: RefCell<HashMap<(usize, Word), UElement>>,
}

impl Envelope {
    pub fn new(alg: Arc<Algebroid>) -> Self {
        let priority = (0..alg.rank()).collect();
        Self::with_priority(alg, priority)
    }

    pub fn for_pair(pair: &AdaptedPair) -> Self {
        Self::with_priority(pair.ambient_arc(), pair_priority(pair))
    }

    pub fn with_priority(alg: Arc<Algebroid>, priority: Vec<usize>) -> Self {
        Envelope {
            alg,
            priority,
            memo: RefCell::new(HashMap::new()),
        }
    }

    pub fn algebroid(&self) -> &Algebroid {
        &self.alg
    }

    pub fn ring(&self) -> &CoefficientRing {
        self.alg.ring()
    }

    pub fn priority(&self) -> &[usize] {
        &self.priority
    }

    pub fn is_normal(&self, w: &[usize]) -> bool {
        w.windows(2)
            .all(|p| self.priority[p[0]] <= self.priority[p[1]])
    }

    /// Letters sorted by priority.
    pub fn letters(&self) -> Vec<usize> {
        let mut l: Vec<usize> = (0..self.alg.rank()).collect();
        l.sort_by_key(|&x| self.priority[x]);
        l
    }

    /// PBW-normal words of length exactly `k`, in lexicographic priority order.
    pub fn normal_words(&self, k: usize) -> Vec<Word> {
        sorted_words(&self.letters(), k)
    }

    /// `x * w` for a normal word `w`, as a combination of normal words.
    pub fn insert(&self, x: usize, w: &[usize]) -> UElement {
        let ring = self.ring();
        if w.is_empty() || self.priority[x] <= self.priority[w[0]] {
            let mut v = Vec::with_capacity(w.len() + 1);
            v.push(x);
            v.extend_from_slice(w);
            return UElement::term(v, ring.one());
        }
        let key = (x, w.to_vec());
        if let Some(hit) = self.memo.borrow().get(&key) {
            return hit.clone();
        }
        let w0 = w[0];
        let rest = &w[1..];
        let inner = self.insert(x, rest);
        let mut out = self.left_mul_letter(w0, &inner);
        for (k, g) in self.alg.structure(x, w0).iter().enumerate() {
            if g.is_zero() {
                continue;
            }
            out.add_assign(&self.insert(k, rest).scale_left(ring, g));
        }
        self.memo.borrow_mut().insert(key, out.clone());
        out
    }

    /// `x * u` for `u` a combination of normal words.
    pub fn left_mul_letter(&self, x: usize, u: &UElement) -> UElement {
        let ring = self.ring();
        let mut out = UElement::zero();
        for (w, c) in u.terms() {
            out.add_assign(&self.insert(x, w).scale_left(ring, c));
            let dc = self.alg.act(x, c);
            if !dc.is_zero() {
                out.add_term(w.clone(), dc);
            }
        }
        out
    }

    /// PBW normal form of an arbitrary element.
    pub fn straighten(&self, u: &UElement) -> UElement {
        let ring = self.ring();
        let mut out = UElement::zero();
        for (w, c) in u.terms() {
            let mut acc = UElement::one(ring);
            for &x in w.iter().rev() {
                acc = self.left_mul_letter(x, &acc);
            }
            out.add_assign(&acc.scale_left(ring, c));
        }
        out
    }

    pub fn straighten_word(&self, w: &[usize]) -> UElement {
        self.straighten(&UElement::word(self.ring(), w))
    }

    /// Product of two normal forms.
    pub fn mul(&self, u: &UElement, v: &UElement) -> UElement {
        let ring = self.ring();
        let mut out = UElement::zero();
        for (w, c) in u.terms() {
            let mut acc = v.clone();
            for &x in w.iter().rev() {
                acc = self.left_mul_letter(x, &acc);
            }
            out.add_assign(&acc.scale_left(ring, c));
        }
        out
    }

    /// Action of `U(L)` on the coefficient ring through the anchor.
    pub fn act_on_ring(&self, u: &UElement, r: &RingElement) -> RingElement {
        let ring = self.ring();
        let mut out = RingElement::zero();
        for (w, c) in u.terms() {
            out.add_assign(&ring.mul(c, &act_word_on_ring(&self.alg, w, r)));
        }
        out
    }

    /// Rank of the degree-`k` part of the associated graded, computed from
    /// the top components of all straightened words of length `k`. Returns
    /// the Q-dimension of their R-span divided by `dim_Q R`.
    pub fn gr_rank(&self, k: usize) -> Result<usize> {
        let ring = self.ring();
        let Some(dim) = ring.dim() else {
            return Err(Error::Unsupported(
                "graded ranks need a finite-dimensional coefficient ring".into(),
            ));
        };
        let n = self.alg.rank();
        let basis = ring.generators();
        let mut keys: HashMap<(Word, Monomial), usize> = HashMap::new();
        let mut ech = Echelon::new();
        for w in all_words(n, k) {
            let top = self.straighten_word(&w).component(k);
            for b in &basis {
                let v = flatten(&top.scale_left(ring, b), &mut keys);
                ech.insert(v, SparseVec::new());
            }
        }
        let qdim = ech.rank();
        if qdim % dim != 0 {
            return Err(Error::Internal(format!(
                "graded piece of Q-dimension {qdim} is not free over a ring of dimension {dim}"
            )));
        }
        Ok(qdim / dim)
    }
}

pub fn flatten(u: &UElement, keys: &mut HashMap<(Word, Monomial), usize>) -> SparseVec {
    let mut v = SparseVec::new();
    for (w, c) in u.terms() {
        for (m, x) in c.terms() {
            let next = keys.len();
            let idx = *keys.entry((w.clone(), m.clone())).or_insert(next);
            v.insert(idx, x.clone());
        }
    }
    v
}

/// All words of length `k` over `n` letters, lexicographic.
pub fn all_words(n: usize, k: usize) -> Vec<Word> {
    let mut out = vec![Vec::new()];
    for _ in 0..k {
        let mut next = Vec::with_capacity(out.len() * n);
        for w in &out {
            for x in 0..n {
                let mut v = w.clone();
                v.push(x);
                next.push(v);
            }
        }
        out = next;
    }
    out
}

/// Nondecreasing words of length `k` in the given ordered alphabet.
pub fn sorted_words(letters: &[usize], k: usize) -> Vec<Word> {
    fn rec(letters: &[usize], start: usize, k: usize, cur: &mut Word, out: &mut Vec<Word>) {
        if k == 0 {
            out.push(cur.clone());
            return;
        }
        for i in start..letters.len() {
            cur.push(letters[i]);
            rec(letters, i, k - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(letters, 0, k, &mut Vec::new(), &mut out);
    out
}

pub fn binomial(n: usize, k: usize) -> usize {
    let mut r: u128 = 1;
    for i in 0..k {
        r = r * (n - i) as u128 / (i as u128 + 1);
    }
    r as usize
}

/// Scalar `c * 1` in `U(L)`.
pub fn scalar(c: RingElement) -> UElement {
    UElement::term(vec![], c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebroid::LieElement;

    fn sl2() -> Arc<Algebroid> {
        let ring = Arc::new(CoefficientRing::rational_field());
        let c = |v: [i64; 3]| -> LieElement { v.iter().map(|x| ring.from_int(*x)).collect() };
        let z = c([0, 0, 0]);
        let structure = vec![
            vec![z.clone(), c([0, 2, 0]), c([0, 0, -2])],
            vec![c([0, -2, 0]), z.clone(), c([1, 0, 0])],
            vec![c([0, 0, 2]), c([-1, 0, 0]), z.clone()],
        ];
        Arc::new(
            Algebroid::new(
                ring.clone(),
                vec!["h".into(), "e".into(), "f".into()],
                structure,
                vec![ring.zero_derivation(); 3],
            )
            .unwrap(),
        )
    }

    #[test]
    fn commutator_in_sl2() {
        let env = Envelope::new(sl2());
        let ring = env.ring().clone();
        // f e = e f - h
        let fe = env.straighten_word(&[2, 1]);
        let mut expected = UElement::word(&ring, &[1, 2]);
        expected.add_term(vec![0], ring.from_int(-1));
        assert_eq!(fe, expected);
    }

    #[test]
    fn gr_ranks_of_sl2() {
        let env = Envelope::new(sl2());
        for k in 0..=3 {
            assert_eq!(env.gr_rank(k).unwrap(), binomial(3 + k - 1, k));
        }
    }

    #[test]
    fn move_left_on_the_line() {
        let ring = Arc::new(CoefficientRing::polynomial(vec!["x".into()]));
        let alg = Algebroid::new(
            ring.clone(),
            vec!["d".into()],
            vec![vec![vec![RingElement::zero()]]],
            vec![ring.partial(0)],
        )
        .unwrap();
        // d d x^2 = x^2 d d + 4x d + 2
        let terms = move_left(&alg, &[0, 0], &ring.parse("x^2").unwrap());
        let mut u = UElement::zero();
        for (c, w) in terms {
            u.add_term(w, c);
        }
        assert_eq!(u.coefficient(&[0, 0]), ring.parse("x^2").unwrap());
        assert_eq!(u.coefficient(&[0]), ring.parse("4*x").unwrap());
        assert_eq!(u.coefficient(&[]), ring.from_int(2));
    }

    #[test]
    fn sorted_word_counts() {
        assert_eq!(sorted_words(&[0, 1, 2], 3).len(), 10);
        assert_eq!(all_words(2, 3).len(), 8);
    }
}
