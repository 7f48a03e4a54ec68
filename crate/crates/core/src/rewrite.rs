//! Word rewriting with coefficients on the left, and a truncated completion
//! procedure checking overlaps, coefficient commutation and tail rules.

use std::cell::RefCell;
use std::cmp::Ordering;
use std::collections::{HashMap, VecDeque};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::algebroid::{AdaptedPair, Algebroid};
use crate::envelope::{move_left, pair_priority, times_ring, word_cmp, UElement, Word};
use crate::error::{Error, Result};
use crate::ring::CoefficientRing;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rule {
    pub lhs: Word,
    pub rhs: UElement,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Strategy {
    Leftmost,
    Rightmost,
    Random(u64),
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompletionReport {
    pub overlaps_examined: usize,
    pub coefficient_checks: usize,
    pub tail_checks: usize,
    pub rules_added: usize,
    pub max_length: usize,
}

pub struct RewriteSystem {
    alg: Arc<Algebroid>,
    priority: Vec<usize>,
    rules: Vec<Rule>,
    /// Letters that rewrite to zero when they end a word.
    killed: Vec<bool>,
    collapsed: bool,
    memo: RefCell<HashMap<Word, UElement>>,
}

enum Redex {
    Rule(usize, usize),
    Tail,
}

impl RewriteSystem {
    pub fn new(
        alg: Arc<Algebroid>,
        priority: Vec<usize>,
        rules: Vec<Rule>,
        killed: Vec<bool>,
    ) -> Self {
        let n = alg.rank();
        let killed = if killed.is_empty() {
            vec![false; n]
        } else {
            killed
        };
        RewriteSystem {
            alg,
            priority,
            rules,
            killed,
            collapsed: false,
            memo: RefCell::new(HashMap::new()),
        }
    }

    /// Commutation rules `x y -> y x + [x, y]` for every letter pair with
    /// `x` of higher priority than `y` and `oriented(x, y)` true.
    pub fn commutation(
        alg: Arc<Algebroid>,
        priority: Vec<usize>,
        oriented: impl Fn(usize, usize) -> bool,
        killed: Vec<bool>,
    ) -> Self {
        let ring = alg.ring().clone();
        let n = alg.rank();
        let mut rules = Vec::new();
        for x in 0..n {
            for y in 0..n {
                if priority[x] <= priority[y] || !oriented(x, y) {
                    continue;
                }
                let mut rhs = UElement::word(&ring, &[y, x]);
                for (k, g) in alg.structure(x, y).iter().enumerate() {
                    rhs.add_term(vec![k], g.clone());
                }
                rules.push(Rule {
                    lhs: vec![x, y],
                    rhs,
                });
            }
        }
        Self::new(alg, priority, rules, killed)
    }

    /// Full PBW presentation of `U(L)` under the pair priority; with
    /// `kill_tail` the sub-algebroid letters die at the end of a word, which
    /// presents the left module `U(L)/U(L)A`.
    pub fn pbw(pair: &AdaptedPair, kill_tail: bool) -> Self {
        let killed = (0..pair.ambient().rank())
            .map(|i| kill_tail && pair.is_sub_letter(i))
            .collect();
        Self::commutation(pair.ambient_arc(), pair_priority(pair), |_, _| true, killed)
    }

    /// Presentation of the enveloping algebra of the first-order
    /// neighbourhood: only pairs whose leading letter lies in `A` commute.
    pub fn neighbourhood(pair: &AdaptedPair, kill_tail: bool) -> Self {
        let killed = (0..pair.ambient().rank())
            .map(|i| kill_tail && pair.is_sub_letter(i))
            .collect();
        Self::commutation(
            pair.ambient_arc(),
            pair_priority(pair),
            |x, _| pair.is_sub_letter(x),
            killed,
        )
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn ring(&self) -> &CoefficientRing {
        self.alg.ring()
    }

    pub fn is_collapsed(&self) -> bool {
        self.collapsed
    }

    pub fn is_irreducible(&self, w: &[usize]) -> bool {
        self.redexes(w).is_empty()
    }

    fn redexes(&self, w: &[usize]) -> Vec<Redex> {
        let mut out = Vec::new();
        for pos in 0..w.len() {
            for (r, rule) in self.rules.iter().enumerate() {
                let l = rule.lhs.len();
                if l > 0 && pos + l <= w.len() && w[pos..pos + l] == rule.lhs[..] {
                    out.push(Redex::Rule(r, pos));
                }
            }
        }
        if let Some(&last) = w.last() {
            if self.killed[last] {
                out.push(Redex::Tail);
            }
        }
        out
    }

    fn pick(&self, w: &[usize], strategy: Strategy, rng: &mut Option<ChaCha8Rng>) -> Option<Redex> {
        let mut all = self.redexes(w);
        if all.is_empty() {
            return None;
        }
        let pos_of = |r: &Redex| match r {
            Redex::Rule(_, p) => *p,
            Redex::Tail => w.len() - 1,
        };
        match strategy {
            Strategy::Leftmost => {
                let i = (0..all.len()).min_by_key(|&i| pos_of(&all[i])).unwrap();
                Some(all.swap_remove(i))
            }
            Strategy::Rightmost => {
                let i = (0..all.len()).max_by_key(|&i| pos_of(&all[i])).unwrap();
                Some(all.swap_remove(i))
            }
            Strategy::Random(_) => {
                let g = rng.as_mut().expect("random strategy carries a generator");
                let i = g.gen_range(0..all.len());
                Some(all.swap_remove(i))
            }
        }
    }

    /// One rewriting step applied to the word `w` (coefficient one).
    fn step(&self, w: &[usize], redex: Redex) -> UElement {
        match redex {
            Redex::Tail => UElement::zero(),
            Redex::Rule(r, pos) => self.replace_at(w, pos, &self.rules[r]),
        }
    }

    fn nf_word(
        &self,
        w: &[usize],
        strategy: Strategy,
        rng: &mut Option<ChaCha8Rng>,
        memo: &mut HashMap<Word, UElement>,
    ) -> UElement {
        if let Some(hit) = memo.get(w) {
            return hit.clone();
        }
        let ring = self.ring();
        let out = match self.pick(w, strategy, rng) {
            None => UElement::word(ring, w),
            Some(redex) => {
                let stepped = self.step(w, redex);
                let mut acc = UElement::zero();
                for (v, c) in stepped.terms() {
                    acc.add_assign(&self.nf_word(v, strategy, rng, memo).scale_left(ring, c));
                }
                acc
            }
        };
        memo.insert(w.to_vec(), out.clone());
        out
    }

    /// Normal form of `u`. Deterministic strategies share a cache.
    pub fn reduce_with(&self, u: &UElement, strategy: Strategy) -> UElement {
        if self.collapsed {
            return UElement::zero();
        }
        let ring = self.ring();
        let mut out = UElement::zero();
        match strategy {
            Strategy::Leftmost => {
                let mut memo = std::mem::take(&mut *self.memo.borrow_mut());
                for (w, c) in u.terms() {
                    out.add_assign(
                        &self
                            .nf_word(w, strategy, &mut None, &mut memo)
                            .scale_left(ring, c),
                    );
                }
                *self.memo.borrow_mut() = memo;
            }
            Strategy::Rightmost => {
                let mut memo = HashMap::new();
                for (w, c) in u.terms() {
                    out.add_assign(
                        &self
                            .nf_word(w, strategy, &mut None, &mut memo)
                            .scale_left(ring, c),
                    );
                }
            }
            Strategy::Random(seed) => {
                let mut rng = Some(ChaCha8Rng::seed_from_u64(seed));
                for (w, c) in u.terms() {
                    // A fresh cache per word keeps choices independent.
                    let mut memo = HashMap::new();
                    out.add_assign(
                        &self
                            .nf_word(w, strategy, &mut rng, &mut memo)
                            .scale_left(ring, c),
                    );
                }
            }
        }
        out
    }

    pub fn reduce(&self, u: &UElement) -> UElement {
        self.reduce_with(u, Strategy::Leftmost)
    }

    pub fn reduce_word(&self, w: &[usize]) -> UElement {
        self.reduce(&UElement::word(self.ring(), w))
    }

    fn leading(&self, u: &UElement) -> Option<Word> {
        u.terms()
            .map(|(w, _)| w.clone())
            .max_by(|a, b| word_cmp(&self.priority, a, b))
    }

    /// Turns a nonzero difference of normal forms into a new rule.
    fn orient(&mut self, diff: UElement) -> Result<()> {
        let ring = self.ring().clone();
        let lead = self.leading(&diff).expect("nonzero difference");
        if lead.is_empty() {
            self.collapsed = true;
            return Ok(());
        }
        let c = diff.coefficient(&lead);
        let inv = ring.inverse(&c).ok_or_else(|| {
            Error::Contract(format!(
                "new relation has non-monic leading coefficient {}",
                ring.format(&c)
            ))
        })?;
        let mut rhs = diff.scale_left(&ring, &inv.neg());
        rhs.add_term(lead.clone(), ring.one());
        self.rules.push(Rule { lhs: lead, rhs });
        self.memo.borrow_mut().clear();
        Ok(())
    }

    fn overlap_words(
        &self,
        r1: usize,
        r2: usize,
        max_len: usize,
    ) -> Vec<(Word, UElement, UElement)> {
        let a = &self.rules[r1];
        let b = &self.rules[r2];
        let (la, lb) = (a.lhs.len(), b.lhs.len());
        let mut out = Vec::new();
        for k in 1..la.min(lb) {
            if a.lhs[la - k..] != b.lhs[..k] || la + lb - k > max_len {
                continue;
            }
            let mut word = a.lhs.clone();
            word.extend_from_slice(&b.lhs[k..]);
            let left = self.replace_at(&word, 0, a);
            let right = self.replace_at(&word, la - k, b);
            out.push((word, left, right));
        }
        if lb < la && la <= max_len {
            for pos in 0..=la - lb {
                if a.lhs[pos..pos + lb] == b.lhs[..] {
                    let word = a.lhs.clone();
                    out.push((word.clone(), a.rhs.clone(), self.replace_at(&word, pos, b)));
                }
            }
        }
        out
    }

    fn replace_at(&self, w: &[usize], pos: usize, rule: &Rule) -> UElement {
        let prefix = &w[..pos];
        let suffix = &w[pos + rule.lhs.len()..];
        let mut out = UElement::zero();
        for (v, d) in rule.rhs.terms() {
            for (e, p2) in move_left(&self.alg, prefix, d) {
                let mut word = p2;
                word.extend_from_slice(v);
                word.extend_from_slice(suffix);
                out.add_term(word, e);
            }
        }
        out
    }

    /// Resolves all critical pairs with words up to `max_len`, adding rules
    /// for nonzero differences. `budget` caps the number of examined overlaps.
    pub fn complete(&mut self, max_len: usize, budget: Option<usize>) -> Result<CompletionReport> {
        let mut report = CompletionReport {
            max_length: max_len,
            ..Default::default()
        };
        #[derive(Clone, Copy)]
        enum Task {
            Pair(usize, usize),
            Coefficients(usize),
            Tail(usize),
        }
        let mut queue: VecDeque<Task> = VecDeque::new();
        let enqueue_rule = |queue: &mut VecDeque<Task>, r: usize| {
            for s in 0..=r {
                queue.push_back(Task::Pair(r, s));
                if s != r {
                    queue.push_back(Task::Pair(s, r));
                }
            }
            queue.push_back(Task::Coefficients(r));
            queue.push_back(Task::Tail(r));
        };
        for r in 0..self.rules.len() {
            enqueue_rule(&mut queue, r);
        }
        let gens = self.ring().generators();
        while let Some(task) = queue.pop_front() {
            if self.collapsed {
                break;
            }
            let mut diffs = Vec::new();
            match task {
                Task::Pair(a, b) => {
                    for (_, left, right) in self.overlap_words(a, b, max_len) {
                        report.overlaps_examined += 1;
                        if let Some(cap) = budget {
                            if report.overlaps_examined > cap {
                                return Err(Error::Budget {
                                    budget: cap,
                                    examined: report.overlaps_examined - 1,
                                });
                            }
                        }
                        diffs.push(self.reduce(&left).sub(&self.reduce(&right)));
                    }
                }
                Task::Coefficients(r) => {
                    let rule = self.rules[r].clone();
                    if rule.lhs.len() > max_len {
                        continue;
                    }
                    let lhs = UElement::word(self.ring(), &rule.lhs);
                    for g in &gens {
                        report.coefficient_checks += 1;
                        let l = self.reduce(&times_ring(&self.alg, &lhs, g));
                        let rr = self.reduce(&times_ring(&self.alg, &rule.rhs, g));
                        diffs.push(l.sub(&rr));
                    }
                }
                Task::Tail(r) => {
                    let rule = self.rules[r].clone();
                    if rule.lhs.last().is_some_and(|&x| self.killed[x]) && rule.lhs.len() <= max_len
                    {
                        report.tail_checks += 1;
                        diffs.push(self.reduce(&rule.rhs));
                    }
                }
            }
            for d in diffs {
                if d.is_zero() {
                    continue;
                }
                // Earlier additions in this batch may already resolve it.
                let d = self.reduce(&d);
                if d.is_zero() {
                    continue;
                }
                self.orient(d)?;
                report.rules_added += 1;
                if !self.collapsed {
                    enqueue_rule(&mut queue, self.rules.len() - 1);
                }
            }
        }
        Ok(report)
    }

    /// Irreducible words of length exactly `k` over all letters.
    pub fn irreducible_words(&self, k: usize) -> Vec<Word> {
        if self.collapsed {
            return Vec::new();
        }
        let n = self.alg.rank();
        let mut level: Vec<Word> = vec![Vec::new()];
        for _ in 0..k {
            let mut next = Vec::new();
            for w in &level {
                for x in 0..n {
                    let mut v = w.clone();
                    v.push(x);
                    // Prefix-closed apart from the tail rule.
                    if self.redexes_ignoring_tail(&v) {
                        next.push(v);
                    }
                }
            }
            level = next;
        }
        let mut out: Vec<Word> = level
            .into_iter()
            .filter(|w| w.last().is_none_or(|&x| !self.killed[x]))
            .collect();
        out.sort_by(|a, b| word_cmp(&self.priority, a, b));
        out
    }

    fn redexes_ignoring_tail(&self, w: &[usize]) -> bool {
        self.redexes(w).iter().all(|r| matches!(r, Redex::Tail))
    }

    pub fn compare(&self, a: &[usize], b: &[usize]) -> Ordering {
        word_cmp(&self.priority, a, b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebroid::LieElement;
    use crate::envelope::Envelope;
    use crate::ring::CoefficientRing;

    fn sl2_pair(p: usize) -> AdaptedPair {
        let ring = Arc::new(CoefficientRing::rational_field());
        let c = |v: [i64; 3]| -> LieElement { v.iter().map(|x| ring.from_int(*x)).collect() };
        let z = c([0, 0, 0]);
        let structure = vec![
            vec![z.clone(), c([0, 2, 0]), c([0, 0, -2])],
            vec![c([0, -2, 0]), z.clone(), c([1, 0, 0])],
            vec![c([0, 0, 2]), c([-1, 0, 0]), z.clone()],
        ];
        let alg = Algebroid::new(
            ring.clone(),
            vec!["h".into(), "e".into(), "f".into()],
            structure,
            vec![ring.zero_derivation(); 3],
        )
        .unwrap();
        AdaptedPair::new(Arc::new(alg), p).unwrap()
    }

    #[test]
    fn pbw_system_is_confluent_for_sl2() {
        let pair = sl2_pair(2);
        let mut sys = RewriteSystem::pbw(&pair, false);
        let rep = sys.complete(4, None).unwrap();
        assert_eq!(rep.rules_added, 0);
        assert!(rep.overlaps_examined > 0);
    }

    #[test]
    fn engine_agrees_with_straightener() {
        let pair = sl2_pair(1);
        let sys = RewriteSystem::pbw(&pair, false);
        let env = Envelope::for_pair(&pair);
        for w in crate::envelope::all_words(3, 3) {
            assert_eq!(sys.reduce_word(&w), env.straighten_word(&w), "word {w:?}");
        }
    }

    #[test]
    fn strategies_agree() {
        let pair = sl2_pair(2);
        let sys = RewriteSystem::pbw(&pair, true);
        for w in crate::envelope::all_words(3, 3) {
            let a = sys.reduce_with(&UElement::word(sys.ring(), &w), Strategy::Leftmost);
            let b = sys.reduce_with(&UElement::word(sys.ring(), &w), Strategy::Rightmost);
            let c = sys.reduce_with(&UElement::word(sys.ring(), &w), Strategy::Random(7));
            assert_eq!(a, b);
            assert_eq!(a, c);
        }
    }

    #[test]
    fn budget_is_enforced() {
        let pair = sl2_pair(0);
        let mut sys = RewriteSystem::pbw(&pair, false);
        assert!(matches!(
            sys.complete(4, Some(0)),
            Err(Error::Budget { .. })
        ));
    }
}
