//! Brute-force cross-check by plain linear elimination. Everything is done
//! over Q inside the space spanned by `r · w ⊗ e_s` (basis monomial `r`,
//! free word `w`, module generator `e_s`), with no rewriting, no PBW
//! normal forms and no cochains. The pipeline's answers are captured in a
//! [`Snapshot`] and compared entry by entry.

use std::collections::{BTreeSet, HashMap};

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::algebroid::{AdaptedPair, Algebroid};
use crate::envelope::{all_words, binomial, Envelope, UElement, Word};
use crate::error::{Error, Result};
use crate::linalg::{solve, Echelon, Solve, SparseVec};
use crate::modcat::{induced_module, quotient_module, unit_vector, FlatModule, Matrix};
use crate::neighborhood::{a1_quotient, neighbourhood_induced, NeighbourhoodQuotient};
use crate::obstruction::{alpha_vanishing, tilde_vanishing, Verdict};
use crate::pbwiso::{filtered_iso_search, IsoSearch};
use crate::ring::{CoefficientRing, Monomial, RingElement, Q};

/// One disagreement between the pipeline and the oracle.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiffEntry {
    pub check: String,
    pub detail: String,
}

/// A truncated quotient as the pipeline sees it: basis words (each
/// tensored with every module generator), the action of `A`, and left
/// multiplication by every letter on basis vectors below the top degree.
#[derive(Clone, Debug)]
pub struct QuotientSnapshot {
    pub words: Vec<Word>,
    pub e_rank: usize,
    pub ranks: Vec<usize>,
    pub sub_action: Vec<Matrix>,
    pub left: Vec<Matrix>,
}

#[derive(Clone, Debug)]
pub struct ModuleSnapshot {
    pub module: FlatModule,
    pub induced: QuotientSnapshot,
    pub neighbourhood: QuotientSnapshot,
    pub alpha: Verdict,
    pub tilde: Verdict,
}

/// Everything the oracle checks, computed by the main pipeline.
#[derive(Clone, Debug)]
pub struct Snapshot {
    pub truncation: usize,
    pub gr_ranks: Vec<usize>,
    pub a1: QuotientSnapshot,
    pub modules: Vec<ModuleSnapshot>,
    /// `filtered_iso_search(1_A)` at degree two found a map.
    pub iso_two: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleModuleReport {
    pub name: String,
    pub induced_ranks: Vec<String>,
    pub neighbourhood_ranks: Vec<String>,
    pub extension_splits: bool,
    pub jet_sequence_splits: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OracleReport {
    pub truncation: usize,
    pub gr_ranks: Vec<String>,
    pub a1_ranks: Vec<String>,
    pub modules: Vec<OracleModuleReport>,
    pub degree_one_splits: bool,
    pub degree_two_splits: bool,
    pub diff: Vec<DiffEntry>,
}

/// Modules the oracle always covers: `1_A`, `L/A`, then the extras.
pub fn oracle_modules(pair: &AdaptedPair, extra: &[FlatModule]) -> Vec<FlatModule> {
    let mut out = vec![FlatModule::trivial(&pair.sub_algebroid())];
    if pair.quotient_rank() > 0 {
        out.push(quotient_module(pair));
    }
    out.extend(extra.iter().cloned());
    out
}

fn require_finite(ring: &CoefficientRing) -> Result<usize> {
    ring.dim().ok_or_else(|| {
        Error::Unsupported("the oracle needs a finite-dimensional coefficient ring".into())
    })
}

pub fn snapshot(
    pair: &AdaptedPair,
    modules: &[FlatModule],
    truncation: usize,
    budget: Option<usize>,
) -> Result<Snapshot> {
    let alg = pair.ambient();
    let ring = alg.ring();
    let env = Envelope::new(pair.ambient_arc());
    let gr_ranks = (0..=truncation)
        .map(|k| env.gr_rank(k))
        .collect::<Result<_>>()?;
    let a1 = neighbourhood_snapshot(pair, &a1_quotient(pair, truncation, budget)?)?;
    let penv = Envelope::for_pair(pair);
    let mut mods = Vec::new();
    for e in modules {
        let ind = induced_module(pair, &penv, e, truncation)?;
        let mut left = Vec::new();
        for l in 0..alg.rank() {
            let mut mat = vec![vec![RingElement::zero(); ind.module.rank]; ind.module.rank];
            for (wi, w) in ind.words.iter().enumerate() {
                if w.len() >= truncation {
                    continue;
                }
                let mut lw = vec![l];
                lw.extend_from_slice(w);
                for s in 0..e.rank {
                    let col = ind.reduce(
                        pair,
                        &penv,
                        e,
                        &UElement::word(ring, &lw),
                        &unit_vector(ring, e.rank, s),
                    )?;
                    for (row, x) in col.into_iter().enumerate() {
                        mat[row][wi * e.rank + s] = x;
                    }
                }
            }
            left.push(mat);
        }
        let induced = QuotientSnapshot {
            ranks: per_degree(&ind.module.degrees, truncation),
            words: ind.words.clone(),
            e_rank: e.rank,
            sub_action: ind.module.ops.clone(),
            left,
        };
        let neighbourhood =
            neighbourhood_snapshot(pair, &neighbourhood_induced(pair, e, truncation, budget)?)?;
        mods.push(ModuleSnapshot {
            module: e.clone(),
            induced,
            neighbourhood,
            alpha: alpha_vanishing(pair, e, None)?.verdict,
            tilde: tilde_vanishing(pair, e, None)?.verdict,
        });
    }
    let one = FlatModule::trivial(&pair.sub_algebroid());
    let iso_two = if truncation >= 2 {
        matches!(
            filtered_iso_search(pair, &one, 2, None)?,
            IsoSearch::Exists(_)
        )
    } else {
        false
    };
    Ok(Snapshot {
        truncation,
        gr_ranks,
        a1,
        modules: mods,
        iso_two,
    })
}

fn per_degree(degrees: &[usize], truncation: usize) -> Vec<usize> {
    let mut out = vec![0; truncation + 1];
    for &d in degrees {
        out[d] += 1;
    }
    out
}

fn neighbourhood_snapshot(
    pair: &AdaptedPair,
    q: &NeighbourhoodQuotient,
) -> Result<QuotientSnapshot> {
    let ring = pair.ring();
    let mut left = Vec::new();
    for l in 0..pair.ambient().rank() {
        let mut mat = vec![vec![RingElement::zero(); q.module.rank]; q.module.rank];
        for j in 0..q.module.rank {
            if q.module.degrees[j] >= q.truncation {
                continue;
            }
            let col = q.left_mul(pair, l, &unit_vector(ring, q.module.rank, j))?;
            for (row, x) in col.into_iter().enumerate() {
                mat[row][j] = x;
            }
        }
        left.push(mat);
    }
    Ok(QuotientSnapshot {
        words: q.words.clone(),
        e_rank: q.e_rank,
        ranks: q.ranks.clone(),
        sub_action: q.module.ops.clone(),
        left,
    })
}

/// Left-R combination of free words: coefficient on the left.
type Combo = Vec<(RingElement, Word)>;

/// `w · r` rewritten with the coefficient on the left, one letter at a time:
/// `w' l r = (w' r) l + w' l(r)`.
fn word_times_ring(alg: &Algebroid, w: &[usize], r: &RingElement) -> Combo {
    if r.is_zero() {
        return Vec::new();
    }
    let Some((&l, rest)) = w.split_last() else {
        return vec![(r.clone(), Vec::new())];
    };
    let mut out: Combo = word_times_ring(alg, rest, r)
        .into_iter()
        .map(|(c, mut v)| {
            v.push(l);
            (c, v)
        })
        .collect();
    out.extend(word_times_ring(alg, rest, &alg.act(l, r)));
    out
}

/// `c · u · x` for a combination `x`.
fn left_mul_combo(alg: &Algebroid, c: &RingElement, u: &[usize], x: &Combo) -> Combo {
    let ring = alg.ring();
    let mut out = Vec::new();
    for (d, w) in x {
        for (e, v) in word_times_ring(alg, u, d) {
            let mut vw = v;
            vw.extend_from_slice(w);
            out.push((ring.mul(c, &e), vw));
        }
    }
    out
}

/// The Q-space of `r · w ⊗ e_s` with `|w| ≤ M`, coordinates ordered by
/// decreasing word length so that pivots land on the highest degree.
struct Space {
    index: HashMap<(Word, usize, Monomial), usize>,
    keys: Vec<(Word, usize, Monomial)>,
    degrees: Vec<usize>,
    max: usize,
}

impl Space {
    fn new(letters: usize, m: usize, monos: &[Monomial], max: usize) -> Self {
        let mut keys = Vec::new();
        for k in (0..=max).rev() {
            for w in all_words(letters, k) {
                for s in 0..m {
                    for mono in monos {
                        keys.push((w.clone(), s, mono.clone()));
                    }
                }
            }
        }
        let index = keys
            .iter()
            .enumerate()
            .map(|(i, k)| (k.clone(), i))
            .collect();
        let degrees = keys.iter().map(|k| k.0.len()).collect();
        Space {
            index,
            keys,
            degrees,
            max,
        }
    }

    fn flatten(&self, terms: &[(RingElement, Word, usize)]) -> Result<SparseVec> {
        let mut out = SparseVec::new();
        for (c, w, s) in terms {
            for (mono, q) in c.terms() {
                let &i =
                    self.index
                        .get(&(w.clone(), *s, mono.clone()))
                        .ok_or(Error::Truncation {
                            length: w.len(),
                            truncation: self.max,
                        })?;
                let e = out.entry(i).or_insert_with(Q::zero);
                *e += q;
                if e.is_zero() {
                    out.remove(&i);
                }
            }
        }
        Ok(out)
    }

    fn count_in_degree(&self, k: usize) -> usize {
        self.degrees.iter().filter(|&&d| d == k).count()
    }
}

/// Which brackets generate the two-sided ideal.
#[derive(Clone, Copy, PartialEq, Eq)]
enum Brackets {
    All,
    SubFirst,
}

/// A truncated quotient of the free space by the relation span.
struct Eliminated {
    space: Space,
    relations: Echelon,
    dim: usize,
}

impl Eliminated {
    fn pivots_in_degree(&self, k: usize) -> usize {
        self.relations
            .pivots()
            .filter(|&&p| self.space.degrees[p] == k)
            .count()
    }

    /// Q-dimension of the degree-`k` slice of the quotient.
    fn qdim(&self, k: usize) -> usize {
        self.space.count_in_degree(k) - self.pivots_in_degree(k)
    }

    fn normal(&self, v: &SparseVec) -> SparseVec {
        let mut v = v.clone();
        self.relations.reduce(&mut v, &mut SparseVec::new());
        v
    }

    fn rank_label(&self, k: usize) -> String {
        let q = self.qdim(k);
        if q % self.dim == 0 {
            (q / self.dim).to_string()
        } else {
            format!("{q}/{}", self.dim)
        }
    }
}

/// `module = None` gives the algebra itself with no left ideal.
fn eliminate(
    pair: &AdaptedPair,
    module: Option<&FlatModule>,
    brackets: Brackets,
    max: usize,
) -> Result<Eliminated> {
    let alg = pair.ambient();
    let ring = alg.ring();
    let dim = require_finite(ring)?;
    let monos = ring.q_basis(0);
    let n = alg.rank();
    let m = module.map_or(1, |e| e.rank);
    let space = Space::new(n, m, &monos, max);
    let mut relations = Echelon::new();
    let mut insert = |terms: Vec<(RingElement, Word, usize)>| -> Result<()> {
        relations.insert(space.flatten(&terms)?, SparseVec::new());
        Ok(())
    };
    let monos_r: Vec<RingElement> = monos
        .iter()
        .map(|mo| RingElement::monomial(mo.clone(), Q::one()))
        .collect();
    for i in 0..n {
        for j in i + 1..n {
            if brackets == Brackets::SubFirst && !pair.is_sub_letter(i) {
                continue;
            }
            let mut x: Combo = vec![(ring.one(), vec![i, j]), (ring.from_int(-1), vec![j, i])];
            for (k, c) in alg.structure(i, j).iter().enumerate() {
                if !c.is_zero() {
                    x.push((c.neg(), vec![k]));
                }
            }
            for k1 in 0..=max.saturating_sub(2) {
                for k2 in 0..=(max.saturating_sub(2) - k1) {
                    if max < 2 {
                        continue;
                    }
                    for u1 in all_words(n, k1) {
                        for u2 in all_words(n, k2) {
                            for r in &monos_r {
                                let core = left_mul_combo(alg, r, &u1, &x);
                                for s in 0..m {
                                    insert(
                                        core.iter()
                                            .map(|(c, w)| {
                                                let mut w = w.clone();
                                                w.extend_from_slice(&u2);
                                                (c.clone(), w, s)
                                            })
                                            .collect(),
                                    )?;
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    if let Some(e) = module {
        for k in 0..max {
            for w in all_words(n, k) {
                for a in 0..pair.sub_rank() {
                    let mut wa = w.clone();
                    wa.push(a);
                    for r in &monos_r {
                        for s in 0..m {
                            let mut terms = vec![(r.clone(), wa.clone(), s)];
                            for t in 0..m {
                                let c = &e.ops[a][t][s];
                                for (d, v) in word_times_ring(alg, &w, c) {
                                    terms.push((ring.mul(r, &d).neg(), v, t));
                                }
                            }
                            insert(terms)?;
                        }
                    }
                }
            }
        }
    }
    Ok(Eliminated {
        space,
        relations,
        dim,
    })
}

/// Q-basis vectors `r · b_j` of a pipeline basis, inside the oracle space.
fn embed_basis(
    snap: &QuotientSnapshot,
    el: &Eliminated,
    monos: &[Monomial],
) -> Result<Vec<(usize, SparseVec)>> {
    let mut out = Vec::new();
    for (wi, w) in snap.words.iter().enumerate() {
        for s in 0..snap.e_rank {
            for mono in monos {
                let v = el.space.flatten(&[(
                    RingElement::monomial(mono.clone(), Q::one()),
                    w.clone(),
                    s,
                )])?;
                out.push((wi * snap.e_rank + s, v));
            }
        }
    }
    Ok(out)
}

fn embed_column(
    snap: &QuotientSnapshot,
    el: &Eliminated,
    mat: &Matrix,
    j: usize,
) -> Result<SparseVec> {
    let mut terms = Vec::new();
    for (i, row) in mat.iter().enumerate() {
        if !row[j].is_zero() {
            terms.push((
                row[j].clone(),
                snap.words[i / snap.e_rank].clone(),
                i % snap.e_rank,
            ));
        }
    }
    el.space.flatten(&terms)
}

fn compare_quotient(
    label: &str,
    pair: &AdaptedPair,
    snap: &QuotientSnapshot,
    el: &Eliminated,
    truncation: usize,
    diff: &mut Vec<DiffEntry>,
) -> Result<()> {
    let ring = pair.ring();
    let monos = ring.q_basis(0);
    for k in 0..=truncation {
        let oracle = el.qdim(k);
        if oracle != snap.ranks[k] * el.dim {
            diff.push(DiffEntry {
                check: format!("{label}.rank[{k}]"),
                detail: format!("pipeline {}, oracle {}", snap.ranks[k], el.rank_label(k)),
            });
        }
    }
    // The pipeline basis must stay independent modulo the relations.
    let mut ech = Echelon::new();
    let mut independent = true;
    for (_, v) in embed_basis(snap, el, &monos)? {
        independent &= ech.insert(el.normal(&v), SparseVec::new());
    }
    if !independent {
        diff.push(DiffEntry {
            check: format!("{label}.basis"),
            detail: "pipeline basis is dependent modulo the relations".into(),
        });
    }
    let rank = snap.words.len() * snap.e_rank;
    let act = |letter: usize, j: usize| -> Result<SparseVec> {
        let mut w = vec![letter];
        w.extend_from_slice(&snap.words[j / snap.e_rank]);
        el.space.flatten(&[(ring.one(), w, j % snap.e_rank)])
    };
    for (a, mat) in snap.sub_action.iter().enumerate() {
        for j in 0..rank {
            let lhs = el.normal(&act(a, j)?);
            let rhs = el.normal(&embed_column(snap, el, mat, j)?);
            if lhs != rhs {
                diff.push(DiffEntry {
                    check: format!("{label}.action[{a}][{j}]"),
                    detail: "A-action differs from left multiplication".into(),
                });
            }
        }
    }
    for (l, mat) in snap.left.iter().enumerate() {
        for j in 0..rank {
            if snap.words[j / snap.e_rank].len() >= truncation {
                continue;
            }
            let lhs = el.normal(&act(l, j)?);
            let rhs = el.normal(&embed_column(snap, el, mat, j)?);
            if lhs != rhs {
                diff.push(DiffEntry {
                    check: format!("{label}.left[{l}][{j}]"),
                    detail: "left multiplication differs".into(),
                });
            }
        }
    }
    Ok(())
}

/// Checks that truncating the relations at `N` and at `N + 1` gives the
/// same degree-`≤ N` slices.
fn compare_stability(
    label: &str,
    small: &Eliminated,
    big: &Eliminated,
    truncation: usize,
    diff: &mut Vec<DiffEntry>,
) {
    for k in 0..=truncation {
        if small.qdim(k) != big.qdim(k) {
            diff.push(DiffEntry {
                check: format!("{label}.stable[{k}]"),
                detail: format!(
                    "{} at truncation {truncation}, {} one degree higher",
                    small.qdim(k),
                    big.qdim(k)
                ),
            });
        }
    }
}

/// Rows `(coefficients over unknowns, right-hand side)` of a linear system.
struct Rows {
    rows: Vec<(SparseVec, Q)>,
}

impl Rows {
    fn new() -> Self {
        Rows { rows: Vec::new() }
    }

    fn push(&mut self, lhs: SparseVec, rhs: Q) {
        if !lhs.is_empty() || !rhs.is_zero() {
            self.rows.push((lhs, rhs));
        }
    }

    fn solvable(&self, unknowns: usize) -> bool {
        let mut columns = vec![SparseVec::new(); unknowns];
        let mut rhs = SparseVec::new();
        for (i, (lhs, b)) in self.rows.iter().enumerate() {
            for (&j, c) in lhs {
                columns[j].insert(i, c.clone());
            }
            if !b.is_zero() {
                rhs.insert(i, b.clone());
            }
        }
        matches!(solve(&columns, &rhs), Solve::Solution(_))
    }
}

/// Q-coordinates of `E`: `(s, monomial)`.
fn e_coords(m: usize, monos: &[Monomial]) -> Vec<(usize, Monomial)> {
    (0..m)
        .flat_map(|s| monos.iter().map(move |mo| (s, mo.clone())))
        .collect()
}

/// `a · (r e_s)` on `E`, as Q-coordinates.
fn act_on_e(
    alg: &Algebroid,
    e: &FlatModule,
    a: usize,
    r: &RingElement,
    s: usize,
) -> Vec<(usize, RingElement)> {
    let ring = alg.ring();
    let mut out = vec![(s, alg.act(a, r))];
    for t in 0..e.rank {
        let c = &e.ops[a][t][s];
        if !c.is_zero() {
            out.push((t, ring.mul(r, c)));
        }
    }
    out
}

fn e_flatten(
    coords: &HashMap<(usize, Monomial), usize>,
    terms: &[(usize, RingElement)],
) -> SparseVec {
    let mut out = SparseVec::new();
    for (s, r) in terms {
        for (mono, q) in r.terms() {
            let i = coords[&(*s, mono.clone())];
            let x = out.entry(i).or_insert_with(Q::zero);
            *x += q;
            if x.is_zero() {
                out.remove(&i);
            }
        }
    }
    out
}

/// Does `0 → E → F^1 → F^1/F^0 → 0` split over `A`? The middle term comes
/// from elimination; the retraction is solved for entry by entry.
fn extension_splits(
    pair: &AdaptedPair,
    e: &FlatModule,
    diff: &mut Vec<DiffEntry>,
    label: &str,
) -> Result<bool> {
    let alg = pair.ambient();
    let ring = alg.ring();
    let monos = ring.q_basis(0);
    let el = eliminate(pair, Some(e), Brackets::All, 2)?;
    let std: Vec<usize> = (0..el.space.keys.len())
        .filter(|&i| el.space.degrees[i] <= 1 && !el.relations.pivots().any(|&p| p == i))
        .collect();
    let std_pos: HashMap<usize, usize> = std.iter().enumerate().map(|(j, &i)| (i, j)).collect();
    let ec = e_coords(e.rank, &monos);
    let ec_pos: HashMap<(usize, Monomial), usize> = ec
        .iter()
        .cloned()
        .enumerate()
        .map(|(i, k)| (k, i))
        .collect();
    let de = ec.len();
    let unknown = |row: usize, col: usize| row * std.len() + col;
    // s applied to a normal-form vector: Σ_col v[col] s[·][col].
    let apply = |v: &SparseVec, row: usize| -> Result<SparseVec> {
        let mut out = SparseVec::new();
        for (i, c) in v {
            let Some(&col) = std_pos.get(i) else {
                return Err(Error::Internal(format!(
                    "{label}: action leaves the first filtration step"
                )));
            };
            out.insert(unknown(row, col), c.clone());
        }
        Ok(out)
    };
    let mut rows = Rows::new();
    for (col, &i) in std.iter().enumerate() {
        let (w, s, mono) = &el.space.keys[i];
        let r = RingElement::monomial(mono.clone(), Q::one());
        if w.is_empty() {
            // s restricts to the identity on E.
            let target = ec_pos[&(*s, mono.clone())];
            for row in 0..de {
                let mut lhs = SparseVec::new();
                lhs.insert(unknown(row, col), Q::one());
                rows.push(lhs, if row == target { Q::one() } else { Q::zero() });
            }
        }
        // R-linearity.
        for b in &monos {
            let rb = RingElement::monomial(b.clone(), Q::one());
            let prod = el.normal(&el.space.flatten(&[(ring.mul(&rb, &r), w.clone(), *s)])?);
            let mult = mult_on_e(ring, &rb, &ec, &ec_pos);
            for row in 0..de {
                let mut lhs = match apply(&prod, row) {
                    Ok(v) => v,
                    Err(err) => {
                        diff.push(DiffEntry {
                            check: format!("{label}.filtration"),
                            detail: err.to_string(),
                        });
                        return Ok(false);
                    }
                };
                for (src, c) in &mult[row] {
                    crate::linalg::axpy(
                        &mut lhs,
                        &-c.clone(),
                        &[(unknown(*src, col), Q::one())].into_iter().collect(),
                    );
                }
                rows.push(lhs, Q::zero());
            }
        }
        // A-linearity: s(a · x) = a · s(x).
        for a in 0..pair.sub_rank() {
            let mut aw = vec![a];
            aw.extend_from_slice(w);
            let ax = el.normal(
                &el.space
                    .flatten(&[(alg.act(a, &r), w.clone(), *s), (r.clone(), aw, *s)])?,
            );
            let amat = act_matrix_on_e(alg, e, a, &ec, &ec_pos);
            for row in 0..de {
                let mut lhs = match apply(&ax, row) {
                    Ok(v) => v,
                    Err(err) => {
                        diff.push(DiffEntry {
                            check: format!("{label}.filtration"),
                            detail: err.to_string(),
                        });
                        return Ok(false);
                    }
                };
                for (src, c) in &amat[row] {
                    crate::linalg::axpy(
                        &mut lhs,
                        &-c.clone(),
                        &[(unknown(*src, col), Q::one())].into_iter().collect(),
                    );
                }
                rows.push(lhs, Q::zero());
            }
        }
    }
    Ok(rows.solvable(de * std.len()))
}

/// Matrix (by rows: row ↦ [(column, coefficient)]) of multiplication by
/// `r` on the Q-coordinates of `E`.
fn mult_on_e(
    ring: &CoefficientRing,
    r: &RingElement,
    ec: &[(usize, Monomial)],
    ec_pos: &HashMap<(usize, Monomial), usize>,
) -> Vec<Vec<(usize, Q)>> {
    let mut rows = vec![Vec::new(); ec.len()];
    for (col, (s, mono)) in ec.iter().enumerate() {
        let prod = ring.mul(r, &RingElement::monomial(mono.clone(), Q::one()));
        for (i, q) in e_flatten(ec_pos, &[(*s, prod)]) {
            rows[i].push((col, q));
        }
    }
    rows
}

fn act_matrix_on_e(
    alg: &Algebroid,
    e: &FlatModule,
    a: usize,
    ec: &[(usize, Monomial)],
    ec_pos: &HashMap<(usize, Monomial), usize>,
) -> Vec<Vec<(usize, Q)>> {
    let mut rows = vec![Vec::new(); ec.len()];
    for (col, (s, mono)) in ec.iter().enumerate() {
        let r = RingElement::monomial(mono.clone(), Q::one());
        for (i, q) in e_flatten(ec_pos, &act_on_e(alg, e, a, &r, *s)) {
            rows[i].push((col, q));
        }
    }
    rows
}

/// Does `0 → Hom(L/A, E) → J¹ → E → 0` split over `A`? Jets are Q-linear
/// maps on `F^1 U(L) = R ⊕ L` that are `U(A)`-linear where defined; `A`
/// acts by `(P * φ)(Q) = φ(QP)`, extended by `U(A)`-linearity.
fn jet_sequence_splits(pair: &AdaptedPair, e: &FlatModule) -> Result<bool> {
    let alg = pair.ambient();
    let ring = alg.ring();
    let monos = ring.q_basis(0);
    let n = alg.rank();
    // Basis of F^1: (monomial, None) for r·1 and (monomial, Some(l)) for r·l.
    let f1: Vec<(Monomial, Option<usize>)> = monos
        .iter()
        .flat_map(|mo| {
            std::iter::once((mo.clone(), None)).chain((0..n).map(move |l| (mo.clone(), Some(l))))
        })
        .collect();
    let f1_pos: HashMap<(Monomial, Option<usize>), usize> = f1
        .iter()
        .cloned()
        .enumerate()
        .map(|(i, k)| (k, i))
        .collect();
    let ec = e_coords(e.rank, &monos);
    let ec_pos: HashMap<(usize, Monomial), usize> = ec
        .iter()
        .cloned()
        .enumerate()
        .map(|(i, k)| (k, i))
        .collect();
    let de = ec.len();
    let hdim = f1.len() * de;
    // A jet is a matrix φ[e-coordinate][F^1 basis]; H coordinate index.
    let h = |ecoord: usize, fb: usize| ecoord * f1.len() + fb;
    let flat_f1 = |terms: &[(RingElement, Option<usize>)]| -> SparseVec {
        let mut out = SparseVec::new();
        for (r, l) in terms {
            for (mono, q) in r.terms() {
                let i = f1_pos[&(mono.clone(), *l)];
                let x = out.entry(i).or_insert_with(Q::zero);
                *x += q;
                if x.is_zero() {
                    out.remove(&i);
                }
            }
        }
        out
    };
    // Linear functional rows: (φ(x))_ecoord as a function of H coordinates.
    let eval = |x: &SparseVec, ecoord: usize| -> SparseVec {
        x.iter()
            .map(|(&fb, q)| (h(ecoord, fb), q.clone()))
            .collect()
    };
    // (M · φ(x)) for a Q-linear map M on E given by rows.
    let eval_then = |x: &SparseVec, mat: &[Vec<(usize, Q)>], ecoord: usize| -> SparseVec {
        let mut out = SparseVec::new();
        for (src, c) in &mat[ecoord] {
            crate::linalg::axpy(&mut out, c, &eval(x, *src));
        }
        out
    };
    let monos_r: Vec<RingElement> = monos
        .iter()
        .map(|mo| RingElement::monomial(mo.clone(), Q::one()))
        .collect();
    let mult: Vec<_> = monos_r
        .iter()
        .map(|r| mult_on_e(ring, r, &ec, &ec_pos))
        .collect();
    let amats: Vec<_> = (0..pair.sub_rank())
        .map(|a| act_matrix_on_e(alg, e, a, &ec, &ec_pos))
        .collect();

    // Constraints cutting J¹ out of Hom_Q(F^1, E), as rows over H.
    let mut jet_rows: Vec<SparseVec> = Vec::new();
    for (fb, (mono, l)) in f1.iter().enumerate() {
        let c = RingElement::monomial(mono.clone(), Q::one());
        for (ri, r) in monos_r.iter().enumerate() {
            // φ(r x) = r φ(x)
            let rx = flat_f1(&[(ring.mul(r, &c), *l)]);
            let x = flat_f1(&[(c.clone(), *l)]);
            for ecoord in 0..de {
                let mut row = eval(&rx, ecoord);
                crate::linalg::axpy(&mut row, &-Q::one(), &eval_then(&x, &mult[ri], ecoord));
                jet_rows.push(row);
            }
        }
        if l.is_none() {
            // φ(a c) = a · φ(c), with a c = c a + a(c).
            for a in 0..pair.sub_rank() {
                let ac = flat_f1(&[(c.clone(), Some(a)), (alg.act(a, &c), None)]);
                let x = flat_f1(&[(c.clone(), None)]);
                for ecoord in 0..de {
                    let mut row = eval(&ac, ecoord);
                    crate::linalg::axpy(&mut row, &-Q::one(), &eval_then(&x, &amats[a], ecoord));
                    jet_rows.push(row);
                }
            }
        }
        let _ = fb;
    }

    // (P * φ) as a Q-linear map on H, by rows: coordinate (ecoord, fb) of
    // P * φ in terms of coordinates of φ.
    let star_ring = |ri: usize| -> Vec<SparseVec> {
        let r = &monos_r[ri];
        let mut out = Vec::with_capacity(hdim);
        for ecoord in 0..de {
            for (mono, l) in &f1 {
                let c = RingElement::monomial(mono.clone(), Q::one());
                // Q r for Q = c·1 or c·l: c l r = c r l + c l(r).
                let qr = match l {
                    None => flat_f1(&[(ring.mul(&c, r), None)]),
                    Some(l) => flat_f1(&[
                        (ring.mul(&c, r), Some(*l)),
                        (ring.mul(&c, &alg.act(*l, r)), None),
                    ]),
                };
                out.push(eval(&qr, ecoord));
            }
        }
        out
    };
    let star_sub = |a: usize| -> Vec<SparseVec> {
        let mut out = Vec::with_capacity(hdim);
        for ecoord in 0..de {
            for (mono, l) in &f1 {
                let c = RingElement::monomial(mono.clone(), Q::one());
                let mut row = SparseVec::new();
                match l {
                    None => {
                        // c a = a c - a(c)
                        let x = flat_f1(&[(c.clone(), None)]);
                        crate::linalg::axpy(&mut row, &Q::one(), &eval_then(&x, &amats[a], ecoord));
                        let ac = flat_f1(&[(alg.act(a, &c), None)]);
                        crate::linalg::axpy(&mut row, &-Q::one(), &eval(&ac, ecoord));
                    }
                    Some(l) => {
                        // c l a = c a l - c [a, l] = (a c - a(c)) l - c [a, l]
                        let x = flat_f1(&[(c.clone(), Some(*l))]);
                        crate::linalg::axpy(&mut row, &Q::one(), &eval_then(&x, &amats[a], ecoord));
                        let mut rest = vec![(alg.act(a, &c).neg(), Some(*l))];
                        for (k, b) in alg.structure(a, *l).iter().enumerate() {
                            if !b.is_zero() {
                                rest.push((ring.mul(&c, b).neg(), Some(k)));
                            }
                        }
                        crate::linalg::axpy(&mut row, &Q::one(), &eval(&flat_f1(&rest), ecoord));
                    }
                }
                out.push(row);
            }
        }
        out
    };

    // Unknown: s̃(f) ∈ H for each E coordinate f; index f * hdim + hc.
    let u = |f: usize, hc: usize| f * hdim + hc;
    let lift_row = |f: usize, row: &SparseVec| -> SparseVec {
        row.iter().map(|(&hc, q)| (u(f, hc), q.clone())).collect()
    };
    let mut rows = Rows::new();
    let one_pos = |ecoord: usize| h(ecoord, f1_pos[&(ring.q_basis(0)[0].clone(), None)]);
    let unit = ring.one();
    let unit_mono = unit.terms().next().expect("nonzero unit").0.clone();
    for f in 0..de {
        for row in &jet_rows {
            rows.push(lift_row(f, row), Q::zero());
        }
        // φ(1) = f.
        for ecoord in 0..de {
            let mut row = SparseVec::new();
            row.insert(
                u(f, h(ecoord, f1_pos[&(unit_mono.clone(), None)])),
                Q::one(),
            );
            rows.push(row, if ecoord == f { Q::one() } else { Q::zero() });
        }
    }
    let _ = one_pos;
    // s̃(r f) = r * s̃(f) and s̃(a f) = a * s̃(f).
    let mut ops: Vec<(Vec<Vec<(usize, Q)>>, Vec<SparseVec>)> = Vec::new();
    for ri in 0..monos_r.len() {
        ops.push((mult[ri].clone(), star_ring(ri)));
    }
    for a in 0..pair.sub_rank() {
        ops.push((amats[a].clone(), star_sub(a)));
    }
    for (on_e, on_h) in &ops {
        // Columns of `on_e`: for source f, the image is Σ_row on_e[row] ...
        let mut image: Vec<Vec<(usize, Q)>> = vec![Vec::new(); de];
        for (row, entries) in on_e.iter().enumerate() {
            for (col, q) in entries {
                image[*col].push((row, q.clone()));
            }
        }
        for f in 0..de {
            for (hc, star_row) in on_h.iter().enumerate() {
                let mut lhs = SparseVec::new();
                for (g, q) in &image[f] {
                    crate::linalg::axpy(
                        &mut lhs,
                        q,
                        &[(u(*g, hc), Q::one())].into_iter().collect(),
                    );
                }
                crate::linalg::axpy(&mut lhs, &-Q::one(), &lift_row(f, star_row));
                rows.push(lhs, Q::zero());
            }
        }
    }
    Ok(rows.solvable(de * hdim))
}

/// Does `F^{k-1}/F^{k-2} → F^k/F^{k-2}` split over `A`, for `U(L)/U(L)A`?
fn filtration_splits(pair: &AdaptedPair, top: usize) -> Result<bool> {
    let alg = pair.ambient();
    let ring = alg.ring();
    let monos = ring.q_basis(0);
    let one = FlatModule::trivial(&pair.sub_algebroid());
    let el = eliminate(pair, Some(&one), Brackets::All, top + 1)?;
    let pivots: BTreeSet<usize> = el.relations.pivots().copied().collect();
    let std_of = |lo: usize, hi: usize| -> Vec<usize> {
        (0..el.space.keys.len())
            .filter(|&i| (lo..=hi).contains(&el.space.degrees[i]) && !pivots.contains(&i))
            .collect()
    };
    let source = std_of(top - 1, top);
    let target = std_of(top - 1, top - 1);
    let src_pos: HashMap<usize, usize> = source.iter().enumerate().map(|(j, &i)| (i, j)).collect();
    let tgt_pos: HashMap<usize, usize> = target.iter().enumerate().map(|(j, &i)| (i, j)).collect();
    // Normal form modulo the relations and F^{top-2}.
    let normal = |terms: &[(RingElement, Word, usize)]| -> Result<SparseVec> {
        Ok(el
            .normal(&el.space.flatten(terms)?)
            .into_iter()
            .filter(|(i, _)| el.space.degrees[*i] + 1 >= top)
            .collect())
    };
    // Operators: multiplication by basis monomials, then the A-generators.
    let op_terms = |op: usize, i: usize| -> Vec<(RingElement, Word, usize)> {
        let (w, s, mono) = el.space.keys[i].clone();
        let r = RingElement::monomial(mono, Q::one());
        if op < monos.len() {
            let b = RingElement::monomial(monos[op].clone(), Q::one());
            vec![(ring.mul(&b, &r), w, s)]
        } else {
            let a = op - monos.len();
            let mut aw = vec![a];
            aw.extend_from_slice(&w);
            vec![(alg.act(a, &r), w, s), (r, aw, s)]
        }
    };
    let unknown = |row: usize, col: usize| row * source.len() + col;
    let mut rows = Rows::new();
    for (col, &i) in source.iter().enumerate() {
        if let Some(&t) = tgt_pos.get(&i) {
            for row in 0..target.len() {
                let mut lhs = SparseVec::new();
                lhs.insert(unknown(row, col), Q::one());
                rows.push(lhs, if row == t { Q::one() } else { Q::zero() });
            }
        }
    }
    for op in 0..monos.len() + pair.sub_rank() {
        // Image of each target vector under the operator, in target coordinates.
        let mut on_target: Vec<Vec<(usize, Q)>> = vec![Vec::new(); target.len()];
        for (src, &ti) in target.iter().enumerate() {
            for (k, c) in normal(&op_terms(op, ti))? {
                let &dst = tgt_pos
                    .get(&k)
                    .ok_or_else(|| Error::Internal("filtration step is not A-stable".into()))?;
                on_target[dst].push((src, c));
            }
        }
        for (col, &i) in source.iter().enumerate() {
            let x = normal(&op_terms(op, i))?;
            // ρ(op · x_col) = op · ρ(x_col)
            for (row, entries) in on_target.iter().enumerate() {
                let mut lhs: SparseVec = x
                    .iter()
                    .map(|(k, c)| (unknown(row, src_pos[k]), c.clone()))
                    .collect();
                for (src, c) in entries {
                    let e = lhs.entry(unknown(*src, col)).or_insert_with(Q::zero);
                    *e -= c;
                    if e.is_zero() {
                        lhs.remove(&unknown(*src, col));
                    }
                }
                rows.push(lhs, Q::zero());
            }
        }
    }
    Ok(rows.solvable(target.len() * source.len()))
}

fn verdict_split(v: Verdict) -> Option<bool> {
    match v {
        Verdict::Vanishes => Some(true),
        Verdict::NonVanishing => Some(false),
        Verdict::Inconclusive => None,
    }
}

/// Recomputes every rank and verdict of `snap` by elimination and lists the
/// disagreements.
pub fn oracle_report(pair: &AdaptedPair, snap: &Snapshot) -> Result<OracleReport> {
    let alg = pair.ambient();
    require_finite(alg.ring())?;
    let n = snap.truncation;
    let mut diff = Vec::new();

    let ul = eliminate(pair, None, Brackets::All, n + 1)?;
    let ul_small = eliminate(pair, None, Brackets::All, n)?;
    compare_stability("envelope", &ul_small, &ul, n, &mut diff);
    for k in 0..=n {
        if ul.qdim(k) != snap.gr_ranks[k] * ul.dim {
            diff.push(DiffEntry {
                check: format!("envelope.gr_rank[{k}]"),
                detail: format!("pipeline {}, oracle {}", snap.gr_ranks[k], ul.rank_label(k)),
            });
        }
    }
    let gr_ranks: Vec<String> = (0..=n).map(|k| ul.rank_label(k)).collect();

    let one = FlatModule::trivial(&pair.sub_algebroid());
    let a1 = eliminate(pair, Some(&one), Brackets::SubFirst, n + 1)?;
    let a1_small = eliminate(pair, Some(&one), Brackets::SubFirst, n)?;
    compare_stability("a1", &a1_small, &a1, n, &mut diff);
    compare_quotient("a1", pair, &snap.a1, &a1, n, &mut diff)?;
    let a1_ranks: Vec<String> = (0..=n).map(|k| a1.rank_label(k)).collect();

    if pair.sub_rank() == 0 {
        let letters = alg.rank();
        for k in 0..=n {
            let words = letters.pow(k as u32);
            let sym = binomial(letters + k - 1, k);
            if a1.qdim(k) != words * a1.dim || ul.qdim(k) != sym * ul.dim {
                diff.push(DiffEntry {
                    check: format!("closed_form[{k}]"),
                    detail: format!("expected {words} words and {sym} monomials"),
                });
            }
        }
    }

    let mut modules = Vec::new();
    for ms in &snap.modules {
        let e = &ms.module;
        let name = e.name.clone();
        let ind = eliminate(pair, Some(e), Brackets::All, n + 1)?;
        compare_quotient(
            &format!("induced({name})"),
            pair,
            &ms.induced,
            &ind,
            n,
            &mut diff,
        )?;
        let jj = eliminate(pair, Some(e), Brackets::SubFirst, n + 1)?;
        compare_quotient(
            &format!("neighbourhood({name})"),
            pair,
            &ms.neighbourhood,
            &jj,
            n,
            &mut diff,
        )?;
        let splits = extension_splits(pair, e, &mut diff, &format!("alpha({name})"))?;
        let jet = jet_sequence_splits(pair, e)?;
        if verdict_split(ms.alpha) != Some(splits) {
            diff.push(DiffEntry {
                check: format!("alpha({name})"),
                detail: format!("pipeline {:?}, oracle splits = {splits}", ms.alpha),
            });
        }
        if verdict_split(ms.tilde) != Some(jet) {
            diff.push(DiffEntry {
                check: format!("tilde({name})"),
                detail: format!("pipeline {:?}, oracle splits = {jet}", ms.tilde),
            });
        }
        modules.push(OracleModuleReport {
            name,
            induced_ranks: (0..=n).map(|k| ind.rank_label(k)).collect(),
            neighbourhood_ranks: (0..=n).map(|k| jj.rank_label(k)).collect(),
            extension_splits: splits,
            jet_sequence_splits: jet,
        });
    }

    let degree_one_splits = filtration_splits_one(pair)?;
    if !degree_one_splits {
        diff.push(DiffEntry {
            check: "filtration.degree_one".into(),
            detail: "F^0 is not an A-direct summand of F^1".into(),
        });
    }
    let degree_two_splits = if n >= 2 && pair.quotient_rank() > 0 {
        filtration_splits(pair, 2)?
    } else {
        true
    };
    if n >= 2 {
        let alpha_quotient = snap
            .modules
            .iter()
            .find(|m| m.module == quotient_module(pair))
            .map(|m| m.alpha);
        if let Some(v) = alpha_quotient {
            if verdict_split(v) != Some(degree_two_splits) {
                diff.push(DiffEntry {
                    check: "filtration.degree_two".into(),
                    detail: format!(
                        "alpha {v:?}, oracle degree-two splitting = {degree_two_splits}"
                    ),
                });
            }
        }
        if snap.iso_two != degree_two_splits {
            diff.push(DiffEntry {
                check: "filtered_iso[2]".into(),
                detail: format!(
                    "pipeline search {}, oracle splitting {degree_two_splits}",
                    snap.iso_two
                ),
            });
        }
    }

    Ok(OracleReport {
        truncation: n,
        gr_ranks,
        a1_ranks,
        modules,
        degree_one_splits,
        degree_two_splits,
        diff,
    })
}

fn filtration_splits_one(pair: &AdaptedPair) -> Result<bool> {
    let one = FlatModule::trivial(&pair.sub_algebroid());
    extension_splits(pair, &one, &mut Vec::new(), "degree_one")
}

/// Snapshot plus oracle in one go.
pub fn run_oracle(
    pair: &AdaptedPair,
    extra: &[FlatModule],
    truncation: usize,
    budget: Option<usize>,
) -> Result<OracleReport> {
    require_finite(pair.ring())?;
    let modules = oracle_modules(pair, extra);
    let snap = snapshot(pair, &modules, truncation, budget)?;
    oracle_report(pair, &snap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{
        dual_number_algebroid, heisenberg, pair_spanned_by, plane_vector_fields, sl2,
    };
    use std::sync::Arc;

    #[test]
    fn pipeline_agrees_with_elimination() {
        let pairs = [
            pair_spanned_by(&sl2(), &["h", "e"]).unwrap(),
            pair_spanned_by(&sl2(), &["f"]).unwrap(),
            pair_spanned_by(&heisenberg(), &["x"]).unwrap(),
            pair_spanned_by(&dual_number_algebroid(), &["X"]).unwrap(),
        ];
        for pair in &pairs {
            let r = run_oracle(pair, &[], 3, None).unwrap();
            assert!(r.diff.is_empty(), "{:?}", r.diff);
        }
    }

    #[test]
    fn borel_split_verdicts() {
        let pair = pair_spanned_by(&sl2(), &["h", "e"]).unwrap();
        let r = run_oracle(&pair, &[], 2, None).unwrap();
        assert!(r.degree_one_splits);
        assert!(!r.degree_two_splits);
        assert_eq!(r.a1_ranks, ["1", "1", "1"]);
        let quotient = &r.modules[1];
        assert!(!quotient.extension_splits && !quotient.jet_sequence_splits);
    }

    #[test]
    fn free_pair_matches_closed_forms() {
        let pair = AdaptedPair::new(Arc::new(heisenberg()), 0).unwrap();
        let r = run_oracle(&pair, &[], 3, None).unwrap();
        assert_eq!(r.gr_ranks, ["1", "3", "6", "10"]);
        assert_eq!(r.a1_ranks, ["1", "3", "9", "27"]);
    }

    #[test]
    fn injected_faults_are_detected() {
        let pair = pair_spanned_by(&sl2(), &["h"]).unwrap();
        let modules = oracle_modules(&pair, &[]);
        let clean = snapshot(&pair, &modules, 2, None).unwrap();
        assert!(oracle_report(&pair, &clean).unwrap().diff.is_empty());

        let mut bad = clean.clone();
        bad.gr_ranks[2] += 1;
        assert!(!oracle_report(&pair, &bad).unwrap().diff.is_empty());

        let mut bad = clean.clone();
        let one = pair.ring().one();
        bad.a1.sub_action[0][1][1].add_assign(&one);
        assert!(!oracle_report(&pair, &bad).unwrap().diff.is_empty());

        let mut bad = clean.clone();
        bad.modules[1].alpha = Verdict::NonVanishing;
        assert!(!oracle_report(&pair, &bad).unwrap().diff.is_empty());

        let mut bad = clean;
        bad.modules[0].induced.left[1][2][0].add_assign(&one);
        assert!(!oracle_report(&pair, &bad).unwrap().diff.is_empty());
    }

    #[test]
    fn polynomial_rings_are_unsupported() {
        let pair = AdaptedPair::new(Arc::new(plane_vector_fields()), 1).unwrap();
        assert!(matches!(
            run_oracle(&pair, &[], 2, None),
            Err(Error::Unsupported(_))
        ));
    }
}
