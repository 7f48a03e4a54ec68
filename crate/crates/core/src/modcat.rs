//! Flat modules that are free of finite rank, their tensor/Hom/sum
//! constructions, Chevalley-Eilenberg cochains, and induced modules.
//!
//! A module over an algebroid is stored as one matrix per generator: entry
//! `[t][s]` is the coefficient of `e_t` in `∇_g e_s`. On a general vector
//! the action is twisted by the anchor: `∇_g(sum r_s e_s) = sum g(r_s) e_s +
//! r_s ∇_g e_s`.

use std::collections::{BTreeMap, HashMap};

use rand::Rng;

use crate::algebroid::{AdaptedPair, Algebroid};
use crate::envelope::{move_left, times_ring, Envelope, UElement, Word};
use crate::error::{Error, Result};
use crate::linalg::{AffineOutcome, AffineSystem, CertificateEntry};
use crate::ring::{CoefficientRing, RingElement};
use crate::validation::ValidationReport;

pub type Vector = Vec<RingElement>;
pub type Matrix = Vec<Vec<RingElement>>;

pub fn zero_vector(n: usize) -> Vector {
    vec![RingElement::zero(); n]
}

pub fn zero_matrix(rows: usize, cols: usize) -> Matrix {
    vec![vec![RingElement::zero(); cols]; rows]
}

pub fn identity(ring: &CoefficientRing, n: usize) -> Matrix {
    let mut m = zero_matrix(n, n);
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = ring.one();
    }
    m
}

pub fn unit_vector(ring: &CoefficientRing, n: usize, i: usize) -> Vector {
    let mut v = zero_vector(n);
    v[i] = ring.one();
    v
}

pub fn is_zero_vector(v: &[RingElement]) -> bool {
    v.iter().all(RingElement::is_zero)
}

pub fn vec_add(a: &[RingElement], b: &[RingElement]) -> Vector {
    a.iter().zip(b).map(|(x, y)| x.add(y)).collect()
}

pub fn vec_sub(a: &[RingElement], b: &[RingElement]) -> Vector {
    a.iter().zip(b).map(|(x, y)| x.sub(y)).collect()
}

pub fn vec_scale(ring: &CoefficientRing, r: &RingElement, v: &[RingElement]) -> Vector {
    v.iter().map(|x| ring.mul(r, x)).collect()
}

pub fn mat_vec(ring: &CoefficientRing, m: &Matrix, v: &[RingElement]) -> Vector {
    m.iter()
        .map(|row| {
            let mut acc = RingElement::zero();
            for (a, b) in row.iter().zip(v) {
                if !a.is_zero() && !b.is_zero() {
                    acc.add_assign(&ring.mul(a, b));
                }
            }
            acc
        })
        .collect()
}

pub fn mat_mul(ring: &CoefficientRing, a: &Matrix, b: &Matrix) -> Matrix {
    let cols = b.first().map_or(0, Vec::len);
    let mut out = zero_matrix(a.len(), cols);
    for (i, row) in a.iter().enumerate() {
        for (k, x) in row.iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            for (j, y) in b[k].iter().enumerate() {
                if !y.is_zero() {
                    out[i][j].add_assign(&ring.mul(x, y));
                }
            }
        }
    }
    out
}

pub fn mat_sub(a: &Matrix, b: &Matrix) -> Matrix {
    a.iter().zip(b).map(|(x, y)| vec_sub(x, y)).collect()
}

pub fn mat_add(a: &Matrix, b: &Matrix) -> Matrix {
    a.iter().zip(b).map(|(x, y)| vec_add(x, y)).collect()
}

pub fn column(m: &Matrix, j: usize) -> Vector {
    m.iter().map(|row| row[j].clone()).collect()
}

pub fn is_zero_matrix(m: &Matrix) -> bool {
    m.iter().all(|r| is_zero_vector(r))
}

/// Kronecker product `a ⊗ I_k`: row/column `(i, s)` at index `i * k + s`.
pub fn kron_identity(a: &Matrix, k: usize) -> Matrix {
    let rows = a.len();
    let cols = a.first().map_or(0, Vec::len);
    let mut out = zero_matrix(rows * k, cols * k);
    for i in 0..rows {
        for j in 0..cols {
            if a[i][j].is_zero() {
                continue;
            }
            for s in 0..k {
                out[i * k + s][j * k + s] = a[i][j].clone();
            }
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlatModule {
    pub name: String,
    pub rank: usize,
    pub ops: Vec<Matrix>,
    /// Filtration degree of each basis vector.
    pub degrees: Vec<usize>,
    pub labels: Vec<String>,
}

impl FlatModule {
    pub fn new(name: &str, rank: usize, ops: Vec<Matrix>) -> Result<Self> {
        for (g, m) in ops.iter().enumerate() {
            if m.len() != rank || m.iter().any(|r| r.len() != rank) {
                return Err(Error::Structural(format!(
                    "module {name}: matrix of generator {g} is not {rank} x {rank}"
                )));
            }
        }
        Ok(FlatModule {
            name: name.into(),
            rank,
            ops,
            degrees: vec![0; rank],
            labels: (0..rank).map(|s| format!("e{s}")).collect(),
        })
    }

    /// The unit object: `R` with the anchor action.
    pub fn trivial(alg: &Algebroid) -> Self {
        FlatModule {
            name: "1".into(),
            rank: 1,
            ops: vec![zero_matrix(1, 1); alg.rank()],
            degrees: vec![0],
            labels: vec!["1".into()],
        }
    }

    pub fn generator_count(&self) -> usize {
        self.ops.len()
    }

    pub fn act(&self, alg: &Algebroid, g: usize, v: &[RingElement]) -> Vector {
        let ring = alg.ring();
        let mut out: Vector = v.iter().map(|r| alg.act(g, r)).collect();
        for (s, r) in v.iter().enumerate() {
            if r.is_zero() {
                continue;
            }
            for (t, row) in self.ops[g].iter().enumerate() {
                if !row[s].is_zero() {
                    out[t].add_assign(&ring.mul(r, &row[s]));
                }
            }
        }
        out
    }

    /// Action of an arbitrary element `sum u_g l_g`.
    pub fn act_by(&self, alg: &Algebroid, u: &[RingElement], v: &[RingElement]) -> Vector {
        let ring = alg.ring();
        let mut out = zero_vector(self.rank);
        for (g, c) in u.iter().enumerate() {
            if !c.is_zero() {
                out = vec_add(&out, &vec_scale(ring, c, &self.act(alg, g, v)));
            }
        }
        out
    }

    pub fn check_algebroid(&self, alg: &Algebroid) -> Result<()> {
        if self.ops.len() != alg.rank() {
            return Err(Error::Structural(format!(
                "module {} has {} operators, algebroid has rank {}",
                self.name,
                self.ops.len(),
                alg.rank()
            )));
        }
        Ok(())
    }

    /// Flatness `[∇_i, ∇_j] = ∇_[l_i, l_j]` on basis vectors.
    pub fn validate(&self, alg: &Algebroid) -> ValidationReport {
        let mut report = ValidationReport::default();
        if let Err(e) = self.check_algebroid(alg) {
            report.push("shape", vec![], e.to_string());
            return report;
        }
        let ring = alg.ring();
        let n = alg.rank();
        for i in 0..n {
            for j in i + 1..n {
                for s in 0..self.rank {
                    let e = unit_vector(ring, self.rank, s);
                    let lhs = vec_sub(
                        &self.act(alg, i, &self.act(alg, j, &e)),
                        &self.act(alg, j, &self.act(alg, i, &e)),
                    );
                    let rhs = self.act_by(alg, alg.structure(i, j), &e);
                    if lhs != rhs {
                        report.push(
                            "flatness",
                            vec![i, j, s],
                            format!("curvature of {} on generators ({i},{j})", self.name),
                        );
                    }
                }
            }
        }
        report
    }
}

pub fn tensor(alg: &Algebroid, e: &FlatModule, f: &FlatModule) -> FlatModule {
    let (m, k) = (e.rank, f.rank);
    let ops = (0..alg.rank())
        .map(|g| {
            let mut out = zero_matrix(m * k, m * k);
            for s in 0..m {
                for t in 0..k {
                    let col = s * k + t;
                    for u in 0..m {
                        out[u * k + t][col].add_assign(&e.ops[g][u][s]);
                    }
                    for v in 0..k {
                        out[s * k + v][col].add_assign(&f.ops[g][v][t]);
                    }
                }
            }
            out
        })
        .collect();
    let mut degrees = Vec::with_capacity(m * k);
    let mut labels = Vec::with_capacity(m * k);
    for s in 0..m {
        for t in 0..k {
            degrees.push(e.degrees[s] + f.degrees[t]);
            labels.push(format!("{}⊗{}", e.labels[s], f.labels[t]));
        }
    }
    FlatModule {
        name: format!("{}⊗{}", e.name, f.name),
        rank: m * k,
        ops,
        degrees,
        labels,
    }
}

/// Index of the Hom basis element sending `e_s` to `f_t`.
pub fn hom_index(source_rank: usize, t: usize, s: usize) -> usize {
    t * source_rank + s
}

pub fn hom_to_matrix(source_rank: usize, target_rank: usize, v: &[RingElement]) -> Matrix {
    (0..target_rank)
        .map(|t| v[t * source_rank..(t + 1) * source_rank].to_vec())
        .collect()
}

pub fn matrix_to_hom(m: &Matrix) -> Vector {
    m.iter().flat_map(|r| r.iter().cloned()).collect()
}

/// `(a·ψ)(e_s) = ∇_a(ψ e_s) - ψ(∇_a e_s)` for `ψ` given as a matrix.
pub fn act_hom(alg: &Algebroid, e: &FlatModule, f: &FlatModule, g: usize, psi: &Matrix) -> Matrix {
    let ring = alg.ring();
    let mut out = zero_matrix(f.rank, e.rank);
    for s in 0..e.rank {
        let img = column(psi, s);
        let first = f.act(alg, g, &img);
        let pulled = mat_vec(ring, psi, &column(&e.ops[g], s));
        let col = vec_sub(&first, &pulled);
        for t in 0..f.rank {
            out[t][s] = col[t].clone();
        }
    }
    out
}

pub fn hom(alg: &Algebroid, e: &FlatModule, f: &FlatModule) -> FlatModule {
    let ring = alg.ring();
    let (m, k) = (e.rank, f.rank);
    let ops = (0..alg.rank())
        .map(|g| {
            let mut out = zero_matrix(m * k, m * k);
            for t in 0..k {
                for s in 0..m {
                    let mut basis = zero_matrix(k, m);
                    basis[t][s] = ring.one();
                    let image = matrix_to_hom(&act_hom(alg, e, f, g, &basis));
                    let col = hom_index(m, t, s);
                    for (row, x) in image.into_iter().enumerate() {
                        out[row][col] = x;
                    }
                }
            }
            out
        })
        .collect();
    let mut degrees = Vec::new();
    let mut labels = Vec::new();
    for t in 0..k {
        for s in 0..m {
            degrees.push(f.degrees[t].saturating_sub(e.degrees[s]));
            labels.push(format!("{}<-{}", f.labels[t], e.labels[s]));
        }
    }
    FlatModule {
        name: format!("Hom({},{})", e.name, f.name),
        rank: m * k,
        ops,
        degrees,
        labels,
    }
}

pub fn direct_sum(e: &FlatModule, f: &FlatModule) -> FlatModule {
    let n = e.rank + f.rank;
    let ops = e
        .ops
        .iter()
        .zip(&f.ops)
        .map(|(a, b)| {
            let mut out = zero_matrix(n, n);
            for i in 0..e.rank {
                for j in 0..e.rank {
                    out[i][j] = a[i][j].clone();
                }
            }
            for i in 0..f.rank {
                for j in 0..f.rank {
                    out[e.rank + i][e.rank + j] = b[i][j].clone();
                }
            }
            out
        })
        .collect();
    FlatModule {
        name: format!("{}⊕{}", e.name, f.name),
        rank: n,
        ops,
        degrees: e.degrees.iter().chain(&f.degrees).copied().collect(),
        labels: e.labels.iter().chain(&f.labels).cloned().collect(),
    }
}

/// `L/A` as a module over the sub-algebroid.
pub fn quotient_module(pair: &AdaptedPair) -> FlatModule {
    let q = pair.quotient_rank();
    let names = pair.ambient().names();
    FlatModule {
        name: "L/A".into(),
        rank: q,
        ops: (0..pair.sub_rank())
            .map(|g| pair.quotient_action_matrix(g))
            .collect(),
        degrees: vec![1; q],
        labels: (0..q)
            .map(|t| names[pair.coset_letter(t)].clone())
            .collect(),
    }
}

/// Operators `∇_l` for every generator of the ambient algebroid. Not
/// required to be flat.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConnectionLift {
    pub ops: Vec<Matrix>,
}

impl ConnectionLift {
    pub fn as_module(&self, name: &str) -> FlatModule {
        let rank = self.ops.first().map_or(0, Vec::len);
        FlatModule {
            name: name.into(),
            rank,
            ops: self.ops.clone(),
            degrees: vec![0; rank],
            labels: (0..rank).map(|s| format!("e{s}")).collect(),
        }
    }

    pub fn act(&self, alg: &Algebroid, g: usize, v: &[RingElement]) -> Vector {
        self.as_module("lift").act(alg, g, v)
    }
}

/// Alternating cochain on generators, stored on strictly increasing tuples.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cochain {
    pub degree: usize,
    pub rank: usize,
    pub values: BTreeMap<Vec<usize>, Vector>,
}

impl Cochain {
    pub fn zero(degree: usize, rank: usize) -> Self {
        Cochain {
            degree,
            rank,
            values: BTreeMap::new(),
        }
    }

    pub fn set(&mut self, tuple: Vec<usize>, v: Vector) {
        if is_zero_vector(&v) {
            self.values.remove(&tuple);
        } else {
            self.values.insert(tuple, v);
        }
    }

    /// Value on an arbitrary tuple, using the alternating property.
    pub fn eval(&self, tuple: &[usize]) -> Vector {
        let mut t = tuple.to_vec();
        let mut sign = false;
        for i in 0..t.len() {
            for j in 0..t.len() - 1 - i {
                match t[j].cmp(&t[j + 1]) {
                    std::cmp::Ordering::Greater => {
                        t.swap(j, j + 1);
                        sign = !sign;
                    }
                    std::cmp::Ordering::Equal => return zero_vector(self.rank),
                    std::cmp::Ordering::Less => {}
                }
            }
        }
        match self.values.get(&t) {
            Some(v) if sign => v.iter().map(RingElement::neg).collect(),
            Some(v) => v.clone(),
            None => zero_vector(self.rank),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sub(&self, other: &Cochain) -> Cochain {
        let mut out = self.clone();
        for (k, v) in &other.values {
            let cur = out.eval(k);
            out.set(k.clone(), vec_sub(&cur, v));
        }
        out
    }
}

pub fn increasing_tuples(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(n: usize, start: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k == 0 {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(n, i + 1, k - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, 0, k, &mut Vec::new(), &mut out);
    out
}

/// Chevalley-Eilenberg differential with values in `e`.
pub fn differential(alg: &Algebroid, e: &FlatModule, w: &Cochain) -> Cochain {
    let ring = alg.ring();
    let n = alg.rank();
    let k = w.degree + 1;
    let mut out = Cochain::zero(k, e.rank);
    for tuple in increasing_tuples(n, k) {
        let mut acc = zero_vector(e.rank);
        for i in 0..k {
            let rest: Vec<usize> = tuple
                .iter()
                .enumerate()
                .filter(|(p, _)| *p != i)
                .map(|(_, &x)| x)
                .collect();
            let term = e.act(alg, tuple[i], &w.eval(&rest));
            acc = if i % 2 == 0 {
                vec_add(&acc, &term)
            } else {
                vec_sub(&acc, &term)
            };
        }
        for i in 0..k {
            for j in i + 1..k {
                let rest: Vec<usize> = tuple
                    .iter()
                    .enumerate()
                    .filter(|(p, _)| *p != i && *p != j)
                    .map(|(_, &x)| x)
                    .collect();
                let mut term = zero_vector(e.rank);
                for (g, c) in alg.structure(tuple[i], tuple[j]).iter().enumerate() {
                    if c.is_zero() {
                        continue;
                    }
                    let mut args = vec![g];
                    args.extend_from_slice(&rest);
                    term = vec_add(&term, &vec_scale(ring, c, &w.eval(&args)));
                }
                acc = if (i + j) % 2 == 0 {
                    vec_add(&acc, &term)
                } else {
                    vec_sub(&acc, &term)
                };
            }
        }
        out.set(tuple, acc);
    }
    out
}

pub fn random_element<R: Rng>(ring: &CoefficientRing, rng: &mut R, max_degree: u32) -> RingElement {
    let basis = ring.q_basis(max_degree);
    let mut out = RingElement::zero();
    for m in basis {
        if rng.gen_bool(0.5) {
            out.add_term(m, crate::ring::q(rng.gen_range(-3..=3)));
        }
    }
    out
}

pub fn random_cochain<R: Rng>(alg: &Algebroid, rank: usize, degree: usize, rng: &mut R) -> Cochain {
    let mut out = Cochain::zero(degree, rank);
    for t in increasing_tuples(alg.rank(), degree) {
        let v = (0..rank)
            .map(|_| random_element(alg.ring(), rng, 2))
            .collect();
        out.set(t, v);
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub enum CoboundaryOutcome {
    /// `ψ` with `dψ = c`.
    Primitive(Vector),
    /// Left-kernel functional certifying that no primitive exists.
    NoSolution(Vec<CertificateEntry>),
    /// No primitive of degree at most `bound` on a polynomial ring.
    Inconclusive { bound: u32 },
}

/// Degree bound heuristic for polynomial ansatz solving.
pub fn default_bound(alg: &Algebroid, modules: &[&FlatModule], extra: &[&RingElement]) -> u32 {
    let mut d = 0;
    for i in 0..alg.rank() {
        for j in 0..alg.rank() {
            for c in alg.structure(i, j) {
                d = d.max(c.max_degree());
            }
        }
        for im in alg.anchor(i).images() {
            d = d.max(im.max_degree());
        }
    }
    for m in modules {
        for op in &m.ops {
            for row in op {
                for c in row {
                    d = d.max(c.max_degree());
                }
            }
        }
    }
    for c in extra {
        d = d.max(c.max_degree());
    }
    2 * d + 2
}

/// The linear system `∇_g ψ = c(l_g)` for all generators `g`.
pub fn coboundary_system(alg: &Algebroid, e: &FlatModule, c: &Cochain, bound: u32) -> AffineSystem {
    AffineSystem::build(alg.ring(), e.rank, bound, |psi| {
        let mut res = Vec::with_capacity(alg.rank() * e.rank);
        for g in 0..alg.rank() {
            res.extend(vec_sub(&e.act(alg, g, psi), &c.eval(&[g])));
        }
        res
    })
}

pub fn coboundary_solve(
    alg: &Algebroid,
    e: &FlatModule,
    c: &Cochain,
    bound: u32,
) -> CoboundaryOutcome {
    let system = coboundary_system(alg, e, c, bound);
    match system.solve(e.rank) {
        AffineOutcome::Solved(psi) => CoboundaryOutcome::Primitive(psi),
        AffineOutcome::Infeasible(cert) if alg.ring().is_finite_dim() => {
            CoboundaryOutcome::NoSolution(cert)
        }
        AffineOutcome::Infeasible(_) => CoboundaryOutcome::Inconclusive { bound },
    }
}

/// `(U(L) ⊗_{U(A)} E)` truncated at word length `N`, with basis
/// `w ⊗ e_s` for PBW-normal words `w` in the coset letters.
#[derive(Clone, Debug)]
pub struct InducedModule {
    pub module: FlatModule,
    pub words: Vec<Word>,
    pub e_rank: usize,
    pub truncation: usize,
    index: HashMap<Word, usize>,
}

impl InducedModule {
    pub fn position(&self, w: &[usize], s: usize) -> Option<usize> {
        self.index.get(w).map(|i| i * self.e_rank + s)
    }

    pub fn word_index(&self, w: &[usize]) -> Option<usize> {
        self.index.get(w).copied()
    }

    /// Coordinates of `u ⊗ v` where `u` is in PBW normal form, so that each
    /// word splits as a coset part followed by a tail acting on `v`.
    pub fn reduce_normal(
        &self,
        pair: &AdaptedPair,
        e: &FlatModule,
        u: &UElement,
        v: &[RingElement],
    ) -> Result<Vector> {
        let alg = pair.ambient();
        let ring = alg.ring();
        let sub = pair.sub_algebroid();
        let mut out = zero_vector(self.module.rank);
        for (w, c) in u.terms() {
            let split = w
                .iter()
                .position(|&x| pair.is_sub_letter(x))
                .unwrap_or(w.len());
            let (head, tail) = w.split_at(split);
            if tail.iter().any(|&x| !pair.is_sub_letter(x)) {
                return Err(Error::Contract("element is not in PBW normal form".into()));
            }
            let mut vec = v.to_vec();
            for &x in tail.iter().rev() {
                vec = e.act(&sub, x, &vec);
            }
            for (t, r) in vec.iter().enumerate() {
                if r.is_zero() {
                    continue;
                }
                for (d, h) in move_left(alg, head, r) {
                    let pos = self.position(&h, t).ok_or(Error::Truncation {
                        length: h.len(),
                        truncation: self.truncation,
                    })?;
                    out[pos].add_assign(&ring.mul(c, &d));
                }
            }
        }
        Ok(out)
    }

    /// Coordinates of `u ⊗ v` for arbitrary `u`.
    pub fn reduce(
        &self,
        pair: &AdaptedPair,
        env: &Envelope,
        e: &FlatModule,
        u: &UElement,
        v: &[RingElement],
    ) -> Result<Vector> {
        let alg = pair.ambient();
        let ring = alg.ring();
        let mut out = zero_vector(self.module.rank);
        for (s, r) in v.iter().enumerate() {
            if r.is_zero() {
                continue;
            }
            let normal = env.straighten(&times_ring(alg, u, r));
            let unit = unit_vector(ring, self.e_rank, s);
            out = vec_add(&out, &self.reduce_normal(pair, e, &normal, &unit)?);
        }
        Ok(out)
    }
}

pub fn induced_module(
    pair: &AdaptedPair,
    env: &Envelope,
    e: &FlatModule,
    truncation: usize,
) -> Result<InducedModule> {
    let sub = pair.sub_algebroid();
    e.check_algebroid(&sub)?;
    let ring = pair.ring();
    let letters: Vec<usize> = (0..pair.quotient_rank())
        .map(|t| pair.coset_letter(t))
        .collect();
    let mut words = Vec::new();
    for k in 0..=truncation {
        words.extend(crate::envelope::sorted_words(&letters, k));
    }
    let index: HashMap<Word, usize> = words
        .iter()
        .enumerate()
        .map(|(i, w)| (w.clone(), i))
        .collect();
    let m = e.rank;
    let rank = words.len() * m;
    let mut degrees = Vec::with_capacity(rank);
    let mut labels = Vec::with_capacity(rank);
    let names = pair.ambient().names();
    for w in &words {
        for s in 0..m {
            degrees.push(w.len());
            let wl = if w.is_empty() {
                "1".to_string()
            } else {
                w.iter()
                    .map(|&x| names[x].as_str())
                    .collect::<Vec<_>>()
                    .join("*")
            };
            labels.push(format!("{wl}⊗{}", e.labels[s]));
        }
    }
    let mut induced = InducedModule {
        module: FlatModule {
            name: format!("Ind({})", e.name),
            rank,
            ops: Vec::new(),
            degrees,
            labels,
        },
        words: words.clone(),
        e_rank: m,
        truncation,
        index,
    };
    let mut ops = Vec::with_capacity(pair.sub_rank());
    for g in 0..pair.sub_rank() {
        let mut mat = zero_matrix(rank, rank);
        for (wi, w) in words.iter().enumerate() {
            let prod = env.insert(g, w);
            for s in 0..m {
                let col = induced.reduce_normal(pair, e, &prod, &unit_vector(ring, m, s))?;
                for (row, x) in col.into_iter().enumerate() {
                    mat[row][wi * m + s] = x;
                }
            }
        }
        ops.push(mat);
    }
    induced.module.ops = ops;
    Ok(induced)
}

/// `U(L)/U(L)A` truncated at `N`, as a module over `A`.
pub fn left_quotient(
    pair: &AdaptedPair,
    env: &Envelope,
    truncation: usize,
) -> Result<InducedModule> {
    let one = FlatModule::trivial(&pair.sub_algebroid());
    induced_module(pair, env, &one, truncation)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ring::CoefficientRing;
    use rand::SeedableRng;
    use std::sync::Arc;

    fn plane() -> Algebroid {
        let ring = Arc::new(CoefficientRing::polynomial(vec!["x".into(), "y".into()]));
        Algebroid::new(
            ring.clone(),
            vec!["dx".into(), "dy".into()],
            vec![vec![vec![RingElement::zero(); 2]; 2]; 2],
            vec![ring.partial(0), ring.partial(1)],
        )
        .unwrap()
    }

    #[test]
    fn d_squared_vanishes_on_plane() {
        let l = plane();
        let e = FlatModule::trivial(&l);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for deg in 0..2 {
            let w = random_cochain(&l, 1, deg, &mut rng);
            assert!(differential(&l, &e, &differential(&l, &e, &w)).is_zero());
        }
    }

    #[test]
    fn coboundary_needs_enough_degree() {
        let l = plane();
        let ring = l.ring().clone();
        let e = FlatModule::trivial(&l);
        // c(dx) = y, c(dy) = x is d(xy).
        let mut c = Cochain::zero(1, 1);
        c.set(vec![0], vec![ring.parse("y").unwrap()]);
        c.set(vec![1], vec![ring.parse("x").unwrap()]);
        match coboundary_solve(&l, &e, &c, 2) {
            CoboundaryOutcome::Primitive(psi) => assert_eq!(psi[0], ring.parse("x*y").unwrap()),
            other => panic!("{other:?}"),
        }
        assert_eq!(
            coboundary_solve(&l, &e, &c, 1),
            CoboundaryOutcome::Inconclusive { bound: 1 }
        );
    }

    #[test]
    fn alternating_eval() {
        let mut c = Cochain::zero(2, 1);
        let ring = CoefficientRing::rational_field();
        c.set(vec![0, 1], vec![ring.one()]);
        assert_eq!(c.eval(&[1, 0]), vec![ring.from_int(-1)]);
        assert!(is_zero_vector(&c.eval(&[1, 1])));
    }
}
