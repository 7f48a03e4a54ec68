//! Sparse exact linear algebra over Q, plus the affine-system builder used by
//! every "find an R-linear map with these properties" question.

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::ring::{CoefficientRing, Monomial, RingElement, Q};

pub type SparseVec = BTreeMap<usize, Q>;

pub fn axpy(y: &mut SparseVec, a: &Q, x: &SparseVec) {
    if a.is_zero() {
        return;
    }
    for (k, v) in x {
        let e = y.entry(*k).or_insert_with(Q::zero);
        *e += a * v;
        if e.is_zero() {
            y.remove(k);
        }
    }
}

pub fn dot(a: &SparseVec, b: &SparseVec) -> Q {
    let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    small
        .iter()
        .filter_map(|(k, v)| large.get(k).map(|w| v * w))
        .fold(Q::zero(), |acc, x| acc + x)
}

/// Row echelon form keyed by pivot column. Each stored row remembers which
/// combination of inserted vectors produced it.
#[derive(Clone, Debug, Default)]
pub struct Echelon {
    rows: BTreeMap<usize, (SparseVec, SparseVec)>,
}

impl Echelon {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn pivots(&self) -> impl Iterator<Item = &usize> {
        self.rows.keys()
    }

    /// Eliminates `v` against the stored rows, updating `combo` alongside.
    pub fn reduce(&self, v: &mut SparseVec, combo: &mut SparseVec) {
        let mut cursor = 0usize;
        loop {
            let next = v.range(cursor..).find(|(k, _)| self.rows.contains_key(k));
            let Some((&k, c)) = next else { break };
            let c = c.clone();
            let (row, rc) = &self.rows[&k];
            axpy(v, &-c.clone(), row);
            axpy(combo, &-c, rc);
            cursor = k + 1;
        }
    }

    /// Returns true when `v` was independent of the stored rows.
    pub fn insert(&mut self, mut v: SparseVec, mut combo: SparseVec) -> bool {
        self.reduce(&mut v, &mut combo);
        let Some((&p, lead)) = v.iter().next() else {
            return false;
        };
        let inv = Q::one() / lead;
        for x in v.values_mut() {
            *x *= &inv;
        }
        for x in combo.values_mut() {
            *x *= &inv;
        }
        self.rows.insert(p, (v, combo));
        true
    }

    pub fn contains(&self, v: &SparseVec) -> bool {
        let mut v = v.clone();
        let mut c = SparseVec::new();
        self.reduce(&mut v, &mut c);
        v.is_empty()
    }
}

pub fn rank(vectors: &[SparseVec]) -> usize {
    let mut e = Echelon::new();
    for v in vectors {
        e.insert(v.clone(), SparseVec::new());
    }
    e.rank()
}

#[derive(Clone, Debug, PartialEq)]
pub enum Solve {
    /// Coefficients `x` with `sum x_j columns[j] = rhs`.
    Solution(SparseVec),
    /// A functional `y` with `y . columns[j] = 0` for all `j` and `y . rhs = 1`.
    Inconsistent(SparseVec),
}

pub fn solve(columns: &[SparseVec], rhs: &SparseVec) -> Solve {
    let mut e = Echelon::new();
    for (j, col) in columns.iter().enumerate() {
        e.insert(col.clone(), [(j, Q::one())].into_iter().collect());
    }
    let mut v = rhs.clone();
    let mut combo = SparseVec::new();
    e.reduce(&mut v, &mut combo);
    if v.is_empty() {
        return Solve::Solution(combo.into_iter().map(|(k, c)| (k, -c)).collect());
    }
    Solve::Inconsistent(left_kernel_witness(columns, rhs))
}

/// Solves the transposed system for a certificate of inconsistency.
fn left_kernel_witness(columns: &[SparseVec], rhs: &SparseVec) -> SparseVec {
    let mut rows: BTreeMap<usize, SparseVec> = BTreeMap::new();
    for (j, col) in columns.iter().enumerate() {
        for (i, c) in col {
            rows.entry(*i).or_default().insert(j, c.clone());
        }
    }
    let last = columns.len();
    for (i, c) in rhs {
        rows.entry(*i).or_default().insert(last, c.clone());
    }
    let keys: Vec<usize> = rows.keys().copied().collect();
    let tcols: Vec<SparseVec> = keys.iter().map(|k| rows[k].clone()).collect();
    let target: SparseVec = [(last, Q::one())].into_iter().collect();
    match solve_plain(&tcols, &target) {
        Some(y) => y.into_iter().map(|(idx, c)| (keys[idx], c)).collect(),
        None => panic!("inconsistent system without a left-kernel witness"),
    }
}

fn solve_plain(columns: &[SparseVec], rhs: &SparseVec) -> Option<SparseVec> {
    let mut e = Echelon::new();
    for (j, col) in columns.iter().enumerate() {
        e.insert(col.clone(), [(j, Q::one())].into_iter().collect());
    }
    let mut v = rhs.clone();
    let mut combo = SparseVec::new();
    e.reduce(&mut v, &mut combo);
    v.is_empty()
        .then(|| combo.into_iter().map(|(k, c)| (k, -c)).collect())
}

/// Row key of a flattened residual: (residual slot, monomial).
pub type RowKey = (usize, Monomial);

/// An affine system `residual(x) = 0` whose unknowns are ring elements, each
/// expanded over a fixed Q-basis of monomials.
#[derive(Clone, Debug)]
pub struct AffineSystem {
    pub unknowns: Vec<(usize, Monomial)>,
    pub rows: Vec<RowKey>,
    pub columns: Vec<SparseVec>,
    pub constant: SparseVec,
}

#[derive(Clone, Debug, PartialEq)]
pub enum AffineOutcome {
    Solved(Vec<RingElement>),
    /// Functional over row keys certifying inconsistency.
    Infeasible(Vec<CertificateEntry>),
}

/// One coordinate of a left-kernel functional: residual slot, monomial of
/// that slot, and the rational weight.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CertificateEntry {
    pub slot: usize,
    pub monomial: Vec<u32>,
    pub value: String,
}

struct Indexer {
    map: BTreeMap<RowKey, usize>,
    keys: Vec<RowKey>,
}

impl Indexer {
    fn flatten(&mut self, residual: &[RingElement]) -> SparseVec {
        self.flatten_sparse(residual.iter().enumerate())
    }

    fn flatten_sparse<'a>(
        &mut self,
        residual: impl Iterator<Item = (usize, &'a RingElement)>,
    ) -> SparseVec {
        let mut out = SparseVec::new();
        for (slot, r) in residual {
            for (m, c) in r.terms() {
                let key = (slot, m.clone());
                let next = self.keys.len();
                let idx = *self.map.entry(key.clone()).or_insert_with(|| next);
                if idx == next {
                    self.keys.push(key);
                }
                let e = out.entry(idx).or_insert_with(Q::zero);
                *e += c;
                if e.is_zero() {
                    out.remove(&idx);
                }
            }
        }
        out
    }
}

impl AffineSystem {
    /// Evaluates `residual` at zero and at every unit unknown. `residual` must
    /// be affine in its arguments.
    pub fn build<F>(ring: &CoefficientRing, slots: usize, bound: u32, residual: F) -> Self
    where
        F: Fn(&[RingElement]) -> Vec<RingElement>,
    {
        let basis = ring.q_basis(bound);
        let unknowns: Vec<(usize, Monomial)> = (0..slots)
            .flat_map(|s| basis.iter().map(move |m| (s, m.clone())))
            .collect();
        let mut idx = Indexer {
            map: BTreeMap::new(),
            keys: Vec::new(),
        };
        let zero_args = vec![RingElement::zero(); slots];
        let r0 = residual(&zero_args);
        let constant = idx.flatten(&r0);
        let mut columns = Vec::with_capacity(unknowns.len());
        for (s, m) in &unknowns {
            let mut args = zero_args.clone();
            args[*s] = RingElement::monomial(m.clone(), Q::one());
            let r = residual(&args);
            let diff: Vec<RingElement> = r
                .iter()
                .zip(r0.iter().chain(std::iter::repeat(&RingElement::zero())))
                .map(|(a, b)| a.sub(b))
                .collect();
            columns.push(idx.flatten(&diff));
        }
        AffineSystem {
            unknowns,
            rows: idx.keys,
            columns,
            constant,
        }
    }

    /// Same system from the residual at zero and, for each unknown (slot,
    /// monomial), the sparse change of the residual it causes. Repeated
    /// residual slots in a change are summed.
    pub fn from_columns<F>(
        ring: &CoefficientRing,
        slots: usize,
        bound: u32,
        constant: &[(usize, RingElement)],
        delta: F,
    ) -> Self
    where
        F: Fn(usize, &RingElement) -> Vec<(usize, RingElement)>,
    {
        let basis = ring.q_basis(bound);
        let unknowns: Vec<(usize, Monomial)> = (0..slots)
            .flat_map(|s| basis.iter().map(move |m| (s, m.clone())))
            .collect();
        let mut idx = Indexer {
            map: BTreeMap::new(),
            keys: Vec::new(),
        };
        let constant = idx.flatten_sparse(constant.iter().map(|(k, r)| (*k, r)));
        let columns = unknowns
            .iter()
            .map(|(s, m)| {
                let d = delta(*s, &RingElement::monomial(m.clone(), Q::one()));
                idx.flatten_sparse(d.iter().map(|(k, r)| (*k, r)))
            })
            .collect();
        AffineSystem {
            unknowns,
            rows: idx.keys,
            columns,
            constant,
        }
    }

    pub fn solve(&self, slots: usize) -> AffineOutcome {
        let rhs: SparseVec = self
            .constant
            .iter()
            .map(|(k, c)| (*k, -c.clone()))
            .collect();
        match solve(&self.columns, &rhs) {
            Solve::Solution(x) => {
                let mut out = vec![RingElement::zero(); slots];
                for (j, c) in x {
                    let (s, m) = &self.unknowns[j];
                    out[*s].add_term(m.clone(), c);
                }
                AffineOutcome::Solved(out)
            }
            Solve::Inconsistent(y) => AffineOutcome::Infeasible(
                y.into_iter()
                    .map(|(k, c)| {
                        let (slot, m) = &self.rows[k];
                        CertificateEntry {
                            slot: *slot,
                            monomial: m.0.clone(),
                            value: c.to_string(),
                        }
                    })
                    .collect(),
            ),
        }
    }

    /// Checks a stored certificate against this system without solving:
    /// it must annihilate every column and pair nontrivially with the
    /// constant term.
    pub fn verify_certificate(&self, cert: &[CertificateEntry]) -> bool {
        let pos: BTreeMap<&RowKey, usize> =
            self.rows.iter().enumerate().map(|(i, k)| (k, i)).collect();
        let mut y = SparseVec::new();
        for entry in cert {
            let Ok(c) = entry.value.parse::<Q>() else {
                return false;
            };
            let key = (entry.slot, Monomial(entry.monomial.clone()));
            // Rows absent from the system pair with zero everywhere.
            if let Some(&i) = pos.get(&key) {
                y.insert(i, c);
            }
        }
        self.columns.iter().all(|col| dot(&y, col).is_zero()) && !dot(&y, &self.constant).is_zero()
    }
}
