//! Exact commutative coefficient rings.
//!
//! Two backends share one element type: finite-dimensional commutative
//! Q-algebras given by a structure table on a basis `b_0 = 1, b_1, ...`, and
//! polynomial rings `Q[x_1, ..., x_k]`. Elements are sparse maps from
//! monomials to rationals; for the finite-dimensional backend basis element
//! `b_i` (i > 0) is encoded as the unit exponent vector at slot `i - 1`.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, SparseVec};
use crate::validation::ValidationReport;

pub type Q = BigRational;

pub fn q(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn q_frac(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Monomial(pub Vec<u32>);

impl Monomial {
    pub fn one(width: usize) -> Self {
        Monomial(vec![0; width])
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        Monomial(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| other.0.cmp(&self.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct RingElement {
    terms: BTreeMap<Monomial, Q>,
}

impl RingElement {
    pub fn zero() -> Self {
        RingElement::default()
    }

    pub fn from_terms(terms: impl IntoIterator<Item = (Monomial, Q)>) -> Self {
        let mut out = RingElement::zero();
        for (m, c) in terms {
            out.add_term(m, c);
        }
        out
    }

    pub fn monomial(m: Monomial, c: Q) -> Self {
        Self::from_terms([(m, c)])
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Q)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, m: &Monomial) -> Q {
        self.terms.get(m).cloned().unwrap_or_else(Q::zero)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, m: Monomial, c: Q) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn add_assign(&mut self, other: &RingElement) {
        for (m, c) in &other.terms {
            self.add_term(m.clone(), c.clone());
        }
    }

    pub fn add_scaled(&mut self, other: &RingElement, s: &Q) {
        if s.is_zero() {
            return;
        }
        for (m, c) in &other.terms {
            self.add_term(m.clone(), c * s);
        }
    }

    pub fn add(&self, other: &RingElement) -> RingElement {
        let mut out = self.clone();
        out.add_assign(other);
        out
    }

    pub fn sub(&self, other: &RingElement) -> RingElement {
        let mut out = self.clone();
        out.add_scaled(other, &-Q::one());
        out
    }

    pub fn neg(&self) -> RingElement {
        self.scale(&-Q::one())
    }

    pub fn scale(&self, s: &Q) -> RingElement {
        if s.is_zero() {
            return RingElement::zero();
        }
        RingElement {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), c * s)).collect(),
        }
    }

    /// The constant coefficient, i.e. the coefficient of the unit monomial.
    pub fn constant_term(&self) -> Q {
        self.terms
            .iter()
            .find(|(m, _)| m.degree() == 0)
            .map(|(_, c)| c.clone())
            .unwrap_or_else(Q::zero)
    }

    pub fn max_degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RingKind {
    RationalField,
    FiniteDimAlgebra,
    PolynomialRing,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoefficientRing {
    kind: RingKind,
    /// Basis labels (finite-dimensional) or variable names (polynomial).
    labels: Vec<String>,
    /// `table[i][j] = b_i * b_j`, finite-dimensional backend only.
    table: Vec<Vec<RingElement>>,
    nilpotent: Vec<bool>,
}

impl CoefficientRing {
    pub fn rational_field() -> Self {
        let one = RingElement::monomial(Monomial(vec![]), Q::one());
        CoefficientRing {
            kind: RingKind::RationalField,
            labels: vec!["1".into()],
            table: vec![vec![one]],
            nilpotent: vec![false],
        }
    }

    /// Builds a finite-dimensional algebra from sparse structure constants
    /// `b_i * b_j = sum coeff * b_k`. Products with `b_0` default to the unit
    /// law and missing `(j, i)` entries mirror `(i, j)`.
    pub fn finite_dim(
        labels: Vec<String>,
        entries: &[(usize, usize, usize, Q)],
        nilpotent: Vec<bool>,
    ) -> Result<Self> {
        let d = labels.len();
        if d == 0 {
            return Err(Error::Structural("algebra needs at least the unit".into()));
        }
        if !nilpotent.is_empty() && nilpotent.len() != d {
            return Err(Error::Structural(format!(
                "nilpotent flags have length {}, expected {d}",
                nilpotent.len()
            )));
        }
        let mut seen = vec![vec![false; d]; d];
        let mut table = vec![vec![RingElement::zero(); d]; d];
        for (i, j, k, c) in entries {
            if *i >= d || *j >= d || *k >= d {
                return Err(Error::Structural(format!(
                    "structure constant ({i},{j},{k}) out of range for dimension {d}"
                )));
            }
            table[*i][*j].add_term(basis_monomial(d, *k), c.clone());
            seen[*i][*j] = true;
        }
        for i in 0..d {
            for j in 0..d {
                if !seen[i][j] {
                    if seen[j][i] {
                        table[i][j] = table[j][i].clone();
                    } else if i == 0 {
                        table[i][j] = RingElement::monomial(basis_monomial(d, j), Q::one());
                    } else if j == 0 {
                        table[i][j] = RingElement::monomial(basis_monomial(d, i), Q::one());
                    }
                }
            }
        }
        let nilpotent = if nilpotent.is_empty() {
            vec![false; d]
        } else {
            nilpotent
        };
        let kind = if d == 1 {
            RingKind::RationalField
        } else {
            RingKind::FiniteDimAlgebra
        };
        Ok(CoefficientRing {
            kind,
            labels,
            table,
            nilpotent,
        })
    }

    /// `Q[eps]/(eps^2)`.
    pub fn dual_numbers(label: &str) -> Self {
        CoefficientRing::finite_dim(
            vec!["1".into(), label.into()],
            &[(1, 1, 0, Q::zero())],
            vec![false, true],
        )
        .expect("dual numbers are well formed")
    }

    pub fn polynomial(vars: Vec<String>) -> Self {
        CoefficientRing {
            kind: RingKind::PolynomialRing,
            labels: vars,
            table: Vec::new(),
            nilpotent: Vec::new(),
        }
    }

    pub fn kind(&self) -> RingKind {
        self.kind
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn is_finite_dim(&self) -> bool {
        self.kind != RingKind::PolynomialRing
    }

    /// Q-dimension for the finite-dimensional backend.
    pub fn dim(&self) -> Option<usize> {
        self.is_finite_dim().then_some(self.labels.len())
    }

    fn width(&self) -> usize {
        if self.is_finite_dim() {
            self.labels.len() - 1
        } else {
            self.labels.len()
        }
    }

    pub fn zero(&self) -> RingElement {
        RingElement::zero()
    }

    pub fn one(&self) -> RingElement {
        self.constant(Q::one())
    }

    pub fn constant(&self, c: Q) -> RingElement {
        RingElement::monomial(Monomial::one(self.width()), c)
    }

    pub fn from_int(&self, n: i64) -> RingElement {
        self.constant(q(n))
    }

    /// Basis element `b_i` of a finite-dimensional algebra.
    pub fn basis_element(&self, i: usize) -> RingElement {
        assert!(self.is_finite_dim(), "basis_element on a polynomial ring");
        RingElement::monomial(basis_monomial(self.labels.len(), i), Q::one())
    }

    pub fn variable(&self, i: usize) -> RingElement {
        assert!(
            !self.is_finite_dim(),
            "variable on a finite-dimensional ring"
        );
        let mut e = vec![0; self.width()];
        e[i] = 1;
        RingElement::monomial(Monomial(e), Q::one())
    }

    /// Elements on which derivations are specified: all basis elements for
    /// the finite-dimensional backend, the variables for polynomial rings.
    pub fn generators(&self) -> Vec<RingElement> {
        if self.is_finite_dim() {
            (0..self.labels.len())
                .map(|i| self.basis_element(i))
                .collect()
        } else {
            (0..self.labels.len()).map(|i| self.variable(i)).collect()
        }
    }

    pub fn generator_count(&self) -> usize {
        self.labels.len()
    }

    fn basis_index(&self, m: &Monomial) -> Option<usize> {
        let mut idx = 0;
        for (slot, &e) in m.0.iter().enumerate() {
            match e {
                0 => {}
                1 if idx == 0 => idx = slot + 1,
                _ => return None,
            }
        }
        Some(idx)
    }

    pub fn contains(&self, r: &RingElement) -> bool {
        r.terms().all(|(m, _)| {
            m.0.len() == self.width() && (!self.is_finite_dim() || self.basis_index(m).is_some())
        })
    }

    pub fn check(&self, r: &RingElement) -> Result<()> {
        if self.contains(r) {
            Ok(())
        } else {
            Err(Error::RingMismatch(format!(
                "element {} does not belong to this ring",
                self.format(r)
            )))
        }
    }

    pub fn mul(&self, a: &RingElement, b: &RingElement) -> RingElement {
        let mut out = RingElement::zero();
        if a.is_zero() || b.is_zero() {
            return out;
        }
        if self.is_finite_dim() {
            for (ma, ca) in a.terms() {
                let i = self.basis_index(ma).expect("element outside the algebra");
                for (mb, cb) in b.terms() {
                    let j = self.basis_index(mb).expect("element outside the algebra");
                    out.add_scaled(&self.table[i][j], &(ca * cb));
                }
            }
        } else {
            for (ma, ca) in a.terms() {
                for (mb, cb) in b.terms() {
                    out.add_term(ma.mul(mb), ca * cb);
                }
            }
        }
        out
    }

    pub fn pow(&self, a: &RingElement, e: u32) -> RingElement {
        let mut out = self.one();
        for _ in 0..e {
            out = self.mul(&out, a);
        }
        out
    }

    /// Q-basis used for ansatz solving: every basis monomial in the
    /// finite-dimensional case, monomials of degree at most `bound` otherwise.
    pub fn q_basis(&self, bound: u32) -> Vec<Monomial> {
        if self.is_finite_dim() {
            return (0..self.labels.len())
                .map(|i| basis_monomial(self.labels.len(), i))
                .collect();
        }
        let mut out = Vec::new();
        let mut cur = vec![0u32; self.width()];
        monomials_up_to(&mut cur, 0, bound, &mut out);
        out.sort();
        out
    }

    /// Matrix of multiplication by `r` on the Q-basis, finite-dimensional only.
    fn mult_columns(&self, r: &RingElement) -> Vec<SparseVec> {
        let d = self.labels.len();
        (0..d)
            .map(|j| {
                let prod = self.mul(r, &self.basis_element(j));
                prod.terms()
                    .map(|(m, c)| (self.basis_index(m).unwrap(), c.clone()))
                    .collect()
            })
            .collect()
    }

    pub fn inverse(&self, r: &RingElement) -> Option<RingElement> {
        if r.is_zero() {
            return None;
        }
        if self.is_finite_dim() {
            let cols = self.mult_columns(r);
            let rhs: SparseVec = [(0usize, Q::one())].into_iter().collect();
            match linalg::solve(&cols, &rhs) {
                linalg::Solve::Solution(x) => Some(RingElement::from_terms(
                    x.into_iter()
                        .map(|(i, c)| (basis_monomial(self.labels.len(), i), c)),
                )),
                linalg::Solve::Inconsistent(_) => None,
            }
        } else if r.len() == 1 && r.max_degree() == 0 {
            Some(self.constant(Q::one() / r.constant_term()))
        } else {
            None
        }
    }

    pub fn is_unit(&self, r: &RingElement) -> bool {
        self.inverse(r).is_some()
    }

    /// Structure checks: unit law, commutativity, associativity, declared
    /// nilpotency. Polynomial rings are always valid.
    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        if !self.is_finite_dim() {
            return report;
        }
        let d = self.labels.len();
        for i in 0..d {
            let bi = self.basis_element(i);
            if self.mul(&self.one(), &bi) != bi {
                report.push("unit", vec![i], format!("1 * {} differs", self.labels[i]));
            }
            for j in 0..d {
                if self.table[i][j] != self.table[j][i] {
                    report.push("commutativity", vec![i, j], "b_i b_j != b_j b_i".into());
                }
                for k in 0..d {
                    let bj = self.basis_element(j);
                    let bk = self.basis_element(k);
                    let l = self.mul(&self.mul(&bi, &bj), &bk);
                    let r = self.mul(&bi, &self.mul(&bj, &bk));
                    if l != r {
                        report.push(
                            "associativity",
                            vec![i, j, k],
                            "(b_i b_j) b_k != b_i (b_j b_k)".into(),
                        );
                    }
                }
            }
            if self.nilpotent[i] && !self.pow(&bi, d as u32 + 1).is_zero() {
                report.push(
                    "nilpotency",
                    vec![i],
                    format!("{} is declared nilpotent", self.labels[i]),
                );
            }
        }
        report
    }

    pub fn derivation(&self, images: Vec<RingElement>) -> Result<Derivation> {
        if images.len() != self.generator_count() {
            return Err(Error::Structural(format!(
                "derivation needs {} images, got {}",
                self.generator_count(),
                images.len()
            )));
        }
        for im in &images {
            self.check(im)?;
        }
        Ok(Derivation { images })
    }

    pub fn zero_derivation(&self) -> Derivation {
        Derivation {
            images: vec![RingElement::zero(); self.generator_count()],
        }
    }

    /// `d/dx_i` on a polynomial ring.
    pub fn partial(&self, i: usize) -> Derivation {
        let mut images = vec![RingElement::zero(); self.generator_count()];
        images[i] = self.one();
        Derivation { images }
    }

    pub fn apply(&self, d: &Derivation, r: &RingElement) -> RingElement {
        let mut out = RingElement::zero();
        if self.is_finite_dim() {
            for (m, c) in r.terms() {
                let i = self.basis_index(m).expect("element outside the algebra");
                out.add_scaled(&d.images[i], c);
            }
        } else {
            for (m, c) in r.terms() {
                for (v, &e) in m.0.iter().enumerate() {
                    if e == 0 || d.images[v].is_zero() {
                        continue;
                    }
                    let mut lowered = m.clone();
                    lowered.0[v] -= 1;
                    let factor = RingElement::monomial(lowered, c * q(e as i64));
                    out.add_assign(&self.mul(&factor, &d.images[v]));
                }
            }
        }
        out
    }

    pub fn scale_derivation(&self, r: &RingElement, d: &Derivation) -> Derivation {
        Derivation {
            images: d.images.iter().map(|im| self.mul(r, im)).collect(),
        }
    }

    pub fn add_derivations(&self, a: &Derivation, b: &Derivation) -> Derivation {
        Derivation {
            images: a
                .images
                .iter()
                .zip(&b.images)
                .map(|(x, y)| x.add(y))
                .collect(),
        }
    }

    /// Commutator `[d1, d2] = d1 d2 - d2 d1`.
    pub fn bracket_derivations(&self, d1: &Derivation, d2: &Derivation) -> Derivation {
        let images = self
            .generators()
            .iter()
            .map(|g| {
                self.apply(d1, &self.apply(d2, g))
                    .sub(&self.apply(d2, &self.apply(d1, g)))
            })
            .collect();
        Derivation { images }
    }

    /// Leibniz rule on basis pairs and `d(1) = 0`.
    pub fn validate_derivation(&self, d: &Derivation) -> ValidationReport {
        let mut report = ValidationReport::default();
        if !self.is_finite_dim() {
            return report;
        }
        if !d.images[0].is_zero() {
            report.push("derivation-unit", vec![0], "d(1) != 0".into());
        }
        let gens = self.generators();
        for (i, bi) in gens.iter().enumerate() {
            for (j, bj) in gens.iter().enumerate().skip(i) {
                let lhs = self.apply(d, &self.mul(bi, bj));
                let rhs = self
                    .mul(&self.apply(d, bi), bj)
                    .add(&self.mul(bi, &self.apply(d, bj)));
                if lhs != rhs {
                    report.push(
                        "leibniz",
                        vec![i, j],
                        "d(b_i b_j) != d(b_i) b_j + b_i d(b_j)".into(),
                    );
                }
            }
        }
        report
    }

    pub fn format(&self, r: &RingElement) -> String {
        if r.is_zero() {
            return "0".into();
        }
        let mut out = String::new();
        for (idx, (m, c)) in r.terms().enumerate() {
            let mono = self.format_monomial(m);
            let neg = c.is_negative();
            let abs = c.abs();
            if idx == 0 {
                if neg {
                    out.push('-');
                }
            } else {
                out.push_str(if neg { " - " } else { " + " });
            }
            match (mono.is_empty(), abs.is_one()) {
                (true, _) => out.push_str(&abs.to_string()),
                (false, true) => out.push_str(&mono),
                (false, false) => {
                    out.push_str(&abs.to_string());
                    out.push('*');
                    out.push_str(&mono);
                }
            }
        }
        out
    }

    fn format_monomial(&self, m: &Monomial) -> String {
        if self.is_finite_dim() {
            return match self.basis_index(m) {
                Some(0) => String::new(),
                Some(i) => self.labels[i].clone(),
                None => "?".into(),
            };
        }
        let parts: Vec<String> =
            m.0.iter()
                .enumerate()
                .filter(|(_, &e)| e > 0)
                .map(|(v, &e)| {
                    if e == 1 {
                        self.labels[v].clone()
                    } else {
                        format!("{}^{}", self.labels[v], e)
                    }
                })
                .collect();
        parts.join("*")
    }

    /// Parses expressions such as `3/2`, `x^2*y - 1`, `(1 - eps)*eps`.
    pub fn parse(&self, s: &str) -> Result<RingElement> {
        let tokens = tokenize(s)?;
        let mut p = Parser {
            ring: self,
            tokens,
            pos: 0,
            src_len: s.len(),
        };
        let r = p.expr()?;
        if p.pos < p.tokens.len() {
            return Err(Error::Parse {
                position: p.tokens[p.pos].0,
                message: "unexpected trailing input".into(),
            });
        }
        Ok(r)
    }
}

fn basis_monomial(d: usize, i: usize) -> Monomial {
    let mut e = vec![0; d - 1];
    if i > 0 {
        e[i - 1] = 1;
    }
    Monomial(e)
}

fn monomials_up_to(cur: &mut Vec<u32>, slot: usize, budget: u32, out: &mut Vec<Monomial>) {
    if slot == cur.len() {
        out.push(Monomial(cur.clone()));
        return;
    }
    for e in 0..=budget {
        cur[slot] = e;
        monomials_up_to(cur, slot + 1, budget - e, out);
    }
    cur[slot] = 0;
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Derivation {
    images: Vec<RingElement>,
}

impl Derivation {
    pub fn images(&self) -> &[RingElement] {
        &self.images
    }

    pub fn is_zero(&self) -> bool {
        self.images.iter().all(RingElement::is_zero)
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(BigInt),
    Ident(String),
    Sym(char),
}

fn tokenize(s: &str) -> Result<Vec<(usize, Tok)>> {
    let mut out = Vec::new();
    let chars: Vec<(usize, char)> = s.char_indices().collect();
    let mut i = 0;
    while i < chars.len() {
        let (pos, ch) = chars[i];
        if ch.is_whitespace() {
            i += 1;
        } else if ch.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].1.is_ascii_digit() {
                i += 1;
            }
            let text: String = chars[start..i].iter().map(|(_, c)| c).collect();
            out.push((pos, Tok::Num(text.parse().expect("digits"))));
        } else if ch.is_alphabetic() || ch == '_' {
            let start = i;
            while i < chars.len() && (chars[i].1.is_alphanumeric() || chars[i].1 == '_') {
                i += 1;
            }
            let text: String = chars[start..i].iter().map(|(_, c)| c).collect();
            out.push((pos, Tok::Ident(text)));
        } else if "+-*/^()".contains(ch) {
            out.push((pos, Tok::Sym(ch)));
            i += 1;
        } else {
            return Err(Error::Parse {
                position: pos,
                message: format!("unexpected character '{ch}'"),
            });
        }
    }
    Ok(out)
}

struct Parser<'a> {
    ring: &'a CoefficientRing,
    tokens: Vec<(usize, Tok)>,
    pos: usize,
    src_len: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos).map(|(_, t)| t)
    }

    fn here(&self) -> usize {
        self.tokens
            .get(self.pos)
            .map(|(p, _)| *p)
            .unwrap_or(self.src_len)
    }

    fn err<T>(&self, message: &str) -> Result<T> {
        Err(Error::Parse {
            position: self.here(),
            message: message.into(),
        })
    }

    fn expr(&mut self) -> Result<RingElement> {
        let mut acc = match self.peek() {
            Some(Tok::Sym('-')) => {
                self.pos += 1;
                self.term()?.neg()
            }
            Some(Tok::Sym('+')) => {
                self.pos += 1;
                self.term()?
            }
            _ => self.term()?,
        };
        loop {
            match self.peek() {
                Some(Tok::Sym('+')) => {
                    self.pos += 1;
                    acc = acc.add(&self.term()?);
                }
                Some(Tok::Sym('-')) => {
                    self.pos += 1;
                    acc = acc.sub(&self.term()?);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<RingElement> {
        let mut acc = self.power()?;
        loop {
            match self.peek() {
                Some(Tok::Sym('*')) => {
                    self.pos += 1;
                    let rhs = self.power()?;
                    acc = self.ring.mul(&acc, &rhs);
                }
                Some(Tok::Sym('/')) => {
                    self.pos += 1;
                    let rhs = self.power()?;
                    if rhs.is_zero() {
                        return self.err("division by zero");
                    }
                    match self.ring.inverse(&rhs) {
                        Some(inv) => acc = self.ring.mul(&acc, &inv),
                        None => return self.err("division by a non-unit"),
                    }
                }
                _ => return Ok(acc),
            }
        }
    }

    fn power(&mut self) -> Result<RingElement> {
        let base = self.atom()?;
        if let Some(Tok::Sym('^')) = self.peek() {
            self.pos += 1;
            match self.peek().cloned() {
                Some(Tok::Num(n)) => {
                    self.pos += 1;
                    let e: u32 = n.try_into().map_err(|_| Error::Parse {
                        position: self.here(),
                        message: "exponent too large".into(),
                    })?;
                    Ok(self.ring.pow(&base, e))
                }
                _ => self.err("expected an exponent"),
            }
        } else {
            Ok(base)
        }
    }

    fn atom(&mut self) -> Result<RingElement> {
        match self.peek().cloned() {
            Some(Tok::Num(n)) => {
                self.pos += 1;
                Ok(self.ring.constant(Q::from_integer(n)))
            }
            Some(Tok::Ident(name)) => {
                let position = self.here();
                self.pos += 1;
                match self.ring.labels.iter().position(|l| *l == name) {
                    Some(i) if self.ring.is_finite_dim() => Ok(self.ring.basis_element(i)),
                    Some(i) => Ok(self.ring.variable(i)),
                    None => Err(Error::Parse {
                        position,
                        message: format!("unknown symbol '{name}'"),
                    }),
                }
            }
            Some(Tok::Sym('(')) => {
                self.pos += 1;
                let inner = self.expr()?;
                match self.peek() {
                    Some(Tok::Sym(')')) => {
                        self.pos += 1;
                        Ok(inner)
                    }
                    _ => self.err("expected ')'"),
                }
            }
            Some(Tok::Sym('-')) => {
                self.pos += 1;
                Ok(self.atom()?.neg())
            }
            _ => self.err("expected a number, symbol or '('"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn qxy() -> CoefficientRing {
        CoefficientRing::polynomial(vec!["x".into(), "y".into()])
    }

    #[test]
    fn dual_numbers_square_to_zero() {
        let r = CoefficientRing::dual_numbers("eps");
        let eps = r.basis_element(1);
        assert!(r.mul(&eps, &eps).is_zero());
        assert!(r.validate().is_valid());
        let u = r.parse("1 - eps").unwrap();
        let inv = r.inverse(&u).unwrap();
        assert_eq!(r.format(&inv), "1 + eps");
        assert!(!r.is_unit(&eps));
    }

    #[test]
    fn parse_and_format_round_trip() {
        let r = qxy();
        let e = r.parse("3/2*x^2*y - (x - 1)*(x + 1)").unwrap();
        let back = r.parse(&r.format(&e)).unwrap();
        assert_eq!(e, back);
        assert_eq!(r.format(&r.parse("x - x").unwrap()), "0");
    }

    #[test]
    fn parse_error_reports_position() {
        let r = qxy();
        match r.parse("x + $") {
            Err(Error::Parse { position, .. }) => assert_eq!(position, 4),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            r.parse("x + z"),
            Err(Error::Parse { position: 4, .. })
        ));
    }

    #[test]
    fn polynomial_derivation() {
        let r = qxy();
        let d = r.derivation(vec![r.parse("y").unwrap(), r.zero()]).unwrap();
        let f = r.parse("x^3 + x*y").unwrap();
        assert_eq!(r.apply(&d, &f), r.parse("3*x^2*y + y^2").unwrap());
    }

    #[test]
    fn euler_derivation_on_dual_numbers() {
        let r = CoefficientRing::dual_numbers("eps");
        let d = r.derivation(vec![r.zero(), r.basis_element(1)]).unwrap();
        assert!(r.validate_derivation(&d).is_valid());
        let bad = r.derivation(vec![r.zero(), r.one()]).unwrap();
        assert!(!r.validate_derivation(&bad).is_valid());
    }

    #[test]
    fn non_associative_table_is_reported() {
        let r = CoefficientRing::finite_dim(
            vec!["1".into(), "a".into(), "b".into()],
            &[(1, 1, 2, q(1)), (1, 2, 1, q(1)), (2, 2, 0, q(0))],
            vec![],
        )
        .unwrap();
        assert!(!r.validate().is_valid());
    }

    #[test]
    fn q_basis_counts() {
        assert_eq!(qxy().q_basis(2).len(), 6);
        assert_eq!(CoefficientRing::dual_numbers("e").q_basis(9).len(), 2);
    }
}
