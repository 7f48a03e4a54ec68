//! Lie-Rinehart algebras free of finite rank over a coefficient ring, and
//! adapted pairs `A ⊂ L` where `A` is spanned by the first generators.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::ring::{CoefficientRing, Derivation, RingElement};
use crate::validation::ValidationReport;

/// Coordinates of an element of `L` in the generator basis.
pub type LieElement = Vec<RingElement>;

#[derive(Clone, Debug)]
pub struct Algebroid {
    ring: Arc<CoefficientRing>,
    names: Vec<String>,
    /// `structure[i][j]` are the coordinates of `[l_i, l_j]`.
    structure: Vec<Vec<LieElement>>,
    anchor: Vec<Derivation>,
}

impl Algebroid {
    pub fn new(
        ring: Arc<CoefficientRing>,
        names: Vec<String>,
        structure: Vec<Vec<LieElement>>,
        anchor: Vec<Derivation>,
    ) -> Result<Self> {
        let n = names.len();
        if structure.len() != n || structure.iter().any(|row| row.len() != n) {
            return Err(Error::Structural(format!(
                "bracket table must be {n} x {n}"
            )));
        }
        if anchor.len() != n {
            return Err(Error::Structural(format!(
                "anchor has {} entries, expected {n}",
                anchor.len()
            )));
        }
        for row in &structure {
            for v in row {
                if v.len() != n {
                    return Err(Error::Structural(format!(
                        "bracket value of length {}, expected {n}",
                        v.len()
                    )));
                }
                for c in v {
                    ring.check(c)?;
                }
            }
        }
        for d in &anchor {
            if d.images().len() != ring.generator_count() {
                return Err(Error::Structural("anchor image has wrong arity".into()));
            }
        }
        Ok(Algebroid {
            ring,
            names,
            structure,
            anchor,
        })
    }

    /// The zero bracket with zero anchor: `R^n` as an abelian algebroid.
    pub fn abelian(ring: Arc<CoefficientRing>, names: Vec<String>) -> Self {
        let n = names.len();
        let structure = vec![vec![vec![RingElement::zero(); n]; n]; n];
        let anchor = vec![ring.zero_derivation(); n];
        Algebroid {
            ring,
            names,
            structure,
            anchor,
        }
    }

    pub fn ring(&self) -> &CoefficientRing {
        &self.ring
    }

    pub fn ring_arc(&self) -> Arc<CoefficientRing> {
        self.ring.clone()
    }

    pub fn rank(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn structure(&self, i: usize, j: usize) -> &LieElement {
        &self.structure[i][j]
    }

    pub fn anchor(&self, i: usize) -> &Derivation {
        &self.anchor[i]
    }

    pub fn zero_element(&self) -> LieElement {
        vec![RingElement::zero(); self.rank()]
    }

    pub fn generator(&self, i: usize) -> LieElement {
        let mut v = self.zero_element();
        v[i] = self.ring.one();
        v
    }

    /// Action of generator `i` on a coefficient.
    pub fn act(&self, i: usize, r: &RingElement) -> RingElement {
        self.ring.apply(&self.anchor[i], r)
    }

    pub fn anchor_of(&self, u: &LieElement) -> Derivation {
        let mut d = self.ring.zero_derivation();
        for (i, c) in u.iter().enumerate() {
            if !c.is_zero() {
                d = self
                    .ring
                    .add_derivations(&d, &self.ring.scale_derivation(c, &self.anchor[i]));
            }
        }
        d
    }

    pub fn act_by(&self, u: &LieElement, r: &RingElement) -> RingElement {
        let mut out = RingElement::zero();
        for (i, c) in u.iter().enumerate() {
            if !c.is_zero() {
                out.add_assign(&self.ring.mul(c, &self.act(i, r)));
            }
        }
        out
    }

    /// `[u, v] = sum u_i v_j [l_i, l_j] + u_i l_i(v_j) l_j - v_j l_j(u_i) l_i`.
    pub fn bracket(&self, u: &LieElement, v: &LieElement) -> LieElement {
        let ring = &self.ring;
        let mut out = self.zero_element();
        for (i, ui) in u.iter().enumerate() {
            if ui.is_zero() {
                continue;
            }
            for (j, vj) in v.iter().enumerate() {
                if vj.is_zero() {
                    continue;
                }
                let c = ring.mul(ui, vj);
                for (k, g) in self.structure[i][j].iter().enumerate() {
                    if !g.is_zero() {
                        out[k].add_assign(&ring.mul(&c, g));
                    }
                }
                out[j].add_assign(&ring.mul(ui, &self.act(i, vj)));
                out[i] = out[i].sub(&ring.mul(vj, &self.act(j, ui)));
            }
        }
        out
    }

    pub fn scale(&self, r: &RingElement, u: &LieElement) -> LieElement {
        u.iter().map(|c| self.ring.mul(r, c)).collect()
    }

    pub fn add(&self, u: &LieElement, v: &LieElement) -> LieElement {
        u.iter().zip(v).map(|(a, b)| a.add(b)).collect()
    }

    pub fn sub(&self, u: &LieElement, v: &LieElement) -> LieElement {
        u.iter().zip(v).map(|(a, b)| a.sub(b)).collect()
    }

    /// Antisymmetry, Jacobi on generator triples, anchor as a Lie morphism,
    /// anchor images being derivations and the Leibniz rule on samples.
    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        report.merge("ring", self.ring.validate());
        let n = self.rank();
        for (i, d) in self.anchor.iter().enumerate() {
            let r = self.ring.validate_derivation(d);
            for v in r.violations {
                report.push("anchor-derivation", vec![i], v.detail);
            }
        }
        for i in 0..n {
            for j in 0..n {
                let s: LieElement = self.add(&self.structure[i][j], &self.structure[j][i]);
                if s.iter().any(|c| !c.is_zero()) {
                    report.push("antisymmetry", vec![i, j], "[l_i,l_j] != -[l_j,l_i]".into());
                }
            }
        }
        for i in 0..n {
            for j in i + 1..n {
                let lhs = self.anchor_of(&self.structure[i][j]);
                let rhs = self
                    .ring
                    .bracket_derivations(&self.anchor[i], &self.anchor[j]);
                if lhs != rhs {
                    report.push(
                        "anchor-morphism",
                        vec![i, j],
                        "rho([l_i,l_j]) != [rho(l_i), rho(l_j)]".into(),
                    );
                }
            }
        }
        for i in 0..n {
            for j in i + 1..n {
                for k in j + 1..n {
                    let li = self.generator(i);
                    let lj = self.generator(j);
                    let lk = self.generator(k);
                    let t1 = self.bracket(&li, &self.bracket(&lj, &lk));
                    let t2 = self.bracket(&lj, &self.bracket(&lk, &li));
                    let t3 = self.bracket(&lk, &self.bracket(&li, &lj));
                    let sum = self.add(&self.add(&t1, &t2), &t3);
                    if sum.iter().any(|c| !c.is_zero()) {
                        report.push("jacobi", vec![i, j, k], "cyclic sum is nonzero".into());
                    }
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                for (g, r) in self.ring.generators().iter().enumerate() {
                    let lhs = self.bracket(&self.generator(i), &self.scale(r, &self.generator(j)));
                    let mut rhs = self.scale(r, &self.structure[i][j]);
                    rhs[j].add_assign(&self.act(i, r));
                    if lhs != rhs {
                        report.push("leibniz", vec![i, j, g], "[l_i, r l_j] mismatch".into());
                    }
                }
            }
        }
        report
    }
}

/// `A ⊂ L` with `A` spanned by `l_0, ..., l_{p-1}`; the remaining generators
/// project to a basis `n_0, ..., n_{q-1}` of `L/A`.
#[derive(Clone, Debug)]
pub struct AdaptedPair {
    ambient: Arc<Algebroid>,
    sub_rank: usize,
}

impl AdaptedPair {
    pub fn new(ambient: Arc<Algebroid>, sub_rank: usize) -> Result<Self> {
        if sub_rank > ambient.rank() {
            return Err(Error::Structural(format!(
                "sub-rank {sub_rank} exceeds rank {}",
                ambient.rank()
            )));
        }
        Ok(AdaptedPair { ambient, sub_rank })
    }

    pub fn ambient(&self) -> &Algebroid {
        &self.ambient
    }

    pub fn ambient_arc(&self) -> Arc<Algebroid> {
        self.ambient.clone()
    }

    pub fn ring(&self) -> &CoefficientRing {
        self.ambient.ring()
    }

    pub fn sub_rank(&self) -> usize {
        self.sub_rank
    }

    pub fn quotient_rank(&self) -> usize {
        self.ambient.rank() - self.sub_rank
    }

    /// Generator index in `L` of the coset representative `n_t`.
    pub fn coset_letter(&self, t: usize) -> usize {
        self.sub_rank + t
    }

    pub fn is_sub_letter(&self, i: usize) -> bool {
        i < self.sub_rank
    }

    /// The sub-algebroid `A` on its own generators. Only meaningful when the
    /// pair validates.
    pub fn sub_algebroid(&self) -> Algebroid {
        let p = self.sub_rank;
        let l = &self.ambient;
        let structure = (0..p)
            .map(|i| (0..p).map(|j| l.structure(i, j)[..p].to_vec()).collect())
            .collect();
        Algebroid {
            ring: l.ring_arc(),
            names: l.names()[..p].to_vec(),
            structure,
            anchor: (0..p).map(|i| l.anchor(i).clone()).collect(),
        }
    }

    /// `L/A`-component of an element of `L`.
    pub fn project(&self, u: &LieElement) -> Vec<RingElement> {
        u[self.sub_rank..].to_vec()
    }

    /// Matrix of `a_g` acting on `L/A`: entry `[u][t]` is the coefficient of
    /// `n_u` in `[a_g, n_t]`.
    pub fn quotient_action_matrix(&self, g: usize) -> Vec<Vec<RingElement>> {
        let q = self.quotient_rank();
        let mut m = vec![vec![RingElement::zero(); q]; q];
        for t in 0..q {
            let b = self.ambient.structure(g, self.coset_letter(t));
            for (u, row) in m.iter_mut().enumerate() {
                row[t] = b[self.coset_letter(u)].clone();
            }
        }
        m
    }

    pub fn validate(&self) -> ValidationReport {
        let mut report = self.ambient.validate();
        let p = self.sub_rank;
        for i in 0..p {
            for j in 0..p {
                let b = self.ambient.structure(i, j);
                if b[p..].iter().any(|c| !c.is_zero()) {
                    report.push(
                        "sub-closure",
                        vec![i, j],
                        format!(
                            "[{}, {}] leaves the sub-algebroid",
                            self.ambient.names()[i],
                            self.ambient.names()[j]
                        ),
                    );
                }
            }
        }
        report
    }
}
