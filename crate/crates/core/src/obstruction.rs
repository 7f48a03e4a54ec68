//! Obstructions to lifting an `A`-module structure to the first-order
//! neighbourhood of `A` in `L`.
//!
//! Two routes are implemented. The first splits the extension
//! `0 -> E -> B -> L/A ⊗ E -> 0` with `B = (U(L) ⊗_{U(A)} E)^{≤1}`; the second
//! splits `0 -> Hom(L/A, E) -> J -> E -> 0` with `J` the first jet module.
//! Both reduce to a coboundary problem solved exactly.

use serde::{Deserialize, Serialize};

use crate::algebroid::AdaptedPair;
use crate::envelope::{Envelope, UElement};
use crate::error::{Error, Result};
use crate::linalg::CertificateEntry;
use crate::modcat::{
    column, default_bound, direct_sum, hom, hom_to_matrix, identity, induced_module,
    is_zero_vector, mat_vec, matrix_to_hom, quotient_module, tensor, unit_vector, vec_add, vec_sub,
    zero_matrix, zero_vector, CoboundaryOutcome, Cochain, ConnectionLift, FlatModule,
    InducedModule, Matrix, Vector,
};
use crate::ring::RingElement;
use crate::validation::ValidationReport;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Vanishes,
    NonVanishing,
    Inconclusive,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassKind {
    Extension,
    Jet,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ObstructionReport {
    pub kind: ClassKind,
    pub verdict: Verdict,
    /// Extension route: `s: B -> E`. Jet route: `s: E -> J`.
    pub splitting: Option<Matrix>,
    pub certificate: Option<Vec<CertificateEntry>>,
    pub bound: u32,
    pub cocycle: Cochain,
}

/// The middle term `B` together with `M = L/A ⊗ E`.
#[derive(Clone, Debug)]
pub struct Extension {
    pub middle: InducedModule,
    pub quotient: FlatModule,
    pub e_rank: usize,
    pub q: usize,
}

pub fn extension(pair: &AdaptedPair, env: &Envelope, e: &FlatModule) -> Result<Extension> {
    let sub = pair.sub_algebroid();
    let middle = induced_module(pair, env, e, 1)?;
    let quotient = tensor(&sub, &quotient_module(pair), e);
    Ok(Extension {
        middle,
        quotient,
        e_rank: e.rank,
        q: pair.quotient_rank(),
    })
}

impl Extension {
    /// Index in `B` of `n_t ⊗ e_s`; matches the index of `n̄_t ⊗ e_s` in `M`
    /// shifted by `rank E`.
    pub fn coset_index(&self, t: usize, s: usize) -> usize {
        self.e_rank + t * self.e_rank + s
    }

    /// Checks that `B -> M` is `A`-linear, so `B` really is an extension.
    pub fn check_quotient(&self) -> Result<()> {
        let m = self.e_rank;
        for (g, op) in self.middle.module.ops.iter().enumerate() {
            for i in 0..self.quotient.rank {
                for j in 0..self.quotient.rank {
                    if op[m + i][m + j] != self.quotient.ops[g][i][j] {
                        return Err(Error::Internal(format!(
                            "extension quotient differs from L/A ⊗ E at generator {g}"
                        )));
                    }
                }
                for j in 0..m {
                    if !op[m + i][j].is_zero() {
                        return Err(Error::Internal("E is not a submodule of B".into()));
                    }
                }
            }
        }
        Ok(())
    }

    /// `c(a)(n̄ ⊗ e) = E`-component of `a · (n ⊗ e)`.
    pub fn cocycle(&self) -> Cochain {
        let m = self.e_rank;
        let qm = self.quotient.rank;
        let mut c = Cochain::zero(1, m * qm);
        for (g, op) in self.middle.module.ops.iter().enumerate() {
            let mut mat = zero_matrix(m, qm);
            for (u, row) in mat.iter_mut().enumerate() {
                for (col, x) in row.iter_mut().enumerate() {
                    *x = op[u][m + col].clone();
                }
            }
            c.set(vec![g], matrix_to_hom(&mat));
        }
        c
    }
}

pub fn extension_cocycle(pair: &AdaptedPair, e: &FlatModule) -> Result<Cochain> {
    let env = Envelope::for_pair(pair);
    let ext = extension(pair, &env, e)?;
    ext.check_quotient()?;
    Ok(ext.cocycle())
}

fn bound_for(pair: &AdaptedPair, modules: &[&FlatModule], bound: Option<u32>) -> u32 {
    bound.unwrap_or_else(|| default_bound(pair.ambient(), modules, &[]))
}

/// Decides whether the extension class of `e` vanishes.
pub fn alpha_vanishing(
    pair: &AdaptedPair,
    e: &FlatModule,
    bound: Option<u32>,
) -> Result<ObstructionReport> {
    let sub = pair.sub_algebroid();
    e.check_algebroid(&sub)?;
    let env = Envelope::for_pair(pair);
    let ext = extension(pair, &env, e)?;
    ext.check_quotient()?;
    let cocycle = ext.cocycle();
    let target = hom(&sub, &ext.quotient, e);
    let bound = bound_for(pair, &[e], bound);
    let outcome = crate::modcat::coboundary_solve(&sub, &target, &cocycle, bound);
    let mut report = ObstructionReport {
        kind: ClassKind::Extension,
        verdict: Verdict::Inconclusive,
        splitting: None,
        certificate: None,
        bound,
        cocycle,
    };
    match outcome {
        CoboundaryOutcome::Primitive(psi) => {
            let psi = hom_to_matrix(ext.quotient.rank, e.rank, &psi);
            let m = e.rank;
            let mut s = zero_matrix(m, ext.middle.module.rank);
            for u in 0..m {
                s[u][u] = pair.ring().one();
                for col in 0..ext.quotient.rank {
                    s[u][m + col] = psi[u][col].clone();
                }
            }
            check_linear_map(&sub, &ext.middle.module, e, &s)
                .map_err(|d| Error::Internal(format!("splitting is not A-linear: {d}")))?;
            report.verdict = Verdict::Vanishes;
            report.splitting = Some(s);
        }
        CoboundaryOutcome::NoSolution(cert) => {
            report.verdict = Verdict::NonVanishing;
            report.certificate = Some(cert);
        }
        CoboundaryOutcome::Inconclusive { .. } => {}
    }
    Ok(report)
}

/// Rebuilds the coboundary system behind an extension-class verdict and
/// checks a stored certificate against it.
pub fn recheck_alpha(
    pair: &AdaptedPair,
    e: &FlatModule,
    bound: u32,
    cert: &[CertificateEntry],
) -> Result<bool> {
    let sub = pair.sub_algebroid();
    let env = Envelope::for_pair(pair);
    let ext = extension(pair, &env, e)?;
    let target = hom(&sub, &ext.quotient, e);
    let system = crate::modcat::coboundary_system(&sub, &target, &ext.cocycle(), bound);
    Ok(system.verify_certificate(cert))
}

/// Checks a stored splitting without solving: `A`-linearity and the
/// section (or retraction) identity for the route that produced it.
pub fn recheck_splitting(
    pair: &AdaptedPair,
    e: &FlatModule,
    kind: ClassKind,
    s: &Matrix,
) -> Result<bool> {
    let sub = pair.sub_algebroid();
    let ring = pair.ring();
    let m = e.rank;
    let unit = |i: usize, j: usize| if i == j { ring.one() } else { ring.zero() };
    match kind {
        ClassKind::Extension => {
            let ext = extension(pair, &Envelope::for_pair(pair), e)?;
            let n = ext.middle.module.rank;
            if s.len() != m || s.iter().any(|r| r.len() != n) {
                return Ok(false);
            }
            let retraction = (0..m).all(|u| (0..m).all(|v| s[u][v] == unit(u, v)));
            Ok(retraction && check_linear_map(&sub, &ext.middle.module, e, s).is_ok())
        }
        ClassKind::Jet => {
            let jet = jet_module(pair, e);
            if s.len() != jet.module.rank || s.iter().any(|r| r.len() != m) {
                return Ok(false);
            }
            let section = (0..m).all(|u| (0..m).all(|v| s[u][v] == unit(u, v)));
            Ok(section && check_linear_map(&sub, e, &jet.module, s).is_ok())
        }
    }
}

/// Checks `f(∇_g b) = ∇_g f(b)` on basis vectors of `source`.
pub fn check_linear_map(
    alg: &crate::algebroid::Algebroid,
    source: &FlatModule,
    target: &FlatModule,
    f: &Matrix,
) -> std::result::Result<(), String> {
    let ring = alg.ring();
    for g in 0..alg.rank() {
        for b in 0..source.rank {
            let e = unit_vector(ring, source.rank, b);
            let lhs = mat_vec(ring, f, &source.act(alg, g, &e));
            let rhs = target.act(alg, g, &mat_vec(ring, f, &e));
            if lhs != rhs {
                return Err(format!("generator {g}, basis vector {b}"));
            }
        }
    }
    Ok(())
}

/// Lift with zero coset operators.
pub fn zero_extension_lift(pair: &AdaptedPair, e: &FlatModule) -> ConnectionLift {
    let mut ops = e.ops.clone();
    ops.extend((0..pair.quotient_rank()).map(|_| zero_matrix(e.rank, e.rank)));
    ConnectionLift { ops }
}

/// Lift read off from an extension splitting: `∇_n e = s(n ⊗ e)`.
pub fn lift_from_extension_splitting(
    pair: &AdaptedPair,
    e: &FlatModule,
    s: &Matrix,
) -> ConnectionLift {
    let m = e.rank;
    let mut ops = e.ops.clone();
    for t in 0..pair.quotient_rank() {
        let mut op = zero_matrix(m, m);
        for (u, row) in op.iter_mut().enumerate() {
            for (v, x) in row.iter_mut().enumerate() {
                *x = s[u][m + t * m + v].clone();
            }
        }
        ops.push(op);
    }
    ConnectionLift { ops }
}

fn check_lift_shape(pair: &AdaptedPair, e: &FlatModule, lift: &ConnectionLift) -> Result<()> {
    if lift.ops.len() != pair.ambient().rank() || lift.ops.iter().any(|m| m.len() != e.rank) {
        return Err(Error::Contract("lift has the wrong shape".into()));
    }
    for g in 0..pair.sub_rank() {
        if lift.ops[g] != e.ops[g] {
            return Err(Error::Contract(format!(
                "lift does not restrict to the module action on generator {g}"
            )));
        }
    }
    Ok(())
}

/// `c(a)(n̄ ⊗ e) = ∇_[a,n] e - a·∇_n e + ∇_n(a·e)`, valued in `Hom(L/A ⊗ E, E)`.
pub fn atiyah_cocycle(
    pair: &AdaptedPair,
    e: &FlatModule,
    lift: &ConnectionLift,
) -> Result<Cochain> {
    check_lift_shape(pair, e, lift)?;
    let alg = pair.ambient();
    let ring = alg.ring();
    let sub = pair.sub_algebroid();
    let full = lift.as_module("lift");
    let m = e.rank;
    let q = pair.quotient_rank();
    let mut c = Cochain::zero(1, m * q * m);
    for a in 0..pair.sub_rank() {
        let mut mat = zero_matrix(m, q * m);
        for t in 0..q {
            let n = pair.coset_letter(t);
            for s in 0..m {
                let es = unit_vector(ring, m, s);
                let first = full.act_by(alg, alg.structure(a, n), &es);
                let second = e.act(&sub, a, &column(&lift.ops[n], s));
                let third = full.act(alg, n, &column(&e.ops[a], s));
                let v = vec_add(&vec_sub(&first, &second), &third);
                for (u, x) in v.into_iter().enumerate() {
                    mat[u][t * m + s] = x;
                }
            }
        }
        c.set(vec![a], matrix_to_hom(&mat));
    }
    Ok(c)
}

/// A lift verified to define a module over the first-order neighbourhood.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CertifiedLift {
    lift: ConnectionLift,
    module: FlatModule,
}

impl CertifiedLift {
    pub fn lift(&self) -> &ConnectionLift {
        &self.lift
    }

    pub fn rank(&self) -> usize {
        self.module.rank
    }

    /// The module over `A` that was lifted.
    pub fn module(&self) -> &FlatModule {
        &self.module
    }

    pub fn column(&self, g: usize, s: usize) -> Vector {
        column(&self.lift.ops[g], s)
    }
}

/// Verifies the identities making `lift` a module over the neighbourhood:
/// restriction to `A`, the Leibniz rule, `[∇_a, ∇_l] = ∇_[a,l]`, and a
/// vanishing Atiyah cocycle.
pub fn promote_to_neighbourhood(
    pair: &AdaptedPair,
    e: &FlatModule,
    lift: &ConnectionLift,
) -> Result<CertifiedLift> {
    let report = neighbourhood_report(pair, e, lift)?;
    if !report.is_valid() {
        return Err(Error::Contract(format!(
            "lift fails: {}",
            report.axioms().join(", ")
        )));
    }
    Ok(CertifiedLift {
        lift: lift.clone(),
        module: e.clone(),
    })
}

/// A certified lift read off from the extension class, when it vanishes.
pub fn certified_lift(
    pair: &AdaptedPair,
    e: &FlatModule,
    bound: Option<u32>,
) -> Result<Option<CertifiedLift>> {
    let report = alpha_vanishing(pair, e, bound)?;
    match &report.splitting {
        Some(s) => {
            let lift = lift_from_extension_splitting(pair, e, s);
            promote_to_neighbourhood(pair, e, &lift).map(Some)
        }
        None => Ok(None),
    }
}

pub fn neighbourhood_report(
    pair: &AdaptedPair,
    e: &FlatModule,
    lift: &ConnectionLift,
) -> Result<ValidationReport> {
    check_lift_shape(pair, e, lift)?;
    let alg = pair.ambient();
    let ring = alg.ring();
    let full = lift.as_module("lift");
    let mut report = ValidationReport::default();
    for l in 0..alg.rank() {
        for (gi, r) in ring.generators().iter().enumerate() {
            for s in 0..e.rank {
                let es = unit_vector(ring, e.rank, s);
                let lhs = full.act(alg, l, &crate::modcat::vec_scale(ring, r, &es));
                let mut rhs = crate::modcat::vec_scale(ring, r, &full.act(alg, l, &es));
                rhs[s].add_assign(&alg.act(l, r));
                if lhs != rhs {
                    report.push(
                        "leibniz",
                        vec![l, gi, s],
                        "∇_l(r e) != r ∇_l e + l(r) e".into(),
                    );
                }
            }
        }
    }
    for a in 0..pair.sub_rank() {
        for l in 0..alg.rank() {
            for s in 0..e.rank {
                let es = unit_vector(ring, e.rank, s);
                let lhs = vec_sub(
                    &full.act(alg, a, &full.act(alg, l, &es)),
                    &full.act(alg, l, &full.act(alg, a, &es)),
                );
                let rhs = full.act_by(alg, alg.structure(a, l), &es);
                if lhs != rhs {
                    report.push("bracket", vec![a, l, s], "[∇_a, ∇_l] != ∇_[a,l]".into());
                }
            }
        }
    }
    if !atiyah_cocycle(pair, e, lift)?.is_zero() {
        report.push(
            "atiyah",
            vec![],
            "Atiyah cocycle of the lift is nonzero".into(),
        );
    }
    Ok(report)
}

/// Jet module `J` in star coordinates: `ε_s` (index `s`) and `η_{t,s}`
/// (index `m + t m + s`).
#[derive(Clone, Debug)]
pub struct JetModule {
    pub module: FlatModule,
    pub e_rank: usize,
    pub q: usize,
}

impl JetModule {
    pub fn eta(&self, t: usize, s: usize) -> usize {
        self.e_rank + t * self.e_rank + s
    }

    /// `(φ(1), φ(n_t))` to star coordinates: `r_s = φ(1)_s` and
    /// `h_{t,s} = φ(n_t)_s - n_t(r_s)`.
    pub fn from_naive(&self, pair: &AdaptedPair, e0: &[RingElement], f: &[Vector]) -> Vector {
        let alg = pair.ambient();
        let mut out = zero_vector(self.module.rank);
        out[..self.e_rank].clone_from_slice(e0);
        for t in 0..self.q {
            let n = pair.coset_letter(t);
            for s in 0..self.e_rank {
                out[self.eta(t, s)] = f[t][s].sub(&alg.act(n, &e0[s]));
            }
        }
        out
    }

    pub fn to_naive(&self, pair: &AdaptedPair, v: &[RingElement]) -> (Vector, Vec<Vector>) {
        let alg = pair.ambient();
        let e0 = v[..self.e_rank].to_vec();
        let f = (0..self.q)
            .map(|t| {
                let n = pair.coset_letter(t);
                (0..self.e_rank)
                    .map(|s| v[self.eta(t, s)].add(&alg.act(n, &e0[s])))
                    .collect()
            })
            .collect();
        (e0, f)
    }
}

/// `(a * φ)(u) = φ(u a)` on `φ` determined by `φ(1)` and `φ(n_t)`.
pub fn jet_module(pair: &AdaptedPair, e: &FlatModule) -> JetModule {
    let alg = pair.ambient();
    let ring = alg.ring();
    let sub = pair.sub_algebroid();
    let m = e.rank;
    let q = pair.quotient_rank();
    let rank = m + q * m;
    let mut jet = JetModule {
        module: FlatModule {
            name: format!("J({})", e.name),
            rank,
            ops: Vec::new(),
            degrees: (0..rank).map(|i| usize::from(i >= m)).collect(),
            labels: (0..m)
                .map(|s| format!("ε{s}"))
                .chain((0..q).flat_map(|t| (0..m).map(move |s| format!("η{t},{s}"))))
                .collect(),
        },
        e_rank: m,
        q,
    };
    let mut ops = Vec::new();
    for a in 0..pair.sub_rank() {
        let mut mat = zero_matrix(rank, rank);
        for b in 0..rank {
            let (e0, f) = jet.to_naive(pair, &unit_vector(ring, rank, b));
            let new_e0 = e.act(&sub, a, &e0);
            let new_f: Vec<Vector> = (0..q)
                .map(|t| {
                    let br = alg.structure(a, pair.coset_letter(t));
                    let mut v = e.act(&sub, a, &f[t]);
                    for u in 0..q {
                        let c = &br[pair.coset_letter(u)];
                        if !c.is_zero() {
                            v = vec_sub(&v, &crate::modcat::vec_scale(ring, c, &f[u]));
                        }
                    }
                    for (am, d) in br[..pair.sub_rank()].iter().enumerate() {
                        if !d.is_zero() {
                            v = vec_sub(
                                &v,
                                &crate::modcat::vec_scale(ring, d, &e.act(&sub, am, &e0)),
                            );
                        }
                    }
                    v
                })
                .collect();
            let col = jet.from_naive(pair, &new_e0, &new_f);
            for (row, x) in col.into_iter().enumerate() {
                mat[row][b] = x;
            }
        }
        ops.push(mat);
    }
    jet.module.ops = ops;
    jet
}

/// Decides whether the jet class of `e` vanishes.
pub fn tilde_vanishing(
    pair: &AdaptedPair,
    e: &FlatModule,
    bound: Option<u32>,
) -> Result<ObstructionReport> {
    let sub = pair.sub_algebroid();
    e.check_algebroid(&sub)?;
    let ring = pair.ring();
    let jet = jet_module(pair, e);
    let m = e.rank;
    let q = pair.quotient_rank();
    let hom_le = hom(&sub, &quotient_module(pair), e);
    let target = hom(&sub, e, &hom_le);
    let cocycle = jet_cocycle(pair, e, &jet);
    let bound = bound_for(pair, &[e], bound);
    let outcome = crate::modcat::coboundary_solve(&sub, &target, &cocycle, bound);
    let mut report = ObstructionReport {
        kind: ClassKind::Jet,
        verdict: Verdict::Inconclusive,
        splitting: None,
        certificate: None,
        bound,
        cocycle,
    };
    match outcome {
        CoboundaryOutcome::Primitive(psi) => {
            // θ = -ψ; the Hom(L/A, E) coordinate (u, t) is η_{t,u}.
            let psi = hom_to_matrix(m, hom_le.rank, &psi);
            let mut s = zero_matrix(jet.module.rank, m);
            for v in 0..m {
                s[v][v] = ring.one();
                for u in 0..m {
                    for t in 0..q {
                        s[jet.eta(t, u)][v] = psi[u * q + t][v].neg();
                    }
                }
            }
            check_linear_map(&sub, e, &jet.module, &s)
                .map_err(|d| Error::Internal(format!("jet splitting is not A-linear: {d}")))?;
            report.verdict = Verdict::Vanishes;
            report.splitting = Some(s);
        }
        CoboundaryOutcome::NoSolution(cert) => {
            report.verdict = Verdict::NonVanishing;
            report.certificate = Some(cert);
        }
        CoboundaryOutcome::Inconclusive { .. } => {}
    }
    Ok(report)
}

/// `c̃(a)(e_s)` = `η`-part of `a * ε_s`, as an element of `Hom(E, Hom(L/A, E))`.
fn jet_cocycle(pair: &AdaptedPair, e: &FlatModule, jet: &JetModule) -> Cochain {
    let m = e.rank;
    let q = pair.quotient_rank();
    let mut c = Cochain::zero(1, m * q * m);
    for a in 0..pair.sub_rank() {
        let mut mat = zero_matrix(m * q, m);
        for v in 0..m {
            for u in 0..m {
                for t in 0..q {
                    mat[u * q + t][v] = jet.module.ops[a][jet.eta(t, u)][v].clone();
                }
            }
        }
        c.set(vec![a], matrix_to_hom(&mat));
    }
    c
}

pub fn recheck_tilde(
    pair: &AdaptedPair,
    e: &FlatModule,
    bound: u32,
    cert: &[CertificateEntry],
) -> Result<bool> {
    let sub = pair.sub_algebroid();
    let jet = jet_module(pair, e);
    let hom_le = hom(&sub, &quotient_module(pair), e);
    let target = hom(&sub, e, &hom_le);
    let system =
        crate::modcat::coboundary_system(&sub, &target, &jet_cocycle(pair, e, &jet), bound);
    Ok(system.verify_certificate(cert))
}

/// Lift read off from a jet splitting: `∇_{n_t} e = s̃(e)(n_t)`.
pub fn lift_from_jet_splitting(pair: &AdaptedPair, e: &FlatModule, s: &Matrix) -> ConnectionLift {
    let jet = jet_module(pair, e);
    let m = e.rank;
    let mut ops = e.ops.clone();
    let mut coset_ops = vec![zero_matrix(m, m); pair.quotient_rank()];
    for v in 0..m {
        let (_, f) = jet.to_naive(pair, &column(s, v));
        for (t, ft) in f.iter().enumerate() {
            for u in 0..m {
                coset_ops[t][u][v] = ft[u].clone();
            }
        }
    }
    ops.extend(coset_ops);
    ConnectionLift { ops }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub mutually_inverse: bool,
    pub a_linear: bool,
    pub vanishes_on_sub: bool,
    pub lands_in_kernel: bool,
    pub extension_verdict: Verdict,
    pub jet_verdict: Verdict,
    pub verdicts_agree: bool,
}

/// Compares the two routes: builds `ℓ: J -> Hom(L/A, B)` together with
/// evaluation at `1`, checks it is an isomorphism onto the kernel of the
/// difference map with inverse `(e, f) ↦ φ_{e,f}`, and compares verdicts.
pub fn compare_classes(
    pair: &AdaptedPair,
    e: &FlatModule,
    bound: Option<u32>,
) -> Result<ComparisonReport> {
    let alg = pair.ambient();
    let ring = alg.ring();
    let sub = pair.sub_algebroid();
    let env = Envelope::for_pair(pair);
    let ext = extension(pair, &env, e)?;
    let b = &ext.middle;
    let jet = jet_module(pair, e);
    let m = e.rank;
    let q = pair.quotient_rank();
    let brank = b.module.rank;
    let hom_lb = hom(&sub, &quotient_module(pair), &b.module);
    let target = direct_sum(e, &hom_lb);
    let word = |w: Vec<usize>| UElement::word(ring, &w);

    // Columns of (ev_1, ℓ) on the star basis of J.
    let mut phi = zero_matrix(target.rank, jet.module.rank);
    let mut vanishes_on_sub = true;
    for beta in 0..jet.module.rank {
        let (e0, f) = jet.to_naive(pair, &unit_vector(ring, jet.module.rank, beta));
        for s in 0..m {
            phi[s][beta] = e0[s].clone();
        }
        for t in 0..q {
            let nt = b.reduce(pair, &env, e, &word(vec![pair.coset_letter(t)]), &e0)?;
            let one = b.reduce(pair, &env, e, &word(vec![]), &f[t])?;
            let val = vec_sub(&nt, &one);
            for (row, x) in val.into_iter().enumerate() {
                phi[m + row * q + t][beta] = x;
            }
        }
        for a in 0..pair.sub_rank() {
            let lhs = b.reduce(pair, &env, e, &word(vec![a]), &e0)?;
            let rhs = b.reduce(pair, &env, e, &word(vec![]), &e.act(&sub, a, &e0))?;
            if lhs != rhs {
                vanishes_on_sub = false;
            }
        }
    }

    let a_linear = check_linear_map(&sub, &jet.module, &target, &phi).is_ok();

    // Kernel of (e, f) ↦ (n ↦ π f(n) - n̄ ⊗ e).
    let mut lands_in_kernel = true;
    for beta in 0..jet.module.rank {
        let col = column(&phi, beta);
        let e0 = &col[..m];
        for t in 0..q {
            let nt = b.reduce(pair, &env, e, &word(vec![pair.coset_letter(t)]), e0)?;
            for row in m..brank {
                if col[m + row * q + t] != nt[row] {
                    lands_in_kernel = false;
                }
            }
        }
    }

    // Coordinates in the kernel basis k_s, k_{t,s}.
    let krank = m + q * m;
    let mut ell_hat = zero_matrix(krank, jet.module.rank);
    for beta in 0..jet.module.rank {
        let col = column(&phi, beta);
        let mut rebuilt = zero_vector(target.rank);
        for s in 0..m {
            let c = col[s].clone();
            ell_hat[s][beta] = c.clone();
            let ks = kernel_vector(pair, &env, b, e, m, q, Some(s), None)?;
            rebuilt = vec_add(&rebuilt, &crate::modcat::vec_scale(ring, &c, &ks));
        }
        for t in 0..q {
            for s in 0..m {
                let pos = b.position(&[], s).expect("degree zero present");
                let c = col[m + pos * q + t].clone();
                ell_hat[m + t * m + s][beta] = c.clone();
                let kts = kernel_vector(pair, &env, b, e, m, q, None, Some((t, s)))?;
                rebuilt = vec_add(&rebuilt, &crate::modcat::vec_scale(ring, &c, &kts));
            }
        }
        if rebuilt != col {
            lands_in_kernel = false;
        }
    }

    // φ_{e,f}: φ(1) = e, 1 ⊗ φ(n_t) = n_t ⊗ e - f(n_t).
    let mut inverse = zero_matrix(jet.module.rank, krank);
    for k in 0..krank {
        let kv = if k < m {
            kernel_vector(pair, &env, b, e, m, q, Some(k), None)?
        } else {
            let t = (k - m) / m;
            let s = (k - m) % m;
            kernel_vector(pair, &env, b, e, m, q, None, Some((t, s)))?
        };
        let e0 = kv[..m].to_vec();
        let mut f = Vec::with_capacity(q);
        for t in 0..q {
            let nt = b.reduce(pair, &env, e, &word(vec![pair.coset_letter(t)]), &e0)?;
            let ft: Vector = (0..brank).map(|row| kv[m + row * q + t].clone()).collect();
            let x = vec_sub(&nt, &ft);
            if !is_zero_vector(&x[m..]) {
                return Err(Error::Internal(
                    "kernel vector violates the difference map".into(),
                ));
            }
            f.push(x[..m].to_vec());
        }
        let col = jet.from_naive(pair, &e0, &f);
        for (row, x) in col.into_iter().enumerate() {
            inverse[row][k] = x;
        }
    }
    let id_j = identity(ring, jet.module.rank);
    let id_k = identity(ring, krank);
    let mutually_inverse = crate::modcat::mat_mul(ring, &inverse, &ell_hat) == id_j
        && crate::modcat::mat_mul(ring, &ell_hat, &inverse) == id_k;

    let alpha = alpha_vanishing(pair, e, bound)?;
    let tilde = tilde_vanishing(pair, e, bound)?;
    Ok(ComparisonReport {
        mutually_inverse,
        a_linear,
        vanishes_on_sub,
        lands_in_kernel,
        extension_verdict: alpha.verdict,
        jet_verdict: tilde.verdict,
        verdicts_agree: alpha.verdict == tilde.verdict,
    })
}

/// `k_s = (e_s, n_t ↦ n_t ⊗ e_s)` or `k_{t,s} = (0, n_t ↦ 1 ⊗ e_s)` inside
/// `E ⊕ Hom(L/A, B)`.
#[allow(clippy::too_many_arguments)]
fn kernel_vector(
    pair: &AdaptedPair,
    env: &Envelope,
    b: &InducedModule,
    e: &FlatModule,
    m: usize,
    q: usize,
    s: Option<usize>,
    ts: Option<(usize, usize)>,
) -> Result<Vector> {
    let ring = pair.ring();
    let brank = b.module.rank;
    let mut out = zero_vector(m + brank * q);
    if let Some(s) = s {
        out[s] = ring.one();
        for t in 0..q {
            let nt = b.reduce(
                pair,
                env,
                e,
                &UElement::word(ring, &[pair.coset_letter(t)]),
                &unit_vector(ring, m, s),
            )?;
            for (row, x) in nt.into_iter().enumerate() {
                out[m + row * q + t] = x;
            }
        }
    }
    if let Some((t, s)) = ts {
        let pos = b.position(&[], s).expect("degree zero present");
        out[m + pos * q + t] = ring.one();
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{heisenberg, pair_spanned_by, plane_vector_fields, sl2};
    use crate::modcat::{differential, hom};
    use crate::ring::CoefficientRing;

    fn borel() -> AdaptedPair {
        pair_spanned_by(&sl2(), &["h", "e"]).unwrap()
    }

    #[test]
    fn borel_quotient_class_is_nonzero() {
        let pair = borel();
        let e = quotient_module(&pair);
        let alpha = alpha_vanishing(&pair, &e, None).unwrap();
        assert_eq!(alpha.verdict, Verdict::NonVanishing);
        let cert = alpha.certificate.as_ref().unwrap();
        assert!(recheck_alpha(&pair, &e, alpha.bound, cert).unwrap());
        let tilde = tilde_vanishing(&pair, &e, None).unwrap();
        assert_eq!(tilde.verdict, Verdict::NonVanishing);
        assert!(
            recheck_tilde(&pair, &e, tilde.bound, tilde.certificate.as_ref().unwrap()).unwrap()
        );
        // c(e)(f̄ ⊗ f̄) = -2 f̄
        assert_eq!(alpha.cocycle.eval(&[1]), vec![pair.ring().from_int(-2)]);
    }

    #[test]
    fn cartan_and_heisenberg_classes_vanish() {
        let pairs = [
            pair_spanned_by(&sl2(), &["h"]).unwrap(),
            pair_spanned_by(&heisenberg(), &["z"]).unwrap(),
            pair_spanned_by(&heisenberg(), &["x"]).unwrap(),
            pair_spanned_by(&heisenberg(), &["x", "z"]).unwrap(),
        ];
        for pair in &pairs {
            let e = quotient_module(pair);
            let alpha = alpha_vanishing(pair, &e, None).unwrap();
            assert_eq!(alpha.verdict, Verdict::Vanishes);
            let lift = lift_from_extension_splitting(pair, &e, alpha.splitting.as_ref().unwrap());
            promote_to_neighbourhood(pair, &e, &lift).unwrap();
            let tilde = tilde_vanishing(pair, &e, None).unwrap();
            assert_eq!(tilde.verdict, Verdict::Vanishes);
            let lift = lift_from_jet_splitting(pair, &e, tilde.splitting.as_ref().unwrap());
            assert!(atiyah_cocycle(pair, &e, &lift).unwrap().is_zero());
        }
    }

    #[test]
    fn zero_lift_gives_extension_cocycle() {
        for pair in [borel(), pair_spanned_by(&sl2(), &["e"]).unwrap()] {
            let e = quotient_module(&pair);
            let c = atiyah_cocycle(&pair, &e, &zero_extension_lift(&pair, &e)).unwrap();
            assert_eq!(c, extension_cocycle(&pair, &e).unwrap());
            let sub = pair.sub_algebroid();
            let target = hom(&sub, &tensor(&sub, &quotient_module(&pair), &e), &e);
            assert!(differential(&sub, &target, &c).is_zero());
        }
    }

    #[test]
    fn changing_the_lift_changes_the_cocycle_by_a_coboundary() {
        let pair = borel();
        let e = quotient_module(&pair);
        let ring = pair.ring();
        let base = zero_extension_lift(&pair, &e);
        let mut moved = base.clone();
        moved.ops[2][0][0] = ring.from_int(5);
        let c0 = atiyah_cocycle(&pair, &e, &base).unwrap();
        let c1 = atiyah_cocycle(&pair, &e, &moved).unwrap();
        // θ(f̄ ⊗ e_0) = 5 e_0, and c_{∇+θ} = c_∇ - dθ.
        let sub = pair.sub_algebroid();
        let target = hom(&sub, &tensor(&sub, &quotient_module(&pair), &e), &e);
        let mut theta = Cochain::zero(0, 1);
        theta.set(vec![], vec![ring.from_int(5)]);
        assert_eq!(c0.sub(&c1), differential(&sub, &target, &theta));
    }

    #[test]
    fn comparison_maps_are_inverse() {
        let pairs = [
            borel(),
            pair_spanned_by(&sl2(), &["f"]).unwrap(),
            pair_spanned_by(&heisenberg(), &["x"]).unwrap(),
        ];
        for pair in &pairs {
            for e in [
                quotient_module(pair),
                FlatModule::trivial(&pair.sub_algebroid()),
            ] {
                let r = compare_classes(pair, &e, None).unwrap();
                assert!(
                    r.mutually_inverse && r.a_linear && r.vanishes_on_sub && r.lands_in_kernel,
                    "{r:?}"
                );
                assert!(r.verdicts_agree);
            }
        }
    }

    #[test]
    fn plane_connection_needs_a_degree_one_primitive() {
        let pair = AdaptedPair::new(std::sync::Arc::new(plane_vector_fields()), 1).unwrap();
        let ring: &CoefficientRing = pair.ring();
        let e = FlatModule::new("E", 1, vec![vec![vec![ring.parse("y").unwrap()]]]).unwrap();
        assert_eq!(
            alpha_vanishing(&pair, &e, Some(0)).unwrap().verdict,
            Verdict::Inconclusive
        );
        let alpha = alpha_vanishing(&pair, &e, None).unwrap();
        assert_eq!(alpha.verdict, Verdict::Vanishes);
        let lift = lift_from_extension_splitting(&pair, &e, alpha.splitting.as_ref().unwrap());
        promote_to_neighbourhood(&pair, &e, &lift).unwrap();
        assert_eq!(
            tilde_vanishing(&pair, &e, None).unwrap().verdict,
            Verdict::Vanishes
        );
    }
}
