//! The versioned JSON run report and the per-command result payloads.

use std::fmt::Write as _;

use apbw_core::linalg::CertificateEntry;
use apbw_core::modcat::{Cochain, Matrix};
use apbw_core::obstruction::{ClassKind, ComparisonReport, Verdict};
use apbw_core::oracle::OracleReport;
use apbw_core::pbwiso::{FilteredMapReport, MatrixEntry};
use apbw_core::rewrite::CompletionReport;
use apbw_core::ring::CoefficientRing;
use apbw_core::validation::Violation;
use serde::{Deserialize, Serialize};

pub const SCHEMA: &str = "apbw-report/1";

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunReport {
    pub schema: String,
    pub tool: String,
    pub version: String,
    pub command: String,
    /// Document name, absent when the input did not parse.
    pub document: Option<String>,
    pub input_digest: Option<String>,
    pub options: ResolvedOptions,
    pub result: CommandResult,
    pub exit_code: i32,
    pub timing_ms: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResolvedOptions {
    pub module: Option<String>,
    pub truncation: usize,
    pub bound: Option<u32>,
    pub budget: Option<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CommandResult {
    Validate(ValidateResult),
    Class(ClassResult),
    Pbw(PbwResult),
    Dims(DimsResult),
    Oracle(OracleReport),
    Recheck(RecheckResult),
    Error(ErrorResult),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ErrorResult {
    pub category: String,
    pub message: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ValidateResult {
    pub valid: bool,
    pub violations: Vec<Violation>,
}

/// A dense matrix stored by its nonzero entries.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatrixData {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<MatrixEntry>,
}

impl MatrixData {
    pub fn from_matrix(ring: &CoefficientRing, m: &Matrix, cols: usize) -> Self {
        let mut entries = Vec::new();
        for (r, row) in m.iter().enumerate() {
            for (c, x) in row.iter().enumerate() {
                if !x.is_zero() {
                    entries.push(MatrixEntry {
                        row: r,
                        col: c,
                        value: ring.format(x),
                    });
                }
            }
        }
        MatrixData {
            rows: m.len(),
            cols,
            entries,
        }
    }

    pub fn to_matrix(&self, ring: &CoefficientRing) -> apbw_core::Result<Matrix> {
        let mut m = apbw_core::modcat::zero_matrix(self.rows, self.cols);
        for e in &self.entries {
            if e.row >= self.rows || e.col >= self.cols {
                return Err(apbw_core::Error::Structural(format!(
                    "entry ({}, {}) outside a {} x {} matrix",
                    e.row, e.col, self.rows, self.cols
                )));
            }
            m[e.row][e.col] = ring.parse(&e.value)?;
        }
        Ok(m)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CochainValue {
    pub tuple: Vec<usize>,
    pub value: Vec<String>,
}

pub fn cochain_values(ring: &CoefficientRing, c: &Cochain) -> Vec<CochainValue> {
    c.values
        .iter()
        .map(|(t, v)| CochainValue {
            tuple: t.clone(),
            value: v.iter().map(|x| ring.format(x)).collect(),
        })
        .collect()
}

/// One obstruction class: the verdict with whatever witnesses it.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ClassEntry {
    pub kind: ClassKind,
    pub verdict: Verdict,
    pub bound: u32,
    pub cocycle: Vec<CochainValue>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub splitting: Option<MatrixData>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate: Option<Vec<CertificateEntry>>,
}

/// Connection operators for every ambient generator, when a lift was
/// read off a splitting and passed the neighbourhood checks.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LiftEntry {
    pub certified: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ops: Option<Vec<MatrixData>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ClassResult {
    pub module: String,
    pub rank: usize,
    pub alpha: ClassEntry,
    pub tilde: ClassEntry,
    pub comparison: ComparisonReport,
    pub lift: LiftEntry,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModuleClass {
    pub module: String,
    pub alpha: ClassEntry,
    pub lift: LiftEntry,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Defect {
    pub degree: usize,
    pub quotient: usize,
    pub tensor: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct QuotientDims {
    pub ranks: Vec<usize>,
    pub tensor_ranks: Vec<usize>,
    pub defects: Vec<Defect>,
    pub completion: CompletionReport,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IsoOutcome {
    Exists,
    NotExists,
    Inconclusive,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IsoEntry {
    pub outcome: IsoOutcome,
    pub bound: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub map: Option<FilteredMapReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate: Option<Vec<CertificateEntry>>,
}

/// The three statements that must agree: both classes vanish, both lifts
/// were constructed, a filtered isomorphism exists at the truncation.
/// `None` marks an undecided entry.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EquivalenceTable {
    pub classes_vanish: Option<bool>,
    pub lifts_constructed: bool,
    pub iso_exists: Option<bool>,
    pub consistent: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BudgetInfo {
    pub budget: usize,
    pub examined: usize,
    pub stage: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PbwResult {
    pub module: String,
    pub truncation: usize,
    pub quotient: ModuleClass,
    pub coefficients: ModuleClass,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a1: Option<QuotientDims>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<FilteredMapReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub composite: Option<FilteredMapReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iso: Option<IsoEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<EquivalenceTable>,
    pub notes: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget_exhausted: Option<BudgetInfo>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DimsResult {
    pub truncation: usize,
    /// Ranks of the associated graded of the full envelope; finite-dimensional
    /// rings only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gr_ranks: Option<Vec<usize>>,
    pub free_envelope_ranks: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a1: Option<QuotientDims>,
    pub modules: Vec<ModuleDims>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget_exhausted: Option<BudgetInfo>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModuleDims {
    pub module: String,
    pub rank: usize,
    pub induced_ranks: Vec<usize>,
    pub neighbourhood_ranks: Vec<usize>,
    /// `rank(T^k(L/A)) * rank(E)` for comparison.
    pub tensor_ranks: Vec<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RecheckItem {
    pub item: String,
    pub ok: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RecheckResult {
    pub report_command: String,
    pub digest_matches: bool,
    pub items: Vec<RecheckItem>,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    /// Short human-readable rendering for `--format text`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let doc = self.document.as_deref().unwrap_or("<unparsed>");
        let _ = writeln!(out, "{} {} (exit {})", self.command, doc, self.exit_code);
        match &self.result {
            CommandResult::Error(e) => {
                let _ = writeln!(out, "{}", e.message);
            }
            CommandResult::Validate(v) => {
                let _ = writeln!(out, "valid: {}", v.valid);
                for x in &v.violations {
                    let _ = writeln!(out, "  {} {:?}: {}", x.axiom, x.witness, x.detail);
                }
            }
            CommandResult::Class(c) => {
                let _ = writeln!(out, "module {} (rank {})", c.module, c.rank);
                let _ = writeln!(
                    out,
                    "  extension class: {:?} (bound {})",
                    c.alpha.verdict, c.alpha.bound
                );
                let _ = writeln!(
                    out,
                    "  jet class:       {:?} (bound {})",
                    c.tilde.verdict, c.tilde.bound
                );
                let _ = writeln!(out, "  lift certified:  {}", c.lift.certified);
                let cmp = &c.comparison;
                let _ = writeln!(
                    out,
                    "  comparison: inverse {}, A-linear {}, vanishes on A {}, verdicts agree {}",
                    cmp.mutually_inverse, cmp.a_linear, cmp.vanishes_on_sub, cmp.verdicts_agree
                );
            }
            CommandResult::Pbw(p) => {
                let _ = writeln!(out, "module {} at N = {}", p.module, p.truncation);
                for mc in [&p.quotient, &p.coefficients] {
                    let _ = writeln!(
                        out,
                        "  class of {}: {:?}, lift {}",
                        mc.module, mc.alpha.verdict, mc.lift.certified
                    );
                }
                if let Some(a1) = &p.a1 {
                    let _ = writeln!(
                        out,
                        "  neighbourhood ranks {:?} vs tensor {:?}",
                        a1.ranks, a1.tensor_ranks
                    );
                }
                for (name, m) in [("phi", &p.phi), ("composite", &p.composite)] {
                    if let Some(m) = m {
                        let _ = writeln!(out, "  {name}: verified {}", m.all_green());
                    }
                }
                if let Some(iso) = &p.iso {
                    let _ = writeln!(out, "  filtered iso: {:?}", iso.outcome);
                }
                if let Some(t) = &p.table {
                    let _ = writeln!(
                        out,
                        "  table: classes vanish {:?}, lifts {}, iso {:?}, consistent {}",
                        t.classes_vanish, t.lifts_constructed, t.iso_exists, t.consistent
                    );
                }
                for n in &p.notes {
                    let _ = writeln!(out, "  note: {n}");
                }
                if let Some(b) = &p.budget_exhausted {
                    let _ = writeln!(
                        out,
                        "  budget {} exhausted in {} after {}",
                        b.budget, b.stage, b.examined
                    );
                }
            }
            CommandResult::Dims(d) => {
                if let Some(gr) = &d.gr_ranks {
                    let _ = writeln!(out, "  gr U(L): {gr:?}");
                }
                let _ = writeln!(out, "  free envelope: {:?}", d.free_envelope_ranks);
                if let Some(a1) = &d.a1 {
                    let _ = writeln!(
                        out,
                        "  neighbourhood of 1_A: {:?} (tensor {:?})",
                        a1.ranks, a1.tensor_ranks
                    );
                }
                for m in &d.modules {
                    let _ = writeln!(
                        out,
                        "  {}: induced {:?}, neighbourhood {:?}, tensor {:?}",
                        m.module, m.induced_ranks, m.neighbourhood_ranks, m.tensor_ranks
                    );
                }
            }
            CommandResult::Oracle(o) => {
                let _ = writeln!(
                    out,
                    "  gr ranks {:?}, neighbourhood ranks {:?}",
                    o.gr_ranks, o.a1_ranks
                );
                for m in &o.modules {
                    let _ = writeln!(
                        out,
                        "  {}: extension splits {}, jet sequence splits {}",
                        m.name, m.extension_splits, m.jet_sequence_splits
                    );
                }
                let _ = writeln!(out, "  diff entries: {}", o.diff.len());
                for d in &o.diff {
                    let _ = writeln!(out, "    {}: {}", d.check, d.detail);
                }
            }
            CommandResult::Recheck(r) => {
                let _ = writeln!(out, "  digest matches: {}", r.digest_matches);
                for i in &r.items {
                    let _ = writeln!(
                        out,
                        "  [{}] {} {}",
                        if i.ok { "ok" } else { "FAIL" },
                        i.item,
                        i.detail
                    );
                }
            }
        }
        out
    }
}
