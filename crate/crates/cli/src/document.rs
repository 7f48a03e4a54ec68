//! The JSON problem document: ring, algebroid, pair, modules and options.
//! Coefficients are exact strings throughout.

use std::sync::Arc;

use apbw_core::algebroid::{AdaptedPair, Algebroid};
use apbw_core::catalog::structure_from;
use apbw_core::modcat::{quotient_module, zero_matrix, FlatModule};
use apbw_core::oracle::OracleModuleReport;
use apbw_core::ring::{CoefficientRing, RingElement, Q};
use apbw_core::validation::ValidationReport;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemDocument {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub ring: RingSpec,
    pub algebroid: AlgebroidSpec,
    pub pair: PairSpec,
    #[serde(default)]
    pub modules: Vec<ModuleSpec>,
    #[serde(default)]
    pub options: Options,
    /// Oracle output committed alongside registry fixtures.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected: Option<Expected>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RingSpec {
    Rational,
    DualNumbers {
        label: String,
    },
    /// `b_i * b_j = sum coeff * b_k`; `b_0` is the unit.
    FiniteDim {
        labels: Vec<String>,
        products: Vec<Entry>,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        nilpotent: Vec<bool>,
    },
    Polynomial {
        variables: Vec<String>,
    },
}

/// Sparse structure constant `(i, j) -> coeff * k`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Entry {
    pub i: usize,
    pub j: usize,
    pub k: usize,
    pub coeff: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgebroidSpec {
    pub generators: Vec<String>,
    /// `[l_i, l_j]` for `i < j`; the other half is filled antisymmetrically.
    pub structure: Vec<Entry>,
    /// Anchor images of the ring generators (basis elements or variables);
    /// generators without an entry act by zero.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub anchor: Vec<AnchorSpec>,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnchorSpec {
    pub generator: usize,
    pub images: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairSpec {
    /// The first `sub_rank` generators span `A`.
    pub sub_rank: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModuleSpec {
    pub name: String,
    pub rank: usize,
    /// `∇_generator e_source` has coefficient `coeff` on `e_target`.
    pub action: Vec<ActionEntry>,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActionEntry {
    pub generator: usize,
    pub target: usize,
    pub source: usize,
    pub coeff: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Options {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expected {
    pub truncation: usize,
    pub gr_ranks: Vec<String>,
    pub a1_ranks: Vec<String>,
    pub modules: Vec<OracleModuleReport>,
    pub degree_one_splits: bool,
    pub degree_two_splits: bool,
}

/// A document turned into library objects.
#[derive(Clone, Debug)]
pub struct Problem {
    pub doc: ProblemDocument,
    pub ring: Arc<CoefficientRing>,
    pub algebroid: Arc<Algebroid>,
    pub pair: AdaptedPair,
    pub modules: Vec<FlatModule>,
}

pub fn parse_document(text: &str) -> Result<ProblemDocument, CliError> {
    serde_json::from_str(text)
        .map_err(|e| CliError::Parse(format!("line {}, column {}: {e}", e.line(), e.column())))
}

impl ProblemDocument {
    pub fn build(&self) -> Result<Problem, CliError> {
        let ring = Arc::new(match &self.ring {
            RingSpec::Rational => CoefficientRing::rational_field(),
            RingSpec::DualNumbers { label } => CoefficientRing::dual_numbers(label),
            RingSpec::FiniteDim {
                labels,
                products,
                nilpotent,
            } => {
                let entries = products
                    .iter()
                    .map(|p| {
                        let c: Q = p.coeff.trim().parse().map_err(|_| {
                            CliError::Schema(format!(
                                "product coefficient {:?} is not rational",
                                p.coeff
                            ))
                        })?;
                        Ok((p.i, p.j, p.k, c))
                    })
                    .collect::<Result<Vec<_>, CliError>>()?;
                CoefficientRing::finite_dim(labels.clone(), &entries, nilpotent.clone())?
            }
            RingSpec::Polynomial { variables } => CoefficientRing::polynomial(variables.clone()),
        });
        let n = self.algebroid.generators.len();
        let parse = |s: &str, at: &str| {
            ring.parse(s)
                .map_err(|e| CliError::Schema(format!("{at}: {e}")))
        };
        let mut entries = Vec::new();
        for (idx, e) in self.algebroid.structure.iter().enumerate() {
            if e.i >= n || e.j >= n || e.k >= n {
                return Err(CliError::Schema(format!(
                    "structure entry {idx} has an index out of range"
                )));
            }
            entries.push((
                e.i,
                e.j,
                e.k,
                parse(&e.coeff, &format!("structure entry {idx}"))?,
            ));
        }
        let mut anchor = vec![ring.zero_derivation(); n];
        for a in &self.algebroid.anchor {
            if a.generator >= n {
                return Err(CliError::Schema(format!(
                    "anchor for missing generator {}",
                    a.generator
                )));
            }
            let images = a
                .images
                .iter()
                .map(|s| parse(s, &format!("anchor of generator {}", a.generator)))
                .collect::<Result<Vec<_>, _>>()?;
            anchor[a.generator] = ring.derivation(images)?;
        }
        let algebroid = Arc::new(Algebroid::new(
            ring.clone(),
            self.algebroid.generators.clone(),
            structure_from(n, &entries),
            anchor,
        )?);
        let pair = AdaptedPair::new(algebroid.clone(), self.pair.sub_rank)?;
        let p = pair.sub_rank();
        let mut modules = Vec::new();
        for spec in &self.modules {
            let mut ops = vec![zero_matrix(spec.rank, spec.rank); p];
            for a in &spec.action {
                if a.generator >= p || a.target >= spec.rank || a.source >= spec.rank {
                    return Err(CliError::Schema(format!(
                        "module {}: action entry out of range",
                        spec.name
                    )));
                }
                ops[a.generator][a.target][a.source]
                    .add_assign(&parse(&a.coeff, &format!("module {}", spec.name))?);
            }
            if matches!(spec.name.as_str(), "1" | "1_A" | "L/A") {
                return Err(CliError::Schema(format!(
                    "module name {} is reserved",
                    spec.name
                )));
            }
            modules.push(FlatModule::new(&spec.name, spec.rank, ops)?);
        }
        Ok(Problem {
            doc: self.clone(),
            ring,
            algebroid,
            pair,
            modules,
        })
    }

    /// Normal form: coefficients reformatted, zero entries dropped, entries
    /// sorted. Serializing the result is the canonical byte form.
    pub fn canonicalize(&self) -> Result<ProblemDocument, CliError> {
        let problem = self.build()?;
        let ring = &problem.ring;
        let mut doc = self.clone();
        if let RingSpec::FiniteDim { products, .. } = &mut doc.ring {
            for p in products.iter_mut() {
                let c: Q = p
                    .coeff
                    .trim()
                    .parse()
                    .map_err(|_| CliError::Schema("bad product coefficient".into()))?;
                p.coeff = c.to_string();
            }
            products.sort();
        }
        // Structure: merge (i, j) and (j, i) into i < j form.
        let n = problem.algebroid.rank();
        let mut structure = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                for (k, c) in problem.algebroid.structure(i, j).iter().enumerate() {
                    if !c.is_zero() {
                        structure.push(Entry {
                            i,
                            j,
                            k,
                            coeff: ring.format(c),
                        });
                    }
                }
            }
        }
        doc.algebroid.structure = structure;
        let mut anchor = Vec::new();
        for g in 0..n {
            let d = problem.algebroid.anchor(g);
            if !d.is_zero() {
                anchor.push(AnchorSpec {
                    generator: g,
                    images: d.images().iter().map(|r| ring.format(r)).collect(),
                });
            }
        }
        doc.algebroid.anchor = anchor;
        for (spec, module) in doc.modules.iter_mut().zip(&problem.modules) {
            let mut action = Vec::new();
            for (g, op) in module.ops.iter().enumerate() {
                for (t, row) in op.iter().enumerate() {
                    for (s, c) in row.iter().enumerate() {
                        if !c.is_zero() {
                            action.push(ActionEntry {
                                generator: g,
                                target: t,
                                source: s,
                                coeff: ring.format(c),
                            });
                        }
                    }
                }
            }
            spec.action = action;
        }
        Ok(doc)
    }

    pub fn canonical_json(&self) -> Result<String, CliError> {
        Ok(serde_json::to_string(&self.canonicalize()?).expect("documents serialize"))
    }

    /// Hex SHA-256 of the canonical form.
    pub fn digest(&self) -> Result<String, CliError> {
        Ok(hex::encode(Sha256::digest(
            self.canonical_json()?.as_bytes(),
        )))
    }
}

impl Problem {
    pub fn validate(&self) -> ValidationReport {
        let mut report = self.pair.validate();
        let sub = self.pair.sub_algebroid();
        for m in &self.modules {
            report.merge(&format!("module {}", m.name), m.validate(&sub));
        }
        report
    }

    /// Built-in names `1_A` (also `1`) and `L/A`, then document modules.
    pub fn module(&self, name: &str) -> Result<FlatModule, CliError> {
        match name {
            "1" | "1_A" => {
                let mut one = FlatModule::trivial(&self.pair.sub_algebroid());
                one.name = "1_A".into();
                Ok(one)
            }
            "L/A" => Ok(quotient_module(&self.pair)),
            _ => self
                .modules
                .iter()
                .find(|m| m.name == name)
                .cloned()
                .ok_or_else(|| CliError::UnknownModule(name.into())),
        }
    }

    pub fn format(&self, r: &RingElement) -> String {
        self.ring.format(r)
    }
}
