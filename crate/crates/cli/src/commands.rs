use std::time::Instant;

use apbw_core::algebroid::AdaptedPair;
use apbw_core::envelope::Envelope;
use apbw_core::modcat::{default_bound, induced_module, quotient_module, FlatModule};
use apbw_core::neighborhood::{
    a1_quotient, free_envelope_ranks, neighbourhood_induced, phi_map, rank_defects, tensor_ranks,
    NeighbourhoodQuotient,
};
use apbw_core::obstruction::{
    alpha_vanishing, compare_classes, lift_from_extension_splitting, promote_to_neighbourhood,
    tilde_vanishing, CertifiedLift, ObstructionReport, Verdict,
};
use apbw_core::oracle::run_oracle;
use apbw_core::pbwiso::{filtered_iso_search, pbw_composite, IsoSearch};
use apbw_core::ring::CoefficientRing;
use apbw_core::Error;

use crate::document::{parse_document, Problem, ProblemDocument};
use crate::report::*;
use crate::{exit, CliError};

pub const DEFAULT_TRUNCATION: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Validate,
    Class,
    Pbw,
    Dims,
    Oracle,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Validate => "validate",
            Command::Class => "class",
            Command::Pbw => "pbw",
            Command::Dims => "dims",
            Command::Oracle => "oracle",
        }
    }

    fn default_module(self) -> Option<&'static str> {
        match self {
            Command::Class => Some("L/A"),
            Command::Pbw => Some("1_A"),
            _ => None,
        }
    }
}

/// Command-line overrides; anything unset falls back to the document's
/// `options` block.
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub module: Option<String>,
    pub truncation: Option<usize>,
    pub bound: Option<u32>,
    pub budget: Option<usize>,
}

impl RunOptions {
    pub fn resolve(&self, cmd: Option<Command>, doc: Option<&ProblemDocument>) -> ResolvedOptions {
        let d = doc.map(|d| d.options.clone()).unwrap_or_default();
        ResolvedOptions {
            module: self
                .module
                .clone()
                .or_else(|| cmd.and_then(Command::default_module).map(String::from)),
            truncation: self
                .truncation
                .or(d.truncation)
                .unwrap_or(DEFAULT_TRUNCATION),
            bound: self.bound.or(d.bound),
            budget: self.budget.or(d.budget),
        }
    }
}

pub(crate) fn envelope_report(
    command: &str,
    doc: Option<&ProblemDocument>,
    digest: Option<String>,
    options: ResolvedOptions,
    result: CommandResult,
    exit_code: i32,
    started: Instant,
) -> RunReport {
    RunReport {
        schema: SCHEMA.into(),
        tool: "algebroid-pbw".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: command.into(),
        document: doc.map(|d| d.name.clone()),
        input_digest: digest,
        options,
        result,
        exit_code,
        timing_ms: started.elapsed().as_millis() as u64,
    }
}

pub(crate) fn error_result(e: &CliError) -> CommandResult {
    CommandResult::Error(ErrorResult {
        category: e.category().into(),
        message: e.to_string(),
    })
}

/// Parses, validates and builds a document, then runs one command.
pub fn run(cmd: Command, text: &str, opts: &RunOptions) -> RunReport {
    let started = Instant::now();
    let doc = match parse_document(text) {
        Ok(d) => d,
        Err(e) => {
            return envelope_report(
                cmd.name(),
                None,
                None,
                opts.resolve(Some(cmd), None),
                error_result(&e),
                e.exit_code(),
                started,
            )
        }
    };
    let options = opts.resolve(Some(cmd), Some(&doc));
    let prepared = doc.build().and_then(|p| Ok((doc.digest()?, p)));
    let (digest, problem) = match prepared {
        Ok(x) => x,
        Err(e) => {
            return envelope_report(
                cmd.name(),
                Some(&doc),
                None,
                options,
                error_result(&e),
                e.exit_code(),
                started,
            )
        }
    };
    let (result, code) = match dispatch(cmd, &problem, &options) {
        Ok(x) => x,
        Err(e) => (error_result(&e), e.exit_code()),
    };
    envelope_report(
        cmd.name(),
        Some(&doc),
        Some(digest),
        options,
        result,
        code,
        started,
    )
}

fn dispatch(
    cmd: Command,
    problem: &Problem,
    options: &ResolvedOptions,
) -> Result<(CommandResult, i32), CliError> {
    let validation = problem.validate();
    if cmd == Command::Validate {
        let code = if validation.is_valid() {
            exit::OK
        } else {
            exit::NEGATIVE
        };
        return Ok((
            CommandResult::Validate(ValidateResult {
                valid: validation.is_valid(),
                violations: validation.violations,
            }),
            code,
        ));
    }
    if !validation.is_valid() {
        return Err(CliError::Schema(format!(
            "document fails validation: {}",
            validation.axioms().join(", ")
        )));
    }
    match cmd {
        Command::Validate => unreachable!(),
        Command::Class => cmd_class(problem, options),
        Command::Pbw => cmd_pbw(problem, options),
        Command::Dims => cmd_dims(problem, options),
        Command::Oracle => cmd_oracle(problem, options),
    }
}

pub(crate) fn class_entry(
    ring: &CoefficientRing,
    r: &ObstructionReport,
    e: &FlatModule,
) -> ClassEntry {
    ClassEntry {
        kind: r.kind,
        verdict: r.verdict,
        bound: r.bound,
        cocycle: cochain_values(ring, &r.cocycle),
        splitting: r.splitting.as_ref().map(|s| {
            let cols = s.first().map_or(e.rank, Vec::len);
            MatrixData::from_matrix(ring, s, cols)
        }),
        certificate: r.certificate.clone(),
    }
}

fn lift_entry(ring: &CoefficientRing, lift: Option<&CertifiedLift>) -> LiftEntry {
    LiftEntry {
        certified: lift.is_some(),
        ops: lift.map(|l| {
            l.lift()
                .ops
                .iter()
                .map(|op| MatrixData::from_matrix(ring, op, l.rank()))
                .collect()
        }),
    }
}

/// The lift read off the extension splitting, if there is one.
fn lift_for(
    pair: &AdaptedPair,
    e: &FlatModule,
    alpha: &ObstructionReport,
) -> Result<Option<CertifiedLift>, CliError> {
    match &alpha.splitting {
        Some(s) => {
            let lift = lift_from_extension_splitting(pair, e, s);
            Ok(Some(promote_to_neighbourhood(pair, e, &lift)?))
        }
        None => Ok(None),
    }
}

fn module_named(problem: &Problem, options: &ResolvedOptions) -> Result<FlatModule, CliError> {
    problem.module(options.module.as_deref().unwrap_or("1_A"))
}

fn cmd_class(
    problem: &Problem,
    options: &ResolvedOptions,
) -> Result<(CommandResult, i32), CliError> {
    let pair = &problem.pair;
    let ring = problem.ring.as_ref();
    let e = module_named(problem, options)?;
    let alpha = alpha_vanishing(pair, &e, options.bound)?;
    let tilde = tilde_vanishing(pair, &e, options.bound)?;
    let comparison = compare_classes(pair, &e, options.bound)?;
    let lift = lift_for(pair, &e, &alpha)?;
    let code = match (alpha.verdict, tilde.verdict) {
        _ if !(comparison.mutually_inverse
            && comparison.a_linear
            && comparison.vanishes_on_sub) =>
        {
            exit::INTERNAL
        }
        (Verdict::Vanishes, Verdict::Vanishes) => exit::OK,
        (Verdict::NonVanishing, Verdict::NonVanishing) => exit::NEGATIVE,
        (Verdict::Inconclusive, _) | (_, Verdict::Inconclusive) => exit::INCONCLUSIVE,
        _ => exit::INTERNAL,
    };
    let result = ClassResult {
        module: e.name.clone(),
        rank: e.rank,
        alpha: class_entry(ring, &alpha, &e),
        tilde: class_entry(ring, &tilde, &e),
        comparison,
        lift: lift_entry(ring, lift.as_ref()),
    };
    Ok((CommandResult::Class(result), code))
}

fn quotient_dims(pair: &AdaptedPair, q: &NeighbourhoodQuotient) -> QuotientDims {
    QuotientDims {
        ranks: q.ranks.clone(),
        tensor_ranks: tensor_ranks(pair, q.truncation),
        defects: rank_defects(q, pair)
            .into_iter()
            .map(|(degree, (quotient, tensor))| Defect {
                degree,
                quotient,
                tensor,
            })
            .collect(),
        completion: q.completion.clone(),
    }
}

fn budget_info(e: &Error, stage: &str) -> Option<BudgetInfo> {
    match e {
        Error::Budget { budget, examined } => Some(BudgetInfo {
            budget: *budget,
            examined: *examined,
            stage: stage.into(),
        }),
        _ => None,
    }
}

/// Runs `f`; a budget failure is recorded in `slot` and turns into `None`,
/// any other failure propagates.
fn budgeted<T>(
    slot: &mut Option<BudgetInfo>,
    stage: &str,
    f: impl FnOnce() -> apbw_core::Result<T>,
) -> Result<Option<T>, CliError> {
    if slot.is_some() {
        return Ok(None);
    }
    match f() {
        Ok(x) => Ok(Some(x)),
        Err(e) => match budget_info(&e, stage) {
            Some(info) => {
                *slot = Some(info);
                Ok(None)
            }
            None => Err(e.into()),
        },
    }
}

fn cmd_pbw(problem: &Problem, options: &ResolvedOptions) -> Result<(CommandResult, i32), CliError> {
    let pair = &problem.pair;
    let ring = problem.ring.as_ref();
    let n = options.truncation;
    let e = module_named(problem, options)?;
    let q = quotient_module(pair);

    let alpha_q = alpha_vanishing(pair, &q, options.bound)?;
    let lift_q = lift_for(pair, &q, &alpha_q)?;
    let alpha_e = alpha_vanishing(pair, &e, options.bound)?;
    let lift_e = lift_for(pair, &e, &alpha_e)?;

    let mut notes = Vec::new();
    let mut budget = None;
    let a1 = budgeted(&mut budget, "neighbourhood quotient", || {
        a1_quotient(pair, n, options.budget)
    })?;
    let phi = match &lift_q {
        Some(l) => budgeted(&mut budget, "phi", || phi_map(pair, l, n, options.budget))?,
        None => {
            notes.push("phi not built: the class of L/A does not vanish".into());
            None
        }
    };
    let composite = match (&lift_q, &lift_e) {
        _ if e.rank == 0 => None,
        (Some(lq), Some(le)) => budgeted(&mut budget, "composite", || {
            pbw_composite(pair, &e, lq, le, n, options.budget)
        })?,
        _ => {
            notes.push("composite not built: a class does not vanish".into());
            None
        }
    };
    let iso = if e.rank == 0 {
        notes.push("filtered iso search skipped for a rank-zero module".into());
        None
    } else if budget.is_some() {
        None
    } else {
        let bound = options
            .bound
            .unwrap_or_else(|| default_bound(pair.ambient(), &[&e], &[]));
        Some(match filtered_iso_search(pair, &e, n, Some(bound))? {
            IsoSearch::Exists(map) => IsoEntry {
                outcome: IsoOutcome::Exists,
                bound,
                map: Some(*map),
                certificate: None,
            },
            IsoSearch::NotExists(cert) => IsoEntry {
                outcome: IsoOutcome::NotExists,
                bound,
                map: None,
                certificate: Some(cert),
            },
            IsoSearch::Inconclusive { bound } => IsoEntry {
                outcome: IsoOutcome::Inconclusive,
                bound,
                map: None,
                certificate: None,
            },
        })
    };

    let table = iso.as_ref().map(|iso| {
        let classes_vanish = match (alpha_q.verdict, alpha_e.verdict) {
            (Verdict::Vanishes, Verdict::Vanishes) => Some(true),
            (Verdict::NonVanishing, _) | (_, Verdict::NonVanishing) => Some(false),
            _ => None,
        };
        let lifts = lift_q.is_some() && lift_e.is_some();
        let iso_exists = match iso.outcome {
            IsoOutcome::Exists => Some(true),
            IsoOutcome::NotExists => Some(false),
            IsoOutcome::Inconclusive => None,
        };
        // Below degree two the search cannot see the class of L/A.
        let iso_expected = if n >= 2 {
            lifts
        } else {
            n == 0 || lift_e.is_some()
        };
        let consistent = classes_vanish.map_or(true, |c| c == lifts)
            && iso_exists.map_or(true, |i| i == iso_expected);
        if n < 2 {
            notes.push("truncation below 2 only detects the class of the module".into());
        }
        EquivalenceTable {
            classes_vanish,
            lifts_constructed: lifts,
            iso_exists,
            consistent,
        }
    });

    let maps_ok = phi.iter().chain(composite.iter()).all(|m| m.all_green());
    let code = if budget.is_some() {
        exit::BUDGET
    } else if !maps_ok || table.as_ref().is_some_and(|t| !t.consistent) {
        exit::INTERNAL
    } else {
        match iso.as_ref().map(|i| i.outcome) {
            Some(IsoOutcome::Exists) => exit::OK,
            Some(IsoOutcome::NotExists) => exit::NEGATIVE,
            Some(IsoOutcome::Inconclusive) => exit::INCONCLUSIVE,
            None if lift_q.is_some() && lift_e.is_some() => exit::OK,
            None => exit::NEGATIVE,
        }
    };
    let result = PbwResult {
        module: e.name.clone(),
        truncation: n,
        quotient: ModuleClass {
            module: "L/A".into(),
            alpha: class_entry(ring, &alpha_q, &q),
            lift: lift_entry(ring, lift_q.as_ref()),
        },
        coefficients: ModuleClass {
            module: e.name.clone(),
            alpha: class_entry(ring, &alpha_e, &e),
            lift: lift_entry(ring, lift_e.as_ref()),
        },
        a1: a1.as_ref().map(|a| quotient_dims(pair, a)),
        phi,
        composite,
        iso,
        table,
        notes,
        budget_exhausted: budget,
    };
    Ok((CommandResult::Pbw(result), code))
}

fn dims_modules(problem: &Problem, options: &ResolvedOptions) -> Result<Vec<FlatModule>, CliError> {
    match &options.module {
        Some(name) => Ok(vec![problem.module(name)?]),
        None => {
            let mut out = vec![problem.module("1_A")?];
            if problem.pair.quotient_rank() > 0 {
                out.push(problem.module("L/A")?);
            }
            out.extend(problem.modules.iter().cloned());
            Ok(out)
        }
    }
}

fn by_length(words: &[Vec<usize>], n: usize, m: usize) -> Vec<usize> {
    let mut out = vec![0; n + 1];
    for w in words {
        out[w.len()] += m;
    }
    out
}

fn cmd_dims(
    problem: &Problem,
    options: &ResolvedOptions,
) -> Result<(CommandResult, i32), CliError> {
    let pair = &problem.pair;
    let alg = pair.ambient();
    let n = options.truncation;
    let gr_ranks = if problem.ring.is_finite_dim() {
        let env = Envelope::new(pair.ambient_arc());
        Some(
            (0..=n)
                .map(|k| env.gr_rank(k))
                .collect::<apbw_core::Result<Vec<_>>>()?,
        )
    } else {
        None
    };
    let free = free_envelope_ranks(alg, n)?;
    let mut budget = None;
    let a1 = budgeted(&mut budget, "neighbourhood quotient", || {
        a1_quotient(pair, n, options.budget)
    })?;
    let env = Envelope::for_pair(pair);
    let mut modules = Vec::new();
    for e in dims_modules(problem, options)? {
        let induced = induced_module(pair, &env, &e, n)?;
        let Some(nb) = budgeted(&mut budget, &format!("neighbourhood of {}", e.name), || {
            neighbourhood_induced(pair, &e, n, options.budget)
        })?
        else {
            break;
        };
        modules.push(ModuleDims {
            module: e.name.clone(),
            rank: e.rank,
            induced_ranks: by_length(&induced.words, n, e.rank),
            neighbourhood_ranks: nb.ranks.clone(),
            tensor_ranks: tensor_ranks(pair, n).iter().map(|t| t * e.rank).collect(),
        });
    }
    let code = if budget.is_some() {
        exit::BUDGET
    } else {
        exit::OK
    };
    let result = DimsResult {
        truncation: n,
        gr_ranks,
        free_envelope_ranks: free,
        a1: a1.as_ref().map(|a| quotient_dims(pair, a)),
        modules,
        budget_exhausted: budget,
    };
    Ok((CommandResult::Dims(result), code))
}

fn cmd_oracle(
    problem: &Problem,
    options: &ResolvedOptions,
) -> Result<(CommandResult, i32), CliError> {
    let report = run_oracle(
        &problem.pair,
        &problem.modules,
        options.truncation,
        options.budget,
    )?;
    let code = if report.diff.is_empty() {
        exit::OK
    } else {
        exit::NEGATIVE
    };
    Ok((CommandResult::Oracle(report), code))
}

/// The document with its `expected` block replaced by an oracle run.
pub fn with_expected(text: &str, opts: &RunOptions) -> Result<(ProblemDocument, i32), CliError> {
    let mut doc = parse_document(text)?;
    let problem = doc.build()?;
    let options = opts.resolve(Some(Command::Oracle), Some(&doc));
    let report = run_oracle(
        &problem.pair,
        &problem.modules,
        options.truncation,
        options.budget,
    )?;
    let code = if report.diff.is_empty() {
        exit::OK
    } else {
        exit::NEGATIVE
    };
    doc.expected = Some(crate::document::Expected {
        truncation: report.truncation,
        gr_ranks: report.gr_ranks,
        a1_ranks: report.a1_ranks,
        modules: report.modules,
        degree_one_splits: report.degree_one_splits,
        degree_two_splits: report.degree_two_splits,
    });
    Ok((doc, code))
}
