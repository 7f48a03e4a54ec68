//! Re-verifies a stored report against its document without running any
//! solver: certificates are evaluated against rebuilt systems, splittings
//! and lifts are checked as identities, and maps are re-graded from their
//! entries.

use std::time::Instant;

use apbw_core::modcat::{ConnectionLift, FlatModule};
use apbw_core::obstruction::{
    promote_to_neighbourhood, recheck_alpha, recheck_splitting, recheck_tilde, ClassKind, Verdict,
};
use apbw_core::pbwiso::{recheck_iso, recheck_map, FilteredMapReport, MapKind};

use crate::commands::{envelope_report, error_result};
use crate::document::{parse_document, Problem};
use crate::report::*;
use crate::{exit, CliError};

struct Items(Vec<RecheckItem>);

impl Items {
    fn push(
        &mut self,
        item: impl Into<String>,
        outcome: Result<bool, CliError>,
        detail: impl Into<String>,
    ) {
        let (ok, detail) = match outcome {
            Ok(ok) => (ok, detail.into()),
            Err(e) => (false, e.to_string()),
        };
        self.0.push(RecheckItem {
            item: item.into(),
            ok,
            detail,
        });
    }
}

pub fn recheck(doc_text: &str, report_text: &str) -> RunReport {
    let started = Instant::now();
    let fail = |e: CliError, doc| {
        envelope_report(
            "recheck",
            doc,
            None,
            ResolvedOptions::default(),
            error_result(&e),
            e.exit_code(),
            started,
        )
    };
    let doc = match parse_document(doc_text) {
        Ok(d) => d,
        Err(e) => return fail(e, None),
    };
    let stored: RunReport = match serde_json::from_str(report_text) {
        Ok(r) => r,
        Err(e) => return fail(CliError::Parse(format!("report: {e}")), Some(&doc)),
    };
    let prepared = doc.build().and_then(|p| Ok((doc.digest()?, p)));
    let (digest, problem) = match prepared {
        Ok(x) => x,
        Err(e) => return fail(e, Some(&doc)),
    };
    let digest_matches = stored.input_digest.as_deref() == Some(digest.as_str());
    let mut items = Items(Vec::new());
    if stored.schema != SCHEMA {
        items.push(
            "schema",
            Ok(false),
            format!("unknown schema {}", stored.schema),
        );
    }
    check_result(&problem, &stored, &mut items);
    let ok = digest_matches && items.0.iter().all(|i| i.ok);
    let result = RecheckResult {
        report_command: stored.command.clone(),
        digest_matches,
        items: items.0,
    };
    envelope_report(
        "recheck",
        Some(&doc),
        Some(digest),
        stored.options.clone(),
        CommandResult::Recheck(result),
        if ok { exit::OK } else { exit::NEGATIVE },
        started,
    )
}

fn check_result(problem: &Problem, stored: &RunReport, items: &mut Items) {
    let opts = &stored.options;
    match &stored.result {
        CommandResult::Validate(v) => {
            let fresh = problem.validate();
            items.push(
                "validation",
                Ok(fresh.is_valid() == v.valid && fresh.violations == v.violations),
                format!("{} violations", fresh.violations.len()),
            );
        }
        CommandResult::Class(c) => match problem.module(&c.module) {
            Ok(e) => {
                check_class(problem, &e, &c.alpha, "extension class", items);
                check_class(problem, &e, &c.tilde, "jet class", items);
                check_lift(problem, &e, &c.alpha, &c.lift, items);
            }
            Err(err) => items.push("module", Err(err), ""),
        },
        CommandResult::Pbw(p) => {
            let q = match problem.module("L/A") {
                Ok(q) => q,
                Err(err) => return items.push("module", Err(err), ""),
            };
            let e = match problem.module(&p.module) {
                Ok(e) => e,
                Err(err) => return items.push("module", Err(err), ""),
            };
            check_class(problem, &q, &p.quotient.alpha, "class of L/A", items);
            check_lift(problem, &q, &p.quotient.alpha, &p.quotient.lift, items);
            check_class(
                problem,
                &e,
                &p.coefficients.alpha,
                "class of the module",
                items,
            );
            check_lift(
                problem,
                &e,
                &p.coefficients.alpha,
                &p.coefficients.lift,
                items,
            );
            let n = p.truncation;
            if let Some(phi) = &p.phi {
                check_map(problem, &q, MapKind::Phi, n, opts.budget, phi, items);
            }
            if let Some(c) = &p.composite {
                check_map(problem, &e, MapKind::Composite, n, opts.budget, c, items);
            }
            if let Some(iso) = &p.iso {
                match (iso.outcome, &iso.map, &iso.certificate) {
                    (IsoOutcome::Exists, Some(map), _) => check_map(
                        problem,
                        &e,
                        MapKind::FilteredIso,
                        n,
                        opts.budget,
                        map,
                        items,
                    ),
                    (IsoOutcome::NotExists, _, Some(cert)) => items.push(
                        "filtered iso certificate",
                        recheck_iso(&problem.pair, &e, n, iso.bound, cert).map_err(Into::into),
                        format!("{} entries at bound {}", cert.len(), iso.bound),
                    ),
                    (IsoOutcome::Inconclusive, _, _) => items.push(
                        "filtered iso",
                        Ok(true),
                        "inconclusive searches carry no witness",
                    ),
                    _ => items.push("filtered iso", Ok(false), "verdict without its witness"),
                }
            }
        }
        CommandResult::Dims(_) | CommandResult::Oracle(_) => {
            items.push("certificates", Ok(true), "report carries no certificates")
        }
        CommandResult::Recheck(_) | CommandResult::Error(_) => {
            items.push("certificates", Ok(true), "nothing to recheck")
        }
    }
}

fn check_class(
    problem: &Problem,
    e: &FlatModule,
    entry: &ClassEntry,
    label: &str,
    items: &mut Items,
) {
    let pair = &problem.pair;
    match (entry.verdict, &entry.splitting, &entry.certificate) {
        (Verdict::Vanishes, Some(s), _) => {
            let outcome = s
                .to_matrix(&problem.ring)
                .map_err(CliError::from)
                .and_then(|m| Ok(recheck_splitting(pair, e, entry.kind, &m)?));
            items.push(
                format!("{label} splitting"),
                outcome,
                format!("{} x {}", s.rows, s.cols),
            );
        }
        (Verdict::NonVanishing, _, Some(cert)) => {
            let outcome = match entry.kind {
                ClassKind::Extension => recheck_alpha(pair, e, entry.bound, cert),
                ClassKind::Jet => recheck_tilde(pair, e, entry.bound, cert),
            };
            items.push(
                format!("{label} certificate"),
                outcome.map_err(Into::into),
                format!("{} entries at bound {}", cert.len(), entry.bound),
            );
        }
        (Verdict::Inconclusive, _, _) => {
            items.push(label, Ok(true), "inconclusive verdicts carry no witness")
        }
        _ => items.push(label, Ok(false), "verdict without its witness"),
    }
}

fn check_lift(
    problem: &Problem,
    e: &FlatModule,
    alpha: &ClassEntry,
    lift: &LiftEntry,
    items: &mut Items,
) {
    let label = format!("lift of {}", e.name);
    let expect = alpha.verdict == Verdict::Vanishes;
    match (&lift.ops, lift.certified) {
        (Some(ops), true) => {
            let outcome = ops
                .iter()
                .map(|m| m.to_matrix(&problem.ring))
                .collect::<apbw_core::Result<Vec<_>>>()
                .and_then(|ops| promote_to_neighbourhood(&problem.pair, e, &ConnectionLift { ops }))
                .map(|_| expect)
                .map_err(Into::into);
            items.push(label, outcome, "neighbourhood identities");
        }
        (None, false) => items.push(label, Ok(!expect), "no lift stored"),
        _ => items.push(
            label,
            Ok(false),
            "certified flag disagrees with stored operators",
        ),
    }
}

fn check_map(
    problem: &Problem,
    e: &FlatModule,
    kind: MapKind,
    n: usize,
    budget: Option<usize>,
    stored: &FilteredMapReport,
    items: &mut Items,
) {
    let label = format!("map {}", stored.name);
    let outcome = recheck_map(&problem.pair, e, kind, n, budget, &stored.entries).map(|fresh| {
        // Stored maps are only ever the verified ones.
        fresh.a_linear
            && fresh.filtered
            && fresh.bijective_per_degree
            && fresh.gr_identity
            && fresh.source.len() == stored.source.len()
            && fresh.target.len() == stored.target.len()
    });
    items.push(
        label,
        outcome.map_err(Into::into),
        format!("{} entries", stored.entries.len()),
    );
}
