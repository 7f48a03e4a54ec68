mod common;

use std::process::Command as Process;

use algebroid_pbw::commands::with_expected;
use algebroid_pbw::recheck::recheck;
use algebroid_pbw::report::{CommandResult, IsoOutcome, RunReport};
use algebroid_pbw::{exit, parse_document, run, Command, RunOptions};
use apbw_core::obstruction::Verdict;
use common::read;
use proptest::prelude::*;

fn opts(module: Option<&str>, n: Option<usize>) -> RunOptions {
    RunOptions {
        module: module.map(String::from),
        truncation: n,
        ..Default::default()
    }
}

fn registry_run(cmd: Command, name: &str, o: RunOptions) -> RunReport {
    run(cmd, &read("registry", name), &o)
}

fn without_timing(r: &RunReport) -> String {
    let mut r = r.clone();
    r.timing_ms = 0;
    r.to_json()
}

#[test]
fn validate_exit_codes() {
    assert_eq!(
        registry_run(Command::Validate, "abelian", opts(None, None)).exit_code,
        exit::OK
    );
    let bad = run(
        Command::Validate,
        &read("invalid", "sl2_bad_jacobi"),
        &opts(None, None),
    );
    assert_eq!(bad.exit_code, exit::NEGATIVE);
    let CommandResult::Validate(v) = &bad.result else {
        panic!()
    };
    assert!(v
        .violations
        .iter()
        .any(|x| x.axiom == "jacobi" && x.witness == vec![0, 1, 2]));
    let closed = run(
        Command::Validate,
        &read("invalid", "sl2_ef"),
        &opts(None, None),
    );
    assert_eq!(closed.exit_code, exit::NEGATIVE);
    let malformed = run(
        Command::Validate,
        &read("invalid", "malformed"),
        &opts(None, None),
    );
    assert_eq!(malformed.exit_code, exit::INPUT);
    let CommandResult::Error(e) = &malformed.result else {
        panic!()
    };
    assert!(e.message.contains("line 2"), "{}", e.message);
}

#[test]
fn invalid_documents_are_refused_by_other_commands() {
    let r = run(
        Command::Class,
        &read("invalid", "heis_nonflat"),
        &opts(None, None),
    );
    assert_eq!(r.exit_code, exit::INPUT);
}

#[test]
fn class_verdicts_and_witnesses() {
    let r = registry_run(Command::Class, "abelian", opts(Some("1_A"), None));
    assert_eq!(r.exit_code, exit::OK);
    let CommandResult::Class(c) = &r.result else {
        panic!()
    };
    assert_eq!(c.alpha.verdict, Verdict::Vanishes);
    assert!(c.alpha.splitting.is_some() && c.lift.certified);

    let r = registry_run(Command::Class, "sl2_he", opts(None, None));
    assert_eq!(r.exit_code, exit::NEGATIVE);
    let CommandResult::Class(c) = &r.result else {
        panic!()
    };
    assert_eq!(c.module, "L/A");
    assert!(c.alpha.certificate.as_ref().is_some_and(|x| !x.is_empty()));
    assert!(c.tilde.certificate.is_some() && !c.lift.certified);
    assert!(c.comparison.verdicts_agree);

    let under = RunOptions {
        module: Some("y".into()),
        bound: Some(0),
        ..Default::default()
    };
    assert_eq!(
        registry_run(Command::Class, "plane", under).exit_code,
        exit::INCONCLUSIVE
    );
    assert_eq!(
        registry_run(Command::Class, "plane", opts(Some("nope"), None)).exit_code,
        exit::INPUT
    );
}

#[test]
fn pbw_commands() {
    let r = registry_run(Command::Pbw, "abelian", opts(None, Some(4)));
    assert_eq!(r.exit_code, exit::OK);
    let CommandResult::Pbw(p) = &r.result else {
        panic!()
    };
    let table = p.table.as_ref().unwrap();
    assert_eq!(table.classes_vanish, Some(true));
    assert!(table.lifts_constructed && table.consistent);
    assert!(p.phi.as_ref().unwrap().all_green() && p.composite.as_ref().unwrap().all_green());

    let r = registry_run(Command::Pbw, "sl2_he", opts(None, Some(2)));
    assert_eq!(r.exit_code, exit::NEGATIVE);
    let CommandResult::Pbw(p) = &r.result else {
        panic!()
    };
    assert_eq!(p.iso.as_ref().unwrap().outcome, IsoOutcome::NotExists);
    assert!(p.table.as_ref().unwrap().consistent);

    // The class of L/A is invisible below degree two.
    let r = registry_run(Command::Pbw, "sl2_he", opts(None, Some(1)));
    assert_eq!(r.exit_code, exit::OK);

    assert_eq!(
        registry_run(Command::Pbw, "sl2_full", opts(None, None)).exit_code,
        exit::OK
    );
    let r = registry_run(Command::Pbw, "sl2_f", opts(Some("scalar2"), Some(2)));
    assert_eq!(r.exit_code, exit::NEGATIVE);
}

#[test]
fn budget_exhaustion_keeps_partial_results() {
    let o = RunOptions {
        budget: Some(0),
        ..Default::default()
    };
    let r = registry_run(Command::Pbw, "heis_xz", o);
    assert_eq!(r.exit_code, exit::BUDGET);
    let CommandResult::Pbw(p) = &r.result else {
        panic!()
    };
    assert_eq!(p.quotient.alpha.verdict, Verdict::Vanishes);
    assert!(p.budget_exhausted.is_some() && p.a1.is_none());
}

#[test]
fn dims_tables() {
    let r = registry_run(Command::Dims, "sl2_h", opts(None, Some(3)));
    assert_eq!(r.exit_code, exit::OK);
    let CommandResult::Dims(d) = &r.result else {
        panic!()
    };
    assert_eq!(d.gr_ranks.as_deref(), Some(&[1, 3, 6, 10][..]));
    assert_eq!(d.free_envelope_ranks, vec![1, 3, 9, 27]);
    let quotient = d.modules.iter().find(|m| m.module == "L/A").unwrap();
    assert_eq!(quotient.induced_ranks, vec![2, 4, 6, 8]);
    let r = registry_run(Command::Dims, "plane", opts(None, Some(2)));
    let CommandResult::Dims(d) = &r.result else {
        panic!()
    };
    assert!(d.gr_ranks.is_none());
}

#[test]
fn oracle_command() {
    let r = registry_run(Command::Oracle, "sl2_hf", opts(None, Some(3)));
    assert_eq!(r.exit_code, exit::OK);
    let r = registry_run(Command::Oracle, "plane", opts(None, None));
    assert_eq!(r.exit_code, exit::INPUT);
    let CommandResult::Error(e) = &r.result else {
        panic!()
    };
    assert_eq!(e.category, "unsupported");
}

#[test]
fn committed_expectations_regenerate() {
    for name in ["heis_x", "dual_D", "sl2_f"] {
        let text = read("registry", name);
        let committed = parse_document(&text).unwrap();
        let n = committed.expected.as_ref().unwrap().truncation;
        let (fresh, code) = with_expected(&text, &opts(None, Some(n))).unwrap();
        assert_eq!(code, exit::OK);
        assert_eq!(fresh.expected, committed.expected, "{name}");
    }
}

#[test]
fn reports_are_deterministic() {
    for (cmd, name) in [
        (Command::Class, "heis_z"),
        (Command::Pbw, "dual_X"),
        (Command::Dims, "sl2_e"),
    ] {
        let a = registry_run(cmd, name, opts(None, Some(2)));
        let b = registry_run(cmd, name, opts(None, Some(2)));
        assert_eq!(without_timing(&a), without_timing(&b));
    }
}

#[test]
fn recheck_accepts_honest_reports() {
    for (cmd, name, module, n) in [
        (Command::Class, "sl2_he", None, None),
        (Command::Class, "dual_D", Some("shift"), None),
        (Command::Pbw, "abelian", Some("jordan"), Some(3)),
        (Command::Pbw, "sl2_hf", None, Some(2)),
        (Command::Pbw, "plane", Some("y"), Some(2)),
        (Command::Validate, "heis_y", None, None),
    ] {
        let doc = read("registry", name);
        let report = run(cmd, &doc, &opts(module, n));
        let checked = recheck(&doc, &report.to_json());
        let CommandResult::Recheck(r) = &checked.result else {
            panic!()
        };
        assert_eq!(checked.exit_code, exit::OK, "{name}: {:?}", r.items);
        assert!(r.digest_matches && !r.items.is_empty());
    }
}

#[test]
fn recheck_rejects_tampering() {
    let doc = read("registry", "sl2_he");
    let report = run(Command::Class, &doc, &opts(None, None));
    let mut json: serde_json::Value = serde_json::from_str(&report.to_json()).unwrap();
    // Certificates are projective, so only a zero functional is wrong here.
    json["result"]["alpha"]["certificate"][0]["value"] = serde_json::Value::String("0".into());
    assert_eq!(recheck(&doc, &json.to_string()).exit_code, exit::NEGATIVE);

    let doc = read("registry", "abelian");
    let report = run(Command::Pbw, &doc, &opts(Some("chi"), Some(2)));
    let mut json: serde_json::Value = serde_json::from_str(&report.to_json()).unwrap();
    json["result"]["composite"]["entries"][0]["value"] = serde_json::Value::String("7".into());
    assert_eq!(recheck(&doc, &json.to_string()).exit_code, exit::NEGATIVE);

    // A report checked against a different document fails on the digest.
    let other = read("registry", "heis_x");
    let checked = recheck(&other, &report.to_json());
    let CommandResult::Recheck(r) = &checked.result else {
        panic!()
    };
    assert!(!r.digest_matches);
    assert_eq!(checked.exit_code, exit::NEGATIVE);
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_algebroid-pbw");
    let fixture = |kind: &str, name: &str| common::fixture_dir(kind).join(format!("{name}.json"));
    let status = |args: &[&str], path: std::path::PathBuf| {
        Process::new(bin)
            .args(args)
            .arg(path)
            .status()
            .unwrap()
            .code()
    };
    assert_eq!(
        status(&["validate"], fixture("registry", "abelian")),
        Some(0)
    );
    assert_eq!(
        status(&["validate"], fixture("invalid", "malformed")),
        Some(3)
    );
    assert_eq!(
        status(
            &["class", "--format", "text"],
            fixture("registry", "sl2_hf")
        ),
        Some(1)
    );
    assert_eq!(
        status(&["pbw", "-N", "2"], fixture("registry", "sl2_zero")),
        Some(0)
    );
    let out = Process::new(bin)
        .args(["dims", "-N", "2"])
        .arg(fixture("registry", "heis_z"))
        .output()
        .unwrap();
    let report: RunReport = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report.schema, "apbw-report/1");
}

#[test]
fn canonical_form_is_a_fixed_point() {
    for name in ["plane", "dual_X", "sl2_he"] {
        let doc = parse_document(&read("registry", name)).unwrap();
        let canonical = doc.canonical_json().unwrap();
        let reparsed = parse_document(&canonical).unwrap();
        assert_eq!(reparsed.canonical_json().unwrap(), canonical);
        assert_eq!(serde_json::to_string(&reparsed).unwrap(), canonical);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// Entry order, coefficient spelling and split entries do not change
    /// the digest.
    #[test]
    fn digest_ignores_presentation(seed in any::<u64>(), scale in 1i64..5) {
        let mut doc = parse_document(&read("registry", "sl2_he")).unwrap();
        let digest = doc.digest().unwrap();
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
        use rand::seq::SliceRandom;
        doc.algebroid.structure.shuffle(&mut rng);
        for e in &mut doc.algebroid.structure {
            e.coeff = format!("{}/{}", e.coeff.parse::<i64>().unwrap() * scale, scale);
        }
        // Split one entry into two halves.
        let first = doc.algebroid.structure[0].clone();
        let c: i64 = first.coeff.split('/').next().unwrap().parse().unwrap();
        doc.algebroid.structure[0].coeff = format!("{c}/{}", 2 * scale);
        doc.algebroid.structure.push(algebroid_pbw::document::Entry {
            coeff: format!("{c}/{}", 2 * scale),
            ..first
        });
        for m in &mut doc.modules {
            m.action.shuffle(&mut rng);
        }
        prop_assert_eq!(doc.digest().unwrap(), digest);
    }
}
