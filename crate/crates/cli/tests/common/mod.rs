#![allow(dead_code)]

use std::path::PathBuf;

use algebroid_pbw::document::{parse_document, Problem, ProblemDocument};
use apbw_core::modcat::FlatModule;

pub fn fixture_dir(kind: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(kind)
}

pub fn read(kind: &str, name: &str) -> String {
    let path = fixture_dir(kind).join(format!("{name}.json"));
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

pub fn load(name: &str) -> (ProblemDocument, Problem) {
    let doc = parse_document(&read("registry", name)).expect("registry fixtures parse");
    let problem = doc.build().expect("registry fixtures build");
    (doc, problem)
}

/// Every registry fixture, sorted by name.
pub fn registry() -> Vec<(ProblemDocument, Problem)> {
    let mut names: Vec<String> = std::fs::read_dir(fixture_dir("registry"))
        .expect("registry directory")
        .filter_map(|e| {
            let p = e.ok()?.path();
            if p.extension()? != "json" {
                return None;
            }
            Some(p.file_stem()?.to_string_lossy().into_owned())
        })
        .collect();
    names.sort();
    names.iter().map(|n| load(n)).collect()
}

/// `1_A`, then `L/A` when nonzero, then the document's modules.
pub fn modules(problem: &Problem) -> Vec<FlatModule> {
    let mut out = vec![problem.module("1_A").unwrap()];
    if problem.pair.quotient_rank() > 0 {
        out.push(problem.module("L/A").unwrap());
    }
    out.extend(problem.modules.iter().cloned());
    out
}

/// Name the oracle uses for a module.
pub fn oracle_name(m: &FlatModule) -> &str {
    if m.name == "1_A" {
        "1"
    } else {
        &m.name
    }
}
