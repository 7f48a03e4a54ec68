use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub axiom: String,
    pub witness: Vec<usize>,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn push(&mut self, axiom: &str, witness: Vec<usize>, detail: String) {
        self.violations.push(Violation {
            axiom: axiom.into(),
            witness,
            detail,
        });
    }

    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn merge(&mut self, prefix: &str, other: ValidationReport) {
        for mut v in other.violations {
            if !prefix.is_empty() {
                v.axiom = format!("{prefix}:{}", v.axiom);
            }
            self.violations.push(v);
        }
    }

    pub fn axioms(&self) -> Vec<&str> {
        self.violations.iter().map(|v| v.axiom.as_str()).collect()
    }
}
