//! Reasoning problems: premises, hypothesis and gold label, with ingestion of
//! external datasets and a synthetic implication-chain generator.

mod generator;
mod io;
mod split;

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::fol::{signature, Formula};
use crate::label::Label;

pub use generator::{generate_logicasker, generate_logicasker_with, render_nl, GeneratorConfig};
pub use io::{load_problems, parse_problems, save_problems, write_problems, ProblemFormat};
pub use split::split_even;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Folio,
    Logicasker,
    Custom,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Dev,
    Test,
}

/// One premise or the hypothesis, in natural language, logic, or both.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Statement {
    #[serde(default)]
    pub nl: Option<String>,
    #[serde(default)]
    pub fol: Option<Formula>,
}

impl Statement {
    pub fn both(nl: impl Into<String>, fol: Formula) -> Self {
        Statement {
            nl: Some(nl.into()),
            fol: Some(fol),
        }
    }

    pub fn nl(nl: impl Into<String>) -> Self {
        Statement {
            nl: Some(nl.into()),
            fol: None,
        }
    }

    pub fn fol(fol: Formula) -> Self {
        Statement {
            nl: None,
            fol: Some(fol),
        }
    }

    fn is_empty(&self) -> bool {
        self.nl.as_deref().map_or(true, |s| s.trim().is_empty()) && self.fol.is_none()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Problem {
    pub id: String,
    pub source: Source,
    pub premises: Vec<Statement>,
    pub hypothesis: Statement,
    pub label: Label,
    #[serde(default)]
    pub meta: BTreeMap<String, Value>,
    #[serde(default)]
    pub split: Option<Split>,
}

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("record {index}: {message}")]
    Format { index: usize, message: String },
    #[error("record {index} ({id}): invariant violated on `{field}`: {reason}")]
    InvariantViolation {
        index: usize,
        id: String,
        field: String,
        reason: String,
    },
    #[error("generator gave up on reasoning length {length} after {attempts} rejected candidates")]
    GenerationBudgetExceeded { length: usize, attempts: usize },
    #[error("invalid generator request: {0}")]
    InvalidRequest(String),
}

impl Problem {
    /// Premise formulas, if every premise has one.
    pub fn premise_formulas(&self) -> Option<Vec<Formula>> {
        self.premises.iter().map(|s| s.fol.clone()).collect()
    }

    pub fn reasoning_length(&self) -> Option<u64> {
        self.meta.get("reasoning_length").and_then(Value::as_u64)
    }

    /// Checks the structural invariants; `index` is reported in errors.
    pub fn validate(&self, index: usize) -> Result<(), ProblemError> {
        let violation = |field: String, reason: &str| ProblemError::InvariantViolation {
            index,
            id: self.id.clone(),
            field,
            reason: reason.to_string(),
        };
        if self.id.trim().is_empty() {
            return Err(violation("id".into(), "empty id"));
        }
        for (i, premise) in self.premises.iter().enumerate() {
            if premise.is_empty() {
                return Err(violation(
                    format!("premises[{i}]"),
                    "neither nl nor fol present",
                ));
            }
        }
        if self.hypothesis.is_empty() {
            return Err(violation("hypothesis".into(), "neither nl nor fol present"));
        }
        let formulas = self
            .premises
            .iter()
            .chain([&self.hypothesis])
            .filter_map(|s| s.fol.as_ref());
        if let Err(e) = signature(formulas.clone()) {
            return Err(violation("fol".into(), &e.to_string()));
        }
        for f in formulas {
            if !f.is_closed() {
                return Err(violation("fol".into(), &format!("`{f}` is not closed")));
            }
        }
        if self.source == Source::Logicasker {
            if self.label == Label::Uncertain {
                return Err(violation("label".into(), "logicasker problems are two-way"));
            }
            if self.premise_formulas().is_none() || self.hypothesis.fol.is_none() {
                return Err(violation(
                    "fol".into(),
                    "logicasker problems carry formulas",
                ));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fol::parse_formula;

    fn sample() -> Problem {
        Problem {
            id: "p1".into(),
            source: Source::Logicasker,
            premises: vec![
                Statement::both("All P are Q.", parse_formula("∀x (P(x) → Q(x))").unwrap()),
                Statement::both("a is P.", parse_formula("P(a)").unwrap()),
            ],
            hypothesis: Statement::both("a is Q.", parse_formula("Q(a)").unwrap()),
            label: Label::True,
            meta: BTreeMap::new(),
            split: None,
        }
    }

    #[test]
    fn valid_problem_passes() {
        sample().validate(0).unwrap();
    }

    #[test]
    fn empty_premise_is_rejected() {
        let mut p = sample();
        p.premises.push(Statement::default());
        let err = p.validate(3).unwrap_err();
        assert!(
            matches!(err, ProblemError::InvariantViolation { index: 3, ref field, .. } if field == "premises[2]")
        );
    }

    #[test]
    fn logicasker_must_be_two_way() {
        let mut p = sample();
        p.label = Label::Uncertain;
        assert!(p.validate(0).is_err());
        p.label = Label::True;
        p.hypothesis.fol = None;
        assert!(p.validate(0).is_err());
    }

    #[test]
    fn arity_conflicts_are_violations() {
        let mut p = sample();
        p.premises
            .push(Statement::fol(parse_formula("P(a, b)").unwrap()));
        assert!(p.validate(0).is_err());
    }
}
