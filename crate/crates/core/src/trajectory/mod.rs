//! Symbolic ReAct trajectories: the step model, prompt construction and
//! parsing of raw model output.

mod parse;
mod prompt;

use std::collections::BTreeMap;
use std::fmt;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::fol::Formula;
use crate::label::Label;
use crate::rules::Rule;

pub use parse::{harvest_formulas, parse_trajectory};
pub use prompt::{
    build_completion_prompt, build_sampling_prompt, build_sampling_prompt_with, demonstrations,
    PromptBundle, PromptOptions, PromptView, CONTINUATION_SENTENCE, TASK_HEADER,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StepKind {
    Thought,
    Action,
    Observation,
}

impl StepKind {
    pub fn as_str(self) -> &'static str {
        match self {
            StepKind::Thought => "Thought",
            StepKind::Action => "Action",
            StepKind::Observation => "Observation",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Step {
    pub kind: StepKind,
    pub text: String,
    #[serde(default)]
    pub formulas: Vec<Formula>,
    #[serde(default)]
    pub rule_hint: Option<Rule>,
    /// Observation lines that looked like content but held no parseable formula.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub unparsed: Vec<String>,
}

impl Step {
    pub fn new(kind: StepKind, text: impl Into<String>) -> Self {
        Step {
            kind,
            text: text.into(),
            formulas: Vec::new(),
            rule_hint: None,
            unparsed: Vec::new(),
        }
    }
}

impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.text.is_empty() {
            write!(f, "{}:", self.kind.as_str())
        } else {
            write!(f, "{}: {}", self.kind.as_str(), self.text)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub problem_id: String,
    pub steps: Vec<Step>,
    pub final_answer: Option<Label>,
    #[serde(default)]
    pub generator: String,
    #[serde(default)]
    pub seed_meta: BTreeMap<String, Value>,
    #[serde(default)]
    pub raw_text: String,
}

impl Trajectory {
    /// `problem_id#sample_index`, or the bare problem id for unnumbered traces.
    pub fn id(&self) -> String {
        match self.seed_meta.get("sample_index") {
            Some(Value::Number(n)) => format!("{}#{n}", self.problem_id),
            Some(Value::String(s)) => format!("{}#{s}", self.problem_id),
            _ => self.problem_id.clone(),
        }
    }

    pub fn formula_count(&self) -> usize {
        self.steps.iter().map(|s| s.formulas.len()).sum()
    }

    /// The trajectory as prompt text, one step per marker line.
    pub fn render_steps(&self, n: usize) -> String {
        self.steps[..n]
            .iter()
            .map(Step::to_string)
            .collect::<Vec<_>>()
            .join("\n")
    }
}

#[derive(Debug, Error)]
pub enum TrajectoryError {
    #[error("no step marker and no Finish marker in model output")]
    EmptyTrajectory,
    #[error("prefix length {prefix_len} outside 1..={steps}")]
    IndexError { prefix_len: usize, steps: usize },
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub fn serialize_trajectory(traj: &Trajectory) -> String {
    serde_json::to_string(traj).expect("trajectories always serialize")
}

pub fn deserialize_trajectory(line: &str) -> Result<Trajectory, serde_json::Error> {
    serde_json::from_str(line)
}

pub fn write_trajectories<W: Write>(mut w: W, trajs: &[Trajectory]) -> std::io::Result<()> {
    for t in trajs {
        writeln!(w, "{}", serialize_trajectory(t))?;
    }
    w.flush()
}

/// Reads SymbReAct-trace lines; `line` in errors is 1-based.
pub fn read_trajectories<R: BufRead>(r: R) -> Result<Vec<Trajectory>, TrajectoryError> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            deserialize_trajectory(&line).map_err(|e| TrajectoryError::Format {
                line: i + 1,
                message: e.to_string(),
            })?,
        );
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn field_order_is_stable() {
        let t = Trajectory {
            problem_id: "p".into(),
            steps: vec![],
            final_answer: Some(Label::True),
            generator: "mock".into(),
            seed_meta: BTreeMap::from([("temperature".into(), Value::from(0.7))]),
            raw_text: "Finish [True]".into(),
        };
        let line = serialize_trajectory(&t);
        assert_eq!(
            line,
            r#"{"problem_id":"p","steps":[],"final_answer":"True","generator":"mock","seed_meta":{"temperature":0.7},"raw_text":"Finish [True]"}"#
        );
        assert_eq!(deserialize_trajectory(&line).unwrap(), t);
    }

    #[test]
    fn id_uses_sample_index() {
        let mut t = Trajectory {
            problem_id: "p".into(),
            steps: vec![],
            final_answer: None,
            generator: String::new(),
            seed_meta: BTreeMap::new(),
            raw_text: String::new(),
        };
        assert_eq!(t.id(), "p");
        t.seed_meta.insert("sample_index".into(), Value::from(3));
        assert_eq!(t.id(), "p#3");
    }
}
