use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use tracing::warn;

use super::{PreferencePair, StepLabel, SupervisionError};
use crate::problems::Problem;
use crate::trajectory::{build_sampling_prompt_with, PromptOptions, Trajectory};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrmRecord {
    pub prompt: String,
    pub steps: Vec<String>,
    pub step_labels: Vec<i8>,
}

impl PrmRecord {
    pub fn validate(&self) -> Result<(), String> {
        if self.prompt.is_empty() {
            return Err("empty prompt".into());
        }
        if self.steps.len() != self.step_labels.len() {
            return Err(format!(
                "{} steps but {} labels",
                self.steps.len(),
                self.step_labels.len()
            ));
        }
        if let Some(bad) = self.step_labels.iter().find(|l| l.abs() != 1) {
            return Err(format!("step label {bad} is not +1 or -1"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SftRecord {
    pub prompt: String,
    pub response: String,
}

impl SftRecord {
    pub fn validate(&self) -> Result<(), String> {
        if self.prompt.is_empty() || self.response.is_empty() {
            return Err("empty prompt or response".into());
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DpoRecord {
    pub prompt: String,
    pub chosen: String,
    pub rejected: String,
}

impl DpoRecord {
    pub fn validate(&self) -> Result<(), String> {
        if self.prompt.is_empty() || self.chosen.is_empty() || self.rejected.is_empty() {
            return Err("empty prompt, chosen or rejected".into());
        }
        Ok(())
    }
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<(), SupervisionError> {
    let io = |source| SupervisionError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    for item in items {
        let line = serde_json::to_string(item).expect("records always serialize");
        writeln!(w, "{line}").map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Reads one JSON value per non-blank line; errors carry the 1-based line.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, SupervisionError> {
    let io = |source| SupervisionError::Io {
        path: path.to_path_buf(),
        source,
    };
    let reader = BufReader::new(File::open(path).map_err(io)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(io)?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line).map_err(|e| SupervisionError::Format {
                path: path.to_path_buf(),
                line: i + 1,
                message: e.to_string(),
            })?,
        );
    }
    Ok(out)
}

fn prompt_for(problem: &Problem, opts: &PromptOptions) -> String {
    build_sampling_prompt_with(problem, opts).render()
}

/// The model output a trajectory came from, or its steps re-rendered.
fn response_text(traj: &Trajectory) -> String {
    let raw = traj.raw_text.trim();
    if !raw.is_empty() {
        return raw.to_string();
    }
    let mut out = traj.render_steps(traj.steps.len());
    if let Some(answer) = traj.final_answer {
        if !out.is_empty() {
            out.push('\n');
        }
        out.push_str(&format!("Action: Finish [{answer}]"));
    }
    out
}

/// One record per trajectory whose every step carries a label.
pub fn prm_records(
    labels: &[StepLabel],
    trajs: &[Trajectory],
    problems: &HashMap<String, Problem>,
    opts: &PromptOptions,
) -> Vec<PrmRecord> {
    let mut by_traj: HashMap<&str, Vec<&StepLabel>> = HashMap::new();
    for l in labels {
        by_traj.entry(l.trajectory_id.as_str()).or_default().push(l);
    }
    let mut out = Vec::new();
    for t in trajs {
        let id = t.id();
        let Some(problem) = problems.get(&t.problem_id) else {
            warn!(trajectory = %id, "no problem for trajectory; not exported");
            continue;
        };
        let mut step_labels: Vec<Option<i8>> = vec![None; t.steps.len()];
        for l in by_traj.get(id.as_str()).into_iter().flatten() {
            if let Some(slot) = step_labels.get_mut(l.step_index) {
                *slot = Some(l.hard_label);
            }
        }
        let Some(step_labels) = step_labels.into_iter().collect::<Option<Vec<_>>>() else {
            warn!(trajectory = %id, "steps without labels; not exported");
            continue;
        };
        if step_labels.is_empty() {
            continue;
        }
        out.push(PrmRecord {
            prompt: prompt_for(problem, opts),
            steps: t.steps.iter().map(ToString::to_string).collect(),
            step_labels,
        });
    }
    out
}

pub fn sft_records(
    selected: &[Trajectory],
    problems: &HashMap<String, Problem>,
    opts: &PromptOptions,
) -> Vec<SftRecord> {
    selected
        .iter()
        .filter_map(|t| {
            let problem = problems.get(&t.problem_id)?;
            Some(SftRecord {
                prompt: prompt_for(problem, opts),
                response: response_text(t),
            })
        })
        .collect()
}

pub fn dpo_records(
    pairs: &[PreferencePair],
    trajs: &[Trajectory],
    problems: &HashMap<String, Problem>,
    opts: &PromptOptions,
) -> Vec<DpoRecord> {
    let by_id: HashMap<String, &Trajectory> = trajs.iter().map(|t| (t.id(), t)).collect();
    pairs
        .iter()
        .filter_map(|p| {
            let (Some(problem), Some(chosen), Some(rejected)) = (
                problems.get(&p.problem_id),
                by_id.get(&p.chosen),
                by_id.get(&p.rejected),
            ) else {
                warn!(problem = %p.problem_id, "pair references unknown ids; not exported");
                return None;
            };
            Some(DpoRecord {
                prompt: prompt_for(problem, opts),
                chosen: response_text(chosen),
                rejected: response_text(rejected),
            })
        })
        .collect()
}

pub fn export_prm_dataset(
    labels: &[StepLabel],
    trajs: &[Trajectory],
    problems: &HashMap<String, Problem>,
    opts: &PromptOptions,
    path: &Path,
) -> Result<usize, SupervisionError> {
    let records = prm_records(labels, trajs, problems, opts);
    write_jsonl(path, &records)?;
    Ok(records.len())
}

pub fn export_sft_dataset(
    selected: &[Trajectory],
    problems: &HashMap<String, Problem>,
    opts: &PromptOptions,
    path: &Path,
) -> Result<usize, SupervisionError> {
    let records = sft_records(selected, problems, opts);
    write_jsonl(path, &records)?;
    Ok(records.len())
}

pub fn export_dpo_dataset(
    pairs: &[PreferencePair],
    trajs: &[Trajectory],
    problems: &HashMap<String, Problem>,
    opts: &PromptOptions,
    path: &Path,
) -> Result<usize, SupervisionError> {
    let records = dpo_records(pairs, trajs, problems, opts);
    write_jsonl(path, &records)?;
    Ok(records.len())
}
