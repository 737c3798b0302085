//! Monte Carlo step labels, the PRM loss, trajectory scoring, selection of
//! training trajectories and preference-pair construction.

mod export;
mod score;
mod select;

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use tracing::warn;

use crate::label::Label;
use crate::llm::{generate_batch, Backend, GenerationRequest};
use crate::problems::Problem;
use crate::trajectory::{build_completion_prompt, parse_trajectory, PromptOptions, Trajectory};

pub use export::{
    dpo_records, export_dpo_dataset, export_prm_dataset, export_sft_dataset, prm_records,
    read_jsonl, sft_records, write_jsonl, DpoRecord, PrmRecord, SftRecord,
};
pub use score::{score_trajectory, PrmScore, RemoteScorer, Scorer, SymbolicScorer};
pub use select::{
    build_dpo_pairs, group_by_problem, judgments_from_labels, judgments_from_scores,
    select_trajectories, PreferencePair, DEFAULT_DPO_THRESHOLD, DEFAULT_STEP_THRESHOLD,
};

/// Clamp applied to step probabilities before taking logs.
pub const PRM_EPSILON: f64 = 1e-7;

#[derive(Debug, Error)]
pub enum SupervisionError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("trajectory {0} has no steps")]
    EmptyTrajectory(String),
    #[error("{labels} labels but {scores} step scores")]
    LengthMismatch { labels: usize, scores: usize },
    #[error("scorer unavailable: {0}")]
    ScorerUnavailable(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Format {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Completion {
    pub final_answer: Option<Label>,
    pub matched: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepLabel {
    pub trajectory_id: String,
    /// The last step of the prefix that completions continued from.
    pub step_index: usize,
    pub n_samples: usize,
    pub n_success: usize,
    /// +1 or -1.
    pub hard_label: i8,
    pub completions: Vec<Completion>,
}

impl StepLabel {
    pub fn is_positive(&self) -> bool {
        self.hard_label > 0
    }
}

pub fn hard_label(n_success: usize, k: usize) -> i8 {
    if n_success >= k {
        1
    } else {
        -1
    }
}

/// A prefix that was not labeled, and why.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedPrefix {
    pub trajectory_id: String,
    pub step_index: usize,
    pub reason: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct McLabeling {
    pub labels: Vec<StepLabel>,
    pub skipped: Vec<SkippedPrefix>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct McConfig {
    pub n_samples: usize,
    pub k: usize,
    pub temperature: f64,
    pub max_tokens: u32,
    pub model: String,
    /// Base seed; sample `j` of every prefix uses `seed + j`.
    pub seed: Option<u64>,
    pub prompt: PromptOptions,
    /// Prefixes whose rendered completion prompt is longer are skipped.
    pub max_prompt_chars: Option<usize>,
    pub parallelism: usize,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig {
            n_samples: 10,
            k: 1,
            temperature: 0.7,
            max_tokens: 1024,
            model: String::new(),
            seed: Some(0),
            prompt: PromptOptions::default(),
            max_prompt_chars: None,
            parallelism: 4,
        }
    }
}

impl McConfig {
    pub fn validate(&self) -> Result<(), SupervisionError> {
        if self.k == 0 || self.n_samples < self.k {
            return Err(SupervisionError::InvalidConfig(format!(
                "need n_samples >= k >= 1, got n_samples={} k={}",
                self.n_samples, self.k
            )));
        }
        if self.max_tokens == 0 || !(self.temperature >= 0.0) || self.parallelism == 0 {
            return Err(SupervisionError::InvalidConfig(
                "max_tokens and parallelism must be positive and temperature non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// Labels every step of `traj` by sampling completions from each prefix and
/// counting those that reach the gold answer.
pub fn mc_label(
    problem: &Problem,
    traj: &Trajectory,
    backend: &dyn Backend,
    config: &McConfig,
) -> Result<McLabeling, SupervisionError> {
    config.validate()?;
    let id = traj.id();
    if traj.steps.is_empty() {
        return Err(SupervisionError::EmptyTrajectory(id));
    }
    let mut out = McLabeling::default();
    let mut prefixes = Vec::new();
    let mut reqs = Vec::new();
    for p in 1..=traj.steps.len() {
        let bundle = build_completion_prompt(problem, traj, p, &config.prompt)
            .expect("prefix length within bounds");
        if let Some(limit) = config.max_prompt_chars {
            let chars = bundle.render().chars().count();
            if chars > limit {
                out.skipped.push(SkippedPrefix {
                    trajectory_id: id.clone(),
                    step_index: p - 1,
                    reason: format!("PromptTooLong: {chars} chars > {limit}"),
                });
                continue;
            }
        }
        prefixes.push(p);
        for j in 0..config.n_samples {
            reqs.push(GenerationRequest::from_prompt(
                &bundle,
                config.model.clone(),
                config.temperature,
                config.max_tokens,
                config.seed.map(|s| s.wrapping_add(j as u64)),
            ));
        }
    }
    let responses = generate_batch(backend, &reqs, config.parallelism);
    for (chunk, &p) in responses.chunks(config.n_samples.max(1)).zip(&prefixes) {
        let completions: Vec<Completion> = chunk
            .iter()
            .map(|r| {
                let final_answer = match r {
                    Ok(resp) => parse_trajectory(&resp.text, &problem.id)
                        .ok()
                        .and_then(|t| t.final_answer),
                    Err(e) => {
                        warn!(trajectory = %id, step = p - 1, "completion failed: {e}");
                        None
                    }
                };
                Completion {
                    final_answer,
                    matched: final_answer == Some(problem.label),
                }
            })
            .collect();
        let n_success = completions.iter().filter(|c| c.matched).count();
        out.labels.push(StepLabel {
            trajectory_id: id.clone(),
            step_index: p - 1,
            n_samples: config.n_samples,
            n_success,
            hard_label: hard_label(n_success, config.k),
            completions,
        });
    }
    Ok(out)
}

/// Binary cross-entropy of step probabilities against hard labels, summed
/// over steps.
pub fn prm_loss(labels: &[StepLabel], scores: &PrmScore) -> Result<f64, SupervisionError> {
    if labels.len() != scores.step_probs.len() {
        return Err(SupervisionError::LengthMismatch {
            labels: labels.len(),
            scores: scores.step_probs.len(),
        });
    }
    Ok(labels
        .iter()
        .zip(&scores.step_probs)
        .map(|(l, &r)| {
            let r = r.clamp(PRM_EPSILON, 1.0 - PRM_EPSILON);
            if l.is_positive() {
                -r.ln()
            } else {
                -(1.0 - r).ln()
            }
        })
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn label(hard: i8) -> StepLabel {
        StepLabel {
            trajectory_id: "t".into(),
            step_index: 0,
            n_samples: 1,
            n_success: usize::from(hard > 0),
            hard_label: hard,
            completions: vec![],
        }
    }

    #[test]
    #[allow(clippy::approx_constant)]
    fn loss_hand_cases() {
        let eps = PrmScore::new("t", vec![1.0 - PRM_EPSILON]);
        assert!(prm_loss(&[label(1)], &eps).unwrap() < 1e-6);
        let half = PrmScore::new("t", vec![0.5]);
        assert!((prm_loss(&[label(1)], &half).unwrap() - 0.6931).abs() < 1e-4);
        let two = PrmScore::new("t", vec![0.5, 0.5]);
        assert!((prm_loss(&[label(1), label(-1)], &two).unwrap() - 1.3863).abs() < 1e-4);
        assert!(prm_loss(&[label(1)], &two).is_err());
        let saturated = PrmScore::new("t", vec![0.0]);
        assert!(prm_loss(&[label(1)], &saturated).unwrap().is_finite());
    }

    #[test]
    fn hard_label_rule_is_exhaustive() {
        for k in 1..=10 {
            for n in 0..=10 {
                assert_eq!(hard_label(n, k) == 1, n >= k);
            }
        }
    }

    #[test]
    fn config_bounds() {
        assert!(McConfig::default().validate().is_ok());
        let bad = McConfig {
            k: 11,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let zero = McConfig {
            k: 0,
            ..Default::default()
        };
        assert!(zero.validate().is_err());
    }
}
