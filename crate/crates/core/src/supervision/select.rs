use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::{PrmScore, StepLabel};
use crate::problems::Problem;
use crate::trajectory::Trajectory;

pub const DEFAULT_STEP_THRESHOLD: f64 = 0.5;
pub const DEFAULT_DPO_THRESHOLD: f64 = 0.25;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PreferencePair {
    pub problem_id: String,
    pub chosen: String,
    pub rejected: String,
    pub gap: f64,
}

/// Per-step positivity from scores: a step is positive when its probability
/// reaches `threshold`.
pub fn judgments_from_scores(scores: &[PrmScore], threshold: f64) -> HashMap<String, Vec<bool>> {
    scores
        .iter()
        .map(|s| {
            (
                s.trajectory_id.clone(),
                s.step_probs.iter().map(|&p| p >= threshold).collect(),
            )
        })
        .collect()
}

/// Per-step positivity from Monte Carlo labels, indexed by step.
///
/// Steps without a label (skipped prefixes) are judged negative.
pub fn judgments_from_labels(
    labels: &[StepLabel],
    trajs: &[Trajectory],
) -> HashMap<String, Vec<bool>> {
    let mut out: HashMap<String, Vec<bool>> = trajs
        .iter()
        .map(|t| (t.id(), vec![false; t.steps.len()]))
        .collect();
    for l in labels {
        if let Some(slot) = out
            .get_mut(&l.trajectory_id)
            .and_then(|v| v.get_mut(l.step_index))
        {
            *slot = l.is_positive();
        }
    }
    out
}

/// Keeps, in input order, the trajectories whose every step is judged
/// positive and whose final answer equals the gold label.
pub fn select_trajectories(
    trajs: &[Trajectory],
    judgments: &HashMap<String, Vec<bool>>,
    problems: &HashMap<String, Problem>,
) -> Vec<Trajectory> {
    trajs
        .iter()
        .filter(|t| {
            let Some(problem) = problems.get(&t.problem_id) else {
                return false;
            };
            let Some(steps) = judgments.get(&t.id()) else {
                return false;
            };
            steps.len() == t.steps.len()
                && steps.iter().all(|&ok| ok)
                && t.final_answer == Some(problem.label)
        })
        .cloned()
        .collect()
}

/// Scores grouped under the problem of the trajectory they belong to.
/// Scores for unknown trajectories are dropped.
pub fn group_by_problem(
    trajs: &[Trajectory],
    scores: &[PrmScore],
) -> BTreeMap<String, Vec<PrmScore>> {
    let problem_of: HashMap<String, &str> = trajs
        .iter()
        .map(|t| (t.id(), t.problem_id.as_str()))
        .collect();
    let mut out: BTreeMap<String, Vec<PrmScore>> = BTreeMap::new();
    for s in scores {
        if let Some(pid) = problem_of.get(&s.trajectory_id) {
            out.entry(pid.to_string()).or_default().push(s.clone());
        }
    }
    out
}

/// Every within-problem pair whose trajectory probabilities differ by more
/// than `threshold`, the more probable one chosen.
///
/// Sorted by problem id, then gap descending, then chosen and rejected ids.
pub fn build_dpo_pairs(
    groups: &BTreeMap<String, Vec<PrmScore>>,
    threshold: f64,
) -> Vec<PreferencePair> {
    let mut out = Vec::new();
    for (pid, scores) in groups {
        for (i, a) in scores.iter().enumerate() {
            for b in &scores[i + 1..] {
                let (hi, lo) = if a.trajectory_prob >= b.trajectory_prob {
                    (a, b)
                } else {
                    (b, a)
                };
                let gap = hi.trajectory_prob - lo.trajectory_prob;
                if gap > threshold {
                    out.push(PreferencePair {
                        problem_id: pid.clone(),
                        chosen: hi.trajectory_id.clone(),
                        rejected: lo.trajectory_id.clone(),
                        gap,
                    });
                }
            }
        }
    }
    out.sort_by(|x, y| {
        x.problem_id
            .cmp(&y.problem_id)
            .then(y.gap.total_cmp(&x.gap))
            .then_with(|| x.chosen.cmp(&y.chosen))
            .then_with(|| x.rejected.cmp(&y.rejected))
    });
    out
}
