use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::SupervisionError;
use crate::problems::Problem;
use crate::rules::{verify_trajectory, VerdictStatus};
use crate::trajectory::Trajectory;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrmScore {
    pub trajectory_id: String,
    pub step_probs: Vec<f64>,
    pub trajectory_prob: f64,
}

impl PrmScore {
    pub fn new(trajectory_id: impl Into<String>, step_probs: Vec<f64>) -> Self {
        let trajectory_prob = step_probs.iter().product();
        PrmScore {
            trajectory_id: trajectory_id.into(),
            step_probs,
            trajectory_prob,
        }
    }
}

/// Produces one correctness probability per step.
pub trait Scorer {
    fn step_probs(
        &self,
        problem: &Problem,
        traj: &Trajectory,
    ) -> Result<Vec<f64>, SupervisionError>;
}

/// Scores steps by the local rule verifier.
#[derive(Clone, Copy, Debug, Default)]
pub struct SymbolicScorer;

impl SymbolicScorer {
    pub fn prob(status: VerdictStatus) -> f64 {
        match status {
            VerdictStatus::VerifiedByRule => 0.99,
            VerdictStatus::VerifiedSemantically => 0.90,
            VerdictStatus::Unparseable => 0.50,
            VerdictStatus::Invalid => 0.01,
        }
    }
}

impl Scorer for SymbolicScorer {
    fn step_probs(
        &self,
        problem: &Problem,
        traj: &Trajectory,
    ) -> Result<Vec<f64>, SupervisionError> {
        Ok(verify_trajectory(problem, traj)
            .iter()
            .map(|v| Self::prob(v.status))
            .collect())
    }
}

/// Posts `{"steps": [..]}` to an HTTP endpoint that answers `{"probs": [..]}`.
#[derive(Debug)]
pub struct RemoteScorer {
    url: String,
    agent: ureq::Agent,
}

impl RemoteScorer {
    pub fn new(url: impl Into<String>, timeout: Duration) -> Self {
        RemoteScorer {
            url: url.into(),
            agent: ureq::AgentBuilder::new().timeout(timeout).build(),
        }
    }
}

impl Scorer for RemoteScorer {
    fn step_probs(
        &self,
        _problem: &Problem,
        traj: &Trajectory,
    ) -> Result<Vec<f64>, SupervisionError> {
        let unavailable =
            |m: String| SupervisionError::ScorerUnavailable(format!("{}: {m}", self.url));
        let steps: Vec<String> = traj.steps.iter().map(ToString::to_string).collect();
        let body = json!({ "steps": steps }).to_string();
        let text = self
            .agent
            .post(&self.url)
            .set("Content-Type", "application/json")
            .send_string(&body)
            .map_err(|e| unavailable(e.to_string()))?
            .into_string()
            .map_err(|e| unavailable(e.to_string()))?;
        let v: Value = serde_json::from_str(&text).map_err(|e| unavailable(e.to_string()))?;
        let probs: Vec<f64> = v
            .get("probs")
            .and_then(Value::as_array)
            .ok_or_else(|| unavailable("response has no `probs` array".into()))?
            .iter()
            .map(|p| p.as_f64().filter(|p| (0.0..=1.0).contains(p)))
            .collect::<Option<_>>()
            .ok_or_else(|| unavailable("probabilities must be numbers in [0, 1]".into()))?;
        if probs.len() != steps.len() {
            return Err(unavailable(format!(
                "{} probabilities for {} steps",
                probs.len(),
                steps.len()
            )));
        }
        Ok(probs)
    }
}

pub fn score_trajectory(
    traj: &Trajectory,
    problem: &Problem,
    scorer: &dyn Scorer,
) -> Result<PrmScore, SupervisionError> {
    Ok(PrmScore::new(traj.id(), scorer.step_probs(problem, traj)?))
}
