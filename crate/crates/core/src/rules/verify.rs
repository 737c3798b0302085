use serde::{Deserialize, Serialize};

use super::{find_application, Rule, RuleApplication};
use crate::fol::{signature, Formula};
use crate::label::Label;
use crate::problems::Problem;
use crate::semantics::{entails, DEFAULT_MAX_DOMAIN};
use crate::trajectory::{StepKind, Trajectory};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VerdictStatus {
    VerifiedByRule,
    VerifiedSemantically,
    Invalid,
    Unparseable,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepVerdict {
    pub status: VerdictStatus,
    pub rule: Option<RuleApplication>,
    pub note: String,
}

impl StepVerdict {
    fn new(status: VerdictStatus, note: impl Into<String>) -> Self {
        StepVerdict {
            status,
            rule: None,
            note: note.into(),
        }
    }

    pub fn is_valid(&self) -> bool {
        matches!(
            self.status,
            VerdictStatus::VerifiedByRule | VerdictStatus::VerifiedSemantically
        )
    }
}

/// What an Action asks for, which decides how its Observation is checked.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ActionRole {
    /// Declaring predicate symbols.
    Declaration,
    /// Formalizing the context into premises.
    Formalization,
    /// Formalizing the question.
    GoalFormalization,
    Finish,
    Inference,
}

pub fn classify_action(text: &str) -> ActionRole {
    let t = text.to_lowercase();
    let has = |k: &str| t.contains(k);
    if has("finish [") || has("finish[") {
        ActionRole::Finish
    } else if has("define") || has("declare") {
        ActionRole::Declaration
    } else if has("translate")
        || has("formaliz")
        || has("formalis")
        || has("formulate")
        || has("parse")
    {
        let goal = has("question") || has("conclusion") || has("hypothesis") || has("goal");
        let context = has("context") || has("premise");
        if goal && !context {
            ActionRole::GoalFormalization
        } else {
            ActionRole::Formalization
        }
    } else {
        ActionRole::Inference
    }
}

/// Checks one claimed formula against the formulas derived so far.
pub fn verify_step(context: &[Formula], claimed: &Formula, hint: Option<Rule>) -> StepVerdict {
    let rules: &[Rule] = match &hint {
        Some(r) => std::slice::from_ref(r),
        None => &Rule::ALL,
    };
    for &rule in rules {
        if let Some(app) = find_application(rule, context, claimed) {
            return StepVerdict {
                status: VerdictStatus::VerifiedByRule,
                note: format!("{rule}"),
                rule: Some(app),
            };
        }
    }
    let tried = match hint {
        Some(r) => format!("{r} does not apply"),
        None => "no catalog rule applies".to_string(),
    };
    match entails(context, claimed, DEFAULT_MAX_DOMAIN) {
        Ok(e) if e.unsatisfiable_premises => StepVerdict::new(
            VerdictStatus::Invalid,
            format!("{tried}; context is unsatisfiable"),
        ),
        Ok(e) if e.verdict == Label::True => StepVerdict::new(
            VerdictStatus::VerifiedSemantically,
            format!("{tried}; entailed by context"),
        ),
        Ok(e) => StepVerdict::new(
            VerdictStatus::Invalid,
            format!("{tried}; entailment verdict {}", e.verdict),
        ),
        Err(err) => StepVerdict::new(VerdictStatus::Invalid, format!("{tried}; {err}")),
    }
}

fn syntax_check(context: &[Formula], formulas: &[Formula], what: &str) -> StepVerdict {
    if let Err(e) = signature(context.iter().chain(formulas)) {
        return StepVerdict::new(VerdictStatus::Invalid, e.to_string());
    }
    if let Some(open) = formulas.iter().find(|f| !f.is_closed()) {
        return StepVerdict::new(VerdictStatus::Invalid, format!("`{open}` is not closed"));
    }
    StepVerdict::new(
        VerdictStatus::VerifiedSemantically,
        format!("{what}: syntax checked only"),
    )
}

/// One verdict per step of `traj`, walking the steps in order.
///
/// The context starts from the problem's premise formulas and grows with
/// every formalized premise and every accepted inference.
pub fn verify_trajectory(problem: &Problem, traj: &Trajectory) -> Vec<StepVerdict> {
    let mut context: Vec<Formula> = problem
        .premises
        .iter()
        .filter_map(|s| s.fol.clone())
        .collect();
    let mut role = ActionRole::Inference;
    let mut hint = None;
    let mut out = Vec::with_capacity(traj.steps.len());
    for step in &traj.steps {
        let verdict = match step.kind {
            StepKind::Thought => StepVerdict::new(VerdictStatus::VerifiedSemantically, "thought"),
            StepKind::Action => {
                role = classify_action(&step.text);
                hint = step.rule_hint;
                StepVerdict::new(VerdictStatus::VerifiedSemantically, "action")
            }
            StepKind::Observation if step.formulas.is_empty() => {
                StepVerdict::new(VerdictStatus::Unparseable, "no parseable formula")
            }
            StepKind::Observation => match role {
                ActionRole::Declaration => syntax_check(&[], &step.formulas, "declaration"),
                ActionRole::GoalFormalization => {
                    syntax_check(&context, &step.formulas, "goal formalization")
                }
                ActionRole::Formalization => {
                    let v = syntax_check(&context, &step.formulas, "formalization");
                    if v.is_valid() {
                        for f in &step.formulas {
                            if !context.contains(f) {
                                context.push(f.clone());
                            }
                        }
                    }
                    v
                }
                ActionRole::Inference | ActionRole::Finish => {
                    verify_observation(&mut context, &step.formulas, hint)
                }
            },
        };
        out.push(verdict);
    }
    out
}

fn verify_observation(
    context: &mut Vec<Formula>,
    formulas: &[Formula],
    hint: Option<Rule>,
) -> StepVerdict {
    let mut verdicts = Vec::with_capacity(formulas.len());
    for f in formulas {
        let v = verify_step(context, f, hint);
        if v.is_valid() && !context.contains(f) {
            context.push(f.clone());
        }
        verdicts.push(v);
    }
    if let Some((i, bad)) = verdicts
        .iter()
        .enumerate()
        .find(|(_, v)| v.status == VerdictStatus::Invalid)
    {
        return StepVerdict::new(
            VerdictStatus::Invalid,
            format!("formula {} `{}`: {}", i + 1, formulas[i], bad.note),
        );
    }
    if verdicts
        .iter()
        .all(|v| v.status == VerdictStatus::VerifiedByRule)
    {
        let mut first = verdicts.swap_remove(0);
        if formulas.len() > 1 {
            first.note = format!("{} (+{} more by rule)", first.note, formulas.len() - 1);
        }
        return first;
    }
    let notes: Vec<String> = verdicts.into_iter().map(|v| v.note).collect();
    StepVerdict::new(VerdictStatus::VerifiedSemantically, notes.join("; "))
}
