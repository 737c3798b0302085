use super::{Trajectory, TrajectoryError};
use crate::problems::{Problem, Source, Statement};

pub const CONTINUATION_SENTENCE: &str =
    "I have wrote the first part of the reasoning path. Please continue the reasoning path.";

const EXAMPLE_RULE: &str = "=============Example==============";
/// Line separating the worked examples from the task in a rendered prompt.
pub const TASK_HEADER: &str = "===============Task===============";

const INSTRUCTION: &str = "Solve a question answering task by having a Thought, then Finish with your answer. Thought can reason about the current situation. Finish [answer] returns the answer and finishes the task. You will be given context that you should use to help you answer the question. Given the facts and a question, try to define predicates and variables if necessary. Then, parse the problem and the question, formulate them into first-order logic formulas. Next, try to infer the statement presented in the question based on the premises.";

const THREE_WAY: &str = "If it is possible to infer the statement, please answer \"True\". If it is possible to infer the negation of the statement, please answer \"False\". If the statement cannot be proofed or disproofed, please answer \"Uncertain\".";

const TWO_WAY: &str = "If it is possible to infer the statement, please answer \"True\". If it is possible to infer the negation of the statement, please answer \"False\".";

const FORMAT: &str = "In your response, please include a reasoning path to show each step of the inference where you need to specify what logic rule is applied to which premises.
The format of the reasoning step should be like the following:
Thought: {A high-level thought to solve the question}
Action: {The description of an action to realize the thought}
Observation: {After applying the action, what would you get? Can be a new formula}
It is not necessary to have a new thought for each step, but an action and an observation should be in each step.";

const GRAMMAR: &str = "The grammar of the first-order logic formular is defined as follows:
1) logical conjunction of expr1 and expr2: expr1 ∧ expr2
2) logical disjunction of expr1 and expr2: expr1 ∨ expr2
3) logical exclusive disjunction of expr1 and expr2: expr1 ⊕ expr2
4) logical negation of expr1: ¬expr1
5) expr1 implies expr2: expr1 → expr2
6) expr1 if and only if expr2: expr1 ↔ expr2
7) logical universal quantification: ∀x
8) logical existential quantification: ∃x";

const DEMOS: [&str; 2] = [
    include_str!("demos/rina.txt"),
    include_str!("demos/tom.txt"),
];

/// The built-in worked examples, in the order they are offered.
pub fn demonstrations() -> &'static [&'static str] {
    &DEMOS
}

/// Which rendering of premises and hypothesis the task section shows.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum PromptView {
    #[default]
    Nl,
    Fol,
    /// Natural language followed by the formalized context and statement.
    Both,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PromptOptions {
    pub n_shots: usize,
    pub view: PromptView,
}

impl Default for PromptOptions {
    fn default() -> Self {
        PromptOptions {
            n_shots: 1,
            view: PromptView::Nl,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PromptBundle {
    pub system: String,
    pub demonstrations: Vec<String>,
    pub task: String,
    pub continuation_prefix: Option<String>,
}

impl PromptBundle {
    /// The user turn: examples, task and any continuation request.
    pub fn user_message(&self) -> String {
        let mut out = String::new();
        for demo in &self.demonstrations {
            out.push_str(EXAMPLE_RULE);
            out.push('\n');
            out.push_str(demo.trim_end());
            out.push('\n');
        }
        out.push_str(TASK_HEADER);
        out.push('\n');
        out.push_str(&self.task);
        if let Some(prefix) = &self.continuation_prefix {
            out.push('\n');
            out.push_str(prefix);
            out.push('\n');
            out.push_str(CONTINUATION_SENTENCE);
        }
        out
    }

    /// System and user turns joined, for single-string consumers.
    pub fn render(&self) -> String {
        format!("{}\n{}", self.system, self.user_message())
    }
}

fn statement_text(s: &Statement, view: PromptView) -> String {
    let nl = s.nl.as_deref().map(str::trim).filter(|t| !t.is_empty());
    let fol = s.fol.as_ref().map(ToString::to_string);
    match view {
        PromptView::Fol => fol.or(nl.map(str::to_string)),
        _ => nl.map(str::to_string).or(fol),
    }
    .unwrap_or_default()
}

fn task_text(problem: &Problem, view: PromptView) -> String {
    let context = problem
        .premises
        .iter()
        .map(|s| statement_text(s, view))
        .collect::<Vec<_>>()
        .join(" ");
    let choices = match problem.source {
        Source::Logicasker => "true or false",
        _ => "true, false, or uncertain",
    };
    let mut out = format!(
        "Context: {context}\nQuestion: Based on the above information, is the following statement {choices}? {}",
        statement_text(&problem.hypothesis, view)
    );
    if view == PromptView::Both {
        let formulas: Vec<String> = problem
            .premises
            .iter()
            .filter_map(|s| s.fol.as_ref().map(ToString::to_string))
            .collect();
        if !formulas.is_empty() {
            out.push_str("\nFormalized context:");
            for f in formulas {
                out.push('\n');
                out.push_str(&f);
            }
        }
        if let Some(h) = &problem.hypothesis.fol {
            out.push_str(&format!("\nFormalized statement: {h}"));
        }
    }
    out
}

pub fn build_sampling_prompt(problem: &Problem, n_shots: usize) -> PromptBundle {
    build_sampling_prompt_with(
        problem,
        &PromptOptions {
            n_shots,
            ..Default::default()
        },
    )
}

pub fn build_sampling_prompt_with(problem: &Problem, opts: &PromptOptions) -> PromptBundle {
    let answers = match problem.source {
        Source::Logicasker => TWO_WAY,
        _ => THREE_WAY,
    };
    let n = opts.n_shots.clamp(1, DEMOS.len());
    PromptBundle {
        system: format!("{INSTRUCTION} {answers}\n{FORMAT}\n{GRAMMAR}"),
        demonstrations: DEMOS[..n]
            .iter()
            .map(|d| d.trim_end().to_string())
            .collect(),
        task: task_text(problem, opts.view),
        continuation_prefix: None,
    }
}

/// The sampling prompt followed by the first `prefix_len` steps of `traj`.
pub fn build_completion_prompt(
    problem: &Problem,
    traj: &Trajectory,
    prefix_len: usize,
    opts: &PromptOptions,
) -> Result<PromptBundle, TrajectoryError> {
    if prefix_len == 0 || prefix_len > traj.steps.len() {
        return Err(TrajectoryError::IndexError {
            prefix_len,
            steps: traj.steps.len(),
        });
    }
    let mut bundle = build_sampling_prompt_with(problem, opts);
    bundle.continuation_prefix = Some(traj.render_steps(prefix_len));
    Ok(bundle)
}
