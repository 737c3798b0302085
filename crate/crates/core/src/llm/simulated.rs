use std::collections::{BTreeSet, HashMap};
use std::sync::Mutex;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use super::{local_response, Backend, GenerationRequest, GenerationResponse, LlmError};
use crate::fol::{parse_formula, substitute, Formula, Term};
use crate::label::Label;
use crate::rules::{classify_action, ActionRole};
use crate::semantics::{entails, DEFAULT_MAX_DOMAIN};
use crate::trajectory::{parse_trajectory, StepKind, CONTINUATION_SENTENCE, TASK_HEADER};

/// A deterministic stand-in for a reasoning model.
///
/// It reads the formalized premises and statement from the task section of
/// the prompt, forward-chains with catalog rules, and writes the derivation
/// in Thought/Action/Observation form. A seeded fraction of sampled
/// trajectories contain an unsupported step and usually a wrong answer.
/// Completion requests are answered wrongly whenever the given prefix holds an
/// unsupported formula, and otherwise correctly up to `slip_rate`.
///
/// Output depends only on the prompt text, seed and temperature.
pub struct SimulatedReasoner {
    pub corruption_rate: f64,
    pub slip_rate: f64,
    entailed: Mutex<HashMap<String, bool>>,
}

impl Default for SimulatedReasoner {
    fn default() -> Self {
        SimulatedReasoner::new(0.35, 0.05)
    }
}

struct Derivation {
    steps: Vec<(String, Vec<Formula>)>,
    answer: Label,
}

struct Task {
    premises: Vec<Formula>,
    hypothesis: Formula,
    prefix: Option<String>,
}

fn parse_task(prompt: &str) -> Option<Task> {
    let task = &prompt[prompt.rfind(TASK_HEADER)? + TASK_HEADER.len()..];
    let mut premises = Vec::new();
    let mut hypothesis = None;
    let mut in_context = false;
    let mut prefix_start = None;
    let mut offset = 0;
    for line in task.split_inclusive('\n') {
        let trimmed = line.trim();
        if let Some(h) = trimmed.strip_prefix("Formalized statement:") {
            hypothesis = parse_formula(h.trim()).ok();
            in_context = false;
            prefix_start = Some(offset + line.len());
        } else if trimmed == "Formalized context:" {
            in_context = true;
        } else if in_context {
            premises.push(parse_formula(trimmed).ok()?);
        }
        offset += line.len();
    }
    let prefix = match (prefix_start, task.rfind(CONTINUATION_SENTENCE)) {
        (Some(start), Some(end)) if start <= end => Some(task[start..end].to_string()),
        _ => None,
    };
    Some(Task {
        premises,
        hypothesis: hypothesis?,
        prefix,
    })
}

fn flip(label: Label) -> Label {
    match label {
        Label::True => Label::False,
        _ => Label::True,
    }
}

fn instantiate(var: &str, f: &Formula, c: &str) -> Formula {
    substitute(f, var, &Term::constant(c)).expect("constants are never captured")
}

impl SimulatedReasoner {
    pub fn new(corruption_rate: f64, slip_rate: f64) -> Self {
        SimulatedReasoner {
            corruption_rate,
            slip_rate,
            entailed: Mutex::new(HashMap::new()),
        }
    }

    fn entailment(&self, premises: &[Formula], h: &Formula) -> Label {
        let key = format!(
            "{}⊢{h}",
            premises
                .iter()
                .map(|p| p.to_string())
                .collect::<Vec<_>>()
                .join(";")
        );
        if let Some(&hit) = self.entailed.lock().expect("cache lock").get(&key) {
            return if hit { Label::True } else { Label::Uncertain };
        }
        let verdict = entails(premises, h, DEFAULT_MAX_DOMAIN)
            .map(|e| e.verdict)
            .unwrap_or(Label::Uncertain);
        if verdict != Label::False {
            self.entailed
                .lock()
                .expect("cache lock")
                .insert(key, verdict == Label::True);
        }
        verdict
    }

    /// Whether `f` follows from the premises, treating constants the premises
    /// never mention as existential witnesses.
    fn supported(&self, premises: &[Formula], f: &Formula) -> bool {
        let known: BTreeSet<String> = premises.iter().flat_map(|p| p.constants()).collect();
        let mut target = f.clone();
        for (i, c) in f.constants().difference(&known).enumerate() {
            let v = format!("v{i}");
            target = Formula::exists(v.clone(), target.abstract_constant(c, &v));
        }
        self.entailment(premises, &target) == Label::True
    }

    fn derive(&self, premises: &[Formula], hypothesis: &Formula) -> Derivation {
        let mut facts: Vec<Formula> = premises
            .iter()
            .filter(|f| f.as_quantified().is_none())
            .cloned()
            .collect();
        let universals: Vec<(String, Formula, Formula)> = premises
            .iter()
            .filter_map(|f| match f {
                Formula::ForAll { var, body } => match &**body {
                    Formula::Implies(a, b) => Some((var.clone(), (**a).clone(), (**b).clone())),
                    _ => None,
                },
                _ => None,
            })
            .collect();
        let mut steps: Vec<(String, Vec<Formula>)> = Vec::new();
        let mut fired: BTreeSet<(usize, String)> = BTreeSet::new();

        let mut witness = 0;
        for p in premises {
            let Formula::Exists { var, body } = p else {
                continue;
            };
            witness += 1;
            let c = format!("c{witness}");
            let inst = instantiate(var, body, &c);
            steps.push((
                format!("Apply existential instantiation on {p} with a fresh constant {c}"),
                vec![inst.clone()],
            ));
            facts.push(inst.clone());
            if let Formula::Or(l, r) = &inst {
                let covering = |side: &Formula| {
                    universals.iter().enumerate().find(|(_, (v, a, _))| {
                        let a = instantiate(v, a, &c);
                        a == *side
                            || matches!(&a, Formula::Or(x, y) if **x == *side || **y == *side)
                    })
                };
                if let (Some((i, (v1, a1, b1))), Some((j, (v2, a2, b2)))) =
                    (covering(l), covering(r))
                {
                    let (c1, c2) = (instantiate(v1, b1, &c), instantiate(v2, b2, &c));
                    if c1 == c2 {
                        steps.push((
                            "Apply instantiation on the formulas which have universal quantifiers."
                                .into(),
                            vec![
                                Formula::implies(instantiate(v1, a1, &c), c1.clone()),
                                Formula::implies(instantiate(v2, a2, &c), c2),
                            ],
                        ));
                        steps.push((format!("Consider both cases of {inst}"), vec![c1.clone()]));
                        facts.push(c1);
                        fired.insert((i, c.clone()));
                        fired.insert((j, c.clone()));
                    }
                }
            }
        }

        loop {
            let constants: BTreeSet<String> = facts.iter().flat_map(|f| f.constants()).collect();
            let mut progress = false;
            for (i, (v, a, b)) in universals.iter().enumerate() {
                for c in &constants {
                    if fired.contains(&(i, c.clone())) {
                        continue;
                    }
                    let ante = instantiate(v, a, c);
                    let cons = instantiate(v, b, c);
                    let via_disjunct = match &ante {
                        Formula::Or(x, y) if !facts.contains(&ante) => [x, y]
                            .into_iter()
                            .find(|d| facts.contains(d))
                            .map(|d| (**d).clone()),
                        _ => None,
                    };
                    if !facts.contains(&ante) && via_disjunct.is_none() {
                        continue;
                    }
                    fired.insert((i, c.clone()));
                    if facts.contains(&cons) {
                        continue;
                    }
                    let imp = Formula::implies(ante.clone(), cons.clone());
                    steps.push((
                        format!(
                            "Apply instantiation on ∀{v} ({})",
                            Formula::implies(a.clone(), b.clone())
                        ),
                        vec![imp.clone()],
                    ));
                    if let Some(d) = via_disjunct {
                        steps.push((
                            format!("Given that {d} is true, any disjunction we introduce is also true."),
                            vec![ante.clone()],
                        ));
                        facts.push(ante.clone());
                    }
                    steps.push((
                        format!("Apply modus ponens on {imp} and {ante}"),
                        vec![cons.clone()],
                    ));
                    facts.push(cons.clone());
                    if let Formula::And(l, r) = &cons {
                        steps.push((
                            format!("Apply conjunction elimination on {cons}"),
                            vec![(**l).clone(), (**r).clone()],
                        ));
                        facts.push((**l).clone());
                        facts.push((**r).clone());
                    }
                    progress = true;
                }
            }
            if !progress {
                break;
            }
        }

        let holds = |f: &Formula| facts.contains(f);
        let answer = match hypothesis {
            h if holds(h) => Label::True,
            Formula::Not(inner) if holds(inner) => Label::False,
            h if holds(&Formula::not(h.clone())) => Label::False,
            Formula::Exists { var, body } => {
                let found = facts
                    .iter()
                    .flat_map(|f| f.constants())
                    .collect::<BTreeSet<_>>()
                    .into_iter()
                    .map(|c| instantiate(var, body, &c))
                    .find(|inst| holds(inst));
                match found {
                    Some(inst) => {
                        steps.push((
                            format!("Apply existential generalization on {inst}"),
                            vec![hypothesis.clone()],
                        ));
                        Label::True
                    }
                    None => self.entailment(premises, hypothesis),
                }
            }
            Formula::ForAll { var, body } => match &**body {
                Formula::Not(inner)
                    if facts
                        .iter()
                        .flat_map(|f| f.constants())
                        .any(|c| holds(&instantiate(var, inner, &c))) =>
                {
                    Label::False
                }
                _ => self.entailment(premises, hypothesis),
            },
            _ => self.entailment(premises, hypothesis),
        };
        Derivation { steps, answer }
    }

    fn render(
        premises: &[Formula],
        hypothesis: &Formula,
        steps: &[(String, Vec<Formula>)],
        answer: Label,
    ) -> String {
        let mut out = String::from(
            "Thought: We need to translate the information into First Order Logic.\n\
             Action: Translate the statements in the context to logic premises\nObservation:\n",
        );
        for p in premises {
            out.push_str(&format!("{p}\n"));
        }
        out.push_str(&format!(
            "Action: Translate the question into a logic formula\nObservation: {hypothesis}\n\
             Thought: Infer on the existing formulas to try to proof the statement by applying logic rules\n"
        ));
        for (action, obs) in steps {
            out.push_str(&format!("Action: {action}\nObservation:"));
            if let [single] = obs.as_slice() {
                out.push_str(&format!(" {single}\n"));
            } else {
                out.push('\n');
                for f in obs {
                    out.push_str(&format!("{f}\n"));
                }
            }
        }
        out.push_str(&format!("Action: Finish [{answer}]"));
        out
    }

    fn rng_for(req: &GenerationRequest) -> ChaCha8Rng {
        let mut h = Sha256::new();
        h.update(req.prompt_text().as_bytes());
        h.update(req.seed.unwrap_or(0).to_le_bytes());
        h.update(req.temperature.to_bits().to_le_bytes());
        let digest = h.finalize();
        let mut seed = [0u8; 32];
        seed.copy_from_slice(&digest);
        ChaCha8Rng::from_seed(seed)
    }

    fn sample(&self, task: &Task, rng: &mut ChaCha8Rng, temperature: f64) -> String {
        let d = self.derive(&task.premises, &task.hypothesis);
        let mut steps = d.steps;
        let mut answer = d.answer;
        // Greedy decoding never corrupts.
        let rate = if temperature > 0.0 {
            self.corruption_rate
        } else {
            0.0
        };
        if rng.gen_bool(rate.clamp(0.0, 1.0)) {
            let at = rng.gen_range(0..=steps.len());
            let anchor = steps[..at]
                .iter()
                .flat_map(|(_, obs)| obs.iter())
                .last()
                .cloned()
                .unwrap_or_else(|| task.hypothesis.clone());
            let bogus = match anchor {
                Formula::Not(inner) => *inner,
                other => Formula::not(other),
            };
            steps.insert(
                at,
                (
                    "Apply modus ponens on the previous formulas".into(),
                    vec![bogus],
                ),
            );
            if rng.gen_bool(0.8) {
                answer = flip(answer);
            }
        } else if temperature > 0.0 && rng.gen_bool(self.slip_rate.clamp(0.0, 1.0)) {
            answer = flip(answer);
        }
        Self::render(&task.premises, &task.hypothesis, &steps, answer)
    }

    fn complete(
        &self,
        task: &Task,
        prefix: &str,
        rng: &mut ChaCha8Rng,
        temperature: f64,
    ) -> String {
        let d = self.derive(&task.premises, &task.hypothesis);
        let poisoned = match parse_trajectory(prefix, "prefix") {
            Ok(t) => {
                let mut role = ActionRole::Inference;
                t.steps.iter().any(|s| match s.kind {
                    StepKind::Action => {
                        role = classify_action(&s.text);
                        false
                    }
                    StepKind::Observation if role == ActionRole::Inference => s
                        .formulas
                        .iter()
                        .any(|f| !self.supported(&task.premises, f)),
                    _ => false,
                })
            }
            Err(_) => false,
        };
        let answer = if poisoned {
            flip(d.answer)
        } else if temperature > 0.0 && rng.gen_bool(self.slip_rate.clamp(0.0, 1.0)) {
            flip(d.answer)
        } else {
            d.answer
        };
        let mut out = String::from("Thought: Continue from the formulas derived so far.\n");
        if !poisoned {
            if let Some((action, obs)) = d.steps.last() {
                out.push_str(&format!(
                    "Action: {action}\nObservation: {}\n",
                    obs.iter()
                        .map(|f| f.to_string())
                        .collect::<Vec<_>>()
                        .join("\n")
                ));
            }
        }
        out.push_str(&format!("Action: Finish [{answer}]"));
        out
    }
}

impl Backend for SimulatedReasoner {
    fn id(&self) -> String {
        format!(
            "simulated-reasoner(corruption={},slip={})",
            self.corruption_rate, self.slip_rate
        )
    }

    fn generate(&self, req: &GenerationRequest) -> Result<GenerationResponse, LlmError> {
        req.validate()?;
        let prompt = req.prompt_text();
        let mut rng = Self::rng_for(req);
        let text = match parse_task(&prompt) {
            None => "Thought: The task gives no formalized context to reason over.\nAction: Finish [Uncertain]".to_string(),
            Some(task) => match &task.prefix {
                Some(prefix) => self.complete(&task, prefix, &mut rng, req.temperature),
                None => self.sample(&task, &mut rng, req.temperature),
            },
        };
        Ok(local_response(req, text))
    }
}
