use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use super::{Problem, ProblemError, Source, Statement};
use crate::fol::{Formula, Term};
use crate::label::Label;
use crate::semantics::{entails, DEFAULT_MAX_DOMAIN};

/// Predicate symbols with the phrase that follows "is" in English.
const LEXICON: &[(&str, &str)] = &[
    ("Tall", "tall"),
    ("Doctor", "a doctor"),
    ("Curious", "curious"),
    ("Painter", "a painter"),
    ("Brave", "brave"),
    ("Singer", "a singer"),
    ("Calm", "calm"),
    ("Student", "a student"),
    ("Happy", "happy"),
    ("Farmer", "a farmer"),
    ("Quiet", "quiet"),
    ("Writer", "a writer"),
    ("Clever", "clever"),
    ("Sailor", "a sailor"),
    ("Kind", "kind"),
    ("Teacher", "a teacher"),
    ("Patient", "patient"),
    ("Chef", "a chef"),
    ("Strong", "strong"),
    ("Pilot", "a pilot"),
    ("Honest", "honest"),
    ("Baker", "a baker"),
    ("Polite", "polite"),
    ("Runner", "a runner"),
    ("Funny", "funny"),
    ("Lawyer", "a lawyer"),
    ("Gentle", "gentle"),
    ("Dancer", "a dancer"),
    ("Busy", "busy"),
    ("Poet", "a poet"),
    ("Wise", "wise"),
    ("Nurse", "a nurse"),
    ("Young", "young"),
    ("Hunter", "a hunter"),
    ("Lucky", "lucky"),
    ("Climber", "a climber"),
];

const NAMES: &[&str] = &[
    "alice", "bob", "carol", "dave", "erin", "frank", "grace", "heidi", "ivan", "judy",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GeneratorConfig {
    /// Unrelated premises added to each problem.
    pub distractors: usize,
    /// Rejected candidates tolerated per length before giving up.
    pub max_rejections: usize,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            distractors: 2,
            max_rejections: 1000,
        }
    }
}

/// Synthetic implication-chain problems, `count_per_length` for each length,
/// alternating True and False labels.
pub fn generate_logicasker(
    count_per_length: usize,
    lengths: &[usize],
    seed: u64,
) -> Result<Vec<Problem>, ProblemError> {
    generate_logicasker_with(count_per_length, lengths, seed, &GeneratorConfig::default())
}

pub fn generate_logicasker_with(
    count_per_length: usize,
    lengths: &[usize],
    seed: u64,
    config: &GeneratorConfig,
) -> Result<Vec<Problem>, ProblemError> {
    if lengths.is_empty() || count_per_length == 0 {
        return Err(ProblemError::InvalidRequest(
            "need at least one length and a positive count".into(),
        ));
    }
    if let Some(&bad) = lengths
        .iter()
        .find(|&&l| l == 0 || 2 * l + 2 + 2 * config.distractors > LEXICON.len())
    {
        return Err(ProblemError::InvalidRequest(format!(
            "reasoning length {bad} is outside what the predicate vocabulary supports"
        )));
    }
    let mut out = Vec::with_capacity(count_per_length * lengths.len());
    for &length in lengths {
        let mut rng =
            ChaCha8Rng::seed_from_u64(seed ^ (length as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let mut rejections = 0;
        for i in 0..count_per_length {
            let label = if i % 2 == 0 {
                Label::True
            } else {
                Label::False
            };
            loop {
                let mut p = candidate(&mut rng, length, label, config);
                if oracle_agrees(&p) {
                    p.id = format!("logicasker-L{length}-{i:04}");
                    p.meta.insert("seed".into(), Value::from(seed));
                    out.push(p);
                    break;
                }
                rejections += 1;
                if rejections >= config.max_rejections {
                    return Err(ProblemError::GenerationBudgetExceeded {
                        length,
                        attempts: rejections,
                    });
                }
            }
        }
    }
    Ok(out)
}

fn oracle_agrees(p: &Problem) -> bool {
    let (Some(premises), Some(h)) = (p.premise_formulas(), p.hypothesis.fol.as_ref()) else {
        return false;
    };
    matches!(
        entails(&premises, h, DEFAULT_MAX_DOMAIN),
        Ok(e) if e.verdict == p.label && !e.unsatisfiable_premises
    )
}

fn atom(name: &str, term: Term) -> Formula {
    Formula::pred(name, [term])
}

fn x() -> Term {
    Term::var("x")
}

fn candidate<R: Rng>(
    rng: &mut R,
    length: usize,
    label: Label,
    config: &GeneratorConfig,
) -> Problem {
    let mut vocab: Vec<&str> = LEXICON.iter().map(|(n, _)| *n).collect();
    vocab.shuffle(rng);
    let mut vocab = vocab.into_iter();
    let chain: Vec<&str> = vocab.by_ref().take(length + 1).collect();
    let mut names: Vec<&str> = NAMES.to_vec();
    names.shuffle(rng);
    let subject = names[0];

    let existential = rng.gen_bool(0.3);
    // A False problem either refutes the hypothesis through a negated last link
    // or asserts the opposite of what the positive chain derives.
    let negative_last_link = label == Label::False && !existential && rng.gen_bool(0.5);

    let mut premises = Vec::new();
    for i in 0..length {
        let last = i + 1 == length;
        let consequent = if last && negative_last_link {
            Formula::not(atom(chain[i + 1], x()))
        } else {
            atom(chain[i + 1], x())
        };
        let antecedent = atom(chain[i], x());
        let link = match rng.gen_range(0..6) {
            0 => {
                let extra = vocab.next().expect("vocabulary checked");
                Formula::implies(Formula::or(antecedent, atom(extra, x())), consequent)
            }
            1 if !last => {
                let extra = vocab.next().expect("vocabulary checked");
                Formula::implies(antecedent, Formula::and(consequent, atom(extra, x())))
            }
            _ => Formula::implies(antecedent, consequent),
        };
        premises.push(Formula::forall("x", link));
    }

    let hypothesis;
    if existential {
        let alt = vocab.next().expect("vocabulary checked");
        premises.push(Formula::exists(
            "x",
            Formula::or(atom(chain[0], x()), atom(alt, x())),
        ));
        premises.push(Formula::forall(
            "x",
            Formula::implies(atom(alt, x()), atom(chain[1], x())),
        ));
        let goal = atom(chain[length], x());
        hypothesis = match label {
            Label::True => Formula::exists("x", goal),
            _ => Formula::forall("x", Formula::not(goal)),
        };
    } else {
        premises.push(atom(chain[0], Term::constant(subject)));
        let goal = atom(chain[length], Term::constant(subject));
        hypothesis = match label {
            Label::False if !negative_last_link => Formula::not(goal),
            _ => goal,
        };
    }

    for k in 0..config.distractors {
        let (a, b) = (
            vocab.next().expect("vocabulary checked"),
            vocab.next().expect("vocabulary checked"),
        );
        let other = names[1 + k % (names.len() - 1)];
        premises.push(if k % 2 == 0 {
            Formula::forall("x", Formula::implies(atom(a, x()), atom(b, x())))
        } else {
            Formula::and(
                atom(a, Term::constant(other)),
                atom(b, Term::constant(other)),
            )
        });
    }
    premises.shuffle(rng);

    let statements = premises
        .into_iter()
        .map(|f| Statement::both(render_nl(&f), f))
        .collect();
    let mut meta = BTreeMap::new();
    meta.insert("reasoning_length".into(), Value::from(length as u64));
    meta.insert(
        "shape".into(),
        Value::from(if existential {
            "existential"
        } else {
            "grounded"
        }),
    );
    Problem {
        id: String::new(),
        source: Source::Logicasker,
        premises: statements,
        hypothesis: Statement::both(render_nl(&hypothesis), hypothesis),
        label,
        meta,
        split: None,
    }
}

fn phrase(name: &str) -> String {
    LEXICON
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, p)| p.to_string())
        .unwrap_or_else(|| name.to_lowercase())
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(first) => first.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

/// English for a monadic description of one subject, if it has that shape.
fn description(f: &Formula, subject: &Term) -> Option<String> {
    match f {
        Formula::Pred { name, args } if args.len() == 1 && &args[0] == subject => {
            Some(phrase(name))
        }
        Formula::Not(g) => description(g, subject).map(|d| format!("not {d}")),
        Formula::And(a, b) => Some(format!(
            "{} and {}",
            description(a, subject)?,
            description(b, subject)?
        )),
        Formula::Or(a, b) => Some(format!(
            "{} or {}",
            description(a, subject)?,
            description(b, subject)?
        )),
        _ => None,
    }
}

/// English rendering of the formula shapes the generator emits; anything
/// else falls back to the canonical formula text.
pub fn render_nl(f: &Formula) -> String {
    let rendered = match f {
        Formula::ForAll { var, body } => {
            let v = Term::var(var.clone());
            match &**body {
                Formula::Implies(a, b) => description(a, &v)
                    .zip(description(b, &v))
                    .map(|(a, b)| format!("Everyone who is {a} is {b}.")),
                Formula::Not(g) => description(g, &v).map(|d| format!("No one is {d}.")),
                _ => None,
            }
        }
        Formula::Exists { var, body } => {
            description(body, &Term::var(var.clone())).map(|d| format!("Someone is {d}."))
        }
        _ => {
            let constants = f.constants();
            match constants.iter().next() {
                Some(c) if constants.len() == 1 => description(f, &Term::constant(c.clone()))
                    .map(|d| format!("{} is {d}.", capitalize(c))),
                _ => None,
            }
        }
    };
    rendered.unwrap_or_else(|| f.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fol::parse_formula;

    #[test]
    fn renders_chain_shapes() {
        let cases = [
            (
                "∀x (Tall(x) → Doctor(x))",
                "Everyone who is tall is a doctor.",
            ),
            (
                "∀x (Tall(x) ∨ Kind(x) → ¬Doctor(x))",
                "Everyone who is tall or kind is not a doctor.",
            ),
            ("∃x (Tall(x) ∨ Kind(x))", "Someone is tall or kind."),
            ("∀x ¬Poet(x)", "No one is a poet."),
            ("Chef(alice) ∧ Busy(alice)", "Alice is a chef and busy."),
            ("¬Wise(bob)", "Bob is not wise."),
        ];
        for (text, nl) in cases {
            assert_eq!(render_nl(&parse_formula(text).unwrap()), nl);
        }
    }

    #[test]
    fn single_link_example() {
        let premises = [
            parse_formula("∀x (P0(x) → P1(x))").unwrap(),
            parse_formula("P0(a)").unwrap(),
        ];
        let e = entails(&premises, &parse_formula("P1(a)").unwrap(), 3).unwrap();
        assert_eq!(e.verdict, Label::True);
    }

    #[test]
    fn generated_labels_are_balanced_and_verified() {
        let problems = generate_logicasker(6, &[1, 3], 5).unwrap();
        assert_eq!(problems.len(), 12);
        for p in &problems {
            p.validate(0).unwrap();
            assert!(oracle_agrees(p), "{}", p.id);
        }
        let trues = problems.iter().filter(|p| p.label == Label::True).count();
        assert_eq!(trues, 6);
    }

    #[test]
    fn bad_requests() {
        assert!(generate_logicasker(0, &[3], 1).is_err());
        assert!(generate_logicasker(3, &[], 1).is_err());
        assert!(generate_logicasker(3, &[0], 1).is_err());
    }
}
