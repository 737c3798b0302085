use symtrace_core::fol::parse_formula;
use symtrace_core::problems::{Problem, Source, Statement};
use symtrace_core::rules::{verify_trajectory, VerdictStatus};
use symtrace_core::trajectory::{demonstrations, parse_trajectory, StepKind, Trajectory};
use symtrace_core::Label;

const SQUASH: &str = include_str!("fixtures/squash_trace.txt");

fn kinds(t: &Trajectory) -> String {
    t.steps
        .iter()
        .map(|s| match s.kind {
            StepKind::Thought => 'T',
            StepKind::Action => 'A',
            StepKind::Observation => 'O',
        })
        .collect()
}

fn rina_problem() -> Problem {
    Problem {
        id: "rina".into(),
        source: Source::Folio,
        premises: vec![
            Statement::nl("All people who regularly drink coffee are dependent on caffeine."),
            Statement::nl("People either regularly drink coffee or joke about being addicted to caffeine."),
        ],
        hypothesis: Statement::nl(
            "Rina is either a person who jokes about being addicted to caffeine or is unaware that caffeine is a drug.",
        ),
        label: Label::True,
        meta: Default::default(),
        split: None,
    }
}

#[test]
fn rina_derivation_structure() {
    let t = parse_trajectory(demonstrations()[0], "rina").unwrap();
    assert_eq!(kinds(&t), "TTAOAOTAOAOAOAOAOAOA");
    assert_eq!(
        t.steps
            .iter()
            .filter(|s| s.kind == StepKind::Thought)
            .count(),
        3
    );
    assert_eq!(t.final_answer, Some(Label::True));
    let counts: Vec<usize> = t
        .steps
        .iter()
        .filter(|s| s.kind == StepKind::Observation)
        .map(|s| s.formulas.len())
        .collect();
    assert_eq!(counts, [5, 5, 1, 3, 1, 1, 1, 1]);
    assert_eq!(
        t.steps[5].formulas[2],
        parse_formula("¬∃x (Jokes(x) → Unaware(x))").unwrap()
    );
    assert!(t.steps.iter().all(|s| s.unparsed.is_empty()));
}

#[test]
fn rina_observations_all_verify() {
    let t = parse_trajectory(demonstrations()[0], "rina").unwrap();
    let verdicts = verify_trajectory(&rina_problem(), &t);
    assert_eq!(verdicts.len(), t.steps.len());
    for (step, v) in t.steps.iter().zip(&verdicts) {
        if step.kind == StepKind::Observation {
            assert!(v.is_valid(), "{step:?} -> {v:?}");
        } else if step.kind == StepKind::Thought {
            assert_eq!(v.note, "thought");
        }
    }
    let statuses: Vec<VerdictStatus> = t
        .steps
        .iter()
        .zip(&verdicts)
        .filter(|(s, _)| s.kind == StepKind::Observation)
        .map(|(_, v)| v.status)
        .collect();
    use VerdictStatus::*;
    assert_eq!(
        statuses,
        [
            VerifiedSemantically,
            VerifiedSemantically,
            VerifiedByRule,
            VerifiedByRule,
            VerifiedByRule,
            VerifiedByRule,
            VerifiedSemantically,
            VerifiedByRule,
        ]
    );
}

#[test]
fn squash_numbered_trace() {
    let t = parse_trajectory(SQUASH, "squash").unwrap();
    assert_eq!(kinds(&t), "TTTTT");
    assert_eq!(t.final_answer, Some(Label::True));
    let premises: Vec<_> = [
        "∀x20 (Tea(x20) → Squash(x20))",
        "∃x20 (Cook(x20) ∨ Tea(x20))",
        "∀x20 (Squash(x20) → Cook(x20))",
        "∀x20 (Cook(x20) → Squash(x20))",
    ]
    .iter()
    .map(|s| parse_formula(s).unwrap())
    .collect();
    assert_eq!(t.steps[0].formulas, premises);
    assert_eq!(
        t.steps[4].formulas.last(),
        Some(&parse_formula("∃x20 Squash(x20)").unwrap())
    );

    let problem = Problem {
        id: "squash".into(),
        source: Source::Logicasker,
        premises: premises.into_iter().map(Statement::fol).collect(),
        hypothesis: Statement::fol(parse_formula("∃x20 Squash(x20)").unwrap()),
        label: Label::True,
        meta: Default::default(),
        split: None,
    };
    let verdicts = verify_trajectory(&problem, &t);
    assert!(verdicts.iter().all(|v| v.is_valid()));
}

#[test]
fn every_demonstration_parses_to_its_expected_shape() {
    let expected = [(20, Label::True), (16, Label::True)];
    assert_eq!(demonstrations().len(), expected.len());
    for (demo, (steps, answer)) in demonstrations().iter().zip(expected) {
        let t = parse_trajectory(demo, "demo").unwrap();
        assert_eq!(t.steps.len(), steps);
        assert_eq!(t.final_answer, Some(answer));
    }
}
