use std::collections::BTreeMap;
use std::io::BufReader;

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;
use symtrace_core::fol::FormulaSampler;
use symtrace_core::problems::generate_logicasker;
use symtrace_core::rules::Rule;
use symtrace_core::trajectory::{
    build_completion_prompt, deserialize_trajectory, parse_trajectory, read_trajectories,
    serialize_trajectory, write_trajectories, PromptOptions, Step, StepKind, Trajectory,
    CONTINUATION_SENTENCE,
};
use symtrace_core::Label;

fn synthetic(rng: &mut ChaCha8Rng, i: usize) -> Trajectory {
    let sampler = FormulaSampler::new(&[("P", 1), ("Q", 2)], &["a", "b"], 4);
    let steps = (0..rng.gen_range(0..8))
        .map(|k| {
            let kind = *[StepKind::Thought, StepKind::Action, StepKind::Observation]
                .choose(rng)
                .unwrap();
            let mut step = Step::new(kind, format!("step {k} ∀ “quoted” \\ text"));
            if kind == StepKind::Observation {
                step.formulas = (0..rng.gen_range(0..3))
                    .map(|_| sampler.sample(rng))
                    .collect();
            }
            if kind == StepKind::Action {
                step.rule_hint = Rule::ALL.choose(rng).copied();
            }
            step
        })
        .collect();
    Trajectory {
        problem_id: format!("p{}", i % 7),
        steps,
        final_answer: [
            None,
            Some(Label::True),
            Some(Label::False),
            Some(Label::Uncertain),
        ]
        .choose(rng)
        .copied()
        .unwrap(),
        generator: "mock-0".into(),
        seed_meta: BTreeMap::from([
            ("sample_index".into(), Value::from(i)),
            ("temperature".into(), Value::from(0.7)),
        ]),
        raw_text: format!("raw {i}\nFinish [True]"),
    }
}

#[test]
fn serialize_round_trips_a_thousand_trajectories() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let trajs: Vec<Trajectory> = (0..1000).map(|i| synthetic(&mut rng, i)).collect();
    for t in &trajs {
        assert_eq!(
            &deserialize_trajectory(&serialize_trajectory(t)).unwrap(),
            t
        );
    }
    let mut buf = Vec::new();
    write_trajectories(&mut buf, &trajs).unwrap();
    assert_eq!(read_trajectories(BufReader::new(&buf[..])).unwrap(), trajs);
}

#[test]
fn record_carries_generator_and_seed_meta() {
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    let t = synthetic(&mut rng, 3);
    let v: Value = serde_json::from_str(&serialize_trajectory(&t)).unwrap();
    assert_eq!(v["generator"], "mock-0");
    assert_eq!(v["seed_meta"]["sample_index"], 3);
    let line = serialize_trajectory(&t);
    let positions: Vec<usize> = [
        "problem_id",
        "steps",
        "final_answer",
        "generator",
        "seed_meta",
        "raw_text",
    ]
    .iter()
    .map(|k| line.find(&format!("\"{k}\":")).unwrap())
    .collect();
    assert!(positions.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn continuation_sentence_appears_once_per_prefix() {
    let problems = generate_logicasker(4, &[2, 3], 1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    for (i, p) in problems.iter().enumerate() {
        let mut t = synthetic(&mut rng, i);
        if t.steps.is_empty() {
            t.steps.push(Step::new(StepKind::Thought, "start"));
        }
        for n in 1..=t.steps.len() {
            let a = build_completion_prompt(p, &t, n, &PromptOptions::default()).unwrap();
            let b = build_completion_prompt(p, &t, n, &PromptOptions::default()).unwrap();
            assert_eq!(a, b);
            assert_eq!(a.render().matches(CONTINUATION_SENTENCE).count(), 1);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn parsing_is_total_when_a_marker_is_present(
        junk in "[ -~∀∃¬∧∨→()\\n]{0,200}",
        kind in prop::sample::select(vec!["Thought", "action", "OBSERVATION"]),
    ) {
        let raw = format!("{junk}\n{kind}: {junk}\n");
        let t = parse_trajectory(&raw, "p").unwrap();
        prop_assert!(!t.steps.is_empty());
        for s in &t.steps {
            if s.kind == StepKind::Thought {
                prop_assert!(s.formulas.is_empty());
            }
        }
    }
}
