use std::collections::{BTreeMap, HashMap};
use std::path::Path;
use std::process::{Command, Output};

use symtrace_cli::evaluate;
use symtrace_core::problems::{Problem, Source, Statement};
use symtrace_core::trajectory::{Step, StepKind, Trajectory};
use symtrace_core::Label;

const BIN: &str = env!("CARGO_BIN_EXE_symtrace");

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn lines(path: &Path) -> usize {
    std::fs::read_to_string(path).unwrap().lines().count()
}

#[test]
fn three_problems_two_samples_six_traces_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let gen = run(
        d,
        &[
            "gen-problems",
            "--lengths",
            "2",
            "--count",
            "3",
            "--seed",
            "1",
            "--out",
            "p.jsonl",
        ],
    );
    assert!(
        gen.status.success(),
        "{}",
        String::from_utf8_lossy(&gen.stderr)
    );
    assert_eq!(lines(&d.join("p.jsonl")), 3);
    for out in ["a.jsonl", "b.jsonl"] {
        let s = run(
            d,
            &["sample", "--problems", "p.jsonl", "--n", "2", "--out", out],
        );
        assert!(s.status.success(), "{}", String::from_utf8_lossy(&s.stderr));
        assert!(String::from_utf8_lossy(&s.stdout).contains("0 parse failures"));
    }
    assert_eq!(lines(&d.join("a.jsonl")), 6);
    assert_eq!(
        std::fs::read(d.join("a.jsonl")).unwrap(),
        std::fs::read(d.join("b.jsonl")).unwrap()
    );
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(
        d.join("c.json"),
        r#"{"problems": {"lengths": [2], "count": 4, "seed": 3}, "paths": {"problems": "from_config.jsonl"}}"#,
    )
    .unwrap();
    assert!(run(d, &["--config", "c.json", "gen-problems"])
        .status
        .success());
    assert_eq!(lines(&d.join("from_config.jsonl")), 4);
    assert!(run(
        d,
        &[
            "--config",
            "c.json",
            "gen-problems",
            "--count",
            "2",
            "--out",
            "flag.jsonl"
        ]
    )
    .status
    .success());
    assert_eq!(lines(&d.join("flag.jsonl")), 2);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let missing = run(
        d,
        &[
            "evaluate",
            "--traces",
            "none.jsonl",
            "--problems",
            "none.jsonl",
        ],
    );
    assert_eq!(missing.status.code(), Some(1));

    std::fs::write(d.join("bad.json"), r#"{"mc": {"n_samples": 1, "k": 2}}"#).unwrap();
    let bad_config = run(
        d,
        &["--config", "bad.json", "gen-problems", "--out", "x.jsonl"],
    );
    assert_eq!(bad_config.status.code(), Some(1));

    assert!(run(
        d,
        &[
            "gen-problems",
            "--lengths",
            "2",
            "--count",
            "2",
            "--out",
            "p.jsonl"
        ]
    )
    .status
    .success());
    let text = std::fs::read_to_string(d.join("p.jsonl")).unwrap();
    let first = text.lines().next().unwrap();
    std::fs::write(d.join("dup.jsonl"), format!("{first}\n{first}\n")).unwrap();
    std::fs::write(d.join("t.jsonl"), "").unwrap();
    let dup = run(
        d,
        &["evaluate", "--traces", "t.jsonl", "--problems", "dup.jsonl"],
    );
    assert_eq!(dup.status.code(), Some(2));

    let invalid = first
        .replacen(r#""id":""#, r#""id":"x"#, 1)
        .replace(r#""premises":["#, r#""premises":[{"nl":"","fol":null},"#);
    std::fs::write(d.join("invalid.jsonl"), format!("{invalid}\n")).unwrap();
    let inv = run(
        d,
        &[
            "evaluate",
            "--traces",
            "t.jsonl",
            "--problems",
            "invalid.jsonl",
        ],
    );
    assert_eq!(
        inv.status.code(),
        Some(2),
        "{}",
        String::from_utf8_lossy(&inv.stderr)
    );

    let too_long = run(
        d,
        &[
            "gen-problems",
            "--lengths",
            "40",
            "--count",
            "2",
            "--out",
            "y.jsonl",
        ],
    );
    assert_ne!(too_long.status.code(), Some(0));
}

fn problem(id: &str, label: Label) -> Problem {
    Problem {
        id: id.into(),
        source: Source::Folio,
        premises: vec![Statement::nl("A premise.")],
        hypothesis: Statement::nl("A claim."),
        label,
        meta: Default::default(),
        split: None,
    }
}

fn trace(problem: &str, steps: usize, answer: Option<Label>) -> Trajectory {
    Trajectory {
        problem_id: problem.into(),
        steps: (0..steps)
            .map(|i| Step::new(StepKind::Thought, format!("{i}")))
            .collect(),
        final_answer: answer,
        generator: "hand".into(),
        seed_meta: BTreeMap::new(),
        raw_text: String::new(),
    }
}

#[test]
fn evaluate_hand_counts() {
    let problems: HashMap<String, Problem> = [
        ("a".to_string(), problem("a", Label::True)),
        ("b".to_string(), problem("b", Label::False)),
    ]
    .into();
    let trajs = vec![
        trace("a", 2, Some(Label::True)),
        trace("a", 4, Some(Label::True)),
        trace("b", 3, Some(Label::False)),
        trace("b", 5, Some(Label::True)),
    ];
    let e = evaluate(&trajs, &problems).unwrap();
    assert_eq!(e.accuracy(), 0.75);
    assert_eq!(e.mean_steps(), 3.5);
    assert_eq!(e.confusion[&("False".to_string(), "True".to_string())], 1);

    let unanswered = evaluate(&[trace("a", 1, None)], &problems).unwrap();
    assert_eq!(unanswered.accuracy(), 0.0);
    assert_eq!(
        unanswered.confusion[&("True".to_string(), "none".to_string())],
        1
    );

    let all = evaluate(&trajs[..3], &problems).unwrap();
    assert_eq!(all.accuracy(), 1.0);
    assert!(evaluate(&[trace("zzz", 1, None)], &problems).is_err());
}
