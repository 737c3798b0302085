//! Soundness of the rule catalog against the finite-model oracle, and the
//! verifier's agreement with it.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use symtrace_core::fol::{Formula, FormulaSampler};
use symtrace_core::rules::{
    apply_rule, sample_application, verify_step, Rule, RuleApplication, VerdictStatus,
};
use symtrace_core::semantics::entails;
use symtrace_core::Label;

fn sampler() -> FormulaSampler {
    FormulaSampler::new(&[("P", 1), ("Q", 1), ("R", 2)], &["a", "b"], 3)
}

/// The formula the inputs must entail: the output itself, or for existential
/// instantiation the output with its fresh witness re-quantified.
fn entailed_target(app: &RuleApplication) -> Formula {
    if app.rule != Rule::ExistentialInstantiation {
        return app.output.clone();
    }
    let before: BTreeSet<String> = app.inputs.iter().flat_map(|f| f.constants()).collect();
    let fresh: Vec<String> = app
        .output
        .constants()
        .difference(&before)
        .cloned()
        .collect();
    match fresh.first() {
        Some(c) => Formula::exists("v", app.output.abstract_constant(c, "v")),
        None => app.output.clone(),
    }
}

#[test]
fn every_rule_is_sound_on_random_applications() {
    let s = sampler();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for rule in Rule::ALL {
        for _ in 0..500 {
            let app = sample_application(rule, &s, &mut rng);
            let target = entailed_target(&app);
            let e = entails(&app.inputs, &target, 3).unwrap();
            assert!(
                e.verdict == Label::True || e.unsatisfiable_premises,
                "{rule}: {:?} ⊬ {target}",
                app.inputs
            );
        }
    }
}

#[test]
fn existential_witness_is_fresh() {
    let s = sampler();
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for _ in 0..200 {
        let app = sample_application(Rule::ExistentialInstantiation, &s, &mut rng);
        let before: BTreeSet<String> = app.inputs.iter().flat_map(|f| f.constants()).collect();
        let introduced: BTreeSet<String> = app
            .output
            .constants()
            .difference(&before)
            .cloned()
            .collect();
        assert!(introduced.len() <= 1);
    }
}

#[test]
fn apply_then_verify_finds_the_rule() {
    let s = sampler();
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for rule in Rule::ALL {
        for _ in 0..100 {
            let app = sample_application(rule, &s, &mut rng);
            let v = verify_step(&app.inputs, &app.output, Some(rule));
            assert_eq!(v.status, VerdictStatus::VerifiedByRule, "{rule}: {app:?}");
            let found = v.rule.unwrap();
            assert_eq!(found.rule, rule);
            assert_eq!(found.output, app.output);
        }
    }
}

#[test]
fn apply_rule_is_deterministic() {
    let s = sampler();
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    for rule in Rule::ALL {
        for _ in 0..50 {
            let app = sample_application(rule, &s, &mut rng);
            assert_eq!(
                apply_rule(rule, &app.inputs, &app.bindings).unwrap(),
                app.output
            );
        }
    }
}

#[test]
fn rule_verdicts_never_contradict_the_oracle() {
    let s = sampler();
    let mut rng = ChaCha8Rng::seed_from_u64(25);
    let mut by_rule = 0;
    for i in 0..400 {
        let rule = Rule::ALL[i % Rule::ALL.len()];
        let app = sample_application(rule, &s, &mut rng);
        let mut context = app.inputs.clone();
        for _ in 0..rng.gen_range(0..2) {
            context.push(s.sample(&mut rng));
        }
        let claimed = if rng.gen_bool(0.5) {
            app.output.clone()
        } else {
            s.sample(&mut rng)
        };
        let hint = if rng.gen_bool(0.5) { Some(rule) } else { None };
        let v = verify_step(&context, &claimed, hint);
        if v.status == VerdictStatus::VerifiedByRule {
            by_rule += 1;
            let e = entails(&context, &claimed, 3).unwrap();
            assert_ne!(e.verdict, Label::False, "{context:?} ⊢ {claimed}");
        }
    }
    assert!(by_rule > 100);
}
