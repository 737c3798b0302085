use rand::seq::SliceRandom;
use rand::Rng;

use super::{apply_rule, rewrite_sites, Bindings, Rule, RuleApplication};
use crate::fol::{BinaryOp, Formula, FormulaSampler, Term};

/// Variable used for instantiation inputs; distinct from the sampler's own.
const WITNESS_VAR: &str = "w";

fn embed<R: Rng>(core: Formula, sampler: &FormulaSampler, rng: &mut R) -> Formula {
    if rng.gen_bool(0.5) {
        return core;
    }
    let other = sampler.sample(rng);
    let op = *[
        BinaryOp::And,
        BinaryOp::Or,
        BinaryOp::Implies,
        BinaryOp::Iff,
    ]
    .choose(rng)
    .expect("ops");
    if rng.gen_bool(0.5) {
        Formula::binary(op, core, other)
    } else {
        Formula::binary(op, other, core)
    }
}

/// A formula with at least one site where `rule` rewrites.
fn rewritable<R: Rng>(rule: Rule, s: &FormulaSampler, rng: &mut R) -> Formula {
    let (a, b) = (s.sample(rng), s.sample(rng));
    let core = match (rule, rng.gen_range(0..4)) {
        (Rule::QuantifierNegation, k) => {
            let body = abstract_some_constant(&a);
            match k {
                0 => Formula::not(Formula::exists(WITNESS_VAR, body)),
                1 => Formula::not(Formula::forall(WITNESS_VAR, body)),
                2 => Formula::forall(WITNESS_VAR, Formula::not(body)),
                _ => Formula::exists(WITNESS_VAR, Formula::not(body)),
            }
        }
        (Rule::DeMorgan, k) => match k {
            0 => Formula::not(Formula::or(a, b)),
            1 => Formula::not(Formula::and(a, b)),
            2 => Formula::and(Formula::not(a), Formula::not(b)),
            _ => Formula::or(Formula::not(a), Formula::not(b)),
        },
        (Rule::DoubleNegation, _) => Formula::not(Formula::not(a)),
        (_, k) if k % 2 == 0 => Formula::implies(a, b),
        _ => Formula::or(Formula::not(a), b),
    };
    embed(core, s, rng)
}

fn abstract_some_constant(f: &Formula) -> Formula {
    match f.constants().into_iter().next() {
        Some(c) => f.abstract_constant(&c, WITNESS_VAR),
        None => f.clone(),
    }
}

/// A random well-formed application of `rule` over the sampler's signature.
pub fn sample_application<R: Rng>(rule: Rule, s: &FormulaSampler, rng: &mut R) -> RuleApplication {
    let (inputs, bindings) = match rule {
        Rule::UniversalInstantiation | Rule::ExistentialInstantiation => {
            let body = abstract_some_constant(&s.sample(rng));
            let input = if rule == Rule::UniversalInstantiation {
                Formula::forall(WITNESS_VAR, body)
            } else {
                Formula::exists(WITNESS_VAR, body)
            };
            let bindings = match (rule, s.constants.choose(rng)) {
                (Rule::UniversalInstantiation, Some(c)) => {
                    Bindings::term(WITNESS_VAR, Term::constant(c.clone()))
                }
                _ => Bindings::default(),
            };
            (vec![input], bindings)
        }
        Rule::QuantifierNegation
        | Rule::DeMorgan
        | Rule::DoubleNegation
        | Rule::ImplicationToDisjunction => {
            let input = rewritable(rule, s, rng);
            let sites = rewrite_sites(rule, &input).len();
            (vec![input], Bindings::choice(rng.gen_range(0..sites)))
        }
        Rule::DisjunctionIntroduction => (
            vec![s.sample(rng)],
            Bindings {
                disjunct: Some(s.sample(rng)),
                choice: rng.gen_range(0..2),
                ..Default::default()
            },
        ),
        Rule::ModusPonens => {
            let (a, b) = (s.sample(rng), s.sample(rng));
            let mut inputs = vec![Formula::implies(a.clone(), b), a];
            inputs.shuffle(rng);
            (inputs, Bindings::default())
        }
        Rule::ConjunctionElim => (
            vec![Formula::and(s.sample(rng), s.sample(rng))],
            Bindings::choice(rng.gen_range(0..2)),
        ),
        Rule::ConjunctionIntro => (vec![s.sample(rng), s.sample(rng)], Bindings::default()),
        Rule::CaseAnalysis => {
            let c = s.sample(rng);
            (
                vec![
                    Formula::implies(s.sample(rng), c.clone()),
                    Formula::implies(s.sample(rng), c),
                ],
                Bindings::default(),
            )
        }
    };
    let output = apply_rule(rule, &inputs, &bindings).expect("sampled inputs fit the schema");
    RuleApplication {
        rule,
        inputs,
        output,
        bindings,
    }
}
