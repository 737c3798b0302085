//! Inference-rule catalog and step verification.
//!
//! Every rule takes at most two input formulas. Equivalence rewrites
//! (De Morgan, double negation, quantifier negation, implication as
//! disjunction) may fire at any subformula position; the `choice` binding
//! selects which site, in pre-order.

mod sample;
mod verify;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fol::{substitute, Formula, Term};

pub use sample::sample_application;
pub use verify::{
    classify_action, verify_step, verify_trajectory, ActionRole, StepVerdict, VerdictStatus,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Rule {
    UniversalInstantiation,
    ExistentialInstantiation,
    QuantifierNegation,
    DeMorgan,
    DoubleNegation,
    ImplicationToDisjunction,
    DisjunctionIntroduction,
    ModusPonens,
    ConjunctionElim,
    ConjunctionIntro,
    CaseAnalysis,
}

impl Rule {
    pub const ALL: [Rule; 11] = [
        Rule::UniversalInstantiation,
        Rule::ExistentialInstantiation,
        Rule::QuantifierNegation,
        Rule::DeMorgan,
        Rule::DoubleNegation,
        Rule::ImplicationToDisjunction,
        Rule::DisjunctionIntroduction,
        Rule::ModusPonens,
        Rule::ConjunctionElim,
        Rule::ConjunctionIntro,
        Rule::CaseAnalysis,
    ];

    /// Number of input formulas the rule consumes.
    pub fn arity(self) -> usize {
        match self {
            Rule::ModusPonens | Rule::ConjunctionIntro | Rule::CaseAnalysis => 2,
            _ => 1,
        }
    }

    fn is_rewrite(self) -> bool {
        matches!(
            self,
            Rule::QuantifierNegation
                | Rule::DeMorgan
                | Rule::DoubleNegation
                | Rule::ImplicationToDisjunction
        )
    }

    /// Maps free-text action descriptions to a rule by keyword.
    pub fn from_action_text(text: &str) -> Option<Rule> {
        let t = text.to_lowercase();
        let has = |k: &str| t.contains(k);
        if has("existential instantiation") || (has("instantiat") && has("existential")) {
            Some(Rule::ExistentialInstantiation)
        } else if has("instantiat") {
            Some(Rule::UniversalInstantiation)
        } else if has("quantifier negation") || (has("negation") && has("quantifier")) {
            Some(Rule::QuantifierNegation)
        } else if has("de morgan") || has("demorgan") {
            Some(Rule::DeMorgan)
        } else if has("double negation") {
            Some(Rule::DoubleNegation)
        } else if has("material implication") || (has("implication") && has("disjunction")) {
            Some(Rule::ImplicationToDisjunction)
        } else if has("disjunction") && (has("introduc") || has("addition")) {
            Some(Rule::DisjunctionIntroduction)
        } else if has("modus ponens") {
            Some(Rule::ModusPonens)
        } else if has("conjunction elimination") || has("simplification") {
            Some(Rule::ConjunctionElim)
        } else if has("conjunction introduction") || has("conjoin") {
            Some(Rule::ConjunctionIntro)
        } else if has("case analysis") || has("cases") || has("proof by case") {
            Some(Rule::CaseAnalysis)
        } else {
            None
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Rule parameters that the inputs alone do not determine.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bindings {
    /// Quantified variable to instantiating constant.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub terms: BTreeMap<String, Term>,
    /// The new disjunct for disjunction introduction.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub disjunct: Option<Formula>,
    /// Which alternative conclusion to take: the conjunct for elimination,
    /// the side for disjunction introduction, or the rewrite site.
    #[serde(default)]
    pub choice: usize,
}

impl Bindings {
    pub fn term(var: &str, t: Term) -> Self {
        Bindings {
            terms: BTreeMap::from([(var.to_string(), t)]),
            ..Default::default()
        }
    }

    pub fn choice(choice: usize) -> Self {
        Bindings {
            choice,
            ..Default::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleApplication {
    pub rule: Rule,
    pub inputs: Vec<Formula>,
    pub output: Formula,
    pub bindings: Bindings,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum RuleError {
    #[error("{rule} does not apply: {reason}")]
    SchemaMismatch { rule: Rule, reason: String },
}

fn mismatch(rule: Rule, reason: impl Into<String>) -> RuleError {
    RuleError::SchemaMismatch {
        rule,
        reason: reason.into(),
    }
}

/// Computes the conclusion of `rule` on `inputs`.
pub fn apply_rule(
    rule: Rule,
    inputs: &[Formula],
    bindings: &Bindings,
) -> Result<Formula, RuleError> {
    if inputs.len() != rule.arity() {
        return Err(mismatch(
            rule,
            format!("expected {} input(s), got {}", rule.arity(), inputs.len()),
        ));
    }
    match rule {
        Rule::UniversalInstantiation | Rule::ExistentialInstantiation => {
            let (var, body) = match (&inputs[0], rule) {
                (Formula::ForAll { var, body }, Rule::UniversalInstantiation)
                | (Formula::Exists { var, body }, Rule::ExistentialInstantiation) => (var, body),
                _ => {
                    return Err(mismatch(
                        rule,
                        "input is not of the required quantified form",
                    ))
                }
            };
            let term = match bindings.terms.get(var) {
                Some(t) => t.clone(),
                None if rule == Rule::ExistentialInstantiation => {
                    Term::Constant(fresh_constant(inputs))
                }
                None if !crate::fol::free_vars(body).contains(var) => return Ok((**body).clone()),
                None => return Err(mismatch(rule, format!("no binding for `{var}`"))),
            };
            if rule == Rule::ExistentialInstantiation {
                match &term {
                    Term::Constant(c) if inputs.iter().any(|f| f.constants().contains(c)) => {
                        return Err(mismatch(rule, format!("witness `{c}` is not fresh")))
                    }
                    Term::Variable(_) => return Err(mismatch(rule, "witness must be a constant")),
                    _ => {}
                }
            }
            substitute(body, var, &term).map_err(|e| mismatch(rule, e.to_string()))
        }
        Rule::QuantifierNegation
        | Rule::DeMorgan
        | Rule::DoubleNegation
        | Rule::ImplicationToDisjunction => {
            let sites = rewrite_sites(rule, &inputs[0]);
            if sites.is_empty() {
                return Err(mismatch(rule, "no subformula matches the rewrite"));
            }
            sites
                .into_iter()
                .nth(bindings.choice)
                .ok_or_else(|| mismatch(rule, format!("no rewrite site {}", bindings.choice)))
        }
        Rule::DisjunctionIntroduction => {
            let extra = bindings
                .disjunct
                .clone()
                .ok_or_else(|| mismatch(rule, "no disjunct to introduce"))?;
            Ok(match bindings.choice {
                0 => Formula::or(inputs[0].clone(), extra),
                _ => Formula::or(extra, inputs[0].clone()),
            })
        }
        Rule::ModusPonens => {
            for (imp, ante) in [(&inputs[0], &inputs[1]), (&inputs[1], &inputs[0])] {
                if let Formula::Implies(a, b) = imp {
                    if **a == *ante {
                        return Ok((**b).clone());
                    }
                }
            }
            Err(mismatch(
                rule,
                "no implication whose antecedent is the other input",
            ))
        }
        Rule::ConjunctionElim => match &inputs[0] {
            Formula::And(l, r) => Ok(if bindings.choice == 0 {
                (**l).clone()
            } else {
                (**r).clone()
            }),
            _ => Err(mismatch(rule, "input is not a conjunction")),
        },
        Rule::ConjunctionIntro => Ok(Formula::and(inputs[0].clone(), inputs[1].clone())),
        Rule::CaseAnalysis => match (&inputs[0], &inputs[1]) {
            (Formula::Implies(a, c1), Formula::Implies(b, c2)) if c1 == c2 => Ok(Formula::implies(
                Formula::or((**a).clone(), (**b).clone()),
                (**c1).clone(),
            )),
            _ => Err(mismatch(
                rule,
                "inputs are not two implications with a shared consequent",
            )),
        },
    }
}

/// First `c<n>` constant name not occurring in any input.
fn fresh_constant(inputs: &[Formula]) -> String {
    let used: std::collections::BTreeSet<String> =
        inputs.iter().flat_map(|f| f.constants()).collect();
    (1..)
        .map(|n| format!("c{n}"))
        .find(|c| !used.contains(c))
        .expect("unbounded supply")
}

/// Rewrites applicable at the root of `f`, in a fixed order.
fn local_rewrites(rule: Rule, f: &Formula) -> Vec<Formula> {
    let mut out = Vec::new();
    match rule {
        Rule::QuantifierNegation => {
            if let Formula::Not(g) = f {
                match &**g {
                    Formula::Exists { var, body } => {
                        out.push(Formula::forall(var.clone(), Formula::not((**body).clone())))
                    }
                    Formula::ForAll { var, body } => {
                        out.push(Formula::exists(var.clone(), Formula::not((**body).clone())))
                    }
                    _ => {}
                }
            }
            match f {
                Formula::ForAll { var, body } => {
                    if let Formula::Not(inner) = &**body {
                        out.push(Formula::not(Formula::exists(
                            var.clone(),
                            (**inner).clone(),
                        )));
                    }
                }
                Formula::Exists { var, body } => {
                    if let Formula::Not(inner) = &**body {
                        out.push(Formula::not(Formula::forall(
                            var.clone(),
                            (**inner).clone(),
                        )));
                    }
                }
                _ => {}
            }
        }
        Rule::DeMorgan => {
            if let Formula::Not(g) = f {
                match &**g {
                    Formula::Or(a, b) => out.push(Formula::and(
                        Formula::not((**a).clone()),
                        Formula::not((**b).clone()),
                    )),
                    Formula::And(a, b) => out.push(Formula::or(
                        Formula::not((**a).clone()),
                        Formula::not((**b).clone()),
                    )),
                    _ => {}
                }
            }
            match f {
                Formula::And(a, b) => {
                    if let (Formula::Not(x), Formula::Not(y)) = (&**a, &**b) {
                        out.push(Formula::not(Formula::or((**x).clone(), (**y).clone())));
                    }
                }
                Formula::Or(a, b) => {
                    if let (Formula::Not(x), Formula::Not(y)) = (&**a, &**b) {
                        out.push(Formula::not(Formula::and((**x).clone(), (**y).clone())));
                    }
                }
                _ => {}
            }
        }
        Rule::DoubleNegation => {
            if let Formula::Not(g) = f {
                if let Formula::Not(inner) = &**g {
                    out.push((**inner).clone());
                }
            }
        }
        Rule::ImplicationToDisjunction => match f {
            Formula::Implies(a, b) => {
                out.push(Formula::or(Formula::not((**a).clone()), (**b).clone()))
            }
            Formula::Or(a, b) => {
                if let Formula::Not(x) = &**a {
                    out.push(Formula::implies((**x).clone(), (**b).clone()));
                }
            }
            _ => {}
        },
        _ => {}
    }
    out
}

/// All single-site rewrites of `f` under an equivalence rule, root first,
/// then children left to right.
pub fn rewrite_sites(rule: Rule, f: &Formula) -> Vec<Formula> {
    debug_assert!(rule.is_rewrite());
    let mut out = local_rewrites(rule, f);
    match f {
        Formula::Pred { .. } => {}
        Formula::Not(g) => out.extend(rewrite_sites(rule, g).into_iter().map(Formula::not)),
        Formula::ForAll { var, body } | Formula::Exists { var, body } => {
            let (q, _, _) = f.as_quantified().expect("quantifier");
            out.extend(
                rewrite_sites(rule, body)
                    .into_iter()
                    .map(|b| Formula::quantified(q, var.clone(), b)),
            );
        }
        _ => {
            let (op, l, r) = f.as_binary().expect("binary node");
            out.extend(
                rewrite_sites(rule, l)
                    .into_iter()
                    .map(|nl| Formula::binary(op, nl, r.clone())),
            );
            out.extend(
                rewrite_sites(rule, r)
                    .into_iter()
                    .map(|nr| Formula::binary(op, l.clone(), nr)),
            );
        }
    }
    out
}

/// Candidate bindings that could make `rule` on `inputs` produce `claimed`.
fn candidate_bindings(
    rule: Rule,
    inputs: &[&Formula],
    claimed: &Formula,
    context: &[Formula],
) -> Vec<Bindings> {
    match rule {
        Rule::UniversalInstantiation => {
            let Some((_, var, _)) = inputs[0].as_quantified() else {
                return Vec::new();
            };
            let mut out: Vec<Bindings> = claimed
                .constants()
                .into_iter()
                .map(|c| Bindings::term(var, Term::Constant(c)))
                .collect();
            out.push(Bindings::default());
            out
        }
        Rule::ExistentialInstantiation => {
            let Some((_, var, body)) = inputs[0].as_quantified() else {
                return Vec::new();
            };
            let mut out: Vec<Bindings> = claimed
                .constants()
                .into_iter()
                .filter(|c| !context.iter().any(|f| f.constants().contains(c)))
                .map(|c| Bindings::term(var, Term::Constant(c)))
                .collect();
            if !crate::fol::free_vars(body).contains(var) {
                out.push(Bindings::default());
            }
            out
        }
        Rule::QuantifierNegation
        | Rule::DeMorgan
        | Rule::DoubleNegation
        | Rule::ImplicationToDisjunction => rewrite_sites(rule, inputs[0])
            .iter()
            .position(|s| s == claimed)
            .map(Bindings::choice)
            .into_iter()
            .collect(),
        Rule::DisjunctionIntroduction => {
            let mut out = Vec::new();
            if let Formula::Or(l, r) = claimed {
                if **l == *inputs[0] {
                    out.push(Bindings {
                        disjunct: Some((**r).clone()),
                        ..Default::default()
                    });
                }
                if **r == *inputs[0] {
                    out.push(Bindings {
                        disjunct: Some((**l).clone()),
                        choice: 1,
                        ..Default::default()
                    });
                }
            }
            out
        }
        Rule::ConjunctionElim => vec![Bindings::choice(0), Bindings::choice(1)],
        _ => vec![Bindings::default()],
    }
}

/// Searches `context` (single formulas and ordered pairs) for an application
/// of `rule` whose conclusion is exactly `claimed`.
pub fn find_application(
    rule: Rule,
    context: &[Formula],
    claimed: &Formula,
) -> Option<RuleApplication> {
    let try_inputs = |inputs: Vec<&Formula>| -> Option<RuleApplication> {
        for bindings in candidate_bindings(rule, &inputs, claimed, context) {
            let owned: Vec<Formula> = inputs.iter().map(|f| (*f).clone()).collect();
            if let Ok(out) = apply_rule(rule, &owned, &bindings) {
                if out == *claimed {
                    return Some(RuleApplication {
                        rule,
                        inputs: owned,
                        output: out,
                        bindings,
                    });
                }
            }
        }
        None
    };
    match rule.arity() {
        1 => context.iter().find_map(|f| try_inputs(vec![f])),
        _ => context.iter().enumerate().find_map(|(i, a)| {
            context
                .iter()
                .enumerate()
                .filter(|&(j, _)| rule == Rule::ConjunctionIntro || i != j)
                .find_map(|(_, b)| try_inputs(vec![a, b]))
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fol::parse_formula;

    fn p(text: &str) -> Formula {
        parse_formula(text).unwrap()
    }

    #[test]
    fn universal_instantiation_with_binding() {
        let out = apply_rule(
            Rule::UniversalInstantiation,
            &[p("∀x (Drinks(x) → Dependent(x))")],
            &Bindings::term("x", Term::constant("rina")),
        )
        .unwrap();
        assert_eq!(out, p("Drinks(rina) → Dependent(rina)"));
    }

    #[test]
    fn double_negation() {
        let out = apply_rule(
            Rule::DoubleNegation,
            &[p("¬¬Jokes(rina)")],
            &Bindings::default(),
        )
        .unwrap();
        assert_eq!(out, p("Jokes(rina)"));
    }

    #[test]
    fn de_morgan_over_disjunction() {
        let out = apply_rule(
            Rule::DeMorgan,
            &[p("¬(¬Jokes(rina) ∨ Unaware(rina))")],
            &Bindings::default(),
        )
        .unwrap();
        assert_eq!(out, p("¬¬Jokes(rina) ∧ ¬Unaware(rina)"));
    }

    #[test]
    fn quantifier_negation_pushes_inward() {
        let out = apply_rule(
            Rule::QuantifierNegation,
            &[p("¬∃x (Jokes(x) → Unaware(x))")],
            &Bindings::default(),
        )
        .unwrap();
        assert_eq!(out, p("∀x ¬(Jokes(x) → Unaware(x))"));
    }

    #[test]
    fn implication_rewrite_under_negation() {
        let out = apply_rule(
            Rule::ImplicationToDisjunction,
            &[p("¬(Jokes(rina) → Unaware(rina))")],
            &Bindings::default(),
        )
        .unwrap();
        assert_eq!(out, p("¬(¬Jokes(rina) ∨ Unaware(rina))"));
    }

    #[test]
    fn modus_ponens_either_order() {
        let imp = p("P(a) → Q(a)");
        let ante = p("P(a)");
        for inputs in [[imp.clone(), ante.clone()], [ante.clone(), imp.clone()]] {
            assert_eq!(
                apply_rule(Rule::ModusPonens, &inputs, &Bindings::default()).unwrap(),
                p("Q(a)")
            );
        }
    }

    #[test]
    fn case_analysis_builds_disjunctive_antecedent() {
        let out = apply_rule(
            Rule::CaseAnalysis,
            &[p("Cook(w) → Squash(w)"), p("Tea(w) → Squash(w)")],
            &Bindings::default(),
        )
        .unwrap();
        assert_eq!(out, p("Cook(w) ∨ Tea(w) → Squash(w)"));
    }

    #[test]
    fn existential_instantiation_requires_fresh_witness() {
        let input = [p("∃x P(x) ∧ Q(a)")];
        let err = apply_rule(
            Rule::ExistentialInstantiation,
            &input,
            &Bindings::term("x", Term::constant("a")),
        )
        .unwrap_err();
        assert!(matches!(err, RuleError::SchemaMismatch { .. }));
        let out = apply_rule(Rule::ExistentialInstantiation, &input, &Bindings::default()).unwrap();
        assert_eq!(out, p("P(c1) ∧ Q(a)"));
    }

    #[test]
    fn schema_mismatches() {
        let d = Bindings::default();
        assert!(apply_rule(Rule::ModusPonens, &[p("P(a)"), p("Q(a)")], &d).is_err());
        assert!(apply_rule(Rule::ModusPonens, &[p("P(a)")], &d).is_err());
        assert!(apply_rule(Rule::ConjunctionElim, &[p("P(a) ∨ Q(a)")], &d).is_err());
        assert!(apply_rule(Rule::DeMorgan, &[p("P(a)")], &d).is_err());
        assert!(apply_rule(Rule::DisjunctionIntroduction, &[p("P(a)")], &d).is_err());
        assert!(apply_rule(Rule::UniversalInstantiation, &[p("∃x P(x)")], &d).is_err());
        assert!(apply_rule(Rule::UniversalInstantiation, &[p("∀x P(x)")], &d).is_err());
        assert!(apply_rule(
            Rule::CaseAnalysis,
            &[p("P(a) → R(a)"), p("Q(a) → S(a)")],
            &d
        )
        .is_err());
    }

    #[test]
    fn search_finds_modus_ponens() {
        let ctx = [p("P(a) → Q(a)"), p("P(a)")];
        let app = find_application(Rule::ModusPonens, &ctx, &p("Q(a)")).unwrap();
        assert_eq!(app.output, p("Q(a)"));
    }

    #[test]
    fn search_finds_disjunction_introduction() {
        let ctx = [p("Jokes(rina)")];
        let app = find_application(
            Rule::DisjunctionIntroduction,
            &ctx,
            &p("Jokes(rina) ∨ Unaware(rina)"),
        )
        .unwrap();
        assert_eq!(app.bindings.disjunct, Some(p("Unaware(rina)")));
        let flipped = find_application(
            Rule::DisjunctionIntroduction,
            &ctx,
            &p("Unaware(rina) ∨ Jokes(rina)"),
        )
        .unwrap();
        assert_eq!(flipped.bindings.choice, 1);
    }

    #[test]
    fn action_keywords() {
        let cases = [
            (
                "Apply De Morgan's Laws on ¬(¬Jokes(rina) ∨ Unaware(rina))",
                Some(Rule::DeMorgan),
            ),
            (
                "Apply double negation on ¬(¬Jokes(rina))",
                Some(Rule::DoubleNegation),
            ),
            (
                "Apply the law of quantifier negation on the third formula",
                Some(Rule::QuantifierNegation),
            ),
            (
                "Apply instantiation on the formulas which have universial quantifiers.",
                Some(Rule::UniversalInstantiation),
            ),
            (
                "Apply existential instantiation with a fresh constant",
                Some(Rule::ExistentialInstantiation),
            ),
            (
                "Rewrite the implication in ¬(Jokes(rina) → Unaware(rina)) with disjunction",
                Some(Rule::ImplicationToDisjunction),
            ),
            (
                "Given that Jokes(rina) is true, any disjunction we introduce is also true.",
                Some(Rule::DisjunctionIntroduction),
            ),
            ("Apply modus ponens", Some(Rule::ModusPonens)),
            (
                "Consider both cases of the disjunction",
                Some(Rule::CaseAnalysis),
            ),
            ("Define predicates", None),
        ];
        for (text, expected) in cases {
            assert_eq!(Rule::from_action_text(text), expected, "{text}");
        }
    }
}
