//! Finite-model semantics: Tarskian evaluation and bounded entailment.
//!
//! [`entails`] searches every interpretation over domains of size
//! `1..=max_domain`. Each (domain size, constant assignment) pair is grounded
//! into a propositional CNF and decided exactly, so the verdict is the same as
//! enumerating predicate tables one by one, without materialising them.

mod sat;

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fol::{free_vars, signature, ArityError, Formula, Term};
use crate::label::Label;
use sat::{Budget, Cnf, Lit};

/// Default cap on explored search nodes for one entailment query.
pub const DEFAULT_BUDGET: u64 = 10_000_000;

/// Domain bound used wherever a caller does not choose one.
pub const DEFAULT_MAX_DOMAIN: usize = 3;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum SemanticsError {
    #[error("{kind} `{name}` has no interpretation")]
    MissingSymbol { kind: &'static str, name: String },
    #[error("formula is not closed; free variables: {0:?}")]
    OpenFormula(BTreeSet<String>),
    #[error(transparent)]
    Arity(#[from] ArityError),
    #[error("entailment search exceeded its budget of {cap} nodes")]
    BudgetExceeded { cap: u64 },
    #[error("domain must contain at least one element")]
    EmptyDomain,
}

/// A finite structure: elements `0..domain.len()`, predicate extensions and
/// constant denotations.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Interpretation {
    pub domain: Vec<usize>,
    pub predicates: BTreeMap<String, BTreeSet<Vec<usize>>>,
    pub constants: BTreeMap<String, usize>,
}

impl Interpretation {
    pub fn with_domain(size: usize) -> Self {
        Interpretation {
            domain: (0..size).collect(),
            ..Default::default()
        }
    }

    pub fn set_constant(&mut self, name: &str, element: usize) -> &mut Self {
        self.constants.insert(name.to_string(), element);
        self
    }

    /// Declares `name` (possibly with an empty extension) and adds tuples.
    pub fn extend<I>(&mut self, name: &str, tuples: I) -> &mut Self
    where
        I: IntoIterator<Item = Vec<usize>>,
    {
        self.predicates
            .entry(name.to_string())
            .or_default()
            .extend(tuples);
        self
    }

    /// A uniformly random interpretation of the given signature.
    pub fn random<R: Rng>(
        predicates: &BTreeMap<String, usize>,
        constants: &BTreeSet<String>,
        size: usize,
        rng: &mut R,
    ) -> Self {
        let mut m = Interpretation::with_domain(size.max(1));
        for c in constants {
            let e = rng.gen_range(0..m.domain.len());
            m.set_constant(c, e);
        }
        for (name, &arity) in predicates {
            let tuples: Vec<Vec<usize>> = tuples(m.domain.len(), arity)
                .into_iter()
                .filter(|_| rng.gen_bool(0.5))
                .collect();
            m.extend(name, tuples);
        }
        m
    }
}

/// All argument tuples of length `arity` over `0..size`, in lexicographic order.
fn tuples(size: usize, arity: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for _ in 0..arity {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (0..size).map(move |e| {
                    let mut t = prefix.clone();
                    t.push(e);
                    t
                })
            })
            .collect();
    }
    out
}

/// Truth value of a closed formula in `m`.
pub fn eval(f: &Formula, m: &Interpretation) -> Result<bool, SemanticsError> {
    let free = free_vars(f);
    if !free.is_empty() {
        return Err(SemanticsError::OpenFormula(free));
    }
    if m.domain.is_empty() {
        return Err(SemanticsError::EmptyDomain);
    }
    eval_in(f, m, &mut Vec::new())
}

fn eval_in(
    f: &Formula,
    m: &Interpretation,
    env: &mut Vec<(String, usize)>,
) -> Result<bool, SemanticsError> {
    Ok(match f {
        Formula::Pred { name, args } => {
            let table = m
                .predicates
                .get(name)
                .ok_or_else(|| SemanticsError::MissingSymbol {
                    kind: "predicate",
                    name: name.clone(),
                })?;
            let mut tuple = Vec::with_capacity(args.len());
            for t in args {
                tuple.push(denote(t, m, env)?);
            }
            table.contains(&tuple)
        }
        Formula::Not(g) => !eval_in(g, m, env)?,
        Formula::And(l, r) => eval_in(l, m, env)? && eval_in(r, m, env)?,
        Formula::Or(l, r) => eval_in(l, m, env)? || eval_in(r, m, env)?,
        Formula::Xor(l, r) => eval_in(l, m, env)? != eval_in(r, m, env)?,
        Formula::Implies(l, r) => !eval_in(l, m, env)? || eval_in(r, m, env)?,
        Formula::Iff(l, r) => eval_in(l, m, env)? == eval_in(r, m, env)?,
        Formula::ForAll { var, body } | Formula::Exists { var, body } => {
            let universal = matches!(f, Formula::ForAll { .. });
            for &e in &m.domain {
                env.push((var.clone(), e));
                let v = eval_in(body, m, env);
                env.pop();
                if v? != universal {
                    return Ok(!universal);
                }
            }
            universal
        }
    })
}

fn denote(t: &Term, m: &Interpretation, env: &[(String, usize)]) -> Result<usize, SemanticsError> {
    match t {
        Term::Variable(v) => env
            .iter()
            .rev()
            .find(|(name, _)| name == v)
            .map(|&(_, e)| e)
            .ok_or_else(|| SemanticsError::OpenFormula(BTreeSet::from([v.clone()]))),
        Term::Constant(c) => {
            m.constants
                .get(c)
                .copied()
                .ok_or_else(|| SemanticsError::MissingSymbol {
                    kind: "constant",
                    name: c.clone(),
                })
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EntailmentOptions {
    /// Largest domain searched; `None` means `max(3, #constants)`.
    pub max_domain: Option<usize>,
    pub budget: u64,
}

impl Default for EntailmentOptions {
    fn default() -> Self {
        EntailmentOptions {
            max_domain: None,
            budget: DEFAULT_BUDGET,
        }
    }
}

/// Outcome of a bounded entailment query. `max_domain` is recorded so that
/// downstream consumers can audit how far the search went.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Entailment {
    pub verdict: Label,
    pub max_domain: usize,
    pub unsatisfiable_premises: bool,
    pub nodes: u64,
}

/// Bounded entailment with the given domain bound and the default budget.
pub fn entails(
    premises: &[Formula],
    hypothesis: &Formula,
    max_domain: usize,
) -> Result<Entailment, SemanticsError> {
    entails_with(
        premises,
        hypothesis,
        &EntailmentOptions {
            max_domain: Some(max_domain),
            ..Default::default()
        },
    )
}

/// Default domain bound for a formula set: `max(3, #constants)`.
pub fn default_domain_bound<'a>(formulas: impl IntoIterator<Item = &'a Formula>) -> usize {
    let constants: BTreeSet<String> = formulas.into_iter().flat_map(|f| f.constants()).collect();
    DEFAULT_MAX_DOMAIN.max(constants.len())
}

pub fn entails_with(
    premises: &[Formula],
    hypothesis: &Formula,
    opts: &EntailmentOptions,
) -> Result<Entailment, SemanticsError> {
    let all: Vec<&Formula> = premises.iter().chain(std::iter::once(hypothesis)).collect();
    for f in &all {
        let free = free_vars(f);
        if !free.is_empty() {
            return Err(SemanticsError::OpenFormula(free));
        }
    }
    let preds = signature(all.iter().copied())?;
    let constants: Vec<String> = all
        .iter()
        .flat_map(|f| f.constants())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let max_domain = opts
        .max_domain
        .unwrap_or_else(|| DEFAULT_MAX_DOMAIN.max(constants.len()))
        .max(1);

    let mut budget = Budget {
        used: 0,
        cap: opts.budget,
    };
    let exceeded = |_| SemanticsError::BudgetExceeded { cap: opts.budget };

    let mut premises_satisfiable = false;
    // A model of premises ∧ ¬H rules out True; a model of premises ∧ H rules out False.
    let mut counter_true = false;
    let mut counter_false = false;

    'search: for size in 1..=max_domain {
        for assignment in constant_assignments(constants.len(), size) {
            budget.charge().map_err(exceeded)?;
            let mut grounder = Grounder::new(&preds, &constants, &assignment, size);
            let premise_lits: Vec<Lit> = premises.iter().map(|p| grounder.ground(p)).collect();
            let h = grounder.ground(hypothesis);
            let cnf = grounder.cnf;

            if !counter_true {
                let mut assume = premise_lits.clone();
                assume.push(-h);
                if sat::satisfiable(&cnf, &assume, &mut budget).map_err(exceeded)? {
                    counter_true = true;
                    premises_satisfiable = true;
                }
            }
            if !counter_false {
                let mut assume = premise_lits.clone();
                assume.push(h);
                if sat::satisfiable(&cnf, &assume, &mut budget).map_err(exceeded)? {
                    counter_false = true;
                    premises_satisfiable = true;
                }
            }
            if counter_true && counter_false {
                break 'search;
            }
        }
    }

    let verdict = match (premises_satisfiable, counter_true, counter_false) {
        (false, _, _) => Label::Uncertain,
        (true, false, _) => Label::True,
        (true, true, false) => Label::False,
        (true, true, true) => Label::Uncertain,
    };
    Ok(Entailment {
        verdict,
        max_domain,
        unsatisfiable_premises: !premises_satisfiable,
        nodes: budget.used,
    })
}

/// Constant denotations up to renaming of domain elements: each constant maps
/// to an element already used or to the next fresh one.
fn constant_assignments(count: usize, size: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(count);
    fn go(count: usize, size: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if current.len() == count {
            out.push(current.clone());
            return;
        }
        let next_fresh = current.iter().max().map_or(0, |m| m + 1);
        for e in 0..=next_fresh.min(size - 1) {
            current.push(e);
            go(count, size, current, out);
            current.pop();
        }
    }
    go(count, size, &mut current, &mut out);
    out
}

struct Grounder<'a> {
    cnf: Cnf,
    size: usize,
    // predicate name -> (first atom variable, arity)
    atoms: BTreeMap<&'a str, (Lit, usize)>,
    constants: BTreeMap<&'a str, usize>,
}

impl<'a> Grounder<'a> {
    fn new(
        preds: &'a BTreeMap<String, usize>,
        constants: &'a [String],
        assignment: &[usize],
        size: usize,
    ) -> Self {
        let mut cnf = Cnf::default();
        let mut atoms = BTreeMap::new();
        for (name, &arity) in preds {
            let count = size.pow(arity as u32);
            atoms.insert(name.as_str(), (cnf.new_vars(count), arity));
        }
        let constants = constants
            .iter()
            .map(String::as_str)
            .zip(assignment.iter().copied())
            .collect();
        Grounder {
            cnf,
            size,
            atoms,
            constants,
        }
    }

    fn ground(&mut self, f: &Formula) -> Lit {
        self.ground_in(f, &mut Vec::new())
    }

    fn ground_in(&mut self, f: &Formula, env: &mut Vec<(String, usize)>) -> Lit {
        match f {
            Formula::Pred { name, args } => {
                let (first, _) = self.atoms[name.as_str()];
                let mut index = 0usize;
                for t in args {
                    let e = match t {
                        Term::Variable(v) => {
                            env.iter().rev().find(|(n, _)| n == v).expect("closed").1
                        }
                        Term::Constant(c) => self.constants[c.as_str()],
                    };
                    index = index * self.size + e;
                }
                first + index as Lit
            }
            Formula::Not(g) => -self.ground_in(g, env),
            Formula::And(l, r) => {
                let (a, b) = (self.ground_in(l, env), self.ground_in(r, env));
                self.cnf.and(&[a, b])
            }
            Formula::Or(l, r) => {
                let (a, b) = (self.ground_in(l, env), self.ground_in(r, env));
                self.cnf.or(&[a, b])
            }
            Formula::Implies(l, r) => {
                let (a, b) = (self.ground_in(l, env), self.ground_in(r, env));
                self.cnf.or(&[-a, b])
            }
            Formula::Xor(l, r) => {
                let (a, b) = (self.ground_in(l, env), self.ground_in(r, env));
                self.cnf.xor(a, b)
            }
            Formula::Iff(l, r) => {
                let (a, b) = (self.ground_in(l, env), self.ground_in(r, env));
                self.cnf.iff(a, b)
            }
            Formula::ForAll { var, body } | Formula::Exists { var, body } => {
                let mut parts = Vec::with_capacity(self.size);
                for e in 0..self.size {
                    env.push((var.clone(), e));
                    parts.push(self.ground_in(body, env));
                    env.pop();
                }
                if matches!(f, Formula::ForAll { .. }) {
                    self.cnf.and(&parts)
                } else {
                    self.cnf.or(&parts)
                }
            }
        }
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
    fn eval_universal_on_singleton() {
        let mut m = Interpretation::with_domain(1);
        m.extend("P", [vec![0]]);
        assert!(eval(&p("∀x P(x)"), &m).unwrap());
    }

    #[test]
    fn eval_existential_disjunction() {
        let mut m = Interpretation::with_domain(1);
        m.extend("Cook", []).extend("Tea", [vec![0]]);
        assert!(eval(&p("∃x (Cook(x) ∨ Tea(x))"), &m).unwrap());
    }

    #[test]
    fn eval_reports_missing_symbols() {
        let m = Interpretation::with_domain(2);
        assert!(matches!(
            eval(&p("P(a)"), &m),
            Err(SemanticsError::MissingSymbol {
                kind: "predicate",
                ..
            })
        ));
        let mut m = Interpretation::with_domain(2);
        m.extend("P", []);
        assert!(matches!(
            eval(&p("P(a)"), &m),
            Err(SemanticsError::MissingSymbol {
                kind: "constant",
                ..
            })
        ));
    }

    #[test]
    fn squash_trace_premises_entail_hypothesis() {
        let premises = [
            "∀x (Tea(x) → Squash(x))",
            "∃x (Cook(x) ∨ Tea(x))",
            "∀x (Squash(x) → Cook(x))",
            "∀x (Cook(x) → Squash(x))",
        ]
        .map(p);
        let e = entails(&premises, &p("∃x Squash(x)"), 3).unwrap();
        assert_eq!(e.verdict, Label::True);
        assert!(!e.unsatisfiable_premises);
        assert_eq!(e.max_domain, 3);
    }

    #[test]
    fn empty_premises_are_uncertain() {
        let e = entails(&[], &p("P(a)"), 3).unwrap();
        assert_eq!(e.verdict, Label::Uncertain);
    }

    #[test]
    fn direct_contradiction_is_false() {
        let e = entails(&[p("P(a)")], &p("¬P(a)"), 3).unwrap();
        assert_eq!(e.verdict, Label::False);
    }

    #[test]
    fn unsatisfiable_premises_are_flagged() {
        let e = entails(&[p("P(a)"), p("¬P(a)")], &p("Q(a)"), 3).unwrap();
        assert_eq!(e.verdict, Label::Uncertain);
        assert!(e.unsatisfiable_premises);
    }

    #[test]
    fn open_formulas_rejected() {
        let open = Formula::pred("P", [Term::var("x")]);
        assert!(matches!(
            entails(&[], &open, 3),
            Err(SemanticsError::OpenFormula(_))
        ));
    }

    #[test]
    fn budget_exceeded() {
        let opts = EntailmentOptions {
            max_domain: Some(3),
            budget: 2,
        };
        let r = entails_with(&[p("∀x ∃y R(x, y)")], &p("∃x R(x, x)"), &opts);
        assert_eq!(r, Err(SemanticsError::BudgetExceeded { cap: 2 }));
    }

    #[test]
    fn constant_assignments_up_to_renaming() {
        // Bell-number style counts restricted to the domain size.
        assert_eq!(constant_assignments(0, 3).len(), 1);
        assert_eq!(constant_assignments(2, 1).len(), 1);
        assert_eq!(constant_assignments(2, 3).len(), 2);
        assert_eq!(constant_assignments(3, 3).len(), 5);
        assert_eq!(constant_assignments(3, 2).len(), 4);
    }

    #[test]
    fn default_bound_grows_with_constants() {
        let fs = [p("R(a, b)"), p("R(c, d)")];
        assert_eq!(default_domain_bound(&fs), 4);
        assert_eq!(default_domain_bound(&[p("P(a)")]), 3);
    }
}
