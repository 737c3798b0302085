//! First-order logic syntax: terms, formulas, and the structural operations
//! the rest of the toolkit builds on (free variables, substitution, signature
//! extraction).
//!
//! Formulas are immutable trees. The textual form accepted by [`parse_formula`]
//! mixes Unicode connectives with ASCII aliases; [`print_formula`] always emits
//! the canonical Unicode form with minimal parentheses.

mod parser;
mod printer;
mod random;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

pub use parser::{is_identifier, parse_formula, parse_formula_with_vars, SyntaxError};
pub use printer::print_formula;
pub use random::FormulaSampler;

/// A predicate argument.
///
/// Whether a name is a variable or a constant is decided at parse time: it is a
/// variable iff an enclosing quantifier binds it (or it was declared as a
/// variable), otherwise it is a constant.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Term {
    Variable(String),
    Constant(String),
}

impl Term {
    pub fn var(name: impl Into<String>) -> Self {
        Term::Variable(name.into())
    }

    pub fn constant(name: impl Into<String>) -> Self {
        Term::Constant(name.into())
    }

    pub fn name(&self) -> &str {
        match self {
            Term::Variable(n) | Term::Constant(n) => n,
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, Term::Constant(_))
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The binary connectives, used where code needs to treat them uniformly.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    And,
    Or,
    Xor,
    Implies,
    Iff,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Quantifier {
    ForAll,
    Exists,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Formula {
    Pred { name: String, args: Vec<Term> },
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Xor(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Iff(Box<Formula>, Box<Formula>),
    ForAll { var: String, body: Box<Formula> },
    Exists { var: String, body: Box<Formula> },
}

/// Returned by [`substitute`] when the replacement term would be captured.
#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("substituting `{term}` for `{var}` would be captured by a quantifier binding `{term}`")]
pub struct CaptureError {
    pub var: String,
    pub term: String,
}

/// Two uses of one predicate name with different argument counts.
#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("predicate `{name}` used with arity {first} and {second}")]
pub struct ArityError {
    pub name: String,
    pub first: usize,
    pub second: usize,
}

impl Formula {
    pub fn pred<I, T>(name: impl Into<String>, args: I) -> Self
    where
        I: IntoIterator<Item = T>,
        T: Into<Term>,
    {
        Formula::Pred {
            name: name.into(),
            args: args.into_iter().map(Into::into).collect(),
        }
    }

    pub fn not(f: Formula) -> Self {
        Formula::Not(Box::new(f))
    }

    pub fn and(l: Formula, r: Formula) -> Self {
        Formula::And(Box::new(l), Box::new(r))
    }

    pub fn or(l: Formula, r: Formula) -> Self {
        Formula::Or(Box::new(l), Box::new(r))
    }

    pub fn xor(l: Formula, r: Formula) -> Self {
        Formula::Xor(Box::new(l), Box::new(r))
    }

    pub fn implies(l: Formula, r: Formula) -> Self {
        Formula::Implies(Box::new(l), Box::new(r))
    }

    pub fn iff(l: Formula, r: Formula) -> Self {
        Formula::Iff(Box::new(l), Box::new(r))
    }

    pub fn forall(var: impl Into<String>, body: Formula) -> Self {
        Formula::ForAll {
            var: var.into(),
            body: Box::new(body),
        }
    }

    pub fn exists(var: impl Into<String>, body: Formula) -> Self {
        Formula::Exists {
            var: var.into(),
            body: Box::new(body),
        }
    }

    pub fn binary(op: BinaryOp, l: Formula, r: Formula) -> Self {
        match op {
            BinaryOp::And => Formula::and(l, r),
            BinaryOp::Or => Formula::or(l, r),
            BinaryOp::Xor => Formula::xor(l, r),
            BinaryOp::Implies => Formula::implies(l, r),
            BinaryOp::Iff => Formula::iff(l, r),
        }
    }

    pub fn quantified(q: Quantifier, var: impl Into<String>, body: Formula) -> Self {
        match q {
            Quantifier::ForAll => Formula::forall(var, body),
            Quantifier::Exists => Formula::exists(var, body),
        }
    }

    /// Splits a binary node into its connective and operands.
    pub fn as_binary(&self) -> Option<(BinaryOp, &Formula, &Formula)> {
        match self {
            Formula::And(l, r) => Some((BinaryOp::And, l, r)),
            Formula::Or(l, r) => Some((BinaryOp::Or, l, r)),
            Formula::Xor(l, r) => Some((BinaryOp::Xor, l, r)),
            Formula::Implies(l, r) => Some((BinaryOp::Implies, l, r)),
            Formula::Iff(l, r) => Some((BinaryOp::Iff, l, r)),
            _ => None,
        }
    }

    pub fn as_quantified(&self) -> Option<(Quantifier, &str, &Formula)> {
        match self {
            Formula::ForAll { var, body } => Some((Quantifier::ForAll, var, body)),
            Formula::Exists { var, body } => Some((Quantifier::Exists, var, body)),
            _ => None,
        }
    }

    /// Immediate subformulas, left to right.
    pub fn children(&self) -> Vec<&Formula> {
        match self {
            Formula::Pred { .. } => Vec::new(),
            Formula::Not(g) => vec![g],
            Formula::ForAll { body, .. } | Formula::Exists { body, .. } => vec![body],
            other => {
                let (_, l, r) = other.as_binary().expect("binary node");
                vec![l, r]
            }
        }
    }

    /// Number of nodes in the tree.
    pub fn size(&self) -> usize {
        1 + self.children().iter().map(|c| c.size()).sum::<usize>()
    }

    pub fn depth(&self) -> usize {
        1 + self.children().iter().map(|c| c.depth()).max().unwrap_or(0)
    }

    pub fn quantifier_count(&self) -> usize {
        let own = usize::from(self.as_quantified().is_some());
        own + self
            .children()
            .iter()
            .map(|c| c.quantifier_count())
            .sum::<usize>()
    }

    pub fn is_closed(&self) -> bool {
        free_vars(self).is_empty()
    }

    /// Names of all constants occurring in the formula.
    pub fn constants(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit_terms(&mut |t| {
            if let Term::Constant(c) = t {
                out.insert(c.clone());
            }
        });
        out
    }

    /// Predicate names with the arity of their first occurrence.
    pub fn predicates(&self) -> Result<BTreeMap<String, usize>, ArityError> {
        let mut sig = BTreeMap::new();
        collect_predicates(self, &mut sig)?;
        Ok(sig)
    }

    fn visit_terms(&self, visit: &mut impl FnMut(&Term)) {
        match self {
            Formula::Pred { args, .. } => args.iter().for_each(|t| visit(t)),
            _ => {
                for child in self.children() {
                    child.visit_terms(visit);
                }
            }
        }
    }

    /// Replaces every occurrence of the constant `name` with the variable
    /// `var`. Used to existentially generalise over a witness constant.
    pub fn abstract_constant(&self, name: &str, var: &str) -> Formula {
        self.map_terms(&|t| match t {
            Term::Constant(c) if c == name => Term::var(var),
            other => other.clone(),
        })
    }

    fn map_terms(&self, f: &impl Fn(&Term) -> Term) -> Formula {
        match self {
            Formula::Pred { name, args } => Formula::Pred {
                name: name.clone(),
                args: args.iter().map(f).collect(),
            },
            Formula::Not(g) => Formula::not(g.map_terms(f)),
            Formula::ForAll { var, body } => Formula::forall(var.clone(), body.map_terms(f)),
            Formula::Exists { var, body } => Formula::exists(var.clone(), body.map_terms(f)),
            other => {
                let (op, l, r) = other.as_binary().expect("binary node");
                Formula::binary(op, l.map_terms(f), r.map_terms(f))
            }
        }
    }
}

fn collect_predicates(f: &Formula, sig: &mut BTreeMap<String, usize>) -> Result<(), ArityError> {
    if let Formula::Pred { name, args } = f {
        match sig.get(name) {
            Some(&arity) if arity != args.len() => {
                return Err(ArityError {
                    name: name.clone(),
                    first: arity,
                    second: args.len(),
                })
            }
            Some(_) => {}
            None => {
                sig.insert(name.clone(), args.len());
            }
        }
        return Ok(());
    }
    for child in f.children() {
        collect_predicates(child, sig)?;
    }
    Ok(())
}

/// Merges the predicate signatures of several formulas, failing on the first
/// arity disagreement.
pub fn signature<'a>(
    formulas: impl IntoIterator<Item = &'a Formula>,
) -> Result<BTreeMap<String, usize>, ArityError> {
    let mut sig = BTreeMap::new();
    for f in formulas {
        collect_predicates(f, &mut sig)?;
    }
    Ok(sig)
}

/// Variables occurring free in `f`.
pub fn free_vars(f: &Formula) -> BTreeSet<String> {
    fn go(f: &Formula, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
        match f {
            Formula::Pred { args, .. } => {
                for t in args {
                    if let Term::Variable(v) = t {
                        if !bound.contains(v) {
                            out.insert(v.clone());
                        }
                    }
                }
            }
            Formula::ForAll { var, body } | Formula::Exists { var, body } => {
                bound.push(var.clone());
                go(body, bound, out);
                bound.pop();
            }
            other => {
                for child in other.children() {
                    go(child, bound, out);
                }
            }
        }
    }
    let mut out = BTreeSet::new();
    go(f, &mut Vec::new(), &mut out);
    out
}

/// Replaces the free occurrences of variable `var` in `f` with `term`.
pub fn substitute(f: &Formula, var: &str, term: &Term) -> Result<Formula, CaptureError> {
    fn go(
        f: &Formula,
        var: &str,
        term: &Term,
        bound: &mut Vec<String>,
    ) -> Result<Formula, CaptureError> {
        Ok(match f {
            Formula::Pred { name, args } => {
                let mut new_args = Vec::with_capacity(args.len());
                for t in args {
                    match t {
                        Term::Variable(v) if v == var => {
                            if let Term::Variable(tv) = term {
                                if bound.contains(tv) {
                                    return Err(CaptureError {
                                        var: var.to_string(),
                                        term: tv.clone(),
                                    });
                                }
                            }
                            new_args.push(term.clone());
                        }
                        other => new_args.push(other.clone()),
                    }
                }
                Formula::Pred {
                    name: name.clone(),
                    args: new_args,
                }
            }
            Formula::Not(g) => Formula::not(go(g, var, term, bound)?),
            Formula::ForAll { var: v, body } | Formula::Exists { var: v, body } => {
                if v == var {
                    return Ok(f.clone());
                }
                bound.push(v.clone());
                let new_body = go(body, var, term, bound);
                bound.pop();
                let (q, _, _) = f.as_quantified().expect("quantifier");
                Formula::quantified(q, v.clone(), new_body?)
            }
            other => {
                let (op, l, r) = other.as_binary().expect("binary node");
                Formula::binary(op, go(l, var, term, bound)?, go(r, var, term, bound)?)
            }
        })
    }
    go(f, var, term, &mut Vec::new())
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_formula(self))
    }
}

impl std::str::FromStr for Formula {
    type Err = SyntaxError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_formula(s)
    }
}

// Dataset files carry formulas in canonical printed form.
impl Serialize for Formula {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&print_formula(self))
    }
}

impl<'de> Deserialize<'de> for Formula {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        parse_formula(&text).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(text: &str) -> Formula {
        parse_formula(text).unwrap()
    }

    #[test]
    fn free_vars_basic() {
        let f = parse_formula_with_vars("P(x)", &["x"]).unwrap();
        assert_eq!(free_vars(&f), BTreeSet::from(["x".to_string()]));
        assert!(free_vars(&p("∀x P(x)")).is_empty());
        let f = parse_formula_with_vars("∀x (P(x) ∧ Q(y))", &["y"]).unwrap();
        assert_eq!(free_vars(&f), BTreeSet::from(["y".to_string()]));
    }

    #[test]
    fn undeclared_free_name_is_constant() {
        let f = p("P(x)");
        assert!(free_vars(&f).is_empty());
        assert_eq!(f, Formula::pred("P", [Term::constant("x")]));
    }

    #[test]
    fn substitute_instantiates_body() {
        let Formula::ForAll { var, body } = p("∀x (Drinks(x) → Dependent(x))") else {
            panic!("expected universal");
        };
        let out = substitute(&body, &var, &Term::constant("rina")).unwrap();
        assert_eq!(out, p("Drinks(rina) → Dependent(rina)"));
    }

    #[test]
    fn substitute_without_occurrence_is_identity() {
        let f = parse_formula_with_vars("P(y)", &["y"]).unwrap();
        assert_eq!(substitute(&f, "x", &Term::constant("a")).unwrap(), f);
    }

    #[test]
    fn substitute_skips_bound_occurrences() {
        // (∃x P(x)) ∧ Q(x) with the right-hand x free.
        let f = Formula::and(
            Formula::exists("x", Formula::pred("P", [Term::var("x")])),
            Formula::pred("Q", [Term::var("x")]),
        );
        let out = substitute(&f, "x", &Term::constant("c")).unwrap();
        let expected = Formula::and(
            Formula::exists("x", Formula::pred("P", [Term::var("x")])),
            Formula::pred("Q", [Term::constant("c")]),
        );
        assert_eq!(out, expected);
    }

    #[test]
    fn substitute_detects_capture() {
        // ∀y R(x, y) with x := y would capture.
        let f = Formula::forall("y", Formula::pred("R", [Term::var("x"), Term::var("y")]));
        let err = substitute(&f, "x", &Term::var("y")).unwrap_err();
        assert_eq!(err.term, "y");
    }

    #[test]
    fn arity_conflict_is_reported() {
        let err = signature([&p("P(a)"), &p("P(a, b)")]).unwrap_err();
        assert_eq!(err.name, "P");
        assert_eq!((err.first, err.second), (1, 2));
    }

    #[test]
    fn serde_uses_canonical_text() {
        let f = p("forall x (Tea(x) -> Squash(x))");
        let json = serde_json::to_string(&f).unwrap();
        assert_eq!(json, "\"∀x (Tea(x) → Squash(x))\"");
        let back: Formula = serde_json::from_str(&json).unwrap();
        assert_eq!(back, f);
    }
}
