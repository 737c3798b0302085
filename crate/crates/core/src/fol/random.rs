use rand::seq::SliceRandom;
use rand::Rng;

use super::{BinaryOp, Formula, Quantifier, Term};

/// Sampler for random closed formulas over a fixed signature.
///
/// Variables only ever appear under a quantifier that binds them, and
/// variable names never coincide with constant names, so every sample survives
/// a print/parse round trip unchanged.
#[derive(Clone, Debug)]
pub struct FormulaSampler {
    pub predicates: Vec<(String, usize)>,
    pub constants: Vec<String>,
    pub variables: Vec<String>,
    pub max_depth: usize,
}

impl FormulaSampler {
    pub fn new(predicates: &[(&str, usize)], constants: &[&str], max_depth: usize) -> Self {
        FormulaSampler {
            predicates: predicates
                .iter()
                .map(|&(n, a)| (n.to_string(), a))
                .collect(),
            constants: constants.iter().map(|c| c.to_string()).collect(),
            variables: vec!["x".into(), "y".into(), "z".into()],
            max_depth,
        }
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> Formula {
        let depth = rng.gen_range(1..=self.max_depth.max(1));
        self.node(rng, depth, &mut Vec::new())
    }

    fn node<R: Rng>(&self, rng: &mut R, depth: usize, bound: &mut Vec<String>) -> Formula {
        if depth <= 1 {
            return self.atom(rng, bound);
        }
        match rng.gen_range(0..10) {
            0 => self.atom(rng, bound),
            1 | 2 => Formula::not(self.node(rng, depth - 1, bound)),
            3 | 4 => {
                let q = if rng.gen_bool(0.5) {
                    Quantifier::ForAll
                } else {
                    Quantifier::Exists
                };
                let var = self.variables.choose(rng).expect("variables").clone();
                bound.push(var.clone());
                let body = self.node(rng, depth - 1, bound);
                bound.pop();
                Formula::quantified(q, var, body)
            }
            _ => {
                let op = *[
                    BinaryOp::And,
                    BinaryOp::Or,
                    BinaryOp::Xor,
                    BinaryOp::Implies,
                    BinaryOp::Iff,
                ]
                .choose(rng)
                .expect("ops");
                let l = self.node(rng, depth - 1, bound);
                let right_depth = rng.gen_range(1..depth);
                let r = self.node(rng, right_depth, bound);
                Formula::binary(op, l, r)
            }
        }
    }

    fn atom<R: Rng>(&self, rng: &mut R, bound: &[String]) -> Formula {
        let (name, arity) = self.predicates.choose(rng).expect("predicates").clone();
        let args = (0..arity)
            .map(|_| {
                let use_var = !bound.is_empty() && (self.constants.is_empty() || rng.gen_bool(0.6));
                if use_var {
                    Term::Variable(bound.choose(rng).expect("bound").clone())
                } else if let Some(c) = self.constants.choose(rng) {
                    Term::Constant(c.clone())
                } else {
                    // No constants and nothing bound: close the atom with a quantifier later.
                    Term::Variable(self.variables[0].clone())
                }
            })
            .collect::<Vec<_>>();
        let atom = Formula::Pred { name, args };
        if atom.is_closed() || !bound.is_empty() {
            atom
        } else {
            Formula::exists(self.variables[0].clone(), atom)
        }
    }
}
