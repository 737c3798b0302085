use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use symtrace_core::fol::{parse_formula, print_formula, substitute, Formula, FormulaSampler, Term};

fn sampler() -> FormulaSampler {
    FormulaSampler::new(
        &[("P", 1), ("Q", 1), ("Jokes", 1), ("R", 2), ("T", 3)],
        &["a", "b", "rina"],
        6,
    )
}

/// Renders a formula with the ASCII aliases and full parenthesisation, an
/// independent surface syntax for the same tree.
fn ascii(f: &Formula) -> String {
    match f {
        Formula::Pred { name, args } => {
            let args: Vec<&str> = args.iter().map(Term::name).collect();
            format!("{name}({})", args.join(","))
        }
        Formula::Not(g) => format!("~({})", ascii(g)),
        Formula::And(l, r) => format!("({}) & ({})", ascii(l), ascii(r)),
        Formula::Or(l, r) => format!("({}) | ({})", ascii(l), ascii(r)),
        Formula::Xor(l, r) => format!("({}) ^ ({})", ascii(l), ascii(r)),
        Formula::Implies(l, r) => format!("({}) -> ({})", ascii(l), ascii(r)),
        Formula::Iff(l, r) => format!("({}) <-> ({})", ascii(l), ascii(r)),
        Formula::ForAll { var, body } => format!("(forall {var} ({}))", ascii(body)),
        Formula::Exists { var, body } => format!("(exists {var} ({}))", ascii(body)),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn print_then_parse_is_identity(seed in any::<u64>()) {
        let f = sampler().sample(&mut ChaCha8Rng::seed_from_u64(seed));
        let printed = print_formula(&f);
        prop_assert_eq!(parse_formula(&printed).unwrap(), f, "{}", printed);
    }

    #[test]
    fn ascii_aliases_parse_to_same_tree(seed in any::<u64>()) {
        let f = sampler().sample(&mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert_eq!(parse_formula(&ascii(&f)).unwrap(), f);
    }

    #[test]
    fn substitute_preserves_quantifier_count(seed in any::<u64>()) {
        let f = sampler().sample(&mut ChaCha8Rng::seed_from_u64(seed));
        // Strip the outermost quantifiers so the substitution has work to do.
        let mut body = &f;
        while let Some((_, var, inner)) = body.as_quantified() {
            let out = substitute(inner, var, &Term::constant("c")).unwrap();
            prop_assert_eq!(out.quantifier_count(), inner.quantifier_count());
            body = inner;
        }
        let out = substitute(&f, "x", &Term::constant("c")).unwrap();
        prop_assert_eq!(out.quantifier_count(), f.quantifier_count());
    }
}

#[test]
fn sampler_respects_depth_bound() {
    let s = sampler();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..500 {
        let f = s.sample(&mut rng);
        // Closing an unbound atom adds at most one quantifier level.
        assert!(f.depth() <= 7, "{f}");
        assert!(f.is_closed(), "{f}");
    }
}
