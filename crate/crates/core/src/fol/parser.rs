use thiserror::Error;

use super::{BinaryOp, Formula, Quantifier, Term};

/// Malformed formula text. `offset` is a byte offset into the input.
#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("syntax error at byte {offset}: expected {expected}, found {found}")]
pub struct SyntaxError {
    pub offset: usize,
    pub expected: String,
    pub found: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    LParen,
    RParen,
    Comma,
    Dot,
    Not,
    Bin(BinaryOp),
    Quant(Quantifier),
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(name) => format!("identifier `{name}`"),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Dot => "`.`".into(),
            Tok::Not => "negation".into(),
            Tok::Bin(op) => format!("connective {op:?}"),
            Tok::Quant(q) => format!("quantifier {q:?}"),
            Tok::End => "end of input".into(),
        }
    }
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

/// True when `name` is a well-formed identifier (`[A-Za-z_][A-Za-z0-9_]*`).
pub fn is_identifier(name: &str) -> bool {
    let mut chars = name.chars();
    matches!(chars.next(), Some(c) if is_ident_start(c)) && chars.all(is_ident_char)
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>, SyntaxError> {
    let mut out = Vec::new();
    let mut iter = text.char_indices().peekable();
    while let Some(&(i, c)) = iter.peek() {
        if c.is_whitespace() {
            iter.next();
            continue;
        }
        let rest = &text[i..];
        let (tok, len) = match c {
            '(' => (Tok::LParen, 1),
            ')' => (Tok::RParen, 1),
            ',' => (Tok::Comma, 1),
            '.' => (Tok::Dot, 1),
            '¬' | '~' | '!' => (Tok::Not, c.len_utf8()),
            '∧' => (Tok::Bin(BinaryOp::And), c.len_utf8()),
            '∨' => (Tok::Bin(BinaryOp::Or), c.len_utf8()),
            '⊕' | '^' => (Tok::Bin(BinaryOp::Xor), c.len_utf8()),
            '→' => (Tok::Bin(BinaryOp::Implies), c.len_utf8()),
            '↔' => (Tok::Bin(BinaryOp::Iff), c.len_utf8()),
            '∀' => (Tok::Quant(Quantifier::ForAll), c.len_utf8()),
            '∃' => (Tok::Quant(Quantifier::Exists), c.len_utf8()),
            '&' if rest.starts_with("&&") => (Tok::Bin(BinaryOp::And), 2),
            '&' => (Tok::Bin(BinaryOp::And), 1),
            '|' if rest.starts_with("||") => (Tok::Bin(BinaryOp::Or), 2),
            '|' => (Tok::Bin(BinaryOp::Or), 1),
            '-' if rest.starts_with("->") => (Tok::Bin(BinaryOp::Implies), 2),
            '<' if rest.starts_with("<->") => (Tok::Bin(BinaryOp::Iff), 3),
            c if is_ident_start(c) => {
                let len = rest
                    .char_indices()
                    .find(|&(_, ch)| !is_ident_char(ch))
                    .map_or(rest.len(), |(j, _)| j);
                let word = &rest[..len];
                let tok = match word {
                    "forall" => Tok::Quant(Quantifier::ForAll),
                    "exists" => Tok::Quant(Quantifier::Exists),
                    _ => Tok::Ident(word.to_string()),
                };
                (tok, len)
            }
            other => {
                return Err(SyntaxError {
                    offset: i,
                    expected: "formula token".into(),
                    found: format!("character `{other}`"),
                })
            }
        };
        out.push((i, tok));
        // Every token is ASCII-or-single-char, so advance by bytes.
        while let Some(&(j, _)) = iter.peek() {
            if j >= i + len {
                break;
            }
            iter.next();
        }
    }
    out.push((text.len(), Tok::End));
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    bound: Vec<String>,
    declared: &'a [&'a str],
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].1
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].0
    }

    fn bump(&mut self) -> Tok {
        let tok = self.toks[self.pos].1.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        tok
    }

    fn error(&self, expected: &str) -> SyntaxError {
        SyntaxError {
            offset: self.offset(),
            expected: expected.to_string(),
            found: self.peek().describe(),
        }
    }

    fn expect(&mut self, tok: Tok, expected: &str) -> Result<(), SyntaxError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.error(expected))
        }
    }

    fn formula(&mut self) -> Result<Formula, SyntaxError> {
        self.iff()
    }

    fn iff(&mut self) -> Result<Formula, SyntaxError> {
        let mut lhs = self.implies()?;
        while *self.peek() == Tok::Bin(BinaryOp::Iff) {
            self.bump();
            let rhs = self.implies()?;
            lhs = Formula::iff(lhs, rhs);
        }
        Ok(lhs)
    }

    fn implies(&mut self) -> Result<Formula, SyntaxError> {
        let lhs = self.left_assoc(BinaryOp::Xor)?;
        if *self.peek() == Tok::Bin(BinaryOp::Implies) {
            self.bump();
            let rhs = self.implies()?;
            return Ok(Formula::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    /// Left-associative levels: Xor over Or over And over unary.
    fn left_assoc(&mut self, op: BinaryOp) -> Result<Formula, SyntaxError> {
        let tighter = |p: &mut Self| match op {
            BinaryOp::Xor => p.left_assoc(BinaryOp::Or),
            BinaryOp::Or => p.left_assoc(BinaryOp::And),
            _ => p.unary(),
        };
        let mut lhs = tighter(self)?;
        while *self.peek() == Tok::Bin(op) {
            self.bump();
            let rhs = tighter(self)?;
            lhs = Formula::binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Formula, SyntaxError> {
        match self.peek().clone() {
            Tok::Not => {
                self.bump();
                Ok(Formula::not(self.unary()?))
            }
            Tok::Quant(q) => {
                self.bump();
                let var = match self.peek().clone() {
                    Tok::Ident(name) => {
                        self.bump();
                        name
                    }
                    _ => return Err(self.error("quantified variable")),
                };
                if *self.peek() == Tok::Dot {
                    self.bump();
                }
                self.bound.push(var.clone());
                // The quantifier scopes as far right as possible.
                let body = self.formula();
                self.bound.pop();
                Ok(Formula::quantified(q, var, body?))
            }
            Tok::LParen => {
                self.bump();
                let inner = self.formula()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                self.bump();
                self.expect(Tok::LParen, "`(` after predicate name")?;
                if *self.peek() == Tok::RParen {
                    self.bump();
                    return Ok(Formula::Pred {
                        name,
                        args: Vec::new(),
                    });
                }
                let mut args = vec![self.term()?];
                while *self.peek() == Tok::Comma {
                    self.bump();
                    args.push(self.term()?);
                }
                self.expect(Tok::RParen, "`,` or `)`")?;
                Ok(Formula::Pred { name, args })
            }
            _ => Err(self.error("formula")),
        }
    }

    fn term(&mut self) -> Result<Term, SyntaxError> {
        match self.peek().clone() {
            Tok::Ident(name) => {
                self.bump();
                if self.bound.contains(&name) || self.declared.contains(&name.as_str()) {
                    Ok(Term::Variable(name))
                } else {
                    Ok(Term::Constant(name))
                }
            }
            _ => Err(self.error("term")),
        }
    }
}

/// Parses a formula. Names not bound by an enclosing quantifier are constants.
pub fn parse_formula(text: &str) -> Result<Formula, SyntaxError> {
    parse_formula_with_vars(text, &[])
}

/// Parses a formula treating `declared` names as variables even when free.
pub fn parse_formula_with_vars(text: &str, declared: &[&str]) -> Result<Formula, SyntaxError> {
    let toks = lex(text)?;
    let mut parser = Parser {
        toks,
        pos: 0,
        bound: Vec::new(),
        declared,
    };
    if *parser.peek() == Tok::End {
        return Err(parser.error("formula"));
    }
    let f = parser.formula()?;
    if *parser.peek() != Tok::End {
        return Err(parser.error("connective or end of input"));
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pred1(name: &str, t: Term) -> Formula {
        Formula::pred(name, [t])
    }

    #[test]
    fn universal_implication() {
        let f = parse_formula("∀x (Drinks(x) → Dependent(x))").unwrap();
        let x = || Term::var("x");
        assert_eq!(
            f,
            Formula::forall(
                "x",
                Formula::implies(pred1("Drinks", x()), pred1("Dependent", x()))
            )
        );
    }

    #[test]
    fn atom_with_constant() {
        assert_eq!(
            parse_formula("P(a)").unwrap(),
            pred1("P", Term::constant("a"))
        );
    }

    #[test]
    fn nullary_predicate() {
        let f = parse_formula("¬¬Raining()").unwrap();
        assert_eq!(
            f,
            Formula::not(Formula::not(Formula::pred("Raining", Vec::<Term>::new())))
        );
        assert_eq!(parse_formula(&f.to_string()).unwrap(), f);
        assert!(parse_formula("Raining").is_err());
    }

    #[test]
    fn parenthesised_double_negation() {
        let f = parse_formula("¬(¬Jokes(rina))").unwrap();
        assert_eq!(
            f,
            Formula::not(Formula::not(pred1("Jokes", Term::constant("rina"))))
        );
    }

    #[test]
    fn precedence_and_over_or() {
        let f = parse_formula("A(x) ∧ B(x) ∨ C(x)").unwrap();
        let a = |n: &str| pred1(n, Term::constant("x"));
        assert_eq!(f, Formula::or(Formula::and(a("A"), a("B")), a("C")));
    }

    #[test]
    fn implication_is_right_associative() {
        let f = parse_formula("A(a) → B(a) → C(a)").unwrap();
        let a = |n: &str| pred1(n, Term::constant("a"));
        assert_eq!(
            f,
            Formula::implies(a("A"), Formula::implies(a("B"), a("C")))
        );
    }

    #[test]
    fn full_precedence_ladder() {
        let f = parse_formula("¬A(a) ∧ B(a) ∨ C(a) ⊕ D(a) → E(a) ↔ F(a)").unwrap();
        let a = |n: &str| pred1(n, Term::constant("a"));
        let expected = Formula::iff(
            Formula::implies(
                Formula::xor(
                    Formula::or(Formula::and(Formula::not(a("A")), a("B")), a("C")),
                    a("D"),
                ),
                a("E"),
            ),
            a("F"),
        );
        assert_eq!(f, expected);
    }

    #[test]
    fn ascii_aliases_match_unicode() {
        let pairs = [
            ("forall x (P(x) -> Q(x))", "∀x (P(x) → Q(x))"),
            ("exists y (P(y) | ~Q(y))", "∃y (P(y) ∨ ¬Q(y))"),
            ("!A(a) & B(a) <-> C(a) ^ D(a)", "¬A(a) ∧ B(a) ↔ C(a) ⊕ D(a)"),
            ("A(a) && B(a) || C(a)", "A(a) ∧ B(a) ∨ C(a)"),
        ];
        for (ascii, unicode) in pairs {
            assert_eq!(
                parse_formula(ascii).unwrap(),
                parse_formula(unicode).unwrap(),
                "{ascii}"
            );
        }
    }

    #[test]
    fn quantifier_scopes_maximally() {
        let f = parse_formula("∀x P(x) ∧ Q(x)").unwrap();
        assert!(matches!(f, Formula::ForAll { .. }));
        let g = parse_formula("(∀x P(x)) ∧ Q(x)").unwrap();
        assert!(matches!(g, Formula::And(..)));
        // The right-hand x escapes the quantifier, so it is a constant.
        if let Formula::And(_, r) = g {
            assert_eq!(*r, pred1("Q", Term::constant("x")));
        }
    }

    #[test]
    fn numbered_variables_and_dot() {
        let f = parse_formula("∃x20.(Cook(x20) ∨ Tea(x20))").unwrap();
        assert_eq!(f.quantifier_count(), 1);
        assert!(f.is_closed());
    }

    #[test]
    fn nonstandard_formalisation_accepted_verbatim() {
        let f = parse_formula("¬∃x (Jokes(x) → Unaware(x))").unwrap();
        assert!(matches!(f, Formula::Not(ref g) if matches!(**g, Formula::Exists { .. })));
    }

    #[test]
    fn errors_carry_offset_and_hint() {
        let err = parse_formula("P(a) ∧").unwrap_err();
        assert_eq!(err.offset, "P(a) ∧".len());
        assert_eq!(err.expected, "formula");

        let err = parse_formula("P(a").unwrap_err();
        assert_eq!(err.offset, 3);
        assert!(err.expected.contains(')'));

        let err = parse_formula("P a").unwrap_err();
        assert_eq!(err.offset, 2);

        let err = parse_formula("P(a) # Q(a)").unwrap_err();
        assert_eq!(err.offset, 5);

        assert!(parse_formula("").is_err());
        assert!(parse_formula("∀ (P(x))").is_err());
        assert!(parse_formula("P(,)").is_err());
        assert!(parse_formula("P(a) Q(a)").is_err());
    }

    #[test]
    fn identifiers() {
        assert!(is_identifier("x20"));
        assert!(is_identifier("_tmp"));
        assert!(!is_identifier("2x"));
        assert!(!is_identifier(""));
        assert!(!is_identifier("a-b"));
    }
}
