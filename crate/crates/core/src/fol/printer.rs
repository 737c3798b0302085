use super::{BinaryOp, Formula};

// Binding strength; higher binds tighter.
const PREFIX: u8 = 6;

fn precedence(op: BinaryOp) -> u8 {
    match op {
        BinaryOp::Iff => 1,
        BinaryOp::Implies => 2,
        BinaryOp::Xor => 3,
        BinaryOp::Or => 4,
        BinaryOp::And => 5,
    }
}

fn symbol(op: BinaryOp) -> &'static str {
    match op {
        BinaryOp::And => "∧",
        BinaryOp::Or => "∨",
        BinaryOp::Xor => "⊕",
        BinaryOp::Implies => "→",
        BinaryOp::Iff => "↔",
    }
}

/// Canonical text for `f`: Unicode connectives and the fewest parentheses
/// that still parse back to the same tree.
pub fn print_formula(f: &Formula) -> String {
    let mut out = String::new();
    write(f, 0, true, &mut out);
    out
}

/// `min_prec` is the weakest binary connective allowed without parentheses;
/// `rightmost` says nothing follows in the enclosing context, which is the
/// only place a quantifier may appear unparenthesised.
fn write(f: &Formula, min_prec: u8, rightmost: bool, out: &mut String) {
    match f {
        Formula::Pred { name, args } => {
            out.push_str(name);
            out.push('(');
            for (i, t) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                out.push_str(t.name());
            }
            out.push(')');
        }
        Formula::Not(inner) => {
            out.push('¬');
            write(inner, PREFIX, rightmost, out);
        }
        Formula::ForAll { .. } | Formula::Exists { .. } => {
            if !rightmost {
                out.push('(');
                write_quantifier(f, out);
                out.push(')');
            } else {
                write_quantifier(f, out);
            }
        }
        _ => {
            let (op, l, r) = f.as_binary().expect("binary node");
            let prec = precedence(op);
            let paren = prec < min_prec;
            let (lp, rp) = if op == BinaryOp::Implies {
                (prec + 1, prec)
            } else {
                (prec, prec + 1)
            };
            if paren {
                out.push('(');
            }
            write(l, lp, false, out);
            out.push(' ');
            out.push_str(symbol(op));
            out.push(' ');
            write(r, rp, rightmost || paren, out);
            if paren {
                out.push(')');
            }
        }
    }
}

fn write_quantifier(f: &Formula, out: &mut String) {
    let (q, var, body) = f.as_quantified().expect("quantifier");
    out.push(match q {
        super::Quantifier::ForAll => '∀',
        super::Quantifier::Exists => '∃',
    });
    out.push_str(var);
    out.push(' ');
    if body.as_binary().is_some() {
        out.push('(');
        write(body, 0, true, out);
        out.push(')');
    } else {
        write(body, PREFIX, true, out);
    }
}
