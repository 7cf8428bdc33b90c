use num_traits::One;

use super::ast::{is_negative_const, Expr};

// Binding strength of the printed form. A child is parenthesized when its
// strength is below what the parent position requires.
fn strength(e: &Expr) -> u8 {
    match e {
        Expr::Const(c) => {
            if !c.denom().is_one() {
                2
            } else if is_negative_const(c) {
                3
            } else {
                5
            }
        }
        Expr::Var(_) | Expr::Call(..) => 5,
        Expr::Pow(..) => 4,
        Expr::Neg(_) => 3,
        Expr::Mul(..) | Expr::Div(..) => 2,
        Expr::Add(..) | Expr::Sub(..) => 1,
    }
}

fn wrapped(e: &Expr, need: u8, out: &mut String) {
    if strength(e) < need {
        out.push('(');
        write(e, out);
        out.push(')');
    } else {
        write(e, out);
    }
}

fn write(e: &Expr, out: &mut String) {
    match e {
        Expr::Const(c) => {
            if c.denom().is_one() {
                out.push_str(&c.numer().to_string());
            } else {
                out.push_str(&format!("{}/{}", c.numer(), c.denom()));
            }
        }
        Expr::Var(v) => out.push_str(v),
        Expr::Neg(a) => {
            out.push('-');
            wrapped(a, 3, out);
        }
        Expr::Add(a, b) | Expr::Sub(a, b) => {
            wrapped(a, 1, out);
            out.push_str(if matches!(e, Expr::Add(..)) { " + " } else { " - " });
            wrapped(b, 2, out);
        }
        Expr::Mul(a, b) | Expr::Div(a, b) => {
            wrapped(a, 2, out);
            out.push(if matches!(e, Expr::Mul(..)) { '*' } else { '/' });
            wrapped(b, 3, out);
        }
        Expr::Pow(a, n) => {
            wrapped(a, 5, out);
            out.push('^');
            out.push_str(&n.to_string());
        }
        Expr::Call(f, a) => {
            out.push_str(f.name());
            out.push('(');
            write(a, out);
            out.push(')');
        }
    }
}

/// Canonical text: minimal parentheses, `a + b` spacing for sums,
/// tight `a*b` for products.
pub fn to_canonical_string(e: &Expr) -> String {
    let mut s = String::new();
    write(e, &mut s);
    s
}
