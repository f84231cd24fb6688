//! Canonical printer. Parentheses are emitted only where the grammar needs
//! them, so `parse(format(e)) == e` for every tree with finite constants.

use super::{BinaryOp, Expr, UnaryOp};

// Binding strength of the printed form of a node.
const ADD: u8 = 1;
const MUL: u8 = 2;
const NEG: u8 = 3;
const POW: u8 = 4;
const ATOM: u8 = 5;

fn strength(e: &Expr) -> u8 {
    match e {
        Expr::Const(c) if c.is_sign_negative() => NEG,
        Expr::Const(_) | Expr::Var(_) | Expr::Param(_) => ATOM,
        Expr::Unary(UnaryOp::Neg, _) => NEG,
        Expr::Unary(..) => ATOM,
        Expr::Binary(BinaryOp::Add | BinaryOp::Sub, ..) => ADD,
        Expr::Binary(BinaryOp::Mul | BinaryOp::Div, ..) => MUL,
        Expr::Binary(BinaryOp::Pow, ..) => POW,
    }
}

pub fn format(e: &Expr) -> String {
    let mut out = String::new();
    write(e, &mut out);
    out
}

fn write_wrapped(e: &Expr, wrap: bool, out: &mut String) {
    if wrap {
        out.push('(');
        write(e, out);
        out.push(')');
    } else {
        write(e, out);
    }
}

fn write(e: &Expr, out: &mut String) {
    match e {
        Expr::Const(c) => out.push_str(&c.to_string()),
        Expr::Var(v) => out.push_str(v.name()),
        Expr::Param(p) => out.push_str(p),
        Expr::Unary(UnaryOp::Neg, a) => {
            out.push('-');
            // `-2` would re-parse as a literal, so constants keep their parens.
            let wrap = matches!(**a, Expr::Const(_)) || strength(a) < NEG;
            write_wrapped(a, wrap, out);
        }
        Expr::Unary(op, a) => {
            out.push_str(op.function_name().unwrap_or_default());
            out.push('(');
            write(a, out);
            out.push(')');
        }
        Expr::Binary(op, a, b) => {
            let (wrap_left, wrap_right) = match op {
                BinaryOp::Pow => (strength(a) <= POW, strength(b) < NEG),
                BinaryOp::Add | BinaryOp::Sub => (strength(a) < ADD, strength(b) <= ADD),
                BinaryOp::Mul | BinaryOp::Div => (strength(a) < MUL, strength(b) <= MUL),
            };
            write_wrapped(a, wrap_left, out);
            match op {
                BinaryOp::Add | BinaryOp::Sub => {
                    out.push(' ');
                    out.push_str(op.symbol());
                    out.push(' ');
                }
                _ => out.push_str(op.symbol()),
            }
            write_wrapped(b, wrap_right, out);
        }
    }
}
