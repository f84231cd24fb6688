//! Evaluation.
//!
//! An expression is compiled into a flat postfix program with parameters
//! folded in as constants, then run on a small value stack. `NaN` is the
//! undefined value; it propagates through every operation.
//!
//! Undefined results, beyond what IEEE arithmetic already produces:
//! division by zero (including `0/0`), `cot` where `sin` is exactly zero,
//! `0^e` for negative `e`, and `sign(v) = v/|v|` at zero and infinity.
//! `arccot(v) = π/2 − atan(v)` with range `(0, π)`.

use std::f64::consts::FRAC_PI_2;

use thiserror::Error;

use super::{BinaryOp, Expr, ParamSet, UnaryOp, Var};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("parameter `{0}` is not bound")]
    UnboundParam(String),
}

/// Values for the five DSL variables.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Vars {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub u: f64,
    pub v: f64,
}

impl Vars {
    pub fn xyz(x: f64, y: f64, z: f64) -> Vars {
        Vars {
            x,
            y,
            z,
            ..Vars::default()
        }
    }

    pub fn uv(u: f64, v: f64) -> Vars {
        Vars {
            u,
            v,
            ..Vars::default()
        }
    }

    fn slots(&self) -> [f64; 5] {
        [self.x, self.y, self.z, self.u, self.v]
    }
}

pub(crate) fn apply_unary(op: UnaryOp, a: f64) -> f64 {
    match op {
        UnaryOp::Neg => -a,
        UnaryOp::Abs => a.abs(),
        UnaryOp::Sqrt => a.sqrt(),
        UnaryOp::Sin => a.sin(),
        UnaryOp::Cos => a.cos(),
        UnaryOp::Tan => a.tan(),
        UnaryOp::Cot => {
            let s = a.sin();
            if s == 0.0 {
                f64::NAN
            } else {
                a.cos() / s
            }
        }
        UnaryOp::Asin => a.asin(),
        UnaryOp::Acos => a.acos(),
        UnaryOp::Atan => a.atan(),
        UnaryOp::Arccot => FRAC_PI_2 - a.atan(),
        // 0/0 and ∞/∞ are both undefined.
        UnaryOp::Sign => a / a.abs(),
    }
}

pub(crate) fn apply_binary(op: BinaryOp, a: f64, b: f64) -> f64 {
    match op {
        BinaryOp::Add => a + b,
        BinaryOp::Sub => a - b,
        BinaryOp::Mul => a * b,
        BinaryOp::Div => {
            if b == 0.0 {
                f64::NAN
            } else {
                a / b
            }
        }
        BinaryOp::Pow => {
            // powf would turn NaN^0 and 1^NaN into 1.
            if a.is_nan() || b.is_nan() || (a == 0.0 && b < 0.0) {
                f64::NAN
            } else {
                // powf already yields NaN for a negative base with a
                // non-integer exponent.
                a.powf(b)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Op {
    Const(f64),
    Var(usize),
    Unary(UnaryOp),
    Binary(BinaryOp),
}

/// A compiled expression with all parameters bound.
///
/// Programs are immutable and can be shared between threads; each caller
/// supplies its own scratch stack through [`Program::eval_with`].
#[derive(Debug, Clone, PartialEq)]
pub struct Program {
    ops: Vec<Op>,
    max_stack: usize,
}

impl Program {
    pub fn compile(e: &Expr, params: &ParamSet) -> Result<Program, EvalError> {
        let mut ops = Vec::with_capacity(e.node_count());
        emit(e, params, &mut ops)?;
        let mut depth = 0usize;
        let mut max_stack = 0usize;
        for op in &ops {
            match op {
                Op::Const(_) | Op::Var(_) => depth += 1,
                Op::Unary(_) => {}
                Op::Binary(_) => depth -= 1,
            }
            max_stack = max_stack.max(depth);
        }
        Ok(Program { ops, max_stack })
    }

    pub fn eval(&self, vars: Vars) -> f64 {
        let mut stack = Vec::with_capacity(self.max_stack);
        self.eval_with(vars, &mut stack)
    }

    pub fn eval_with(&self, vars: Vars, stack: &mut Vec<f64>) -> f64 {
        let slots = vars.slots();
        stack.clear();
        for op in &self.ops {
            match *op {
                Op::Const(c) => stack.push(c),
                Op::Var(i) => stack.push(slots[i]),
                Op::Unary(u) => {
                    let top = stack.last_mut().expect("program stack underflow");
                    *top = apply_unary(u, *top);
                }
                Op::Binary(b) => {
                    let rhs = stack.pop().expect("program stack underflow");
                    let top = stack.last_mut().expect("program stack underflow");
                    *top = apply_binary(b, *top, rhs);
                }
            }
        }
        stack.pop().expect("empty program")
    }

    pub fn eval_xyz(&self, x: f64, y: f64, z: f64) -> f64 {
        self.eval(Vars::xyz(x, y, z))
    }
}

fn emit(e: &Expr, params: &ParamSet, ops: &mut Vec<Op>) -> Result<(), EvalError> {
    match e {
        Expr::Const(c) => ops.push(Op::Const(*c)),
        Expr::Var(v) => ops.push(Op::Var(Var::slot(*v))),
        Expr::Param(name) => {
            let value = params.get(name).ok_or_else(|| EvalError::UnboundParam(name.clone()))?;
            ops.push(Op::Const(value));
        }
        Expr::Unary(op, a) => {
            emit(a, params, ops)?;
            ops.push(Op::Unary(*op));
        }
        Expr::Binary(op, a, b) => {
            emit(a, params, ops)?;
            emit(b, params, ops)?;
            ops.push(Op::Binary(*op));
        }
    }
    Ok(())
}

/// Evaluates `e` at `(x, y, z)`. `u` and `v` read as zero.
pub fn evaluate(e: &Expr, x: f64, y: f64, z: f64, params: &ParamSet) -> Result<f64, EvalError> {
    evaluate_at(e, Vars::xyz(x, y, z), params)
}

pub fn evaluate_at(e: &Expr, vars: Vars, params: &ParamSet) -> Result<f64, EvalError> {
    Ok(Program::compile(e, params)?.eval(vars))
}
