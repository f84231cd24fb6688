//! Real-valued expression DSL: tree, parser, printer and evaluator.
//!
//! Expressions range over the spatial variables `x`, `y`, `z`, the surface
//! parameters `u`, `v`, named parameters, and a fixed function set. Finite
//! sums are expanded when an expression is built, so the tree only ever
//! contains constants, variables, parameters, unary and binary nodes.

mod eval;
mod format;
mod parse;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops;

use thiserror::Error;

pub use eval::{evaluate, evaluate_at, EvalError, Program, Vars};
pub use parse::{parse, ParseError, ParseErrorKind};

/// A spatial or surface-parameter variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Var {
    X,
    Y,
    Z,
    U,
    V,
}

impl Var {
    pub const ALL: [Var; 5] = [Var::X, Var::Y, Var::Z, Var::U, Var::V];

    pub fn name(self) -> &'static str {
        match self {
            Var::X => "x",
            Var::Y => "y",
            Var::Z => "z",
            Var::U => "u",
            Var::V => "v",
        }
    }

    pub fn from_name(name: &str) -> Option<Var> {
        Var::ALL.into_iter().find(|v| v.name() == name)
    }

    pub(crate) fn slot(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    Neg,
    Abs,
    Sqrt,
    Sin,
    Cos,
    Tan,
    Cot,
    Asin,
    Acos,
    Atan,
    Arccot,
    Sign,
}

impl UnaryOp {
    /// Every callable function, in the order they are documented.
    pub const FUNCTIONS: [UnaryOp; 11] = [
        UnaryOp::Abs,
        UnaryOp::Sqrt,
        UnaryOp::Sin,
        UnaryOp::Cos,
        UnaryOp::Tan,
        UnaryOp::Cot,
        UnaryOp::Asin,
        UnaryOp::Acos,
        UnaryOp::Atan,
        UnaryOp::Arccot,
        UnaryOp::Sign,
    ];

    /// Function-call spelling; `None` for prefix negation.
    pub fn function_name(self) -> Option<&'static str> {
        Some(match self {
            UnaryOp::Neg => return None,
            UnaryOp::Abs => "abs",
            UnaryOp::Sqrt => "sqrt",
            UnaryOp::Sin => "sin",
            UnaryOp::Cos => "cos",
            UnaryOp::Tan => "tan",
            UnaryOp::Cot => "cot",
            UnaryOp::Asin => "asin",
            UnaryOp::Acos => "acos",
            UnaryOp::Atan => "atan",
            UnaryOp::Arccot => "arccot",
            UnaryOp::Sign => "sign",
        })
    }

    pub fn from_function_name(name: &str) -> Option<UnaryOp> {
        UnaryOp::FUNCTIONS
            .into_iter()
            .find(|op| op.function_name() == Some(name))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinaryOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
            BinaryOp::Pow => "^",
        }
    }
}

/// Expression tree.
///
/// Structural equality is derived, so two trees compare equal when they have
/// the same shape, the same operators and numerically equal constants.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(Var),
    Param(String),
    Unary(UnaryOp, Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid parameter name `{0}`")]
pub struct InvalidName(pub String);

/// Checks the identifier rule for parameter names: `[a-zA-Z][a-zA-Z0-9_]*`,
/// not a variable and not a function name.
pub fn is_valid_param_name(name: &str) -> bool {
    let mut chars = name.chars();
    let Some(first) = chars.next() else {
        return false;
    };
    first.is_ascii_alphabetic()
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
        && Var::from_name(name).is_none()
        && UnaryOp::from_function_name(name).is_none()
}

impl Expr {
    pub fn constant(value: f64) -> Expr {
        Expr::Const(value)
    }

    pub fn var(var: Var) -> Expr {
        Expr::Var(var)
    }

    pub fn x() -> Expr {
        Expr::Var(Var::X)
    }

    pub fn y() -> Expr {
        Expr::Var(Var::Y)
    }

    pub fn z() -> Expr {
        Expr::Var(Var::Z)
    }

    pub fn param(name: &str) -> Result<Expr, InvalidName> {
        if is_valid_param_name(name) {
            Ok(Expr::Param(name.to_string()))
        } else {
            Err(InvalidName(name.to_string()))
        }
    }

    pub fn unary(op: UnaryOp, arg: Expr) -> Expr {
        Expr::Unary(op, Box::new(arg))
    }

    pub fn binary(op: BinaryOp, lhs: Expr, rhs: Expr) -> Expr {
        Expr::Binary(op, Box::new(lhs), Box::new(rhs))
    }

    pub fn pow(self, exponent: impl Into<Expr>) -> Expr {
        Expr::binary(BinaryOp::Pow, self, exponent.into())
    }

    pub fn abs(self) -> Expr {
        Expr::unary(UnaryOp::Abs, self)
    }

    pub fn sqrt(self) -> Expr {
        Expr::unary(UnaryOp::Sqrt, self)
    }

    pub fn sin(self) -> Expr {
        Expr::unary(UnaryOp::Sin, self)
    }

    pub fn cos(self) -> Expr {
        Expr::unary(UnaryOp::Cos, self)
    }

    pub fn tan(self) -> Expr {
        Expr::unary(UnaryOp::Tan, self)
    }

    pub fn cot(self) -> Expr {
        Expr::unary(UnaryOp::Cot, self)
    }

    pub fn asin(self) -> Expr {
        Expr::unary(UnaryOp::Asin, self)
    }

    pub fn acos(self) -> Expr {
        Expr::unary(UnaryOp::Acos, self)
    }

    pub fn atan(self) -> Expr {
        Expr::unary(UnaryOp::Atan, self)
    }

    pub fn arccot(self) -> Expr {
        Expr::unary(UnaryOp::Arccot, self)
    }

    pub fn sign(self) -> Expr {
        Expr::unary(UnaryOp::Sign, self)
    }

    /// Number of nodes in the tree.
    pub fn node_count(&self) -> usize {
        match self {
            Expr::Const(_) | Expr::Var(_) | Expr::Param(_) => 1,
            Expr::Unary(_, a) => 1 + a.node_count(),
            Expr::Binary(_, a, b) => 1 + a.node_count() + b.node_count(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Expr::Const(_) | Expr::Var(_) | Expr::Param(_) => 1,
            Expr::Unary(_, a) => 1 + a.depth(),
            Expr::Binary(_, a, b) => 1 + a.depth().max(b.depth()),
        }
    }

    /// Replaces every bound parameter by a copy of its binding.
    pub fn substitute(&self, bindings: &BTreeMap<String, Expr>) -> Expr {
        self.map_leaves(&|leaf| match leaf {
            Expr::Param(name) => bindings.get(name).cloned(),
            _ => None,
        })
    }

    /// Replaces every occurrence of `var` by `with`.
    pub fn replace_var(&self, var: Var, with: &Expr) -> Expr {
        self.map_leaves(&|leaf| match leaf {
            Expr::Var(v) if *v == var => Some(with.clone()),
            _ => None,
        })
    }

    fn map_leaves(&self, f: &dyn Fn(&Expr) -> Option<Expr>) -> Expr {
        match self {
            Expr::Unary(op, a) => Expr::unary(*op, a.map_leaves(f)),
            Expr::Binary(op, a, b) => Expr::binary(*op, a.map_leaves(f), b.map_leaves(f)),
            leaf => f(leaf).unwrap_or_else(|| leaf.clone()),
        }
    }

    pub fn free_names(&self) -> FreeNames {
        let mut names = FreeNames::default();
        self.collect_names(&mut names);
        names
    }

    fn collect_names(&self, names: &mut FreeNames) {
        match self {
            Expr::Const(_) => {}
            Expr::Var(v) => {
                names.variables.insert(*v);
            }
            Expr::Param(p) => {
                names.params.insert(p.clone());
            }
            Expr::Unary(_, a) => a.collect_names(names),
            Expr::Binary(_, a, b) => {
                a.collect_names(names);
                b.collect_names(names);
            }
        }
    }
}

/// Variables and parameters referenced by an expression.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FreeNames {
    pub variables: BTreeSet<Var>,
    pub params: BTreeSet<String>,
}

/// Free function form of [`Expr::substitute`].
pub fn substitute(e: &Expr, bindings: &BTreeMap<String, Expr>) -> Expr {
    e.substitute(bindings)
}

/// Free function form of [`Expr::free_names`].
pub fn free_names(e: &Expr) -> FreeNames {
    e.free_names()
}

impl From<f64> for Expr {
    fn from(value: f64) -> Expr {
        Expr::Const(value)
    }
}

impl From<Var> for Expr {
    fn from(var: Var) -> Expr {
        Expr::Var(var)
    }
}

macro_rules! binary_ops {
    ($($trait:ident $method:ident $op:ident),*) => {$(
        impl<R: Into<Expr>> ops::$trait<R> for Expr {
            type Output = Expr;
            fn $method(self, rhs: R) -> Expr {
                Expr::binary(BinaryOp::$op, self, rhs.into())
            }
        }

        impl ops::$trait<Expr> for f64 {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                Expr::binary(BinaryOp::$op, Expr::Const(self), rhs)
            }
        }
    )*};
}

binary_ops!(Add add Add, Sub sub Sub, Mul mul Mul, Div div Div);

impl ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::unary(UnaryOp::Neg, self)
    }
}

/// Named parameter values. Each name is bound at most once to a finite value.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamSet {
    values: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamError {
    #[error(transparent)]
    InvalidName(#[from] InvalidName),
    #[error("parameter `{0}` is bound twice")]
    Duplicate(String),
    #[error("parameter `{name}` has non-finite value {value}")]
    NonFinite { name: String, value: f64 },
}

impl ParamSet {
    pub fn new() -> ParamSet {
        ParamSet::default()
    }

    /// Binds a new name. Rebinding an existing name is an error; use
    /// [`ParamSet::set`] to override.
    pub fn bind(&mut self, name: &str, value: f64) -> Result<(), ParamError> {
        if self.values.contains_key(name) {
            return Err(ParamError::Duplicate(name.to_string()));
        }
        self.set(name, value)
    }

    /// Binds or overrides a name.
    pub fn set(&mut self, name: &str, value: f64) -> Result<(), ParamError> {
        if !is_valid_param_name(name) {
            return Err(InvalidName(name.to_string()).into());
        }
        if !value.is_finite() {
            return Err(ParamError::NonFinite {
                name: name.to_string(),
                value,
            });
        }
        self.values.insert(name.to_string(), value);
        Ok(())
    }

    pub fn with(mut self, name: &str, value: f64) -> Result<ParamSet, ParamError> {
        self.bind(name, value)?;
        Ok(self)
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.values.get(name).copied()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.values.contains_key(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.values.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format::format(self))
    }
}

pub use format::format;
