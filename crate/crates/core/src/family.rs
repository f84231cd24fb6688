//! Implicit families `Σ_i Π_m ((A/D)·(B/E))·(C/F) − d` and the named scenes.
//!
//! Per factor:
//!
//! ```text
//! A = P1^l1                D = P2^l2
//! B = (H(P3^l3))^mu1       E = (H(P4^l4))^mu2
//! C = (G(H(P5^l5 / P6^l6)))^mu3
//! F = (G(H(P7^l7 / P8^l8)))^mu4
//! ```
//!
//! Each `Pk` is a power sum; an absent `Pk` is the constant 1, and an element
//! whose power sums are all absent is dropped rather than becoming `H(1)`.
//! Any element can be replaced by its absolute value. `F` here is the sixth element, not
//! the whole function.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constituents::{example_curve, power_sum, PowerTerm};
use crate::expr::{parse, BinaryOp, Expr, ParamSet, Var};
use crate::field::{sample_field, Axis, GridSpec, SampleError, ScalarField};
use crate::mesh::ParametricSpec;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FamilyError {
    #[error("family has no terms")]
    NoTerms,
    #[error("term {0} has no factors")]
    EmptyTerm(usize),
    #[error("{what} in term {term}, factor {factor} is not finite")]
    NonFinite {
        term: usize,
        factor: usize,
        what: &'static str,
    },
    #[error("d must be finite")]
    NonFiniteD,
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
}

/// Trigonometric wrapper `H_t` / `G_t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Trig {
    Sin,
    Cos,
    Tan,
    Cot,
    Asin,
    Acos,
    Atan,
    Arccot,
    #[default]
    Identity,
}

impl Trig {
    pub fn apply(self, e: Expr) -> Expr {
        match self {
            Trig::Sin => e.sin(),
            Trig::Cos => e.cos(),
            Trig::Tan => e.tan(),
            Trig::Cot => e.cot(),
            Trig::Asin => e.asin(),
            Trig::Acos => e.acos(),
            Trig::Atan => e.atan(),
            Trig::Arccot => e.arccot(),
            Trig::Identity => e,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AbsFlags {
    #[serde(rename = "A", default)]
    pub a: bool,
    #[serde(rename = "B", default)]
    pub b: bool,
    #[serde(rename = "C", default)]
    pub c: bool,
    #[serde(rename = "D", default)]
    pub d: bool,
    #[serde(rename = "E", default)]
    pub e: bool,
    #[serde(rename = "F", default)]
    pub f: bool,
}

fn one() -> f64 {
    1.0
}

fn is_one(v: &f64) -> bool {
    *v == 1.0
}

/// One factor of a product term. Every key is optional in JSON.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Factor {
    #[serde(rename = "P1", default, skip_serializing_if = "Option::is_none")]
    pub p1: Option<Vec<PowerTerm>>,
    #[serde(rename = "P2", default, skip_serializing_if = "Option::is_none")]
    pub p2: Option<Vec<PowerTerm>>,
    #[serde(rename = "P3", default, skip_serializing_if = "Option::is_none")]
    pub p3: Option<Vec<PowerTerm>>,
    #[serde(rename = "P4", default, skip_serializing_if = "Option::is_none")]
    pub p4: Option<Vec<PowerTerm>>,
    #[serde(rename = "P5", default, skip_serializing_if = "Option::is_none")]
    pub p5: Option<Vec<PowerTerm>>,
    #[serde(rename = "P6", default, skip_serializing_if = "Option::is_none")]
    pub p6: Option<Vec<PowerTerm>>,
    #[serde(rename = "P7", default, skip_serializing_if = "Option::is_none")]
    pub p7: Option<Vec<PowerTerm>>,
    #[serde(rename = "P8", default, skip_serializing_if = "Option::is_none")]
    pub p8: Option<Vec<PowerTerm>>,
    #[serde(default = "one", skip_serializing_if = "is_one")]
    pub l1: f64,
    #[serde(default = "one", skip_serializing_if = "is_one")]
    pub l2: f64,
    #[serde(default = "one", skip_serializing_if = "is_one")]
    pub l3: f64,
    #[serde(default = "one", skip_serializing_if = "is_one")]
    pub l4: f64,
    #[serde(default = "one", skip_serializing_if = "is_one")]
    pub l5: f64,
    #[serde(default = "one", skip_serializing_if = "is_one")]
    pub l6: f64,
    #[serde(default = "one", skip_serializing_if = "is_one")]
    pub l7: f64,
    #[serde(default = "one", skip_serializing_if = "is_one")]
    pub l8: f64,
    #[serde(default = "one", skip_serializing_if = "is_one")]
    pub mu1: f64,
    #[serde(default = "one", skip_serializing_if = "is_one")]
    pub mu2: f64,
    #[serde(default = "one", skip_serializing_if = "is_one")]
    pub mu3: f64,
    #[serde(default = "one", skip_serializing_if = "is_one")]
    pub mu4: f64,
    #[serde(rename = "Ht", default)]
    pub ht: Trig,
    #[serde(rename = "Gt", default)]
    pub gt: Trig,
    #[serde(default)]
    pub abs: AbsFlags,
}

impl Factor {
    /// A factor equal to the constant 1.
    pub fn unit() -> Factor {
        Factor {
            l1: 1.0,
            l2: 1.0,
            l3: 1.0,
            l4: 1.0,
            l5: 1.0,
            l6: 1.0,
            l7: 1.0,
            l8: 1.0,
            mu1: 1.0,
            mu2: 1.0,
            mu3: 1.0,
            mu4: 1.0,
            ..Factor::default()
        }
    }

    fn exponents(&self) -> [(&'static str, f64); 12] {
        [
            ("l1", self.l1),
            ("l2", self.l2),
            ("l3", self.l3),
            ("l4", self.l4),
            ("l5", self.l5),
            ("l6", self.l6),
            ("l7", self.l7),
            ("l8", self.l8),
            ("mu1", self.mu1),
            ("mu2", self.mu2),
            ("mu3", self.mu3),
            ("mu4", self.mu4),
        ]
    }

    fn powers(&self) -> [(&'static str, &Option<Vec<PowerTerm>>); 8] {
        [
            ("P1", &self.p1),
            ("P2", &self.p2),
            ("P3", &self.p3),
            ("P4", &self.p4),
            ("P5", &self.p5),
            ("P6", &self.p6),
            ("P7", &self.p7),
            ("P8", &self.p8),
        ]
    }

    fn validate(&self, term: usize, factor: usize) -> Result<(), FamilyError> {
        let bad = |what| FamilyError::NonFinite { term, factor, what };
        for (name, v) in self.exponents() {
            if !v.is_finite() {
                return Err(bad(name));
            }
        }
        for (name, p) in self.powers() {
            let finite = |t: &PowerTerm| [t.a, t.b, t.c, t.d].iter().all(|v| v.is_finite());
            if p.iter().flatten().any(|t| !finite(t)) {
                return Err(bad(name));
            }
        }
        Ok(())
    }

    /// The six elements `[A, B, C, D, E, F]`.
    pub fn elements(&self) -> [Expr; 6] {
        let raised = |p: &Option<Vec<PowerTerm>>, l: f64| p.as_ref().map(|terms| pow(power_sum(terms), l));
        let unit = || Expr::Const(1.0);
        let h = |e: Expr| self.ht.apply(e);
        let g = |e: Expr| self.gt.apply(e);
        let abs = |e: Expr, flag: bool| if flag { e.abs() } else { e };
        let ratio = |n: Option<Expr>, d: Option<Expr>| match (n, d) {
            (None, None) => None,
            (n, d) => Some(div(n.unwrap_or_else(unit), d.unwrap_or_else(unit))),
        };

        let a = raised(&self.p1, self.l1).unwrap_or_else(unit);
        let d = raised(&self.p2, self.l2).unwrap_or_else(unit);
        let b = raised(&self.p3, self.l3).map_or_else(unit, |p| pow(h(p), self.mu1));
        let e = raised(&self.p4, self.l4).map_or_else(unit, |p| pow(h(p), self.mu2));
        let c =
            ratio(raised(&self.p5, self.l5), raised(&self.p6, self.l6)).map_or_else(unit, |r| pow(g(h(r)), self.mu3));
        let f =
            ratio(raised(&self.p7, self.l7), raised(&self.p8, self.l8)).map_or_else(unit, |r| pow(g(h(r)), self.mu4));
        [
            abs(a, self.abs.a),
            abs(b, self.abs.b),
            abs(c, self.abs.c),
            abs(d, self.abs.d),
            abs(e, self.abs.e),
            abs(f, self.abs.f),
        ]
    }

    /// `((A/D)·(B/E))·(C/F)` with unit operands dropped.
    pub fn to_expr(&self) -> Expr {
        let [a, b, c, d, e, f] = self.elements();
        mul(mul(div(a, d), div(b, e)), div(c, f))
    }
}

fn is_unit(e: &Expr) -> bool {
    matches!(e, Expr::Const(v) if *v == 1.0)
}

fn pow(base: Expr, exponent: f64) -> Expr {
    if exponent == 1.0 || is_unit(&base) {
        base
    } else {
        base.pow(exponent)
    }
}

fn div(a: Expr, b: Expr) -> Expr {
    if is_unit(&b) {
        a
    } else {
        Expr::binary(BinaryOp::Div, a, b)
    }
}

fn mul(a: Expr, b: Expr) -> Expr {
    match (is_unit(&a), is_unit(&b)) {
        (true, _) => b,
        (_, true) => a,
        _ => a * b,
    }
}

/// Declarative family: `terms[i][m]` is factor `m` of product term `i`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyConfig {
    #[serde(default)]
    pub d: f64,
    pub terms: Vec<Vec<Factor>>,
}

impl FamilyConfig {
    pub fn from_json(text: &str) -> Result<FamilyConfig, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("family config serializes")
    }

    pub fn validate(&self) -> Result<(), FamilyError> {
        if !self.d.is_finite() {
            return Err(FamilyError::NonFiniteD);
        }
        if self.terms.is_empty() {
            return Err(FamilyError::NoTerms);
        }
        for (i, term) in self.terms.iter().enumerate() {
            if term.is_empty() {
                return Err(FamilyError::EmptyTerm(i));
            }
            for (m, factor) in term.iter().enumerate() {
                factor.validate(i, m)?;
            }
        }
        Ok(())
    }
}

/// Expands a family into a single expression.
pub fn build_family(cfg: &FamilyConfig) -> Result<Expr, FamilyError> {
    cfg.validate()?;
    let product = |term: &Vec<Factor>| {
        term.iter()
            .map(Factor::to_expr)
            .reduce(mul)
            .expect("validated nonempty")
    };
    let sum = cfg
        .terms
        .iter()
        .map(product)
        .reduce(|a, b| a + b)
        .expect("validated nonempty");
    Ok(if cfg.d == 0.0 { sum } else { sum - cfg.d })
}

/// What a scene's expression describes.
#[derive(Debug, Clone, PartialEq)]
pub enum SceneKind {
    Implicit,
    /// `expr` is `y − profile(x)`; the scene is the plane curve of `profile`
    /// extruded along z.
    Curve {
        profile: Expr,
    },
    /// `expr` is an implicit companion; the scene proper is the parametric
    /// surface.
    Parametric(ParametricSpec),
}

/// A ready-to-sample implicit scene.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneSpec {
    pub name: String,
    pub expr: Expr,
    pub grid: GridSpec,
    pub params: ParamSet,
    pub iso: f64,
    pub kind: SceneKind,
}

impl SceneSpec {
    pub fn implicit(name: &str, expr: Expr, grid: GridSpec, params: ParamSet) -> SceneSpec {
        SceneSpec {
            name: name.to_string(),
            expr,
            grid,
            params,
            iso: 0.0,
            kind: SceneKind::Implicit,
        }
    }

    /// Parameters the expression mentions, in name order.
    pub fn free_params(&self) -> Vec<String> {
        self.expr.free_names().params.into_iter().collect()
    }

    pub fn sample(&self) -> Result<ScalarField, SampleError> {
        sample_field(&self.expr, &self.grid, &self.params)
    }
}

pub const PRESET_NAMES: [&str; 7] = ["fig1-curve", "eqA", "eqB-I3", "eqB-I4", "eqB-I5", "eqC", "cube-sign"];

/// Per-axis text with `{a}` the leading axis and `{b}`, `{c}` the others.
fn per_axis(template: &str, a: &str, b: &str, c: &str) -> String {
    template.replace("{a}", a).replace("{b}", b).replace("{c}", c)
}

fn eq_a_text() -> String {
    let a = "atan(tan(1 - abs({a})^0.31 + 5.76*abs({a})^1.38/abs(abs(x)^1.3 + abs(y)^1.3 + abs(z)^1.3)))^3";
    let b = "(abs({a})^0.3/abs(cot(m*{a})))^0.3";
    let sum = |t: &str| ["x", "y", "z"].map(|v| per_axis(t, v, "", "")).join(" + ");
    format!(
        "(abs(x)^3.3 + abs(y)^3.3 + abs(z)^3.3 - 600) + ({})^3 - 0.51*({})^3 + 100",
        sum(a),
        sum(b)
    )
}

fn eq_b_text() -> String {
    // The cos(0.1*y) factor is the same in all three terms, as printed.
    let beta = "abs(cos(2*{a}))*atan(tan(12*(({a}^2 + abs({b})^2 + {c}^2)/({den}))))^2*cos(0.1*y)^-1";
    let terms = [
        per_axis(beta, "x", "y", "z").replace("{den}", "x^2*y^2 + z^2"),
        per_axis(beta, "y", "z", "x").replace("{den}", "x^2 + y^2*z^2"),
        per_axis(beta, "z", "x", "y").replace("{den}", "y^2 + x^2*z^2"),
    ];
    format!(
        "1/24.4*(x^2 + y^2 + z^2 - 5)*(abs(x)^0.13*abs(y)^0.13*abs(z)^0.13 - 5) + ({})^3 - 0.135",
        terms.join(" + ")
    )
}

const EQ_C: &str = "(abs(cos(0.7*m*x^-1))/cos(0.003*x^2))^10 \
    + abs(sin(0.7*m*y))^10*abs(sin(0.7*m*z))^10/(cos(0.003*y^2)^10*cos(0.003*z^2)^10) \
    - 0.02*(x^3 + y^2 + z^2)";

const CUBE_SIGN: &str = "1.5 - (sign(1 - abs(x)) + sign(1 - abs(y)) + sign(1 - abs(z)))";

fn parsed(text: &str) -> Expr {
    parse(text).expect("preset expressions parse")
}

fn cube(half: f64, n: usize) -> GridSpec {
    GridSpec::cube(half, n).expect("preset grids are valid")
}

fn with_m(m: f64) -> ParamSet {
    ParamSet::new().with("m", m).expect("valid binding")
}

/// One of [`PRESET_NAMES`] with its default working space.
///
/// Free parameters carry a default binding (`m = 0.851` for `eqA`,
/// `m = 0.25` for `eqC`) that callers override with [`ParamSet::set`].
pub fn preset(name: &str) -> Result<SceneSpec, FamilyError> {
    let scene = match name {
        "fig1-curve" => {
            let profile = example_curve();
            let expr = Expr::y() - profile.clone();
            let grid = GridSpec::new(
                Axis::new(0.0, 11.0, 128),
                Axis::new(-1.0, 9.0, 64),
                Axis::new(-1.0, 1.0, 3),
            )
            .expect("valid grid");
            SceneSpec {
                kind: SceneKind::Curve { profile },
                ..SceneSpec::implicit(name, expr, grid, ParamSet::new())
            }
        }
        "eqA" => SceneSpec::implicit(name, parsed(&eq_a_text()), cube(155.0, 82), with_m(0.851)),
        "eqB-I3" => SceneSpec::implicit(name, parsed(&eq_b_text()), cube(7.0, 34), ParamSet::new()),
        "eqB-I4" => SceneSpec::implicit(name, parsed(&eq_b_text()), cube(7.05, 34), ParamSet::new()),
        "eqB-I5" => SceneSpec::implicit(name, parsed(&eq_b_text()), cube(7.05, 33), ParamSet::new()),
        "eqC" => SceneSpec::implicit(name, parsed(EQ_C), cube(10.0, 64), with_m(0.25)),
        "cube-sign" => {
            let surface = ParametricSpec::new(
                parsed("cos(u)*cos(v)"),
                parsed("sin(u)*cos(v)"),
                parsed("sin(v)"),
                Axis::new(-PI, PI, 64),
                Axis::new(-FRAC_PI_2, FRAC_PI_2, 32),
            )
            .with_sign([true; 3]);
            SceneSpec {
                kind: SceneKind::Parametric(surface),
                ..SceneSpec::implicit(name, parsed(CUBE_SIGN), cube(1.5, 32), ParamSet::new())
            }
        }
        other => return Err(FamilyError::UnknownPreset(other.to_string())),
    };
    Ok(scene)
}

/// Variables a scene expression may use.
pub const SPATIAL: [Var; 3] = [Var::X, Var::Y, Var::Z];
