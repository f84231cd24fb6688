//! Constituent functions: pulse trains, staircases, piecewise-linear
//! concatenation and power sums, emitted as expression trees in `x`.
//!
//! Each pulse shape comes in two or three algebraic forms. The *sum* forms
//! select one linear piece per period with the gate term
//!
//! ```text
//! gate(a, b) = 1 - (x - a)(x - b) / (|x - a| |x - b|)
//! ```
//!
//! which is 2 strictly inside `(a, b)`, 0 outside and undefined at `a` and
//! `b`. The *trig* forms reduce `x` modulo the period with
//! `arccot(cot(πx/r)) / π = frac(x/r)`, which relies on the `(0, π)` branch
//! of `arccot`.
//!
//! Sum forms cover the window `[-(p+1)·r, p·r]`; outside it they evaluate to
//! whatever the finite sum gives.
//!
//! To compose a constituent with another argument use
//! [`Expr::replace_var`], e.g. `sawtooth(..)?.replace_var(Var::X, &arg)`.

use std::f64::consts::PI;

use thiserror::Error;

use crate::expr::{Expr, Var};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConstituentError {
    #[error("segment knots must be strictly increasing (knot {index})")]
    KnotsNotIncreasing { index: usize },
    #[error("a piecewise curve needs at least two points, got {0}")]
    TooFewPoints(usize),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("period r must be positive, got {0}")]
    NonPositivePeriod(f64),
    #[error("window count p must be at least 1")]
    EmptyWindow,
    #[error("offset t = {0} violates |t| < 1")]
    OffsetOutOfRange(f64),
    #[error("offset ratio t/r = {0} must not be an integer")]
    IntegerOffset(f64),
}

/// Ordered points `(x_i, y_i)` joined by straight segments.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentList {
    points: Vec<(f64, f64)>,
}

impl SegmentList {
    pub fn new(points: Vec<(f64, f64)>) -> Result<SegmentList, ConstituentError> {
        if points.len() < 2 {
            return Err(ConstituentError::TooFewPoints(points.len()));
        }
        if points.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
            return Err(ConstituentError::NonFinite("segment points"));
        }
        if let Some(index) = points.windows(2).position(|w| w[1].0 <= w[0].0) {
            return Err(ConstituentError::KnotsNotIncreasing { index: index + 1 });
        }
        Ok(SegmentList { points })
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn segment_count(&self) -> usize {
        self.points.len() - 1
    }
}

/// Shape parameters shared by the pulse trains.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseParams {
    /// Period: base of each tooth or width of each stair.
    pub r: f64,
    /// Sum forms run over `i = -p..=p`.
    pub p: u32,
    /// Stair height.
    pub h: f64,
    /// Offset / duty parameter of the rectangular trains.
    pub t: f64,
}

impl PulseParams {
    pub fn new(r: f64, p: u32) -> Result<PulseParams, ConstituentError> {
        let params = PulseParams { r, p, h: 1.0, t: 0.0 };
        params.validate()?;
        Ok(params)
    }

    pub fn with_height(mut self, h: f64) -> Result<PulseParams, ConstituentError> {
        self.h = h;
        self.validate()?;
        Ok(self)
    }

    pub fn with_offset(mut self, t: f64) -> Result<PulseParams, ConstituentError> {
        self.t = t;
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<(), ConstituentError> {
        if !(self.r.is_finite() && self.h.is_finite() && self.t.is_finite()) {
            return Err(ConstituentError::NonFinite("pulse parameters"));
        }
        if self.r <= 0.0 {
            return Err(ConstituentError::NonPositivePeriod(self.r));
        }
        if self.p == 0 {
            return Err(ConstituentError::EmptyWindow);
        }
        Ok(())
    }

    /// The interval on which the sum forms are valid.
    pub fn window(&self) -> (f64, f64) {
        (-(self.p as f64 + 1.0) * self.r, self.p as f64 * self.r)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SawtoothVariant {
    /// Windowed gate sum.
    Sum,
    /// `arccot(cot(πx/r)) / π`.
    Trig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TriangularVariant {
    /// `|Σ gate·(x − r(i−1))/r − 1|`, the 1→0→1 triangle.
    Sum,
    /// `acos(cos(2πx/r)) / π`, the 0→1→0 triangle.
    Acos,
    /// `|2/π·arccot(cot(πx/r)) − 1|`, the 1→0→1 triangle.
    Arccot,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StaircaseVariant {
    Sum,
    Trig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RectangularVariant {
    /// `1/2 − sign(sin(πx) + t)/2`, needs `|t| < 1`; values in {0, 1}.
    Sign,
    /// Difference of two shifted sawtooths, needs `t/r ∉ ℤ`; values in {0, 1}
    /// when `0 < t/r < 1`.
    Arccot,
    /// Product of `asin∘sin / atan∘tan` ratios, needs `t ∉ ℤ`; values in {−1, 0}.
    Ratio,
}

fn c(v: f64) -> Expr {
    Expr::Const(v)
}

/// `(x−a)(x−b) / (|x−a||x−b|)`: −1 inside `(a, b)`, 1 outside.
fn sign_quotient(a: f64, b: f64) -> Expr {
    let da = Expr::x() - c(a);
    let db = Expr::x() - c(b);
    (da.clone() * db.clone()) / (da.abs() * db.abs())
}

fn gate(a: f64, b: f64) -> Expr {
    c(1.0) - sign_quotient(a, b)
}

fn sum(terms: impl IntoIterator<Item = Expr>) -> Expr {
    terms.into_iter().reduce(|acc, t| acc + t).unwrap_or(Expr::Const(0.0))
}

/// `arccot(cot(π·arg/r))`, i.e. `π·frac(arg/r)`.
fn reduced(arg: Expr, r: f64) -> Expr {
    (c(PI) * arg / c(r)).cot().arccot()
}

/// `Σ_{i=-p}^{p} gate(r(i−1), ri) · (x − r(i−1))`, the shared ramp sum.
fn ramp_sum(r: f64, p: u32) -> Expr {
    let p = p as i64;
    sum((-p..=p).map(|i| {
        let lo = r * (i - 1) as f64;
        let hi = r * i as f64;
        gate(lo, hi) * (Expr::x() - c(lo))
    }))
}

/// Concatenation of straight segments through the given points.
///
/// Equals the chord strictly inside each `(x_i, x_{i+1})`; undefined at
/// knots; zero outside `[x_1, x_{n+1}]`.
pub fn piecewise_linear(segs: &SegmentList) -> Expr {
    let pieces = segs.points().windows(2).map(|w| {
        let ((x0, y0), (x1, y1)) = (w[0], w[1]);
        let chord = (c(y1 - y0) * Expr::x() + c(y0 * x1 - y1 * x0)) / c(x1 - x0);
        gate(x0, x1) * chord
    });
    c(0.5) * sum(pieces)
}

/// Ramp from 0 to 1 over each period `r`.
pub fn sawtooth(variant: SawtoothVariant, params: &PulseParams) -> Result<Expr, ConstituentError> {
    params.validate()?;
    let r = params.r;
    Ok(match variant {
        SawtoothVariant::Sum => c(1.0 / (2.0 * r)) * ramp_sum(r, params.p),
        SawtoothVariant::Trig => reduced(Expr::x(), r) / c(PI),
    })
}

/// Isosceles triangle pulses of base `r` with values in `[0, 1]`.
pub fn triangular(variant: TriangularVariant, params: &PulseParams) -> Result<Expr, ConstituentError> {
    params.validate()?;
    let r = params.r;
    Ok(match variant {
        TriangularVariant::Sum => {
            let p = params.p as i64;
            let inner = sum((-p..=p).map(|i| {
                let lo = r * (i - 1) as f64;
                let hi = r * i as f64;
                c(1.0 / r) * gate(lo, hi) * (Expr::x() - c(lo))
            }));
            (inner - c(1.0)).abs()
        }
        TriangularVariant::Acos => (c(2.0 * PI) * Expr::x() / c(r)).cos().acos() / c(PI),
        TriangularVariant::Arccot => (c(2.0 / PI) * reduced(Expr::x(), r) - c(1.0)).abs(),
    })
}

/// Stairs of height `h` and width `r`: `h·floor(x/r)` off the knots.
pub fn staircase(variant: StaircaseVariant, params: &PulseParams) -> Result<Expr, ConstituentError> {
    params.validate()?;
    let (r, h) = (params.r, params.h);
    Ok(match variant {
        StaircaseVariant::Sum => c(h / r) * (Expr::x() - c(0.5) * ramp_sum(r, params.p)),
        StaircaseVariant::Trig => c(h) * (Expr::x() / c(r) - reduced(Expr::x(), r) / c(PI)),
    })
}

/// Rectangular pulse trains. The sign and ratio forms have unit period and
/// ignore `r`.
pub fn rectangular(variant: RectangularVariant, params: &PulseParams) -> Result<Expr, ConstituentError> {
    params.validate()?;
    let (r, t) = (params.r, params.t);
    Ok(match variant {
        RectangularVariant::Sign => {
            if t.abs() >= 1.0 {
                return Err(ConstituentError::OffsetOutOfRange(t));
            }
            c(0.5) - c(0.5) * ((c(PI) * Expr::x()).sin() + c(t)).sign()
        }
        RectangularVariant::Arccot => {
            let ratio = t / r;
            if ratio.fract() == 0.0 {
                return Err(ConstituentError::IntegerOffset(ratio));
            }
            c(ratio) - reduced(Expr::x() + c(t), r) / c(PI) + reduced(Expr::x(), r) / c(PI)
        }
        RectangularVariant::Ratio => {
            if t.fract() == 0.0 {
                return Err(ConstituentError::IntegerOffset(t));
            }
            let w = c(PI) * Expr::x();
            let ws = c(PI) * (Expr::x() + c(t));
            let lead = w.clone().sin().asin() / w.tan().atan();
            let lag = ws.clone().tan().atan() / ws.sin().asin();
            c(0.5) * (lead * lag - c(1.0))
        }
    })
}

/// One term `a · x^b · y^c · z^d` of a power sum.
#[derive(Debug, Clone, Copy, PartialEq, Default, serde::Serialize, serde::Deserialize)]
pub struct PowerTerm {
    pub a: f64,
    #[serde(default)]
    pub b: f64,
    #[serde(default)]
    pub c: f64,
    #[serde(default)]
    pub d: f64,
    /// Use `|x|`, `|y|`, `|z|` as bases.
    #[serde(default)]
    pub abs: bool,
}

impl PowerTerm {
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> PowerTerm {
        PowerTerm { a, b, c, d, abs: false }
    }

    pub fn with_abs(mut self) -> PowerTerm {
        self.abs = true;
        self
    }

    pub fn to_expr(&self) -> Expr {
        let factor = |var: Var, exponent: f64| -> Option<Expr> {
            if exponent == 0.0 {
                return None;
            }
            let base = if self.abs { Expr::var(var).abs() } else { Expr::var(var) };
            Some(if exponent == 1.0 { base } else { base.pow(exponent) })
        };
        let factors = [(Var::X, self.b), (Var::Y, self.c), (Var::Z, self.d)]
            .into_iter()
            .filter_map(|(v, e)| factor(v, e));
        let leading = (self.a != 1.0).then(|| c(self.a));
        leading
            .into_iter()
            .chain(factors)
            .reduce(|acc, f| acc * f)
            .unwrap_or(c(1.0))
    }
}

/// `Σ a_i · x^{b_i} · y^{c_i} · z^{d_i}`; the empty sum is the constant 0.
pub fn power_sum(terms: &[PowerTerm]) -> Expr {
    sum(terms.iter().map(PowerTerm::to_expr))
}

/// The eight-piece example curve, encoded term for term as
/// `0.5·(f1 + f2)`, including the ungated `6 − q(7, 9)` and `−5·q(10, 10.5)`
/// pieces of `f2`.
pub fn example_curve() -> Expr {
    let x = Expr::x;
    let f1 = gate(1.0, 2.0) * (x() - c(1.0))
        + gate(2.0, 3.0) * (c(2.0) * x() - c(3.0))
        + gate(3.0, 4.0) * (c(3.0) * x() - c(6.0))
        + gate(4.0, 5.0) * (c(-4.0) * x() + c(22.0));
    let f2 = gate(5.0, 7.0) * (c(0.5) * x() + c(9.0) / c(2.0)) + c(6.0) - sign_quotient(7.0, 9.0)
        + gate(9.0, 10.0) * (-x() + c(10.0))
        - c(5.0) * sign_quotient(10.0, 10.5);
    c(0.5) * (f1 + f2)
}

/// The pieces of [`example_curve`], as `(start, end)` knot pairs.
pub const EXAMPLE_CURVE_PIECES: [(f64, f64); 8] = [
    (1.0, 2.0),
    (2.0, 3.0),
    (3.0, 4.0),
    (4.0, 5.0),
    (5.0, 7.0),
    (7.0, 9.0),
    (9.0, 10.0),
    (10.0, 10.5),
];

/// Direct floor/fraction evaluators for the pulse shapes, used to check the
/// expression builders.
pub mod closed_form {
    fn frac(v: f64) -> f64 {
        v - v.floor()
    }

    pub fn sawtooth(x: f64, r: f64) -> f64 {
        frac(x / r)
    }

    /// 1 → 0 → 1 over each period.
    pub fn triangular_valley(x: f64, r: f64) -> f64 {
        (2.0 * frac(x / r) - 1.0).abs()
    }

    /// 0 → 1 → 0 over each period.
    pub fn triangular_peak(x: f64, r: f64) -> f64 {
        1.0 - triangular_valley(x, r)
    }

    pub fn staircase(x: f64, h: f64, r: f64) -> f64 {
        h * (x / r).floor()
    }

    pub fn rectangular_sign(x: f64, t: f64) -> f64 {
        if (std::f64::consts::PI * x).sin() + t > 0.0 {
            0.0
        } else {
            1.0
        }
    }

    pub fn rectangular_arccot(x: f64, r: f64, t: f64) -> f64 {
        t / r - frac((x + t) / r) + frac(x / r)
    }

    /// `+1` where `cos(πx) > 0`, else `-1`.
    fn half_wave(x: f64) -> f64 {
        if frac((x + 0.5) / 2.0) < 0.5 {
            1.0
        } else {
            -1.0
        }
    }

    pub fn rectangular_ratio(x: f64, t: f64) -> f64 {
        0.5 * (half_wave(x) * half_wave(x + t) - 1.0)
    }
}
