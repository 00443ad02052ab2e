//! Time-dependent rate functions.
//!
//! A [`RateExpr`] is an immutable expression tree in the time variable `t`. Trees are built
//! either by [`parse_rate`] from the textual grammar or programmatically with the arithmetic
//! operators implemented on `RateExpr`.
//!
//! ```text
//! expr      := term (('+'|'-') term)*
//! term      := factor (('*'|'/') factor)*
//! factor    := number | 't' | func '(' expr ')' | '(' expr ')' | piecewise | '-' factor
//! func      := 'sin' | 'cos' | 'exp'
//! piecewise := 'piecewise' '[' '(' number ',' number ')' (',' '(' number ',' number ')')* ']'
//! ```

mod parse;

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

pub use parse::parse_rate;

use crate::error::{Error, ParseError, Result};
use crate::quadrature::{AdaptiveSimpson, DEFAULT_MAX_DEPTH, DEFAULT_TOL};

/// Piecewise-constant function given as `(start, value)` segments.
///
/// Segments are left-closed and right-open; the last one extends to +∞. The first segment
/// starts at 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Piecewise {
    segments: Vec<(f64, f64)>,
}

impl Piecewise {
    pub fn new(segments: Vec<(f64, f64)>) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::InvalidArgument("piecewise needs at least one segment".into()));
        }
        if segments.iter().any(|(s, v)| !s.is_finite() || !v.is_finite()) {
            return Err(Error::InvalidArgument("piecewise entries must be finite".into()));
        }
        if segments[0].0 != 0.0 {
            return Err(Error::InvalidArgument(format!(
                "piecewise first breakpoint must be 0, got {}",
                segments[0].0
            )));
        }
        if segments.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::InvalidArgument(
                "piecewise breakpoints must be strictly increasing".into(),
            ));
        }
        Ok(Self { segments })
    }

    pub fn segments(&self) -> &[(f64, f64)] {
        &self.segments
    }

    pub fn value_at(&self, t: f64) -> f64 {
        // index of the last segment whose start is <= t
        let idx = self.segments.partition_point(|&(s, _)| s <= t);
        self.segments[idx.saturating_sub(1)].1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RateExpr {
    Const(f64),
    Time,
    Neg(Box<RateExpr>),
    Add(Box<RateExpr>, Box<RateExpr>),
    Sub(Box<RateExpr>, Box<RateExpr>),
    Mul(Box<RateExpr>, Box<RateExpr>),
    Div(Box<RateExpr>, Box<RateExpr>),
    Sin(Box<RateExpr>),
    Cos(Box<RateExpr>),
    Exp(Box<RateExpr>),
    Piecewise(Piecewise),
}

impl RateExpr {
    pub fn constant(c: f64) -> Self {
        RateExpr::Const(c)
    }

    pub fn time() -> Self {
        RateExpr::Time
    }

    pub fn zero() -> Self {
        RateExpr::Const(0.0)
    }

    pub fn sin(self) -> Self {
        RateExpr::Sin(Box::new(self))
    }

    pub fn cos(self) -> Self {
        RateExpr::Cos(Box::new(self))
    }

    pub fn exp(self) -> Self {
        RateExpr::Exp(Box::new(self))
    }

    pub fn piecewise(segments: Vec<(f64, f64)>) -> Result<Self> {
        Piecewise::new(segments).map(RateExpr::Piecewise)
    }

    /// Evaluates the expression at `t`.
    pub fn eval(&self, t: f64) -> Result<f64> {
        let v = match self {
            RateExpr::Const(c) => *c,
            RateExpr::Time => t,
            RateExpr::Neg(a) => -a.eval(t)?,
            RateExpr::Add(a, b) => a.eval(t)? + b.eval(t)?,
            RateExpr::Sub(a, b) => a.eval(t)? - b.eval(t)?,
            RateExpr::Mul(a, b) => a.eval(t)? * b.eval(t)?,
            RateExpr::Div(a, b) => {
                let den = b.eval(t)?;
                if den == 0.0 {
                    return Err(Error::DivisionByZero { t });
                }
                a.eval(t)? / den
            }
            RateExpr::Sin(a) => a.eval(t)?.sin(),
            RateExpr::Cos(a) => a.eval(t)?.cos(),
            RateExpr::Exp(a) => a.eval(t)?.exp(),
            RateExpr::Piecewise(p) => p.value_at(t),
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFinite { t, value: v })
        }
    }

    /// All piecewise breakpoints appearing anywhere in the tree, sorted and deduplicated.
    /// The breakpoint at 0 is omitted.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut out = Vec::new();
        self.collect_breakpoints(&mut out);
        normalize_breakpoints(&mut out);
        out
    }

    fn collect_breakpoints(&self, out: &mut Vec<f64>) {
        match self {
            RateExpr::Const(_) | RateExpr::Time => {}
            RateExpr::Neg(a) | RateExpr::Sin(a) | RateExpr::Cos(a) | RateExpr::Exp(a) => {
                a.collect_breakpoints(out)
            }
            RateExpr::Add(a, b)
            | RateExpr::Sub(a, b)
            | RateExpr::Mul(a, b)
            | RateExpr::Div(a, b) => {
                a.collect_breakpoints(out);
                b.collect_breakpoints(out);
            }
            RateExpr::Piecewise(p) => {
                out.extend(p.segments.iter().map(|&(s, _)| s).filter(|&s| s > 0.0))
            }
        }
    }

    /// True when the tree does not depend on `t`.
    pub fn is_time_invariant(&self) -> bool {
        match self {
            RateExpr::Const(_) => true,
            RateExpr::Time => false,
            RateExpr::Neg(a) | RateExpr::Sin(a) | RateExpr::Cos(a) | RateExpr::Exp(a) => {
                a.is_time_invariant()
            }
            RateExpr::Add(a, b)
            | RateExpr::Sub(a, b)
            | RateExpr::Mul(a, b)
            | RateExpr::Div(a, b) => a.is_time_invariant() && b.is_time_invariant(),
            RateExpr::Piecewise(p) => p.segments.len() == 1,
        }
    }

    /// Adaptive Simpson estimate of the integral over `[t0, t1]` with the default depth cap.
    pub fn integrate(&self, t0: f64, t1: f64, tol: f64) -> Result<f64> {
        integrate_rate(self, t0, t1, tol)
    }
}

/// Sorts, drops non-positive entries and removes duplicates.
pub(crate) fn normalize_breakpoints(v: &mut Vec<f64>) {
    v.retain(|&s| s > 0.0);
    v.sort_by(f64::total_cmp);
    v.dedup();
}

/// Value of `f` at `t`.
pub fn eval_rate(f: &RateExpr, t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::InvalidArgument(format!("rate evaluated at negative time {t}")));
    }
    f.eval(t)
}

/// Integral of `f` over `[t0, t1]` to absolute tolerance `tol`, subdividing at the
/// piecewise breakpoints of `f`.
pub fn integrate_rate(f: &RateExpr, t0: f64, t1: f64, tol: f64) -> Result<f64> {
    if !(0.0 <= t0 && t0 <= t1) {
        return Err(Error::InvalidArgument(format!("bad integration range [{t0}, {t1}]")));
    }
    AdaptiveSimpson::new(tol, DEFAULT_MAX_DEPTH)?.integrate(|t| f.eval(t), t0, t1, &f.breakpoints())
}

/// Default quadrature tolerance for rate integrals.
pub const DEFAULT_RATE_TOL: f64 = DEFAULT_TOL;

impl FromStr for RateExpr {
    type Err = ParseError;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        parse_rate(s)
    }
}

// Printing is fully parenthesized so that the output always re-parses to the same tree.
impl fmt::Display for RateExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RateExpr::Const(c) => write_number(f, *c),
            RateExpr::Time => write!(f, "t"),
            RateExpr::Neg(a) => write!(f, "(-{a})"),
            RateExpr::Add(a, b) => write!(f, "({a} + {b})"),
            RateExpr::Sub(a, b) => write!(f, "({a} - {b})"),
            RateExpr::Mul(a, b) => write!(f, "({a} * {b})"),
            RateExpr::Div(a, b) => write!(f, "({a} / {b})"),
            RateExpr::Sin(a) => write!(f, "sin({a})"),
            RateExpr::Cos(a) => write!(f, "cos({a})"),
            RateExpr::Exp(a) => write!(f, "exp({a})"),
            RateExpr::Piecewise(p) => {
                write!(f, "piecewise[")?;
                for (i, &(s, v)) in p.segments.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "({s:?},{v:?})")?;
                }
                write!(f, "]")
            }
        }
    }
}

fn write_number(f: &mut fmt::Formatter<'_>, x: f64) -> fmt::Result {
    // `{:?}` is the shortest representation that round-trips exactly.
    if x < 0.0 || (x == 0.0 && x.is_sign_negative()) {
        write!(f, "(-{:?})", -x)
    } else {
        write!(f, "{x:?}")
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident, $variant:ident) => {
        impl $trait for RateExpr {
            type Output = RateExpr;
            fn $method(self, rhs: RateExpr) -> RateExpr {
                RateExpr::$variant(Box::new(self), Box::new(rhs))
            }
        }
        impl $trait<f64> for RateExpr {
            type Output = RateExpr;
            fn $method(self, rhs: f64) -> RateExpr {
                RateExpr::$variant(Box::new(self), Box::new(RateExpr::Const(rhs)))
            }
        }
        impl $trait<RateExpr> for f64 {
            type Output = RateExpr;
            fn $method(self, rhs: RateExpr) -> RateExpr {
                RateExpr::$variant(Box::new(RateExpr::Const(self)), Box::new(rhs))
            }
        }
    };
}

binop!(Add, add, Add);
binop!(Sub, sub, Sub);
binop!(Mul, mul, Mul);
binop!(Div, div, Div);

impl Neg for RateExpr {
    type Output = RateExpr;
    fn neg(self) -> RateExpr {
        RateExpr::Neg(Box::new(self))
    }
}

impl From<f64> for RateExpr {
    fn from(c: f64) -> Self {
        RateExpr::Const(c)
    }
}
