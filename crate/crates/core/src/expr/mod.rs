//! Integrand expressions.
//!
//! An [`Expr`] is a small AST over the complex variables `s`, `z` and `w`.
//! Every node kind is holomorphic where it is defined: there is no conjugate,
//! modulus, real-part or imaginary-part node, so an expression cannot
//! describe a non-holomorphic map. `log` and `sqrt` use principal branches.
//!
//! Evaluation is pure. A division by exact zero (or any other non-finite
//! intermediate) produces [`EvalError::Diverged`], the divergence sentinel,
//! which the evaluators report as a `Diverged` status instead of letting NaN
//! leak through.

mod dual;
mod parse;

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::fmt;
use std::ops;

use num_complex::Complex64;
use thiserror::Error;

pub use dual::{eval_dual, Dual};
pub use parse::{parse_complex, parse_expr, ParseError, ParseErrorKind};

/// A point of the complex plane.
pub type ComplexScalar = Complex64;

/// Shorthand constructor.
#[inline]
pub fn c(re: f64, im: f64) -> ComplexScalar {
    Complex64::new(re, im)
}

/// Free variables an expression may mention.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Var {
    S,
    Z,
    W,
}

impl Var {
    pub fn name(self) -> &'static str {
        match self {
            Var::S => "s",
            Var::Z => "z",
            Var::W => "w",
        }
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Elementary functions, all evaluated on the principal branch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Exp,
    Log,
    Sqrt,
    Sin,
    Cos,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Sin => "sin",
            Func::Cos => "cos",
        }
    }

    pub(crate) fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(ComplexScalar),
    Var(Var),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    /// Integer power; negative exponents give poles.
    Pow(Box<Expr>, i32),
    Call(Func, Box<Expr>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("variable `{0}` is not bound")]
    Unbound(Var),
    /// The divergence sentinel: a pole was hit or a value left the finite plane.
    #[error("evaluation diverged (pole or overflow)")]
    Diverged,
}

/// Values for the free variables of an expression.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Bindings {
    pub s: Option<ComplexScalar>,
    pub z: Option<ComplexScalar>,
    pub w: Option<ComplexScalar>,
}

impl Bindings {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn s(mut self, v: ComplexScalar) -> Self {
        self.s = Some(v);
        self
    }

    pub fn z(mut self, v: ComplexScalar) -> Self {
        self.z = Some(v);
        self
    }

    pub fn w(mut self, v: ComplexScalar) -> Self {
        self.w = Some(v);
        self
    }

    pub fn get(&self, var: Var) -> Result<ComplexScalar, EvalError> {
        match var {
            Var::S => self.s,
            Var::Z => self.z,
            Var::W => self.w,
        }
        .ok_or(EvalError::Unbound(var))
    }
}

#[inline]
pub(crate) fn finite(v: ComplexScalar) -> Result<ComplexScalar, EvalError> {
    if v.re.is_finite() && v.im.is_finite() {
        Ok(v)
    } else {
        Err(EvalError::Diverged)
    }
}

/// Integer power by repeated squaring.
pub(crate) fn powi(base: ComplexScalar, n: i32) -> Result<ComplexScalar, EvalError> {
    let mut e = n.unsigned_abs();
    let mut acc = c(1.0, 0.0);
    let mut b = base;
    while e > 0 {
        if e & 1 == 1 {
            acc *= b;
        }
        e >>= 1;
        if e > 0 {
            b *= b;
        }
    }
    if n < 0 {
        if acc == c(0.0, 0.0) {
            return Err(EvalError::Diverged);
        }
        acc = acc.inv();
    }
    finite(acc)
}

pub(crate) fn checked_div(a: ComplexScalar, b: ComplexScalar) -> Result<ComplexScalar, EvalError> {
    if b == c(0.0, 0.0) {
        return Err(EvalError::Diverged);
    }
    finite(a / b)
}

pub(crate) fn apply_func(f: Func, x: ComplexScalar) -> Result<ComplexScalar, EvalError> {
    let v = match f {
        Func::Exp => x.exp(),
        Func::Log => {
            if x == c(0.0, 0.0) {
                return Err(EvalError::Diverged);
            }
            x.ln()
        }
        Func::Sqrt => x.sqrt(),
        Func::Sin => x.sin(),
        Func::Cos => x.cos(),
    };
    finite(v)
}

impl Expr {
    pub fn constant(v: ComplexScalar) -> Expr {
        Expr::Const(v)
    }

    pub fn real(v: f64) -> Expr {
        Expr::Const(c(v, 0.0))
    }

    pub fn s() -> Expr {
        Expr::Var(Var::S)
    }

    pub fn z() -> Expr {
        Expr::Var(Var::Z)
    }

    pub fn w() -> Expr {
        Expr::Var(Var::W)
    }

    pub fn powi(self, n: i32) -> Expr {
        Expr::Pow(Box::new(self), n)
    }

    pub fn call(f: Func, arg: Expr) -> Expr {
        Expr::Call(f, Box::new(arg))
    }

    pub fn eval(&self, b: &Bindings) -> Result<ComplexScalar, EvalError> {
        match self {
            Expr::Const(v) => Ok(*v),
            Expr::Var(v) => b.get(*v),
            Expr::Neg(a) => Ok(-a.eval(b)?),
            Expr::Add(x, y) => finite(x.eval(b)? + y.eval(b)?),
            Expr::Sub(x, y) => finite(x.eval(b)? - y.eval(b)?),
            Expr::Mul(x, y) => finite(x.eval(b)? * y.eval(b)?),
            Expr::Div(x, y) => checked_div(x.eval(b)?, y.eval(b)?),
            Expr::Pow(x, n) => powi(x.eval(b)?, *n),
            Expr::Call(f, x) => apply_func(*f, x.eval(b)?),
        }
    }

    /// Convenience for the common `(s, z)` binding.
    pub fn eval_sz(&self, s: ComplexScalar, z: ComplexScalar) -> Result<ComplexScalar, EvalError> {
        self.eval(&Bindings::new().s(s).z(z))
    }

    pub fn free_vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<Var>) {
        match self {
            Expr::Const(_) => {}
            Expr::Var(v) => {
                out.insert(*v);
            }
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Call(_, a) => a.collect_vars(out),
            Expr::Add(x, y) | Expr::Sub(x, y) | Expr::Mul(x, y) | Expr::Div(x, y) => {
                x.collect_vars(out);
                y.collect_vars(out);
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Expr::Const(_) | Expr::Var(_) => 1,
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Call(_, a) => 1 + a.depth(),
            Expr::Add(x, y) | Expr::Sub(x, y) | Expr::Mul(x, y) | Expr::Div(x, y) => {
                1 + x.depth().max(y.depth())
            }
        }
    }

    /// Replace every occurrence of `var` by `with`.
    pub fn substitute(&self, var: Var, with: &Expr) -> Expr {
        match self {
            Expr::Var(v) if *v == var => with.clone(),
            Expr::Const(_) | Expr::Var(_) => self.clone(),
            Expr::Neg(a) => Expr::Neg(Box::new(a.substitute(var, with))),
            Expr::Pow(a, n) => Expr::Pow(Box::new(a.substitute(var, with)), *n),
            Expr::Call(f, a) => Expr::Call(*f, Box::new(a.substitute(var, with))),
            Expr::Add(x, y) => x.substitute(var, with) + y.substitute(var, with),
            Expr::Sub(x, y) => x.substitute(var, with) - y.substitute(var, with),
            Expr::Mul(x, y) => x.substitute(var, with) * y.substitute(var, with),
            Expr::Div(x, y) => x.substitute(var, with) / y.substitute(var, with),
        }
    }
}

macro_rules! expr_binop {
    ($tr:ident, $method:ident, $variant:ident) => {
        impl ops::$tr for Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                Expr::$variant(Box::new(self), Box::new(rhs))
            }
        }
    };
}

expr_binop!(Add, add, Add);
expr_binop!(Sub, sub, Sub);
expr_binop!(Mul, mul, Mul);
expr_binop!(Div, div, Div);

impl ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::Neg(Box::new(self))
    }
}

// Printing follows the parser's grammar: `^` binds to a (possibly negated)
// atom, so anything else is parenthesised before being raised to a power.
const PREC_SUM: u8 = 1;
const PREC_PRODUCT: u8 = 2;
const PREC_ATOM: u8 = 4;

fn fmt_real(v: f64) -> String {
    if v == PI {
        return "pi".to_string();
    }
    format!("{v:?}")
}

fn fmt_const(v: ComplexScalar) -> (String, u8) {
    if v.im == 0.0 && v.re >= 0.0 && !v.re.is_sign_negative() {
        (fmt_real(v.re), PREC_ATOM)
    } else if v.re == 0.0 && !v.re.is_sign_negative() && v.im > 0.0 {
        (format!("{:?}i", v.im), PREC_ATOM)
    } else if v.im == 0.0 {
        (format!("(-{})", fmt_real(-v.re)), PREC_ATOM)
    } else {
        let sign = if v.im.is_sign_negative() { "-" } else { "+" };
        let re = if v.re.is_sign_negative() {
            format!("-{}", fmt_real(-v.re))
        } else {
            fmt_real(v.re)
        };
        (format!("({re}{sign}{:?}i)", v.im.abs()), PREC_ATOM)
    }
}

impl Expr {
    fn render(&self) -> (String, u8) {
        match self {
            Expr::Const(v) => fmt_const(*v),
            Expr::Var(v) => (v.name().to_string(), PREC_ATOM),
            Expr::Call(f, a) => (format!("{}({})", f.name(), a.render().0), PREC_ATOM),
            Expr::Neg(a) => {
                let (inner, p) = a.render();
                let inner = if p >= PREC_ATOM { inner } else { format!("({inner})") };
                (format!("(-{inner})"), PREC_ATOM)
            }
            Expr::Pow(a, n) => {
                let (inner, p) = a.render();
                let inner = if p >= PREC_ATOM { inner } else { format!("({inner})") };
                (format!("{inner}^{n}"), PREC_ATOM - 1)
            }
            Expr::Add(x, y) | Expr::Sub(x, y) => {
                let op = if matches!(self, Expr::Add(..)) { "+" } else { "-" };
                let (l, _) = x.render();
                let (r, rp) = y.render();
                let r = if rp > PREC_SUM { r } else { format!("({r})") };
                (format!("{l} {op} {r}"), PREC_SUM)
            }
            Expr::Mul(x, y) | Expr::Div(x, y) => {
                let op = if matches!(self, Expr::Mul(..)) { "*" } else { "/" };
                let (l, lp) = x.render();
                let (r, rp) = y.render();
                let l = if lp >= PREC_PRODUCT { l } else { format!("({l})") };
                let r = if rp > PREC_PRODUCT { r } else { format!("({r})") };
                (format!("{l}{op}{r}"), PREC_PRODUCT)
            }
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render().0)
    }
}
