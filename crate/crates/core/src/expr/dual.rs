//! Forward-mode dual numbers carrying `d/dz`.

use std::ops::{Add, Div, Mul, Neg, Sub};

use super::{apply_func, c, checked_div, finite, powi, Bindings, ComplexScalar, EvalError, Expr, Func, Var};

/// A value together with its derivative in `z`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual {
    pub value: ComplexScalar,
    pub deriv: ComplexScalar,
}

impl Dual {
    pub fn constant(value: ComplexScalar) -> Self {
        Dual { value, deriv: c(0.0, 0.0) }
    }

    pub fn variable(value: ComplexScalar) -> Self {
        Dual { value, deriv: c(1.0, 0.0) }
    }

    fn checked(self) -> Result<Self, EvalError> {
        finite(self.value)?;
        finite(self.deriv)?;
        Ok(self)
    }

    pub fn powi(self, n: i32) -> Result<Dual, EvalError> {
        let value = powi(self.value, n)?;
        let deriv = if n == 0 {
            c(0.0, 0.0)
        } else {
            powi(self.value, n - 1)? * f64::from(n) * self.deriv
        };
        Dual { value, deriv }.checked()
    }

    pub fn apply(self, f: Func) -> Result<Dual, EvalError> {
        let value = apply_func(f, self.value)?;
        let slope = match f {
            Func::Exp => value,
            Func::Log => checked_div(c(1.0, 0.0), self.value)?,
            Func::Sqrt => checked_div(c(0.5, 0.0), value)?,
            Func::Sin => self.value.cos(),
            Func::Cos => -self.value.sin(),
        };
        Dual { value, deriv: slope * self.deriv }.checked()
    }

    pub fn checked_div(self, rhs: Dual) -> Result<Dual, EvalError> {
        let value = checked_div(self.value, rhs.value)?;
        let deriv = checked_div(self.deriv * rhs.value - self.value * rhs.deriv, rhs.value * rhs.value)?;
        Dual { value, deriv }.checked()
    }
}

impl Add for Dual {
    type Output = Dual;
    fn add(self, rhs: Dual) -> Dual {
        Dual { value: self.value + rhs.value, deriv: self.deriv + rhs.deriv }
    }
}

impl Sub for Dual {
    type Output = Dual;
    fn sub(self, rhs: Dual) -> Dual {
        Dual { value: self.value - rhs.value, deriv: self.deriv - rhs.deriv }
    }
}

impl Mul for Dual {
    type Output = Dual;
    fn mul(self, rhs: Dual) -> Dual {
        Dual {
            value: self.value * rhs.value,
            deriv: self.deriv * rhs.value + self.value * rhs.deriv,
        }
    }
}

impl Div for Dual {
    type Output = Dual;
    /// Unchecked quotient; use [`Dual::checked_div`] when the divisor may vanish.
    fn div(self, rhs: Dual) -> Dual {
        Dual {
            value: self.value / rhs.value,
            deriv: (self.deriv * rhs.value - self.value * rhs.deriv) / (rhs.value * rhs.value),
        }
    }
}

impl Neg for Dual {
    type Output = Dual;
    fn neg(self) -> Dual {
        Dual { value: -self.value, deriv: -self.deriv }
    }
}

fn eval_node(e: &Expr, b: &Bindings) -> Result<Dual, EvalError> {
    Ok(match e {
        Expr::Const(v) => Dual::constant(*v),
        Expr::Var(Var::Z) => Dual::variable(b.get(Var::Z)?),
        Expr::Var(v) => Dual::constant(b.get(*v)?),
        Expr::Neg(a) => -eval_node(a, b)?,
        Expr::Add(x, y) => (eval_node(x, b)? + eval_node(y, b)?).checked()?,
        Expr::Sub(x, y) => (eval_node(x, b)? - eval_node(y, b)?).checked()?,
        Expr::Mul(x, y) => (eval_node(x, b)? * eval_node(y, b)?).checked()?,
        Expr::Div(x, y) => eval_node(x, b)?.checked_div(eval_node(y, b)?)?,
        Expr::Pow(x, n) => eval_node(x, b)?.powi(*n)?,
        Expr::Call(f, x) => eval_node(x, b)?.apply(*f)?,
    })
}

/// Evaluates `e` and its exact derivative with respect to `z`.
pub fn eval_dual(
    e: &Expr,
    s: ComplexScalar,
    z: ComplexScalar,
    w: Option<ComplexScalar>,
) -> Result<Dual, EvalError> {
    let mut b = Bindings::new().s(s).z(z);
    b.w = w;
    eval_node(e, &b)
}
