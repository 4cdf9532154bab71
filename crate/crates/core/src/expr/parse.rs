//! Recursive-descent parser for integrand expressions.
//!
//! ```text
//! expr   := term (("+"|"-") term)*
//! term   := factor (("*"|"/") factor)*
//! factor := unary ("^" int)?
//! unary  := "-"? atom
//! atom   := number | "i" | "pi" | "e" | "s" | "z" | "w"
//!         | func "(" expr ")" | "(" expr ")"
//! func   := "exp" | "log" | "sqrt" | "sin" | "cos"
//! ```
//!
//! Note that `^` binds to the unary node, so `-z^2` reads as `(-z)^2`.

use std::f64::consts::{E, PI};

use thiserror::Error;

use super::{c, ComplexScalar, Expr, Func, Var};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    UnexpectedChar(char),
    UnexpectedEnd,
    UnknownIdentifier(String),
    NonIntegerExponent,
    BadNumber,
    Expected(&'static str),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{kind} at byte {offset}")]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub offset: usize,
}

impl std::fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ParseErrorKind::UnexpectedChar(ch) => write!(f, "unexpected character `{ch}`"),
            ParseErrorKind::UnexpectedEnd => f.write_str("unexpected end of input"),
            ParseErrorKind::UnknownIdentifier(id) => write!(f, "unknown identifier `{id}`"),
            ParseErrorKind::NonIntegerExponent => f.write_str("exponent must be an integer"),
            ParseErrorKind::BadNumber => f.write_str("malformed number"),
            ParseErrorKind::Expected(what) => write!(f, "expected {what}"),
        }
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn err<T>(&self, kind: ParseErrorKind, offset: usize) -> Result<T, ParseError> {
        Err(ParseError { kind, offset })
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, ch: u8) -> bool {
        if self.peek() == Some(ch) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, ch: u8, what: &'static str) -> Result<(), ParseError> {
        if self.eat(ch) {
            Ok(())
        } else {
            let at = self.pos;
            match self.src.get(at) {
                None => self.err(ParseErrorKind::UnexpectedEnd, at),
                Some(_) => self.err(ParseErrorKind::Expected(what), at),
            }
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            if self.eat(b'+') {
                lhs = lhs + self.term()?;
            } else if self.eat(b'-') {
                lhs = lhs - self.term()?;
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            if self.eat(b'*') {
                lhs = lhs * self.factor()?;
            } else if self.eat(b'/') {
                lhs = lhs / self.factor()?;
            } else {
                return Ok(lhs);
            }
        }
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        let base = self.unary()?;
        if self.eat(b'^') {
            let n = self.integer()?;
            Ok(base.powi(n))
        } else {
            Ok(base)
        }
    }

    fn integer(&mut self) -> Result<i32, ParseError> {
        self.skip_ws();
        let start = self.pos;
        if self.src.get(self.pos) == Some(&b'-') {
            self.pos += 1;
        }
        let digits_start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if self.pos == digits_start {
            return match self.src.get(self.pos) {
                None => self.err(ParseErrorKind::UnexpectedEnd, self.pos),
                Some(_) => self.err(ParseErrorKind::NonIntegerExponent, start),
            };
        }
        // "2.5", "2e3" or "2i" are not integers
        if let Some(&next) = self.src.get(self.pos) {
            if next == b'.' || next == b'i' || next.is_ascii_alphabetic() {
                return self.err(ParseErrorKind::NonIntegerExponent, start);
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        text.parse::<i32>()
            .or_else(|_| self.err(ParseErrorKind::NonIntegerExponent, start))
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.eat(b'-') {
            Ok(-self.atom()?)
        } else {
            self.atom()
        }
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let Some(ch) = self.peek() else {
            return self.err(ParseErrorKind::UnexpectedEnd, self.pos);
        };
        if ch.is_ascii_digit() || ch == b'.' {
            return self.number();
        }
        if ch == b'(' {
            self.pos += 1;
            let e = self.expr()?;
            self.expect(b')', "`)`")?;
            return Ok(e);
        }
        if ch.is_ascii_alphabetic() {
            let start = self.pos;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphanumeric() {
                self.pos += 1;
            }
            let ident = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
            return match ident {
                "i" => Ok(Expr::Const(c(0.0, 1.0))),
                "pi" => Ok(Expr::Const(c(PI, 0.0))),
                "e" => Ok(Expr::Const(c(E, 0.0))),
                "s" => Ok(Expr::Var(Var::S)),
                "z" => Ok(Expr::Var(Var::Z)),
                "w" => Ok(Expr::Var(Var::W)),
                other => match Func::from_name(other) {
                    Some(f) => {
                        self.expect(b'(', "`(` after function name")?;
                        let arg = self.expr()?;
                        self.expect(b')', "`)`")?;
                        Ok(Expr::call(f, arg))
                    }
                    None => self.err(ParseErrorKind::UnknownIdentifier(other.to_string()), start),
                },
            };
        }
        self.err(ParseErrorKind::UnexpectedChar(ch as char), self.pos)
    }

    fn number(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        let end = scan_decimal(self.src, start);
        if end == start {
            return self.err(ParseErrorKind::BadNumber, start);
        }
        let text = std::str::from_utf8(&self.src[start..end]).expect("ascii");
        let value: f64 = text
            .parse()
            .or_else(|_| self.err(ParseErrorKind::BadNumber, start))?;
        self.pos = end;
        // a trailing `i` marks an imaginary literal, but not the start of an identifier
        if self.src.get(self.pos) == Some(&b'i')
            && !self
                .src
                .get(self.pos + 1)
                .is_some_and(|b| b.is_ascii_alphanumeric())
        {
            self.pos += 1;
            return Ok(Expr::Const(c(0.0, value)));
        }
        Ok(Expr::Const(c(value, 0.0)))
    }
}

/// Scans `digits [. digits] [(e|E) [+|-] digits]` starting at `start`;
/// returns the end offset. The exponent is only consumed when digits follow.
fn scan_decimal(src: &[u8], start: usize) -> usize {
    let mut p = start;
    let digits = |p: &mut usize| {
        let s = *p;
        while *p < src.len() && src[*p].is_ascii_digit() {
            *p += 1;
        }
        *p - s
    };
    let mut n = digits(&mut p);
    if p < src.len() && src[p] == b'.' {
        p += 1;
        n += digits(&mut p);
    }
    if n == 0 {
        return start;
    }
    if p < src.len() && (src[p] == b'e' || src[p] == b'E') {
        let mut q = p + 1;
        if q < src.len() && (src[q] == b'+' || src[q] == b'-') {
            q += 1;
        }
        if digits(&mut q) > 0 {
            p = q;
        }
    }
    p
}

pub fn parse_expr(text: &str) -> Result<Expr, ParseError> {
    let mut p = Parser { src: text.as_bytes(), pos: 0 };
    let e = p.expr()?;
    match p.peek() {
        None => Ok(e),
        Some(ch) => p.err(ParseErrorKind::UnexpectedChar(ch as char), p.pos),
    }
}

/// Parses a complex literal of the form `a+bi`, `a-bi`, `bi`, `i`, `-i` or `a`.
pub fn parse_complex(text: &str) -> Result<ComplexScalar, ParseError> {
    let src = text.trim().as_bytes();
    let bad = |offset| ParseError { kind: ParseErrorKind::BadNumber, offset };
    if src.is_empty() {
        return Err(ParseError { kind: ParseErrorKind::UnexpectedEnd, offset: 0 });
    }
    // one signed component; returns (value, is_imaginary, end)
    let component = |start: usize| -> Result<(f64, bool, usize), ParseError> {
        let mut p = start;
        let mut sign = 1.0;
        if p < src.len() && (src[p] == b'+' || src[p] == b'-') {
            if src[p] == b'-' {
                sign = -1.0;
            }
            p += 1;
        }
        let end = scan_decimal(src, p);
        let magnitude = if end == p {
            1.0
        } else {
            std::str::from_utf8(&src[p..end])
                .expect("ascii")
                .parse::<f64>()
                .map_err(|_| bad(p))?
        };
        if end < src.len() && src[end] == b'i' {
            Ok((sign * magnitude, true, end + 1))
        } else if end == p {
            Err(bad(p))
        } else {
            Ok((sign * magnitude, false, end))
        }
    };
    let (v1, imag1, end1) = component(0)?;
    if end1 == src.len() {
        return Ok(if imag1 { c(0.0, v1) } else { c(v1, 0.0) });
    }
    if imag1 || !(src[end1] == b'+' || src[end1] == b'-') {
        return Err(ParseError {
            kind: ParseErrorKind::UnexpectedChar(src[end1] as char),
            offset: end1,
        });
    }
    let (v2, imag2, end2) = component(end1)?;
    if !imag2 {
        return Err(ParseError { kind: ParseErrorKind::Expected("imaginary part ending in `i`"), offset: end2 });
    }
    if end2 != src.len() {
        return Err(ParseError {
            kind: ParseErrorKind::UnexpectedChar(src[end2] as char),
            offset: end2,
        });
    }
    Ok(c(v1, v2))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k(v: f64) -> Expr {
        Expr::real(v)
    }

    #[test]
    fn identity_expression() {
        assert_eq!(parse_expr("z").unwrap(), Expr::z());
    }

    #[test]
    fn quotient_of_power_and_difference() {
        let e = parse_expr("z^2/(s-0.5)").unwrap();
        assert_eq!(e, Expr::z().powi(2) / (Expr::s() - k(0.5)));
    }

    #[test]
    fn exponential_of_negation() {
        assert_eq!(parse_expr("exp(-z)").unwrap(), Expr::call(Func::Exp, -Expr::z()));
    }

    #[test]
    fn power_binds_to_unary() {
        assert_eq!(parse_expr("-z^2").unwrap(), (-Expr::z()).powi(2));
        assert_eq!(parse_expr("z^-2").unwrap(), Expr::z().powi(-2));
    }

    #[test]
    fn literals() {
        assert_eq!(parse_expr("2i").unwrap(), Expr::Const(c(0.0, 2.0)));
        assert_eq!(parse_expr("1.5").unwrap(), k(1.5));
        assert_eq!(parse_expr("1e-3").unwrap(), k(1e-3));
        assert_eq!(parse_expr("i").unwrap(), Expr::Const(c(0.0, 1.0)));
        assert_eq!(parse_expr(" pi * e ").unwrap(), k(PI) * k(E));
    }

    #[test]
    fn syntax_error_offsets() {
        let err = parse_expr("z + * 2").unwrap_err();
        assert_eq!(err.offset, 4);
        let err = parse_expr("(z + 1").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::UnexpectedEnd);
        let err = parse_expr("z 2").unwrap_err();
        assert_eq!(err, ParseError { kind: ParseErrorKind::UnexpectedChar('2'), offset: 2 });
        let err = parse_expr("").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::UnexpectedEnd);
    }

    #[test]
    fn unknown_identifiers_rejected() {
        for (src, name) in [("conj(z)", "conj"), ("abs(z)", "abs"), ("re(z)", "re"), ("z*x", "x")] {
            let err = parse_expr(src).unwrap_err();
            assert_eq!(err.kind, ParseErrorKind::UnknownIdentifier(name.into()), "{src}");
        }
        assert_eq!(parse_expr("z*x").unwrap_err().offset, 2);
    }

    #[test]
    fn non_integer_exponents_rejected() {
        for src in ["z^2.5", "z^(2)", "z^s", "z^2i", "z^1e3"] {
            let err = parse_expr(src).unwrap_err();
            assert_eq!(err.kind, ParseErrorKind::NonIntegerExponent, "{src}");
            assert_eq!(err.offset, 2, "{src}");
        }
    }

    #[test]
    fn complex_literals() {
        assert_eq!(parse_complex("0.5-2i").unwrap(), c(0.5, -2.0));
        assert_eq!(parse_complex("i").unwrap(), c(0.0, 1.0));
        assert_eq!(parse_complex("-i").unwrap(), c(0.0, -1.0));
        assert_eq!(parse_complex("-3").unwrap(), c(-3.0, 0.0));
        assert_eq!(parse_complex("0.3+0.1i").unwrap(), c(0.3, 0.1));
        assert_eq!(parse_complex("1+i").unwrap(), c(1.0, 1.0));
        assert_eq!(parse_complex("2.5i").unwrap(), c(0.0, 2.5));
        assert_eq!(parse_complex("1e-3-1e-2i").unwrap(), c(1e-3, -1e-2));
        assert!(parse_complex("1+2").is_err());
        assert!(parse_complex("abc").is_err());
        assert!(parse_complex("1 + 2i").is_err());
        assert!(parse_complex("").is_err());
    }
}
