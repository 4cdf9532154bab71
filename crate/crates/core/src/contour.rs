//! Piecewise smooth paths in the complex plane.
//!
//! A [`Contour`] is an ordered list of [`ArcPiece`]s in traversal order. The
//! global parameter `t ∈ [0, 1]` is split uniformly across pieces, so piece
//! `k` of `m` covers `[k/m, (k+1)/m]`.
//!
//! Concatenation is written in traversal order: `concat(a, b)` walks `a`
//! first. In bullet-product notation this is `∫_b ∙ ∫_a`, the first-walked
//! arc being applied innermost.

use std::f64::consts::{PI, TAU};
use std::fmt;

use thiserror::Error;

use crate::expr::{c, parse_complex, parse_expr, Bindings, ComplexScalar, ParseError};
use crate::quad::adaptive_simpson;

/// Absolute tolerance for chaining piece endpoints and for closedness.
pub const CHAIN_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ContourError {
    #[error("parameter t = {0} outside [0, 1]")]
    ParamOutOfRange(f64),
    #[error("endpoint mismatch: gap of {gap:e} between {end} and {start}")]
    EndpointMismatch { end: ComplexScalar, start: ComplexScalar, gap: f64 },
    #[error("radius must be positive and finite, got {0}")]
    InvalidRadius(f64),
    #[error("circle turns must be a nonzero integer")]
    ZeroTurns,
    #[error("contour has no pieces")]
    Empty,
    #[error("contour syntax: {message} at byte {offset}")]
    Syntax { message: String, offset: usize },
    #[error("bad literal: {0}")]
    Literal(#[from] ParseError),
}

/// A single smooth piece parametrised over `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ArcPiece {
    /// Straight segment from `a` to `b`. `a == b` is the null arc.
    Segment { a: ComplexScalar, b: ComplexScalar },
    /// `center + radius·e^{iθ}` with `θ` running from `theta0` to `theta1`.
    Circular { center: ComplexScalar, radius: f64, theta0: f64, theta1: f64 },
}

impl ArcPiece {
    pub fn point(&self, u: f64) -> ComplexScalar {
        match *self {
            ArcPiece::Segment { a, b } => a + (b - a) * u,
            ArcPiece::Circular { center, radius, theta0, theta1 } => {
                let theta = theta0 + (theta1 - theta0) * u;
                center + c(0.0, theta).exp() * radius
            }
        }
    }

    /// Derivative with respect to the local parameter `u ∈ [0, 1]`.
    pub fn derivative(&self, u: f64) -> ComplexScalar {
        match *self {
            ArcPiece::Segment { a, b } => b - a,
            ArcPiece::Circular { radius, theta0, theta1, .. } => {
                let theta = theta0 + (theta1 - theta0) * u;
                c(0.0, theta).exp() * c(0.0, radius * (theta1 - theta0))
            }
        }
    }

    pub fn start(&self) -> ComplexScalar {
        self.point(0.0)
    }

    pub fn end(&self) -> ComplexScalar {
        self.point(1.0)
    }

    pub fn reversed(&self) -> ArcPiece {
        match *self {
            ArcPiece::Segment { a, b } => ArcPiece::Segment { a: b, b: a },
            ArcPiece::Circular { center, radius, theta0, theta1 } => {
                ArcPiece::Circular { center, radius, theta0: theta1, theta1: theta0 }
            }
        }
    }

    pub fn is_null(&self) -> bool {
        match *self {
            ArcPiece::Segment { a, b } => a == b,
            ArcPiece::Circular { theta0, theta1, .. } => theta0 == theta1,
        }
    }

    /// True for a circular piece sweeping a whole number of turns.
    pub fn is_full_turns(&self) -> bool {
        match *self {
            ArcPiece::Segment { .. } => false,
            ArcPiece::Circular { theta0, theta1, .. } => {
                let turns = (theta1 - theta0) / TAU;
                turns.abs() >= 0.5 && (turns - turns.round()).abs() < 1e-12
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Contour {
    pieces: Vec<ArcPiece>,
}

impl Contour {
    pub fn from_pieces(pieces: Vec<ArcPiece>) -> Result<Contour, ContourError> {
        if pieces.is_empty() {
            return Err(ContourError::Empty);
        }
        for p in &pieces {
            if let ArcPiece::Circular { radius, .. } = p {
                if !(radius.is_finite() && *radius > 0.0) {
                    return Err(ContourError::InvalidRadius(*radius));
                }
            }
        }
        for pair in pieces.windows(2) {
            check_chain(pair[0].end(), pair[1].start())?;
        }
        Ok(Contour { pieces })
    }

    pub fn segment(a: ComplexScalar, b: ComplexScalar) -> Contour {
        Contour { pieces: vec![ArcPiece::Segment { a, b }] }
    }

    /// Full circle starting at `center + radius`; negative `turns` run clockwise.
    pub fn circle(center: ComplexScalar, radius: f64, turns: i32) -> Result<Contour, ContourError> {
        if turns == 0 {
            return Err(ContourError::ZeroTurns);
        }
        Contour::arc(center, radius, 0.0, TAU * f64::from(turns))
    }

    pub fn arc(center: ComplexScalar, radius: f64, theta0: f64, theta1: f64) -> Result<Contour, ContourError> {
        Contour::from_pieces(vec![ArcPiece::Circular { center, radius, theta0, theta1 }])
    }

    /// Closed polygon through `vertices`, returning to the first one.
    pub fn polygon(vertices: &[ComplexScalar]) -> Result<Contour, ContourError> {
        let n = vertices.len();
        if n < 2 {
            return Err(ContourError::Empty);
        }
        let pieces = (0..n)
            .map(|k| ArcPiece::Segment { a: vertices[k], b: vertices[(k + 1) % n] })
            .collect();
        Contour::from_pieces(pieces)
    }

    pub fn pieces(&self) -> &[ArcPiece] {
        &self.pieces
    }

    pub fn start(&self) -> ComplexScalar {
        self.pieces[0].start()
    }

    pub fn end(&self) -> ComplexScalar {
        self.pieces[self.pieces.len() - 1].end()
    }

    pub fn is_closed(&self) -> bool {
        (self.start() - self.end()).norm() <= CHAIN_TOL
    }

    fn locate(&self, t: f64) -> Result<(usize, f64), ContourError> {
        if !(0.0..=1.0).contains(&t) {
            return Err(ContourError::ParamOutOfRange(t));
        }
        let m = self.pieces.len();
        let scaled = t * m as f64;
        let idx = (scaled.floor() as usize).min(m - 1);
        Ok((idx, scaled - idx as f64))
    }

    pub fn point_at(&self, t: f64) -> Result<ComplexScalar, ContourError> {
        let (idx, u) = self.locate(t)?;
        Ok(self.pieces[idx].point(u))
    }

    pub fn derivative_at(&self, t: f64) -> Result<ComplexScalar, ContourError> {
        let (idx, u) = self.locate(t)?;
        Ok(self.pieces[idx].derivative(u) * self.pieces.len() as f64)
    }

    pub fn concat(&self, second: &Contour) -> Result<Contour, ContourError> {
        check_chain(self.end(), second.start())?;
        let mut pieces = self.pieces.clone();
        pieces.extend_from_slice(&second.pieces);
        Ok(Contour { pieces })
    }

    pub fn rev(&self) -> Contour {
        Contour { pieces: self.pieces.iter().rev().map(ArcPiece::reversed).collect() }
    }

    pub fn arclength(&self) -> f64 {
        self.pieces
            .iter()
            .map(|p| {
                adaptive_simpson(|u| Ok(c(p.derivative(u).norm(), 0.0)), 0.0, 1.0, 1e-10, 1e-15)
                    .map(|v| v.re)
                    .unwrap_or(f64::NAN)
            })
            .sum()
    }

    /// Winding number of a closed contour about `p` (0.0 for open contours
    /// is not meaningful; the accumulated angle / 2π is returned regardless).
    pub fn winding_number(&self, p: ComplexScalar) -> f64 {
        let mut angle = 0.0;
        for piece in &self.pieces {
            let chunks = 256;
            let mut prev = piece.point(0.0) - p;
            for k in 1..=chunks {
                let next = piece.point(k as f64 / chunks as f64) - p;
                angle += (next / prev).arg();
                prev = next;
            }
        }
        angle / TAU
    }
}

fn check_chain(end: ComplexScalar, start: ComplexScalar) -> Result<(), ContourError> {
    let gap = (end - start).norm();
    if gap <= CHAIN_TOL {
        Ok(())
    } else {
        Err(ContourError::EndpointMismatch { end, start, gap })
    }
}

impl fmt::Display for Contour {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, p) in self.pieces.iter().enumerate() {
            if k > 0 {
                f.write_str(" > ")?;
            }
            match *p {
                ArcPiece::Segment { a, b } => write!(f, "seg({},{})", fmt_c(a), fmt_c(b))?,
                ArcPiece::Circular { center, radius, theta0, theta1 } => {
                    write!(f, "arc({},{radius:?},{theta0:?},{theta1:?})", fmt_c(center))?
                }
            }
        }
        Ok(())
    }
}

/// Formats a complex number in the `a+bi` literal convention.
pub fn fmt_c(v: ComplexScalar) -> String {
    if v.im == 0.0 {
        format!("{:?}", v.re)
    } else {
        let sign = if v.im < 0.0 { '-' } else { '+' };
        format!("{:?}{sign}{:?}i", v.re, v.im.abs())
    }
}

// ---------------------------------------------------------------------------
// Contour spec mini-language:
//   contour := term (">" term)*
//   term    := "seg(" c "," c ")" | "circle(" c "," r ["," turns] ")"
//            | "arc(" c "," r "," θ0 "," θ1 ")" | "rev(" contour ")"

/// Parses a contour spec such as `seg(0,1) > arc(0,1,0,pi/2)`.
pub fn parse_contour(text: &str) -> Result<Contour, ContourError> {
    parse_chain(text, 0)
}

fn syntax(message: impl Into<String>, offset: usize) -> ContourError {
    ContourError::Syntax { message: message.into(), offset }
}

/// Splits `text` on `sep` at parenthesis depth zero, keeping offsets.
fn split_top(text: &str, sep: u8, base: usize) -> Result<Vec<(&str, usize)>, ContourError> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, b) in text.bytes().enumerate() {
        match b {
            b'(' => depth += 1,
            b')' => {
                depth -= 1;
                if depth < 0 {
                    return Err(syntax("unbalanced `)`", base + i));
                }
            }
            _ if b == sep && depth == 0 => {
                out.push((&text[start..i], base + start));
                start = i + 1;
            }
            _ => {}
        }
    }
    if depth != 0 {
        return Err(syntax("unbalanced `(`", base + text.len()));
    }
    out.push((&text[start..], base + start));
    Ok(out)
}

fn parse_chain(text: &str, base: usize) -> Result<Contour, ContourError> {
    let mut result: Option<Contour> = None;
    for (term, off) in split_top(text, b'>', base)? {
        let next = parse_term(term, off)?;
        result = Some(match result {
            None => next,
            Some(acc) => acc.concat(&next)?,
        });
    }
    result.ok_or(ContourError::Empty)
}

fn parse_term(text: &str, base: usize) -> Result<Contour, ContourError> {
    let lead = text.len() - text.trim_start().len();
    let body = text.trim();
    let base = base + lead;
    let open = body.find('(').ok_or_else(|| syntax("expected `name(...)`", base))?;
    if !body.ends_with(')') {
        return Err(syntax("expected `)`", base + body.len()));
    }
    let name = body[..open].trim();
    let inner = &body[open + 1..body.len() - 1];
    let inner_base = base + open + 1;
    if name == "rev" {
        return Ok(parse_chain(inner, inner_base)?.rev());
    }
    let args = split_top(inner, b',', inner_base)?;
    let complex = |(s, off): (&str, usize)| {
        parse_complex(s).map_err(|e| ContourError::Literal(ParseError { offset: e.offset + off, ..e }))
    };
    let real = |(s, off): (&str, usize)| -> Result<f64, ContourError> {
        let e = parse_expr(s).map_err(|e| ContourError::Literal(ParseError { offset: e.offset + off, ..e }))?;
        let v = e
            .eval(&Bindings::new())
            .map_err(|_| syntax("expected a real constant", off))?;
        if v.im != 0.0 {
            return Err(syntax("expected a real constant", off));
        }
        Ok(v.re)
    };
    let arity = |n: &[usize]| -> Result<(), ContourError> {
        if n.contains(&args.len()) {
            Ok(())
        } else {
            Err(syntax(format!("`{name}` takes {n:?} arguments, got {}", args.len()), base))
        }
    };
    match name {
        "seg" => {
            arity(&[2])?;
            Ok(Contour::segment(complex(args[0])?, complex(args[1])?))
        }
        "circle" => {
            arity(&[2, 3])?;
            let turns = if args.len() == 3 {
                let t = real(args[2])?;
                if t.fract() != 0.0 {
                    return Err(syntax("turns must be an integer", args[2].1));
                }
                t as i32
            } else {
                1
            };
            Contour::circle(complex(args[0])?, real(args[1])?, turns)
        }
        "arc" => {
            arity(&[4])?;
            Contour::arc(complex(args[0])?, real(args[1])?, real(args[2])?, real(args[3])?)
        }
        other => Err(syntax(format!("unknown contour term `{other}`"), base)),
    }
}

/// Unit circle traversed once counter-clockwise from 1.
pub fn unit_circle() -> Contour {
    Contour::circle(c(0.0, 0.0), 1.0, 1).expect("valid circle")
}

/// Upper half of the unit circle from 1 to -1.
pub fn upper_half_circle() -> Contour {
    Contour::arc(c(0.0, 0.0), 1.0, 0.0, PI).expect("valid arc")
}
