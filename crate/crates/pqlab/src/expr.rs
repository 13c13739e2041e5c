//! A tiny arithmetic expression grammar for weight and exponent fields.
//!
//! Supported syntax: numeric literals, coordinates `x1`/`x2`, the operators
//! `+ - * / ^` (with `^` binding tightest and associating right), parentheses,
//! and the functions `abs(e)`, `min(a,b)`, `max(a,b)` and `qdist(k)`.
//!
//! `qdist(k)` is the Euclidean distance from the evaluation point to the
//! closed quarter-box of the domain anchored at corner `k` (bit `d` of `k`
//! selects the high side along axis `d`); it is the grammar's
//! distance-to-box-corner primitive.

use crate::error::{Error, Result};
use crate::geometry::{BoxN, Point};
use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Coord(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Abs(Box<Expr>),
    Min(Box<Expr>, Box<Expr>),
    Max(Box<Expr>, Box<Expr>),
    QuadrantDist(usize),
}

impl Expr {
    pub fn parse(src: &str) -> Result<Expr> {
        let mut p = Parser { src: src.as_bytes(), pos: 0 };
        p.skip_ws();
        let e = p.expr()?;
        p.skip_ws();
        if p.pos != p.src.len() {
            return Err(Error::Parse(format!(
                "trailing input at byte {} in expression {src:?}",
                p.pos
            )));
        }
        Ok(e)
    }

    pub fn constant(v: f64) -> Expr {
        Expr::Const(v)
    }

    /// Evaluate at point `x` relative to the domain box (needed by `qdist`).
    pub fn eval(&self, x: &Point, domain: &BoxN) -> f64 {
        match self {
            Expr::Const(v) => *v,
            Expr::Coord(d) => x[*d],
            Expr::Neg(a) => -a.eval(x, domain),
            Expr::Add(a, b) => a.eval(x, domain) + b.eval(x, domain),
            Expr::Sub(a, b) => a.eval(x, domain) - b.eval(x, domain),
            Expr::Mul(a, b) => a.eval(x, domain) * b.eval(x, domain),
            Expr::Div(a, b) => a.eval(x, domain) / b.eval(x, domain),
            Expr::Pow(a, b) => a.eval(x, domain).powf(b.eval(x, domain)),
            Expr::Abs(a) => a.eval(x, domain).abs(),
            Expr::Min(a, b) => a.eval(x, domain).min(b.eval(x, domain)),
            Expr::Max(a, b) => a.eval(x, domain).max(b.eval(x, domain)),
            Expr::QuadrantDist(k) => domain.quadrant(*k).dist_to_set(x),
        }
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            self.skip_ws();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(Error::Parse(format!(
                "expected {:?} at byte {}",
                c as char, self.pos
            )))
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut e = self.term()?;
        loop {
            if self.eat(b'+') {
                e = Expr::Add(Box::new(e), Box::new(self.term()?));
            } else if self.eat(b'-') {
                e = Expr::Sub(Box::new(e), Box::new(self.term()?));
            } else {
                return Ok(e);
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut e = self.unary()?;
        loop {
            if self.eat(b'*') {
                e = Expr::Mul(Box::new(e), Box::new(self.unary()?));
            } else if self.eat(b'/') {
                e = Expr::Div(Box::new(e), Box::new(self.unary()?));
            } else {
                return Ok(e);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat(b'-') {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.eat(b'^') {
            // right-associative; allow a leading minus in the exponent
            let exp = self.unary()?;
            return Ok(Expr::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        self.skip_ws();
        match self.peek() {
            Some(b'(') => {
                self.eat(b'(');
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => self.ident(),
            other => Err(Error::Parse(format!(
                "unexpected token {other:?} at byte {}",
                self.pos
            ))),
        }
    }

    fn number(&mut self) -> Result<Expr> {
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c.is_ascii_digit() || c == b'.' {
                self.pos += 1;
            } else if (c == b'e' || c == b'E')
                && self.pos > start
                && self
                    .src
                    .get(self.pos + 1)
                    .is_some_and(|d| d.is_ascii_digit() || *d == b'-' || *d == b'+')
            {
                self.pos += 2;
            } else {
                break;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        let v: f64 = text
            .parse()
            .map_err(|_| Error::Parse(format!("bad number {text:?}")))?;
        self.skip_ws();
        Ok(Expr::Const(v))
    }

    fn ident(&mut self) -> Result<Expr> {
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c.is_ascii_alphanumeric() || c == b'_' {
                self.pos += 1;
            } else {
                break;
            }
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap().to_string();
        self.skip_ws();
        match name.as_str() {
            "x1" => Ok(Expr::Coord(0)),
            "x2" => Ok(Expr::Coord(1)),
            "abs" => {
                self.expect(b'(')?;
                let a = self.expr()?;
                self.expect(b')')?;
                Ok(Expr::Abs(Box::new(a)))
            }
            "min" | "max" => {
                self.expect(b'(')?;
                let a = self.expr()?;
                self.expect(b',')?;
                let b = self.expr()?;
                self.expect(b')')?;
                if name == "min" {
                    Ok(Expr::Min(Box::new(a), Box::new(b)))
                } else {
                    Ok(Expr::Max(Box::new(a), Box::new(b)))
                }
            }
            "qdist" => {
                self.expect(b'(')?;
                let k = self.expr()?;
                self.expect(b')')?;
                match k {
                    Expr::Const(v) if v >= 0.0 && v.fract() == 0.0 && v < 4.0 => {
                        Ok(Expr::QuadrantDist(v as usize))
                    }
                    _ => Err(Error::Parse("qdist takes a corner index 0..=3".into())),
                }
            }
            _ => Err(Error::Parse(format!("unknown identifier {name:?}"))),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Fully parenthesized canonical form; parse(display(e)) == e.
        match self {
            Expr::Const(v) => write!(f, "{v}"),
            Expr::Coord(d) => write!(f, "x{}", d + 1),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Add(a, b) => write!(f, "({a}+{b})"),
            Expr::Sub(a, b) => write!(f, "({a}-{b})"),
            Expr::Mul(a, b) => write!(f, "({a}*{b})"),
            Expr::Div(a, b) => write!(f, "({a}/{b})"),
            Expr::Pow(a, b) => write!(f, "({a}^{b})"),
            Expr::Abs(a) => write!(f, "abs({a})"),
            Expr::Min(a, b) => write!(f, "min({a},{b})"),
            Expr::Max(a, b) => write!(f, "max({a},{b})"),
            Expr::QuadrantDist(k) => write!(f, "qdist({k})"),
        }
    }
}
