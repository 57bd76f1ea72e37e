//! Recursive-descent parser for the expression grammar in the module docs.

use super::Expr;
use num_complex::Complex64;
use std::fmt;
use std::sync::Arc;

/// Syntax error with a byte position into the source text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub pos: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "parse error at byte {}: {}", self.pos, self.message)
    }
}

impl std::error::Error for ParseError {}

/// Parse an expression. Printing the result with `Display` and re-parsing
/// yields a structurally equal tree.
pub fn parse_expr(text: &str) -> Result<Expr, ParseError> {
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
    };
    p.skip_ws();
    let (e, _) = p.expr()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(p.err("unexpected trailing input"));
    }
    Ok(e)
}

/// Tracks whether a parsed operand is a bare numeric literal, so that the
/// surface form `a + bi` can be folded into a single complex constant
/// without touching explicitly parenthesized sums.
#[derive(Clone, Copy, PartialEq, Eq)]
enum Lit {
    Real,
    Imag,
    Other,
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn err(&self, msg: &str) -> ParseError {
        ParseError {
            pos: self.pos,
            message: msg.to_string(),
        }
    }

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
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<(Expr, Lit), ParseError> {
        let (mut lhs, mut lk) = self.term()?;
        loop {
            self.skip_ws();
            let op = match self.peek() {
                Some(b'+') => b'+',
                Some(b'-') => b'-',
                _ => break,
            };
            self.pos += 1;
            self.skip_ws();
            let (rhs, rk) = self.term()?;
            let fold = matches!(
                (lk, rk),
                (Lit::Real, Lit::Imag) | (Lit::Imag, Lit::Real)
            );
            if fold {
                let (Expr::Const(a), Expr::Const(b)) = (&lhs, &rhs) else {
                    unreachable!()
                };
                let b = if op == b'+' { *b } else { -*b };
                lhs = Expr::Const(a + b);
                lk = Lit::Other;
            } else {
                lhs = if op == b'+' {
                    Expr::Add(Arc::new(lhs), Arc::new(rhs))
                } else {
                    Expr::Sub(Arc::new(lhs), Arc::new(rhs))
                };
                lk = Lit::Other;
            }
        }
        Ok((lhs, lk))
    }

    fn term(&mut self) -> Result<(Expr, Lit), ParseError> {
        let (mut lhs, mut lk) = self.factor()?;
        loop {
            self.skip_ws();
            let op = match self.peek() {
                Some(b'*') => b'*',
                Some(b'/') => b'/',
                _ => break,
            };
            self.pos += 1;
            self.skip_ws();
            let (rhs, _) = self.factor()?;
            lhs = if op == b'*' {
                Expr::Mul(Arc::new(lhs), Arc::new(rhs))
            } else {
                Expr::Div(Arc::new(lhs), Arc::new(rhs))
            };
            lk = Lit::Other;
        }
        Ok((lhs, lk))
    }

    fn factor(&mut self) -> Result<(Expr, Lit), ParseError> {
        let (base, lk) = self.unary()?;
        self.skip_ws();
        if self.eat(b'^') {
            self.skip_ws();
            let e = self.exponent()?;
            return Ok((Expr::Pow(Arc::new(base), e), Lit::Other));
        }
        Ok((base, lk))
    }

    /// Exponents are literal real constants, optionally negated or
    /// parenthesized. Anything else is rejected.
    fn exponent(&mut self) -> Result<f64, ParseError> {
        if self.eat(b'(') {
            self.skip_ws();
            let v = self.exponent_inner()?;
            self.skip_ws();
            if !self.eat(b')') {
                return Err(self.err("expected ')' after exponent"));
            }
            return Ok(v);
        }
        self.exponent_inner()
    }

    fn exponent_inner(&mut self) -> Result<f64, ParseError> {
        let neg = self.eat(b'-');
        self.skip_ws();
        match self.peek() {
            Some(c) if c.is_ascii_digit() || c == b'.' => {
                let v = self.number()?;
                Ok(if neg { -v } else { v })
            }
            _ => Err(self.err("exponent must be a real numeric constant")),
        }
    }

    fn unary(&mut self) -> Result<(Expr, Lit), ParseError> {
        if self.eat(b'-') {
            self.skip_ws();
            let (inner, lk) = self.unary()?;
            // fold minus on bare literals so `-2` is one constant
            if lk != Lit::Other {
                let Expr::Const(c) = inner else { unreachable!() };
                return Ok((Expr::Const(-c), lk));
            }
            return Ok((Expr::Neg(Arc::new(inner)), Lit::Other));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<(Expr, Lit), ParseError> {
        self.skip_ws();
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                self.skip_ws();
                let (e, _) = self.expr()?;
                self.skip_ws();
                if !self.eat(b')') {
                    return Err(self.err("expected ')'"));
                }
                Ok((e, Lit::Other))
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => {
                let v = self.number()?;
                if self.eat(b'i') {
                    Ok((Expr::Const(Complex64::new(0.0, v)), Lit::Imag))
                } else {
                    Ok((Expr::Const(Complex64::new(v, 0.0)), Lit::Real))
                }
            }
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.ident(),
            Some(_) => Err(self.err("expected a number, identifier or '('")),
            None => Err(self.err("unexpected end of input")),
        }
    }

    fn ident(&mut self) -> Result<(Expr, Lit), ParseError> {
        let start = self.pos;
        while self
            .peek()
            .map(|c| c.is_ascii_alphanumeric() || c == b'_')
            .unwrap_or(false)
        {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        match name {
            "i" => return Ok((Expr::Const(Complex64::new(0.0, 1.0)), Lit::Imag)),
            "log" | "exp" | "abs2" | "conj" | "re" | "im" => {
                let mut args = self.call_args(name)?;
                if args.len() != 1 {
                    self.pos = start;
                    return Err(self.err(&format!("{name} takes exactly one argument")));
                }
                let a = Arc::new(args.pop().unwrap());
                let e = match name {
                    "log" => Expr::Log(a),
                    "exp" => Expr::Exp(a),
                    "abs2" => Expr::Abs2(a),
                    "conj" => Expr::Conj(a),
                    "re" => Expr::Re(a),
                    _ => Expr::Im(a),
                };
                return Ok((e, Lit::Other));
            }
            "min" | "max" => {
                let mut args = self.call_args(name)?;
                if args.len() != 2 {
                    self.pos = start;
                    return Err(self.err(&format!("{name} takes exactly two arguments")));
                }
                let b = Arc::new(args.pop().unwrap());
                let a = Arc::new(args.pop().unwrap());
                let e = if name == "min" {
                    Expr::Min(a, b)
                } else {
                    Expr::Max(a, b)
                };
                return Ok((e, Lit::Other));
            }
            _ => {}
        }
        if let Some(rest) = name.strip_prefix('z') {
            if !rest.is_empty() && rest.bytes().all(|c| c.is_ascii_digit()) {
                let k: usize = rest.parse().map_err(|_| ParseError {
                    pos: start,
                    message: "coordinate index out of range".into(),
                })?;
                if k == 0 {
                    return Err(ParseError {
                        pos: start,
                        message: "coordinates are 1-based (z1, z2, ...)".into(),
                    });
                }
                return Ok((Expr::Coord(k - 1), Lit::Other));
            }
        }
        // any other identifier is a named real parameter
        Ok((Expr::Param(name.to_string()), Lit::Other))
    }

    fn call_args(&mut self, name: &str) -> Result<Vec<Expr>, ParseError> {
        self.skip_ws();
        if !self.eat(b'(') {
            return Err(self.err(&format!("expected '(' after {name}")));
        }
        let mut args = Vec::new();
        loop {
            self.skip_ws();
            let (e, _) = self.expr()?;
            args.push(e);
            self.skip_ws();
            if self.eat(b',') {
                continue;
            }
            if self.eat(b')') {
                return Ok(args);
            }
            return Err(self.err("expected ',' or ')' in argument list"));
        }
    }

    fn number(&mut self) -> Result<f64, ParseError> {
        let start = self.pos;
        while self
            .peek()
            .map(|c| c.is_ascii_digit() || c == b'.')
            .unwrap_or(false)
        {
            self.pos += 1;
        }
        // scientific notation
        if matches!(self.peek(), Some(b'e') | Some(b'E')) {
            let mark = self.pos;
            self.pos += 1;
            if matches!(self.peek(), Some(b'+') | Some(b'-')) {
                self.pos += 1;
            }
            if self.peek().map(|c| c.is_ascii_digit()).unwrap_or(false) {
                while self.peek().map(|c| c.is_ascii_digit()).unwrap_or(false) {
                    self.pos += 1;
                }
            } else {
                self.pos = mark; // not an exponent suffix, e.g. `2e` param? back off
            }
        }
        let s = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        s.parse::<f64>().map_err(|_| ParseError {
            pos: start,
            message: format!("invalid number literal '{s}'"),
        })
    }
}
