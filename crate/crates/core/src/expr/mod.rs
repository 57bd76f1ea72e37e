//! Scalar expression language for metric entries, weights and psh functions.
//!
//! Expressions are written over the coordinates `z1..zn` of a polydisc in ℂⁿ,
//! complex literals and named real parameters. The grammar (EBNF):
//!
//! ```text
//! expr     = term , { ("+" | "-") , term } ;
//! term     = factor , { ("*" | "/") , factor } ;
//! factor   = unary , [ "^" , exponent ] ;
//! unary    = "-" , unary | primary ;
//! primary  = number | imaginary | ident | call | "(" , expr , ")" ;
//! call     = fname , "(" , expr , { "," , expr } , ")" ;
//! fname    = "log" | "exp" | "min" | "max" | "abs2" | "conj" | "re" | "im" ;
//! exponent = [ "-" ] , number | "(" , [ "-" ] , number , ")" ;
//! ident    = "z" , digits           (* coordinate, 1-based *)
//!          | letter , { letter | digit | "_" }   (* real parameter *) ;
//! imaginary = [ number ] , "i" ;
//! number   = float literal ;
//! ```
//!
//! Exponents must be literal real constants: evaluation stays single-valued
//! without a branch-cut policy. `abs2(w)` is |w|². Values extend the reals
//! with tagged `+inf`/`-inf` so that a weight such as `log(abs2(z1))` is
//! well-defined (`-inf`) at its pole; see [`Value`].
//!
//! Trees are immutable after parsing and evaluation is pure, so expressions
//! can be shared freely across worker threads.

mod eval;
mod parse;

pub use eval::{eval_expr, EvalPoint, Value};
pub use parse::{parse_expr, ParseError};

use num_complex::Complex64;
use std::fmt;
use std::sync::Arc;

/// Expression tree. Binary nodes hold `Arc`s so subtrees can be shared
/// when metrics are composed (twists, normalizations).
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    /// Coordinate `z{k+1}` (stored 0-based).
    Coord(usize),
    /// Complex literal.
    Const(Complex64),
    /// Named real parameter, bound at evaluation time.
    Param(String),
    Neg(Arc<Expr>),
    Add(Arc<Expr>, Arc<Expr>),
    Sub(Arc<Expr>, Arc<Expr>),
    Mul(Arc<Expr>, Arc<Expr>),
    Div(Arc<Expr>, Arc<Expr>),
    /// Power by a real literal constant.
    Pow(Arc<Expr>, f64),
    Log(Arc<Expr>),
    Exp(Arc<Expr>),
    Min(Arc<Expr>, Arc<Expr>),
    Max(Arc<Expr>, Arc<Expr>),
    /// |w|²
    Abs2(Arc<Expr>),
    Conj(Arc<Expr>),
    Re(Arc<Expr>),
    Im(Arc<Expr>),
}

impl Expr {
    pub fn constant(re: f64) -> Self {
        Expr::Const(Complex64::new(re, 0.0))
    }

    pub fn coord(k: usize) -> Self {
        Expr::Coord(k)
    }

    pub fn add(a: Expr, b: Expr) -> Self {
        Expr::Add(Arc::new(a), Arc::new(b))
    }

    pub fn sub(a: Expr, b: Expr) -> Self {
        Expr::Sub(Arc::new(a), Arc::new(b))
    }

    pub fn mul(a: Expr, b: Expr) -> Self {
        Expr::Mul(Arc::new(a), Arc::new(b))
    }

    pub fn div(a: Expr, b: Expr) -> Self {
        Expr::Div(Arc::new(a), Arc::new(b))
    }

    pub fn pow(a: Expr, e: f64) -> Self {
        Expr::Pow(Arc::new(a), e)
    }

    pub fn log(a: Expr) -> Self {
        Expr::Log(Arc::new(a))
    }

    pub fn exp(a: Expr) -> Self {
        Expr::Exp(Arc::new(a))
    }

    pub fn abs2(a: Expr) -> Self {
        Expr::Abs2(Arc::new(a))
    }

    pub fn conj(a: Expr) -> Self {
        Expr::Conj(Arc::new(a))
    }

    pub fn neg(a: Expr) -> Self {
        Expr::Neg(Arc::new(a))
    }

    /// Largest coordinate index used, plus one (0 for constant expressions).
    pub fn arity(&self) -> usize {
        match self {
            Expr::Coord(k) => k + 1,
            Expr::Const(_) | Expr::Param(_) => 0,
            Expr::Neg(a)
            | Expr::Pow(a, _)
            | Expr::Log(a)
            | Expr::Exp(a)
            | Expr::Abs2(a)
            | Expr::Conj(a)
            | Expr::Re(a)
            | Expr::Im(a) => a.arity(),
            Expr::Add(a, b)
            | Expr::Sub(a, b)
            | Expr::Mul(a, b)
            | Expr::Div(a, b)
            | Expr::Min(a, b)
            | Expr::Max(a, b) => a.arity().max(b.arity()),
        }
    }
}

fn fmt_const(c: Complex64, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if c.im == 0.0 {
        if c.re < 0.0 {
            write!(f, "({})", c.re)
        } else {
            write!(f, "{}", c.re)
        }
    } else if c.re == 0.0 {
        if c.im < 0.0 {
            write!(f, "({}i)", c.im)
        } else {
            write!(f, "{}i", c.im)
        }
    } else {
        // mixed literal; the parser folds `a + bi` back into one constant
        write!(f, "({} + {}i)", c.re, c.im)
    }
}

impl fmt::Display for Expr {
    /// Prints a form that re-parses to a structurally equal tree.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Coord(k) => write!(f, "z{}", k + 1),
            Expr::Const(c) => fmt_const(*c, f),
            Expr::Param(name) => write!(f, "{name}"),
            Expr::Neg(a) => write!(f, "(-({a}))"),
            Expr::Add(a, b) => write!(f, "(({a}) + ({b}))"),
            Expr::Sub(a, b) => write!(f, "(({a}) - ({b}))"),
            Expr::Mul(a, b) => write!(f, "(({a}) * ({b}))"),
            Expr::Div(a, b) => write!(f, "(({a}) / ({b}))"),
            Expr::Pow(a, e) => {
                if *e < 0.0 {
                    write!(f, "(({a})^({e}))")
                } else {
                    write!(f, "(({a})^{e})")
                }
            }
            Expr::Log(a) => write!(f, "log({a})"),
            Expr::Exp(a) => write!(f, "exp({a})"),
            Expr::Min(a, b) => write!(f, "min({a}, {b})"),
            Expr::Max(a, b) => write!(f, "max({a}, {b})"),
            Expr::Abs2(a) => write!(f, "abs2({a})"),
            Expr::Conj(a) => write!(f, "conj({a})"),
            Expr::Re(a) => write!(f, "re({a})"),
            Expr::Im(a) => write!(f, "im({a})"),
        }
    }
}

#[cfg(test)]
mod tests;
