//! Arithmetic expressions in one variable `t`.
//!
//! Grammar (lowest precedence first):
//!
//! ```text
//! sum     := product (('+' | '-') product)*
//! product := unary (('*' | '/') unary)*
//! unary   := '-' unary | '+' unary | power
//! power   := atom ('^' unary)?
//! atom    := number | 't' | 'pi' | 'e' | func '(' sum ')' | '(' sum ')'
//! func    := sin | cos | tan | exp | log | sqrt | abs
//! ```
//!
//! `^` is right-associative and binds tighter than unary minus, so `-t^2`
//! is `-(t^2)`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{PathPoint, PathSpec, SpecSource, TubeProfile};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sqrt,
    Abs,
}

impl Func {
    fn from_name(s: &str) -> Option<Func> {
        Some(match s {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            _ => return None,
        })
    }

    fn apply(self, x: f64) -> f64 {
        match self {
            Func::Sin => x.sin(),
            Func::Cos => x.cos(),
            Func::Tan => x.tan(),
            Func::Exp => x.exp(),
            Func::Log => x.ln(),
            Func::Sqrt => x.sqrt(),
            Func::Abs => x.abs(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

impl Expr {
    pub fn parse(src: &str) -> Result<Expr> {
        let tokens = lex(src)?;
        let mut p = Parser { tokens, pos: 0 };
        let e = p.sum()?;
        if p.pos != p.tokens.len() {
            return Err(Error::Expr(format!("unexpected {:?} in {src:?}", p.tokens[p.pos])));
        }
        Ok(e)
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Expr::Num(v) => *v,
            Expr::Var => t,
            Expr::Neg(a) => -a.eval(t),
            Expr::Add(a, b) => a.eval(t) + b.eval(t),
            Expr::Sub(a, b) => a.eval(t) - b.eval(t),
            Expr::Mul(a, b) => a.eval(t) * b.eval(t),
            Expr::Div(a, b) => a.eval(t) / b.eval(t),
            Expr::Pow(a, b) => {
                let base = a.eval(t);
                match **b {
                    Expr::Num(n) if n.fract() == 0.0 && n.abs() < 64.0 => base.powi(n as i32),
                    _ => base.powf(b.eval(t)),
                }
            }
            Expr::Call(f, a) => f.apply(a.eval(t)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
}

fn lex(src: &str) -> Result<Vec<Tok>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            // exponent part, only when followed by a digit (so `2e` is 2 * e)
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text: String = chars[start..i].iter().collect();
            let v: f64 = text
                .parse()
                .map_err(|_| Error::Expr(format!("bad number {text:?}")))?;
            out.push(Tok::Num(v));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Tok::Ident(chars[start..i].iter().collect()));
        } else if "+-*/^".contains(c) {
            out.push(Tok::Op(c));
            i += 1;
        } else if c == '−' {
            out.push(Tok::Op('-'));
            i += 1;
        } else if c == '(' {
            out.push(Tok::LParen);
            i += 1;
        } else if c == ')' {
            out.push(Tok::RParen);
            i += 1;
        } else {
            return Err(Error::Expr(format!("unexpected character {c:?} in {src:?}")));
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Tok>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.tokens.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn sum(&mut self) -> Result<Expr> {
        let mut lhs = self.product()?;
        while let Some(Tok::Op(op @ ('+' | '-'))) = self.peek().cloned() {
            self.pos += 1;
            let rhs = self.product()?;
            lhs = if op == '+' {
                Expr::Add(Box::new(lhs), Box::new(rhs))
            } else {
                Expr::Sub(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn product(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        while let Some(Tok::Op(op @ ('*' | '/'))) = self.peek().cloned() {
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = if op == '*' {
                Expr::Mul(Box::new(lhs), Box::new(rhs))
            } else {
                Expr::Div(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr> {
        match self.peek() {
            Some(Tok::Op('-')) => {
                self.pos += 1;
                Ok(Expr::Neg(Box::new(self.unary()?)))
            }
            Some(Tok::Op('+')) => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if let Some(Tok::Op('^')) = self.peek() {
            self.pos += 1;
            let exp = self.unary()?;
            return Ok(Expr::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.next() {
            Some(Tok::Num(v)) => Ok(Expr::Num(v)),
            Some(Tok::Ident(name)) => match name.as_str() {
                "t" => Ok(Expr::Var),
                "pi" => Ok(Expr::Num(std::f64::consts::PI)),
                "e" => Ok(Expr::Num(std::f64::consts::E)),
                other => {
                    let f = Func::from_name(other)
                        .ok_or_else(|| Error::Expr(format!("unknown identifier {other:?}")))?;
                    match self.next() {
                        Some(Tok::LParen) => {}
                        _ => return Err(Error::Expr(format!("expected '(' after {other}"))),
                    }
                    let arg = self.sum()?;
                    match self.next() {
                        Some(Tok::RParen) => Ok(Expr::Call(f, Box::new(arg))),
                        _ => Err(Error::Expr(format!("missing ')' after {other}(...)"))),
                    }
                }
            },
            Some(Tok::LParen) => {
                let e = self.sum()?;
                match self.next() {
                    Some(Tok::RParen) => Ok(e),
                    _ => Err(Error::Expr("missing ')'".into())),
                }
            }
            Some(tok) => Err(Error::Expr(format!("unexpected {tok:?}"))),
            None => Err(Error::Expr("unexpected end of expression".into())),
        }
    }
}

/// Source strings of a user-supplied tube; derivatives are given explicitly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExprSet {
    pub f: String,
    pub df: String,
    pub ddf: String,
    #[serde(rename = "L")]
    pub l: String,
    #[serde(rename = "dL")]
    pub dl: String,
    #[serde(rename = "ddL")]
    pub ddl: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolution: Option<f64>,
}

pub struct ExprProfile {
    exprs: [Expr; 6],
    resolution: Option<f64>,
}

impl fmt::Debug for ExprProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ExprProfile").finish_non_exhaustive()
    }
}

impl TubeProfile for ExprProfile {
    fn point(&self, t: f64) -> PathPoint {
        let [f, df, ddf, l, dl, ddl] = &self.exprs;
        PathPoint {
            f: f.eval(t),
            df: df.eval(t),
            ddf: ddf.eval(t),
            l: l.eval(t),
            dl: dl.eval(t),
            ddl: ddl.eval(t),
        }
    }

    fn resolution(&self, _t: f64) -> Option<f64> {
        self.resolution
    }
}

impl ExprSet {
    pub fn compile(&self, name: &str) -> Result<PathSpec> {
        let parse = |label: &str, s: &str| {
            Expr::parse(s).map_err(|e| Error::Expr(format!("{label}: {e}")))
        };
        let exprs = [
            parse("f", &self.f)?,
            parse("df", &self.df)?,
            parse("ddf", &self.ddf)?,
            parse("L", &self.l)?,
            parse("dL", &self.dl)?,
            parse("ddL", &self.ddl)?,
        ];
        if let Some(r) = self.resolution {
            if !(r > 0.0) {
                return Err(Error::Config(format!("resolution must be positive, got {r}")));
            }
        }
        Ok(PathSpec::new(
            name,
            SpecSource::Custom { exprs: self.clone() },
            Arc::new(ExprProfile {
                exprs,
                resolution: self.resolution,
            }),
        ))
    }
}
