//! A small arithmetic expression language over the chart variables `x` and `y`.
//!
//! Grammar (usual precedence, `^` is right associative):
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | power
//! power  := atom ('^' unary)?
//! atom   := number | 'x' | 'y' | func '(' expr (',' expr)? ')' | '(' expr ')'
//! func   := exp | sin | cos | pow
//! ```
//!
//! Expressions are differentiated symbolically so that fields given in a
//! config file come with exact first and second derivatives.

use std::fmt;

use nalgebra::Matrix2;

use crate::error::{Error, Result};
use crate::Vec2;

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    X,
    Y,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Exp(Box<Expr>),
    /// Natural logarithm; only produced by differentiation of `pow` with a
    /// non-constant exponent.
    Ln(Box<Expr>),
    Sin(Box<Expr>),
    Cos(Box<Expr>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    X,
    Y,
}

impl Expr {
    pub fn parse(src: &str) -> Result<Expr> {
        let tokens = tokenize(src)?;
        let mut parser = Parser { tokens, pos: 0 };
        let expr = parser.expr()?;
        if parser.pos != parser.tokens.len() {
            return Err(Error::Expression(format!(
                "unexpected trailing input in `{src}`"
            )));
        }
        Ok(expr)
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match self {
            Expr::Num(v) => *v,
            Expr::X => x,
            Expr::Y => y,
            Expr::Neg(a) => -a.eval(x, y),
            Expr::Add(a, b) => a.eval(x, y) + b.eval(x, y),
            Expr::Sub(a, b) => a.eval(x, y) - b.eval(x, y),
            Expr::Mul(a, b) => a.eval(x, y) * b.eval(x, y),
            Expr::Div(a, b) => a.eval(x, y) / b.eval(x, y),
            Expr::Pow(a, b) => {
                let base = a.eval(x, y);
                match b.as_ref() {
                    Expr::Num(e) if e.fract() == 0.0 && e.abs() < 64.0 => base.powi(*e as i32),
                    _ => base.powf(b.eval(x, y)),
                }
            }
            Expr::Exp(a) => a.eval(x, y).exp(),
            Expr::Ln(a) => a.eval(x, y).ln(),
            Expr::Sin(a) => a.eval(x, y).sin(),
            Expr::Cos(a) => a.eval(x, y).cos(),
        }
    }

    fn is_const(&self) -> bool {
        match self {
            Expr::Num(_) => true,
            Expr::X | Expr::Y => false,
            Expr::Neg(a) | Expr::Exp(a) | Expr::Ln(a) | Expr::Sin(a) | Expr::Cos(a) => a.is_const(),
            Expr::Add(a, b)
            | Expr::Sub(a, b)
            | Expr::Mul(a, b)
            | Expr::Div(a, b)
            | Expr::Pow(a, b) => a.is_const() && b.is_const(),
        }
    }

    /// Symbolic partial derivative.
    pub fn derivative(&self, var: Var) -> Expr {
        use Expr::*;
        match self {
            Num(_) => Num(0.0),
            X => Num(if var == Var::X { 1.0 } else { 0.0 }),
            Y => Num(if var == Var::Y { 1.0 } else { 0.0 }),
            Neg(a) => neg(a.derivative(var)),
            Add(a, b) => add(a.derivative(var), b.derivative(var)),
            Sub(a, b) => sub(a.derivative(var), b.derivative(var)),
            Mul(a, b) => add(
                mul(a.derivative(var), (**b).clone()),
                mul((**a).clone(), b.derivative(var)),
            ),
            Div(a, b) => div(
                sub(
                    mul(a.derivative(var), (**b).clone()),
                    mul((**a).clone(), b.derivative(var)),
                ),
                pow((**b).clone(), Num(2.0)),
            ),
            Pow(a, b) if b.is_const() => {
                let e = (**b).clone();
                mul(
                    mul(e.clone(), pow((**a).clone(), sub(e, Num(1.0)))),
                    a.derivative(var),
                )
            }
            Pow(a, b) => mul(
                self.clone(),
                add(
                    mul(b.derivative(var), Ln(a.clone())),
                    div(mul((**b).clone(), a.derivative(var)), (**a).clone()),
                ),
            ),
            Exp(a) => mul(self.clone(), a.derivative(var)),
            Ln(a) => div(a.derivative(var), (**a).clone()),
            Sin(a) => mul(Cos(a.clone()), a.derivative(var)),
            Cos(a) => neg(mul(Sin(a.clone()), a.derivative(var))),
        }
    }
}

fn zero(e: &Expr) -> bool {
    matches!(e, Expr::Num(v) if *v == 0.0)
}

fn one(e: &Expr) -> bool {
    matches!(e, Expr::Num(v) if *v == 1.0)
}

fn neg(a: Expr) -> Expr {
    match a {
        Expr::Num(v) => Expr::Num(-v),
        Expr::Neg(inner) => *inner,
        other => Expr::Neg(Box::new(other)),
    }
}

fn add(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (a, b) if zero(&b) => a,
        (a, b) if zero(&a) => b,
        (Expr::Num(p), Expr::Num(q)) => Expr::Num(p + q),
        (a, b) => Expr::Add(Box::new(a), Box::new(b)),
    }
}

fn sub(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (a, b) if zero(&b) => a,
        (a, b) if zero(&a) => neg(b),
        (Expr::Num(p), Expr::Num(q)) => Expr::Num(p - q),
        (a, b) => Expr::Sub(Box::new(a), Box::new(b)),
    }
}

fn mul(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (a, b) if zero(&a) || zero(&b) => Expr::Num(0.0),
        (a, b) if one(&b) => a,
        (a, b) if one(&a) => b,
        (Expr::Num(p), Expr::Num(q)) => Expr::Num(p * q),
        (a, b) => Expr::Mul(Box::new(a), Box::new(b)),
    }
}

fn div(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (a, _) if zero(&a) => Expr::Num(0.0),
        (a, b) if one(&b) => a,
        (a, b) => Expr::Div(Box::new(a), Box::new(b)),
    }
}

fn pow(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (_, b) if zero(&b) => Expr::Num(1.0),
        (a, b) if one(&b) => a,
        (a, b) => Expr::Pow(Box::new(a), Box::new(b)),
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v}"),
            Expr::X => write!(f, "x"),
            Expr::Y => write!(f, "y"),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Div(a, b) => write!(f, "({a} / {b})"),
            Expr::Pow(a, b) => write!(f, "pow({a}, {b})"),
            Expr::Exp(a) => write!(f, "exp({a})"),
            Expr::Ln(a) => write!(f, "ln({a})"),
            Expr::Sin(a) => write!(f, "sin({a})"),
            Expr::Cos(a) => write!(f, "cos({a})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    Comma,
}

fn tokenize(src: &str) -> Result<Vec<Token>> {
    let mut tokens = Vec::new();
    let chars: Vec<char> = src.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match c {
            c if c.is_whitespace() => i += 1,
            '0'..='9' | '.' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                    i += 1;
                }
                // exponent part, e.g. 1e-3
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
                let value = text
                    .parse::<f64>()
                    .map_err(|_| Error::Expression(format!("bad number `{text}`")))?;
                tokens.push(Token::Num(value));
            }
            c if c.is_ascii_alphabetic() => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                tokens.push(Token::Ident(chars[start..i].iter().collect()));
            }
            '+' | '-' | '*' | '/' | '^' => {
                tokens.push(Token::Op(c));
                i += 1;
            }
            '\u{2212}' => {
                tokens.push(Token::Op('-'));
                i += 1;
            }
            '\u{00d7}' => {
                tokens.push(Token::Op('*'));
                i += 1;
            }
            '\u{00f7}' => {
                tokens.push(Token::Op('/'));
                i += 1;
            }
            '(' => {
                tokens.push(Token::LParen);
                i += 1;
            }
            ')' => {
                tokens.push(Token::RParen);
                i += 1;
            }
            ',' => {
                tokens.push(Token::Comma);
                i += 1;
            }
            other => {
                return Err(Error::Expression(format!(
                    "unexpected character `{other}` in `{src}`"
                )))
            }
        }
    }
    Ok(tokens)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn expect(&mut self, want: Token) -> Result<()> {
        match self.next() {
            Some(t) if t == want => Ok(()),
            other => Err(Error::Expression(format!(
                "expected {want:?}, found {other:?}"
            ))),
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        while let Some(Token::Op(op @ ('+' | '-'))) = self.peek().cloned() {
            self.pos += 1;
            let rhs = self.term()?;
            lhs = if op == '+' {
                Expr::Add(Box::new(lhs), Box::new(rhs))
            } else {
                Expr::Sub(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        while let Some(Token::Op(op @ ('*' | '/'))) = self.peek().cloned() {
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
        if let Some(Token::Op('-')) = self.peek() {
            self.pos += 1;
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if let Some(Token::Op('^')) = self.peek() {
            self.pos += 1;
            let exponent = self.unary()?;
            return Ok(Expr::Pow(Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.next() {
            Some(Token::Num(v)) => Ok(Expr::Num(v)),
            Some(Token::LParen) => {
                let e = self.expr()?;
                self.expect(Token::RParen)?;
                Ok(e)
            }
            Some(Token::Ident(name)) => match name.as_str() {
                "x" => Ok(Expr::X),
                "y" => Ok(Expr::Y),
                "exp" | "sin" | "cos" => {
                    self.expect(Token::LParen)?;
                    let arg = Box::new(self.expr()?);
                    self.expect(Token::RParen)?;
                    Ok(match name.as_str() {
                        "exp" => Expr::Exp(arg),
                        "sin" => Expr::Sin(arg),
                        _ => Expr::Cos(arg),
                    })
                }
                "pow" => {
                    self.expect(Token::LParen)?;
                    let base = self.expr()?;
                    self.expect(Token::Comma)?;
                    let exponent = self.expr()?;
                    self.expect(Token::RParen)?;
                    Ok(Expr::Pow(Box::new(base), Box::new(exponent)))
                }
                other => Err(Error::Expression(format!("unknown identifier `{other}`"))),
            },
            other => Err(Error::Expression(format!("unexpected token {other:?}"))),
        }
    }
}

/// Value, gradient and Hessian of a scalar field at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarJet {
    pub value: f64,
    pub grad: Vec2,
    pub hess: Matrix2<f64>,
}

/// A parsed expression together with its symbolic first and second derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct ExprField {
    source: String,
    f: Expr,
    fx: Expr,
    fy: Expr,
    fxx: Expr,
    fxy: Expr,
    fyy: Expr,
}

impl ExprField {
    pub fn parse(src: &str) -> Result<Self> {
        let f = Expr::parse(src)?;
        let fx = f.derivative(Var::X);
        let fy = f.derivative(Var::Y);
        let fxx = fx.derivative(Var::X);
        let fxy = fx.derivative(Var::Y);
        let fyy = fy.derivative(Var::Y);
        Ok(ExprField {
            source: src.to_string(),
            f,
            fx,
            fy,
            fxx,
            fxy,
            fyy,
        })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn value(&self, p: Vec2) -> f64 {
        self.f.eval(p.x, p.y)
    }

    pub fn gradient(&self, p: Vec2) -> Vec2 {
        Vec2::new(self.fx.eval(p.x, p.y), self.fy.eval(p.x, p.y))
    }

    pub fn jet(&self, p: Vec2) -> ScalarJet {
        let (x, y) = (p.x, p.y);
        let fxy = self.fxy.eval(x, y);
        ScalarJet {
            value: self.f.eval(x, y),
            grad: Vec2::new(self.fx.eval(x, y), self.fy.eval(x, y)),
            hess: Matrix2::new(self.fxx.eval(x, y), fxy, fxy, self.fyy.eval(x, y)),
        }
    }
}
