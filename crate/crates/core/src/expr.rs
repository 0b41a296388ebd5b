//! Scalar expressions over torus coordinates and their second-order jets.
//!
//! Grammar (whitespace insignificant):
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := '-' factor | atom ('^' int)?
//! atom   := number | 'x' int | 'pi' | fn '(' expr ')' | '(' expr ')'
//! fn     := sin | cos | exp | sinp | cosp
//! ```
//!
//! `sinp(u)` and `cosp(u)` are `sin(2πu)` and `cos(2πu)`, the 1-periodic
//! building blocks for fields on the torus. Variables are 1-based (`x1`).

use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::error::{Error, Result};

/// Largest ambient dimension handled by the fixed-size jets.
pub const MAX_DIM: usize = 3;

const TWO_PI: f64 = 2.0 * PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Sinp,
    Cosp,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Sinp => "sinp",
            Func::Cosp => "cosp",
        }
    }

    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "sinp" => Func::Sinp,
            "cosp" => Func::Cosp,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Pi,
    /// Zero-based coordinate index.
    Var(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
    Call(Func, Box<Expr>),
}

impl Expr {
    pub fn num(v: f64) -> Expr {
        Expr::Num(v)
    }

    pub fn var(i: usize) -> Expr {
        Expr::Var(i)
    }

    pub fn call(f: Func, arg: Expr) -> Expr {
        Expr::Call(f, Box::new(arg))
    }

    pub fn zero() -> Expr {
        Expr::Num(0.0)
    }

    /// Largest variable index used plus one.
    pub fn arity(&self) -> usize {
        match self {
            Expr::Num(_) | Expr::Pi => 0,
            Expr::Var(i) => i + 1,
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Call(_, a) => a.arity(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.arity().max(b.arity())
            }
        }
    }

    pub fn has_division(&self) -> bool {
        match self {
            Expr::Num(_) | Expr::Pi | Expr::Var(_) => false,
            Expr::Div(_, _) => true,
            Expr::Neg(a) | Expr::Call(_, a) => a.has_division(),
            Expr::Pow(a, k) => *k < 0 || a.has_division(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) => {
                a.has_division() || b.has_division()
            }
        }
    }

    /// Generic evaluation; the scalar type decides how much derivative
    /// information is carried along.
    pub fn eval_with<T: Scalar>(&self, point: &[T]) -> Result<T> {
        Ok(match self {
            Expr::Num(v) => T::constant(*v),
            Expr::Pi => T::constant(PI),
            Expr::Var(i) => *point.get(*i).ok_or(Error::Dimension {
                expected: *i + 1,
                found: point.len(),
            })?,
            Expr::Neg(a) => -a.eval_with(point)?,
            Expr::Add(a, b) => a.eval_with(point)? + b.eval_with(point)?,
            Expr::Sub(a, b) => a.eval_with(point)? - b.eval_with(point)?,
            Expr::Mul(a, b) => a.eval_with(point)? * b.eval_with(point)?,
            Expr::Div(a, b) => {
                let den = b.eval_with(point)?;
                if den.value() == 0.0 {
                    return Err(Error::DivisionByZero);
                }
                a.eval_with(point)? / den
            }
            Expr::Pow(a, k) => {
                let base = a.eval_with(point)?;
                if *k < 0 && base.value() == 0.0 {
                    return Err(Error::DivisionByZero);
                }
                base.powi(*k)
            }
            Expr::Call(f, a) => {
                let u = a.eval_with(point)?;
                match f {
                    Func::Sin => u.sin(),
                    Func::Cos => u.cos(),
                    Func::Exp => u.exp(),
                    Func::Sinp => (u * T::constant(TWO_PI)).sin(),
                    Func::Cosp => (u * T::constant(TWO_PI)).cos(),
                }
            }
        })
    }

    pub fn eval(&self, point: &[f64]) -> Result<f64> {
        self.eval_with(point)
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Neg(_) => 3,
            Expr::Pow(..) => 4,
            Expr::Num(v) if *v < 0.0 || v.is_sign_negative() => 3,
            _ => 5,
        }
    }
}

fn write_operand(f: &mut fmt::Formatter<'_>, e: &Expr, parens: bool) -> fmt::Result {
    if parens {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v:?}"),
            Expr::Pi => write!(f, "pi"),
            Expr::Var(i) => write!(f, "x{}", i + 1),
            Expr::Neg(a) => {
                write!(f, "-")?;
                write_operand(f, a, a.precedence() < 3)
            }
            Expr::Pow(a, k) => {
                write_operand(f, a, a.precedence() < 5)?;
                write!(f, "^{k}")
            }
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                let (op, prec) = match self {
                    Expr::Add(..) => (" + ", 1),
                    Expr::Sub(..) => (" - ", 1),
                    Expr::Mul(..) => (" * ", 2),
                    _ => (" / ", 2),
                };
                write_operand(f, a, a.precedence() < prec)?;
                f.write_str(op)?;
                // Right operands of equal precedence keep their grouping.
                write_operand(f, b, b.precedence() <= prec)
            }
        }
    }
}

/// Parses a single expression.
pub fn parse(source: &str) -> Result<Expr> {
    let mut p = Parser {
        src: source.as_bytes(),
        text: source,
        pos: 0,
    };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos < p.src.len() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a [u8],
    text: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn location(&self, pos: usize) -> (usize, usize) {
        let before = &self.text[..pos.min(self.text.len())];
        let line = before.matches('\n').count() + 1;
        let col = before.rfind('\n').map_or(before.len(), |n| before.len() - n - 1) + 1;
        (line, col)
    }

    fn error(&self, msg: &str) -> Error {
        self.error_at(self.pos, msg)
    }

    fn error_at(&self, pos: usize, msg: &str) -> Error {
        let (line, column) = self.location(pos);
        Error::Syntax {
            line,
            column,
            message: msg.to_string(),
        }
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

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        while let Some(c @ (b'+' | b'-')) = self.peek() {
            self.pos += 1;
            let rhs = self.term()?;
            lhs = if c == b'+' {
                Expr::Add(Box::new(lhs), Box::new(rhs))
            } else {
                Expr::Sub(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.factor()?;
        while let Some(c @ (b'*' | b'/')) = self.peek() {
            self.pos += 1;
            let rhs = self.factor()?;
            lhs = if c == b'*' {
                Expr::Mul(Box::new(lhs), Box::new(rhs))
            } else {
                Expr::Div(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> Result<Expr> {
        if self.peek() == Some(b'-') {
            self.pos += 1;
            return Ok(Expr::Neg(Box::new(self.factor()?)));
        }
        let base = self.atom()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            let k = self.exponent()?;
            return Ok(Expr::Pow(Box::new(base), k));
        }
        Ok(base)
    }

    fn exponent(&mut self) -> Result<i32> {
        self.skip_ws();
        let start = self.pos;
        if self.src.get(self.pos) == Some(&b'-') {
            self.pos += 1;
        }
        let digits = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if self.pos == digits {
            return Err(self.error_at(start, "expected integer exponent"));
        }
        if matches!(self.src.get(self.pos), Some(b'.' | b'e' | b'E')) {
            return Err(Error::NonIntegerExponent {
                line: self.location(start).0,
                column: self.location(start).1,
            });
        }
        self.text[start..self.pos]
            .parse()
            .map_err(|_| self.error_at(start, "exponent out of range"))
    }

    fn number(&mut self) -> Result<Expr> {
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_digit() || self.src[self.pos] == b'.')
        {
            self.pos += 1;
        }
        if matches!(self.src.get(self.pos), Some(b'e' | b'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.src.get(self.pos), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            let d = self.pos;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            if self.pos == d {
                self.pos = save;
            }
        }
        self.text[start..self.pos]
            .parse::<f64>()
            .map(Expr::Num)
            .map_err(|_| self.error_at(start, "malformed number"))
    }

    fn atom(&mut self) -> Result<Expr> {
        let c = match self.peek() {
            Some(c) => c,
            None => return Err(self.error("unexpected end of input")),
        };
        if c.is_ascii_digit() || c == b'.' {
            return self.number();
        }
        if c == b'(' {
            self.pos += 1;
            let e = self.expr()?;
            if self.peek() != Some(b')') {
                return Err(self.error("expected ')'"));
            }
            self.pos += 1;
            return Ok(e);
        }
        if c.is_ascii_alphabetic() {
            let start = self.pos;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphanumeric() {
                self.pos += 1;
            }
            let ident = &self.text[start..self.pos];
            if ident == "pi" {
                return Ok(Expr::Pi);
            }
            if let Some(idx) = ident.strip_prefix('x') {
                if let Ok(i) = idx.parse::<usize>() {
                    if i == 0 {
                        return Err(self.error_at(start, "variables are numbered from x1"));
                    }
                    return Ok(Expr::Var(i - 1));
                }
            }
            if let Some(func) = Func::from_name(ident) {
                if self.peek() != Some(b'(') {
                    return Err(self.error("expected '(' after function name"));
                }
                self.pos += 1;
                let arg = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.error("expected ')'"));
                }
                self.pos += 1;
                return Ok(Expr::call(func, arg));
            }
            let (line, column) = self.location(start);
            return Err(Error::UnknownIdentifier {
                name: ident.to_string(),
                line,
                column,
            });
        }
        Err(self.error(&format!("unexpected character '{}'", c as char)))
    }
}

/// Arithmetic needed to push a value through an expression tree.
pub trait Scalar:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Div<Output = Self> + Neg<Output = Self>
{
    fn constant(c: f64) -> Self;
    fn value(&self) -> f64;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn exp(self) -> Self;
    fn powi(self, k: i32) -> Self;
}

impl Scalar for f64 {
    fn constant(c: f64) -> Self {
        c
    }
    fn value(&self) -> f64 {
        *self
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn powi(self, k: i32) -> Self {
        f64::powi(self, k)
    }
}

/// Value and gradient.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Jet1 {
    pub v: f64,
    pub g: [f64; MAX_DIM],
}

impl Jet1 {
    pub fn variable(i: usize, x: f64) -> Jet1 {
        let mut g = [0.0; MAX_DIM];
        g[i] = 1.0;
        Jet1 { v: x, g }
    }

    fn chain(self, f: f64, df: f64) -> Jet1 {
        let mut g = self.g;
        g.iter_mut().for_each(|gi| *gi *= df);
        Jet1 { v: f, g }
    }
}

impl Add for Jet1 {
    type Output = Jet1;
    fn add(mut self, o: Jet1) -> Jet1 {
        self.v += o.v;
        for i in 0..MAX_DIM {
            self.g[i] += o.g[i];
        }
        self
    }
}

impl Sub for Jet1 {
    type Output = Jet1;
    fn sub(self, o: Jet1) -> Jet1 {
        self + (-o)
    }
}

impl Neg for Jet1 {
    type Output = Jet1;
    fn neg(mut self) -> Jet1 {
        self.v = -self.v;
        self.g.iter_mut().for_each(|g| *g = -*g);
        self
    }
}

impl Mul for Jet1 {
    type Output = Jet1;
    fn mul(self, o: Jet1) -> Jet1 {
        let mut g = [0.0; MAX_DIM];
        for i in 0..MAX_DIM {
            g[i] = self.g[i] * o.v + self.v * o.g[i];
        }
        Jet1 { v: self.v * o.v, g }
    }
}

impl Div for Jet1 {
    type Output = Jet1;
    fn div(self, o: Jet1) -> Jet1 {
        let r = 1.0 / o.v;
        self * o.chain(r, -r * r)
    }
}

impl Scalar for Jet1 {
    fn constant(c: f64) -> Self {
        Jet1 { v: c, g: [0.0; MAX_DIM] }
    }
    fn value(&self) -> f64 {
        self.v
    }
    fn sin(self) -> Self {
        self.chain(self.v.sin(), self.v.cos())
    }
    fn cos(self) -> Self {
        self.chain(self.v.cos(), -self.v.sin())
    }
    fn exp(self) -> Self {
        let e = self.v.exp();
        self.chain(e, e)
    }
    fn powi(self, k: i32) -> Self {
        if k == 0 {
            return Jet1::constant(1.0);
        }
        self.chain(self.v.powi(k), k as f64 * self.v.powi(k - 1))
    }
}

/// Value, gradient and (symmetric) Hessian.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Jet2 {
    pub v: f64,
    pub g: [f64; MAX_DIM],
    pub h: [[f64; MAX_DIM]; MAX_DIM],
}

impl Jet2 {
    pub fn variable(i: usize, x: f64) -> Jet2 {
        let mut g = [0.0; MAX_DIM];
        g[i] = 1.0;
        Jet2 { v: x, g, h: [[0.0; MAX_DIM]; MAX_DIM] }
    }

    fn chain(self, f: f64, df: f64, d2f: f64) -> Jet2 {
        let mut out = Jet2 { v: f, ..Jet2::default() };
        for i in 0..MAX_DIM {
            out.g[i] = df * self.g[i];
            for j in 0..=i {
                let hij = df * self.h[i][j] + d2f * self.g[i] * self.g[j];
                out.h[i][j] = hij;
                out.h[j][i] = hij;
            }
        }
        out
    }
}

impl Add for Jet2 {
    type Output = Jet2;
    fn add(mut self, o: Jet2) -> Jet2 {
        self.v += o.v;
        for i in 0..MAX_DIM {
            self.g[i] += o.g[i];
            for j in 0..MAX_DIM {
                self.h[i][j] += o.h[i][j];
            }
        }
        self
    }
}

impl Sub for Jet2 {
    type Output = Jet2;
    fn sub(self, o: Jet2) -> Jet2 {
        self + (-o)
    }
}

impl Neg for Jet2 {
    type Output = Jet2;
    fn neg(self) -> Jet2 {
        self.chain(-self.v, -1.0, 0.0)
    }
}

impl Mul for Jet2 {
    type Output = Jet2;
    fn mul(self, o: Jet2) -> Jet2 {
        let mut out = Jet2 { v: self.v * o.v, ..Jet2::default() };
        for i in 0..MAX_DIM {
            out.g[i] = self.g[i] * o.v + self.v * o.g[i];
            for j in 0..=i {
                let hij = self.h[i][j] * o.v
                    + self.v * o.h[i][j]
                    + self.g[i] * o.g[j]
                    + o.g[i] * self.g[j];
                out.h[i][j] = hij;
                out.h[j][i] = hij;
            }
        }
        out
    }
}

impl Div for Jet2 {
    type Output = Jet2;
    fn div(self, o: Jet2) -> Jet2 {
        let r = 1.0 / o.v;
        self * o.chain(r, -r * r, 2.0 * r * r * r)
    }
}

impl Scalar for Jet2 {
    fn constant(c: f64) -> Self {
        Jet2 { v: c, ..Jet2::default() }
    }
    fn value(&self) -> f64 {
        self.v
    }
    fn sin(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.chain(s, c, -s)
    }
    fn cos(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.chain(c, -s, -c)
    }
    fn exp(self) -> Self {
        let e = self.v.exp();
        self.chain(e, e, e)
    }
    fn powi(self, k: i32) -> Self {
        match k {
            0 => Jet2::constant(1.0),
            1 => self,
            _ => {
                let kf = k as f64;
                self.chain(
                    self.v.powi(k),
                    kf * self.v.powi(k - 1),
                    kf * (kf - 1.0) * self.v.powi(k - 2),
                )
            }
        }
    }
}

/// Public jet: value, gradient and Hessian at a point of ℝⁿ.
#[derive(Debug, Clone, PartialEq)]
pub struct JetValue {
    pub value: f64,
    pub gradient: Vec<f64>,
    pub hessian: Vec<Vec<f64>>,
}

/// Second-order forward-mode evaluation at `p`.
pub fn eval_jet(e: &Expr, p: &[f64]) -> Result<JetValue> {
    let n = p.len();
    if n > MAX_DIM {
        return Err(Error::Dimension { expected: MAX_DIM, found: n });
    }
    if e.arity() > n {
        return Err(Error::Dimension { expected: e.arity(), found: n });
    }
    let vars: Vec<Jet2> = p.iter().enumerate().map(|(i, &x)| Jet2::variable(i, x)).collect();
    let j = e.eval_with(&vars)?;
    Ok(JetValue {
        value: j.v,
        gradient: j.g[..n].to_vec(),
        hessian: (0..n).map(|i| j.h[i][..n].to_vec()).collect(),
    })
}

/// Value and gradient only.
pub fn eval_grad(e: &Expr, p: &[f64]) -> Result<Jet1> {
    let vars: Vec<Jet1> = p.iter().enumerate().map(|(i, &x)| Jet1::variable(i, x)).collect();
    e.eval_with(&vars)
}
