//! Coordinate expressions.
//!
//! Grammar, with `^` binding tighter than unary minus:
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' '-'? integer)?
//! primary := number | identifier | func '(' expr ')' | '(' expr ')'
//! func    := sin | cos | exp | log | sqrt
//! ```
//!
//! Identifiers resolve to chart coordinates, then declared parameters, then
//! the constant `pi`.

use std::fmt;

use thiserror::Error;

use crate::field::ScalarField;
use crate::jet::Jet2;
use crate::Chart;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("column {}: {message}", .offset + 1)]
pub struct ParseError {
    /// Byte offset into the source.
    pub offset: usize,
    pub message: String,
    pub expected: Option<String>,
}

impl ParseError {
    /// 1-based column of the error.
    pub fn column(&self) -> usize {
        self.offset + 1
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("column {}: {message}", .offset + 1)]
pub struct EvalError {
    pub offset: usize,
    pub message: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
}

impl Func {
    pub const ALL: [Func; 5] = [Func::Sin, Func::Cos, Func::Exp, Func::Log, Func::Sqrt];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
        }
    }

    fn from_name(s: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Clone, Debug)]
pub enum Node {
    Num(f64),
    Coord(usize),
    Param(usize),
    Neg(Box<Expr>),
    Call(Func, Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
}

#[derive(Clone, Debug)]
pub struct Expr {
    pub node: Node,
    /// Byte offset of the node in its source.
    pub offset: usize,
}

impl Expr {
    pub fn new(node: Node) -> Self {
        Expr { node, offset: 0 }
    }

    /// Structural equality, ignoring source offsets.
    pub fn same_shape(&self, o: &Expr) -> bool {
        use Node::*;
        match (&self.node, &o.node) {
            (Num(a), Num(b)) => a == b,
            (Coord(a), Coord(b)) | (Param(a), Param(b)) => a == b,
            (Neg(a), Neg(b)) => a.same_shape(b),
            (Call(f, a), Call(g, b)) => f == g && a.same_shape(b),
            (Bin(p, a1, a2), Bin(q, b1, b2)) => p == q && a1.same_shape(b1) && a2.same_shape(b2),
            (Pow(a, k), Pow(b, m)) => k == m && a.same_shape(b),
            _ => false,
        }
    }

    pub fn eval(&self, x: &[Jet2], params: &[f64]) -> Result<Jet2, EvalError> {
        let err = |m: &str| EvalError { offset: self.offset, message: m.to_string() };
        Ok(match &self.node {
            Node::Num(v) => Jet2::constant(*v),
            Node::Coord(i) => x[*i].clone(),
            Node::Param(i) => Jet2::constant(params[*i]),
            Node::Neg(a) => -a.eval(x, params)?,
            Node::Call(f, a) => {
                let v = a.eval(x, params)?;
                match f {
                    Func::Sin => v.sin(),
                    Func::Cos => v.cos(),
                    Func::Exp => v.exp(),
                    Func::Log if v.value <= 0.0 => return Err(err("log of non-positive value")),
                    Func::Log => v.ln(),
                    Func::Sqrt if v.value <= 0.0 => return Err(err("sqrt of non-positive value")),
                    Func::Sqrt => v.sqrt(),
                }
            }
            Node::Bin(op, a, b) => {
                let (u, w) = (a.eval(x, params)?, b.eval(x, params)?);
                match op {
                    BinOp::Add => u + w,
                    BinOp::Sub => u - w,
                    BinOp::Mul => u * w,
                    BinOp::Div if w.value == 0.0 => return Err(err("division by zero")),
                    BinOp::Div => u / w,
                }
            }
            Node::Pow(a, k) => {
                let v = a.eval(x, params)?;
                if *k < 0 && v.value == 0.0 {
                    return Err(err("division by zero"));
                }
                v.powi(*k)
            }
        })
    }
}

/// A parsed expression together with the names it was resolved against.
#[derive(Clone, Debug)]
pub struct ExprAst {
    pub root: Expr,
    pub coords: Vec<String>,
    pub params: Vec<String>,
}

impl ExprAst {
    pub fn eval_jet(&self, x: &[Jet2], params: &[f64]) -> Result<Jet2, EvalError> {
        self.root.eval(x, params)
    }

    pub fn eval_at(&self, p: &[f64], params: &[f64]) -> Result<Jet2, EvalError> {
        self.root.eval(&Jet2::seed(p), params)
    }

    /// Field with parameters bound. Domain errors evaluate to NaN, which
    /// fails every downstream tolerance check.
    pub fn to_field(&self, params: &[f64]) -> ScalarField {
        let root = self.root.clone();
        let params = params.to_vec();
        ScalarField::new(move |x| {
            root.eval(x, &params).unwrap_or_else(|_| {
                let n = x.first().map_or(0, |j| j.dim());
                let mut j = Jet2::constant_dim(f64::NAN, n);
                j.grad.iter_mut().for_each(|g| *g = f64::NAN);
                j
            })
        })
    }
}

impl fmt::Display for ExprAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_expr(&self.root, &self.coords, &self.params, 0, f)
    }
}

fn prec(n: &Node) -> u8 {
    match n {
        Node::Bin(BinOp::Add | BinOp::Sub, ..) => 1,
        Node::Bin(..) => 2,
        Node::Neg(_) => 3,
        Node::Pow(..) => 4,
        _ => 5,
    }
}

fn write_expr(e: &Expr, coords: &[String], params: &[String], min: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    let p = prec(&e.node);
    if p < min {
        f.write_str("(")?;
    }
    match &e.node {
        Node::Num(v) => write!(f, "{v}")?,
        Node::Coord(i) => f.write_str(&coords[*i])?,
        Node::Param(i) => f.write_str(&params[*i])?,
        Node::Neg(a) => {
            f.write_str("-")?;
            write_expr(a, coords, params, 3, f)?;
        }
        Node::Call(func, a) => {
            write!(f, "{}(", func.name())?;
            write_expr(a, coords, params, 0, f)?;
            f.write_str(")")?;
        }
        Node::Bin(op, a, b) => {
            let (sym, lmin, rmin) = match op {
                BinOp::Add => (" + ", 1, 2),
                BinOp::Sub => (" - ", 1, 2),
                BinOp::Mul => ("*", 2, 3),
                BinOp::Div => ("/", 2, 3),
            };
            write_expr(a, coords, params, lmin, f)?;
            f.write_str(sym)?;
            write_expr(b, coords, params, rmin, f)?;
        }
        Node::Pow(a, k) => {
            write_expr(a, coords, params, 5, f)?;
            write!(f, "^{k}")?;
        }
    }
    if p < min {
        f.write_str(")")?;
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Int(i64),
    Ident(String),
    Sym(char),
    End,
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let b = src.as_bytes();
    let mut i = 0;
    let mut out = Vec::new();
    while i < b.len() {
        let c = b[i];
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || (c == b'.' && i + 1 < b.len() && b[i + 1].is_ascii_digit()) {
            let start = i;
            let mut integral = true;
            while i < b.len() && b[i].is_ascii_digit() {
                i += 1;
            }
            if i < b.len() && b[i] == b'.' {
                integral = false;
                i += 1;
                while i < b.len() && b[i].is_ascii_digit() {
                    i += 1;
                }
            }
            if i < b.len() && (b[i] == b'e' || b[i] == b'E') {
                let mut j = i + 1;
                if j < b.len() && (b[j] == b'+' || b[j] == b'-') {
                    j += 1;
                }
                if j < b.len() && b[j].is_ascii_digit() {
                    integral = false;
                    i = j;
                    while i < b.len() && b[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text = &src[start..i];
            let tok = match (integral, text.parse::<i64>()) {
                (true, Ok(k)) => Tok::Int(k),
                _ => Tok::Num(text.parse().map_err(|_| ParseError {
                    offset: start,
                    message: format!("malformed number `{text}`"),
                    expected: None,
                })?),
            };
            out.push((tok, start));
        } else if c.is_ascii_alphabetic() || c == b'_' {
            let start = i;
            while i < b.len() && (b[i].is_ascii_alphanumeric() || b[i] == b'_') {
                i += 1;
            }
            out.push((Tok::Ident(src[start..i].to_string()), start));
        } else if b"+-*/^()".contains(&c) {
            out.push((Tok::Sym(c as char), i));
            i += 1;
        } else {
            let ch = src[i..].chars().next().unwrap_or('?');
            return Err(ParseError { offset: i, message: format!("unexpected character `{ch}`"), expected: None });
        }
    }
    out.push((Tok::End, src.len()));
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    coords: &'a [String],
    params: &'a [String],
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> (Tok, usize) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn fail<T>(&self, message: &str, expected: Option<&str>) -> Result<T, ParseError> {
        Err(ParseError { offset: self.offset(), message: message.to_string(), expected: expected.map(str::to_string) })
    }

    fn expect(&mut self, c: char) -> Result<(), ParseError> {
        if *self.peek() == Tok::Sym(c) {
            self.bump();
            Ok(())
        } else {
            self.fail(&format!("expected '{c}'"), Some(&c.to_string()))
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Sym('+') => BinOp::Add,
                Tok::Sym('-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            let (_, at) = self.bump();
            let rhs = self.term()?;
            lhs = Expr { node: Node::Bin(op, Box::new(lhs), Box::new(rhs)), offset: at };
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Sym('*') => BinOp::Mul,
                Tok::Sym('/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            let (_, at) = self.bump();
            let rhs = self.unary()?;
            lhs = Expr { node: Node::Bin(op, Box::new(lhs), Box::new(rhs)), offset: at };
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if *self.peek() == Tok::Sym('-') {
            let (_, at) = self.bump();
            let inner = self.unary()?;
            return Ok(Expr { node: Node::Neg(Box::new(inner)), offset: at });
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.primary()?;
        if *self.peek() != Tok::Sym('^') {
            return Ok(base);
        }
        let (_, at) = self.bump();
        let neg = if *self.peek() == Tok::Sym('-') {
            self.bump();
            true
        } else {
            false
        };
        match self.peek().clone() {
            Tok::Int(k) if k <= i32::MAX as i64 => {
                self.bump();
                let k = if neg { -(k as i32) } else { k as i32 };
                Ok(Expr { node: Node::Pow(Box::new(base), k), offset: at })
            }
            _ => self.fail("expected integer exponent", Some("integer")),
        }
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let at = self.offset();
        match self.peek().clone() {
            Tok::Num(v) => {
                self.bump();
                Ok(Expr { node: Node::Num(v), offset: at })
            }
            Tok::Int(k) => {
                self.bump();
                Ok(Expr { node: Node::Num(k as f64), offset: at })
            }
            Tok::Sym('(') => {
                self.bump();
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Tok::Ident(name) => {
                self.bump();
                if let Some(i) = self.coords.iter().position(|c| *c == name) {
                    return Ok(Expr { node: Node::Coord(i), offset: at });
                }
                if let Some(i) = self.params.iter().position(|c| *c == name) {
                    return Ok(Expr { node: Node::Param(i), offset: at });
                }
                if let Some(func) = Func::from_name(&name) {
                    self.expect('(')?;
                    let arg = self.expr()?;
                    self.expect(')')?;
                    return Ok(Expr { node: Node::Call(func, Box::new(arg)), offset: at });
                }
                if name == "pi" {
                    return Ok(Expr { node: Node::Num(std::f64::consts::PI), offset: at });
                }
                Err(ParseError { offset: at, message: format!("unknown identifier `{name}`"), expected: None })
            }
            Tok::End => self.fail("unexpected end of input", Some("expression")),
            Tok::Sym(c) => self.fail(&format!("unexpected '{c}'"), Some("expression")),
        }
    }
}

pub fn parse(src: &str, coords: &[&str], params: &[&str]) -> Result<ExprAst, ParseError> {
    let coords: Vec<String> = coords.iter().map(|s| s.to_string()).collect();
    let params: Vec<String> = params.iter().map(|s| s.to_string()).collect();
    if src.trim().is_empty() {
        return Err(ParseError { offset: 0, message: "empty expression".into(), expected: Some("expression".into()) });
    }
    let toks = lex(src)?;
    let mut p = Parser { toks, pos: 0, coords: &coords, params: &params };
    let root = p.expr()?;
    if *p.peek() != Tok::End {
        return p.fail("unexpected trailing input", Some("end of input"));
    }
    Ok(ExprAst { root, coords: coords.clone(), params: params.clone() })
}

pub fn parse_on(src: &str, chart: &Chart, params: &[&str]) -> Result<ExprAst, ParseError> {
    parse(src, &chart.names(), params)
}

/// Parse and bind a parameter-free expression as a field.
pub fn field(src: &str, coords: &[&str]) -> Result<ScalarField, ParseError> {
    Ok(parse(src, coords, &[])?.to_field(&[]))
}
