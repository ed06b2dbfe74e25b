//! Coefficient-expression language.
//!
//! Expressions are built from the variables `lambda`, `x` (and `u`, `v` for
//! nonlinearities), decimal literals, the binary operators `+ - * / ^`, unary
//! minus and the functions `sin cos exp sqrt abs`. Precedence, highest first:
//! `^`, unary `-`, `* /`, `+ -`. All binary operators associate to the left
//! except `^`.
//!
//! Differentiation is symbolic and exact on the tree. `abs` is excluded from
//! the differentiable subset.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Var {
    Lambda,
    X,
    U,
    V,
}

impl Var {
    fn name(self) -> &'static str {
        match self {
            Var::Lambda => "lambda",
            Var::X => "x",
            Var::U => "u",
            Var::V => "v",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
            BinOp::Pow => '^',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Sqrt,
    Abs,
}

impl Func {
    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
        }
    }
}

/// Abstract syntax tree of a parsed expression.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(Var),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

/// Point at which an expression is evaluated. Unused variables are ignored.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Point {
    pub lambda: f64,
    pub x: f64,
    pub u: f64,
    pub v: f64,
}

impl Point {
    pub fn new(lambda: f64, x: f64) -> Self {
        Point {
            lambda,
            x,
            u: 0.0,
            v: 0.0,
        }
    }

    pub fn with_state(lambda: f64, x: f64, u: f64, v: f64) -> Self {
        Point { lambda, x, u, v }
    }

    fn get(&self, var: Var) -> f64 {
        match var {
            Var::Lambda => self.lambda,
            Var::X => self.x,
            Var::U => self.u,
            Var::V => self.v,
        }
    }
}

/// Parse a coefficient expression over `lambda` and `x`.
pub fn parse(src: &str) -> Result<Expr> {
    Parser::new(src, &[Var::Lambda, Var::X]).parse()
}

/// Parse a nonlinearity `G(lambda, x, u, v)`.
pub fn parse_nonlinearity(src: &str) -> Result<Expr> {
    Parser::new(src, &[Var::Lambda, Var::X, Var::U, Var::V]).parse()
}

impl Expr {
    pub fn num(value: f64) -> Expr {
        Expr::Num(value)
    }

    pub fn var(var: Var) -> Expr {
        Expr::Var(var)
    }

    /// Evaluate at `(lambda, x)`.
    pub fn eval(&self, lambda: f64, x: f64) -> Result<f64> {
        self.eval_at(&Point::new(lambda, x))
    }

    pub fn eval_at(&self, p: &Point) -> Result<f64> {
        let value = match self {
            Expr::Num(c) => *c,
            Expr::Var(v) => p.get(*v),
            Expr::Neg(e) => -e.eval_at(p)?,
            Expr::Bin(op, l, r) => {
                let a = l.eval_at(p)?;
                let b = r.eval_at(p)?;
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        if b == 0.0 {
                            return Err(Error::Domain(format!("division by zero in `{self}`")));
                        }
                        a / b
                    }
                    BinOp::Pow => a.powf(b),
                }
            }
            Expr::Call(f, e) => {
                let a = e.eval_at(p)?;
                match f {
                    Func::Sin => a.sin(),
                    Func::Cos => a.cos(),
                    Func::Exp => a.exp(),
                    Func::Sqrt => {
                        if a < 0.0 {
                            return Err(Error::Domain(format!("sqrt of negative value {a}")));
                        }
                        a.sqrt()
                    }
                    Func::Abs => a.abs(),
                }
            }
        };
        if value.is_finite() {
            Ok(value)
        } else {
            Err(Error::Domain(format!("non-finite value from `{self}`")))
        }
    }

    /// True if the variable occurs anywhere in the tree.
    pub fn depends_on(&self, var: Var) -> bool {
        match self {
            Expr::Num(_) => false,
            Expr::Var(v) => *v == var,
            Expr::Neg(e) | Expr::Call(_, e) => e.depends_on(var),
            Expr::Bin(_, l, r) => l.depends_on(var) || r.depends_on(var),
        }
    }

    /// Exact symbolic derivative with respect to `lambda`.
    pub fn diff_lambda(&self) -> Result<Expr> {
        self.diff(Var::Lambda)
    }

    /// Exact symbolic derivative with respect to `var`.
    pub fn diff(&self, var: Var) -> Result<Expr> {
        Ok(match self {
            Expr::Num(_) => Expr::Num(0.0),
            Expr::Var(v) => Expr::Num(if *v == var { 1.0 } else { 0.0 }),
            Expr::Neg(e) => neg(e.diff(var)?),
            Expr::Bin(op, l, r) => {
                let (f, g) = (l.as_ref(), r.as_ref());
                match op {
                    BinOp::Add => add(f.diff(var)?, g.diff(var)?),
                    BinOp::Sub => sub(f.diff(var)?, g.diff(var)?),
                    BinOp::Mul => add(
                        mul(f.diff(var)?, g.clone()),
                        mul(f.clone(), g.diff(var)?),
                    ),
                    BinOp::Div => div(
                        sub(mul(f.diff(var)?, g.clone()), mul(f.clone(), g.diff(var)?)),
                        pow(g.clone(), Expr::Num(2.0)),
                    ),
                    BinOp::Pow => {
                        if !g.depends_on(var) {
                            // d(f^g) = g f^(g-1) f'
                            mul(
                                mul(g.clone(), pow(f.clone(), sub(g.clone(), Expr::Num(1.0)))),
                                f.diff(var)?,
                            )
                        } else if let Expr::Num(base) = f {
                            if *base <= 0.0 {
                                return Err(Error::NotDifferentiable(format!(
                                    "power with non-positive base and variable exponent in `{self}`"
                                )));
                            }
                            mul(mul(self.clone(), Expr::Num(base.ln())), g.diff(var)?)
                        } else {
                            return Err(Error::NotDifferentiable(format!(
                                "variable base and variable exponent in `{self}`"
                            )));
                        }
                    }
                }
            }
            Expr::Call(func, e) => {
                let inner = e.diff(var)?;
                let outer = match func {
                    Func::Sin => call(Func::Cos, e.as_ref().clone()),
                    Func::Cos => neg(call(Func::Sin, e.as_ref().clone())),
                    Func::Exp => call(Func::Exp, e.as_ref().clone()),
                    Func::Sqrt => div(
                        Expr::Num(1.0),
                        mul(Expr::Num(2.0), call(Func::Sqrt, e.as_ref().clone())),
                    ),
                    Func::Abs => {
                        return Err(Error::NotDifferentiable(format!("abs in `{self}`")));
                    }
                };
                mul(outer, inner)
            }
        })
    }
}

// Constructors with light constant folding, enough to keep derivatives readable.

fn neg(e: Expr) -> Expr {
    match e {
        Expr::Num(c) => Expr::Num(-c),
        Expr::Neg(inner) => *inner,
        other => Expr::Neg(Box::new(other)),
    }
}

fn add(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (Expr::Num(x), Expr::Num(y)) => Expr::Num(x + y),
        (Expr::Num(z), e) | (e, Expr::Num(z)) if z == 0.0 => e,
        (a, b) => Expr::Bin(BinOp::Add, Box::new(a), Box::new(b)),
    }
}

fn sub(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (Expr::Num(x), Expr::Num(y)) => Expr::Num(x - y),
        (e, Expr::Num(z)) if z == 0.0 => e,
        (Expr::Num(z), e) if z == 0.0 => neg(e),
        (a, b) => Expr::Bin(BinOp::Sub, Box::new(a), Box::new(b)),
    }
}

fn mul(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (Expr::Num(x), Expr::Num(y)) => Expr::Num(x * y),
        (Expr::Num(z), _) | (_, Expr::Num(z)) if z == 0.0 => Expr::Num(0.0),
        (Expr::Num(o), e) | (e, Expr::Num(o)) if o == 1.0 => e,
        (a, b) => Expr::Bin(BinOp::Mul, Box::new(a), Box::new(b)),
    }
}

fn div(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (Expr::Num(z), _) if z == 0.0 => Expr::Num(0.0),
        (e, Expr::Num(o)) if o == 1.0 => e,
        (a, b) => Expr::Bin(BinOp::Div, Box::new(a), Box::new(b)),
    }
}

fn pow(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (_, Expr::Num(z)) if z == 0.0 => Expr::Num(1.0),
        (e, Expr::Num(o)) if o == 1.0 => e,
        (a, b) => Expr::Bin(BinOp::Pow, Box::new(a), Box::new(b)),
    }
}

fn call(f: Func, e: Expr) -> Expr {
    Expr::Call(f, Box::new(e))
}

/// Fully parenthesized rendering; reparses to a structurally equal tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(c) if *c < 0.0 => write!(f, "(-{})", -c),
            Expr::Num(c) => write!(f, "{c}"),
            Expr::Var(v) => f.write_str(v.name()),
            Expr::Neg(e) => write!(f, "(-{e})"),
            Expr::Bin(op, l, r) => write!(f, "({l} {} {r})", op.symbol()),
            Expr::Call(func, e) => write!(f, "{}({e})", func.name()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Tok {
    Num(f64),
    Ident(usize, usize),
    Op(char),
    LParen,
    RParen,
    End,
}

struct Parser<'a> {
    src: &'a str,
    vars: &'a [Var],
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str, vars: &'a [Var]) -> Self {
        Parser {
            src,
            vars,
            toks: Vec::new(),
            pos: 0,
        }
    }

    fn parse(mut self) -> Result<Expr> {
        self.lex()?;
        if matches!(self.toks[0].0, Tok::End) {
            return Err(Error::Syntax {
                offset: 0,
                message: "empty expression".into(),
            });
        }
        let e = self.expr()?;
        let (tok, offset) = self.toks[self.pos];
        if tok != Tok::End {
            return Err(Error::Syntax {
                offset,
                message: "unexpected trailing input".into(),
            });
        }
        Ok(e)
    }

    fn lex(&mut self) -> Result<()> {
        let bytes = self.src.as_bytes();
        let mut i = 0;
        while i < bytes.len() {
            let c = bytes[i];
            if c.is_ascii_whitespace() {
                i += 1;
                continue;
            }
            let start = i;
            match c {
                b'+' | b'-' | b'*' | b'/' | b'^' => {
                    self.toks.push((Tok::Op(c as char), start));
                    i += 1;
                }
                b'(' => {
                    self.toks.push((Tok::LParen, start));
                    i += 1;
                }
                b')' => {
                    self.toks.push((Tok::RParen, start));
                    i += 1;
                }
                b'0'..=b'9' | b'.' => {
                    while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                        i += 1;
                    }
                    if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                        let mut j = i + 1;
                        if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                            j += 1;
                        }
                        if j < bytes.len() && bytes[j].is_ascii_digit() {
                            while j < bytes.len() && bytes[j].is_ascii_digit() {
                                j += 1;
                            }
                            i = j;
                        }
                    }
                    let text = &self.src[start..i];
                    let value: f64 = text.parse().map_err(|_| Error::Syntax {
                        offset: start,
                        message: format!("malformed number `{text}`"),
                    })?;
                    if !value.is_finite() {
                        return Err(Error::Syntax {
                            offset: start,
                            message: format!("number `{text}` out of range"),
                        });
                    }
                    self.toks.push((Tok::Num(value), start));
                }
                c if c.is_ascii_alphabetic() || c == b'_' => {
                    while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_')
                    {
                        i += 1;
                    }
                    self.toks.push((Tok::Ident(start, i), start));
                }
                _ => {
                    let ch = self.src[start..].chars().next().unwrap_or('?');
                    return Err(Error::Syntax {
                        offset: start,
                        message: format!("unexpected character `{ch}`"),
                    });
                }
            }
        }
        self.toks.push((Tok::End, self.src.len()));
        Ok(())
    }

    fn peek(&self) -> (Tok, usize) {
        self.toks[self.pos]
    }

    fn bump(&mut self) -> (Tok, usize) {
        let t = self.toks[self.pos];
        if !matches!(t.0, Tok::End) {
            self.pos += 1;
        }
        t
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek().0 {
                Tok::Op('+') => BinOp::Add,
                Tok::Op('-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek().0 {
                Tok::Op('*') => BinOp::Mul,
                Tok::Op('/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if let Tok::Op('-') = self.peek().0 {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.primary()?;
        if let Tok::Op('^') = self.peek().0 {
            self.bump();
            let exponent = self.unary()?;
            return Ok(Expr::Bin(BinOp::Pow, Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr> {
        let (tok, offset) = self.bump();
        match tok {
            Tok::Num(v) => Ok(Expr::Num(v)),
            Tok::LParen => {
                let e = self.expr()?;
                self.expect_rparen()?;
                Ok(e)
            }
            Tok::Ident(s, e) => {
                let name = &self.src[s..e];
                if let Some(func) = Func::from_name(name) {
                    let (next, at) = self.bump();
                    if next != Tok::LParen {
                        return Err(Error::Syntax {
                            offset: at,
                            message: format!("expected `(` after `{name}`"),
                        });
                    }
                    let arg = self.expr()?;
                    self.expect_rparen()?;
                    return Ok(Expr::Call(func, Box::new(arg)));
                }
                match self.vars.iter().find(|v| v.name() == name) {
                    Some(v) => Ok(Expr::Var(*v)),
                    None => Err(Error::UnknownIdentifier {
                        name: name.to_string(),
                        offset,
                    }),
                }
            }
            Tok::End => Err(Error::Syntax {
                offset,
                message: "unexpected end of input".into(),
            }),
            Tok::Op(c) => Err(Error::Syntax {
                offset,
                message: format!("unexpected operator `{c}`"),
            }),
            Tok::RParen => Err(Error::Syntax {
                offset,
                message: "unexpected `)`".into(),
            }),
        }
    }

    fn expect_rparen(&mut self) -> Result<()> {
        let (tok, offset) = self.bump();
        if tok == Tok::RParen {
            Ok(())
        } else {
            Err(Error::Syntax {
                offset,
                message: "expected `)`".into(),
            })
        }
    }
}
