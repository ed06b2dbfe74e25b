//! Coefficient families `(λ, x) ↦ (a, b, c)` and the two matrix conventions
//! built from them.
//!
//! * [`CoefficientPath::coefficient_matrix`] is the unnegated matrix
//!   `[[a, b], [b, c]]` whose index drives the block decomposition.
//! * [`form_bounds`] works with the negated matrix `-[[a, b], [b, c]]`, the
//!   integrand of the compact perturbation; `α` and `β` are its extreme
//!   eigenvalues over the closed domain.
//!
//! Bounds are sampled on a uniform grid, so coefficient expressions must stay
//! finite on the closed domain.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{self, Expr, Var};
use crate::spectrum::DomainSpec;

pub const DEFAULT_X_GRID: usize = 512;
pub const DEFAULT_LAMBDA_GRID: usize = 256;

/// Real symmetric matrix `[[p, q], [q, r]]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SymMat2 {
    pub p: f64,
    pub q: f64,
    pub r: f64,
}

impl SymMat2 {
    pub const fn new(p: f64, q: f64, r: f64) -> Self {
        SymMat2 { p, q, r }
    }

    pub const fn diag(p: f64, r: f64) -> Self {
        SymMat2 { p, q: 0.0, r }
    }

    pub const fn identity() -> Self {
        SymMat2::diag(1.0, 1.0)
    }

    pub fn trace(&self) -> f64 {
        self.p + self.r
    }

    pub fn det(&self) -> f64 {
        self.p * self.r - self.q * self.q
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let mean = 0.5 * (self.p + self.r);
        let rad = (0.5 * (self.p - self.r)).hypot(self.q);
        (mean - rad, mean + rad)
    }

    /// Spectral norm.
    pub fn norm(&self) -> f64 {
        let (lo, hi) = self.eigenvalues();
        lo.abs().max(hi.abs())
    }

    /// `(#eigenvalues > tol) - (#eigenvalues < -tol)`.
    pub fn signature(&self, tol: f64) -> i32 {
        let (lo, hi) = self.eigenvalues();
        [lo, hi]
            .iter()
            .map(|&e| {
                if e > tol {
                    1
                } else if e < -tol {
                    -1
                } else {
                    0
                }
            })
            .sum()
    }

    /// Number of eigenvalues strictly below `-tol`.
    pub fn morse_index(&self, tol: f64) -> usize {
        let (lo, hi) = self.eigenvalues();
        [lo, hi].iter().filter(|&&e| e < -tol).count()
    }

    /// Number of eigenvalues within `tol` of zero.
    pub fn nullity(&self, tol: f64) -> usize {
        let (lo, hi) = self.eigenvalues();
        [lo, hi].iter().filter(|&&e| e.abs() <= tol).count()
    }
}

impl Add for SymMat2 {
    type Output = SymMat2;
    fn add(self, o: SymMat2) -> SymMat2 {
        SymMat2::new(self.p + o.p, self.q + o.q, self.r + o.r)
    }
}

impl Sub for SymMat2 {
    type Output = SymMat2;
    fn sub(self, o: SymMat2) -> SymMat2 {
        SymMat2::new(self.p - o.p, self.q - o.q, self.r - o.r)
    }
}

impl Neg for SymMat2 {
    type Output = SymMat2;
    fn neg(self) -> SymMat2 {
        SymMat2::new(-self.p, -self.q, -self.r)
    }
}

impl Mul<SymMat2> for f64 {
    type Output = SymMat2;
    fn mul(self, m: SymMat2) -> SymMat2 {
        SymMat2::new(self * m.p, self * m.q, self * m.r)
    }
}

/// Extreme eigenvalues `α ≤ β` of the negated coefficient matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FormBounds {
    pub alpha: f64,
    pub beta: f64,
}

impl FormBounds {
    /// Closed form for one point: `-(a+c)/2 ∓ sqrt((a-c)²/4 + b²)`.
    pub fn from_coefficients(a: f64, b: f64, c: f64) -> Self {
        let mean = -0.5 * (a + c);
        let rad = (0.5 * (a - c)).hypot(b);
        FormBounds {
            alpha: mean - rad + 0.0,
            beta: mean + rad + 0.0,
        }
    }

    pub fn magnitude(&self) -> f64 {
        self.alpha.abs().max(self.beta.abs())
    }
}

/// A parameter-dependent family of coefficients `a, b, c`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientPath {
    pub a: Expr,
    pub b: Expr,
    pub c: Expr,
    /// True iff some expression references `x`.
    pub x_dependent: bool,
    pub lambda_range: (f64, f64),
}

impl CoefficientPath {
    pub fn new(a: Expr, b: Expr, c: Expr) -> Self {
        let x_dependent = [&a, &b, &c].iter().any(|e| e.depends_on(Var::X));
        CoefficientPath {
            a,
            b,
            c,
            x_dependent,
            lambda_range: (0.0, 1.0),
        }
    }

    /// Parse the three coefficient expressions.
    pub fn parse(a: &str, b: &str, c: &str) -> Result<Self> {
        Ok(Self::new(expr::parse(a)?, expr::parse(b)?, expr::parse(c)?))
    }

    pub fn with_range(mut self, lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi && lo.is_finite() && hi.is_finite()) {
            return Err(Error::Config(format!("invalid lambda range [{lo}, {hi}]")));
        }
        self.lambda_range = (lo, hi);
        Ok(self)
    }

    /// The linear path `λ ↦ λ·A`.
    pub fn linear(m: SymMat2) -> Self {
        let lam = |coef: f64| {
            if coef == 0.0 {
                Expr::num(0.0)
            } else {
                Expr::Bin(
                    expr::BinOp::Mul,
                    Box::new(Expr::num(coef)),
                    Box::new(Expr::var(Var::Lambda)),
                )
            }
        };
        Self::new(lam(m.p), lam(m.q), lam(m.r))
    }

    /// Coefficients that are affine in `λ`: `A + λ·B`.
    pub fn affine(base: SymMat2, slope: SymMat2) -> Self {
        let term = |c0: f64, c1: f64| {
            Expr::Bin(
                expr::BinOp::Add,
                Box::new(Expr::num(c0)),
                Box::new(Expr::Bin(
                    expr::BinOp::Mul,
                    Box::new(Expr::num(c1)),
                    Box::new(Expr::var(Var::Lambda)),
                )),
            )
        };
        Self::new(
            term(base.p, slope.p),
            term(base.q, slope.q),
            term(base.r, slope.r),
        )
    }

    /// The path `λ ↦ A_{1-λ}` traversed backwards over the same range.
    pub fn reversed(&self) -> Self {
        let (lo, hi) = self.lambda_range;
        // λ ↦ lo + hi - λ
        let flip = Expr::Bin(
            expr::BinOp::Sub,
            Box::new(Expr::num(lo + hi)),
            Box::new(Expr::var(Var::Lambda)),
        );
        let sub = |e: &Expr| substitute_lambda(e, &flip);
        CoefficientPath {
            a: sub(&self.a),
            b: sub(&self.b),
            c: sub(&self.c),
            x_dependent: self.x_dependent,
            lambda_range: self.lambda_range,
        }
    }

    /// `(a, b, c)` at `(λ, x)`.
    pub fn coeffs(&self, lambda: f64, x: f64) -> Result<(f64, f64, f64)> {
        Ok((
            self.a.eval(lambda, x)?,
            self.b.eval(lambda, x)?,
            self.c.eval(lambda, x)?,
        ))
    }

    /// `[[a, b], [b, c]]`, not negated.
    pub fn coefficient_matrix(&self, lambda: f64, x: f64) -> Result<SymMat2> {
        let (a, b, c) = self.coeffs(lambda, x)?;
        Ok(SymMat2::new(a, b, c))
    }

    /// λ-derivatives `(ȧ, ḃ, ċ)` as expressions.
    pub fn lambda_derivatives(&self) -> Result<[Expr; 3]> {
        Ok([
            self.a.diff_lambda()?,
            self.b.diff_lambda()?,
            self.c.diff_lambda()?,
        ])
    }

    pub fn require_constant(&self, what: &str) -> Result<()> {
        if self.x_dependent {
            Err(Error::XDependentUnsupported(what.to_string()))
        } else {
            Ok(())
        }
    }
}

fn substitute_lambda(e: &Expr, with: &Expr) -> Expr {
    match e {
        Expr::Var(Var::Lambda) => with.clone(),
        Expr::Num(_) | Expr::Var(_) => e.clone(),
        Expr::Neg(inner) => Expr::Neg(Box::new(substitute_lambda(inner, with))),
        Expr::Call(f, inner) => Expr::Call(*f, Box::new(substitute_lambda(inner, with))),
        Expr::Bin(op, l, r) => Expr::Bin(
            *op,
            Box::new(substitute_lambda(l, with)),
            Box::new(substitute_lambda(r, with)),
        ),
    }
}

/// Uniform grid with `n ≥ 2` points on `[lo, hi]`, endpoints included.
pub(crate) fn grid(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    let n = n.max(2);
    (0..n).map(move |i| {
        if i == n - 1 {
            hi
        } else {
            lo + (hi - lo) * i as f64 / (n - 1) as f64
        }
    })
}

fn x_extent(path: &CoefficientPath, domain: &DomainSpec) -> Result<f64> {
    match *domain {
        DomainSpec::Interval { length } => Ok(length),
        DomainSpec::Rectangle { .. } => Err(Error::XDependentUnsupported(format!(
            "coefficients {:?} reference x on a rectangle",
            (&path.a.to_string(), &path.b.to_string(), &path.c.to_string())
        ))),
    }
}

/// `α_λ, β_λ`: min/max eigenvalue of `-[[a, b], [b, c]]` over the closed domain.
pub fn form_bounds(
    path: &CoefficientPath,
    domain: &DomainSpec,
    lambda: f64,
    x_grid: usize,
) -> Result<FormBounds> {
    if !path.x_dependent {
        let (a, b, c) = path.coeffs(lambda, 0.0)?;
        return Ok(FormBounds::from_coefficients(a, b, c));
    }
    let len = x_extent(path, domain)?;
    let mut out = FormBounds {
        alpha: f64::INFINITY,
        beta: f64::NEG_INFINITY,
    };
    for x in grid(0.0, len, x_grid) {
        let (a, b, c) = path.coeffs(lambda, x)?;
        let fb = FormBounds::from_coefficients(a, b, c);
        out.alpha = out.alpha.min(fb.alpha);
        out.beta = out.beta.max(fb.beta);
    }
    Ok(out)
}

/// `max_λ max(|α_λ|, |β_λ|)` over a uniform λ-grid on the path's range.
pub fn uniform_bound(
    path: &CoefficientPath,
    domain: &DomainSpec,
    lambda_grid: usize,
    x_grid: usize,
) -> Result<f64> {
    let (lo, hi) = path.lambda_range;
    let mut best = 0.0f64;
    for lambda in grid(lo, hi, lambda_grid) {
        best = best.max(form_bounds(path, domain, lambda, x_grid)?.magnitude());
    }
    Ok(best)
}
