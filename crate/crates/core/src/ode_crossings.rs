//! Crossings of the linearized one-dimensional system by shooting.
//!
//! On `(0, L)` the kernel of `L_λ` consists of solutions of
//!
//! ```text
//! -u'' = b u + c v,   -v'' = a u + b v,   u = v = 0 at both ends.
//! ```
//!
//! Integrating the two fundamental solutions with `(u, v)(0) = 0` and
//! `(u', v')(0) = e_1, e_2` gives the end matrix `W(λ)`; `L_λ` is singular
//! exactly when `W(λ)` is. At each crossing the form
//! `Γ[z] = -∫ ȧ u² + 2ḃ uv + ċ v²` on the kernel gives the local spectral flow
//! as its signature, provided it is nondegenerate.

use nalgebra::{DMatrix, Matrix2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coefficients::{self, CoefficientPath};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::index_engine::{bisect, golden_min};
use crate::linalg;

/// Form eigenvalues below this fraction of `sup ‖Ȧ‖` count as zero.
const FORM_TOL_REL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OdeConfig {
    pub rk_tol: f64,
    /// Points of the uniform output mesh for kernel curves.
    pub mesh: usize,
    /// Scan points per unit λ.
    pub crossing_grid: usize,
    /// Singular values of `W` below `sv_tol · ‖[W; W']‖` span the kernel.
    pub sv_tol: f64,
    /// Refinement tolerance for crossing instants.
    pub root_tol: f64,
    pub x_grid: usize,
}

impl Default for OdeConfig {
    fn default() -> Self {
        OdeConfig {
            rk_tol: 1e-10,
            mesh: 1024,
            crossing_grid: 512,
            sv_tol: 1e-7,
            root_tol: 1e-11,
            x_grid: coefficients::DEFAULT_X_GRID,
        }
    }
}

/// End values of the two fundamental solutions: column `j` of `w` is
/// `(u_j, v_j)(L)` and column `j` of `dw` is `(u_j', v_j')(L)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EndMatrix {
    pub w: [[f64; 2]; 2],
    pub dw: [[f64; 2]; 2],
}

impl EndMatrix {
    pub fn det(&self) -> f64 {
        self.w[0][0] * self.w[1][1] - self.w[0][1] * self.w[1][0]
    }

    fn matrix(&self) -> Matrix2<f64> {
        Matrix2::new(self.w[0][0], self.w[0][1], self.w[1][0], self.w[1][1])
    }

    /// Singular values, descending. The smaller one is `|det| / σ_max`,
    /// which keeps full relative accuracy near a crossing.
    pub fn singular_values(&self) -> (f64, f64) {
        let fro2: f64 = self.w.iter().flatten().map(|v| v * v).sum();
        let det = self.det();
        // σ_max² is the larger root of t² - fro2 t + det² = 0
        let disc = (0.25 * fro2 * fro2 - det * det).max(0.0).sqrt();
        let smax = (0.5 * fro2 + disc).sqrt();
        let smin = if smax > 0.0 { det.abs() / smax } else { 0.0 };
        (smax, smin)
    }

    pub fn norm(&self) -> f64 {
        self.singular_values().0
    }

    /// Spectral norm of the full end state `[W; W']`. Unlike `‖W‖` it stays
    /// of order one when `W` itself vanishes.
    pub fn scale(&self) -> f64 {
        let col = |j: usize| [self.w[0][j], self.w[1][j], self.dw[0][j], self.dw[1][j]];
        let (c0, c1) = (col(0), col(1));
        let dot = |x: &[f64; 4], y: &[f64; 4]| x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>();
        let gram = coefficients::SymMat2::new(dot(&c0, &c0), dot(&c0, &c1), dot(&c1, &c1));
        gram.eigenvalues().1.max(0.0).sqrt()
    }

    /// Kernel dimension at relative threshold `sv_tol`.
    pub fn kernel_dim(&self, sv_tol: f64) -> usize {
        let (smax, smin) = self.singular_values();
        let threshold = sv_tol * self.scale();
        if smax <= threshold {
            2
        } else if smin <= threshold {
            1
        } else {
            0
        }
    }
}

/// A kernel solution sampled on the uniform output mesh.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelCurve {
    pub x: Vec<f64>,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

impl KernelCurve {
    /// `(x, u, v)` rows with a header, 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,u,v\n");
        for i in 0..self.x.len() {
            out.push_str(&format!(
                "{:.16e},{:.16e},{:.16e}\n",
                self.x[i], self.u[i], self.v[i]
            ));
        }
        out
    }

    fn scaled(&self, s: f64) -> KernelCurve {
        KernelCurve {
            x: self.x.clone(),
            u: self.u.iter().map(|v| v * s).collect(),
            v: self.v.iter().map(|v| v * s).collect(),
        }
    }

    fn axpy(&self, s: f64, other: &KernelCurve) -> KernelCurve {
        KernelCurve {
            x: self.x.clone(),
            u: self.u.iter().zip(&other.u).map(|(a, b)| a + s * b).collect(),
            v: self.v.iter().zip(&other.v).map(|(a, b)| a + s * b).collect(),
        }
    }

    /// Linear combination `Σ coeffs[i] · basis[i]`.
    pub fn combine(basis: &[KernelCurve], coeffs: &[f64]) -> KernelCurve {
        let mut out = basis[0].scaled(coeffs[0]);
        for (b, &c) in basis.iter().zip(coeffs).skip(1) {
            out = out.axpy(c, b);
        }
        out
    }
}

/// Everything known about one crossing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossingRecord {
    pub lambda0: f64,
    pub kernel_dim: usize,
    #[serde(skip)]
    pub kernel_basis: Vec<KernelCurve>,
    /// Crossing form on the L²-orthonormalized kernel basis.
    pub form: Vec<Vec<f64>>,
    pub local_sflow: i32,
    pub regular: bool,
    /// The pointwise definiteness test certifies this instant.
    pub posdef: bool,
}

// Dormand–Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Adaptive Dormand–Prince integration of `y' = f(x, y)` from `x0` to `x1`.
/// Returns the end state and the last accepted step for warm restarts.
pub fn dopri5<const N: usize>(
    f: &impl Fn(f64, &[f64; N]) -> Result<[f64; N]>,
    x0: f64,
    y0: [f64; N],
    x1: f64,
    tol: f64,
    h0: f64,
) -> Result<([f64; N], f64)> {
    let span = x1 - x0;
    if span == 0.0 {
        return Ok((y0, h0));
    }
    let mut x = x0;
    let mut y = y0;
    let mut h = if h0 > 0.0 { h0.min(span) } else { span / 64.0 };
    let mut k = [[0.0; N]; 7];
    k[0] = f(x, &y)?;
    let mut last_h = h;
    while x < x1 {
        let min_step = 1e-14 * x.abs().max(span) + 1e-300;
        if h < min_step {
            return Err(Error::IntegrationFailure { x });
        }
        let step = h.min(x1 - x);
        for s in 1..7 {
            let mut ys = y;
            for (j, kj) in k.iter().enumerate().take(s) {
                let a = A[s][j];
                if a != 0.0 {
                    for i in 0..N {
                        ys[i] += step * a * kj[i];
                    }
                }
            }
            k[s] = f(x + C[s] * step, &ys)?;
        }
        // 5th-order solution is the stage-7 argument (FSAL)
        let mut y_new = y;
        for (j, kj) in k.iter().enumerate().take(6) {
            let b = A[6][j];
            for i in 0..N {
                y_new[i] += step * b * kj[i];
            }
        }
        let mut err = 0.0;
        for i in 0..N {
            let mut e = 0.0;
            for (j, kj) in k.iter().enumerate() {
                e += E[j] * kj[i];
            }
            let scale = tol * (1.0 + y[i].abs().max(y_new[i].abs()));
            err += (step * e / scale).powi(2);
        }
        let err = (err / N as f64).sqrt();
        if err <= 1.0 {
            x = if step == x1 - x { x1 } else { x + step };
            y = y_new;
            k[0] = k[6];
            last_h = step;
        }
        let factor = if err == 0.0 {
            5.0
        } else {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        };
        h = step * factor;
        if !y.iter().all(|v| v.is_finite()) {
            return Err(Error::IntegrationFailure { x });
        }
    }
    Ok((y, last_h))
}

/// Coefficient sampler: constant paths are evaluated once.
struct Coefs<'a> {
    path: &'a CoefficientPath,
    lambda: f64,
    frozen: Option<(f64, f64, f64)>,
}

impl<'a> Coefs<'a> {
    fn new(path: &'a CoefficientPath, lambda: f64) -> Result<Self> {
        let frozen = if path.x_dependent {
            None
        } else {
            Some(path.coeffs(lambda, 0.0)?)
        };
        Ok(Coefs {
            path,
            lambda,
            frozen,
        })
    }

    fn at(&self, x: f64) -> Result<(f64, f64, f64)> {
        match self.frozen {
            Some(v) => Ok(v),
            None => self.path.coeffs(self.lambda, x),
        }
    }
}

/// State `(u, v, u', v')`.
fn rhs(co: &Coefs<'_>, x: f64, y: &[f64; 4]) -> Result<[f64; 4]> {
    let (a, b, c) = co.at(x)?;
    Ok([y[2], y[3], -(b * y[0] + c * y[1]), -(a * y[0] + b * y[1])])
}

/// End matrix `W(λ)` on `(0, len)`.
pub fn shoot(path: &CoefficientPath, len: f64, lambda: f64, rk_tol: f64) -> Result<EndMatrix> {
    let co = Coefs::new(path, lambda)?;
    // both fundamental solutions side by side
    let f = |x: f64, y: &[f64; 8]| -> Result<[f64; 8]> {
        let (a, b, c) = co.at(x)?;
        Ok([
            y[2],
            y[3],
            -(b * y[0] + c * y[1]),
            -(a * y[0] + b * y[1]),
            y[6],
            y[7],
            -(b * y[4] + c * y[5]),
            -(a * y[4] + b * y[5]),
        ])
    };
    let y0 = [0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0];
    let (y, _) = dopri5(&f, 0.0, y0, len, rk_tol, 0.0)?;
    Ok(EndMatrix {
        w: [[y[0], y[4]], [y[1], y[5]]],
        dw: [[y[2], y[6]], [y[3], y[7]]],
    })
}

/// Solution with `(u, v)(0) = 0`, `(u', v')(0) = slope`, sampled on `mesh` points.
pub fn solution_curve(
    path: &CoefficientPath,
    len: f64,
    lambda: f64,
    slope: [f64; 2],
    mesh: usize,
    rk_tol: f64,
) -> Result<KernelCurve> {
    let co = Coefs::new(path, lambda)?;
    let f = |x: f64, y: &[f64; 4]| rhs(&co, x, y);
    let mesh = mesh.max(2);
    let xs: Vec<f64> = coefficients::grid(0.0, len, mesh).collect();
    let mut y = [0.0, 0.0, slope[0], slope[1]];
    let mut curve = KernelCurve {
        x: xs.clone(),
        u: vec![0.0; mesh],
        v: vec![0.0; mesh],
    };
    let mut h = 0.0;
    for i in 1..mesh {
        let (ny, nh) = dopri5(&f, xs[i - 1], y, xs[i], rk_tol, h)?;
        y = ny;
        h = nh;
        curve.u[i] = y[0];
        curve.v[i] = y[1];
    }
    Ok(curve)
}

/// Composite Simpson weights on a uniform mesh; an odd interval count closes
/// with the 3/8 rule.
pub fn simpson_weights(points: usize, h: f64) -> Vec<f64> {
    let mut w = vec![0.0; points];
    if points < 2 {
        return w;
    }
    let intervals = points - 1;
    if intervals == 1 {
        w[0] = 0.5 * h;
        w[1] = 0.5 * h;
        return w;
    }
    let (simpson_end, tail) = if intervals.is_multiple_of(2) {
        (intervals, false)
    } else {
        (intervals - 3, true)
    };
    let mut i = 0;
    while i + 2 <= simpson_end {
        w[i] += h / 3.0;
        w[i + 1] += 4.0 * h / 3.0;
        w[i + 2] += h / 3.0;
        i += 2;
    }
    if tail {
        let s = simpson_end;
        w[s] += 3.0 * h / 8.0;
        w[s + 1] += 9.0 * h / 8.0;
        w[s + 2] += 9.0 * h / 8.0;
        w[s + 3] += 3.0 * h / 8.0;
    }
    w
}

fn l2_inner(w: &[f64], p: &KernelCurve, q: &KernelCurve) -> f64 {
    (0..w.len())
        .map(|i| w[i] * (p.u[i] * q.u[i] + p.v[i] * q.v[i]))
        .sum()
}

/// Kernel dimension and an L²-orthonormal basis of solution curves at `λ`.
pub fn kernel(path: &CoefficientPath, len: f64, lambda: f64, cfg: &OdeConfig) -> Result<(usize, Vec<KernelCurve>)> {
    let w = shoot(path, len, lambda, cfg.rk_tol)?;
    let dim = w.kernel_dim(cfg.sv_tol);
    if dim == 0 {
        return Ok((0, Vec::new()));
    }
    let slopes: Vec<[f64; 2]> = if dim == 2 {
        vec![[1.0, 0.0], [0.0, 1.0]]
    } else {
        let svd = w.matrix().svd(false, true);
        let vt = svd.v_t.expect("requested right singular vectors");
        let imin = if svd.singular_values[0] <= svd.singular_values[1] { 0 } else { 1 };
        vec![[vt[(imin, 0)], vt[(imin, 1)]]]
    };
    let weights = simpson_weights(cfg.mesh.max(2), len / (cfg.mesh.max(2) - 1) as f64);
    let mut basis: Vec<KernelCurve> = Vec::new();
    for s in slopes {
        let mut c = solution_curve(path, len, lambda, s, cfg.mesh, cfg.rk_tol)?;
        for b in &basis {
            let proj = l2_inner(&weights, &c, b);
            c = c.axpy(-proj, b);
        }
        let norm = l2_inner(&weights, &c, &c).sqrt();
        basis.push(c.scaled(1.0 / norm));
    }
    assert!(basis.len() <= 2, "kernel of a 2-component second-order system has dimension <= 2");
    Ok((dim, basis))
}

/// A refined root of `det W` and whether `det W` changes sign across it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub lambda: f64,
    pub sign_change: bool,
}

/// Instants in `[lo, hi]` where `W(λ)` is singular.
pub fn find_crossings(
    path: &CoefficientPath,
    len: f64,
    interval: (f64, f64),
    cfg: &OdeConfig,
) -> Result<Vec<f64>> {
    Ok(find_candidates(path, len, interval, cfg)?
        .into_iter()
        .map(|c| c.lambda)
        .collect())
}

/// Scan `det W` on a grid and refine every crossing in `[lo, hi]`.
///
/// Sign changes of `det W` are bisected. Grid minima of the smallest singular
/// value with no adjacent sign change are refined by golden-section search
/// and kept when they fall below the kernel threshold.
pub fn find_candidates(
    path: &CoefficientPath,
    len: f64,
    interval: (f64, f64),
    cfg: &OdeConfig,
) -> Result<Vec<Candidate>> {
    let (lo, hi) = interval;
    let points = ((hi - lo) * cfg.crossing_grid as f64).ceil().max(2.0) as usize + 1;
    let lambdas: Vec<f64> = coefficients::grid(lo, hi, points).collect();
    let ends: Vec<EndMatrix> = lambdas
        .par_iter()
        .map(|&l| shoot(path, len, l, cfg.rk_tol))
        .collect::<Result<_>>()?;
    let det: Vec<f64> = ends.iter().map(EndMatrix::det).collect();
    let smin: Vec<f64> = ends.iter().map(|e| e.singular_values().1 / e.scale()).collect();

    let det_at = |l: f64| shoot(path, len, l, cfg.rk_tol).map(|w| w.det());
    let smin_at = |l: f64| shoot(path, len, l, cfg.rk_tol).map(|w| w.singular_values().1 / w.scale());

    let sign_change = |i: usize| i + 1 < det.len() && det[i] * det[i + 1] < 0.0;
    let mut roots = Vec::new();
    for i in 0..lambdas.len() {
        if det[i] == 0.0 {
            let across = i > 0 && i + 1 < det.len() && det[i - 1] * det[i + 1] < 0.0;
            roots.push(Candidate { lambda: lambdas[i], sign_change: across });
        } else if sign_change(i) {
            let lambda = bisect(det_at, lambdas[i], lambdas[i + 1], det[i], cfg.root_tol)?;
            roots.push(Candidate { lambda, sign_change: true });
        } else if i > 0
            && i + 1 < lambdas.len()
            && smin[i] < smin[i - 1]
            && smin[i] <= smin[i + 1]
            && !sign_change(i - 1)
            && det[i - 1] != 0.0
            && det[i + 1] != 0.0
        {
            let (lm, _) = golden_min(smin_at, lambdas[i - 1], lambdas[i + 1], cfg.root_tol)?;
            if shoot(path, len, lm, cfg.rk_tol)?.kernel_dim(cfg.sv_tol) > 0 {
                roots.push(Candidate { lambda: lm, sign_change: false });
            }
        }
    }
    roots.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
    for pair in roots.windows(2) {
        if pair[1].lambda - pair[0].lambda <= 10.0 * cfg.root_tol.max(1e-10) {
            return Err(Error::UnresolvedCluster(pair[0].lambda, pair[1].lambda));
        }
    }
    Ok(roots)
}

/// `Γ[z_i, z_j] = -∫ ȧ u_i u_j + ḃ (u_i v_j + v_i u_j) + ċ v_i v_j` at `λ₀`.
pub fn crossing_form(
    path: &CoefficientPath,
    lambda0: f64,
    basis: &[KernelCurve],
) -> Result<DMatrix<f64>> {
    let [da, db, dc] = path.lambda_derivatives()?;
    crossing_form_with(&[da, db, dc], lambda0, basis)
}

fn crossing_form_with(derivs: &[Expr; 3], lambda0: f64, basis: &[KernelCurve]) -> Result<DMatrix<f64>> {
    let d = basis.len();
    let mut form = DMatrix::zeros(d, d);
    if d == 0 {
        return Ok(form);
    }
    let xs = &basis[0].x;
    let h = if xs.len() > 1 { xs[1] - xs[0] } else { 0.0 };
    let w = simpson_weights(xs.len(), h);
    let mut dot = Vec::with_capacity(xs.len());
    for &x in xs {
        dot.push((
            derivs[0].eval(lambda0, x)?,
            derivs[1].eval(lambda0, x)?,
            derivs[2].eval(lambda0, x)?,
        ));
    }
    for i in 0..d {
        for j in i..d {
            let (p, q) = (&basis[i], &basis[j]);
            let s: f64 = (0..xs.len())
                .map(|m| {
                    let (a, b, c) = dot[m];
                    w[m] * (a * p.u[m] * q.u[m] + b * (p.u[m] * q.v[m] + p.v[m] * q.u[m]) + c * p.v[m] * q.v[m])
                })
                .sum();
            form[(i, j)] = -s;
            form[(j, i)] = -s;
        }
    }
    Ok(form)
}

/// Signature of the form and whether it is nondegenerate at threshold `tol`.
pub fn local_sflow(form: &DMatrix<f64>, tol: f64) -> (i32, bool) {
    let eig = linalg::symmetric_eigenvalues(form);
    let sig = eig
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
        .sum();
    let regular = eig.iter().all(|e| e.abs() > tol);
    (sig, regular)
}

/// `sup_x ‖Ȧ(x)‖` at `λ₀`, the scale for the form threshold.
fn derivative_scale(derivs: &[Expr; 3], lambda0: f64, len: f64, x_grid: usize) -> Result<f64> {
    let mut best = 0.0f64;
    for x in coefficients::grid(0.0, len, x_grid) {
        let m = coefficients::SymMat2::new(
            derivs[0].eval(lambda0, x)?,
            derivs[1].eval(lambda0, x)?,
            derivs[2].eval(lambda0, x)?,
        );
        best = best.max(m.norm());
    }
    Ok(best)
}

/// Sufficient test for a bifurcation at a crossing: `ȧ ≠ 0` and
/// `ȧċ - ḃ² > 0` at every interior grid point (the derivative matrix is
/// definite throughout).
pub fn posdef_test(path: &CoefficientPath, lambda0: f64, len: f64, x_grid: usize) -> Result<bool> {
    let [da, db, dc] = path.lambda_derivatives()?;
    let n = x_grid.max(1);
    for i in 1..=n {
        let x = len * i as f64 / (n + 1) as f64;
        let (a, b, c) = (da.eval(lambda0, x)?, db.eval(lambda0, x)?, dc.eval(lambda0, x)?);
        if a == 0.0 || a * c - b * b <= 0.0 {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Crossing records for every crossing strictly inside the path's range.
pub fn analyze_crossings(path: &CoefficientPath, len: f64, cfg: &OdeConfig) -> Result<Vec<CrossingRecord>> {
    let (lo, hi) = path.lambda_range;
    let derivs = path.lambda_derivatives()?;
    let roots = find_candidates(path, len, (lo, hi), cfg)?;
    let mut out = Vec::new();
    for Candidate { lambda: lambda0, sign_change } in roots {
        if lambda0 <= lo || lambda0 >= hi {
            continue;
        }
        let (dim, basis) = kernel(path, len, lambda0, cfg)?;
        if dim == 0 {
            continue;
        }
        let form = crossing_form_with(&derivs, lambda0, &basis)?;
        let scale = derivative_scale(&derivs, lambda0, len, cfg.x_grid)?;
        let (sig, regular) = local_sflow(&form, FORM_TOL_REL * scale);
        // a simple sign change of det W goes with odd local flow
        let parity_ok = (sig.rem_euclid(2) == 1) == sign_change;
        let regular = regular && scale > 0.0 && parity_ok;
        assert!(sig.unsigned_abs() as usize <= dim, "|local sflow| exceeds kernel dimension");
        let posdef = posdef_test(path, lambda0, len, cfg.x_grid)?;
        out.push(CrossingRecord {
            lambda0,
            kernel_dim: dim,
            form: (0..dim).map(|i| (0..dim).map(|j| form[(i, j)]).collect()).collect(),
            kernel_basis: basis,
            local_sflow: sig,
            regular,
            posdef,
        });
    }
    Ok(out)
}

/// Fails with [`Error::EndpointSingular`] if either end of the range has a kernel.
pub fn check_endpoints(path: &CoefficientPath, len: f64, cfg: &OdeConfig) -> Result<()> {
    let (lo, hi) = path.lambda_range;
    for lambda in [lo, hi] {
        if kernel(path, len, lambda, cfg)?.0 > 0 {
            return Err(Error::EndpointSingular { lambda });
        }
    }
    Ok(())
}

/// Sum of local spectral flows over the interior crossings.
pub fn total_sflow_crossings(path: &CoefficientPath, len: f64, cfg: &OdeConfig) -> Result<i64> {
    check_endpoints(path, len, cfg)?;
    let records = analyze_crossings(path, len, cfg)?;
    total_from_records(&records)
}

pub fn total_from_records(records: &[CrossingRecord]) -> Result<i64> {
    let irregular: Vec<f64> = records.iter().filter(|r| !r.regular).map(|r| r.lambda0).collect();
    if !irregular.is_empty() {
        return Err(Error::IrregularCrossing(irregular));
    }
    Ok(records.iter().map(|r| i64::from(r.local_sflow)).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn path(a: &str, b: &str, c: &str) -> CoefficientPath {
        CoefficientPath::parse(a, b, c).unwrap()
    }

    #[test]
    fn dopri_matches_exponential_and_oscillator() {
        let f = |_x: f64, y: &[f64; 2]| Ok([y[1], -y[0]]);
        let (y, _) = dopri5(&f, 0.0, [0.0, 1.0], PI / 2.0, 1e-12, 0.0).unwrap();
        assert!((y[0] - 1.0).abs() < 1e-10 && y[1].abs() < 1e-10);
        let g = |_x: f64, y: &[f64; 1]| Ok([y[0]]);
        let (y, _) = dopri5(&g, 0.0, [1.0], 2.0, 1e-12, 0.0).unwrap();
        assert!((y[0] - 2f64.exp()).abs() < 1e-9);
    }

    #[test]
    fn zero_coefficients_give_pi_identity() {
        let w = shoot(&path("0", "0", "0"), PI, 0.7, 1e-10).unwrap();
        assert!((w.w[0][0] - PI).abs() < 1e-10 && (w.w[1][1] - PI).abs() < 1e-10);
        assert!(w.w[0][1].abs() < 1e-14 && w.w[1][0].abs() < 1e-14);
    }

    #[test]
    fn end_matrix_singular_at_crossing() {
        let p = path("5*lambda", "0", "5*lambda");
        let w = shoot(&p, PI, 0.2, 1e-10).unwrap();
        assert!(w.det().abs() < 1e-8);
        let w = shoot(&p, PI, 0.5, 1e-10).unwrap();
        assert!(w.det().abs() > 1e-2);
    }

    #[test]
    fn singular_values_of_end_matrix() {
        let e = EndMatrix { w: [[3.0, 1.0], [1.0, 3.0]], dw: [[0.0; 2]; 2] };
        let (smax, smin) = e.singular_values();
        assert!((smax - 4.0).abs() < 1e-14 && (smin - 2.0).abs() < 1e-14);
    }

    #[test]
    fn kernel_examples() {
        let cfg = OdeConfig::default();
        assert_eq!(kernel(&path("0", "0", "0"), PI, 0.3, &cfg).unwrap().0, 0);
        let (dim, basis) = kernel(&path("5*lambda", "0", "5*lambda"), PI, 0.2, &cfg).unwrap();
        assert_eq!(dim, 1);
        // ∝ (sin x, sin x), normalized in L²: each component sin(x)/√π
        let b = &basis[0];
        let sign = b.u[512].signum();
        for i in (0..b.x.len()).step_by(97) {
            let want = b.x[i].sin() / PI.sqrt();
            assert!((sign * b.u[i] - want).abs() < 1e-7);
            assert!((sign * b.v[i] - want).abs() < 1e-7);
        }
        // b-only coupling decouples into w± = u ± v; λ just below the crossing at 1
        assert_eq!(kernel(&path("0", "lambda", "0"), PI, 1.0 - 1e-3, &cfg).unwrap().0, 0);
        assert_eq!(kernel(&path("0", "lambda", "0"), PI, 1.0, &cfg).unwrap().0, 2);
    }

    #[test]
    fn find_crossings_examples() {
        let cfg = OdeConfig::default();
        let p = path("5*lambda", "0", "5*lambda");
        let r = find_crossings(&p, PI, (0.0, 1.0), &cfg).unwrap();
        assert_eq!(r.len(), 2);
        assert!((r[0] - 0.2).abs() < 1e-8 && (r[1] - 0.8).abs() < 1e-8);
        assert!(find_crossings(&path("0", "0", "0"), PI, (0.0, 1.0), &cfg).unwrap().is_empty());
        let r = find_crossings(&p, PI, (0.0, 0.5), &cfg).unwrap();
        assert_eq!(r.len(), 1);
        assert!((r[0] - 0.2).abs() < 1e-8);
    }

    #[test]
    fn tangential_two_dimensional_crossings() {
        let cfg = OdeConfig::default();
        let p = path("0", "5*lambda", "0");
        let r = find_crossings(&p, PI, (0.0, 1.0), &cfg).unwrap();
        assert_eq!(r.len(), 2);
        assert!((r[0] - 0.2).abs() < 1e-6 && (r[1] - 0.8).abs() < 1e-6);
        let recs = analyze_crossings(&p, PI, &cfg).unwrap();
        assert!(recs.iter().all(|c| c.kernel_dim == 2 && c.regular && c.local_sflow == 0));
    }

    #[test]
    fn crossing_form_examples() {
        let cfg = OdeConfig::default();
        let p = path("5*lambda", "0", "5*lambda");
        // unnormalized basis z = (sin x, sin x): Γ[z] = -5 ∫ 2 sin² = -5π
        let xs: Vec<f64> = coefficients::grid(0.0, PI, cfg.mesh).collect();
        let z = KernelCurve {
            u: xs.iter().map(|x| x.sin()).collect(),
            v: xs.iter().map(|x| x.sin()).collect(),
            x: xs,
        };
        let f = crossing_form(&p, 0.2, std::slice::from_ref(&z)).unwrap();
        assert!((f[(0, 0)] + 5.0 * PI).abs() < 1e-8);
        let f2 = crossing_form(&p, 0.2, &[z.scaled(2.0)]).unwrap();
        assert!((f2[(0, 0)] - 4.0 * f[(0, 0)]).abs() < 1e-8);
        assert_eq!(local_sflow(&f2, 1e-9), local_sflow(&f, 1e-9));
        let constant = path("3", "1", "2");
        let f0 = crossing_form(&constant, 0.2, &[z]).unwrap();
        assert_eq!(f0[(0, 0)], 0.0);
    }

    #[test]
    fn local_sflow_examples() {
        let m = DMatrix::from_element(1, 1, -5.0 * PI);
        assert_eq!(local_sflow(&m, 1e-9), (-1, true));
        assert_eq!(local_sflow(&DMatrix::zeros(1, 1), 1e-9), (0, false));
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![2.0, -3.0]));
        assert_eq!(local_sflow(&d, 1e-9), (0, true));
    }

    #[test]
    fn total_sflow_examples() {
        let cfg = OdeConfig::default();
        let p = path("5*lambda", "0", "5*lambda");
        assert_eq!(total_sflow_crossings(&p, PI, &cfg).unwrap(), -2);
        assert_eq!(total_sflow_crossings(&path("3", "1", "-2"), PI, &cfg).unwrap(), 0);
        assert_eq!(total_sflow_crossings(&p.reversed(), PI, &cfg).unwrap(), 2);
        let singular_end = p.clone().with_range(0.0, 0.2).unwrap();
        assert!(matches!(
            total_sflow_crossings(&singular_end, PI, &cfg),
            Err(Error::EndpointSingular { .. })
        ));
    }

    #[test]
    fn irregular_crossing_is_reported() {
        // lower-right block entry 1 - a touches zero at 0.4 with zero λ-derivative
        let p = path("1 + (lambda-0.4)^2", "0", "1 + (lambda-0.4)^2");
        let cfg = OdeConfig::default();
        match total_sflow_crossings(&p, PI, &cfg) {
            Err(Error::IrregularCrossing(at)) => {
                assert_eq!(at.len(), 1);
                assert!((at[0] - 0.4).abs() < 1e-4);
            }
            other => panic!("expected an irregular crossing, got {other:?}"),
        }
    }

    #[test]
    fn posdef_examples() {
        assert!(posdef_test(&path("5*lambda", "0", "5*lambda"), 0.2, PI, 64).unwrap());
        assert!(!posdef_test(&path("3", "0", "3"), 0.2, PI, 64).unwrap());
        assert!(!posdef_test(&path("lambda", "0", "-lambda"), 0.2, PI, 64).unwrap());
        assert!(matches!(
            posdef_test(&path("abs(lambda)", "0", "0"), 0.2, PI, 8),
            Err(Error::NotDifferentiable(_))
        ));
    }

    #[test]
    fn simpson_integrates_cubics_exactly() {
        for points in [5usize, 6, 1024, 1025] {
            let h = 2.0 / (points - 1) as f64;
            let w = simpson_weights(points, h);
            let s: f64 = (0..points).map(|i| {
                let x = i as f64 * h;
                w[i] * (x * x * x - x + 1.0)
            }).sum();
            assert!((s - 4.0).abs() < 1e-12, "{points}: {s}");
        }
    }
}
