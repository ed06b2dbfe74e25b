//! Galerkin truncations of `L_λ = T + K_λ` and spectral flow as a
//! Morse-index difference.
//!
//! The ordered basis is `{(e_k, -e_k)/√2, (e_k, e_k)/√2}` for `k = 1..n`,
//! where `e_k` are Dirichlet eigenfunctions normalized in `H¹₀`, so that
//! `∫ e_k² = 1/λ_k`. In this basis `T(u, v) = (v, u)` is `diag(-1, 1)` on each
//! pair and
//!
//! ```text
//! ⟨K e_{j,s}, e_{k,t}⟩ = -½ ∫ (a + (s+t) b + s t c) e_j e_k dx,   s, t ∈ {-1, +1}.
//! ```
//!
//! For constant coefficients `∫ e_j e_k = δ_jk / λ_k` and the matrix is block
//! diagonal on any domain with known spectrum. For x-dependent coefficients on
//! an interval the integrals are computed by composite Gauss–Legendre
//! quadrature.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coefficients::{self, CoefficientPath};
use crate::error::{Error, Result};
use crate::index_engine::block_matrix;
use crate::linalg;
use crate::spectrum::DomainSpec;

/// Endpoint eigenvalues closer than this to zero trigger the δ-shift.
pub const ZERO_EIGEN_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GalerkinConfig {
    pub n_start: usize,
    pub n_max: usize,
    /// Fixed δ-shift; `None` picks one from the endpoint spectra.
    pub delta: Option<f64>,
    pub delta_floor: f64,
    /// Gauss–Legendre panels per retained mode.
    pub quad_panels: usize,
    pub x_grid: usize,
    pub lambda_grid: usize,
    /// Assemble interval problems by quadrature even when the coefficients
    /// are constant.
    pub force_quadrature: bool,
}

impl Default for GalerkinConfig {
    fn default() -> Self {
        GalerkinConfig {
            n_start: 8,
            n_max: 256,
            delta: None,
            delta_floor: 1e-8,
            quad_panels: 4,
            x_grid: coefficients::DEFAULT_X_GRID,
            lambda_grid: coefficients::DEFAULT_LAMBDA_GRID,
            force_quadrature: false,
        }
    }
}

/// Matrix of `T + Q_n K_λ Q_n` on the first `n` mode pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedOperator {
    pub n: usize,
    pub matrix: DMatrix<f64>,
}

impl TruncatedOperator {
    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::symmetric_eigenvalues(&self.matrix)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SflowResult {
    pub value: i64,
    pub n_used: usize,
    pub delta_used: f64,
    /// Value unchanged across two successive doublings and tail small enough.
    pub stable: bool,
    pub tail_norm: f64,
    /// Smallest `|eigenvalue + δ|` over both endpoint truncations.
    pub margin: f64,
}

// 8-point Gauss–Legendre rule on [-1, 1].
const GL_NODES: [f64; 4] = [
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL_WEIGHTS: [f64; 4] = [
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

/// Nodes and weights of the composite 8-point Gauss–Legendre rule on `[0, len]`.
pub fn gauss_legendre(len: f64, panels: usize) -> (Vec<f64>, Vec<f64>) {
    let panels = panels.max(1);
    let h = len / panels as f64;
    let mut nodes = Vec::with_capacity(8 * panels);
    let mut weights = Vec::with_capacity(8 * panels);
    for p in 0..panels {
        let mid = (p as f64 + 0.5) * h;
        for (&t, &w) in GL_NODES.iter().zip(&GL_WEIGHTS) {
            for sign in [-1.0, 1.0] {
                nodes.push(mid + sign * t * 0.5 * h);
                weights.push(w * 0.5 * h);
            }
        }
    }
    (nodes, weights)
}

/// `H¹₀`-normalized Dirichlet eigenfunction `e_k` on `(0, len)`.
pub fn mode(len: f64, k: usize, x: f64) -> f64 {
    let w = k as f64 * std::f64::consts::PI / len;
    (2.0 / len).sqrt() * (w * x).sin() / w
}

/// `∫ a e_j e_k`, `∫ b e_j e_k`, `∫ c e_j e_k` for `j, k = 1..n` on `(0, len)`.
pub fn mode_integrals(
    path: &CoefficientPath,
    len: f64,
    n: usize,
    lambda: f64,
    panels_per_mode: usize,
) -> Result<[DMatrix<f64>; 3]> {
    let (nodes, weights) = gauss_legendre(len, panels_per_mode * n.max(1));
    let q = nodes.len();
    // modes[k][i] = e_{k+1}(x_i)
    let mut modes = DMatrix::zeros(n, q);
    let mut coef = [vec![0.0; q], vec![0.0; q], vec![0.0; q]];
    for (i, &x) in nodes.iter().enumerate() {
        for k in 0..n {
            modes[(k, i)] = mode(len, k + 1, x);
        }
        let (a, b, c) = path.coeffs(lambda, x)?;
        coef[0][i] = a * weights[i];
        coef[1][i] = b * weights[i];
        coef[2][i] = c * weights[i];
    }
    let integrate = |w: &[f64]| {
        let mut scaled = modes.clone();
        for (i, wi) in w.iter().enumerate() {
            scaled.column_mut(i).scale_mut(*wi);
        }
        &scaled * modes.transpose()
    };
    Ok([integrate(&coef[0]), integrate(&coef[1]), integrate(&coef[2])])
}

/// Matrix of the truncation at `λ`.
pub fn assemble(
    path: &CoefficientPath,
    domain: &DomainSpec,
    n: usize,
    lambda: f64,
    panels_per_mode: usize,
) -> Result<TruncatedOperator> {
    assemble_impl(path, domain, n, lambda, panels_per_mode, false)
}

/// [`assemble`] honouring [`GalerkinConfig::force_quadrature`].
pub fn assemble_with(
    path: &CoefficientPath,
    domain: &DomainSpec,
    n: usize,
    lambda: f64,
    cfg: &GalerkinConfig,
) -> Result<TruncatedOperator> {
    let quadrature = cfg.force_quadrature && domain.is_interval();
    assemble_impl(path, domain, n, lambda, cfg.quad_panels, quadrature)
}

fn assemble_impl(
    path: &CoefficientPath,
    domain: &DomainSpec,
    n: usize,
    lambda: f64,
    panels_per_mode: usize,
    quadrature: bool,
) -> Result<TruncatedOperator> {
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    if !path.x_dependent && !quadrature {
        let spectrum = domain.spectrum(n)?;
        let (a, b, c) = path.coeffs(lambda, 0.0)?;
        for k in 0..n {
            let blk = block_matrix(a, b, c, spectrum.values[k]);
            m[(2 * k, 2 * k)] = blk.p;
            m[(2 * k, 2 * k + 1)] = blk.q;
            m[(2 * k + 1, 2 * k)] = blk.q;
            m[(2 * k + 1, 2 * k + 1)] = blk.r;
        }
        return Ok(TruncatedOperator { n, matrix: m });
    }
    let len = match *domain {
        DomainSpec::Interval { length } => length,
        DomainSpec::Rectangle { .. } => {
            return Err(Error::XDependentUnsupported(
                "Galerkin assembly of x-dependent coefficients on a rectangle".into(),
            ))
        }
    };
    let [ia, ib, ic] = mode_integrals(path, len, n, lambda, panels_per_mode)?;
    let signs = [-1.0, 1.0];
    for j in 0..n {
        for k in 0..n {
            for (si, s) in signs.iter().enumerate() {
                for (ti, t) in signs.iter().enumerate() {
                    let mut v = -0.5 * (ia[(j, k)] + (s + t) * ib[(j, k)] + s * t * ic[(j, k)]);
                    if j == k && si == ti {
                        v += *s;
                    }
                    m[(2 * j + si, 2 * k + ti)] = v;
                }
            }
        }
    }
    // Exact symmetry; quadrature products already agree to rounding.
    let sym = (&m + m.transpose()) * 0.5;
    Ok(TruncatedOperator { n, matrix: sym })
}

/// Number of eigenvalues of `matrix + δ·I` below zero.
pub fn morse_index(t: &TruncatedOperator, delta: f64) -> usize {
    linalg::morse_index(&t.matrix, delta)
}

/// Upper bound for `sup_λ ‖Q_n^⊥ K_λ Q_n^⊥‖`: `sup |A| / λ_{n+1}`.
pub fn tail_norm(path: &CoefficientPath, domain: &DomainSpec, n: usize, cfg: &GalerkinConfig) -> Result<f64> {
    let bound = coefficients::uniform_bound(path, domain, cfg.lambda_grid, cfg.x_grid)?;
    tail_from_bound(bound, domain, n)
}

fn tail_from_bound(bound: f64, domain: &DomainSpec, n: usize) -> Result<f64> {
    let spectrum = domain.spectrum(n + 1)?;
    Ok(bound / spectrum.lambda(n + 1))
}

/// Norm of `K_λ` compressed to modes `n+1..=n+extra`.
///
/// A finite section of the tail; it never exceeds the true tail norm.
pub fn measured_tail_norm(
    path: &CoefficientPath,
    domain: &DomainSpec,
    n: usize,
    extra: usize,
    lambda: f64,
    panels_per_mode: usize,
) -> Result<f64> {
    let full = assemble(path, domain, n + extra, lambda, panels_per_mode)?;
    let mut k = full.matrix.view((2 * n, 2 * n), (2 * extra, 2 * extra)).into_owned();
    // remove T, leaving the compact part
    for i in 0..extra {
        k[(2 * i, 2 * i)] += 1.0;
        k[(2 * i + 1, 2 * i + 1)] -= 1.0;
    }
    Ok(linalg::symmetric_norm(&k))
}

/// δ for the endpoint pair: zero when both are safely invertible, otherwise
/// half the smallest nonzero `|eigenvalue|`, floored at `floor`.
pub fn default_delta(endpoint_eigs: &[&[f64]], floor: f64) -> f64 {
    let all = endpoint_eigs.iter().flat_map(|e| e.iter().copied());
    let near_zero = all.clone().any(|e| e.abs() <= ZERO_EIGEN_TOL);
    if !near_zero {
        return 0.0;
    }
    let gap = all
        .map(f64::abs)
        .filter(|&e| e > ZERO_EIGEN_TOL)
        .fold(f64::INFINITY, f64::min);
    if gap.is_finite() {
        (0.5 * gap).max(floor)
    } else {
        floor
    }
}

/// `sfl = μ(L_lo + δ) - μ(L_hi + δ)` on truncations, doubling `n` until the
/// value repeats across two doublings and the tail bound is small enough.
///
/// The tail requirement is `tail < 1` for constant coefficients (the tail
/// blocks then stay invertible with signature zero) and `tail < margin`
/// otherwise.
pub fn sflow_galerkin(path: &CoefficientPath, domain: &DomainSpec, cfg: &GalerkinConfig) -> Result<SflowResult> {
    let (lo, hi) = path.lambda_range;
    let bound = coefficients::uniform_bound(path, domain, cfg.lambda_grid, cfg.x_grid)?;
    let mut n = cfg.n_start.max(1);
    let mut history: Vec<i64> = Vec::new();
    loop {
        let (e0, e1) = rayon::join(
            || assemble_with(path, domain, n, lo, cfg).map(|t| t.eigenvalues()),
            || assemble_with(path, domain, n, hi, cfg).map(|t| t.eigenvalues()),
        );
        let (e0, e1) = (e0?, e1?);
        let delta = cfg
            .delta
            .unwrap_or_else(|| default_delta(&[&e0, &e1], cfg.delta_floor));
        let neg = |e: &[f64]| e.iter().filter(|&&v| v + delta < 0.0).count() as i64;
        let value = neg(&e0) - neg(&e1);
        let margin = e0
            .iter()
            .chain(&e1)
            .map(|v| (v + delta).abs())
            .fold(f64::INFINITY, f64::min);
        let tail = tail_from_bound(bound, domain, n)?;
        history.push(value);

        let required = if path.x_dependent { margin } else { 1.0 };
        let repeated = history.len() >= 3 && history[history.len() - 3..].iter().all(|&v| v == value);
        if repeated && tail < required {
            return Ok(SflowResult {
                value,
                n_used: n,
                delta_used: delta,
                stable: true,
                tail_norm: tail,
                margin,
            });
        }
        if 2 * n > cfg.n_max {
            return Err(Error::NotConverged { n_max: cfg.n_max });
        }
        n *= 2;
    }
}

/// Sorted eigenvalues of the truncation at each grid value.
pub fn eigen_track(
    path: &CoefficientPath,
    domain: &DomainSpec,
    n: usize,
    lambda_grid: &[f64],
    cfg: &GalerkinConfig,
) -> Result<Vec<(f64, Vec<f64>)>> {
    lambda_grid
        .par_iter()
        .map(|&l| Ok((l, assemble_with(path, domain, n, l, cfg)?.eigenvalues())))
        .collect()
}

/// CSV table `lambda,ev1,...,ev2n` with 17 significant digits.
pub fn eigen_track_csv(rows: &[(f64, Vec<f64>)]) -> String {
    let width = rows.first().map_or(0, |r| r.1.len());
    let mut out = String::from("lambda");
    for i in 1..=width {
        out.push_str(&format!(",ev{i}"));
    }
    out.push('\n');
    for (l, eigs) in rows {
        out.push_str(&format_g17(*l));
        for e in eigs {
            out.push(',');
            out.push_str(&format_g17(*e));
        }
        out.push('\n');
    }
    out
}

/// Scientific notation with 17 significant digits.
pub fn format_g17(v: f64) -> String {
    format!("{v:.16e}")
}
