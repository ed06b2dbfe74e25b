//! Block decomposition for constant coefficients.
//!
//! When `a, b, c` do not depend on `x` the operator splits into 2×2 blocks,
//! one per Dirichlet mode `k`, in the basis `{(e_k, -e_k)/√2, (e_k, e_k)/√2}`:
//!
//! ```text
//! L^k_λ = diag(-1, 1) - 1/(2λ_k) · [[a-2b+c, a-c], [a-c, a+2b+c]]
//! ```
//!
//! The index `i(A_λ) = ½ Σ_k sgn L^k_λ` is a finite sum because blocks with
//! `λ_k > max(|α_λ|, |β_λ|)` have signature zero, and the spectral flow of the
//! path is `i(A_1) - i(A_0)`.

use std::fmt;
use std::ops::{Add, Neg, Sub};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coefficients::{self, CoefficientPath, FormBounds, SymMat2};
use crate::error::{Error, Result};
use crate::spectrum::Spectrum;

/// Singularity threshold for blocks, relative to the block norm.
pub const SINGULAR_TOL: f64 = 1e-10;
/// Scan density for crossing enumeration, per unit of λ.
pub const SCAN_PER_UNIT: usize = 4096;
/// Bisection target for crossing instants.
pub const ROOT_TOL: f64 = 1e-12;
/// Roots closer than this are the same crossing.
const MERGE_TOL: f64 = 1e-9;

/// Exact half-integer, stored as twice its value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct HalfInt {
    pub doubled: i64,
}

impl HalfInt {
    pub const ZERO: HalfInt = HalfInt { doubled: 0 };

    pub fn from_doubled(doubled: i64) -> Self {
        HalfInt { doubled }
    }

    pub fn from_int(v: i64) -> Self {
        HalfInt { doubled: 2 * v }
    }

    pub fn is_integer(&self) -> bool {
        self.doubled % 2 == 0
    }

    pub fn to_integer(&self) -> Option<i64> {
        self.is_integer().then_some(self.doubled / 2)
    }

    pub fn to_f64(&self) -> f64 {
        self.doubled as f64 / 2.0
    }
}

impl Add for HalfInt {
    type Output = HalfInt;
    fn add(self, o: HalfInt) -> HalfInt {
        HalfInt::from_doubled(self.doubled + o.doubled)
    }
}

impl Sub for HalfInt {
    type Output = HalfInt;
    fn sub(self, o: HalfInt) -> HalfInt {
        HalfInt::from_doubled(self.doubled - o.doubled)
    }
}

impl Neg for HalfInt {
    type Output = HalfInt;
    fn neg(self) -> HalfInt {
        HalfInt::from_doubled(-self.doubled)
    }
}

impl fmt::Display for HalfInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_integer() {
            write!(f, "{}", self.doubled / 2)
        } else {
            write!(f, "{}", self.to_f64())
        }
    }
}

impl Serialize for HalfInt {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self.to_integer() {
            Some(v) => s.serialize_i64(v),
            None => s.serialize_f64(self.to_f64()),
        }
    }
}

impl<'de> Deserialize<'de> for HalfInt {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = f64::deserialize(d)?;
        let doubled = 2.0 * v;
        if doubled.fract() != 0.0 {
            return Err(serde::de::Error::custom(format!("{v} is not a half-integer")));
        }
        Ok(HalfInt::from_doubled(doubled as i64))
    }
}

/// The restriction `L^k_λ` to the `k`-th mode pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub k: usize,
    pub lambda_k: f64,
    pub matrix: SymMat2,
}

/// A parameter value where some block is singular.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstCrossing {
    pub lambda0: f64,
    pub k: usize,
    pub kernel_dim: usize,
    /// Half the jump of `sgn L^k` across the crossing.
    pub local_sflow: i32,
}

/// Block matrix from unnegated coefficients `(a, b, c)` and an eigenvalue.
pub fn block_matrix(a: f64, b: f64, c: f64, lambda_k: f64) -> SymMat2 {
    let s = 1.0 / (2.0 * lambda_k);
    SymMat2::diag(-1.0, 1.0)
        - s * SymMat2::new(a - 2.0 * b + c, a - c, a + 2.0 * b + c)
}

/// `L^k_λ` for a constant-coefficient path.
pub fn block(path: &CoefficientPath, lambda: f64, k: usize, spectrum: &Spectrum) -> Result<Block> {
    path.require_constant("block decomposition")?;
    let spectrum = spectrum.extended_to(k)?;
    let lambda_k = spectrum.lambda(k);
    let (a, b, c) = path.coeffs(lambda, 0.0)?;
    Ok(Block {
        k,
        lambda_k,
        matrix: block_matrix(a, b, c, lambda_k),
    })
}

/// Signature with absolute threshold `tol`.
pub fn signature(m: &SymMat2, tol: f64) -> i32 {
    m.signature(tol)
}

fn block_tol(m: &SymMat2) -> f64 {
    SINGULAR_TOL * m.norm().max(1.0)
}

fn is_singular(m: &SymMat2) -> bool {
    m.nullity(block_tol(m)) > 0
}

/// Smallest `k` with `λ_k > uniform_bound(path)`; every later block is
/// invertible with signature zero along the whole path.
pub fn cutoff_k0(path: &CoefficientPath, spectrum: &Spectrum) -> Result<usize> {
    path.require_constant("cutoff")?;
    let bound = coefficients::uniform_bound(
        path,
        &spectrum.domain,
        coefficients::DEFAULT_LAMBDA_GRID,
        2,
    )?;
    first_above(spectrum, bound)
}

fn first_above(spectrum: &Spectrum, bound: f64) -> Result<usize> {
    let s = spectrum.extended_beyond(bound)?;
    Ok(s.values.iter().position(|&v| v > bound).unwrap() + 1)
}

/// Blocks `1..k` needed at one parameter value: all later blocks have norm
/// of the perturbation below one.
fn active_blocks(a: f64, b: f64, c: f64, spectrum: &Spectrum) -> Result<(Spectrum, usize)> {
    let bound = FormBounds::from_coefficients(a, b, c).magnitude();
    let s = spectrum.extended_beyond(bound)?;
    let k0 = s.values.iter().position(|&v| v > bound).unwrap() + 1;
    Ok((s, k0))
}

/// `i(A_λ) = ½ Σ_k sgn L^k_λ`.
pub fn index(path: &CoefficientPath, lambda: f64, spectrum: &Spectrum) -> Result<HalfInt> {
    path.require_constant("index")?;
    let (a, b, c) = path.coeffs(lambda, 0.0)?;
    Ok(index_of(a, b, c, spectrum)?.0)
}

/// Index and singularity flag for fixed coefficients.
fn index_of(a: f64, b: f64, c: f64, spectrum: &Spectrum) -> Result<(HalfInt, bool)> {
    let (s, k0) = active_blocks(a, b, c, spectrum)?;
    let mut doubled = 0i64;
    let mut singular = false;
    for k in 1..k0 {
        let m = block_matrix(a, b, c, s.lambda(k));
        doubled += i64::from(m.signature(block_tol(&m)));
        singular |= is_singular(&m);
    }
    // ½ Σ sgn, stored doubled: Σ sgn itself.
    Ok((HalfInt::from_doubled(doubled), singular))
}

/// `sfl = i(A_1) - i(A_0)` over the path's λ-range.
pub fn spectral_flow_constant(path: &CoefficientPath, spectrum: &Spectrum) -> Result<i64> {
    path.require_constant("closed-form spectral flow")?;
    let (lo, hi) = path.lambda_range;
    let mut ends = [HalfInt::ZERO; 2];
    for (slot, lambda) in ends.iter_mut().zip([lo, hi]) {
        let (a, b, c) = path.coeffs(lambda, 0.0)?;
        let (i, singular) = index_of(a, b, c, spectrum)?;
        if singular {
            return Err(Error::InvalidEndpoint { lambda });
        }
        *slot = i;
    }
    let diff = ends[1] - ends[0];
    Ok(diff
        .to_integer()
        .expect("index of an invertible operator is an integer"))
}

#[derive(Debug, Clone, Copy)]
struct Root {
    lambda: f64,
    k: usize,
}

/// All `λ₀` in `[lo, hi]` where some block is singular.
///
/// Each block's two eigenvalue branches are scanned on a grid of
/// [`SCAN_PER_UNIT`] points per unit λ. Sign changes are refined by
/// bisection; sign-preserving local minima of `|μ|` by golden-section search.
pub fn enumerate_crossings_constant(
    path: &CoefficientPath,
    spectrum: &Spectrum,
    interval: (f64, f64),
    tol: f64,
) -> Result<Vec<ConstCrossing>> {
    path.require_constant("constant crossing enumeration")?;
    let (lo, hi) = interval;
    let scan_path = path.clone().with_range(lo, hi)?;
    let bound = coefficients::uniform_bound(
        &scan_path,
        &spectrum.domain,
        coefficients::DEFAULT_LAMBDA_GRID,
        2,
    )?;
    // Padding covers the gap between sampled and true supremum.
    let padded = bound * (1.0 + 1e-3) + 1e-9;
    let s = spectrum.extended_beyond(padded)?;
    let k_max = s.values.iter().position(|&v| v > padded).unwrap();
    if k_max == 0 {
        return Ok(Vec::new());
    }

    let n = ((hi - lo) * SCAN_PER_UNIT as f64).ceil().max(2.0) as usize;
    let lambdas: Vec<f64> = coefficients::grid(lo, hi, n + 1).collect();
    let coeffs: Vec<(f64, f64, f64)> = lambdas
        .par_iter()
        .map(|&l| path.coeffs(l, 0.0))
        .collect::<Result<_>>()?;

    let branch = |lambda: f64, k: usize, upper: bool| -> Result<f64> {
        let (a, b, c) = path.coeffs(lambda, 0.0)?;
        let (e0, e1) = block_matrix(a, b, c, s.lambda(k)).eigenvalues();
        Ok(if upper { e1 } else { e0 })
    };

    let mut roots: Vec<Root> = Vec::new();
    for k in 1..=k_max {
        let lk = s.lambda(k);
        for upper in [false, true] {
            let vals: Vec<f64> = coeffs
                .iter()
                .map(|&(a, b, c)| {
                    let (e0, e1) = block_matrix(a, b, c, lk).eigenvalues();
                    if upper {
                        e1
                    } else {
                        e0
                    }
                })
                .collect();
            for i in 0..vals.len() {
                if vals[i] == 0.0 {
                    roots.push(Root { lambda: lambdas[i], k });
                    continue;
                }
                if i + 1 < vals.len() && vals[i] * vals[i + 1] < 0.0 {
                    let f = |l: f64| branch(l, k, upper);
                    let r = bisect(f, lambdas[i], lambdas[i + 1], vals[i], tol)?;
                    roots.push(Root { lambda: r, k });
                    continue;
                }
                // Sign-preserving dip toward zero.
                if i > 0
                    && i + 1 < vals.len()
                    && vals[i].abs() < vals[i - 1].abs()
                    && vals[i].abs() <= vals[i + 1].abs()
                    && vals[i - 1] * vals[i] > 0.0
                    && vals[i] * vals[i + 1] > 0.0
                {
                    let g = |l: f64| branch(l, k, upper).map(f64::abs);
                    let (lm, fm) = golden_min(g, lambdas[i - 1], lambdas[i + 1], tol)?;
                    let (a, b, c) = path.coeffs(lm, 0.0)?;
                    let m = block_matrix(a, b, c, lk);
                    if fm <= block_tol(&m) {
                        roots.push(Root { lambda: lm, k });
                    }
                }
            }
        }
    }

    roots.sort_by(|x, y| x.lambda.total_cmp(&y.lambda).then(x.k.cmp(&y.k)));
    let resolution = (hi - lo) / n as f64;

    // Merge the two branches of one block vanishing at the same instant.
    let mut out: Vec<ConstCrossing> = Vec::new();
    let mut used = vec![false; roots.len()];
    for i in 0..roots.len() {
        if used[i] {
            continue;
        }
        used[i] = true;
        let mut members = vec![roots[i].lambda];
        for j in (i + 1)..roots.len() {
            if !used[j]
                && roots[j].k == roots[i].k
                && (roots[j].lambda - roots[i].lambda).abs() <= MERGE_TOL
            {
                used[j] = true;
                members.push(roots[j].lambda);
            }
        }
        let lambda0 = members.iter().sum::<f64>() / members.len() as f64;
        let k = roots[i].k;
        let lk = s.lambda(k);
        let eps = 0.25 * resolution;
        let sgn_at = |l: f64| -> Result<i32> {
            let (a, b, c) = path.coeffs(l, 0.0)?;
            let m = block_matrix(a, b, c, lk);
            Ok(m.signature(block_tol(&m)))
        };
        let local = (sgn_at(lambda0 + eps)? - sgn_at(lambda0 - eps)?) / 2;
        out.push(ConstCrossing {
            lambda0,
            k,
            kernel_dim: members.len().min(2),
            local_sflow: local,
        });
    }
    out.sort_by(|x, y| x.lambda0.total_cmp(&y.lambda0).then(x.k.cmp(&y.k)));

    // Distinct instants closer than the grid cannot be told apart.
    for w in out.windows(2) {
        let gap = w[1].lambda0 - w[0].lambda0;
        if gap > MERGE_TOL && gap < resolution {
            return Err(Error::DegenerateCrossing(w[0].lambda0, w[1].lambda0));
        }
    }
    Ok(out)
}

/// Instants in `range` where `i(λA)` jumps.
///
/// These are the crossings of the linear path `λA` whose local spectral flow
/// (summed over blocks at the same instant) is nonzero.
pub fn szulkin_jump_points(a: SymMat2, range: (f64, f64), spectrum: &Spectrum) -> Result<Vec<f64>> {
    let path = CoefficientPath::linear(a).with_range(range.0, range.1)?;
    let crossings = enumerate_crossings_constant(&path, spectrum, range, ROOT_TOL)?;
    let mut out: Vec<(f64, i32)> = Vec::new();
    for c in crossings {
        match out.last_mut() {
            Some(last) if (c.lambda0 - last.0).abs() <= MERGE_TOL => last.1 += c.local_sflow,
            _ => out.push((c.lambda0, c.local_sflow)),
        }
    }
    Ok(out
        .into_iter()
        .filter(|&(l, jump)| jump != 0 && l > range.0 && l < range.1)
        .map(|(l, _)| l)
        .collect())
}

/// Bisection on `[lo, hi]`; `f_lo` is `f(lo)` and has the opposite sign of `f(hi)`.
pub(crate) fn bisect(
    f: impl Fn(f64) -> Result<f64>,
    mut lo: f64,
    mut hi: f64,
    mut f_lo: f64,
    tol: f64,
) -> Result<f64> {
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let fm = f(mid)?;
        if fm == 0.0 {
            return Ok(mid);
        }
        if (fm < 0.0) == (f_lo < 0.0) {
            lo = mid;
            f_lo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Golden-section minimization of a unimodal function on `[lo, hi]`.
pub(crate) fn golden_min(
    f: impl Fn(f64) -> Result<f64>,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
) -> Result<(f64, f64)> {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    for _ in 0..300 {
        if hi - lo <= tol {
            break;
        }
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2)?;
        }
    }
    Ok(if f1 <= f2 { (x1, f1) } else { (x2, f2) })
}
