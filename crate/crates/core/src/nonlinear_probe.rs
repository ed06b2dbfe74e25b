//! Finite-difference probe of the nonlinear system near a predicted
//! bifurcation instant.
//!
//! The system on `(0, L)` with Dirichlet ends is
//!
//! ```text
//! -u'' = b u + c v + G_v(λ, x, u, v)
//! -v'' = a u + b v + G_u(λ, x, u, v)
//! ```
//!
//! discretized by the three-point second difference on `m` intervals. Newton
//! continuation from the kernel direction tracks a nontrivial branch as the
//! parameter approaches the critical value.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::coefficients::{self, CoefficientPath};
use crate::error::{Error, Result};
use crate::expr::{Expr, Point, Var};

/// `(u, v)`-derivatives of the potential up to second order.
#[derive(Debug, Clone)]
struct Potential {
    gu: Expr,
    gv: Expr,
    guu: Expr,
    guv: Expr,
    gvv: Expr,
}

impl Potential {
    fn new(g: &Expr) -> Result<Self> {
        let gu = g.diff(Var::U)?;
        let gv = g.diff(Var::V)?;
        Ok(Potential {
            guu: gu.diff(Var::U)?,
            guv: gu.diff(Var::V)?,
            gvv: gv.diff(Var::V)?,
            gu,
            gv,
        })
    }
}

#[derive(Debug, Clone)]
pub struct DiscreteProblem {
    pub path: CoefficientPath,
    potential: Option<Potential>,
    /// Number of mesh intervals.
    pub m: usize,
    pub len: f64,
    /// Interior nodes.
    pub x: Vec<f64>,
}

impl DiscreteProblem {
    /// Discretize on `m ≥ 16` intervals. Rejects potentials whose gradient does
    /// not vanish at the origin on a sample of `(λ, x)`.
    pub fn new(path: &CoefficientPath, g: Option<&Expr>, len: f64, m: usize) -> Result<Self> {
        if m < 16 {
            return Err(Error::Config(format!("probe mesh needs at least 16 intervals, got {m}")));
        }
        let h = len / m as f64;
        let x: Vec<f64> = (1..m).map(|i| i as f64 * h).collect();
        let potential = g.map(Potential::new).transpose()?;
        if let Some(p) = &potential {
            let (lo, hi) = path.lambda_range;
            for lambda in coefficients::grid(lo, hi, 9) {
                for xi in coefficients::grid(0.0, len, 17) {
                    let at = Point::with_state(lambda, xi, 0.0, 0.0);
                    let (du, dv) = (p.gu.eval_at(&at)?, p.gv.eval_at(&at)?);
                    if du != 0.0 || dv != 0.0 {
                        return Err(Error::Config(format!(
                            "nonlinearity gradient must vanish at u = v = 0; \
                             found ({du}, {dv}) at lambda = {lambda}, x = {xi}"
                        )));
                    }
                }
            }
        }
        Ok(DiscreteProblem {
            path: path.clone(),
            potential,
            m,
            len,
            x,
        })
    }

    pub fn nodes(&self) -> usize {
        self.x.len()
    }

    pub fn h(&self) -> f64 {
        self.len / self.m as f64
    }

    fn second_difference(&self, w: &[f64], i: usize) -> f64 {
        let n = w.len();
        let left = if i == 0 { 0.0 } else { w[i - 1] };
        let right = if i + 1 == n { 0.0 } else { w[i + 1] };
        (2.0 * w[i] - left - right) / (self.h() * self.h())
    }

    /// `F(λ, U)` with `U = (u_1..u_n, v_1..v_n)`.
    pub fn residual(&self, lambda: f64, state: &DVector<f64>) -> Result<DVector<f64>> {
        let n = self.nodes();
        let (u, v) = state.as_slice().split_at(n);
        let mut f = DVector::zeros(2 * n);
        for i in 0..n {
            let (a, b, c) = self.path.coeffs(lambda, self.x[i])?;
            let (mut gu, mut gv) = (0.0, 0.0);
            if let Some(p) = &self.potential {
                let at = Point::with_state(lambda, self.x[i], u[i], v[i]);
                gu = p.gu.eval_at(&at)?;
                gv = p.gv.eval_at(&at)?;
            }
            f[i] = self.second_difference(u, i) - (b * u[i] + c * v[i] + gv);
            f[n + i] = self.second_difference(v, i) - (a * u[i] + b * v[i] + gu);
        }
        Ok(f)
    }

    /// Exact Jacobian of [`residual`](Self::residual) in `U`.
    pub fn jacobian(&self, lambda: f64, state: &DVector<f64>) -> Result<DMatrix<f64>> {
        let n = self.nodes();
        let h2 = self.h() * self.h();
        let mut j = DMatrix::zeros(2 * n, 2 * n);
        for i in 0..n {
            let (a, b, c) = self.path.coeffs(lambda, self.x[i])?;
            let (mut guu, mut guv, mut gvv) = (0.0, 0.0, 0.0);
            if let Some(p) = &self.potential {
                let at = Point::with_state(lambda, self.x[i], state[i], state[n + i]);
                guu = p.guu.eval_at(&at)?;
                guv = p.guv.eval_at(&at)?;
                gvv = p.gvv.eval_at(&at)?;
            }
            for off in [0, n] {
                j[(off + i, off + i)] = 2.0 / h2;
                if i > 0 {
                    j[(off + i, off + i - 1)] = -1.0 / h2;
                }
                if i + 1 < n {
                    j[(off + i, off + i + 1)] = -1.0 / h2;
                }
            }
            j[(i, i)] -= b + guv;
            j[(i, n + i)] -= c + gvv;
            j[(n + i, i)] -= a + guu;
            j[(n + i, n + i)] -= b + guv;
        }
        Ok(j)
    }

    /// Sign of `det J(λ, 0)`.
    pub fn linear_det_sign(&self, lambda: f64) -> Result<f64> {
        let j = self.jacobian(lambda, &DVector::zeros(2 * self.nodes()))?;
        let lu = j.lu();
        let mut sign: f64 = lu.p().determinant();
        for d in lu.u().diagonal().iter() {
            if *d == 0.0 {
                return Ok(0.0);
            }
            sign *= d.signum();
        }
        Ok(sign)
    }

    /// Smallest singular value of `J(λ, 0)`.
    pub fn linear_smallest_singular_value(&self, lambda: f64) -> Result<f64> {
        let j = self.jacobian(lambda, &DVector::zeros(2 * self.nodes()))?;
        Ok(j.singular_values().min())
    }

    /// Unit right singular vector of `J(λ, 0)` for its smallest singular value,
    /// scaled to sup-norm one with a positive largest entry.
    pub fn kernel_direction(&self, lambda: f64) -> Result<DVector<f64>> {
        let j = self.jacobian(lambda, &DVector::zeros(2 * self.nodes()))?;
        let svd = j.svd(false, true);
        let vt = svd.v_t.expect("requested right singular vectors");
        let imin = svd.singular_values.imin();
        let dir: DVector<f64> = vt.row(imin).transpose();
        Ok(normalize_sup(dir))
    }
}

fn normalize_sup(v: DVector<f64>) -> DVector<f64> {
    let imax = v.iamax();
    let s = v[imax];
    if s == 0.0 {
        v
    } else {
        v / s
    }
}

fn sup_norm(v: &DVector<f64>) -> f64 {
    v.amax()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
}

impl Side {
    fn sign(self) -> f64 {
        match self {
            Side::Left => -1.0,
            Side::Right => 1.0,
        }
    }
}

/// How the offsets `|λ_j - λ*|` are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    /// `h, h/10, h/100, …`
    Geometric,
    /// `steps·h, (steps-1)·h, …, h`
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProbeConfig {
    pub mesh: usize,
    pub step: f64,
    pub steps: usize,
    pub spacing: Spacing,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    pub seed: f64,
    pub amplitude_floor: f64,
    /// Half-width of the bracket used to refine the discrete critical value.
    pub bracket: f64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            mesh: 160,
            step: 0.02,
            steps: 8,
            spacing: Spacing::Geometric,
            newton_tol: 1e-10,
            newton_max_iter: 50,
            seed: 0.1,
            amplitude_floor: 1e-6,
            bracket: 0.01,
        }
    }
}

impl ProbeConfig {
    /// Offsets from the critical value, farthest first.
    pub fn offsets(&self) -> Vec<f64> {
        match self.spacing {
            Spacing::Geometric => (0..self.steps).map(|j| self.step * 10f64.powi(-(j as i32))).collect(),
            Spacing::Linear => (1..=self.steps).rev().map(|j| j as f64 * self.step).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchSample {
    pub lambda: f64,
    /// Sup-norm of `(u, v)` at the Newton end point.
    pub amplitude: f64,
    /// Newton met the tolerance at a solution above the amplitude floor.
    pub converged: bool,
    pub newton_iters: usize,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeResult {
    /// Critical value of the discrete linearization.
    pub lambda_star: f64,
    pub side: Side,
    pub samples: Vec<BranchSample>,
    /// Every sample converged and amplitudes decrease strictly toward `λ*`.
    pub success: bool,
}

impl ProbeResult {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("lambda,amplitude,iters,converged\n");
        for s in &self.samples {
            out.push_str(&format!(
                "{:.16e},{:.16e},{},{}\n",
                s.lambda, s.amplitude, s.newton_iters, s.converged
            ));
        }
        out
    }
}

/// Outcome of one Newton solve.
#[derive(Debug, Clone)]
pub struct NewtonOutcome {
    pub state: DVector<f64>,
    pub iters: usize,
    pub residual: f64,
    pub converged: bool,
}

/// Newton's method on `F(λ, ·)` from `seed`, stopping at `‖F‖∞ ≤ tol`.
pub fn newton(problem: &DiscreteProblem, lambda: f64, seed: DVector<f64>, tol: f64, max_iter: usize) -> Result<NewtonOutcome> {
    let mut state = seed;
    let mut f = problem.residual(lambda, &state)?;
    let mut res = sup_norm(&f);
    let mut iters = 0;
    while res > tol && iters < max_iter {
        let j = problem.jacobian(lambda, &state)?;
        let Some(step) = j.lu().solve(&f) else {
            break;
        };
        state -= step;
        f = problem.residual(lambda, &state)?;
        res = sup_norm(&f);
        iters += 1;
        if !res.is_finite() {
            break;
        }
    }
    Ok(NewtonOutcome {
        converged: res <= tol,
        state,
        iters,
        residual: res,
    })
}

/// Critical value of the discrete linearization near `guess`, by bisection on
/// the sign of `det J(λ, 0)`. Falls back to `guess` without a sign change.
pub fn refine_critical(problem: &DiscreteProblem, guess: f64, bracket: f64) -> Result<f64> {
    let (mut lo, mut hi) = (guess - bracket, guess + bracket);
    let mut s_lo = problem.linear_det_sign(lo)?;
    let s_hi = problem.linear_det_sign(hi)?;
    if s_lo * s_hi >= 0.0 {
        return Ok(guess);
    }
    while hi - lo > 1e-14 * guess.abs().max(1.0) {
        let mid = 0.5 * (lo + hi);
        let s = problem.linear_det_sign(mid)?;
        if s == 0.0 {
            return Ok(mid);
        }
        if s == s_lo {
            lo = mid;
            s_lo = s;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Track a nontrivial branch toward `λ*` from one side.
///
/// `lambda_star` is refined to the discrete critical value first. The first
/// solve tries seeds `ε·φ` with `ε = seed, 2·seed, 4·seed, …` along the kernel
/// direction `φ`; later solves start from the previous solution scaled by the
/// square root of the offset ratio.
pub fn branch_probe(
    problem: &DiscreteProblem,
    lambda_star: f64,
    kernel_dir: Option<&DVector<f64>>,
    side: Side,
    cfg: &ProbeConfig,
) -> Result<ProbeResult> {
    let star = refine_critical(problem, lambda_star, cfg.bracket)?;
    let phi = match kernel_dir {
        Some(d) => normalize_sup(d.clone()),
        None => problem.kernel_direction(star)?,
    };
    let offsets = cfg.offsets();
    let mut samples = Vec::with_capacity(offsets.len());
    let mut previous: Option<(DVector<f64>, f64)> = None;
    for &off in &offsets {
        let lambda = star + side.sign() * off;
        let seeds: Vec<DVector<f64>> = match &previous {
            Some((state, prev_off)) => {
                let scale = (off / prev_off).sqrt();
                vec![state * scale, state.clone()]
            }
            None => (0..8).map(|i| &phi * (cfg.seed * 2f64.powi(i))).collect(),
        };
        let mut best: Option<NewtonOutcome> = None;
        for seed in seeds {
            let out = newton(problem, lambda, seed, cfg.newton_tol, cfg.newton_max_iter)?;
            let nontrivial = out.converged && sup_norm(&out.state) > cfg.amplitude_floor;
            if nontrivial {
                best = Some(out);
                break;
            }
            if best.is_none() {
                best = Some(out);
            }
        }
        let out = best.expect("at least one seed");
        let amplitude = sup_norm(&out.state);
        let converged = out.converged && amplitude > cfg.amplitude_floor;
        samples.push(BranchSample {
            lambda,
            amplitude,
            converged,
            newton_iters: out.iters,
            residual: out.residual,
        });
        if converged {
            previous = Some((out.state, off));
        }
    }
    if samples.iter().all(|s| !s.converged) {
        return Err(Error::NoBranch { lambda: star });
    }
    let success = samples.iter().all(|s| s.converged)
        && samples.windows(2).all(|w| w[1].amplitude < w[0].amplitude);
    Ok(ProbeResult {
        lambda_star: star,
        side,
        samples,
        success,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_nonlinearity;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn szulkin() -> CoefficientPath {
        CoefficientPath::parse("5*lambda", "0", "5*lambda").unwrap()
    }

    fn quartic() -> Expr {
        parse_nonlinearity("-(u^4+v^4)/4").unwrap()
    }

    #[test]
    fn zero_is_a_solution() {
        let g = quartic();
        let p = DiscreteProblem::new(&szulkin(), Some(&g), PI, 64).unwrap();
        let zero = DVector::zeros(2 * p.nodes());
        for lambda in [0.0, 0.2, 0.37, 1.0] {
            assert_eq!(sup_norm(&p.residual(lambda, &zero).unwrap()), 0.0);
        }
        let linear = DiscreteProblem::new(&szulkin(), None, PI, 64).unwrap();
        assert_eq!(sup_norm(&linear.residual(0.5, &zero).unwrap()), 0.0);
    }

    #[test]
    fn gradient_condition_enforced() {
        let g = parse_nonlinearity("u").unwrap();
        assert!(matches!(DiscreteProblem::new(&szulkin(), Some(&g), PI, 64), Err(Error::Config(_))));
        assert!(DiscreteProblem::new(&szulkin(), Some(&quartic()), PI, 64).is_ok());
        assert!(matches!(DiscreteProblem::new(&szulkin(), None, PI, 8), Err(Error::Config(_))));
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let g = parse_nonlinearity("-(u^4+v^4)/4 + sin(x)*u^2*v").unwrap();
        let path = CoefficientPath::parse("lambda*(2+cos(x))", "0.5*lambda", "3-lambda").unwrap();
        let p = DiscreteProblem::new(&path, Some(&g), PI, 24).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5 {
            let lambda = rng.gen_range(0.0..1.0);
            let state = DVector::from_fn(2 * p.nodes(), |_, _| rng.gen_range(-1.0..1.0));
            let j = p.jacobian(lambda, &state).unwrap();
            let eps = 1e-6;
            let mut fd = DMatrix::zeros(j.nrows(), j.ncols());
            for col in 0..state.len() {
                let mut plus = state.clone();
                let mut minus = state.clone();
                plus[col] += eps;
                minus[col] -= eps;
                let d = (p.residual(lambda, &plus).unwrap() - p.residual(lambda, &minus).unwrap()) / (2.0 * eps);
                fd.set_column(col, &d);
            }
            let rel = (&fd - &j).amax() / j.amax();
            assert!(rel < 1e-6, "relative error {rel}");
        }
    }

    #[test]
    fn linearization_is_nearly_singular_at_crossing() {
        let p = DiscreteProblem::new(&szulkin(), Some(&quartic()), PI, 160).unwrap();
        let s0 = p.linear_smallest_singular_value(0.2).unwrap();
        assert!(s0 < 1e-4, "{s0}");
        assert!(p.linear_smallest_singular_value(0.25).unwrap() > 10.0 * s0);
        assert!(p.linear_smallest_singular_value(0.15).unwrap() > 10.0 * s0);
    }

    #[test]
    fn critical_value_is_discrete_eigenvalue() {
        let p = DiscreteProblem::new(&szulkin(), None, PI, 160).unwrap();
        let star = refine_critical(&p, 0.2, 0.01).unwrap();
        // 5λ equals the first eigenvalue (4/h²) sin²(h/2) of the second difference
        let h = PI / 160.0;
        let mu = 4.0 / (h * h) * (0.5 * h).sin().powi(2);
        assert!((star - mu / 5.0).abs() < 1e-12);
    }

    #[test]
    fn zero_seed_stays_trivial() {
        let p = DiscreteProblem::new(&szulkin(), Some(&quartic()), PI, 32).unwrap();
        let out = newton(&p, 0.3, DVector::zeros(2 * p.nodes()), 1e-10, 50).unwrap();
        assert!(out.converged && out.iters == 0 && sup_norm(&out.state) == 0.0);
    }

    #[test]
    fn branch_shrinks_toward_critical_value() {
        let p = DiscreteProblem::new(&szulkin(), Some(&quartic()), PI, 160).unwrap();
        let r = branch_probe(&p, 0.2, None, Side::Right, &ProbeConfig::default()).unwrap();
        assert!(r.success);
        assert!(r.samples.iter().filter(|s| s.converged).count() >= 5);
        assert!(r.samples.last().unwrap().amplitude < 1e-3);
        // pitchfork: amplitude² ≈ (20/3)(λ - λ*)
        let first = r.samples[0];
        let predicted = (20.0 / 3.0 * (first.lambda - r.lambda_star)).sqrt();
        assert!((first.amplitude - predicted).abs() < 0.05 * predicted);
    }

    #[test]
    fn linear_problem_has_no_branch() {
        // away from λ* Newton collapses to zero; close to it roundoff in the
        // nearly singular solve may leave a spurious remainder
        let p = DiscreteProblem::new(&szulkin(), None, PI, 64).unwrap();
        match branch_probe(&p, 0.2, None, Side::Right, &ProbeConfig::default()) {
            Err(Error::NoBranch { .. }) => {}
            Ok(r) => {
                assert!(!r.success);
                assert!(!r.samples[0].converged);
            }
            Err(e) => panic!("unexpected error {e}"),
        }
    }

    #[test]
    fn csv_has_header_and_rows() {
        let r = ProbeResult {
            lambda_star: 0.2,
            side: Side::Right,
            samples: vec![BranchSample {
                lambda: 0.22,
                amplitude: 0.5,
                converged: true,
                newton_iters: 4,
                residual: 1e-12,
            }],
            success: true,
        };
        let csv = r.to_csv();
        assert!(csv.starts_with("lambda,amplitude,iters,converged\n"));
        assert_eq!(csv.lines().count(), 2);
    }
}
