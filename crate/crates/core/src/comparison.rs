//! Comparison certificates and lower bounds on the number of bifurcation points.
//!
//! With `α_λ ≤ β_λ` the extreme eigenvalues of `-[[a, b], [b, c]]` over the
//! domain, the linearized path is squeezed between the auxiliary constant
//! paths `M` (from `β₀` to `α₁`) and `N` (from `α₀` to `β₁`). Their spectral
//! flows have closed forms in terms of the Dirichlet eigenvalues, which give
//! sufficient conditions for bifurcation and a count of guaranteed points.

use serde::{Deserialize, Serialize};

use crate::coefficients::{self, CoefficientPath, FormBounds};
use crate::error::{Error, Result};
use crate::index_engine;
use crate::ode_crossings::{self, OdeConfig};
use crate::spectrum::{DomainSpec, Spectrum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    BifurcationExists,
    Inconclusive,
}

/// Which sufficient condition produced the certificate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// `β₀ < λ_k < α₁` or `β₀ < -λ_k < α₁`: positive spectral flow.
    Positive,
    /// `β₁ < λ_k < α₀` or `β₁ < -λ_k < α₀`: negative spectral flow.
    Negative,
}

/// Form bounds at both ends of the λ-range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EndpointBounds {
    pub alpha0: f64,
    pub beta0: f64,
    pub alpha1: f64,
    pub beta1: f64,
}

impl EndpointBounds {
    pub fn new(start: FormBounds, end: FormBounds) -> Self {
        EndpointBounds {
            alpha0: start.alpha,
            beta0: start.beta,
            alpha1: end.alpha,
            beta1: end.beta,
        }
    }

    fn magnitude(&self) -> f64 {
        [self.alpha0, self.beta0, self.alpha1, self.beta1]
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub verdict: Verdict,
    pub direction: Option<Direction>,
    /// Mode numbers `k` satisfying the condition of `direction`.
    pub witnesses: Vec<usize>,
    pub bounds: EndpointBounds,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountBound {
    pub gamma: usize,
    pub min_bifurcations: usize,
}

impl CountBound {
    pub fn from_gamma(gamma: usize) -> Self {
        CountBound {
            gamma,
            min_bifurcations: gamma.div_ceil(2),
        }
    }
}

fn covering(spectrum: &Spectrum, values: &[f64]) -> Result<Spectrum> {
    let bound = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    spectrum.extended_beyond(bound)
}

/// Spectral flow of the auxiliary path `M` from `β₀` to `α₁`.
pub fn count_formula_m(alpha1: f64, beta0: f64, spectrum: &Spectrum) -> Result<i64> {
    let s = covering(spectrum, &[alpha1, beta0])?;
    let n = |pred: &dyn Fn(f64) -> bool| s.count(pred) as i64;
    Ok(match (alpha1 >= 0.0, beta0 >= 0.0) {
        (true, true) => n(&|l| alpha1 >= l) - n(&|l| beta0 >= l),
        (false, true) => -n(&|l| alpha1 < -l) - n(&|l| beta0 >= l),
        (true, false) => n(&|l| alpha1 >= l) + n(&|l| beta0 < -l),
        (false, false) => -n(&|l| alpha1 < -l) + n(&|l| beta0 < -l),
    })
}

/// Spectral flow of the auxiliary path `N` from `α₀` to `β₁`.
pub fn count_formula_n(beta1: f64, alpha0: f64, spectrum: &Spectrum) -> Result<i64> {
    count_formula_m(beta1, alpha0, spectrum)
}

/// `Γ(α, β)` for `α > β`: Dirichlet eigenvalues trapped between the bounds.
pub fn gamma_count(alpha: f64, beta: f64, spectrum: &Spectrum) -> Result<usize> {
    if alpha <= beta {
        return Err(Error::InvalidOrder { alpha, beta });
    }
    let s = covering(spectrum, &[alpha, beta])?;
    Ok(match (alpha >= 0.0, beta >= 0.0) {
        (true, true) => s.count(|l| alpha >= l && l >= beta),
        (true, false) => s.count(|l| alpha >= l) + s.count(|l| beta < -l),
        (false, true) => unreachable!("alpha > beta"),
        (false, false) => s.count(|l| beta < -l && -l < alpha),
    })
}

/// Form bounds at the two ends of the path's λ-range.
pub fn endpoint_bounds(path: &CoefficientPath, domain: &DomainSpec, x_grid: usize) -> Result<EndpointBounds> {
    let (lo, hi) = path.lambda_range;
    Ok(EndpointBounds::new(
        coefficients::form_bounds(path, domain, lo, x_grid)?,
        coefficients::form_bounds(path, domain, hi, x_grid)?,
    ))
}

/// Fails with [`Error::EndpointSingular`] unless the linearization is
/// injective at both ends of the range.
pub fn check_endpoints(path: &CoefficientPath, domain: &DomainSpec, cfg: &OdeConfig) -> Result<()> {
    if !path.x_dependent {
        let spectrum = domain.spectrum(1)?;
        return match index_engine::spectral_flow_constant(path, &spectrum) {
            Err(Error::InvalidEndpoint { lambda }) => Err(Error::EndpointSingular { lambda }),
            other => other.map(|_| ()),
        };
    }
    match *domain {
        DomainSpec::Interval { length } => ode_crossings::check_endpoints(path, length, cfg),
        DomainSpec::Rectangle { .. } => Err(Error::XDependentUnsupported(
            "endpoint check on a rectangle".into(),
        )),
    }
}

fn trapped(lo: f64, hi: f64, spectrum: &Spectrum) -> Vec<usize> {
    (1..=spectrum.len())
        .filter(|&k| {
            let l = spectrum.lambda(k);
            (lo < l && l < hi) || (lo < -l && -l < hi)
        })
        .collect()
}

/// Sufficient conditions for a bifurcation point inside the λ-range.
pub fn certify_bifurcation(path: &CoefficientPath, domain: &DomainSpec, cfg: &OdeConfig) -> Result<Certificate> {
    let bounds = endpoint_bounds(path, domain, cfg.x_grid)?;
    check_endpoints(path, domain, cfg)?;
    let spectrum = domain.spectrum_beyond(bounds.magnitude())?;
    let positive = trapped(bounds.beta0, bounds.alpha1, &spectrum);
    let negative = trapped(bounds.beta1, bounds.alpha0, &spectrum);
    let (direction, witnesses) = if !positive.is_empty() {
        (Some(Direction::Positive), positive)
    } else if !negative.is_empty() {
        (Some(Direction::Negative), negative)
    } else {
        (None, Vec::new())
    };
    Ok(Certificate {
        verdict: if witnesses.is_empty() {
            Verdict::Inconclusive
        } else {
            Verdict::BifurcationExists
        },
        direction,
        witnesses,
        bounds,
    })
}

/// Lower bound `⌈Γ/2⌉` on the number of bifurcation points.
pub fn min_bifurcation_count(path: &CoefficientPath, domain: &DomainSpec, cfg: &OdeConfig) -> Result<CountBound> {
    let bounds = endpoint_bounds(path, domain, cfg.x_grid)?;
    check_endpoints(path, domain, cfg)?;
    count_from_bounds(&bounds, &domain.spectrum(1)?)
}

pub fn count_from_bounds(bounds: &EndpointBounds, spectrum: &Spectrum) -> Result<CountBound> {
    let gamma = if bounds.alpha1 > bounds.beta0 {
        gamma_count(bounds.alpha1, bounds.beta0, spectrum)?
    } else if bounds.alpha0 > bounds.beta1 {
        gamma_count(bounds.alpha0, bounds.beta1, spectrum)?
    } else {
        0
    };
    Ok(CountBound::from_gamma(gamma))
}

/// The auxiliary constant path whose negated coefficient matrix moves
/// linearly from `from·I` to `to·I` over `[0, 1]`.
pub fn auxiliary_path(from: f64, to: f64) -> CoefficientPath {
    use crate::coefficients::SymMat2;
    CoefficientPath::affine(SymMat2::diag(-from, -from), SymMat2::diag(from - to, from - to))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pi() -> DomainSpec {
        DomainSpec::unit_pi()
    }

    fn spec() -> Spectrum {
        pi().spectrum(4).unwrap()
    }

    fn linear(a: f64, b: f64, c: f64) -> CoefficientPath {
        CoefficientPath::linear(coefficients::SymMat2::new(a, b, c))
    }

    #[test]
    fn formula_m_examples() {
        assert_eq!(count_formula_m(5.0, 0.0, &spec()).unwrap(), 2);
        assert_eq!(count_formula_m(-2.0, -10.0, &spec()).unwrap(), 2);
        assert_eq!(count_formula_m(0.0, 0.0, &spec()).unwrap(), 0);
    }

    #[test]
    fn formula_n_examples() {
        assert_eq!(count_formula_n(-5.0, 0.0, &spec()).unwrap(), -2);
        assert_eq!(count_formula_n(0.0, 0.0, &spec()).unwrap(), 0);
        assert_eq!(count_formula_n(0.0, -3.0, &spec()).unwrap(), 1);
    }

    #[test]
    fn gamma_examples() {
        assert_eq!(gamma_count(5.0, 0.0, &spec()).unwrap(), 2);
        assert_eq!(gamma_count(0.0, -5.0, &spec()).unwrap(), 2);
        assert_eq!(gamma_count(-2.0, -10.0, &spec()).unwrap(), 2);
        assert_eq!(gamma_count(10.0, 0.0, &spec()).unwrap(), 3);
        assert!(matches!(gamma_count(1.0, 1.0, &spec()), Err(Error::InvalidOrder { .. })));
        assert!(matches!(gamma_count(0.0, 2.0, &spec()), Err(Error::InvalidOrder { .. })));
    }

    #[test]
    fn count_bound_rounds_up() {
        assert_eq!(CountBound::from_gamma(3).min_bifurcations, 2);
        assert_eq!(CountBound::from_gamma(2).min_bifurcations, 1);
        assert_eq!(CountBound::from_gamma(0).min_bifurcations, 0);
    }

    #[test]
    fn certificate_examples() {
        let cfg = OdeConfig::default();
        let c = certify_bifurcation(&linear(-5.0, 0.0, -5.0), &pi(), &cfg).unwrap();
        assert_eq!(c.verdict, Verdict::BifurcationExists);
        assert_eq!(c.direction, Some(Direction::Positive));
        assert_eq!(c.witnesses, vec![1, 2]);
        assert_eq!((c.bounds.alpha1, c.bounds.beta1), (5.0, 5.0));

        let c = certify_bifurcation(&linear(0.0, 0.0, 0.0), &pi(), &cfg).unwrap();
        assert_eq!(c.verdict, Verdict::Inconclusive);
        assert!(c.witnesses.is_empty() && c.direction.is_none());

        let c = certify_bifurcation(&linear(5.0, 0.0, 5.0), &pi(), &cfg).unwrap();
        assert_eq!(c.verdict, Verdict::BifurcationExists);
        assert_eq!(c.direction, Some(Direction::Negative));
        assert_eq!(c.witnesses, vec![1, 2]);
    }

    #[test]
    fn certificate_rejects_singular_endpoints() {
        let cfg = OdeConfig::default();
        let p = linear(5.0, 0.0, 5.0).with_range(0.0, 0.2).unwrap();
        assert!(matches!(
            certify_bifurcation(&p, &pi(), &cfg),
            Err(Error::EndpointSingular { lambda }) if lambda == 0.2
        ));
        let x = CoefficientPath::parse("5*lambda*(1+0*x)", "0", "5*lambda").unwrap()
            .with_range(0.0, 0.2)
            .unwrap();
        assert!(x.x_dependent);
        assert!(matches!(
            min_bifurcation_count(&x, &pi(), &cfg),
            Err(Error::EndpointSingular { .. })
        ));
    }

    #[test]
    fn count_examples() {
        let cfg = OdeConfig::default();
        let b = min_bifurcation_count(&linear(5.0, 0.0, 5.0), &pi(), &cfg).unwrap();
        assert_eq!((b.gamma, b.min_bifurcations), (2, 1));
        let b = min_bifurcation_count(&linear(0.0, 0.0, 0.0), &pi(), &cfg).unwrap();
        assert_eq!((b.gamma, b.min_bifurcations), (0, 0));
        let b = min_bifurcation_count(&linear(-10.0, 0.0, -10.0), &pi(), &cfg).unwrap();
        assert_eq!((b.gamma, b.min_bifurcations), (3, 2));
    }

    #[test]
    fn auxiliary_path_endpoints() {
        let p = auxiliary_path(-1.5, 7.0);
        assert_eq!(
            coefficients::form_bounds(&p, &pi(), 0.0, 2).unwrap(),
            FormBounds { alpha: -1.5, beta: -1.5 }
        );
        let end = coefficients::form_bounds(&p, &pi(), 1.0, 2).unwrap();
        assert!((end.alpha - 7.0).abs() < 1e-14 && (end.beta - 7.0).abs() < 1e-14);
    }

    fn off_spectrum(v: f64) -> bool {
        (1..=8).all(|k| ((k * k) as f64 - v.abs()).abs() > 1e-3)
    }

    proptest! {
        #[test]
        fn formulas_match_auxiliary_paths(alpha in -40.0f64..40.0, beta in -40.0f64..40.0) {
            prop_assume!(off_spectrum(alpha) && off_spectrum(beta));
            let s = spec();
            let m = index_engine::spectral_flow_constant(&auxiliary_path(beta, alpha), &s).unwrap();
            prop_assert_eq!(count_formula_m(alpha, beta, &s).unwrap(), m);
            let n = index_engine::spectral_flow_constant(&auxiliary_path(alpha, beta), &s).unwrap();
            prop_assert_eq!(count_formula_n(beta, alpha, &s).unwrap(), n);
        }

        #[test]
        fn gamma_bounds_auxiliary_flow(alpha in -40.0f64..40.0, beta in -40.0f64..40.0) {
            prop_assume!(alpha > beta && off_spectrum(alpha) && off_spectrum(beta));
            let s = spec();
            let g = gamma_count(alpha, beta, &s).unwrap() as i64;
            prop_assert!(g <= count_formula_m(alpha, beta, &s).unwrap().abs());
        }
    }
}
