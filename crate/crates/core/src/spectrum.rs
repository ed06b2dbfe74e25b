//! Dirichlet eigenvalues of `-Δ` on model domains.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Bounded model domain with a closed-form Dirichlet spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum DomainSpec {
    /// The interval `(0, length)`.
    Interval {
        #[serde(default = "default_length")]
        length: f64,
    },
    /// The rectangle `(0, a) x (0, b)`.
    Rectangle { a: f64, b: f64 },
}

fn default_length() -> f64 {
    PI
}

impl DomainSpec {
    pub fn interval(length: f64) -> Self {
        DomainSpec::Interval { length }
    }

    /// The interval `(0, π)` used by the ODE engines.
    pub fn unit_pi() -> Self {
        DomainSpec::Interval { length: PI }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            DomainSpec::Interval { length } => length > 0.0 && length.is_finite(),
            DomainSpec::Rectangle { a, b } => a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("domain dimensions must be positive: {self:?}")))
        }
    }

    pub fn is_interval(&self) -> bool {
        matches!(self, DomainSpec::Interval { .. })
    }

    /// First `n` Dirichlet eigenvalues.
    pub fn spectrum(&self, n: usize) -> Result<Spectrum> {
        match *self {
            DomainSpec::Interval { length } => interval_spectrum(length, n),
            DomainSpec::Rectangle { a, b } => rectangle_spectrum(a, b, n),
        }
    }

    /// Smallest prefix of the spectrum whose last entry exceeds `bound`.
    pub fn spectrum_beyond(&self, bound: f64) -> Result<Spectrum> {
        let mut n = 8;
        loop {
            let s = self.spectrum(n)?;
            if s.values.last().is_some_and(|&v| v > bound) {
                return Ok(s);
            }
            n *= 2;
        }
    }
}

/// Nondecreasing list of positive Dirichlet eigenvalues, with multiplicity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub domain: DomainSpec,
    pub values: Vec<f64>,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `λ_k` for 1-based `k`.
    pub fn lambda(&self, k: usize) -> f64 {
        self.values[k - 1]
    }

    /// Returns a spectrum covering at least `n` eigenvalues, reusing `self`
    /// when it is already long enough.
    pub fn extended_to(&self, n: usize) -> Result<Spectrum> {
        if self.values.len() >= n {
            Ok(self.clone())
        } else {
            self.domain.spectrum(n)
        }
    }

    /// Returns a spectrum whose last eigenvalue exceeds `bound`.
    pub fn extended_beyond(&self, bound: f64) -> Result<Spectrum> {
        if self.values.last().is_some_and(|&v| v > bound) {
            Ok(self.clone())
        } else {
            self.domain.spectrum_beyond(bound)
        }
    }

    /// Number of eigenvalues satisfying `pred`. The caller must have extended
    /// the spectrum past the region where `pred` can hold.
    pub fn count(&self, pred: impl Fn(f64) -> bool) -> usize {
        self.values.iter().filter(|&&v| pred(v)).count()
    }
}

fn check_length(len: f64) -> Result<()> {
    if len > 0.0 && len.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("length must be positive, got {len}")))
    }
}

/// `λ_k = (kπ/L)²` for `k = 1..=n`.
pub fn interval_spectrum(length: f64, n: usize) -> Result<Spectrum> {
    check_length(length)?;
    let values = (1..=n)
        .map(|k| {
            let w = k as f64 * PI / length;
            w * w
        })
        .collect();
    Ok(Spectrum {
        domain: DomainSpec::interval(length),
        values,
    })
}

/// First `n` entries of `{π²(m²/a² + p²/b²) : m, p ≥ 1}`, sorted, ties in
/// `(m, p)`-lexicographic order.
pub fn rectangle_spectrum(a: f64, b: f64, n: usize) -> Result<Spectrum> {
    check_length(a)?;
    check_length(b)?;
    let domain = DomainSpec::Rectangle { a, b };
    if n == 0 {
        return Ok(Spectrum {
            domain,
            values: Vec::new(),
        });
    }
    let value = |m: usize, p: usize| {
        let (m, p) = (m as f64, p as f64);
        PI * PI * (m * m / (a * a) + p * p / (b * b))
    };
    let mut bound = (n as f64).sqrt().ceil() as usize + 1;
    loop {
        let mut entries: Vec<(f64, usize, usize)> = (1..=bound)
            .flat_map(|m| (1..=bound).map(move |p| (m, p)))
            .map(|(m, p)| (value(m, p), m, p))
            .collect();
        entries.sort_by(|x, y| x.0.total_cmp(&y.0).then((x.1, x.2).cmp(&(y.1, y.2))));
        // With fewer than n entries the grid is necessarily too small.
        if entries.len() >= n {
            let cut = entries[n - 1].0;
            let needed = (cut.sqrt() * a.max(b) / PI).ceil() as usize + 1;
            if needed <= bound {
                entries.truncate(n);
                return Ok(Spectrum {
                    domain,
                    values: entries.into_iter().map(|e| e.0).collect(),
                });
            }
            bound = needed;
        } else {
            bound *= 2;
        }
    }
}

/// Smallest `n` eigenvalues of the 3-point finite-difference Dirichlet
/// Laplacian on `(0, L)` with `mesh` uniform intervals.
///
/// Computed by Sturm-sequence bisection on the tridiagonal matrix, so it does
/// not share code with the closed forms above.
pub fn fd_spectrum_interval(length: f64, mesh: usize, n: usize) -> Result<Spectrum> {
    check_length(length)?;
    let domain = DomainSpec::interval(length);
    if n == 0 {
        return Ok(Spectrum {
            domain,
            values: Vec::new(),
        });
    }
    if mesh < 4 * n {
        return Err(Error::Config(format!(
            "mesh ({mesh}) must be at least 4 * n ({})",
            4 * n
        )));
    }
    let h = length / mesh as f64;
    let diag = 2.0 / (h * h);
    let off = -1.0 / (h * h);
    let size = mesh - 1;

    // Number of eigenvalues strictly below sigma (Sylvester inertia of T - σI).
    let count_below = |sigma: f64| -> usize {
        let mut count = 0;
        let mut d = diag - sigma;
        for i in 0..size {
            if i > 0 {
                let prev = if d == 0.0 { f64::EPSILON * diag } else { d };
                d = diag - sigma - off * off / prev;
            }
            if d < 0.0 {
                count += 1;
            }
        }
        count
    };

    let upper = 4.0 / (h * h);
    let values = (0..n)
        .map(|k| {
            // k-th eigenvalue (0-based): smallest σ with count_below(σ) > k
            let (mut lo, mut hi) = (0.0, upper);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if count_below(mid) > k {
                    hi = mid;
                } else {
                    lo = mid;
                }
                if hi - lo <= 1e-15 * hi {
                    break;
                }
            }
            0.5 * (lo + hi)
        })
        .collect();
    Ok(Spectrum { domain, values })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs().max(1e-300)
    }

    #[test]
    fn interval_examples() {
        let s = interval_spectrum(PI, 3).unwrap();
        for (got, want) in s.values.iter().zip([1.0, 4.0, 9.0]) {
            assert!(close(*got, want, 1e-14));
        }
        let s = interval_spectrum(PI / 2.0, 2).unwrap();
        assert!(close(s.values[0], 4.0, 1e-14) && close(s.values[1], 16.0, 1e-14));
        let s = interval_spectrum(1.0, 1).unwrap();
        assert!(close(s.values[0], PI * PI, 1e-15));
        assert!(interval_spectrum(0.0, 3).is_err());
    }

    /// Brute force over a generous (m, p) box.
    fn rectangle_oracle(a: f64, b: f64, n: usize) -> Vec<f64> {
        let mut v: Vec<f64> = (1..=40)
            .flat_map(|m| (1..=40).map(move |p| (m as f64, p as f64)))
            .map(|(m, p)| PI * PI * (m * m / (a * a) + p * p / (b * b)))
            .collect();
        v.sort_by(f64::total_cmp);
        v.truncate(n);
        v
    }

    #[test]
    fn rectangle_examples() {
        let pi2 = PI * PI;
        let s = rectangle_spectrum(1.0, 1.0, 4).unwrap();
        for (got, want) in s.values.iter().zip([2.0, 5.0, 5.0, 8.0]) {
            assert!(close(*got, want * pi2, 1e-14));
        }
        let s = rectangle_spectrum(1.0, 1.0, 1).unwrap();
        assert!(close(s.values[0], 2.0 * pi2, 1e-14));
        let s = rectangle_spectrum(1.0, 2.0, 2).unwrap();
        assert!(close(s.values[0], 1.25 * pi2, 1e-14));
        assert!(close(s.values[1], 2.0 * pi2, 1e-14));
    }

    #[test]
    fn rectangle_matches_brute_force() {
        for &(a, b, n) in &[(1.0, 1.0, 50), (1.0, 3.0, 60), (2.5, 0.7, 80), (1.0, 10.0, 30)] {
            let got = rectangle_spectrum(a, b, n).unwrap().values;
            let want = rectangle_oracle(a, b, n);
            assert_eq!(got.len(), n);
            for (g, w) in got.iter().zip(&want) {
                assert!(close(*g, *w, 1e-13), "{a}x{b}: {g} vs {w}");
            }
        }
    }

    #[test]
    fn fd_examples() {
        let s = fd_spectrum_interval(PI, 2000, 3).unwrap();
        for (got, want) in s.values.iter().zip([1.0, 4.0, 9.0]) {
            assert!(close(*got, want, 1e-4));
        }
        let s = fd_spectrum_interval(PI, 8, 1).unwrap();
        assert!(s.values[0] < 1.0 && s.values[0] > 0.95);
        assert!(fd_spectrum_interval(2.0, 10, 0).unwrap().is_empty());
        assert!(fd_spectrum_interval(PI, 10, 3).is_err());
    }

    #[test]
    fn fd_matches_tridiagonal_closed_form() {
        let (len, mesh) = (2.3, 200usize);
        let h = len / mesh as f64;
        let s = fd_spectrum_interval(len, mesh, 20).unwrap();
        for (i, got) in s.values.iter().enumerate() {
            let k = (i + 1) as f64;
            let want = 4.0 / (h * h) * (k * PI * h / (2.0 * len)).sin().powi(2);
            assert!(close(*got, want, 1e-12), "{got} vs {want}");
        }
    }

    #[test]
    fn fd_agrees_with_analytic_for_first_ten() {
        for len in [1.0, PI, 4.0] {
            let exact = interval_spectrum(len, 10).unwrap();
            let fd = fd_spectrum_interval(len, 2000, 10).unwrap();
            for (f, e) in fd.values.iter().zip(&exact.values) {
                assert!(close(*f, *e, 1e-4));
            }
        }
    }

    #[test]
    fn spectra_are_positive_and_nondecreasing() {
        let specs = [
            interval_spectrum(0.3, 40).unwrap(),
            rectangle_spectrum(0.4, 1.9, 100).unwrap(),
            fd_spectrum_interval(5.0, 400, 50).unwrap(),
        ];
        for s in specs {
            assert!(s.values.iter().all(|&v| v > 0.0));
            assert!(s.values.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn extension_covers_bound() {
        let s = DomainSpec::unit_pi().spectrum_beyond(50.0).unwrap();
        assert!(*s.values.last().unwrap() > 50.0);
        let r = DomainSpec::Rectangle { a: 1.0, b: 1.0 }
            .spectrum_beyond(500.0)
            .unwrap();
        assert!(*r.values.last().unwrap() > 500.0);
    }
}
