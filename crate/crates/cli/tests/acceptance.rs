//! Acceptance criteria, one pass/fail line each.
//!
//! Runs without the libtest harness so the summary lines always reach the
//! test output.

use std::f64::consts::PI;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sflow_cli::battery::{self, BatteryOutcome, Fixture};
use sflow_core::coefficients::{self, SymMat2};
use sflow_core::comparison::{self, Direction, Verdict};
use sflow_core::expr::{self, Point, Var};
use sflow_core::nonlinear_probe::{self, DiscreteProblem, ProbeConfig, Side};
use sflow_core::{galerkin, index_engine, linalg, ode_crossings, spectrum};
use sflow_core::{CoefficientPath, DomainSpec, GalerkinConfig, OdeConfig};

type Outcome = Result<String, String>;
type Check<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

fn fixtures_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn runner(cases: u32) -> TestRunner {
    let config = Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    };
    TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha))
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn three_oracle_agreement(outcome: &BatteryOutcome, elapsed: Duration) -> Outcome {
    let mut agreeing = 0;
    for r in &outcome.results {
        let report = r.report.as_ref().ok_or_else(|| format!("{}: no report", r.name))?;
        if !report.constant {
            continue;
        }
        let sf = report.spectral_flow.ok_or_else(|| format!("{}: no spectral flow", r.name))?;
        ensure(sf.agree, || format!("{}: {}", r.name, sf.describe()))?;
        if let (Some(i), Some(g), Some(c)) = (sf.index_formula, sf.galerkin, sf.crossings) {
            ensure(i == g && g == c, || format!("{}: {}", r.name, sf.describe()))?;
            agreeing += 1;
        }
    }
    ensure(agreeing >= 12, || format!("only {agreeing} constant fixtures with all three methods"))?;
    ensure(elapsed < Duration::from_secs(30), || format!("battery took {elapsed:?}"))?;
    Ok(format!("{agreeing} fixtures, {:.2} s", elapsed.as_secs_f64()))
}

fn worked_value() -> Outcome {
    let path = CoefficientPath::linear(SymMat2::diag(5.0, 5.0));
    let domain = DomainSpec::unit_pi();
    let s = domain.spectrum(1).map_err(|e| e.to_string())?;
    let i0 = index_engine::index(&path, 0.0, &s).map_err(|e| e.to_string())?;
    let i1 = index_engine::index(&path, 1.0, &s).map_err(|e| e.to_string())?;
    ensure(i0.to_f64() == 0.0 && i1.to_f64() == -2.0, || format!("indices {i0:?}, {i1:?}"))?;
    let formula = index_engine::spectral_flow_constant(&path, &s).map_err(|e| e.to_string())?;
    let gal = galerkin::sflow_galerkin(&path, &domain, &GalerkinConfig::default()).map_err(|e| e.to_string())?;
    let cfg = OdeConfig::default();
    let records = ode_crossings::analyze_crossings(&path, PI, &cfg).map_err(|e| e.to_string())?;
    let total = ode_crossings::total_from_records(&records).map_err(|e| e.to_string())?;
    ensure(formula == -2 && gal.value == -2 && total == -2, || {
        format!("sfl {formula}, {}, {total}", gal.value)
    })?;
    ensure(records.len() == 2, || format!("{} crossings", records.len()))?;
    for (rec, want) in records.iter().zip([0.2, 0.8]) {
        ensure((rec.lambda0 - want).abs() < 1e-6, || format!("crossing at {}", rec.lambda0))?;
        let d = rec.form.len();
        let m = DMatrix::from_fn(d, d, |i, j| rec.form[i][j]);
        let negdef = linalg::symmetric_eigenvalues(&m).iter().all(|&e| e < 0.0);
        ensure(negdef && rec.local_sflow == -1, || format!("form {:?} at {}", rec.form, rec.lambda0))?;
    }
    Ok("i(A0)=0, i(A1)=-2, sfl=-2, crossings 0.2 and 0.8 negative definite".into())
}

fn off_spectrum(v: f64) -> bool {
    (1..=8).all(|k| ((k * k) as f64 - v.abs()).abs() > 1e-3)
}

fn comparison_consistency(outcome: &BatteryOutcome) -> Outcome {
    let s = DomainSpec::unit_pi().spectrum(1).map_err(|e| e.to_string())?;
    runner(50)
        .run(&(-40.0f64..40.0, -40.0f64..40.0), |(alpha, beta)| {
            prop_assume!(off_spectrum(alpha) && off_spectrum(beta));
            let m = index_engine::spectral_flow_constant(&comparison::auxiliary_path(beta, alpha), &s).unwrap();
            prop_assert_eq!(comparison::count_formula_m(alpha, beta, &s).unwrap(), m);
            let n = index_engine::spectral_flow_constant(&comparison::auxiliary_path(alpha, beta), &s).unwrap();
            prop_assert_eq!(comparison::count_formula_n(beta, alpha, &s).unwrap(), n);
            Ok(())
        })
        .map_err(|e| format!("count formulas: {e}"))?;

    let domain = DomainSpec::unit_pi();
    let cfg = OdeConfig::default();
    let certified = std::cell::Cell::new(0);
    runner(50)
        .run(
            &(-30.0f64..30.0, -10.0f64..10.0, -30.0f64..30.0),
            |(a, b, c)| {
                let path = CoefficientPath::linear(SymMat2::new(a, b, c));
                let Ok(cert) = comparison::certify_bifurcation(&path, &domain, &cfg) else {
                    return Err(TestCaseError::reject("singular endpoint"));
                };
                if cert.verdict == Verdict::BifurcationExists {
                    let g = galerkin::sflow_galerkin(&path, &domain, &GalerkinConfig::default()).unwrap();
                    match cert.direction {
                        Some(Direction::Positive) => prop_assert!(g.value > 0, "positive certificate, sfl {}", g.value),
                        Some(Direction::Negative) => prop_assert!(g.value < 0, "negative certificate, sfl {}", g.value),
                        None => prop_assert!(false, "certificate without direction"),
                    }
                    certified.set(certified.get() + 1);
                }
                Ok(())
            },
        )
        .map_err(|e| format!("certificate sign: {e}"))?;

    for r in &outcome.results {
        let Some(report) = &r.report else { continue };
        let (Some(cert), Some(sf)) = (&report.certificate, &report.spectral_flow) else {
            continue;
        };
        if cert.verdict != Verdict::BifurcationExists {
            continue;
        }
        let g = sf.galerkin.ok_or_else(|| format!("{}: certified but no galerkin value", r.name))?;
        let ok = match cert.direction {
            Some(Direction::Positive) => g > 0,
            Some(Direction::Negative) => g < 0,
            None => false,
        };
        ensure(ok, || format!("{}: {:?} certificate with galerkin {g}", r.name, cert.direction))?;
        certified.set(certified.get() + 1);
    }
    Ok(format!("50 (alpha, beta) pairs, {} certificates with matching sign", certified.get()))
}

fn gamma_bound(outcome: &BatteryOutcome) -> Outcome {
    for r in &outcome.results {
        let report = r.report.as_ref().ok_or_else(|| format!("{}: no report", r.name))?;
        let bound = report.count_bound.ok_or_else(|| format!("{}: no count bound", r.name))?;
        let nonzero = report
            .nonzero_crossings()
            .ok_or_else(|| format!("{}: no crossing list", r.name))?;
        ensure(nonzero >= bound.min_bifurcations, || {
            format!("{}: {nonzero} crossings, bound {}", r.name, bound.min_bifurcations)
        })?;
    }
    Ok(format!("{} fixtures", outcome.results.len()))
}

fn symmetric(n: usize, upper: &[f64]) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    let mut it = upper.iter();
    for i in 0..n {
        for j in i..n {
            let v = *it.next().expect("enough entries");
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

fn direct_sum(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let (n, m) = (a.nrows(), b.nrows());
    let mut out = DMatrix::zeros(n + m, n + m);
    out.view_mut((0, 0), (n, n)).copy_from(a);
    out.view_mut((n, n), (m, m)).copy_from(b);
    out
}

fn fixture_paths() -> Result<Vec<Fixture>, String> {
    battery::discover(&fixtures_dir(), None)
        .map_err(|e| e.to_string())?
        .iter()
        .map(|d| Fixture::load(d).map_err(|e| e.to_string()))
        .collect()
}

fn axioms(fixtures: &[Fixture]) -> Outcome {
    let domain = DomainSpec::unit_pi();
    let s = domain.spectrum(1).map_err(|e| e.to_string())?;
    let gcfg = GalerkinConfig::default();

    // normalisation: |A| < λ_1 keeps every L_λ invertible
    runner(30)
        .run(&(-0.3f64..0.3, -0.3f64..0.3, -0.3f64..0.3), |(a, b, c)| {
            let path = CoefficientPath::affine(SymMat2::new(a, b, c), SymMat2::new(c, a, b));
            prop_assert_eq!(index_engine::spectral_flow_constant(&path, &s).unwrap(), 0);
            prop_assert_eq!(galerkin::sflow_galerkin(&path, &domain, &gcfg).unwrap().value, 0);
            Ok(())
        })
        .map_err(|e| format!("normalisation: {e}"))?;

    // dimension: crossing forms of a 6x6 path add up to the Morse difference
    let entries = proptest::collection::vec(-1.0f64..1.0, 21);
    runner(40)
        .run(&(entries.clone(), entries.clone()), |(base, slope)| {
            let base = symmetric(6, &base);
            let slope = symmetric(6, &slope) * 4.0;
            let morse = linalg::morse_index(&base, 0.0) as i64 - linalg::morse_index(&(&base + &slope), 0.0) as i64;
            prop_assert_eq!(linalg::affine_path_sflow(&base, &slope, (0.0, 1.0), 400), morse);
            Ok(())
        })
        .map_err(|e| format!("dimension: {e}"))?;

    // additivity: a direct sum of paths has the summed flow
    runner(20)
        .run(
            &(entries.clone(), entries.clone(), entries.clone(), entries),
            |(b1, s1, b2, s2)| {
                let (b1, s1) = (symmetric(6, &b1), symmetric(6, &s1) * 4.0);
                let (b2, s2) = (symmetric(6, &b2), symmetric(6, &s2) * 4.0);
                let whole = linalg::affine_path_sflow(&direct_sum(&b1, &b2), &direct_sum(&s1, &s2), (0.0, 1.0), 400);
                let parts = linalg::affine_path_sflow(&b1, &s1, (0.0, 1.0), 400)
                    + linalg::affine_path_sflow(&b2, &s2, (0.0, 1.0), 400);
                prop_assert_eq!(whole, parts);
                Ok(())
            },
        )
        .map_err(|e| format!("additivity: {e}"))?;

    // additivity on a Galerkin truncation: Morse index is the sum over mode blocks
    for n in [4, 8] {
        let path = CoefficientPath::linear(SymMat2::new(-7.0, 1.5, 3.0));
        let t = galerkin::assemble(&path, &domain, n, 1.0, gcfg.quad_panels).map_err(|e| e.to_string())?;
        let mut blocks = 0;
        for k in 1..=n {
            let b = index_engine::block(&path, 1.0, k, &s).map_err(|e| e.to_string())?;
            let m = DMatrix::from_row_slice(2, 2, &[b.matrix.p, b.matrix.q, b.matrix.q, b.matrix.r]);
            blocks += linalg::morse_index(&m, 0.0);
        }
        let whole = galerkin::morse_index(&t, 0.0);
        ensure(whole == blocks, || format!("truncation n={n}: Morse {whole}, blocks {blocks}"))?;
    }

    // concatenation at a non-crossing split point
    runner(30)
        .run(
            &(-20.0f64..20.0, -5.0f64..5.0, -20.0f64..20.0, 0.05f64..0.95),
            |(a, b, c, split)| {
                let path = CoefficientPath::linear(SymMat2::new(a, b, c));
                let Ok(whole) = index_engine::spectral_flow_constant(&path, &s) else {
                    return Err(TestCaseError::reject("singular endpoint"));
                };
                let left = path.clone().with_range(0.0, split).unwrap();
                let right = path.clone().with_range(split, 1.0).unwrap();
                let (Ok(l), Ok(r)) = (
                    index_engine::spectral_flow_constant(&left, &s),
                    index_engine::spectral_flow_constant(&right, &s),
                ) else {
                    return Err(TestCaseError::reject("split at a crossing"));
                };
                prop_assert_eq!(whole, l + r);
                let gl = galerkin::sflow_galerkin(&left, &domain, &gcfg).unwrap().value;
                let gr = galerkin::sflow_galerkin(&right, &domain, &gcfg).unwrap().value;
                prop_assert_eq!(whole, gl + gr);
                Ok(())
            },
        )
        .map_err(|e| format!("concatenation: {e}"))?;

    // reversal on every fixture, every method that applies
    let cfg = OdeConfig::default();
    for f in fixtures {
        let p = &f.problem.path;
        let rev = p.reversed();
        let d = &f.problem.domain;
        if f.problem.is_constant() {
            let sd = d.spectrum(1).map_err(|e| e.to_string())?;
            let fwd = index_engine::spectral_flow_constant(p, &sd).map_err(|e| e.to_string())?;
            let bwd = index_engine::spectral_flow_constant(&rev, &sd).map_err(|e| e.to_string())?;
            ensure(fwd == -bwd, || format!("{}: index formula {fwd} vs reversed {bwd}", f.name))?;
        }
        let fwd = galerkin::sflow_galerkin(p, d, &gcfg).map_err(|e| e.to_string())?.value;
        let bwd = galerkin::sflow_galerkin(&rev, d, &gcfg).map_err(|e| e.to_string())?.value;
        ensure(fwd == -bwd, || format!("{}: galerkin {fwd} vs reversed {bwd}", f.name))?;
        if let Some(len) = f.problem.interval_length() {
            let fwd = ode_crossings::total_sflow_crossings(p, len, &cfg).map_err(|e| e.to_string())?;
            let bwd = ode_crossings::total_sflow_crossings(&rev, len, &cfg).map_err(|e| e.to_string())?;
            ensure(fwd == -bwd, || format!("{}: crossings {fwd} vs reversed {bwd}", f.name))?;
        }
    }
    Ok("normalisation, dimension, additivity, concatenation, reversal".into())
}

fn tail_norms(fixtures: &[Fixture]) -> Outcome {
    let cfg = GalerkinConfig::default();
    let sizes = [8, 16, 32, 64, 128];
    let mut measured_checks = 0;
    for f in fixtures {
        let (path, domain) = (&f.problem.path, &f.problem.domain);
        let tails: Vec<f64> = sizes
            .iter()
            .map(|&n| galerkin::tail_norm(path, domain, n, &cfg))
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?;
        ensure(tails.windows(2).all(|w| w[1] <= w[0]), || format!("{}: tails {tails:?}", f.name))?;
        ensure(tails[0] == 0.0 || tails[4] < tails[0], || format!("{}: tails {tails:?}", f.name))?;

        if f.problem.is_constant() {
            let (lo, hi) = path.lambda_range;
            let mag = |l: f64| coefficients::form_bounds(path, domain, l, 2).map(|b| b.magnitude());
            let sup = mag(lo).map_err(|e| e.to_string())?.max(mag(hi).map_err(|e| e.to_string())?);
            for (&n, &t) in sizes.iter().zip(&tails) {
                let s = domain.spectrum(n + 1).map_err(|e| e.to_string())?;
                let want = sup / s.lambda(n + 1);
                ensure((t - want).abs() <= 1e-12 * want.max(1e-300), || {
                    format!("{}: n={n} tail {t} vs {want}", f.name)
                })?;
            }
        }

        if domain.is_interval() {
            let (lo, hi) = path.lambda_range;
            for (&n, &bound) in sizes.iter().zip(&tails).take(3) {
                for l in [lo, 0.5 * (lo + hi), hi] {
                    let m = galerkin::measured_tail_norm(path, domain, n, 8, l, cfg.quad_panels)
                        .map_err(|e| e.to_string())?;
                    ensure(m <= bound * (1.0 + 1e-9) + 1e-12, || {
                        format!("{}: n={n} lambda={l} measured {m} above bound {bound}", f.name)
                    })?;
                    measured_checks += 1;
                }
            }
        }
    }
    Ok(format!("{} fixtures, {measured_checks} measured tail blocks", fixtures.len()))
}

fn crossing_form_invariance(fixtures: &[Fixture], outcome: &BatteryOutcome) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut checked = 0;
    for (f, r) in fixtures.iter().zip(&outcome.results) {
        ensure(f.name == r.name, || format!("fixture order {} vs {}", f.name, r.name))?;
        let Some(report) = &r.report else { continue };
        for c in report.crossings.iter().flatten() {
            ensure(c.local_sflow.unsigned_abs() as usize <= c.kernel_dim, || {
                format!("{}: crossing {} local {} dim {}", f.name, c.lambda0, c.local_sflow, c.kernel_dim)
            })?;
            if c.regular {
                battery::basis_invariance(f, c, &mut rng).map_err(|e| format!("{}: {e}", f.name))?;
                checked += 1;
            }
        }
        for c in report.block_crossings.iter().flatten() {
            ensure(c.local_sflow.unsigned_abs() as usize <= c.kernel_dim, || {
                format!("{}: block crossing {} local {} dim {}", f.name, c.lambda0, c.local_sflow, c.kernel_dim)
            })?;
        }
    }
    ensure(checked > 0, || "no regular crossings to check".into())?;
    Ok(format!("{checked} crossings x {} basis changes", battery::BASIS_TRIALS))
}

fn nonlinear_confirmation() -> Outcome {
    let start = Instant::now();
    let path = CoefficientPath::linear(SymMat2::diag(5.0, 5.0));
    let g = expr::parse_nonlinearity("-(u^4+v^4)/4").map_err(|e| e.to_string())?;
    let cfg = ProbeConfig::default();
    let problem = DiscreteProblem::new(&path, Some(&g), PI, cfg.mesh).map_err(|e| e.to_string())?;
    let result = nonlinear_probe::branch_probe(&problem, 0.2, None, Side::Right, &cfg).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let amps: Vec<f64> = result.samples.iter().filter(|s| s.converged).map(|s| s.amplitude).collect();
    ensure(amps.len() >= 5, || format!("{} converged samples", amps.len()))?;
    ensure(amps.iter().all(|&a| a > cfg.amplitude_floor), || format!("trivial sample in {amps:?}"))?;
    ensure(amps.windows(2).all(|w| w[1] < w[0]), || format!("amplitudes not decreasing: {amps:?}"))?;
    let last = *amps.last().expect("nonempty");
    ensure(last < 1e-3, || format!("final amplitude {last}"))?;
    ensure(elapsed < Duration::from_secs(10), || format!("probe took {elapsed:?}"))?;
    Ok(format!(
        "{} samples, lambda* = {:.7}, final amplitude {last:.2e}, {:.2} s",
        amps.len(),
        result.lambda_star,
        elapsed.as_secs_f64()
    ))
}

fn rel_err(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs().max(1.0)
}

fn numerics_hygiene() -> Outcome {
    let sources = [
        "lambda*(5+sin(x))",
        "exp(-lambda*x)*cos(2*x)",
        "-(u^4+v^4)/4 + lambda*u*v",
        "sqrt(1+x^2)*lambda^3 - u^3*v",
        "sqrt(2+sin(lambda*x))*exp(-u^2)*cos(v)",
    ];
    let mut worst: f64 = 0.0;
    for src in sources {
        let e = expr::parse_nonlinearity(src).map_err(|e| e.to_string())?;
        for var in [Var::Lambda, Var::X, Var::U, Var::V] {
            let d = e.diff(var).map_err(|e| e.to_string())?;
            for &(l, x, u, v) in &[(0.3, 1.1, 0.4, -0.7), (0.9, 2.5, -1.2, 0.3), (-0.4, 0.2, 0.8, 0.9)] {
                let h = 1e-5;
                let shift = |s: f64| {
                    let mut p = Point::with_state(l, x, u, v);
                    match var {
                        Var::Lambda => p.lambda += s,
                        Var::X => p.x += s,
                        Var::U => p.u += s,
                        Var::V => p.v += s,
                    }
                    e.eval_at(&p)
                };
                let fd = (shift(h).map_err(|e| e.to_string())? - shift(-h).map_err(|e| e.to_string())?) / (2.0 * h);
                let exact = d.eval_at(&Point::with_state(l, x, u, v)).map_err(|e| e.to_string())?;
                let err = rel_err(exact, fd);
                worst = worst.max(err);
                ensure(err <= 1e-6, || format!("d/d{var:?} of {src}: {exact} vs {fd}"))?;
            }
        }
    }

    let fd = spectrum::fd_spectrum_interval(PI, 2000, 10).map_err(|e| e.to_string())?;
    for k in 1..=10 {
        let want = (k * k) as f64;
        let err = (fd.lambda(k) - want).abs() / want;
        ensure(err <= 1e-4, || format!("FD eigenvalue {k}: {} vs {want}", fd.lambda(k)))?;
    }

    let path = CoefficientPath::parse("lambda*(5+sin(x))", "0.5*lambda", "lambda*(4-cos(x))").map_err(|e| e.to_string())?;
    let g = expr::parse_nonlinearity("-(u^4+v^4)/4 + u^2*v^2/2").map_err(|e| e.to_string())?;
    let problem = DiscreteProblem::new(&path, Some(&g), PI, 40).map_err(|e| e.to_string())?;
    let n = 2 * problem.nodes();
    let state = DVector::from_fn(n, |i, _| 0.8 * ((i as f64) * 0.37).sin());
    let lambda = 0.45;
    let jac = problem.jacobian(lambda, &state).map_err(|e| e.to_string())?;
    let scale = jac.amax();
    let h = 1e-6;
    for j in 0..n {
        let mut plus = state.clone();
        let mut minus = state.clone();
        plus[j] += h;
        minus[j] -= h;
        let col = (problem.residual(lambda, &plus).map_err(|e| e.to_string())?
            - problem.residual(lambda, &minus).map_err(|e| e.to_string())?)
            / (2.0 * h);
        let err = (col - jac.column(j)).amax() / scale;
        ensure(err <= 1e-6, || format!("Jacobian column {j}: relative error {err:e}"))?;
    }
    Ok(format!("derivatives within {worst:.1e}, FD spectrum and Jacobian within tolerance"))
}

fn main() {
    let start = Instant::now();
    let outcome = battery::run_battery(&fixtures_dir(), None, 0).expect("fixture battery runs");
    let battery_time = start.elapsed();
    let fixtures = fixture_paths().expect("fixtures load");

    let criteria: Vec<Check> = vec![
        ("three-oracle agreement", Box::new(|| three_oracle_agreement(&outcome, battery_time))),
        ("worked value lambda*5I", Box::new(worked_value)),
        ("comparison consistency", Box::new(|| comparison_consistency(&outcome))),
        ("gamma bound", Box::new(|| gamma_bound(&outcome))),
        ("axiom suite", Box::new(|| axioms(&fixtures))),
        ("tail norm diagnostic", Box::new(|| tail_norms(&fixtures))),
        ("crossing form invariance", Box::new(|| crossing_form_invariance(&fixtures, &outcome))),
        ("nonlinear confirmation", Box::new(nonlinear_confirmation)),
        ("numerics hygiene", Box::new(numerics_hygiene)),
    ];

    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let result = check();
        let secs = t.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("criterion {} {name}: PASS ({detail}; {secs:.2} s)", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {} {name}: FAIL ({detail})", i + 1);
            }
        }
    }
    if outcome.failed() > 0 {
        print!("{}", outcome.table());
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 || outcome.failed() > 0 {
        std::process::exit(1);
    }
}
