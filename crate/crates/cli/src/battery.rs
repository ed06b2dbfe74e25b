//! The fixture battery.
//!
//! Each directory `fixtures/NAME/` holds a `problem.json` and an
//! `expected.json`. Expected values are optional field by field; every value
//! that is present must carry a provenance tag (`[DERIVED]`, `[PAPER]` or
//! `[TRIVIAL]`), and derived values must name the oracle that produced them.
//!
//! Besides the pinned values every fixture is checked for method agreement,
//! for the lower bound on nonzero crossings and for invariance of crossing
//! signatures under random changes of kernel basis.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sflow_core::comparison::{Direction, Verdict};
use sflow_core::ode_crossings::{self, KernelCurve};

use crate::config::{Overrides, Problem};
use crate::error::CliError;
use crate::report::{self, Report, Sections};

/// Random basis changes per crossing in the invariance check.
pub const BASIS_TRIALS: usize = 100;

const TAGS: [&str; 3] = ["[DERIVED]", "[PAPER]", "[TRIVIAL]"];

fn default_root_tol() -> f64 {
    1e-6
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expected {
    /// Generator of `[DERIVED]` values.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<String>,
    #[serde(default)]
    pub provenance: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectral_flow: Option<i64>,
    /// `i(A)` at both ends of the range.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub index: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub crossings: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub local_sflow: Option<Vec<i32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel_dims: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verdict: Option<Verdict>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direction: Option<Direction>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witnesses: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_bifurcations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probe_success: Option<bool>,
    /// Tolerance for crossing instants.
    #[serde(default = "default_root_tol")]
    pub root_tol: f64,
}

impl Expected {
    fn present_fields(&self) -> Vec<&'static str> {
        let mut v = Vec::new();
        let mut add = |name, present: bool| {
            if present {
                v.push(name)
            }
        };
        add("spectral_flow", self.spectral_flow.is_some());
        add("index", self.index.is_some());
        add("crossings", self.crossings.is_some());
        add("local_sflow", self.local_sflow.is_some());
        add("kernel_dims", self.kernel_dims.is_some());
        add("verdict", self.verdict.is_some());
        add("direction", self.direction.is_some());
        add("witnesses", self.witnesses.is_some());
        add("gamma", self.gamma.is_some());
        add("min_bifurcations", self.min_bifurcations.is_some());
        add("probe_success", self.probe_success.is_some());
        v
    }

    /// Problems with the provenance annotations themselves.
    pub fn provenance_failures(&self) -> Vec<String> {
        let mut out = Vec::new();
        for field in self.present_fields() {
            match self.provenance.get(field) {
                None => out.push(format!("{field}: no provenance tag")),
                Some(tag) if !TAGS.iter().any(|t| tag.starts_with(t)) => {
                    out.push(format!("{field}: unknown provenance tag {tag:?}"))
                }
                Some(tag) if tag.starts_with("[DERIVED]") && self.oracle.is_none() => {
                    out.push(format!("{field}: derived value without a named oracle"))
                }
                Some(_) => {}
            }
        }
        for key in self.provenance.keys() {
            if !self.present_fields().contains(&key.as_str()) {
                out.push(format!("{key}: provenance for a field that is not pinned"));
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct Fixture {
    pub name: String,
    pub dir: PathBuf,
    pub problem: Problem,
    pub expected: Expected,
}

impl Fixture {
    pub fn load(dir: &Path) -> Result<Self, CliError> {
        let name = dir
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        let problem = Problem::load(&dir.join("problem.json"), &Overrides::default())?;
        let exp_path = dir.join("expected.json");
        let text = std::fs::read_to_string(&exp_path).map_err(|e| CliError::io(&exp_path, e))?;
        let expected = serde_json::from_str(&text)
            .map_err(|e| CliError::config(exp_path.display().to_string(), e.to_string()))?;
        Ok(Fixture {
            name,
            dir: dir.to_path_buf(),
            problem,
            expected,
        })
    }
}

/// Fixture directories under `root` whose name contains `filter`, sorted.
pub fn discover(root: &Path, filter: Option<&str>) -> Result<Vec<PathBuf>, CliError> {
    let mut dirs = Vec::new();
    for entry in std::fs::read_dir(root).map_err(|e| CliError::io(root, e))? {
        let entry = entry.map_err(|e| CliError::io(root, e))?;
        let p = entry.path();
        let keep = filter.is_none_or(|f| entry.file_name().to_string_lossy().contains(f));
        if p.join("problem.json").is_file() && keep {
            dirs.push(p);
        }
    }
    dirs.sort();
    Ok(dirs)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureResult {
    pub name: String,
    pub passed: bool,
    pub failures: Vec<String>,
    pub seconds: f64,
    #[serde(skip)]
    pub report: Option<Report>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatteryOutcome {
    pub seed: u64,
    pub results: Vec<FixtureResult>,
}

impl BatteryOutcome {
    pub fn failed(&self) -> usize {
        self.results.iter().filter(|r| !r.passed).count()
    }

    /// Plain-text pass/fail table.
    pub fn table(&self) -> String {
        let width = self.results.iter().map(|r| r.name.len()).max().unwrap_or(4).max(7);
        let mut out = format!("{:<width$}  result  seconds\n", "fixture");
        for r in &self.results {
            out.push_str(&format!(
                "{:<width$}  {:<6}  {:>7.2}\n",
                r.name,
                if r.passed { "pass" } else { "FAIL" },
                r.seconds
            ));
            for f in &r.failures {
                out.push_str(&format!("{:<width$}    - {f}\n", ""));
            }
        }
        out.push_str(&format!(
            "{} passed, {} failed\n",
            self.results.len() - self.failed(),
            self.failed()
        ));
        out
    }
}

/// Run every fixture under `root` matching `filter`. Fixtures run in
/// parallel; results come back in directory order.
pub fn run_battery(root: &Path, filter: Option<&str>, seed: u64) -> Result<BatteryOutcome, CliError> {
    let dirs = discover(root, filter)?;
    let results = dirs
        .par_iter()
        .enumerate()
        .map(|(i, dir)| run_fixture_dir(dir, seed.wrapping_add(i as u64)))
        .collect();
    Ok(BatteryOutcome { seed, results })
}

fn run_fixture_dir(dir: &Path, seed: u64) -> FixtureResult {
    let start = Instant::now();
    let name = dir.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    match Fixture::load(dir) {
        Ok(f) => run_fixture(&f, seed),
        Err(e) => FixtureResult {
            name,
            passed: false,
            failures: vec![e.to_string()],
            seconds: start.elapsed().as_secs_f64(),
            report: None,
        },
    }
}

/// Run one fixture through the full report and diff against expectations.
pub fn run_fixture(f: &Fixture, seed: u64) -> FixtureResult {
    let start = Instant::now();
    let mut failures = f.expected.provenance_failures();
    let sections = Sections::all(f.problem.nonlinearity.is_some());
    let report = match report::analyze("report", &f.problem, sections, None) {
        Ok(r) => r,
        Err(e) => {
            failures.push(e.to_string());
            return FixtureResult {
                name: f.name.clone(),
                passed: false,
                failures,
                seconds: start.elapsed().as_secs_f64(),
                report: None,
            };
        }
    };
    failures.extend(compare(&f.expected, &report));
    failures.extend(invariants(f, &report, seed));
    FixtureResult {
        name: f.name.clone(),
        passed: failures.is_empty(),
        failures,
        seconds: start.elapsed().as_secs_f64(),
        report: Some(report),
    }
}

/// Field-level differences between expectations and a report.
pub fn compare(exp: &Expected, r: &Report) -> Vec<String> {
    let mut out = Vec::new();
    let missing = |field: &str, why: Option<&String>| {
        format!("{field}: not computed{}", why.map(|w| format!(" ({w})")).unwrap_or_default())
    };

    if let Some(want) = exp.spectral_flow {
        match &r.spectral_flow {
            Some(sf) if !sf.values().is_empty() => {
                for (method, got) in sf.values() {
                    if got != want {
                        out.push(format!("spectral_flow.{method}: expected {want}, got {got}"));
                    }
                }
            }
            _ => out.push(missing("spectral_flow", None)),
        }
    }
    if let Some([s, e]) = exp.index {
        match &r.index {
            Some(iv) if iv.start.to_f64() == s && iv.end.to_f64() == e => {}
            Some(iv) => out.push(format!("index: expected ({s}, {e}), got ({}, {})", iv.start, iv.end)),
            None => out.push(missing("index", r.errors.get("index"))),
        }
    }
    let instants: Option<Vec<(f64, usize, i32)>> = match (&r.crossings, &r.block_crossings) {
        (Some(recs), _) => Some(recs.iter().map(|c| (c.lambda0, c.kernel_dim, c.local_sflow)).collect()),
        (None, Some(blocks)) => {
            let mut merged: Vec<(f64, usize, i32)> = Vec::new();
            for b in blocks {
                match merged.last_mut() {
                    Some(m) if (b.lambda0 - m.0).abs() <= 1e-9 => {
                        m.1 += b.kernel_dim;
                        m.2 += b.local_sflow;
                    }
                    _ => merged.push((b.lambda0, b.kernel_dim, b.local_sflow)),
                }
            }
            Some(merged)
        }
        _ => None,
    };
    if let Some(want) = &exp.crossings {
        match &instants {
            Some(got) => {
                let ok = got.len() == want.len()
                    && got.iter().zip(want).all(|(g, w)| (g.0 - w).abs() <= exp.root_tol);
                if !ok {
                    let got: Vec<f64> = got.iter().map(|g| g.0).collect();
                    out.push(format!("crossings: expected {want:?}, got {got:?}"));
                }
            }
            None => out.push(missing("crossings", r.errors.get("crossings"))),
        }
    }
    if let Some(want) = &exp.local_sflow {
        let got: Option<Vec<i32>> = instants.as_ref().map(|v| v.iter().map(|g| g.2).collect());
        if got.as_ref() != Some(want) {
            out.push(format!("local_sflow: expected {want:?}, got {got:?}"));
        }
    }
    if let Some(want) = &exp.kernel_dims {
        let got: Option<Vec<usize>> = instants.as_ref().map(|v| v.iter().map(|g| g.1).collect());
        if got.as_ref() != Some(want) {
            out.push(format!("kernel_dims: expected {want:?}, got {got:?}"));
        }
    }
    let cert = r.certificate.as_ref();
    if let Some(want) = exp.verdict {
        let got = cert.map(|c| c.verdict);
        if got != Some(want) {
            out.push(format!("verdict: expected {want:?}, got {got:?}"));
        }
    }
    if let Some(want) = exp.direction {
        let got = cert.and_then(|c| c.direction);
        if got != Some(want) {
            out.push(format!("direction: expected {want:?}, got {got:?}"));
        }
    }
    if let Some(want) = &exp.witnesses {
        let got = cert.map(|c| c.witnesses.clone());
        if got.as_ref() != Some(want) {
            out.push(format!("witnesses: expected {want:?}, got {got:?}"));
        }
    }
    if let Some(want) = exp.gamma {
        let got = r.count_bound.map(|b| b.gamma);
        if got != Some(want) {
            out.push(format!("gamma: expected {want}, got {got:?}"));
        }
    }
    if let Some(want) = exp.min_bifurcations {
        let got = r.count_bound.map(|b| b.min_bifurcations);
        if got != Some(want) {
            out.push(format!("min_bifurcations: expected {want}, got {got:?}"));
        }
    }
    if let Some(want) = exp.probe_success {
        let got = r.probe.as_ref().map(|p| p.success);
        if got != Some(want) {
            out.push(format!(
                "probe_success: expected {want}, got {got:?}{}",
                r.errors.get("probe").map(|e| format!(" ({e})")).unwrap_or_default()
            ));
        }
    }
    out
}

/// Checks that hold on every fixture regardless of pinned values.
fn invariants(f: &Fixture, r: &Report, seed: u64) -> Vec<String> {
    let mut out = Vec::new();
    if let Some(sf) = &r.spectral_flow {
        if !sf.agree {
            out.push(format!("methods disagree: {}", sf.describe()));
        }
    }
    if let (Some(bound), Some(nonzero)) = (r.count_bound, r.nonzero_crossings()) {
        if nonzero < bound.min_bifurcations {
            out.push(format!(
                "only {nonzero} crossing(s) with nonzero local flow, below the bound {}",
                bound.min_bifurcations
            ));
        }
    }
    if let Some(records) = &r.crossings {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for c in records {
            if c.local_sflow.unsigned_abs() as usize > c.kernel_dim {
                out.push(format!("crossing {}: |local sflow| exceeds kernel dimension", c.lambda0));
            }
            if c.regular {
                if let Err(e) = basis_invariance(f, c, &mut rng) {
                    out.push(format!("crossing {}: {e}", c.lambda0));
                }
            }
        }
    }
    out
}

/// Recompute the crossing form on randomly recombined kernel bases and
/// compare signatures.
pub fn basis_invariance(
    f: &Fixture,
    c: &ode_crossings::CrossingRecord,
    rng: &mut ChaCha8Rng,
) -> Result<(), String> {
    let d = c.kernel_basis.len();
    for _ in 0..BASIS_TRIALS {
        let coeffs = random_invertible(d, rng);
        let basis: Vec<KernelCurve> = (0..d)
            .map(|j| {
                let col: Vec<f64> = (0..d).map(|i| coeffs[i * d + j]).collect();
                KernelCurve::combine(&c.kernel_basis, &col)
            })
            .collect();
        let form = ode_crossings::crossing_form(&f.problem.path, c.lambda0, &basis).map_err(|e| e.to_string())?;
        // eigenvalues scale with the basis; the threshold follows the smallest
        // original eigenvalue magnitude
        let tol = 1e-3 * smallest_abs_eigen(&c.form) * min_singular(&coeffs, d).powi(2);
        let (sig, _) = ode_crossings::local_sflow(&form, tol);
        if sig != c.local_sflow {
            return Err(format!("signature {sig} after basis change, expected {}", c.local_sflow));
        }
    }
    Ok(())
}

fn random_invertible(d: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    loop {
        let m: Vec<f64> = (0..d * d).map(|_| rng.gen_range(-2.0..2.0)).collect();
        if min_singular(&m, d) > 0.1 {
            return m;
        }
    }
}

fn min_singular(m: &[f64], d: usize) -> f64 {
    let mat = nalgebra::DMatrix::from_row_slice(d, d, m);
    mat.singular_values().min()
}

fn smallest_abs_eigen(form: &[Vec<f64>]) -> f64 {
    let d = form.len();
    let m = nalgebra::DMatrix::from_fn(d, d, |i, j| form[i][j]);
    sflow_core::linalg::symmetric_eigenvalues(&m)
        .into_iter()
        .fold(f64::INFINITY, |a, e| a.min(e.abs()))
}
