//! Running the engines on a problem and collecting a report.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sflow_core::comparison::{self, EndpointBounds};
use sflow_core::index_engine::{self, ConstCrossing, HalfInt};
use sflow_core::nonlinear_probe::{self, DiscreteProblem, ProbeResult};
use sflow_core::{galerkin, ode_crossings};
use sflow_core::{Certificate, CountBound, CrossingRecord, SflowResult};

use crate::config::{Problem, ProblemConfig};
use crate::error::CliError;
use crate::output;

pub const REPORT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexValues {
    pub start: HalfInt,
    pub end: HalfInt,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SpectralFlow {
    pub index_formula: Option<i64>,
    pub galerkin: Option<i64>,
    pub crossings: Option<i64>,
    /// All methods that produced a value agree.
    pub agree: bool,
}

impl SpectralFlow {
    pub fn values(&self) -> Vec<(&'static str, i64)> {
        [
            ("index_formula", self.index_formula),
            ("galerkin", self.galerkin),
            ("crossings", self.crossings),
        ]
        .into_iter()
        .filter_map(|(k, v)| v.map(|v| (k, v)))
        .collect()
    }

    fn settle(&mut self) {
        let v = self.values();
        self.agree = !v.is_empty() && v.iter().all(|(_, x)| *x == v[0].1);
    }

    pub fn describe(&self) -> String {
        self.values()
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(", ")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub command: String,
    pub problem: ProblemConfig,
    pub constant: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub endpoint_bounds: Option<EndpointBounds>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub index: Option<IndexValues>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spectral_flow: Option<SpectralFlow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub galerkin: Option<SflowResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate: Option<Certificate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub count_bound: Option<CountBound>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub crossings: Option<Vec<CrossingRecord>>,
    /// Singular instants of individual mode blocks (constant coefficients).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub block_crossings: Option<Vec<ConstCrossing>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub probe: Option<ProbeResult>,
    /// Methods that were applicable but failed, with their error.
    pub errors: BTreeMap<String, String>,
    /// Wall-clock seconds per section.
    pub timing: BTreeMap<String, f64>,
}

impl Report {
    fn new(command: &str, problem: &Problem) -> Self {
        Report {
            schema_version: REPORT_VERSION,
            command: command.to_string(),
            problem: problem.config.clone(),
            constant: problem.is_constant(),
            endpoint_bounds: None,
            index: None,
            spectral_flow: None,
            galerkin: None,
            certificate: None,
            count_bound: None,
            crossings: None,
            block_crossings: None,
            probe: None,
            errors: BTreeMap::new(),
            timing: BTreeMap::new(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Crossings with nonzero local spectral flow, from shooting when
    /// available and from the mode blocks otherwise.
    pub fn nonzero_crossings(&self) -> Option<usize> {
        if let Some(r) = &self.crossings {
            return Some(r.iter().filter(|c| c.local_sflow != 0).count());
        }
        let blocks = self.block_crossings.as_ref()?;
        let mut by_instant: Vec<(f64, i32)> = Vec::new();
        for c in blocks {
            match by_instant.last_mut() {
                Some((l, s)) if (c.lambda0 - *l).abs() <= 1e-9 => *s += c.local_sflow,
                _ => by_instant.push((c.lambda0, c.local_sflow)),
            }
        }
        Some(by_instant.iter().filter(|(_, s)| *s != 0).count())
    }
}

/// Which parts of the report to compute.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Sections {
    pub index: bool,
    pub sflow: bool,
    pub crossings: bool,
    pub certify: bool,
    pub probe: bool,
}

impl Sections {
    pub fn all(probe: bool) -> Self {
        Sections {
            index: true,
            sflow: true,
            crossings: true,
            certify: true,
            probe,
        }
    }
}

fn timed<T>(report: &mut Report, key: &str, f: impl FnOnce() -> T) -> T {
    let start = Instant::now();
    let out = f();
    *report.timing.entry(key.to_string()).or_default() += start.elapsed().as_secs_f64();
    out
}

fn record<T>(report: &mut Report, key: &str, r: sflow_core::Result<T>) -> Option<T> {
    match r {
        Ok(v) => Some(v),
        Err(e) => {
            report.errors.insert(key.to_string(), e.to_string());
            None
        }
    }
}

/// Compute the requested sections. Engine failures are recorded in
/// `errors`; only output failures abort.
pub fn analyze(command: &str, problem: &Problem, sections: Sections, plots: Option<&Path>) -> Result<Report, CliError> {
    let mut report = Report::new(command, problem);
    let path = &problem.path;
    let domain = &problem.domain;
    let num = problem.numerics();
    let ode_cfg = num.ode();
    let gal_cfg = num.galerkin();
    let constant = problem.is_constant();
    let len = problem.interval_length();

    if sections.index || sections.certify {
        let r = timed(&mut report, "bounds", || comparison::endpoint_bounds(path, domain, num.x_grid));
        report.endpoint_bounds = record(&mut report, "endpoint_bounds", r);
    }

    if sections.index && constant {
        let r = timed(&mut report, "index", || -> sflow_core::Result<IndexValues> {
            let spectrum = domain.spectrum(1)?;
            let (lo, hi) = path.lambda_range;
            Ok(IndexValues {
                start: index_engine::index(path, lo, &spectrum)?,
                end: index_engine::index(path, hi, &spectrum)?,
            })
        });
        report.index = record(&mut report, "index", r);
    }

    let mut ode_total = None;
    if let Some(l) = len.filter(|_| sections.sflow || sections.crossings || sections.probe) {
        let r = timed(&mut report, "crossings", || {
            let records = ode_crossings::analyze_crossings(path, l, &ode_cfg)?;
            let total = ode_crossings::check_endpoints(path, l, &ode_cfg)
                .and_then(|_| ode_crossings::total_from_records(&records));
            Ok::<_, sflow_core::Error>((records, total))
        });
        if let Some((records, total)) = record(&mut report, "crossings", r) {
            ode_total = Some(total);
            report.crossings = Some(records);
        }
    }

    if sections.crossings && constant {
        let r = timed(&mut report, "block_crossings", || {
            let spectrum = domain.spectrum(1)?;
            index_engine::enumerate_crossings_constant(path, &spectrum, path.lambda_range, index_engine::ROOT_TOL)
        });
        report.block_crossings = record(&mut report, "block_crossings", r);
    }

    if sections.sflow {
        let mut sf = SpectralFlow::default();
        if constant {
            let r = timed(&mut report, "index_formula", || {
                let spectrum = domain.spectrum(1)?;
                index_engine::spectral_flow_constant(path, &spectrum)
            });
            sf.index_formula = record(&mut report, "index_formula", r);
        }
        if constant || domain.is_interval() {
            let r = timed(&mut report, "galerkin", || galerkin::sflow_galerkin(path, domain, &gal_cfg));
            if let Some(g) = record(&mut report, "galerkin", r) {
                sf.galerkin = Some(g.value);
                report.galerkin = Some(g);
            }
        }
        if let Some(total) = ode_total.clone() {
            sf.crossings = record(&mut report, "crossings_total", total);
        }
        sf.settle();
        report.spectral_flow = Some(sf);

        if let Some(dir) = plots {
            if constant || domain.is_interval() {
                let (lo, hi) = path.lambda_range;
                let grid: Vec<f64> = (0..num.plot_points)
                    .map(|i| lo + (hi - lo) * i as f64 / (num.plot_points - 1) as f64)
                    .collect();
                let r = galerkin::eigen_track(path, domain, num.plot_modes, &grid, &gal_cfg);
                if let Some(rows) = record(&mut report, "eigen_track", r) {
                    output::write_atomic(&dir.join("eigen_track.csv"), &galerkin::eigen_track_csv(&rows))?;
                }
            }
        }
    }

    if sections.crossings {
        if let (Some(dir), Some(records)) = (plots, &report.crossings) {
            for (i, rec) in records.iter().enumerate() {
                for (j, curve) in rec.kernel_basis.iter().enumerate() {
                    let name = format!("crossing_{}_kernel_{}.csv", i + 1, j + 1);
                    output::write_atomic(&dir.join(name), &curve.to_csv())?;
                }
            }
        }
    }

    if sections.certify {
        let r = timed(&mut report, "certificate", || comparison::certify_bifurcation(path, domain, &ode_cfg));
        report.certificate = record(&mut report, "certificate", r);
        let r = timed(&mut report, "count_bound", || comparison::min_bifurcation_count(path, domain, &ode_cfg));
        report.count_bound = record(&mut report, "count_bound", r);
    }

    if sections.probe {
        let records = report.crossings.clone();
        let r = timed(&mut report, "probe", || run_probe(problem, records.as_deref()));
        report.probe = record(&mut report, "probe", r);
        if let (Some(dir), Some(p)) = (plots, &report.probe) {
            output::write_atomic(&dir.join("probe.csv"), &p.to_csv())?;
        }
    }

    Ok(report)
}

fn run_probe(problem: &Problem, records: Option<&[CrossingRecord]>) -> sflow_core::Result<ProbeResult> {
    use sflow_core::Error;
    let g = problem
        .nonlinearity
        .as_ref()
        .ok_or_else(|| Error::Config("the probe needs a nonlinearity G".into()))?;
    let len = problem
        .interval_length()
        .ok_or_else(|| Error::Config("the probe runs on interval domains only".into()))?;
    let target = problem.config.probe.unwrap_or(crate::config::ProbeTarget {
        lambda_star: None,
        side: nonlinear_probe::Side::Right,
    });
    let star = match target.lambda_star {
        Some(l) => l,
        None => records
            .and_then(|r| r.iter().find(|c| c.local_sflow != 0))
            .map(|c| c.lambda0)
            .ok_or_else(|| Error::Config("no crossing with nonzero local spectral flow to probe".into()))?,
    };
    let num = problem.numerics();
    let discrete = DiscreteProblem::new(&problem.path, Some(g), len, num.probe_mesh)?;
    nonlinear_probe::branch_probe(&discrete, star, None, target.side, &num.probe())
}
