//! Command-line interface.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use sflow_core::comparison::Verdict;
use sflow_core::DomainSpec;

use crate::battery;
use crate::config::{Overrides, Problem};
use crate::error::CliError;
use crate::output;
use crate::report::{self, Report, Sections};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_INCONCLUSIVE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "sflow-kit", version, about = "Spectral flow and bifurcation certificates for two-component elliptic systems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Write the JSON result here instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Directory for CSV plot tables.
    #[arg(long, global = true)]
    pub plots_dir: Option<PathBuf>,

    /// Crossing scan points per unit of lambda.
    #[arg(long, global = true)]
    pub grid: Option<usize>,

    /// Largest Galerkin truncation.
    #[arg(long, global = true)]
    pub n_max: Option<usize>,

    /// Fixed shift for the Galerkin Morse indices.
    #[arg(long, global = true)]
    pub delta: Option<f64>,

    /// Seed for the randomized battery checks.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Assemble Galerkin matrices by quadrature even for constant coefficients.
    #[arg(long, global = true)]
    pub force_galerkin: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DomainKind {
    Interval,
    Rectangle,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the first Dirichlet eigenvalues of a domain.
    Spectrum {
        #[arg(long, value_enum, default_value_t = DomainKind::Interval)]
        domain: DomainKind,
        /// Interval length.
        #[arg(long, default_value_t = std::f64::consts::PI)]
        length: f64,
        /// Rectangle side lengths.
        #[arg(long, default_value_t = std::f64::consts::PI)]
        a: f64,
        #[arg(long, default_value_t = std::f64::consts::PI)]
        b: f64,
        #[arg(long, default_value_t = 10)]
        count: usize,
    },
    /// Index of the endpoint operators (constant coefficients).
    Index { config: PathBuf },
    /// Spectral flow by every applicable method.
    Sflow { config: PathBuf },
    /// Crossing instants, kernels and crossing forms.
    Crossings { config: PathBuf },
    /// Comparison certificate and bifurcation count; exit code 2 when inconclusive.
    Certify { config: PathBuf },
    /// Track a nonlinear branch near a crossing.
    Probe { config: PathBuf },
    /// Everything, with a cross-method agreement check.
    Report { config: PathBuf },
    /// Run the fixture battery.
    Battery {
        #[arg(default_value = "fixtures")]
        dir: PathBuf,
        /// Only fixtures whose name contains this string.
        #[arg(long)]
        filter: Option<String>,
    },
}

impl Cli {
    fn overrides(&self) -> Overrides {
        Overrides {
            grid: self.grid,
            n_max: self.n_max,
            delta: self.delta,
            force_galerkin: self.force_galerkin,
        }
    }
}

/// Parse arguments, run, report errors on stderr and return the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    configure_threads();
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("sflow-kit: {e}");
            EXIT_ERROR
        }
    }
}

/// Cap rayon's pool at `SFLOWKIT_THREADS` when set.
fn configure_threads() {
    if let Some(n) = std::env::var("SFLOWKIT_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
}

pub fn run(cli: &Cli) -> Result<i32, CliError> {
    let out = cli.out.as_deref();
    let plots = cli.plots_dir.as_deref();
    if let Some(dir) = plots {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    match &cli.command {
        Command::Spectrum { domain, length, a, b, count } => {
            let spec = match domain {
                DomainKind::Interval => DomainSpec::interval(*length),
                DomainKind::Rectangle => DomainSpec::Rectangle { a: *a, b: *b },
            };
            let s = spec.spectrum(*count).map_err(|e| CliError::core("spectrum", e))?;
            let mut text = serde_json::to_string(&s.values).expect("floats serialize");
            text.push('\n');
            output::emit(out, &text)?;
            Ok(EXIT_OK)
        }
        Command::Index { config } => {
            let r = single(cli, "index", config, Sections { index: true, ..Sections::default() })?;
            require(&r, r.index.is_some(), "index")?;
            output::emit(out, &r.to_json())?;
            Ok(EXIT_OK)
        }
        Command::Sflow { config } => {
            let r = single(cli, "sflow", config, Sections { sflow: true, ..Sections::default() })?;
            let any = r.spectral_flow.is_some_and(|s| !s.values().is_empty());
            require(&r, any, "spectral flow")?;
            output::emit(out, &r.to_json())?;
            Ok(EXIT_OK)
        }
        Command::Crossings { config } => {
            let r = single(cli, "crossings", config, Sections { crossings: true, ..Sections::default() })?;
            require(&r, r.crossings.is_some() || r.block_crossings.is_some(), "crossings")?;
            output::emit(out, &r.to_json())?;
            Ok(EXIT_OK)
        }
        Command::Certify { config } => {
            let r = single(cli, "certify", config, Sections { certify: true, ..Sections::default() })?;
            require(&r, r.certificate.is_some(), "certificate")?;
            output::emit(out, &r.to_json())?;
            Ok(match r.certificate.as_ref().map(|c| c.verdict) {
                Some(Verdict::BifurcationExists) => EXIT_OK,
                _ => EXIT_INCONCLUSIVE,
            })
        }
        Command::Probe { config } => {
            let r = single(cli, "probe", config, Sections { probe: true, ..Sections::default() })?;
            require(&r, r.probe.is_some(), "probe")?;
            output::emit(out, &r.to_json())?;
            Ok(EXIT_OK)
        }
        Command::Report { config } => {
            let problem = Problem::load(config, &cli.overrides())?;
            let sections = Sections::all(problem.nonlinearity.is_some());
            let r = report::analyze("report", &problem, sections, plots)?;
            output::emit(out, &r.to_json())?;
            match &r.spectral_flow {
                Some(sf) if sf.agree => Ok(EXIT_OK),
                Some(sf) if !sf.values().is_empty() => Err(CliError::Disagreement(sf.describe())),
                _ => Err(no_result(&r, "spectral flow")),
            }
        }
        Command::Battery { dir, filter } => {
            let outcome = battery::run_battery(dir, filter.as_deref(), cli.seed)?;
            print!("{}", outcome.table());
            if let Some(p) = out {
                let mut text = serde_json::to_string_pretty(&outcome).expect("battery serializes");
                text.push('\n');
                output::write_atomic(p, &text)?;
            }
            match outcome.failed() {
                0 => Ok(EXIT_OK),
                failed => Err(CliError::BatteryFailed {
                    failed,
                    total: outcome.results.len(),
                }),
            }
        }
    }
}

fn single(cli: &Cli, command: &str, config: &Path, sections: Sections) -> Result<Report, CliError> {
    let problem = Problem::load(config, &cli.overrides())?;
    report::analyze(command, &problem, sections, cli.plots_dir.as_deref())
}

fn no_result(r: &Report, what: &str) -> CliError {
    let detail = if r.errors.is_empty() {
        "not applicable to this problem".to_string()
    } else {
        r.errors
            .iter()
            .map(|(k, v)| format!("{k}: {v}"))
            .collect::<Vec<_>>()
            .join("; ")
    };
    CliError::config(r.problem.name.clone().unwrap_or_else(|| "problem".into()), format!("no {what}: {detail}"))
}

fn require(r: &Report, ok: bool, what: &str) -> Result<(), CliError> {
    if ok {
        Ok(())
    } else {
        Err(no_result(r, what))
    }
}
