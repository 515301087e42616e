//! Command-line driver. Every command writes `<stem>.json` (and, when the
//! result is tabular, `<stem>.csv` plus `<stem>.<label>.dat` plot files)
//! into the output directory.

mod commands;
pub mod output;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use fraclane::error::Error;

use output::{Document, Sink, Table};

pub const EXIT_VALIDATION: u8 = 1;
pub const EXIT_NO_CONVERGENCE: u8 = 2;
pub const EXIT_USAGE: u8 = 64;

#[derive(Parser, Debug)]
#[command(
    name = "fraclane",
    version,
    about = "Singular solutions of fractional Lane-Emden equations"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Args, Debug, Clone)]
pub struct OutArgs {
    /// Output directory.
    #[arg(long, global = true, env = "FRACLANE_OUT_DIR", default_value = ".")]
    pub out_dir: PathBuf,
    /// File stem of the outputs (default: the command name).
    #[arg(long, global = true)]
    pub stem: Option<String>,
    /// Record wall-clock times in the `timing` section.
    #[arg(long, global = true)]
    pub timing: bool,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// Power multipliers, Hardy exponents, singular-profile constants and the regime of p.
    Constants(ConstantsArgs),
    /// Checks (-Delta)^s |x|^tau = C_s(tau) |x|^{tau-2s} by quadrature.
    CheckOp(CheckOpArgs),
    /// Newton iteration for the singular solution from a perturbed profile.
    Solve(SolveArgs),
    /// Minimal-solution iteration with constant exterior data b.
    Picard(PicardArgs),
    /// Power-law fit of (r, u) samples from a CSV file.
    Asymptotics(AsymptoticsArgs),
    /// Kelvin identity checks and the exterior-to-interior parameter map.
    Kelvin(KelvinArgs),
    /// The s = 1 problem: exact profile and perturbed shooting.
    Classical(ClassicalArgs),
    /// First Dirichlet eigenpair of the unit ball.
    Eigen(EigenArgs),
    /// Runs a verification suite and prints a pass/fail table.
    Report(ReportArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Constants(_) => "constants",
            Command::CheckOp(_) => "check-op",
            Command::Solve(_) => "solve",
            Command::Picard(_) => "picard",
            Command::Asymptotics(_) => "asymptotics",
            Command::Kelvin(_) => "kelvin",
            Command::Classical(_) => "classical",
            Command::Eigen(_) => "eigen",
            Command::Report(_) => "report",
        }
    }
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct ProblemArgs {
    /// Dimension.
    #[arg(long = "N")]
    #[serde(rename = "N")]
    pub n: u32,
    /// Order of the fractional Laplacian, in (0, 1).
    #[arg(long)]
    pub s: f64,
    /// Weight exponent.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub theta: f64,
    /// Nonlinearity exponent.
    #[arg(long)]
    pub p: f64,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct GridArgs {
    /// Number of nodes.
    #[arg(long, default_value_t = 400)]
    pub nodes: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub r_min: f64,
    #[arg(long, default_value_t = 1.0)]
    pub r_max: f64,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct WindowArgs {
    /// Lower end of the fit window.
    #[arg(long, default_value_t = fraclane::diagnostics::DEFAULT_WINDOW.0)]
    pub fit_min: f64,
    /// Upper end of the fit window.
    #[arg(long, default_value_t = fraclane::diagnostics::DEFAULT_WINDOW.1)]
    pub fit_max: f64,
}

impl WindowArgs {
    pub fn window(&self) -> (f64, f64) {
        (self.fit_min, self.fit_max)
    }
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct ConstantsArgs {
    #[arg(long = "N")]
    #[serde(rename = "N")]
    pub n: u32,
    #[arg(long)]
    pub s: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub theta: f64,
    /// Nonlinearity exponent; enables the regime and profile constants.
    #[arg(long)]
    pub p: Option<f64>,
    /// Arguments at which to evaluate C_s (comma separated).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub tau: Vec<f64>,
    /// Hardy coefficient for the exponents tau_-(mu), tau_+(mu).
    #[arg(long, allow_negative_numbers = true)]
    pub mu: Option<f64>,
    /// Tolerance of the integral form of C_s used as a cross-check.
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct CheckOpArgs {
    #[arg(long = "N")]
    #[serde(rename = "N")]
    pub n: u32,
    #[arg(long)]
    pub s: f64,
    /// Exponent of the test function |x|^tau, in (-N, 2s).
    #[arg(long, allow_negative_numbers = true)]
    pub tau: f64,
    /// Evaluation radii (comma separated).
    #[arg(long, value_delimiter = ',', default_values_t = [0.1, 1.0, 10.0])]
    pub radii: Vec<f64>,
    /// Quadrature tolerance.
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    /// Largest accepted relative error.
    #[arg(long, default_value_t = 1e-5)]
    pub max_error: f64,
    /// Nodes of the log-uniform sampling grid on [1e-3, 1e3].
    #[arg(long, default_value_t = 200)]
    pub nodes: usize,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct SolveArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub problem: ProblemArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub window: WindowArgs,
    /// Relative perturbation of the seed (1 + delta) K r^{-beta}.
    #[arg(long, default_value_t = 0.1, allow_negative_numbers = true)]
    pub delta: f64,
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    #[arg(long, default_value_t = 100)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 1e-9)]
    pub quad_tol: f64,
    /// Keep the collocation equation at the first node instead of pinning r^beta u there.
    #[arg(long)]
    pub no_pin: bool,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct PicardArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub problem: ProblemArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub grid: GridArgs,
    /// Exterior constant.
    #[arg(long, default_value_t = 0.05)]
    pub b: f64,
    /// Outer radius of the exterior annulus carrying b.
    #[arg(long, default_value_t = f64::INFINITY)]
    pub outer_radius: f64,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long, default_value_t = 200)]
    pub max_iter: usize,
    /// Sup-norm at which the iteration is declared divergent.
    #[arg(long, default_value_t = fraclane::solver::PICARD_CAP)]
    pub cap: f64,
    #[arg(long, default_value_t = 1e-8)]
    pub quad_tol: f64,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct AsymptoticsArgs {
    /// CSV file with a header row.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value = "r")]
    pub r_column: String,
    #[arg(long, default_value = "u")]
    pub u_column: String,
    #[command(flatten)]
    #[serde(flatten)]
    pub window: WindowArgs,
    /// Reference exponent for the relative error.
    #[arg(long)]
    pub expect_exponent: Option<f64>,
    /// Reference coefficient for the relative error.
    #[arg(long)]
    pub expect_coefficient: Option<f64>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct KelvinArgs {
    #[arg(long = "N")]
    #[serde(rename = "N")]
    pub n: u32,
    #[arg(long)]
    pub s: f64,
    /// Exponents gamma of r^{-gamma}, in (-2s, N) (default: 9 values across the range).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub gamma: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = [0.05, 0.5, 3.0])]
    pub radii: Vec<f64>,
    /// Also check the identity by quadrature.
    #[arg(long)]
    pub quadrature: bool,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long, default_value_t = 1e-4)]
    pub quadrature_tol: f64,
    /// Exterior weight; with --p, reports the transformed interior problem.
    #[arg(long, allow_negative_numbers = true)]
    pub theta_tilde: Option<f64>,
    #[arg(long)]
    pub p: Option<f64>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct ClassicalArgs {
    #[arg(long = "N")]
    #[serde(rename = "N")]
    pub n: u32,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub theta: f64,
    #[arg(long)]
    pub p: f64,
    /// Start radius, in [1e-8, 1e-4].
    #[arg(long, default_value_t = 1e-8)]
    pub r0: f64,
    /// Relative perturbation of the initial data, |delta| <= 0.1.
    #[arg(long, default_value_t = 0.05, allow_negative_numbers = true)]
    pub delta: f64,
    #[arg(long, default_value_t = 1.0)]
    pub r_end: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub window: WindowArgs,
    #[arg(long, default_value_t = 1e-10)]
    pub rtol: f64,
    #[arg(long, default_value_t = 1e-14)]
    pub atol: f64,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct EigenArgs {
    #[arg(long = "N")]
    #[serde(rename = "N")]
    pub n: u32,
    #[arg(long)]
    pub s: f64,
    #[arg(long, default_value_t = 400)]
    pub nodes: usize,
    #[arg(long, default_value_t = 1e-4)]
    pub r_min: f64,
    /// Distance of the outermost node from r = 1.
    #[arg(long, default_value_t = 1e-5)]
    pub gap: f64,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    /// Fit window in 1 - r for the boundary exponent.
    #[arg(long, default_value_t = 1e-4)]
    pub fit_min: f64,
    #[arg(long, default_value_t = 1e-2)]
    pub fit_max: f64,
}

#[derive(ValueEnum, Debug, Clone, Copy, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Acceptance,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct ReportArgs {
    #[arg(long, value_enum, default_value_t = Suite::Acceptance)]
    pub suite: Suite,
    /// Criteria to run (comma separated; default all).
    #[arg(long, value_delimiter = ',')]
    pub criteria: Vec<u8>,
}

/// What a command produced.
pub struct Outcome {
    pub doc: Document,
    pub table: Option<Table>,
    pub plots: Vec<(&'static str, Vec<f64>, Vec<f64>)>,
    /// Lines for standard output.
    pub summary: Vec<String>,
    /// Exit status; nonzero when a verification failed its tolerance or an
    /// iteration stopped without converging.
    pub status: u8,
}

impl Outcome {
    pub fn new(doc: Document) -> Self {
        Outcome {
            doc,
            table: None,
            plots: Vec::new(),
            summary: Vec::new(),
            status: 0,
        }
    }
}

pub fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(e) if e.is_validation() => EXIT_VALIDATION,
        Some(_) => EXIT_NO_CONVERGENCE,
        None => EXIT_VALIDATION,
    }
}

pub fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_USAGE),
            };
        }
    };
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

/// Runs one command and writes its artifacts; returns the exit status.
pub fn run(cli: &Cli) -> anyhow::Result<u8> {
    let start = Instant::now();
    let doc = Document::new(output::value(&cli.command));
    let mut outcome = match &cli.command {
        Command::Constants(a) => commands::constants(a, doc)?,
        Command::CheckOp(a) => commands::check_op(a, doc)?,
        Command::Solve(a) => commands::solve(a, doc)?,
        Command::Picard(a) => commands::picard(a, doc)?,
        Command::Asymptotics(a) => commands::asymptotics(a, doc)?,
        Command::Kelvin(a) => commands::kelvin(a, doc)?,
        Command::Classical(a) => commands::classical(a, doc)?,
        Command::Eigen(a) => commands::eigen(a, doc)?,
        Command::Report(a) => commands::report(a, doc, cli.out.timing)?,
    };
    if cli.out.timing {
        let timing = outcome.doc.timing.get_or_insert_with(Default::default);
        timing.insert("wall_seconds".into(), start.elapsed().as_secs_f64().into());
    }
    let stem = cli.out.stem.clone().unwrap_or_else(|| cli.command.name().to_string());
    let mut sink = Sink::new(&cli.out.out_dir, &stem)?;
    sink.json(&outcome.doc)?;
    if let Some(t) = &outcome.table {
        sink.csv(t)?;
    }
    for (label, r, u) in &outcome.plots {
        sink.plot(label, r, u)?;
    }
    // a closed stdout (e.g. piped into head) is not an error
    let mut stdout = std::io::stdout().lock();
    for line in &outcome.summary {
        let _ = writeln!(stdout, "{line}");
    }
    for path in &sink.written {
        let _ = writeln!(stdout, "wrote {}", path.display());
    }
    Ok(outcome.status)
}
