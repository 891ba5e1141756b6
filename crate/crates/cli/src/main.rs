//! `ossfield`: command-line front end for the o.s.s. field toolkit.
//!
//! Exit status: 0 on success or a passed check, 2 when a mathematical check
//! fails (the JSON report is still written), 1 on usage, input or numerical
//! errors.

mod commands;
mod config;
mod repro;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::Value;

use config::{write_file, CliError, CliResult, Ctx};

#[derive(Parser, Debug)]
#[command(
    name = "ossfield",
    version,
    about = "Operator self-similar random fields: checks, exponents and simulation"
)]
pub struct Cli {
    /// JSON file with default values keyed by long flag name.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Write the main output here instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Output format [default: csv for `polar`, json otherwise].
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    /// Data only (matrix, coordinates or residual table), where available.
    Csv,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Covariance evaluation and scaling checks.
    Cov {
        #[command(subcommand)]
        cmd: CovCmd,
    },
    /// Domain and range symmetry checks.
    Sym {
        #[command(subcommand)]
        cmd: SymCmd,
    },
    /// Exponent families, Haar averages, admissibility and splitting.
    Exp {
        #[command(subcommand)]
        cmd: ExpCmd,
    },
    /// Anisotropic polar coordinates of a vector.
    Polar(PolarArgs),
    /// Gaussian simulation on a grid.
    Sim {
        #[command(subcommand)]
        cmd: SimCmd,
    },
    /// Semistable lattice scaling and the off-lattice witness.
    Semistable {
        #[command(subcommand)]
        cmd: SemistableCmd,
    },
    /// Self-contained reproduction runs.
    Repro(ReproArgs),
}

#[derive(Subcommand, Debug)]
pub enum CovCmd {
    /// Evaluate Gamma(s, t).
    Eval(CovEvalArgs),
    /// Check Gamma(c^E s, c^E t) = c^H Gamma(s, t) (c^H)^T on a grid.
    CheckOss(CheckOssArgs),
}

#[derive(Subcommand, Debug)]
pub enum SymCmd {
    /// Check a matrix as a domain and/or range symmetry.
    Check(SymCheckArgs),
}

#[derive(Subcommand, Debug)]
pub enum ExpCmd {
    /// Check the invariants of base + T(G).
    Family(FamilyArgs),
    /// Haar-average A H A^{-1} over a group.
    Haar(HaarArgs),
    /// Admissibility of a range exponent.
    Admissible(MatrixTolArgs),
    /// Split into zero and positive real-part blocks.
    Split(MatrixTolArgs),
}

#[derive(Subcommand, Debug)]
pub enum SimCmd {
    /// Draw samples and write them as CSV with a JSON sidecar.
    Sample(SimSampleArgs),
    /// Monte Carlo check of the scaling law.
    Verify(SimVerifyArgs),
}

#[derive(Subcommand, Debug)]
pub enum SemistableCmd {
    Check(SemistableArgs),
}

#[derive(Args, Debug, Clone, Default)]
pub struct ModelArgs {
    /// Spectral exponent gamma in (2, 4) [default 3].
    #[arg(long)]
    pub gamma: Option<f64>,
    /// `ofbf` (quadrature) or `closed-form` [default ofbf].
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub radial_rtol: Option<f64>,
    #[arg(long)]
    pub angular_rtol: Option<f64>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct GridArgs {
    /// Points as "x1,y1;x2,y2" or a CSV path.
    #[arg(long)]
    pub grid: Option<String>,
    /// Side of a square grid used when --grid is absent.
    #[arg(long)]
    pub grid_size: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    pub grid_lo: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub grid_hi: Option<f64>,
}

#[derive(Args, Debug)]
pub struct CovEvalArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, allow_hyphen_values = true)]
    pub s: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub t: Option<String>,
}

#[derive(Args, Debug)]
pub struct CheckOssArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Domain exponent [default I].
    #[arg(long = "E", allow_hyphen_values = true)]
    pub e: Option<String>,
    /// Range exponent [default hI].
    #[arg(long = "H", allow_hyphen_values = true)]
    pub h: Option<String>,
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Args, Debug)]
pub struct SymCheckArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    #[arg(long, allow_hyphen_values = true)]
    pub matrix: Option<String>,
    /// `domain`, `range` or `both` [default both].
    #[arg(long)]
    pub side: Option<String>,
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Args, Debug)]
pub struct FamilyArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub base: Option<String>,
    /// O(n), SO(n) or trivial(n).
    #[arg(long)]
    pub group: Option<String>,
    #[arg(long)]
    pub side: Option<String>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args, Debug)]
pub struct HaarArgs {
    #[arg(long)]
    pub group: Option<String>,
    /// Elements of a finite group, "a,b;c,d|e,f;g,h"; overrides --group.
    #[arg(long, allow_hyphen_values = true)]
    pub elements: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub matrix: Option<String>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub circle_nodes: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args, Debug)]
pub struct MatrixTolArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub matrix: Option<String>,
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Args, Debug)]
pub struct PolarArgs {
    #[arg(long = "E", allow_hyphen_values = true)]
    pub e: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub x: Option<String>,
    /// `euclidean`, `max` or `one`.
    #[arg(long)]
    pub base_norm: Option<String>,
    #[arg(long)]
    pub quad_points: Option<usize>,
    #[arg(long)]
    pub root_tol: Option<f64>,
}

#[derive(Args, Debug)]
pub struct SimSampleArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Sample CSV path; the sidecar is written next to it with a `.json` extension.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SimVerifyArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    #[arg(long = "E", allow_hyphen_values = true)]
    pub e: Option<String>,
    #[arg(long = "H", allow_hyphen_values = true)]
    pub h: Option<String>,
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub alpha: Option<f64>,
}

#[derive(Args, Debug)]
pub struct SemistableArgs {
    #[arg(long)]
    pub b: Option<f64>,
    #[arg(long)]
    pub c0: Option<f64>,
    #[arg(long)]
    pub truncation: Option<u32>,
    #[arg(long, allow_negative_numbers = true)]
    pub theta_min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub theta_max: Option<f64>,
    #[arg(long)]
    pub points: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    /// Off-lattice scale for the witness.
    #[arg(long)]
    pub witness_c: Option<f64>,
    #[arg(long)]
    pub witness_min: Option<f64>,
    #[arg(long)]
    pub witness_max: Option<f64>,
    /// Also write the lattice residual table here as TSV.
    #[arg(long)]
    pub tsv: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ReproArgs {
    /// ofbf-example, haar-example, polar-example, decomposition or semistable.
    #[arg(long)]
    pub case: String,
}

/// Result of one command before timing is attached.
pub struct Outcome {
    pub command: &'static str,
    pub inputs: Value,
    pub tolerances: Value,
    pub result: Value,
    pub passed: Option<bool>,
    pub csv: Option<String>,
}

#[derive(Serialize)]
struct Report<'a> {
    command: &'a str,
    inputs: &'a Value,
    tolerances: &'a Value,
    result: &'a Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    passed: Option<bool>,
    wall_time_s: f64,
}

fn dispatch(cli: &Cli, ctx: &Ctx) -> CliResult<Outcome> {
    match &cli.cmd {
        Cmd::Cov {
            cmd: CovCmd::Eval(a),
        } => commands::cov_eval(ctx, a),
        Cmd::Cov {
            cmd: CovCmd::CheckOss(a),
        } => commands::cov_check_oss(ctx, a),
        Cmd::Sym {
            cmd: SymCmd::Check(a),
        } => commands::sym_check(ctx, a),
        Cmd::Exp {
            cmd: ExpCmd::Family(a),
        } => commands::exp_family(ctx, a),
        Cmd::Exp {
            cmd: ExpCmd::Haar(a),
        } => commands::exp_haar(ctx, a),
        Cmd::Exp {
            cmd: ExpCmd::Admissible(a),
        } => commands::exp_admissible(ctx, a),
        Cmd::Exp {
            cmd: ExpCmd::Split(a),
        } => commands::exp_split(ctx, a),
        Cmd::Polar(a) => commands::polar(ctx, a),
        Cmd::Sim {
            cmd: SimCmd::Sample(a),
        } => commands::sim_sample(ctx, a),
        Cmd::Sim {
            cmd: SimCmd::Verify(a),
        } => commands::sim_verify(ctx, a),
        Cmd::Semistable {
            cmd: SemistableCmd::Check(a),
        } => commands::semistable_check(ctx, a),
        Cmd::Repro(a) => repro::run(&a.case),
    }
}

fn emit(cli: &Cli, text: &str) -> CliResult<()> {
    match &cli.output {
        Some(path) => write_file(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: &Cli) -> CliResult<bool> {
    let ctx = Ctx::load(cli.config.as_deref())?;
    let start = Instant::now();
    let out = dispatch(cli, &ctx)?;
    let wall_time_s = start.elapsed().as_secs_f64();
    let passed = out.passed.unwrap_or(true);
    let format = cli.format.unwrap_or(if out.command == "polar" {
        Format::Csv
    } else {
        Format::Json
    });
    match format {
        Format::Csv => {
            let csv = out.csv.as_deref().ok_or_else(|| {
                CliError::Usage(format!(
                    "`{}` has no CSV output; use --format json",
                    out.command
                ))
            })?;
            emit(cli, csv)?;
        }
        Format::Json => {
            let report = Report {
                command: out.command,
                inputs: &out.inputs,
                tolerances: &out.tolerances,
                result: &out.result,
                passed: out.passed,
                wall_time_s,
            };
            let mut text = serde_json::to_string_pretty(&report)
                .map_err(|e| CliError::Io(format!("serializing report: {e}")))?;
            text.push('\n');
            emit(cli, &text)?;
        }
    }
    Ok(passed)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("ossfield: {e}");
            ExitCode::from(1)
        }
    }
}
