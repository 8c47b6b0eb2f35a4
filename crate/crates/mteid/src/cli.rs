//! The `mteid` command line.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use mteid_core::fitting::{fit_pdf, normal_template, FitSpec};
use mteid_core::{
    solve, validate_model, Assignment, EliminationOrder, InfluenceDiagram, MtePotential, Value,
};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{load_model, parse_target, piece_specs, PieceSpec};
use crate::oracle::density_masses;
use crate::output::{plot_samples, samples_csv, trace_log, write_atomic};
use crate::policy::save_policy;

/// Exit status when a model or order fails validation.
pub const EXIT_INVALID: i32 = 2;
/// Absolute quadrature tolerance of `check`. Fitted fragments evaluate
/// through cancelling coefficients, so much tighter targets can be out of
/// reach.
const QUAD_TOL: f64 = 1e-7;

#[derive(Parser, Debug)]
#[command(
    name = "mteid",
    version,
    about = "Solve hybrid influence diagrams with MTE potentials"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check a model and print its diagnostics.
    Validate { model: PathBuf },
    /// Solve a model and print the maximum expected utility.
    Solve {
        model: PathBuf,
        /// Deletion sequence, comma separated.
        #[arg(long)]
        order: String,
        #[arg(long)]
        policy: Option<PathBuf>,
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Fit an MTE potential.
    #[command(subcommand)]
    Fit(FitCommand),
    /// Evaluate a named potential at a point.
    Eval {
        model: PathBuf,
        #[arg(long)]
        potential: String,
        /// `var=value,...`; a value is a state label or a number.
        #[arg(long)]
        at: String,
    },
    /// Sample a named potential along one variable into a CSV file.
    Plot {
        model: PathBuf,
        #[arg(long)]
        potential: String,
        #[arg(long)]
        var: String,
        #[arg(long)]
        points: usize,
        #[arg(long)]
        out: PathBuf,
        /// Values of the potential's other variables.
        #[arg(long, default_value = "")]
        at: String,
    },
    /// Confirm by quadrature that every density has mass 1 for each parent
    /// configuration.
    Check {
        model: PathBuf,
        #[arg(long, default_value_t = 1e-3)]
        tolerance: f64,
        /// Grid points per continuous parent.
        #[arg(long, default_value_t = 5)]
        grid: usize,
    },
}

#[derive(Subcommand, Debug)]
enum FitCommand {
    /// The normal template on `[mu - 3 sigma, mu + 3 sigma]`.
    Normal {
        #[arg(long, allow_hyphen_values = true)]
        mu: f64,
        #[arg(long)]
        sigma: f64,
        #[arg(long, default_value = "x")]
        var: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Least-squares fit of a density such as `beta:3.2,3.2`.
    Pdf(PdfArgs),
}

#[derive(Args, Debug)]
struct PdfArgs {
    #[arg(long)]
    target: String,
    /// `L,H`.
    #[arg(long, allow_hyphen_values = true)]
    interval: String,
    /// Number of equal-width pieces.
    #[arg(long, conflicts_with = "splits")]
    pieces: Option<usize>,
    /// Inner split points, comma separated.
    #[arg(long, allow_hyphen_values = true)]
    splits: Option<String>,
    #[arg(long, default_value_t = 3)]
    terms: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    normalize: bool,
    #[arg(long, default_value = "x")]
    var: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Serialize)]
struct FitOutput {
    variable: String,
    interval: [f64; 2],
    #[serde(skip_serializing_if = "Option::is_none")]
    sse: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_abs_error: Option<f64>,
    pieces: Vec<PieceSpec>,
}

fn numbers(text: &str, what: &str) -> Result<Vec<f64>> {
    text.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::Usage(format!("bad number `{s}` in {what}")))
        })
        .collect()
}

/// Parses `var=value,...` against the variables of `d`.
fn parse_point(d: &InfluenceDiagram, text: &str) -> Result<Assignment> {
    let mut a = Assignment::new();
    for item in text.split(',').filter(|s| !s.trim().is_empty()) {
        let (name, value) = item
            .split_once('=')
            .ok_or_else(|| Error::Usage(format!("`{item}` is not `var=value`")))?;
        let (name, value) = (name.trim(), value.trim());
        let v = d
            .variable(name)
            .ok_or_else(|| Error::Usage(format!("unknown variable `{name}`")))?;
        let value = if v.is_continuous() {
            Value::Real(
                value
                    .parse()
                    .map_err(|_| Error::Usage(format!("`{name}` needs a number, got `{value}`")))?,
            )
        } else {
            Value::State(value.to_string())
        };
        a.set(name, value);
    }
    Ok(a)
}

fn named_potential<'a>(d: &'a InfluenceDiagram, name: &str) -> Result<&'a MtePotential> {
    d.potential(name)
        .ok_or_else(|| Error::Usage(format!("no potential named `{name}`")))
}

fn write_or_print(out: &mut dyn Write, path: Option<&PathBuf>, text: &str) -> Result<()> {
    match path {
        Some(p) => write_atomic(p, text.as_bytes()),
        None => out
            .write_all(text.as_bytes())
            .map_err(|e| Error::io("<stdout>", e)),
    }
}

fn fit_output(var: &str, p: &MtePotential, sse: Option<f64>, max_abs_error: Option<f64>) -> String {
    let (lo, hi) = p.continuous_vars()[0].support().expect("continuous");
    let doc = FitOutput {
        variable: var.to_string(),
        interval: [lo, hi],
        sse,
        max_abs_error,
        pieces: piece_specs(p),
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("fit serializes");
    s.push('\n');
    s
}

fn emit(out: &mut dyn Write, line: impl std::fmt::Display) -> Result<()> {
    writeln!(out, "{line}").map_err(|e| Error::io("<stdout>", e))
}

/// Runs one command; returns the exit status.
fn execute(cli: Cli, out: &mut dyn Write) -> Result<i32> {
    match cli.command {
        Command::Validate { model } => {
            let d = load_model(model)?;
            let diags = validate_model(&d);
            if diags.is_empty() {
                emit(out, "ok")?;
                return Ok(0);
            }
            for diag in &diags {
                emit(out, format_args!("{}: {diag}", diag.code()))?;
            }
            Ok(EXIT_INVALID)
        }
        Command::Solve {
            model,
            order,
            policy,
            trace,
        } => {
            let d = load_model(model)?;
            let diags = validate_model(&d);
            if !diags.is_empty() {
                for diag in &diags {
                    emit(out, format_args!("{}: {diag}", diag.code()))?;
                }
                return Ok(EXIT_INVALID);
            }
            let ord = EliminationOrder::parse(&order);
            let r = solve(&d, &ord)?;
            if let Some(path) = policy {
                save_policy(&r, path)?;
            }
            if let Some(path) = trace {
                write_atomic(&path, trace_log(&r).as_bytes())?;
            }
            emit(out, r.meu)?;
            Ok(0)
        }
        Command::Fit(FitCommand::Normal {
            mu,
            sigma,
            var,
            out: path,
        }) => {
            let p = normal_template(&var, mu, sigma)?;
            write_or_print(out, path.as_ref(), &fit_output(&var, &p, None, None))?;
            Ok(0)
        }
        Command::Fit(FitCommand::Pdf(args)) => {
            let target = parse_target(&args.target).map_err(Error::Usage)?;
            let [lo, hi] = numbers(&args.interval, "--interval")?[..] else {
                return Err(Error::Usage("--interval takes `L,H`".into()));
            };
            let splits = match (args.pieces, &args.splits) {
                (_, Some(s)) => numbers(s, "--splits")?,
                (Some(k), None) if k >= 1 => (1..k)
                    .map(|i| lo + (hi - lo) * i as f64 / k as f64)
                    .collect(),
                (Some(_), None) => return Err(Error::Usage("--pieces must be at least 1".into())),
                (None, None) => Vec::new(),
            };
            let spec = FitSpec::new(&*target, lo, hi)
                .splits(&splits)
                .terms(args.terms)
                .seed(args.seed)
                .normalized(args.normalize);
            let r = fit_pdf(&args.var, &spec)?;
            write_or_print(
                out,
                args.out.as_ref(),
                &fit_output(&args.var, &r.potential, Some(r.sse), Some(r.max_abs_error)),
            )?;
            Ok(0)
        }
        Command::Eval {
            model,
            potential,
            at,
        } => {
            let d = load_model(model)?;
            let p = named_potential(&d, &potential)?;
            let point = parse_point(&d, &at)?;
            emit(out, p.evaluate(&point)?)?;
            Ok(0)
        }
        Command::Plot {
            model,
            potential,
            var,
            points,
            out: path,
            at,
        } => {
            let d = load_model(model)?;
            let p = named_potential(&d, &potential)?;
            let rows = plot_samples(p, &var, points, &parse_point(&d, &at)?)?;
            write_atomic(&path, samples_csv(&rows).as_bytes())?;
            Ok(0)
        }
        Command::Check {
            model,
            tolerance,
            grid,
        } => {
            let d = load_model(model)?;
            let masses = density_masses(&d, grid.max(1), QUAD_TOL)?;
            let mut failed = 0;
            for e in &d.probabilities {
                let own: Vec<_> = masses.iter().filter(|m| m.potential == e.name).collect();
                let worst = own.iter().map(|m| (m.mass - 1.0).abs()).fold(0.0, f64::max);
                let ok = worst <= tolerance;
                failed += usize::from(!ok);
                let verdict = if ok { "ok" } else { "FAIL" };
                emit(
                    out,
                    format_args!(
                        "{verdict} {}: {} configurations, max |mass - 1| = {worst:.3e}",
                        e.name,
                        own.len()
                    ),
                )?;
            }
            Ok(if failed == 0 { 0 } else { EXIT_INVALID })
        }
    }
}

/// Parses `args` (program name first) and runs the command. Errors go to
/// `err` as `CODE: reason`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    0
                }
                _ => {
                    let _ = write!(err, "{e}");
                    let _ = writeln!(err, "E_USAGE");
                    1
                }
            };
        }
    };
    match execute(cli, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "{}: {e}", e.code());
            e.exit_code()
        }
    }
}
