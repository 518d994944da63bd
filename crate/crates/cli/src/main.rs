//! Command-line front end for the strichartz-core numerics.

mod commands;
mod report;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use report::{Format, RunReport};
use std::path::PathBuf;
use std::process::ExitCode;
use strichartz_core::Error;

const EXIT_CHECK_FAILED: u8 = 2;
const EXIT_USAGE: u8 = 64;
const EXIT_SOFTWARE: u8 = 70;

#[derive(Parser)]
#[command(
    name = "strichartz",
    version,
    about = "Penrose-compactified cubic wave numerics"
)]
struct Cli {
    #[command(flatten)]
    out: Output,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Args)]
struct Output {
    /// Output format.
    #[arg(long, value_enum, default_value = "table", global = true)]
    format: Format,
    /// Shorthand for --format json.
    #[arg(long, global = true)]
    json: bool,
    /// Override the tolerance of the command's main checks.
    #[arg(long, global = true)]
    tol: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Print the named constants with numerical cross-checks.
    Constants {
        #[arg(long, default_value_t = 96)]
        n: usize,
    },
    /// Scal(f_θ) by closed form, separable quadrature and the field pipeline.
    Scal {
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        theta: f64,
        #[arg(long, default_value_t = 200)]
        n: usize,
    },
    /// Log-log slopes of the first and second Picard remainders.
    Orders {
        #[arg(long, default_value_t = 1.0, value_parser = parse_sigma, allow_negative_numbers = true)]
        sigma: f64,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        theta: f64,
        /// Geometric δ grid a:b:k.
        #[arg(long, default_value = "0.05:0.4:8", value_parser = parse_deltas)]
        deltas: Deltas,
        #[arg(long, default_value_t = 96)]
        n: usize,
    },
    /// δ⁶ coefficient of N(δ) and the θ sweep.
    Expansion {
        #[arg(long, default_value_t = 1.0, value_parser = parse_sigma, allow_negative_numbers = true)]
        sigma: f64,
        /// Defaults to the maximizing phase for σ.
        #[arg(long, allow_negative_numbers = true)]
        theta: Option<f64>,
        #[arg(long, default_value = "0.05:0.5:8", value_parser = parse_deltas)]
        deltas: Deltas,
        #[arg(long, default_value_t = 96)]
        n: usize,
    },
    /// Project Γ(p) plus an optional orthogonal bump back onto the manifold.
    Project {
        #[arg(long, allow_negative_numbers = true)]
        c: Option<f64>,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        theta: f64,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        t0: f64,
        /// Size of the orthogonal perturbation.
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        bump: f64,
    },
    /// d/dt of the pair norm: formula against finite differences.
    Noninv {
        #[arg(long, value_parser = parse_sigma, allow_negative_numbers = true)]
        sigma: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        theta: Option<f64>,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        t0: Option<f64>,
        #[arg(long, default_value_t = strichartz_core::noninv::DEFAULT_STEP)]
        h: f64,
        #[arg(long, default_value_t = 96)]
        n: usize,
    },
    /// Classify two transform sequences and tabulate the mixed L⁴ integral.
    Profiles {
        /// e.g. "lambda=2^n,t=0"
        #[arg(long, allow_hyphen_values = true)]
        a: String,
        #[arg(long, allow_hyphen_values = true, default_value = "lambda=1")]
        b: String,
        #[arg(long, default_value_t = 2.0)]
        alpha: f64,
        #[arg(long, default_value_t = strichartz_core::profiles::DEFAULT_N_MAX)]
        n_max: usize,
        #[arg(long, default_value_t = strichartz_core::profiles::DEFAULT_GROW_THRESHOLD)]
        threshold: f64,
        /// Tabulate n = 1..=upto.
        #[arg(long, default_value_t = 8)]
        upto: usize,
        #[arg(long, default_value_t = 64)]
        n: usize,
    },
    /// Solve the family problem once and report the iteration.
    Solve {
        #[arg(long, default_value_t = 1.0, value_parser = parse_sigma, allow_negative_numbers = true)]
        sigma: f64,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        theta: f64,
        #[arg(long, default_value_t = 0.2)]
        delta: f64,
        #[arg(long, default_value_t = 96)]
        n: usize,
        #[arg(long, default_value_t = strichartz_core::picard::DEFAULT_FP_TOL)]
        fp_tol: f64,
        #[arg(long, default_value_t = strichartz_core::picard::DEFAULT_MAX_ITER)]
        max_iter: usize,
        /// Write the solution grid to this file.
        #[arg(long)]
        dump: Option<PathBuf>,
    },
}

#[derive(Clone, Debug)]
struct Deltas(Vec<f64>);

fn parse_sigma(s: &str) -> Result<f64, String> {
    match s.trim().parse::<f64>() {
        Ok(v) if v == 1.0 || v == -1.0 || v == 0.0 => Ok(v),
        _ => Err(format!("sigma must be 1, -1 or 0, got {s:?}")),
    }
}

fn parse_deltas(s: &str) -> Result<Deltas, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let bad = || format!("expected a:b:k with 0 < a < b and k ≥ 2, got {s:?}");
    if parts.len() != 3 {
        return Err(bad());
    }
    let a: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let b: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let k: usize = parts[2].trim().parse().map_err(|_| bad())?;
    if !(a > 0.0 && b > a && k >= 2) {
        return Err(bad());
    }
    Ok(Deltas(strichartz_core::picard::geometric(a, b, k)))
}

fn run(cli: &Cli) -> strichartz_core::Result<RunReport> {
    let tol = cli.out.tol;
    match &cli.cmd {
        Command::Constants { n } => commands::constants(*n, tol),
        Command::Scal { theta, n } => commands::scal_cmd(*theta, *n, tol),
        Command::Orders {
            sigma,
            theta,
            deltas,
            n,
        } => commands::orders(*sigma, *theta, &deltas.0, *n, tol),
        Command::Expansion {
            sigma,
            theta,
            deltas,
            n,
        } => commands::expansion(*sigma, *theta, &deltas.0, *n, tol),
        Command::Project {
            c,
            lambda,
            theta,
            t0,
            bump,
        } => commands::project(
            &commands::ProjectArgs {
                c: *c,
                lambda: *lambda,
                theta: *theta,
                t0: *t0,
                bump: *bump,
            },
            tol,
        ),
        Command::Noninv {
            sigma,
            theta,
            delta,
            t0,
            h,
            n,
        } => commands::noninv(
            &commands::NoninvArgs {
                sigma: *sigma,
                theta: *theta,
                delta: *delta,
                t0: *t0,
                h: *h,
                n: *n,
            },
            tol,
        ),
        Command::Profiles {
            a,
            b,
            alpha,
            n_max,
            threshold,
            upto,
            n,
        } => commands::profiles(&commands::ProfilesArgs {
            a: a.clone(),
            b: b.clone(),
            alpha: *alpha,
            n_max: *n_max,
            threshold: *threshold,
            upto: *upto,
            n: *n,
        }),
        Command::Solve {
            sigma,
            theta,
            delta,
            n,
            fp_tol,
            max_iter,
            dump,
        } => commands::solve(
            &commands::SolveArgs {
                sigma: *sigma,
                theta: *theta,
                delta: *delta,
                n: *n,
                fp_tol: *fp_tol,
                max_iter: *max_iter,
            },
            dump.as_deref(),
        ),
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Parse(_) | Error::Domain(_) => EXIT_USAGE,
        _ => EXIT_SOFTWARE,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_USAGE),
            };
        }
    };
    let format = if cli.out.json {
        Format::Json
    } else {
        cli.out.format
    };
    match run(&cli) {
        Ok(rep) => {
            print!("{}", rep.render(format));
            if rep.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_CHECK_FAILED)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
