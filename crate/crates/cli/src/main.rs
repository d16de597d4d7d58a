use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgAction, Parser, Subcommand, ValueEnum};
use serde_json::Value;

use fibrecross::planner::{Mode, Planner};
use fibrecross::precision::DEFAULT_DIGITS;
use fibrecross::report::{
    constants_payload, exit, exit_code_for, family_payload, inputs, plan_payload, sweep_csv_string, sweep_payload,
    ReportEnvelope,
};
use fibrecross::verify::{run_verify_with, Level, VerifyOptions};
use fibrecross::{Error, Rational};

#[derive(Parser, Debug)]
#[command(name = "fibrecross", version, about = "Certified crossing-number bounds for fibre-surface curve systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Optimized,
    Symmetric,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Optimized => Mode::Optimized,
            ModeArg::Symmetric => Mode::Symmetric,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum LevelArg {
    Quick,
    Full,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// x0, C*, f(1/2) and the constant hierarchy.
    Constants {
        #[arg(long, default_value_t = 1e-10)]
        tolerance: f64,
        #[arg(long, default_value_t = DEFAULT_DIGITS)]
        precision: u32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Construction plan, side conditions and certified bound for one genus.
    Plan {
        #[arg(long, value_parser = parse_genus)]
        g: u64,
        #[arg(long)]
        alpha: String,
        #[arg(long, default_value = "0.5")]
        epsilon: String,
        #[arg(long, value_enum, default_value_t = ModeArg::Optimized)]
        mode: ModeArg,
        /// Enlarge q past the formula value until the family outgrows m.
        #[arg(long, action = ArgAction::Set, num_args = 0..=1, default_value_t = true, default_missing_value = "true")]
        search: bool,
        #[arg(long, default_value_t = DEFAULT_DIGITS)]
        precision: u32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact pair-bound sums and topology for the family Gamma(p,q;k).
    Family {
        #[arg(long)]
        p: u32,
        #[arg(long)]
        q: u32,
        #[arg(long)]
        k: u32,
        #[arg(long, default_value_t = 1_000_000)]
        cap: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Runs the invariant suites; nonzero exit on any failure.
    Verify {
        #[arg(long, value_enum, default_value_t = LevelArg::Quick)]
        level: LevelArg,
        #[arg(long, hide = true)]
        tamper: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Plans over an (alpha, g) grid.
    Sweep {
        /// Comma-separated alpha values.
        #[arg(long, value_delimiter = ',', required = true)]
        alpha: Vec<String>,
        /// Comma-separated genus values.
        #[arg(long, value_delimiter = ',', required = true, value_parser = parse_genus)]
        g: Vec<u64>,
        #[arg(long, default_value = "0.5")]
        epsilon: String,
        #[arg(long, value_enum, default_value_t = ModeArg::Optimized)]
        mode: ModeArg,
        #[arg(long, action = ArgAction::Set, num_args = 0..=1, default_value_t = true, default_missing_value = "true")]
        search: bool,
        #[arg(long, default_value_t = DEFAULT_DIGITS)]
        precision: u32,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Accepts `12345`, `1e6` or `10^6`.
fn parse_genus(s: &str) -> Result<u64, String> {
    let s = s.trim();
    if let Ok(v) = s.parse::<u64>() {
        return Ok(v);
    }
    let (mantissa, exponent) = s
        .split_once(['e', 'E'])
        .or_else(|| s.split_once('^').filter(|(b, _)| *b == "10").map(|(_, e)| ("1", e)))
        .ok_or_else(|| format!("not a genus: {s:?}"))?;
    let mantissa: u64 = mantissa.parse().map_err(|_| format!("not a genus: {s:?}"))?;
    let exponent: u32 = exponent.parse().map_err(|_| format!("not a genus: {s:?}"))?;
    10u64
        .checked_pow(exponent)
        .and_then(|p| p.checked_mul(mantissa))
        .ok_or_else(|| format!("genus {s:?} out of range"))
}

fn rational(name: &str, s: &str) -> Result<Rational, Error> {
    s.parse::<Rational>()
        .map_err(|e| Error::InvalidArgument(format!("--{name}: {e}")))
}

fn emit(text: &str, out: Option<&PathBuf>) -> Result<(), Error> {
    let io = |e: io::Error| Error::InvalidArgument(format!("writing output: {e}"));
    match out {
        Some(path) => fs::write(path, text).map_err(io),
        None => io::stdout().write_all(text.as_bytes()).map_err(io),
    }
}

fn run(cli: Cli) -> Result<i32, Error> {
    match cli.command {
        Command::Constants { tolerance, precision, out } => {
            let payload = constants_payload(tolerance, precision)?;
            let env = ReportEnvelope::new(
                "constants",
                inputs([("tolerance", Value::from(tolerance)), ("precision", Value::from(precision))]),
                &payload,
                precision,
            )?;
            emit(&env.to_json(), out.as_ref())?;
            Ok(exit::SUCCESS)
        }
        Command::Plan { g, alpha, epsilon, mode, search, precision, out } => {
            let a = rational("alpha", &alpha)?;
            let e = rational("epsilon", &epsilon)?;
            let planner = Planner::new(precision)?;
            let mode = Mode::from(mode);
            let payload = plan_payload(&planner, g, &a, &e, mode, search)?;
            let env = ReportEnvelope::new(
                "plan",
                inputs([
                    ("g", Value::from(g)),
                    ("alpha", Value::from(alpha)),
                    ("epsilon", Value::from(epsilon)),
                    ("mode", Value::from(mode.to_string())),
                    ("x", Value::from(planner.choose_ratio(mode))),
                    ("search", Value::from(search)),
                    ("precision", Value::from(planner.digits())),
                ]),
                &payload,
                planner.digits(),
            )?;
            emit(&env.to_json(), out.as_ref())?;
            Ok(if payload.feasible { exit::SUCCESS } else { exit::INFEASIBLE })
        }
        Command::Family { p, q, k, cap, out } => {
            let payload = family_payload(p, q, k, cap)?;
            let env = ReportEnvelope::new(
                "family",
                inputs([("p", p as u64), ("q", q as u64), ("k", k as u64), ("cap", cap)]),
                &payload,
                0,
            )?;
            emit(&env.to_json(), out.as_ref())?;
            Ok(exit::SUCCESS)
        }
        Command::Verify { level, tamper, out } => {
            let level = match level {
                LevelArg::Quick => Level::Quick,
                LevelArg::Full => Level::Full,
            };
            let report = run_verify_with(level, VerifyOptions { negate_pair_bound: tamper });
            let mut fields = inputs([("level", Value::from(level.to_string()))]);
            if tamper {
                fields.insert("tamper".into(), Value::from(true));
            }
            let env = ReportEnvelope::new("verify", fields, &report, DEFAULT_DIGITS)?;
            emit(&env.to_json(), out.as_ref())?;
            for suite in report.suites.iter().filter(|s| !s.passed) {
                eprintln!("suite {} failed: {}", suite.name, suite.failures.join("; "));
            }
            Ok(if report.all_passed { exit::SUCCESS } else { exit::CERTIFICATE })
        }
        Command::Sweep { alpha, g, epsilon, mode, search, precision, format, out } => {
            let alpha: Vec<String> = alpha.into_iter().map(|a| a.trim().to_string()).filter(|a| !a.is_empty()).collect();
            let e = rational("epsilon", &epsilon)?;
            let planner = Planner::new(precision)?;
            let mode = Mode::from(mode);
            let payload = sweep_payload(&planner, &alpha, &g, &e, mode, search)?;
            let text = match format {
                Format::Csv => sweep_csv_string(&payload.rows)?,
                Format::Json => ReportEnvelope::new(
                    "sweep",
                    inputs([
                        ("alpha", Value::from(alpha)),
                        ("g", Value::from(g)),
                        ("epsilon", Value::from(epsilon)),
                        ("mode", Value::from(mode.to_string())),
                        ("search", Value::from(search)),
                        ("precision", Value::from(planner.digits())),
                    ]),
                    &payload,
                    planner.digits(),
                )?
                .to_json(),
            };
            emit(&text, out.as_ref())?;
            Ok(exit::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { exit::USAGE } else { exit::SUCCESS };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e) as u8)
        }
    }
}
