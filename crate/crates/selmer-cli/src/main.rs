//! `selmer`: batch front end for twist-family Selmer surveys.
//!
//! Exit status: 0 success, 2 configuration error, 3 verification failure,
//! 4 integrality or normalization abort.

mod commands;
mod config;
mod output;
mod verify;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::{TableArgs, TableKind};
use config::{ConfigError, Overrides, SurveyConfig, Threads};
use verify::Depth;

#[derive(Parser)]
#[command(name = "selmer", version, about = "Selmer orders across quadratic twist families")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// Curve label (11a1, 14a1, 17a1, 20a1, 34a1).
    #[arg(long)]
    curve: Option<String>,
    /// Survey bound M.
    #[arg(long)]
    bound: Option<u64>,
    /// Comma-separated class representatives.
    #[arg(long)]
    classes: Option<String>,
    /// Checkpoint spacing.
    #[arg(long)]
    step: Option<u64>,
    /// Spacing of the ε search grid.
    #[arg(long)]
    epsilon_step: Option<f64>,
    /// Output file, or directory for `survey`; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads, or "auto".
    #[arg(long)]
    threads: Option<String>,
    /// Flat `key = value` configuration file; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Baseline overrides, `curve.n0.field = value` per line.
    #[arg(long)]
    overrides: Option<PathBuf>,
}

impl Common {
    fn load(&self) -> anyhow::Result<SurveyConfig> {
        let flags = Overrides {
            curve: self.curve.clone(),
            bound: self.bound,
            classes: self.classes.clone(),
            step: self.step,
            epsilon_step: self.epsilon_step,
            out: self.out.clone(),
            threads: self.threads.clone(),
            overrides: self.overrides.clone(),
        };
        SurveyConfig::load(self.config.as_deref(), &flags)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Write n,a_n for squarefree n up to the bound.
    Expand(Common),
    /// Survey every class: per-class CSV plus a JSON summary.
    Survey(Common),
    /// Fit α and ε for every class and k.
    Fit {
        #[command(flatten)]
        common: Common,
        /// Only k up to this value.
        #[arg(long)]
        kmax: Option<u64>,
        /// Quotient fit between two series, `n0:k/n0:k`; repeatable.
        #[arg(long)]
        quotient: Vec<String>,
    },
    /// Run the oracle suites; machine-readable report on stdout or --out.
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "quick")]
        depth: Depth,
    },
    /// Plottable x, s/x, σ(x) columns for one class and k.
    PlotData {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        n0: u64,
        #[arg(long)]
        k: u64,
        /// σ parameters; fitted when omitted.
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        epsilon: Option<f64>,
    },
    /// Text tables: ratio rows for one (n0, k), or the α grid.
    Tables {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "alpha")]
        kind: TableKind,
        #[arg(long)]
        n0: Option<u64>,
        #[arg(long)]
        k: Option<u64>,
        #[arg(long, default_value_t = 0.005)]
        epsilon: f64,
        /// Comma-separated M values for the ratio table.
        #[arg(long)]
        rows: Option<String>,
        #[arg(long, default_value_t = 361)]
        kmax: u64,
    },
}

/// A verification suite failed; exits with status 3.
#[derive(Debug)]
struct VerificationFailed(usize);

impl std::fmt::Display for VerificationFailed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} verification suite(s) failed", self.0)
    }
}

impl std::error::Error for VerificationFailed {}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<ConfigError>() {
            return 2;
        }
        if cause.is::<VerificationFailed>() {
            return 3;
        }
        if let Some(e) = cause.downcast_ref::<selmer::Error>() {
            return match e {
                selmer::Error::NotInCatalog(_)
                | selmer::Error::UnknownClass { .. }
                | selmer::Error::InvalidClass { .. }
                | selmer::Error::Domain(_)
                | selmer::Error::Range { .. } => 2,
                selmer::Error::Integrality { .. } | selmer::Error::Normalization(_) | selmer::Error::Cassels(_) => 4,
                _ => 1,
            };
        }
    }
    1
}

fn init_threads(cfg: &SurveyConfig) -> anyhow::Result<()> {
    if let Threads::Fixed(n) = cfg.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let common = match &cli.command {
        Command::Expand(c) | Command::Survey(c) => c,
        Command::Fit { common, .. }
        | Command::Verify { common, .. }
        | Command::PlotData { common, .. }
        | Command::Tables { common, .. } => common,
    };
    let cfg = common.load()?;
    init_threads(&cfg)?;
    let out = common.out.as_deref();
    match &cli.command {
        Command::Expand(_) => commands::expand(&cfg, out),
        Command::Survey(_) => commands::survey(&cfg),
        Command::Fit { kmax, quotient, .. } => commands::fit(&cfg, *kmax, quotient, out),
        Command::Verify { depth, .. } => {
            let reports = verify::run(&cfg.curve_specs()?, *depth);
            for r in &reports {
                eprintln!(
                    "{:<4} {:<15} {:<5} {}",
                    if r.passed { "PASS" } else { "FAIL" },
                    r.suite,
                    r.curve,
                    r.detail
                );
                for f in &r.failures {
                    eprintln!("       {f}");
                }
            }
            let failed = reports.iter().filter(|r| !r.passed).count();
            let mut w = output::sink(out)?;
            serde_json::to_writer_pretty(
                &mut w,
                &serde_json::json!({
                    "schema_version": output::SCHEMA_VERSION,
                    "depth": depth,
                    "passed": failed == 0,
                    "suites": reports,
                }),
            )?;
            writeln!(w)?;
            w.flush()?;
            if failed > 0 {
                return Err(VerificationFailed(failed).into());
            }
            Ok(())
        }
        Command::PlotData {
            n0, k, alpha, epsilon, ..
        } => commands::plot_data(&cfg, *n0, *k, *alpha, *epsilon, out),
        Command::Tables {
            kind,
            n0,
            k,
            epsilon,
            rows,
            kmax,
            ..
        } => {
            let rows = rows.as_deref().map(config::parse_classes).transpose()?;
            let args = TableArgs {
                kind: *kind,
                n0: *n0,
                k: *k,
                epsilon: *epsilon,
                rows,
                kmax: *kmax,
            };
            commands::tables(&cfg, &args, out)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
