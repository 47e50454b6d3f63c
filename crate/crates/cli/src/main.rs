//! `normtest`: run the harmonic oscillator normality test on data files,
//! build critical-value tables, and run power, coverage and inference
//! studies.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand};

use normtest::mc;
use normtest::nulldist::{LimitSamplerConfig, SampleSize};
use normtest::TuningParameter;

use commands::HeaderMode;
use output::{emit, render, Format};

/// Environment variable that overrides `--workers`.
const THREADS_ENV: &str = "NORMTEST_THREADS";

/// Exit status of `validate` when closeness to normality is established.
const EXIT_REJECT: u8 = 2;

#[derive(Parser)]
#[command(name = "normtest", version, about = "Harmonic oscillator test for multivariate normality")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct OutputArgs {
    /// Output format.
    #[arg(long, value_enum, default_value = "table")]
    format: Format,
    /// Write the result to this file instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    /// Master seed of the simulation.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Worker threads; overridden by NORMTEST_THREADS. Results do not depend on it.
    #[arg(long)]
    workers: Option<usize>,
    /// Checkpoint file, updated every 10000 replications and resumed from.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Suppress progress messages on stderr.
    #[arg(long)]
    quiet: bool,
}

#[derive(Args)]
struct InputArgs {
    /// CSV file with one observation per row; `-` reads stdin.
    #[arg(long)]
    input: PathBuf,
    /// Whether the first record is a header.
    #[arg(long, value_enum, default_value = "auto")]
    header: HeaderMode,
    /// Field delimiter.
    #[arg(long, default_value_t = ',')]
    delimiter: char,
}

impl InputArgs {
    fn load(&self) -> Result<normtest::DataMatrix> {
        if !self.delimiter.is_ascii() {
            bail!("--delimiter must be an ASCII character");
        }
        commands::read_data(&self.input, self.header, self.delimiter as u8)
    }
}

#[derive(Args)]
struct LimitArgs {
    /// Support points of the limit sampler.
    #[arg(long, default_value_t = 1000)]
    m: usize,
    /// Replicates drawn from the limit law.
    #[arg(long, default_value_t = 100_000)]
    ell: usize,
    /// Diagonal jitter relative to trace / m.
    #[arg(long, default_value_t = 1e-10)]
    jitter: f64,
}

impl LimitArgs {
    fn config(&self, seed: u64) -> LimitSamplerConfig {
        LimitSamplerConfig { m: self.m, ell: self.ell, seed, jitter: self.jitter }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Test a data set for normality with Monte Carlo p-values.
    Test {
        #[command(flatten)]
        input: InputArgs,
        /// Tuning parameters (repeatable or comma separated).
        #[arg(long = "a", value_delimiter = ',', default_value = "1")]
        a: Vec<f64>,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        /// Null replications.
        #[arg(long, default_value_t = 10_000)]
        reps: usize,
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Simulate critical values; `--n inf` adds rows from the limit law.
    CritTable {
        #[arg(long = "d", value_delimiter = ',', required = true)]
        d: Vec<usize>,
        #[arg(long = "n", value_delimiter = ',', required = true)]
        n: Vec<SampleSize>,
        #[arg(long = "a", value_delimiter = ',', required = true)]
        a: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "0.05")]
        alpha: Vec<f64>,
        #[arg(long, default_value_t = 100_000)]
        reps: usize,
        #[command(flatten)]
        limit: LimitArgs,
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Empirical power against alternatives, e.g. `--alt nmix:p=0.1,mu=3,sigma=I`.
    Power {
        #[arg(long = "d")]
        d: usize,
        #[arg(long = "n")]
        n: usize,
        /// Alternatives (repeatable).
        #[arg(long = "alt", required = true)]
        alt: Vec<String>,
        /// Tuning parameters of the harmonic oscillator statistic.
        #[arg(long = "a", value_delimiter = ',', default_value = "1")]
        a: Vec<f64>,
        /// Competing statistics: bhep:a=.., hjg, hv, hvinf, bcmr, be:a=.. (repeatable).
        #[arg(long = "competitor")]
        competitor: Vec<String>,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long, default_value_t = 10_000)]
        reps: usize,
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Coverage of the confidence interval for Delta_a under a symmetric law.
    Coverage {
        /// uniform, laplace, logistic or normal, with optional parameters.
        #[arg(long)]
        law: String,
        #[arg(long = "n")]
        n: usize,
        #[arg(long = "a", default_value_t = 0.1)]
        a: f64,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long, default_value_t = 1000)]
        reps: usize,
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Estimate Delta_a with an asymptotic confidence interval.
    DeltaCi {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long = "a", default_value_t = 1.0)]
        a: f64,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Test Delta_a >= delta0 against Delta_a < delta0. Exit status 0 retains, 2 rejects.
    Validate {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long = "a", default_value_t = 1.0)]
        a: f64,
        #[arg(long)]
        delta0: f64,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Quantiles of the limit null law from the Gaussian process sampler.
    LimitQuantile {
        #[arg(long = "d", value_delimiter = ',', required = true)]
        d: Vec<usize>,
        #[arg(long = "a", value_delimiter = ',', required = true)]
        a: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "0.05")]
        alpha: Vec<f64>,
        #[command(flatten)]
        limit: LimitArgs,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        workers: Option<usize>,
        #[command(flatten)]
        out: OutputArgs,
    },
}

fn worker_count(flag: Option<usize>) -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => bail!("{THREADS_ENV} must be a positive integer, got {v:?}"),
        },
        Err(_) => Ok(flag),
    }
}

fn in_pool<T: Send>(workers: Option<usize>, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    match worker_count(workers)? {
        Some(n) => mc::with_workers(Some(n), f)?,
        None => f(),
    }
}

fn finish<R: output::Report>(report: &R, out: &OutputArgs) -> Result<()> {
    emit(&render(report, out.format)?, out.output.as_deref())
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Test { input, a, alpha, reps, run, out } => {
            let data = input.load()?;
            let a = commands::tuning_list(&a)?;
            let control = commands::run_control(run.checkpoint.clone(), run.quiet);
            let report = in_pool(run.workers, || commands::test(&input.input, &data, &a, alpha, reps, run.seed, &control))?;
            finish(&report, &out)?;
        }
        Command::CritTable { d, n, a, alpha, reps, limit, run, out } => {
            let a = commands::tuning_list(&a)?;
            let control = commands::run_control(run.checkpoint.clone(), run.quiet);
            let config = limit.config(run.seed);
            let table = in_pool(run.workers, || commands::crit_table(&d, &n, &a, &alpha, reps, run.seed, config, &control))?;
            finish(&table, &out)?;
        }
        Command::Power { d, n, alt, a, competitor, alpha, reps, run, out } => {
            let control = commands::run_control(run.checkpoint.clone(), run.quiet);
            let report = in_pool(run.workers, || commands::power(d, n, &alt, &a, &competitor, alpha, reps, run.seed, &control))?;
            finish(&report, &out)?;
        }
        Command::Coverage { law, n, a, alpha, reps, run, out } => {
            let control = commands::run_control(run.checkpoint.clone(), run.quiet);
            let a = TuningParameter::new(a)?;
            let report = in_pool(run.workers, || commands::coverage(&law, n, a, alpha, reps, run.seed, &control))?;
            finish(&report, &out)?;
        }
        Command::DeltaCi { input, a, alpha, out } => {
            let report = commands::delta_ci(&input.input, &input.load()?, TuningParameter::new(a)?, alpha)?;
            finish(&report, &out)?;
        }
        Command::Validate { input, a, delta0, alpha, out } => {
            let report = commands::validate(&input.input, &input.load()?, TuningParameter::new(a)?, delta0, alpha)?;
            finish(&report, &out)?;
            if report.decision.reject {
                return Ok(EXIT_REJECT);
            }
        }
        Command::LimitQuantile { d, a, alpha, limit, seed, workers, out } => {
            let a = commands::tuning_list(&a)?;
            let table = in_pool(workers, || commands::limit_quantiles(&d, &a, &alpha, limit.config(seed)))?;
            finish(&table, &out)?;
        }
    }
    Ok(0)
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
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
