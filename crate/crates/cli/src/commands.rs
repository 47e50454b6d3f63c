//! Command implementations and their reports.

use std::io::Read;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use normtest::inference::{confidence_interval, estimate_delta, validation_test, ConfidenceInterval, DeltaEstimate, ValidationDecision};
use normtest::mc::RunControl;
use normtest::nulldist::{mc_null_samples, pvalue_from_replicates, CriticalValueTable, LimitSamplerConfig, SampleSize};
use normtest::samplers::AlternativeSpec;
use normtest::study::{coverage_study, power_study, CoverageConfig, CoverageReport, PowerConfig, PowerReport, TestStatistic};
use normtest::{scaled_residuals, t_statistic, DataMatrix, TuningParameter};

use crate::output::{Cell, Report};

/// Whether the first CSV record is a header.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum HeaderMode {
    /// Treat the first record as a header when any cell is not a number.
    Auto,
    Yes,
    No,
}

pub fn read_data(path: &Path, header: HeaderMode, delimiter: u8) -> Result<DataMatrix> {
    let mut text = String::new();
    if path == Path::new("-") {
        std::io::stdin().read_to_string(&mut text)?;
    } else {
        text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    }
    let has_header = match header {
        HeaderMode::Yes => true,
        HeaderMode::No => false,
        HeaderMode::Auto => text
            .lines()
            .find(|l| !l.trim().is_empty())
            .is_some_and(|l| l.split(delimiter as char).any(|c| c.trim().trim_matches('"').parse::<f64>().is_err())),
    };
    DataMatrix::read_csv(text.as_bytes(), has_header, delimiter).with_context(|| format!("parsing {}", path.display()))
}

pub fn tuning_list(values: &[f64]) -> Result<Vec<TuningParameter>> {
    if values.is_empty() {
        bail!("at least one tuning parameter --a is required");
    }
    Ok(values.iter().map(|&a| TuningParameter::new(a)).collect::<normtest::Result<_>>()?)
}

pub fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        bail!("--alpha must lie in (0, 1), got {alpha}");
    }
    Ok(())
}

pub fn check_reps(reps: usize) -> Result<()> {
    if reps == 0 {
        bail!("--reps must be at least 1");
    }
    Ok(())
}

pub fn run_control(checkpoint: Option<PathBuf>, quiet: bool) -> RunControl {
    let progress: Option<normtest::mc::ProgressFn> = if quiet {
        None
    } else {
        Some(Arc::new(|label: &str, done: usize, total: usize| {
            eprintln!("progress {done}/{total} [{label}]");
        }))
    };
    RunControl { checkpoint, progress }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestEntry {
    pub a: f64,
    pub statistic: f64,
    /// `d^{-2} (a/π)^{d/2} T`, the scale of the critical-value tables.
    pub scaled: f64,
    pub p_value: f64,
    pub reject: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub input: String,
    pub n: usize,
    pub d: usize,
    pub alpha: f64,
    pub replications: usize,
    pub seed: u64,
    pub results: Vec<TestEntry>,
}

impl Report for TestReport {
    fn columns(&self) -> Vec<String> {
        ["a", "n", "d", "statistic", "scaled", "p_value", "alpha", "reject"].map(String::from).to_vec()
    }

    fn rows(&self) -> Vec<Vec<Cell>> {
        self.results
            .iter()
            .map(|e| {
                vec![e.a.into(), self.n.into(), self.d.into(), e.statistic.into(), e.scaled.into(), e.p_value.into(), self.alpha.into(), e.reject.into()]
            })
            .collect()
    }
}

/// Statistic and parametric Monte Carlo p-value for every `a`, all p-values
/// sharing the same simulated null samples.
pub fn test(input: &Path, data: &DataMatrix, a_values: &[TuningParameter], alpha: f64, reps: usize, seed: u64, control: &RunControl) -> Result<TestReport> {
    check_alpha(alpha)?;
    check_reps(reps)?;
    let sample = scaled_residuals(data)?;
    let null = mc_null_samples(sample.d(), sample.n(), a_values, reps, seed, control)?;
    let results = a_values
        .iter()
        .zip(&null)
        .map(|(&a, replicates)| {
            let value = t_statistic(&sample, a);
            let p_value = pvalue_from_replicates(value.scaled, replicates);
            TestEntry { a: a.value(), statistic: value.value, scaled: value.scaled, p_value, reject: p_value <= alpha }
        })
        .collect();
    Ok(TestReport { input: input.display().to_string(), n: sample.n(), d: sample.d(), alpha, replications: reps, seed, results })
}

impl Report for CriticalValueTable {
    fn columns(&self) -> Vec<String> {
        ["d", "n", "a", "alpha", "quantile", "replications", "seed"].map(String::from).to_vec()
    }

    fn rows(&self) -> Vec<Vec<Cell>> {
        self.entries
            .iter()
            .map(|e| vec![e.d.into(), e.n.to_string().into(), e.a.into(), e.alpha.into(), e.quantile.into(), e.replications.into(), e.seed.into()])
            .collect()
    }
}

#[allow(clippy::too_many_arguments)]
pub fn crit_table(
    dims: &[usize],
    sizes: &[SampleSize],
    a_values: &[TuningParameter],
    alphas: &[f64],
    reps: usize,
    seed: u64,
    limit: LimitSamplerConfig,
    control: &RunControl,
) -> Result<CriticalValueTable> {
    alphas.iter().try_for_each(|&a| check_alpha(a))?;
    check_reps(reps)?;
    if dims.is_empty() || sizes.is_empty() || alphas.is_empty() {
        bail!("--d, --n and --alpha each need at least one value");
    }
    let finite: Vec<usize> = sizes
        .iter()
        .filter_map(|s| match s {
            SampleSize::Finite(n) => Some(*n),
            SampleSize::Infinite => None,
        })
        .collect();
    let mut table = CriticalValueTable::default();
    if !finite.is_empty() {
        table.extend(CriticalValueTable::simulate(dims, &finite, a_values, alphas, reps, seed, control)?);
    }
    if sizes.contains(&SampleSize::Infinite) {
        table.extend(CriticalValueTable::limit_rows(dims, a_values, alphas, &limit)?);
    }
    Ok(table)
}

pub fn limit_quantiles(dims: &[usize], a_values: &[TuningParameter], alphas: &[f64], config: LimitSamplerConfig) -> Result<CriticalValueTable> {
    alphas.iter().try_for_each(|&a| check_alpha(a))?;
    if dims.is_empty() || alphas.is_empty() {
        bail!("--d and --alpha each need at least one value");
    }
    Ok(CriticalValueTable::limit_rows(dims, a_values, alphas, &config)?)
}

impl Report for PowerReport {
    fn columns(&self) -> Vec<String> {
        std::iter::once("alternative".to_string()).chain(self.config.statistics.iter().map(ToString::to_string)).collect()
    }

    fn rows(&self) -> Vec<Vec<Cell>> {
        let critical = std::iter::once(Cell::from("critical_value")).chain(self.critical_values.iter().map(|&c| c.into())).collect();
        std::iter::once(critical)
            .chain(self.rows.iter().map(|r| std::iter::once(Cell::from(r.alternative.clone())).chain(r.power.iter().map(|&p| p.into())).collect()))
            .collect()
    }
}

#[allow(clippy::too_many_arguments)]
pub fn power(
    d: usize,
    n: usize,
    alternatives: &[String],
    a_values: &[f64],
    competitors: &[String],
    alpha: f64,
    reps: usize,
    seed: u64,
    control: &RunControl,
) -> Result<PowerReport> {
    let mut statistics: Vec<TestStatistic> = tuning_list(a_values)?.into_iter().map(TestStatistic::Harmonic).collect();
    for c in competitors {
        statistics.push(TestStatistic::Competitor(c.parse()?));
    }
    let alternatives: Vec<AlternativeSpec> = alternatives
        .iter()
        .map(|s| AlternativeSpec::parse(s, d))
        .collect::<normtest::Result<_>>()?;
    if alternatives.is_empty() {
        bail!("at least one --alt is required");
    }
    let config = PowerConfig { d, n, alpha, replications: reps, seed, statistics };
    Ok(power_study(&config, &alternatives, control)?)
}

impl Report for CoverageReport {
    fn columns(&self) -> Vec<String> {
        ["law", "n", "a", "alpha", "delta", "coverage", "mean_estimate", "mean_width", "replications"].map(String::from).to_vec()
    }

    fn rows(&self) -> Vec<Vec<Cell>> {
        let c = &self.config;
        vec![vec![
            c.law.clone().into(),
            c.n.into(),
            c.a.value().into(),
            c.alpha.into(),
            self.delta.into(),
            self.coverage.into(),
            self.mean_estimate.into(),
            self.mean_width.into(),
            c.replications.into(),
        ]]
    }
}

pub fn coverage(law: &str, n: usize, a: TuningParameter, alpha: f64, reps: usize, seed: u64, control: &RunControl) -> Result<CoverageReport> {
    check_alpha(alpha)?;
    let config = CoverageConfig { law: law.to_string(), n, a, alpha, replications: reps, seed };
    Ok(coverage_study(&config, control)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaReport {
    pub input: String,
    pub estimate: DeltaEstimate,
    pub interval: ConfidenceInterval,
}

impl Report for DeltaReport {
    fn columns(&self) -> Vec<String> {
        ["a", "n", "d", "delta_hat", "sigma_hat", "lower", "upper", "alpha", "sigma_clipped"].map(String::from).to_vec()
    }

    fn rows(&self) -> Vec<Vec<Cell>> {
        let e = &self.estimate;
        vec![vec![
            e.a.into(),
            e.n.into(),
            e.d.into(),
            e.delta_hat.into(),
            e.sigma_hat.into(),
            self.interval.lower.into(),
            self.interval.upper.into(),
            self.interval.alpha.into(),
            e.sigma_clipped.into(),
        ]]
    }
}

pub fn delta_ci(input: &Path, data: &DataMatrix, a: TuningParameter, alpha: f64) -> Result<DeltaReport> {
    let estimate = estimate_delta(&scaled_residuals(data)?, a);
    let interval = confidence_interval(&estimate, alpha)?;
    Ok(DeltaReport { input: input.display().to_string(), estimate, interval })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub input: String,
    pub estimate: DeltaEstimate,
    pub decision: ValidationDecision,
}

impl Report for ValidationReport {
    fn columns(&self) -> Vec<String> {
        ["a", "n", "d", "delta_hat", "sigma_hat", "delta0", "threshold", "alpha", "reject"].map(String::from).to_vec()
    }

    fn rows(&self) -> Vec<Vec<Cell>> {
        let (e, v) = (&self.estimate, &self.decision);
        vec![vec![
            e.a.into(),
            e.n.into(),
            e.d.into(),
            e.delta_hat.into(),
            e.sigma_hat.into(),
            v.delta0.into(),
            v.threshold.into(),
            v.alpha.into(),
            v.reject.into(),
        ]]
    }
}

pub fn validate(input: &Path, data: &DataMatrix, a: TuningParameter, delta0: f64, alpha: f64) -> Result<ValidationReport> {
    let estimate = estimate_delta(&scaled_residuals(data)?, a);
    let decision = validation_test(&estimate, delta0, alpha)?;
    Ok(ValidationReport { input: input.display().to_string(), estimate, decision })
}
