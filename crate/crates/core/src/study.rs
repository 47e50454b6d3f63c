//! Simulation studies: empirical power of the statistic and its competitors
//! against fixed alternatives, and coverage of the asymptotic confidence
//! interval for `Δ_a`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::competitors::Competitor;
use crate::error::{invalid, Error, Result};
use crate::inference::{confidence_interval, delta_a_univariate, estimate_delta};
use crate::mc::{self, RunControl};
use crate::nulldist::{columns_sorted, critical_value, standard_normal_data};
use crate::samplers::{AlternativeSpec, Univariate};
use crate::standardize::{scaled_residuals, StandardizedSample};
use crate::statistic::{t_statistic, TuningParameter};

/// Integration tolerance for the population value of `Δ_a`.
const DELTA_TOLERANCE: f64 = 1e-12;

/// A statistic entering a power comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum TestStatistic {
    /// `T_{n,a}` on the table scale.
    Harmonic(TuningParameter),
    Competitor(Competitor),
}

impl TestStatistic {
    pub fn evaluate(&self, sample: &StandardizedSample) -> Result<f64> {
        match self {
            TestStatistic::Harmonic(a) => Ok(t_statistic(sample, *a).scaled),
            TestStatistic::Competitor(c) => c.evaluate(sample),
        }
    }

    fn check_dimension(&self, d: usize) -> Result<()> {
        match self {
            TestStatistic::Competitor(c) if c.univariate_only() && d != 1 => {
                Err(Error::UnsupportedDimension { d, max: 1 })
            }
            TestStatistic::Competitor(c) => c.validate(),
            TestStatistic::Harmonic(_) => Ok(()),
        }
    }
}

impl fmt::Display for TestStatistic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TestStatistic::Harmonic(a) => write!(f, "T:a={}", a.value()),
            TestStatistic::Competitor(c) => write!(f, "{c}"),
        }
    }
}

impl FromStr for TestStatistic {
    type Err = Error;

    /// `T:a=0.5` or `T(0.5)` for the harmonic statistic, otherwise a competitor.
    fn from_str(text: &str) -> Result<Self> {
        let trimmed = text.trim();
        let rest = trimmed.strip_prefix("T:").or_else(|| trimmed.strip_prefix("t:"));
        let value = match rest {
            Some(r) => Some(r.trim().strip_prefix("a=").unwrap_or(r.trim())),
            None => trimmed
                .strip_prefix("T(")
                .or_else(|| trimmed.strip_prefix("t("))
                .and_then(|r| r.strip_suffix(')')),
        };
        match value {
            Some(v) => {
                let a: f64 = v.trim().parse().map_err(|_| Error::Parse { what: "statistic", detail: text.to_string() })?;
                Ok(TestStatistic::Harmonic(TuningParameter::new(a)?))
            }
            None => Ok(TestStatistic::Competitor(trimmed.parse()?)),
        }
    }
}

impl TryFrom<String> for TestStatistic {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<TestStatistic> for String {
    fn from(s: TestStatistic) -> String {
        s.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerConfig {
    pub d: usize,
    pub n: usize,
    pub alpha: f64,
    pub replications: usize,
    pub seed: u64,
    pub statistics: Vec<TestStatistic>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerRow {
    pub alternative: String,
    /// Rejection rate per statistic, in the order of the configuration.
    pub power: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerReport {
    pub config: PowerConfig,
    /// Simulated null critical value per statistic.
    pub critical_values: Vec<f64>,
    pub rows: Vec<PowerRow>,
}

fn evaluate_all(statistics: &[TestStatistic], sample: &StandardizedSample) -> Result<Vec<f64>> {
    statistics.iter().map(|s| s.evaluate(sample)).collect()
}

fn key_of(config: &PowerConfig, label: &str) -> String {
    let names: Vec<String> = config.statistics.iter().map(ToString::to_string).collect();
    format!(
        "power;{label};d={};n={};reps={};seed={};stats={}",
        config.d,
        config.n,
        config.replications,
        config.seed,
        names.join("|")
    )
}

fn checkpoint_for(control: &RunControl, tag: &str) -> RunControl {
    RunControl {
        checkpoint: control.checkpoint.as_ref().map(|p| {
            let stem = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            p.with_file_name(format!("{stem}.{tag}.json"))
        }),
        progress: control.progress.clone(),
    }
}

/// Null critical values for every statistic of `config`, from samples
/// seeded by `derive_seed(seed, 0)`.
pub fn power_critical_values(config: &PowerConfig, control: &RunControl) -> Result<Vec<f64>> {
    check_power_config(config)?;
    let (d, n) = (config.d, config.n);
    let rows = mc::run_chunked(
        &key_of(config, "null"),
        mc::derive_seed(config.seed, 0),
        config.replications,
        &checkpoint_for(control, "null"),
        |rng, _| evaluate_all(&config.statistics, &scaled_residuals(&standard_normal_data(rng, n, d))?),
    )?;
    columns_sorted(&rows, config.statistics.len())
        .iter()
        .map(|col| critical_value(col, config.alpha))
        .collect()
}

fn check_power_config(config: &PowerConfig) -> Result<()> {
    if config.d == 0 {
        return Err(invalid("dimension must be positive"));
    }
    if config.n < config.d + 1 {
        return Err(Error::TooFewObservations { needed: config.d + 1, got: config.n, d: config.d });
    }
    if config.replications == 0 {
        return Err(invalid("replications must be positive"));
    }
    if !(config.alpha > 0.0 && config.alpha < 1.0) {
        return Err(invalid(format!("alpha must lie in (0, 1), got {}", config.alpha)));
    }
    if config.statistics.is_empty() {
        return Err(invalid("at least one statistic is required"));
    }
    config.statistics.iter().try_for_each(|s| s.check_dimension(config.d))
}

/// Rejection rates against each alternative. Alternative `i` uses samples
/// seeded by `derive_seed(seed, i + 1)`; a statistic rejects when it
/// exceeds its null critical value.
pub fn power_study(config: &PowerConfig, alternatives: &[AlternativeSpec], control: &RunControl) -> Result<PowerReport> {
    for alt in alternatives {
        alt.validate()?;
        if alt.d() != config.d {
            return Err(invalid(format!("alternative {alt} has dimension {}, expected {}", alt.d(), config.d)));
        }
    }
    let critical_values = power_critical_values(config, control)?;
    let mut rows = Vec::with_capacity(alternatives.len());
    for (i, alt) in alternatives.iter().enumerate() {
        let tag = format!("alt{i}");
        let values = mc::run_chunked(
            &key_of(config, &format!("{tag};{alt}")),
            mc::derive_seed(config.seed, i as u64 + 1),
            config.replications,
            &checkpoint_for(control, &tag),
            |rng, _| evaluate_all(&config.statistics, &scaled_residuals(&alt.sample_with(config.n, rng)?)?),
        )?;
        let power = (0..config.statistics.len())
            .map(|s| {
                let rejections = values.iter().filter(|row| row[s] > critical_values[s]).count();
                rejections as f64 / config.replications as f64
            })
            .collect();
        rows.push(PowerRow { alternative: alt.to_string(), power });
    }
    Ok(PowerReport { config: config.clone(), critical_values, rows })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageConfig {
    /// Centred symmetric law with a closed-form characteristic function.
    pub law: String,
    pub n: usize,
    pub a: TuningParameter,
    pub alpha: f64,
    pub replications: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub config: CoverageConfig,
    /// Population value of `Δ_a` for the standardized law.
    pub delta: f64,
    /// Fraction of intervals containing `delta`.
    pub coverage: f64,
    pub mean_estimate: f64,
    pub mean_width: f64,
}

/// `Δ_a` of a centred univariate law after scaling it to unit variance.
pub fn population_delta(law: &Univariate, a: TuningParameter) -> Result<f64> {
    let cf = law
        .cf_second_derivative()
        .ok_or_else(|| invalid(format!("no closed-form characteristic function for {law}")))?;
    let (_, variance) = law.mean_variance().ok_or_else(|| invalid(format!("{law} has no finite variance")))?;
    let sd = variance.sqrt();
    // φ_{X/σ}''(t) = φ_X''(t/σ) / σ²
    delta_a_univariate(|t| cf(t / sd) / variance, a.value(), DELTA_TOLERANCE)
}

/// Empirical coverage of the asymptotic interval for `Δ_a`.
pub fn coverage_study(config: &CoverageConfig, control: &RunControl) -> Result<CoverageReport> {
    let law = crate::samplers::parse_univariate(&config.law)?;
    if config.replications == 0 {
        return Err(invalid("replications must be positive"));
    }
    if config.n < 2 {
        return Err(Error::TooFewObservations { needed: 2, got: config.n, d: 1 });
    }
    let delta = population_delta(&law, config.a)?;
    let spec = AlternativeSpec::Univariate(law);
    let key = format!(
        "coverage;law={};n={};a={};alpha={};reps={};seed={}",
        spec,
        config.n,
        config.a.value(),
        config.alpha,
        config.replications,
        config.seed
    );
    let rows = mc::run_chunked(&key, config.seed, config.replications, control, |rng, _| {
        let sample = scaled_residuals(&spec.sample_with(config.n, rng)?)?;
        let est = estimate_delta(&sample, config.a);
        let ci = confidence_interval(&est, config.alpha)?;
        Ok(vec![est.delta_hat, ci.width(), f64::from(u8::from(ci.contains(delta)))])
    })?;
    let reps = config.replications as f64;
    let mean = |c: usize| rows.iter().map(|r| r[c]).sum::<f64>() / reps;
    Ok(CoverageReport {
        config: config.clone(),
        delta,
        coverage: mean(2),
        mean_estimate: mean(0),
        mean_width: mean(1),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn harmonic(a: f64) -> TestStatistic {
        TestStatistic::Harmonic(TuningParameter::new(a).unwrap())
    }

    #[test]
    fn statistic_names_round_trip() {
        for text in ["T:a=0.5", "T(2)", "bhep:a=0.5", "hvinf", "hjg"] {
            let s: TestStatistic = text.parse().unwrap();
            assert_eq!(s.to_string().parse::<TestStatistic>().unwrap(), s);
        }
        assert_eq!("T:a=0.5".parse::<TestStatistic>().unwrap(), harmonic(0.5));
        assert!("T:a=-1".parse::<TestStatistic>().is_err());
    }

    #[test]
    fn null_rejection_rate_is_near_alpha() {
        let config = PowerConfig {
            d: 2,
            n: 20,
            alpha: 0.1,
            replications: 2000,
            seed: 5,
            statistics: vec![harmonic(1.0), TestStatistic::Competitor(Competitor::Bhep { a: 1.0 })],
        };
        let report = power_study(&config, &[AlternativeSpec::StdNormal { d: 2 }], &RunControl::default()).unwrap();
        for p in &report.rows[0].power {
            // three binomial standard errors
            assert!((p - 0.1).abs() < 3.0 * (0.09f64 / 2000.0).sqrt() * 2f64.sqrt(), "size {p}");
        }
    }

    #[test]
    fn power_study_is_deterministic_and_rejects_mismatched_dimensions() {
        let config = PowerConfig {
            d: 1,
            n: 15,
            alpha: 0.05,
            replications: 300,
            seed: 9,
            statistics: vec![harmonic(1.0), TestStatistic::Competitor(Competitor::Bcmr)],
        };
        let alts = [AlternativeSpec::parse("exp(1)", 1).unwrap()];
        let first = power_study(&config, &alts, &RunControl::default()).unwrap();
        let second = mc::with_workers(Some(3), || power_study(&config, &alts, &RunControl::default())).unwrap().unwrap();
        assert_eq!(first, second);
        assert!(first.rows[0].power.iter().all(|&p| p > 0.3));
        let bad = [AlternativeSpec::parse("normal", 2).unwrap()];
        assert!(power_study(&config, &bad, &RunControl::default()).is_err());
        let multi = PowerConfig { d: 2, ..config };
        assert!(power_critical_values(&multi, &RunControl::default()).is_err());
    }

    #[test]
    fn population_delta_is_scale_free() {
        let a = TuningParameter::new(0.1).unwrap();
        let unit = population_delta(&Univariate::Uniform { low: -3f64.sqrt(), high: 3f64.sqrt() }, a).unwrap();
        let wide = population_delta(&Univariate::Uniform { low: -5.0, high: 5.0 }, a).unwrap();
        assert_relative_eq!(unit, wide, max_relative = 1e-8);
        let normal = population_delta(&Univariate::Normal { mean: 0.0, sd: 2.0 }, a).unwrap();
        assert!(normal.abs() < 1e-12);
        assert!(population_delta(&Univariate::Exponential { rate: 1.0 }, a).is_err());
    }

    #[test]
    fn coverage_report_is_sane() {
        let config = CoverageConfig {
            law: "laplace".into(),
            n: 50,
            a: TuningParameter::new(0.1).unwrap(),
            alpha: 0.05,
            replications: 200,
            seed: 1,
        };
        let report = coverage_study(&config, &RunControl::default()).unwrap();
        assert!(report.coverage > 0.8 && report.coverage <= 1.0);
        assert!(report.mean_width > 0.0);
        assert_relative_eq!(report.delta, 0.127065, epsilon = 1e-5);
    }
}
