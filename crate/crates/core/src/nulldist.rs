//! Null distribution of the statistic: Monte Carlo critical values and
//! p-values, the covariance kernel of the limiting Gaussian process, a
//! sampler for quantiles of the limit law, and its closed-form mean.

use std::f64::consts::PI;
use std::io::{Read, Write};

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{invalid, Error, Result};
use crate::mc::{self, RunControl};
use crate::standardize::{scaled_residuals, DataMatrix, StandardizedSample};
use crate::statistic::{dot, psi, sq_dist, t_statistic, StatisticValue, TuningParameter};

/// Covariance kernel `K(s, t)` of the limiting Gaussian process under normality.
pub fn kernel_k(s: &[f64], t: &[f64]) -> f64 {
    assert_eq!(s.len(), t.len(), "kernel arguments must share a dimension");
    let d = s.len() as f64;
    let d2 = d + 2.0;
    let d4 = d + 4.0;
    let ss = dot(s, s);
    let tt = dot(t, t);
    let st = dot(s, t);
    let diff = sq_dist(s, t);
    let local = (-0.5 * diff).exp() * ((diff - d2).powi(2) - 2.0 * d2);
    let bracket = -0.5 * st * st * (ss - d4) * (tt - d4) + 2.0 * d2 * (ss + tt)
        - ss * ss
        - tt * tt
        - ss * tt
        - st * (ss - d2) * (tt - d2)
        - d * d2;
    local + psi(s) * psi(t) * bracket
}

/// The summand `h(x, t)` whose covariance under `N(0, I)` is `K(s, t)`.
#[cfg(test)]
pub(crate) fn h_function(x: &[f64], t: &[f64]) -> f64 {
    let r = dot(x, x);
    let tx = dot(t, x);
    let tt = dot(t, t);
    let p = psi(t);
    let m = crate::inference::m_func(t);
    r * crate::statistic::cs_plus(t, x) - (2.0 * p + m) * tx - p * r + (2.0 * p + 0.5 * m) * tx * tx - (p + 0.5 * m) * tt
}

/// Draws an `n x d` matrix of independent standard normals.
pub fn standard_normal_data<R: Rng + ?Sized>(rng: &mut R, n: usize, d: usize) -> DataMatrix {
    let values: Vec<f64> = (0..n * d).map(|_| StandardNormal.sample(rng)).collect();
    DataMatrix::from_row_major(n, d, &values).expect("normal draws are finite")
}

fn check_null_config(d: usize, n: usize, reps: usize) -> Result<()> {
    if d == 0 {
        return Err(invalid("dimension must be positive"));
    }
    if n < d + 1 {
        return Err(Error::TooFewObservations { needed: d + 1, got: n, d });
    }
    if reps == 0 {
        return Err(invalid("replications must be positive"));
    }
    Ok(())
}

/// Simulates `reps` standardized normal samples and applies `stat` to each.
/// Row `i` of the result belongs to replication `i`.
pub fn null_replicates<F>(
    d: usize,
    n: usize,
    reps: usize,
    seed: u64,
    key: &str,
    control: &RunControl,
    stat: F,
) -> Result<Vec<Vec<f64>>>
where
    F: Fn(&StandardizedSample) -> Vec<f64> + Sync,
{
    check_null_config(d, n, reps)?;
    let key = format!("{key};d={d};n={n};reps={reps};seed={seed}");
    mc::run_chunked(&key, seed, reps, control, |rng, _| {
        let sample = scaled_residuals(&standard_normal_data(rng, n, d))?;
        Ok(stat(&sample))
    })
}

/// Sorted scaled null statistics for several tuning parameters, computed on
/// the same simulated samples. Entry `i` belongs to `a_values[i]`.
pub fn mc_null_samples(
    d: usize,
    n: usize,
    a_values: &[TuningParameter],
    reps: usize,
    seed: u64,
    control: &RunControl,
) -> Result<Vec<Vec<f64>>> {
    let label: Vec<String> = a_values.iter().map(|a| a.value().to_string()).collect();
    let rows = null_replicates(d, n, reps, seed, &format!("T;a={}", label.join("/")), control, |s| {
        a_values.iter().map(|&a| t_statistic(s, a).scaled).collect()
    })?;
    Ok(columns_sorted(&rows, a_values.len()))
}

/// Sorted scaled null statistic for one tuning parameter.
pub fn mc_null_sample(d: usize, n: usize, a: TuningParameter, reps: usize, seed: u64) -> Result<Vec<f64>> {
    Ok(mc_null_samples(d, n, &[a], reps, seed, &RunControl::default())?.remove(0))
}

pub(crate) fn columns_sorted(rows: &[Vec<f64>], width: usize) -> Vec<Vec<f64>> {
    (0..width)
        .map(|c| {
            let mut col: Vec<f64> = rows.iter().map(|r| r[c]).collect();
            col.sort_by(f64::total_cmp);
            col
        })
        .collect()
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(invalid(format!("alpha must lie in (0, 1), got {alpha}")))
    }
}

/// The `⌈(1-α)N⌉`-th order statistic of an ascending sample.
pub fn critical_value(sorted: &[f64], alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if sorted.is_empty() {
        return Err(Error::EmptyInput);
    }
    debug_assert!(sorted.windows(2).all(|w| w[0] <= w[1]), "sample must be sorted");
    let n = sorted.len() as f64;
    // guard against (1 - α)N landing a rounding error above an integer
    let rank = ((1.0 - alpha) * n - 1e-9).ceil().max(1.0) as usize;
    Ok(sorted[rank.min(sorted.len()) - 1])
}

/// `(1 + #{replicates ≥ observed}) / (R + 1)`.
pub fn pvalue_from_replicates(observed: f64, replicates: &[f64]) -> f64 {
    let exceed = replicates.iter().filter(|&&x| x >= observed).count();
    (1 + exceed) as f64 / (replicates.len() + 1) as f64
}

/// Parametric Monte Carlo p-value of an observed statistic under `N_d(0, I)`.
pub fn pvalue_mc(observed: &StatisticValue, reps: usize, seed: u64) -> Result<f64> {
    let a = TuningParameter::new(observed.a)?;
    let null = mc_null_sample(observed.d, observed.n, a, reps, seed)?;
    Ok(pvalue_from_replicates(observed.scaled, &null))
}

/// Settings of the limit-quantile sampler.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitSamplerConfig {
    /// Number of random support points.
    pub m: usize,
    /// Number of replicates of the limit statistic.
    pub ell: usize,
    pub seed: u64,
    /// Diagonal jitter, relative to `trace / m`.
    pub jitter: f64,
}

impl Default for LimitSamplerConfig {
    fn default() -> Self {
        Self { m: 1000, ell: 100_000, seed: 1, jitter: 1e-10 }
    }
}

impl LimitSamplerConfig {
    fn validate(&self) -> Result<()> {
        if self.m < 2 {
            return Err(invalid("limit sampler needs at least 2 support points"));
        }
        if self.ell == 0 {
            return Err(invalid("limit sampler needs at least one replicate"));
        }
        if !(self.jitter >= 0.0 && self.jitter.is_finite()) {
            return Err(invalid("jitter must be nonnegative"));
        }
        Ok(())
    }
}

/// Negative eigenvalues below this fraction of the largest indicate a kernel
/// matrix that is not PSD beyond rounding.
const PSD_TOLERANCE: f64 = 1e-8;

/// Finite-dimensional approximation of the limiting Gaussian process on a set
/// of support points, reduced to the spectrum of its covariance matrix.
#[derive(Debug, Clone)]
pub struct LimitSampler {
    d: usize,
    m: usize,
    spectrum: Vec<f64>,
}

impl LimitSampler {
    /// Draws `config.m` support points from `N_d(0, (2a)^{-1} I)`.
    pub fn new(d: usize, a: TuningParameter, config: &LimitSamplerConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = mc::stream_rng(mc::derive_seed(config.seed, 0), 0);
        let sd = (2.0 * a.value()).sqrt().recip();
        let points: Vec<Vec<f64>> = (0..config.m)
            .map(|_| (0..d).map(|_| sd * rng.sample::<f64, _>(StandardNormal)).collect())
            .collect();
        Self::from_support(&points, config.jitter)
    }

    /// Builds the sampler on explicit support points.
    pub fn from_support(points: &[Vec<f64>], jitter: f64) -> Result<Self> {
        let m = points.len();
        if m < 2 {
            return Err(invalid("limit sampler needs at least 2 support points"));
        }
        let d = points[0].len();
        let mut cov = DMatrix::zeros(m, m);
        for i in 0..m {
            for j in i..m {
                let k = kernel_k(&points[i], &points[j]);
                cov[(i, j)] = k;
                cov[(j, i)] = k;
            }
        }
        let trace = cov.trace();
        let eigen = cov.symmetric_eigenvalues();
        let max = eigen.max();
        let min = eigen.min();
        if min < -PSD_TOLERANCE * max.abs().max(f64::MIN_POSITIVE) {
            return Err(Error::KernelNotPsd { min_eigenvalue: min, max_eigenvalue: max });
        }
        let shift = jitter * trace / m as f64;
        let spectrum = eigen.iter().map(|&l| l.max(0.0) + shift).collect();
        Ok(Self { d, m, spectrum })
    }

    /// Repaired eigenvalues of the kernel matrix.
    pub fn spectrum(&self) -> &[f64] {
        &self.spectrum
    }

    /// One replicate `‖X‖² / (d² m)` with `X ~ N(0, Σ_K)`. The squared norm
    /// only depends on the spectrum, so `Σ λ_i ξ_i²` is drawn directly.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let sum: f64 = self
            .spectrum
            .iter()
            .map(|&l| {
                let xi: f64 = StandardNormal.sample(rng);
                l * xi * xi
            })
            .sum();
        sum / ((self.d * self.d) as f64 * self.m as f64)
    }

    /// `ell` sorted replicates.
    pub fn sample(&self, ell: usize, seed: u64) -> Vec<f64> {
        let mut z = mc::replicate(mc::derive_seed(seed, 1), ell, |rng, _| self.draw(rng));
        z.sort_by(f64::total_cmp);
        z
    }
}

/// Approximate `(1-α)`-quantile of the scaled limit null statistic.
pub fn limit_quantile(d: usize, a: TuningParameter, alpha: f64, config: &LimitSamplerConfig) -> Result<f64> {
    check_alpha(alpha)?;
    let sampler = LimitSampler::new(d, a, config)?;
    critical_value(&sampler.sample(config.ell, config.seed), alpha)
}

/// Mean of the (unscaled) limit null statistic `∫ Z(t)² w_a(t) dt`.
pub fn expected_limit(d: usize, a: f64) -> f64 {
    let d = d as f64;
    let c = |j: f64| PI.powf(d / 2.0) * d / (a + 1.0).powf(d / 2.0 + j);
    d * (d + 2.0) * ((PI / a).powf(d / 2.0) - (PI / (a + 1.0)).powf(d / 2.0))
        - c(4.0) * (d + 2.0) * (d + 4.0) * (d + 6.0) / 32.0
        + c(3.0) * (d + 2.0) * (d + 3.0) * (d + 4.0) / 8.0
        - c(2.0) * (d + 2.0) * (d * d + 4.0 * d + 14.0) / 8.0
        - c(1.0) * (d - 2.0) * (d + 2.0) / 2.0
}

/// Sample size of a table row; `Infinite` marks limit-distribution rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SampleSize {
    Finite(usize),
    Infinite,
}

impl std::fmt::Display for SampleSize {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SampleSize::Finite(n) => write!(f, "{n}"),
            SampleSize::Infinite => f.write_str("inf"),
        }
    }
}

impl std::str::FromStr for SampleSize {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "Inf" | "infinity" | "∞" => Ok(SampleSize::Infinite),
            other => other
                .parse()
                .map(SampleSize::Finite)
                .map_err(|_| Error::Parse { what: "sample size", detail: other.to_string() }),
        }
    }
}

impl Serialize for SampleSize {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            SampleSize::Finite(n) => serializer.serialize_u64(*n as u64),
            SampleSize::Infinite => serializer.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for SampleSize {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct Visitor;
        impl de::Visitor<'_> for Visitor {
            type Value = SampleSize;
            fn expecting(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
                f.write_str("a sample size or \"inf\"")
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<SampleSize, E> {
                Ok(SampleSize::Finite(v as usize))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<SampleSize, E> {
                usize::try_from(v).map(SampleSize::Finite).map_err(E::custom)
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<SampleSize, E> {
                if v == f64::INFINITY {
                    Ok(SampleSize::Infinite)
                } else if v >= 0.0 && v.fract() == 0.0 && v <= usize::MAX as f64 {
                    Ok(SampleSize::Finite(v as usize))
                } else {
                    Err(E::custom(format!("invalid sample size {v}")))
                }
            }
            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<SampleSize, E> {
                v.parse().map_err(E::custom)
            }
        }
        deserializer.deserialize_any(Visitor)
    }
}

/// One quantile of the scaled statistic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalValueEntry {
    pub d: usize,
    pub n: SampleSize,
    pub a: f64,
    pub alpha: f64,
    pub quantile: f64,
    pub replications: usize,
    pub seed: u64,
}

/// Table of simulated quantiles indexed by `(d, n, a, α)`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CriticalValueTable {
    pub entries: Vec<CriticalValueEntry>,
}

impl CriticalValueTable {
    /// Simulates every `(d, n)` cell for all `a` and `α`. Each cell uses a
    /// seed derived from `(seed, d, n)` so cells are reproducible in isolation.
    #[allow(clippy::too_many_arguments)]
    pub fn simulate(
        dims: &[usize],
        sizes: &[usize],
        a_values: &[TuningParameter],
        alphas: &[f64],
        reps: usize,
        seed: u64,
        control: &RunControl,
    ) -> Result<Self> {
        for &alpha in alphas {
            check_alpha(alpha)?;
        }
        let mut entries = Vec::new();
        for &d in dims {
            for &n in sizes {
                let cell_seed = cell_seed(seed, d, n);
                let cell_control = RunControl {
                    checkpoint: control.checkpoint.as_ref().map(|p| {
                        let stem = p.file_stem().and_then(|s| s.to_str()).unwrap_or("checkpoint");
                        p.with_file_name(format!("{stem}.d{d}.n{n}.json"))
                    }),
                    progress: control.progress.clone(),
                };
                let sorted = mc_null_samples(d, n, a_values, reps, cell_seed, &cell_control)?;
                for (a, column) in a_values.iter().zip(&sorted) {
                    for &alpha in alphas {
                        entries.push(CriticalValueEntry {
                            d,
                            n: SampleSize::Finite(n),
                            a: a.value(),
                            alpha,
                            quantile: critical_value(column, alpha)?,
                            replications: reps,
                            seed: cell_seed,
                        });
                    }
                }
            }
        }
        Ok(Self { entries })
    }

    /// Rows for `n = ∞` from the limit sampler.
    pub fn limit_rows(
        dims: &[usize],
        a_values: &[TuningParameter],
        alphas: &[f64],
        config: &LimitSamplerConfig,
    ) -> Result<Self> {
        let mut entries = Vec::new();
        for &d in dims {
            for &a in a_values {
                let sampler = LimitSampler::new(d, a, config)?;
                let z = sampler.sample(config.ell, config.seed);
                for &alpha in alphas {
                    check_alpha(alpha)?;
                    entries.push(CriticalValueEntry {
                        d,
                        n: SampleSize::Infinite,
                        a: a.value(),
                        alpha,
                        quantile: critical_value(&z, alpha)?,
                        replications: config.ell,
                        seed: config.seed,
                    });
                }
            }
        }
        Ok(Self { entries })
    }

    pub fn extend(&mut self, other: CriticalValueTable) {
        self.entries.extend(other.entries);
    }

    pub fn lookup(&self, d: usize, n: SampleSize, a: f64, alpha: f64) -> Option<f64> {
        self.entries
            .iter()
            .find(|e| e.d == d && e.n == n && e.a == a && e.alpha == alpha)
            .map(|e| e.quantile)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for e in &self.entries {
            w.serialize(e)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let entries = r.deserialize().collect::<std::result::Result<Vec<CriticalValueEntry>, _>>()?;
        Ok(Self { entries })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Seed of one `(d, n)` cell of a table.
pub fn cell_seed(seed: u64, d: usize, n: usize) -> u64 {
    mc::derive_seed(mc::derive_seed(seed, d as u64), n as u64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{QuadratureSpec, WeightedGrid};
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn kernel_vanishes_at_origin_and_is_symmetric() {
        for d in 1..6 {
            assert_eq!(kernel_k(&vec![0.0; d], &vec![0.0; d]), 0.0);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for d in 1..5 {
            for _ in 0..20 {
                let s: Vec<f64> = (0..d).map(|_| 2.0 * rng.sample::<f64, _>(StandardNormal)).collect();
                let t: Vec<f64> = (0..d).map(|_| 2.0 * rng.sample::<f64, _>(StandardNormal)).collect();
                assert_relative_eq!(kernel_k(&s, &t), kernel_k(&t, &s), max_relative = 1e-13, epsilon = 1e-15);
            }
        }
    }

    /// Exact `E[h(X,s) h(X,t)]` for `X ~ N(0, I_2)` by Gauss–Hermite quadrature.
    #[test]
    fn kernel_is_covariance_of_h() {
        let grid = WeightedGrid::gaussian(2, 0.5, QuadratureSpec::new(60));
        let norm = 1.0 / (2.0 * PI);
        for (s, t) in [([0.3, -0.7], [1.1, 0.4]), ([0.9, 0.2], [0.9, 0.2]), ([-1.5, 0.5], [0.2, 0.1])] {
            let mean_s = norm * grid.integrate(|x| h_function(x, &s));
            let cross = norm * grid.integrate(|x| h_function(x, &s) * h_function(x, &t));
            assert!(mean_s.abs() < 1e-10, "h should be centred, got {mean_s}");
            assert_relative_eq!(cross, kernel_k(&s, &t), max_relative = 1e-9, epsilon = 1e-11);
        }
    }

    #[test]
    fn kernel_matches_simulated_covariance() {
        let s = [0.4, -0.2, 0.8];
        let t = [-0.5, 0.3, 0.1];
        let draws = 100_000;
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let products: Vec<f64> = (0..draws)
            .map(|_| {
                let x: Vec<f64> = (0..3).map(|_| StandardNormal.sample(&mut rng)).collect();
                h_function(&x, &s) * h_function(&x, &t)
            })
            .collect();
        let mean = products.iter().sum::<f64>() / draws as f64;
        let var = products.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / (draws - 1) as f64;
        let se = (var / draws as f64).sqrt();
        assert!((mean - kernel_k(&s, &t)).abs() < 3.0 * se, "mean {mean} kernel {} se {se}", kernel_k(&s, &t));
    }

    #[test]
    fn order_statistic_convention() {
        let xs: Vec<f64> = (1..=10).map(f64::from).collect();
        assert_eq!(critical_value(&xs, 0.1).unwrap(), 9.0);
        assert_eq!(critical_value(&xs, 0.5).unwrap(), 5.0);
        assert_eq!(critical_value(&xs, 0.05).unwrap(), 10.0);
        assert!(critical_value(&[], 0.1).is_err());
        assert!(critical_value(&xs, 1.0).is_err());
    }

    #[test]
    fn normal_quantile_from_order_statistic() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let mut xs: Vec<f64> = (0..100_000).map(|_| StandardNormal.sample(&mut rng)).collect();
        xs.sort_by(f64::total_cmp);
        assert!((critical_value(&xs, 0.05).unwrap() - 1.645).abs() < 0.02);
    }

    #[test]
    fn pvalue_extremes() {
        let reps = [1.0, 2.0, 3.0];
        assert_eq!(pvalue_from_replicates(f64::NEG_INFINITY, &reps), 1.0);
        assert_eq!(pvalue_from_replicates(10.0, &reps), 0.25);
        assert_eq!(pvalue_from_replicates(2.0, &reps), 0.75);
    }

    #[test]
    fn null_sample_is_reproducible() {
        let a = TuningParameter::new(1.0).unwrap();
        let x = mc_null_sample(2, 15, a, 300, 4).unwrap();
        let y = mc_null_sample(2, 15, a, 300, 4).unwrap();
        assert_eq!(x, y);
        assert!(x.windows(2).all(|w| w[0] <= w[1]));
        assert_ne!(x, mc_null_sample(2, 15, a, 300, 5).unwrap());
    }

    #[test]
    fn multi_parameter_run_matches_single_runs() {
        let a1 = TuningParameter::new(0.5).unwrap();
        let a2 = TuningParameter::new(2.0).unwrap();
        let both = mc_null_samples(1, 10, &[a1, a2], 200, 8, &RunControl::default()).unwrap();
        assert_eq!(both[1], mc_null_sample(1, 10, a2, 200, 8).unwrap());
    }

    #[test]
    fn degenerate_support_gives_zero_quantile() {
        let sampler = LimitSampler::from_support(&[vec![0.0], vec![0.0]], 1e-10).unwrap();
        assert!(sampler.spectrum().iter().all(|&l| l == 0.0));
        let z = sampler.sample(100, 1);
        assert!(z.iter().all(|&v| v == 0.0));
        assert_eq!(critical_value(&z, 0.05).unwrap(), 0.0);
    }

    #[test]
    fn repaired_spectrum_is_nonnegative() {
        let a = TuningParameter::new(1.0).unwrap();
        let config = LimitSamplerConfig { m: 200, ell: 10, seed: 3, jitter: 1e-10 };
        let sampler = LimitSampler::new(2, a, &config).unwrap();
        assert!(sampler.spectrum().iter().all(|&l| l > 0.0));
    }

    #[test]
    fn limit_sampler_mean_tracks_expected_limit() {
        // E[Z] = tr(Σ_K)/(d² m) ≈ d^{-2} (a/π)^{d/2} E(T_∞,a)
        let a = TuningParameter::new(1.0).unwrap();
        let config = LimitSamplerConfig { m: 2000, ell: 10, seed: 11, jitter: 0.0 };
        let sampler = LimitSampler::new(1, a, &config).unwrap();
        let mean: f64 = sampler.spectrum().iter().sum::<f64>() / 2000.0;
        let want = (1.0 / PI).sqrt() * expected_limit(1, 1.0);
        assert!((mean - want).abs() < 0.05 * want, "{mean} vs {want}");
    }

    #[test]
    fn expected_limit_reference_values() {
        assert_relative_eq!(expected_limit(1, 1.0), 1.182_893_627_080_063_8, max_relative = 1e-9);
        assert_relative_eq!(expected_limit(2, 1.0), 7.068_583_470_577_035, max_relative = 1e-9);
        for d in 1..7 {
            for a in [0.05, 0.5, 1.0, 3.0, 20.0] {
                assert!(expected_limit(d, a) > 0.0);
            }
        }
    }

    /// `E(T_∞,a) = ∫ K(t,t) w_a(t) dt`, checked by quadrature.
    #[test]
    fn expected_limit_equals_integrated_kernel_diagonal() {
        for (d, a, order) in [(1, 0.3, 200), (1, 2.0, 120), (2, 1.0, 80), (3, 0.5, 40)] {
            let grid = WeightedGrid::gaussian(d, a, QuadratureSpec::new(order));
            let integral = grid.integrate(|t| kernel_k(t, t));
            assert_relative_eq!(expected_limit(d, a), integral, max_relative = 1e-8);
        }
    }

    #[test]
    fn table_serialization_round_trips() {
        let table = CriticalValueTable {
            entries: vec![
                CriticalValueEntry { d: 1, n: SampleSize::Finite(20), a: 0.5, alpha: 0.05, quantile: 2.1, replications: 10, seed: 3 },
                CriticalValueEntry { d: 2, n: SampleSize::Infinite, a: 3.0, alpha: 0.05, quantile: 0.598_123_456_789_012_3, replications: 7, seed: 4 },
            ],
        };
        let json = table.to_json().unwrap();
        assert!(json.contains("\"inf\""));
        assert_eq!(CriticalValueTable::from_json(&json).unwrap(), table);
        let mut buf = Vec::new();
        table.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("d,n,a,alpha,quantile,replications,seed"));
        assert_eq!(CriticalValueTable::read_csv(buf.as_slice()).unwrap(), table);
    }
}
