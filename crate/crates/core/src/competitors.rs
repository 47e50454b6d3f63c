//! Competing normality statistics used in power comparisons. All of them
//! reject for large values and depend on the data only through the scaled
//! residuals, so they are affine (location-scale in one dimension)
//! invariant.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::normal;
use crate::quadrature::integrate_interval;
use crate::standardize::{scaled_residuals, DataMatrix, StandardizedSample};
use crate::statistic::{dot, mardia_skewness, mrs_skewness, pair_sum, sq_dist, CompensatedSum};

/// Absolute tolerance of the Wasserstein correction integral.
const BCMR_TOLERANCE: f64 = 1e-9;

/// A competing statistic together with its tuning parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Competitor {
    /// Weighted ECF distance with Gaussian weight of width `a`.
    Bhep { a: f64 },
    /// Weighted MGF distance, `beta > 1`.
    Hjg { beta: f64 },
    /// MGF differential characterization, `gamma > 2`.
    Hv { gamma: f64 },
    /// `2 b_{1,d} + 3 b̃_{1,d}`.
    HvInf,
    /// Wasserstein distance to the normal law, univariate.
    Bcmr,
    /// Zero-bias transformation distance, univariate.
    Be { a: f64 },
}

impl Competitor {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Competitor::Bhep { a } | Competitor::Be { a } if !(a > 0.0 && a.is_finite()) => {
                Err(invalid(format!("tuning parameter must be positive, got {a}")))
            }
            Competitor::Hjg { beta } if !(beta > 1.0 && beta.is_finite()) => {
                Err(invalid(format!("HJG requires beta > 1, got {beta}")))
            }
            Competitor::Hv { gamma } if !(gamma > 2.0 && gamma.is_finite()) => {
                Err(invalid(format!("HV requires gamma > 2, got {gamma}")))
            }
            _ => Ok(()),
        }
    }

    pub fn univariate_only(&self) -> bool {
        matches!(self, Competitor::Bcmr | Competitor::Be { .. })
    }

    /// Evaluates the statistic on a standardized sample.
    pub fn evaluate(&self, sample: &StandardizedSample) -> Result<f64> {
        self.validate()?;
        if self.univariate_only() && sample.d() != 1 {
            return Err(Error::UnsupportedDimension { d: sample.d(), max: 1 });
        }
        match *self {
            Competitor::Bhep { a } => Ok(bhep(sample, a)),
            Competitor::Hjg { beta } => Ok(hjg(sample, beta)),
            Competitor::Hv { gamma } => Ok(hv(sample, gamma)),
            Competitor::HvInf => Ok(hv_inf(sample)),
            Competitor::Bcmr => bcmr_residuals(sample.residuals_row_major()),
            Competitor::Be { a } => Ok(be(sample.residuals_row_major(), a)),
        }
    }

    /// Standardizes `x` and evaluates the statistic.
    pub fn evaluate_raw(&self, x: &DataMatrix) -> Result<f64> {
        self.evaluate(&scaled_residuals(x)?)
    }
}

impl fmt::Display for Competitor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Competitor::Bhep { a } => write!(f, "bhep:a={a}"),
            Competitor::Hjg { beta } => write!(f, "hjg:beta={beta}"),
            Competitor::Hv { gamma } => write!(f, "hv:gamma={gamma}"),
            Competitor::HvInf => f.write_str("hvinf"),
            Competitor::Bcmr => f.write_str("bcmr"),
            Competitor::Be { a } => write!(f, "be:a={a}"),
        }
    }
}

impl FromStr for Competitor {
    type Err = Error;

    /// Accepts `name`, `name:key=value` and `name(value)`; HJG defaults to
    /// `beta = 1.5`, HV to `gamma = 5` and BHEP/BE to `a = 1`.
    fn from_str(text: &str) -> Result<Self> {
        let text = text.trim();
        let bad = |detail: &str| Error::Parse { what: "competitor", detail: format!("{text:?}: {detail}") };
        let (name, arg) = if let Some(open) = text.find('(') {
            let inner = text[open + 1..].strip_suffix(')').ok_or_else(|| bad("unbalanced parenthesis"))?;
            (&text[..open], Some(inner.trim()))
        } else if let Some((name, rest)) = text.split_once(':') {
            (name, Some(rest.trim()))
        } else {
            (text, None)
        };
        let value = |keys: &[&str], default: f64| -> Result<f64> {
            let Some(arg) = arg else { return Ok(default) };
            let raw = match arg.split_once('=') {
                Some((k, v)) if keys.contains(&k.trim()) => v.trim(),
                Some((k, _)) => return Err(bad(&format!("unknown parameter {k}"))),
                None => arg,
            };
            raw.parse().map_err(|_| bad("tuning parameter is not a number"))
        };
        let competitor = match name.trim().to_ascii_lowercase().as_str() {
            "bhep" => Competitor::Bhep { a: value(&["a"], 1.0)? },
            "hjg" => Competitor::Hjg { beta: value(&["beta", "b"], 1.5)? },
            "hv" => Competitor::Hv { gamma: value(&["gamma", "g"], 5.0)? },
            "hvinf" | "hv_inf" | "hv-inf" if arg.is_none() => Competitor::HvInf,
            "bcmr" if arg.is_none() => Competitor::Bcmr,
            "be" => Competitor::Be { a: value(&["a"], 1.0)? },
            _ => return Err(bad("unknown competitor")),
        };
        competitor.validate()?;
        Ok(competitor)
    }
}

impl TryFrom<String> for Competitor {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Competitor> for String {
    fn from(c: Competitor) -> String {
        c.to_string()
    }
}

/// Sum over all ordered pairs `(j, k)`, diagonal included, of `f(j, k)`
/// for a symmetric `f`.
fn full_pair_sum(n: usize, f: impl Fn(usize, usize) -> f64) -> f64 {
    let mut diagonal = CompensatedSum::default();
    for j in 0..n {
        diagonal.add(f(j, j));
    }
    diagonal.value() + 2.0 * pair_sum(n, f)
}

/// BHEP statistic with weight parameter `a`.
pub fn bhep(sample: &StandardizedSample, a: f64) -> f64 {
    let n = sample.n();
    let d = sample.d() as f64;
    let a2 = a * a;
    let first = full_pair_sum(n, |j, k| (-0.5 * a2 * sq_dist(sample.residual(j), sample.residual(k))).exp());
    let mut second = CompensatedSum::default();
    for r in sample.norms_sq() {
        second.add((-a2 * r / (2.0 * (1.0 + a2))).exp());
    }
    let nf = n as f64;
    first / (nf * nf) - 2.0 * (1.0 + a2).powf(-d / 2.0) * second.value() / nf + (1.0 + 2.0 * a2).powf(-d / 2.0)
}

fn plus_sq(sample: &StandardizedSample, j: usize, k: usize) -> f64 {
    let (rj, rk) = (sample.norms_sq()[j], sample.norms_sq()[k]);
    rj + rk + 2.0 * dot(sample.residual(j), sample.residual(k))
}

/// HJG statistic, weighted distance of the empirical moment generating
/// function from `exp(‖t‖²/2)` with weight `exp(-beta ‖t‖²)`.
pub fn hjg(sample: &StandardizedSample, beta: f64) -> f64 {
    let n = sample.n();
    let nf = n as f64;
    let d = sample.d() as f64;
    let first = full_pair_sum(n, |j, k| (plus_sq(sample, j, k) / (4.0 * beta)).exp());
    let mut second = CompensatedSum::default();
    for r in sample.norms_sq() {
        second.add((r / (4.0 * beta - 2.0)).exp());
    }
    first / (nf * beta.powf(d / 2.0)) - 2.0 * (beta - 0.5).powf(-d / 2.0) * second.value() + nf * (beta - 1.0).powf(-d / 2.0)
}

/// HV statistic with weight parameter `gamma`.
pub fn hv(sample: &StandardizedSample, gamma: f64) -> f64 {
    let n = sample.n();
    let d = sample.d() as f64;
    let c = 1.0 / (4.0 * gamma * gamma) - 1.0 / (2.0 * gamma);
    let sum = full_pair_sum(n, |j, k| {
        let s = plus_sq(sample, j, k);
        let inner = dot(sample.residual(j), sample.residual(k));
        (s / (4.0 * gamma)).exp() * (inner + s * c + d / (2.0 * gamma))
    });
    (PI / gamma).powf(d / 2.0) * sum / n as f64
}

/// Limit of the HV family as `gamma → ∞`, `2 b_{1,d} + 3 b̃_{1,d}`.
pub fn hv_inf(sample: &StandardizedSample) -> f64 {
    2.0 * mardia_skewness(sample) + 3.0 * mrs_skewness(sample)
}

/// `∫_{1/(n+1)}^{n/(n+1)} t(1-t)/φ(Φ^{-1}(t))² dt`, computed after the
/// substitution `t = Φ(z)`.
fn bcmr_correction(n: usize) -> Result<f64> {
    let nf = n as f64;
    let lo = normal::quantile(1.0 / (nf + 1.0));
    let hi = normal::quantile(nf / (nf + 1.0));
    integrate_interval(|z| normal::cdf(z) * normal::cdf(-z) / normal::pdf(z), lo, hi, BCMR_TOLERANCE)
}

/// BCMR statistic on residuals with mean zero and unit `1/n` variance.
fn bcmr_residuals(y: &[f64]) -> Result<f64> {
    let n = y.len();
    let nf = n as f64;
    let mut sorted = y.to_vec();
    sorted.sort_by(f64::total_cmp);
    let variance = sorted.iter().map(|v| v * v).sum::<f64>() / nf;
    // ∫_{(k-1)/n}^{k/n} Φ^{-1} = φ(Φ^{-1}((k-1)/n)) - φ(Φ^{-1}(k/n))
    let density_at = |k: usize| if k == 0 || k == n { 0.0 } else { normal::pdf(normal::quantile(k as f64 / nf)) };
    let mut projection = CompensatedSum::default();
    for (k, x) in sorted.iter().enumerate() {
        projection.add(x * (density_at(k) - density_at(k + 1)));
    }
    let p = projection.value();
    Ok(nf * (1.0 - p * p / variance) - bcmr_correction(n)?)
}

/// BCMR statistic of a raw univariate sample.
pub fn bcmr(x: &[f64]) -> Result<f64> {
    if x.len() < 2 {
        return Err(Error::TooFewObservations { needed: 2, got: x.len(), d: 1 });
    }
    let sample = scaled_residuals(&DataMatrix::from_column(x)?)?;
    bcmr_residuals(sample.residuals_row_major())
}

/// BE statistic on univariate scaled residuals with tuning parameter `a`.
pub fn be(y: &[f64], a: f64) -> f64 {
    let n = y.len();
    let nf = n as f64;
    let mut sorted = y.to_vec();
    sorted.sort_by(f64::total_cmp);
    let root_a = a.sqrt();
    let c = (a / (2.0 * PI)).sqrt();
    let tail = |v: f64| normal::cdf(-v / root_a);
    let bump = |v: f64| (-v * v / (2.0 * a)).exp();
    let mut pairs = CompensatedSum::default();
    for k in 0..n {
        let yk = sorted[k];
        let (tk, ek) = (tail(yk), bump(yk));
        for &yj in &sorted[..k] {
            pairs.add(
                tk * ((yj * yj - 1.0) * (yk * yk - 1.0) + a * yj * yk) + c * ek * (-yj * yj * yk + yk + yj),
            );
        }
    }
    let mut singles = CompensatedSum::default();
    for &v in y {
        let v2 = v * v;
        singles.add(tail(v) * (v2 * v2 + (a - 2.0) * v2 + 1.0) + c * bump(v) * (2.0 * v - v2 * v));
    }
    2.0 * pairs.value() / nf + singles.value() / nf
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nulldist::standard_normal_data;
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn two_point() -> StandardizedSample {
        scaled_residuals(&DataMatrix::from_column(&[-1.0, 1.0]).unwrap()).unwrap()
    }

    fn random_sample(n: usize, d: usize, seed: u64) -> DataMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = DMatrix::from_fn(n, d, |_, _| rng.random::<f64>().powi(2) * 3.0 - 1.0);
        DataMatrix::from_matrix(m).unwrap()
    }

    #[test]
    fn bhep_two_point_value() {
        let e = std::f64::consts::E;
        let want = 0.25 * (2.0 + 2.0 / (e * e)) - 2f64.sqrt() * (-0.25f64).exp() + 3f64.powf(-0.5);
        assert_relative_eq!(bhep(&two_point(), 1.0), want, max_relative = 1e-14);
        assert_relative_eq!(want, 0.043_627_281_0, epsilon = 1e-10);
    }

    #[test]
    fn hjg_two_point_value() {
        // residuals ±1: sums over pairs give exp(4/6) twice and 1 twice
        let beta: f64 = 1.5;
        let first = (2.0 * (4.0 / (4.0 * beta)).exp() + 2.0) / (2.0 * beta.sqrt());
        let second = 2.0 * (beta - 0.5).powf(-0.5) * 2.0 * (1.0 / (4.0 * beta - 2.0)).exp();
        let third = 2.0 / (beta - 1.0).sqrt();
        assert_relative_eq!(hjg(&two_point(), beta), first - second + third, max_relative = 1e-14);
    }

    #[test]
    fn hv_two_point_value() {
        let g: f64 = 5.0;
        let c = 1.0 / (4.0 * g * g) - 1.0 / (2.0 * g);
        // (j,k) = (1,1), (2,2): s = 4, inner = 1; (1,2), (2,1): s = 0, inner = -1
        let same = (4.0 / (4.0 * g)).exp() * (1.0 + 4.0 * c + 1.0 / (2.0 * g));
        let cross = -1.0 + 1.0 / (2.0 * g);
        let want = (PI / g).sqrt() * (2.0 * same + 2.0 * cross) / 2.0;
        assert_relative_eq!(hv(&two_point(), g), want, max_relative = 1e-14);
    }

    #[test]
    fn hv_inf_is_composition_of_skewnesses() {
        assert_eq!(hv_inf(&two_point()), 0.0);
        let s = scaled_residuals(&random_sample(40, 3, 1)).unwrap();
        assert_eq!(hv_inf(&s), 2.0 * mardia_skewness(&s) + 3.0 * mrs_skewness(&s));
        assert!(hv_inf(&s) > 0.0);
    }

    #[test]
    fn be_two_point_value() {
        let a: f64 = 1.0;
        let c = (a / (2.0 * PI)).sqrt();
        let tail = |v: f64| normal::cdf(-v / a.sqrt());
        let bump = |v: f64| (-v * v / (2.0 * a)).exp();
        // ordered residuals (-1, 1): single pair j = -1, k = 1
        let pair = tail(1.0) * (0.0 + a * -1.0) + c * bump(1.0) * (-1.0 + 1.0 - 1.0);
        let single = |v: f64| tail(v) * (1.0 + (a - 2.0) + 1.0) + c * bump(v) * (2.0 * v - v * v * v);
        let want = 2.0 * pair / 2.0 + (single(-1.0) + single(1.0)) / 2.0;
        assert_relative_eq!(be(&[-1.0, 1.0], a), want, max_relative = 1e-14);
    }

    #[test]
    fn bcmr_correction_matches_direct_integral() {
        let n = 20;
        let lo = 1.0 / 21.0;
        let hi = 20.0 / 21.0;
        let direct = integrate_interval(
            |t| t * (1.0 - t) / normal::pdf(normal::quantile(t)).powi(2),
            lo,
            hi,
            1e-11,
        )
        .unwrap();
        assert_relative_eq!(bcmr_correction(n).unwrap(), direct, max_relative = 1e-8);
    }

    #[test]
    fn bcmr_small_for_normal_scores() {
        let n = 200;
        let scores: Vec<f64> = (1..=n).map(|k| normal::quantile((k as f64 - 0.5) / n as f64)).collect();
        let value = bcmr(&scores).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let skewed: Vec<f64> = (0..n).map(|_| -rng.random::<f64>().ln()).collect();
        // the Wasserstein part vanishes up to discretization, leaving the centring term
        let wasserstein = value + bcmr_correction(n).unwrap();
        assert!((0.0..0.5).contains(&wasserstein), "normal scores gave {wasserstein}");
        assert!(bcmr(&skewed).unwrap() > 10.0);
    }

    #[test]
    fn univariate_statistics_are_location_scale_invariant() {
        let x = random_sample(30, 1, 7).column(0);
        let y: Vec<f64> = x.iter().map(|v| -3.5 * v + 12.0).collect();
        assert_relative_eq!(bcmr(&x).unwrap(), bcmr(&y).unwrap(), max_relative = 1e-8);
        for c in [Competitor::Be { a: 0.7 }, Competitor::Bhep { a: 1.0 }, Competitor::Hjg { beta: 1.5 }] {
            let vx = c.evaluate_raw(&DataMatrix::from_column(&x).unwrap()).unwrap();
            let vy = c.evaluate_raw(&DataMatrix::from_column(&y).unwrap()).unwrap();
            assert_relative_eq!(vx, vy, max_relative = 1e-8);
        }
    }

    #[test]
    fn multivariate_statistics_are_affine_invariant() {
        let x = random_sample(25, 3, 11);
        let a = DMatrix::from_row_slice(3, 3, &[2.0, 0.3, -1.0, 0.0, 1.5, 0.4, 0.7, -0.2, 0.9]);
        let shift = nalgebra::RowDVector::from_row_slice(&[1.0, -4.0, 0.5]);
        let mut moved = x.matrix() * a.transpose();
        for mut row in moved.row_iter_mut() {
            row += &shift;
        }
        let moved = DataMatrix::from_matrix(moved).unwrap();
        for c in [Competitor::Bhep { a: 0.5 }, Competitor::Hjg { beta: 1.5 }, Competitor::Hv { gamma: 5.0 }, Competitor::HvInf] {
            let before = c.evaluate_raw(&x).unwrap();
            let after = c.evaluate_raw(&moved).unwrap();
            assert_relative_eq!(before, after, max_relative = 1e-8);
        }
    }

    #[test]
    fn bhep_is_nonnegative() {
        for seed in 0..20 {
            let s = scaled_residuals(&random_sample(15, 2, seed)).unwrap();
            assert!(bhep(&s, 0.5) >= 0.0);
        }
    }

    #[test]
    fn be_null_distribution_is_stable_across_seeds() {
        let mean_of = |seed: u64| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..2000)
                .map(|_| {
                    let x = standard_normal_data(&mut rng, 20, 1);
                    Competitor::Be { a: 1.0 }.evaluate_raw(&x).unwrap()
                })
                .sum::<f64>()
                / 2000.0
        };
        let (m1, m2) = (mean_of(1), mean_of(2));
        assert!(m1.is_finite() && (m1 - m2).abs() < 0.1 * m1.abs().max(1e-3), "{m1} vs {m2}");
    }

    #[test]
    fn parse_and_display_round_trip() {
        for text in ["bhep:a=0.5", "bhep(0.5)", "hjg", "hv", "hvinf", "bcmr", "be:a=2"] {
            let c: Competitor = text.parse().unwrap();
            assert_eq!(c.to_string().parse::<Competitor>().unwrap(), c);
        }
        assert_eq!("hjg".parse::<Competitor>().unwrap(), Competitor::Hjg { beta: 1.5 });
        assert_eq!("hv".parse::<Competitor>().unwrap(), Competitor::Hv { gamma: 5.0 });
        for bad in ["hjg:beta=1", "hv:gamma=2", "bhep:a=-1", "foo", "bcmr(3)"] {
            assert!(bad.parse::<Competitor>().is_err(), "{bad}");
        }
        let s = scaled_residuals(&random_sample(10, 2, 5)).unwrap();
        assert!(Competitor::Bcmr.evaluate(&s).is_err());
    }
}
