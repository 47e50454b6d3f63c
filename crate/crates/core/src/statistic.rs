//! The statistic `T_{n,a}`, its quadrature oracle and the moment statistics
//! that appear as its limits for small and large `a`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::quadrature::{QuadratureSpec, WeightedGrid};
use crate::standardize::StandardizedSample;

/// Decay parameter of the weight `exp(-a‖t‖²)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct TuningParameter(f64);

impl TuningParameter {
    pub fn new(a: f64) -> Result<Self> {
        if a.is_finite() && a > 0.0 {
            Ok(Self(a))
        } else {
            Err(invalid(format!("tuning parameter must be positive and finite, got {a}")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for TuningParameter {
    type Error = Error;
    fn try_from(a: f64) -> Result<Self> {
        Self::new(a)
    }
}

impl From<TuningParameter> for f64 {
    fn from(a: TuningParameter) -> f64 {
        a.0
    }
}

/// Value of `T_{n,a}` with the table scaling `d^{-2} (a/π)^{d/2} T_{n,a}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatisticValue {
    pub value: f64,
    pub scaled: f64,
    pub n: usize,
    pub d: usize,
    pub a: f64,
}

impl StatisticValue {
    pub fn new(value: f64, n: usize, d: usize, a: f64) -> Self {
        Self { value, scaled: value * table_scale(d, a), n, d, a }
    }
}

/// Factor `d^{-2} (a/π)^{d/2}` that makes critical values comparable across `a`.
pub fn table_scale(d: usize, a: f64) -> f64 {
    (a / PI).powf(d as f64 / 2.0) / (d * d) as f64
}

/// Neumaier compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// `Σ_{j<k} f(j, k)`, with row partial sums combined by compensated summation.
pub(crate) fn pair_sum(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> f64 {
    let mut total = CompensatedSum::default();
    for j in 0..n {
        let mut row = 0.0;
        for k in (j + 1)..n {
            row += f(j, k);
        }
        total.add(row);
    }
    total.value()
}

pub(crate) fn sq_dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
}

pub(crate) fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// `ψ(t) = exp(-‖t‖²/2)`, the standard normal characteristic function.
pub fn psi(t: &[f64]) -> f64 {
    (-0.5 * dot(t, t)).exp()
}

/// `cos(tᵀx) + sin(tᵀx)`.
pub fn cs_plus(t: &[f64], x: &[f64]) -> f64 {
    let p = dot(t, x);
    p.cos() + p.sin()
}

/// `cos(tᵀx) - sin(tᵀx)`.
pub fn cs_minus(t: &[f64], x: &[f64]) -> f64 {
    let p = dot(t, x);
    p.cos() - p.sin()
}

/// Closed-form `T_{n,a}` before clamping; may be a rounding-level negative.
pub fn t_statistic_raw(sample: &StandardizedSample, a: f64) -> f64 {
    let n = sample.n();
    let d = sample.d() as f64;
    let r = sample.norms_sq();
    let half_d = d / 2.0;

    let inv4a = 1.0 / (4.0 * a);
    let diagonal: f64 = r.iter().map(|x| x * x).sum();
    let off = pair_sum(n, |j, k| {
        r[j] * r[k] * (-sq_dist(sample.residual(j), sample.residual(k)) * inv4a).exp()
    });
    let gaussian = (PI / a).powf(half_d) * (diagonal + 2.0 * off) / n as f64;

    let b = 2.0 * a + 1.0;
    let mut cross = CompensatedSum::default();
    for &rj in r {
        cross.add(rj * (rj + 2.0 * d * a * b) * (-rj / (2.0 * b)).exp());
    }
    let cross = 2.0 * (2.0 * PI).powf(half_d) / b.powf(2.0 + half_d) * cross.value();

    let constant =
        n as f64 * PI.powf(half_d) / (a + 1.0).powf(2.0 + half_d) * (a * (a + 1.0) * d * d + d * (d + 2.0) / 4.0);

    gaussian - cross + constant
}

/// `T_{n,a}` in closed form, `O(n²d)`.
pub fn t_statistic(sample: &StandardizedSample, a: TuningParameter) -> StatisticValue {
    let value = t_statistic_raw(sample, a.value()).max(0.0);
    StatisticValue::new(value, sample.n(), sample.d(), a.value())
}

/// Empirical counterpart `z_n(t) = n^{-1} Σ ‖Y_k‖² CS⁺(t, Y_k) − m(t)`.
pub fn z_n(t: &[f64], sample: &StandardizedSample) -> f64 {
    let mean = sample.rows().zip(sample.norms_sq()).map(|(y, r)| r * cs_plus(t, y)).sum::<f64>() / sample.n() as f64;
    mean - crate::inference::m_func(t)
}

/// `T_{n,a} = n ∫ z_n(t)² w_a(t) dt` by tensor Gauss–Hermite quadrature (`d ≤ 3`).
pub fn t_statistic_quadrature(sample: &StandardizedSample, a: TuningParameter, spec: QuadratureSpec) -> Result<f64> {
    let d = sample.d();
    if d > 3 {
        return Err(Error::UnsupportedDimension { d, max: 3 });
    }
    let grid = WeightedGrid::gaussian(d, a.value(), spec);
    Ok(sample.n() as f64 * grid.integrate(|t| z_n(t, sample).powi(2)))
}

/// Skewness `b̃_{1,d} = ‖n^{-1} Σ ‖Y_j‖² Y_j‖²`.
pub fn mrs_skewness(sample: &StandardizedSample) -> f64 {
    let mut acc = vec![0.0; sample.d()];
    for (y, r) in sample.rows().zip(sample.norms_sq()) {
        for (a, v) in acc.iter_mut().zip(y) {
            *a += r * v;
        }
    }
    let n = sample.n() as f64;
    acc.iter().map(|v| (v / n) * (v / n)).sum()
}

/// Mardia skewness `b_{1,d} = n^{-2} Σ_{j,k} (Y_jᵀY_k)³`.
pub fn mardia_skewness(sample: &StandardizedSample) -> f64 {
    let n = sample.n();
    let diagonal: f64 = sample.norms_sq().iter().map(|r| r.powi(3)).sum();
    let off = pair_sum(n, |j, k| dot(sample.residual(j), sample.residual(k)).powi(3));
    (diagonal + 2.0 * off) / (n * n) as f64
}

/// Mardia kurtosis `b_{2,d} = n^{-1} Σ ‖Y_j‖⁴`.
pub fn mardia_kurtosis(sample: &StandardizedSample) -> f64 {
    sample.norms_sq().iter().map(|r| r * r).sum::<f64>() / sample.n() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::standardize::{scaled_residuals, DataMatrix};
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn two_point() -> StandardizedSample {
        scaled_residuals(&DataMatrix::from_column(&[0.0, 2.0]).unwrap()).unwrap()
    }

    fn gaussian_sample(n: usize, d: usize, seed: u64) -> StandardizedSample {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v: Vec<f64> = (0..n * d).map(|_| StandardNormal.sample(&mut rng)).collect();
        scaled_residuals(&DataMatrix::from_row_major(n, d, &v).unwrap()).unwrap()
    }

    /// Direct evaluation of all three terms over the full double sum.
    fn brute_force(sample: &StandardizedSample, a: f64) -> f64 {
        let n = sample.n();
        let d = sample.d() as f64;
        let r = sample.norms_sq();
        let mut first = 0.0;
        for j in 0..n {
            for k in 0..n {
                let dist: f64 = (0..sample.d()).map(|c| (sample.residual(j)[c] - sample.residual(k)[c]).powi(2)).sum();
                first += r[j] * r[k] * (-dist / (4.0 * a)).exp();
            }
        }
        first *= (PI / a).powf(d / 2.0) / n as f64;
        let b = 2.0 * a + 1.0;
        let second: f64 = r.iter().map(|&x| x * (x + 2.0 * d * a * b) * (-x / (2.0 * b)).exp()).sum::<f64>()
            * 2.0
            * (2.0 * PI).powf(d / 2.0)
            / b.powf(2.0 + d / 2.0);
        let third = n as f64 * PI.powf(d / 2.0) / (a + 1.0).powf(2.0 + d / 2.0) * (a * (a + 1.0) * d * d + d * (d + 2.0) / 4.0);
        first - second + third
    }

    #[test]
    fn two_point_sample_value() {
        let a = TuningParameter::new(1.0).unwrap();
        let t = t_statistic(&two_point(), a);
        // each term evaluated by hand
        let term1 = PI.sqrt() * (1.0 + (-1.0f64).exp());
        let term2 = 2.0 * (2.0 * (2.0 * PI).sqrt() / 3f64.powf(2.5)) * 7.0 * (-1.0f64 / 6.0).exp();
        let term3 = 2.0 * (PI.sqrt() / 2f64.powf(2.5)) * 2.75;
        assert_relative_eq!(t.value, term1 - term2 + term3, max_relative = 1e-14);
        assert_relative_eq!(t.value, 0.336_604_195_984_987_5, max_relative = 1e-12);
        assert_relative_eq!(t.scaled, 0.189_908_581_153_197_45, max_relative = 1e-12);
    }

    #[test]
    fn quadrature_oracle_matches_two_point_value() {
        let a = TuningParameter::new(1.0).unwrap();
        let q = t_statistic_quadrature(&two_point(), a, QuadratureSpec::new(120)).unwrap();
        assert_relative_eq!(q, 0.336_604_195_984_987_5, max_relative = 1e-10);
    }

    #[test]
    fn closed_form_matches_brute_force() {
        for (d, seed) in [(1, 1), (2, 2), (4, 3)] {
            let s = gaussian_sample(25, d, seed);
            for a in [0.1, 1.0, 5.0] {
                let t = t_statistic(&s, TuningParameter::new(a).unwrap()).value;
                assert_relative_eq!(t, brute_force(&s, a), max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn quadrature_oracle_in_two_and_three_dimensions() {
        let s = gaussian_sample(12, 2, 9);
        let a = TuningParameter::new(1.0).unwrap();
        let q = t_statistic_quadrature(&s, a, QuadratureSpec::new(60)).unwrap();
        assert_relative_eq!(q, t_statistic(&s, a).value, max_relative = 1e-8);
        let s = gaussian_sample(8, 3, 10);
        let a = TuningParameter::new(2.0).unwrap();
        let q = t_statistic_quadrature(&s, a, QuadratureSpec::new(32)).unwrap();
        assert_relative_eq!(q, t_statistic(&s, a).value, max_relative = 1e-6);
        let s = gaussian_sample(8, 4, 10);
        assert!(matches!(
            t_statistic_quadrature(&s, a, QuadratureSpec::new(4)),
            Err(Error::UnsupportedDimension { d: 4, max: 3 })
        ));
    }

    #[test]
    fn moment_statistics() {
        let s = two_point();
        assert_eq!(mrs_skewness(&s), 0.0);
        assert!(mardia_skewness(&s).abs() < 1e-15);
        assert_relative_eq!(mardia_kurtosis(&s), 1.0, max_relative = 1e-14);

        let s = gaussian_sample(30, 3, 4);
        let n = 30.0;
        let mut brute_mrs = 0.0;
        let mut brute_mardia = 0.0;
        for j in 0..30 {
            for k in 0..30 {
                let g = dot(s.residual(j), s.residual(k));
                brute_mrs += s.norms_sq()[j] * s.norms_sq()[k] * g;
                brute_mardia += g.powi(3);
            }
        }
        assert_relative_eq!(mrs_skewness(&s), brute_mrs / (n * n), max_relative = 1e-10);
        assert_relative_eq!(mardia_skewness(&s), brute_mardia / (n * n), max_relative = 1e-10);
        assert!(mardia_kurtosis(&s) >= 9.0);
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut s = CompensatedSum::default();
        s.add(1e16);
        for _ in 0..1000 {
            s.add(1.0);
        }
        s.add(-1e16);
        assert_eq!(s.value(), 1000.0);
    }

    #[test]
    fn tuning_parameter_rejects_nonpositive() {
        assert!(TuningParameter::new(0.0).is_err());
        assert!(TuningParameter::new(f64::NAN).is_err());
        assert!(TuningParameter::new(f64::INFINITY).is_err());
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(48))]

            #[test]
            fn statistic_is_nonnegative(seed in 0u64..10_000, n in 4usize..30, d in 1usize..4, a in 0.05f64..8.0) {
                prop_assume!(n > d + 1);
                let s = gaussian_sample(n, d, seed);
                prop_assert!(t_statistic_raw(&s, a) >= -1e-9 * n as f64);
            }

            #[test]
            fn residual_norms_sum_to_nd(seed in 0u64..10_000, n in 5usize..40, d in 1usize..4) {
                let s = gaussian_sample(n, d, seed);
                let total: f64 = s.norms_sq().iter().sum();
                prop_assert!((total - (n * d) as f64).abs() < 1e-8 * (n * d) as f64);
            }
        }
    }
}
