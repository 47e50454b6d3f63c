//! Inference under fixed alternatives: the empirical quantities behind the
//! variance estimator `σ̂²_{n,a}` of `√n (T_{n,a}/n − Δ_a)`, confidence
//! intervals for `Δ_a`, and the neighbourhood-of-model validation test.
//!
//! `σ̂²_{n,a}` is a double integral of the empirical covariance kernel
//! `L_n(s, t)` against `z_n(s) z_n(t) w_a(s) w_a(t)`. It is evaluated in
//! closed form through the kernels `q₁, p₁, p₂, q₂` and the aggregates in
//! [`PAggregates`]; a tensor-quadrature version is kept as an oracle.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::normal;
use crate::quadrature::{integrate_real_line, QuadratureSpec, WeightedGrid};
use crate::standardize::StandardizedSample;
use crate::statistic::{cs_minus, cs_plus, dot, sq_dist, t_statistic, z_n, TuningParameter};

/// `m(t) = (d − ‖t‖²) exp(−‖t‖²/2)`.
pub fn m_func(t: &[f64]) -> f64 {
    let tt = dot(t, t);
    (t.len() as f64 - tt) * (-0.5 * tt).exp()
}

/// Empirical sums standing in for derivatives of the characteristic function at `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct PsiBundle {
    /// `n^{-1} Σ CS⁺(t,Y_j) Y_j`
    pub psi1: DVector<f64>,
    /// `n^{-1} Σ CS⁺(t,Y_j) Y_j Y_jᵀ`
    pub psi2: DMatrix<f64>,
    /// `n^{-1} Σ CS^±(t,Y_j) ‖Y_j‖²`
    pub psi3_plus: f64,
    pub psi3_minus: f64,
    /// `n^{-1} Σ CS^±(t,Y_j) ‖Y_j‖² Y_j`
    pub psi4_plus: DVector<f64>,
    pub psi4_minus: DVector<f64>,
    /// `n^{-1} Σ CS⁺(t,Y_j) ‖Y_j‖² Y_j Y_jᵀ`
    pub psi5: DMatrix<f64>,
}

pub fn psi_estimators(sample: &StandardizedSample, t: &[f64]) -> PsiBundle {
    let d = sample.d();
    let n = sample.n() as f64;
    let mut b = PsiBundle {
        psi1: DVector::zeros(d),
        psi2: DMatrix::zeros(d, d),
        psi3_plus: 0.0,
        psi3_minus: 0.0,
        psi4_plus: DVector::zeros(d),
        psi4_minus: DVector::zeros(d),
        psi5: DMatrix::zeros(d, d),
    };
    for (y, &r) in sample.rows().zip(sample.norms_sq()) {
        let cp = cs_plus(t, y);
        let cm = cs_minus(t, y);
        let yv = DVector::from_column_slice(y);
        let outer = &yv * yv.transpose();
        b.psi1 += cp * &yv;
        b.psi2 += cp * &outer;
        b.psi3_plus += cp * r;
        b.psi3_minus += cm * r;
        b.psi4_plus += (cp * r) * &yv;
        b.psi4_minus += (cm * r) * &yv;
        b.psi5 += (cp * r) * &outer;
    }
    b.psi1 /= n;
    b.psi2 /= n;
    b.psi3_plus /= n;
    b.psi3_minus /= n;
    b.psi4_plus /= n;
    b.psi4_minus /= n;
    b.psi5 /= n;
    b
}

/// The four summands `v_{n,i}(s, y)` of the empirical influence function at frequency `s`.
pub fn v_components(bundle: &PsiBundle, s: &[f64], y: &[f64]) -> [f64; 4] {
    let r = dot(y, y);
    let sy = dot(s, y);
    let y4 = dot(y, bundle.psi4_minus.as_slice());
    let s4 = dot(s, bundle.psi4_minus.as_slice());
    let yv = DVector::from_column_slice(y);
    let lin: Vec<f64> = (0..s.len()).map(|c| 2.0 * bundle.psi1[c] + bundle.psi3_minus * s[c]).collect();
    [
        r * cs_plus(s, y),
        -0.5 * (sy * y4 - s4),
        -dot(&lin, y),
        -(yv.transpose() * &bundle.psi2 * &yv)[(0, 0)],
    ]
}

/// Blocks `L_n^{i,j}(s,t) = n^{-1} Σ_k v_{n,i}(s,Y_k) v_{n,j}(t,Y_k)`.
pub fn l_n_blocks(sample: &StandardizedSample, s: &[f64], t: &[f64]) -> [[f64; 4]; 4] {
    let bs = psi_estimators(sample, s);
    let bt = psi_estimators(sample, t);
    let mut out = [[0.0; 4]; 4];
    for y in sample.rows() {
        let vs = v_components(&bs, s, y);
        let vt = v_components(&bt, t, y);
        for i in 0..4 {
            for j in 0..4 {
                out[i][j] += vs[i] * vt[j];
            }
        }
    }
    let n = sample.n() as f64;
    out.iter_mut().flatten().for_each(|x| *x /= n);
    out
}

/// `L_n(s,t)`, the sum of all sixteen blocks.
pub fn l_n(sample: &StandardizedSample, s: &[f64], t: &[f64]) -> f64 {
    l_n_blocks(sample, s, t).iter().flatten().sum()
}

/// `q₁(y) = ∫ m(t) CS⁺(t,y) w_a(t) dt`.
pub fn q1(y: &[f64], a: f64) -> f64 {
    let d = y.len() as f64;
    let b = 2.0 * a + 1.0;
    let r = dot(y, y);
    (2.0 * PI).powf(d / 2.0) / b.powf(d / 2.0 + 2.0) * (r + 2.0 * d * a * b) * (-0.5 * r / b).exp()
}

/// `p₁(y,z) = ∫ CS⁺(t,y) CS⁺(t,z) w_a(t) dt`.
pub fn p1(y: &[f64], z: &[f64], a: f64) -> f64 {
    (PI / a).powf(y.len() as f64 / 2.0) * (-sq_dist(y, z) / (4.0 * a)).exp()
}

/// `p₂(y,z) = ∫ CS⁺(t,y) CS⁻(t,z) t w_a(t) dt`.
pub fn p2(y: &[f64], z: &[f64], a: f64) -> Vec<f64> {
    let f = p1(y, z, a) / (2.0 * a);
    y.iter().zip(z).map(|(u, v)| f * (u - v)).collect()
}

/// `q₂(y) = ∫ m(t) CS⁻(t,y) t w_a(t) dt`.
pub fn q2(y: &[f64], a: f64) -> Vec<f64> {
    let d = y.len() as f64;
    let b = 2.0 * a + 1.0;
    let r = dot(y, y);
    let f = (2.0 * PI).powf(d / 2.0) / b.powf(d / 2.0 + 3.0) * (2.0 * b * (1.0 - a * d) - r) * (-0.5 * r / b).exp();
    y.iter().map(|v| f * v).collect()
}

/// Sample aggregates from which every `σ̂^{i,j}` is an arithmetic mean.
#[derive(Debug, Clone, PartialEq)]
pub struct PAggregates {
    pub p1a1: f64,
    pub p1a1_tilde: DVector<f64>,
    pub p1a2_tilde: DVector<f64>,
    pub p1a_bar: DMatrix<f64>,
    /// `P^{1,a,2}(Y_j)`
    pub p1a2_of: Vec<f64>,
    /// `P^{1,a,3}(Y_j)`
    pub p1a3_of: Vec<f64>,
    pub p2a1: f64,
    pub p2a2: f64,
    pub p2a_tilde: DVector<f64>,
    /// `P^{2,a,3}(Y_j)`
    pub p2a3_of: Vec<f64>,
}

/// Computes all aggregates in `O(n²d)`.
///
/// Two per-observation quantities carry the double sums:
/// `P^{1,a,3}(Y_l)` and `ρ_l = n^{-1} Σ_k ‖Y_k‖² p₂(Y_k,Y_l) − q₂(Y_l)`.
/// `P^{2,a,3}(Y_j)` is taken as `n^{-1} Σ_l ‖Y_l‖² (Y_lᵀY_j)(Y_jᵀρ_l)`, the
/// form that reproduces the defining double integral.
pub fn p_aggregates(sample: &StandardizedSample, a: f64) -> PAggregates {
    let n = sample.n();
    let d = sample.d();
    let nf = n as f64;
    let r = sample.norms_sq();
    let row = |j: usize| DVector::from_column_slice(sample.residual(j));

    let mut p1a3_of = vec![0.0; n];
    let mut rho = vec![DVector::<f64>::zeros(d); n];
    let c1 = (PI / a).powf(d as f64 / 2.0);
    for l in 0..n {
        let yl = sample.residual(l);
        let mut sum1 = 0.0;
        let mut sum2 = DVector::zeros(d);
        for k in 0..n {
            let yk = sample.residual(k);
            let e = c1 * (-sq_dist(yk, yl) / (4.0 * a)).exp();
            sum1 += r[k] * e;
            let f = r[k] * e / (2.0 * a);
            for c in 0..d {
                sum2[c] += f * (yk[c] - yl[c]);
            }
        }
        p1a3_of[l] = sum1 / nf - q1(yl, a);
        rho[l] = sum2 / nf - DVector::from_vec(q2(yl, a));
    }

    let mut p1a1 = 0.0;
    let mut p1a1_tilde = DVector::zeros(d);
    let mut p1a2_tilde = DVector::zeros(d);
    let mut p1a_bar = DMatrix::zeros(d, d);
    let mut weighted_outer = DMatrix::zeros(d, d);
    let mut p2a1 = 0.0;
    let mut p2a_tilde = DVector::zeros(d);
    let mut rho_outer = DMatrix::zeros(d, d);
    for l in 0..n {
        let y = row(l);
        let outer = &y * y.transpose();
        let c = p1a3_of[l];
        p1a1 += r[l] * c;
        p1a1_tilde += (r[l] * c) * &y;
        p1a2_tilde += c * &y;
        p1a_bar += (r[l] * c) * &outer;
        weighted_outer += c * &outer;
        p2a1 += r[l] * y.dot(&rho[l]);
        p2a_tilde += r[l] * &rho[l];
        rho_outer += r[l] * &rho[l] * y.transpose();
    }
    p1a1 /= nf;
    p1a1_tilde /= nf;
    p1a2_tilde /= nf;
    p1a_bar /= nf;
    weighted_outer /= nf;
    p2a1 /= nf;
    p2a_tilde /= nf;
    rho_outer /= nf;

    let p2a2 = (0..n).map(|l| r[l] * row(l).dot(&(&p1a_bar * &rho[l]))).sum::<f64>() / nf;
    let quad = |m: &DMatrix<f64>, j: usize| {
        let y = row(j);
        (y.transpose() * m * &y)[(0, 0)]
    };
    let p1a2_of = (0..n).map(|j| quad(&weighted_outer, j)).collect();
    let p2a3_of = (0..n).map(|j| quad(&rho_outer, j)).collect();

    PAggregates { p1a1, p1a1_tilde, p1a2_tilde, p1a_bar, p1a2_of, p1a3_of, p2a1, p2a2, p2a_tilde, p2a3_of }
}

/// The ten distinct terms `σ̂^{i,j}`, `i ≤ j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmaComponents {
    pub s11: f64,
    pub s12: f64,
    pub s13: f64,
    pub s14: f64,
    pub s22: f64,
    pub s23: f64,
    pub s24: f64,
    pub s33: f64,
    pub s34: f64,
    pub s44: f64,
}

impl SigmaComponents {
    pub fn total(&self) -> f64 {
        self.s11 + self.s22 + self.s33 + self.s44 + 2.0 * (self.s12 + self.s13 + self.s14 + self.s23 + self.s24 + self.s34)
    }
}

pub fn sigma_components(sample: &StandardizedSample, agg: &PAggregates) -> SigmaComponents {
    let nf = sample.n() as f64;
    let r = sample.norms_sq();
    let mean = |f: &dyn Fn(usize) -> f64| (0..sample.n()).map(f).sum::<f64>() / nf;
    let y = |j: usize| DVector::from_column_slice(sample.residual(j));
    let lin = 2.0 * &agg.p1a2_tilde + &agg.p2a_tilde;
    let half_lin = &agg.p1a2_tilde + 0.5 * &agg.p2a_tilde;
    SigmaComponents {
        s11: 4.0 * mean(&|j| r[j] * r[j] * agg.p1a3_of[j].powi(2)),
        s12: 2.0 * agg.p1a1 * agg.p2a1 - 2.0 * agg.p2a2,
        s13: -4.0 * lin.dot(&agg.p1a1_tilde),
        s14: -4.0 * mean(&|j| r[j] * agg.p1a2_of[j] * agg.p1a3_of[j]),
        s22: mean(&|j| agg.p2a3_of[j].powi(2)) - agg.p2a1 * agg.p2a1,
        s23: 4.0 * mean(&|j| agg.p2a3_of[j] * half_lin.dot(&y(j))),
        s24: 2.0 * mean(&|j| (agg.p2a3_of[j] - agg.p2a1) * agg.p1a2_of[j]),
        s33: 4.0 * lin.norm_squared(),
        s34: 4.0 * mean(&|j| agg.p1a2_of[j] * lin.dot(&y(j))),
        s44: 4.0 * mean(&|j| agg.p1a2_of[j].powi(2)),
    }
}

/// Per-observation influence values `g_j` with `σ̂² = 4 n^{-1} Σ g_j²`.
pub fn influence_values(sample: &StandardizedSample, agg: &PAggregates) -> Vec<f64> {
    let lin = 2.0 * &agg.p1a2_tilde + &agg.p2a_tilde;
    (0..sample.n())
        .map(|j| {
            let y = sample.residual(j);
            sample.norms_sq()[j] * agg.p1a3_of[j] - 0.5 * (agg.p2a3_of[j] - agg.p2a1) - dot(lin.as_slice(), y)
                - agg.p1a2_of[j]
        })
        .collect()
}

/// `σ̂²_{n,a}` with its unclipped value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmaHatSq {
    /// `max(raw, 0)`.
    pub value: f64,
    pub raw: f64,
    /// Set when a negative rounding result was clipped to zero.
    pub clipped: bool,
}

/// Closed-form variance estimator assembled from the ten `σ̂^{i,j}`.
pub fn sigma_hat_sq(sample: &StandardizedSample, a: TuningParameter) -> SigmaHatSq {
    let agg = p_aggregates(sample, a.value());
    let raw = sigma_components(sample, &agg).total();
    SigmaHatSq { value: raw.max(0.0), raw, clipped: raw < 0.0 }
}

/// Oracle: `4 ∬ L_n(s,t) z_n(s) z_n(t) w_a(s) w_a(t) ds dt` on a tensor grid
/// (`d ≤ 2`). Uses `L_n(s,t) = n^{-1} Σ_k v_n(s,Y_k) v_n(t,Y_k)`, so the double
/// integral is `4 n^{-1} Σ_k (∫ v_n(s,Y_k) z_n(s) w_a(s) ds)²`.
pub fn sigma_hat_sq_quadrature(sample: &StandardizedSample, a: TuningParameter, spec: QuadratureSpec) -> Result<f64> {
    let d = sample.d();
    if d > 2 {
        return Err(Error::UnsupportedDimension { d, max: 2 });
    }
    let grid = WeightedGrid::gaussian(d, a.value(), spec);
    let mut inner = vec![0.0; sample.n()];
    for (s, w) in grid.iter() {
        let bundle = psi_estimators(sample, s);
        let zw = z_n(s, sample) * w;
        for (acc, y) in inner.iter_mut().zip(sample.rows()) {
            *acc += zw * v_components(&bundle, s, y).iter().sum::<f64>();
        }
    }
    Ok(4.0 * inner.iter().map(|g| g * g).sum::<f64>() / sample.n() as f64)
}

/// Point estimate `T_{n,a}/n` of `Δ_a` with its standard error scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaEstimate {
    pub delta_hat: f64,
    pub sigma_hat: f64,
    pub sigma_clipped: bool,
    pub n: usize,
    pub d: usize,
    pub a: f64,
}

pub fn estimate_delta(sample: &StandardizedSample, a: TuningParameter) -> DeltaEstimate {
    let t = t_statistic(sample, a);
    let s = sigma_hat_sq(sample, a);
    DeltaEstimate {
        delta_hat: t.value / sample.n() as f64,
        sigma_hat: s.value.sqrt(),
        sigma_clipped: s.clipped,
        n: sample.n(),
        d: sample.d(),
        a: a.value(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceInterval {
    pub lower: f64,
    pub upper: f64,
    pub alpha: f64,
}

impl ConfidenceInterval {
    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(invalid(format!("alpha must lie in (0, 1), got {alpha}")))
    }
}

/// Asymptotic interval `T/n ± Φ^{-1}(1−α/2) σ̂/√n`.
pub fn confidence_interval(est: &DeltaEstimate, alpha: f64) -> Result<ConfidenceInterval> {
    check_alpha(alpha)?;
    let half = normal::quantile(1.0 - alpha / 2.0) * est.sigma_hat / (est.n as f64).sqrt();
    Ok(ConfidenceInterval { lower: est.delta_hat - half, upper: est.delta_hat + half, alpha })
}

/// Outcome of the test of `Δ_a ≥ δ₀` against `Δ_a < δ₀`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidationDecision {
    /// True when `Δ_a ≥ δ₀` is rejected, i.e. closeness to normality is established.
    pub reject: bool,
    pub threshold: f64,
    pub delta_hat: f64,
    pub delta0: f64,
    pub alpha: f64,
}

/// Rejects `Δ_a ≥ δ₀` iff `T/n ≤ δ₀ − σ̂/√n · Φ^{-1}(1−α)`.
pub fn validation_test(est: &DeltaEstimate, delta0: f64, alpha: f64) -> Result<ValidationDecision> {
    check_alpha(alpha)?;
    if !(delta0 > 0.0 && delta0.is_finite()) {
        return Err(invalid(format!("delta0 must be positive, got {delta0}")));
    }
    let threshold = delta0 - est.sigma_hat / (est.n as f64).sqrt() * normal::quantile(1.0 - alpha);
    Ok(ValidationDecision { reject: est.delta_hat <= threshold, threshold, delta_hat: est.delta_hat, delta0, alpha })
}

/// `Δ_a = ∫ (φ''(t) − (t²−1) e^{−t²/2})² e^{−a t²} dt` for a univariate law
/// with characteristic function second derivative `cf_second`.
pub fn delta_a_univariate(cf_second: impl Fn(f64) -> f64, a: f64, abs_tol: f64) -> Result<f64> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(invalid(format!("tuning parameter must be positive, got {a}")));
    }
    integrate_real_line(
        |t| {
            let w = (-a * t * t).exp();
            if w == 0.0 {
                return 0.0;
            }
            let diff = cf_second(t) - (t * t - 1.0) * (-0.5 * t * t).exp();
            diff * diff * w
        },
        abs_tol,
    )
}
