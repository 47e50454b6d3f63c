//! Numerical integration: Gauss–Hermite tensor grids for Gaussian weights and
//! adaptive Gauss–Kronrod on intervals and the real line.

use std::collections::BinaryHeap;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Gauss–Hermite rule for the weight `exp(-x²)` on the real line.
#[derive(Debug, Clone)]
pub struct GaussHermite {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussHermite {
    /// `order` nodes: eigenvalues of the Jacobi matrix as starting values,
    /// polished by Newton iteration on the orthonormal Hermite recurrence,
    /// which also yields accurate weights.
    pub fn new(order: usize) -> Self {
        assert!(order > 0, "Gauss-Hermite order must be positive");
        const PI_M4: f64 = 0.751_125_544_464_942_5;
        let n = order;
        let jacobi = DMatrix::from_fn(n, n, |r, c| {
            if r.abs_diff(c) == 1 {
                (r.max(c) as f64 / 2.0).sqrt()
            } else {
                0.0
            }
        });
        let mut guesses: Vec<f64> = jacobi.symmetric_eigenvalues().iter().copied().collect();
        guesses.sort_by(|a, b| b.total_cmp(a));
        let mut x = vec![0.0; n];
        let mut w = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut z = if 2 * i + 1 == n { 0.0 } else { guesses[i] };
            let mut deriv = 0.0;
            for _ in 0..100 {
                let mut p1 = PI_M4;
                let mut p2 = 0.0;
                for j in 0..n {
                    let p3 = p2;
                    p2 = p1;
                    let jf = j as f64;
                    p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
                }
                deriv = (2.0 * n as f64).sqrt() * p2;
                let step = p1 / deriv;
                z -= step;
                if step.abs() <= 1e-15 * z.abs().max(1.0) {
                    break;
                }
            }
            if 2 * i + 1 == n {
                z = 0.0;
            }
            x[i] = z;
            x[n - 1 - i] = -z;
            w[i] = 2.0 / (deriv * deriv);
            w[n - 1 - i] = w[i];
        }
        Self { nodes: x, weights: w }
    }
}

/// Parameters of a tensor Gauss–Hermite grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    /// Nodes per coordinate.
    pub order: usize,
    /// Tensor points whose weight is below `prune * max_weight` are dropped.
    pub prune: f64,
}

impl QuadratureSpec {
    pub fn new(order: usize) -> Self {
        Self { order, prune: 1e-16 }
    }

    /// A default order that resolves the integrands of this crate for moderate `n`.
    pub fn default_for_dim(d: usize) -> Self {
        match d {
            1 => Self::new(160),
            2 => Self::new(72),
            _ => Self::new(36),
        }
    }
}

/// Points and weights approximating `∫ f(t) exp(-a‖t‖²) dt` over `R^d`.
#[derive(Debug, Clone)]
pub struct WeightedGrid {
    d: usize,
    points: Vec<f64>,
    weights: Vec<f64>,
}

impl WeightedGrid {
    pub fn gaussian(d: usize, a: f64, spec: QuadratureSpec) -> Self {
        assert!(d > 0 && a > 0.0);
        let rule = GaussHermite::new(spec.order);
        let scale = 1.0 / a.sqrt();
        let max_weight = rule.weights.iter().cloned().fold(0.0, f64::max).powi(d as i32);
        let factor = a.powf(-(d as f64) / 2.0);
        let m = spec.order;
        let total = m.pow(d as u32);
        let mut points = Vec::new();
        let mut weights = Vec::new();
        let mut idx = vec![0usize; d];
        for _ in 0..total {
            let w: f64 = idx.iter().map(|&i| rule.weights[i]).product();
            if w >= spec.prune * max_weight {
                points.extend(idx.iter().map(|&i| rule.nodes[i] * scale));
                weights.push(w * factor);
            }
            for slot in idx.iter_mut() {
                *slot += 1;
                if *slot < m {
                    break;
                }
                *slot = 0;
            }
        }
        Self { d, points, weights }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.d..(i + 1) * self.d]
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], f64)> + '_ {
        self.points.chunks_exact(self.d).zip(self.weights.iter().copied())
    }

    pub fn integrate(&self, mut f: impl FnMut(&[f64]) -> f64) -> f64 {
        self.iter().map(|(t, w)| w * f(t)).sum()
    }
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639,
    0.949_107_912_342_758_525,
    0.864_864_423_359_769_073,
    0.741_531_185_599_394_440,
    0.586_087_235_467_691_130,
    0.405_845_151_377_397_167,
    0.207_784_955_007_898_468,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_225,
    0.063_092_092_629_978_553,
    0.104_790_010_322_250_184,
    0.140_653_259_715_525_919,
    0.169_004_726_639_267_903,
    0.190_350_578_064_785_410,
    0.204_432_940_075_298_892,
    0.209_482_141_084_727_828,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693,
    0.279_705_391_489_276_668,
    0.381_830_050_505_118_945,
    0.417_959_183_673_469_388,
];

fn kronrod15(f: &mut impl FnMut(f64) -> f64, lo: f64, hi: f64) -> (f64, f64) {
    let centre = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let fc = f(centre);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for i in 0..7 {
        let dx = half * XGK[i];
        let pair = f(centre - dx) + f(centre + dx);
        kronrod += WGK[i] * pair;
        if i % 2 == 1 {
            gauss += WG[i / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

struct Panel {
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Globally adaptive Gauss–Kronrod (7/15) integration of `f` over `[lo, hi]`.
pub fn integrate_interval(mut f: impl FnMut(f64) -> f64, lo: f64, hi: f64, abs_tol: f64) -> Result<f64> {
    const MAX_PANELS: usize = 4000;
    let (value, error) = kronrod15(&mut f, lo, hi);
    let mut heap = BinaryHeap::new();
    heap.push(Panel { lo, hi, value, error });
    let mut total = value;
    let mut total_err = error;
    while total_err > abs_tol {
        if !total.is_finite() {
            return Err(Error::Quadrature("integrand is not finite".into()));
        }
        if heap.len() >= MAX_PANELS {
            return Err(Error::Quadrature(format!(
                "no convergence after {MAX_PANELS} panels (error estimate {total_err:e})"
            )));
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.lo + worst.hi);
        let (lv, le) = kronrod15(&mut f, worst.lo, mid);
        let (rv, re) = kronrod15(&mut f, mid, worst.hi);
        total += lv + rv - worst.value;
        total_err += le + re - worst.error;
        heap.push(Panel { lo: worst.lo, hi: mid, value: lv, error: le });
        heap.push(Panel { lo: mid, hi: worst.hi, value: rv, error: re });
        // refresh sums to keep accumulated rounding out of the stopping rule
        if heap.len() % 64 == 0 {
            total = heap.iter().map(|p| p.value).sum();
            total_err = heap.iter().map(|p| p.error).sum();
        }
    }
    if !total.is_finite() {
        return Err(Error::Quadrature("integrand is not finite".into()));
    }
    Ok(heap.iter().map(|p| p.value).sum())
}

/// Integral of `f` over the whole real line via `x = u / (1 - u²)`.
pub fn integrate_real_line(f: impl Fn(f64) -> f64, abs_tol: f64) -> Result<f64> {
    integrate_interval(
        |u| {
            let s = 1.0 - u * u;
            let x = u / s;
            let v = f(x);
            if v == 0.0 {
                0.0
            } else {
                v * (1.0 + u * u) / (s * s)
            }
        },
        -1.0,
        1.0,
        abs_tol,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn hermite_rule_integrates_moments() {
        let rule = GaussHermite::new(20);
        let moment = |k: i32| -> f64 { rule.nodes.iter().zip(&rule.weights).map(|(x, w)| w * x.powi(k)).sum() };
        assert_relative_eq!(moment(0), PI.sqrt(), max_relative = 1e-14);
        assert_relative_eq!(moment(2), PI.sqrt() / 2.0, max_relative = 1e-14);
        assert_relative_eq!(moment(10), 945.0 / 32.0 * PI.sqrt(), max_relative = 1e-13);
        assert!(moment(7).abs() < 1e-12);
    }

    #[test]
    fn high_order_rule_is_stable() {
        let rule = GaussHermite::new(200);
        let total: f64 = rule.weights.iter().sum();
        assert_relative_eq!(total, PI.sqrt(), max_relative = 1e-13);
        let mut sorted = rule.nodes.clone();
        sorted.sort_by(f64::total_cmp);
        assert!(sorted.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn gaussian_grid_matches_closed_form() {
        // ∫ cos(t·b) exp(-a‖t‖²) dt = (π/a)^{d/2} exp(-‖b‖²/(4a))
        let a = 0.7;
        let b = [0.8, -1.3];
        let grid = WeightedGrid::gaussian(2, a, QuadratureSpec::new(40));
        let got = grid.integrate(|t| (t[0] * b[0] + t[1] * b[1]).cos());
        let want = PI / a * (-(b[0] * b[0] + b[1] * b[1]) / (4.0 * a)).exp();
        assert_relative_eq!(got, want, max_relative = 1e-13);
    }

    #[test]
    fn kronrod_on_interval_and_line() {
        let v = integrate_interval(|x| x.sin(), 0.0, PI, 1e-13).unwrap();
        assert_relative_eq!(v, 2.0, max_relative = 1e-12);
        let v = integrate_real_line(|x| 1.0 / (1.0 + x * x), 1e-11).unwrap();
        assert_relative_eq!(v, PI, max_relative = 1e-10);
        let v = integrate_real_line(|x| (-x * x).exp(), 1e-13).unwrap();
        assert_relative_eq!(v, PI.sqrt(), max_relative = 1e-12);
    }

    #[test]
    fn divergent_integrand_reports_failure() {
        assert!(integrate_interval(|x| 1.0 / x, 0.0, 1.0, 1e-10).is_err());
    }
}
