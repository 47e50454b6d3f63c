//! Seeded generators for the null model and the alternatives of the power
//! studies, with a compact string grammar.
//!
//! Grammar: `name`, `name:key=value,...` or `name(value,...)`, e.g.
//! `nmix:p=0.1,mu=3,sigma=Bd`, `t:nu=5`, `gamma(5,1)`, `prod:cauchy`,
//! `spherical:exp(1)`. Univariate names used with `d > 1` denote the law
//! with independent components; `t` and `nmix` denote their multivariate
//! forms.

use std::f64::consts::{PI, SQRT_2};
use std::fmt;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{self as rd, ChiSquared, Distribution, Exp, StandardNormal};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{invalid, Error, Result};
use crate::standardize::DataMatrix;

const SQRT_3: f64 = 1.732_050_807_568_877_2;

/// A univariate law.
#[derive(Debug, Clone, PartialEq)]
pub enum Univariate {
    Normal { mean: f64, sd: f64 },
    /// `(1-p) N(0,1) + p N(mu, sigma2)`
    NormalMixture { p: f64, mu: f64, sigma2: f64 },
    StudentT { nu: f64 },
    Uniform { low: f64, high: f64 },
    ChiSquared { nu: f64 },
    Beta { alpha: f64, beta: f64 },
    Gamma { shape: f64, rate: f64 },
    Gumbel { loc: f64, scale: f64 },
    LogNormal { mu: f64, sigma: f64 },
    Weibull { scale: f64, shape: f64 },
    Laplace { loc: f64, scale: f64 },
    Logistic { loc: f64, scale: f64 },
    Cauchy { loc: f64, scale: f64 },
    Exponential { rate: f64 },
    /// Density proportional to `(1 + x²)^{-theta}`.
    PearsonVII { theta: f64 },
}

/// Covariance of the shifted component of a multivariate normal mixture.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MixtureCovariance {
    /// `s · I_d`
    Scaled(f64),
    /// Unit diagonal and `0.9` off the diagonal.
    Equicorrelated,
}

/// A sampling distribution on `R^d`.
#[derive(Debug, Clone, PartialEq)]
pub enum AlternativeSpec {
    StdNormal { d: usize },
    Univariate(Univariate),
    /// `(1-p) N_d(0, I) + p N_d(mu·1, Σ)`
    NormalMixture { d: usize, p: f64, mu: f64, cov: MixtureCovariance },
    MultivariateT { d: usize, nu: f64 },
    /// Independent components drawn from `base`.
    ProductIid { d: usize, base: Univariate },
    /// `R · U` with `U` uniform on the sphere and `R` drawn from `radius`.
    Spherical { d: usize, radius: Univariate },
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be positive, got {v}")))
    }
}

fn finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be finite, got {v}")))
    }
}

fn probability(v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(invalid(format!("mixing probability must lie in (0, 1), got {v}")))
    }
}

impl Univariate {
    pub fn validate(&self) -> Result<()> {
        use Univariate::*;
        match *self {
            Normal { mean, sd } => finite("mean", mean).and(positive("sd", sd)),
            NormalMixture { p, mu, sigma2 } => probability(p).and(finite("mu", mu)).and(positive("sigma2", sigma2)),
            StudentT { nu } | ChiSquared { nu } => {
                if nu >= 1.0 && nu.is_finite() {
                    Ok(())
                } else {
                    Err(invalid(format!("degrees of freedom must be at least 1, got {nu}")))
                }
            }
            Uniform { low, high } => {
                if low.is_finite() && high.is_finite() && low < high {
                    Ok(())
                } else {
                    Err(invalid(format!("uniform bounds must satisfy low < high, got ({low}, {high})")))
                }
            }
            Beta { alpha, beta } => positive("alpha", alpha).and(positive("beta", beta)),
            Gamma { shape, rate } => positive("shape", shape).and(positive("rate", rate)),
            Gumbel { loc, scale } | Laplace { loc, scale } | Logistic { loc, scale } | Cauchy { loc, scale } => {
                finite("loc", loc).and(positive("scale", scale))
            }
            LogNormal { mu, sigma } => finite("mu", mu).and(positive("sigma", sigma)),
            Weibull { scale, shape } => positive("scale", scale).and(positive("shape", shape)),
            Exponential { rate } => positive("rate", rate),
            PearsonVII { theta } => {
                if theta > 1.0 && theta.is_finite() {
                    Ok(())
                } else {
                    Err(invalid(format!("Pearson VII parameter must exceed 1, got {theta}")))
                }
            }
        }
    }

    /// One draw. The law must have been validated.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        use Univariate::*;
        const OK: &str = "validated parameters";
        match *self {
            Normal { mean, sd } => mean + sd * rng.sample::<f64, _>(StandardNormal),
            NormalMixture { p, mu, sigma2 } => {
                let z: f64 = rng.sample(StandardNormal);
                if rng.random::<f64>() < p {
                    mu + sigma2.sqrt() * z
                } else {
                    z
                }
            }
            StudentT { nu } => rd::StudentT::new(nu).expect(OK).sample(rng),
            Uniform { low, high } => low + (high - low) * rng.random::<f64>(),
            ChiSquared { nu } => rd::ChiSquared::new(nu).expect(OK).sample(rng),
            Beta { alpha, beta } => rd::Beta::new(alpha, beta).expect(OK).sample(rng),
            Gamma { shape, rate } => rd::Gamma::new(shape, 1.0 / rate).expect(OK).sample(rng),
            Gumbel { loc, scale } => rd::Gumbel::new(loc, scale).expect(OK).sample(rng),
            LogNormal { mu, sigma } => rd::LogNormal::new(mu, sigma).expect(OK).sample(rng),
            Weibull { scale, shape } => rd::Weibull::new(scale, shape).expect(OK).sample(rng),
            Laplace { loc, scale } => {
                let u: f64 = rng.random::<f64>() - 0.5;
                loc - scale * u.signum() * (1.0 - 2.0 * u.abs()).ln()
            }
            Logistic { loc, scale } => {
                let u: f64 = rng.random_range(f64::EPSILON..1.0);
                loc + scale * (u / (1.0 - u)).ln()
            }
            Cauchy { loc, scale } => rd::Cauchy::new(loc, scale).expect(OK).sample(rng),
            Exponential { rate } => Exp::new(rate).expect(OK).sample(rng),
            PearsonVII { theta } => {
                let nu = 2.0 * theta - 1.0;
                rd::StudentT::new(nu).expect(OK).sample(rng) / nu.sqrt()
            }
        }
    }

    /// Mean and variance when both are finite.
    pub fn mean_variance(&self) -> Option<(f64, f64)> {
        use Univariate::*;
        let euler_gamma = 0.577_215_664_901_532_9;
        match *self {
            Normal { mean, sd } => Some((mean, sd * sd)),
            NormalMixture { p, mu, sigma2 } => {
                let m = p * mu;
                Some((m, (1.0 - p) + p * (sigma2 + mu * mu) - m * m))
            }
            StudentT { nu } => (nu > 2.0).then(|| (0.0, nu / (nu - 2.0))),
            Uniform { low, high } => Some(((low + high) / 2.0, (high - low).powi(2) / 12.0)),
            ChiSquared { nu } => Some((nu, 2.0 * nu)),
            Beta { alpha, beta } => {
                let s = alpha + beta;
                Some((alpha / s, alpha * beta / (s * s * (s + 1.0))))
            }
            Gamma { shape, rate } => Some((shape / rate, shape / (rate * rate))),
            Gumbel { loc, scale } => Some((loc + euler_gamma * scale, PI * PI * scale * scale / 6.0)),
            LogNormal { mu, sigma } => {
                let s2 = sigma * sigma;
                Some(((mu + s2 / 2.0).exp(), (s2.exp() - 1.0) * (2.0 * mu + s2).exp()))
            }
            Weibull { scale, shape } => {
                let g1 = libm::tgamma(1.0 + 1.0 / shape);
                let g2 = libm::tgamma(1.0 + 2.0 / shape);
                Some((scale * g1, scale * scale * (g2 - g1 * g1)))
            }
            Laplace { loc, scale } => Some((loc, 2.0 * scale * scale)),
            Logistic { loc, scale } => Some((loc, PI * PI * scale * scale / 3.0)),
            Cauchy { .. } => None,
            Exponential { rate } => Some((1.0 / rate, 1.0 / (rate * rate))),
            PearsonVII { theta } => {
                let nu = 2.0 * theta - 1.0;
                (nu > 2.0).then(|| (0.0, 1.0 / (nu - 2.0)))
            }
        }
    }

    /// Second derivative of the characteristic function, for the centred
    /// symmetric laws where it has a closed form.
    pub fn cf_second_derivative(&self) -> Option<Box<dyn Fn(f64) -> f64 + Send + Sync>> {
        use Univariate::*;
        match *self {
            Normal { mean, sd } if mean == 0.0 => Some(Box::new(move |t| {
                let s2 = sd * sd;
                (s2 * s2 * t * t - s2) * (-0.5 * s2 * t * t).exp()
            })),
            Uniform { low, high } if low == -high => Some(Box::new(move |t| uniform_cf_second(high, t))),
            Laplace { loc, scale } if loc == 0.0 => Some(Box::new(move |t| laplace_cf_second(scale, t))),
            Logistic { loc, scale } if loc == 0.0 => Some(Box::new(move |t| logistic_cf_second(scale, t))),
            _ => None,
        }
    }

    fn name_and_params(&self) -> (&'static str, Vec<(&'static str, f64)>) {
        use Univariate::*;
        match *self {
            Normal { mean, sd } => ("normal", vec![("mean", mean), ("sd", sd)]),
            NormalMixture { p, mu, sigma2 } => ("nmix", vec![("p", p), ("mu", mu), ("sigma", sigma2)]),
            StudentT { nu } => ("t", vec![("nu", nu)]),
            Uniform { low, high } => ("uniform", vec![("low", low), ("high", high)]),
            ChiSquared { nu } => ("chisq", vec![("nu", nu)]),
            Beta { alpha, beta } => ("beta", vec![("alpha", alpha), ("beta", beta)]),
            Gamma { shape, rate } => ("gamma", vec![("shape", shape), ("rate", rate)]),
            Gumbel { loc, scale } => ("gumbel", vec![("loc", loc), ("scale", scale)]),
            LogNormal { mu, sigma } => ("lognormal", vec![("mu", mu), ("sigma", sigma)]),
            Weibull { scale, shape } => ("weibull", vec![("scale", scale), ("shape", shape)]),
            Laplace { loc, scale } => ("laplace", vec![("loc", loc), ("scale", scale)]),
            Logistic { loc, scale } => ("logistic", vec![("loc", loc), ("scale", scale)]),
            Cauchy { loc, scale } => ("cauchy", vec![("loc", loc), ("scale", scale)]),
            Exponential { rate } => ("exp", vec![("rate", rate)]),
            PearsonVII { theta } => ("pearson7", vec![("theta", theta)]),
        }
    }
}

impl fmt::Display for Univariate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (name, params) = self.name_and_params();
        let body: Vec<String> = params.iter().map(|(k, v)| format!("{k}={v}")).collect();
        write!(f, "{name}:{}", body.join(","))
    }
}

/// `φ''` of the uniform law on `(-c, c)`, `φ(t) = sin(ct)/(ct)`.
fn uniform_cf_second(c: f64, t: f64) -> f64 {
    let x = c * t;
    if x.abs() < 0.5 {
        // Σ_{k≥1} (-1)^k c^{2k} (2k)(2k-1) t^{2k-2} / (2k+1)!
        let mut total = 0.0;
        let mut fact = 6.0; // (2k+1)! at k = 1
        let mut power = 1.0; // x^{2k-2}
        for k in 1..=10 {
            let kf = k as f64;
            let term = (2.0 * kf) * (2.0 * kf - 1.0) * power / fact;
            total += if k % 2 == 1 { -term } else { term };
            power *= x * x;
            fact *= (2.0 * kf + 2.0) * (2.0 * kf + 3.0);
        }
        c * c * total
    } else {
        ((2.0 - x * x) * x.sin() - 2.0 * x * x.cos()) / (x * x * x) * c * c
    }
}

/// `φ''` of the Laplace law with scale `b`, `φ(t) = 1/(1 + b²t²)`.
fn laplace_cf_second(b: f64, t: f64) -> f64 {
    let b2 = b * b;
    (6.0 * b2 * b2 * t * t - 2.0 * b2) / (1.0 + b2 * t * t).powi(3)
}

/// `φ''` of the logistic law with scale `s`, `φ(t) = x / sinh x`, `x = π s t`.
fn logistic_cf_second(s: f64, t: f64) -> f64 {
    let k = PI * s;
    let x = (k * t).abs();
    let f2 = if x < 0.2 {
        let x2 = x * x;
        -1.0 / 3.0 + x2 * (7.0 / 30.0 + x2 * (-31.0 / 504.0 + x2 * (127.0 / 10_800.0 - x2 * 73.0 / 38_016.0)))
    } else if x < 40.0 {
        let sh = x.sinh();
        (-2.0 * x.cosh() * sh + x * (x.cosh().powi(2) + 1.0)) / (sh * sh * sh)
    } else {
        (2.0 * x - 4.0) * (-x).exp()
    };
    k * k * f2
}

/// `φ''` of `U(-√3, √3)`.
pub fn cf_second_uniform(t: f64) -> f64 {
    uniform_cf_second(SQRT_3, t)
}

/// `φ''` of the Laplace law with scale `1/√2` (unit variance).
pub fn cf_second_laplace(t: f64) -> f64 {
    laplace_cf_second(1.0 / SQRT_2, t)
}

/// `φ''` of the logistic law with scale `√3/π` (unit variance).
pub fn cf_second_logistic(t: f64) -> f64 {
    logistic_cf_second(SQRT_3 / PI, t)
}

/// Uniformly distributed unit vector in `R^d`.
pub fn sphere_uniform<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let g: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            return g.into_iter().map(|v| v / norm).collect();
        }
    }
}

impl AlternativeSpec {
    pub fn d(&self) -> usize {
        match self {
            AlternativeSpec::Univariate(_) => 1,
            AlternativeSpec::StdNormal { d }
            | AlternativeSpec::NormalMixture { d, .. }
            | AlternativeSpec::MultivariateT { d, .. }
            | AlternativeSpec::ProductIid { d, .. }
            | AlternativeSpec::Spherical { d, .. } => *d,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d() == 0 {
            return Err(invalid("dimension must be positive"));
        }
        match self {
            AlternativeSpec::StdNormal { .. } => Ok(()),
            AlternativeSpec::Univariate(u) => u.validate(),
            AlternativeSpec::NormalMixture { p, mu, cov, .. } => {
                probability(*p)?;
                finite("mu", *mu)?;
                match cov {
                    MixtureCovariance::Scaled(s) => positive("sigma", *s),
                    MixtureCovariance::Equicorrelated => Ok(()),
                }
            }
            AlternativeSpec::MultivariateT { nu, .. } => Univariate::StudentT { nu: *nu }.validate(),
            AlternativeSpec::ProductIid { base, .. } => base.validate(),
            AlternativeSpec::Spherical { radius, .. } => radius.validate(),
        }
    }

    /// Draws `n` observations from `rng`.
    pub fn sample_with<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<DataMatrix> {
        self.validate()?;
        let d = self.d();
        let mut values = Vec::with_capacity(n * d);
        match self {
            AlternativeSpec::StdNormal { .. } => {
                values.extend((0..n * d).map(|_| rng.sample::<f64, _>(StandardNormal)));
            }
            AlternativeSpec::Univariate(u) => values.extend((0..n).map(|_| u.draw(rng))),
            AlternativeSpec::ProductIid { base, .. } => values.extend((0..n * d).map(|_| base.draw(rng))),
            AlternativeSpec::NormalMixture { p, mu, cov, .. } => {
                let factor = mixture_factor(d, *cov);
                for _ in 0..n {
                    let z: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
                    if rng.random::<f64>() < *p {
                        for r in 0..d {
                            values.push(mu + (0..=r).map(|c| factor[(r, c)] * z[c]).sum::<f64>());
                        }
                    } else {
                        values.extend(z);
                    }
                }
            }
            AlternativeSpec::MultivariateT { nu, .. } => {
                let chi = ChiSquared::new(*nu).expect("validated parameters");
                for _ in 0..n {
                    let scale = (chi.sample(rng) / nu).sqrt().recip();
                    values.extend((0..d).map(|_| scale * rng.sample::<f64, _>(StandardNormal)));
                }
            }
            AlternativeSpec::Spherical { radius, .. } => {
                for _ in 0..n {
                    let u = sphere_uniform(d, rng);
                    let r = radius.draw(rng);
                    values.extend(u.into_iter().map(|v| r * v));
                }
            }
        }
        DataMatrix::from_row_major(n, d, &values)
    }

    /// Draws `n` observations with a generator seeded by `seed`.
    pub fn sample(&self, n: usize, seed: u64) -> Result<DataMatrix> {
        self.sample_with(n, &mut ChaCha8Rng::seed_from_u64(seed))
    }

    /// Parses the string grammar for dimension `d`.
    pub fn parse(text: &str, d: usize) -> Result<Self> {
        if d == 0 {
            return Err(invalid("dimension must be positive"));
        }
        let text = text.trim();
        let (head, rest) = split_head(text);
        let spec = match head {
            "prod" | "product" => {
                let base = parse_univariate(rest.ok_or_else(|| parse_err(text, "missing base law"))?)?;
                AlternativeSpec::ProductIid { d, base }
            }
            "spherical" | "sph" => {
                let radius = parse_univariate(rest.ok_or_else(|| parse_err(text, "missing radius law"))?)?;
                AlternativeSpec::Spherical { d, radius }
            }
            "normal" | "n" | "norm" if rest.is_none() => {
                if d == 1 {
                    AlternativeSpec::Univariate(Univariate::Normal { mean: 0.0, sd: 1.0 })
                } else {
                    AlternativeSpec::StdNormal { d }
                }
            }
            "mt" => {
                let args = Args::parse(text)?;
                let nu = args.number(0, &["nu", "df"], None)?;
                args.finish(&["nu", "df"])?;
                AlternativeSpec::MultivariateT { d, nu }
            }
            "t" if d > 1 => {
                let args = Args::parse(text)?;
                let nu = args.number(0, &["nu", "df"], None)?;
                args.finish(&["nu", "df"])?;
                AlternativeSpec::MultivariateT { d, nu }
            }
            "nmix" if d > 1 => {
                let args = Args::parse(text)?;
                let p = args.number(0, &["p"], None)?;
                let mu = args.number(1, &["mu"], None)?;
                let cov = match args.get(2, &["sigma", "cov"]) {
                    None | Some("I") | Some("i") => MixtureCovariance::Scaled(1.0),
                    Some("Bd") | Some("B") | Some("bd") => MixtureCovariance::Equicorrelated,
                    Some(v) => MixtureCovariance::Scaled(num(v)?),
                };
                args.finish(&["p", "mu", "sigma", "cov"])?;
                AlternativeSpec::NormalMixture { d, p, mu, cov }
            }
            _ => {
                let u = parse_univariate(text)?;
                if d == 1 {
                    AlternativeSpec::Univariate(u)
                } else {
                    AlternativeSpec::ProductIid { d, base: u }
                }
            }
        };
        spec.validate()?;
        Ok(spec)
    }
}

fn mixture_factor(d: usize, cov: MixtureCovariance) -> DMatrix<f64> {
    let m = match cov {
        MixtureCovariance::Scaled(s) => DMatrix::identity(d, d) * s,
        MixtureCovariance::Equicorrelated => DMatrix::from_fn(d, d, |r, c| if r == c { 1.0 } else { 0.9 }),
    };
    m.cholesky().expect("mixture covariance is positive definite").l()
}

impl fmt::Display for AlternativeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AlternativeSpec::StdNormal { .. } => f.write_str("normal"),
            AlternativeSpec::Univariate(u) => write!(f, "{u}"),
            AlternativeSpec::NormalMixture { p, mu, cov, .. } => {
                let sigma = match cov {
                    MixtureCovariance::Scaled(s) if *s == 1.0 => "I".to_string(),
                    MixtureCovariance::Scaled(s) => s.to_string(),
                    MixtureCovariance::Equicorrelated => "Bd".to_string(),
                };
                write!(f, "nmix:p={p},mu={mu},sigma={sigma}")
            }
            AlternativeSpec::MultivariateT { nu, .. } => write!(f, "mt:nu={nu}"),
            AlternativeSpec::ProductIid { base, .. } => write!(f, "prod:{base}"),
            AlternativeSpec::Spherical { radius, .. } => write!(f, "spherical:{radius}"),
        }
    }
}

/// Serialized as `{"d": .., "spec": "<grammar string>"}`.
impl Serialize for AlternativeSpec {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr {
            d: usize,
            spec: String,
        }
        Repr { d: self.d(), spec: self.to_string() }.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for AlternativeSpec {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Repr {
            d: usize,
            spec: String,
        }
        let r = Repr::deserialize(deserializer)?;
        AlternativeSpec::parse(&r.spec, r.d).map_err(serde::de::Error::custom)
    }
}

fn parse_err(text: &str, detail: &str) -> Error {
    Error::Parse { what: "distribution", detail: format!("{text:?}: {detail}") }
}

fn num(v: &str) -> Result<f64> {
    let v = v.trim();
    let value = match v {
        "sqrt3" | "sqrt(3)" => SQRT_3,
        "-sqrt3" | "-sqrt(3)" => -SQRT_3,
        _ => v.parse().map_err(|_| Error::Parse { what: "number", detail: v.to_string() })?,
    };
    Ok(value)
}

/// Splits `name:rest` into the name and the remainder.
fn split_head(text: &str) -> (&str, Option<&str>) {
    let name_end = text.find([':', '(']).unwrap_or(text.len());
    let name = text[..name_end].trim();
    match text[name_end..].strip_prefix(':') {
        Some(rest) => (name, Some(rest.trim())),
        None => (name, None),
    }
}

/// Arguments of `name:k=v,...` or `name(v,...)`.
struct Args {
    name: String,
    positional: Vec<String>,
    keyed: Vec<(String, String)>,
}

impl Args {
    fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        let (name, body) = if let Some(open) = text.find('(') {
            let inner = text[open + 1..]
                .strip_suffix(')')
                .ok_or_else(|| parse_err(text, "unbalanced parenthesis"))?;
            (text[..open].trim(), inner)
        } else if let Some(colon) = text.find(':') {
            (text[..colon].trim(), &text[colon + 1..])
        } else {
            (text, "")
        };
        let mut positional = Vec::new();
        let mut keyed = Vec::new();
        for part in body.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            match part.split_once('=') {
                Some((k, v)) => keyed.push((k.trim().to_string(), v.trim().to_string())),
                None if keyed.is_empty() => positional.push(part.to_string()),
                None => return Err(parse_err(text, "positional value after key=value")),
            }
        }
        Ok(Self { name: name.to_ascii_lowercase(), positional, keyed })
    }

    fn get(&self, index: usize, keys: &[&str]) -> Option<&str> {
        self.keyed
            .iter()
            .find(|(k, _)| keys.contains(&k.as_str()))
            .map(|(_, v)| v.as_str())
            .or_else(|| self.positional.get(index).map(String::as_str))
    }

    fn number(&self, index: usize, keys: &[&str], default: Option<f64>) -> Result<f64> {
        match self.get(index, keys) {
            Some(v) => num(v),
            None => default.ok_or_else(|| Error::Parse {
                what: "distribution",
                detail: format!("{}: missing parameter {}", self.name, keys[0]),
            }),
        }
    }

    fn finish(&self, allowed: &[&str]) -> Result<()> {
        if let Some((k, _)) = self.keyed.iter().find(|(k, _)| !allowed.contains(&k.as_str())) {
            return Err(Error::Parse { what: "distribution", detail: format!("{}: unknown parameter {k}", self.name) });
        }
        if self.positional.len() > allowed.len() {
            return Err(Error::Parse { what: "distribution", detail: format!("{}: too many values", self.name) });
        }
        Ok(())
    }
}

/// Parses a univariate law. Defaults give unit variance for the
/// uniform, Laplace and logistic laws.
pub fn parse_univariate(text: &str) -> Result<Univariate> {
    let args = Args::parse(text)?;
    let two = |k1: &'static str, k2: &'static str, d1: Option<f64>, d2: Option<f64>| -> Result<(f64, f64)> {
        let x = args.number(0, &[k1], d1)?;
        let y = args.number(1, &[k2], d2)?;
        args.finish(&[k1, k2])?;
        Ok((x, y))
    };
    let one = |k: &'static str, alias: &'static str, default: Option<f64>| -> Result<f64> {
        let x = args.number(0, &[k, alias], default)?;
        args.finish(&[k, alias])?;
        Ok(x)
    };
    use Univariate::*;
    let u = match args.name.as_str() {
        "normal" | "n" | "norm" => {
            let (mean, sd) = two("mean", "sd", Some(0.0), Some(1.0))?;
            Normal { mean, sd }
        }
        "nmix" => {
            let p = args.number(0, &["p"], None)?;
            let mu = args.number(1, &["mu"], None)?;
            let sigma2 = args.number(2, &["sigma", "sigma2"], Some(1.0))?;
            args.finish(&["p", "mu", "sigma", "sigma2"])?;
            NormalMixture { p, mu, sigma2 }
        }
        "t" | "student" => StudentT { nu: one("nu", "df", None)? },
        "uniform" | "u" | "unif" => {
            let (low, high) = two("low", "high", Some(-SQRT_3), Some(SQRT_3))?;
            Uniform { low, high }
        }
        "chisq" | "chi2" => ChiSquared { nu: one("nu", "df", None)? },
        "beta" | "b" => {
            let (alpha, beta) = two("alpha", "beta", None, None)?;
            Beta { alpha, beta }
        }
        "gamma" => {
            let (shape, rate) = two("shape", "rate", None, Some(1.0))?;
            Gamma { shape, rate }
        }
        "gumbel" | "gum" => {
            let (loc, scale) = two("loc", "scale", Some(0.0), Some(1.0))?;
            Gumbel { loc, scale }
        }
        "lognormal" | "ln" => {
            let (mu, sigma) = two("mu", "sigma", Some(0.0), Some(1.0))?;
            LogNormal { mu, sigma }
        }
        "weibull" | "w" => {
            let (scale, shape) = two("scale", "shape", None, None)?;
            Weibull { scale, shape }
        }
        "laplace" => {
            let (loc, scale) = two("loc", "scale", Some(0.0), Some(1.0 / SQRT_2))?;
            Laplace { loc, scale }
        }
        "logistic" => {
            let (loc, scale) = two("loc", "scale", Some(0.0), Some(SQRT_3 / PI))?;
            Logistic { loc, scale }
        }
        "cauchy" | "c" => {
            let (loc, scale) = two("loc", "scale", Some(0.0), Some(1.0))?;
            Cauchy { loc, scale }
        }
        "exp" | "exponential" => Exponential { rate: one("rate", "lambda", Some(1.0))? },
        "pearson7" | "p7" | "pvii" => PearsonVII { theta: one("theta", "df", None)? },
        other => return Err(parse_err(text, &format!("unknown distribution {other:?}"))),
    };
    u.validate()?;
    Ok(u)
}
