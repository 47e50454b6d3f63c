//! Affine invariant test of multivariate normality based on the harmonic
//! oscillator characterization of the normal characteristic function.
//!
//! The statistic `T_{n,a}` is a weighted `L²` distance between the Laplacian
//! of the empirical characteristic function of the scaled residuals and the
//! corresponding expression for the standard normal law. Besides the
//! statistic the crate provides Monte Carlo and limit-law critical values,
//! variance estimation and confidence intervals under fixed alternatives,
//! competing tests, and samplers for simulation studies.

pub mod competitors;
pub mod error;
pub mod inference;
pub mod mc;
pub mod normal;
pub mod nulldist;
pub mod quadrature;
pub mod samplers;
pub mod standardize;
pub mod statistic;
pub mod study;

pub use error::{Error, Result};
pub use standardize::{scaled_residuals, DataMatrix, StandardizedSample};
pub use statistic::{t_statistic, StatisticValue, TuningParameter};
