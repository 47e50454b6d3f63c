//! Data matrices and the scaled residuals `Y_j = S_n^{-1/2}(X_j - mean)`.
//!
//! The covariance uses the `1/n` divisor and its inverse square root is the
//! symmetric one obtained from an eigendecomposition, so the residuals have
//! zero mean and identity sample covariance exactly (up to rounding).

use std::io::Read;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Relative eigenvalue floor below which the sample covariance is treated as singular.
pub const SINGULARITY_TOLERANCE: f64 = 1e-12;

/// An `n x d` matrix of observations, one row per observation.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    data: DMatrix<f64>,
}

impl DataMatrix {
    pub fn from_matrix(data: DMatrix<f64>) -> Result<Self> {
        if data.nrows() == 0 || data.ncols() == 0 {
            return Err(Error::EmptyInput);
        }
        for j in 0..data.nrows() {
            for c in 0..data.ncols() {
                if !data[(j, c)].is_finite() {
                    return Err(Error::NonFinite { row: j, col: c });
                }
            }
        }
        Ok(Self { data })
    }

    /// Builds a matrix from `n` rows of `d` values stored contiguously.
    pub fn from_row_major(n: usize, d: usize, values: &[f64]) -> Result<Self> {
        if values.len() != n * d {
            return Err(Error::InvalidParameter(format!(
                "{} values cannot fill a {n} x {d} matrix",
                values.len()
            )));
        }
        Self::from_matrix(DMatrix::from_row_slice(n, d, values))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let first = rows.first().ok_or(Error::EmptyInput)?;
        let d = first.len();
        let mut flat = Vec::with_capacity(rows.len() * d);
        for (j, row) in rows.iter().enumerate() {
            if row.len() != d {
                return Err(Error::RaggedRow { row: j, got: row.len(), expected: d });
            }
            flat.extend_from_slice(row);
        }
        Self::from_row_major(rows.len(), d, &flat)
    }

    /// Univariate sample as an `n x 1` matrix.
    pub fn from_column(values: &[f64]) -> Result<Self> {
        Self::from_row_major(values.len(), 1, values)
    }

    /// Reads numeric delimited text. Every column must parse as a float.
    pub fn read_csv<R: Read>(reader: R, has_header: bool, delimiter: u8) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(has_header)
            .delimiter(delimiter)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut rows = Vec::new();
        for (j, record) in rdr.records().enumerate() {
            let record = record?;
            let row = record
                .iter()
                .enumerate()
                .map(|(c, field)| {
                    field.parse::<f64>().map_err(|_| Error::Parse {
                        what: "numeric field",
                        detail: format!("row {j}, column {c}: {field:?}"),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        Self::from_rows(&rows)
    }

    pub fn n(&self) -> usize {
        self.data.nrows()
    }

    pub fn d(&self) -> usize {
        self.data.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn row(&self, j: usize) -> Vec<f64> {
        self.data.row(j).iter().copied().collect()
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        self.data.column(c).iter().copied().collect()
    }
}

/// Scaled residuals together with the moments used to produce them.
#[derive(Debug, Clone)]
pub struct StandardizedSample {
    n: usize,
    d: usize,
    /// Row-major `n x d` residuals.
    residuals: Vec<f64>,
    norms_sq: Vec<f64>,
    mean: DVector<f64>,
    covariance: DMatrix<f64>,
    inv_sqrt: DMatrix<f64>,
}

impl StandardizedSample {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// Residual `Y_j` as a slice of length `d`.
    pub fn residual(&self, j: usize) -> &[f64] {
        &self.residuals[j * self.d..(j + 1) * self.d]
    }

    pub fn residuals_row_major(&self) -> &[f64] {
        &self.residuals
    }

    pub fn residual_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.n, self.d, &self.residuals)
    }

    /// Squared norms `‖Y_j‖²`.
    pub fn norms_sq(&self) -> &[f64] {
        &self.norms_sq
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    pub fn inv_sqrt(&self) -> &DMatrix<f64> {
        &self.inv_sqrt
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, f64> {
        self.residuals.chunks_exact(self.d)
    }
}

pub fn sample_mean(x: &DataMatrix) -> DVector<f64> {
    let n = x.n() as f64;
    DVector::from_iterator(x.d(), x.matrix().column_iter().map(|c| c.sum() / n))
}

/// Sample covariance with the `1/n` divisor.
pub fn sample_covariance(x: &DataMatrix, mean: &DVector<f64>) -> DMatrix<f64> {
    let n = x.n();
    let d = x.d();
    let mut cov = DMatrix::zeros(d, d);
    let mut centered = vec![0.0; d];
    for j in 0..n {
        for c in 0..d {
            centered[c] = x.matrix()[(j, c)] - mean[c];
        }
        for r in 0..d {
            for c in r..d {
                cov[(r, c)] += centered[r] * centered[c];
            }
        }
    }
    for r in 0..d {
        for c in r..d {
            let v = cov[(r, c)] / n as f64;
            cov[(r, c)] = v;
            cov[(c, r)] = v;
        }
    }
    cov
}

/// Symmetric inverse square root of a symmetric positive definite matrix.
///
/// Fails with [`Error::SingularCovariance`] when the smallest eigenvalue is at
/// most `rel_tol` times the largest.
pub fn spd_inverse_sqrt(s: &DMatrix<f64>, rel_tol: f64) -> Result<DMatrix<f64>> {
    let sym = (s + s.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let max = eig.eigenvalues.max();
    let min = eig.eigenvalues.min();
    if !(max > 0.0) || min <= rel_tol * max {
        return Err(Error::SingularCovariance { min_eigenvalue: min, max_eigenvalue: max });
    }
    let inv_root = eig.eigenvalues.map(|l| 1.0 / l.sqrt());
    let q = &eig.eigenvectors;
    Ok(q * DMatrix::from_diagonal(&inv_root) * q.transpose())
}

/// Computes the scaled residuals of `x`.
pub fn scaled_residuals(x: &DataMatrix) -> Result<StandardizedSample> {
    let n = x.n();
    let d = x.d();
    if n < d + 1 {
        return Err(Error::TooFewObservations { needed: d + 1, got: n, d });
    }
    let mean = sample_mean(x);
    let covariance = sample_covariance(x, &mean);
    let inv_sqrt = spd_inverse_sqrt(&covariance, SINGULARITY_TOLERANCE)?;

    let mut residuals = vec![0.0; n * d];
    let mut centered = vec![0.0; d];
    for j in 0..n {
        for c in 0..d {
            centered[c] = x.matrix()[(j, c)] - mean[c];
        }
        let out = &mut residuals[j * d..(j + 1) * d];
        for (r, o) in out.iter_mut().enumerate() {
            *o = (0..d).map(|c| inv_sqrt[(r, c)] * centered[c]).sum();
        }
    }
    let norms_sq = residuals.chunks_exact(d).map(|y| y.iter().map(|v| v * v).sum()).collect();
    Ok(StandardizedSample { n, d, residuals, norms_sq, mean, covariance, inv_sqrt })
}
