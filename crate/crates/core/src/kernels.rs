//! Kernel functions, Gram matrices and feature-space centering.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{check_finite, dot, sq_dist, Matrix};

/// Maximum number of columns the median heuristic looks at.
pub const MEDIAN_SUBSAMPLE: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum KernelSpec {
    /// `xᵀy`
    Linear,
    /// `exp(−‖x − y‖² / (2σ²))`
    Rbf { sigma: f64 },
    /// `(xᵀy + offset)^degree`
    Polynomial { degree: u32, offset: f64 },
}

impl KernelSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            KernelSpec::Linear => Ok(()),
            KernelSpec::Rbf { sigma } if sigma > 0.0 && sigma.is_finite() => Ok(()),
            KernelSpec::Rbf { sigma } => Err(Error::InvalidParameter(format!(
                "rbf sigma must be positive, got {sigma}"
            ))),
            KernelSpec::Polynomial { degree, offset } => {
                if degree < 1 {
                    return Err(Error::InvalidParameter("polynomial degree must be >= 1".into()));
                }
                // negative offsets break positive semidefiniteness
                if !(offset >= 0.0) || !offset.is_finite() {
                    return Err(Error::InvalidParameter(format!(
                        "polynomial offset must be finite and >= 0, got {offset}"
                    )));
                }
                Ok(())
            }
        }
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        match *self {
            KernelSpec::Linear => dot(x, y),
            KernelSpec::Rbf { sigma } => (-sq_dist(x, y) / (2.0 * sigma * sigma)).exp(),
            KernelSpec::Polynomial { degree, offset } => (dot(x, y) + offset).powi(degree as i32),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            KernelSpec::Linear => "linear",
            KernelSpec::Rbf { .. } => "rbf",
            KernelSpec::Polynomial { .. } => "polynomial",
        }
    }
}

/// Median pairwise Euclidean distance over an evenly spaced subsample of columns.
///
/// Falls back to 1.0 when every sampled column coincides.
pub fn median_sigma(x: &Matrix) -> f64 {
    let n = x.ncols();
    let m = n.min(MEDIAN_SUBSAMPLE);
    if m < 2 {
        return 1.0;
    }
    let idx: Vec<usize> = (0..m).map(|i| i * n / m).collect();
    let mut dists = Vec::with_capacity(m * (m - 1) / 2);
    for (a, &i) in idx.iter().enumerate() {
        for &j in &idx[a + 1..] {
            dists.push(sq_dist(x.col_as_slice(i), x.col_as_slice(j)).sqrt());
        }
    }
    let mid = dists.len() / 2;
    let (_, median, _) = dists.select_nth_unstable_by(mid, f64::total_cmp);
    if *median > 0.0 {
        *median
    } else {
        1.0
    }
}

/// `n×n` Gram matrix over the columns of `x` (`d×n`).
pub fn gram_matrix(x: &Matrix, spec: &KernelSpec) -> Result<Matrix> {
    spec.validate()?;
    check_finite(x, "kernel input")?;
    let n = x.ncols();
    let mut k = Matrix::zeros(n, n);
    for j in 0..n {
        let xj = x.col_as_slice(j);
        for i in j..n {
            let v = spec.eval(x.col_as_slice(i), xj);
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    Ok(k)
}

/// `n_train × n_query` kernel evaluations.
pub fn cross_kernel(train: &Matrix, query: &Matrix, spec: &KernelSpec) -> Result<Matrix> {
    spec.validate()?;
    if train.nrows() != query.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "train has {} features, query has {}",
            train.nrows(),
            query.nrows()
        )));
    }
    check_finite(train, "kernel train input")?;
    check_finite(query, "kernel query input")?;
    let mut k = Matrix::zeros(train.ncols(), query.ncols());
    for j in 0..query.ncols() {
        let q = query.col_as_slice(j);
        for i in 0..train.ncols() {
            k[(i, j)] = spec.eval(train.col_as_slice(i), q);
        }
    }
    Ok(k)
}

/// Training-side statistics needed to center kernel rows of unseen samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelCentering {
    pub column_means: Vec<f64>,
    pub grand_mean: f64,
}

impl KernelCentering {
    pub fn fit(k: &Matrix) -> Self {
        let n = k.ncols();
        let column_means: Vec<f64> = (0..n)
            .map(|j| k.col_as_slice(j).iter().sum::<f64>() / n as f64)
            .collect();
        let grand_mean = column_means.iter().sum::<f64>() / n as f64;
        KernelCentering {
            column_means,
            grand_mean,
        }
    }

    /// Centers an `n_train × m` cross-kernel block against the training Gram.
    pub fn apply(&self, cross: &Matrix) -> Result<Matrix> {
        let n = self.column_means.len();
        if cross.nrows() != n {
            return Err(Error::DimensionMismatch(format!(
                "cross kernel has {} rows, expected {n}",
                cross.nrows()
            )));
        }
        let mut out = cross.clone();
        for j in 0..cross.ncols() {
            let qmean = cross.col_as_slice(j).iter().sum::<f64>() / n as f64;
            for i in 0..n {
                out[(i, j)] = cross[(i, j)] - self.column_means[i] - qmean + self.grand_mean;
            }
        }
        Ok(out)
    }
}

/// Double-centered Gram `HKH` with `H = I − 11ᵀ/n`.
pub fn center_gram(k: &Matrix) -> Result<Matrix> {
    if k.nrows() != k.ncols() || k.nrows() == 0 {
        return Err(Error::DimensionMismatch(format!(
            "center_gram expects a square matrix, got {}x{}",
            k.nrows(),
            k.ncols()
        )));
    }
    let n = k.nrows();
    let row_means: Vec<f64> = (0..n)
        .map(|i| (0..n).map(|j| k[(i, j)]).sum::<f64>() / n as f64)
        .collect();
    let col_means: Vec<f64> = (0..n)
        .map(|j| k.col_as_slice(j).iter().sum::<f64>() / n as f64)
        .collect();
    let grand = col_means.iter().sum::<f64>() / n as f64;
    Ok(Matrix::from_fn(n, n, |i, j| {
        k[(i, j)] - row_means[i] - col_means[j] + grand
    }))
}
