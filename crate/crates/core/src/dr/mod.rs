//! The seven reduction methods, the shared alternating least-squares solver
//! and the fitted-model type they all produce.

mod discriminant;
mod graph_methods;
mod spectral;
pub mod wkrrr;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{cross_kernel, KernelCentering, KernelSpec};
use crate::linalg::{canonicalize_signs, center_columns, gen_eig, Matrix};

pub use discriminant::{fit_kda, fit_lda, LdaRoute, KDA_DEFAULT_RIDGE};
pub use graph_methods::{fit_lle, fit_lpp, fit_lsda, LSDA_DEFAULT_ALPHA};
pub use spectral::{fit_kpca, fit_pca, PcaRoute};
pub use wkrrr::{wkrrr_solve, Init, WkrrrOptions, WkrrrProblem, WkrrrSolution};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Pca,
    Kpca,
    Lle,
    Lpp,
    Lda,
    Kda,
    Lsda,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::Pca,
        Method::Kpca,
        Method::Lle,
        Method::Lpp,
        Method::Lda,
        Method::Kda,
        Method::Lsda,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Pca => "pca",
            Method::Kpca => "kpca",
            Method::Lle => "lle",
            Method::Lpp => "lpp",
            Method::Lda => "lda",
            Method::Kda => "kda",
            Method::Lsda => "lsda",
        }
    }

    pub fn is_supervised(self) -> bool {
        matches!(self, Method::Lda | Method::Kda | Method::Lsda)
    }

    pub fn is_kernel(self) -> bool {
        matches!(self, Method::Kpca | Method::Kda)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown method {s:?}")))
    }
}

/// How many components to keep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum EnergyPolicy {
    /// Smallest rank whose leading spectrum carries at least this fraction of the total.
    Fraction { fraction: f64 },
    Fixed { k: usize },
}

impl EnergyPolicy {
    pub const STANDARD: EnergyPolicy = EnergyPolicy::Fraction { fraction: 0.98 };

    pub fn validate(&self) -> Result<()> {
        match *self {
            EnergyPolicy::Fraction { fraction } if fraction > 0.0 && fraction <= 1.0 => Ok(()),
            EnergyPolicy::Fraction { fraction } => Err(Error::InvalidParameter(format!(
                "energy fraction must lie in (0, 1], got {fraction}"
            ))),
            EnergyPolicy::Fixed { k } if k >= 1 => Ok(()),
            EnergyPolicy::Fixed { .. } => Err(Error::InvalidParameter("fixed rank must be >= 1".into())),
        }
    }
}

impl Default for EnergyPolicy {
    fn default() -> Self {
        EnergyPolicy::STANDARD
    }
}

/// Rank selection over a descending nonnegative spectrum.
pub fn select_k(spectrum: &[f64], policy: EnergyPolicy) -> Result<usize> {
    policy.validate()?;
    if spectrum.is_empty() {
        return Err(Error::AllZeroSpectrum);
    }
    if spectrum.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
        return Err(Error::InvalidParameter(
            "spectrum entries must be finite and nonnegative".into(),
        ));
    }
    let total: f64 = spectrum.iter().sum();
    if total <= 0.0 {
        return Err(Error::AllZeroSpectrum);
    }
    match policy {
        EnergyPolicy::Fixed { k } => Ok(k.min(spectrum.len())),
        EnergyPolicy::Fraction { fraction } => {
            let mut cum = 0.0;
            for (i, &v) in spectrum.iter().enumerate() {
                cum += v;
                if cum / total >= fraction {
                    return Ok(i + 1);
                }
            }
            Ok(spectrum.len())
        }
    }
}

/// Which end of the eigen-spectrum the retained components come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpectrumOrder {
    /// Largest eigenvalues, `spectrum` descending.
    Largest,
    /// Smallest eigenvalues, `spectrum` ascending.
    Smallest,
}

/// Kernel state kept for out-of-sample mapping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelModel {
    pub spec: KernelSpec,
    #[serde(with = "matrix_serde")]
    pub train: Matrix,
    pub centering: KernelCentering,
}

/// A fitted reduction.
///
/// For linear methods `projection` is `d×k` and maps mean-centered inputs.
/// For kernel methods it holds the `n×k` coefficients applied to centered
/// cross-kernel columns. LLE keeps an empty projection since it has no
/// out-of-sample map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrModel {
    pub method: Method,
    pub k: usize,
    #[serde(with = "matrix_serde")]
    pub projection: Matrix,
    pub train_mean: Vec<f64>,
    pub kernel: Option<KernelModel>,
    /// `k×n` training coordinates.
    #[serde(with = "matrix_serde")]
    pub train_embedding: Matrix,
    pub spectrum: Vec<f64>,
    pub spectrum_order: SpectrumOrder,
    /// Absolute ridge added to the metric side of a generalized eigenproblem.
    pub ridge: f64,
    pub warnings: Vec<String>,
}

impl DrModel {
    pub fn input_dim(&self) -> usize {
        self.train_mean.len()
    }

    pub fn supports_out_of_sample(&self) -> bool {
        self.method != Method::Lle
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string(self).map_err(|e| Error::Serialization(e.to_string()))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Serialization(e.to_string()))
    }
}

/// Maps the columns of `x` (`d×m`) into the `k×m` embedding.
pub fn transform(model: &DrModel, x: &Matrix) -> Result<Matrix> {
    if model.method == Method::Lle {
        return Err(Error::OutOfSampleUnsupported { method: "lle" });
    }
    if x.nrows() != model.input_dim() {
        return Err(Error::DimensionMismatch(format!(
            "model expects {} features, got {}",
            model.input_dim(),
            x.nrows()
        )));
    }
    match &model.kernel {
        Some(km) => {
            let cross = km.centering.apply(&cross_kernel(&km.train, x, &km.spec)?)?;
            Ok(model.projection.transpose() * &cross)
        }
        None => Ok(model.projection.transpose() * center_columns(x, &model.train_mean)),
    }
}

/// Distinct class ids in ascending order and the per-sample class index.
pub(crate) fn encode_classes(labels: &[usize]) -> (Vec<usize>, Vec<usize>) {
    let mut classes: Vec<usize> = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    let index = labels
        .iter()
        .map(|l| classes.binary_search(l).expect("label present"))
        .collect();
    (classes, index)
}

/// Validates supervised inputs and returns the `n×c` class indicator matrix.
pub(crate) fn class_indicator(labels: &[usize], n: usize) -> Result<Matrix> {
    if labels.len() != n {
        return Err(Error::DimensionMismatch(format!("{} labels for {n} samples", labels.len())));
    }
    let (classes, index) = encode_classes(labels);
    if classes.len() < 2 {
        return Err(Error::SingleClass);
    }
    let mut counts = vec![0usize; classes.len()];
    for &c in &index {
        counts[c] += 1;
    }
    if let Some(c) = counts.iter().position(|&m| m < 2) {
        return Err(Error::SmallClass {
            class: classes[c],
            min: 2,
        });
    }
    let mut g = Matrix::zeros(n, classes.len());
    for (i, &c) in index.iter().enumerate() {
        g[(i, c)] = 1.0;
    }
    Ok(g)
}

/// Re-solves `a v = λ b v` inside the column span of `basis` and returns the
/// leading `basis.ncols()` directions, normalized so that `vᵀ b v = 1`.
pub(crate) fn rayleigh_ritz(basis: &Matrix, a: &Matrix, b: &Matrix) -> Result<(Matrix, Vec<f64>)> {
    let sa = basis.transpose() * a * basis;
    let sb = basis.transpose() * b * basis;
    let small = gen_eig(&crate::linalg::symmetrize(&sa), &crate::linalg::symmetrize(&sb))?;
    let mut v = basis * &small.vectors;
    canonicalize_signs(&mut v);
    Ok((v, small.values))
}

pub(crate) fn check_samples(d: &Matrix, min: usize) -> Result<()> {
    if d.ncols() < min {
        return Err(Error::TooFewSamples(format!(
            "need at least {min} samples, got {}",
            d.ncols()
        )));
    }
    if d.nrows() == 0 {
        return Err(Error::DimensionMismatch("data has no features".into()));
    }
    crate::linalg::check_finite(d, "input data")
}

pub(crate) mod matrix_serde {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::linalg::Matrix;

    #[derive(Serialize, Deserialize)]
    struct Dense {
        rows: usize,
        cols: usize,
        /// Column-major entries.
        data: Vec<f64>,
    }

    pub fn serialize<S: Serializer>(m: &Matrix, s: S) -> Result<S::Ok, S::Error> {
        let data = (0..m.ncols())
            .flat_map(|j| m.col_as_slice(j).iter().copied())
            .collect();
        Dense {
            rows: m.nrows(),
            cols: m.ncols(),
            data,
        }
        .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Matrix, D::Error> {
        let dense = Dense::deserialize(d)?;
        if dense.data.len() != dense.rows * dense.cols {
            return Err(serde::de::Error::custom(format!(
                "matrix {}x{} has {} entries",
                dense.rows,
                dense.cols,
                dense.data.len()
            )));
        }
        Ok(Matrix::from_fn(dense.rows, dense.cols, |i, j| dense.data[j * dense.rows + i]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn select_k_hand_cumulative_sum() {
        let s = [0.5, 0.3, 0.15, 0.05];
        assert_eq!(select_k(&s, EnergyPolicy::Fraction { fraction: 0.98 }).unwrap(), 4);
        assert_eq!(select_k(&s, EnergyPolicy::Fraction { fraction: 0.95 }).unwrap(), 3);
        assert_eq!(select_k(&s, EnergyPolicy::Fraction { fraction: 1.0 }).unwrap(), 4);
        assert_eq!(select_k(&s, EnergyPolicy::Fixed { k: 9 }).unwrap(), 4);
        assert_eq!(select_k(&[0.0, 0.0], EnergyPolicy::Fixed { k: 1 }), Err(Error::AllZeroSpectrum));
    }

    #[test]
    fn select_k_matches_linear_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let len = rng.random_range(1..30);
            let mut s: Vec<f64> = (0..len).map(|_| rng.random_range(0.0..1.0)).collect();
            s.sort_by(|a, b| b.total_cmp(a));
            let fraction = rng.random_range(0.05..1.0);
            let total: f64 = s.iter().sum();
            let scan = (1..=len)
                .find(|&k| s[..k].iter().sum::<f64>() / total >= fraction)
                .unwrap_or(len);
            assert_eq!(select_k(&s, EnergyPolicy::Fraction { fraction }).unwrap(), scan);
        }
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert!("isomap".parse::<Method>().is_err());
    }

    #[test]
    fn indicator_rejects_bad_labels() {
        assert_eq!(class_indicator(&[1, 1, 1], 3), Err(Error::SingleClass));
        assert_eq!(
            class_indicator(&[0, 0, 5], 3),
            Err(Error::SmallClass { class: 5, min: 2 })
        );
        let g = class_indicator(&[7, 3, 7, 3], 4).unwrap();
        assert_eq!(g[(0, 1)], 1.0);
        assert_eq!(g[(1, 0)], 1.0);
    }
}
