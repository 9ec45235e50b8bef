use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{center_gram, gram_matrix, KernelCentering, KernelSpec};
use crate::linalg::{center_columns, gen_eig, ridged_cholesky, row_means, symmetrize, trace, Matrix};

use super::graph_methods::finish_linear;
use super::wkrrr::{wkrrr_solve, WkrrrOptions, WkrrrProblem};
use super::{check_samples, class_indicator, rayleigh_ritz, DrModel, KernelModel, Method, SpectrumOrder};

/// Default relative ridge for KDA, scaled by `tr(K_c K_c)`.
pub const KDA_DEFAULT_RIDGE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LdaRoute {
    /// Trace generalized eigenproblem.
    #[default]
    Gep,
    /// Weighted reduced-rank regression solved by alternating least squares.
    Ls,
}

/// `X G (GᵀG)⁻¹ Gᵀ Xᵀ` for an `r×n` matrix `X`.
fn between_scatter(x: &Matrix, g: &Matrix) -> Matrix {
    let counts: Vec<f64> = (0..g.ncols()).map(|c| g.col_as_slice(c).iter().sum()).collect();
    let mut xg = x * g;
    for c in 0..g.ncols() {
        let s = 1.0 / counts[c].sqrt();
        for v in xg.col_as_slice_mut(c) {
            *v *= s;
        }
    }
    symmetrize(&(&xg * xg.transpose()))
}

/// Linear discriminant analysis with `k = #classes − 1`.
pub fn fit_lda(d: &Matrix, labels: &[usize], route: LdaRoute) -> Result<DrModel> {
    check_samples(d, 2)?;
    let n = d.ncols();
    let g = class_indicator(labels, n)?;
    let k = (g.ncols() - 1).min(d.nrows());
    let mean = row_means(d);
    let dc = center_columns(d, &mean);
    let a = between_scatter(&dc, &g);
    let b = symmetrize(&(&dc * dc.transpose()));
    match route {
        LdaRoute::Gep => {
            let eig = gen_eig(&a, &b)?;
            finish_linear(Method::Lda, &dc, mean, &eig, k)
        }
        LdaRoute::Ls => {
            let (_, ridge) = ridged_cholesky(&b)?;
            let problem = WkrrrProblem::lda(&dc, labels, k)?.with_ridge(ridge);
            let sol = wkrrr_solve(&problem, &WkrrrOptions::default())?;
            let mut metric = b.clone();
            for i in 0..metric.nrows() {
                metric[(i, i)] += ridge;
            }
            let basis = crate::linalg::orthonormal_basis(&sol.a)?;
            let (projection, values) = rayleigh_ritz(&basis, &a, &metric)?;
            let train_embedding = projection.transpose() * &dc;
            let mut warnings = Vec::new();
            if ridge > 0.0 {
                warnings.push(format!("metric matrix regularized with ridge {ridge:.3e}"));
            }
            Ok(DrModel {
                method: Method::Lda,
                k,
                projection,
                train_mean: mean,
                kernel: None,
                train_embedding,
                spectrum: values,
                spectrum_order: SpectrumOrder::Largest,
                ridge,
                warnings,
            })
        }
    }
}

/// Kernel discriminant analysis in coefficient space.
///
/// Solves `K_c G(GᵀG)⁻¹GᵀK_c α = λ (K_cK_c + rI) α` with
/// `r = ridge · tr(K_cK_c)`, and scales each `α` so that
/// `αᵀ(K_cK_c + rI)α / n = 1`. Both choices make the fitted projection
/// unchanged when every training sample is repeated.
pub fn fit_kda(d: &Matrix, labels: &[usize], spec: &KernelSpec, ridge: f64) -> Result<DrModel> {
    check_samples(d, 2)?;
    spec.validate()?;
    if !(ridge > 0.0) || !ridge.is_finite() {
        return Err(Error::InvalidParameter(format!("kda ridge must be positive, got {ridge}")));
    }
    let n = d.ncols();
    let g = class_indicator(labels, n)?;
    let k = g.ncols() - 1;
    let k_raw = gram_matrix(d, spec)?;
    let kc = center_gram(&k_raw)?;
    let a = between_scatter(&kc, &g);
    let mut b = symmetrize(&(&kc * &kc));
    let r = ridge * trace(&b);
    if !(r > 0.0) {
        return Err(Error::AllZeroSpectrum);
    }
    for i in 0..n {
        b[(i, i)] += r;
    }
    let eig = gen_eig(&a, &b)?;
    let scale = (n as f64).sqrt();
    let alpha = Matrix::from_fn(n, k, |i, c| eig.vectors[(i, c)] * scale);
    let train_embedding = alpha.transpose() * &kc;
    Ok(DrModel {
        method: Method::Kda,
        k,
        projection: alpha,
        train_mean: row_means(d),
        kernel: Some(KernelModel {
            spec: *spec,
            train: d.clone(),
            centering: KernelCentering::fit(&k_raw),
        }),
        train_embedding,
        spectrum: eig.values,
        spectrum_order: SpectrumOrder::Largest,
        ridge: r + eig.ridge,
        warnings: Vec::new(),
    })
}
