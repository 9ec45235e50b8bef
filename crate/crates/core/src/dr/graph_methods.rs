use crate::error::{Error, Result};
use crate::graphs::{lle_weights, lsda_graphs, AffinityGraph};
use crate::linalg::{center_columns, gen_eig, identity, row_means, sym_eig, symmetrize, trace, Matrix};

use super::{check_samples, encode_classes, select_k, DrModel, EnergyPolicy, Method, SpectrumOrder};

pub const LSDA_DEFAULT_ALPHA: f64 = 0.5;

/// `D_c (diag(s) + W) D_cᵀ` for a symmetric sparse `W` given by rows.
fn sandwich(dc: &Matrix, diag: Option<&[f64]>, rows: Option<&AffinityGraph>) -> Matrix {
    let (d, n) = (dc.nrows(), dc.ncols());
    let mut t = Matrix::zeros(d, n);
    for j in 0..n {
        let out = t.col_as_slice_mut(j);
        if let Some(s) = diag {
            let c = dc.col_as_slice(j);
            for r in 0..d {
                out[r] += s[j] * c[r];
            }
        }
        if let Some(g) = rows {
            for &(i, w) in g.row(j) {
                let c = dc.col_as_slice(i);
                for r in 0..d {
                    out[r] += w * c[r];
                }
            }
        }
    }
    symmetrize(&(t * dc.transpose()))
}

fn clamp_nonnegative(values: &[f64]) -> Vec<f64> {
    values.iter().map(|v| v.max(0.0)).collect()
}

/// Locally linear embedding, fit on the given samples only.
///
/// Energy under a fraction policy is measured on the reciprocals of the
/// retained eigenvalues of `M`, since the embedding keeps the small end.
pub fn fit_lle(d: &Matrix, p: usize, reg: f64, policy: EnergyPolicy) -> Result<DrModel> {
    check_samples(d, 3)?;
    policy.validate()?;
    let n = d.ncols();
    let weights = lle_weights(d, p, reg)?;
    let mut warnings = Vec::new();
    let adjacency = AffinityGraph::from_edges(
        n,
        weights
            .columns
            .iter()
            .enumerate()
            .flat_map(|(i, col)| col.iter().map(move |&(j, _)| (i, j, 1.0))),
    );
    let components = adjacency.connected_components();
    if components > 1 {
        warnings.push(format!("neighbor graph is disconnected ({components} components)"));
    }

    let iw = identity(n) - weights.to_dense();
    let m = symmetrize(&(&iw * iw.transpose()));
    // Push the constant null vector to the top of the spectrum.
    let shift = trace(&m) + 1.0;
    let deflated = Matrix::from_fn(n, n, |i, j| m[(i, j)] + shift / n as f64);
    let eig = sym_eig(&deflated)?;
    let ascending: Vec<f64> = eig.values[1..].iter().rev().map(|v| v.max(0.0)).collect();

    let k = match policy {
        EnergyPolicy::Fixed { k } => {
            if k >= n - 1 {
                return Err(Error::InvalidParameter(format!(
                    "lle rank {k} must be below n - 1 = {}",
                    n - 1
                )));
            }
            k
        }
        EnergyPolicy::Fraction { .. } => {
            let top = ascending.last().copied().unwrap_or(0.0);
            let floor = 1e-12 * top.max(f64::MIN_POSITIVE);
            let energy: Vec<f64> = ascending.iter().map(|&v| 1.0 / v.max(floor)).collect();
            select_k(&energy, policy)?.min(n - 2)
        }
    };
    let y = eig.trailing(k).transpose().to_owned();
    Ok(DrModel {
        method: Method::Lle,
        k,
        projection: Matrix::zeros(0, k),
        train_mean: row_means(d),
        kernel: None,
        train_embedding: y,
        spectrum: ascending,
        spectrum_order: SpectrumOrder::Smallest,
        ridge: 0.0,
        warnings,
    })
}

/// Locality preserving projections on a prebuilt affinity graph.
pub fn fit_lpp(d: &Matrix, graph: &AffinityGraph, policy: EnergyPolicy) -> Result<DrModel> {
    check_samples(d, 2)?;
    if graph.n() != d.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "graph has {} nodes, data has {} samples",
            graph.n(),
            d.ncols()
        )));
    }
    let mean = row_means(d);
    let dc = center_columns(d, &mean);
    let a = sandwich(&dc, None, Some(graph));
    let b = sandwich(&dc, Some(graph.degree()), None);
    let eig = gen_eig(&a, &b)?;
    let k = select_k(&clamp_nonnegative(&eig.values), policy)?;
    finish_linear(Method::Lpp, &dc, mean, &eig, k)
}

/// Locality sensitive discriminant analysis; keeps `#classes − 1` directions.
pub fn fit_lsda(d: &Matrix, labels: &[usize], p: usize, alpha: f64) -> Result<DrModel> {
    check_samples(d, 2)?;
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidParameter(format!("lsda alpha must lie in [0, 1], got {alpha}")));
    }
    let (within, between) = lsda_graphs(d, labels, p)?;
    let (classes, _) = encode_classes(labels);
    let k = (classes.len() - 1).min(d.nrows());
    let mean = row_means(d);
    let dc = center_columns(d, &mean);
    let lb = &sandwich(&dc, Some(between.degree()), None) - &sandwich(&dc, None, Some(&between));
    let ww = sandwich(&dc, None, Some(&within));
    let a = symmetrize(&(lb * faer::Scale(alpha) + ww * faer::Scale(1.0 - alpha)));
    let b = sandwich(&dc, Some(within.degree()), None);
    let eig = gen_eig(&a, &b)?;
    finish_linear(Method::Lsda, &dc, mean, &eig, k)
}

pub(super) fn finish_linear(
    method: Method,
    dc: &Matrix,
    mean: Vec<f64>,
    eig: &crate::linalg::EigResult,
    k: usize,
) -> Result<DrModel> {
    let projection = eig.leading(k);
    let train_embedding = projection.transpose() * dc;
    let mut warnings = Vec::new();
    if eig.ridge > 0.0 {
        warnings.push(format!("metric matrix regularized with ridge {:.3e}", eig.ridge));
    }
    Ok(DrModel {
        method,
        k,
        projection,
        train_mean: mean,
        kernel: None,
        train_embedding,
        spectrum: eig.values.clone(),
        spectrum_order: SpectrumOrder::Largest,
        ridge: eig.ridge,
        warnings,
    })
}
