use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{center_gram, gram_matrix, KernelCentering, KernelSpec};
use crate::linalg::{
    center_columns, identity, max_abs, orthonormal_basis, row_means, sym_eig, trace, Matrix,
};

use super::wkrrr::{wkrrr_solve, WkrrrOptions, WkrrrProblem};
use super::{check_samples, rayleigh_ritz, select_k, DrModel, EnergyPolicy, KernelModel, Method, SpectrumOrder};

/// Kernel eigenvalues below this fraction of the largest count as zero.
const KERNEL_RANK_RTOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PcaRoute {
    /// Eigendecomposition of the sample covariance.
    #[default]
    Spectral,
    /// Alternating least squares on the reconstruction error.
    Als,
}

pub fn fit_pca(d: &Matrix, policy: EnergyPolicy, route: PcaRoute) -> Result<DrModel> {
    check_samples(d, 2)?;
    let n = d.ncols();
    let mean = row_means(d);
    let dc = center_columns(d, &mean);
    let scale = 1.0 / (n as f64 - 1.0);
    let cov = (&dc * dc.transpose()) * faer::Scale(scale);
    if trace(&cov) <= 0.0 {
        return Err(Error::DegenerateData("all samples are identical".into()));
    }
    let (projection, spectrum) = match route {
        PcaRoute::Spectral => {
            let eig = sym_eig(&cov)?;
            let spectrum: Vec<f64> = eig.values.iter().map(|v| v.max(0.0)).collect();
            let k = select_k(&spectrum, policy)?;
            (eig.leading(k), spectrum)
        }
        PcaRoute::Als => {
            let sv = dc
                .singular_values()
                .map_err(|_| Error::Convergence("singular values"))?;
            let spectrum: Vec<f64> = sv.iter().map(|s| s * s * scale).collect();
            let k = select_k(&spectrum, policy)?;
            let problem = WkrrrProblem::pca(&dc, k)?;
            let sol = wkrrr_solve(&problem, &WkrrrOptions::default())?;
            let basis = orthonormal_basis(&sol.b)?;
            let (v, _) = rayleigh_ritz(&basis, &cov, &identity(d.nrows()))?;
            (v, spectrum)
        }
    };
    let k = projection.ncols();
    let train_embedding = projection.transpose() * &dc;
    Ok(DrModel {
        method: Method::Pca,
        k,
        projection,
        train_mean: mean,
        kernel: None,
        train_embedding,
        spectrum,
        spectrum_order: SpectrumOrder::Largest,
        ridge: 0.0,
        warnings: Vec::new(),
    })
}

pub fn fit_kpca(d: &Matrix, spec: &KernelSpec, policy: EnergyPolicy) -> Result<DrModel> {
    check_samples(d, 2)?;
    spec.validate()?;
    let n = d.ncols();
    let k_raw = gram_matrix(d, spec)?;
    let kc = center_gram(&k_raw)?;
    let eig = sym_eig(&kc)?;
    let top = eig.values[0];
    if !(top > 1e-12 * n as f64 * max_abs(&k_raw)) {
        return Err(Error::AllZeroSpectrum);
    }
    let positive = eig.values.iter().take_while(|&&v| v > KERNEL_RANK_RTOL * top).count();
    let spectrum: Vec<f64> = eig.values.iter().map(|v| v.max(0.0)).collect();
    let k = select_k(&spectrum, policy)?.min(positive);

    let mut alpha = Matrix::zeros(n, k);
    let mut train_embedding = Matrix::zeros(k, n);
    for c in 0..k {
        let root = eig.values[c].sqrt();
        for i in 0..n {
            let u = eig.vectors[(i, c)];
            alpha[(i, c)] = u / root;
            train_embedding[(c, i)] = u * root;
        }
    }
    Ok(DrModel {
        method: Method::Kpca,
        k,
        projection: alpha,
        train_mean: row_means(d),
        kernel: Some(KernelModel {
            spec: *spec,
            train: d.clone(),
            centering: KernelCentering::fit(&k_raw),
        }),
        train_embedding,
        spectrum,
        spectrum_order: SpectrumOrder::Largest,
        ridge: 0.0,
        warnings: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dr::transform;
    use crate::linalg::{frobenius_norm, max_principal_angle};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rows: usize, cols: usize, seed: u64) -> Matrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Matrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn two_points_on_an_axis() {
        let d = Matrix::from_fn(2, 2, |i, j| if i == 0 { [1.0, -1.0][j] } else { 0.0 });
        let m = fit_pca(&d, EnergyPolicy::Fixed { k: 1 }, PcaRoute::Spectral).unwrap();
        assert!((m.projection[(0, 0)].abs() - 1.0).abs() < 1e-12);
        assert!(m.projection[(1, 0)].abs() < 1e-12);
    }

    #[test]
    fn identical_columns_are_degenerate() {
        let d = Matrix::from_fn(3, 5, |i, _| i as f64);
        assert!(matches!(
            fit_pca(&d, EnergyPolicy::default(), PcaRoute::Spectral),
            Err(Error::DegenerateData(_))
        ));
    }

    #[test]
    fn als_and_spectral_subspaces_agree() {
        let d = random(12, 50, 1);
        let policy = EnergyPolicy::Fixed { k: 3 };
        let a = fit_pca(&d, policy, PcaRoute::Spectral).unwrap();
        let b = fit_pca(&d, policy, PcaRoute::Als).unwrap();
        assert!(max_principal_angle(&a.projection, &b.projection).unwrap() < 1e-6);
    }

    #[test]
    fn pca_transform_reproduces_training_and_maps_mean_to_zero() {
        let d = random(5, 30, 2);
        let m = fit_pca(&d, EnergyPolicy::default(), PcaRoute::Spectral).unwrap();
        let again = transform(&m, &d).unwrap();
        assert!(frobenius_norm(&(&again - &m.train_embedding)) < 1e-10);
        let mean = Matrix::from_fn(5, 1, |i, _| m.train_mean[i]);
        assert!(frobenius_norm(&transform(&m, &mean).unwrap()) < 1e-14);
    }

    #[test]
    fn kpca_two_points_single_component() {
        let d = random(3, 2, 3);
        for spec in [
            KernelSpec::Linear,
            KernelSpec::Rbf { sigma: 1.0 },
            KernelSpec::Polynomial { degree: 2, offset: 1.0 },
        ] {
            let m = fit_kpca(&d, &spec, EnergyPolicy::Fraction { fraction: 1.0 }).unwrap();
            assert_eq!(m.k, 1);
        }
    }

    #[test]
    fn kpca_top_pair_matches_power_iteration() {
        let d = random(3, 25, 4);
        let spec = KernelSpec::Rbf { sigma: 0.7 };
        let m = fit_kpca(&d, &spec, EnergyPolicy::Fixed { k: 1 }).unwrap();
        let kc = center_gram(&gram_matrix(&d, &spec).unwrap()).unwrap();
        let mut v = Matrix::from_fn(25, 1, |i, _| 1.0 + (i as f64) * 0.01);
        let mut lambda = 0.0;
        for _ in 0..5000 {
            let w = &kc * &v;
            lambda = frobenius_norm(&w);
            v = w * faer::Scale(1.0 / lambda);
        }
        assert!((m.spectrum[0] - lambda).abs() < 1e-8 * lambda);
        let u = Matrix::from_fn(25, 1, |i, _| m.train_embedding[(0, i)]);
        assert!(max_principal_angle(&u, &v).unwrap() < 1e-8);
    }

    #[test]
    fn kpca_constant_data_has_no_spectrum() {
        let d = Matrix::from_fn(2, 4, |_, _| 1.5);
        assert_eq!(
            fit_kpca(&d, &KernelSpec::Rbf { sigma: 1.0 }, EnergyPolicy::default()).unwrap_err(),
            Error::AllZeroSpectrum
        );
    }
}
