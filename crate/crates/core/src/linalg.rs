//! Dense linear-algebra contracts shared by every reduction method.
//!
//! All routines are thin, validated wrappers over `faer` with two additions
//! the rest of the crate depends on: a deterministic sign convention for
//! eigen/singular vectors, and a ridge ladder for the generalized symmetric
//! eigenproblem so that rank-deficient scatter matrices fail predictably.

use faer::linalg::solvers::SolveLstsq;
use faer::{Mat, Side};

use crate::error::{Error, Result};

/// Column-major dense matrix of `f64`.
pub type Matrix = Mat<f64>;

/// Relative tolerance used by the symmetry precondition.
pub const SYMMETRY_TOL: f64 = 1e-10;

/// Ridge factors tried in order by [`gen_eig`], each scaled by `trace(b) / dim`.
pub const RIDGE_LADDER: [f64; 4] = [0.0, 1e-10, 1e-8, 1e-6];

/// A Cholesky pivot below this fraction of the largest diagonal entry counts as a failure.
const PIVOT_FLOOR: f64 = 1e-12;

/// Eigenpairs sorted by descending eigenvalue.
#[derive(Debug, Clone)]
pub struct EigResult {
    pub values: Vec<f64>,
    /// One column per value.
    pub vectors: Matrix,
    /// Absolute ridge added to the metric matrix (always 0 for [`sym_eig`]).
    pub ridge: f64,
}

impl EigResult {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// First `k` columns of the eigenvector matrix.
    pub fn leading(&self, k: usize) -> Matrix {
        self.vectors.subcols(0, k).to_owned()
    }

    /// Last `k` columns (smallest eigenvalues), ordered by ascending eigenvalue.
    pub fn trailing(&self, k: usize) -> Matrix {
        let n = self.vectors.ncols();
        Matrix::from_fn(self.vectors.nrows(), k, |i, j| self.vectors[(i, n - 1 - j)])
    }
}

/// Thin singular value decomposition truncated to `k` triplets.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: Matrix,
    pub s: Vec<f64>,
    pub v: Matrix,
}

pub fn identity(n: usize) -> Matrix {
    Matrix::identity(n, n)
}

pub fn frobenius_norm(m: &Matrix) -> f64 {
    m.norm_l2()
}

pub fn trace(m: &Matrix) -> f64 {
    (0..m.nrows().min(m.ncols())).map(|i| m[(i, i)]).sum()
}

pub fn max_abs(m: &Matrix) -> f64 {
    let mut best = 0.0f64;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            best = best.max(m[(i, j)].abs());
        }
    }
    best
}

pub fn check_finite(m: &Matrix, what: &'static str) -> Result<()> {
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            if !m[(i, j)].is_finite() {
                return Err(Error::NonFinite { what });
            }
        }
    }
    Ok(())
}

fn check_square(m: &Matrix, what: &str) -> Result<()> {
    if m.nrows() != m.ncols() || m.nrows() == 0 {
        return Err(Error::DimensionMismatch(format!(
            "{what} must be square and non-empty, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

/// Largest `|m_ij - m_ji|` relative to the largest entry magnitude.
pub fn relative_asymmetry(m: &Matrix) -> f64 {
    let scale = max_abs(m);
    if scale == 0.0 {
        return 0.0;
    }
    let mut worst = 0.0f64;
    for j in 0..m.ncols() {
        for i in (j + 1)..m.nrows() {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst / scale
}

fn check_symmetric(m: &Matrix) -> Result<()> {
    let asymmetry = relative_asymmetry(m);
    if asymmetry > SYMMETRY_TOL {
        return Err(Error::NonSymmetric { asymmetry });
    }
    Ok(())
}

/// Averages `m` with its transpose.
pub fn symmetrize(m: &Matrix) -> Matrix {
    Matrix::from_fn(m.nrows(), m.ncols(), |i, j| 0.5 * (m[(i, j)] + m[(j, i)]))
}

/// Flips each column so that its largest-magnitude entry is positive.
///
/// Ties resolve to the lowest row index. Returns which columns were flipped.
pub fn canonicalize_signs(m: &mut Matrix) -> Vec<bool> {
    let mut flipped = Vec::with_capacity(m.ncols());
    for j in 0..m.ncols() {
        let mut pivot = 0usize;
        let mut best = -1.0f64;
        for i in 0..m.nrows() {
            let a = m[(i, j)].abs();
            if a > best {
                best = a;
                pivot = i;
            }
        }
        let flip = m.nrows() > 0 && m[(pivot, j)] < 0.0;
        if flip {
            for i in 0..m.nrows() {
                m[(i, j)] = -m[(i, j)];
            }
        }
        flipped.push(flip);
    }
    flipped
}

fn eig_unchecked(m: &Matrix) -> Result<EigResult> {
    let n = m.nrows();
    let evd = m
        .self_adjoint_eigen(Side::Lower)
        .map_err(|_| Error::Convergence("symmetric eigendecomposition"))?;
    let s = evd.S();
    let u = evd.U();
    // faer returns ascending order
    let values: Vec<f64> = (0..n).map(|i| s[n - 1 - i]).collect();
    let mut vectors = Matrix::from_fn(n, n, |i, j| u[(i, n - 1 - j)]);
    canonicalize_signs(&mut vectors);
    Ok(EigResult {
        values,
        vectors,
        ridge: 0.0,
    })
}

/// Full eigendecomposition of a symmetric matrix, eigenvalues descending.
pub fn sym_eig(m: &Matrix) -> Result<EigResult> {
    check_square(m, "sym_eig input")?;
    check_finite(m, "sym_eig input")?;
    check_symmetric(m)?;
    eig_unchecked(&symmetrize(m))
}

/// Eigenvalues only, descending.
pub fn sym_eigenvalues(m: &Matrix) -> Result<Vec<f64>> {
    check_square(m, "sym_eigenvalues input")?;
    check_finite(m, "sym_eigenvalues input")?;
    check_symmetric(m)?;
    let mut values = symmetrize(m)
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|_| Error::Convergence("symmetric eigenvalues"))?;
    values.reverse();
    Ok(values)
}

/// Lower Cholesky factor of `m`, or `None` when a pivot falls under the floor.
fn cholesky_lower(m: &Matrix) -> Option<Matrix> {
    let max_diag = (0..m.nrows()).map(|i| m[(i, i)]).fold(0.0f64, f64::max);
    if max_diag <= 0.0 {
        return None;
    }
    let llt = m.llt(Side::Lower).ok()?;
    let l = llt.L().to_owned();
    let floor = PIVOT_FLOOR * max_diag;
    for i in 0..l.nrows() {
        let d = l[(i, i)];
        if !(d * d > floor) {
            return None;
        }
    }
    Some(l)
}

/// Cholesky factor of `b + ridge * I`, escalating the ridge through [`RIDGE_LADDER`].
///
/// Returns the lower factor and the absolute ridge that succeeded.
pub fn ridged_cholesky(b: &Matrix) -> Result<(Matrix, f64)> {
    check_square(b, "metric matrix")?;
    let n = b.nrows();
    let scale = trace(b) / n as f64;
    let mut last = 0.0;
    for factor in RIDGE_LADDER {
        let ridge = factor * scale;
        last = ridge;
        let mut shifted = symmetrize(b);
        for i in 0..n {
            shifted[(i, i)] += ridge;
        }
        if let Some(l) = cholesky_lower(&shifted) {
            return Ok((l, ridge));
        }
    }
    Err(Error::NotPositiveDefinite { ridge: last })
}

/// Symmetric-definite generalized eigenproblem `a v = λ b v`, eigenvalues descending.
///
/// Vectors are normalized so that `vᵀ (b + ridge I) v = 1`.
pub fn gen_eig(a: &Matrix, b: &Matrix) -> Result<EigResult> {
    check_square(a, "gen_eig lhs")?;
    check_square(b, "gen_eig rhs")?;
    if a.nrows() != b.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "gen_eig operands are {}x{} and {}x{}",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols()
        )));
    }
    check_finite(a, "gen_eig lhs")?;
    check_finite(b, "gen_eig rhs")?;
    check_symmetric(a)?;
    check_symmetric(b)?;
    let (l, ridge) = ridged_cholesky(b)?;
    let mut whitened = gen_eig_with_factor(&symmetrize(a), &l)?;
    whitened.ridge = ridge;
    Ok(whitened)
}

/// Solves `a v = λ L Lᵀ v` given a precomputed lower Cholesky factor.
pub fn gen_eig_with_factor(a: &Matrix, l: &Matrix) -> Result<EigResult> {
    // C = L⁻¹ a L⁻ᵀ
    let mut x = a.clone();
    l.solve_lower_triangular_in_place(&mut x);
    let mut c = x.transpose().to_owned();
    l.solve_lower_triangular_in_place(&mut c);
    let eig = eig_unchecked(&symmetrize(&c))?;
    let mut vectors = eig.vectors;
    l.transpose().solve_upper_triangular_in_place(&mut vectors);
    canonicalize_signs(&mut vectors);
    Ok(EigResult {
        values: eig.values,
        vectors,
        ridge: 0.0,
    })
}

/// Thin SVD keeping the leading `k` triplets; singular values descending.
pub fn thin_svd(m: &Matrix, k: usize) -> Result<Svd> {
    let r = m.nrows().min(m.ncols());
    if k == 0 || k > r {
        return Err(Error::DimensionMismatch(format!(
            "thin_svd rank {k} outside 1..={r}"
        )));
    }
    check_finite(m, "thin_svd input")?;
    let svd = m
        .thin_svd()
        .map_err(|_| Error::Convergence("singular value decomposition"))?;
    let mut u = svd.U().subcols(0, k).to_owned();
    let mut v = svd.V().subcols(0, k).to_owned();
    let s: Vec<f64> = (0..k).map(|i| svd.S()[i]).collect();
    let flipped = canonicalize_signs(&mut u);
    for (j, flip) in flipped.into_iter().enumerate() {
        if flip {
            for i in 0..v.nrows() {
                v[(i, j)] = -v[(i, j)];
            }
        }
    }
    Ok(Svd { u, s, v })
}

/// Minimizer of `‖a X − b‖²_F + lambda ‖X‖²_F`.
pub fn ridge_solve(a: &Matrix, b: &Matrix, lambda: f64) -> Result<Matrix> {
    if a.nrows() != b.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "ridge_solve: a has {} rows, b has {}",
            a.nrows(),
            b.nrows()
        )));
    }
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "ridge lambda must be finite and nonnegative, got {lambda}"
        )));
    }
    check_finite(a, "ridge_solve lhs")?;
    check_finite(b, "ridge_solve rhs")?;
    let (m, p) = (a.nrows(), a.ncols());
    let extra = if lambda > 0.0 { p } else { 0 };
    if m + extra < p {
        return Err(Error::Singular);
    }
    // Augmented least squares: [a; √λ I] X ≈ [b; 0]
    let root = lambda.sqrt();
    let aug = Matrix::from_fn(m + extra, p, |i, j| {
        if i < m {
            a[(i, j)]
        } else if i - m == j {
            root
        } else {
            0.0
        }
    });
    let rhs = Matrix::from_fn(m + extra, b.ncols(), |i, j| if i < m { b[(i, j)] } else { 0.0 });
    let qr = aug.qr();
    let r = qr.thin_R();
    let rmax = (0..p).map(|i| r[(i, i)].abs()).fold(0.0f64, f64::max);
    if rmax == 0.0 || (0..p).any(|i| r[(i, i)].abs() <= 1e-13 * rmax) {
        return Err(Error::Singular);
    }
    Ok(qr.solve_lstsq(&rhs))
}

/// Symmetric positive semidefinite square root; negative eigenvalues are clamped to zero.
pub fn psd_sqrt(m: &Matrix) -> Result<Matrix> {
    let eig = sym_eig(m)?;
    Ok(spectral_apply(&eig, |v| v.max(0.0).sqrt()))
}

/// `V f(Λ) Vᵀ` for an orthonormal eigendecomposition.
pub fn spectral_apply(eig: &EigResult, f: impl Fn(f64) -> f64) -> Matrix {
    let v = &eig.vectors;
    let mut scaled = v.clone();
    for (j, &value) in eig.values.iter().enumerate() {
        let g = f(value);
        for i in 0..v.nrows() {
            scaled[(i, j)] *= g;
        }
    }
    &scaled * v.transpose()
}

/// Orthonormal basis for the column space of a full-column-rank matrix.
pub fn orthonormal_basis(m: &Matrix) -> Result<Matrix> {
    if m.ncols() == 0 || m.ncols() > m.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "cannot orthonormalize {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(m.qr().compute_thin_Q())
}

/// Largest principal angle (radians) between the column spaces of `a` and `b`.
///
/// Computed as `asin ‖(I − QaQaᵀ) Qb‖₂`, which stays accurate for tiny angles.
pub fn max_principal_angle(a: &Matrix, b: &Matrix) -> Result<f64> {
    if a.nrows() != b.nrows() || a.ncols() != b.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "subspaces {}x{} and {}x{}",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols()
        )));
    }
    let qa = orthonormal_basis(a)?;
    let qb = orthonormal_basis(b)?;
    let proj = &qa * (qa.transpose() * &qb);
    let resid = &qb - &proj;
    let sv = resid
        .singular_values()
        .map_err(|_| Error::Convergence("principal angles"))?;
    let s = sv.first().copied().unwrap_or(0.0).min(1.0);
    Ok(s.asin())
}

/// Column means of a `d×n` matrix as a length-`d` vector (mean over columns).
pub fn row_means(m: &Matrix) -> Vec<f64> {
    let n = m.ncols() as f64;
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).sum::<f64>() / n)
        .collect()
}

/// Subtracts `mean` from every column.
pub fn center_columns(m: &Matrix, mean: &[f64]) -> Matrix {
    Matrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] - mean[i])
}

/// Dot product with a fixed summation order, symmetric in its arguments.
pub(crate) fn dot(x: &[f64], y: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let chunks = x.len() / 4;
    for c in 0..chunks {
        let i = 4 * c;
        acc[0] += x[i] * y[i];
        acc[1] += x[i + 1] * y[i + 1];
        acc[2] += x[i + 2] * y[i + 2];
        acc[3] += x[i + 3] * y[i + 3];
    }
    let mut tail = 0.0;
    for i in 4 * chunks..x.len() {
        tail += x[i] * y[i];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Squared Euclidean distance, exactly zero for identical inputs.
pub(crate) fn sq_dist(x: &[f64], y: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let chunks = x.len() / 4;
    for c in 0..chunks {
        let i = 4 * c;
        let d0 = x[i] - y[i];
        let d1 = x[i + 1] - y[i + 1];
        let d2 = x[i + 2] - y[i + 2];
        let d3 = x[i + 3] - y[i + 3];
        acc[0] += d0 * d0;
        acc[1] += d1 * d1;
        acc[2] += d2 * d2;
        acc[3] += d3 * d3;
    }
    let mut tail = 0.0;
    for i in 4 * chunks..x.len() {
        let d = x[i] - y[i];
        tail += d * d;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Symmetric matrix of pairwise squared distances between columns.
pub fn pairwise_sq_dists(x: &Matrix) -> Matrix {
    let n = x.ncols();
    let mut out = Matrix::zeros(n, n);
    for j in 0..n {
        let xj = x.col_as_slice(j);
        for i in (j + 1)..n {
            let d = sq_dist(x.col_as_slice(i), xj);
            out[(i, j)] = d;
            out[(j, i)] = d;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rows: usize, cols: usize, seed: u64) -> Matrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Matrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
    }

    fn random_sym(n: usize, seed: u64) -> Matrix {
        let r = random(n, n, seed);
        symmetrize(&(&r + r.transpose()))
    }

    fn random_spd(n: usize, seed: u64) -> Matrix {
        let r = random(n, n, seed);
        let mut m = &r * r.transpose();
        for i in 0..n {
            m[(i, i)] += 0.5;
        }
        symmetrize(&m)
    }

    fn diag(values: &[f64]) -> Matrix {
        Matrix::from_fn(values.len(), values.len(), |i, j| if i == j { values[i] } else { 0.0 })
    }

    #[test]
    fn identity_eigenvalues_are_one() {
        let e = sym_eig(&identity(3)).unwrap();
        for v in e.values {
            assert!((v - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn diagonal_eigenpairs() {
        let e = sym_eig(&diag(&[2.0, 1.0])).unwrap();
        assert!((e.values[0] - 2.0).abs() < 1e-14);
        assert!((e.values[1] - 1.0).abs() < 1e-14);
        assert!((e.vectors[(0, 0)].abs() - 1.0).abs() < 1e-14);
        assert!((e.vectors[(1, 1)].abs() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn reconstruction_and_trace() {
        let m = random_sym(20, 3);
        let e = sym_eig(&m).unwrap();
        let rebuilt = spectral_apply(&e, |v| v);
        let err = frobenius_norm(&(&rebuilt - &m)) / frobenius_norm(&m);
        assert!(err <= 1e-8, "reconstruction error {err}");
        let sum: f64 = e.values.iter().sum();
        assert!((sum - trace(&m)).abs() <= 1e-8 * trace(&m).abs().max(1.0));
        for w in e.values.windows(2) {
            assert!(w[0] >= w[1]);
        }
        let gram = e.vectors.transpose() * &e.vectors;
        assert!(frobenius_norm(&(&gram - identity(20))) < 1e-10);
    }

    #[test]
    fn sign_convention_largest_entry_positive() {
        let m = random_sym(8, 11);
        let e = sym_eig(&m).unwrap();
        for j in 0..8 {
            let col: Vec<f64> = (0..8).map(|i| e.vectors[(i, j)]).collect();
            let (idx, _) = col
                .iter()
                .enumerate()
                .fold((0, -1.0), |acc, (i, v)| if v.abs() > acc.1 { (i, v.abs()) } else { acc });
            assert!(col[idx] > 0.0);
        }
    }

    #[test]
    fn rejects_asymmetric_and_nonfinite() {
        let mut m = identity(3);
        m[(0, 1)] = 1e-3;
        assert!(matches!(sym_eig(&m), Err(Error::NonSymmetric { .. })));
        let mut m = identity(3);
        m[(1, 1)] = f64::NAN;
        assert!(matches!(sym_eig(&m), Err(Error::NonFinite { .. })));
    }

    #[test]
    fn deterministic_repeat_calls() {
        let m = random_sym(15, 5);
        let a = sym_eig(&m).unwrap();
        let b = sym_eig(&m).unwrap();
        assert_eq!(a.values, b.values);
        assert_eq!(a.vectors, b.vectors);
    }

    #[test]
    fn gen_eig_reduces_to_sym_eig_with_identity_metric() {
        let a = diag(&[2.0, 1.0]);
        let e = gen_eig(&a, &identity(2)).unwrap();
        assert!((e.values[0] - 2.0).abs() < 1e-14 && (e.values[1] - 1.0).abs() < 1e-14);
        let m = random_sym(12, 9);
        let g = gen_eig(&m, &identity(12)).unwrap();
        let s = sym_eig(&m).unwrap();
        for (x, y) in g.values.iter().zip(&s.values) {
            assert!((x - y).abs() <= 1e-8);
        }
    }

    #[test]
    fn gen_eig_proportional_pair() {
        let e = gen_eig(&diag(&[2.0, 1.0]), &diag(&[2.0, 1.0])).unwrap();
        for v in e.values {
            assert!((v - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn gen_eig_residual_and_b_orthonormality() {
        let a = random_sym(10, 21);
        let b = random_spd(10, 22);
        let e = gen_eig(&a, &b).unwrap();
        assert_eq!(e.ridge, 0.0);
        let na = frobenius_norm(&a);
        for j in 0..10 {
            let v = e.vectors.subcols(j, 1).to_owned();
            let r = &a * &v - (&b * &v) * faer::Scale(e.values[j]);
            assert!(frobenius_norm(&r) <= 1e-8 * na);
        }
        let btb = e.vectors.transpose() * (&b * &e.vectors);
        assert!(frobenius_norm(&(&btb - identity(10))) < 1e-8);
    }

    #[test]
    fn gen_eig_ridge_ladder_on_singular_metric() {
        let x = random(6, 3, 4);
        let b = &x * x.transpose(); // rank 3
        let a = random_sym(6, 5);
        let e = gen_eig(&a, &b).unwrap();
        assert!(e.ridge > 0.0);
        assert!(e.ridge <= 1e-6 * trace(&b) / 6.0 * (1.0 + 1e-12));
    }

    #[test]
    fn gen_eig_fails_on_negative_definite_metric() {
        let b = diag(&[-1.0, -2.0]);
        assert!(matches!(
            gen_eig(&identity(2), &b),
            Err(Error::NotPositiveDefinite { .. })
        ));
        assert!(matches!(
            gen_eig(&identity(2), &identity(3)),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn svd_closed_forms() {
        let s = thin_svd(&identity(3), 3).unwrap();
        for v in &s.s {
            assert!((v - 1.0).abs() < 1e-14);
        }
        let u = Matrix::from_fn(4, 1, |i, _| (i + 1) as f64);
        let v = Matrix::from_fn(3, 1, |i, _| 2.0 - i as f64 * 0.5);
        let outer = &u * v.transpose();
        let s = thin_svd(&outer, 1).unwrap();
        let expected = frobenius_norm(&u) * frobenius_norm(&v);
        assert!((s.s[0] - expected).abs() < 1e-12 * expected);
        assert!(matches!(thin_svd(&outer, 4), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn svd_reconstruction() {
        let m = random(8, 5, 31);
        let s = thin_svd(&m, 5).unwrap();
        let sd = diag(&s.s);
        let rebuilt = &s.u * &sd * s.v.transpose();
        assert!(frobenius_norm(&(&rebuilt - &m)) < 1e-8);
        assert!(frobenius_norm(&(s.u.transpose() * &s.u - identity(5))) < 1e-10);
        assert!(frobenius_norm(&(s.v.transpose() * &s.v - identity(5))) < 1e-10);
        for w in s.s.windows(2) {
            assert!(w[0] >= w[1] && w[1] >= 0.0);
        }
    }

    #[test]
    fn ridge_solve_trivial_cases() {
        let b = random(3, 2, 1);
        let x = ridge_solve(&identity(3), &b, 0.0).unwrap();
        assert!(frobenius_norm(&(&x - &b)) < 1e-14);
        let two = diag(&[2.0, 2.0]);
        let x = ridge_solve(&two, &identity(2), 0.0).unwrap();
        assert!(frobenius_norm(&(&x - diag(&[0.5, 0.5]))) < 1e-14);
    }

    #[test]
    fn ridge_solve_matches_normal_equations() {
        let a = random(30, 6, 41);
        let b = random(30, 2, 42);
        let lambda = 1e-6;
        let x = ridge_solve(&a, &b, lambda).unwrap();
        // independent route: Gaussian elimination on (aᵀa + λI) X = aᵀb
        let n = a.transpose() * &a;
        let rhs = a.transpose() * &b;
        let mut aug: Vec<Vec<f64>> = (0..6)
            .map(|i| {
                let mut row: Vec<f64> = (0..6).map(|j| n[(i, j)] + if i == j { lambda } else { 0.0 }).collect();
                row.extend((0..2).map(|j| rhs[(i, j)]));
                row
            })
            .collect();
        for c in 0..6 {
            let p = (c..6).max_by(|&i, &j| aug[i][c].abs().total_cmp(&aug[j][c].abs())).unwrap();
            aug.swap(c, p);
            for r in 0..6 {
                if r != c {
                    let f = aug[r][c] / aug[c][c];
                    for k in c..8 {
                        aug[r][k] -= f * aug[c][k];
                    }
                }
            }
        }
        for i in 0..6 {
            for j in 0..2 {
                let expected = aug[i][6 + j] / aug[i][i];
                assert!((x[(i, j)] - expected).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn ridge_solve_detects_singularity() {
        let a = Matrix::from_fn(4, 2, |i, _| i as f64);
        let b = random(4, 1, 3);
        assert!(matches!(ridge_solve(&a, &b, 0.0), Err(Error::Singular)));
        assert!(ridge_solve(&a, &b, 1e-3).is_ok());
    }

    #[test]
    fn principal_angle_of_rotated_basis_is_zero() {
        let a = random(7, 3, 8);
        let r = random(3, 3, 9);
        let b = &a * &r;
        assert!(max_principal_angle(&a, &b).unwrap() < 1e-10);
        let e1 = Matrix::from_fn(2, 1, |i, _| if i == 0 { 1.0 } else { 0.0 });
        let e2 = Matrix::from_fn(2, 1, |i, _| if i == 1 { 1.0 } else { 0.0 });
        let angle = max_principal_angle(&e1, &e2).unwrap();
        assert!((angle - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
    }
}
