//! Alternating least squares for the weighted kernel reduced-rank regression
//! objective `‖W_r(Γ − B Aᵀ Υ) W_c‖²_F`, plus the per-method choices of
//! `Γ`, `Υ`, `W_r` and `W_c`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::graphs::AffinityGraph;
use crate::linalg::{
    check_finite, frobenius_norm, identity, psd_sqrt, spectral_apply, sym_eig, symmetrize, thin_svd,
    Matrix,
};

use super::class_indicator;

/// Relative eigenvalue cutoff for the pseudo-inverses inside the updates.
const PINV_RTOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct WkrrrProblem {
    /// `Γ`, `d_d×n`.
    pub gamma: Matrix,
    /// `Υ`, `d_x×n`.
    pub upsilon: Matrix,
    /// `W_r`, `d_d×d_d`.
    pub w_r: Matrix,
    /// `W_c`, `n×n`.
    pub w_c: Matrix,
    pub k: usize,
    /// Optional penalty `ridge·‖W_r B Aᵀ‖²_F`, equivalent to a ridge on `Υ W_c (Υ W_c)ᵀ`.
    pub ridge: f64,
}

impl WkrrrProblem {
    pub fn new(gamma: Matrix, upsilon: Matrix, w_r: Matrix, w_c: Matrix, k: usize) -> Result<Self> {
        let p = WkrrrProblem {
            gamma,
            upsilon,
            w_r,
            w_c,
            k,
            ridge: 0.0,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_ridge(mut self, ridge: f64) -> Self {
        self.ridge = ridge;
        self
    }

    pub fn n(&self) -> usize {
        self.gamma.ncols()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.gamma.ncols();
        let dd = self.gamma.nrows();
        let dx = self.upsilon.nrows();
        if self.upsilon.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "gamma has {n} columns, upsilon has {}",
                self.upsilon.ncols()
            )));
        }
        if self.w_c.nrows() != n || self.w_c.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "w_c is {}x{}, expected {n}x{n}",
                self.w_c.nrows(),
                self.w_c.ncols()
            )));
        }
        if self.w_r.nrows() != dd || self.w_r.ncols() != dd {
            return Err(Error::DimensionMismatch(format!(
                "w_r is {}x{}, expected {dd}x{dd}",
                self.w_r.nrows(),
                self.w_r.ncols()
            )));
        }
        let cap = n.min(dd).min(dx);
        if self.k == 0 || self.k > cap {
            return Err(Error::DimensionMismatch(format!("rank {} outside 1..={cap}", self.k)));
        }
        if !(self.ridge >= 0.0) || !self.ridge.is_finite() {
            return Err(Error::InvalidParameter(format!("ridge must be >= 0, got {}", self.ridge)));
        }
        check_finite(&self.gamma, "gamma")?;
        check_finite(&self.upsilon, "upsilon")?;
        check_finite(&self.w_r, "w_r")?;
        check_finite(&self.w_c, "w_c")
    }

    /// Penalized objective at `(A, B)`; equals `E₀` when `ridge` is 0.
    pub fn objective(&self, a: &Matrix, b: &Matrix) -> f64 {
        let x = mul_opt(&self.gamma, &self.w_c);
        let y = mul_opt(&self.upsilon, &self.w_c);
        let fitted = b * (a.transpose() * &y);
        let resid = x - fitted;
        let mut f = frobenius_norm(&mul_left_opt(&self.w_r, &resid)).powi(2);
        if self.ridge > 0.0 {
            let bat = b * a.transpose();
            f += self.ridge * frobenius_norm(&mul_left_opt(&self.w_r, &bat)).powi(2);
        }
        f
    }

    /// PCA: `Γ = D_c`, `Υ = I`, no weighting.
    pub fn pca(dc: &Matrix, k: usize) -> Result<Self> {
        let n = dc.ncols();
        Self::new(dc.clone(), identity(n), identity(dc.nrows()), identity(n), k)
    }

    /// Kernel PCA on a centered Gram: `Γ = K_c^{1/2}`, `Υ = I`.
    pub fn kpca(kc: &Matrix, k: usize) -> Result<Self> {
        let n = kc.ncols();
        Self::new(psd_sqrt(kc)?, identity(n), identity(n), identity(n), k)
    }

    /// LLE in kernel form: `Γ = (λ_max I − M)^{1/2}`, so the leading
    /// directions are the trailing eigenvectors of `M`.
    pub fn lle(m: &Matrix, k: usize) -> Result<Self> {
        let eig = sym_eig(m)?;
        let top = eig.values[0];
        let gamma = spectral_apply(&eig, |v| (top - v).max(0.0).sqrt());
        let n = m.ncols();
        Self::new(gamma, identity(n), identity(n), identity(n), k)
    }

    /// LPP: `Υ = D_c`, `W_c = S^{1/2}` and `ΓᵀΓ = S⁻¹(W + S)S⁻¹`. The `+S`
    /// shift keeps `Γ` real and moves every generalized eigenvalue up by one.
    pub fn lpp(dc: &Matrix, graph: &AffinityGraph, k: usize) -> Result<Self> {
        let n = dc.ncols();
        check_graph(graph, n)?;
        let s = positive_degrees(graph)?;
        let w = graph.to_dense();
        let target = Matrix::from_fn(n, n, |i, j| {
            let shift = if i == j { s[i] } else { 0.0 };
            (w[(i, j)] + shift) / (s[i] * s[j])
        });
        let gamma = psd_sqrt(&symmetrize(&target))?;
        let w_c = diag(&s.iter().map(|v| v.sqrt()).collect::<Vec<_>>());
        Self::new(gamma, dc.clone(), identity(n), w_c, k)
    }

    /// LDA: `Γ = Gᵀ`, `Υ = D_c`, `W_r = (GᵀG)^{-1/2}`.
    pub fn lda(dc: &Matrix, labels: &[usize], k: usize) -> Result<Self> {
        let n = dc.ncols();
        let g = class_indicator(labels, n)?;
        let w_r = inv_sqrt_counts(&g);
        Self::new(g.transpose().to_owned(), dc.clone(), w_r, identity(n), k)
    }

    /// KDA: LDA with `Υ = K_c^{1/2}`.
    pub fn kda(kc: &Matrix, labels: &[usize], k: usize) -> Result<Self> {
        let n = kc.ncols();
        let g = class_indicator(labels, n)?;
        let w_r = inv_sqrt_counts(&g);
        Self::new(g.transpose().to_owned(), psd_sqrt(kc)?, w_r, identity(n), k)
    }

    /// LSDA: `Υ = D_c`, `W_c = S_w^{1/2}` and
    /// `ΓᵀΓ = S_w⁻¹(αL_b + (1−α)(W_w + S_w))S_w⁻¹`.
    pub fn lsda(
        dc: &Matrix,
        within: &AffinityGraph,
        between: &AffinityGraph,
        alpha: f64,
        k: usize,
    ) -> Result<Self> {
        let n = dc.ncols();
        check_graph(within, n)?;
        check_graph(between, n)?;
        let s = positive_degrees(within)?;
        let ww = within.to_dense();
        let lb = between.laplacian_dense();
        let target = Matrix::from_fn(n, n, |i, j| {
            let shift = if i == j { s[i] } else { 0.0 };
            (alpha * lb[(i, j)] + (1.0 - alpha) * (ww[(i, j)] + shift)) / (s[i] * s[j])
        });
        let gamma = psd_sqrt(&symmetrize(&target))?;
        let w_c = diag(&s.iter().map(|v| v.sqrt()).collect::<Vec<_>>());
        Self::new(gamma, dc.clone(), identity(n), w_c, k)
    }
}

fn check_graph(graph: &AffinityGraph, n: usize) -> Result<()> {
    if graph.n() != n {
        return Err(Error::DimensionMismatch(format!(
            "graph has {} nodes, data has {n} samples",
            graph.n()
        )));
    }
    Ok(())
}

fn positive_degrees(graph: &AffinityGraph) -> Result<Vec<f64>> {
    let s = graph.degree().to_vec();
    if let Some(i) = s.iter().position(|&v| !(v > 0.0)) {
        return Err(Error::DegenerateData(format!("sample {i} has no graph neighbors")));
    }
    Ok(s)
}

fn diag(v: &[f64]) -> Matrix {
    Matrix::from_fn(v.len(), v.len(), |i, j| if i == j { v[i] } else { 0.0 })
}

fn inv_sqrt_counts(g: &Matrix) -> Matrix {
    let counts: Vec<f64> = (0..g.ncols())
        .map(|c| 1.0 / g.col_as_slice(c).iter().sum::<f64>().sqrt())
        .collect();
    diag(&counts)
}

fn is_identity(m: &Matrix) -> bool {
    m.nrows() == m.ncols()
        && (0..m.ncols()).all(|j| {
            m.col_as_slice(j)
                .iter()
                .enumerate()
                .all(|(i, &v)| v == if i == j { 1.0 } else { 0.0 })
        })
}

/// `m · w`, skipping the product when `w` is the identity.
fn mul_opt(m: &Matrix, w: &Matrix) -> Matrix {
    if is_identity(w) {
        m.clone()
    } else {
        m * w
    }
}

fn mul_left_opt(w: &Matrix, m: &Matrix) -> Matrix {
    if is_identity(w) {
        m.clone()
    } else {
        w * m
    }
}

/// Pseudo-inverse of a small symmetric positive semidefinite matrix.
fn pinv_psd(m: &Matrix) -> Result<Matrix> {
    let eig = sym_eig(&symmetrize(m))?;
    let cutoff = PINV_RTOL * eig.values.first().copied().unwrap_or(0.0).max(0.0);
    Ok(spectral_apply(&eig, |v| if v > cutoff && v > 0.0 { 1.0 / v } else { 0.0 }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Init {
    /// Leading left singular vectors of `W_r Γ W_c`.
    Svd,
    /// Seeded standard normal entries.
    Random,
}

#[derive(Debug, Clone, Copy)]
pub struct WkrrrOptions {
    pub seed: u64,
    /// Stop once the relative decrease over one full sweep falls below this.
    pub tol: f64,
    pub max_iter: usize,
    pub init: Init,
}

impl Default for WkrrrOptions {
    fn default() -> Self {
        WkrrrOptions {
            seed: 0,
            tol: 1e-9,
            max_iter: 500,
            init: Init::Svd,
        }
    }
}

#[derive(Debug, Clone)]
pub struct WkrrrSolution {
    /// `d_x×k`.
    pub a: Matrix,
    /// `d_d×k`.
    pub b: Matrix,
    /// Objective after every half-step (A update, then B update).
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl WkrrrSolution {
    pub fn objective(&self) -> f64 {
        *self.trace.last().expect("trace is never empty")
    }
}

fn initial_b(p: &WkrrrProblem, x: &Matrix, opts: &WkrrrOptions) -> Result<Matrix> {
    let dd = p.gamma.nrows();
    if opts.init == Init::Svd {
        let wx = mul_left_opt(&p.w_r, x);
        let svd = thin_svd(&wx, p.k.min(wx.nrows().min(wx.ncols())))?;
        if svd.s[0] > 0.0 && svd.u.ncols() == p.k {
            return Ok(svd.u);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    Ok(Matrix::from_fn(dd, p.k, |_, _| StandardNormal.sample(&mut rng)))
}

/// Minimizes the objective by exact alternating block updates.
///
/// With `X = ΓW_c`, `Y = ΥW_c`, `Q = W_rᵀW_r` and `C_yy = YYᵀ + ridge·I = VΛVᵀ`,
/// write `A = VΛ^{-1/2}Ã` and `Z = X YᵀVΛ^{-1/2}`. The objective becomes
/// `c₀ + ‖W_r(Z − BÃᵀ)‖²_F` for a constant `c₀`, and the updates
/// `Ã ← ZᵀQB(BᵀQB)⁺`, `B ← ZÃ(ÃᵀÃ)⁺` are global minimizers over their
/// block, so the trace cannot increase. Working with `Z` keeps the trace
/// free of the conditioning of `C_yy`.
pub fn wkrrr_solve(p: &WkrrrProblem, opts: &WkrrrOptions) -> Result<WkrrrSolution> {
    p.validate()?;
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance must be positive, got {}", opts.tol)));
    }
    let x = mul_opt(&p.gamma, &p.w_c);
    let q = if is_identity(&p.w_r) {
        None
    } else {
        Some(p.w_r.transpose() * &p.w_r)
    };

    // `basis` maps whitened coefficients back to A.
    let (z, basis) = if is_identity(&p.upsilon) && is_identity(&p.w_c) {
        let s = 1.0 / (1.0 + p.ridge).sqrt();
        let n = x.ncols();
        (
            &x * faer::Scale(s),
            Matrix::from_fn(n, n, |i, j| if i == j { s } else { 0.0 }),
        )
    } else {
        let y = mul_opt(&p.upsilon, &p.w_c);
        let mut cyy = &y * y.transpose();
        for i in 0..cyy.nrows() {
            cyy[(i, i)] += p.ridge;
        }
        let eig = sym_eig(&symmetrize(&cyy))?;
        let cutoff = PINV_RTOL * eig.values[0].max(0.0);
        let r = eig.values.iter().take_while(|&&v| v > cutoff && v > 0.0).count();
        if r < p.k {
            return Err(Error::Singular);
        }
        let mut basis = eig.vectors.subcols(0, r).to_owned();
        for j in 0..r {
            let s = 1.0 / eig.values[j].sqrt();
            for v in basis.col_as_slice_mut(j) {
                *v *= s;
            }
        }
        (&x * (y.transpose() * &basis), basis)
    };

    let weighted_sq = |m: &Matrix| frobenius_norm(&mul_left_opt(&p.w_r, m)).powi(2);
    let c0 = (weighted_sq(&x) - weighted_sq(&z)).max(0.0);
    let objective = |at: &Matrix, b: &Matrix| c0 + weighted_sq(&(&z - b * at.transpose()));

    let mut b = initial_b(p, &x, opts)?;
    let mut at = Matrix::zeros(z.ncols(), p.k);
    let mut trace: Vec<f64> = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let mut prev_sweep = f64::INFINITY;

    let push = |trace: &mut Vec<f64>, f: f64, iteration: usize| -> Result<()> {
        if !f.is_finite() {
            return Err(Error::NonFinite { what: "alternating solver objective" });
        }
        if let Some(&prev) = trace.last() {
            let slack = 1e-12 * trace[0].max(1.0);
            if f > prev + slack {
                return Err(Error::Diverged {
                    iteration,
                    previous: prev,
                    current: f,
                });
            }
        }
        trace.push(f);
        Ok(())
    };

    for it in 0..opts.max_iter {
        iterations = it + 1;
        let qb = match &q {
            Some(q) => q * &b,
            None => b.clone(),
        };
        let btqb = b.transpose() * &qb;
        at = z.transpose() * (&qb * pinv_psd(&btqb)?);
        push(&mut trace, objective(&at, &b), it)?;

        let ata = at.transpose() * &at;
        b = &z * (&at * pinv_psd(&ata)?);
        let f = objective(&at, &b);
        push(&mut trace, f, it)?;

        if f <= c0 || (prev_sweep.is_finite() && (prev_sweep - f) <= opts.tol * prev_sweep) {
            converged = true;
            break;
        }
        prev_sweep = f;
    }
    Ok(WkrrrSolution {
        a: &basis * &at,
        b,
        trace,
        iterations,
        converged,
    })
}
