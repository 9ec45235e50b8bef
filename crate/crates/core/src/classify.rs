//! Linear soft-margin SVM and subject-wise grid tuning.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use faer::linalg::solvers::{Llt, Solve};
use faer::Side;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{f1, subject_folds, ConfusionCounts};
use crate::linalg::{check_finite, dot, Matrix};
use crate::seed::derive_seed;

pub const DEFAULT_COSTS: [f64; 5] = [0.01, 0.1, 1.0, 10.0, 100.0];

/// Interior point stopping tolerances: residuals relative to their scale, and the relative duality gap.
const RESIDUAL_TOL: f64 = 1e-8;
const GAP_TOL: f64 = 1e-9;
const REFINEMENT_STEPS: usize = 2;
const MAX_IPM_ITER: usize = 200;
const FRACTION_TO_BOUNDARY: f64 = 0.995;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSvmModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub cost: f64,
    /// `½‖w‖² + C Σ max(0, 1 − yᵢ(wᵀxᵢ + b))` on the training set.
    pub objective: f64,
}

/// Primal objective of `(w, b)` on `(x, y)`.
pub fn svm_objective(weights: &[f64], bias: f64, x: &Matrix, y: &[f64], cost: f64) -> f64 {
    let hinge: f64 = (0..x.ncols())
        .map(|i| (1.0 - y[i] * (dot(weights, x.col_as_slice(i)) + bias)).max(0.0))
        .sum();
    0.5 * dot(weights, weights) + cost * hinge
}

/// Samples in a canonical order.
struct Problem {
    /// `k × n`, column `i` is sample `i`.
    x: Matrix,
    y: Vec<f64>,
    cost: f64,
}

/// Factorization of `D + Q` where `Q = VᵀV` and `V` holds the columns `yᵢxᵢ`.
enum Normal {
    /// Woodbury form through the `k × k` matrix `I + V D⁻¹ Vᵀ`.
    Low { inv_d: Vec<f64>, llt: Llt<f64> },
    Dense(Llt<f64>),
}

impl Normal {
    fn factor(v: &Matrix, q: Option<&Matrix>, d: &[f64]) -> Result<Self> {
        match q {
            Some(q) => {
                let mut m = q.clone();
                for (i, di) in d.iter().enumerate() {
                    m[(i, i)] += di;
                }
                Ok(Normal::Dense(cholesky_with_jitter(m)?))
            }
            None => {
                let inv_d: Vec<f64> = d.iter().map(|x| 1.0 / x).collect();
                let scaled = Matrix::from_fn(v.nrows(), v.ncols(), |r, j| v[(r, j)] * inv_d[j]);
                let mut s = &scaled * v.transpose();
                for i in 0..s.nrows() {
                    s[(i, i)] += 1.0;
                }
                Ok(Normal::Low {
                    inv_d,
                    llt: cholesky_with_jitter(s)?,
                })
            }
        }
    }

    fn solve_once(&self, v: &Matrix, r: &[f64]) -> Vec<f64> {
        match self {
            Normal::Dense(llt) => {
                let rhs = Matrix::from_fn(r.len(), 1, |i, _| r[i]);
                llt.solve(&rhs).col_as_slice(0).to_vec()
            }
            Normal::Low { inv_d, llt } => {
                let dr: Vec<f64> = r.iter().zip(inv_d).map(|(a, b)| a * b).collect();
                let vdr = v * Matrix::from_fn(dr.len(), 1, |i, _| dr[i]);
                let t = llt.solve(&vdr);
                let back = v.transpose() * &t;
                dr.iter()
                    .zip(inv_d)
                    .zip(back.col_as_slice(0))
                    .map(|((a, b), c)| a - b * c)
                    .collect()
            }
        }
    }

    /// Solves `(D + VᵀV) x = r`. The Woodbury form loses digits when `D`
    /// spans many orders of magnitude, which a few refinement steps recover.
    fn solve(&self, v: &Matrix, d: &[f64], r: &[f64]) -> Vec<f64> {
        let mut x = self.solve_once(v, r);
        if let Normal::Low { .. } = self {
            for _ in 0..REFINEMENT_STEPS {
                let qx = times_t(v, &times(v, &x));
                let res: Vec<f64> = (0..r.len()).map(|i| r[i] - d[i] * x[i] - qx[i]).collect();
                let dx = self.solve_once(v, &res);
                x.iter_mut().zip(dx).for_each(|(a, b)| *a += b);
            }
        }
        x
    }
}

/// Cholesky factor of a matrix that is positive definite in exact arithmetic.
/// Near the solution the spread of `D` can make rounding break that, so a
/// diagonal shift relative to the largest diagonal entry is added until it factors.
fn cholesky_with_jitter(mut m: Matrix) -> Result<Llt<f64>> {
    if let Ok(llt) = m.llt(Side::Lower) {
        return Ok(llt);
    }
    let scale = (0..m.nrows()).fold(0.0f64, |a, i| a.max(m[(i, i)]));
    let mut added = 0.0;
    for exponent in [-15, -13, -11, -9] {
        let shift = scale * 10f64.powi(exponent);
        for i in 0..m.nrows() {
            m[(i, i)] += shift - added;
        }
        added = shift;
        if let Ok(llt) = m.llt(Side::Lower) {
            return Ok(llt);
        }
    }
    Err(Error::Convergence("svm normal equations"))
}

fn times(v: &Matrix, a: &[f64]) -> Vec<f64> {
    (v * Matrix::from_fn(a.len(), 1, |i, _| a[i])).col_as_slice(0).to_vec()
}

fn times_t(v: &Matrix, w: &[f64]) -> Vec<f64> {
    (v.transpose() * Matrix::from_fn(w.len(), 1, |i, _| w[i])).col_as_slice(0).to_vec()
}

/// Largest step in `(0, 1]` keeping every `x + s·dx` positive, scaled by `fraction`.
fn step_to_boundary(pairs: &[(&[f64], &[f64])], fraction: f64) -> f64 {
    let mut s = 1.0f64;
    for (x, dx) in pairs {
        for (xi, di) in x.iter().zip(dx.iter()) {
            if *di < 0.0 {
                s = s.min(-xi / di * fraction);
            }
        }
    }
    s
}

fn dot_sum(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Mehrotra predictor-corrector interior point method on the dual
/// `min ½αᵀQα − Σα` s.t. `yᵀα = 0`, `0 ≤ α ≤ C`. Returns `w = Σ αᵢ yᵢ xᵢ`.
fn interior_point(p: &Problem) -> Result<Vec<f64>> {
    let (k, n) = (p.x.nrows(), p.x.ncols());
    let c = p.cost;
    let v = Matrix::from_fn(k, n, |r, j| p.x[(r, j)] * p.y[j]);
    let q = (n <= k).then(|| v.transpose() * &v);
    let y = &p.y;

    let mut alpha = vec![c / 2.0; n];
    let mut slack = vec![c / 2.0; n];
    let mut z = vec![1.0; n];
    let mut u = vec![1.0; n];
    let mut beta = 0.0;
    for _ in 0..MAX_IPM_ITER {
        let qa = times_t(&v, &times(&v, &alpha));
        let rd: Vec<f64> = (0..n).map(|i| qa[i] - 1.0 + beta * y[i] - z[i] + u[i]).collect();
        let rp = dot_sum(y, &alpha);
        let mu = (dot_sum(&z, &alpha) + dot_sum(&u, &slack)) / (2 * n) as f64;
        let dual_obj = 0.5 * dot_sum(&alpha, &qa) - alpha.iter().sum::<f64>();
        let rd_max = rd.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let qa_max = qa.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let gap = 2.0 * n as f64 * mu;
        if rd_max <= RESIDUAL_TOL * (1.0 + qa_max)
            && rp.abs() <= RESIDUAL_TOL * c.max(1.0)
            && gap <= GAP_TOL * (1.0 + dual_obj.abs())
        {
            return Ok(times(&v, &alpha));
        }
        let d: Vec<f64> = (0..n).map(|i| z[i] / alpha[i] + u[i] / slack[i]).collect();
        let normal = Normal::factor(&v, q.as_ref(), &d)?;
        let m_y = normal.solve(&v, &d, y);
        let y_m_y = dot_sum(y, &m_y);

        // returns (dα, dβ, dz, du); dslack = −dα
        let direction = |target: f64, cz: &[f64], cu: &[f64]| {
            let r: Vec<f64> = (0..n)
                .map(|i| -rd[i] + (target - cz[i]) / alpha[i] - z[i] - (target - cu[i]) / slack[i] + u[i])
                .collect();
            let m_r = normal.solve(&v, &d, &r);
            let db = (dot_sum(y, &m_r) + rp) / y_m_y;
            let da: Vec<f64> = (0..n).map(|i| m_r[i] - db * m_y[i]).collect();
            let dz: Vec<f64> = (0..n)
                .map(|i| (target - cz[i] - z[i] * alpha[i] - z[i] * da[i]) / alpha[i])
                .collect();
            let du: Vec<f64> = (0..n)
                .map(|i| (target - cu[i] - u[i] * slack[i] + u[i] * da[i]) / slack[i])
                .collect();
            (da, db, dz, du)
        };
        let zeros = vec![0.0; n];
        let (da, _, dz, du) = direction(0.0, &zeros, &zeros);
        let ds: Vec<f64> = da.iter().map(|x| -x).collect();
        let s_aff = step_to_boundary(&[(&alpha, &da), (&slack, &ds), (&z, &dz), (&u, &du)], 1.0);
        let mu_aff = (0..n)
            .map(|i| {
                (alpha[i] + s_aff * da[i]) * (z[i] + s_aff * dz[i])
                    + (slack[i] + s_aff * ds[i]) * (u[i] + s_aff * du[i])
            })
            .sum::<f64>()
            / (2 * n) as f64;
        let sigma = (mu_aff / mu).powi(3).min(1.0);
        let cz: Vec<f64> = (0..n).map(|i| da[i] * dz[i]).collect();
        let cu: Vec<f64> = (0..n).map(|i| ds[i] * du[i]).collect();
        let (da, db, dz, du) = direction(sigma * mu, &cz, &cu);
        let ds: Vec<f64> = da.iter().map(|x| -x).collect();
        let s = step_to_boundary(&[(&alpha, &da), (&slack, &ds), (&z, &dz), (&u, &du)], FRACTION_TO_BOUNDARY);
        for i in 0..n {
            alpha[i] += s * da[i];
            slack[i] += s * ds[i];
            z[i] += s * dz[i];
            u[i] += s * du[i];
        }
        beta += s * db;
        if !beta.is_finite() || alpha.iter().any(|a| !a.is_finite()) {
            return Err(Error::Convergence("svm interior point"));
        }
    }
    Err(Error::Convergence("svm interior point"))
}

/// Midpoint of the set of biases minimizing `Σ max(0, 1 − yᵢ(sᵢ + b))`.
///
/// The objective is convex and piecewise linear with integer slopes, so the
/// minimizers are found exactly by counting breakpoints.
fn optimal_bias(scores: &[f64], y: &[f64]) -> f64 {
    // positives contribute slope −1 left of mᵢ = 1 − sᵢ, negatives +1 right of cᵢ = −1 − sᵢ
    let mut pos: Vec<f64> = Vec::new();
    let mut neg: Vec<f64> = Vec::new();
    for (s, &label) in scores.iter().zip(y) {
        if label > 0.0 {
            pos.push(1.0 - s);
        } else {
            neg.push(-1.0 - s);
        }
    }
    pos.sort_by(f64::total_cmp);
    neg.sort_by(f64::total_cmp);
    let mut points: Vec<f64> = pos.iter().chain(&neg).copied().collect();
    points.sort_by(f64::total_cmp);
    points.dedup();
    // right derivative at b: −#{mᵢ > b} + #{cᵢ ≤ b}
    let right = |b: f64| -> i64 {
        let above = pos.len() - pos.partition_point(|&m| m <= b);
        let below = neg.partition_point(|&c| c <= b);
        below as i64 - above as i64
    };
    let at = points.partition_point(|&b| right(b) < 0);
    let lo = points[at];
    if right(lo) > 0 || at + 1 == points.len() {
        lo
    } else {
        0.5 * (lo + points[at + 1])
    }
}

/// Trains `min ½‖w‖² + C Σ hinge` with an unregularized bias.
///
/// The dual is solved by an interior point method, after which the bias is set to the exact
/// minimizer of the primal for the resulting weights. Samples are put into a
/// canonical order first, so the result does not depend on input order. The
/// solver is deterministic and does not consume `seed`.
pub fn train_svm(x: &Matrix, y: &[f64], cost: f64, seed: u64) -> Result<LinearSvmModel> {
    let _ = seed;
    if x.ncols() != y.len() {
        return Err(Error::DimensionMismatch(format!("{} samples, {} labels", x.ncols(), y.len())));
    }
    if !(cost > 0.0) || !cost.is_finite() {
        return Err(Error::InvalidParameter(format!("cost must be positive, got {cost}")));
    }
    if y.iter().any(|&v| v != 1.0 && v != -1.0) {
        return Err(Error::InvalidParameter("labels must be -1 or +1".into()));
    }
    if !(y.contains(&1.0) && y.contains(&-1.0)) {
        return Err(Error::SingleClass);
    }
    check_finite(x, "svm input")?;
    let (k, n) = (x.nrows(), x.ncols());

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        let (ca, cb) = (x.col_as_slice(a), x.col_as_slice(b));
        ca.iter()
            .zip(cb)
            .map(|(u, v)| u.total_cmp(v))
            .find(|o| *o != Ordering::Equal)
            .unwrap_or(Ordering::Equal)
            .then(y[a].total_cmp(&y[b]))
    });
    let p = Problem {
        x: Matrix::from_fn(k, n, |r, j| x[(r, order[j])]),
        y: order.iter().map(|&i| y[i]).collect(),
        cost,
    };
    let weights = interior_point(&p)?;
    let scores = times_t(&p.x, &weights);
    let bias = optimal_bias(&scores, &p.y);
    let hinge: f64 = scores
        .iter()
        .zip(&p.y)
        .map(|(s, y)| (1.0 - y * (s + bias)).max(0.0))
        .sum();
    let objective = 0.5 * dot(&weights, &weights) + cost * hinge;
    Ok(LinearSvmModel {
        weights,
        bias,
        cost,
        objective,
    })
}

/// `wᵀx + b` for every column of `x`.
pub fn decision_scores(model: &LinearSvmModel, x: &Matrix) -> Result<Vec<f64>> {
    if x.nrows() != model.weights.len() {
        return Err(Error::DimensionMismatch(format!(
            "model has {} weights, input has {} rows",
            model.weights.len(),
            x.nrows()
        )));
    }
    Ok((0..x.ncols())
        .map(|i| dot(&model.weights, x.col_as_slice(i)) + model.bias)
        .collect())
}

/// Per-row z-scoring with statistics from the training columns.
/// Rows with zero spread are only centered.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(x: &Matrix) -> Self {
        let n = x.ncols().max(1) as f64;
        let mut mean = vec![0.0; x.nrows()];
        let mut scale = vec![0.0; x.nrows()];
        for r in 0..x.nrows() {
            let row = x.row(r);
            let m = row.iter().sum::<f64>() / n;
            let var = row.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n;
            mean[r] = m;
            scale[r] = if var > 0.0 { var.sqrt() } else { 1.0 };
        }
        Standardizer { mean, scale }
    }

    pub fn apply(&self, x: &Matrix) -> Result<Matrix> {
        if x.nrows() != self.mean.len() {
            return Err(Error::DimensionMismatch(format!(
                "standardizer has {} rows, input has {}",
                self.mean.len(),
                x.nrows()
            )));
        }
        Ok(Matrix::from_fn(x.nrows(), x.ncols(), |r, j| (x[(r, j)] - self.mean[r]) / self.scale[r]))
    }
}

/// Named reduction parameters for one grid point, ordered by name.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DrParams(pub BTreeMap<String, f64>);

impl DrParams {
    pub fn get(&self, key: &str) -> Option<f64> {
        self.0.get(key).copied()
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.0.insert(key.to_string(), value);
        self
    }

    /// Lexicographic order over `(name, value)` pairs.
    pub fn lex_cmp(&self, other: &Self) -> Ordering {
        let mut a = self.0.iter();
        let mut b = other.0.iter();
        loop {
            match (a.next(), b.next()) {
                (None, None) => return Ordering::Equal,
                (None, Some(_)) => return Ordering::Less,
                (Some(_), None) => return Ordering::Greater,
                (Some((ka, va)), Some((kb, vb))) => {
                    let o = ka.cmp(kb).then(va.total_cmp(vb));
                    if o != Ordering::Equal {
                        return o;
                    }
                }
            }
        }
    }

    /// `name=value` pairs joined by `;`, or `-` when empty.
    pub fn describe(&self) -> String {
        if self.0.is_empty() {
            return "-".into();
        }
        self.0
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(";")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningGrid {
    pub cost_values: Vec<f64>,
    pub dr_params: Vec<DrParams>,
}

impl Default for TuningGrid {
    fn default() -> Self {
        TuningGrid::costs_only(DEFAULT_COSTS.to_vec())
    }
}

impl TuningGrid {
    pub fn costs_only(cost_values: Vec<f64>) -> Self {
        TuningGrid {
            cost_values,
            dr_params: vec![DrParams::default()],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.cost_values.is_empty() || self.dr_params.is_empty() {
            return Err(Error::InvalidParameter("tuning grid must be nonempty".into()));
        }
        if let Some(c) = self.cost_values.iter().find(|c| !(**c > 0.0) || !c.is_finite()) {
            return Err(Error::InvalidParameter(format!("cost values must be positive, got {c}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridScore {
    pub dr: DrParams,
    pub cost: f64,
    pub mean_f1: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuningResult {
    /// Index into `scores` of the selected setting.
    pub best: usize,
    /// One entry per grid point, reduction parameters outermost.
    pub scores: Vec<GridScore>,
}

impl TuningResult {
    pub fn best(&self) -> &GridScore {
        &self.scores[self.best]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FoldSplit {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
}

/// Subject-wise train/validation index sets, one per fold.
pub fn fold_splits<S: AsRef<str>>(subjects: &[S], folds: usize, seed: u64) -> Result<Vec<FoldSplit>> {
    let assignment = subject_folds(subjects, folds, seed)?;
    let splits: Vec<FoldSplit> = (0..folds)
        .map(|f| FoldSplit {
            train: (0..subjects.len()).filter(|&i| assignment[i] != f).collect(),
            validation: (0..subjects.len()).filter(|&i| assignment[i] == f).collect(),
        })
        .collect();
    for split in &splits {
        let train: std::collections::BTreeSet<&str> =
            split.train.iter().map(|&i| subjects[i].as_ref()).collect();
        assert!(
            split.validation.iter().all(|&i| !train.contains(subjects[i].as_ref())),
            "subject appears on both sides of a fold"
        );
    }
    Ok(splits)
}

/// Picks the highest mean F1; ties go to the smaller cost, then to the
/// lexicographically smaller reduction parameters, then to the earlier entry.
pub fn select_best(scores: &[GridScore]) -> usize {
    let mut best = 0;
    for (i, s) in scores.iter().enumerate().skip(1) {
        let b = &scores[best];
        let better = s.mean_f1 > b.mean_f1
            || (s.mean_f1 == b.mean_f1
                && (s.cost < b.cost || (s.cost == b.cost && s.dr.lex_cmp(&b.dr) == Ordering::Less)));
        if better {
            best = i;
        }
    }
    best
}

/// Cross-validated grid search with a caller-supplied fold evaluator.
///
/// `evaluate(params, fold, split)` returns one validation F1 per entry of
/// `grid.cost_values`, which lets the caller fit a reduction once per fold
/// and reuse it across costs. Folds and parameter sets run on the current
/// rayon pool; results are reduced in index order.
pub fn tune_with<F>(grid: &TuningGrid, splits: &[FoldSplit], evaluate: F) -> Result<TuningResult>
where
    F: Fn(&DrParams, usize, &FoldSplit) -> Result<Vec<f64>> + Sync,
{
    grid.validate()?;
    if splits.is_empty() {
        return Err(Error::InvalidParameter("no folds to evaluate".into()));
    }
    let tasks: Vec<(usize, usize)> = (0..grid.dr_params.len())
        .flat_map(|p| (0..splits.len()).map(move |f| (p, f)))
        .collect();
    let results: Vec<Result<Vec<f64>>> = tasks
        .par_iter()
        .map(|&(p, f)| evaluate(&grid.dr_params[p], f, &splits[f]))
        .collect();
    let mut scores = Vec::with_capacity(grid.dr_params.len() * grid.cost_values.len());
    let mut results = results.into_iter();
    for params in &grid.dr_params {
        let mut sums = vec![0.0; grid.cost_values.len()];
        for _ in 0..splits.len() {
            let per_cost = results.next().expect("one result per task")?;
            if per_cost.len() != sums.len() {
                return Err(Error::DimensionMismatch(format!(
                    "evaluator returned {} scores for {} costs",
                    per_cost.len(),
                    sums.len()
                )));
            }
            for (s, v) in sums.iter_mut().zip(per_cost) {
                *s += v;
            }
        }
        for (&cost, s) in grid.cost_values.iter().zip(sums) {
            scores.push(GridScore {
                dr: params.clone(),
                cost,
                mean_f1: s / splits.len() as f64,
            });
        }
    }
    Ok(TuningResult {
        best: select_best(&scores),
        scores,
    })
}

fn select_columns(x: &Matrix, idx: &[usize]) -> Matrix {
    Matrix::from_fn(x.nrows(), idx.len(), |r, j| x[(r, idx[j])])
}

/// Grid search over SVM costs on fixed features, scored by validation F1 at threshold 0.
pub fn tune<S: AsRef<str> + Sync>(
    x: &Matrix,
    y: &[f64],
    subjects: &[S],
    grid: &TuningGrid,
    folds: usize,
    seed: u64,
) -> Result<TuningResult> {
    if x.ncols() != y.len() || y.len() != subjects.len() {
        return Err(Error::DimensionMismatch("features, labels and subjects differ in length".into()));
    }
    let splits = fold_splits(subjects, folds, seed)?;
    tune_with(grid, &splits, |_, fold, split| {
        let xt = select_columns(x, &split.train);
        let yt: Vec<f64> = split.train.iter().map(|&i| y[i]).collect();
        let xv = select_columns(x, &split.validation);
        let truth: Vec<bool> = split.validation.iter().map(|&i| y[i] > 0.0).collect();
        grid.cost_values
            .iter()
            .enumerate()
            .map(|(ci, &c)| {
                let model = train_svm(&xt, &yt, c, derive_seed(seed, &[fold as u64, ci as u64]))?;
                let scores = decision_scores(&model, &xv)?;
                Ok(f1(&ConfusionCounts::from_scores(&scores, &truth, 0.0)))
            })
            .collect()
    })
}
