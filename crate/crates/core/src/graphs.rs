//! Neighborhood graphs: k-NN adjacency, LLE reconstruction weights,
//! heat-kernel affinities and the within/between graphs used by LSDA.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::linalg::{check_finite, dot, ridge_solve, sq_dist, Matrix};

/// Symmetric sparse weight matrix with its degree vector.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinityGraph {
    rows: Vec<Vec<(usize, f64)>>,
    degree: Vec<f64>,
}

impl AffinityGraph {
    /// Builds a graph from undirected edges. Repeated edges keep the last weight.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize, f64)>) -> Self {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for (i, j, w) in edges {
            upsert(&mut rows[i], j, w);
            if i != j {
                upsert(&mut rows[j], i, w);
            }
        }
        for row in &mut rows {
            row.sort_by_key(|&(j, _)| j);
        }
        let degree = rows.iter().map(|r| r.iter().map(|&(_, w)| w).sum()).collect();
        AffinityGraph { rows, degree }
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.rows[i]
            .binary_search_by_key(&j, |&(c, _)| c)
            .map(|pos| self.rows[i][pos].1)
            .unwrap_or(0.0)
    }

    pub fn degree(&self) -> &[f64] {
        &self.degree
    }

    /// Undirected edges as `(i, j)` with `i < j`.
    pub fn edge_set(&self) -> BTreeSet<(usize, usize)> {
        let mut set = BTreeSet::new();
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, _) in row {
                if i < j {
                    set.insert((i, j));
                }
            }
        }
        set
    }

    pub fn edge_count(&self) -> usize {
        self.edge_set().len()
    }

    pub fn to_dense(&self) -> Matrix {
        let n = self.n();
        let mut w = Matrix::zeros(n, n);
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, v) in row {
                w[(i, j)] = v;
            }
        }
        w
    }

    pub fn degree_dense(&self) -> Matrix {
        Matrix::from_fn(self.n(), self.n(), |i, j| if i == j { self.degree[i] } else { 0.0 })
    }

    /// `L = S − W`.
    pub fn laplacian_dense(&self) -> Matrix {
        let mut l = self.to_dense();
        for i in 0..self.n() {
            for j in 0..self.n() {
                l[(i, j)] = -l[(i, j)];
            }
            l[(i, i)] += self.degree[i];
        }
        l
    }

    /// `xᵀLx` without forming `L`.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        let mut total = 0.0;
        for (i, row) in self.rows.iter().enumerate() {
            total += self.degree[i] * x[i] * x[i];
            for &(j, w) in row {
                total -= w * x[i] * x[j];
            }
        }
        total
    }

    pub fn connected_components(&self) -> usize {
        let n = self.n();
        let mut seen = vec![false; n];
        let mut count = 0;
        let mut stack = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            count += 1;
            seen[start] = true;
            stack.push(start);
            while let Some(i) = stack.pop() {
                for &(j, _) in &self.rows[i] {
                    if !seen[j] {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
        }
        count
    }
}

fn upsert(row: &mut Vec<(usize, f64)>, j: usize, w: f64) {
    match row.iter_mut().find(|(c, _)| *c == j) {
        Some(slot) => slot.1 = w,
        None => row.push((j, w)),
    }
}

/// The `p` nearest other columns of every column, nearest first.
/// Equal distances go to the lower column index.
pub fn neighbors(d: &Matrix, p: usize) -> Result<Vec<Vec<usize>>> {
    let n = d.ncols();
    if p == 0 {
        return Err(Error::InvalidParameter("neighbor count must be >= 1".into()));
    }
    if p >= n {
        return Err(Error::TooFewSamples(format!(
            "{p} neighbors requested from {n} samples"
        )));
    }
    check_finite(d, "graph input")?;
    let order = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    let mut out = Vec::with_capacity(n);
    let mut cand = Vec::with_capacity(n - 1);
    for i in 0..n {
        let di = d.col_as_slice(i);
        cand.clear();
        cand.extend(
            (0..n)
                .filter(|&j| j != i)
                .map(|j| (sq_dist(di, d.col_as_slice(j)), j)),
        );
        if p < cand.len() {
            cand.select_nth_unstable_by(p - 1, order);
            cand.truncate(p);
        }
        cand.sort_unstable_by(order);
        out.push(cand.iter().map(|&(_, j)| j).collect());
    }
    Ok(out)
}

/// Binary k-NN adjacency, symmetrized by union, or by intersection when `mutual`.
pub fn knn_graph(d: &Matrix, p: usize, mutual: bool) -> Result<AffinityGraph> {
    let lists = neighbors(d, p)?;
    let n = d.ncols();
    let directed: BTreeSet<(usize, usize)> = lists
        .iter()
        .enumerate()
        .flat_map(|(i, l)| l.iter().map(move |&j| (i, j)))
        .collect();
    let edges = directed.iter().filter_map(|&(i, j)| {
        let keep = !mutual || directed.contains(&(j, i));
        keep.then_some((i, j, 1.0))
    });
    Ok(AffinityGraph::from_edges(n, edges))
}

/// Heat-kernel weights on the edges of `graph`; `None` keeps the weights binary.
pub fn heat_affinity(d: &Matrix, graph: &AffinityGraph, sigma: Option<f64>) -> Result<AffinityGraph> {
    if graph.n() != d.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "graph has {} nodes, data has {} columns",
            graph.n(),
            d.ncols()
        )));
    }
    let edges: Vec<(usize, usize, f64)> = match sigma {
        None => graph.edge_set().into_iter().map(|(i, j)| (i, j, 1.0)).collect(),
        Some(s) => {
            if !(s > 0.0) || !s.is_finite() {
                return Err(Error::InvalidParameter(format!("heat sigma must be positive, got {s}")));
            }
            graph
                .edge_set()
                .into_iter()
                .map(|(i, j)| {
                    let d2 = sq_dist(d.col_as_slice(i), d.col_as_slice(j));
                    (i, j, (-d2 / (2.0 * s * s)).exp())
                })
                .collect()
        }
    };
    Ok(AffinityGraph::from_edges(d.ncols(), edges))
}

/// Median Euclidean length over the edges of `graph`, or 1.0 when no edge has positive length.
pub fn median_edge_sigma(d: &Matrix, graph: &AffinityGraph) -> f64 {
    let mut lengths: Vec<f64> = graph
        .edge_set()
        .into_iter()
        .map(|(i, j)| sq_dist(d.col_as_slice(i), d.col_as_slice(j)).sqrt())
        .collect();
    if lengths.is_empty() {
        return 1.0;
    }
    let mid = lengths.len() / 2;
    let (_, m, _) = lengths.select_nth_unstable_by(mid, f64::total_cmp);
    if *m > 0.0 {
        *m
    } else {
        1.0
    }
}

/// Within-class and between-class graphs from each sample's `p` nearest neighbors.
pub fn lsda_graphs(d: &Matrix, labels: &[usize], p: usize) -> Result<(AffinityGraph, AffinityGraph)> {
    if labels.len() != d.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "{} labels for {} samples",
            labels.len(),
            d.ncols()
        )));
    }
    if labels.iter().all(|&l| l == labels[0]) {
        return Err(Error::SingleClass);
    }
    let lists = neighbors(d, p)?;
    let mut within = Vec::new();
    let mut between = Vec::new();
    for (i, list) in lists.iter().enumerate() {
        for &j in list {
            if labels[i] == labels[j] {
                within.push((i, j, 1.0));
            } else {
                between.push((i, j, 1.0));
            }
        }
    }
    let n = d.ncols();
    Ok((
        AffinityGraph::from_edges(n, within),
        AffinityGraph::from_edges(n, between),
    ))
}

/// Column-stochastic reconstruction weights: column `i` holds the weights
/// that rebuild sample `i` from its neighbors.
#[derive(Debug, Clone, PartialEq)]
pub struct LleWeights {
    pub columns: Vec<Vec<(usize, f64)>>,
    /// `‖D(I − W)‖²_F`
    pub objective: f64,
}

impl LleWeights {
    pub fn n(&self) -> usize {
        self.columns.len()
    }

    pub fn to_dense(&self) -> Matrix {
        let n = self.n();
        let mut w = Matrix::zeros(n, n);
        for (i, col) in self.columns.iter().enumerate() {
            for &(j, v) in col {
                w[(j, i)] = v;
            }
        }
        w
    }
}

/// Solves the constrained local least-squares problem for every sample.
///
/// `reg` scales a Tikhonov term `reg·tr(G)/p` on each local Gram `G`. Samples
/// that coincide with one or more neighbors put equal weight on those
/// neighbors and nothing elsewhere.
pub fn lle_weights(d: &Matrix, p: usize, reg: f64) -> Result<LleWeights> {
    if !(reg >= 0.0) || !reg.is_finite() {
        return Err(Error::InvalidParameter(format!("lle regularization must be >= 0, got {reg}")));
    }
    let lists = neighbors(d, p)?;
    let dim = d.nrows();
    let mut columns = Vec::with_capacity(lists.len());
    let mut objective = 0.0;
    let mut diffs = vec![0.0; dim * p];
    for (i, list) in lists.iter().enumerate() {
        let di = d.col_as_slice(i);
        for (a, &j) in list.iter().enumerate() {
            let dj = d.col_as_slice(j);
            for r in 0..dim {
                diffs[a * dim + r] = di[r] - dj[r];
            }
        }
        let diff = |a: usize| &diffs[a * dim..(a + 1) * dim];
        let coincident: Vec<usize> = (0..p).filter(|&a| diff(a).iter().all(|&v| v == 0.0)).collect();
        let weights: Vec<f64> = if !coincident.is_empty() {
            let share = 1.0 / coincident.len() as f64;
            (0..p)
                .map(|a| if coincident.contains(&a) { share } else { 0.0 })
                .collect()
        } else {
            let mut g = Matrix::from_fn(p, p, |a, b| dot(diff(a), diff(b)));
            let tr: f64 = (0..p).map(|a| g[(a, a)]).sum();
            let ridge = reg * tr / p as f64;
            for a in 0..p {
                g[(a, a)] += ridge;
            }
            let ones = Matrix::from_fn(p, 1, |_, _| 1.0);
            let raw = ridge_solve(&g, &ones, 0.0).map_err(|e| match e {
                Error::Singular => Error::SingularLocalGram { sample: i },
                other => other,
            })?;
            let total: f64 = (0..p).map(|a| raw[(a, 0)]).sum();
            if !total.is_finite() || total == 0.0 {
                return Err(Error::SingularLocalGram { sample: i });
            }
            (0..p).map(|a| raw[(a, 0)] / total).collect()
        };
        let mut residual = 0.0;
        for r in 0..dim {
            let rec: f64 = (0..p).map(|a| weights[a] * diff(a)[r]).sum();
            residual += rec * rec;
        }
        objective += residual;
        columns.push(list.iter().copied().zip(weights).collect());
    }
    Ok(LleWeights { columns, objective })
}
