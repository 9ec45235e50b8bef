//! End-to-end runs: sampling, subject split, tuning, refit and scoring.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Mutex;
use std::time::Instant;

use rayon::prelude::*;
use unidr::classify::{decision_scores, fold_splits, train_svm, tune_with, DrParams, FoldSplit, Standardizer, TuningGrid};
use unidr::datasets::{gen_au_like, gen_clusters, load_csv, FeatureMatrix};
use unidr::dr::{fit_kda, fit_kpca, fit_lda, fit_lle, fit_lpp, fit_lsda, fit_pca, transform, DrModel, LSDA_DEFAULT_ALPHA};
use unidr::eval::{best_f1_threshold, cohens_kappa, downsample, f1, roc_and_auc, ConfusionCounts};
use unidr::graphs::{heat_affinity, knn_graph, median_edge_sigma};
use unidr::kernels::{median_sigma, KernelSpec};
use unidr::seed::{derive_seed, fnv1a};
use unidr::Matrix;

use crate::config::{DatasetConfig, EvalMode, ExperimentConfig, GraphWeights, KernelConfig, MethodConfig};
use crate::error::{BenchError, Result};
use crate::report::{CellReport, DatasetSummary, EvalReport};

const STREAM_DATASET: u64 = 1;
const STREAM_SAMPLING: u64 = 2;
const STREAM_SPLIT: u64 = 3;
const STREAM_FOLDS: u64 = 4;

/// Builds or reads the configured dataset.
pub fn load_dataset(config: &ExperimentConfig) -> Result<FeatureMatrix> {
    let seed = derive_seed(config.seed, &[STREAM_DATASET]);
    Ok(match &config.dataset {
        DatasetConfig::AuLike(p) => gen_au_like(p, seed)?,
        DatasetConfig::Clusters {
            d,
            n,
            classes,
            separation,
        } => gen_clusters(*d, *n, *classes, *separation, seed)?,
        DatasetConfig::Csv { path, schema } => load_csv(path, schema)?,
    })
}

fn concat(a: &Matrix, b: &Matrix) -> Matrix {
    let n = a.ncols();
    Matrix::from_fn(a.nrows(), n + b.ncols(), |r, j| if j < n { a[(r, j)] } else { b[(r, j - n)] })
}

fn resolve_kernel(kernel: &KernelConfig, scale: f64, train: &Matrix) -> KernelSpec {
    match *kernel {
        KernelConfig::Linear => KernelSpec::Linear,
        KernelConfig::Polynomial { degree, offset } => KernelSpec::Polynomial { degree, offset },
        KernelConfig::Rbf { sigma } => KernelSpec::Rbf {
            sigma: sigma.unwrap_or_else(|| median_sigma(train)) * scale,
        },
    }
}

/// Fits one reduction model on `train` with the grid point `params`.
/// Returns `None` for the identity control.
pub fn fit_model(
    method: &MethodConfig,
    params: &DrParams,
    train: &Matrix,
    classes: &[usize],
) -> unidr::Result<Option<DrModel>> {
    let p = || params.get("p").map_or(12, |v| v as usize);
    let scale = || params.get("sigma_scale").unwrap_or(1.0);
    Ok(Some(match method {
        MethodConfig::None => return Ok(None),
        MethodConfig::Lle(c) => fit_lle(train, p(), c.reg, c.energy)?,
        MethodConfig::Pca(c) => fit_pca(train, c.energy, c.route)?,
        MethodConfig::Kpca(c) => fit_kpca(train, &resolve_kernel(&c.kernel, scale(), train), c.energy)?,
        MethodConfig::Lpp(c) => {
            let graph = knn_graph(train, p(), false)?;
            let sigma = match c.weights {
                GraphWeights::Heat => Some(median_edge_sigma(train, &graph)),
                GraphWeights::Binary => None,
            };
            fit_lpp(train, &heat_affinity(train, &graph, sigma)?, c.energy)?
        }
        MethodConfig::Lda(c) => fit_lda(train, classes, c.route)?,
        MethodConfig::Kda(c) => fit_kda(train, classes, &resolve_kernel(&c.kernel, scale(), train), c.ridge)?,
        MethodConfig::Lsda(_) => {
            let alpha = params.get("alpha").unwrap_or(LSDA_DEFAULT_ALPHA);
            fit_lsda(train, classes, p(), alpha)?
        }
    }))
}

/// Fits the reduction on `train` and returns `(train embedding, embedding of apply)`.
/// LLE has no out-of-sample map, so it is fit on both sets together.
pub fn fit_reduce(
    method: &MethodConfig,
    params: &DrParams,
    train: &Matrix,
    classes: &[usize],
    apply: &Matrix,
) -> unidr::Result<(Matrix, Matrix)> {
    if let MethodConfig::Lle(_) = method {
        let n = train.ncols();
        let model = fit_model(method, params, &concat(train, apply), &[])?.expect("lle builds a model");
        let emb = &model.train_embedding;
        return Ok((emb.subcols(0, n).to_owned(), emb.subcols(n, apply.ncols()).to_owned()));
    }
    match fit_model(method, params, train, classes)? {
        None => Ok((train.clone(), apply.clone())),
        Some(model) => {
            let applied = transform(&model, apply)?;
            Ok((model.train_embedding, applied))
        }
    }
}

fn select(x: &Matrix, idx: &[usize]) -> Matrix {
    Matrix::from_fn(x.nrows(), idx.len(), |r, j| x[(r, idx[j])])
}

fn signed(labels: &[bool]) -> Vec<f64> {
    labels.iter().map(|&l| if l { 1.0 } else { -1.0 }).collect()
}

/// z-scores both embeddings with training statistics, trains one SVM per
/// cost and returns decision scores on `apply` for each.
fn score_costs(train: &Matrix, y: &[bool], apply: &Matrix, costs: &[f64], seed: u64) -> unidr::Result<Vec<Vec<f64>>> {
    let z = Standardizer::fit(train);
    let (zt, za) = (z.apply(train)?, z.apply(apply)?);
    let ys = signed(y);
    costs
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            let model = train_svm(&zt, &ys, c, derive_seed(seed, &[i as u64]))?;
            decision_scores(&model, &za)
        })
        .collect()
}

/// Subject-disjoint `(train, test)` index sets. In holdout mode the subjects
/// are ordered by a seeded hash and the first `round(test_fraction · S)` are
/// held out; leave-one-subject-out yields one partition per subject.
pub fn subject_partitions(subjects: &[String], mode: EvalMode, test_fraction: f64, seed: u64) -> Vec<(Vec<usize>, Vec<usize>)> {
    let distinct: BTreeSet<&str> = subjects.iter().map(String::as_str).collect();
    let held: Vec<BTreeSet<&str>> = match mode {
        EvalMode::Holdout => {
            let mut order: Vec<&str> = distinct.into_iter().collect();
            order.sort_by_key(|s| (derive_seed(seed, &[fnv1a(s.as_bytes())]), *s));
            let s = order.len();
            let n_test = ((test_fraction * s as f64).round() as usize).clamp(1, s.saturating_sub(1).max(1));
            vec![order[..n_test].iter().copied().collect()]
        }
        EvalMode::LeaveOneSubjectOut => distinct.into_iter().map(|s| BTreeSet::from([s])).collect(),
    };
    held.into_iter()
        .map(|test_set| {
            let (test, train): (Vec<usize>, Vec<usize>) =
                (0..subjects.len()).partition(|&i| test_set.contains(subjects[i].as_str()));
            let train_subjects: BTreeSet<&str> = train.iter().map(|&i| subjects[i].as_str()).collect();
            assert!(
                test.iter().all(|&i| !train_subjects.contains(subjects[i].as_str())),
                "a subject appears in both train and test"
            );
            (train, test)
        })
        .collect()
}

/// One sampled label: features, labels, class indices and subjects.
struct LabelData {
    x: Matrix,
    y: Vec<bool>,
    classes: Vec<usize>,
    subjects: Vec<String>,
}

struct PartitionResult {
    test: Vec<usize>,
    scores: Vec<f64>,
    threshold: f64,
    cost: f64,
    params: DrParams,
    cv_f1: f64,
    dim: usize,
}

fn run_partition(
    config: &ExperimentConfig,
    method: &MethodConfig,
    data: &LabelData,
    train: &[usize],
    test: &[usize],
    seed: u64,
) -> unidr::Result<PartitionResult> {
    let train_subjects: Vec<&str> = train.iter().map(|&i| data.subjects[i].as_str()).collect();
    let folds = fold_splits(&train_subjects, config.evaluation.folds, derive_seed(seed, &[STREAM_FOLDS]))?;
    let xt = select(&data.x, train);
    let yt: Vec<bool> = train.iter().map(|&i| data.y[i]).collect();
    let ct: Vec<usize> = train.iter().map(|&i| data.classes[i]).collect();
    let grid = TuningGrid {
        cost_values: config.costs.clone(),
        dr_params: method.grid(),
    };
    let oof: Mutex<BTreeMap<(String, usize), Vec<Vec<f64>>>> = Mutex::new(BTreeMap::new());
    let evaluate = |params: &DrParams, fold: usize, split: &FoldSplit| -> unidr::Result<Vec<f64>> {
        let fx = select(&xt, &split.train);
        let fy: Vec<bool> = split.train.iter().map(|&i| yt[i]).collect();
        let fc: Vec<usize> = split.train.iter().map(|&i| ct[i]).collect();
        let vx = select(&xt, &split.validation);
        let vy: Vec<bool> = split.validation.iter().map(|&i| yt[i]).collect();
        let (emb_t, emb_v) = fit_reduce(method, params, &fx, &fc, &vx)?;
        let per_cost = score_costs(&emb_t, &fy, &emb_v, &config.costs, derive_seed(seed, &[5, fold as u64]))?;
        let f1s = per_cost
            .iter()
            .map(|s| f1(&ConfusionCounts::from_scores(s, &vy, 0.0)))
            .collect();
        oof.lock().expect("scores lock").insert((params.describe(), fold), per_cost);
        Ok(f1s)
    };
    let tuned = tune_with(&grid, &folds, evaluate)?;
    let best = tuned.best().clone();
    let cost_idx = config.costs.iter().position(|&c| c == best.cost).expect("best cost is in the grid");

    // out-of-fold scores of the chosen setting fix the decision threshold
    let oof = oof.into_inner().expect("scores lock");
    let mut oof_scores = vec![0.0; train.len()];
    for (fold, split) in folds.iter().enumerate() {
        let scores = &oof[&(best.dr.describe(), fold)][cost_idx];
        for (&i, &s) in split.validation.iter().zip(scores) {
            oof_scores[i] = s;
        }
    }
    let (threshold, _) = best_f1_threshold(&oof_scores, &yt)?;

    let xs = select(&data.x, test);
    let (emb_t, emb_s) = fit_reduce(method, &best.dr, &xt, &ct, &xs)?;
    let scores = score_costs(&emb_t, &yt, &emb_s, &[best.cost], derive_seed(seed, &[6]))?.remove(0);
    Ok(PartitionResult {
        test: test.to_vec(),
        scores,
        threshold,
        cost: best.cost,
        params: best.dr,
        cv_f1: best.mean_f1,
        dim: emb_t.nrows(),
    })
}

fn run_cell(
    config: &ExperimentConfig,
    method: &MethodConfig,
    label: &str,
    data: &LabelData,
    partitions: &[(Vec<usize>, Vec<usize>)],
    seed: u64,
) -> Result<CellReport> {
    let start = Instant::now();
    let wrap = |source: unidr::Error| BenchError::Cell {
        label: label.to_string(),
        method: method.name().to_string(),
        source,
    };
    let results: Vec<PartitionResult> = partitions
        .par_iter()
        .enumerate()
        .map(|(i, (train, test))| run_partition(config, method, data, train, test, derive_seed(seed, &[i as u64])))
        .collect::<unidr::Result<_>>()
        .map_err(wrap)?;

    let mut scores = Vec::new();
    let mut truth = Vec::new();
    let mut counts = ConfusionCounts::default();
    for r in &results {
        let y: Vec<bool> = r.test.iter().map(|&i| data.y[i]).collect();
        let c = ConfusionCounts::from_scores(&r.scores, &y, r.threshold);
        counts.tp += c.tp;
        counts.fp += c.fp;
        counts.tn += c.tn;
        counts.fn_ += c.fn_;
        scores.extend_from_slice(&r.scores);
        truth.extend(y);
    }
    let roc = roc_and_auc(&scores, &truth).map_err(wrap)?;
    let first = &results[0];
    Ok(CellReport {
        label: label.to_string(),
        method: method.name().to_string(),
        auc: roc.auc,
        f1: f1(&counts),
        kappa: cohens_kappa(&counts),
        threshold: first.threshold,
        cost: first.cost,
        params: first.params.clone(),
        cv_f1: first.cv_f1,
        dim: first.dim,
        n_train: partitions[0].0.len(),
        n_test: truth.len(),
        test_positives: truth.iter().filter(|&&t| t).count(),
        counts,
        roc: roc.points,
        wall_seconds: start.elapsed().as_secs_f64(),
    })
}

/// Runs every (label, method) cell on the current rayon pool.
pub fn run_experiment(config: &ExperimentConfig) -> Result<EvalReport> {
    config.validate()?;
    let data = load_dataset(config)?;
    let labels: Vec<String> = if config.labels.is_empty() {
        data.labels.iter().map(|l| l.name.clone()).collect()
    } else {
        config.labels.clone()
    };
    if labels.is_empty() {
        return Err(BenchError::config("labels", "dataset has no label columns"));
    }
    let mut warnings = Vec::new();
    let mut prepared = Vec::new();
    for (i, name) in labels.iter().enumerate() {
        let column = data
            .label(name)
            .ok_or_else(|| BenchError::config(format!("labels[{i}]"), format!("dataset has no label {name:?}")))?;
        let label_seed = derive_seed(config.seed, &[fnv1a(name.as_bytes())]);
        let sampled = downsample(
            &column.values,
            config.sampling.keep_fraction,
            config.sampling.neg_per_pos,
            derive_seed(label_seed, &[STREAM_SAMPLING]),
        )
        .map_err(|source| BenchError::Cell {
            label: name.clone(),
            method: "*".into(),
            source,
        })?;
        warnings.extend(sampled.warnings.iter().map(|w| format!("{name}: {w}")));
        let subset = data.select(&sampled.indices);
        let y = subset.label(name).expect("label kept by select").values.clone();
        let label_data = LabelData {
            classes: y.iter().map(|&b| b as usize).collect(),
            x: subset.features,
            y,
            subjects: subset.subjects,
        };
        let partitions = subject_partitions(
            &label_data.subjects,
            config.evaluation.mode,
            config.evaluation.test_fraction,
            derive_seed(label_seed, &[STREAM_SPLIT]),
        );
        prepared.push((name.clone(), label_seed, label_data, partitions));
    }

    let tasks: Vec<(usize, usize)> = (0..prepared.len())
        .flat_map(|l| (0..config.methods.len()).map(move |m| (l, m)))
        .collect();
    let cells: Vec<CellReport> = tasks
        .par_iter()
        .map(|&(l, m)| {
            let (name, seed, data, partitions) = &prepared[l];
            run_cell(config, &config.methods[m], name, data, partitions, *seed)
        })
        .collect::<Result<_>>()?;
    Ok(EvalReport {
        name: config.name.clone(),
        seed: config.seed,
        dataset: DatasetSummary {
            n: data.n(),
            d: data.d(),
            subjects: data.subjects.iter().collect::<BTreeSet<_>>().len(),
        },
        cells,
        warnings,
    })
}

/// Runs on a dedicated pool of `jobs` threads.
pub fn run_experiment_with_jobs(config: &ExperimentConfig, jobs: usize) -> Result<EvalReport> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| BenchError::config("--jobs", e.to_string()))?;
    pool.install(|| run_experiment(config))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn subjects(n: usize, groups: usize) -> Vec<String> {
        (0..n).map(|i| format!("s{}", i % groups)).collect()
    }

    #[test]
    fn holdout_partition_is_subject_disjoint() {
        let s = subjects(100, 10);
        let parts = subject_partitions(&s, EvalMode::Holdout, 0.4, 9);
        assert_eq!(parts.len(), 1);
        let (train, test) = &parts[0];
        assert_eq!(train.len() + test.len(), 100);
        let held: BTreeSet<&String> = test.iter().map(|&i| &s[i]).collect();
        assert_eq!(held.len(), 4);
        assert!(train.iter().all(|&i| !held.contains(&s[i])));
        assert_eq!(parts, subject_partitions(&s, EvalMode::Holdout, 0.4, 9));
    }

    #[test]
    fn leave_one_subject_out_covers_everyone() {
        let s = subjects(30, 5);
        let parts = subject_partitions(&s, EvalMode::LeaveOneSubjectOut, 0.4, 0);
        assert_eq!(parts.len(), 5);
        let mut seen: Vec<usize> = parts.iter().flat_map(|(_, t)| t.clone()).collect();
        seen.sort_unstable();
        assert_eq!(seen, (0..30).collect::<Vec<_>>());
    }

    #[test]
    fn lle_embeds_both_sets_together() {
        let train = Matrix::from_fn(3, 30, |r, j| ((r + 1) * j) as f64 * 0.1 + (j as f64).sin());
        let apply = Matrix::from_fn(3, 5, |r, j| ((r + 2) * j) as f64 * 0.05);
        let method = MethodConfig::default_for("lle").unwrap();
        let params = DrParams::default().with("p", 6.0);
        let (t, a) = fit_reduce(&method, &params, &train, &[0; 30], &apply).unwrap();
        assert_eq!((t.ncols(), a.ncols()), (30, 5));
        assert_eq!(t.nrows(), a.nrows());
    }
}
