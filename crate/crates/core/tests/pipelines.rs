use unidr::classify::{decision_scores, train_svm, Standardizer};
use unidr::datasets::{class_indices, gen_au_like, gen_clusters, gen_swiss_roll, AuLikeParams, FeatureMatrix};
use unidr::dr::{fit_lda, fit_lle, transform, EnergyPolicy, LdaRoute};
use unidr::eval::roc_and_auc;
use unidr::Matrix;

fn signed(labels: &[bool]) -> Vec<f64> {
    labels.iter().map(|&l| if l { 1.0 } else { -1.0 }).collect()
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    for (pos, &i) in idx.iter().enumerate() {
        r[i] = pos as f64;
    }
    r
}

fn spearman(a: &[f64], b: &[f64]) -> f64 {
    let (ra, rb) = (ranks(a), ranks(b));
    let n = a.len() as f64;
    let m = (n - 1.0) / 2.0;
    let cov: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - m) * (y - m)).sum();
    let var: f64 = ra.iter().map(|x| (x - m).powi(2)).sum();
    cov / var
}

fn split_by_subject(fm: &FeatureMatrix, test_subjects: usize) -> (FeatureMatrix, FeatureMatrix) {
    let mut ids = fm.subjects.clone();
    ids.sort();
    ids.dedup();
    let held: Vec<&String> = ids.iter().rev().take(test_subjects).collect();
    let (test, train): (Vec<usize>, Vec<usize>) = (0..fm.n()).partition(|&j| held.contains(&&fm.subjects[j]));
    (fm.select(&train), fm.select(&test))
}

#[test]
fn separated_clusters_are_linearly_separable() {
    let fm = gen_clusters(5, 400, 2, 10.0, 3).unwrap();
    let y = signed(&fm.labels[0].values);
    let model = train_svm(&fm.features, &y, 1.0, 0).unwrap();
    let scores = decision_scores(&model, &fm.features).unwrap();
    let correct = scores.iter().zip(&y).filter(|(s, y)| *s * *y > 0.0).count();
    assert!(correct as f64 / 400.0 > 0.999);
}

#[test]
fn lle_unrolls_swiss_roll() {
    let fm = gen_swiss_roll(1600, 0.0, 11).unwrap();
    let model = fit_lle(&fm.features, 12, 1e-2, EnergyPolicy::Fixed { k: 2 }).unwrap();
    let t: Vec<f64> = fm.ground_truth.as_ref().unwrap().row(0).iter().copied().collect();
    let best = (0..2)
        .map(|c| {
            let y: Vec<f64> = model.train_embedding.row(c).iter().copied().collect();
            spearman(&y, &t).abs()
        })
        .fold(0.0, f64::max);
    assert!(best > 0.9, "rank correlation {best}");
}

#[test]
fn strong_noiseless_signal_is_detected() {
    let params = AuLikeParams {
        n_subjects: 4,
        frames_per_subject: 200,
        d: 16,
        signal_dims: 4,
        noise: 0.0,
        signal: 10.0,
        subject_scale: 0.5,
        ..AuLikeParams::default()
    };
    let fm = gen_au_like(&params, 2).unwrap();
    let y = signed(&fm.labels[0].values);
    let model = train_svm(&fm.features, &y, 10.0, 0).unwrap();
    let scores = decision_scores(&model, &fm.features).unwrap();
    let auc = roc_and_auc(&scores, &fm.labels[0].values).unwrap().auc;
    assert!(auc > 0.99, "{auc}");
}

fn held_out_auc(train: &Matrix, y: &[bool], test: &Matrix, truth: &[bool]) -> f64 {
    let z = Standardizer::fit(train);
    let model = train_svm(&z.apply(train).unwrap(), &signed(y), 1.0, 0).unwrap();
    let scores = decision_scores(&model, &z.apply(test).unwrap()).unwrap();
    roc_and_auc(&scores, truth).unwrap().auc
}

#[test]
fn lda_beats_raw_features_on_new_subjects() {
    let params = AuLikeParams {
        n_subjects: 10,
        frames_per_subject: 200,
        d: 60,
        pos_rate: 0.1,
        signal_dims: 6,
        noise: 1.0,
        signal: 4.0,
        subject_scale: 2.0,
        ..AuLikeParams::default()
    };
    let mut lda_wins = 0;
    for seed in 0..3 {
        let fm = gen_au_like(&params, seed).unwrap();
        let (train, test) = split_by_subject(&fm, 4);
        let (ytr, yte) = (&train.labels[0].values, &test.labels[0].values);
        let raw = held_out_auc(&train.features, ytr, &test.features, yte);
        let classes = class_indices(&train);
        let lda = fit_lda(&train.features, &classes, LdaRoute::Gep).unwrap();
        let reduced = held_out_auc(
            &lda.train_embedding,
            ytr,
            &transform(&lda, &test.features).unwrap(),
            yte,
        );
        if reduced > raw {
            lda_wins += 1;
        }
    }
    assert!(lda_wins >= 2, "lda won {lda_wins} of 3");
}
