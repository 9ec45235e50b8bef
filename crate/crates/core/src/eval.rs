//! Detection metrics, subject-wise fold assignment and class-ratio downsampling.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionCounts {
    /// Counts with a sample predicted positive when `score >= threshold`.
    pub fn from_scores(scores: &[f64], labels: &[bool], threshold: f64) -> Self {
        let mut c = ConfusionCounts::default();
        for (&s, &l) in scores.iter().zip(labels) {
            match (s >= threshold, l) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, false) => c.tn += 1,
                (false, true) => c.fn_ += 1,
            }
        }
        c
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }
}

/// `2·precision·recall / (precision + recall)`, computed as `2tp / (2tp + fp + fn)`;
/// 0 when there are no true positives.
pub fn f1(c: &ConfusionCounts) -> f64 {
    if c.tp == 0 {
        return 0.0;
    }
    (2 * c.tp) as f64 / (2 * c.tp + c.fp + c.fn_) as f64
}

/// Cohen's kappa from integer marginals; 0 when chance agreement is 1.
pub fn cohens_kappa(c: &ConfusionCounts) -> f64 {
    let n = c.total() as i128;
    if n == 0 {
        return 0.0;
    }
    let (tp, fp, tn, fn_) = (c.tp as i128, c.fp as i128, c.tn as i128, c.fn_ as i128);
    let chance = (tp + fp) * (tp + fn_) + (fn_ + tn) * (fp + tn);
    let denom = n * n - chance;
    if denom == 0 {
        return 0.0;
    }
    (n * (tp + tn) - chance) as f64 / denom as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    /// `(false positive rate, true positive rate)` from `(0,0)` to `(1,1)`.
    pub points: Vec<(f64, f64)>,
    pub auc: f64,
}

fn validate_binary(scores: &[f64], labels: &[bool]) -> Result<(u64, u64)> {
    if scores.len() != labels.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} scores for {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::NonFinite { what: "scores" });
    }
    let pos = labels.iter().filter(|&&l| l).count() as u64;
    let neg = labels.len() as u64 - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::SingleClass);
    }
    Ok((pos, neg))
}

/// Indices sorted by descending score, grouped into runs of equal score.
fn tie_groups(scores: &[f64]) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for i in order {
        match groups.last_mut() {
            Some(g) if scores[g[0]] == scores[i] => g.push(i),
            _ => groups.push(vec![i]),
        }
    }
    groups
}

/// ROC over the unique-threshold sweep. Tied scores move both rates at once,
/// so the trapezoid area equals the Mann–Whitney statistic with half credit for ties.
pub fn roc_and_auc(scores: &[f64], labels: &[bool]) -> Result<RocCurve> {
    let (pos, neg) = validate_binary(scores, labels)?;
    let mut points = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0u64, 0u64);
    // twice the area, in units of 1/(pos·neg)
    let mut doubled: u128 = 0;
    for group in tie_groups(scores) {
        let dp = group.iter().filter(|&&i| labels[i]).count() as u64;
        let dn = group.len() as u64 - dp;
        doubled += dn as u128 * (2 * tp as u128 + dp as u128);
        tp += dp;
        fp += dn;
        points.push((fp as f64 / neg as f64, tp as f64 / pos as f64));
    }
    let auc = doubled as f64 / (2 * pos as u128 * neg as u128) as f64;
    Ok(RocCurve { points, auc })
}

/// Trapezoid area under a polyline of `(x, y)` points.
pub fn polyline_area(points: &[(f64, f64)]) -> f64 {
    points
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) / 2.0)
        .sum()
}

/// Threshold maximizing F1 when predicting positive for `score >= threshold`.
///
/// The returned threshold sits halfway between the chosen score and the next
/// lower distinct score. Among equal F1 values the higher threshold wins.
pub fn best_f1_threshold(scores: &[f64], labels: &[bool]) -> Result<(f64, f64)> {
    validate_binary(scores, labels)?;
    let groups = tie_groups(scores);
    let total_pos = labels.iter().filter(|&&l| l).count() as u64;
    let mut c = ConfusionCounts {
        tp: 0,
        fp: 0,
        tn: labels.len() as u64 - total_pos,
        fn_: total_pos,
    };
    let mut best = (f64::NEG_INFINITY, 0usize);
    for (g, group) in groups.iter().enumerate() {
        for &i in group {
            if labels[i] {
                c.tp += 1;
                c.fn_ -= 1;
            } else {
                c.fp += 1;
                c.tn -= 1;
            }
        }
        let score = f1(&c);
        if score > best.0 {
            best = (score, g);
        }
    }
    let chosen = scores[groups[best.1][0]];
    let threshold = match groups.get(best.1 + 1) {
        Some(next) => {
            let lower = scores[next[0]];
            let mid = chosen / 2.0 + lower / 2.0;
            if mid > lower && mid <= chosen {
                mid
            } else {
                chosen
            }
        }
        None => chosen,
    };
    Ok((threshold, best.0))
}

/// Fold index per sample; every sample of a subject lands in the same fold.
///
/// Distinct subjects are sorted, shuffled with `seed` and dealt round-robin.
pub fn subject_folds<S: AsRef<str>>(subjects: &[S], folds: usize, seed: u64) -> Result<Vec<usize>> {
    if folds == 0 {
        return Err(Error::InvalidParameter("fold count must be >= 1".into()));
    }
    let mut distinct: Vec<&str> = subjects.iter().map(|s| s.as_ref()).collect();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < folds {
        return Err(Error::TooFewSubjects {
            subjects: distinct.len(),
            folds,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    distinct.shuffle(&mut rng);
    let fold_of = |s: &str| distinct.iter().position(|&d| d == s).expect("subject present") % folds;
    Ok(subjects.iter().map(|s| fold_of(s.as_ref())).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Downsample {
    /// Retained sample indices, ascending.
    pub indices: Vec<usize>,
    pub positives: usize,
    pub negatives: usize,
    pub warnings: Vec<String>,
}

/// Keeps positives up to `floor(keep_fraction · n)` and then
/// `floor(neg_per_pos · positives)` uniformly drawn negatives.
pub fn downsample(labels: &[bool], keep_fraction: f64, neg_per_pos: f64, seed: u64) -> Result<Downsample> {
    if !(keep_fraction > 0.0 && keep_fraction <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "keep_fraction must lie in (0, 1], got {keep_fraction}"
        )));
    }
    if !(neg_per_pos >= 0.0) || !neg_per_pos.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "neg_per_pos must be finite and >= 0, got {neg_per_pos}"
        )));
    }
    let mut pos: Vec<usize> = (0..labels.len()).filter(|&i| labels[i]).collect();
    let mut neg: Vec<usize> = (0..labels.len()).filter(|&i| !labels[i]).collect();
    if pos.is_empty() {
        return Err(Error::NoPositives);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut warnings = Vec::new();
    let budget = ((keep_fraction * labels.len() as f64).floor() as usize).max(1);
    if pos.len() > budget {
        pos.shuffle(&mut rng);
        pos.truncate(budget);
    }
    let wanted = (neg_per_pos * pos.len() as f64).floor() as usize;
    if wanted > neg.len() {
        warnings.push(format!(
            "requested {wanted} negatives but only {} exist; keeping all",
            neg.len()
        ));
    } else {
        neg.shuffle(&mut rng);
        neg.truncate(wanted);
    }
    let (positives, negatives) = (pos.len(), neg.len());
    let mut indices = pos;
    indices.extend(neg);
    indices.sort_unstable();
    Ok(Downsample {
        indices,
        positives,
        negatives,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn counts(tp: u64, fp: u64, tn: u64, fn_: u64) -> ConfusionCounts {
        ConfusionCounts { tp, fp, tn, fn_ }
    }

    #[test]
    fn auc_trivial_cases() {
        assert_eq!(roc_and_auc(&[0.9, 0.1], &[true, false]).unwrap().auc, 1.0);
        assert_eq!(roc_and_auc(&[0.3; 6], &[true, false, true, false, false, true]).unwrap().auc, 0.5);
        assert_eq!(roc_and_auc(&[0.3, 0.2], &[true, true]).unwrap_err(), Error::SingleClass);
    }

    #[test]
    fn perfect_roc_points() {
        let roc = roc_and_auc(&[3.0, 2.0, 1.0, 0.0], &[true, true, false, false]).unwrap();
        assert_eq!(roc.points, vec![(0.0, 0.0), (0.0, 0.5), (0.0, 1.0), (0.5, 1.0), (1.0, 1.0)]);
    }

    #[test]
    fn auc_matches_pairwise_count() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let n = 50;
            let scores: Vec<f64> = (0..n).map(|_| (rng.random_range(0..8) as f64) * 0.25).collect();
            let labels: Vec<bool> = (0..n).map(|i| i % 3 == 0 || rng.random_bool(0.3)).collect();
            let mut twice = 0u64;
            let (mut p, mut q) = (0u64, 0u64);
            for i in 0..n {
                if labels[i] {
                    p += 1;
                } else {
                    q += 1;
                }
                for j in 0..n {
                    if labels[i] && !labels[j] {
                        twice += match scores[i].partial_cmp(&scores[j]).unwrap() {
                            std::cmp::Ordering::Greater => 2,
                            std::cmp::Ordering::Equal => 1,
                            std::cmp::Ordering::Less => 0,
                        };
                    }
                }
            }
            let brute = twice as f64 / (2 * p * q) as f64;
            let roc = roc_and_auc(&scores, &labels).unwrap();
            assert!((roc.auc - brute).abs() < 1e-12);
            assert!((polyline_area(&roc.points) - roc.auc).abs() < 1e-12);
        }
    }

    #[test]
    fn f1_hand_values() {
        assert_eq!(f1(&counts(1, 1, 0, 1)), 0.5);
        assert_eq!(f1(&counts(0, 3, 5, 2)), 0.0);
        let v = f1(&counts(8, 2, 0, 4));
        let (p, r) = (0.8, 2.0 / 3.0);
        assert!((v - 2.0 * p * r / (p + r)).abs() < 1e-15);
        assert!((v - 0.72727).abs() < 1e-5);
    }

    #[test]
    fn kappa_hand_values() {
        assert_eq!(cohens_kappa(&counts(40, 20, 30, 10)), 0.4);
        assert_eq!(cohens_kappa(&counts(5, 0, 7, 0)), 1.0);
        // prediction marginals independent of label marginals
        assert_eq!(cohens_kappa(&counts(6, 14, 56, 24)), 0.0);
        assert_eq!(cohens_kappa(&counts(0, 0, 9, 0)), 0.0);
    }

    #[test]
    fn threshold_sweep_finds_best_f1() {
        let scores = [0.9, 0.8, 0.7, 0.6, 0.5, 0.4];
        let labels = [true, false, true, true, false, false];
        let (t, best) = best_f1_threshold(&scores, &labels).unwrap();
        assert!((t - 0.55).abs() < 1e-12);
        assert_eq!(best, f1(&ConfusionCounts::from_scores(&scores, &labels, t)));
        assert!((best - 6.0 / 7.0).abs() < 1e-15);
    }

    #[test]
    fn folds_keep_subjects_together() {
        let subjects: Vec<String> = (0..10).flat_map(|s| vec![format!("s{s}"); 7]).collect();
        let folds = subject_folds(&subjects, 5, 3).unwrap();
        let mut per_fold = vec![std::collections::BTreeSet::new(); 5];
        for (s, &f) in subjects.iter().zip(&folds) {
            per_fold[f].insert(s.clone());
        }
        assert!(per_fold.iter().all(|f| f.len() == 2));
        let loso = subject_folds(&subjects, 10, 3).unwrap();
        let mut seen: Vec<usize> = loso.clone();
        seen.sort_unstable();
        seen.dedup();
        assert_eq!(seen.len(), 10);
        assert!(matches!(
            subject_folds(&subjects, 11, 0),
            Err(Error::TooFewSubjects { subjects: 10, folds: 11 })
        ));
    }

    #[test]
    fn downsample_ratio_and_truncation() {
        let mut labels = vec![true; 100];
        labels.extend(vec![false; 5000]);
        let d = downsample(&labels, 0.2, 10.0, 1).unwrap();
        assert_eq!((d.positives, d.negatives), (100, 1000));
        assert_eq!(d, downsample(&labels, 0.2, 10.0, 1).unwrap());

        let mut labels = vec![true; 10];
        labels.extend(vec![false; 50]);
        let d = downsample(&labels, 1.0, 10.0, 1).unwrap();
        assert_eq!((d.positives, d.negatives), (10, 50));
        assert_eq!(d.warnings.len(), 1);
        assert_eq!(downsample(&[false; 4], 0.5, 1.0, 0).unwrap_err(), Error::NoPositives);
    }
}
