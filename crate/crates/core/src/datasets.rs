//! Feature-matrix CSV I/O and seeded synthetic generators.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Binary marks for one target, one entry per sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelColumn {
    pub name: String,
    pub values: Vec<bool>,
}

impl LabelColumn {
    pub fn positives(&self) -> usize {
        self.values.iter().filter(|&&v| v).count()
    }
}

/// Samples as columns of a `d × n` matrix with per-sample labels and subject ids.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub features: Matrix,
    pub labels: Vec<LabelColumn>,
    pub subjects: Vec<String>,
    /// Free-form notes about where the descriptors came from.
    pub meta: BTreeMap<String, String>,
    /// Intrinsic coordinates for synthetic manifolds, `m × n`.
    pub ground_truth: Option<Matrix>,
}

impl FeatureMatrix {
    pub fn new(features: Matrix, labels: Vec<LabelColumn>, subjects: Vec<String>) -> Result<Self> {
        let fm = FeatureMatrix {
            features,
            labels,
            subjects,
            meta: BTreeMap::new(),
            ground_truth: None,
        };
        fm.validate()?;
        Ok(fm)
    }

    pub fn n(&self) -> usize {
        self.features.ncols()
    }

    pub fn d(&self) -> usize {
        self.features.nrows()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n();
        if self.subjects.len() != n {
            return Err(Error::DimensionMismatch(format!("{} subjects for {n} samples", self.subjects.len())));
        }
        if let Some(l) = self.labels.iter().find(|l| l.values.len() != n) {
            return Err(Error::DimensionMismatch(format!(
                "label {} has {} entries for {n} samples",
                l.name,
                l.values.len()
            )));
        }
        if self.subjects.iter().any(|s| s.is_empty()) {
            return Err(Error::SchemaMismatch("empty subject id".into()));
        }
        Ok(())
    }

    pub fn label(&self, name: &str) -> Option<&LabelColumn> {
        self.labels.iter().find(|l| l.name == name)
    }

    /// Column subset in the given order.
    pub fn select(&self, idx: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            features: Matrix::from_fn(self.d(), idx.len(), |r, j| self.features[(r, idx[j])]),
            labels: self
                .labels
                .iter()
                .map(|l| LabelColumn {
                    name: l.name.clone(),
                    values: idx.iter().map(|&i| l.values[i]).collect(),
                })
                .collect(),
            subjects: idx.iter().map(|&i| self.subjects[i].clone()).collect(),
            meta: self.meta.clone(),
            ground_truth: self
                .ground_truth
                .as_ref()
                .map(|g| Matrix::from_fn(g.nrows(), idx.len(), |r, j| g[(r, idx[j])])),
        }
    }
}

/// Which CSV columns hold what. `None` selects by the standard prefixes
/// (`f<i>` for features, `au_` for labels).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvSchema {
    pub features: Option<Vec<String>>,
    pub labels: Option<Vec<String>>,
    pub subject: String,
}

impl Default for CsvSchema {
    fn default() -> Self {
        CsvSchema {
            features: None,
            labels: None,
            subject: "subject".into(),
        }
    }
}

fn is_feature_name(h: &str) -> bool {
    h.len() > 1 && h.starts_with('f') && h[1..].bytes().all(|b| b.is_ascii_digit())
}

fn locate(header: &csv::StringRecord, names: &[String]) -> Result<Vec<usize>> {
    names
        .iter()
        .map(|name| {
            header
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::SchemaMismatch(format!("missing column {name}")))
        })
        .collect()
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io.to_string()),
        kind => Error::Parse {
            line,
            message: format!("{kind:?}"),
        },
    }
}

/// Reads one sample per row. Row order becomes column order.
pub fn load_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<FeatureMatrix> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path.as_ref())
        .map_err(csv_error)?;
    let header = reader.headers().map_err(csv_error)?.clone();
    let feature_names: Vec<String> = match &schema.features {
        Some(f) => f.clone(),
        None => header.iter().filter(|h| is_feature_name(h)).map(String::from).collect(),
    };
    let label_names: Vec<String> = match &schema.labels {
        Some(l) => l.clone(),
        None => header.iter().filter(|h| h.starts_with("au_")).map(String::from).collect(),
    };
    if feature_names.is_empty() {
        return Err(Error::SchemaMismatch("no feature columns".into()));
    }
    let fcols = locate(&header, &feature_names)?;
    let lcols = locate(&header, &label_names)?;
    let scol = locate(&header, std::slice::from_ref(&schema.subject))?[0];

    let d = fcols.len();
    let mut data = Vec::new();
    let mut labels: Vec<Vec<bool>> = vec![Vec::new(); lcols.len()];
    let mut subjects = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        let field = |c: usize| record.get(c).unwrap_or("");
        for &c in &fcols {
            let v: f64 = field(c).trim().parse().map_err(|_| Error::Parse {
                line,
                message: format!("bad number {:?} in column {}", field(c), &header[c]),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    line,
                    message: format!("non-finite value in column {}", &header[c]),
                });
            }
            data.push(v);
        }
        for (slot, &c) in labels.iter_mut().zip(&lcols) {
            slot.push(match field(c).trim() {
                "1" => true,
                "0" => false,
                other => {
                    return Err(Error::Parse {
                        line,
                        message: format!("label {} must be 0 or 1, got {other:?}", &header[c]),
                    })
                }
            });
        }
        let subject = field(scol).to_string();
        if subject.is_empty() {
            return Err(Error::Parse {
                line,
                message: "empty subject".into(),
            });
        }
        subjects.push(subject);
    }
    let n = subjects.len();
    let features = Matrix::from_fn(d, n, |r, j| data[j * d + r]);
    let labels = label_names
        .into_iter()
        .zip(labels)
        .map(|(name, values)| LabelColumn { name, values })
        .collect();
    FeatureMatrix::new(features, labels, subjects)
}

/// Writes the standard layout: `f0..f{d-1}`, label columns, then `subject`.
/// Numbers use the shortest representation that parses back to the same bits.
pub fn save_csv(data: &FeatureMatrix, path: impl AsRef<Path>) -> Result<()> {
    data.validate()?;
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path.as_ref())
        .map_err(csv_error)?;
    let mut header: Vec<String> = (0..data.d()).map(|i| format!("f{i}")).collect();
    header.extend(data.labels.iter().map(|l| l.name.clone()));
    header.push("subject".into());
    w.write_record(&header).map_err(csv_error)?;
    let mut row = Vec::with_capacity(header.len());
    for j in 0..data.n() {
        row.clear();
        row.extend((0..data.d()).map(|r| format!("{:?}", data.features[(r, j)])));
        row.extend(data.labels.iter().map(|l| if l.values[j] { "1" } else { "0" }.to_string()));
        row.push(data.subjects[j].clone());
        w.write_record(&row).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn subject_id(i: usize) -> String {
    format!("s{i:03}")
}

/// Gaussian blobs with unit covariance. Class `c` is centred at
/// `separation/√2 · e_c`, so any two class means are `separation` apart.
/// Class 0 is the negative class; classes `1..` each get an `au_<c>` label.
/// Samples cycle through classes and through ten subject ids.
pub fn gen_clusters(d: usize, n: usize, classes: usize, separation: f64, seed: u64) -> Result<FeatureMatrix> {
    if !(separation >= 0.0) {
        return Err(Error::InvalidParameter(format!("separation must be nonnegative, got {separation}")));
    }
    if classes < 2 || classes > d {
        return Err(Error::InvalidParameter(format!("need 2 <= classes <= d, got {classes} classes for d = {d}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let class: Vec<usize> = (0..n).map(|i| i % classes).collect();
    let offset = separation / 2f64.sqrt();
    let features = Matrix::from_fn(d, n, |r, j| {
        gaussian(&mut rng) + if r == class[j] { offset } else { 0.0 }
    });
    let labels = (1..classes)
        .map(|c| LabelColumn {
            name: format!("au_{c}"),
            values: class.iter().map(|&k| k == c).collect(),
        })
        .collect();
    let subjects = (0..n).map(|i| subject_id(i % 10)).collect();
    let mut fm = FeatureMatrix::new(features, labels, subjects)?;
    fm.meta.insert("generator".into(), "clusters".into());
    Ok(fm)
}

/// Class index per sample for data made by [`gen_clusters`]: 0 when no label is set.
pub fn class_indices(data: &FeatureMatrix) -> Vec<usize> {
    (0..data.n())
        .map(|j| data.labels.iter().position(|l| l.values[j]).map_or(0, |c| c + 1))
        .collect()
}

/// Points `(t cos t, h, t sin t)` with `t ∈ [1.5π, 4.5π]`, `h ∈ [0, 21]`,
/// plus isotropic Gaussian noise. `(t, h)` is kept as ground truth.
pub fn gen_swiss_roll(n: usize, noise: f64, seed: u64) -> Result<FeatureMatrix> {
    if n < 10 {
        return Err(Error::TooFewSamples(format!("swiss roll needs at least 10 points, got {n}")));
    }
    if !(noise >= 0.0) {
        return Err(Error::InvalidParameter(format!("noise must be nonnegative, got {noise}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut truth = Matrix::zeros(2, n);
    let mut features = Matrix::zeros(3, n);
    for j in 0..n {
        let t = 1.5 * PI * (1.0 + 2.0 * rng.random::<f64>());
        let h = 21.0 * rng.random::<f64>();
        truth[(0, j)] = t;
        truth[(1, j)] = h;
        let clean = [t * t.cos(), h, t * t.sin()];
        for (r, c) in clean.iter().enumerate() {
            features[(r, j)] = if noise > 0.0 { c + noise * gaussian(&mut rng) } else { *c };
        }
    }
    let subjects = (0..n).map(|i| subject_id(i % 10)).collect();
    let mut fm = FeatureMatrix::new(features, Vec::new(), subjects)?;
    fm.ground_truth = Some(truth);
    fm.meta.insert("generator".into(), "swiss_roll".into());
    Ok(fm)
}

/// Parameters for [`gen_au_like`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AuLikeParams {
    pub n_subjects: usize,
    pub frames_per_subject: usize,
    pub d: usize,
    /// Fraction of positive frames per subject.
    pub pos_rate: f64,
    /// Leading dimensions that carry the class signal.
    pub signal_dims: usize,
    /// Standard deviation of the per-frame noise.
    pub noise: f64,
    /// Length of the class-mean shift on the signal dimensions.
    pub signal: f64,
    /// Standard deviation of the per-subject offset on every dimension.
    pub subject_scale: f64,
    /// Number of shared latent factors mixed into all dimensions.
    pub latent_dims: usize,
    /// Standard deviation of each latent factor.
    pub latent_scale: f64,
    /// Typical length of a run of positive frames.
    pub mean_run: usize,
}

impl Default for AuLikeParams {
    fn default() -> Self {
        AuLikeParams {
            n_subjects: 10,
            frames_per_subject: 400,
            d: 128,
            pos_rate: 0.05,
            signal_dims: 8,
            noise: 1.0,
            signal: 3.0,
            subject_scale: 1.0,
            latent_dims: 0,
            latent_scale: 0.0,
            mean_run: 10,
        }
    }
}

impl AuLikeParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(self.pos_rate > 0.0 && self.pos_rate < 0.5) {
            return bad(format!("pos_rate must lie in (0, 0.5), got {}", self.pos_rate));
        }
        if self.signal_dims == 0 || self.signal_dims > self.d {
            return bad(format!("signal_dims must be in 1..={}, got {}", self.d, self.signal_dims));
        }
        if self.n_subjects == 0 || self.frames_per_subject == 0 {
            return bad("need at least one subject and one frame".into());
        }
        if self.mean_run == 0 {
            return bad("mean_run must be positive".into());
        }
        for (name, v) in [
            ("noise", self.noise),
            ("signal", self.signal),
            ("subject_scale", self.subject_scale),
            ("latent_scale", self.latent_scale),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return bad(format!("{name} must be finite and nonnegative, got {v}"));
            }
        }
        Ok(())
    }
}

/// Random composition of `total` into `parts` pieces, each at least `min`.
fn composition(rng: &mut ChaCha8Rng, total: usize, parts: usize, min: usize) -> Vec<usize> {
    let free = total - parts * min;
    let mut cuts: Vec<usize> = (0..parts.saturating_sub(1)).map(|_| rng.random_range(0..=free)).collect();
    cuts.sort_unstable();
    let mut out = Vec::with_capacity(parts);
    let mut prev = 0;
    for c in cuts {
        out.push(min + c - prev);
        prev = c;
    }
    out.push(min + free - prev);
    out
}

/// Per-subject positive mask with exactly `round(pos_rate · frames)` positives
/// laid out in contiguous runs separated by at least one negative frame.
fn positive_runs(rng: &mut ChaCha8Rng, frames: usize, pos_rate: f64, mean_run: usize) -> Vec<bool> {
    let positives = ((pos_rate * frames as f64).round() as usize).clamp(1, frames / 2);
    let negatives = frames - positives;
    let runs = (positives as f64 / mean_run as f64).round().max(1.0) as usize;
    let runs = runs.min(positives).min(negatives.saturating_sub(1).max(1));
    let run_len = composition(rng, positives, runs, 1);
    // runs + 1 gaps, the inner ones nonempty
    let mut gaps = composition(rng, negatives - (runs - 1), runs + 1, 0);
    for g in gaps.iter_mut().take(runs).skip(1) {
        *g += 1;
    }
    let mut mask = Vec::with_capacity(frames);
    for r in 0..runs {
        mask.extend(std::iter::repeat_n(false, gaps[r]));
        mask.extend(std::iter::repeat_n(true, run_len[r]));
    }
    mask.extend(std::iter::repeat_n(false, gaps[runs]));
    mask
}

/// Subject-tagged, class-imbalanced frames resembling appearance descriptors.
///
/// Each frame is `offset_subject + M z + signal · v · [positive] + noise · ε`
/// where `v` is a fixed unit vector supported on the first `signal_dims`
/// dimensions, `z` holds `latent_dims` shared factors and `ε` is white.
/// Positive frames come in contiguous runs. The single label is `au_1`.
pub fn gen_au_like(params: &AuLikeParams, seed: u64) -> Result<FeatureMatrix> {
    params.validate()?;
    let p = params;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = p.d;
    let mut direction: Vec<f64> = (0..p.signal_dims).map(|_| gaussian(&mut rng)).collect();
    let norm = direction.iter().map(|v| v * v).sum::<f64>().sqrt();
    direction.iter_mut().for_each(|v| *v /= norm);
    let mixing = Matrix::from_fn(d, p.latent_dims, |_, _| gaussian(&mut rng) / (d as f64).sqrt());

    let n = p.n_subjects * p.frames_per_subject;
    let mut features = Matrix::zeros(d, n);
    let mut labels = Vec::with_capacity(n);
    let mut subjects = Vec::with_capacity(n);
    let mut latent = vec![0.0; p.latent_dims];
    for s in 0..p.n_subjects {
        let offset: Vec<f64> = (0..d).map(|_| p.subject_scale * gaussian(&mut rng)).collect();
        let mask = positive_runs(&mut rng, p.frames_per_subject, p.pos_rate, p.mean_run);
        for (f, &positive) in mask.iter().enumerate() {
            let j = s * p.frames_per_subject + f;
            for z in latent.iter_mut() {
                *z = p.latent_scale * gaussian(&mut rng);
            }
            for r in 0..d {
                let mut v = offset[r] + p.noise * gaussian(&mut rng);
                for (l, z) in latent.iter().enumerate() {
                    v += mixing[(r, l)] * z;
                }
                if positive && r < p.signal_dims {
                    v += p.signal * direction[r];
                }
                features[(r, j)] = v;
            }
            labels.push(positive);
            subjects.push(subject_id(s));
        }
    }
    let mut fm = FeatureMatrix::new(
        features,
        vec![LabelColumn {
            name: "au_1".into(),
            values: labels,
        }],
        subjects,
    )?;
    fm.meta.insert("generator".into(), "au_like".into());
    fm.meta.insert("patch".into(), "12x12".into());
    fm.meta.insert("filter_bank".into(), "8 orientations x 5 scales".into());
    Ok(fm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn load_small_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.csv");
        std::fs::write(&path, "f0,f1,f2,au_12,subject\n1,2,3,0,alice\n4.5,-6,7e-3,1,bob\n").unwrap();
        let fm = load_csv(&path, &CsvSchema::default()).unwrap();
        assert_eq!((fm.d(), fm.n()), (3, 2));
        assert_eq!(fm.features[(2, 1)], 7e-3);
        assert_eq!(fm.labels[0].name, "au_12");
        assert_eq!(fm.labels[0].values, vec![false, true]);
        assert_eq!(fm.subjects, vec!["alice", "bob"]);
    }

    #[test]
    fn missing_subject_column() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.csv");
        std::fs::write(&path, "f0,f1,au_1\n1,2,0\n").unwrap();
        assert!(matches!(load_csv(&path, &CsvSchema::default()), Err(Error::SchemaMismatch(_))));
    }

    #[test]
    fn parse_errors_carry_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.csv");
        let mut f = std::fs::File::create(&path).unwrap();
        writeln!(f, "f0,au_1,subject\n1,0,a\n2,0,b\nNaN,1,c").unwrap();
        match load_csv(&path, &CsvSchema::default()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("{other:?}"),
        }
        std::fs::write(&path, "f0,au_1,subject\n1,0,a\nx,0,b\n").unwrap();
        assert!(matches!(load_csv(&path, &CsvSchema::default()), Err(Error::Parse { line: 3, .. })));
        std::fs::write(&path, "f0,au_1,subject\n1,2,a\n").unwrap();
        assert!(matches!(load_csv(&path, &CsvSchema::default()), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn explicit_schema() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.csv");
        std::fs::write(&path, "who,x,y,smile\np1,1,2,1\np2,3,4,0\n").unwrap();
        let schema = CsvSchema {
            features: Some(vec!["y".into(), "x".into()]),
            labels: Some(vec!["smile".into()]),
            subject: "who".into(),
        };
        let fm = load_csv(&path, &schema).unwrap();
        assert_eq!(fm.features[(0, 1)], 4.0);
        assert_eq!(fm.features[(1, 1)], 3.0);
        assert_eq!(fm.labels[0].values, vec![true, false]);
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rt.csv");
        let params = AuLikeParams {
            n_subjects: 3,
            frames_per_subject: 50,
            d: 6,
            signal_dims: 2,
            ..AuLikeParams::default()
        };
        let mut fm = gen_au_like(&params, 3).unwrap();
        fm.features[(0, 0)] = 1e-310;
        fm.features[(1, 0)] = -0.1 - 0.2;
        save_csv(&fm, &path).unwrap();
        let back = load_csv(&path, &CsvSchema::default()).unwrap();
        assert_eq!(back.labels, fm.labels);
        assert_eq!(back.subjects, fm.subjects);
        for (a, b) in back.features.col_iter().zip(fm.features.col_iter()) {
            for r in 0..a.nrows() {
                assert_eq!(a[r].to_bits(), b[r].to_bits());
            }
        }
    }

    #[test]
    fn clusters_null_separation() {
        let fm = gen_clusters(3, 3000, 2, 0.0, 1).unwrap();
        let cls = class_indices(&fm);
        let per_class = 1500.0f64;
        for r in 0..3 {
            let mean = |c: usize| {
                (0..fm.n()).filter(|&j| cls[j] == c).map(|j| fm.features[(r, j)]).sum::<f64>() / per_class
            };
            // difference of two means has standard deviation √2/√1500
            assert!((mean(0) - mean(1)).abs() < 3.0 * (2.0f64 / per_class).sqrt());
        }
        assert_eq!(gen_clusters(3, 50, 2, 1.0, 4).unwrap(), gen_clusters(3, 50, 2, 1.0, 4).unwrap());
    }

    #[test]
    fn clusters_means_are_apart() {
        let fm = gen_clusters(4, 4000, 3, 6.0, 2).unwrap();
        let cls = class_indices(&fm);
        let mean = |c: usize| -> Vec<f64> {
            let idx: Vec<usize> = (0..fm.n()).filter(|&j| cls[j] == c).collect();
            (0..4).map(|r| idx.iter().map(|&j| fm.features[(r, j)]).sum::<f64>() / idx.len() as f64).collect()
        };
        let (m0, m2) = (mean(0), mean(2));
        let dist = m0.iter().zip(&m2).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        assert!((dist - 6.0).abs() < 0.2, "{dist}");
    }

    #[test]
    fn swiss_roll_on_surface() {
        let fm = gen_swiss_roll(200, 0.0, 5).unwrap();
        let g = fm.ground_truth.as_ref().unwrap();
        for j in 0..fm.n() {
            let (t, h) = (g[(0, j)], g[(1, j)]);
            assert_eq!(fm.features[(0, j)], t * t.cos());
            assert_eq!(fm.features[(1, j)], h);
            assert_eq!(fm.features[(2, j)], t * t.sin());
        }
        assert_eq!(gen_swiss_roll(50, 0.1, 1).unwrap(), gen_swiss_roll(50, 0.1, 1).unwrap());
        assert!(gen_swiss_roll(9, 0.0, 1).is_err());
    }

    #[test]
    fn au_like_positive_count_and_runs() {
        let params = AuLikeParams::default();
        let fm = gen_au_like(&params, 8).unwrap();
        let positives = fm.labels[0].positives() as f64;
        let sd = (4000.0f64 * 0.05 * 0.95).sqrt();
        assert!((positives - 200.0).abs() <= 3.0 * sd, "{positives}");
        // runs: far fewer rising edges than positives
        let v = &fm.labels[0].values;
        let edges = (1..v.len()).filter(|&i| v[i] && !v[i - 1]).count();
        assert!(edges * 4 < positives as usize, "{edges}");
        assert_eq!(fm, gen_au_like(&params, 8).unwrap());
        assert_ne!(fm.features, gen_au_like(&params, 9).unwrap().features);
    }

    #[test]
    fn positive_runs_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for frames in [2usize, 3, 10, 57, 400] {
            for rate in [0.01, 0.2, 0.49] {
                let m = positive_runs(&mut rng, frames, rate, 7);
                assert_eq!(m.len(), frames);
                let expect = ((rate * frames as f64).round() as usize).clamp(1, frames / 2);
                assert_eq!(m.iter().filter(|&&b| b).count(), expect);
            }
        }
    }

    #[test]
    fn au_like_rejects_bad_params() {
        let bad_rate = AuLikeParams {
            pos_rate: 0.5,
            ..AuLikeParams::default()
        };
        assert!(gen_au_like(&bad_rate, 0).is_err());
        let bad_dims = AuLikeParams {
            signal_dims: 200,
            ..AuLikeParams::default()
        };
        assert!(gen_au_like(&bad_dims, 0).is_err());
    }
}
