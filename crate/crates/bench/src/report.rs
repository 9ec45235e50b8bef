//! Report types and writers.
//!
//! Everything except `walltime.csv` is a pure function of the config and seed,
//! so two runs with any thread count produce byte-identical files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use unidr::classify::DrParams;
use unidr::eval::ConfusionCounts;

use crate::error::{BenchError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub n: usize,
    pub d: usize,
    pub subjects: usize,
}

/// Test-set results for one (label, method) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub label: String,
    pub method: String,
    pub auc: f64,
    pub f1: f64,
    pub kappa: f64,
    /// Decision threshold picked on out-of-fold training scores.
    pub threshold: f64,
    pub cost: f64,
    pub params: DrParams,
    /// Mean validation F1 of the selected setting.
    pub cv_f1: f64,
    /// Embedding dimension.
    pub dim: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub test_positives: usize,
    pub counts: ConfusionCounts,
    pub roc: Vec<(f64, f64)>,
    #[serde(skip)]
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub name: String,
    pub seed: u64,
    pub dataset: DatasetSummary,
    pub cells: Vec<CellReport>,
    pub warnings: Vec<String>,
}

impl EvalReport {
    pub fn cell(&self, label: &str, method: &str) -> Option<&CellReport> {
        self.cells.iter().find(|c| c.label == label && c.method == method)
    }

    /// Long-format metrics table: `label,method,metric_kind,value`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("label,method,metric_kind,value\n");
        for c in &self.cells {
            let mut row = |kind: &str, value: String| {
                let _ = writeln!(out, "{},{},{},{}", c.label, c.method, kind, value);
            };
            row("auc", c.auc.to_string());
            row("f1", c.f1.to_string());
            row("kappa", c.kappa.to_string());
            row("threshold", c.threshold.to_string());
            row("cost", c.cost.to_string());
            row("k", c.dim.to_string());
            row("cv_f1", c.cv_f1.to_string());
            row("n_train", c.n_train.to_string());
            row("n_test", c.n_test.to_string());
            for (key, value) in &c.params.0 {
                row(&format!("param:{key}"), value.to_string());
            }
        }
        out
    }

    /// Human-readable AUC and F1 table, one row per method and a column pair per label.
    pub fn to_table(&self) -> String {
        let mut labels: Vec<&str> = Vec::new();
        let mut methods: Vec<&str> = Vec::new();
        for c in &self.cells {
            if !labels.contains(&c.label.as_str()) {
                labels.push(&c.label);
            }
            if !methods.contains(&c.method.as_str()) {
                methods.push(&c.method);
            }
        }
        let mut out = format!(
            "{} (seed {}, n={}, d={}, {} subjects)\n\n",
            self.name, self.seed, self.dataset.n, self.dataset.d, self.dataset.subjects
        );
        let _ = write!(out, "{:<8}", "method");
        for l in &labels {
            let _ = write!(out, " | {:^15}", l);
        }
        out.push('\n');
        let _ = write!(out, "{:<8}", "");
        for _ in &labels {
            let _ = write!(out, " | {:>7} {:>7}", "AUC", "F1");
        }
        out.push('\n');
        for m in &methods {
            let _ = write!(out, "{m:<8}");
            for l in &labels {
                match self.cell(l, m) {
                    Some(c) => {
                        let _ = write!(out, " | {:>7.4} {:>7.4}", c.auc, c.f1);
                    }
                    None => {
                        let _ = write!(out, " | {:>7} {:>7}", "-", "-");
                    }
                }
            }
            out.push('\n');
        }
        for w in &self.warnings {
            let _ = writeln!(out, "warning: {w}");
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| BenchError::Report(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| BenchError::Report(e.to_string()))
    }

    pub fn walltime_csv(&self) -> String {
        let mut out = String::from("label,method,seconds\n");
        for c in &self.cells {
            let _ = writeln!(out, "{},{},{:.3}", c.label, c.method, c.wall_seconds);
        }
        out
    }

    /// Writes report.csv, report.txt, report.json, walltime.csv and one ROC
    /// file per cell under `roc/`. Returns the written paths.
    pub fn write_all(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        let mut written = vec![
            write_atomic(&dir.join("report.csv"), &self.to_csv())?,
            write_atomic(&dir.join("report.txt"), &self.to_table())?,
            write_atomic(&dir.join("report.json"), &self.to_json()?)?,
            write_atomic(&dir.join("walltime.csv"), &self.walltime_csv())?,
        ];
        for c in &self.cells {
            let path = dir.join("roc").join(format!("{}_{}.csv", c.label, c.method));
            written.push(write_atomic(&path, &roc_csv(&c.roc))?);
        }
        Ok(written)
    }
}

pub fn roc_csv(points: &[(f64, f64)]) -> String {
    let mut out = String::from("fpr,tpr\n");
    for (x, y) in points {
        let _ = writeln!(out, "{x},{y}");
    }
    out
}

/// Writes the ROC curve of one cell to `path`.
pub fn emit_roc(report: &EvalReport, label: &str, method: &str, path: &Path) -> Result<()> {
    let cell = report.cell(label, method).ok_or_else(|| BenchError::MissingCell {
        label: label.to_string(),
        method: method.to_string(),
    })?;
    write_atomic(path, &roc_csv(&cell.roc))?;
    Ok(())
}

/// Writes through a sibling temp file and a rename, so readers never see a partial file.
pub fn write_atomic(path: &Path, contents: &str) -> Result<PathBuf> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| BenchError::io(dir, e))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, contents).map_err(|e| BenchError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| BenchError::io(path, e))?;
    Ok(path.to_path_buf())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> EvalReport {
        let cell = |method: &str, auc: f64| CellReport {
            label: "au_1".into(),
            method: method.into(),
            auc,
            f1: 0.5,
            kappa: 0.25,
            threshold: -0.125,
            cost: 1.0,
            params: DrParams::default().with("p", 8.0),
            cv_f1: 0.4,
            dim: 3,
            n_train: 60,
            n_test: 40,
            test_positives: 4,
            counts: ConfusionCounts {
                tp: 2,
                fp: 2,
                tn: 34,
                fn_: 2,
            },
            roc: vec![(0.0, 0.0), (0.5, 1.0), (1.0, 1.0)],
            wall_seconds: 1.5,
        };
        EvalReport {
            name: "t".into(),
            seed: 1,
            dataset: DatasetSummary { n: 100, d: 5, subjects: 10 },
            cells: vec![cell("none", 0.75), cell("lpp", 0.8)],
            warnings: vec![],
        }
    }

    #[test]
    fn csv_rows_cover_every_metric() {
        let csv = sample().to_csv();
        assert!(csv.starts_with("label,method,metric_kind,value\n"));
        assert!(csv.contains("au_1,lpp,auc,0.8\n"));
        assert!(csv.contains("au_1,none,param:p,8\n"));
        assert_eq!(csv.lines().count(), 1 + 2 * 10);
    }

    #[test]
    fn json_round_trip_drops_wall_time() {
        let r = sample();
        let back = EvalReport::from_json(&r.to_json().unwrap()).unwrap();
        assert_eq!(back.cells[0].wall_seconds, 0.0);
        assert_eq!(back.cells[1].auc, 0.8);
        assert_eq!(back.to_csv(), r.to_csv());
    }

    #[test]
    fn roc_emission() {
        let dir = tempfile::tempdir().unwrap();
        let r = sample();
        let path = dir.path().join("curve.csv");
        emit_roc(&r, "au_1", "lpp", &path).unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "fpr,tpr\n0,0\n0.5,1\n1,1\n");
        let err = emit_roc(&r, "au_2", "lpp", &path).unwrap_err();
        assert!(matches!(err, BenchError::MissingCell { .. }));
    }

    #[test]
    fn table_lists_methods_in_order() {
        let t = sample().to_table();
        let none = t.find("none").unwrap();
        let lpp = t.find("lpp ").unwrap();
        assert!(none < lpp);
        assert!(t.contains("0.7500"));
    }
}
