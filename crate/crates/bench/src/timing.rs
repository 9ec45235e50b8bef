//! Fit-time measurements and empirical scaling exponents.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use unidr::classify::DrParams;
use unidr::datasets::{gen_au_like, AuLikeParams};
use unidr::dr::Method;
use unidr::seed::derive_seed;
use unidr::Matrix;

use crate::config::{ExperimentConfig, MethodConfig};
use crate::error::{BenchError, Result};
use crate::experiment::fit_model;
use crate::report::write_atomic;

const STREAM_TIMING: u64 = 7;

/// Asymptotic fit cost and memory, with n samples, d features and p neighbors.
pub fn complexity(method: Method) -> (&'static str, &'static str) {
    match method {
        Method::Pca => ("O(d^3)", "O(d^2)"),
        Method::Kpca => ("O(n^3)", "O(n^2)"),
        Method::Lle => ("O(pn^2)", "O(pn^2)"),
        Method::Lpp => ("O(pn^2)", "O(pn^2)"),
        Method::Lda => ("O(dnt+t^3), t=min(d,n)", "O(d^2)"),
        Method::Kda => ("O(n^3)", "O(n^2)"),
        Method::Lsda => ("O(pn^2)", "O(pn^2)"),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimingRow {
    pub method: Method,
    pub n: usize,
    pub d: usize,
    /// Median over repeats.
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimingReport {
    pub table: Vec<TimingRow>,
    pub scaling: Vec<TimingRow>,
    /// Least-squares slope of log(seconds) against log(n), per scaling method.
    pub slopes: Vec<(Method, f64)>,
}

/// Slope of the least-squares line through `(ln x, ln y)`.
pub fn log_log_slope(points: &[(f64, f64)]) -> f64 {
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let m = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / m;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        (v[m - 1] + v[m]) / 2.0
    }
}

fn timing_data(n_pos: usize, n: usize, d: usize, seed: u64) -> Result<(Matrix, Vec<usize>)> {
    let params = AuLikeParams {
        n_subjects: 1,
        frames_per_subject: n,
        d,
        pos_rate: n_pos as f64 / n as f64,
        ..AuLikeParams::default()
    };
    let data = gen_au_like(&params, seed)?;
    let classes = data.labels[0].values.iter().map(|&b| b as usize).collect();
    Ok((data.features, classes))
}

fn time_fit(method: Method, x: &Matrix, classes: &[usize], repeats: usize) -> Result<f64> {
    let cfg = MethodConfig::default_for(method.name()).expect("every method has defaults");
    let params = DrParams::default();
    let mut samples = Vec::with_capacity(repeats);
    for _ in 0..repeats {
        let start = Instant::now();
        fit_model(&cfg, &params, x, classes).map_err(|source| BenchError::Cell {
            label: "timing".into(),
            method: method.name().into(),
            source,
        })?;
        samples.push(start.elapsed().as_secs_f64());
    }
    Ok(median(samples))
}

fn parse_methods(names: &[String]) -> Vec<Method> {
    names.iter().map(|n| n.parse().expect("validated method name")).collect()
}

/// Times each method's fit on one synthetic set, then fits the scaling methods
/// on growing sets with the same class ratio.
pub fn run_timing(config: &ExperimentConfig) -> Result<TimingReport> {
    config.validate()?;
    let t = &config.timing;
    let n = t.n_positive + t.n_negative;
    let ratio = t.n_positive as f64 / n as f64;
    let (x, classes) = timing_data(t.n_positive, n, t.d, derive_seed(config.seed, &[STREAM_TIMING]))?;
    let mut table = Vec::new();
    for method in parse_methods(&t.methods) {
        let seconds = time_fit(method, &x, &classes, t.repeats)?;
        table.push(TimingRow { method, n, d: t.d, seconds });
    }

    let mut scaling = Vec::new();
    let mut slopes = Vec::new();
    for method in parse_methods(&t.scaling_methods) {
        let mut points = Vec::new();
        for &size in &t.scaling_sizes {
            let n_pos = ((ratio * size as f64).round() as usize).max(2);
            let (x, classes) = timing_data(n_pos, size, t.d, derive_seed(config.seed, &[STREAM_TIMING, size as u64]))?;
            let seconds = time_fit(method, &x, &classes, t.scaling_repeats)?;
            points.push((size as f64, seconds));
            scaling.push(TimingRow {
                method,
                n: size,
                d: t.d,
                seconds,
            });
        }
        if points.len() >= 2 {
            slopes.push((method, log_log_slope(&points)));
        }
    }
    Ok(TimingReport { table, scaling, slopes })
}

impl TimingReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("kind,method,n,d,seconds,computational,memory\n");
        for (kind, rows) in [("table", &self.table), ("scaling", &self.scaling)] {
            for r in rows {
                let (comp, mem) = complexity(r.method);
                let _ = writeln!(
                    out,
                    "{kind},{},{},{},{:.6},\"{comp}\",{mem}",
                    r.method.name(),
                    r.n,
                    r.d,
                    r.seconds
                );
            }
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{:<6} {:>6} {:>5} {:>10}  {:<24} {}\n", "method", "n", "d", "seconds", "computational", "memory");
        for r in &self.table {
            let (comp, mem) = complexity(r.method);
            let _ = writeln!(
                out,
                "{:<6} {:>6} {:>5} {:>10.3}  {:<24} {}",
                r.method.name(),
                r.n,
                r.d,
                r.seconds,
                comp,
                mem
            );
        }
        if !self.scaling.is_empty() {
            out.push_str("\nscaling\n");
            for r in &self.scaling {
                let _ = writeln!(out, "{:<6} {:>6} {:>10.3}", r.method.name(), r.n, r.seconds);
            }
        }
        for (m, s) in &self.slopes {
            let _ = writeln!(out, "log-log slope {}: {s:.3}", m.name());
        }
        out
    }

    pub fn write_all(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        Ok(vec![
            write_atomic(&dir.join("timing.csv"), &self.to_csv())?,
            write_atomic(&dir.join("timing.txt"), &self.to_text())?,
        ])
    }
}
