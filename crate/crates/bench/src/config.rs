//! TOML experiment configuration.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use unidr::classify::{DrParams, DEFAULT_COSTS};
use unidr::datasets::{AuLikeParams, CsvSchema};
use unidr::dr::{EnergyPolicy, LdaRoute, Method, PcaRoute, KDA_DEFAULT_RIDGE, LSDA_DEFAULT_ALPHA};

use crate::error::{BenchError, Result};

/// Annotated description of every accepted key, printed by `--print-schema`.
pub const SCHEMA: &str = r#"# unidr experiment configuration (TOML)
#
# Top level
seed = 7                      # required; every random choice derives from it
name = "experiment"           # optional, used in report headers
output = "out"                # optional output directory (overridden by --out)
labels = ["au_1"]             # optional; default is every label in the dataset
costs = [0.01, 0.1, 1, 10, 100]   # SVM cost grid

[dataset]                     # exactly one kind
kind = "au_like"              # "au_like" | "clusters" | "csv"
# au_like: n_subjects, frames_per_subject, d, pos_rate, signal_dims, noise,
#          signal, subject_scale, latent_dims, latent_scale, mean_run
# clusters: d, n, classes (default 2), separation
# csv: path, schema = { features = [..], labels = [..], subject = "subject" }
#      (feature and label lists default to f<i> and au_* columns)

[sampling]
keep_fraction = 1.0           # cap on positives as a fraction of all samples
neg_per_pos = 10.0            # negatives drawn per kept positive

[evaluation]
folds = 5                     # subject-wise folds for tuning
test_fraction = 0.4           # share of subjects held out for testing
mode = "holdout"              # "holdout" | "leave_one_subject_out"

[[methods]]                   # one table per method; names must be unique
name = "none"                 # raw features, the no-reduction control
[[methods]]
name = "pca"
energy = { mode = "fraction", fraction = 0.98 }   # or { mode = "fixed", k = 10 }
route = "spectral"            # "spectral" | "als"
[[methods]]
name = "kpca"                 # also "kda"
kernel = { kind = "rbf" }     # sigma defaults to the median distance;
                              # { kind = "linear" } | { kind = "polynomial", degree = 2, offset = 1.0 }
sigma_scale = [1.0]           # grid of multipliers on the rbf sigma
energy = { mode = "fraction", fraction = 0.98 }   # kpca only
# ridge = 1e-6                # kda only, relative to tr(K_c K_c)
[[methods]]
name = "lle"
p = [12]                      # neighbor-count grid
reg = 1e-3
energy = { mode = "fraction", fraction = 0.98 }
[[methods]]
name = "lpp"
p = [12]
weights = "heat"              # "heat" | "binary"
energy = { mode = "fraction", fraction = 0.98 }
[[methods]]
name = "lda"
route = "gep"                 # "gep" | "ls"
[[methods]]
name = "lsda"
p = [12]
alpha = [0.5]

[timing]
n_positive = 300
n_negative = 3000
d = 128
repeats = 3                   # median of this many fits per method
methods = ["pca", "kpca", "lle", "lpp", "lda", "kda", "lsda"]
scaling_sizes = [500, 1000, 2000, 4000]
scaling_methods = ["kpca", "kda"]
scaling_repeats = 1
"#;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    #[serde(default = "default_name")]
    pub name: String,
    #[serde(default)]
    pub output: Option<PathBuf>,
    pub dataset: DatasetConfig,
    #[serde(default)]
    pub labels: Vec<String>,
    #[serde(default = "default_costs")]
    pub costs: Vec<f64>,
    #[serde(default)]
    pub sampling: SamplingConfig,
    #[serde(default)]
    pub evaluation: EvaluationConfig,
    #[serde(default)]
    pub methods: Vec<MethodConfig>,
    #[serde(default)]
    pub timing: TimingConfig,
}

fn default_name() -> String {
    "experiment".into()
}

fn default_costs() -> Vec<f64> {
    DEFAULT_COSTS.to_vec()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetConfig {
    AuLike(AuLikeParams),
    Clusters {
        d: usize,
        n: usize,
        #[serde(default = "two")]
        classes: usize,
        separation: f64,
    },
    Csv {
        path: PathBuf,
        #[serde(default)]
        schema: CsvSchema,
    },
}

fn two() -> usize {
    2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplingConfig {
    pub keep_fraction: f64,
    pub neg_per_pos: f64,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        SamplingConfig {
            keep_fraction: 1.0,
            neg_per_pos: 10.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalMode {
    #[default]
    Holdout,
    LeaveOneSubjectOut,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationConfig {
    pub folds: usize,
    pub test_fraction: f64,
    pub mode: EvalMode,
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        EvaluationConfig {
            folds: 5,
            test_fraction: 0.4,
            mode: EvalMode::Holdout,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum KernelConfig {
    Linear,
    Rbf {
        #[serde(default)]
        sigma: Option<f64>,
    },
    Polynomial {
        degree: u32,
        offset: f64,
    },
}

impl Default for KernelConfig {
    fn default() -> Self {
        KernelConfig::Rbf { sigma: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GraphWeights {
    #[default]
    Heat,
    Binary,
}

fn default_p() -> Vec<usize> {
    vec![12]
}

fn default_scale() -> Vec<f64> {
    vec![1.0]
}

fn default_alpha() -> Vec<f64> {
    vec![LSDA_DEFAULT_ALPHA]
}

fn default_reg() -> f64 {
    1e-3
}

fn default_kda_ridge() -> f64 {
    KDA_DEFAULT_RIDGE
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PcaConfig {
    #[serde(default)]
    pub energy: EnergyPolicy,
    #[serde(default)]
    pub route: PcaRoute,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KpcaConfig {
    #[serde(default)]
    pub energy: EnergyPolicy,
    #[serde(default)]
    pub kernel: KernelConfig,
    #[serde(default = "default_scale")]
    pub sigma_scale: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LleConfig {
    #[serde(default = "default_p")]
    pub p: Vec<usize>,
    #[serde(default = "default_reg")]
    pub reg: f64,
    #[serde(default)]
    pub energy: EnergyPolicy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LppConfig {
    #[serde(default = "default_p")]
    pub p: Vec<usize>,
    #[serde(default)]
    pub weights: GraphWeights,
    #[serde(default)]
    pub energy: EnergyPolicy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LdaConfig {
    #[serde(default)]
    pub route: LdaRoute,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KdaConfig {
    #[serde(default)]
    pub kernel: KernelConfig,
    #[serde(default = "default_scale")]
    pub sigma_scale: Vec<f64>,
    #[serde(default = "default_kda_ridge")]
    pub ridge: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LsdaConfig {
    #[serde(default = "default_p")]
    pub p: Vec<usize>,
    #[serde(default = "default_alpha")]
    pub alpha: Vec<f64>,
}

/// One entry of `[[methods]]`, selected by its `name` key.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "lowercase")]
pub enum MethodConfig {
    None,
    Pca(PcaConfig),
    Kpca(KpcaConfig),
    Lle(LleConfig),
    Lpp(LppConfig),
    Lda(LdaConfig),
    Kda(KdaConfig),
    Lsda(LsdaConfig),
}

/// Deserializes `value`, reporting failures at `prefix` joined with the inner field path.
fn deserialize_at<T: serde::de::DeserializeOwned>(value: toml::Table, prefix: &str) -> Result<T> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let path = if e.path().iter().next().is_none() {
            if prefix.is_empty() { "<document>" } else { prefix }.to_string()
        } else if prefix.is_empty() {
            e.path().to_string()
        } else {
            format!("{prefix}.{}", e.path())
        };
        BenchError::config(path, e.into_inner().to_string())
    })
}

impl MethodConfig {
    /// Default settings for a method name, `"none"` included.
    pub fn default_for(name: &str) -> Option<Self> {
        if name == "none" {
            return Some(MethodConfig::None);
        }
        Self::from_table(name, toml::Table::new(), "").ok()
    }

    fn from_table(name: &str, rest: toml::Table, at: &str) -> Result<Self> {
        Ok(match name {
            "none" => {
                if let Some(key) = rest.keys().next() {
                    return Err(BenchError::config(format!("{at}.{key}"), "the none method takes no settings"));
                }
                MethodConfig::None
            }
            "pca" => MethodConfig::Pca(deserialize_at(rest, at)?),
            "kpca" => MethodConfig::Kpca(deserialize_at(rest, at)?),
            "lle" => MethodConfig::Lle(deserialize_at(rest, at)?),
            "lpp" => MethodConfig::Lpp(deserialize_at(rest, at)?),
            "lda" => MethodConfig::Lda(deserialize_at(rest, at)?),
            "kda" => MethodConfig::Kda(deserialize_at(rest, at)?),
            "lsda" => MethodConfig::Lsda(deserialize_at(rest, at)?),
            other => {
                return Err(BenchError::config(
                    format!("{at}.name"),
                    format!("unknown method {other:?}; expected none, pca, kpca, lle, lpp, lda, kda or lsda"),
                ))
            }
        })
    }

    fn from_value(value: toml::Value, at: &str) -> Result<Self> {
        let toml::Value::Table(mut table) = value else {
            return Err(BenchError::config(at, "expected a table"));
        };
        let name = match table.remove("name") {
            Some(toml::Value::String(s)) => s,
            Some(_) => return Err(BenchError::config(format!("{at}.name"), "expected a string")),
            None => return Err(BenchError::config(format!("{at}.name"), "missing field `name`")),
        };
        Self::from_table(&name, table, at)
    }

    pub fn method(&self) -> Option<Method> {
        Some(match self {
            MethodConfig::None => return None,
            MethodConfig::Pca(_) => Method::Pca,
            MethodConfig::Kpca(_) => Method::Kpca,
            MethodConfig::Lle(_) => Method::Lle,
            MethodConfig::Lpp(_) => Method::Lpp,
            MethodConfig::Lda(_) => Method::Lda,
            MethodConfig::Kda(_) => Method::Kda,
            MethodConfig::Lsda(_) => Method::Lsda,
        })
    }

    pub fn name(&self) -> &'static str {
        self.method().map_or("none", Method::name)
    }

    /// Reduction parameter grid, in lexicographic key order.
    pub fn grid(&self) -> Vec<DrParams> {
        let from_usize = |v: &[usize]| v.iter().map(|&x| x as f64).collect::<Vec<_>>();
        let rbf_axis = |kernel: &KernelConfig, scales: &[f64]| match kernel {
            KernelConfig::Rbf { .. } => vec![("sigma_scale", scales.to_vec())],
            _ => vec![],
        };
        let axes: Vec<(&str, Vec<f64>)> = match self {
            MethodConfig::None | MethodConfig::Pca(_) | MethodConfig::Lda(_) => vec![],
            MethodConfig::Kpca(c) => rbf_axis(&c.kernel, &c.sigma_scale),
            MethodConfig::Kda(c) => rbf_axis(&c.kernel, &c.sigma_scale),
            MethodConfig::Lle(c) => vec![("p", from_usize(&c.p))],
            MethodConfig::Lpp(c) => vec![("p", from_usize(&c.p))],
            MethodConfig::Lsda(c) => vec![("alpha", c.alpha.clone()), ("p", from_usize(&c.p))],
        };
        let mut grid = vec![DrParams::default()];
        for (key, values) in axes {
            grid = grid
                .into_iter()
                .flat_map(|g| values.iter().map(move |&v| g.clone().with(key, v)))
                .collect();
        }
        grid
    }

    fn validate(&self, at: &str) -> Result<()> {
        let check_energy = |e: &EnergyPolicy| {
            e.validate()
                .map_err(|err| BenchError::config(format!("{at}.energy"), err.to_string()))
        };
        let check_p = |p: &[usize]| {
            if p.is_empty() {
                return Err(BenchError::config(format!("{at}.p"), "grid must be nonempty"));
            }
            match p.iter().position(|&v| v == 0) {
                Some(i) => Err(BenchError::config(format!("{at}.p[{i}]"), "neighbor count must be positive")),
                None => Ok(()),
            }
        };
        let check_kernel = |k: &KernelConfig, scales: &[f64]| {
            match *k {
                KernelConfig::Rbf { sigma: Some(s) } if !(s > 0.0) || !s.is_finite() => {
                    return Err(BenchError::config(format!("{at}.kernel.sigma"), "must be positive"));
                }
                KernelConfig::Polynomial { degree, offset } if degree == 0 || !(offset >= 0.0) => {
                    return Err(BenchError::config(
                        format!("{at}.kernel"),
                        "polynomial kernels need degree >= 1 and offset >= 0",
                    ));
                }
                _ => {}
            }
            if scales.is_empty() {
                return Err(BenchError::config(format!("{at}.sigma_scale"), "grid must be nonempty"));
            }
            match scales.iter().position(|s| !(*s > 0.0) || !s.is_finite()) {
                Some(i) => Err(BenchError::config(format!("{at}.sigma_scale[{i}]"), "must be positive")),
                None => Ok(()),
            }
        };
        match self {
            MethodConfig::None | MethodConfig::Lda(_) => Ok(()),
            MethodConfig::Pca(c) => check_energy(&c.energy),
            MethodConfig::Kpca(c) => {
                check_energy(&c.energy)?;
                check_kernel(&c.kernel, &c.sigma_scale)
            }
            MethodConfig::Lle(c) => {
                check_p(&c.p)?;
                check_energy(&c.energy)?;
                if !(c.reg >= 0.0) || !c.reg.is_finite() {
                    return Err(BenchError::config(format!("{at}.reg"), "must be finite and nonnegative"));
                }
                Ok(())
            }
            MethodConfig::Lpp(c) => {
                check_p(&c.p)?;
                check_energy(&c.energy)
            }
            MethodConfig::Kda(c) => {
                check_kernel(&c.kernel, &c.sigma_scale)?;
                if !(c.ridge > 0.0) || !c.ridge.is_finite() {
                    return Err(BenchError::config(format!("{at}.ridge"), "must be positive"));
                }
                Ok(())
            }
            MethodConfig::Lsda(c) => {
                check_p(&c.p)?;
                if c.alpha.is_empty() {
                    return Err(BenchError::config(format!("{at}.alpha"), "grid must be nonempty"));
                }
                match c.alpha.iter().position(|a| !(0.0..=1.0).contains(a)) {
                    Some(i) => Err(BenchError::config(format!("{at}.alpha[{i}]"), "must lie in [0, 1]")),
                    None => Ok(()),
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimingConfig {
    pub n_positive: usize,
    pub n_negative: usize,
    pub d: usize,
    pub repeats: usize,
    pub methods: Vec<String>,
    pub scaling_sizes: Vec<usize>,
    pub scaling_methods: Vec<String>,
    pub scaling_repeats: usize,
}

impl Default for TimingConfig {
    fn default() -> Self {
        TimingConfig {
            n_positive: 300,
            n_negative: 3000,
            d: 128,
            repeats: 3,
            methods: Method::ALL.iter().map(|m| m.name().to_string()).collect(),
            scaling_sizes: vec![500, 1000, 2000, 4000],
            scaling_methods: vec!["kpca".into(), "kda".into()],
            scaling_repeats: 1,
        }
    }
}

impl TimingConfig {
    fn validate(&self) -> Result<()> {
        if self.n_positive == 0 || self.n_negative == 0 {
            return Err(BenchError::config("timing", "both classes need samples"));
        }
        if self.d == 0 {
            return Err(BenchError::config("timing.d", "must be positive"));
        }
        if self.repeats == 0 {
            return Err(BenchError::config("timing.repeats", "must be positive"));
        }
        if self.scaling_repeats == 0 {
            return Err(BenchError::config("timing.scaling_repeats", "must be positive"));
        }
        for (field, list) in [("methods", &self.methods), ("scaling_methods", &self.scaling_methods)] {
            for (i, name) in list.iter().enumerate() {
                if name.parse::<Method>().is_err() {
                    return Err(BenchError::config(
                        format!("timing.{field}[{i}]"),
                        format!("unknown method {name:?}"),
                    ));
                }
            }
        }
        if let Some(i) = self.scaling_sizes.iter().position(|&n| n < 20) {
            return Err(BenchError::config(format!("timing.scaling_sizes[{i}]"), "must be at least 20"));
        }
        Ok(())
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| BenchError::config("<document>", e.to_string()))?;
        // methods are parsed one by one so errors keep the path inside each entry
        let methods = match table.remove("methods") {
            None => vec![],
            Some(toml::Value::Array(items)) => items,
            Some(_) => return Err(BenchError::config("methods", "expected an array of tables")),
        };
        let mut config: ExperimentConfig = deserialize_at(table, "")?;
        config.methods = methods
            .into_iter()
            .enumerate()
            .map(|(i, v)| MethodConfig::from_value(v, &format!("methods[{i}]")))
            .collect::<Result<_>>()?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| BenchError::config(path.display().to_string(), e.to_string()))?;
        let mut config = Self::from_toml_str(&text)?;
        if let DatasetConfig::Csv { path: csv, .. } = &mut config.dataset {
            if csv.is_relative() {
                if let Some(dir) = path.parent() {
                    *csv = dir.join(&*csv);
                }
            }
        }
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.costs.is_empty() {
            return Err(BenchError::config("costs", "grid must be nonempty"));
        }
        if let Some(i) = self.costs.iter().position(|c| !(*c > 0.0) || !c.is_finite()) {
            return Err(BenchError::config(format!("costs[{i}]"), "must be positive"));
        }
        let s = &self.sampling;
        if !(s.keep_fraction > 0.0 && s.keep_fraction <= 1.0) {
            return Err(BenchError::config("sampling.keep_fraction", "must lie in (0, 1]"));
        }
        if !(s.neg_per_pos > 0.0) || !s.neg_per_pos.is_finite() {
            return Err(BenchError::config("sampling.neg_per_pos", "must be positive"));
        }
        let e = &self.evaluation;
        if e.folds < 2 {
            return Err(BenchError::config("evaluation.folds", "need at least 2 folds"));
        }
        if !(e.test_fraction > 0.0 && e.test_fraction < 1.0) {
            return Err(BenchError::config("evaluation.test_fraction", "must lie in (0, 1)"));
        }
        match &self.dataset {
            DatasetConfig::AuLike(p) => p
                .validate()
                .map_err(|err| BenchError::config("dataset", err.to_string()))?,
            DatasetConfig::Clusters {
                d,
                n,
                classes,
                separation,
            } => {
                if *classes < 2 || classes > d || *n < *classes || !(*separation >= 0.0) {
                    return Err(BenchError::config(
                        "dataset",
                        "clusters need 2 <= classes <= d, n >= classes and separation >= 0",
                    ));
                }
            }
            DatasetConfig::Csv { .. } => {}
        }
        let mut seen = BTreeSet::new();
        for (i, label) in self.labels.iter().enumerate() {
            if !seen.insert(label) {
                return Err(BenchError::config(format!("labels[{i}]"), format!("duplicate label {label:?}")));
            }
        }
        let mut names = BTreeSet::new();
        for (i, m) in self.methods.iter().enumerate() {
            let at = format!("methods[{i}]");
            if !names.insert(m.name()) {
                return Err(BenchError::config(format!("{at}.name"), format!("duplicate method {:?}", m.name())));
            }
            m.validate(&at)?;
        }
        self.timing.validate()
    }

    pub fn output_dir(&self) -> PathBuf {
        self.output.clone().unwrap_or_else(|| PathBuf::from("out"))
    }
}
