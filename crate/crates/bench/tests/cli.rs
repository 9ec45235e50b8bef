use std::fs;
use std::path::Path;
use std::process::Command;

use unidr_bench::{run_experiment, run_experiment_with_jobs, ExperimentConfig};

const SEPARABLE: &str = r#"
seed = 11
name = "separable"
costs = [0.1, 1.0]
[dataset]
kind = "clusters"
d = 5
n = 200
separation = 8.0
[evaluation]
folds = 3
[[methods]]
name = "none"
[[methods]]
name = "pca"
[[methods]]
name = "lda"
"#;

fn unidr() -> Command {
    Command::new(env!("CARGO_BIN_EXE_unidr"))
}

fn write_config(dir: &Path, text: &str) -> std::path::PathBuf {
    let path = dir.join("config.toml");
    fs::write(&path, text).unwrap();
    path
}

fn read_outputs(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files = Vec::new();
    for name in ["report.csv", "report.txt", "report.json"] {
        files.push((name.to_string(), fs::read(dir.join(name)).unwrap()));
    }
    let mut rocs: Vec<_> = fs::read_dir(dir.join("roc")).unwrap().map(|e| e.unwrap().path()).collect();
    rocs.sort();
    for p in rocs {
        files.push((p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()));
    }
    files
}

#[test]
fn separable_control_reaches_full_auc() {
    let config = ExperimentConfig::from_toml_str(SEPARABLE).unwrap();
    let report = run_experiment(&config).unwrap();
    assert_eq!(report.cells.len(), 3);
    for cell in &report.cells {
        assert!((cell.auc - 1.0).abs() <= 0.01, "{}: auc {}", cell.method, cell.auc);
        assert_eq!(cell.n_train + cell.n_test, 200);
    }
}

#[test]
fn thread_count_does_not_change_results() {
    let config = ExperimentConfig::from_toml_str(SEPARABLE).unwrap();
    let one = run_experiment_with_jobs(&config, 1).unwrap();
    let four = run_experiment_with_jobs(&config, 4).unwrap();
    assert_eq!(one.to_json().unwrap(), four.to_json().unwrap());
    assert_eq!(one.to_csv(), four.to_csv());
}

#[test]
fn run_writes_identical_files_across_invocations() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SEPARABLE);
    let mut outputs = Vec::new();
    for (i, jobs) in ["1", "1", "4"].iter().enumerate() {
        let out = dir.path().join(format!("out{i}"));
        let status = unidr()
            .args(["run", "--config"])
            .arg(&config)
            .arg("--out")
            .arg(&out)
            .args(["--jobs", jobs])
            .output()
            .unwrap();
        assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
        assert!(out.join("walltime.csv").exists());
        outputs.push(read_outputs(&out));
    }
    assert_eq!(outputs[0].len(), 3 + 3);
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[0], outputs[2]);
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SEPARABLE);
    let out = dir.path().join("out");
    let o = unidr()
        .args(["run", "--seed", "99", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(o.status.success());
    let json = fs::read_to_string(out.join("report.json")).unwrap();
    assert!(json.contains("\"seed\": 99"));
}

#[test]
fn roc_subcommand_writes_curve() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SEPARABLE);
    let out = dir.path().join("out");
    let o = unidr()
        .args(["roc", "--label", "au_1", "--method", "lda", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let curve = fs::read_to_string(out.join("roc/au_1_lda.csv")).unwrap();
    assert!(curve.starts_with("fpr,tpr\n0,0\n"));
    assert!(curve.trim_end().ends_with("1,1"));

    let missing = unidr()
        .args(["roc", "--label", "au_1", "--method", "kda", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(missing.status.code(), Some(1));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_config(dir.path(), &SEPARABLE.replace("folds = 3", "folds = 1"));
    let o = unidr().args(["validate-config", "--config"]).arg(&bad).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("evaluation.folds"));

    let good = write_config(dir.path(), SEPARABLE);
    let o = unidr().args(["validate-config", "--config"]).arg(&good).output().unwrap();
    assert_eq!(o.status.code(), Some(0));

    let o = unidr()
        .args(["validate-config", "--config"])
        .arg(dir.path().join("absent.toml"))
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));

    // more folds than training subjects fails at run time
    let runtime = write_config(dir.path(), &SEPARABLE.replace("folds = 3", "folds = 9"));
    let o = unidr()
        .args(["run", "--config"])
        .arg(&runtime)
        .arg("--out")
        .arg(dir.path().join("o"))
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("label au_1, method none"), "{err}");
}

#[test]
fn print_schema_is_a_valid_config() {
    let o = unidr().arg("--print-schema").output().unwrap();
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    ExperimentConfig::from_toml_str(&text).unwrap();
}

#[test]
fn csv_dataset_path_is_relative_to_config() {
    let dir = tempfile::tempdir().unwrap();
    let data = unidr::datasets::gen_clusters(3, 120, 2, 6.0, 4).unwrap();
    unidr::datasets::save_csv(&data, dir.path().join("data.csv")).unwrap();
    let text = r#"
seed = 2
costs = [1.0]
[dataset]
kind = "csv"
path = "data.csv"
[evaluation]
folds = 3
[[methods]]
name = "none"
"#;
    let config = ExperimentConfig::load(&write_config(dir.path(), text)).unwrap();
    let report = run_experiment(&config).unwrap();
    assert!(report.cells[0].auc > 0.99);
}
