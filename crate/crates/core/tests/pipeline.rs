mod common;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rlfs::agents::{AgentConfig, Algorithm};
use rlfs::classifier::TreeParams;
use rlfs::dataset::{load_csv, stratified_split, BCCDS_LABEL_COLUMN, BCCDS_POSITIVE_LABEL};
use rlfs::env::{FeatureSubset, RewardConfig};
use rlfs::experiment::{
    collect_reports, emit_plot_data, mean_reward, prepare, read_trace_csv, report, run_grid, run_single,
    ExperimentConfig,
};
use rlfs::normalize::NormalizationKind;
use rlfs::oracle::exhaustive_search_with;
use rlfs::policy::{evaluate_policy, RunStatus};
use tempfile::TempDir;

fn surrogate_csv(dir: &Path) -> PathBuf {
    let path = dir.join("surrogate.csv");
    common::write_labelled_csv(&common::bccds_shaped(116, 3), &path);
    path
}

fn small_config(data: PathBuf, out: PathBuf) -> ExperimentConfig {
    let mut cfg = ExperimentConfig {
        data_path: data,
        output_dir: out,
        seeds: vec![0, 1],
        jobs: 4,
        ..Default::default()
    };
    cfg.agent.episodes = 150;
    cfg
}

/// Every file under `dir`, keyed by relative path.
fn snapshot(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<PathBuf, Vec<u8>>) {
        for entry in fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                walk(root, &path, out);
            } else {
                out.insert(path.strip_prefix(root).unwrap().to_path_buf(), fs::read(&path).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(dir, dir, &mut out);
    out
}

#[test]
fn grid_layout_and_byte_identical_reruns() {
    let tmp = TempDir::new().unwrap();
    let data = surrogate_csv(tmp.path());
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    let outcome = run_grid(&small_config(data.clone(), a.clone())).unwrap();
    assert_eq!(outcome.reports.len(), 3 * 2 * 2);
    assert_eq!(outcome.cells.len(), 6);
    for r in &outcome.reports {
        let dir = a.join(&r.normalization).join(&r.algorithm).join(r.seed.to_string());
        for f in ["trace.csv", "convergence.csv", "report.json"] {
            assert!(dir.join(f).is_file(), "missing {}", dir.join(f).display());
        }
        assert_eq!(read_trace_csv(&dir.join("trace.csv")).unwrap().len(), 150);
    }
    for f in ["summary.csv", "accuracy_summary.csv", "confusion.csv", "run_metadata.json"] {
        assert!(a.join(f).is_file(), "missing {f}");
    }

    let serial = ExperimentConfig {
        jobs: 1,
        ..small_config(data, b.clone())
    };
    run_grid(&serial).unwrap();
    let mut sa = snapshot(&a);
    let mut sb = snapshot(&b);
    assert!(sa.remove(Path::new("run_metadata.json")).is_some());
    assert!(sb.remove(Path::new("run_metadata.json")).is_some());
    assert_eq!(sa.keys().collect::<Vec<_>>(), sb.keys().collect::<Vec<_>>());
    for (k, v) in &sa {
        assert!(v == &sb[k], "{} differs between runs", k.display());
    }
}

#[test]
fn single_cell_grid_yields_one_report() {
    let tmp = TempDir::new().unwrap();
    let data = surrogate_csv(tmp.path());
    let cfg = ExperimentConfig {
        normalizations: vec![NormalizationKind::MinMax],
        algorithms: vec![Algorithm::QLearning],
        seeds: vec![42],
        ..small_config(data, tmp.path().join("out"))
    };
    let outcome = run_grid(&cfg).unwrap();
    assert_eq!(outcome.reports.len(), 1);
    let r = &outcome.reports[0];
    assert_eq!((r.normalization.as_str(), r.algorithm.as_str(), r.seed), ("minmax", "qlearning", 42));
    let summary = fs::read_to_string(tmp.path().join("out/summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 2);
    assert_eq!(
        summary.lines().next().unwrap(),
        "algorithm,normalization,seed,status,accuracy,tp,fp,tn,fn,subset,selected_names,greedy_reward"
    );
}

#[test]
fn failed_cells_are_marked_and_the_rest_complete() {
    let tmp = TempDir::new().unwrap();
    let data = surrogate_csv(tmp.path());
    let out = tmp.path().join("out");
    fs::create_dir_all(&out).unwrap();
    // a plain file where the l1 run directories should go
    fs::write(out.join("l1"), "blocked").unwrap();
    let outcome = run_grid(&small_config(data, out.clone())).unwrap();
    assert!(!outcome.all_ok());
    for r in &outcome.reports {
        if r.normalization == "l1" {
            assert_eq!(r.status, RunStatus::Failed);
            assert!(r.error.is_some());
            assert!(r.test_accuracy.is_none());
        } else {
            assert_ne!(r.status, RunStatus::Failed);
        }
    }
    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 13);
    assert_eq!(summary.lines().filter(|l| l.contains(",failed,")).count(), 4);
    let acc = fs::read_to_string(out.join("accuracy_summary.csv")).unwrap();
    let l1_rows: Vec<&str> = acc.lines().filter(|l| l.starts_with("l1,")).collect();
    assert_eq!(l1_rows.len(), 2);
    for row in l1_rows {
        let cols: Vec<&str> = row.split(',').collect();
        assert_eq!(&cols[2..4], ["2", "0"]);
    }
}

#[test]
fn convergence_file_window() {
    let ds = common::bccds_shaped(116, 8);
    let split = stratified_split(&ds, 0.9, 0).unwrap();
    let data = prepare(&split, NormalizationKind::MinMax, TreeParams::default(), RewardConfig::default()).unwrap();
    let out = run_single(&data, &AgentConfig::default()).unwrap();
    assert_eq!(out.traces.len(), 1000);
    let tmp = TempDir::new().unwrap();
    let pairs = vec![(out.report.clone(), out.traces.clone())];

    emit_plot_data(tmp.path(), std::slice::from_ref(&out.report), &pairs, 50).unwrap();
    let conv = tmp.path().join("minmax/qlearning/0/convergence.csv");
    let mut rdr = csv::Reader::from_path(&conv).unwrap();
    assert_eq!(rdr.headers().unwrap(), vec!["episode", "reward", "epsilon", "moving_avg"]);
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 1000);
    for (i, row) in rows.iter().enumerate() {
        if i < 49 {
            assert_eq!(&row[3], "");
        } else {
            let got: f64 = row[3].parse().unwrap();
            let want = mean_reward(&out.traces, i + 2 - 50, i + 1);
            assert!((got - want).abs() < 1e-9, "row {i}: {got} vs {want}");
        }
    }
    assert!(tmp.path().join("accuracy_summary.csv").is_file());
    assert!(tmp.path().join("confusion.csv").is_file());

    emit_plot_data(tmp.path(), std::slice::from_ref(&out.report), &pairs, 5000).unwrap();
    let mut rdr = csv::Reader::from_path(&conv).unwrap();
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 1000);
    assert!(rows.iter().all(|r| r[3].is_empty()));

    assert!(emit_plot_data(tmp.path(), &[], &[], 50).is_err());
}

#[test]
fn report_rebuilds_the_same_aggregates() {
    let tmp = TempDir::new().unwrap();
    let data = surrogate_csv(tmp.path());
    let out = tmp.path().join("out");
    let grid = run_grid(&small_config(data, out.clone())).unwrap();
    let before = snapshot(&out);
    fs::remove_file(out.join("summary.csv")).unwrap();
    fs::remove_file(out.join("confusion.csv")).unwrap();
    let again = report(&out, 50).unwrap();
    let after = snapshot(&out);
    for f in ["summary.csv", "accuracy_summary.csv", "confusion.csv"] {
        assert!(before[Path::new(f)] == after[Path::new(f)], "{f} changed");
    }
    assert_eq!(collect_reports(&out).unwrap(), grid.reports);
    assert_eq!(again.cells, grid.cells);
}

#[test]
fn all_feature_accuracy_regression() {
    // frozen from the first run of this pipeline; guards the loader, split,
    // scaler and tree against silent behaviour changes
    let tmp = TempDir::new().unwrap();
    let path = surrogate_csv(tmp.path());
    let ds = load_csv(&path, BCCDS_LABEL_COLUMN, BCCDS_POSITIVE_LABEL).unwrap();
    let split = stratified_split(&ds, 0.9, 0).unwrap();
    assert_eq!((split.train.n_samples(), split.test.n_samples()), (104, 12));
    let data = prepare(&split, NormalizationKind::MinMax, TreeParams::default(), RewardConfig::default()).unwrap();
    let full = FeatureSubset::full(9);
    let ev = evaluate_policy(&full, &data.split.train, &data.split.test, data.evaluator.tree_params()).unwrap();
    assert_eq!(ev.accuracy, ALL_FEATURE_ACCURACY, "confusion {:?}", ev.confusion);
}

const ALL_FEATURE_ACCURACY: f64 = 11.0 / 12.0;

// The acceptance suite times the same sweep on the Coimbra CSV.

#[test]
fn full_sweep_is_fast_on_surrogate() {
    let split = stratified_split(&common::bccds_shaped(116, 4), 0.9, 0).unwrap();
    let data = prepare(&split, NormalizationKind::MinMax, TreeParams::default(), RewardConfig::default()).unwrap();
    let start = Instant::now();
    let res = exhaustive_search_with(&data.evaluator).unwrap();
    assert_eq!(res.ranking.len(), 512);
    assert!(start.elapsed() < Duration::from_secs(10), "{:?}", start.elapsed());
}

fn rlfs() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_rlfs"));
    cmd.env_remove("RLFS_OUTPUT_DIR");
    cmd
}

#[test]
fn cli_run_single_cell() {
    let tmp = TempDir::new().unwrap();
    let data = surrogate_csv(tmp.path());
    let out = tmp.path().join("out");
    let status = rlfs()
        .args(["run", "--normalizations", "minmax", "--algorithm", "qlearning", "--seeds", "42", "--episodes", "100"])
        .arg("--data")
        .arg(&data)
        .arg("--output-dir")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(0), "{}", String::from_utf8_lossy(&status.stderr));
    let reports = collect_reports(&out).unwrap();
    assert_eq!(reports.len(), 1);
    assert_eq!(reports[0].seed, 42);
    assert_eq!(read_trace_csv(&out.join("minmax/qlearning/42/trace.csv")).unwrap().len(), 100);
}

#[test]
fn cli_output_dir_from_environment() {
    let tmp = TempDir::new().unwrap();
    let data = surrogate_csv(tmp.path());
    let out = tmp.path().join("from-env");
    let run = rlfs()
        .args(["run", "--normalizations", "l2", "--algorithms", "sarsa", "--seed", "3", "--episodes", "50"])
        .arg("--data")
        .arg(&data)
        .env("RLFS_OUTPUT_DIR", &out)
        .output()
        .unwrap();
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));
    assert!(out.join("l2/sarsa/3/report.json").is_file());

    fs::remove_file(out.join("summary.csv")).unwrap();
    let rep = rlfs().args(["report"]).env("RLFS_OUTPUT_DIR", &out).output().unwrap();
    assert_eq!(rep.status.code(), Some(0));
    assert!(out.join("summary.csv").is_file());
}

#[test]
fn cli_config_file_and_flag_precedence() {
    let tmp = TempDir::new().unwrap();
    let data = surrogate_csv(tmp.path());
    let out = tmp.path().join("out");
    let toml = tmp.path().join("exp.toml");
    fs::write(
        &toml,
        format!(
            "data_path = {:?}\noutput_dir = {:?}\nnormalizations = [\"l1\"]\nalgorithms = [\"sarsa\"]\nseeds = [1, 2]\nepisodes = 40\n",
            data, out
        ),
    )
    .unwrap();
    let run = rlfs()
        .args(["run", "--seeds", "7", "--config"])
        .arg(&toml)
        .output()
        .unwrap();
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));
    let reports = collect_reports(&out).unwrap();
    assert_eq!(reports.len(), 1);
    assert_eq!((reports[0].normalization.as_str(), reports[0].algorithm.as_str(), reports[0].seed), ("l1", "sarsa", 7));
    assert_eq!(read_trace_csv(&out.join("l1/sarsa/7/trace.csv")).unwrap().len(), 40);
}

#[test]
fn cli_exit_codes() {
    let tmp = TempDir::new().unwrap();
    let data = surrogate_csv(tmp.path());
    let out = tmp.path().join("out");
    fs::create_dir_all(&out).unwrap();
    fs::write(out.join("minmax"), "blocked").unwrap();
    let run = rlfs()
        .args(["run", "--normalizations", "minmax,l2", "--algorithms", "qlearning", "--seed", "0", "--episodes", "30"])
        .arg("--data")
        .arg(&data)
        .arg("--output-dir")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(run.status.code(), Some(2));
    assert!(out.join("summary.csv").is_file());

    let missing = rlfs()
        .args(["run", "--data", "/nonexistent/data.csv", "--output-dir"])
        .arg(tmp.path().join("other"))
        .output()
        .unwrap();
    assert_eq!(missing.status.code(), Some(1));

    let bad_toml = tmp.path().join("bad.toml");
    fs::write(&bad_toml, "episodez = 3\n").unwrap();
    let bad = rlfs().args(["run", "--config"]).arg(&bad_toml).output().unwrap();
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn cli_oracle_csv() {
    let tmp = TempDir::new().unwrap();
    let data = surrogate_csv(tmp.path());
    let out = tmp.path().join("oracle.csv");
    let run = rlfs()
        .args(["oracle", "--normalization", "l2", "--data"])
        .arg(&data)
        .arg("--output")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));
    let text = fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("rank,subset,accuracy,reward,valid"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 512);
    let rewards: Vec<f64> = rows.iter().map(|r| r[3].parse().unwrap()).collect();
    assert!(rewards.windows(2).all(|w| w[0] >= w[1]));
    assert!(rows.iter().all(|r| r[1].len() == 9));
    assert!(String::from_utf8_lossy(&run.stderr).contains("best valid subset"));

    let stdout = rlfs().args(["oracle", "--data"]).arg(&data).output().unwrap();
    assert_eq!(stdout.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&stdout.stdout).lines().count(), 513);
}
