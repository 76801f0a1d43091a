//! The normalization × algorithm × seed grid: configuration, execution and
//! the columnar outputs (traces, reports, summaries) written for each run.
//!
//! Layout under the output directory:
//!
//! ```text
//! <norm>/<algorithm>/<seed>/trace.csv
//! <norm>/<algorithm>/<seed>/convergence.csv
//! <norm>/<algorithm>/<seed>/report.json
//! summary.csv
//! accuracy_summary.csv
//! confusion.csv
//! run_metadata.json
//! ```
//!
//! Everything except `run_metadata.json` is a pure function of the config.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::agents::{train, AgentConfig, Algorithm, EpisodeTrace};
use crate::classifier::{ConfusionMatrix, TreeParams};
use crate::dataset::{
    load_csv, stratified_split, Dataset, SplitDataset, BCCDS_LABEL_COLUMN, BCCDS_POSITIVE_LABEL,
};
use crate::env::{FeatureSelectionEnv, RewardConfig, RewardEvaluator, RewardMode, RewardSplit};
use crate::error::{Error, Result};
use crate::normalize::{NormalizationKind, Normalizer};
use crate::policy::{evaluate_policy, extract_policy, RunReport, RunStatus};

pub const OUTPUT_DIR_ENV: &str = "RLFS_OUTPUT_DIR";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub data_path: PathBuf,
    pub label_column: String,
    pub positive_label: String,
    pub split_ratio: f64,
    pub split_seed: u64,
    pub normalizations: Vec<NormalizationKind>,
    pub algorithms: Vec<Algorithm>,
    /// `algorithm` and `seed` are overridden per grid cell.
    pub agent: AgentConfig,
    pub reward: RewardConfig,
    pub tree: TreeParams,
    pub seeds: Vec<u64>,
    pub output_dir: PathBuf,
    /// Worker threads; 0 means one per core.
    pub jobs: usize,
    pub moving_average_window: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            data_path: PathBuf::new(),
            label_column: BCCDS_LABEL_COLUMN.to_owned(),
            positive_label: BCCDS_POSITIVE_LABEL.to_owned(),
            split_ratio: 0.9,
            split_seed: 0,
            normalizations: NormalizationKind::ALL.to_vec(),
            algorithms: Algorithm::ALL.to_vec(),
            agent: AgentConfig::default(),
            reward: RewardConfig::default(),
            tree: TreeParams::default(),
            seeds: (0..20).collect(),
            output_dir: PathBuf::from("rlfs-output"),
            jobs: 0,
            moving_average_window: 50,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_owned()));
        if self.data_path.as_os_str().is_empty() {
            return bad("no data path given");
        }
        if self.normalizations.is_empty() || self.algorithms.is_empty() || self.seeds.is_empty() {
            return bad("normalizations, algorithms and seeds must be non-empty");
        }
        if !(self.split_ratio > 0.0 && self.split_ratio < 1.0) {
            return bad("split ratio must be in (0, 1)");
        }
        self.agent.validate()?;
        self.reward.validate()?;
        self.tree.validate()
    }
}

/// Optional settings from a TOML file or the command line, layered over
/// [`ExperimentConfig::default`].
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentOverrides {
    pub data_path: Option<PathBuf>,
    pub label_column: Option<String>,
    pub positive_label: Option<String>,
    pub split_ratio: Option<f64>,
    pub split_seed: Option<u64>,
    pub normalizations: Option<Vec<NormalizationKind>>,
    pub algorithms: Option<Vec<Algorithm>>,
    pub alpha: Option<f64>,
    pub gamma: Option<f64>,
    pub episodes: Option<usize>,
    pub epsilon_start: Option<f64>,
    pub epsilon_end: Option<f64>,
    pub seeds: Option<Vec<u64>>,
    pub reward_threshold: Option<f64>,
    pub bonus_factor: Option<f64>,
    pub punishment: Option<f64>,
    pub reward_split: Option<RewardSplit>,
    pub reward_mode: Option<RewardMode>,
    pub max_depth: Option<usize>,
    pub min_samples_split: Option<usize>,
    pub output_dir: Option<PathBuf>,
    pub jobs: Option<usize>,
    pub moving_average_window: Option<usize>,
}

impl ExperimentOverrides {
    pub fn from_toml_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(toml::from_str(&text)?)
    }

    pub fn apply(self, cfg: &mut ExperimentConfig) {
        macro_rules! set {
            ($($field:ident => $target:expr),* $(,)?) => {
                $(if let Some(v) = self.$field { $target = v; })*
            };
        }
        set! {
            data_path => cfg.data_path,
            label_column => cfg.label_column,
            positive_label => cfg.positive_label,
            split_ratio => cfg.split_ratio,
            split_seed => cfg.split_seed,
            normalizations => cfg.normalizations,
            algorithms => cfg.algorithms,
            alpha => cfg.agent.alpha,
            gamma => cfg.agent.gamma,
            episodes => cfg.agent.episodes,
            epsilon_start => cfg.agent.epsilon_start,
            epsilon_end => cfg.agent.epsilon_end,
            seeds => cfg.seeds,
            reward_threshold => cfg.reward.threshold,
            bonus_factor => cfg.reward.bonus_factor,
            punishment => cfg.reward.punishment,
            reward_split => cfg.reward.reward_split,
            reward_mode => cfg.reward.reward_mode,
            min_samples_split => cfg.tree.min_samples_split,
            output_dir => cfg.output_dir,
            jobs => cfg.jobs,
            moving_average_window => cfg.moving_average_window,
        }
        if self.max_depth.is_some() {
            cfg.tree.max_depth = self.max_depth;
        }
    }
}

/// Built-in defaults, then the config file, then command-line overrides.
/// `RLFS_OUTPUT_DIR` supplies the output directory when neither layer does.
pub fn resolve_config(
    file: Option<ExperimentOverrides>,
    cli: ExperimentOverrides,
) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    let explicit_output = cli.output_dir.is_some()
        || file.as_ref().is_some_and(|f| f.output_dir.is_some());
    if let Some(f) = file {
        f.apply(&mut cfg);
    }
    cli.apply(&mut cfg);
    if !explicit_output {
        if let Some(dir) = std::env::var_os(OUTPUT_DIR_ENV) {
            cfg.output_dir = PathBuf::from(dir);
        }
    }
    cfg
}

/// A normalized view of the split plus the reward source built on it.
#[derive(Debug)]
pub struct PreparedData {
    pub normalization: NormalizationKind,
    pub split: SplitDataset,
    pub evaluator: Arc<RewardEvaluator>,
}

/// Fits the normalizer on train only and applies it to both halves.
pub fn prepare(
    split: &SplitDataset,
    kind: NormalizationKind,
    tree: TreeParams,
    reward: RewardConfig,
) -> Result<PreparedData> {
    let normalizer = Normalizer::fit(kind, &split.train);
    let normalized = SplitDataset {
        train: normalizer.transform(&split.train)?,
        test: normalizer.transform(&split.test)?,
        ..split.clone()
    };
    let evaluator = RewardEvaluator::for_split(&normalized, tree, reward)?;
    Ok(PreparedData {
        normalization: kind,
        split: normalized,
        evaluator: Arc::new(evaluator),
    })
}

pub fn load_and_split(cfg: &ExperimentConfig) -> Result<(Dataset, SplitDataset)> {
    let ds = load_csv(&cfg.data_path, &cfg.label_column, &cfg.positive_label)?;
    let split = stratified_split(&ds, cfg.split_ratio, cfg.split_seed)?;
    Ok((ds, split))
}

/// Relative location of one run's files.
pub fn run_dir(normalization: &str, algorithm: &str, seed: u64) -> PathBuf {
    PathBuf::from(normalization)
        .join(algorithm)
        .join(seed.to_string())
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub report: RunReport,
    pub traces: Vec<EpisodeTrace>,
}

/// Trains one agent and evaluates its greedy subset. No files are written.
pub fn run_single(
    data: &PreparedData,
    agent: &AgentConfig,
) -> Result<RunOutput> {
    let env = FeatureSelectionEnv::new(&data.evaluator);
    let outcome = train(&env, agent)?;
    let selected = extract_policy(&outcome.q);
    let names = data.split.train.feature_names();
    let mut report = RunReport {
        algorithm: agent.algorithm.to_string(),
        normalization: data.normalization.to_string(),
        seed: agent.seed,
        status: RunStatus::Ok,
        selected: Some(selected.clone()),
        selected_names: selected.names(names).into_iter().map(str::to_owned).collect(),
        test_accuracy: None,
        confusion: None,
        greedy_reward: Some(data.evaluator.reward(&selected)?),
        trace_path: run_dir(data.normalization.as_str(), agent.algorithm.as_str(), agent.seed)
            .join("trace.csv")
            .to_string_lossy()
            .into_owned(),
        error: None,
    };
    match evaluate_policy(&selected, &data.split.train, &data.split.test, data.evaluator.tree_params()) {
        Ok(ev) => {
            report.test_accuracy = Some(ev.accuracy);
            report.confusion = Some(ev.confusion);
        }
        Err(Error::EmptySubset) => {
            report.status = RunStatus::EmptyPolicy;
            report.error = Some(Error::EmptySubset.to_string());
        }
        Err(e) => return Err(e),
    }
    Ok(RunOutput {
        report,
        traces: outcome.traces,
    })
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Writer::from_writer(file))
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

/// Header `episode,reward,epsilon,subset_bitstring`.
pub fn write_trace_csv(path: &Path, traces: &[EpisodeTrace]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["episode", "reward", "epsilon", "subset_bitstring"])?;
    for t in traces {
        w.write_record([
            t.episode.to_string(),
            t.reward.to_string(),
            t.epsilon.to_string(),
            t.subset.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_trace_csv(path: &Path) -> Result<Vec<EpisodeTrace>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let parse = |i: usize| -> Result<f64> {
            rec[i].parse().map_err(|_| Error::NonNumericCell {
                row: out.len(),
                column: ["episode", "reward", "epsilon"][i].to_owned(),
                value: rec[i].to_owned(),
            })
        };
        out.push(EpisodeTrace {
            episode: parse(0)? as usize,
            reward: parse(1)?,
            epsilon: parse(2)?,
            subset: rec[3].parse()?,
        });
    }
    Ok(out)
}

/// Trailing mean over `window` episodes; `None` before the window fills.
pub fn moving_average(values: &[f64], window: usize) -> Vec<Option<f64>> {
    if window == 0 {
        return vec![None; values.len()];
    }
    let mut sum = 0.0;
    values
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            sum += v;
            if i >= window {
                sum -= values[i - window];
            }
            (i + 1 >= window).then(|| sum / window as f64)
        })
        .collect()
}

/// Header `episode,reward,epsilon,moving_avg`. Returns false (and warns) when
/// the window never fills, leaving the moving-average column empty.
pub fn write_convergence_csv(path: &Path, traces: &[EpisodeTrace], window: usize) -> Result<bool> {
    let rewards: Vec<f64> = traces.iter().map(|t| t.reward).collect();
    let avg = moving_average(&rewards, window);
    let filled = window > 0 && window <= traces.len();
    if !filled {
        log::warn!(
            "moving-average window {window} exceeds {} episodes in {}; column left empty",
            traces.len(),
            path.display()
        );
    }
    let mut w = csv_writer(path)?;
    w.write_record(["episode", "reward", "epsilon", "moving_avg"])?;
    for (t, a) in traces.iter().zip(avg) {
        w.write_record([
            t.episode.to_string(),
            t.reward.to_string(),
            t.epsilon.to_string(),
            opt(a),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(filled)
}

/// Mean reward over one-based episodes `from..=to` (clamped to the trace).
pub fn mean_reward(traces: &[EpisodeTrace], from: usize, to: usize) -> f64 {
    let picked: Vec<f64> = traces
        .iter()
        .filter(|t| t.episode >= from && t.episode <= to)
        .map(|t| t.reward)
        .collect();
    picked.iter().sum::<f64>() / picked.len() as f64
}

/// One row per run.
pub fn write_summary_csv(path: &Path, reports: &[RunReport]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record([
        "algorithm",
        "normalization",
        "seed",
        "status",
        "accuracy",
        "tp",
        "fp",
        "tn",
        "fn",
        "subset",
        "selected_names",
        "greedy_reward",
    ])?;
    for r in reports {
        let cm = r.confusion;
        w.write_record([
            r.algorithm.clone(),
            r.normalization.clone(),
            r.seed.to_string(),
            r.status.as_str().to_owned(),
            opt(r.test_accuracy),
            opt(cm.map(|c| c.tp)),
            opt(cm.map(|c| c.fp)),
            opt(cm.map(|c| c.tn)),
            opt(cm.map(|c| c.fn_)),
            opt(r.selected.as_ref()),
            r.selected_names.join(";"),
            opt(r.greedy_reward),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Aggregate over the seeds of one (normalization, algorithm) cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellSummary {
    pub normalization: String,
    pub algorithm: String,
    pub runs: usize,
    pub ok_runs: usize,
    pub mean_accuracy: Option<f64>,
    pub std_accuracy: Option<f64>,
    pub min_accuracy: Option<f64>,
    pub max_accuracy: Option<f64>,
    pub fn_zero_runs: usize,
    pub confusion_total: ConfusionMatrix,
}

/// Cells in first-appearance order of `reports`.
pub fn summarize_cells(reports: &[RunReport]) -> Vec<CellSummary> {
    let mut keys: Vec<(String, String)> = Vec::new();
    for r in reports {
        let k = (r.normalization.clone(), r.algorithm.clone());
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    keys.into_iter()
        .map(|(norm, algo)| {
            let cell: Vec<&RunReport> = reports
                .iter()
                .filter(|r| r.normalization == norm && r.algorithm == algo)
                .collect();
            let accs: Vec<f64> = cell.iter().filter_map(|r| r.test_accuracy).collect();
            let n = accs.len() as f64;
            let mean = (!accs.is_empty()).then(|| accs.iter().sum::<f64>() / n);
            let std = mean.map(|m| (accs.iter().map(|a| (a - m).powi(2)).sum::<f64>() / n).sqrt());
            CellSummary {
                runs: cell.len(),
                ok_runs: cell.iter().filter(|r| r.is_ok()).count(),
                mean_accuracy: mean,
                std_accuracy: std,
                min_accuracy: accs.iter().copied().reduce(f64::min),
                max_accuracy: accs.iter().copied().reduce(f64::max),
                fn_zero_runs: cell
                    .iter()
                    .filter(|r| r.confusion.is_some_and(|c| c.fn_ == 0))
                    .count(),
                confusion_total: cell
                    .iter()
                    .filter_map(|r| r.confusion)
                    .fold(ConfusionMatrix::default(), |a, b| a + b),
                normalization: norm,
                algorithm: algo,
            }
        })
        .collect()
}

pub fn write_accuracy_summary(path: &Path, cells: &[CellSummary]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record([
        "normalization",
        "algorithm",
        "runs",
        "ok_runs",
        "mean_accuracy",
        "std_accuracy",
        "min_accuracy",
        "max_accuracy",
        "fn_zero_runs",
    ])?;
    for c in cells {
        w.write_record([
            c.normalization.clone(),
            c.algorithm.clone(),
            c.runs.to_string(),
            c.ok_runs.to_string(),
            opt(c.mean_accuracy),
            opt(c.std_accuracy),
            opt(c.min_accuracy),
            opt(c.max_accuracy),
            c.fn_zero_runs.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Confusion counts summed over successful runs, plus per-run means.
pub fn write_confusion_table(path: &Path, cells: &[CellSummary]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record([
        "normalization",
        "algorithm",
        "evaluated_runs",
        "tp",
        "fp",
        "tn",
        "fn",
        "mean_tp",
        "mean_fp",
        "mean_tn",
        "mean_fn",
    ])?;
    for c in cells {
        let cm = c.confusion_total;
        let evaluated = c.ok_runs;
        let mean = |v: usize| opt((evaluated > 0).then(|| v as f64 / evaluated as f64));
        w.write_record([
            c.normalization.clone(),
            c.algorithm.clone(),
            evaluated.to_string(),
            cm.tp.to_string(),
            cm.fp.to_string(),
            cm.tn.to_string(),
            cm.fn_.to_string(),
            mean(cm.tp),
            mean(cm.fp),
            mean(cm.tn),
            mean(cm.fn_),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes the grid-level tables: `summary.csv`, `accuracy_summary.csv` and
/// `confusion.csv`.
pub fn write_aggregates(output_dir: &Path, reports: &[RunReport]) -> Result<Vec<CellSummary>> {
    create_dir(output_dir)?;
    write_summary_csv(&output_dir.join("summary.csv"), reports)?;
    let cells = summarize_cells(reports);
    write_accuracy_summary(&output_dir.join("accuracy_summary.csv"), &cells)?;
    write_confusion_table(&output_dir.join("confusion.csv"), &cells)?;
    Ok(cells)
}

/// Plot-ready data: a convergence file per run with traces, and the
/// cell-level confusion and accuracy tables.
pub fn emit_plot_data(
    output_dir: &Path,
    reports: &[RunReport],
    traces: &[(RunReport, Vec<EpisodeTrace>)],
    window: usize,
) -> Result<()> {
    if reports.is_empty() {
        return Err(Error::InvalidConfig("no reports to plot".into()));
    }
    for (report, trace) in traces {
        let dir = output_dir.join(run_dir(&report.normalization, &report.algorithm, report.seed));
        create_dir(&dir)?;
        write_convergence_csv(&dir.join("convergence.csv"), trace, window)?;
    }
    let cells = summarize_cells(reports);
    write_accuracy_summary(&output_dir.join("accuracy_summary.csv"), &cells)?;
    write_confusion_table(&output_dir.join("confusion.csv"), &cells)
}

fn write_run_files(output_dir: &Path, out: &RunOutput, window: usize) -> Result<()> {
    let r = &out.report;
    let dir = output_dir.join(run_dir(&r.normalization, &r.algorithm, r.seed));
    create_dir(&dir)?;
    if !out.traces.is_empty() || r.status != RunStatus::Failed {
        write_trace_csv(&dir.join("trace.csv"), &out.traces)?;
        write_convergence_csv(&dir.join("convergence.csv"), &out.traces, window)?;
    }
    write_file(&dir.join("report.json"), serde_json::to_string_pretty(r)? + "\n")
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridOutcome {
    pub reports: Vec<RunReport>,
    pub cells: Vec<CellSummary>,
}

impl GridOutcome {
    pub fn all_ok(&self) -> bool {
        self.reports.iter().all(RunReport::is_ok)
    }
}

/// Runs every (normalization, algorithm, seed) cell, writing per-run files
/// as cells finish and the aggregate tables after all of them have joined.
/// A failing cell is recorded in its report; the rest of the grid proceeds.
pub fn run_grid(cfg: &ExperimentConfig) -> Result<GridOutcome> {
    cfg.validate()?;
    let (_, split) = load_and_split(cfg)?;
    create_dir(&cfg.output_dir)?;

    let prepared: Vec<(NormalizationKind, Result<Arc<PreparedData>>)> = cfg
        .normalizations
        .iter()
        .map(|&kind| {
            let p = prepare(&split, kind, cfg.tree, cfg.reward).map(Arc::new);
            (kind, p)
        })
        .collect();

    let mut cells = Vec::new();
    for (kind, data) in &prepared {
        for &algorithm in &cfg.algorithms {
            for &seed in &cfg.seeds {
                cells.push((*kind, data, algorithm, seed));
            }
        }
    }

    let run_cell = |(kind, data, algorithm, seed): &(
        NormalizationKind,
        &Result<Arc<PreparedData>>,
        Algorithm,
        u64,
    )|
     -> RunReport {
        let agent = AgentConfig {
            algorithm: *algorithm,
            seed: *seed,
            ..cfg.agent
        };
        let result = match data {
            Ok(data) => run_single(data, &agent),
            Err(e) => Err(Error::InvalidConfig(format!("normalization {kind} failed: {e}"))),
        };
        let out = result.unwrap_or_else(|e| {
            log::error!("run {kind}/{algorithm}/{seed} failed: {e}");
            RunOutput {
                report: RunReport::failed(algorithm.as_str(), kind.as_str(), *seed, &e),
                traces: Vec::new(),
            }
        });
        if let Err(e) = write_run_files(&cfg.output_dir, &out, cfg.moving_average_window) {
            log::error!("writing outputs for {kind}/{algorithm}/{seed} failed: {e}");
            return RunReport::failed(algorithm.as_str(), kind.as_str(), *seed, &e);
        }
        out.report
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    let mut reports: Vec<RunReport> = pool.install(|| cells.par_iter().map(run_cell).collect());
    // same order as `collect_reports`, so `report` rebuilds identical tables
    reports.sort_by(|a, b| {
        (&a.normalization, &a.algorithm, a.seed).cmp(&(&b.normalization, &b.algorithm, b.seed))
    });

    let cells = write_aggregates(&cfg.output_dir, &reports)?;
    write_run_metadata(&cfg.output_dir, cfg, &reports)?;
    Ok(GridOutcome { reports, cells })
}

fn write_run_metadata(output_dir: &Path, cfg: &ExperimentConfig, reports: &[RunReport]) -> Result<()> {
    let finished = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let meta = serde_json::json!({
        "finished_unix_seconds": finished,
        "runs": reports.len(),
        "failed_runs": reports.iter().filter(|r| !r.is_ok()).count(),
        "config": cfg,
    });
    write_file(
        &output_dir.join("run_metadata.json"),
        serde_json::to_string_pretty(&meta)? + "\n",
    )
}

/// Loads every `<norm>/<algorithm>/<seed>/report.json` under `output_dir`,
/// ordered by path.
pub fn collect_reports(output_dir: &Path) -> Result<Vec<RunReport>> {
    let mut paths = Vec::new();
    let list = |p: &Path| -> Result<Vec<PathBuf>> {
        let mut v: Vec<PathBuf> = fs::read_dir(p)
            .map_err(|e| Error::io(p, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_dir())
            .collect();
        v.sort();
        Ok(v)
    };
    for norm in list(output_dir)? {
        for algo in list(&norm)? {
            let mut seeds = list(&algo)?;
            seeds.sort_by_key(|p| {
                p.file_name()
                    .and_then(|n| n.to_str())
                    .and_then(|n| n.parse::<u64>().ok())
                    .unwrap_or(u64::MAX)
            });
            for seed in seeds {
                let report = seed.join("report.json");
                if report.is_file() {
                    paths.push(report);
                }
            }
        }
    }
    paths
        .iter()
        .map(|p| {
            let text = fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            Ok(serde_json::from_str(&text)?)
        })
        .collect()
}

/// Re-aggregates an existing output directory and refreshes convergence files
/// from the stored traces.
pub fn report(output_dir: &Path, window: usize) -> Result<GridOutcome> {
    let reports = collect_reports(output_dir)?;
    if reports.is_empty() {
        return Err(Error::InvalidConfig(format!(
            "no run reports found under {}",
            output_dir.display()
        )));
    }
    let mut traces = Vec::new();
    for r in &reports {
        let path = output_dir.join(run_dir(&r.normalization, &r.algorithm, r.seed)).join("trace.csv");
        if path.is_file() {
            traces.push((r.clone(), read_trace_csv(&path)?));
        }
    }
    emit_plot_data(output_dir, &reports, &traces, window)?;
    let cells = write_aggregates(output_dir, &reports)?;
    Ok(GridOutcome { reports, cells })
}
