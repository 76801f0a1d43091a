use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rlfs::classifier::TreeParams;
use rlfs::env::{RewardConfig, RewardMode, RewardSplit};
use rlfs::experiment::{self, resolve_config, ExperimentConfig, ExperimentOverrides};
use rlfs::oracle::exhaustive_search_with;
use rlfs::{Algorithm, NormalizationKind};

#[derive(Parser)]
#[command(name = "rlfs", version, about = "Reinforcement-learning feature selection for decision trees")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the normalization × algorithm × seed grid.
    Run(RunArgs),
    /// Score every feature subset and write the ranking as CSV.
    Oracle(OracleArgs),
    /// Re-aggregate the run directories under an output directory.
    Report(ReportArgs),
}

#[derive(Args, Default)]
struct DataArgs {
    /// CSV file with a header row.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    label_column: Option<String>,
    /// Label value mapped to the positive class.
    #[arg(long)]
    positive_label: Option<String>,
    /// Train fraction of the stratified split.
    #[arg(long)]
    split_ratio: Option<f64>,
    #[arg(long)]
    split_seed: Option<u64>,
}

#[derive(Args, Default)]
struct RewardArgs {
    #[arg(long)]
    reward_threshold: Option<f64>,
    #[arg(long)]
    bonus_factor: Option<f64>,
    #[arg(long)]
    punishment: Option<f64>,
    /// test, train or holdout
    #[arg(long)]
    reward_split: Option<RewardSplit>,
    /// terminal or per_step
    #[arg(long)]
    reward_mode: Option<RewardMode>,
    #[arg(long)]
    max_depth: Option<usize>,
    #[arg(long)]
    min_samples_split: Option<usize>,
}

#[derive(Args)]
struct RunArgs {
    /// TOML file with defaults; flags given here take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    reward: RewardArgs,
    #[arg(long, value_delimiter = ',')]
    normalizations: Option<Vec<NormalizationKind>>,
    #[arg(long, value_delimiter = ',')]
    algorithms: Option<Vec<Algorithm>>,
    /// Single-algorithm shorthand for --algorithms.
    #[arg(long, conflicts_with = "algorithms")]
    algorithm: Option<Algorithm>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    episodes: Option<usize>,
    #[arg(long)]
    epsilon_start: Option<f64>,
    #[arg(long)]
    epsilon_end: Option<f64>,
    /// Comma-separated agent seeds.
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    /// Single-seed shorthand for --seeds.
    #[arg(long, conflicts_with = "seeds")]
    seed: Option<u64>,
    /// Falls back to $RLFS_OUTPUT_DIR.
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Concurrent grid cells (0 = one per core).
    #[arg(long)]
    jobs: Option<usize>,
    /// Moving-average window for convergence files.
    #[arg(long)]
    window: Option<usize>,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    reward: RewardArgs,
    #[arg(long, default_value = "minmax")]
    normalization: NormalizationKind,
    /// Output CSV; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// Falls back to $RLFS_OUTPUT_DIR.
    #[arg(long)]
    output_dir: Option<PathBuf>,
    #[arg(long, default_value_t = 50)]
    window: usize,
}

fn overrides(data: DataArgs, reward: RewardArgs) -> ExperimentOverrides {
    ExperimentOverrides {
        data_path: data.data,
        label_column: data.label_column,
        positive_label: data.positive_label,
        split_ratio: data.split_ratio,
        split_seed: data.split_seed,
        reward_threshold: reward.reward_threshold,
        bonus_factor: reward.bonus_factor,
        punishment: reward.punishment,
        reward_split: reward.reward_split,
        reward_mode: reward.reward_mode,
        max_depth: reward.max_depth,
        min_samples_split: reward.min_samples_split,
        ..Default::default()
    }
}

fn load_config(
    path: Option<&PathBuf>,
    cli: ExperimentOverrides,
) -> rlfs::Result<ExperimentConfig> {
    let file = path
        .map(|p| ExperimentOverrides::from_toml_file(p))
        .transpose()?;
    Ok(resolve_config(file, cli))
}

fn run(args: RunArgs) -> rlfs::Result<ExitCode> {
    let cli = ExperimentOverrides {
        normalizations: args.normalizations,
        algorithms: args.algorithms.or(args.algorithm.map(|a| vec![a])),
        alpha: args.alpha,
        gamma: args.gamma,
        episodes: args.episodes,
        epsilon_start: args.epsilon_start,
        epsilon_end: args.epsilon_end,
        seeds: args.seeds.or(args.seed.map(|s| vec![s])),
        output_dir: args.output_dir,
        jobs: args.jobs,
        moving_average_window: args.window,
        ..overrides(args.data, args.reward)
    };
    let cfg = load_config(args.config.as_ref(), cli)?;
    let outcome = experiment::run_grid(&cfg)?;
    for cell in &outcome.cells {
        println!(
            "{:>6} {:>9}  runs={:<3} ok={:<3} mean_acc={}",
            cell.normalization,
            cell.algorithm,
            cell.runs,
            cell.ok_runs,
            cell.mean_accuracy
                .map_or("-".to_owned(), |a| format!("{a:.4}")),
        );
    }
    println!("summary: {}", cfg.output_dir.join("summary.csv").display());
    Ok(if outcome.all_ok() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    })
}

fn oracle(args: OracleArgs) -> rlfs::Result<ExitCode> {
    let cfg = load_config(args.config.as_ref(), overrides(args.data, args.reward))?;
    if cfg.data_path.as_os_str().is_empty() {
        return Err(rlfs::Error::InvalidConfig("no data path given".into()));
    }
    let reward: RewardConfig = cfg.reward;
    let tree: TreeParams = cfg.tree;
    let (_, split) = experiment::load_and_split(&cfg)?;
    let prepared = experiment::prepare(&split, args.normalization, tree, reward)?;
    let result = exhaustive_search_with(&prepared.evaluator)?;
    match args.output {
        Some(path) => {
            let file = fs::File::create(&path).map_err(|e| rlfs::Error::Io {
                path: path.clone(),
                source: e,
            })?;
            result.write_csv(file)?;
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            result.write_csv(&mut lock)?;
            let _ = lock.flush();
        }
    }
    if let Some(best) = &result.best_valid {
        eprintln!(
            "best valid subset {} accuracy={:.4} reward={:.4}",
            best.subset, best.accuracy, best.reward
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn report(args: ReportArgs) -> rlfs::Result<ExitCode> {
    let dir = args
        .output_dir
        .or_else(|| std::env::var_os(experiment::OUTPUT_DIR_ENV).map(PathBuf::from))
        .ok_or_else(|| rlfs::Error::InvalidConfig("no output directory given".into()))?;
    let outcome = experiment::report(&dir, args.window)?;
    println!(
        "re-aggregated {} runs into {}",
        outcome.reports.len(),
        dir.join("summary.csv").display()
    );
    Ok(if outcome.all_ok() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => run(a),
        Command::Oracle(a) => oracle(a),
        Command::Report(a) => report(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
