//! Wrapper feature selection driven by tabular reinforcement learning.
//!
//! An agent walks the features of a dataset one at a time, deciding to keep
//! or drop each. A CART decision tree trained on the kept columns scores the
//! finished subset, and that score (bonus above an accuracy threshold,
//! punishment for keeping all or nothing) is the reward. Q-learning and SARSA
//! learn the per-feature decisions; the greedy policy is the selected subset.
//!
//! [`oracle`] enumerates every subset so the agents' choices can be ranked
//! against the true optimum, and [`experiment`] runs the full grid of
//! normalizations, algorithms and seeds.

pub mod agents;
pub mod classifier;
pub mod dataset;
pub mod env;
pub mod error;
pub mod experiment;
pub mod normalize;
pub mod oracle;
pub mod policy;

pub use agents::{train, AgentConfig, Algorithm, EpisodeTrace, QTable, TrainOutcome};
pub use classifier::{ConfusionMatrix, DecisionTree, TreeParams};
pub use dataset::{load_csv, stratified_split, Dataset, Matrix, SplitDataset};
pub use env::{
    compute_reward, Action, EnvState, FeatureSelectionEnv, FeatureSubset, RewardConfig,
    RewardEvaluator, RewardMode, RewardSplit,
};
pub use error::{Error, Result};
pub use experiment::{run_grid, ExperimentConfig};
pub use normalize::{NormalizationKind, Normalizer};
pub use oracle::{exhaustive_search, percentile_of, OracleResult};
pub use policy::{evaluate_policy, extract_policy, RunReport, RunStatus};
