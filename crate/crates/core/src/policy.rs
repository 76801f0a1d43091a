//! Greedy policy extraction and end-to-end evaluation of the chosen subset.

use serde::{Deserialize, Serialize};

use crate::agents::QTable;
use crate::classifier::{ConfusionMatrix, TreeParams};
use crate::dataset::Dataset;
use crate::env::{subset_confusion, Action, FeatureSelectionEnv, FeatureSubset};
use crate::error::{Error, Result};

/// Feature `i` is selected iff `Q[i][Select] > Q[i][Exclude]`.
pub fn extract_policy(q: &QTable) -> FeatureSubset {
    FeatureSubset::from_mask(
        (0..q.n_states())
            .map(|s| q.greedy(s) == Action::Select)
            .collect(),
    )
}

/// Plays one greedy episode in `env` and returns the mask it ends with.
/// Matches [`extract_policy`] since the chain visits every state once.
pub fn greedy_rollout(q: &QTable, env: &FeatureSelectionEnv<'_>) -> Result<FeatureSubset> {
    let mut state = env.reset();
    while !state.is_terminal() {
        let action = q.greedy(state.index());
        state = env.step(&state, action)?.0;
    }
    Ok(state.partial_mask().clone())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolicyEvaluation {
    pub accuracy: f64,
    pub confusion: ConfusionMatrix,
}

pub fn evaluate_policy(
    subset: &FeatureSubset,
    train: &Dataset,
    test: &Dataset,
    tree_params: TreeParams,
) -> Result<PolicyEvaluation> {
    if subset.selects_none() {
        return Err(Error::EmptySubset);
    }
    let confusion = subset_confusion(subset, train, test, tree_params)?;
    Ok(PolicyEvaluation {
        accuracy: confusion.accuracy(),
        confusion,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Ok,
    /// The learned policy selected no features; nothing to classify with.
    EmptyPolicy,
    Failed,
}

impl RunStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            RunStatus::Ok => "ok",
            RunStatus::EmptyPolicy => "empty_policy",
            RunStatus::Failed => "failed",
        }
    }
}

/// Outcome of one (algorithm, normalization, seed) run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub algorithm: String,
    pub normalization: String,
    pub seed: u64,
    pub status: RunStatus,
    pub selected: Option<FeatureSubset>,
    pub selected_names: Vec<String>,
    pub test_accuracy: Option<f64>,
    pub confusion: Option<ConfusionMatrix>,
    pub greedy_reward: Option<f64>,
    pub trace_path: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl RunReport {
    pub fn failed(
        algorithm: impl Into<String>,
        normalization: impl Into<String>,
        seed: u64,
        error: &Error,
    ) -> RunReport {
        RunReport {
            algorithm: algorithm.into(),
            normalization: normalization.into(),
            seed,
            status: RunStatus::Failed,
            selected: None,
            selected_names: Vec::new(),
            test_accuracy: None,
            confusion: None,
            greedy_reward: None,
            trace_path: String::new(),
            error: Some(error.to_string()),
        }
    }

    pub fn is_ok(&self) -> bool {
        self.status == RunStatus::Ok
    }
}
