//! Exhaustive evaluation of every feature subset, used as ground truth for
//! judging what the agents find.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifier::TreeParams;
use crate::dataset::Dataset;
use crate::env::{FeatureSubset, RewardConfig, RewardEvaluator};
use crate::error::{Error, Result};

pub const MAX_ORACLE_FEATURES: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleEntry {
    pub subset: FeatureSubset,
    pub accuracy: f64,
    pub reward: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    /// All `2^d` subsets, reward descending, mask value ascending on ties.
    pub ranking: Vec<OracleEntry>,
    /// `None` only when `d < 2`, where every subset is empty or full.
    pub best_valid: Option<OracleEntry>,
}

impl OracleResult {
    pub fn n_features(&self) -> usize {
        self.ranking.first().map_or(0, |e| e.subset.len())
    }

    pub fn entry(&self, subset: &FeatureSubset) -> Option<&OracleEntry> {
        self.ranking.iter().find(|e| &e.subset == subset)
    }

    pub fn best_reward(&self) -> f64 {
        self.ranking.first().map_or(f64::NAN, |e| e.reward)
    }

    /// Columns `rank,subset,accuracy,reward,valid`; rank is one-based.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["rank", "subset", "accuracy", "reward", "valid"])?;
        for (i, e) in self.ranking.iter().enumerate() {
            w.write_record([
                (i + 1).to_string(),
                e.subset.to_string(),
                e.accuracy.to_string(),
                e.reward.to_string(),
                e.subset.is_valid().to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<oracle csv>", e))?;
        Ok(())
    }
}

/// Scores every subset through `evaluator`, filling its cache as a side effect.
pub fn exhaustive_search_with(evaluator: &RewardEvaluator) -> Result<OracleResult> {
    let d = evaluator.n_features();
    if d > MAX_ORACLE_FEATURES {
        return Err(Error::TooManyFeatures(d));
    }
    let mut ranking = (0..1u64 << d)
        .into_par_iter()
        .map(|value| {
            let subset = FeatureSubset::from_value(value, d);
            let accuracy = evaluator.accuracy(&subset)?;
            let reward = evaluator.config().shape(accuracy, &subset);
            Ok(OracleEntry {
                subset,
                accuracy,
                reward,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    ranking.sort_by(|a, b| {
        b.reward
            .total_cmp(&a.reward)
            .then(a.subset.value().cmp(&b.subset.value()))
    });
    let best_valid = ranking.iter().find(|e| e.subset.is_valid()).cloned();
    Ok(OracleResult {
        ranking,
        best_valid,
    })
}

pub fn exhaustive_search(
    train: &Dataset,
    eval_set: &Dataset,
    tree_params: TreeParams,
    rc: &RewardConfig,
) -> Result<OracleResult> {
    if train.n_features() > MAX_ORACLE_FEATURES {
        return Err(Error::TooManyFeatures(train.n_features()));
    }
    let evaluator = RewardEvaluator::new(train.clone(), eval_set.clone(), tree_params, *rc)?;
    exhaustive_search_with(&evaluator)
}

/// Fraction of all subsets whose reward is strictly below `subset`'s.
pub fn percentile_of(subset: &FeatureSubset, result: &OracleResult) -> Result<f64> {
    if subset.len() != result.n_features() {
        return Err(Error::DimensionMismatch {
            expected: result.n_features(),
            found: subset.len(),
        });
    }
    let reward = result
        .entry(subset)
        .ok_or(Error::DimensionMismatch {
            expected: result.n_features(),
            found: subset.len(),
        })?
        .reward;
    let below = result.ranking.iter().filter(|e| e.reward < reward).count();
    Ok(below as f64 / result.ranking.len() as f64)
}
