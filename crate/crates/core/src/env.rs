//! The feature-selection MDP.
//!
//! States are feature indices `0..d`, visited in order; at each one the agent
//! either selects or excludes the feature. After `d` decisions the episode is
//! over and the completed mask is scored by fitting a decision tree on the
//! selected columns.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::RwLock;

use serde::{Deserialize, Serialize};

use crate::classifier::{ConfusionMatrix, DecisionTree, TreeParams};
use crate::dataset::{stratified_split, Dataset, SplitDataset};
use crate::error::{Error, Result};

/// Fraction of the training set carved off as the in-loop holdout.
pub const HOLDOUT_FRACTION: f64 = 0.2;

/// Bitmask over `d` features. Displayed as a bitstring with feature 0 first.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct FeatureSubset {
    mask: Vec<bool>,
}

impl FeatureSubset {
    pub fn empty(d: usize) -> Self {
        FeatureSubset {
            mask: vec![false; d],
        }
    }

    pub fn full(d: usize) -> Self {
        FeatureSubset { mask: vec![true; d] }
    }

    pub fn from_mask(mask: Vec<bool>) -> Self {
        FeatureSubset { mask }
    }

    /// Bit `i` of `value` selects feature `i`.
    pub fn from_value(value: u64, d: usize) -> Self {
        FeatureSubset {
            mask: (0..d).map(|i| value >> i & 1 == 1).collect(),
        }
    }

    pub fn from_indices(indices: &[usize], d: usize) -> Self {
        let mut s = Self::empty(d);
        for &i in indices {
            s.mask[i] = true;
        }
        s
    }

    /// Inverse of [`FeatureSubset::from_value`]; only meaningful for `d <= 64`.
    pub fn value(&self) -> u64 {
        self.mask
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .fold(0, |acc, (i, _)| acc | 1 << i)
    }

    pub fn len(&self) -> usize {
        self.mask.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mask.is_empty()
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn contains(&self, feature: usize) -> bool {
        self.mask.get(feature).copied().unwrap_or(false)
    }

    pub fn set(&mut self, feature: usize, selected: bool) {
        self.mask[feature] = selected;
    }

    pub fn indices(&self) -> Vec<usize> {
        self.mask
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
            .collect()
    }

    pub fn count(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }

    pub fn selects_none(&self) -> bool {
        self.count() == 0
    }

    pub fn selects_all(&self) -> bool {
        self.count() == self.len()
    }

    /// Neither empty nor full; the other two draw the punishment.
    pub fn is_valid(&self) -> bool {
        !self.selects_none() && !self.selects_all()
    }

    pub fn names<'a>(&self, feature_names: &'a [String]) -> Vec<&'a str> {
        self.indices()
            .into_iter()
            .filter_map(|i| feature_names.get(i).map(String::as_str))
            .collect()
    }
}

impl fmt::Display for FeatureSubset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.mask {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for FeatureSubset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(Error::UnknownVariant {
                    kind: "subset bitstring",
                    value: s.to_owned(),
                }),
            })
            .collect::<Result<Vec<_>>>()
            .map(FeatureSubset::from_mask)
    }
}

impl TryFrom<String> for FeatureSubset {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<FeatureSubset> for String {
    fn from(s: FeatureSubset) -> String {
        s.to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[repr(u8)]
pub enum Action {
    Exclude = 0,
    Select = 1,
}

impl Action {
    pub const ALL: [Action; 2] = [Action::Exclude, Action::Select];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Action {
        if i == 0 {
            Action::Exclude
        } else {
            Action::Select
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EnvState {
    index: usize,
    partial: FeatureSubset,
}

impl EnvState {
    pub fn index(&self) -> usize {
        self.index
    }

    /// Decisions made so far; bits at positions `>= index` are unset.
    pub fn partial_mask(&self) -> &FeatureSubset {
        &self.partial
    }

    pub fn is_terminal(&self) -> bool {
        self.index == self.partial.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RewardSplit {
    Test,
    Train,
    Holdout,
}

impl FromStr for RewardSplit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "test" => Ok(Self::Test),
            "train" => Ok(Self::Train),
            "holdout" => Ok(Self::Holdout),
            _ => Err(Error::UnknownVariant {
                kind: "reward split",
                value: s.to_owned(),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardMode {
    /// Zero reward until the last decision, then the score of the full mask.
    Terminal,
    /// Every step is scored on the partial mask.
    PerStep,
}

impl FromStr for RewardMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "terminal" => Ok(Self::Terminal),
            "per_step" => Ok(Self::PerStep),
            _ => Err(Error::UnknownVariant {
                kind: "reward mode",
                value: s.to_owned(),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardConfig {
    pub threshold: f64,
    pub bonus_factor: f64,
    pub punishment: f64,
    pub reward_split: RewardSplit,
    pub reward_mode: RewardMode,
}

impl Default for RewardConfig {
    fn default() -> Self {
        RewardConfig {
            threshold: 0.7,
            bonus_factor: 2.0,
            punishment: 0.8,
            reward_split: RewardSplit::Test,
            reward_mode: RewardMode::Terminal,
        }
    }
}

impl RewardConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::InvalidConfig("reward threshold must be in (0, 1)".into()));
        }
        if self.punishment.is_nan() || self.punishment < 0.0 {
            return Err(Error::InvalidConfig("punishment must be non-negative".into()));
        }
        if self.bonus_factor.is_nan() || self.bonus_factor < 1.0 {
            return Err(Error::InvalidConfig("bonus factor must be at least 1".into()));
        }
        Ok(())
    }

    /// Bonus first, then punishment for an empty or full subset.
    pub fn shape(&self, accuracy: f64, subset: &FeatureSubset) -> f64 {
        let mut reward = accuracy;
        if accuracy > self.threshold {
            reward *= self.bonus_factor;
        }
        if !subset.is_valid() {
            reward -= self.punishment;
        }
        reward
    }
}

fn check_alignment(subset: &FeatureSubset, train: &Dataset, eval_set: &Dataset) -> Result<()> {
    for d in [train.n_features(), eval_set.n_features()] {
        if subset.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: subset.len(),
            });
        }
    }
    Ok(())
}

/// Fits a tree on the subset's columns of `train` and scores it on `eval_set`.
pub fn subset_confusion(
    subset: &FeatureSubset,
    train: &Dataset,
    eval_set: &Dataset,
    tree_params: TreeParams,
) -> Result<ConfusionMatrix> {
    check_alignment(subset, train, eval_set)?;
    if subset.selects_none() {
        return Err(Error::EmptySubset);
    }
    let cols = subset.indices();
    let fit_on = train.select_features(&cols)?;
    let score_on = eval_set.select_features(&cols)?;
    let tree = DecisionTree::fit(fit_on.x(), fit_on.y(), tree_params)?;
    tree.evaluate(score_on.x(), score_on.y())
}

/// Accuracy behind the reward. With nothing selected no tree can be fit, so
/// the majority-class rate of `eval_set` stands in.
pub fn subset_accuracy(
    subset: &FeatureSubset,
    train: &Dataset,
    eval_set: &Dataset,
    tree_params: TreeParams,
) -> Result<f64> {
    check_alignment(subset, train, eval_set)?;
    if subset.selects_none() {
        return Ok(eval_set.majority_rate());
    }
    Ok(subset_confusion(subset, train, eval_set, tree_params)?.accuracy())
}

pub fn compute_reward(
    subset: &FeatureSubset,
    train: &Dataset,
    eval_set: &Dataset,
    tree_params: TreeParams,
    rc: &RewardConfig,
) -> Result<f64> {
    let accuracy = subset_accuracy(subset, train, eval_set, tree_params)?;
    Ok(rc.shape(accuracy, subset))
}

/// Reward source bound to one normalized split, with a memo of subset
/// accuracies. Safe to share between concurrent training runs.
#[derive(Debug)]
pub struct RewardEvaluator {
    train: Dataset,
    eval_set: Dataset,
    tree_params: TreeParams,
    config: RewardConfig,
    cache: RwLock<HashMap<FeatureSubset, f64>>,
}

impl RewardEvaluator {
    pub fn new(
        train: Dataset,
        eval_set: Dataset,
        tree_params: TreeParams,
        config: RewardConfig,
    ) -> Result<Self> {
        config.validate()?;
        tree_params.validate()?;
        if train.n_features() != eval_set.n_features() {
            return Err(Error::DimensionMismatch {
                expected: train.n_features(),
                found: eval_set.n_features(),
            });
        }
        Ok(RewardEvaluator {
            train,
            eval_set,
            tree_params,
            config,
            cache: RwLock::new(HashMap::new()),
        })
    }

    /// Picks the fit/eval pair from `split` according to `config.reward_split`.
    /// The holdout variant carves a seeded stratified slice out of train.
    pub fn for_split(
        split: &SplitDataset,
        tree_params: TreeParams,
        config: RewardConfig,
    ) -> Result<Self> {
        let (fit_on, score_on) = match config.reward_split {
            RewardSplit::Test => (split.train.clone(), split.test.clone()),
            RewardSplit::Train => (split.train.clone(), split.train.clone()),
            RewardSplit::Holdout => {
                let inner = stratified_split(&split.train, 1.0 - HOLDOUT_FRACTION, split.seed)?;
                (inner.train, inner.test)
            }
        };
        Self::new(fit_on, score_on, tree_params, config)
    }

    pub fn n_features(&self) -> usize {
        self.train.n_features()
    }

    pub fn config(&self) -> &RewardConfig {
        &self.config
    }

    pub fn tree_params(&self) -> TreeParams {
        self.tree_params
    }

    pub fn train(&self) -> &Dataset {
        &self.train
    }

    pub fn eval_set(&self) -> &Dataset {
        &self.eval_set
    }

    pub fn accuracy(&self, subset: &FeatureSubset) -> Result<f64> {
        if let Some(&acc) = self.cache.read().expect("reward cache poisoned").get(subset) {
            return Ok(acc);
        }
        let acc = subset_accuracy(subset, &self.train, &self.eval_set, self.tree_params)?;
        self.cache
            .write()
            .expect("reward cache poisoned")
            .insert(subset.clone(), acc);
        Ok(acc)
    }

    pub fn reward(&self, subset: &FeatureSubset) -> Result<f64> {
        Ok(self.config.shape(self.accuracy(subset)?, subset))
    }

    pub fn cached_subsets(&self) -> usize {
        self.cache.read().expect("reward cache poisoned").len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub next: EnvState,
    pub reward: f64,
    pub done: bool,
}

/// Deterministic chain environment over the evaluator's features.
#[derive(Debug, Clone, Copy)]
pub struct FeatureSelectionEnv<'a> {
    evaluator: &'a RewardEvaluator,
}

impl<'a> FeatureSelectionEnv<'a> {
    pub fn new(evaluator: &'a RewardEvaluator) -> Self {
        FeatureSelectionEnv { evaluator }
    }

    pub fn n_features(&self) -> usize {
        self.evaluator.n_features()
    }

    pub fn evaluator(&self) -> &'a RewardEvaluator {
        self.evaluator
    }

    pub fn reset(&self) -> EnvState {
        EnvState {
            index: 0,
            partial: FeatureSubset::empty(self.n_features()),
        }
    }

    pub fn step(&self, state: &EnvState, action: Action) -> Result<(EnvState, bool)> {
        if state.is_terminal() {
            return Err(Error::StepOnTerminal);
        }
        let mut partial = state.partial.clone();
        partial.set(state.index, action == Action::Select);
        let next = EnvState {
            index: state.index + 1,
            partial,
        };
        let done = next.is_terminal();
        Ok((next, done))
    }

    /// Reward for arriving in `next`.
    pub fn reward(&self, next: &EnvState) -> Result<f64> {
        match self.evaluator.config.reward_mode {
            RewardMode::Terminal if !next.is_terminal() => Ok(0.0),
            _ => self.evaluator.reward(&next.partial),
        }
    }

    pub fn act(&self, state: &EnvState, action: Action) -> Result<Transition> {
        let (next, done) = self.step(state, action)?;
        let reward = self.reward(&next)?;
        Ok(Transition { next, reward, done })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Matrix;

    fn toy() -> (Dataset, Dataset) {
        // feature 0 separates; feature 1 is constant
        let rows: Vec<[f64; 2]> = (0..8).map(|i| [i as f64, 1.0]).collect();
        let y: Vec<u8> = (0..8).map(|i| u8::from(i >= 4)).collect();
        let names = vec!["a".to_string(), "b".to_string()];
        let train = Dataset::new(names.clone(), Matrix::from_rows(&rows).unwrap(), y).unwrap();
        let test_rows: Vec<[f64; 2]> = vec![[0.5, 1.0], [6.5, 1.0], [1.0, 1.0]];
        let test = Dataset::new(names, Matrix::from_rows(&test_rows).unwrap(), vec![0, 1, 0]).unwrap();
        (train, test)
    }

    fn evaluator() -> RewardEvaluator {
        let (train, test) = toy();
        RewardEvaluator::new(train, test, TreeParams::default(), RewardConfig::default()).unwrap()
    }

    #[test]
    fn reward_shaping_rules() {
        let rc = RewardConfig::default();
        let valid = FeatureSubset::from_indices(&[0], 9);
        assert_eq!(rc.shape(0.75, &valid), 1.5);
        assert_eq!(rc.shape(0.60, &valid), 0.6);
        assert_eq!(rc.shape(0.70, &valid), 0.7);
        assert!((rc.shape(0.75, &FeatureSubset::full(9)) - 0.7).abs() < 1e-12);
    }

    #[test]
    fn empty_subset_uses_majority_rate() {
        let rows: Vec<[f64; 1]> = (0..12).map(|i| [i as f64]).collect();
        let y: Vec<u8> = (0..12).map(|i| u8::from(i < 5)).collect();
        let eval_set =
            Dataset::new(vec!["a".into()], Matrix::from_rows(&rows).unwrap(), y).unwrap();
        let r = compute_reward(
            &FeatureSubset::empty(1),
            &eval_set,
            &eval_set,
            TreeParams::default(),
            &RewardConfig::default(),
        )
        .unwrap();
        assert!((r - (7.0 / 12.0 - 0.8)).abs() < 1e-12);
    }

    #[test]
    fn evaluator_matches_free_function_and_caches() {
        let ev = evaluator();
        let (train, test) = toy();
        for v in 0..4 {
            let s = FeatureSubset::from_value(v, 2);
            let direct =
                compute_reward(&s, &train, &test, TreeParams::default(), &RewardConfig::default())
                    .unwrap();
            assert_eq!(ev.reward(&s).unwrap(), direct);
            assert_eq!(ev.reward(&s).unwrap(), direct);
        }
        assert_eq!(ev.cached_subsets(), 4);
        assert_eq!(ev.reward(&FeatureSubset::from_indices(&[0], 2)).unwrap(), 2.0);
    }

    #[test]
    fn dimension_mismatch() {
        let ev = evaluator();
        assert!(matches!(
            ev.reward(&FeatureSubset::full(3)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn reset_and_step() {
        let ev = evaluator();
        let env = FeatureSelectionEnv::new(&ev);
        let s0 = env.reset();
        assert_eq!(s0, env.reset());
        assert_eq!(s0.index(), 0);
        assert!(!s0.is_terminal());
        let (s1, done) = env.step(&s0, Action::Select).unwrap();
        assert_eq!(s1.index(), 1);
        assert!(!done);
        assert_eq!(s1.partial_mask().to_string(), "10");
        assert_eq!(env.reward(&s1).unwrap(), 0.0);
        let t = env.act(&s1, Action::Exclude).unwrap();
        assert!(t.done);
        assert_eq!(t.reward, 2.0);
        assert!(matches!(env.step(&t.next, Action::Select), Err(Error::StepOnTerminal)));
    }

    #[test]
    fn per_step_mode_scores_partial_masks() {
        let (train, test) = toy();
        let rc = RewardConfig {
            reward_mode: RewardMode::PerStep,
            ..Default::default()
        };
        let ev = RewardEvaluator::new(train, test, TreeParams::default(), rc).unwrap();
        let env = FeatureSelectionEnv::new(&ev);
        let t = env.act(&env.reset(), Action::Select).unwrap();
        assert_eq!(t.reward, 2.0);
    }

    #[test]
    fn bitstrings() {
        let s: FeatureSubset = "0101".parse().unwrap();
        assert_eq!(s.indices(), vec![1, 3]);
        assert_eq!(s.value(), 0b1010);
        assert_eq!(FeatureSubset::from_value(0b1010, 4), s);
        assert!(s.is_valid());
        assert!(!FeatureSubset::full(4).is_valid());
        assert!(!FeatureSubset::empty(4).is_valid());
        assert!("01x".parse::<FeatureSubset>().is_err());
        assert_eq!(serde_json::to_string(&s).unwrap(), "\"0101\"");
    }

    #[test]
    fn config_validation() {
        assert!(RewardConfig::default().validate().is_ok());
        for bad in [
            RewardConfig { threshold: 1.0, ..Default::default() },
            RewardConfig { punishment: -0.1, ..Default::default() },
            RewardConfig { bonus_factor: 0.5, ..Default::default() },
        ] {
            assert!(bad.validate().is_err());
        }
    }
}
