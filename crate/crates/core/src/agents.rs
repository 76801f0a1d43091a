//! Tabular Q-learning and SARSA over the feature-selection chain.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::env::{Action, FeatureSelectionEnv, FeatureSubset};
use crate::error::{Error, Result};

/// `d × 2` action values, indexed `[state][action]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QTable {
    values: Vec<[f64; 2]>,
}

impl QTable {
    pub fn zeros(n_states: usize) -> Self {
        QTable {
            values: vec![[0.0; 2]; n_states],
        }
    }

    pub fn from_rows(values: Vec<[f64; 2]>) -> Self {
        QTable { values }
    }

    pub fn n_states(&self) -> usize {
        self.values.len()
    }

    pub fn rows(&self) -> &[[f64; 2]] {
        &self.values
    }

    pub fn get(&self, state: usize, action: Action) -> f64 {
        self.values[state][action.index()]
    }

    pub fn row(&self, state: usize) -> [f64; 2] {
        self.values[state]
    }

    pub fn max(&self, state: usize) -> f64 {
        let [e, s] = self.values[state];
        e.max(s)
    }

    /// Greedy action; ties go to [`Action::Exclude`].
    pub fn greedy(&self, state: usize) -> Action {
        let [e, s] = self.values[state];
        if s > e {
            Action::Select
        } else {
            Action::Exclude
        }
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().flatten().all(|v| v.is_finite())
    }

    fn check(&self, state: usize) -> Result<()> {
        if state >= self.values.len() {
            return Err(Error::IndexOutOfRange {
                index: state,
                len: self.values.len(),
            });
        }
        Ok(())
    }
}

fn blend(current: f64, target: f64, alpha: f64) -> f64 {
    (1.0 - alpha) * current + alpha * target
}

/// `Q(s,a) ← (1−α)·Q(s,a) + α·(r + γ·max_a' Q(s',a'))`, with the bootstrap
/// term zero when `next` is `None` (terminal).
pub fn q_learning_update(
    q: &mut QTable,
    state: usize,
    action: Action,
    reward: f64,
    next: Option<usize>,
    alpha: f64,
    gamma: f64,
) -> Result<()> {
    q.check(state)?;
    let bootstrap = match next {
        Some(s) => {
            q.check(s)?;
            q.max(s)
        }
        None => 0.0,
    };
    let cell = &mut q.values[state][action.index()];
    *cell = blend(*cell, reward + gamma * bootstrap, alpha);
    Ok(())
}

/// `Q(s,a) ← (1−α)·Q(s,a) + α·(r + γ·Q(s',a'))` using the action actually
/// chosen in `s'`. `next_action` is required whenever `next` is non-terminal.
#[allow(clippy::too_many_arguments)]
pub fn sarsa_update(
    q: &mut QTable,
    state: usize,
    action: Action,
    reward: f64,
    next: Option<usize>,
    next_action: Option<Action>,
    alpha: f64,
    gamma: f64,
) -> Result<()> {
    q.check(state)?;
    let bootstrap = match next {
        Some(s) => {
            q.check(s)?;
            q.get(s, next_action.ok_or(Error::MissingNextAction)?)
        }
        None => 0.0,
    };
    let cell = &mut q.values[state][action.index()];
    *cell = blend(*cell, reward + gamma * bootstrap, alpha);
    Ok(())
}

/// ε-greedy: one uniform draw decides explore vs exploit, a second picks the
/// random action when exploring.
pub fn select_action<R: Rng + ?Sized>(q: &QTable, state: usize, epsilon: f64, rng: &mut R) -> Action {
    if rng.gen::<f64>() < epsilon {
        Action::from_index(rng.gen_range(0..2))
    } else {
        q.greedy(state)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    QLearning,
    Sarsa,
}

impl Algorithm {
    pub const ALL: [Algorithm; 2] = [Algorithm::QLearning, Algorithm::Sarsa];

    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::QLearning => "qlearning",
            Algorithm::Sarsa => "sarsa",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "qlearning" | "ql" => Ok(Algorithm::QLearning),
            "sarsa" => Ok(Algorithm::Sarsa),
            _ => Err(Error::UnknownVariant {
                kind: "algorithm",
                value: s.to_owned(),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentConfig {
    pub algorithm: Algorithm,
    pub alpha: f64,
    pub gamma: f64,
    pub episodes: usize,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    pub seed: u64,
}

impl Default for AgentConfig {
    fn default() -> Self {
        AgentConfig {
            algorithm: Algorithm::QLearning,
            alpha: 0.03,
            gamma: 1.0,
            episodes: 1000,
            epsilon_start: 1.0,
            epsilon_end: 0.01,
            seed: 0,
        }
    }
}

impl AgentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_owned()));
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return bad("alpha must be in (0, 1]");
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return bad("gamma must be in [0, 1]");
        }
        if !(0.0..=1.0).contains(&self.epsilon_start) || !(0.0..=1.0).contains(&self.epsilon_end) {
            return bad("epsilon bounds must be in [0, 1]");
        }
        if self.epsilon_end > self.epsilon_start {
            return bad("epsilon_end must not exceed epsilon_start");
        }
        Ok(())
    }

    /// Exponential decay hitting `epsilon_end` exactly on the last episode.
    /// `episode` is zero-based.
    pub fn epsilon(&self, episode: usize) -> f64 {
        if self.episodes <= 1 || self.epsilon_start == 0.0 || episode == 0 {
            return self.epsilon_start;
        }
        if episode + 1 >= self.episodes {
            return self.epsilon_end;
        }
        let progress = episode as f64 / (self.episodes - 1) as f64;
        self.epsilon_start * (self.epsilon_end / self.epsilon_start).powf(progress)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeTrace {
    /// One-based.
    pub episode: usize,
    pub subset: FeatureSubset,
    /// Undiscounted episode return.
    pub reward: f64,
    pub epsilon: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub q: QTable,
    pub traces: Vec<EpisodeTrace>,
}

/// Runs `cfg.episodes` episodes with online updates. Only action selection
/// consumes randomness, from a generator seeded with `cfg.seed`.
pub fn train(env: &FeatureSelectionEnv<'_>, cfg: &AgentConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    let mut q = QTable::zeros(env.n_features());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut traces = Vec::with_capacity(cfg.episodes);
    for episode in 0..cfg.episodes {
        let epsilon = cfg.epsilon(episode);
        let mut state = env.reset();
        let mut ret = 0.0;
        match cfg.algorithm {
            Algorithm::QLearning => loop {
                let s = state.index();
                let a = select_action(&q, s, epsilon, &mut rng);
                let t = env.act(&state, a)?;
                ret += t.reward;
                let next = (!t.done).then(|| t.next.index());
                q_learning_update(&mut q, s, a, t.reward, next, cfg.alpha, cfg.gamma)?;
                state = t.next;
                if t.done {
                    break;
                }
            },
            Algorithm::Sarsa => {
                let mut a = select_action(&q, state.index(), epsilon, &mut rng);
                loop {
                    let s = state.index();
                    let t = env.act(&state, a)?;
                    ret += t.reward;
                    if t.done {
                        sarsa_update(&mut q, s, a, t.reward, None, None, cfg.alpha, cfg.gamma)?;
                        state = t.next;
                        break;
                    }
                    let a_next = select_action(&q, t.next.index(), epsilon, &mut rng);
                    let s_next = t.next.index();
                    sarsa_update(
                        &mut q,
                        s,
                        a,
                        t.reward,
                        Some(s_next),
                        Some(a_next),
                        cfg.alpha,
                        cfg.gamma,
                    )?;
                    state = t.next;
                    a = a_next;
                }
            }
        }
        traces.push(EpisodeTrace {
            episode: episode + 1,
            subset: state.partial_mask().clone(),
            reward: ret,
            epsilon,
        });
    }
    Ok(TrainOutcome { q, traces })
}
