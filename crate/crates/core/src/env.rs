//! Episode environment over circuits: operators as actions, metric
//! reductions as rewards.

use crate::aig::{Aig, CircuitStats};
use crate::ops::{OpError, Registry};
use rand::Rng;
use serde::{Deserialize, Serialize};
use rustc_hash::FxHashMap;
use std::sync::{Arc, Mutex};
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RewardScheme {
    #[serde(rename = "area")]
    AreaFirst,
    #[serde(rename = "delay")]
    DelayFirst,
}

impl RewardScheme {
    pub const ALL: [RewardScheme; 2] = [RewardScheme::AreaFirst, RewardScheme::DelayFirst];

    pub fn metric(self, s: &CircuitStats) -> usize {
        match self {
            RewardScheme::AreaFirst => s.area(),
            RewardScheme::DelayFirst => s.delay(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            RewardScheme::AreaFirst => "area",
            RewardScheme::DelayFirst => "delay",
        }
    }

    pub fn from_name(s: &str) -> Option<RewardScheme> {
        RewardScheme::ALL.into_iter().find(|r| r.name() == s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FeatureKind {
    #[serde(rename = "random")]
    Random4D,
    #[serde(rename = "stats")]
    Statistics7D,
}

impl FeatureKind {
    pub const ALL: [FeatureKind; 2] = [FeatureKind::Random4D, FeatureKind::Statistics7D];

    pub fn dim(self) -> usize {
        match self {
            FeatureKind::Random4D => 4,
            FeatureKind::Statistics7D => 7,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            FeatureKind::Random4D => "random",
            FeatureKind::Statistics7D => "stats",
        }
    }

    pub fn from_name(s: &str) -> Option<FeatureKind> {
        FeatureKind::ALL.into_iter().find(|r| r.name() == s)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvConfig {
    pub horizon: usize,
    pub reward_scheme: RewardScheme,
    pub feature_kind: FeatureKind,
    /// Discount applied to reward-to-go; 1 keeps returns undiscounted.
    pub gamma: f64,
    pub action_space: Vec<String>,
}

impl Default for EnvConfig {
    fn default() -> Self {
        EnvConfig {
            horizon: 10,
            reward_scheme: RewardScheme::AreaFirst,
            feature_kind: FeatureKind::Random4D,
            gamma: 1.0,
            action_space: crate::ops::OperatorId::CORE.iter().map(|o| o.name().to_string()).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnvState {
    pub current: Aig,
    pub initial: CircuitStats,
    pub stats: CircuitStats,
    pub step_index: usize,
    pub features: Vec<f64>,
}

impl EnvState {
    pub fn initial_area(&self) -> usize {
        self.initial.area()
    }

    pub fn initial_delay(&self) -> usize {
        self.initial.delay()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub features_before: Vec<f64>,
    pub action: usize,
    pub reward: f64,
    pub features_after: Vec<f64>,
    pub done: bool,
    /// The initial metric was zero, so the reward was fixed at zero.
    pub degenerate: bool,
}

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("episode already reached its horizon")]
    EpisodeFinished,
    #[error("action {action} outside an action space of {size}")]
    InvalidAction { action: usize, size: usize },
    #[error("operator `{name}` failed: {source}")]
    Operator { name: String, source: OpError },
    #[error("invalid environment config: {0}")]
    Config(String),
}

/// Results of operator applications keyed by input fingerprint; entries
/// keep their input so hash collisions cannot leak wrong graphs.
#[derive(Default)]
struct Memo {
    map: FxHashMap<(u64, usize), Vec<(Aig, Aig)>>,
    len: usize,
    capacity: usize,
}

/// Stateless episode driver: every transition returns a fresh state.
#[derive(Clone)]
pub struct SynthEnv {
    config: EnvConfig,
    registry: Arc<Registry>,
    actions: Vec<usize>,
    memo: Option<Arc<Mutex<Memo>>>,
}

impl SynthEnv {
    pub fn new(config: EnvConfig, registry: Arc<Registry>) -> Result<SynthEnv, EnvError> {
        if config.horizon == 0 {
            return Err(EnvError::Config("horizon must be at least 1".into()));
        }
        if config.action_space.is_empty() {
            return Err(EnvError::Config("empty action space".into()));
        }
        let actions = config
            .action_space
            .iter()
            .map(|n| registry.index_of(n).ok_or_else(|| EnvError::Config(format!("unknown operator `{n}`"))))
            .collect::<Result<_, _>>()?;
        Ok(SynthEnv { config, registry, actions, memo: None })
    }

    /// Remembers up to `capacity` operator results. Operators are pure, so
    /// this changes running time only.
    pub fn with_memo(mut self, capacity: usize) -> SynthEnv {
        self.memo = Some(Arc::new(Mutex::new(Memo { capacity, ..Memo::default() })));
        self
    }

    /// Applies action `action` to `aig`.
    pub fn apply(&self, action: usize, aig: &Aig) -> Result<Aig, EnvError> {
        let &op = self.actions.get(action).ok_or(EnvError::InvalidAction { action, size: self.actions.len() })?;
        let key = (aig.fingerprint(), op);
        if let Some(m) = &self.memo {
            let m = m.lock().unwrap();
            if let Some((_, out)) = m.map.get(&key).and_then(|v| v.iter().find(|(i, _)| i == aig)) {
                return Ok(out.clone());
            }
        }
        let out = self
            .registry
            .apply_index(op, aig)
            .map_err(|source| EnvError::Operator { name: self.config.action_space[action].clone(), source })?;
        if let Some(m) = &self.memo {
            let mut m = m.lock().unwrap();
            if m.len >= m.capacity {
                m.map.clear();
                m.len = 0;
            }
            m.map.entry(key).or_default().push((aig.clone(), out.clone()));
            m.len += 1;
        }
        Ok(out)
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn registry(&self) -> &Arc<Registry> {
        &self.registry
    }

    pub fn num_actions(&self) -> usize {
        self.actions.len()
    }

    pub fn feature_dim(&self) -> usize {
        self.config.feature_kind.dim()
    }

    pub fn reset(&self, circuit: Aig, rng: &mut impl Rng) -> EnvState {
        let initial = circuit.stats();
        let features = self.features(&initial, &initial, rng);
        EnvState { current: circuit, initial, stats: initial, step_index: 0, features }
    }

    /// Applies `action` to a copy of the state's graph.
    pub fn step(&self, state: &EnvState, action: usize, rng: &mut impl Rng) -> Result<(EnvState, Transition), EnvError> {
        if state.step_index >= self.config.horizon {
            return Err(EnvError::EpisodeFinished);
        }
        let next = self.apply(action, &state.current)?;
        let stats = next.stats();
        let (reward, degenerate) = reward(self.config.reward_scheme, &state.initial, &state.stats, &stats);
        let features = self.features(&state.initial, &stats, rng);
        let step_index = state.step_index + 1;
        let done = step_index == self.config.horizon;
        let t = Transition { features_before: state.features.clone(), action, reward, features_after: features.clone(), done, degenerate };
        Ok((EnvState { current: next, initial: state.initial, stats, step_index, features }, t))
    }

    fn features(&self, initial: &CircuitStats, stats: &CircuitStats, rng: &mut impl Rng) -> Vec<f64> {
        match self.config.feature_kind {
            FeatureKind::Random4D => random_features(rng).to_vec(),
            FeatureKind::Statistics7D => statistics_features(stats, initial).to_vec(),
        }
    }
}

/// Stepwise reduction of the scheme's metric over its initial value.
/// Returns `(0, true)` when the initial metric is zero.
pub fn reward(scheme: RewardScheme, initial: &CircuitStats, before: &CircuitStats, after: &CircuitStats) -> (f64, bool) {
    let m0 = scheme.metric(initial);
    if m0 == 0 {
        return (0.0, true);
    }
    ((scheme.metric(before) as f64 - scheme.metric(after) as f64) / m0 as f64, false)
}

pub fn random_features(rng: &mut impl Rng) -> [f64; 4] {
    std::array::from_fn(|_| rng.random::<f64>())
}

/// Statistics vector with count fields divided by their initial values.
/// A count whose initial value is zero maps to 1 while it stays zero.
pub fn statistics_features(stats: &CircuitStats, initial: &CircuitStats) -> [f64; 7] {
    let norm = |x: usize, x0: usize| if x0 == 0 { if x == 0 { 1.0 } else { x as f64 } } else { x as f64 / x0 as f64 };
    [
        norm(stats.primary_io, initial.primary_io),
        norm(stats.nodes, initial.nodes),
        norm(stats.edges, initial.edges),
        norm(stats.levels, initial.levels),
        stats.latches as f64,
        stats.pct_ands,
        stats.pct_nots,
    ]
}
