//! Softmax policy over operators and its REINFORCE training loop.

use crate::aig::Aig;
use crate::env::{EnvConfig, EnvError, FeatureKind, SynthEnv, Transition};
use crate::seed::SeedTree;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::path::Path;
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PolicyError {
    #[error("shape mismatch: expected {expected} features, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("trajectory does not end at the horizon")]
    IncompleteTrajectory,
    #[error("training dataset is empty")]
    EmptyDataset,
    #[error("checkpoint does not match: {0}")]
    SchemaMismatch(String),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error("checkpoint I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("checkpoint format: {0}")]
    Format(#[from] serde_json::Error),
}

/// Dense layer; `weights[i * outputs + j]` connects input `i` to output `j`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Layer {
    pub fn zeros(inputs: usize, outputs: usize) -> Layer {
        Layer { inputs, outputs, weights: vec![0.0; inputs * outputs], bias: vec![0.0; outputs] }
    }

    fn forward(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend_from_slice(&self.bias);
        for (i, &xi) in x.iter().enumerate() {
            let row = &self.weights[i * self.outputs..(i + 1) * self.outputs];
            for (o, w) in out.iter_mut().zip(row) {
                *o += xi * w;
            }
        }
    }

    /// Accumulates `d(out) = g` into this layer's gradient given input `x`;
    /// returns `d(x)` when `want_input`.
    fn backward(&mut self, params: &Layer, x: &[f64], g: &[f64], want_input: bool) -> Vec<f64> {
        for (i, &xi) in x.iter().enumerate() {
            for (j, &gj) in g.iter().enumerate() {
                self.weights[i * self.outputs + j] += xi * gj;
            }
        }
        for (b, &gj) in self.bias.iter_mut().zip(g) {
            *b += gj;
        }
        if !want_input {
            return Vec::new();
        }
        (0..params.inputs).map(|i| (0..params.outputs).map(|j| params.weights[i * params.outputs + j] * g[j]).sum()).collect()
    }
}

/// Policy parameters: an optional tanh hidden layer followed by a linear
/// map to action logits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolicyParams {
    pub feature_dim: usize,
    pub num_actions: usize,
    pub hidden: Option<Layer>,
    pub output: Layer,
}

impl PolicyParams {
    /// All-zero linear policy: uniform over actions.
    pub fn zeros(feature_dim: usize, num_actions: usize) -> PolicyParams {
        PolicyParams { feature_dim, num_actions, hidden: None, output: Layer::zeros(feature_dim, num_actions) }
    }

    /// A policy with a tanh hidden layer of `width` units; hidden weights
    /// are uniform in `±1/sqrt(feature_dim)`, the output layer starts at zero.
    pub fn mlp(feature_dim: usize, num_actions: usize, width: usize, rng: &mut impl Rng) -> PolicyParams {
        let scale = 1.0 / (feature_dim.max(1) as f64).sqrt();
        let mut h = Layer::zeros(feature_dim, width);
        for w in &mut h.weights {
            *w = rng.random_range(-scale..scale);
        }
        PolicyParams { feature_dim, num_actions, hidden: Some(h), output: Layer::zeros(width, num_actions) }
    }

    pub fn init(feature_dim: usize, num_actions: usize, hidden: Option<usize>, rng: &mut impl Rng) -> PolicyParams {
        match hidden {
            Some(w) => PolicyParams::mlp(feature_dim, num_actions, w, rng),
            None => PolicyParams::zeros(feature_dim, num_actions),
        }
    }

    fn zeros_like(&self) -> PolicyParams {
        PolicyParams {
            feature_dim: self.feature_dim,
            num_actions: self.num_actions,
            hidden: self.hidden.as_ref().map(|h| Layer::zeros(h.inputs, h.outputs)),
            output: Layer::zeros(self.output.inputs, self.output.outputs),
        }
    }

    /// Parameters flattened in a fixed order.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = Vec::new();
        for l in self.hidden.iter().chain(std::iter::once(&self.output)) {
            v.extend_from_slice(&l.weights);
            v.extend_from_slice(&l.bias);
        }
        v
    }

    pub fn set_flat(&mut self, v: &[f64]) {
        let mut k = 0;
        for l in self.hidden.iter_mut().chain(std::iter::once(&mut self.output)) {
            for x in l.weights.iter_mut().chain(l.bias.iter_mut()) {
                *x = v[k];
                k += 1;
            }
        }
        assert_eq!(k, v.len(), "flat parameter length");
    }

    /// `self += a * other`.
    pub fn axpy(&mut self, a: f64, other: &PolicyParams) {
        let mut v = self.to_flat();
        for (x, y) in v.iter_mut().zip(other.to_flat()) {
            *x += a * y;
        }
        self.set_flat(&v);
    }

    fn check(&self, features: &[f64]) -> Result<(), PolicyError> {
        if features.len() != self.feature_dim {
            return Err(PolicyError::ShapeMismatch { expected: self.feature_dim, got: features.len() });
        }
        Ok(())
    }

    /// Hidden activations (empty for a linear policy) and logits.
    fn forward(&self, features: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut logits = Vec::with_capacity(self.num_actions);
        match &self.hidden {
            Some(h) => {
                let mut act = Vec::with_capacity(h.outputs);
                h.forward(features, &mut act);
                act.iter_mut().for_each(|x| *x = x.tanh());
                self.output.forward(&act, &mut logits);
                (act, logits)
            }
            None => {
                self.output.forward(features, &mut logits);
                (Vec::new(), logits)
            }
        }
    }

    /// Accumulates `d(logits) = g` at `features` into `grad`.
    fn backward(&self, grad: &mut PolicyParams, features: &[f64], act: &[f64], g: &[f64]) {
        match (&self.hidden, &mut grad.hidden) {
            (Some(h), Some(gh)) => {
                let d_act = grad.output.backward(&self.output, act, g, true);
                let d_pre: Vec<f64> = d_act.iter().zip(act).map(|(d, a)| d * (1.0 - a * a)).collect();
                gh.backward(h, features, &d_pre, false);
            }
            _ => {
                grad.output.backward(&self.output, features, g, false);
            }
        }
    }
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logits.iter().map(|z| (z - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|x| x / s).collect()
}

pub fn action_probs(params: &PolicyParams, features: &[f64]) -> Result<Vec<f64>, PolicyError> {
    params.check(features)?;
    Ok(softmax(&params.forward(features).1))
}

pub fn entropy(probs: &[f64]) -> f64 {
    -probs.iter().filter(|&&p| p > 0.0).map(|p| p * p.ln()).sum::<f64>()
}

/// Draws an action; returns it with its log-probability.
pub fn sample_action(params: &PolicyParams, features: &[f64], rng: &mut impl Rng) -> Result<(usize, f64), PolicyError> {
    let p = action_probs(params, features)?;
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut a = p.len() - 1;
    for (i, &pi) in p.iter().enumerate() {
        acc += pi;
        if u < acc {
            a = i;
            break;
        }
    }
    Ok((a, p[a].ln()))
}

/// One episode's decisions and rewards with cached reward-to-go.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub features: Vec<Vec<f64>>,
    pub actions: Vec<usize>,
    pub rewards: Vec<f64>,
    /// `returns[t] = rewards[t] + gamma * returns[t + 1]`.
    pub returns: Vec<f64>,
}

impl Trajectory {
    pub fn new(features: Vec<Vec<f64>>, actions: Vec<usize>, rewards: Vec<f64>, gamma: f64) -> Trajectory {
        assert!(features.len() == actions.len() && actions.len() == rewards.len());
        let mut returns = vec![0.0; rewards.len()];
        let mut acc = 0.0;
        for t in (0..rewards.len()).rev() {
            acc = rewards[t] + gamma * acc;
            returns[t] = acc;
        }
        Trajectory { features, actions, rewards, returns }
    }

    /// Builds a trajectory from environment transitions; the last one must
    /// close the episode.
    pub fn from_transitions(ts: &[Transition], gamma: f64) -> Result<Trajectory, PolicyError> {
        if ts.last().is_none_or(|t| !t.done) {
            return Err(PolicyError::IncompleteTrajectory);
        }
        Ok(Trajectory::new(
            ts.iter().map(|t| t.features_before.clone()).collect(),
            ts.iter().map(|t| t.action).collect(),
            ts.iter().map(|t| t.reward).collect(),
            gamma,
        ))
    }

    pub fn total_reward(&self) -> f64 {
        self.rewards.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineKind {
    None,
    RunningMean,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub max_steps: usize,
    pub learning_rate: f64,
    pub entropy_bonus: f64,
    pub baseline: BaselineKind,
    pub seed: u64,
    /// Width of the optional tanh hidden layer.
    pub hidden_units: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { max_steps: 200, learning_rate: 0.1, entropy_bonus: 0.01, baseline: BaselineKind::RunningMean, seed: 0, hidden_units: None }
    }
}

/// Per-timestep running mean of observed reward-to-go.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunningMean {
    sum: Vec<f64>,
    count: Vec<u64>,
}

impl RunningMean {
    pub fn value(&self, t: usize) -> f64 {
        match self.count.get(t) {
            Some(&c) if c > 0 => self.sum[t] / c as f64,
            _ => 0.0,
        }
    }

    pub fn observe(&mut self, returns: &[f64]) {
        if self.sum.len() < returns.len() {
            self.sum.resize(returns.len(), 0.0);
            self.count.resize(returns.len(), 0);
        }
        for (t, &g) in returns.iter().enumerate() {
            self.sum[t] += g;
            self.count[t] += 1;
        }
    }
}

/// Ascent direction `sum_t (G_t - b_t) grad log pi(a_t|s_t) + beta grad H(pi(.|s_t))`.
pub fn policy_gradient(params: &PolicyParams, traj: &Trajectory, beta: f64, baseline: Option<&RunningMean>) -> Result<PolicyParams, PolicyError> {
    let mut grad = params.zeros_like();
    let mut g = vec![0.0; params.num_actions];
    for t in 0..traj.len() {
        let f = &traj.features[t];
        params.check(f)?;
        let (act, logits) = params.forward(f);
        let p = softmax(&logits);
        let adv = traj.returns[t] - baseline.map_or(0.0, |b| b.value(t));
        let h = entropy(&p);
        for j in 0..p.len() {
            let score = if j == traj.actions[t] { 1.0 } else { 0.0 } - p[j];
            let dh = if p[j] > 0.0 { -p[j] * (p[j].ln() + h) } else { 0.0 };
            g[j] = adv * score + beta * dh;
        }
        params.backward(&mut grad, f, &act, &g);
    }
    Ok(grad)
}

/// The objective whose gradient [`policy_gradient`] returns when
/// `beta = 0` and no baseline: `sum_t log pi(a_t|s_t) G_t`.
pub fn surrogate(params: &PolicyParams, traj: &Trajectory) -> f64 {
    (0..traj.len()).map(|t| action_probs(params, &traj.features[t]).unwrap()[traj.actions[t]].ln() * traj.returns[t]).sum()
}

/// One gradient-ascent step. The baseline, when enabled, is read before
/// and updated after the step.
pub fn reinforce_update(params: &PolicyParams, traj: &Trajectory, cfg: &TrainConfig, baseline: &mut RunningMean) -> Result<PolicyParams, PolicyError> {
    let b = (cfg.baseline == BaselineKind::RunningMean).then_some(&*baseline);
    let grad = policy_gradient(params, traj, cfg.entropy_bonus, b)?;
    let mut next = params.clone();
    next.axpy(cfg.learning_rate, &grad);
    if cfg.baseline == BaselineKind::RunningMean {
        baseline.observe(&traj.returns);
    }
    Ok(next)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainLogRow {
    pub iter: usize,
    pub circuit: String,
    #[serde(rename = "return")]
    pub ret: f64,
    pub entropy: f64,
    pub wall_ms: u64,
}

pub struct TrainOutcome {
    pub params: PolicyParams,
    pub log: Vec<TrainLogRow>,
}

/// Training loop over `n_circuits` named by `names`: pick a circuit
/// uniformly, roll out one episode with `rollout`, update.
pub fn train_with(
    names: &[String],
    cfg: &TrainConfig,
    init: PolicyParams,
    mut rollout: impl FnMut(&PolicyParams, usize, &mut ChaCha8Rng) -> Result<Trajectory, PolicyError>,
    mut on_iter: impl FnMut(&TrainLogRow),
) -> Result<TrainOutcome, PolicyError> {
    if names.is_empty() {
        return Err(PolicyError::EmptyDataset);
    }
    let seeds = SeedTree::new(cfg.seed);
    let mut pick = seeds.stream("circuit");
    let mut roll = seeds.stream("rollout");
    let mut params = init;
    let mut baseline = RunningMean::default();
    let mut log = Vec::with_capacity(cfg.max_steps);
    for iter in 0..cfg.max_steps {
        let start = Instant::now();
        let c = pick.random_range(0..names.len());
        let traj = rollout(&params, c, &mut roll)?;
        let ent = traj.features.iter().map(|f| entropy(&action_probs(&params, f).unwrap())).sum::<f64>() / traj.len().max(1) as f64;
        params = reinforce_update(&params, &traj, cfg, &mut baseline)?;
        let row = TrainLogRow { iter, circuit: names[c].clone(), ret: traj.total_reward(), entropy: ent, wall_ms: start.elapsed().as_millis() as u64 };
        on_iter(&row);
        log.push(row);
    }
    Ok(TrainOutcome { params, log })
}

/// Rolls out one full episode of `env` on `circuit` under `params`.
pub fn rollout(env: &SynthEnv, params: &PolicyParams, circuit: &Aig, rng: &mut ChaCha8Rng) -> Result<(Trajectory, Aig), PolicyError> {
    let mut state = env.reset(circuit.clone(), rng);
    let mut ts = Vec::with_capacity(env.config().horizon);
    for _ in 0..env.config().horizon {
        let (a, _) = sample_action(params, &state.features, rng)?;
        let (next, t) = env.step(&state, a, rng)?;
        ts.push(t);
        state = next;
    }
    Ok((Trajectory::from_transitions(&ts, env.config().gamma)?, state.current))
}

/// Trains a fresh policy on `dataset` in `env`.
pub fn train(dataset: &[(String, Aig)], env: &SynthEnv, cfg: &TrainConfig, on_iter: impl FnMut(&TrainLogRow)) -> Result<TrainOutcome, PolicyError> {
    if dataset.is_empty() {
        return Err(PolicyError::EmptyDataset);
    }
    let init = PolicyParams::init(env.feature_dim(), env.num_actions(), cfg.hidden_units, &mut SeedTree::new(cfg.seed).stream("init"));
    let names: Vec<String> = dataset.iter().map(|(n, _)| n.clone()).collect();
    train_with(&names, cfg, init, |p, c, rng| Ok(rollout(env, p, &dataset[c].1, rng)?.0), on_iter)
}

pub const CHECKPOINT_SCHEMA: &str = "aigwave-policy";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Self-describing policy file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub schema: String,
    pub version: u32,
    pub feature_kind: FeatureKind,
    pub action_space: Vec<String>,
    pub seed: u64,
    pub env_config: EnvConfig,
    pub train_config: TrainConfig,
    pub params: PolicyParams,
}

impl Checkpoint {
    pub fn new(params: PolicyParams, env_config: &EnvConfig, train_config: &TrainConfig) -> Checkpoint {
        Checkpoint {
            schema: CHECKPOINT_SCHEMA.into(),
            version: CHECKPOINT_VERSION,
            feature_kind: env_config.feature_kind,
            action_space: env_config.action_space.clone(),
            seed: train_config.seed,
            env_config: env_config.clone(),
            train_config: train_config.clone(),
            params,
        }
    }

    /// Fails unless the checkpoint was trained for `action_space` with
    /// `feature_kind` features.
    pub fn check_compatible(&self, action_space: &[String], feature_kind: FeatureKind) -> Result<(), PolicyError> {
        if self.action_space != action_space {
            return Err(PolicyError::SchemaMismatch(format!("trained on actions {:?}, active registry has {:?}", self.action_space, action_space)));
        }
        if self.feature_kind != feature_kind {
            return Err(PolicyError::SchemaMismatch(format!("trained with `{}` features, requested `{}`", self.feature_kind.name(), feature_kind.name())));
        }
        Ok(())
    }
}

pub fn save_policy(ckpt: &Checkpoint, path: &Path) -> Result<(), PolicyError> {
    let mut text = serde_json::to_string_pretty(ckpt)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

pub fn load_policy(path: &Path) -> Result<Checkpoint, PolicyError> {
    let text = std::fs::read_to_string(path)?;
    let ckpt: Checkpoint = serde_json::from_str(&text)?;
    if ckpt.schema != CHECKPOINT_SCHEMA || ckpt.version != CHECKPOINT_VERSION {
        return Err(PolicyError::SchemaMismatch(format!("unsupported checkpoint {} v{}", ckpt.schema, ckpt.version)));
    }
    let p = &ckpt.params;
    let ok_shape = p.num_actions == ckpt.action_space.len()
        && p.feature_dim == ckpt.feature_kind.dim()
        && p.output.outputs == p.num_actions
        && p.output.inputs == p.hidden.as_ref().map_or(p.feature_dim, |h| h.outputs)
        && p.hidden.as_ref().is_none_or(|h| h.inputs == p.feature_dim && h.weights.len() == h.inputs * h.outputs && h.bias.len() == h.outputs)
        && p.output.weights.len() == p.output.inputs * p.output.outputs
        && p.output.bias.len() == p.output.outputs;
    if !ok_shape {
        return Err(PolicyError::SchemaMismatch("parameter shapes disagree with the recorded action space".into()));
    }
    if !p.to_flat().iter().all(|x| x.is_finite()) {
        return Err(PolicyError::SchemaMismatch("non-finite parameters".into()));
    }
    Ok(ckpt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn rng(s: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(s)
    }

    fn random_params(rng: &mut ChaCha8Rng, hidden: Option<usize>) -> PolicyParams {
        let mut p = PolicyParams::init(4, 7, hidden, rng);
        let v: Vec<f64> = p.to_flat().iter().map(|_| rng.random_range(-1.0..1.0)).collect();
        p.set_flat(&v);
        p
    }

    fn random_traj(rng: &mut ChaCha8Rng, len: usize) -> Trajectory {
        let f = (0..len).map(|_| (0..4).map(|_| rng.random()).collect()).collect();
        let a = (0..len).map(|_| rng.random_range(0..7)).collect();
        let r = (0..len).map(|_| rng.random_range(-0.1..0.3)).collect();
        Trajectory::new(f, a, r, 1.0)
    }

    #[test]
    fn uniform_and_dominant_probabilities() {
        let p = PolicyParams::zeros(4, 7);
        let pr = action_probs(&p, &[0.3; 4]).unwrap();
        assert!(pr.iter().all(|&x| (x - 1.0 / 7.0).abs() < 1e-15));
        let mut q = p.clone();
        q.output.bias[0] = 10.0;
        assert!(action_probs(&q, &[0.1, 0.9, 0.4, 0.2]).unwrap()[0] > 0.99);
        assert!(matches!(action_probs(&p, &[0.0; 7]), Err(PolicyError::ShapeMismatch { expected: 4, got: 7 })));
    }

    #[test]
    fn probabilities_sum_to_one() {
        let mut r = rng(1);
        for h in [None, Some(16)] {
            for _ in 0..100 {
                let p = random_params(&mut r, h);
                let f: Vec<f64> = (0..4).map(|_| r.random_range(-5.0..5.0)).collect();
                let s: f64 = action_probs(&p, &f).unwrap().iter().sum();
                assert!((s - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn sampling_matches_probabilities() {
        let p = PolicyParams::zeros(4, 7);
        let mut r = rng(2);
        let mut counts = [0usize; 7];
        for _ in 0..10_000 {
            let (a, lp) = sample_action(&p, &[0.5; 4], &mut r).unwrap();
            assert_eq!(lp, (1.0f64 / 7.0).ln());
            counts[a] += 1;
        }
        for c in counts {
            let f = c as f64 / 10_000.0;
            assert!((0.12..=0.17).contains(&f), "{f}");
        }
        let mut q = p.clone();
        q.output.bias[3] = 10.0;
        let hits = (0..1000).filter(|_| sample_action(&q, &[0.5; 4], &mut r).unwrap().0 == 3).count();
        assert!(hits >= 990);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut r = rng(3);
        for h in [None, Some(16)] {
            for _ in 0..20 {
                let p = random_params(&mut r, h);
                let tr = random_traj(&mut r, 10);
                let g = policy_gradient(&p, &tr, 0.0, None).unwrap().to_flat();
                let base = p.to_flat();
                let eps = 1e-5;
                let mut q = p.clone();
                let fd: Vec<f64> = (0..base.len())
                    .map(|k| {
                        let mut v = base.clone();
                        v[k] += eps;
                        q.set_flat(&v);
                        let up = surrogate(&q, &tr);
                        v[k] -= 2.0 * eps;
                        q.set_flat(&v);
                        (up - surrogate(&q, &tr)) / (2.0 * eps)
                    })
                    .collect();
                let num: f64 = g.iter().zip(&fd).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                let den: f64 = fd.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-12);
                assert!(num / den <= 1e-4, "relative error {}", num / den);
            }
        }
    }

    #[test]
    fn entropy_gradient_matches_finite_differences() {
        let mut r = rng(4);
        let p = random_params(&mut r, None);
        let tr = random_traj(&mut r, 3);
        let g = policy_gradient(&p, &Trajectory::new(tr.features.clone(), tr.actions.clone(), vec![0.0; 3], 1.0), 1.0, None).unwrap().to_flat();
        let h = |q: &PolicyParams| tr.features.iter().map(|f| entropy(&action_probs(q, f).unwrap())).sum::<f64>();
        let base = p.to_flat();
        let mut q = p.clone();
        for k in 0..base.len() {
            let mut v = base.clone();
            v[k] += 1e-6;
            q.set_flat(&v);
            let up = h(&q);
            v[k] -= 2e-6;
            q.set_flat(&v);
            let fd = (up - h(&q)) / 2e-6;
            assert!((fd - g[k]).abs() < 1e-7, "{k}: {fd} vs {}", g[k]);
        }
    }

    #[test]
    fn zero_rewards_without_entropy_leave_params() {
        let mut r = rng(5);
        let p = random_params(&mut r, None);
        let tr = Trajectory::new(vec![vec![0.2; 4]; 3], vec![1, 2, 3], vec![0.0; 3], 1.0);
        let cfg = TrainConfig { entropy_bonus: 0.0, baseline: BaselineKind::None, ..TrainConfig::default() };
        assert_eq!(reinforce_update(&p, &tr, &cfg, &mut RunningMean::default()).unwrap(), p);
    }

    #[test]
    fn rewarded_action_gains_probability() {
        let p = PolicyParams::zeros(4, 7);
        let f = vec![0.5; 4];
        let tr = Trajectory::new(vec![f.clone()], vec![2], vec![1.0], 1.0);
        let next = reinforce_update(&p, &tr, &TrainConfig::default(), &mut RunningMean::default()).unwrap();
        assert!(action_probs(&next, &f).unwrap()[2] > action_probs(&p, &f).unwrap()[2]);
    }

    #[test]
    fn returns_are_reward_to_go() {
        let t = Trajectory::new(vec![vec![]; 3], vec![0; 3], vec![0.1, 0.2, 0.3], 1.0);
        assert_eq!(t.returns.len(), 3);
        for k in 0..2 {
            assert!((t.returns[k] - t.rewards[k] - t.returns[k + 1]).abs() < 1e-15);
        }
        assert!((t.returns[0] - 0.6).abs() < 1e-12);
        let d = Trajectory::new(vec![vec![]; 2], vec![0; 2], vec![1.0, 1.0], 0.5);
        assert_eq!(d.returns, vec![1.5, 1.0]);
    }

    #[test]
    fn incomplete_trajectories_are_rejected() {
        let t = Transition { features_before: vec![], action: 0, reward: 0.0, features_after: vec![], done: false, degenerate: false };
        assert!(matches!(Trajectory::from_transitions(&[t], 1.0), Err(PolicyError::IncompleteTrajectory)));
        assert!(matches!(Trajectory::from_transitions(&[], 1.0), Err(PolicyError::IncompleteTrajectory)));
    }

    #[test]
    fn zero_iterations_return_initial_params() {
        let cfg = TrainConfig { max_steps: 0, ..TrainConfig::default() };
        let init = PolicyParams::zeros(4, 7);
        let out = train_with(&["x".into()], &cfg, init.clone(), |_, _, _| unreachable!(), |_| {}).unwrap();
        assert_eq!(out.params, init);
        assert!(matches!(train_with(&[], &cfg, init, |_, _, _| unreachable!(), |_| {}), Err(PolicyError::EmptyDataset)));
    }

    #[test]
    fn baseline_drift_is_centered() {
        // Constant rewards carry no signal: per-update parameter changes
        // must average to zero within three standard errors.
        let cfg = TrainConfig { entropy_bonus: 0.0, learning_rate: 0.1, ..TrainConfig::default() };
        let p0 = PolicyParams::zeros(4, 7);
        let mut r = rng(6);
        let mut base = RunningMean::default();
        let n = 1000;
        let dim = p0.to_flat().len();
        let (mut sum, mut sq) = (vec![0.0; dim], vec![0.0; dim]);
        for _ in 0..n {
            let f: Vec<Vec<f64>> = (0..10).map(|_| (0..4).map(|_| r.random()).collect()).collect();
            let a: Vec<usize> = f.iter().map(|x| sample_action(&p0, x, &mut r).unwrap().0).collect();
            let tr = Trajectory::new(f, a, vec![0.05; 10], 1.0);
            let d: Vec<f64> = reinforce_update(&p0, &tr, &cfg, &mut base).unwrap().to_flat();
            for k in 0..dim {
                sum[k] += d[k];
                sq[k] += d[k] * d[k];
            }
        }
        for k in 0..dim {
            let mean = sum[k] / n as f64;
            let var = (sq[k] / n as f64 - mean * mean).max(0.0);
            let se = (var / n as f64).sqrt();
            assert!(mean.abs() <= 3.0 * se + 1e-12, "weight {k}: mean {mean}, se {se}");
        }
    }

    #[test]
    fn checkpoint_round_trip_and_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.json");
        let mut r = rng(7);
        for h in [None, Some(16)] {
            let p = random_params(&mut r, h);
            let env = EnvConfig::default();
            let ck = Checkpoint::new(p.clone(), &env, &TrainConfig { seed: 9, ..TrainConfig::default() });
            save_policy(&ck, &path).unwrap();
            let back = load_policy(&path).unwrap();
            assert_eq!(back, ck);
            assert_eq!(back.params.to_flat().iter().map(|x| x.to_bits()).collect::<Vec<_>>(), p.to_flat().iter().map(|x| x.to_bits()).collect::<Vec<_>>());
            assert_eq!(back.action_space, env.action_space);
            back.check_compatible(&env.action_space, FeatureKind::Random4D).unwrap();
            let mut ext = env.action_space.clone();
            ext.push("fraig-lite".into());
            assert!(matches!(back.check_compatible(&ext, FeatureKind::Random4D), Err(PolicyError::SchemaMismatch(_))));
            assert!(matches!(back.check_compatible(&env.action_space, FeatureKind::Statistics7D), Err(PolicyError::SchemaMismatch(_))));
        }
    }
}
