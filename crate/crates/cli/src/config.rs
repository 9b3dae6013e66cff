//! Run configuration: built-in defaults, overridden by a TOML file,
//! overridden by flags.

use aigwave::{FeatureKind, RewardScheme};
use clap::Args;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub manifest: Option<PathBuf>,
    pub scheme: RewardScheme,
    pub features: FeatureKind,
    pub horizon: usize,
    pub train_steps: usize,
    pub seq_len: usize,
    pub candidates: usize,
    pub seed: u64,
    /// Worker threads; 0 uses every core.
    pub jobs: usize,
    pub out: PathBuf,
    pub verify: bool,
    /// `core` or `extended`.
    pub action_space: String,
    pub learning_rate: f64,
    pub entropy_bonus: f64,
    pub hidden_units: Option<usize>,
    pub shuffles: usize,
    pub samples: usize,
    pub episodes: usize,
    pub study_seeds: usize,
    pub max_nodes: usize,
    pub plot: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        let tc = aigwave::TrainConfig::default();
        RunConfig {
            manifest: None,
            scheme: RewardScheme::AreaFirst,
            features: FeatureKind::Random4D,
            horizon: 10,
            train_steps: tc.max_steps,
            seq_len: 10,
            candidates: 10,
            seed: 0,
            jobs: 0,
            out: PathBuf::from("out"),
            verify: false,
            action_space: "core".into(),
            learning_rate: tc.learning_rate,
            entropy_bonus: tc.entropy_bonus,
            hidden_units: None,
            shuffles: 10,
            samples: 10_000,
            episodes: 20,
            study_seeds: 3,
            max_nodes: 5000,
            plot: false,
        }
    }
}

/// Same fields as [`RunConfig`], all optional. Used for both the config
/// file and the command-line flags.
#[derive(Clone, Debug, Default, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    /// Circuit list, one path per line with optional `train`/`eval` tag
    #[arg(long, global = true)]
    pub manifest: Option<PathBuf>,
    /// Reward scheme: area or delay
    #[arg(long, global = true, value_parser = parse_scheme)]
    #[serde(default, deserialize_with = "de_scheme")]
    pub scheme: Option<RewardScheme>,
    /// Policy features: random or stats
    #[arg(long, global = true, value_parser = parse_features)]
    #[serde(default, deserialize_with = "de_features")]
    pub features: Option<FeatureKind>,
    /// Episode length
    #[arg(long, global = true)]
    pub horizon: Option<usize>,
    /// Training iterations (episodes)
    #[arg(long, global = true)]
    pub train_steps: Option<usize>,
    /// Length of designed sequences
    #[arg(long, global = true)]
    pub seq_len: Option<usize>,
    /// Sequences sampled during design
    #[arg(long, global = true)]
    pub candidates: Option<usize>,
    /// Root seed
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads, 0 for all cores
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Output directory
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Check every optimized circuit against its input
    #[arg(long, global = true, num_args = 0, default_missing_value = "true")]
    pub verify: Option<bool>,
    /// Operator set: core or extended
    #[arg(long, global = true)]
    pub action_space: Option<String>,
    /// Policy-gradient step size
    #[arg(long, global = true)]
    pub learning_rate: Option<f64>,
    /// Weight of the entropy term in the update
    #[arg(long, global = true)]
    pub entropy_bonus: Option<f64>,
    /// Width of the optional tanh hidden layer
    #[arg(long, global = true)]
    pub hidden_units: Option<usize>,
    /// Permutations per circuit in the permutation study
    #[arg(long, global = true)]
    pub shuffles: Option<usize>,
    /// Actions drawn by the distribution study
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    /// Rollouts per circuit for the per-step distribution
    #[arg(long, global = true)]
    pub episodes: Option<usize>,
    /// Seeds per cell in training-based studies
    #[arg(long, global = true)]
    pub study_seeds: Option<usize>,
    /// Node cap for the feature ablation
    #[arg(long, global = true)]
    pub max_nodes: Option<usize>,
    /// Also write SVG plots
    #[arg(long, global = true, num_args = 0, default_missing_value = "true")]
    pub plot: Option<bool>,
}

fn parse_scheme(s: &str) -> Result<RewardScheme, String> {
    RewardScheme::from_name(s).ok_or_else(|| format!("expected `area` or `delay`, got `{s}`"))
}

fn parse_features(s: &str) -> Result<FeatureKind, String> {
    FeatureKind::from_name(s).ok_or_else(|| format!("expected `random` or `stats`, got `{s}`"))
}

fn de_scheme<'de, D: serde::Deserializer<'de>>(d: D) -> Result<Option<RewardScheme>, D::Error> {
    let s = String::deserialize(d)?;
    parse_scheme(&s).map(Some).map_err(serde::de::Error::custom)
}

fn de_features<'de, D: serde::Deserializer<'de>>(d: D) -> Result<Option<FeatureKind>, D::Error> {
    let s = String::deserialize(d)?;
    parse_features(&s).map(Some).map_err(serde::de::Error::custom)
}

macro_rules! apply {
    ($cfg:ident, $o:ident, $($f:ident),*) => {
        $(if let Some(v) = $o.$f.clone() { $cfg.$f = v; })*
    };
}

impl RunConfig {
    pub fn apply(&mut self, o: &Overrides) {
        if o.manifest.is_some() {
            self.manifest = o.manifest.clone();
        }
        if o.hidden_units.is_some() {
            self.hidden_units = o.hidden_units;
        }
        apply!(self, o, scheme, features, horizon, train_steps, seq_len, candidates, seed, jobs, out, verify, action_space, learning_rate, entropy_bonus, shuffles, samples, episodes, study_seeds, max_nodes, plot);
    }

    /// Defaults, then `file`, then `flags`.
    pub fn resolve(file: Option<&Path>, flags: &Overrides) -> Result<RunConfig, String> {
        let mut cfg = RunConfig::default();
        if let Some(path) = file {
            let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
            let o: Overrides = toml::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
            cfg.apply(&o);
        }
        cfg.apply(flags);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), String> {
        if !matches!(self.action_space.as_str(), "core" | "extended") {
            return Err(format!("action space must be `core` or `extended`, got `{}`", self.action_space));
        }
        if self.horizon == 0 || self.seq_len == 0 || self.candidates == 0 {
            return Err("horizon, seq-len and candidates must be positive".into());
        }
        if self.shuffles < 2 {
            return Err("shuffles must be at least 2".into());
        }
        if self.samples == 0 || self.study_seeds == 0 {
            return Err("samples and study-seeds must be positive".into());
        }
        if !(self.learning_rate.is_finite() && self.entropy_bonus.is_finite()) {
            return Err("learning rate and entropy bonus must be finite".into());
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_beat_file_beat_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("run.toml");
        std::fs::write(&file, "seed = 9\nhorizon = 4\nscheme = \"delay\"\n").unwrap();
        let flags = Overrides { seed: Some(3), ..Overrides::default() };
        let cfg = RunConfig::resolve(Some(&file), &flags).unwrap();
        assert_eq!(cfg.seed, 3);
        assert_eq!(cfg.horizon, 4);
        assert_eq!(cfg.scheme, RewardScheme::DelayFirst);
        assert_eq!(cfg.seq_len, 10);
    }

    #[test]
    fn unknown_keys_and_values_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("run.toml");
        std::fs::write(&file, "sed = 9\n").unwrap();
        assert!(RunConfig::resolve(Some(&file), &Overrides::default()).is_err());
        std::fs::write(&file, "scheme = \"power\"\n").unwrap();
        assert!(RunConfig::resolve(Some(&file), &Overrides::default()).is_err());
        let bad = Overrides { action_space: Some("all".into()), ..Overrides::default() };
        assert!(RunConfig::resolve(None, &bad).is_err());
    }

    #[test]
    fn dump_round_trips() {
        let cfg = RunConfig { hidden_units: Some(16), manifest: Some("m.txt".into()), ..RunConfig::default() };
        let back: RunConfig = toml::from_str(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
    }
}
