//! Regenerable studies over trained policies and operator sequences.
//!
//! Every study is a pure function of its inputs and seeds. Independent
//! cells run on the rayon pool and are gathered back in key order.

pub mod svg;

use crate::aig::{Aig, CircuitStats};
use crate::designer::{design, mean, ratio, run_sequence, DesignError, OperatorSequence};
use crate::env::{EnvConfig, EnvError, FeatureKind, RewardScheme, SynthEnv};
use crate::ops::{OperatorId, Registry};
use crate::policy::{rollout, sample_action, train, PolicyError, PolicyParams, TrainConfig};
use crate::seed::SeedTree;
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::io::Write;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StudyError {
    #[error("unknown study `{0}`")]
    UnknownStudy(String),
    #[error("invalid study input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Design(#[from] DesignError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error("CSV output: {0}")]
    Csv(#[from] csv::Error),
    #[error("I/O: {0}")]
    Io(#[from] std::io::Error),
}

/// Study names accepted by `report`.
pub const STUDIES: [&str; 4] = ["distribution", "permutation", "ablation", "extended"];

pub fn check_study(name: &str) -> Result<&'static str, StudyError> {
    STUDIES.iter().copied().find(|s| *s == name).ok_or_else(|| StudyError::UnknownStudy(name.to_string()))
}

#[derive(Clone, Debug, PartialEq)]
pub struct OperatorHistogram {
    pub names: Vec<String>,
    pub counts: Vec<u64>,
    pub n: u64,
}

impl OperatorHistogram {
    pub fn new(names: &[String]) -> OperatorHistogram {
        OperatorHistogram { names: names.to_vec(), counts: vec![0; names.len()], n: 0 }
    }

    pub fn record(&mut self, action: usize) {
        self.counts[action] += 1;
        self.n += 1;
    }

    pub fn frequencies(&self) -> Vec<f64> {
        let n = self.n.max(1) as f64;
        self.counts.iter().map(|&c| c as f64 / n).collect()
    }

    /// Half the L1 distance between the two frequency vectors.
    pub fn tv_distance(&self, other: &OperatorHistogram) -> f64 {
        assert_eq!(self.counts.len(), other.counts.len());
        self.frequencies().iter().zip(other.frequencies()).map(|(a, b)| (a - b).abs()).sum::<f64>() / 2.0
    }
}

/// Draws `n_samples` actions, each under fresh U[0,1] features.
pub fn operator_distribution(params: &PolicyParams, action_space: &[String], n_samples: usize, rng: &mut impl Rng) -> Result<OperatorHistogram, StudyError> {
    if n_samples == 0 {
        return Err(StudyError::Invalid("n_samples must be at least 1".into()));
    }
    let mut h = OperatorHistogram::new(action_space);
    let mut f = vec![0.0; params.feature_dim];
    for _ in 0..n_samples {
        f.iter_mut().for_each(|x| *x = rng.random());
        h.record(sample_action(params, &f, rng)?.0);
    }
    Ok(h)
}

/// Pooled and per-timestep action histograms over `episodes` rollouts of
/// `env` on `circuit`.
pub fn rollout_distribution(env: &SynthEnv, params: &PolicyParams, circuit: &Aig, episodes: usize, seeds: SeedTree) -> Result<(OperatorHistogram, Vec<OperatorHistogram>), StudyError> {
    let names = &env.config().action_space;
    let mut pooled = OperatorHistogram::new(names);
    let mut per_step = vec![OperatorHistogram::new(names); env.config().horizon];
    let mut rng = seeds.stream("rollout");
    for _ in 0..episodes {
        let (traj, _) = rollout(env, params, circuit, &mut rng)?;
        for (t, &a) in traj.actions.iter().enumerate() {
            pooled.record(a);
            per_step[t].record(a);
        }
    }
    Ok((pooled, per_step))
}

/// `name,count,frequency` per operator, preceded by `step` when given.
pub fn write_histogram_csv(hists: &[(Option<usize>, &OperatorHistogram)], out: impl Write) -> Result<(), StudyError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["step", "operator", "count", "frequency", "n"])?;
    for (step, h) in hists {
        let step = step.map_or("all".to_string(), |s| s.to_string());
        for ((name, c), f) in h.names.iter().zip(&h.counts).zip(h.frequencies()) {
            w.write_record([step.clone(), name.clone(), c.to_string(), f.to_string(), h.n.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PermutationRow {
    pub circuit: String,
    pub scheme: RewardScheme,
    pub base_sequence: String,
    pub n_shuffles: usize,
    pub mean: f64,
    pub max: f64,
    pub min: f64,
    pub std: f64,
    #[serde(skip)]
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct PermutationReport {
    pub rows: Vec<PermutationRow>,
}

/// Population standard deviation.
pub fn population_std(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    let m = mean(xs.iter().copied());
    (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64).sqrt()
}

/// Scores `n_shuffles` random permutations of `seq` on `circuit`, each from
/// a fresh copy of the input.
pub fn permutation_study(
    seq: &OperatorSequence,
    name: &str,
    circuit: &Aig,
    n_shuffles: usize,
    scheme: RewardScheme,
    registry: &Registry,
    rng: &mut impl Rng,
) -> Result<PermutationRow, StudyError> {
    if n_shuffles < 2 {
        return Err(StudyError::Invalid("n_shuffles must be at least 2".into()));
    }
    seq.validate(registry)?;
    let perms: Vec<OperatorSequence> = (0..n_shuffles)
        .map(|_| {
            let mut ops = seq.ops.clone();
            ops.shuffle(rng);
            OperatorSequence::new(ops)
        })
        .collect();
    let results: Vec<(CircuitStats, CircuitStats)> = perms
        .par_iter()
        .map(|p| {
            let start = circuit.clone();
            let before = start.stats();
            run_sequence(p, name, &start, registry).map(|out| (before, out.stats()))
        })
        .collect::<Result<_, _>>()?;
    assert!(results.windows(2).all(|w| w[0].0 == w[1].0), "shuffles must start from identical circuits");
    let values: Vec<f64> = results.iter().map(|(b, a)| ratio(scheme.metric(a), scheme.metric(b))).collect();
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    // summation rounding can push the mean of equal values past them
    let mean = mean(values.iter().copied()).clamp(min, max);
    Ok(PermutationRow {
        circuit: name.to_string(),
        scheme,
        base_sequence: seq.ops.join(";"),
        n_shuffles,
        mean,
        max,
        min,
        std: population_std(&values),
        values,
    })
}

pub fn write_permutation_csv(report: &PermutationReport, out: impl Write) -> Result<(), StudyError> {
    let mut w = csv::Writer::from_writer(out);
    for r in &report.rows {
        w.serialize(r)?;
    }
    if report.rows.is_empty() {
        w.write_record(["circuit", "scheme", "base_sequence", "n_shuffles", "mean", "max", "min", "std"])?;
    }
    w.flush()?;
    Ok(())
}

/// Knobs shared by the training-based studies.
#[derive(Clone, Debug, PartialEq)]
pub struct StudyConfig {
    pub seeds: Vec<u64>,
    /// Circuits above this node count are skipped by the ablation.
    pub max_nodes: usize,
    pub seq_len: usize,
    pub n_candidates: usize,
    pub schemes: Vec<RewardScheme>,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig { seeds: vec![0, 1, 2], max_nodes: 5000, seq_len: 10, n_candidates: 10, schemes: RewardScheme::ALL.to_vec() }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AblationRow {
    pub circuit: String,
    /// One value per column, mean final ratio over seeds.
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AblationReport {
    pub columns: Vec<(RewardScheme, FeatureKind)>,
    /// Per-circuit rows followed by `AVERAGE`.
    pub rows: Vec<AblationRow>,
}

impl AblationReport {
    pub fn average(&self, scheme: RewardScheme, kind: FeatureKind) -> Option<f64> {
        let c = self.columns.iter().position(|&k| k == (scheme, kind))?;
        self.rows.last().map(|r| r.values[c])
    }
}

/// Trains one policy per (circuit, scheme, feature kind, seed) on that
/// circuit alone, then reports the final metric ratio of one evaluation
/// episode, averaged over seeds. Kinds share seeds so their columns differ
/// only in the features.
pub fn feature_ablation(
    dataset: &[(String, Aig)],
    kinds: &[FeatureKind],
    env_config: &EnvConfig,
    train_config: &TrainConfig,
    registry: Arc<Registry>,
    study: &StudyConfig,
) -> Result<AblationReport, StudyError> {
    if kinds.is_empty() || study.seeds.is_empty() || study.schemes.is_empty() {
        return Err(StudyError::Invalid("ablation needs at least one feature kind, scheme and seed".into()));
    }
    let circuits: Vec<&(String, Aig)> = dataset.iter().filter(|(_, a)| a.num_ands() <= study.max_nodes).collect();
    if circuits.is_empty() {
        return Err(StudyError::Invalid(format!("no circuit has at most {} nodes", study.max_nodes)));
    }
    let columns: Vec<(RewardScheme, FeatureKind)> = study.schemes.iter().flat_map(|&s| kinds.iter().map(move |&k| (s, k))).collect();
    let cells: Vec<(usize, usize, u64)> = (0..circuits.len())
        .flat_map(|c| (0..columns.len()).flat_map(move |k| study.seeds.iter().map(move |&s| (c, k, s))))
        .collect();
    let values: Vec<f64> = cells
        .par_iter()
        .map(|&(c, k, seed)| {
            let (name, aig) = circuits[c];
            let (scheme, kind) = columns[k];
            let cfg = EnvConfig { reward_scheme: scheme, feature_kind: kind, ..env_config.clone() };
            let env = SynthEnv::new(cfg, registry.clone())?.with_memo(1 << 14);
            let tree = SeedTree::new(seed).child(name);
            let tc = TrainConfig { seed: tree.seed(), ..train_config.clone() };
            let one = [(name.clone(), aig.clone())];
            let trained = train(&one, &env, &tc, |_| {})?;
            let (_, out) = rollout(&env, &trained.params, aig, &mut tree.stream("eval"))?;
            Ok(ratio(scheme.metric(&out.stats()), scheme.metric(&aig.stats())))
        })
        .collect::<Result<_, StudyError>>()?;
    let per = study.seeds.len();
    let mut rows: Vec<AblationRow> = circuits
        .iter()
        .enumerate()
        .map(|(c, (name, _))| {
            let vals = (0..columns.len())
                .map(|k| {
                    let base = (c * columns.len() + k) * per;
                    mean(values[base..base + per].iter().copied())
                })
                .collect();
            AblationRow { circuit: name.clone(), values: vals }
        })
        .collect();
    let avg = (0..columns.len()).map(|k| mean(rows.iter().map(|r| r.values[k]))).collect();
    rows.push(AblationRow { circuit: "AVERAGE".into(), values: avg });
    Ok(AblationReport { columns, rows })
}

/// `circuit` then one `<scheme>_<features>` column per cell.
pub fn write_ablation_csv(report: &AblationReport, out: impl Write) -> Result<(), StudyError> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["circuit".to_string()];
    header.extend(report.columns.iter().map(|(s, k)| format!("{}_{}", s.name(), k.name())));
    w.write_record(&header)?;
    for r in &report.rows {
        let mut rec = vec![r.circuit.clone()];
        rec.extend(r.values.iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExtendedRow {
    pub action_space: String,
    pub scheme: RewardScheme,
    pub mean_area_ratio: f64,
    pub mean_delay_ratio: f64,
    pub sequence: String,
}

pub fn action_space_names(ids: &[OperatorId]) -> Vec<String> {
    ids.iter().map(|o| o.name().to_string()).collect()
}

/// For the core and extended action spaces and each scheme: trains a
/// policy on `dataset`, designs a sequence and scores it on `dataset`.
/// Scores of a space are the mean over `study.seeds`.
pub fn extended_operator_study(
    dataset: &[(String, Aig)],
    env_config: &EnvConfig,
    train_config: &TrainConfig,
    study: &StudyConfig,
) -> Result<Vec<ExtendedRow>, StudyError> {
    if dataset.is_empty() || study.seeds.is_empty() {
        return Err(StudyError::Invalid("extended study needs circuits and seeds".into()));
    }
    let registry = Arc::new(Registry::extended());
    let spaces = [("core", action_space_names(&OperatorId::CORE)), ("extended", action_space_names(&OperatorId::ALL))];
    let cells: Vec<(usize, RewardScheme, u64)> =
        (0..spaces.len()).flat_map(|s| study.schemes.iter().flat_map(move |&r| study.seeds.iter().map(move |&seed| (s, r, seed)))).collect();
    let results: Vec<(f64, f64, OperatorSequence)> = cells
        .par_iter()
        .map(|&(s, scheme, seed)| {
            let cfg = EnvConfig { reward_scheme: scheme, action_space: spaces[s].1.clone(), ..env_config.clone() };
            let env = SynthEnv::new(cfg, registry.clone())?.with_memo(1 << 14);
            let tree = SeedTree::new(seed);
            let tc = TrainConfig { seed: tree.child("train").seed(), ..train_config.clone() };
            let trained = train(dataset, &env, &tc, |_| {})?;
            let d = design(dataset, &trained.params, &spaces[s].1, study.seq_len, study.n_candidates, scheme, &registry, &mut tree.stream("design"))?;
            let best = d.best_score();
            Ok((best.mean_area_ratio(), best.mean_delay_ratio(), d.best_sequence().clone()))
        })
        .collect::<Result<_, StudyError>>()?;
    let per = study.seeds.len();
    Ok(results
        .chunks(per)
        .zip(cells.chunks(per))
        .map(|(r, c)| ExtendedRow {
            action_space: spaces[c[0].0].0.to_string(),
            scheme: c[0].1,
            mean_area_ratio: mean(r.iter().map(|x| x.0)),
            mean_delay_ratio: mean(r.iter().map(|x| x.1)),
            sequence: r.iter().map(|x| x.2.ops.join(";")).collect::<Vec<_>>().join(" | "),
        })
        .collect())
}

pub fn write_extended_csv(rows: &[ExtendedRow], out: impl Write) -> Result<(), StudyError> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Exhaustive search over all length-2 sequences from `action_space`.
/// Returns the best pair and its final metric ratio; ties keep the first
/// pair in enumeration order.
pub fn brute_force_length2(circuit: &Aig, action_space: &[String], scheme: RewardScheme, registry: &Registry) -> Result<(OperatorSequence, f64), StudyError> {
    if action_space.is_empty() {
        return Err(StudyError::Invalid("empty action space".into()));
    }
    let before = scheme.metric(&circuit.stats());
    let first: Vec<Aig> = action_space
        .par_iter()
        .map(|a| registry.apply(a, circuit).map_err(|e| DesignError::OperatorFailure { circuit: "brute-force".into(), op: a.clone(), source: e }))
        .collect::<Result<_, _>>()?;
    let pairs: Vec<(usize, usize)> = (0..action_space.len()).flat_map(|i| (0..action_space.len()).map(move |j| (i, j))).collect();
    let vals: Vec<f64> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let out = registry.apply(&action_space[j], &first[i]).map_err(|e| DesignError::OperatorFailure { circuit: "brute-force".into(), op: action_space[j].clone(), source: e })?;
            Ok(ratio(scheme.metric(&out.stats()), before))
        })
        .collect::<Result<_, StudyError>>()?;
    let mut best = 0;
    for (k, v) in vals.iter().enumerate() {
        if *v < vals[best] {
            best = k;
        }
    }
    let (i, j) = pairs[best];
    Ok((OperatorSequence::new(vec![action_space[i].clone(), action_space[j].clone()]), vals[best]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aig::random::random_redundant_aig;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn core_names() -> Vec<String> {
        action_space_names(&OperatorId::CORE)
    }

    fn small_corpus(n: usize) -> Vec<(String, Aig)> {
        let mut r = ChaCha8Rng::seed_from_u64(77);
        (0..n).map(|i| (format!("g{i}"), random_redundant_aig(&mut r, 8, 120, 3))).collect()
    }

    #[test]
    fn uniform_policy_concentrates() {
        // Hoeffding: P(|f - 1/7| > 0.03) <= 2 exp(-2 * 7000 * 0.03^2) ~ 7e-6 per bin.
        let p = PolicyParams::zeros(4, 7);
        let h = operator_distribution(&p, &core_names(), 7000, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(h.n, 7000);
        let f = h.frequencies();
        assert!((f.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!(f.iter().all(|&x| (0.11..=0.18).contains(&x)), "{f:?}");
    }

    #[test]
    fn deterministic_policy_single_bin() {
        let mut p = PolicyParams::zeros(4, 7);
        p.output.bias[3] = 80.0;
        let h = operator_distribution(&p, &core_names(), 500, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        assert_eq!(h.frequencies()[3], 1.0);
        assert!(operator_distribution(&p, &core_names(), 0, &mut ChaCha8Rng::seed_from_u64(2)).is_err());
    }

    #[test]
    fn tv_distance_is_half_l1() {
        let n = vec!["a".to_string(), "b".to_string()];
        let mut a = OperatorHistogram::new(&n);
        let mut b = OperatorHistogram::new(&n);
        a.record(0);
        b.record(1);
        assert_eq!(a.tv_distance(&b), 1.0);
        assert_eq!(a.tv_distance(&a), 0.0);
    }

    #[test]
    fn identical_ops_have_zero_spread() {
        let (name, g) = &small_corpus(1)[0];
        let seq = OperatorSequence::new(vec!["rewrite".into(); 5]);
        let r = permutation_study(&seq, name, g, 6, RewardScheme::AreaFirst, &Registry::core(), &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert_eq!(r.std, 0.0);
        assert_eq!(r.min, r.max);
        assert_eq!(r.values.len(), 6);
    }

    #[test]
    fn permutation_row_is_ordered() {
        let (name, g) = &small_corpus(1)[0];
        let seq = OperatorSequence::new(core_names());
        let r = permutation_study(&seq, name, g, 10, RewardScheme::AreaFirst, &Registry::core(), &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        assert!(r.min <= r.mean && r.mean <= r.max && r.std >= 0.0);
        let mut buf = Vec::new();
        write_permutation_csv(&PermutationReport { rows: vec![r] }, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(text.starts_with("circuit,scheme,base_sequence,n_shuffles,mean,max,min,std"));
    }

    #[test]
    fn population_std_matches_definition() {
        assert_eq!(population_std(&[1.0, 3.0]), 1.0);
        assert_eq!(population_std(&[2.0; 4]), 0.0);
    }

    #[test]
    fn ablation_shape() {
        let data = small_corpus(2);
        let tc = TrainConfig { max_steps: 3, ..TrainConfig::default() };
        let study = StudyConfig { seeds: vec![0], schemes: vec![RewardScheme::AreaFirst], ..StudyConfig::default() };
        let env = EnvConfig { horizon: 3, ..EnvConfig::default() };
        let reg = Arc::new(Registry::core());
        let r = feature_ablation(&data, &[FeatureKind::Random4D, FeatureKind::Statistics7D], &env, &tc, reg.clone(), &study).unwrap();
        assert_eq!(r.rows.len(), data.len() + 1);
        assert_eq!(r.rows.last().unwrap().circuit, "AVERAGE");
        assert_eq!(r.columns.len(), 2);
        let one = feature_ablation(&data, &[FeatureKind::Random4D], &env, &tc, reg, &study).unwrap();
        assert_eq!(one.columns.len(), 1);
        let mut buf = Vec::new();
        write_ablation_csv(&r, &mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("circuit,area_random,area_stats\n"));
    }

    #[test]
    fn extended_study_shape() {
        let data = small_corpus(2);
        let tc = TrainConfig { max_steps: 2, ..TrainConfig::default() };
        let study = StudyConfig { seeds: vec![5], seq_len: 3, n_candidates: 2, ..StudyConfig::default() };
        let env = EnvConfig { horizon: 3, ..EnvConfig::default() };
        let rows = extended_operator_study(&data, &env, &tc, &study).unwrap();
        assert_eq!(rows.len(), 4);
        assert_eq!(rows.iter().filter(|r| r.action_space == "extended").count(), 2);
    }

    #[test]
    fn brute_force_superset_never_worse() {
        let reg = Registry::extended();
        for (_, g) in small_corpus(3) {
            for scheme in RewardScheme::ALL {
                let (_, core) = brute_force_length2(&g, &core_names(), scheme, &reg).unwrap();
                let (seq, ext) = brute_force_length2(&g, &action_space_names(&OperatorId::ALL), scheme, &reg).unwrap();
                assert!(ext <= core);
                let direct = ratio(scheme.metric(&run_sequence(&seq, "g", &g, &reg).unwrap().stats()), scheme.metric(&g.stats()));
                assert_eq!(direct, ext);
            }
        }
    }

    #[test]
    fn unknown_study() {
        assert!(matches!(check_study("nope"), Err(StudyError::UnknownStudy(_))));
        assert_eq!(check_study("ablation").unwrap(), "ablation");
    }
}
