//! Common operator sequences: sampling from a policy, scoring on a corpus
//! and picking the best candidate.

use crate::aig::Aig;
use crate::env::RewardScheme;
use crate::ops::{OpError, Registry};
use crate::policy::{sample_action, PolicyError, PolicyParams};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DesignError {
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("sequence is empty")]
    EmptySequence,
    #[error("unknown operator `{0}`")]
    UnknownOperator(String),
    #[error("circuit `{circuit}`: operator `{op}` failed: {source}")]
    OperatorFailure { circuit: String, op: String, source: OpError },
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error("CSV output: {0}")]
    Csv(#[from] csv::Error),
    #[error("I/O: {0}")]
    Io(#[from] std::io::Error),
}

/// Where a sequence came from; serialized as `# key: value` lines.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub checkpoint: Option<String>,
    pub seed: Option<u64>,
    pub corpus: Option<String>,
    pub metric: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OperatorSequence {
    pub ops: Vec<String>,
    pub provenance: Provenance,
}

impl OperatorSequence {
    pub fn new(ops: Vec<String>) -> Self {
        OperatorSequence { ops, provenance: Provenance::default() }
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    /// Fails on the first name `registry` does not know.
    pub fn validate(&self, registry: &Registry) -> Result<(), DesignError> {
        if self.ops.is_empty() {
            return Err(DesignError::EmptySequence);
        }
        match self.ops.iter().find(|o| registry.index_of(o).is_none()) {
            Some(o) => Err(DesignError::UnknownOperator(o.clone())),
            None => Ok(()),
        }
    }

    /// One operator per line, provenance as leading comments.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let p = &self.provenance;
        let fields = [("checkpoint", p.checkpoint.clone()), ("seed", p.seed.map(|x| x.to_string())), ("corpus", p.corpus.clone()), ("metric", p.metric.clone())];
        for (k, v) in fields {
            if let Some(v) = v {
                s.push_str(&format!("# {k}: {v}\n"));
            }
        }
        for o in &self.ops {
            s.push_str(o);
            s.push('\n');
        }
        s
    }

    pub fn parse(text: &str) -> OperatorSequence {
        let mut seq = OperatorSequence::default();
        for line in text.lines() {
            let line = line.trim();
            if let Some(c) = line.strip_prefix('#') {
                if let Some((k, v)) = c.trim().split_once(':') {
                    let v = v.trim().to_string();
                    match k.trim() {
                        "checkpoint" => seq.provenance.checkpoint = Some(v),
                        "seed" => seq.provenance.seed = v.parse().ok(),
                        "corpus" => seq.provenance.corpus = Some(v),
                        "metric" => seq.provenance.metric = Some(v),
                        _ => {}
                    }
                }
            } else if !line.is_empty() {
                seq.ops.push(line.to_string());
            }
        }
        seq
    }
}

/// The classic ten-step script.
pub fn resyn2_baseline() -> OperatorSequence {
    let ops = ["balance", "rewrite", "refactor", "balance", "rewrite", "rewrite -z", "balance", "refactor -z", "rewrite -z", "balance"];
    OperatorSequence { ops: ops.iter().map(|s| s.to_string()).collect(), provenance: Provenance { metric: Some("baseline".into()), ..Provenance::default() } }
}

/// Draws `len` actions independently, each with fresh uniform features.
pub fn sample_sequence(params: &PolicyParams, action_space: &[String], len: usize, rng: &mut impl Rng) -> Result<OperatorSequence, PolicyError> {
    assert_eq!(params.num_actions, action_space.len(), "policy and action space disagree");
    let mut f = vec![0.0; params.feature_dim];
    let ops = (0..len)
        .map(|_| {
            f.iter_mut().for_each(|x| *x = rng.random());
            Ok(action_space[sample_action(params, &f, rng)?.0].clone())
        })
        .collect::<Result<_, PolicyError>>()?;
    Ok(OperatorSequence::new(ops))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircuitScore {
    pub circuit: String,
    pub init_area: usize,
    pub init_delay: usize,
    pub final_area: usize,
    pub final_delay: usize,
    pub area_ratio: f64,
    pub delay_ratio: f64,
    pub wall_ms: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SequenceScore {
    pub scheme: RewardScheme,
    pub per_circuit: Vec<CircuitScore>,
    /// Mean of the scheme's ratio over circuits.
    pub aggregate: f64,
}

impl SequenceScore {
    pub fn mean_area_ratio(&self) -> f64 {
        mean(self.per_circuit.iter().map(|c| c.area_ratio))
    }

    pub fn mean_delay_ratio(&self) -> f64 {
        mean(self.per_circuit.iter().map(|c| c.delay_ratio))
    }
}

pub fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        s / n as f64
    }
}

/// `after / before`, with an empty metric counting as unchanged.
pub fn ratio(after: usize, before: usize) -> f64 {
    if before == 0 {
        1.0
    } else {
        after as f64 / before as f64
    }
}

/// Applies `seq` in order and returns the result.
pub fn run_sequence(seq: &OperatorSequence, circuit: &str, aig: &Aig, registry: &Registry) -> Result<Aig, DesignError> {
    let mut cur = aig.clone();
    for op in &seq.ops {
        cur = registry.apply(op, &cur).map_err(|source| DesignError::OperatorFailure { circuit: circuit.into(), op: op.clone(), source })?;
    }
    Ok(cur)
}

pub fn score_circuit(seq: &OperatorSequence, name: &str, aig: &Aig, registry: &Registry) -> Result<(CircuitScore, Aig), DesignError> {
    let start = Instant::now();
    let out = run_sequence(seq, name, aig, registry)?;
    let (a, b) = (aig.stats(), out.stats());
    let score = CircuitScore {
        circuit: name.to_string(),
        init_area: a.area(),
        init_delay: a.delay(),
        final_area: b.area(),
        final_delay: b.delay(),
        area_ratio: ratio(b.area(), a.area()),
        delay_ratio: ratio(b.delay(), a.delay()),
        wall_ms: start.elapsed().as_millis() as u64,
    };
    Ok((score, out))
}

/// Scores `seq` on every circuit, in dataset order.
pub fn evaluate_sequence(seq: &OperatorSequence, dataset: &[(String, Aig)], scheme: RewardScheme, registry: &Registry) -> Result<SequenceScore, DesignError> {
    if dataset.is_empty() {
        return Err(DesignError::EmptyDataset);
    }
    seq.validate(registry)?;
    let per_circuit = dataset.par_iter().map(|(n, a)| score_circuit(seq, n, a, registry).map(|(s, _)| s)).collect::<Result<Vec<_>, _>>()?;
    let aggregate = mean(per_circuit.iter().map(|c| match scheme {
        RewardScheme::AreaFirst => c.area_ratio,
        RewardScheme::DelayFirst => c.delay_ratio,
    }));
    Ok(SequenceScore { scheme, per_circuit, aggregate })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Design {
    pub candidates: Vec<(OperatorSequence, SequenceScore)>,
    pub best: usize,
}

impl Design {
    pub fn best_sequence(&self) -> &OperatorSequence {
        &self.candidates[self.best].0
    }

    pub fn best_score(&self) -> &SequenceScore {
        &self.candidates[self.best].1
    }
}

/// Samples `n_candidates` sequences of length `len` and keeps the one with
/// the lowest aggregate ratio; ties go to the earlier candidate.
#[allow(clippy::too_many_arguments)]
pub fn design(
    dataset: &[(String, Aig)],
    params: &PolicyParams,
    action_space: &[String],
    len: usize,
    n_candidates: usize,
    scheme: RewardScheme,
    registry: &Registry,
    rng: &mut impl Rng,
) -> Result<Design, DesignError> {
    if dataset.is_empty() {
        return Err(DesignError::EmptyDataset);
    }
    assert!(n_candidates >= 1 && len >= 1);
    let seqs: Vec<OperatorSequence> = (0..n_candidates).map(|_| sample_sequence(params, action_space, len, rng)).collect::<Result<_, _>>()?;
    let scores: Vec<SequenceScore> = seqs.par_iter().map(|s| evaluate_sequence(s, dataset, scheme, registry)).collect::<Result<_, _>>()?;
    let mut best = 0;
    for (i, s) in scores.iter().enumerate() {
        if s.aggregate < scores[best].aggregate {
            best = i;
        }
    }
    let candidates = seqs.into_iter().zip(scores).collect();
    Ok(Design { candidates, best })
}

/// Per-circuit rows followed by a `MEAN` row.
pub fn write_score_csv(score: &SequenceScore, out: impl Write) -> Result<(), DesignError> {
    let mut w = csv::Writer::from_writer(out);
    for c in &score.per_circuit {
        w.serialize(c)?;
    }
    let n = score.per_circuit.len().max(1) as f64;
    let sum = |f: fn(&CircuitScore) -> usize| score.per_circuit.iter().map(f).sum::<usize>() as f64 / n;
    w.write_record([
        "MEAN".to_string(),
        sum(|c| c.init_area).to_string(),
        sum(|c| c.init_delay).to_string(),
        sum(|c| c.final_area).to_string(),
        sum(|c| c.final_delay).to_string(),
        score.mean_area_ratio().to_string(),
        score.mean_delay_ratio().to_string(),
        score.per_circuit.iter().map(|c| c.wall_ms).sum::<u64>().to_string(),
    ])?;
    w.flush()?;
    Ok(())
}

/// One row per candidate: index, ops joined by `;`, aggregate, selected flag.
pub fn write_candidates_csv(d: &Design, out: impl Write) -> Result<(), DesignError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["candidate", "sequence", "aggregate", "mean_area_ratio", "mean_delay_ratio", "selected"])?;
    for (i, (s, sc)) in d.candidates.iter().enumerate() {
        w.write_record([
            i.to_string(),
            s.ops.join(";"),
            sc.aggregate.to_string(),
            sc.mean_area_ratio().to_string(),
            sc.mean_delay_ratio().to_string(),
            (i == d.best).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
