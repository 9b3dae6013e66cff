//! Invariants checked against the bundled benchmark corpus.

use aigwave::aig::{check_equiv_default, parse_aiger_auto, write_aiger, AigerFormat};
use aigwave::analysis::{operator_distribution, permutation_study, write_permutation_csv, PermutationReport};
use aigwave::designer::{design, evaluate_sequence, resyn2_baseline, sample_sequence, OperatorSequence};
use aigwave::manifest::{load_split, Manifest, Split};
use aigwave::policy::{action_probs, train};
use aigwave::{Aig, EnvConfig, OperatorId, Registry, RewardScheme, SeedTree, SynthEnv, TrainConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::path::Path;
use std::sync::{Arc, OnceLock};

fn manifest() -> Manifest {
    Manifest::load(&Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus/manifest.txt")).unwrap()
}

fn split(s: Split) -> Vec<(String, Aig)> {
    load_split(&manifest(), s).unwrap()
}

fn all() -> Vec<(String, Aig)> {
    let mut v = split(Split::Train);
    v.extend(split(Split::Eval));
    v
}

fn core_names() -> Vec<String> {
    OperatorId::CORE.iter().map(|o| o.name().to_string()).collect()
}

/// One default training run on the train split, shared by several tests.
fn trained() -> &'static aigwave::PolicyParams {
    static P: OnceLock<aigwave::PolicyParams> = OnceLock::new();
    P.get_or_init(|| {
        let env = SynthEnv::new(EnvConfig::default(), Arc::new(Registry::core())).unwrap().with_memo(1 << 16);
        train(&split(Split::Train), &env, &TrainConfig::default(), |_| {}).unwrap().params
    })
}

#[test]
fn corpus_shape() {
    let m = manifest();
    assert_eq!(m.select(Split::Train).len(), 6);
    assert_eq!(m.select(Split::Eval).len(), 6);
    for (name, g) in all() {
        assert!(g.num_ands() <= 20_000, "{name}");
        g.check_invariants().unwrap();
    }
}

#[test]
fn aiger_round_trip_on_corpus() {
    for (name, g) in all() {
        for fmt in [AigerFormat::Ascii, AigerFormat::Binary] {
            let back = parse_aiger_auto(&write_aiger(&g, fmt)).unwrap();
            assert!(check_equiv_default(&g, &back).unwrap().is_equivalent(), "{name}");
        }
    }
}

#[test]
fn every_operator_reaches_a_fixpoint() {
    let reg = Registry::extended();
    for (name, g) in all() {
        for op in OperatorId::ALL {
            let mut cur = g.clone();
            let mut settled = false;
            for _ in 0..20 {
                let next = reg.apply(op.name(), &cur).unwrap();
                if next == cur {
                    settled = true;
                    break;
                }
                cur = next;
            }
            assert!(settled, "{op} on {name} still changing after 20 passes");
        }
    }
}

#[test]
fn open_loop_matches_stepping_the_environment() {
    let reg = Arc::new(Registry::core());
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let sampled = sample_sequence(trained(), &core_names(), 10, &mut rng).unwrap();
    for seq in [resyn2_baseline(), sampled] {
        let data = all();
        let score = evaluate_sequence(&seq, &data, RewardScheme::AreaFirst, &reg).unwrap();
        let env = SynthEnv::new(EnvConfig { horizon: seq.len(), ..EnvConfig::default() }, reg.clone()).unwrap();
        for ((_, g), s) in data.iter().zip(&score.per_circuit) {
            let mut state = env.reset(g.clone(), &mut rng);
            for op in &seq.ops {
                let a = core_names().iter().position(|n| n == op).unwrap();
                state = env.step(&state, a, &mut rng).unwrap().0;
            }
            assert_eq!((state.stats.area(), state.stats.delay()), (s.final_area, s.final_delay), "{}", s.circuit);
        }
    }
}

#[test]
fn random_feature_policy_ignores_its_inputs() {
    let p = trained();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let a: Vec<f64> = (0..4).map(|_| rng.random()).collect();
        let b: Vec<f64> = (0..4).map(|_| rng.random()).collect();
        let (pa, pb) = (action_probs(p, &a).unwrap(), action_probs(p, &b).unwrap());
        worst = worst.max(pa.iter().zip(&pb).map(|(x, y)| (x - y).abs()).sum::<f64>() / 2.0);
    }
    assert!(worst <= 0.05, "TV between feature draws reached {worst}");
}

#[test]
fn independent_histograms_agree() {
    let h1 = operator_distribution(trained(), &core_names(), 10_000, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
    let h2 = operator_distribution(trained(), &core_names(), 10_000, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
    assert!(h1.tv_distance(&h2) <= 0.03, "{}", h1.tv_distance(&h2));
}

#[test]
fn designed_sequence_transfers_to_held_out_circuits() {
    let reg = Registry::core();
    let train_set = split(Split::Train);
    let d = design(&train_set, trained(), &core_names(), 10, 10, RewardScheme::AreaFirst, &reg, &mut SeedTree::new(0).stream("design")).unwrap();
    let held = evaluate_sequence(d.best_sequence(), &split(Split::Eval), RewardScheme::AreaFirst, &reg).unwrap();
    let gap = (held.mean_area_ratio() - d.best_score().mean_area_ratio()).abs();
    assert!(gap <= 0.1, "train {} vs held-out {}", d.best_score().mean_area_ratio(), held.mean_area_ratio());
}

#[test]
fn training_is_reproducible() {
    let data = split(Split::Train);
    let env = || SynthEnv::new(EnvConfig { horizon: 4, ..EnvConfig::default() }, Arc::new(Registry::core())).unwrap();
    let cfg = TrainConfig { max_steps: 15, seed: 11, ..TrainConfig::default() };
    let a = train(&data, &env(), &cfg, |_| {}).unwrap();
    let b = train(&data, &env().with_memo(64), &cfg, |_| {}).unwrap();
    assert_eq!(a.params, b.params);
    assert_eq!(a.log.iter().map(|r| r.ret).collect::<Vec<_>>(), b.log.iter().map(|r| r.ret).collect::<Vec<_>>());
}

#[test]
fn permutation_csv_is_reproducible() {
    let data = all();
    let seq = OperatorSequence::new(core_names());
    let reg = Registry::core();
    let run = || {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rows = data[..3].iter().map(|(n, g)| permutation_study(&seq, n, g, 5, RewardScheme::AreaFirst, &reg, &mut rng).unwrap()).collect();
        let mut buf = Vec::new();
        write_permutation_csv(&PermutationReport { rows }, &mut buf).unwrap();
        buf
    };
    assert_eq!(run(), run());
}
