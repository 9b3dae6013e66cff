use aigwave::aig::random::{random_aig, random_redundant_aig};
use aigwave::aig::{check_equiv_default, parse_aiger_auto, simulate, write_aiger, AigerFormat, BitMatrix, EquivVerdict};
use aigwave::analysis::{operator_distribution, permutation_study};
use aigwave::designer::{design, OperatorSequence};
use aigwave::ops::npn::{npn_canonize, NpnTransform};
use aigwave::policy::{action_probs, PolicyParams};
use aigwave::{Aig, EnvConfig, OperatorId, Registry, RewardScheme, SynthEnv};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

fn graph(seed: u64, inputs: usize, ands: usize, outputs: usize, redundant: bool) -> Aig {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    if redundant {
        random_redundant_aig(&mut r, inputs, ands, outputs)
    } else {
        random_aig(&mut r, inputs, ands, outputs)
    }
}

fn arb_aig() -> impl Strategy<Value = Aig> {
    (any::<u64>(), 2usize..=12, 1usize..=150, 1usize..=4, any::<bool>()).prop_map(|(s, i, a, o, r)| graph(s, i, a, o, r))
}

/// Straightforward recursive evaluation of one literal.
fn eval_naive(aig: &Aig, lit: aigwave::Literal, inputs: &[bool], memo: &mut Vec<Option<bool>>) -> bool {
    let n = lit.index() as usize;
    let v = if n == 0 {
        false
    } else if n <= aig.num_inputs() {
        inputs[n - 1]
    } else if let Some(v) = memo[n] {
        v
    } else {
        let [a, b] = aig.fanins(n as u32);
        let v = eval_naive(aig, a, inputs, memo) && eval_naive(aig, b, inputs, memo);
        memo[n] = Some(v);
        v
    };
    v ^ lit.is_negated()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 128, ..ProptestConfig::default() })]

    #[test]
    fn operators_preserve_function(g in arb_aig()) {
        let reg = Registry::extended();
        for op in OperatorId::ALL {
            let out = reg.apply(op.name(), &g).unwrap();
            prop_assert!(out.check_invariants().is_ok(), "{op}: {:?}", out.check_invariants());
            prop_assert_eq!(check_equiv_default(&g, &out).unwrap(), EquivVerdict::EquivalentExhaustive, "{}", op);
        }
    }

    #[test]
    fn non_zero_cost_operators_never_grow(g in arb_aig()) {
        let reg = Registry::extended();
        for op in OperatorId::ALL.iter().filter(|o| !o.is_zero_cost()) {
            let out = reg.apply(op.name(), &g).unwrap();
            prop_assert!(out.num_ands() <= g.num_ands(), "{op}: {} -> {}", g.num_ands(), out.num_ands());
        }
        prop_assert!(reg.apply("balance", &g).unwrap().depth() <= g.depth());
    }

    #[test]
    fn operators_are_deterministic(g in arb_aig()) {
        let reg = Registry::extended();
        for op in OperatorId::ALL {
            let a = reg.apply(op.name(), &g).unwrap();
            let b = reg.apply(op.name(), &g).unwrap();
            prop_assert_eq!(write_aiger(&a, AigerFormat::Binary), write_aiger(&b, AigerFormat::Binary));
        }
    }

    #[test]
    fn aiger_round_trip(g in arb_aig(), binary in any::<bool>()) {
        let fmt = if binary { AigerFormat::Binary } else { AigerFormat::Ascii };
        let back = parse_aiger_auto(&write_aiger(&g, fmt)).unwrap();
        prop_assert!(check_equiv_default(&g, &back).unwrap().is_equivalent());
        prop_assert_eq!(back.num_ands(), g.num_ands());
    }

    #[test]
    fn simulation_matches_naive_evaluation(g in arb_aig(), seed in any::<u64>()) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let pats: Vec<Vec<bool>> = (0..64).map(|_| (0..g.num_inputs()).map(|_| r.random()).collect()).collect();
        let out = simulate(&g, &BitMatrix::from_patterns(g.num_inputs(), &pats)).unwrap();
        for (c, p) in pats.iter().enumerate() {
            let mut memo = vec![None; g.num_nodes()];
            for (o, &lit) in g.outputs().iter().enumerate() {
                prop_assert_eq!(out.get(o, c), eval_naive(&g, lit, p, &mut memo));
            }
        }
    }

    #[test]
    fn edges_are_twice_nodes(g in arb_aig()) {
        let s = g.stats();
        prop_assert_eq!(s.edges, 2 * s.nodes);
        prop_assert!((0.0..=1.0).contains(&s.pct_ands) && (0.0..=1.0).contains(&s.pct_nots));
    }

    #[test]
    fn npn_canonical_form_is_class_invariant(f in any::<u16>(), perm in Just([0u8, 1, 2, 3]).prop_shuffle(), neg in 0u8..16, out in any::<bool>()) {
        let t = NpnTransform { perm, neg, out };
        let (c, tr) = npn_canonize(f);
        prop_assert_eq!(npn_canonize(t.apply(f)).0, c);
        prop_assert_eq!(tr.apply(c), f);
        prop_assert_eq!(tr.inverse().apply(f), c);
    }

    #[test]
    fn episode_rewards_telescope(g in arb_aig(), actions in prop::collection::vec(0usize..7, 1..8), scheme in prop::sample::select(RewardScheme::ALL.to_vec()), seed in any::<u64>()) {
        let cfg = EnvConfig { horizon: actions.len(), reward_scheme: scheme, ..EnvConfig::default() };
        let env = SynthEnv::new(cfg, Arc::new(Registry::core())).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut state = env.reset(g.clone(), &mut rng);
        let mut total = 0.0;
        for &a in &actions {
            let snapshot = state.clone();
            let (next, t) = env.step(&state, a, &mut rng).unwrap();
            prop_assert_eq!(&state, &snapshot, "step must not touch its input");
            prop_assert!(t.reward <= 1.0);
            total += t.reward;
            state = next;
        }
        let m0 = scheme.metric(&g.stats()) as f64;
        let expect = if m0 == 0.0 { 0.0 } else { (m0 - scheme.metric(&state.stats) as f64) / m0 };
        prop_assert!((total - expect).abs() <= 1e-12, "{total} vs {expect}");
        prop_assert!(total <= 1.0);
        prop_assert!(check_equiv_default(&g, &state.current).unwrap().is_equivalent());
    }

    #[test]
    fn action_probabilities_are_a_distribution(w in prop::collection::vec(-5.0f64..5.0, 35), f in prop::collection::vec(0.0f64..1.0, 4)) {
        let mut p = PolicyParams::zeros(4, 7);
        let n = p.to_flat().len();
        p.set_flat(&w.iter().cycle().take(n).copied().collect::<Vec<_>>());
        let probs = action_probs(&p, &f).unwrap();
        prop_assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(probs.iter().all(|&x| (0.0..=1.0).contains(&x)));
    }

    #[test]
    fn histogram_frequencies_sum_to_one(bias in prop::collection::vec(-3.0f64..3.0, 7), n in 1usize..400, seed in any::<u64>()) {
        let mut p = PolicyParams::zeros(4, 7);
        p.output.bias.copy_from_slice(&bias);
        let names: Vec<String> = OperatorId::CORE.iter().map(|o| o.name().to_string()).collect();
        let h = operator_distribution(&p, &names, n, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        prop_assert_eq!(h.n as usize, n);
        prop_assert!((h.frequencies().iter().sum::<f64>() - 1.0).abs() <= 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, ..ProptestConfig::default() })]

    #[test]
    fn design_returns_first_minimum(seed in any::<u64>(), bias in prop::collection::vec(-2.0f64..2.0, 7)) {
        let data: Vec<(String, Aig)> = (0..2).map(|i| (format!("g{i}"), graph(seed ^ i, 8, 100, 3, true))).collect();
        let mut p = PolicyParams::zeros(4, 7);
        p.output.bias.copy_from_slice(&bias);
        let names: Vec<String> = OperatorId::CORE.iter().map(|o| o.name().to_string()).collect();
        let d = design(&data, &p, &names, 4, 5, RewardScheme::AreaFirst, &Registry::core(), &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let aggs: Vec<f64> = d.candidates.iter().map(|(_, s)| s.aggregate).collect();
        let min = aggs.iter().copied().fold(f64::INFINITY, f64::min);
        prop_assert_eq!(d.best_score().aggregate, min);
        prop_assert_eq!(d.best, aggs.iter().position(|&a| a == min).unwrap());
    }

    #[test]
    fn permutation_summary_is_ordered(seed in any::<u64>(), ops in prop::collection::vec(prop::sample::select(OperatorId::CORE.to_vec()), 2..8)) {
        let g = graph(seed, 10, 120, 3, true);
        let seq = OperatorSequence::new(ops.iter().map(|o| o.name().to_string()).collect());
        let r = permutation_study(&seq, "g", &g, 4, RewardScheme::AreaFirst, &Registry::core(), &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        prop_assert!(r.min <= r.mean && r.mean <= r.max && r.std >= 0.0);
    }
}
