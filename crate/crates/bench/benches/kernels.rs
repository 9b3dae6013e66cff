use std::hint::black_box;
use std::path::Path;

use aigwave::aig::read_aiger;
use aigwave::ops::cuts::enumerate_cuts;
use aigwave::ops::npn::npn_canonize;
use aigwave::ops::{apply, OperatorId};
use aigwave::policy::{policy_gradient, Trajectory};
use aigwave::{Aig, PolicyParams};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn circuit(name: &str) -> Aig {
    let p = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus").join(format!("{name}.aig"));
    read_aiger(&p).unwrap()
}

fn operators(c: &mut Criterion) {
    let g = circuit("c880");
    let mut group = c.benchmark_group("operator/c880");
    group.sample_size(20);
    for op in OperatorId::ALL {
        group.bench_with_input(BenchmarkId::from_parameter(op.name()), &op, |b, &op| b.iter(|| apply(black_box(&g), op).unwrap()));
    }
    group.finish();
}

fn npn(c: &mut Criterion) {
    c.bench_function("npn_canonize/all_65536", |b| {
        b.iter(|| (0..=u16::MAX).fold(0u32, |acc, f| acc.wrapping_add(npn_canonize(black_box(f)).0 as u32)))
    });
}

fn cuts(c: &mut Criterion) {
    let g = circuit("c880");
    let nodes: Vec<u32> = (g.num_inputs() as u32 + 1..g.num_nodes() as u32).collect();
    c.bench_function("cuts/c880_k4_every_node", |b| b.iter(|| nodes.iter().map(|&n| enumerate_cuts(black_box(&g), n, 4).len()).sum::<usize>()));
}

fn gradient(c: &mut Criterion) {
    let mut r = ChaCha8Rng::seed_from_u64(0);
    let p = PolicyParams::init(4, 7, Some(32), &mut r);
    let f: Vec<Vec<f64>> = (0..10).map(|_| (0..4).map(|_| r.random()).collect()).collect();
    let a: Vec<usize> = (0..10).map(|_| r.random_range(0..7)).collect();
    let t = Trajectory::new(f, a, vec![0.01; 10], 1.0);
    c.bench_function("policy_gradient/mlp32_h10", |b| b.iter(|| policy_gradient(black_box(&p), &t, 0.01, None).unwrap()));
}

criterion_group!(benches, operators, npn, cuts, gradient);
criterion_main!(benches);
