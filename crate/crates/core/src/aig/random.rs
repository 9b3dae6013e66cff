//! Random graph generation for property tests and benchmarks.

use rand::Rng;

use super::{Aig, AigBuilder, Literal};

/// Generates a random graph with `num_inputs` inputs, roughly `num_ands`
/// gates (fewer after hashing and constant folding) and `num_outputs`
/// outputs. Fanins are biased toward recent nodes so the result has depth.
pub fn random_aig<R: Rng + ?Sized>(rng: &mut R, num_inputs: usize, num_ands: usize, num_outputs: usize) -> Aig {
    assert!(num_inputs > 0);
    let mut b = AigBuilder::new(num_inputs);
    let mut pool: Vec<Literal> = (0..num_inputs).map(|i| b.input(i)).collect();
    for _ in 0..num_ands {
        let pick = |rng: &mut R, pool: &[Literal]| {
            let n = pool.len();
            let idx = if rng.random_bool(0.6) { n - 1 - rng.random_range(0..n.min(8)) } else { rng.random_range(0..n) };
            pool[idx].negate_if(rng.random_bool(0.5))
        };
        let x = pick(rng, &pool);
        let y = pick(rng, &pool);
        let z = b.and(x, y);
        if !z.is_const() && !pool.contains(&z.regular()) {
            pool.push(z.regular());
        }
    }
    for k in 0..num_outputs {
        let idx = if k == 0 { pool.len() - 1 } else { rng.random_range(0..pool.len()) };
        b.add_output(pool[idx].negate_if(rng.random_bool(0.5)));
    }
    b.build()
}

/// A random graph that contains deliberate functional redundancy: some
/// functions are built twice through different structures.
pub fn random_redundant_aig<R: Rng + ?Sized>(rng: &mut R, num_inputs: usize, num_ands: usize, num_outputs: usize) -> Aig {
    let base = random_aig(rng, num_inputs, num_ands, num_outputs);
    let mut b = AigBuilder::new(num_inputs);
    let inputs: Vec<Literal> = (0..num_inputs).map(|i| b.input(i)).collect();
    let outs = super::transfer(&base, &mut b, &inputs);
    let mut extra = Vec::new();
    for &o in &outs {
        if rng.random_bool(0.5) {
            // o & (o | x) and o | (o & x) both equal o.
            let x = inputs[rng.random_range(0..num_inputs)].negate_if(rng.random_bool(0.5));
            let or = b.or(o, x);
            let r = b.and(o, or);
            extra.push(r);
        } else {
            extra.push(o);
        }
    }
    for o in extra {
        b.add_output(o);
    }
    b.build()
}
