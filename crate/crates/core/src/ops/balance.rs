//! Delay-oriented rebalancing of AND trees.

use crate::aig::{Aig, AigBuilder, Literal};
use std::cmp::Reverse;
use std::collections::BinaryHeap;

/// Rebuilds every maximal AND tree (a supergate) by repeatedly pairing the
/// two lowest-level operands.
pub fn balance(aig: &Aig) -> Aig {
    let n = aig.num_nodes();
    let refs = aig.fanout_counts();
    // A node is absorbed into its single fanout's supergate when it is
    // referenced exactly once, uncomplemented, by an AND.
    let mut pos_refs = vec![0u32; n];
    for (_, fanins) in aig.and_nodes() {
        for f in fanins {
            if !f.is_negated() {
                pos_refs[f.index() as usize] += 1;
            }
        }
    }
    let absorbed = |m: u32| aig.is_and(m) && refs[m as usize] == 1 && pos_refs[m as usize] == 1;

    let mut b = AigBuilder::new(aig.num_inputs());
    let mut map = vec![Literal::FALSE; n];
    for i in 0..aig.num_inputs() {
        map[i + 1] = b.input(i);
    }
    let mut leaves = Vec::new();
    let mut stack = Vec::new();
    let mut heap = BinaryHeap::new();
    for (m, _) in aig.and_nodes() {
        if absorbed(m) || refs[m as usize] == 0 {
            continue;
        }
        leaves.clear();
        stack.push(m);
        while let Some(x) = stack.pop() {
            for f in aig.fanins(x) {
                if !f.is_negated() && absorbed(f.index()) {
                    stack.push(f.index());
                } else {
                    leaves.push(map[f.index() as usize].negate_if(f.is_negated()));
                }
            }
        }
        leaves.sort_unstable();
        leaves.dedup();
        map[m as usize] = if leaves.windows(2).any(|w| w[0] == !w[1]) || leaves.contains(&Literal::FALSE) {
            Literal::FALSE
        } else {
            heap.clear();
            heap.extend(leaves.iter().map(|&l| Reverse((b.level(l), l))));
            while heap.len() > 1 {
                let Reverse((_, x)) = heap.pop().unwrap();
                let Reverse((_, y)) = heap.pop().unwrap();
                let z = b.and(x, y);
                heap.push(Reverse((b.level(z), z)));
            }
            heap.pop().map_or(Literal::TRUE, |Reverse((_, l))| l)
        };
    }
    for &o in aig.outputs() {
        b.add_output(map[o.index() as usize].negate_if(o.is_negated()));
    }
    b.build()
}
