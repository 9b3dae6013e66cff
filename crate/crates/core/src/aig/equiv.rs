//! Simulation-based combinational equivalence checking.
//!
//! Circuits with at most [`EXHAUSTIVE_INPUT_LIMIT`] inputs are compared on
//! every input assignment, which is a proof. Wider circuits are compared on a
//! fixed pseudo-random pattern set; agreement there is necessary but not
//! sufficient for equivalence.

use rayon::prelude::*;

use super::{eval_block, Aig, AigError, Result};

pub const EXHAUSTIVE_INPUT_LIMIT: usize = 16;
pub const DEFAULT_EQUIV_BUDGET: usize = 4096;

const BLOCK_WORDS: usize = 64;
const PATTERN_SEED: u64 = 0x5eed_a16e_0f00_d5ed;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EquivVerdict {
    EquivalentExhaustive,
    EquivalentSampled { patterns: usize },
    Inequivalent { counterexample: Vec<bool>, output: usize },
}

impl EquivVerdict {
    pub fn is_equivalent(&self) -> bool {
        !matches!(self, EquivVerdict::Inequivalent { .. })
    }
}

#[inline]
pub(crate) fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Word `w` of the stimulus for `input`. Exhaustive stimuli enumerate the
/// pattern index in binary; random stimuli hash `(input, w)`.
#[inline]
fn stimulus(exhaustive: bool, input: usize, w: usize) -> u64 {
    const VAR_MASKS: [u64; 6] = [
        0xaaaa_aaaa_aaaa_aaaa,
        0xcccc_cccc_cccc_cccc,
        0xf0f0_f0f0_f0f0_f0f0,
        0xff00_ff00_ff00_ff00,
        0xffff_0000_ffff_0000,
        0xffff_ffff_0000_0000,
    ];
    if exhaustive {
        if input < 6 {
            VAR_MASKS[input]
        } else if w >> (input - 6) & 1 == 1 {
            !0
        } else {
            0
        }
    } else {
        splitmix64(PATTERN_SEED ^ ((input as u64) << 40) ^ w as u64)
    }
}

/// Compares `a` and `b` output by output. `budget` is the number of random
/// patterns used when the circuits are too wide for exhaustive simulation.
pub fn check_equiv(a: &Aig, b: &Aig, budget: usize) -> Result<EquivVerdict> {
    if a.num_inputs() != b.num_inputs() || a.num_outputs() != b.num_outputs() {
        return Err(AigError::InterfaceMismatch {
            left_inputs: a.num_inputs(),
            left_outputs: a.num_outputs(),
            right_inputs: b.num_inputs(),
            right_outputs: b.num_outputs(),
        });
    }
    let n = a.num_inputs();
    let exhaustive = n <= EXHAUSTIVE_INPUT_LIMIT;
    let patterns = if exhaustive { 1usize << n } else { budget.max(64) };
    let words = patterns.div_ceil(64);
    let tail_mask = if patterns % 64 == 0 { !0u64 } else { (1u64 << (patterns % 64)) - 1 };

    let mismatch = (0..words.div_ceil(BLOCK_WORDS)).into_par_iter().map_init(
        || (Vec::new(), Vec::new()),
        |(buf_a, buf_b), blk| {
            let start = blk * BLOCK_WORDS;
            let nw = BLOCK_WORDS.min(words - start);
            let fill = |i: usize, dst: &mut [u64]| {
                for (k, d) in dst.iter_mut().enumerate() {
                    *d = stimulus(exhaustive, i, start + k);
                }
            };
            eval_block(a, nw, fill, buf_a);
            eval_block(b, nw, fill, buf_b);
            for w in 0..nw {
                let valid = if start + w == words - 1 { tail_mask } else { !0 };
                for (o, (la, lb)) in a.outputs().iter().zip(b.outputs()).enumerate() {
                    let va = buf_a[la.index() as usize * nw + w] ^ if la.is_negated() { !0 } else { 0 };
                    let vb = buf_b[lb.index() as usize * nw + w] ^ if lb.is_negated() { !0 } else { 0 };
                    let diff = (va ^ vb) & valid;
                    if diff != 0 {
                        let bit = diff.trailing_zeros() as usize;
                        let cex = (0..n).map(|i| stimulus(exhaustive, i, start + w) >> bit & 1 == 1).collect();
                        return Some((start + w, o, cex));
                    }
                }
            }
            None
        },
    );
    // `find_map_first` keeps the reported counterexample independent of scheduling.
    let found = mismatch.find_map_first(|m| m);
    Ok(match found {
        Some((_, output, counterexample)) => EquivVerdict::Inequivalent { counterexample, output },
        None if exhaustive => EquivVerdict::EquivalentExhaustive,
        None => EquivVerdict::EquivalentSampled { patterns },
    })
}

/// [`check_equiv`] with [`DEFAULT_EQUIV_BUDGET`] random patterns.
pub fn check_equiv_default(a: &Aig, b: &Aig) -> Result<EquivVerdict> {
    check_equiv(a, b, DEFAULT_EQUIV_BUDGET)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aig::AigBuilder;

    fn and_or(or: bool) -> Aig {
        let mut b = AigBuilder::new(2);
        let (x, y) = (b.input(0), b.input(1));
        let f = if or { b.or(x, y) } else { b.and(x, y) };
        b.add_output(f);
        b.build()
    }

    #[test]
    fn reflexive() {
        let a = and_or(false);
        assert_eq!(check_equiv_default(&a, &a).unwrap(), EquivVerdict::EquivalentExhaustive);
    }

    #[test]
    fn de_morgan() {
        let a = and_or(false);
        let mut b = AigBuilder::new(2);
        let (x, y) = (b.input(0), b.input(1));
        let nor = b.or(!x, !y);
        b.add_output(!nor);
        let b = b.build();
        assert_eq!(check_equiv_default(&a, &b).unwrap(), EquivVerdict::EquivalentExhaustive);
    }

    #[test]
    fn and_vs_or_counterexample() {
        let v = check_equiv_default(&and_or(false), &and_or(true)).unwrap();
        match v {
            EquivVerdict::Inequivalent { counterexample, output } => {
                assert_eq!(output, 0);
                assert!(counterexample == vec![true, false] || counterexample == vec![false, true]);
                // first differing pattern in enumeration order is x=1, y=0
                assert_eq!(counterexample, vec![true, false]);
            }
            other => panic!("expected inequivalent, got {other:?}"),
        }
    }

    #[test]
    fn interface_mismatch() {
        let err = check_equiv_default(&Aig::empty(2), &Aig::empty(3)).unwrap_err();
        assert!(matches!(err, AigError::InterfaceMismatch { .. }));
    }

    #[test]
    fn wide_circuits_are_sampled() {
        let mut b = AigBuilder::new(20);
        let mut acc = b.input(0);
        for i in 1..20 {
            acc = b.and(acc, b.input(i));
        }
        b.add_output(acc);
        let a = b.build();
        assert_eq!(check_equiv(&a, &a, 1000).unwrap(), EquivVerdict::EquivalentSampled { patterns: 1000 });
    }

    #[test]
    fn exhaustive_sixteen_inputs_finds_single_minterm() {
        // AND of 16 inputs vs constant false differ on exactly one assignment.
        let mut b = AigBuilder::new(16);
        let mut acc = b.input(0);
        for i in 1..16 {
            acc = b.and(acc, b.input(i));
        }
        b.add_output(acc);
        let a = b.build();
        let mut z = AigBuilder::new(16);
        z.add_output(crate::aig::Literal::FALSE);
        let z = z.build();
        match check_equiv_default(&a, &z).unwrap() {
            EquivVerdict::Inequivalent { counterexample, .. } => assert!(counterexample.iter().all(|&v| v)),
            other => panic!("{other:?}"),
        }
    }
}
