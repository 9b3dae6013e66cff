//! Bit-parallel simulation.

use rayon::prelude::*;

use super::{Aig, AigError, Result};

/// Row-major bit matrix: one row per signal, one column per pattern.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    words: usize,
    data: Vec<u64>,
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let words = cols.div_ceil(64);
        BitMatrix { rows, cols, words, data: vec![0; rows * words] }
    }

    /// Builds a matrix from per-pattern assignments (`patterns[col][row]`).
    pub fn from_patterns(rows: usize, patterns: &[Vec<bool>]) -> Self {
        let mut m = BitMatrix::zeros(rows, patterns.len());
        for (c, p) in patterns.iter().enumerate() {
            assert_eq!(p.len(), rows, "pattern {c} has the wrong width");
            for (r, &v) in p.iter().enumerate() {
                m.set(r, c, v);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn words_per_row(&self) -> usize {
        self.words
    }

    pub fn row(&self, r: usize) -> &[u64] {
        &self.data[r * self.words..(r + 1) * self.words]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [u64] {
        &mut self.data[r * self.words..(r + 1) * self.words]
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        assert!(c < self.cols);
        self.row(r)[c / 64] >> (c % 64) & 1 == 1
    }

    pub fn set(&mut self, r: usize, c: usize, v: bool) {
        assert!(c < self.cols);
        let w = &mut self.row_mut(r)[c / 64];
        if v {
            *w |= 1 << (c % 64);
        } else {
            *w &= !(1 << (c % 64));
        }
    }

    /// Clears the padding bits beyond the last column.
    fn mask_tail(&mut self) {
        let rem = self.cols % 64;
        if rem == 0 {
            return;
        }
        let mask = (1u64 << rem) - 1;
        for r in 0..self.rows {
            let last = self.words - 1;
            self.row_mut(r)[last] &= mask;
        }
    }
}

const BLOCK_WORDS: usize = 64;

/// Evaluates `aig` over `nwords` words of patterns. `fill(input, words)`
/// writes the stimulus of one input. The result holds node values
/// node-major (`buf[node * nwords + w]`).
pub(crate) fn eval_block(aig: &Aig, nwords: usize, mut fill: impl FnMut(usize, &mut [u64]), buf: &mut Vec<u64>) {
    buf.clear();
    buf.resize(aig.num_nodes() * nwords, 0);
    for i in 0..aig.num_inputs() {
        let node = i + 1;
        fill(i, &mut buf[node * nwords..(node + 1) * nwords]);
    }
    for (n, [a, b]) in aig.and_nodes() {
        let n = n as usize;
        let (ia, ib) = (a.index() as usize * nwords, b.index() as usize * nwords);
        let (ma, mb) = (if a.is_negated() { !0u64 } else { 0 }, if b.is_negated() { !0u64 } else { 0 });
        let (lo, hi) = buf.split_at_mut(n * nwords);
        let out = &mut hi[..nwords];
        for w in 0..nwords {
            out[w] = (lo[ia + w] ^ ma) & (lo[ib + w] ^ mb);
        }
    }
}

/// Simulates every pattern column of `patterns` (one row per input) and
/// returns one row per output.
pub fn simulate(aig: &Aig, patterns: &BitMatrix) -> Result<BitMatrix> {
    if patterns.rows() != aig.num_inputs() {
        return Err(AigError::WidthMismatch { expected: aig.num_inputs(), got: patterns.rows() });
    }
    let words = patterns.words_per_row();
    let mut out = BitMatrix::zeros(aig.num_outputs(), patterns.cols());
    let blocks: Vec<(usize, Vec<u64>)> = (0..words.div_ceil(BLOCK_WORDS))
        .into_par_iter()
        .map_init(Vec::new, |buf, blk| {
            let start = blk * BLOCK_WORDS;
            let n = BLOCK_WORDS.min(words - start);
            eval_block(aig, n, |i, dst| dst.copy_from_slice(&patterns.row(i)[start..start + n]), buf);
            let mut res = Vec::with_capacity(aig.num_outputs() * n);
            for o in aig.outputs() {
                let base = o.index() as usize * n;
                let mask = if o.is_negated() { !0u64 } else { 0 };
                res.extend(buf[base..base + n].iter().map(|w| w ^ mask));
            }
            (start, res)
        })
        .collect();
    for (start, res) in blocks {
        let n = res.len() / aig.num_outputs().max(1);
        for o in 0..aig.num_outputs() {
            out.row_mut(o)[start..start + n].copy_from_slice(&res[o * n..(o + 1) * n]);
        }
    }
    out.mask_tail();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aig::{AigBuilder, Literal};

    #[test]
    fn and_truth_table() {
        let mut b = AigBuilder::new(2);
        let p = b.and(b.input(0), b.input(1));
        b.add_output(p);
        let aig = b.build();
        let pats = BitMatrix::from_patterns(
            2,
            &[vec![false, false], vec![false, true], vec![true, false], vec![true, true]],
        );
        let out = simulate(&aig, &pats).unwrap();
        let got: Vec<bool> = (0..4).map(|c| out.get(0, c)).collect();
        assert_eq!(got, vec![false, false, false, true]);
    }

    #[test]
    fn constant_output_is_zero() {
        let mut b = AigBuilder::new(3);
        b.add_output(Literal::FALSE);
        let aig = b.build();
        let mut pats = BitMatrix::zeros(3, 200);
        for c in 0..200 {
            pats.set(c % 3, c, true);
        }
        let out = simulate(&aig, &pats).unwrap();
        assert!(out.row(0).iter().all(|&w| w == 0));
    }

    #[test]
    fn width_mismatch() {
        let aig = Aig::empty(3);
        let err = simulate(&aig, &BitMatrix::zeros(2, 10)).unwrap_err();
        assert!(matches!(err, AigError::WidthMismatch { expected: 3, got: 2 }));
    }
}
