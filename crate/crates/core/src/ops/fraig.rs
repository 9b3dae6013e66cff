//! Simulation-driven merging of functionally equivalent nodes.

use crate::aig::equiv::splitmix64;
use crate::aig::sim::eval_block;
use crate::aig::{Aig, AigBuilder, Literal};
use rustc_hash::FxHashMap;

pub const FRAIG_PATTERNS: usize = 1024;
pub const FRAIG_WINDOW_LEAVES: usize = 12;
/// Internal nodes allowed in a proof window.
const WINDOW_NODES: usize = 400;
/// Earlier class members tried per node.
const MAX_CANDIDATES: usize = 4;
const SEED: u64 = 0xf4a1_61e5_eed0_0001;

pub fn fraig_lite(aig: &Aig) -> Aig {
    let words = FRAIG_PATTERNS / 64;
    let mut sim = Vec::new();
    eval_block(aig, words, |i, w| w.iter_mut().enumerate().for_each(|(k, x)| *x = splitmix64(SEED ^ (i as u64) << 32 ^ k as u64)), &mut sim);

    // Signatures normalized so pattern 0 evaluates to false.
    let mut classes: FxHashMap<Vec<u64>, Vec<u32>> = FxHashMap::default();
    let mut phase = vec![false; aig.num_nodes()];
    for n in 0..aig.num_nodes() {
        let row = &sim[n * words..(n + 1) * words];
        phase[n] = row[0] & 1 == 1;
        let key: Vec<u64> = if phase[n] { row.iter().map(|x| !x).collect() } else { row.to_vec() };
        classes.entry(key).or_default().push(n as u32);
    }
    let mut class_of: Vec<Option<usize>> = vec![None; aig.num_nodes()];
    let members: Vec<Vec<u32>> = classes.into_values().filter(|c| c.len() > 1).collect();
    for (k, c) in members.iter().enumerate() {
        for &n in c {
            class_of[n as usize] = Some(k);
        }
    }

    let mut prover = Prover::default();
    let mut b = AigBuilder::new(aig.num_inputs());
    let mut map = vec![Literal::FALSE; aig.num_nodes()];
    for i in 0..aig.num_inputs() {
        map[i + 1] = b.input(i);
    }
    for (n, [x, y]) in aig.and_nodes() {
        let merged = class_of[n as usize].and_then(|k| {
            members[k]
                .iter()
                .take_while(|&&r| r < n)
                .take(MAX_CANDIDATES)
                .find(|&&r| prover.equal(aig, r, n, phase[r as usize] != phase[n as usize]))
                .map(|&r| map[r as usize].negate_if(phase[r as usize] != phase[n as usize]))
        });
        map[n as usize] = merged.unwrap_or_else(|| {
            let f = |l: Literal| map[l.index() as usize].negate_if(l.is_negated());
            b.and(f(x), f(y))
        });
    }
    for &o in aig.outputs() {
        b.add_output(map[o.index() as usize].negate_if(o.is_negated()));
    }
    let out = b.build();
    if out.num_ands() < aig.num_ands() {
        out
    } else {
        aig.clone()
    }
}

/// Exhaustive checker over a shared window of two nodes.
#[derive(Default)]
struct Prover {
    inside: FxHashMap<u32, usize>,
    leaves: Vec<u32>,
    nodes: Vec<u32>,
    tt: Vec<u64>,
}

impl Prover {
    /// Whether `r` equals `n` (complemented when `neg`) as a function of a
    /// common cut of at most [`FRAIG_WINDOW_LEAVES`] leaves.
    fn equal(&mut self, aig: &Aig, r: u32, n: u32, neg: bool) -> bool {
        if !self.window(aig, r, n) {
            return false;
        }
        let words = (1usize << self.leaves.len()).div_ceil(64);
        self.tt.clear();
        self.tt.resize((self.leaves.len() + self.nodes.len() + 1) * words, 0);
        self.inside.clear();
        self.inside.insert(0, 0);
        for (i, &l) in self.leaves.iter().enumerate() {
            let slot = i + 1;
            self.inside.insert(l, slot);
            let row = &mut self.tt[slot * words..(slot + 1) * words];
            row.copy_from_slice(&super::truth::var_words(i, words));
        }
        for (j, &m) in self.nodes.iter().enumerate() {
            let slot = self.leaves.len() + 1 + j;
            self.inside.insert(m, slot);
            let [a, b] = aig.fanins(m);
            let (sa, sb) = (self.inside[&a.index()], self.inside[&b.index()]);
            let (ma, mb) = (if a.is_negated() { !0 } else { 0 }, if b.is_negated() { !0 } else { 0 });
            for w in 0..words {
                self.tt[slot * words + w] = (self.tt[sa * words + w] ^ ma) & (self.tt[sb * words + w] ^ mb);
            }
        }
        let mask = if self.leaves.len() >= 6 { !0 } else { (1u64 << (1 << self.leaves.len())) - 1 };
        let (sr, sn) = (self.inside[&r], self.inside[&n]);
        let flip = if neg { !0 } else { 0 };
        (0..words).all(|w| (self.tt[sr * words + w] ^ self.tt[sn * words + w] ^ flip) & mask == 0)
    }

    /// Grows a cut below both roots, always expanding the latest leaf that
    /// fits. Fills `leaves` and `nodes` (internal, topological).
    fn window(&mut self, aig: &Aig, r: u32, n: u32) -> bool {
        self.leaves.clear();
        self.nodes.clear();
        let mut frontier: Vec<u32> = vec![n];
        if r != 0 {
            frontier.push(r);
        }
        let mut done: FxHashMap<u32, bool> = FxHashMap::default();
        for &x in &frontier {
            done.insert(x, false);
        }
        // Leaves are kept in the frontier; expanded nodes leave it.
        loop {
            let mut best: Option<(usize, u32)> = None;
            for (pos, &x) in frontier.iter().enumerate() {
                if !aig.is_and(x) {
                    continue;
                }
                let roots = x == n || x == r;
                let grow = aig.fanins(x).iter().filter(|f| f.index() != 0 && !done.contains_key(&f.index())).count();
                if !roots && frontier.len() - 1 + grow > FRAIG_WINDOW_LEAVES {
                    continue;
                }
                if best.is_none_or(|(_, b)| roots || x > b) {
                    best = Some((pos, x));
                }
                if roots {
                    break;
                }
            }
            let Some((pos, x)) = best else { break };
            frontier.swap_remove(pos);
            done.insert(x, true);
            self.nodes.push(x);
            if self.nodes.len() > WINDOW_NODES {
                return false;
            }
            for f in aig.fanins(x) {
                let t = f.index();
                if t != 0 && !done.contains_key(&t) {
                    done.insert(t, false);
                    frontier.push(t);
                }
            }
        }
        if frontier.len() > FRAIG_WINDOW_LEAVES {
            return false;
        }
        frontier.sort_unstable();
        self.leaves = frontier;
        self.nodes.sort_unstable();
        true
    }
}
