//! K-feasible cut enumeration.

use super::network::Network;
use crate::aig::{Aig, Literal};

pub const MAX_CUT_SIZE: usize = 6;
pub const DEFAULT_CUT_LIMIT: usize = 8;

/// A cut of `root` with its function over the leaves: bit `m` of `truth` is
/// the root value when leaf `i` takes bit `i` of `m`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cut {
    pub root: u32,
    pub leaves: Vec<u32>,
    pub truth: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub(crate) struct Leaves {
    len: u8,
    ids: [u32; MAX_CUT_SIZE],
}

impl Leaves {
    pub fn trivial(n: u32) -> Self {
        let mut ids = [0; MAX_CUT_SIZE];
        ids[0] = n;
        Leaves { len: 1, ids }
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.ids[..self.len as usize]
    }

    fn union(&self, other: &Leaves, k: usize) -> Option<Leaves> {
        let (a, b) = (self.as_slice(), other.as_slice());
        let mut ids = [0; MAX_CUT_SIZE];
        let (mut i, mut j, mut n) = (0, 0, 0);
        while i < a.len() || j < b.len() {
            let v = if j == b.len() || (i < a.len() && a[i] < b[j]) {
                i += 1;
                a[i - 1]
            } else if i == a.len() || b[j] < a[i] {
                j += 1;
                b[j - 1]
            } else {
                i += 1;
                j += 1;
                a[i - 1]
            };
            if n == k {
                return None;
            }
            ids[n] = v;
            n += 1;
        }
        Some(Leaves { len: n as u8, ids })
    }

    fn subset_of(&self, other: &Leaves) -> bool {
        let b = other.as_slice();
        self.as_slice().iter().all(|x| b.binary_search(x).is_ok())
    }
}

/// Merges fanin cut sets into the cut set of `root`: the trivial cut first,
/// then up to `limit - 1` irredundant cuts, fewest leaves first.
pub(crate) fn merge(root: u32, c0: &[Leaves], c1: &[Leaves], k: usize, limit: usize) -> Vec<Leaves> {
    let mut cands = Vec::with_capacity(c0.len() * c1.len());
    for a in c0 {
        for b in c1 {
            if let Some(u) = a.union(b, k) {
                cands.push(u);
            }
        }
    }
    cands.sort_unstable();
    cands.dedup();
    let mut out = vec![Leaves::trivial(root)];
    for c in cands {
        if out.len() >= limit {
            break;
        }
        if out[1..].iter().any(|d| d.subset_of(&c)) {
            continue;
        }
        out.push(c);
    }
    out
}

/// Cut sets of `node`'s transitive fanin, `k` leaves at most.
pub fn enumerate_cuts(aig: &Aig, node: u32, k: usize) -> Vec<Cut> {
    enumerate_cuts_with_limit(aig, node, k, DEFAULT_CUT_LIMIT)
}

pub fn enumerate_cuts_with_limit(aig: &Aig, node: u32, k: usize, limit: usize) -> Vec<Cut> {
    assert!((1..=MAX_CUT_SIZE).contains(&k), "cut size {k} out of range");
    assert!(limit >= 1);
    assert!((node as usize) < aig.num_nodes());
    let mut in_tfi = vec![false; node as usize + 1];
    in_tfi[node as usize] = true;
    for n in (aig.first_and()..=node).rev() {
        if in_tfi[n as usize] {
            for f in aig.fanins(n) {
                in_tfi[f.index() as usize] = true;
            }
        }
    }
    let mut sets: Vec<Vec<Leaves>> = vec![Vec::new(); node as usize + 1];
    for n in 0..=node {
        if !in_tfi[n as usize] {
            continue;
        }
        sets[n as usize] = if aig.is_and(n) {
            let [a, b] = aig.fanins(n);
            merge(n, &sets[a.index() as usize], &sets[b.index() as usize], k, limit)
        } else {
            vec![Leaves::trivial(n)]
        };
    }
    sets[node as usize]
        .iter()
        .map(|l| Cut { root: node, leaves: l.as_slice().to_vec(), truth: cone_truth(l.as_slice(), node, &|n| aig.is_and(n).then(|| aig.fanins(n))).expect("cut separates root") })
        .collect()
}

/// Truth table of `root` over at most six `leaves`, evaluating through
/// `fanins` (which returns `None` for non-AND nodes). `None` if some path
/// from `root` escapes the leaves or the cone has more than 64 nodes.
pub(crate) fn cone_truth(leaves: &[u32], root: u32, fanins: &dyn Fn(u32) -> Option<[Literal; 2]>) -> Option<u64> {
    const VARS: [u64; 6] = [
        0xaaaa_aaaa_aaaa_aaaa,
        0xcccc_cccc_cccc_cccc,
        0xf0f0_f0f0_f0f0_f0f0,
        0xff00_ff00_ff00_ff00,
        0xffff_0000_ffff_0000,
        0xffff_ffff_0000_0000,
    ];
    let mut memo: Vec<(u32, u64)> = leaves.iter().enumerate().map(|(i, &l)| (l, VARS[i])).collect();
    memo.push((0, 0));
    let mut stack = vec![(root, false)];
    while let Some((x, expanded)) = stack.pop() {
        if memo.iter().any(|&(m, _)| m == x) {
            continue;
        }
        let [a, b] = fanins(x)?;
        if expanded {
            let val = |l: Literal| {
                let v = memo.iter().find(|&&(m, _)| m == l.index()).unwrap().1;
                if l.is_negated() {
                    !v
                } else {
                    v
                }
            };
            let t = val(a) & val(b);
            memo.push((x, t));
            if memo.len() > 64 + leaves.len() {
                return None;
            }
        } else {
            stack.push((x, true));
            stack.push((a.index(), false));
            stack.push((b.index(), false));
        }
    }
    let t = memo.iter().find(|&&(m, _)| m == root).unwrap().1;
    let bits = 1u32 << leaves.len();
    Some(if bits >= 64 { t } else { t & ((1u64 << bits) - 1) })
}

/// Lazily computed, invalidated-on-change cut sets over a [`Network`].
pub(crate) struct CutStore {
    sets: Vec<Option<Vec<Leaves>>>,
    k: usize,
    limit: usize,
}

impl CutStore {
    pub fn new(k: usize, limit: usize) -> Self {
        CutStore { sets: Vec::new(), k, limit }
    }

    pub fn cuts(&mut self, net: &mut Network, n: u32) -> Vec<Leaves> {
        for m in net.take_touched() {
            if let Some(s) = self.sets.get_mut(m as usize) {
                *s = None;
            }
        }
        if self.sets.len() < net.num_nodes() as usize {
            self.sets.resize(net.num_nodes() as usize, None);
        }
        let mut stack = vec![n];
        while let Some(&x) = stack.last() {
            if self.sets[x as usize].is_some() {
                stack.pop();
                continue;
            }
            if !net.is_and(x) {
                self.sets[x as usize] = Some(vec![Leaves::trivial(x)]);
                stack.pop();
                continue;
            }
            let [a, b] = net.fanins(x);
            let (a, b) = (a.index(), b.index());
            match (&self.sets[a as usize], &self.sets[b as usize]) {
                (Some(ca), Some(cb)) => {
                    let m = merge(x, ca, cb, self.k, self.limit);
                    self.sets[x as usize] = Some(m);
                    stack.pop();
                }
                (sa, sb) => {
                    let (na, nb) = (sa.is_none(), sb.is_none());
                    if na {
                        stack.push(a);
                    }
                    if nb {
                        stack.push(b);
                    }
                }
            }
        }
        self.sets[n as usize].clone().unwrap()
    }
}
