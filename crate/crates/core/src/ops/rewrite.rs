//! Cut-based rewriting with precomputed NPN structures.

use super::cuts::{cone_truth, CutStore, DEFAULT_CUT_LIMIT};
use super::library::NpnLibrary;
use super::network::Network;
use super::structure::Structure;
use crate::aig::{Aig, Literal};

pub const REWRITE_CUT_SIZE: usize = 4;

struct Candidate<'a> {
    gain: i64,
    depth: u32,
    structure: &'a Structure,
    ins: [Literal; 4],
    out_neg: bool,
}

pub fn rewrite(aig: &Aig, zero_cost: bool, lib: &NpnLibrary) -> Aig {
    let mut net = Network::new(aig);
    let mut store = CutStore::new(REWRITE_CUT_SIZE, DEFAULT_CUT_LIMIT);
    for n in aig.first_and()..aig.num_nodes() as u32 {
        if !net.is_and(n) {
            continue;
        }
        let cuts = store.cuts(&mut net, n);
        let mut best: Option<Candidate> = None;
        for cut in cuts.iter().skip(1) {
            let leaves = cut.as_slice();
            let Some(truth) = cone_truth(leaves, n, &|x| net.is_and(x).then(|| net.fanins(x))) else {
                continue;
            };
            let (entry, t) = lib.lookup(truth as u16 | if leaves.len() < 4 { replicate(truth, leaves.len()) } else { 0 });
            let mut ins = [Literal::FALSE; 4];
            for i in 0..4 {
                let leaf = leaves.get(i).map_or(Literal::FALSE, |&l| Literal::new(l, false));
                ins[t.perm[i] as usize] = leaf.negate_if(t.neg >> i & 1 == 1);
            }
            let stamp = net.mark_leaves(leaves);
            let (mffc, m) = net.mffc_deref(n, stamp);
            let counted = net.count_structure(&entry.structure, &ins, t.out, n, m);
            net.mffc_reref(n, stamp);
            let Some((added, out, level)) = counted else { continue };
            if out.index() == n {
                continue;
            }
            let gain = mffc as i64 - added as i64;
            if !accept(gain, zero_cost, level, net.level(n)) {
                continue;
            }
            let depth = entry.depth();
            if best.as_ref().is_none_or(|b| (gain, std::cmp::Reverse(depth)) > (b.gain, std::cmp::Reverse(b.depth))) {
                best = Some(Candidate { gain, depth, structure: &entry.structure, ins, out_neg: t.out });
            }
        }
        if let Some(c) = best {
            let before = net.live_ands();
            let lit = net.build_structure(c.structure, &c.ins, c.out_neg);
            debug_assert_ne!(lit.index(), n);
            net.replace(n, lit);
            debug_assert!(net.live_ands() as i64 <= before as i64 - c.gain, "gain accounting");
        }
    }
    if net.changed() {
        net.to_aig()
    } else {
        aig.clone()
    }
}

/// Zero-gain swaps must also lower the root, so repeated passes settle.
pub(crate) fn accept(gain: i64, zero_cost: bool, new_level: u32, old_level: u32) -> bool {
    gain > 0 || (zero_cost && gain == 0 && new_level < old_level)
}

/// Expands a table over `k < 4` variables to four variables.
fn replicate(t: u64, k: usize) -> u16 {
    let mut w = t as u16;
    let mut width = 1u32 << k;
    while width < 16 {
        w |= w << width;
        width *= 2;
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aig::{check_equiv_default, random::random_redundant_aig, AigBuilder};
    use crate::ops::library::build_with_limit;
    use rand::SeedableRng;
    use std::sync::OnceLock;

    fn lib() -> &'static NpnLibrary {
        static L: OnceLock<NpnLibrary> = OnceLock::new();
        L.get_or_init(|| build_with_limit(5))
    }

    #[test]
    fn redundant_cone_collapses() {
        // !( !a | !(a & b) ) = a & (a & b) = a & b, built without hashing it away.
        let mut b = AigBuilder::new(2);
        let (x, y) = (b.input(0), b.input(1));
        let ab = b.and(x, y);
        let o = b.or(!x, !ab);
        b.add_output(!o);
        let a = b.build();
        assert_eq!(a.num_ands(), 2);
        let r = rewrite(&a, false, lib());
        assert_eq!(r.num_ands(), 1);
        assert!(check_equiv_default(&a, &r).unwrap().is_equivalent());
    }

    #[test]
    fn single_and_unchanged() {
        let mut b = AigBuilder::new(2);
        let o = b.and(b.input(0), b.input(1));
        b.add_output(o);
        let a = b.build();
        assert_eq!(rewrite(&a, false, lib()), a);
        assert_eq!(rewrite(&a, true, lib()), a);
    }

    #[test]
    fn replicate_fills_table() {
        assert_eq!(replicate(0b10, 1), 0xaaaa);
        assert_eq!(replicate(0x8, 2), 0x8888);
        assert_eq!(replicate(0x80, 3), 0x8080);
    }

    #[test]
    fn random_graphs_shrink_and_stay_equivalent() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for i in 0..60 {
            let a = random_redundant_aig(&mut rng, 8, 120, 4);
            for z in [false, true] {
                let r = rewrite(&a, z, lib());
                assert!(check_equiv_default(&a, &r).unwrap().is_equivalent(), "graph {i} z={z}");
                if !z {
                    assert!(r.num_ands() <= a.num_ands());
                }
            }
        }
    }
}
