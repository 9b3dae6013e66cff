//! Window-based resubstitution with exact truth tables.

use super::network::Network;
use super::rewrite::accept;
use super::truth::Tt8;
use crate::aig::{Aig, Literal};

pub const RESUB_MAX_LEAVES: usize = 8;
pub const RESUB_MAX_DIVISORS: usize = 150;
/// Cap on the unate candidate lists scanned for two-divisor replacements.
const MAX_UNATE: usize = 64;

pub fn resub(aig: &Aig, zero_cost: bool) -> Aig {
    let mut net = Network::new(aig);
    let mut divs: Vec<u32> = Vec::new();
    for n in aig.first_and()..aig.num_nodes() as u32 {
        if !net.is_and(n) {
            continue;
        }
        let leaves = net.reconv_cut(n, RESUB_MAX_LEAVES);
        let stamp = net.mark_leaves(&leaves);
        let Some(cone) = net.collect_cone(n, stamp, RESUB_MAX_DIVISORS) else { continue };
        net.simulate_cone(&leaves, &cone);
        let target = net.tt(n);
        let (mffc, m) = net.mffc_deref(n, stamp);

        divs.clear();
        divs.extend_from_slice(&leaves);
        divs.extend(cone.iter().copied().filter(|&x| !net.in_mffc(x, m)));
        let ds = net.mark_visited(&divs);
        // Side divisors: nodes outside the cone fed only by divisors.
        let mut i = 0;
        while i < divs.len() && divs.len() < RESUB_MAX_DIVISORS {
            let d = divs[i];
            i += 1;
            for k in 0..net.fanouts(d).len() {
                let fo = net.fanouts(d)[k];
                if divs.len() >= RESUB_MAX_DIVISORS {
                    break;
                }
                if !net.is_and(fo) || net.visited(fo, ds) || net.in_mffc(fo, m) {
                    continue;
                }
                let [a, b] = net.fanins(fo);
                if net.visited(a.index(), ds) && net.visited(b.index(), ds) {
                    let t = net.and_tt(fo);
                    net.set_tt(fo, t);
                    net.set_visited(fo, ds);
                    divs.push(fo);
                }
            }
        }

        let found = find(&net, &divs, target, mffc, m, zero_cost, net.level(n));
        net.mffc_reref(n, stamp);
        let Some(rep) = found else { continue };
        let before = net.live_ands();
        let lit = match rep {
            Replacement::Existing(l) => l,
            Replacement::And(a, b, neg) => net.and(a, b).negate_if(neg),
        };
        if lit.index() == n {
            continue;
        }
        net.replace(n, lit);
        debug_assert!(net.live_ands() <= before, "resubstitution grew the graph");
    }
    if net.changed() {
        net.to_aig()
    } else {
        aig.clone()
    }
}

enum Replacement {
    Existing(Literal),
    And(Literal, Literal, bool),
}

fn find(net: &Network, divs: &[u32], target: Tt8, mffc: usize, m: u32, zero_cost: bool, level: u32) -> Option<Replacement> {
    if target.is_zero() {
        return Some(Replacement::Existing(Literal::FALSE));
    }
    if target.is_ones() {
        return Some(Replacement::Existing(Literal::TRUE));
    }
    for &d in divs {
        let t = net.tt(d);
        if t == target {
            return Some(Replacement::Existing(Literal::new(d, false)));
        }
        if t == !target {
            return Some(Replacement::Existing(Literal::new(d, true)));
        }
    }
    // One new gate: useful when it frees at least two, or one under zero cost.
    if mffc < 2 && !(zero_cost && mffc == 1) {
        return None;
    }
    let lit_tt = |l: Literal| if l.is_negated() { !net.tt(l.index()) } else { net.tt(l.index()) };
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for &d in divs {
        for l in [Literal::new(d, false), Literal::new(d, true)] {
            let t = lit_tt(l);
            if target.implies(&t) && pos.len() < MAX_UNATE {
                pos.push(l);
            }
            if t.implies(&target) && neg.len() < MAX_UNATE {
                neg.push(l);
            }
        }
    }
    let mut best: Option<(usize, Replacement)> = None;
    let consider = |added: usize, r: Replacement, best: &mut Option<(usize, Replacement)>| {
        if best.as_ref().is_none_or(|(a, _)| added < *a) {
            *best = Some((added, r));
        }
    };
    let cost = |a: Literal, b: Literal| match net.lookup(a, b) {
        Some(l) if l.is_const() || !net.in_mffc(l.index(), m) => 0,
        _ => 1,
    };
    'outer: for i in 0..pos.len() {
        for j in i + 1..pos.len() {
            if lit_tt(pos[i]) & lit_tt(pos[j]) == target {
                let c = cost(pos[i], pos[j]);
                consider(c, Replacement::And(pos[i], pos[j], false), &mut best);
                if c == 0 {
                    break 'outer;
                }
            }
        }
    }
    if best.as_ref().is_none_or(|(a, _)| *a > 0) {
        'outer2: for i in 0..neg.len() {
            for j in i + 1..neg.len() {
                if lit_tt(neg[i]) | lit_tt(neg[j]) == target {
                    let c = cost(!neg[i], !neg[j]);
                    consider(c, Replacement::And(!neg[i], !neg[j], true), &mut best);
                    if c == 0 {
                        break 'outer2;
                    }
                }
            }
        }
    }
    let (added, r) = best?;
    let new_level = match r {
        Replacement::And(a, b, _) => 1 + net.level(a.index()).max(net.level(b.index())),
        Replacement::Existing(l) => net.level(l.index()),
    };
    accept(mffc as i64 - added as i64, zero_cost, new_level, level).then_some(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aig::{check_equiv_default, random::random_redundant_aig, AigBuilder};
    use rand::SeedableRng;

    #[test]
    fn equal_nodes_merge() {
        // p = a & b & c built twice with different association.
        let mut b = AigBuilder::new(4);
        let (x, y, z, w) = (b.input(0), b.input(1), b.input(2), b.input(3));
        let xy = b.and(x, y);
        let p1 = b.and(xy, z);
        let yz = b.and(y, z);
        let p2 = b.and(x, yz);
        let o1 = b.and(p1, w);
        let o2 = b.or(p2, w);
        b.add_output(o1);
        b.add_output(o2);
        let a = b.build();
        assert_eq!(a.num_ands(), 6);
        let r = resub(&a, false);
        // The second product and its private gate go away.
        assert_eq!(r.num_ands(), 4);
        assert!(check_equiv_default(&a, &r).unwrap().is_equivalent());
    }

    #[test]
    fn irredundant_tree_unchanged() {
        let mut b = AigBuilder::new(8);
        let ins: Vec<Literal> = (0..8).map(|i| b.input(i)).collect();
        let l0 = b.and(ins[0], !ins[1]);
        let l1 = b.or(ins[2], ins[3]);
        let l2 = b.and(!ins[4], ins[5]);
        let l3 = b.or(ins[6], !ins[7]);
        let m0 = b.and(l0, l1);
        let m1 = b.or(l2, l3);
        let o = b.and(m0, !m1);
        b.add_output(o);
        let a = b.build();
        assert_eq!(resub(&a, false), a);
    }

    #[test]
    fn random_graphs() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        for i in 0..60 {
            let a = random_redundant_aig(&mut rng, 10, 150, 4);
            for z in [false, true] {
                let r = resub(&a, z);
                assert!(check_equiv_default(&a, &r).unwrap().is_equivalent(), "graph {i} z={z}");
                if !z {
                    assert!(r.num_ands() <= a.num_ands());
                }
            }
        }
    }
}
