//! Cone collapsing and resynthesis through factored sums of products.

use super::network::Network;
use super::sop::synthesize;
use crate::aig::{Aig, Literal};

pub const REFACTOR_MAX_LEAVES: usize = 8;
pub const REFACTOR_MAX_CONE: usize = 150;

pub fn refactor(aig: &Aig, zero_cost: bool) -> Aig {
    let mut net = Network::new(aig);
    for n in aig.first_and()..aig.num_nodes() as u32 {
        if !net.is_and(n) {
            continue;
        }
        let leaves = net.reconv_cut(n, REFACTOR_MAX_LEAVES);
        let stamp = net.mark_leaves(&leaves);
        let Some(cone) = net.collect_cone(n, stamp, REFACTOR_MAX_CONE) else { continue };
        net.simulate_cone(&leaves, &cone);
        let f = net.tt(n);
        let (mffc, m) = net.mffc_deref(n, stamp);
        let s = synthesize(f, leaves.len());
        let ins: Vec<Literal> = leaves.iter().map(|&l| Literal::new(l, false)).collect();
        let counted = net.count_structure(&s, &ins, false, n, m);
        net.mffc_reref(n, stamp);
        let Some((added, out, level)) = counted else { continue };
        if out.index() == n {
            continue;
        }
        let gain = mffc as i64 - added as i64;
        if super::rewrite::accept(gain, zero_cost, level, net.level(n)) {
            let before = net.live_ands();
            let lit = net.build_structure(&s, &ins, false);
            net.replace(n, lit);
            debug_assert!(net.live_ands() as i64 <= before as i64 - gain, "gain accounting");
        }
    }
    if net.changed() {
        net.to_aig()
    } else {
        aig.clone()
    }
}
