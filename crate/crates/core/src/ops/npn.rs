//! NPN canonization of 4-input functions.

use std::sync::OnceLock;

pub const NUM_TRANSFORMS: usize = 768;
pub const NUM_CLASSES: usize = 222;

const VAR4: [u16; 4] = [0xaaaa, 0xcccc, 0xf0f0, 0xff00];

/// An input permutation, input negation mask and output negation.
///
/// Applying `t` to `f` yields `g(y) = out ^ f(x)` where
/// `x[perm[i]] = y[i] ^ neg[i]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub struct NpnTransform {
    pub perm: [u8; 4],
    pub neg: u8,
    pub out: bool,
}

impl NpnTransform {
    pub const IDENTITY: NpnTransform = NpnTransform { perm: [0, 1, 2, 3], neg: 0, out: false };

    pub fn apply(&self, f: u16) -> u16 {
        let mut g = 0u16;
        for y in 0..16u32 {
            let mut x = 0u32;
            for i in 0..4 {
                let bit = (y >> i & 1) ^ (self.neg as u32 >> i & 1);
                x |= bit << self.perm[i];
            }
            if (f >> x & 1 == 1) != self.out {
                g |= 1 << y;
            }
        }
        g
    }

    pub fn inverse(&self) -> NpnTransform {
        let mut perm = [0u8; 4];
        for (i, &p) in self.perm.iter().enumerate() {
            perm[p as usize] = i as u8;
        }
        let mut neg = 0u8;
        for (j, &p) in perm.iter().enumerate() {
            neg |= (self.neg >> p & 1) << j;
        }
        NpnTransform { perm, neg, out: self.out }
    }

    /// All 768 transforms in a fixed order.
    pub fn all() -> Vec<NpnTransform> {
        let mut perms = Vec::with_capacity(24);
        for a in 0..4u8 {
            for b in 0..4u8 {
                for c in 0..4u8 {
                    for d in 0..4u8 {
                        let p = [a, b, c, d];
                        let mut seen = 0u8;
                        for &v in &p {
                            seen |= 1 << v;
                        }
                        if seen == 0xf {
                            perms.push(p);
                        }
                    }
                }
            }
        }
        let mut out = Vec::with_capacity(NUM_TRANSFORMS);
        for &perm in &perms {
            for neg in 0..16u8 {
                for o in [false, true] {
                    out.push(NpnTransform { perm, neg, out: o });
                }
            }
        }
        out
    }
}

/// Per-table canonical form and the transform mapping the canonical table
/// back to the original: `table[f] = (c, t)` with `t.apply(c) == f`.
fn table() -> &'static [(u16, NpnTransform)] {
    static TABLE: OnceLock<Vec<(u16, NpnTransform)>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let transforms = NpnTransform::all();
        let mut table: Vec<Option<(u16, NpnTransform)>> = vec![None; 1 << 16];
        for f in 0..=u16::MAX {
            if table[f as usize].is_some() {
                continue;
            }
            // Scanning in increasing order means f is the smallest member of
            // its orbit.
            for t in &transforms {
                let g = t.apply(f);
                if table[g as usize].is_none() {
                    table[g as usize] = Some((f, *t));
                }
            }
        }
        table.into_iter().map(|e| e.expect("orbit covers table")).collect()
    })
}

/// Canonical table and the transform `t` with `t.apply(canonical) == truth`.
pub fn npn_canonize(truth: u16) -> (u16, NpnTransform) {
    table()[truth as usize]
}

/// Canonical representatives in increasing order.
pub fn npn_classes() -> Vec<u16> {
    let mut v: Vec<u16> = table().iter().enumerate().filter(|(f, (c, _))| *f as u16 == *c).map(|(_, (c, _))| *c).collect();
    v.sort_unstable();
    v
}

pub(crate) fn var_table(i: usize) -> u16 {
    VAR4[i]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_round_trips() {
        for (k, t) in NpnTransform::all().iter().enumerate() {
            let f = (k as u16).wrapping_mul(0x9e37) ^ 0x1234;
            assert_eq!(t.inverse().apply(t.apply(f)), f);
            assert_eq!(t.inverse().inverse(), *t);
        }
    }

    #[test]
    fn transforms_are_distinct() {
        let all = NpnTransform::all();
        let set: std::collections::HashSet<_> = all.iter().collect();
        assert_eq!(set.len(), NUM_TRANSFORMS);
        // Applied to a function with trivial symmetry group, every transform
        // gives a different table.
        let f = 0x0116u16 ^ 0x8000;
        let imgs: std::collections::HashSet<u16> = all.iter().map(|t| t.apply(f)).collect();
        assert!(imgs.len() > 1);
    }

    #[test]
    fn canonize_reapplies() {
        for f in 0..=u16::MAX {
            let (c, t) = npn_canonize(f);
            assert_eq!(t.apply(c), f);
            assert!(c <= f);
        }
    }

    #[test]
    fn class_count_brute_force() {
        // Independent of the table: minimize over all transforms directly.
        let all = NpnTransform::all();
        let mut classes = std::collections::BTreeSet::new();
        for f in 0..=u16::MAX {
            let m = all.iter().map(|t| t.apply(f)).min().unwrap();
            assert_eq!(m, npn_canonize(f).0);
            classes.insert(m);
        }
        assert_eq!(classes.len(), NUM_CLASSES);
        assert_eq!(npn_classes().len(), NUM_CLASSES);
    }

    #[test]
    fn and_or_share_class() {
        let and = VAR4[0] & VAR4[1];
        let or = VAR4[0] | VAR4[1];
        assert_eq!(and, 0x8888);
        assert_eq!(npn_canonize(and).0, npn_canonize(or).0);
        assert_eq!(npn_canonize(0).0, 0);
        assert_eq!(npn_canonize(0xffff).0, 0);
    }
}
