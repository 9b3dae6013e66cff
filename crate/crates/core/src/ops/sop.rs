//! Irredundant sum-of-products and algebraic factoring.

use super::structure::{StructBuilder, Structure};
use super::truth::Tt8;
use crate::aig::Literal;

/// A product term: variables in `mask`, positive where `pol` is set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cube {
    pub mask: u8,
    pub pol: u8,
}

impl Cube {
    pub const TAUTOLOGY: Cube = Cube { mask: 0, pol: 0 };

    pub fn num_lits(&self) -> u32 {
        self.mask.count_ones()
    }

    pub fn has(&self, lit: u8) -> bool {
        let (v, pos) = (lit >> 1, lit & 1 == 0);
        self.mask >> v & 1 == 1 && (self.pol >> v & 1 == 1) == pos
    }

    fn without_var(&self, v: u8) -> Cube {
        Cube { mask: self.mask & !(1 << v), pol: self.pol & !(1 << v) }
    }

    fn with(&self, v: usize, positive: bool) -> Cube {
        Cube { mask: self.mask | 1 << v, pol: self.pol | (positive as u8) << v }
    }

    pub fn eval(&self) -> Tt8 {
        let mut t = Tt8::ONES;
        for v in 0..8 {
            if self.mask >> v & 1 == 1 {
                t = t & if self.pol >> v & 1 == 1 { Tt8::var(v) } else { !Tt8::var(v) };
            }
        }
        t
    }
}

/// Minato-Morreale ISOP of an incompletely specified function with on-set
/// `lower` and on-set plus don't-cares `upper`, over variables `0..nvars`.
pub fn isop(lower: Tt8, upper: Tt8, nvars: usize) -> Vec<Cube> {
    debug_assert!(lower.implies(&upper));
    let mut cubes = Vec::new();
    isop_rec(lower, upper, nvars, &mut cubes);
    cubes
}

fn isop_rec(lower: Tt8, upper: Tt8, nvars: usize, out: &mut Vec<Cube>) -> Tt8 {
    if lower.is_zero() {
        return Tt8::ZERO;
    }
    if upper.is_ones() {
        out.push(Cube::TAUTOLOGY);
        return Tt8::ONES;
    }
    let mut v = nvars;
    while v > 0 && !lower.depends_on(v - 1) && !upper.depends_on(v - 1) {
        v -= 1;
    }
    debug_assert!(v > 0, "non-constant interval must have support");
    let var = v - 1;
    let (l0, l1) = (lower.cofactor0(var), lower.cofactor1(var));
    let (u0, u1) = (upper.cofactor0(var), upper.cofactor1(var));

    let start = out.len();
    let f0 = isop_rec(l0 & !u1, u0, var, out);
    for c in &mut out[start..] {
        *c = c.with(var, false);
    }
    let mid = out.len();
    let f1 = isop_rec(l1 & !u0, u1, var, out);
    for c in &mut out[mid..] {
        *c = c.with(var, true);
    }
    let rest = (l0 & !f0) | (l1 & !f1);
    let fs = isop_rec(rest, u0 & u1, var, out);
    let x = Tt8::var(var);
    (f0 & !x) | (f1 & x) | fs
}

pub fn cover_eval(cubes: &[Cube]) -> Tt8 {
    cubes.iter().fold(Tt8::ZERO, |acc, c| acc | c.eval())
}

fn lit_of(lit: u8) -> Literal {
    Structure::input((lit >> 1) as usize).negate_if(lit & 1 == 1)
}

fn cube_lits(c: &Cube) -> Vec<Literal> {
    (0..8u8).filter(|v| c.mask >> v & 1 == 1).map(|v| lit_of(2 * v + (c.pol >> v & 1 == 0) as u8)).collect()
}

/// Literal-driven algebraic factoring of a cover into `b`.
fn factor(cubes: &[Cube], b: &mut StructBuilder) -> Literal {
    if cubes.is_empty() {
        return Literal::FALSE;
    }
    if cubes.iter().any(|c| c.mask == 0) {
        return Literal::TRUE;
    }
    if cubes.len() == 1 {
        return b.and_all(&cube_lits(&cubes[0]));
    }
    // Common cube.
    let mut cmask = !0u8;
    let mut cpol = cubes[0].pol;
    for c in cubes {
        cmask &= c.mask & !(c.pol ^ cpol);
        cpol &= cmask;
    }
    cpol &= cmask;
    if cmask != 0 {
        let common = Cube { mask: cmask, pol: cpol };
        let rest: Vec<Cube> = cubes.iter().map(|c| Cube { mask: c.mask & !cmask, pol: c.pol & !cmask }).collect();
        let mut lits = cube_lits(&common);
        lits.push(factor(&rest, b));
        return b.and_all(&lits);
    }
    let mut counts = [0u32; 16];
    for c in cubes {
        for lit in 0..16u8 {
            if c.has(lit) {
                counts[lit as usize] += 1;
            }
        }
    }
    let best = (0..16u8).max_by_key(|&l| (counts[l as usize], std::cmp::Reverse(l))).unwrap();
    if counts[best as usize] <= 1 {
        let terms: Vec<Literal> = cubes.iter().map(|c| b.and_all(&cube_lits(c))).collect();
        return b.or_all(&terms);
    }
    let (with, without): (Vec<Cube>, Vec<Cube>) = cubes.iter().partition(|c| c.has(best));
    let quotient: Vec<Cube> = with.iter().map(|c| c.without_var(best >> 1)).collect();
    let q = factor(&quotient, b);
    let t = b.and(lit_of(best), q);
    if without.is_empty() {
        t
    } else {
        let r = factor(&without, b);
        b.or(t, r)
    }
}

/// Factored structure of a cover over `nvars` leaves.
pub fn factor_cover(cubes: &[Cube], nvars: usize) -> Structure {
    let mut b = StructBuilder::new(nvars);
    let out = factor(cubes, &mut b);
    b.finish(out)
}

/// Smaller of the factored forms of `f` and of its complement.
pub fn synthesize(f: Tt8, nvars: usize) -> Structure {
    let pos = factor_cover(&isop(f, f, nvars), nvars);
    let mut neg = factor_cover(&isop(!f, !f, nvars), nvars);
    neg.output = !neg.output;
    if (neg.node_count(), neg.depth()) < (pos.node_count(), pos.depth()) {
        neg
    } else {
        pos
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check(f: Tt8, nvars: usize) {
        let cubes = isop(f, f, nvars);
        assert_eq!(cover_eval(&cubes), f);
        // Irredundant: dropping any cube changes the function.
        for i in 0..cubes.len() {
            let mut rest = cubes.clone();
            rest.remove(i);
            assert_ne!(cover_eval(&rest), f);
        }
        assert_eq!(factor_cover(&cubes, nvars).eval(), f);
        assert_eq!(synthesize(f, nvars).eval(), f);
    }

    #[test]
    fn isop_exact_on_small_functions() {
        for t in 0..=u16::MAX {
            if t % 97 == 0 || t < 300 {
                check(Tt8::from_u16(t), 4);
            }
        }
    }

    #[test]
    fn isop_eight_vars() {
        let mut s = 0x1234_5678_9abc_def0u64;
        for _ in 0..50 {
            let mut w = [0u64; 4];
            for x in &mut w {
                s ^= s << 13;
                s ^= s >> 7;
                s ^= s << 17;
                *x = s;
            }
            check(Tt8(w), 8);
        }
    }

    #[test]
    fn dont_cares_are_used() {
        let a = Tt8::var(0) & Tt8::var(1);
        let cubes = isop(a, Tt8::var(0), 4);
        assert_eq!(cubes, vec![Cube { mask: 1, pol: 1 }]);
    }

    #[test]
    fn factoring_shares_literals() {
        // ab + ac + ad -> a(b + c + d): three gates instead of five.
        let (a, b, c, d) = (Tt8::var(0), Tt8::var(1), Tt8::var(2), Tt8::var(3));
        let f = (a & b) | (a & c) | (a & d);
        let s = synthesize(f, 4);
        assert_eq!(s.eval(), f);
        assert_eq!(s.node_count(), 3);
    }

    #[test]
    fn majority_fits_in_four() {
        let (a, b, c) = (Tt8::var(0), Tt8::var(1), Tt8::var(2));
        let maj = (a & b) | (a & c) | (b & c);
        let s = synthesize(maj, 3);
        assert_eq!(s.eval(), maj);
        assert!(s.node_count() <= 4, "{}", s.node_count());
    }
}
