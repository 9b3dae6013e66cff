//! Truth tables over at most eight variables.

use std::ops::{BitAnd, BitOr, BitXor, Not};

const VAR6: [u64; 6] = [
    0xaaaa_aaaa_aaaa_aaaa,
    0xcccc_cccc_cccc_cccc,
    0xf0f0_f0f0_f0f0_f0f0,
    0xff00_ff00_ff00_ff00,
    0xffff_0000_ffff_0000,
    0xffff_ffff_0000_0000,
];

/// 256-bit truth table. Functions of fewer than eight variables are stored
/// replicated, so unused variables are naturally don't-cares.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Default)]
pub struct Tt8(pub [u64; 4]);

impl Tt8 {
    pub const ZERO: Tt8 = Tt8([0; 4]);
    pub const ONES: Tt8 = Tt8([!0; 4]);

    pub fn var(i: usize) -> Tt8 {
        match i {
            0..=5 => Tt8([VAR6[i]; 4]),
            6 => Tt8([0, !0, 0, !0]),
            7 => Tt8([0, 0, !0, !0]),
            _ => panic!("variable {i} out of range"),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.0 == [0; 4]
    }

    pub fn is_ones(&self) -> bool {
        self.0 == [!0; 4]
    }

    /// `self` implies `other`.
    pub fn implies(&self, other: &Tt8) -> bool {
        (*self & !*other).is_zero()
    }

    pub fn bit(&self, m: usize) -> bool {
        self.0[m >> 6] >> (m & 63) & 1 == 1
    }

    /// Negative cofactor replicated over both halves of `var`.
    pub fn cofactor0(&self, var: usize) -> Tt8 {
        let mut r = self.0;
        match var {
            0..=5 => {
                let s = 1 << var;
                for w in &mut r {
                    let lo = *w & !VAR6[var];
                    *w = lo | (lo << s);
                }
            }
            6 => {
                r[1] = r[0];
                r[3] = r[2];
            }
            7 => {
                r[2] = r[0];
                r[3] = r[1];
            }
            _ => panic!("variable {var} out of range"),
        }
        Tt8(r)
    }

    /// Positive cofactor replicated over both halves of `var`.
    pub fn cofactor1(&self, var: usize) -> Tt8 {
        let mut r = self.0;
        match var {
            0..=5 => {
                let s = 1 << var;
                for w in &mut r {
                    let hi = *w & VAR6[var];
                    *w = hi | (hi >> s);
                }
            }
            6 => {
                r[0] = r[1];
                r[2] = r[3];
            }
            7 => {
                r[0] = r[2];
                r[1] = r[3];
            }
            _ => panic!("variable {var} out of range"),
        }
        Tt8(r)
    }

    pub fn depends_on(&self, var: usize) -> bool {
        self.cofactor0(var) != self.cofactor1(var)
    }

    /// The low 16 bits, i.e. the table of a function over variables 0..4.
    pub fn low16(&self) -> u16 {
        self.0[0] as u16
    }

    /// Expands a 4-variable table to all eight variables.
    pub fn from_u16(t: u16) -> Tt8 {
        let mut w = t as u64;
        w |= w << 16;
        w |= w << 32;
        Tt8([w; 4])
    }
}

impl Not for Tt8 {
    type Output = Tt8;
    fn not(self) -> Tt8 {
        Tt8(self.0.map(|w| !w))
    }
}

macro_rules! bitop {
    ($tr:ident, $f:ident, $op:tt) => {
        impl $tr for Tt8 {
            type Output = Tt8;
            fn $f(self, o: Tt8) -> Tt8 {
                Tt8([self.0[0] $op o.0[0], self.0[1] $op o.0[1], self.0[2] $op o.0[2], self.0[3] $op o.0[3]])
            }
        }
    };
}
bitop!(BitAnd, bitand, &);
bitop!(BitOr, bitor, |);
bitop!(BitXor, bitxor, ^);

/// Truth tables with a variable number of words, for windows of up to 16
/// variables. Word `w`, bit `b` is minterm `64 * w + b`.
pub(crate) fn var_words(var: usize, nwords: usize) -> Vec<u64> {
    (0..nwords)
        .map(|w| if var < 6 { VAR6[var] } else if w >> (var - 6) & 1 == 1 { !0 } else { 0 })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cofactors_and_support() {
        let f = (Tt8::var(0) & Tt8::var(7)) | Tt8::var(3);
        assert_eq!(f.cofactor1(7), Tt8::var(0) | Tt8::var(3));
        assert_eq!(f.cofactor0(7), Tt8::var(3));
        assert_eq!(f.cofactor1(3), Tt8::ONES);
        for v in 0..8 {
            assert_eq!(f.depends_on(v), matches!(v, 0 | 3 | 7), "var {v}");
        }
    }

    #[test]
    fn u16_round_trip() {
        let t = 0x8ee8u16;
        let f = Tt8::from_u16(t);
        assert_eq!(f.low16(), t);
        for v in 4..8 {
            assert!(!f.depends_on(v));
        }
        assert_eq!(Tt8::from_u16(0xaaaa), Tt8::var(0));
    }

    #[test]
    fn var_words_match_tt8() {
        for v in 0..8 {
            assert_eq!(var_words(v, 4).as_slice(), &Tt8::var(v).0);
        }
    }
}
