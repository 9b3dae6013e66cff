//! Small AND/complement recipes that operators instantiate over leaf signals.

use rustc_hash::FxHashMap;

use super::truth::Tt8;
use crate::aig::Literal;

/// A DAG of AND gates over `num_inputs` leaves.
///
/// Literals address node 0 (constant false), nodes `1..=num_inputs`
/// (leaves) and then gates in order.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Structure {
    pub num_inputs: usize,
    pub gates: Vec<[Literal; 2]>,
    pub output: Literal,
}

impl Structure {
    pub fn node_count(&self) -> usize {
        self.gates.len()
    }

    pub fn depth(&self) -> u32 {
        let mut lv = vec![0u32; 1 + self.num_inputs + self.gates.len()];
        for (g, [a, b]) in self.gates.iter().enumerate() {
            lv[1 + self.num_inputs + g] = 1 + lv[a.index() as usize].max(lv[b.index() as usize]);
        }
        lv[self.output.index() as usize]
    }

    /// Evaluates over up to eight leaves, leaf `i` taking variable `i`.
    pub fn eval(&self) -> Tt8 {
        assert!(self.num_inputs <= 8);
        self.eval_with(&(0..self.num_inputs).map(Tt8::var).collect::<Vec<_>>())
    }

    pub fn eval_with(&self, leaves: &[Tt8]) -> Tt8 {
        let mut vals = Vec::with_capacity(1 + self.num_inputs + self.gates.len());
        vals.push(Tt8::ZERO);
        vals.extend_from_slice(&leaves[..self.num_inputs]);
        let get = |vals: &[Tt8], l: Literal| {
            let v = vals[l.index() as usize];
            if l.is_negated() {
                !v
            } else {
                v
            }
        };
        for &[a, b] in &self.gates {
            let v = get(&vals, a) & get(&vals, b);
            vals.push(v);
        }
        get(&vals, self.output)
    }

    pub fn input(i: usize) -> Literal {
        Literal::new(1 + i as u32, false)
    }
}

/// Hash-consing builder for [`Structure`].
pub(crate) struct StructBuilder {
    num_inputs: usize,
    gates: Vec<[Literal; 2]>,
    hash: FxHashMap<[Literal; 2], Literal>,
}

impl StructBuilder {
    pub fn new(num_inputs: usize) -> Self {
        StructBuilder { num_inputs, gates: Vec::new(), hash: FxHashMap::default() }
    }

    pub fn and(&mut self, a: Literal, b: Literal) -> Literal {
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        if a == Literal::FALSE || a == !b {
            return Literal::FALSE;
        }
        if a == Literal::TRUE || a == b {
            return b;
        }
        if let Some(&l) = self.hash.get(&[a, b]) {
            return l;
        }
        let l = Literal::new((1 + self.num_inputs + self.gates.len()) as u32, false);
        self.gates.push([a, b]);
        self.hash.insert([a, b], l);
        l
    }

    pub fn or(&mut self, a: Literal, b: Literal) -> Literal {
        !self.and(!a, !b)
    }

    /// Balanced conjunction; the empty conjunction is true.
    pub fn and_all(&mut self, lits: &[Literal]) -> Literal {
        match lits.len() {
            0 => Literal::TRUE,
            1 => lits[0],
            n => {
                let (l, r) = lits.split_at(n / 2);
                let a = self.and_all(l);
                let b = self.and_all(r);
                self.and(a, b)
            }
        }
    }

    pub fn or_all(&mut self, lits: &[Literal]) -> Literal {
        let neg: Vec<Literal> = lits.iter().map(|&l| !l).collect();
        !self.and_all(&neg)
    }

    pub fn finish(self, output: Literal) -> Structure {
        // Drop gates not reachable from the output and renumber.
        let base = 1 + self.num_inputs;
        let mut used = vec![false; self.gates.len()];
        if output.index() as usize >= base {
            used[output.index() as usize - base] = true;
        }
        for g in (0..self.gates.len()).rev() {
            if used[g] {
                for l in self.gates[g] {
                    if l.index() as usize >= base {
                        used[l.index() as usize - base] = true;
                    }
                }
            }
        }
        let mut map = vec![0u32; self.gates.len()];
        let mut gates = Vec::new();
        let remap = |map: &[u32], l: Literal| {
            if (l.index() as usize) < base {
                l
            } else {
                Literal::new(map[l.index() as usize - base], l.is_negated())
            }
        };
        for g in 0..self.gates.len() {
            if used[g] {
                let [a, b] = self.gates[g];
                map[g] = (base + gates.len()) as u32;
                gates.push([remap(&map, a), remap(&map, b)]);
            }
        }
        Structure { num_inputs: self.num_inputs, gates, output: remap(&map, output) }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builder_hashes_and_prunes() {
        let mut b = StructBuilder::new(3);
        let (x, y, z) = (Structure::input(0), Structure::input(1), Structure::input(2));
        let g1 = b.and(x, y);
        let g2 = b.and(y, x);
        assert_eq!(g1, g2);
        let _dead = b.and(x, z);
        let o = b.or(g1, z);
        let s = b.finish(o);
        assert_eq!(s.node_count(), 2);
        assert_eq!(s.depth(), 2);
        assert_eq!(s.eval(), (Tt8::var(0) & Tt8::var(1)) | Tt8::var(2));
    }

    #[test]
    fn constants_fold() {
        let mut b = StructBuilder::new(1);
        let x = Structure::input(0);
        assert_eq!(b.and(x, !x), Literal::FALSE);
        assert_eq!(b.and(x, Literal::TRUE), x);
        assert_eq!(b.and_all(&[]), Literal::TRUE);
        assert_eq!(b.or_all(&[]), Literal::FALSE);
        let s = b.finish(Literal::TRUE);
        assert_eq!(s.eval(), Tt8::ONES);
        assert_eq!(s.depth(), 0);
    }
}
