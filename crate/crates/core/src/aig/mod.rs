//! And-inverter graphs.
//!
//! Node `0` is the constant-false node, nodes `1..=num_inputs` are the primary
//! inputs and every following node is a two-input AND gate. A [`Literal`] is
//! `2 * index + negated`, the usual AIGER encoding. Graphs are built through
//! [`AigBuilder`], which applies constant propagation and structural hashing,
//! and are immutable afterwards.

mod aiger;
pub(crate) mod equiv;
pub mod random;
pub(crate) mod sim;
mod stats;
mod verilog;

use std::fmt;
use std::hash::{Hash, Hasher};
use std::ops::Not;

use rustc_hash::{FxHashMap, FxHashSet, FxHasher};
use thiserror::Error;

pub use aiger::{parse_aiger, parse_aiger_auto, read_aiger, write_aiger, write_aiger_file, AigerFormat};
pub use equiv::{check_equiv, check_equiv_default, EquivVerdict, DEFAULT_EQUIV_BUDGET, EXHAUSTIVE_INPUT_LIMIT};
pub use sim::{simulate, BitMatrix};
pub(crate) use sim::eval_block;
pub use stats::CircuitStats;
pub use verilog::{parse_verilog, read_verilog};

/// Where in an input file an error was found.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Location {
    Line(usize),
    Byte(usize),
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Location::Line(l) => write!(f, "line {l}"),
            Location::Byte(b) => write!(f, "byte offset {b}"),
        }
    }
}

#[derive(Debug, Error)]
pub enum AigError {
    #[error("malformed header at {location}: {message}")]
    MalformedHeader { location: Location, message: String },
    #[error("malformed AIGER body at {location}: {message}")]
    MalformedBody { location: Location, message: String },
    #[error("latches are not supported ({count} declared, {location})")]
    LatchesUnsupported { count: u64, location: Location },
    #[error("literal {literal} at {location} refers to an undefined variable")]
    DanglingLiteral { literal: u64, location: Location },
    #[error("combinational cycle through variable {variable} defined at {location}")]
    CycleDetected { variable: u64, location: Location },
    #[error("netlist error at line {line}: {message}")]
    Netlist { line: usize, message: String },
    #[error("pattern matrix has {got} rows, circuit has {expected} inputs")]
    WidthMismatch { expected: usize, got: usize },
    #[error("interface mismatch: {left_inputs}/{left_outputs} vs {right_inputs}/{right_outputs} inputs/outputs")]
    InterfaceMismatch {
        left_inputs: usize,
        left_outputs: usize,
        right_inputs: usize,
        right_outputs: usize,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = AigError> = std::result::Result<T, E>;

/// A possibly complemented reference to a node.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Literal(u32);

impl Literal {
    pub const FALSE: Literal = Literal(0);
    pub const TRUE: Literal = Literal(1);

    #[inline]
    pub const fn new(index: u32, negated: bool) -> Self {
        Literal(index << 1 | negated as u32)
    }

    #[inline]
    pub const fn from_code(code: u32) -> Self {
        Literal(code)
    }

    #[inline]
    pub const fn code(self) -> u32 {
        self.0
    }

    #[inline]
    pub const fn index(self) -> u32 {
        self.0 >> 1
    }

    #[inline]
    pub const fn is_negated(self) -> bool {
        self.0 & 1 == 1
    }

    #[inline]
    pub const fn is_const(self) -> bool {
        self.0 < 2
    }

    /// The same node without complement.
    #[inline]
    pub const fn regular(self) -> Self {
        Literal(self.0 & !1)
    }

    #[inline]
    pub const fn negate_if(self, cond: bool) -> Self {
        Literal(self.0 ^ cond as u32)
    }
}

impl Not for Literal {
    type Output = Literal;

    #[inline]
    fn not(self) -> Literal {
        Literal(self.0 ^ 1)
    }
}

impl fmt::Debug for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_negated() {
            write!(f, "!n{}", self.index())
        } else {
            write!(f, "n{}", self.index())
        }
    }
}

/// An immutable, structurally hashed, combinational and-inverter graph.
///
/// Invariants (checked by [`Aig::check_invariants`], asserted on every build in
/// debug builds):
/// - fanins of a node refer to strictly smaller node indices,
/// - each AND node has `fanin0 < fanin1` and no constant fanin,
/// - no two AND nodes share the same fanin pair,
/// - every AND node is reachable from an output,
/// - `level(n) = 1 + max(level(fanin0), level(fanin1))`, inputs at level 0.
#[derive(Clone, PartialEq, Eq)]
pub struct Aig {
    num_inputs: u32,
    ands: Vec<[Literal; 2]>,
    outputs: Vec<Literal>,
    levels: Vec<u32>,
}

impl fmt::Debug for Aig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Aig")
            .field("inputs", &self.num_inputs)
            .field("ands", &self.ands.len())
            .field("outputs", &self.outputs.len())
            .field("depth", &self.depth())
            .finish()
    }
}

impl Aig {
    /// A graph with `num_inputs` inputs, no gates and no outputs.
    pub fn empty(num_inputs: usize) -> Self {
        AigBuilder::new(num_inputs).build()
    }

    pub fn num_inputs(&self) -> usize {
        self.num_inputs as usize
    }

    pub fn num_ands(&self) -> usize {
        self.ands.len()
    }

    pub fn num_outputs(&self) -> usize {
        self.outputs.len()
    }

    /// Total node count including the constant and the inputs.
    pub fn num_nodes(&self) -> usize {
        1 + self.num_inputs as usize + self.ands.len()
    }

    /// Index of the first AND node.
    pub fn first_and(&self) -> u32 {
        self.num_inputs + 1
    }

    pub fn input(&self, i: usize) -> Literal {
        assert!(i < self.num_inputs as usize);
        Literal::new(i as u32 + 1, false)
    }

    pub fn is_input(&self, index: u32) -> bool {
        index >= 1 && index <= self.num_inputs
    }

    pub fn is_and(&self, index: u32) -> bool {
        index > self.num_inputs && (index as usize) < self.num_nodes()
    }

    /// Fanins of an AND node. Panics for the constant and inputs.
    #[inline]
    pub fn fanins(&self, index: u32) -> [Literal; 2] {
        self.ands[(index - self.num_inputs - 1) as usize]
    }

    /// `(node index, fanins)` for every AND node in topological order.
    pub fn and_nodes(&self) -> impl Iterator<Item = (u32, [Literal; 2])> + '_ {
        let first = self.first_and();
        self.ands.iter().enumerate().map(move |(i, f)| (first + i as u32, *f))
    }

    pub fn outputs(&self) -> &[Literal] {
        &self.outputs
    }

    #[inline]
    pub fn level(&self, index: u32) -> u32 {
        self.levels[index as usize]
    }

    /// Maximum level over all outputs.
    pub fn depth(&self) -> u32 {
        self.outputs.iter().map(|o| self.level(o.index())).max().unwrap_or(0)
    }

    /// Number of references to each node, counting output references.
    pub fn fanout_counts(&self) -> Vec<u32> {
        let mut refs = vec![0u32; self.num_nodes()];
        for (_, [a, b]) in self.and_nodes() {
            refs[a.index() as usize] += 1;
            refs[b.index() as usize] += 1;
        }
        for o in &self.outputs {
            refs[o.index() as usize] += 1;
        }
        refs
    }

    /// Statistics vector used both as features and as area/delay metrics.
    pub fn stats(&self) -> CircuitStats {
        CircuitStats::of(self)
    }

    /// A stable 64-bit structural hash. Equal graphs hash equally across runs.
    pub fn fingerprint(&self) -> u64 {
        let mut h = FxHasher::default();
        self.num_inputs.hash(&mut h);
        self.ands.len().hash(&mut h);
        for [a, b] in &self.ands {
            a.code().hash(&mut h);
            b.code().hash(&mut h);
        }
        self.outputs.len().hash(&mut h);
        for o in &self.outputs {
            o.code().hash(&mut h);
        }
        h.finish()
    }

    /// Verifies every structural invariant listed on [`Aig`].
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        if self.levels.len() != self.num_nodes() {
            return Err("level vector length mismatch".into());
        }
        if self.levels[..=self.num_inputs as usize].iter().any(|&l| l != 0) {
            return Err("constant or input with non-zero level".into());
        }
        let mut seen = FxHashSet::default();
        for (n, [a, b]) in self.and_nodes() {
            if a.is_const() || b.is_const() {
                return Err(format!("node {n} has a constant fanin"));
            }
            if a.index() >= n || b.index() >= n {
                return Err(format!("node {n} is not topologically ordered"));
            }
            if a >= b {
                return Err(format!("node {n} fanins are not in canonical order"));
            }
            if a.index() == b.index() {
                return Err(format!("node {n} has both polarities of one fanin"));
            }
            if !seen.insert((a, b)) {
                return Err(format!("node {n} duplicates an existing fanin pair"));
            }
            let expect = 1 + self.level(a.index()).max(self.level(b.index()));
            if self.level(n) != expect {
                return Err(format!("node {n} has level {} expected {expect}", self.level(n)));
            }
        }
        for o in &self.outputs {
            if o.index() as usize >= self.num_nodes() {
                return Err(format!("output {o:?} out of range"));
            }
        }
        let refs = self.fanout_counts();
        if let Some((n, _)) = self.and_nodes().find(|(n, _)| refs[*n as usize] == 0) {
            return Err(format!("node {n} is dangling"));
        }
        Ok(())
    }

    /// Builder pre-populated with this graph's nodes. Outputs are not copied.
    pub fn to_builder(&self) -> AigBuilder {
        let mut b = AigBuilder::new(self.num_inputs());
        for (n, [f0, f1]) in self.and_nodes() {
            let lit = b.and(f0, f1);
            debug_assert_eq!(lit, Literal::new(n, false));
        }
        b
    }
}

/// Incremental AIG construction with constant propagation and structural hashing.
#[derive(Clone, Debug)]
pub struct AigBuilder {
    num_inputs: u32,
    ands: Vec<[Literal; 2]>,
    levels: Vec<u32>,
    strash: FxHashMap<(Literal, Literal), u32>,
    outputs: Vec<Literal>,
}

impl AigBuilder {
    pub fn new(num_inputs: usize) -> Self {
        AigBuilder {
            num_inputs: num_inputs as u32,
            ands: Vec::new(),
            levels: vec![0; num_inputs + 1],
            strash: FxHashMap::default(),
            outputs: Vec::new(),
        }
    }

    pub fn num_inputs(&self) -> usize {
        self.num_inputs as usize
    }

    pub fn num_ands(&self) -> usize {
        self.ands.len()
    }

    pub fn input(&self, i: usize) -> Literal {
        assert!(i < self.num_inputs as usize, "input {i} out of range");
        Literal::new(i as u32 + 1, false)
    }

    pub fn level(&self, lit: Literal) -> u32 {
        self.levels[lit.index() as usize]
    }

    /// Looks up `a AND b` without creating it.
    pub fn find_and(&self, a: Literal, b: Literal) -> Option<Literal> {
        match simplify_and(a, b) {
            Simplified::Lit(l) => Some(l),
            Simplified::Pair(a, b) => self.strash.get(&(a, b)).map(|&n| Literal::new(n, false)),
        }
    }

    pub fn and(&mut self, a: Literal, b: Literal) -> Literal {
        let (a, b) = match simplify_and(a, b) {
            Simplified::Lit(l) => return l,
            Simplified::Pair(a, b) => (a, b),
        };
        debug_assert!((b.index() as usize) < self.levels.len(), "fanin {b:?} does not exist");
        if let Some(&n) = self.strash.get(&(a, b)) {
            return Literal::new(n, false);
        }
        let n = self.levels.len() as u32;
        self.ands.push([a, b]);
        self.levels.push(1 + self.levels[a.index() as usize].max(self.levels[b.index() as usize]));
        self.strash.insert((a, b), n);
        Literal::new(n, false)
    }

    pub fn or(&mut self, a: Literal, b: Literal) -> Literal {
        !self.and(!a, !b)
    }

    pub fn xor(&mut self, a: Literal, b: Literal) -> Literal {
        let l = self.and(a, !b);
        let r = self.and(!a, b);
        self.or(l, r)
    }

    pub fn xnor(&mut self, a: Literal, b: Literal) -> Literal {
        !self.xor(a, b)
    }

    /// `if sel { then } else { other }`
    pub fn mux(&mut self, sel: Literal, then: Literal, other: Literal) -> Literal {
        let l = self.and(sel, then);
        let r = self.and(!sel, other);
        self.or(l, r)
    }

    pub fn add_output(&mut self, lit: Literal) {
        debug_assert!((lit.index() as usize) < self.levels.len());
        self.outputs.push(lit);
    }

    /// Finalizes the graph, dropping AND nodes unreachable from the outputs and
    /// renumbering the survivors densely.
    pub fn build(self) -> Aig {
        let total = self.levels.len();
        let first = self.num_inputs as usize + 1;
        let mut live = vec![false; total];
        for o in &self.outputs {
            live[o.index() as usize] = true;
        }
        for n in (first..total).rev() {
            if live[n] {
                let [a, b] = self.ands[n - first];
                live[a.index() as usize] = true;
                live[b.index() as usize] = true;
            }
        }
        let mut map: Vec<u32> = (0..first as u32).collect();
        map.resize(total, u32::MAX);
        let mut ands = Vec::with_capacity(self.ands.len());
        let mut levels = vec![0u32; first];
        let remap = |map: &[u32], l: Literal| Literal::new(map[l.index() as usize], l.is_negated());
        for n in first..total {
            if !live[n] {
                continue;
            }
            let [a, b] = self.ands[n - first];
            let (a, b) = (remap(&map, a), remap(&map, b));
            let (a, b) = if a < b { (a, b) } else { (b, a) };
            map[n] = (first + ands.len()) as u32;
            levels.push(1 + levels[a.index() as usize].max(levels[b.index() as usize]));
            ands.push([a, b]);
        }
        let outputs = self.outputs.iter().map(|&o| remap(&map, o)).collect();
        let aig = Aig { num_inputs: self.num_inputs, ands, outputs, levels };
        debug_assert_eq!(aig.check_invariants(), Ok(()));
        aig
    }
}

pub(crate) enum Simplified {
    Lit(Literal),
    Pair(Literal, Literal),
}

#[inline]
pub(crate) fn simplify_and(a: Literal, b: Literal) -> Simplified {
    if a == Literal::FALSE || b == Literal::FALSE || a == !b {
        return Simplified::Lit(Literal::FALSE);
    }
    if a == Literal::TRUE || a == b {
        return Simplified::Lit(b);
    }
    if b == Literal::TRUE {
        return Simplified::Lit(a);
    }
    if a < b {
        Simplified::Pair(a, b)
    } else {
        Simplified::Pair(b, a)
    }
}

/// Copies the part of `aig` needed by its outputs into `builder`, mapping
/// inputs through `inputs`. Returns the mapped output literals.
pub fn transfer(aig: &Aig, builder: &mut AigBuilder, inputs: &[Literal]) -> Vec<Literal> {
    assert_eq!(inputs.len(), aig.num_inputs());
    let mut map = Vec::with_capacity(aig.num_nodes());
    map.push(Literal::FALSE);
    map.extend_from_slice(inputs);
    for (_, [a, b]) in aig.and_nodes() {
        let fa = map[a.index() as usize].negate_if(a.is_negated());
        let fb = map[b.index() as usize].negate_if(b.is_negated());
        map.push(builder.and(fa, fb));
    }
    aig.outputs().iter().map(|o| map[o.index() as usize].negate_if(o.is_negated())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn and_identity_and_contradiction() {
        let mut b = AigBuilder::new(2);
        let x = b.input(0);
        assert_eq!(b.and(x, Literal::TRUE), x);
        assert_eq!(b.and(Literal::TRUE, x), x);
        assert_eq!(b.and(x, !x), Literal::FALSE);
        assert_eq!(b.and(x, Literal::FALSE), Literal::FALSE);
        assert_eq!(b.and(x, x), x);
        assert_eq!(b.num_ands(), 0);
    }

    #[test]
    fn strash_reuses_nodes() {
        let mut b = AigBuilder::new(2);
        let (x, y) = (b.input(0), b.input(1));
        let p = b.and(x, y);
        let q = b.and(y, x);
        assert_eq!(p, q);
        assert_eq!(b.num_ands(), 1);
        assert_eq!(b.find_and(x, !y), None);
    }

    #[test]
    fn build_drops_dangling_nodes() {
        let mut b = AigBuilder::new(3);
        let (x, y, z) = (b.input(0), b.input(1), b.input(2));
        let _unused = b.and(x, z);
        let p = b.and(x, y);
        b.add_output(!p);
        let aig = b.build();
        assert_eq!(aig.num_ands(), 1);
        assert_eq!(aig.outputs(), &[Literal::new(4, true)]);
        assert_eq!(aig.depth(), 1);
    }

    #[test]
    fn balanced_tree_shape() {
        let mut b = AigBuilder::new(4);
        let l = b.and(b.input(0), b.input(1));
        let r = b.and(b.input(2), b.input(3));
        let root = b.and(l, r);
        b.add_output(root);
        let aig = b.build();
        let s = aig.stats();
        assert_eq!((s.nodes, s.levels, s.edges), (3, 2, 6));
    }

    #[test]
    fn literal_encoding() {
        let l = Literal::new(5, true);
        assert_eq!(l.code(), 11);
        assert_eq!(l.index(), 5);
        assert!(l.is_negated());
        assert_eq!(!l, Literal::new(5, false));
        assert_eq!(l.regular(), Literal::new(5, false));
        assert!(Literal::TRUE.is_const());
    }
}
