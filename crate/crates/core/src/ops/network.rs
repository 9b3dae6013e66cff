//! Mutable graph shared by the local rewriting operators.
//!
//! Nodes are never renumbered while an operator runs. Replacing a node
//! redirects its fanouts eagerly, merging any fanout that becomes
//! structurally equal to an existing node, and frees logic whose reference
//! count drops to zero. The result is rebuilt into a fresh [`Aig`].

use rustc_hash::FxHashMap;

use super::structure::Structure;
use super::truth::Tt8;
use crate::aig::{simplify_and, Aig, AigBuilder, Literal, Simplified};

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub(crate) enum Kind {
    Const,
    Input,
    And,
    Dead,
    Replaced,
}

/// Literal indices at or above this value are placeholders for nodes a
/// candidate structure would create.
const VIRTUAL: u32 = 1 << 30;

pub(crate) struct Network {
    num_inputs: u32,
    kind: Vec<Kind>,
    fanins: Vec<[Literal; 2]>,
    repl: Vec<Literal>,
    refs: Vec<u32>,
    level: Vec<u32>,
    fanouts: Vec<Vec<u32>>,
    strash: FxHashMap<[Literal; 2], u32>,
    outputs: Vec<Literal>,
    live: usize,
    changed: bool,
    /// Nodes whose fanins changed since the last drain.
    touched: Vec<u32>,
    stamp: u32,
    visit: Vec<u32>,
    leaf: Vec<u32>,
    mffc: Vec<u32>,
    tt: Vec<Tt8>,
}

impl Network {
    pub fn new(aig: &Aig) -> Self {
        let n = aig.num_nodes();
        let mut net = Network {
            num_inputs: aig.num_inputs() as u32,
            kind: Vec::with_capacity(n),
            fanins: Vec::with_capacity(n),
            repl: vec![Literal::FALSE; n],
            refs: vec![0; n],
            level: Vec::with_capacity(n),
            fanouts: vec![Vec::new(); n],
            strash: FxHashMap::default(),
            outputs: aig.outputs().to_vec(),
            live: aig.num_ands(),
            changed: false,
            touched: Vec::new(),
            stamp: 0,
            visit: vec![0; n],
            leaf: vec![0; n],
            mffc: vec![0; n],
            tt: vec![Tt8::ZERO; n],
        };
        net.strash.reserve(aig.num_ands());
        for i in 0..n as u32 {
            net.level.push(aig.level(i));
            if i == 0 {
                net.kind.push(Kind::Const);
                net.fanins.push([Literal::FALSE; 2]);
            } else if aig.is_input(i) {
                net.kind.push(Kind::Input);
                net.fanins.push([Literal::FALSE; 2]);
            } else {
                let f = aig.fanins(i);
                net.kind.push(Kind::And);
                net.fanins.push(f);
                for l in f {
                    net.refs[l.index() as usize] += 1;
                    net.fanouts[l.index() as usize].push(i);
                }
                net.strash.insert(f, i);
            }
        }
        for o in aig.outputs() {
            net.refs[o.index() as usize] += 1;
        }
        net
    }

    pub fn num_nodes(&self) -> u32 {
        self.kind.len() as u32
    }

    pub fn is_and(&self, n: u32) -> bool {
        self.kind[n as usize] == Kind::And
    }

    pub fn fanins(&self, n: u32) -> [Literal; 2] {
        self.fanins[n as usize]
    }

    pub fn level(&self, n: u32) -> u32 {
        self.level[n as usize]
    }

    pub fn live_ands(&self) -> usize {
        self.live
    }

    pub fn changed(&self) -> bool {
        self.changed
    }

    pub fn take_touched(&mut self) -> Vec<u32> {
        std::mem::take(&mut self.touched)
    }

    pub fn resolve(&self, mut lit: Literal) -> Literal {
        while self.kind[lit.index() as usize] == Kind::Replaced {
            lit = self.repl[lit.index() as usize].negate_if(lit.is_negated());
        }
        lit
    }

    /// Existing literal for `a AND b`, if any.
    pub fn lookup(&self, a: Literal, b: Literal) -> Option<Literal> {
        match simplify_and(a, b) {
            Simplified::Lit(l) => Some(l),
            Simplified::Pair(a, b) => self.strash.get(&[a, b]).map(|&m| Literal::new(m, false)),
        }
    }

    pub fn and(&mut self, a: Literal, b: Literal) -> Literal {
        let (a, b) = match simplify_and(a, b) {
            Simplified::Lit(l) => return l,
            Simplified::Pair(a, b) => (a, b),
        };
        if let Some(&m) = self.strash.get(&[a, b]) {
            return Literal::new(m, false);
        }
        debug_assert!(self.is_and(a.index()) || self.kind[a.index() as usize] == Kind::Input);
        debug_assert!(self.is_and(b.index()) || self.kind[b.index() as usize] == Kind::Input);
        let m = self.kind.len() as u32;
        self.kind.push(Kind::And);
        self.fanins.push([a, b]);
        self.repl.push(Literal::FALSE);
        self.refs.push(0);
        self.level.push(1 + self.level[a.index() as usize].max(self.level[b.index() as usize]));
        self.fanouts.push(Vec::new());
        self.visit.push(0);
        self.leaf.push(0);
        self.mffc.push(0);
        self.tt.push(Tt8::ZERO);
        for l in [a, b] {
            self.refs[l.index() as usize] += 1;
            self.fanouts[l.index() as usize].push(m);
        }
        self.strash.insert([a, b], m);
        self.live += 1;
        m.into_lit()
    }

    /// Replaces AND node `old` by `new` everywhere. `new` must not depend on
    /// `old`.
    pub fn replace(&mut self, old: u32, new: Literal) {
        debug_assert!(self.is_and(old));
        debug_assert_ne!(self.resolve(new).index(), old);
        self.changed = true;
        let mut queue = Vec::new();
        self.redirect(old, new, &mut queue);
        let mut qi = 0;
        while qi < queue.len() {
            let o = queue[qi];
            qi += 1;
            let target = self.resolve(o.into_lit());
            for m in std::mem::take(&mut self.fanouts[o as usize]) {
                if !self.is_and(m) {
                    continue;
                }
                let [a, b] = self.fanins[m as usize];
                if a.index() != o && b.index() != o {
                    continue;
                }
                if self.strash.get(&[a, b]) == Some(&m) {
                    self.strash.remove(&[a, b]);
                }
                let sub = |l: Literal| if l.index() == o { target.negate_if(l.is_negated()) } else { l };
                let (x, y) = (sub(a), sub(b));
                let (x, y) = if x <= y { (x, y) } else { (y, x) };
                self.fanins[m as usize] = [x, y];
                self.touched.push(m);
                match simplify_and(x, y) {
                    Simplified::Lit(l) => self.redirect(m, l, &mut queue),
                    Simplified::Pair(x, y) => {
                        self.level[m as usize] = 1 + self.level[x.index() as usize].max(self.level[y.index() as usize]);
                        match self.strash.get(&[x, y]) {
                            Some(&m2) if m2 != m => self.redirect(m, m2.into_lit(), &mut queue),
                            _ => {
                                self.strash.insert([x, y], m);
                                self.fanouts[target.index() as usize].push(m);
                            }
                        }
                    }
                }
            }
        }
        for &m in &queue {
            self.release_fanins(m);
        }
    }

    fn redirect(&mut self, m: u32, lit: Literal, queue: &mut Vec<u32>) {
        let lit = self.resolve(lit);
        debug_assert_ne!(lit.index(), m);
        let key = self.fanins[m as usize];
        if self.strash.get(&key) == Some(&m) {
            self.strash.remove(&key);
        }
        self.kind[m as usize] = Kind::Replaced;
        self.repl[m as usize] = lit;
        self.refs[lit.index() as usize] += self.refs[m as usize];
        self.refs[m as usize] = 0;
        self.live -= 1;
        queue.push(m);
    }

    /// Drops the references held by `m` and frees any logic left unused.
    fn release_fanins(&mut self, m: u32) {
        let mut stack = vec![m];
        while let Some(x) = stack.pop() {
            for f in self.fanins[x as usize] {
                let t = self.resolve(f).index();
                if !self.is_and(t) {
                    continue;
                }
                self.refs[t as usize] -= 1;
                if self.refs[t as usize] == 0 {
                    let key = self.fanins[t as usize];
                    if self.strash.get(&key) == Some(&t) {
                        self.strash.remove(&key);
                    }
                    self.kind[t as usize] = Kind::Dead;
                    self.live -= 1;
                    stack.push(t);
                }
            }
        }
    }

    fn next_stamp(&mut self) -> u32 {
        self.stamp += 1;
        self.stamp
    }

    pub fn mark_leaves(&mut self, leaves: &[u32]) -> u32 {
        let s = self.next_stamp();
        for &l in leaves {
            self.leaf[l as usize] = s;
        }
        s
    }

    /// Temporarily dereferences the cone of `root` bounded by the leaves
    /// marked with `leaf_stamp`. Returns the MFFC size and the stamp marking
    /// its nodes. Must be undone with [`Network::mffc_reref`].
    pub fn mffc_deref(&mut self, root: u32, leaf_stamp: u32) -> (usize, u32) {
        let s = self.next_stamp();
        let mut count = 0;
        let mut stack = vec![root];
        while let Some(x) = stack.pop() {
            count += 1;
            self.mffc[x as usize] = s;
            for f in self.fanins[x as usize] {
                let t = f.index();
                if !self.is_and(t) || self.leaf[t as usize] == leaf_stamp {
                    continue;
                }
                self.refs[t as usize] -= 1;
                if self.refs[t as usize] == 0 {
                    stack.push(t);
                }
            }
        }
        (count, s)
    }

    pub fn mffc_reref(&mut self, root: u32, leaf_stamp: u32) {
        let mut stack = vec![root];
        while let Some(x) = stack.pop() {
            for f in self.fanins[x as usize] {
                let t = f.index();
                if !self.is_and(t) || self.leaf[t as usize] == leaf_stamp {
                    continue;
                }
                self.refs[t as usize] += 1;
                if self.refs[t as usize] == 1 {
                    stack.push(t);
                }
            }
        }
    }

    pub fn mark_visited(&mut self, nodes: &[u32]) -> u32 {
        let s = self.next_stamp();
        for &n in nodes {
            self.visit[n as usize] = s;
        }
        s
    }

    pub fn visited(&self, n: u32, stamp: u32) -> bool {
        self.visit[n as usize] == stamp
    }

    pub fn set_visited(&mut self, n: u32, stamp: u32) {
        self.visit[n as usize] = stamp;
    }

    /// Fanout list of `n`; may contain stale entries, which callers filter.
    pub fn fanouts(&self, n: u32) -> &[u32] {
        &self.fanouts[n as usize]
    }

    pub fn in_mffc(&self, n: u32, stamp: u32) -> bool {
        self.mffc[n as usize] == stamp
    }

    /// Leaves of a reconvergence-driven cut of `root` with at most
    /// `max_leaves` leaves, sorted by index.
    pub fn reconv_cut(&mut self, root: u32, max_leaves: usize) -> Vec<u32> {
        let s = self.next_stamp();
        self.visit[root as usize] = s;
        let mut leaves = Vec::new();
        for f in self.fanins[root as usize] {
            let t = f.index();
            if self.visit[t as usize] != s {
                self.visit[t as usize] = s;
                leaves.push(t);
            }
        }
        loop {
            let mut best: Option<(i32, usize)> = None;
            for (pos, &l) in leaves.iter().enumerate() {
                if !self.is_and(l) {
                    continue;
                }
                let cost = self.fanins[l as usize].iter().filter(|f| self.visit[f.index() as usize] != s).count() as i32 - 1;
                let better = match best {
                    None => true,
                    Some((bc, bp)) => {
                        let bl = leaves[bp];
                        (cost, std::cmp::Reverse(self.level[l as usize]), std::cmp::Reverse(l))
                            < (bc, std::cmp::Reverse(self.level[bl as usize]), std::cmp::Reverse(bl))
                    }
                };
                if better {
                    best = Some((cost, pos));
                }
            }
            let Some((cost, pos)) = best else { break };
            if leaves.len() as i32 + cost > max_leaves as i32 {
                break;
            }
            let l = leaves.remove(pos);
            for f in self.fanins[l as usize] {
                let t = f.index();
                if self.visit[t as usize] != s {
                    self.visit[t as usize] = s;
                    leaves.push(t);
                }
            }
        }
        leaves.sort_unstable();
        leaves
    }

    /// AND nodes between `root` and the marked leaves in topological order,
    /// `root` last. `None` if the leaves do not cut `root` off from the
    /// inputs or the cone exceeds `limit` nodes.
    pub fn collect_cone(&mut self, root: u32, leaf_stamp: u32, limit: usize) -> Option<Vec<u32>> {
        let s = self.next_stamp();
        let mut order = Vec::new();
        let mut stack = vec![(root, false)];
        while let Some((x, expanded)) = stack.pop() {
            if expanded {
                order.push(x);
                if order.len() > limit {
                    return None;
                }
                continue;
            }
            if self.visit[x as usize] == s {
                continue;
            }
            self.visit[x as usize] = s;
            stack.push((x, true));
            for f in self.fanins[x as usize] {
                let t = f.index();
                if self.leaf[t as usize] == leaf_stamp || self.visit[t as usize] == s {
                    continue;
                }
                if !self.is_and(t) {
                    return None;
                }
                stack.push((t, false));
            }
        }
        Some(order)
    }

    pub fn tt(&self, n: u32) -> Tt8 {
        self.tt[n as usize]
    }

    pub fn set_tt(&mut self, n: u32, t: Tt8) {
        self.tt[n as usize] = t;
    }

    /// Computes truth tables over `leaves` (at most eight) for every node of
    /// `cone`, which must be topologically ordered.
    pub fn simulate_cone(&mut self, leaves: &[u32], cone: &[u32]) {
        debug_assert!(leaves.len() <= 8);
        self.tt[0] = Tt8::ZERO;
        for (i, &l) in leaves.iter().enumerate() {
            self.tt[l as usize] = Tt8::var(i);
        }
        for &n in cone {
            let t = self.and_tt(n);
            self.tt[n as usize] = t;
        }
    }

    pub fn and_tt(&self, n: u32) -> Tt8 {
        let [a, b] = self.fanins[n as usize];
        let ta = self.tt[a.index() as usize];
        let tb = self.tt[b.index() as usize];
        (if a.is_negated() { !ta } else { ta }) & (if b.is_negated() { !tb } else { tb })
    }

    /// Counts the AND nodes that instantiating `s` over `ins` would add,
    /// while the MFFC marked by `mffc_stamp` is dereferenced: reusing a node
    /// of that MFFC counts as adding it. Returns `None` if the structure
    /// would pass through `root` below its output. Also returns the output
    /// literal and its estimated level.
    pub fn count_structure(&self, s: &Structure, ins: &[Literal], out_neg: bool, root: u32, mffc_stamp: u32) -> Option<(usize, Literal, u32)> {
        let mut vals: Vec<Literal> = Vec::with_capacity(1 + ins.len() + s.gates.len());
        vals.push(Literal::FALSE);
        vals.extend_from_slice(&ins[..s.num_inputs]);
        let mut virt: FxHashMap<[Literal; 2], Literal> = FxHashMap::default();
        let mut added = 0;
        let mut vlevel: Vec<u32> = Vec::new();
        let last = s.gates.len().wrapping_sub(1);
        let get = |vals: &[Literal], l: Literal| vals[l.index() as usize].negate_if(l.is_negated());
        for (g, &[a, b]) in s.gates.iter().enumerate() {
            let (x, y) = (get(&vals, a), get(&vals, b));
            let r = match simplify_and(x, y) {
                Simplified::Lit(l) => l,
                Simplified::Pair(x, y) => {
                    let hit = if x.index() >= VIRTUAL || y.index() >= VIRTUAL { None } else { self.strash.get(&[x, y]).copied() };
                    match hit {
                        Some(m) => {
                            if m == root && g != last {
                                return None;
                            }
                            if self.mffc[m as usize] == mffc_stamp {
                                added += 1;
                            }
                            m.into_lit()
                        }
                        None => *virt.entry([x, y]).or_insert_with(|| {
                            vlevel.push(1 + self.lit_level(x, &vlevel).max(self.lit_level(y, &vlevel)));
                            added += 1;
                            Literal::new(VIRTUAL + vlevel.len() as u32, false)
                        }),
                    }
                }
            };
            vals.push(r);
        }
        let out = get(&vals, s.output).negate_if(out_neg);
        Some((added, out, self.lit_level(out, &vlevel)))
    }

    fn lit_level(&self, l: Literal, vlevel: &[u32]) -> u32 {
        match l.index().checked_sub(VIRTUAL + 1) {
            Some(v) => vlevel[v as usize],
            None => self.level[l.index() as usize],
        }
    }

    pub fn build_structure(&mut self, s: &Structure, ins: &[Literal], out_neg: bool) -> Literal {
        let mut vals: Vec<Literal> = Vec::with_capacity(1 + ins.len() + s.gates.len());
        vals.push(Literal::FALSE);
        vals.extend_from_slice(&ins[..s.num_inputs]);
        let get = |vals: &[Literal], l: Literal| vals[l.index() as usize].negate_if(l.is_negated());
        for &[a, b] in &s.gates {
            let r = self.and(get(&vals, a), get(&vals, b));
            vals.push(r);
        }
        get(&vals, s.output).negate_if(out_neg)
    }

    /// Rebuilds a compact graph from the live part of the network.
    pub fn to_aig(&self) -> Aig {
        let mut b = AigBuilder::new(self.num_inputs as usize);
        let mut map = vec![Literal::FALSE; self.kind.len()];
        for i in 0..self.num_inputs {
            map[1 + i as usize] = b.input(i as usize);
        }
        let mut done = vec![false; self.kind.len()];
        for o in &self.outputs {
            let root = self.resolve(*o).index();
            let mut stack = vec![(root, false)];
            while let Some((x, expanded)) = stack.pop() {
                if done[x as usize] {
                    continue;
                }
                if !self.is_and(x) {
                    done[x as usize] = true;
                    continue;
                }
                let [f0, f1] = self.fanins[x as usize];
                if expanded {
                    let m = |l: Literal| map[l.index() as usize].negate_if(l.is_negated());
                    map[x as usize] = b.and(m(f0), m(f1));
                    done[x as usize] = true;
                } else {
                    stack.push((x, true));
                    stack.push((f1.index(), false));
                    stack.push((f0.index(), false));
                }
            }
        }
        for o in &self.outputs {
            let r = self.resolve(*o);
            b.add_output(map[r.index() as usize].negate_if(r.is_negated()));
        }
        b.build()
    }

    /// Verifies reference counts, hashing and fanin liveness.
    #[cfg(test)]
    pub fn check(&self) -> Result<(), String> {
        let mut refs = vec![0u32; self.kind.len()];
        let mut live = 0;
        for n in 0..self.kind.len() as u32 {
            if !self.is_and(n) {
                continue;
            }
            live += 1;
            for f in self.fanins[n as usize] {
                if !matches!(self.kind[f.index() as usize], Kind::And | Kind::Input) {
                    return Err(format!("node {n} has fanin {f:?} of kind {:?}", self.kind[f.index() as usize]));
                }
                refs[f.index() as usize] += 1;
            }
            if self.strash.get(&self.fanins[n as usize]) != Some(&n) {
                return Err(format!("node {n} missing from hash table"));
            }
        }
        for o in &self.outputs {
            refs[self.resolve(*o).index() as usize] += 1;
        }
        for n in 0..self.kind.len() as u32 {
            if self.is_and(n) && refs[n as usize] != self.refs[n as usize] {
                return Err(format!("node {n}: refs {} counted {}", self.refs[n as usize], refs[n as usize]));
            }
        }
        if live != self.live {
            return Err(format!("live {} counted {live}", self.live));
        }
        Ok(())
    }
}

trait IntoLit {
    fn into_lit(self) -> Literal;
}

impl IntoLit for u32 {
    fn into_lit(self) -> Literal {
        Literal::new(self, false)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain() -> Aig {
        // o = (a & b) & (a & c); the second gate is redundant with the first
        // once c is replaced by b.
        let mut b = AigBuilder::new(3);
        let (x, y, z) = (b.input(0), b.input(1), b.input(2));
        let p = b.and(x, y);
        let q = b.and(x, z);
        let o = b.and(p, q);
        b.add_output(o);
        b.build()
    }

    #[test]
    fn round_trip_is_identity() {
        let a = chain();
        let net = Network::new(&a);
        net.check().unwrap();
        assert_eq!(net.to_aig(), a);
    }

    #[test]
    fn replace_cascades_merges() {
        let a = chain();
        let mut net = Network::new(&a);
        // Replace input-level gate q = x & z by p = x & y: o becomes p & p = p.
        let p = a.and_nodes().next().unwrap().0;
        let q = p + 1;
        net.replace(q, p.into_lit());
        net.check().unwrap();
        assert_eq!(net.live_ands(), 1);
        let out = net.to_aig();
        assert_eq!(out.num_ands(), 1);
    }

    #[test]
    fn mffc_counts_and_restores() {
        let a = chain();
        let mut net = Network::new(&a);
        let root = a.outputs()[0].index();
        let s = net.mark_leaves(&[1, 2, 3]);
        let (size, m) = net.mffc_deref(root, s);
        assert_eq!(size, 3);
        assert!(net.in_mffc(root, m));
        net.mffc_reref(root, s);
        net.check().unwrap();
    }

    #[test]
    fn reconv_cut_covers_cone() {
        let a = chain();
        let mut net = Network::new(&a);
        let root = a.outputs()[0].index();
        let leaves = net.reconv_cut(root, 8);
        assert_eq!(leaves, vec![1, 2, 3]);
        let s = net.mark_leaves(&leaves);
        let cone = net.collect_cone(root, s, 100).unwrap();
        assert_eq!(cone.len(), 3);
        assert_eq!(*cone.last().unwrap(), root);
        net.simulate_cone(&leaves, &cone);
        assert_eq!(net.tt(root), Tt8::var(0) & Tt8::var(1) & Tt8::var(2));
    }
}
