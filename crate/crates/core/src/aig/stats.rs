use serde::{Deserialize, Serialize};

use super::Aig;

/// Seven-field structural summary of a graph.
///
/// Field order matches [`CircuitStats::to_vector`]: primary I/O, nodes,
/// edges, levels, latches, fraction of ANDs, fraction of complemented edges.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircuitStats {
    pub primary_io: usize,
    /// AND-node count, the area metric.
    pub nodes: usize,
    pub edges: usize,
    /// Maximum output level, the delay metric.
    pub levels: usize,
    /// Always zero: only combinational graphs are supported.
    pub latches: usize,
    /// AND nodes over all non-constant nodes (inputs and ANDs).
    pub pct_ands: f64,
    /// Complemented AND fanin edges over all AND fanin edges.
    pub pct_nots: f64,
}

impl CircuitStats {
    pub fn of(aig: &Aig) -> Self {
        let nodes = aig.num_ands();
        let edges = 2 * nodes;
        let nots = aig.and_nodes().map(|(_, [a, b])| a.is_negated() as usize + b.is_negated() as usize).sum::<usize>();
        let total = nodes + aig.num_inputs();
        CircuitStats {
            primary_io: aig.num_inputs() + aig.num_outputs(),
            nodes,
            edges,
            levels: aig.depth() as usize,
            latches: 0,
            pct_ands: if total == 0 { 0.0 } else { nodes as f64 / total as f64 },
            pct_nots: if edges == 0 { 0.0 } else { nots as f64 / edges as f64 },
        }
    }

    pub fn area(&self) -> usize {
        self.nodes
    }

    pub fn delay(&self) -> usize {
        self.levels
    }

    pub fn to_vector(&self) -> [f64; 7] {
        [
            self.primary_io as f64,
            self.nodes as f64,
            self.edges as f64,
            self.levels as f64,
            self.latches as f64,
            self.pct_ands,
            self.pct_nots,
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aig::AigBuilder;

    #[test]
    fn empty_graph() {
        let s = Aig::empty(0).stats();
        assert_eq!((s.nodes, s.levels, s.edges), (0, 0, 0));
        assert_eq!(s.pct_ands, 0.0);
        assert_eq!(s.pct_nots, 0.0);
    }

    #[test]
    fn fractions() {
        let mut b = AigBuilder::new(2);
        let (x, y) = (b.input(0), b.input(1));
        let o = b.or(x, y);
        b.add_output(o);
        let s = b.build().stats();
        assert_eq!(s.primary_io, 3);
        assert_eq!(s.nodes, 1);
        assert!((s.pct_ands - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(s.pct_nots, 1.0);
        assert_eq!(s.to_vector()[4], 0.0);
    }
}
