//! Directed graphs with probabilistic edges and a per-node tie-break order
//! over in-edges.
//!
//! The edge-list file format is plain UTF-8 text: the first non-comment line
//! holds the node count, every following non-comment line is
//! `src dst [prob]` (prob defaults to 1.0). Lines starting with `#` are
//! comments. Node ids are dense integers `0..n-1`.

use crate::error::{Error, Result};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::HashSet;
use std::fmt::Write as _;

pub type NodeId = usize;
pub type EdgeId = usize;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub src: NodeId,
    pub dst: NodeId,
    pub prob: f64,
}

/// Immutable directed graph. `in_order` holds, for every node, its in-edges
/// in tie-break order; proposals arriving at the same step are processed in
/// that order.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectedGraph {
    node_count: usize,
    edges: Vec<Edge>,
    out: Vec<Vec<EdgeId>>,
    in_order: Vec<Vec<EdgeId>>,
}

impl DirectedGraph {
    /// Builds a graph from an edge list, validating endpoints, duplicate
    /// edges, and probability ranges. The tie-break order is initialized to
    /// insertion order.
    pub fn new(node_count: usize, edge_list: &[(NodeId, NodeId, f64)]) -> Result<Self> {
        let mut edges = Vec::with_capacity(edge_list.len());
        let mut out = vec![Vec::new(); node_count];
        let mut in_order = vec![Vec::new(); node_count];
        let mut seen = HashSet::new();
        for &(src, dst, prob) in edge_list {
            if src >= node_count {
                return Err(Error::NodeOutOfRange { node: src, node_count });
            }
            if dst >= node_count {
                return Err(Error::NodeOutOfRange { node: dst, node_count });
            }
            if !seen.insert((src, dst)) {
                return Err(Error::InvalidGraph(format!("duplicate edge ({src}, {dst})")));
            }
            if !(0.0..=1.0).contains(&prob) {
                return Err(Error::InvalidGraph(format!(
                    "edge ({src}, {dst}) probability {prob} outside [0, 1]"
                )));
            }
            let id = edges.len();
            edges.push(Edge { src, dst, prob });
            out[src].push(id);
            in_order[dst].push(id);
        }
        Ok(Self { node_count, edges, out, in_order })
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, id: EdgeId) -> Edge {
        self.edges[id]
    }

    /// Out-edges of `node` in insertion order, as `(dst, prob)` pairs.
    pub fn out_neighbors(&self, node: NodeId) -> Result<Vec<(NodeId, f64)>> {
        self.check_node(node)?;
        Ok(self.out[node]
            .iter()
            .map(|&e| (self.edges[e].dst, self.edges[e].prob))
            .collect())
    }

    pub fn out_edges(&self, node: NodeId) -> &[EdgeId] {
        &self.out[node]
    }

    /// In-edges of `node` in tie-break order.
    pub fn in_edges(&self, node: NodeId) -> &[EdgeId] {
        &self.in_order[node]
    }

    pub fn check_node(&self, node: NodeId) -> Result<()> {
        if node >= self.node_count {
            return Err(Error::NodeOutOfRange { node, node_count: self.node_count });
        }
        Ok(())
    }

    /// Returns the same graph with every node's in-edge order replaced by a
    /// uniformly random permutation drawn from `seed`. Deterministic: equal
    /// seeds produce equal orders.
    pub fn fix_tiebreak(&self, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut g = self.clone();
        for order in &mut g.in_order {
            order.shuffle(&mut rng);
        }
        g
    }

    /// Replaces the in-edge order of a single node. `order` must be a
    /// permutation of the node's in-edges.
    pub fn set_in_order(&mut self, node: NodeId, order: Vec<EdgeId>) -> Result<()> {
        self.check_node(node)?;
        let mut sorted = order.clone();
        sorted.sort_unstable();
        let mut current = self.in_order[node].clone();
        current.sort_unstable();
        if sorted != current {
            return Err(Error::InvalidGraph(format!(
                "in-order for node {node} is not a permutation of its in-edges"
            )));
        }
        self.in_order[node] = order;
        Ok(())
    }

    /// Serializes to the edge-list format. `parse_graph(serialize(g))`
    /// reproduces `g` exactly for graphs whose tie-break order is the
    /// insertion order (probabilities round-trip bit-exactly).
    pub fn serialize(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{}", self.node_count);
        for e in &self.edges {
            let _ = writeln!(s, "{} {} {}", e.src, e.dst, e.prob);
        }
        s
    }
}

/// Parses the edge-list format described in the module docs.
pub fn parse_graph(text: &str) -> Result<DirectedGraph> {
    let mut node_count: Option<usize> = None;
    let mut edges: Vec<(NodeId, NodeId, f64)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let lineno = idx + 1;
        if node_count.is_none() {
            let n = line.parse::<usize>().map_err(|_| Error::Parse {
                line: lineno,
                msg: format!("expected node count, got {line:?}"),
            })?;
            node_count = Some(n);
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 2 && fields.len() != 3 {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("expected `src dst [prob]`, got {line:?}"),
            });
        }
        let src = fields[0].parse::<usize>().map_err(|_| Error::Parse {
            line: lineno,
            msg: format!("source id {:?} is not a nonnegative integer", fields[0]),
        })?;
        let dst = fields[1].parse::<usize>().map_err(|_| Error::Parse {
            line: lineno,
            msg: format!("destination id {:?} is not a nonnegative integer", fields[1]),
        })?;
        let prob = match fields.get(2) {
            None => 1.0,
            Some(p) => {
                let v = p.parse::<f64>().map_err(|_| Error::Parse {
                    line: lineno,
                    msg: format!("probability {p:?} is not a number"),
                })?;
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::Parse {
                        line: lineno,
                        msg: format!("probability {v} outside [0, 1]"),
                    });
                }
                v
            }
        };
        edges.push((src, dst, prob));
    }
    let node_count = node_count.ok_or(Error::Parse {
        line: text.lines().count().max(1),
        msg: "missing node count line".into(),
    })?;
    DirectedGraph::new(node_count, &edges)
}

/// Per-idea seed sets: two sets (A, B) for Com-IC, m sets for One-Shot.
/// Members are deduplicated and sorted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeedAssignment {
    sets: Vec<Vec<NodeId>>,
}

impl SeedAssignment {
    pub fn new(sets: Vec<Vec<NodeId>>) -> Self {
        Self::from_sets(sets)
    }

    pub fn comic(seeds_a: Vec<NodeId>, seeds_b: Vec<NodeId>) -> Self {
        Self::from_sets(vec![seeds_a, seeds_b])
    }

    pub fn oneshot(sets: Vec<Vec<NodeId>>) -> Self {
        Self::from_sets(sets)
    }

    fn from_sets(mut sets: Vec<Vec<NodeId>>) -> Self {
        for set in &mut sets {
            set.sort_unstable();
            set.dedup();
        }
        Self { sets }
    }

    pub fn idea_count(&self) -> usize {
        self.sets.len()
    }

    pub fn set(&self, idea: usize) -> &[NodeId] {
        &self.sets[idea]
    }

    pub fn sets(&self) -> &[Vec<NodeId>] {
        &self.sets
    }

    /// Returns a copy with `node` added to the seed set of `idea`.
    pub fn with_seed(&self, idea: usize, node: NodeId) -> Self {
        let mut sets = self.sets.clone();
        sets[idea].push(node);
        Self::from_sets(sets)
    }

    pub fn contains(&self, idea: usize, node: NodeId) -> bool {
        self.sets[idea].binary_search(&node).is_ok()
    }

    /// All members valid node ids; `disjoint` additionally rejects any node
    /// seeded for two ideas (required by One-Shot).
    pub fn validate(&self, graph: &DirectedGraph, disjoint: bool) -> Result<()> {
        let mut owner: Vec<Option<usize>> = vec![None; graph.node_count()];
        for (idea, set) in self.sets.iter().enumerate() {
            for &v in set {
                if v >= graph.node_count() {
                    return Err(Error::InvalidSeeds(format!(
                        "seed {v} out of range (graph has {} nodes)",
                        graph.node_count()
                    )));
                }
                match owner[v] {
                    Some(other) if disjoint => {
                        return Err(Error::InvalidSeeds(format!(
                            "node {v} seeded for ideas {other} and {idea}; seed sets must be disjoint"
                        )));
                    }
                    _ => owner[v] = Some(idea),
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_single_edge_file() {
        let g = parse_graph("2\n0 1 1.0").unwrap();
        assert_eq!(g.node_count(), 2);
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.edge(0), Edge { src: 0, dst: 1, prob: 1.0 });
    }

    #[test]
    fn parses_node_only_file() {
        let g = parse_graph("1\n").unwrap();
        assert_eq!(g.node_count(), 1);
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn default_probability_is_one() {
        let g = parse_graph("3\n0 1\n1 2 0.5").unwrap();
        assert_eq!(g.edge(0).prob, 1.0);
        assert_eq!(g.edge(1).prob, 0.5);
    }

    #[test]
    fn comments_and_blank_lines_are_skipped() {
        let g = parse_graph("# header\n\n3\n# edge block\n0 1 0.25\n2 0\n").unwrap();
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.edge_count(), 2);
    }

    #[test]
    fn rejects_malformed_lines() {
        assert!(matches!(parse_graph("x"), Err(Error::Parse { .. })));
        assert!(matches!(parse_graph("2\n0"), Err(Error::Parse { .. })));
        assert!(matches!(parse_graph("2\n0 1 0.5 9"), Err(Error::Parse { .. })));
        assert!(matches!(parse_graph("2\n0 -1"), Err(Error::Parse { .. })));
        assert!(matches!(parse_graph("2\n0 1 1.5"), Err(Error::Parse { .. })));
        assert!(matches!(parse_graph(""), Err(Error::Parse { .. })));
    }

    #[test]
    fn rejects_out_of_range_and_duplicate_edges() {
        assert!(matches!(parse_graph("2\n0 2"), Err(Error::NodeOutOfRange { .. })));
        assert!(matches!(parse_graph("2\n0 1\n0 1 0.5"), Err(Error::InvalidGraph(_))));
    }

    #[test]
    fn serialize_round_trips() {
        let text = "4\n0 1 0.5\n1 2\n2 3 0.12345678901234567\n";
        let g = parse_graph(text).unwrap();
        let g2 = parse_graph(&g.serialize()).unwrap();
        assert_eq!(g, g2);
    }

    #[test]
    fn out_neighbors_in_insertion_order() {
        let g = parse_graph("4\n0 2 0.5\n0 1\n3 0").unwrap();
        assert_eq!(g.out_neighbors(0).unwrap(), vec![(2, 0.5), (1, 1.0)]);
        assert_eq!(g.out_neighbors(2).unwrap(), vec![]);
        assert!(g.out_neighbors(4).is_err());
    }

    #[test]
    fn tiebreak_is_deterministic_and_preserves_edges() {
        let g = parse_graph("4\n0 3\n1 3\n2 3\n").unwrap();
        let a = g.fix_tiebreak(42);
        let b = g.fix_tiebreak(42);
        assert_eq!(a, b);
        assert_eq!(a.edges(), g.edges());
        let mut order = a.in_edges(3).to_vec();
        order.sort_unstable();
        assert_eq!(order, vec![0, 1, 2]);
    }

    #[test]
    fn singleton_in_order_unchanged() {
        let g = parse_graph("2\n0 1\n").unwrap();
        assert_eq!(g.fix_tiebreak(7).in_edges(1), g.in_edges(1));
    }

    #[test]
    fn tiebreak_permutations_are_uniform() {
        // One node with three in-edges has 6 permutations; sweep seeds and
        // require each frequency within 1/6 +/- 0.05.
        let g = parse_graph("4\n0 3\n1 3\n2 3\n").unwrap();
        let mut counts = std::collections::HashMap::new();
        let sweeps = 6000;
        for seed in 0..sweeps {
            let perm = g.fix_tiebreak(seed).in_edges(3).to_vec();
            *counts.entry(perm).or_insert(0usize) += 1;
        }
        assert_eq!(counts.len(), 6);
        for (_, c) in counts {
            let freq = c as f64 / sweeps as f64;
            assert!((freq - 1.0 / 6.0).abs() <= 0.05, "frequency {freq} outside tolerance");
        }
    }

    #[test]
    fn seed_assignment_validation() {
        let g = parse_graph("3\n0 1\n1 2\n").unwrap();
        let s = SeedAssignment::comic(vec![0, 0], vec![0]);
        assert_eq!(s.set(0), &[0]);
        s.validate(&g, false).unwrap();
        assert!(s.validate(&g, true).is_err());
        let bad = SeedAssignment::comic(vec![3], vec![]);
        assert!(bad.validate(&g, false).is_err());
    }
}
