//! Cross-check oracle for no-reconsideration Com-IC: instead of branching on
//! fresh coins, realize per-node adoption thresholds up front.
//!
//! Each node draws two uniform numbers, one per idea. Only the interval
//! class matters: below both of `q_x0`/`q_xy` (accepts under either
//! condition), between them (accepts only under the larger), or above both
//! (never accepts). Enumerating all class assignments and edge realizations
//! yields fully deterministic worlds whose weighted outcomes must agree with
//! the decision-tree oracle — one primary trial per idea per node makes the
//! two realizations coincide.

use crate::error::{Error, Result};
use crate::exact::{Kahan, SigmaMethod, SigmaResult};
use crate::graph::{DirectedGraph, NodeId, SeedAssignment};
use crate::model::{ComicConfig, Idea};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ThresholdClass {
    /// Accepts under both conditions (threshold below min(q0, q_cond)).
    Low,
    /// Accepts only when the effective probability is the larger of the two.
    Mid,
    /// Never accepts.
    High,
}

#[derive(Debug, Clone, Copy)]
enum Dimension {
    NodeClass { node: NodeId, idea: usize },
    EdgeLive { edge: usize },
}

struct WorldEnum<'g> {
    graph: &'g DirectedGraph,
    seeds: &'g SeedAssignment,
    config: &'g ComicConfig,
    dims: Vec<Dimension>,
    classes: [Vec<ThresholdClass>; 2],
    edge_live: Vec<bool>,
    // class probability boundaries per idea: (lo, hi)
    bounds: [(f64, f64); 2],
    acc: [Vec<Kahan>; 2],
    total: Kahan,
    worlds: u64,
    budget: u64,
    // world-cascade scratch
    adopted: [Vec<bool>; 2],
    rejected: [Vec<bool>; 2],
    proposals: Vec<(NodeId, usize, usize, Idea)>,
}

impl<'g> WorldEnum<'g> {
    fn class_weight(&self, idea: usize, class: ThresholdClass) -> f64 {
        let (lo, hi) = self.bounds[idea];
        match class {
            ThresholdClass::Low => lo,
            ThresholdClass::Mid => hi - lo,
            ThresholdClass::High => 1.0 - hi,
        }
    }

    fn recurse(&mut self, dim: usize, weight: f64) -> Result<()> {
        if dim == self.dims.len() {
            if self.worlds >= self.budget {
                return Err(Error::BudgetExceeded { reached: self.worlds, budget: self.budget });
            }
            self.worlds += 1;
            self.run_world(weight);
            return Ok(());
        }
        match self.dims[dim] {
            Dimension::NodeClass { node, idea } => {
                for class in [ThresholdClass::Low, ThresholdClass::Mid, ThresholdClass::High] {
                    let w = self.class_weight(idea, class);
                    if w <= 0.0 {
                        continue;
                    }
                    self.classes[idea][node] = class;
                    self.recurse(dim + 1, weight * w)?;
                }
            }
            Dimension::EdgeLive { edge } => {
                let p = self.graph.edge(edge).prob;
                if p > 0.0 {
                    self.edge_live[edge] = true;
                    self.recurse(dim + 1, weight * p)?;
                }
                if p < 1.0 {
                    self.edge_live[edge] = false;
                    self.recurse(dim + 1, weight * (1.0 - p))?;
                }
            }
        }
        Ok(())
    }

    /// Whether `node` accepts `idea` given its class and the other idea's
    /// current adoption.
    fn accepts(&self, node: NodeId, idea: Idea, other_adopted: bool) -> bool {
        let i = idea.index();
        let (_, hi) = self.bounds[i];
        match self.classes[i][node] {
            ThresholdClass::Low => true,
            ThresholdClass::Mid => self.config.gap.adoption_prob(idea, other_adopted) >= hi,
            ThresholdClass::High => false,
        }
    }

    /// Deterministic cascade in the realized world, written as an explicit
    /// proposal-event list rather than the engine's in-place walk.
    fn run_world(&mut self, weight: f64) {
        let n = self.graph.node_count();
        for side in 0..2 {
            self.adopted[side].fill(false);
            self.rejected[side].fill(false);
        }
        // frontier: (node, ideas adopted this step, in order)
        let mut frontier: Vec<(NodeId, Vec<Idea>)> = Vec::new();
        let mut seeded: Vec<(NodeId, Vec<Idea>)> = Vec::new();
        for v in 0..n {
            let mut ideas = Vec::new();
            if self.seeds.contains(Idea::A.index(), v) {
                self.adopted[0][v] = true;
                ideas.push(Idea::A);
            }
            if self.seeds.contains(Idea::B.index(), v) {
                self.adopted[1][v] = true;
                ideas.push(Idea::B);
            }
            if !ideas.is_empty() {
                seeded.push((v, ideas));
            }
        }
        frontier.extend(seeded);

        while !frontier.is_empty() {
            // (receiver, in-edge rank, sender adoption order, idea)
            self.proposals.clear();
            for (u, ideas) in &frontier {
                for &e in self.graph.out_edges(*u) {
                    if !self.edge_live[e] {
                        continue;
                    }
                    let v = self.graph.edge(e).dst;
                    let rank = self
                        .graph
                        .in_edges(v)
                        .iter()
                        .position(|&x| x == e)
                        .expect("edge present in its destination's in-order");
                    for (ord, &idea) in ideas.iter().enumerate() {
                        self.proposals.push((v, rank, ord, idea));
                    }
                }
            }
            self.proposals.sort_unstable_by_key(|&(v, rank, ord, _)| (v, rank, ord));

            let mut next: Vec<(NodeId, Vec<Idea>)> = Vec::new();
            let proposals = std::mem::take(&mut self.proposals);
            for &(v, _, _, idea) in &proposals {
                let i = idea.index();
                let o = idea.other().index();
                if self.adopted[i][v] || self.rejected[i][v] {
                    continue;
                }
                if self.accepts(v, idea, self.adopted[o][v]) {
                    self.adopted[i][v] = true;
                    match next.last_mut() {
                        Some((node, ideas)) if *node == v => ideas.push(idea),
                        _ => next.push((v, vec![idea])),
                    }
                } else {
                    self.rejected[i][v] = true;
                }
            }
            self.proposals = proposals;
            frontier = next;
        }

        for side in 0..2 {
            for v in 0..n {
                if self.adopted[side][v] {
                    self.acc[side][v].add(weight);
                }
            }
        }
        self.total.add(weight);
    }
}

/// Exact no-reconsideration Com-IC spread via threshold possible worlds.
/// Agrees with `exact_sigma_comic` to 1e-10 on every shared instance.
pub fn threshold_enum_sigma(
    graph: &DirectedGraph,
    seeds: &SeedAssignment,
    config: &ComicConfig,
    budget: u64,
) -> Result<SigmaResult> {
    crate::engine::validate_comic_inputs(graph, seeds, config)?;
    if config.reconsideration {
        return Err(Error::InvalidParams(
            "threshold enumeration covers only the no-reconsideration model".into(),
        ));
    }
    let n = graph.node_count();
    let gap = &config.gap;
    let bounds = [
        (gap.q_a0.min(gap.q_ab), gap.q_a0.max(gap.q_ab)),
        (gap.q_b0.min(gap.q_ba), gap.q_b0.max(gap.q_ba)),
    ];
    let mut dims = Vec::new();
    for v in 0..n {
        // a node with no in-edges never faces a trial, so its thresholds are
        // never consulted
        if graph.in_edges(v).is_empty() {
            continue;
        }
        dims.push(Dimension::NodeClass { node: v, idea: 0 });
        dims.push(Dimension::NodeClass { node: v, idea: 1 });
    }
    for e in 0..graph.edge_count() {
        let p = graph.edge(e).prob;
        if p > 0.0 && p < 1.0 {
            dims.push(Dimension::EdgeLive { edge: e });
        }
    }
    let mut world = WorldEnum {
        graph,
        seeds,
        config,
        dims,
        classes: [vec![ThresholdClass::Low; n], vec![ThresholdClass::Low; n]],
        edge_live: graph.edges().iter().map(|e| e.prob >= 1.0).collect(),
        bounds,
        acc: [vec![Kahan::default(); n], vec![Kahan::default(); n]],
        total: Kahan::default(),
        worlds: 0,
        budget,
        adopted: [vec![false; n], vec![false; n]],
        rejected: [vec![false; n], vec![false; n]],
        proposals: Vec::new(),
    };
    world.recurse(0, 1.0)?;
    let per_node: Vec<Vec<f64>> = world
        .acc
        .iter()
        .map(|row| row.iter().map(Kahan::value).collect())
        .collect();
    let sigma = per_node
        .iter()
        .map(|row| {
            let mut k = Kahan::default();
            for &p in row {
                k.add(p);
            }
            k.value()
        })
        .collect();
    Ok(SigmaResult {
        sigma,
        per_node,
        method: SigmaMethod::ThresholdEnum,
        leaves: world.worlds,
        total_weight: world.total.value(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{exact_sigma_comic, DEFAULT_BUDGET};
    use crate::graph::parse_graph;
    use crate::model::GapParams;

    #[test]
    fn empty_seed_sets_give_zero_spread() {
        let g = parse_graph("3\n0 1 0.5\n1 2 0.5\n").unwrap();
        let config =
            ComicConfig::new(GapParams::competing(0.5, 0.5, 0.25, 0.25).unwrap(), false).unwrap();
        let seeds = SeedAssignment::comic(vec![], vec![]);
        let r = threshold_enum_sigma(&g, &seeds, &config, DEFAULT_BUDGET).unwrap();
        assert_eq!(r.sigma, vec![0.0, 0.0]);
    }

    #[test]
    fn rejects_reconsideration() {
        let g = parse_graph("2\n0 1\n").unwrap();
        let config =
            ComicConfig::new(GapParams::complementary(0.2, 0.3, 0.6, 0.7).unwrap(), true).unwrap();
        let seeds = SeedAssignment::comic(vec![0], vec![]);
        assert!(threshold_enum_sigma(&g, &seeds, &config, DEFAULT_BUDGET).is_err());
    }

    #[test]
    fn agrees_with_decision_tree_on_small_instance() {
        let g = parse_graph("4\n0 1 0.5\n1 2\n0 2 0.5\n2 3 0.5\n1 3\n").unwrap();
        for gap in [
            GapParams::competing(0.6, 0.5, 0.3, 0.2).unwrap(),
            GapParams::complementary(0.3, 0.4, 0.7, 0.9).unwrap(),
        ] {
            let config = ComicConfig::new(gap, false).unwrap();
            let seeds = SeedAssignment::comic(vec![0], vec![1]);
            let tree = exact_sigma_comic(&g, &seeds, &config, DEFAULT_BUDGET).unwrap();
            let thr = threshold_enum_sigma(&g, &seeds, &config, DEFAULT_BUDGET).unwrap();
            for idea in 0..2 {
                for v in 0..4 {
                    assert!(
                        (tree.per_node[idea][v] - thr.per_node[idea][v]).abs() < 1e-10,
                        "idea {idea} node {v}: {} vs {}",
                        tree.per_node[idea][v],
                        thr.per_node[idea][v]
                    );
                }
            }
            assert!((thr.total_weight - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn degenerate_classes_still_agree() {
        // q_a0 == q_ab collapses the A classes to two.
        let g = parse_graph("4\n0 1 0.5\n1 2 0.5\n0 3\n3 2\n").unwrap();
        let gap = GapParams::complementary(0.4, 0.3, 0.4, 0.8).unwrap();
        let config = ComicConfig::new(gap, false).unwrap();
        let seeds = SeedAssignment::comic(vec![0], vec![3]);
        let tree = exact_sigma_comic(&g, &seeds, &config, DEFAULT_BUDGET).unwrap();
        let thr = threshold_enum_sigma(&g, &seeds, &config, DEFAULT_BUDGET).unwrap();
        for idea in 0..2 {
            for v in 0..4 {
                assert!((tree.per_node[idea][v] - thr.per_node[idea][v]).abs() < 1e-10);
            }
        }
    }
}
