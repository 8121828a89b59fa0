//! The One-Shot model: m mutually competing ideas with one adoption per
//! node.
//!
//! Seeds adopt their idea unconditionally at time 0. Edge liveness is
//! sampled once per run as in the Com-IC engine. An idle node handles
//! arriving proposals in its tie-break order and adopts idea `i` with
//! probability `q_i` per proposal, independently per proposal; adoption is
//! absorbing and an adopted node ignores every later proposal. A node never
//! adopts more than one idea, and seed sets must be pairwise disjoint.

use crate::coins::{CoinKind, CoinSource, RngCoins};
use crate::engine::Step;
use crate::error::{Error, Result};
use crate::graph::{DirectedGraph, NodeId, SeedAssignment};
use crate::model::OneShotParams;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum OneShotNodeState {
    Idle,
    Adopted { idea: usize, time: Step },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OneShotOutcome {
    pub nodes: Vec<OneShotNodeState>,
    /// Adopter counts per idea.
    pub adopters: Vec<usize>,
    pub trace: Option<Vec<crate::coins::CoinRecord>>,
}

const IDEA_NONE: usize = usize::MAX;

const LIVE_UNDECIDED: u8 = 0;
const LIVE_YES: u8 = 1;
const LIVE_NO: u8 = 2;

pub(crate) struct OneShotCascade<'g> {
    graph: &'g DirectedGraph,
    adopted_idea: Vec<usize>,
    adopted_time: Vec<Step>,
    edge_live: Vec<u8>,
    cur_frontier: Vec<NodeId>,
    in_cur: Vec<bool>,
    next_frontier: Vec<NodeId>,
    receivers: Vec<NodeId>,
    receiver_seen: Vec<bool>,
}

impl<'g> OneShotCascade<'g> {
    pub fn new(graph: &'g DirectedGraph) -> Self {
        let n = graph.node_count();
        Self {
            graph,
            adopted_idea: vec![IDEA_NONE; n],
            adopted_time: vec![Step::MAX; n],
            edge_live: vec![LIVE_UNDECIDED; graph.edge_count()],
            cur_frontier: Vec::new(),
            in_cur: vec![false; n],
            next_frontier: Vec::new(),
            receivers: Vec::new(),
            receiver_seen: vec![false; n],
        }
    }

    pub fn adopted(&self, idea: usize, node: NodeId) -> bool {
        self.adopted_idea[node] == idea
    }

    fn reset(&mut self) {
        self.adopted_idea.fill(IDEA_NONE);
        self.adopted_time.fill(Step::MAX);
        self.edge_live.fill(LIVE_UNDECIDED);
        self.cur_frontier.clear();
        self.in_cur.fill(false);
        self.next_frontier.clear();
    }

    fn edge_is_live<C: CoinSource>(&mut self, edge: usize, coins: &mut C) -> bool {
        match self.edge_live[edge] {
            LIVE_YES => true,
            LIVE_NO => false,
            _ => {
                let live = coins.flip(self.graph.edge(edge).prob, CoinKind::EdgeLive { edge });
                self.edge_live[edge] = if live { LIVE_YES } else { LIVE_NO };
                live
            }
        }
    }

    pub fn run<C: CoinSource>(
        &mut self,
        seeds: &SeedAssignment,
        params: &OneShotParams,
        coins: &mut C,
    ) {
        self.reset();
        for (idea, set) in seeds.sets().iter().enumerate() {
            for &v in set {
                self.adopted_idea[v] = idea;
                self.adopted_time[v] = 0;
                self.next_frontier.push(v);
            }
        }

        let mut t: Step = 1;
        while !self.next_frontier.is_empty() {
            std::mem::swap(&mut self.cur_frontier, &mut self.next_frontier);
            self.next_frontier.clear();
            self.cur_frontier.sort_unstable();
            self.receivers.clear();
            for idx in 0..self.cur_frontier.len() {
                let u = self.cur_frontier[idx];
                self.in_cur[u] = true;
                for &e in self.graph.out_edges(u) {
                    let v = self.graph.edge(e).dst;
                    if !self.receiver_seen[v] {
                        self.receiver_seen[v] = true;
                        self.receivers.push(v);
                    }
                }
            }
            self.receivers.sort_unstable();

            for &v in &self.receivers {
                self.receiver_seen[v] = false;
            }
            let receivers = std::mem::take(&mut self.receivers);
            for &v in &receivers {
                for ei in 0..self.graph.in_edges(v).len() {
                    if self.adopted_idea[v] != IDEA_NONE {
                        // adopted (possibly earlier this step); every further
                        // proposal is ignored
                        break;
                    }
                    let e = self.graph.in_edges(v)[ei];
                    let u = self.graph.edge(e).src;
                    if !self.in_cur[u] {
                        continue;
                    }
                    let idea = self.adopted_idea[u];
                    if !self.edge_is_live(e, coins) {
                        continue;
                    }
                    if coins.flip(params.q[idea], CoinKind::Adoption { node: v, idea }) {
                        self.adopted_idea[v] = idea;
                        self.adopted_time[v] = t;
                        self.next_frontier.push(v);
                    }
                }
            }
            self.receivers = receivers;

            for idx in 0..self.cur_frontier.len() {
                let u = self.cur_frontier[idx];
                self.in_cur[u] = false;
            }
            t += 1;
        }
        self.cur_frontier.clear();
    }

    pub fn outcome(
        &self,
        idea_count: usize,
        trace: Option<Vec<crate::coins::CoinRecord>>,
    ) -> OneShotOutcome {
        let mut nodes = Vec::with_capacity(self.graph.node_count());
        let mut adopters = vec![0usize; idea_count];
        for v in 0..self.graph.node_count() {
            match self.adopted_idea[v] {
                IDEA_NONE => nodes.push(OneShotNodeState::Idle),
                idea => {
                    adopters[idea] += 1;
                    nodes.push(OneShotNodeState::Adopted { idea, time: self.adopted_time[v] });
                }
            }
        }
        OneShotOutcome { nodes, adopters, trace }
    }
}

pub(crate) fn validate_oneshot_inputs(
    graph: &DirectedGraph,
    seeds: &SeedAssignment,
    params: &OneShotParams,
) -> Result<()> {
    if seeds.idea_count() != params.idea_count() {
        return Err(Error::InvalidSeeds(format!(
            "got {} seed sets for {} ideas",
            seeds.idea_count(),
            params.idea_count()
        )));
    }
    seeds.validate(graph, true)
}

/// Runs one One-Shot cascade. Deterministic in (graph, seeds, params, seed).
pub fn simulate_oneshot(
    graph: &DirectedGraph,
    seeds: &SeedAssignment,
    params: &OneShotParams,
    seed: u64,
) -> Result<OneShotOutcome> {
    simulate_oneshot_impl(graph, seeds, params, seed, false)
}

pub fn simulate_oneshot_traced(
    graph: &DirectedGraph,
    seeds: &SeedAssignment,
    params: &OneShotParams,
    seed: u64,
) -> Result<OneShotOutcome> {
    simulate_oneshot_impl(graph, seeds, params, seed, true)
}

fn simulate_oneshot_impl(
    graph: &DirectedGraph,
    seeds: &SeedAssignment,
    params: &OneShotParams,
    seed: u64,
    record_trace: bool,
) -> Result<OneShotOutcome> {
    validate_oneshot_inputs(graph, seeds, params)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut coins = RngCoins::new(&mut rng, record_trace);
    let mut cascade = OneShotCascade::new(graph);
    cascade.run(seeds, params, &mut coins);
    Ok(cascade.outcome(params.idea_count(), coins.trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::parse_graph;

    #[test]
    fn single_certain_idea_reaches_everything() {
        let g = parse_graph("4\n0 1\n1 2\n2 3\n").unwrap();
        let params = OneShotParams::new(vec![1.0]).unwrap();
        let seeds = SeedAssignment::oneshot(vec![vec![0]]);
        let out = simulate_oneshot(&g, &seeds, &params, 0).unwrap();
        assert_eq!(out.adopters, vec![4]);
        assert_eq!(out.nodes[3], OneShotNodeState::Adopted { idea: 0, time: 3 });
    }

    #[test]
    fn zero_strength_ideas_stay_at_seeds() {
        let g = parse_graph("5\n0 1\n1 2\n3 2\n2 4\n").unwrap();
        let params = OneShotParams::new(vec![0.0, 0.0]).unwrap();
        let seeds = SeedAssignment::oneshot(vec![vec![0], vec![3]]);
        for seed in 0..20 {
            let out = simulate_oneshot(&g, &seeds, &params, seed).unwrap();
            assert_eq!(out.adopters, vec![1, 1]);
        }
    }

    #[test]
    fn at_most_one_idea_per_node() {
        let g = parse_graph("5\n0 2 0.7\n1 2 0.7\n2 3 0.7\n2 4\n").unwrap();
        let params = OneShotParams::new(vec![0.6, 0.8]).unwrap();
        let seeds = SeedAssignment::oneshot(vec![vec![0], vec![1]]);
        for seed in 0..200 {
            let out = simulate_oneshot(&g, &seeds, &params, seed).unwrap();
            let total: usize = out.adopters.iter().sum();
            let adopted_nodes = out
                .nodes
                .iter()
                .filter(|s| matches!(s, OneShotNodeState::Adopted { .. }))
                .count();
            assert_eq!(total, adopted_nodes);
        }
    }

    #[test]
    fn rejects_overlapping_seed_sets_and_arity_mismatch() {
        let g = parse_graph("3\n0 1\n1 2\n").unwrap();
        let params = OneShotParams::new(vec![0.5, 0.5]).unwrap();
        let overlapping = SeedAssignment::oneshot(vec![vec![0], vec![0]]);
        assert!(simulate_oneshot(&g, &overlapping, &params, 0).is_err());
        let wrong_arity = SeedAssignment::oneshot(vec![vec![0]]);
        assert!(simulate_oneshot(&g, &wrong_arity, &params, 0).is_err());
    }

    #[test]
    fn determinism_in_rng_seed() {
        let g = parse_graph("6\n0 2 0.5\n1 2 0.5\n2 3 0.5\n3 4\n2 5 0.5\n").unwrap();
        let params = OneShotParams::new(vec![0.6, 0.7]).unwrap();
        let seeds = SeedAssignment::oneshot(vec![vec![0], vec![1]]);
        for seed in 0..20 {
            let a = simulate_oneshot_traced(&g, &seeds, &params, seed).unwrap();
            let b = simulate_oneshot_traced(&g, &seeds, &params, seed).unwrap();
            assert_eq!(a, b);
        }
    }
}
