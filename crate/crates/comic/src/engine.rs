//! The Com-IC state machine: discrete-time two-idea propagation with GAP
//! parameters and optional reconsideration through the suspended state.
//!
//! Semantics, in processing order:
//!   * Time 0: every seed adopts its idea unconditionally; a node seeded for
//!     both adopts A first, then B.
//!   * Each edge's liveness is sampled at most once per run, lazily at first
//!     use, and shared by both ideas.
//!   * At step t, nodes that adopted an idea at t-1 propose it along live
//!     out-edges; a node that adopted both at one step proposes them in
//!     adoption order. A receiver handles same-step proposals following its
//!     in-edge tie-break order.
//!   * An A-proposal at an A-idle node succeeds with `q_ab` if the node is
//!     currently B-adopted, else `q_a0`. On failure the node becomes
//!     A-rejected, or A-suspended when reconsideration is on. A suspended
//!     idea is re-tried exactly once, with probability rho, at the moment the
//!     other idea is adopted.
//!   * Non-idle nodes ignore further proposals of that idea.

use crate::coins::{CoinKind, CoinSource, RngCoins};
use crate::error::{Error, Result};
use crate::graph::{DirectedGraph, NodeId, SeedAssignment};
use crate::model::{ComicConfig, Idea, Mode};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

pub type Step = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum IdeaState {
    Idle,
    Adopted,
    Rejected,
    Suspended,
}

/// Final per-node state for one realized run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComicNodeState {
    pub a_state: IdeaState,
    pub b_state: IdeaState,
    pub a_time: Option<Step>,
    pub b_time: Option<Step>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComicOutcome {
    pub nodes: Vec<ComicNodeState>,
    pub adopters_a: usize,
    pub adopters_b: usize,
    pub trace: Option<Vec<crate::coins::CoinRecord>>,
}

const TIME_UNSET: Step = Step::MAX;

// Adoption-order codes for one step: which ideas a node adopted and in what
// order.
const CODE_NONE: u8 = 0;
const CODE_A: u8 = 1;
const CODE_B: u8 = 2;
const CODE_AB: u8 = 3;
const CODE_BA: u8 = 4;

const LIVE_UNDECIDED: u8 = 0;
const LIVE_YES: u8 = 1;
const LIVE_NO: u8 = 2;

/// Reusable cascade workspace. `run` is a pure function of
/// (graph, seeds, config, coin outcomes); the workspace only avoids
/// reallocation across runs.
pub(crate) struct ComicCascade<'g> {
    graph: &'g DirectedGraph,
    states: [Vec<IdeaState>; 2],
    times: [Vec<Step>; 2],
    edge_live: Vec<u8>,
    cur_nodes: Vec<NodeId>,
    cur_code: Vec<u8>,
    next_nodes: Vec<NodeId>,
    next_code: Vec<u8>,
    receivers: Vec<NodeId>,
    receiver_seen: Vec<bool>,
}

impl<'g> ComicCascade<'g> {
    pub fn new(graph: &'g DirectedGraph) -> Self {
        let n = graph.node_count();
        Self {
            graph,
            states: [vec![IdeaState::Idle; n], vec![IdeaState::Idle; n]],
            times: [vec![TIME_UNSET; n], vec![TIME_UNSET; n]],
            edge_live: vec![LIVE_UNDECIDED; graph.edge_count()],
            cur_nodes: Vec::new(),
            cur_code: vec![CODE_NONE; n],
            next_nodes: Vec::new(),
            next_code: vec![CODE_NONE; n],
            receivers: Vec::new(),
            receiver_seen: vec![false; n],
        }
    }

    pub fn is_adopted(&self, idea: usize, node: NodeId) -> bool {
        self.states[idea][node] == IdeaState::Adopted
    }

    pub fn time(&self, idea: usize, node: NodeId) -> Option<Step> {
        match self.times[idea][node] {
            TIME_UNSET => None,
            t => Some(t),
        }
    }

    fn reset(&mut self) {
        for s in &mut self.states {
            s.fill(IdeaState::Idle);
        }
        for t in &mut self.times {
            t.fill(TIME_UNSET);
        }
        self.edge_live.fill(LIVE_UNDECIDED);
        self.cur_nodes.clear();
        self.cur_code.fill(CODE_NONE);
        self.next_nodes.clear();
        self.next_code.fill(CODE_NONE);
    }

    fn adopt(&mut self, node: NodeId, idea: Idea, t: Step) {
        let i = idea.index();
        self.states[i][node] = IdeaState::Adopted;
        self.times[i][node] = t;
        let code = &mut self.next_code[node];
        *code = match (*code, idea) {
            (CODE_NONE, Idea::A) => CODE_A,
            (CODE_NONE, Idea::B) => CODE_B,
            (CODE_A, Idea::B) => CODE_AB,
            (CODE_B, Idea::A) => CODE_BA,
            (c, _) => c,
        };
        if matches!(*code, CODE_A | CODE_B) {
            self.next_nodes.push(node);
        }
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

    fn deliver<C: CoinSource>(
        &mut self,
        node: NodeId,
        idea: Idea,
        t: Step,
        config: &ComicConfig,
        coins: &mut C,
    ) {
        let i = idea.index();
        let o = idea.other().index();
        if self.states[i][node] != IdeaState::Idle {
            return;
        }
        let other_adopted = self.states[o][node] == IdeaState::Adopted;
        let q = config.gap.adoption_prob(idea, other_adopted);
        if coins.flip(q, CoinKind::Adoption { node, idea: i }) {
            self.adopt(node, idea, t);
            if config.reconsideration && self.states[o][node] == IdeaState::Suspended {
                let rho = config.rho(idea.other());
                if coins.flip(rho, CoinKind::Reconsideration { node, idea: o }) {
                    self.adopt(node, idea.other(), t);
                } else {
                    self.states[o][node] = IdeaState::Rejected;
                }
            }
        } else {
            self.states[i][node] = if config.reconsideration {
                IdeaState::Suspended
            } else {
                IdeaState::Rejected
            };
        }
    }

    pub fn run<C: CoinSource>(
        &mut self,
        seeds: &SeedAssignment,
        config: &ComicConfig,
        coins: &mut C,
    ) {
        self.reset();
        for &v in seeds.set(Idea::A.index()) {
            self.adopt(v, Idea::A, 0);
        }
        for &v in seeds.set(Idea::B.index()) {
            self.adopt(v, Idea::B, 0);
        }
        std::mem::swap(&mut self.cur_nodes, &mut self.next_nodes);
        std::mem::swap(&mut self.cur_code, &mut self.next_code);

        let mut t: Step = 1;
        while !self.cur_nodes.is_empty() {
            self.cur_nodes.sort_unstable();
            self.receivers.clear();
            for idx in 0..self.cur_nodes.len() {
                let u = self.cur_nodes[idx];
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
                    let e = self.graph.in_edges(v)[ei];
                    let u = self.graph.edge(e).src;
                    let code = self.cur_code[u];
                    if code == CODE_NONE {
                        continue;
                    }
                    let ideas: [Option<Idea>; 2] = match code {
                        CODE_A => [Some(Idea::A), None],
                        CODE_B => [Some(Idea::B), None],
                        CODE_AB => [Some(Idea::A), Some(Idea::B)],
                        CODE_BA => [Some(Idea::B), Some(Idea::A)],
                        _ => [None, None],
                    };
                    for idea in ideas.into_iter().flatten() {
                        // Proposals a non-idle receiver would ignore are
                        // skipped before the liveness coin so the exact
                        // oracle never branches on an unobservable edge.
                        if self.states[idea.index()][v] != IdeaState::Idle {
                            continue;
                        }
                        if !self.edge_is_live(e, coins) {
                            break;
                        }
                        self.deliver(v, idea, t, config, coins);
                    }
                }
            }
            self.receivers = receivers;

            for idx in 0..self.cur_nodes.len() {
                let u = self.cur_nodes[idx];
                self.cur_code[u] = CODE_NONE;
            }
            self.cur_nodes.clear();
            std::mem::swap(&mut self.cur_nodes, &mut self.next_nodes);
            std::mem::swap(&mut self.cur_code, &mut self.next_code);
            t += 1;
        }
    }

    pub fn outcome(&self, trace: Option<Vec<crate::coins::CoinRecord>>) -> ComicOutcome {
        let n = self.graph.node_count();
        let mut nodes = Vec::with_capacity(n);
        let mut adopters_a = 0;
        let mut adopters_b = 0;
        for v in 0..n {
            let a_state = self.states[0][v];
            let b_state = self.states[1][v];
            if a_state == IdeaState::Adopted {
                adopters_a += 1;
            }
            if b_state == IdeaState::Adopted {
                adopters_b += 1;
            }
            nodes.push(ComicNodeState {
                a_state,
                b_state,
                a_time: self.time(0, v),
                b_time: self.time(1, v),
            });
        }
        ComicOutcome { nodes, adopters_a, adopters_b, trace }
    }
}

pub(crate) fn validate_comic_inputs(
    graph: &DirectedGraph,
    seeds: &SeedAssignment,
    config: &ComicConfig,
) -> Result<()> {
    if seeds.idea_count() != 2 {
        return Err(Error::InvalidSeeds(format!(
            "Com-IC expects 2 seed sets, got {}",
            seeds.idea_count()
        )));
    }
    seeds.validate(graph, false)?;
    if config.reconsideration && (config.gap.mode != Mode::Complementary || config.rho.is_none()) {
        return Err(Error::InvalidParams(
            "reconsideration requires complementary mode with derived rho".into(),
        ));
    }
    Ok(())
}

/// Runs one Com-IC cascade. Deterministic in (graph, seeds, config, seed).
pub fn simulate_comic(
    graph: &DirectedGraph,
    seeds: &SeedAssignment,
    config: &ComicConfig,
    seed: u64,
) -> Result<ComicOutcome> {
    simulate_comic_impl(graph, seeds, config, seed, false)
}

/// Like `simulate_comic`, recording the ordered list of stochastic choices.
pub fn simulate_comic_traced(
    graph: &DirectedGraph,
    seeds: &SeedAssignment,
    config: &ComicConfig,
    seed: u64,
) -> Result<ComicOutcome> {
    simulate_comic_impl(graph, seeds, config, seed, true)
}

fn simulate_comic_impl(
    graph: &DirectedGraph,
    seeds: &SeedAssignment,
    config: &ComicConfig,
    seed: u64,
    record_trace: bool,
) -> Result<ComicOutcome> {
    validate_comic_inputs(graph, seeds, config)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut coins = RngCoins::new(&mut rng, record_trace);
    let mut cascade = ComicCascade::new(graph);
    cascade.run(seeds, config, &mut coins);
    Ok(cascade.outcome(coins.trace))
}
