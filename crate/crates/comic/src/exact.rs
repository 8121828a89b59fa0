//! Exact adoption probabilities for small instances by probability-weighted
//! depth-first enumeration of every stochastic decision a cascade makes.

use crate::coins::ReplayCoins;
use crate::engine::ComicCascade;
use crate::error::{Error, Result};
use crate::graph::{DirectedGraph, NodeId, SeedAssignment};
use crate::model::{ComicConfig, OneShotParams};
use crate::oneshot::OneShotCascade;
use serde::Serialize;

/// Default ceiling on decision-tree leaves / possible worlds.
pub const DEFAULT_BUDGET: u64 = 10_000_000;

/// Compensated (Kahan) summation; leaf counts reach ~10^6, where naive
/// accumulation is visible at the 1e-10 agreement tolerance.
#[derive(Debug, Clone, Copy, Default)]
pub struct Kahan {
    sum: f64,
    carry: f64,
}

impl Kahan {
    pub fn add(&mut self, x: f64) {
        let y = x - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SigmaMethod {
    DecisionTree,
    ThresholdEnum,
    MonteCarlo,
}

/// Exact or estimated spread. `per_node[idea][v]` is the probability that
/// `v` adopts the idea; `sigma[idea]` is its sum over nodes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SigmaResult {
    pub sigma: Vec<f64>,
    pub per_node: Vec<Vec<f64>>,
    pub method: SigmaMethod,
    /// Leaves of the decision tree or worlds enumerated.
    pub leaves: u64,
    /// Sum of leaf weights; 1 up to floating-point error for exact methods.
    pub total_weight: f64,
}

impl SigmaResult {
    pub fn node_probability(&self, idea: usize, node: NodeId) -> f64 {
        self.per_node[idea][node]
    }
}

/// Depth-first enumeration driver. `run_and_mark` must run one cascade with
/// the supplied coins and report every (idea, node) adoption of the leaf via
/// the callback; it must be a deterministic function of the coin outcomes.
fn enumerate_sigma<F>(
    node_count: usize,
    idea_count: usize,
    budget: u64,
    method: SigmaMethod,
    mut run_and_mark: F,
) -> Result<SigmaResult>
where
    F: FnMut(&mut ReplayCoins, &mut dyn FnMut(usize, usize)),
{
    let mut coins = ReplayCoins::new();
    let mut acc: Vec<Vec<Kahan>> = vec![vec![Kahan::default(); node_count]; idea_count];
    let mut total = Kahan::default();
    let mut marks: Vec<(usize, usize)> = Vec::new();
    let mut leaves: u64 = 0;
    loop {
        if leaves >= budget {
            return Err(Error::BudgetExceeded { reached: leaves, budget });
        }
        coins.rewind();
        marks.clear();
        run_and_mark(&mut coins, &mut |idea, node| marks.push((idea, node)));
        let w = coins.leaf_weight();
        leaves += 1;
        total.add(w);
        for &(idea, node) in &marks {
            acc[idea][node].add(w);
        }
        if !coins.advance() {
            break;
        }
    }
    let per_node: Vec<Vec<f64>> =
        acc.iter().map(|row| row.iter().map(Kahan::value).collect()).collect();
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
    Ok(SigmaResult { sigma, per_node, method, leaves, total_weight: total.value() })
}

/// Exact Com-IC spread by branching on every edge-liveness, adoption, and
/// reconsideration coin. Errors once the leaf count passes `budget`.
pub fn exact_sigma_comic(
    graph: &DirectedGraph,
    seeds: &SeedAssignment,
    config: &ComicConfig,
    budget: u64,
) -> Result<SigmaResult> {
    crate::engine::validate_comic_inputs(graph, seeds, config)?;
    let n = graph.node_count();
    let mut cascade = ComicCascade::new(graph);
    enumerate_sigma(n, 2, budget, SigmaMethod::DecisionTree, |coins, mark| {
        cascade.run(seeds, config, coins);
        for idea in 0..2 {
            for v in 0..n {
                if cascade.is_adopted(idea, v) {
                    mark(idea, v);
                }
            }
        }
    })
}

/// Exact One-Shot spread; same branching scheme with One-Shot trials.
pub fn exact_sigma_oneshot(
    graph: &DirectedGraph,
    seeds: &SeedAssignment,
    params: &OneShotParams,
    budget: u64,
) -> Result<SigmaResult> {
    crate::oneshot::validate_oneshot_inputs(graph, seeds, params)?;
    let n = graph.node_count();
    let m = params.idea_count();
    let mut cascade = OneShotCascade::new(graph);
    enumerate_sigma(n, m, budget, SigmaMethod::DecisionTree, |coins, mark| {
        cascade.run(seeds, params, coins);
        for idea in 0..m {
            for v in 0..n {
                if cascade.adopted(idea, v) {
                    mark(idea, v);
                }
            }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::parse_graph;
    use crate::model::GapParams;

    #[test]
    fn deterministic_instance_has_single_leaf() {
        let g = parse_graph("4\n0 1\n1 2\n0 3\n").unwrap();
        let config =
            ComicConfig::new(GapParams::competing(1.0, 1.0, 1.0, 1.0).unwrap(), false).unwrap();
        let seeds = SeedAssignment::comic(vec![0], vec![]);
        let r = exact_sigma_comic(&g, &seeds, &config, 10).unwrap();
        assert_eq!(r.leaves, 1);
        assert_eq!(r.per_node[0], vec![1.0, 1.0, 1.0, 1.0]);
        assert_eq!(r.sigma[0], 4.0);
        assert_eq!(r.sigma[1], 0.0);
    }

    #[test]
    fn two_coin_path_is_exact() {
        // 0 -> 1 with edge prob 0.5 and adoption prob 0.5.
        let g = parse_graph("2\n0 1 0.5\n").unwrap();
        let config =
            ComicConfig::new(GapParams::competing(0.5, 0.5, 0.25, 0.25).unwrap(), false).unwrap();
        let seeds = SeedAssignment::comic(vec![0], vec![]);
        let r = exact_sigma_comic(&g, &seeds, &config, 100).unwrap();
        assert!((r.per_node[0][1] - 0.25).abs() < 1e-15);
        assert!((r.sigma[0] - 1.25).abs() < 1e-15);
        assert!((r.total_weight - 1.0).abs() < 1e-12);
    }

    #[test]
    fn budget_exceeded_reports_branch_count() {
        let g = parse_graph("5\n0 1 0.5\n1 2 0.5\n2 3 0.5\n3 4 0.5\n").unwrap();
        let config =
            ComicConfig::new(GapParams::competing(0.5, 0.5, 0.25, 0.25).unwrap(), false).unwrap();
        let seeds = SeedAssignment::comic(vec![0], vec![]);
        match exact_sigma_comic(&g, &seeds, &config, 3) {
            Err(Error::BudgetExceeded { reached, budget }) => {
                assert_eq!(reached, 3);
                assert_eq!(budget, 3);
            }
            other => panic!("expected budget error, got {other:?}"),
        }
    }

    #[test]
    fn oneshot_certain_ideas_cover_their_components() {
        let g = parse_graph("5\n0 1\n1 2\n3 4\n").unwrap();
        let params = OneShotParams::new(vec![1.0, 1.0]).unwrap();
        let seeds = SeedAssignment::oneshot(vec![vec![0], vec![3]]);
        let r = exact_sigma_oneshot(&g, &seeds, &params, 10).unwrap();
        assert_eq!(r.per_node[0], vec![1.0, 1.0, 1.0, 0.0, 0.0]);
        assert_eq!(r.per_node[1], vec![0.0, 0.0, 0.0, 1.0, 1.0]);
    }

    #[test]
    fn oneshot_zero_strength_spread_equals_seed_count() {
        let g = parse_graph("4\n0 1\n1 2\n2 3\n").unwrap();
        let params = OneShotParams::new(vec![0.0, 0.6]).unwrap();
        let seeds = SeedAssignment::oneshot(vec![vec![0], vec![2]]);
        let r = exact_sigma_oneshot(&g, &seeds, &params, 100).unwrap();
        assert_eq!(r.sigma[0], 1.0);
        assert!(r.sigma[1] >= 1.0);
    }

    #[test]
    fn sigma_bounded_below_by_seed_count() {
        let g = parse_graph("5\n0 1 0.5\n1 2 0.5\n0 3 0.5\n3 4 0.5\n").unwrap();
        let config =
            ComicConfig::new(GapParams::complementary(0.3, 0.4, 0.7, 0.8).unwrap(), true).unwrap();
        let seeds = SeedAssignment::comic(vec![0, 3], vec![1]);
        let r = exact_sigma_comic(&g, &seeds, &config, DEFAULT_BUDGET).unwrap();
        assert!(r.sigma[0] >= 2.0);
        assert!(r.sigma[1] >= 1.0);
        assert!((r.total_weight - 1.0).abs() < 1e-12);
    }
}
