//! Monte Carlo spread estimation and greedy seed selection.
//!
//! Every run draws its RNG from a counter-keyed stream: the generator is
//! seeded with the base seed and the run index selects the stream, so runs
//! are independent and reproducible regardless of execution order.

use crate::engine::ComicCascade;
use crate::error::{Error, Result};
use crate::exact::{exact_sigma_comic, exact_sigma_oneshot};
use crate::graph::{DirectedGraph, NodeId, SeedAssignment};
use crate::model::Model;
use crate::oneshot::OneShotCascade;
use crate::submod::{predict_submodular, ParamSet, Setting};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// Sample mean with standard error. `degenerate` flags a single-run sample,
/// whose stderr of 0 is not meaningful.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub runs: u64,
    pub base_seed: u64,
    pub degenerate: bool,
}

/// Streaming mean/variance accumulator (Welford); merging two accumulators
/// is exact up to rounding, so runs may be batched in any grouping.
#[derive(Debug, Clone, Copy, Default)]
pub struct MeanVar {
    n: u64,
    mean: f64,
    m2: f64,
}

impl MeanVar {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn merge(&mut self, other: &MeanVar) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        self.mean += d * other.n as f64 / n as f64;
        self.m2 += other.m2 + d * d * (self.n as f64 * other.n as f64) / n as f64;
        self.n = n;
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Sample standard error, 0 for fewer than two observations.
    pub fn stderr(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        (self.m2 / (self.n - 1) as f64 / self.n as f64).sqrt()
    }

    pub fn estimate(&self, base_seed: u64) -> Estimate {
        Estimate {
            mean: self.mean(),
            stderr: self.stderr(),
            runs: self.n,
            base_seed,
            degenerate: self.n < 2,
        }
    }
}

fn run_rng(base_seed: u64, run: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(base_seed);
    rng.set_stream(run);
    rng
}

fn validate_model(graph: &DirectedGraph, seeds: &SeedAssignment, model: &Model) -> Result<()> {
    match model {
        Model::Comic(config) => crate::engine::validate_comic_inputs(graph, seeds, config),
        Model::OneShot(params) => crate::oneshot::validate_oneshot_inputs(graph, seeds, params),
    }
}

/// Per-run adopter counts for every idea, as f64 observations.
fn run_counts(
    graph: &DirectedGraph,
    seeds: &SeedAssignment,
    model: &Model,
    base_seed: u64,
    run: u64,
    counts: &mut Vec<f64>,
) {
    let mut rng = run_rng(base_seed, run);
    let mut coins = crate::coins::RngCoins::new(&mut rng, false);
    counts.clear();
    match model {
        Model::Comic(config) => {
            let mut cascade = ComicCascade::new(graph);
            cascade.run(seeds, config, &mut coins);
            for idea in 0..2 {
                let c = (0..graph.node_count()).filter(|&v| cascade.is_adopted(idea, v)).count();
                counts.push(c as f64);
            }
        }
        Model::OneShot(params) => {
            let mut cascade = OneShotCascade::new(graph);
            cascade.run(seeds, params, &mut coins);
            for idea in 0..params.idea_count() {
                let c = (0..graph.node_count()).filter(|&v| cascade.adopted(idea, v)).count();
                counts.push(c as f64);
            }
        }
    }
}

/// Estimates the spread of every idea from `runs` independent simulations.
pub fn estimate_sigma(
    graph: &DirectedGraph,
    seeds: &SeedAssignment,
    model: &Model,
    runs: u64,
    base_seed: u64,
) -> Result<Vec<Estimate>> {
    if runs == 0 {
        return Err(Error::InvalidParams("need at least one run".into()));
    }
    validate_model(graph, seeds, model)?;
    let mut accs = vec![MeanVar::default(); model.idea_count()];
    let mut counts = Vec::new();
    for run in 0..runs {
        run_counts(graph, seeds, model, base_seed, run, &mut counts);
        for (acc, &c) in accs.iter_mut().zip(&counts) {
            acc.push(c);
        }
    }
    Ok(accs.iter().map(|a| a.estimate(base_seed)).collect())
}

/// Estimates the probability that `node` adopts `idea` (a 0/1 observation
/// per run, so the plain sample-variance formula applies unchanged).
pub fn estimate_node_adoption(
    graph: &DirectedGraph,
    seeds: &SeedAssignment,
    model: &Model,
    idea: usize,
    node: NodeId,
    runs: u64,
    base_seed: u64,
) -> Result<Estimate> {
    if runs == 0 {
        return Err(Error::InvalidParams("need at least one run".into()));
    }
    if idea >= model.idea_count() {
        return Err(Error::InvalidParams(format!("idea {idea} out of range")));
    }
    graph.check_node(node)?;
    validate_model(graph, seeds, model)?;
    let mut acc = MeanVar::default();
    match model {
        Model::Comic(config) => {
            let mut cascade = ComicCascade::new(graph);
            for run in 0..runs {
                let mut rng = run_rng(base_seed, run);
                let mut coins = crate::coins::RngCoins::new(&mut rng, false);
                cascade.run(seeds, config, &mut coins);
                acc.push(if cascade.is_adopted(idea, node) { 1.0 } else { 0.0 });
            }
        }
        Model::OneShot(params) => {
            let mut cascade = OneShotCascade::new(graph);
            for run in 0..runs {
                let mut rng = run_rng(base_seed, run);
                let mut coins = crate::coins::RngCoins::new(&mut rng, false);
                cascade.run(seeds, params, &mut coins);
                acc.push(if cascade.adopted(idea, node) { 1.0 } else { 0.0 });
            }
        }
    }
    Ok(acc.estimate(base_seed))
}

/// How greedy evaluates a candidate seed set's spread.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Evaluator {
    MonteCarlo { runs: u64 },
    Exact { budget: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GreedyStep {
    pub node: NodeId,
    pub gain: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GreedySelection {
    pub selected: Vec<NodeId>,
    pub steps: Vec<GreedyStep>,
    /// Present when the configuration is provably not submodular; the greedy
    /// approximation guarantee does not apply there.
    pub warning: Option<String>,
}

fn mix_seed(base: u64, round: u64, salt: u64) -> u64 {
    // splitmix64 over the packed inputs
    let mut z = base
        .wrapping_add(round.wrapping_mul(0x9e37_79b9_7f4a_7c15))
        .wrapping_add(salt.wrapping_mul(0xbf58_476d_1ce4_e5b9));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn sigma_of(
    graph: &DirectedGraph,
    seeds: &SeedAssignment,
    model: &Model,
    idea: usize,
    evaluator: Evaluator,
    eval_seed: u64,
) -> Result<(f64, f64)> {
    match evaluator {
        Evaluator::MonteCarlo { runs } => {
            let est = estimate_sigma(graph, seeds, model, runs, eval_seed)?;
            Ok((est[idea].mean, est[idea].stderr))
        }
        Evaluator::Exact { budget } => {
            let r = match model {
                Model::Comic(config) => exact_sigma_comic(graph, seeds, config, budget)?,
                Model::OneShot(params) => exact_sigma_oneshot(graph, seeds, params, budget)?,
            };
            Ok((r.sigma[idea], 0.0))
        }
    }
}

fn submodularity_warning(model: &Model, idea: usize) -> Option<String> {
    let (setting, params) = match model {
        Model::Comic(config) => {
            let setting = match (config.gap.mode, config.reconsideration) {
                (crate::model::Mode::Competing, _) => Setting::CompetingSelf,
                (crate::model::Mode::Complementary, false) => Setting::ComplementarySelfNoRecon,
                (crate::model::Mode::Complementary, true) => Setting::ComplementarySelfRecon,
            };
            (setting, ParamSet::Gap(config.gap))
        }
        Model::OneShot(params) => {
            (Setting::OneShot, ParamSet::OneShot { q: params.q.clone(), idea })
        }
    };
    let prediction = predict_submodular(setting, &params).ok()?;
    if prediction.submodular {
        None
    } else {
        Some(format!(
            "spread is not submodular in this regime (no sufficient condition holds: {}); \
             the greedy approximation guarantee does not apply",
            prediction.condition_summary()
        ))
    }
}

/// Greedy seed selection for `idea`, holding every other idea's seeds (and
/// any existing own seeds) in `base_seeds` fixed. With `lazy`, stale
/// marginals are kept in a max-heap and only the top candidate is
/// re-evaluated until it stays on top.
#[allow(clippy::too_many_arguments)]
pub fn greedy_select(
    graph: &DirectedGraph,
    model: &Model,
    idea: usize,
    base_seeds: &SeedAssignment,
    k: usize,
    evaluator: Evaluator,
    base_seed: u64,
    lazy: bool,
) -> Result<GreedySelection> {
    if idea >= model.idea_count() {
        return Err(Error::InvalidParams(format!("idea {idea} out of range")));
    }
    validate_model(graph, base_seeds, model)?;
    let excluded: Vec<bool> = (0..graph.node_count())
        .map(|v| match model {
            // One-Shot seed sets must stay disjoint across ideas
            Model::OneShot(_) => (0..base_seeds.idea_count()).any(|i| base_seeds.contains(i, v)),
            Model::Comic(_) => base_seeds.contains(idea, v),
        })
        .collect();
    let candidates: Vec<NodeId> = (0..graph.node_count()).filter(|&v| !excluded[v]).collect();
    if k > candidates.len() {
        return Err(Error::InvalidParams(format!(
            "budget {k} exceeds the {} available nodes",
            candidates.len()
        )));
    }

    let warning = submodularity_warning(model, idea);
    let mut seeds = base_seeds.clone();
    let mut selected = Vec::with_capacity(k);
    let mut steps = Vec::with_capacity(k);

    if lazy {
        // (stale gain, stderr, node, round the gain was computed in)
        let mut heap: Vec<(f64, f64, NodeId, usize)> = Vec::with_capacity(candidates.len());
        let mut base_value = sigma_of(graph, &seeds, model, idea, evaluator, mix_seed(base_seed, 0, u64::MAX))?.0;
        for &v in &candidates {
            let (val, se) =
                sigma_of(graph, &seeds.with_seed(idea, v), model, idea, evaluator, mix_seed(base_seed, 0, v as u64))?;
            heap.push((val - base_value, se, v, 0));
        }
        for round in 1..=k {
            loop {
                let top = heap
                    .iter()
                    .enumerate()
                    .max_by(|a, b| {
                        a.1 .0.partial_cmp(&b.1 .0).unwrap().then(b.1 .2.cmp(&a.1 .2))
                    })
                    .map(|(i, _)| i)
                    .expect("candidates remain");
                if heap[top].3 == round {
                    let (gain, stderr, node, _) = heap.swap_remove(top);
                    selected.push(node);
                    steps.push(GreedyStep { node, gain, stderr });
                    seeds = seeds.with_seed(idea, node);
                    base_value += gain;
                    break;
                }
                let node = heap[top].2;
                let (val, se) = sigma_of(
                    graph,
                    &seeds.with_seed(idea, node),
                    model,
                    idea,
                    evaluator,
                    mix_seed(base_seed, round as u64, node as u64),
                )?;
                heap[top] = (val - base_value, se, node, round);
            }
        }
    } else {
        let mut remaining = candidates;
        for round in 1..=k {
            let base_value = sigma_of(
                graph,
                &seeds,
                model,
                idea,
                evaluator,
                mix_seed(base_seed, round as u64, u64::MAX),
            )?
            .0;
            let mut best: Option<(f64, f64, NodeId)> = None;
            for &v in &remaining {
                let (val, se) = sigma_of(
                    graph,
                    &seeds.with_seed(idea, v),
                    model,
                    idea,
                    evaluator,
                    mix_seed(base_seed, round as u64, v as u64),
                )?;
                let gain = val - base_value;
                let better = match best {
                    None => true,
                    // ties broken toward the smaller node id
                    Some((g, _, n)) => gain > g || (gain == g && v < n),
                };
                if better {
                    best = Some((gain, se, v));
                }
            }
            let (gain, stderr, node) = best.expect("candidates remain");
            selected.push(node);
            steps.push(GreedyStep { node, gain, stderr });
            seeds = seeds.with_seed(idea, node);
            remaining.retain(|&v| v != node);
        }
    }

    Ok(GreedySelection { selected, steps, warning })
}
