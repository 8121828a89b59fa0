//! Everything theorem-facing: counterexample constructors, closed-form
//! marginal formulas, submodularity condition predicates, exact violation
//! measurement, parameter-space sweeps, and randomized positive-case probes.
//!
//! A violation witness is the pair (M1, M2) of marginal gains of a candidate
//! seed `u` at a target node, without and with a companion seed `v`;
//! `M2 - M1 > 0` on any instance disproves submodularity.

use crate::error::{Error, Result};
use crate::exact::{exact_sigma_comic, exact_sigma_oneshot};
use crate::graph::{DirectedGraph, EdgeId, NodeId, SeedAssignment};
use crate::model::{q_eq, ComicConfig, GapParams, Mode, Model, OneShotParams};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// Measured gaps above this witness a violation; distinct from the
/// formula-agreement tolerance so summation error never flags a false
/// positive.
pub const VIOLATION_TOL: f64 = 1e-9;
/// Tolerance for formula-versus-oracle agreement.
pub const AGREEMENT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FigName {
    Fig1,
    Fig2,
    Fig3,
    Fig4,
}

impl std::str::FromStr for FigName {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fig1" => Ok(FigName::Fig1),
            "fig2" => Ok(FigName::Fig2),
            "fig3" => Ok(FigName::Fig3),
            "fig4" => Ok(FigName::Fig4),
            other => Err(Error::InvalidParams(format!("unknown counterexample {other:?}"))),
        }
    }
}

impl std::fmt::Display for FigName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            FigName::Fig1 => "fig1",
            FigName::Fig2 => "fig2",
            FigName::Fig3 => "fig3",
            FigName::Fig4 => "fig4",
        };
        f.write_str(s)
    }
}

/// The six regimes whose submodularity is characterized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Setting {
    CompetingSelf,
    ComplementarySelfNoRecon,
    ComplementarySelfRecon,
    ComplementaryCrossNoRecon,
    ComplementaryCrossRecon,
    OneShot,
}

impl Setting {
    pub const ALL: [Setting; 6] = [
        Setting::CompetingSelf,
        Setting::ComplementarySelfNoRecon,
        Setting::ComplementarySelfRecon,
        Setting::ComplementaryCrossNoRecon,
        Setting::ComplementaryCrossRecon,
        Setting::OneShot,
    ];

    /// The counterexample that witnesses non-submodularity in this setting.
    pub fn fig(self) -> FigName {
        match self {
            Setting::CompetingSelf | Setting::ComplementarySelfNoRecon => FigName::Fig1,
            Setting::ComplementarySelfRecon => FigName::Fig2,
            Setting::ComplementaryCrossNoRecon | Setting::ComplementaryCrossRecon => FigName::Fig3,
            Setting::OneShot => FigName::Fig4,
        }
    }

    pub fn reconsideration(self) -> bool {
        matches!(self, Setting::ComplementarySelfRecon | Setting::ComplementaryCrossRecon)
    }

    pub fn mode(self) -> Option<Mode> {
        match self {
            Setting::CompetingSelf => Some(Mode::Competing),
            Setting::OneShot => None,
            _ => Some(Mode::Complementary),
        }
    }
}

impl std::str::FromStr for Setting {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "competing-self" => Ok(Setting::CompetingSelf),
            "complementary-self-norecon" => Ok(Setting::ComplementarySelfNoRecon),
            "complementary-self-recon" => Ok(Setting::ComplementarySelfRecon),
            "complementary-cross-norecon" => Ok(Setting::ComplementaryCrossNoRecon),
            "complementary-cross-recon" => Ok(Setting::ComplementaryCrossRecon),
            "oneshot" => Ok(Setting::OneShot),
            other => Err(Error::InvalidParams(format!("unknown setting {other:?}"))),
        }
    }
}

impl std::fmt::Display for Setting {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Setting::CompetingSelf => "competing-self",
            Setting::ComplementarySelfNoRecon => "complementary-self-norecon",
            Setting::ComplementarySelfRecon => "complementary-self-recon",
            Setting::ComplementaryCrossNoRecon => "complementary-cross-norecon",
            Setting::ComplementaryCrossRecon => "complementary-cross-recon",
            Setting::OneShot => "oneshot",
        };
        f.write_str(s)
    }
}

/// Parameters paired with a setting: GAP values for Com-IC regimes, idea
/// strengths plus the designated idea for One-Shot.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum ParamSet {
    Gap(GapParams),
    OneShot { q: Vec<f64>, idea: usize },
}

/// The (M1, M2) marginal pair at the counterexample's target node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MarginalPair {
    pub m1: f64,
    pub m2: f64,
}

impl MarginalPair {
    pub fn gap(&self) -> f64 {
        self.m2 - self.m1
    }
}

/// A named counterexample instance: graph, base seeds, the candidate pair
/// (u, v) that augments one idea's seed set, and the target node whose
/// adoption probability carries the violation.
#[derive(Debug, Clone, Serialize)]
pub struct Counterexample {
    pub name: FigName,
    #[serde(skip)]
    pub graph: DirectedGraph,
    #[serde(skip)]
    pub base_seeds: SeedAssignment,
    pub candidate_u: NodeId,
    pub candidate_v: NodeId,
    pub target: NodeId,
    /// Index of the seed set the candidates augment.
    pub augmented_idea: usize,
    /// Index of the idea whose spread is measured.
    pub measured_idea: usize,
    pub k: Option<usize>,
    pub name_map: Vec<(String, NodeId)>,
}

/// Builds the named counterexample. `k` is the path parameter and is
/// required exactly for `fig4`. All edges have probability 1.
pub fn build_counterexample(name: FigName, k: Option<usize>) -> Result<Counterexample> {
    match (name, k) {
        (FigName::Fig4, None) => {
            return Err(Error::InvalidParams("fig4 requires the path parameter k".into()))
        }
        (FigName::Fig4, Some(_)) => {}
        (_, Some(_)) => {
            return Err(Error::InvalidParams(format!("{name} takes no path parameter")))
        }
        (_, None) => {}
    }
    match name {
        FigName::Fig1 => {
            // u=0, a=1, b=2, w=3, v=4, d1=5, d2=6, d3=7, t=8
            let edges = [
                (0, 5, 1.0),
                (5, 6, 1.0),
                (6, 7, 1.0),
                (7, 8, 1.0),
                (1, 3, 1.0),
                (3, 8, 1.0),
                (2, 4, 1.0),
                (4, 3, 1.0),
            ];
            Ok(Counterexample {
                name,
                graph: DirectedGraph::new(9, &edges)?,
                base_seeds: SeedAssignment::comic(vec![1], vec![2]),
                candidate_u: 0,
                candidate_v: 4,
                target: 8,
                augmented_idea: 0,
                measured_idea: 0,
                k: None,
                name_map: vec![
                    ("u".into(), 0),
                    ("a".into(), 1),
                    ("b".into(), 2),
                    ("w".into(), 3),
                    ("v".into(), 4),
                    ("d1".into(), 5),
                    ("d2".into(), 6),
                    ("d3".into(), 7),
                    ("t".into(), 8),
                ],
            })
        }
        FigName::Fig2 => {
            // b=0 -> v=1 -> a1=2 -> u=3 -> a2=4 -> t=5
            let edges = [(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (3, 4, 1.0), (4, 5, 1.0)];
            Ok(Counterexample {
                name,
                graph: DirectedGraph::new(6, &edges)?,
                base_seeds: SeedAssignment::comic(vec![2, 4], vec![0]),
                candidate_u: 3,
                candidate_v: 1,
                target: 5,
                augmented_idea: 0,
                measured_idea: 0,
                k: None,
                name_map: vec![
                    ("b".into(), 0),
                    ("v".into(), 1),
                    ("a1".into(), 2),
                    ("u".into(), 3),
                    ("a2".into(), 4),
                    ("t".into(), 5),
                ],
            })
        }
        FigName::Fig3 => {
            // a=0 -> v=1 -> b=2 -> t=3, where u and t name the same vertex
            let edges = [(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0)];
            Ok(Counterexample {
                name,
                graph: DirectedGraph::new(4, &edges)?,
                base_seeds: SeedAssignment::comic(vec![0], vec![2]),
                candidate_u: 3,
                candidate_v: 1,
                target: 3,
                augmented_idea: 1,
                measured_idea: 0,
                k: None,
                name_map: vec![
                    ("a".into(), 0),
                    ("v".into(), 1),
                    ("b".into(), 2),
                    ("u/t".into(), 3),
                ],
            })
        }
        FigName::Fig4 => {
            let k = k.expect("checked above");
            // u=0, x1..x_{k+2}=1..=k+2, t=k+3, j=k+4, v=k+5, y1..yk=k+6..
            let t = k + 3;
            let j = k + 4;
            let v = k + 5;
            let mut edges = Vec::new();
            let mut name_map = vec![("u".to_string(), 0)];
            edges.push((0, 1, 1.0));
            for i in 1..=k + 1 {
                edges.push((i, i + 1, 1.0));
            }
            for i in 1..=k + 2 {
                name_map.push((format!("x{i}"), i));
            }
            edges.push((k + 2, t, 1.0));
            name_map.push(("t".into(), t));
            name_map.push(("j".into(), j));
            name_map.push(("v".into(), v));
            edges.push((j, v, 1.0));
            if k == 0 {
                edges.push((v, t, 1.0));
            } else {
                edges.push((v, k + 6, 1.0));
                for i in 0..k - 1 {
                    edges.push((k + 6 + i, k + 7 + i, 1.0));
                }
                for i in 1..=k {
                    name_map.push((format!("y{i}"), k + 5 + i));
                }
                edges.push((k + 5 + k, t, 1.0));
            }
            Ok(Counterexample {
                name,
                graph: DirectedGraph::new(2 * k + 6, &edges)?,
                base_seeds: SeedAssignment::oneshot(vec![vec![], vec![j]]),
                candidate_u: 0,
                candidate_v: v,
                target: t,
                augmented_idea: 0,
                measured_idea: 0,
                k: Some(k),
                name_map,
            })
        }
    }
}

fn require_gap(params: &ParamSet, setting: Setting) -> Result<GapParams> {
    let gap = match params {
        ParamSet::Gap(gap) => *gap,
        ParamSet::OneShot { .. } => {
            return Err(Error::InvalidParams(format!(
                "setting {setting} takes GAP parameters, got One-Shot strengths"
            )))
        }
    };
    match setting.mode() {
        Some(mode) if gap.mode != mode => Err(Error::InvalidParams(format!(
            "setting {setting} requires {mode:?} parameters"
        ))),
        _ => Ok(gap),
    }
}

fn require_oneshot(params: &ParamSet) -> Result<(Vec<f64>, usize)> {
    match params {
        ParamSet::OneShot { q, idea } => {
            if *idea >= q.len() {
                return Err(Error::InvalidParams(format!(
                    "designated idea {idea} out of range for {} ideas",
                    q.len()
                )));
            }
            OneShotParams::new(q.clone())?;
            Ok((q.clone(), *idea))
        }
        ParamSet::Gap(_) => Err(Error::InvalidParams(
            "the One-Shot setting takes idea strengths, got GAP parameters".into(),
        )),
    }
}

/// The model a setting's counterexample runs under.
pub fn model_for(setting: Setting, params: &ParamSet) -> Result<Model> {
    match setting {
        Setting::OneShot => {
            let (q, _) = require_oneshot(params)?;
            Ok(Model::OneShot(OneShotParams::new(q)?))
        }
        _ => {
            let gap = require_gap(params, setting)?;
            Ok(Model::Comic(ComicConfig::new(gap, setting.reconsideration())?))
        }
    }
}

/// Evaluates the proof's closed-form M1/M2 expressions for the named
/// counterexample at the given parameters.
pub fn closed_form_margins(
    name: FigName,
    params: &ParamSet,
    k: Option<usize>,
) -> Result<MarginalPair> {
    match name {
        FigName::Fig1 => {
            let gap = match params {
                ParamSet::Gap(g) => *g,
                _ => return Err(Error::InvalidParams("fig1 takes GAP parameters".into())),
            };
            let (a0, b0, ab, ba) = (gap.q_a0, gap.q_b0, gap.q_ab, gap.q_ba);
            let m1 = (1.0 - a0)
                * ((1.0 - b0.powi(3)) * a0.powi(4) + b0.powi(3) * a0.powi(3) * ab);
            let m2 = (1.0 - a0)
                * ((1.0 - b0 * ba * b0) * a0.powi(4) + b0 * ba * b0 * a0.powi(3) * ab);
            Ok(MarginalPair { m1, m2 })
        }
        FigName::Fig2 => {
            let gap = require_gap(params, Setting::ComplementarySelfRecon)?;
            let (a0, b0, ab, ba) = (gap.q_a0, gap.q_b0, gap.q_ab, gap.q_ba);
            let tail = (ba - b0) * ba * b0 * (ab - a0);
            let m1 = (1.0 - a0) * b0 * ba * tail;
            let m2 = (1.0 - a0) * ba * ba * tail;
            Ok(MarginalPair { m1, m2 })
        }
        FigName::Fig3 => {
            let gap = match params {
                ParamSet::Gap(g) if g.mode == Mode::Complementary => *g,
                _ => {
                    return Err(Error::InvalidParams(
                        "fig3 takes complementary GAP parameters".into(),
                    ))
                }
            };
            let (a0, b0, ab) = (gap.q_a0, gap.q_b0, gap.q_ab);
            let m1 = (1.0 - b0) * a0 * ab * (ab - a0);
            let m2 = (1.0 - b0) * ab * ab * (ab - a0);
            Ok(MarginalPair { m1, m2 })
        }
        FigName::Fig4 => {
            let (q, idea) = require_oneshot(params)?;
            if q.len() != 2 || idea != 0 {
                return Err(Error::InvalidParams(
                    "fig4 takes two idea strengths (q_i, q_j) with idea i designated".into(),
                ));
            }
            let k = k.ok_or_else(|| {
                Error::InvalidParams("fig4 requires the path parameter k".into())
            })?;
            let (qi, qj) = (q[0], q[1]);
            let m1 = qi.powi(k as i32 + 3) * (1.0 - qj.powi(k as i32 + 2));
            let m2 = qi.powi(k as i32 + 3) * (1.0 - qi.powi(k as i32 + 1));
            Ok(MarginalPair { m1, m2 })
        }
    }
}

/// Outcome of the sufficient-condition predicates for one setting.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prediction {
    pub submodular: bool,
    /// Conditions that hold at these parameters.
    pub satisfied: Vec<&'static str>,
    /// Every condition the setting checks.
    pub conditions: Vec<&'static str>,
}

impl Prediction {
    pub fn condition_summary(&self) -> String {
        self.conditions.join(", ")
    }
}

/// True (with the witnessing conditions) exactly when one of the setting's
/// sufficient conditions holds; in each characterized regime, violation is
/// guaranteed otherwise.
pub fn predict_submodular(setting: Setting, params: &ParamSet) -> Result<Prediction> {
    let checks: Vec<(&'static str, bool)> = match setting {
        Setting::CompetingSelf => {
            let g = require_gap(params, setting)?;
            vec![
                ("q_a0 = 1", q_eq(g.q_a0, 1.0)),
                ("q_a0 = q_ab", q_eq(g.q_a0, g.q_ab)),
                ("q_b0 = q_ba", q_eq(g.q_b0, g.q_ba)),
            ]
        }
        Setting::ComplementarySelfNoRecon => {
            let g = require_gap(params, setting)?;
            vec![
                ("q_a0 = 0", q_eq(g.q_a0, 0.0)),
                ("q_b0 = 0", q_eq(g.q_b0, 0.0)),
                ("q_a0 = q_ab", q_eq(g.q_a0, g.q_ab)),
                ("q_b0 = q_ba", q_eq(g.q_b0, g.q_ba)),
            ]
        }
        Setting::ComplementarySelfRecon => {
            let g = require_gap(params, setting)?;
            vec![
                ("q_a0 = q_ab", q_eq(g.q_a0, g.q_ab)),
                ("q_b0 = q_ba", q_eq(g.q_b0, g.q_ba)),
                ("q_b0 = 0", q_eq(g.q_b0, 0.0)),
            ]
        }
        Setting::ComplementaryCrossNoRecon | Setting::ComplementaryCrossRecon => {
            let g = require_gap(params, setting)?;
            vec![
                ("q_a0 = q_ab", q_eq(g.q_a0, g.q_ab)),
                ("q_b0 = 1", q_eq(g.q_b0, 1.0)),
            ]
        }
        Setting::OneShot => {
            let (q, idea) = require_oneshot(params)?;
            let qi = q[idea];
            let strongest = q.iter().all(|&qj| qi >= qj - crate::model::Q_EQ_TOL);
            vec![
                ("q_i >= q_j for every j", strongest),
                ("q_i = 0", q_eq(qi, 0.0)),
            ]
        }
    };
    let satisfied: Vec<&'static str> =
        checks.iter().filter(|(_, holds)| *holds).map(|(name, _)| *name).collect();
    Ok(Prediction {
        submodular: !satisfied.is_empty(),
        satisfied,
        conditions: checks.into_iter().map(|(name, _)| name).collect(),
    })
}

/// Smallest k >= 0 with `q_j^(k+2) > q_i^(k+1)`, the path parameter that
/// makes the fig4 violation strictly positive. Requires `0 < q_i < q_j`.
pub fn choose_k(q_i: f64, q_j: f64) -> Result<usize> {
    if !(q_i > 0.0 && q_i < q_j && q_j <= 1.0) {
        return Err(Error::InvalidParams(format!(
            "choose_k needs 0 < q_i < q_j <= 1, got q_i={q_i}, q_j={q_j}"
        )));
    }
    let mut k = 0usize;
    loop {
        if q_j.powi(k as i32 + 2) > q_i.powi(k as i32 + 1) {
            return Ok(k);
        }
        k += 1;
        if k > 100_000 {
            return Err(Error::InvalidParams(format!(
                "no violating k below 100000 for q_i={q_i}, q_j={q_j}"
            )));
        }
    }
}

fn permutations(items: &[EdgeId]) -> Vec<Vec<EdgeId>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for (i, &head) in items.iter().enumerate() {
        let mut rest = items.to_vec();
        rest.remove(i);
        for mut tail in permutations(&rest) {
            let mut p = Vec::with_capacity(items.len());
            p.push(head);
            p.append(&mut tail);
            out.push(p);
        }
    }
    out
}

/// All graphs reachable by permuting each node's in-edge tie-break order.
/// Intended for small instances; the count is the product of in-degree
/// factorials.
pub fn tiebreak_variants(graph: &DirectedGraph) -> Vec<DirectedGraph> {
    let mut variants = vec![graph.clone()];
    for v in 0..graph.node_count() {
        let perms = permutations(graph.in_edges(v));
        if perms.len() <= 1 {
            continue;
        }
        let mut next = Vec::with_capacity(variants.len() * perms.len());
        for g in &variants {
            for p in &perms {
                let mut g2 = g.clone();
                g2.set_in_order(v, p.clone()).expect("permutation of the node's in-edges");
                next.push(g2);
            }
        }
        variants = next;
    }
    variants
}

fn sigma_at_target(
    graph: &DirectedGraph,
    seeds: &SeedAssignment,
    model: &Model,
    idea: usize,
    target: NodeId,
    budget: u64,
) -> Result<f64> {
    let r = match model {
        Model::Comic(config) => exact_sigma_comic(graph, seeds, config, budget)?,
        Model::OneShot(params) => exact_sigma_oneshot(graph, seeds, params, budget)?,
    };
    Ok(r.per_node[idea][target])
}

/// Exact target-node adoption probability averaged over every tie-break
/// permutation, matching the model's expectation over the random in-edge
/// ordering.
pub fn sigma_target_tiebreak_avg(
    graph: &DirectedGraph,
    seeds: &SeedAssignment,
    model: &Model,
    idea: usize,
    target: NodeId,
    budget: u64,
) -> Result<f64> {
    let variants = tiebreak_variants(graph);
    let mut sum = 0.0;
    for g in &variants {
        sum += sigma_at_target(g, seeds, model, idea, target, budget)?;
    }
    Ok(sum / variants.len() as f64)
}

/// Measures (M1, M2) on a counterexample with the exact oracle: four
/// sigma^t evaluations, each averaged over all tie-break permutations.
pub fn measure_violation(
    cex: &Counterexample,
    setting: Setting,
    params: &ParamSet,
    budget: u64,
) -> Result<MarginalPair> {
    if setting.fig() != cex.name {
        return Err(Error::InvalidParams(format!(
            "setting {setting} is witnessed by {}, got {}",
            setting.fig(),
            cex.name
        )));
    }
    let model = model_for(setting, params)?;
    let aug = cex.augmented_idea;
    let base = cex.base_seeds.clone();
    let with_u = base.with_seed(aug, cex.candidate_u);
    let with_v = base.with_seed(aug, cex.candidate_v);
    let with_uv = with_u.with_seed(aug, cex.candidate_v);
    let eval = |seeds: &SeedAssignment| {
        sigma_target_tiebreak_avg(&cex.graph, seeds, &model, cex.measured_idea, cex.target, budget)
    };
    let s_base = eval(&base)?;
    let s_u = eval(&with_u)?;
    let s_v = eval(&with_v)?;
    let s_uv = eval(&with_uv)?;
    Ok(MarginalPair { m1: s_u - s_base, m2: s_uv - s_v })
}

/// Path-parameter policy for One-Shot sweep rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum KPolicy {
    /// `choose_k` where a violating k exists (0 < q_i < q_j), otherwise 0.
    Auto,
    Fixed(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum SweepParams {
    Gap { q_a0: f64, q_b0: f64, q_ab: f64, q_ba: f64 },
    OneShot { q_i: f64, q_j: f64, k: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub params: SweepParams,
    pub predicted: bool,
    pub m1: f64,
    pub m2: f64,
    pub gap: f64,
    pub agree: bool,
}

/// Grid values 0, step, ..., 1. `step` must divide 1 evenly.
fn grid_values(step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && step <= 1.0) {
        return Err(Error::InvalidParams(format!("grid step {step} outside (0, 1]")));
    }
    let m = (1.0 / step).round();
    if (m * step - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParams(format!("grid step {step} does not divide 1 evenly")));
    }
    Ok((0..=m as usize).map(|i| i as f64 * step).collect())
}

/// Every grid point valid in the setting's parameter region.
pub fn sweep_points(setting: Setting, step: f64) -> Result<Vec<ParamSet>> {
    let vals = grid_values(step)?;
    let mut points = Vec::new();
    match setting {
        Setting::OneShot => {
            for &qi in &vals {
                for &qj in &vals {
                    points.push(ParamSet::OneShot { q: vec![qi, qj], idea: 0 });
                }
            }
        }
        _ => {
            let mode = setting.mode().expect("comic settings carry a mode");
            for &a0 in &vals {
                for &b0 in &vals {
                    for &ab in &vals {
                        for &ba in &vals {
                            // grid points violating the mode's GAP ordering
                            // are excluded, not errors
                            if let Ok(gap) = GapParams::new(a0, b0, ab, ba, mode) {
                                points.push(ParamSet::Gap(gap));
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(points)
}

/// Evaluates one sweep row: predicted submodularity and the measured
/// violation on the setting's counterexample.
pub fn sweep_row(
    setting: Setting,
    params: &ParamSet,
    k_policy: KPolicy,
    budget: u64,
) -> Result<SweepRow> {
    let prediction = predict_submodular(setting, params)?;
    let (cex, row_params) = match (setting, params) {
        (Setting::OneShot, ParamSet::OneShot { q, .. }) => {
            let (qi, qj) = (q[0], q[1]);
            let k = match k_policy {
                KPolicy::Fixed(k) => k,
                KPolicy::Auto => {
                    if qi > 0.0 && qi < qj - crate::model::Q_EQ_TOL {
                        choose_k(qi, qj)?
                    } else {
                        0
                    }
                }
            };
            (build_counterexample(FigName::Fig4, Some(k))?, SweepParams::OneShot { q_i: qi, q_j: qj, k })
        }
        (_, ParamSet::Gap(g)) => (
            build_counterexample(setting.fig(), None)?,
            SweepParams::Gap { q_a0: g.q_a0, q_b0: g.q_b0, q_ab: g.q_ab, q_ba: g.q_ba },
        ),
        _ => return Err(Error::InvalidParams("parameter kind does not match setting".into())),
    };
    let measured = measure_violation(&cex, setting, params, budget)?;
    let gap = measured.gap();
    let agree = prediction.submodular == (gap <= VIOLATION_TOL);
    Ok(SweepRow {
        params: row_params,
        predicted: prediction.submodular,
        m1: measured.m1,
        m2: measured.m2,
        gap,
        agree,
    })
}

/// Full sweep over the setting's parameter grid.
pub fn sweep_gap(
    setting: Setting,
    step: f64,
    k_policy: KPolicy,
    budget: u64,
) -> Result<Vec<SweepRow>> {
    sweep_points(setting, step)?
        .iter()
        .map(|p| sweep_row(setting, p, k_policy, budget))
        .collect()
}

/// Uniformly random GAP parameters valid for `mode`.
pub fn random_gap<R: Rng>(rng: &mut R, mode: Mode) -> GapParams {
    let a0: f64 = rng.random();
    let b0: f64 = rng.random();
    let (ab, ba) = match mode {
        Mode::Competing => (a0 * rng.random::<f64>(), b0 * rng.random::<f64>()),
        Mode::Complementary => (
            a0 + (1.0 - a0) * rng.random::<f64>(),
            b0 + (1.0 - b0) * rng.random::<f64>(),
        ),
    };
    GapParams::new(a0, b0, ab, ba, mode).expect("ordered by construction")
}

/// Random DAG used by the positive-case probes: uniform topological order,
/// each forward edge present with probability 0.5, edge probabilities drawn
/// from {0.5, 1.0}.
pub fn random_dag<R: Rng>(rng: &mut R, node_count: usize) -> DirectedGraph {
    let mut order: Vec<NodeId> = (0..node_count).collect();
    order.shuffle(rng);
    let mut edges = Vec::new();
    for i in 0..node_count {
        for j in i + 1..node_count {
            if rng.random::<f64>() < 0.5 {
                let prob = if rng.random::<f64>() < 0.5 { 0.5 } else { 1.0 };
                edges.push((order[i], order[j], prob));
            }
        }
    }
    DirectedGraph::new(node_count, &edges).expect("forward edges cannot collide")
}

fn random_subset<R: Rng>(rng: &mut R, n: usize, size: usize, excluded: &[NodeId]) -> Vec<NodeId> {
    let mut pool: Vec<NodeId> = (0..n).filter(|v| !excluded.contains(v)).collect();
    pool.shuffle(rng);
    pool.truncate(size.min(pool.len()));
    pool
}

/// One sampled instance that broke the submodularity inequality, reported
/// verbatim for triage.
#[derive(Debug, Clone, Serialize)]
pub struct ProbeViolation {
    pub trial: u64,
    pub graph: String,
    pub seed_sets: Vec<Vec<NodeId>>,
    pub augmented_idea: usize,
    pub candidate_u: NodeId,
    pub candidate_v: NodeId,
    pub target: NodeId,
    /// sigma(S) + sigma(S + u + v)
    pub lhs: f64,
    /// sigma(S + u) + sigma(S + v)
    pub rhs: f64,
    pub excess: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProbeReport {
    pub setting: Setting,
    pub trials: u64,
    pub base_seed: u64,
    pub violations: Vec<ProbeViolation>,
}

/// Checks the submodularity inequality on random instances at parameters
/// predicted submodular. Every trial draws a fresh DAG, seed sets, candidate
/// pair, and target, and evaluates the four exact spreads.
pub fn probe_positive(
    setting: Setting,
    params: &ParamSet,
    trials: u64,
    max_nodes: usize,
    base_seed: u64,
    budget: u64,
) -> Result<ProbeReport> {
    if max_nodes > 7 {
        return Err(Error::InvalidParams("probe instances are capped at 7 nodes".into()));
    }
    if max_nodes < 4 {
        return Err(Error::InvalidParams("probe needs at least 4 nodes".into()));
    }
    let prediction = predict_submodular(setting, params)?;
    if !prediction.submodular {
        return Err(Error::InvalidParams(
            "probe_positive requires parameters predicted submodular".into(),
        ));
    }
    let model = model_for(setting, params)?;
    let designated = match params {
        ParamSet::OneShot { idea, .. } => *idea,
        // self settings augment the measured idea's own seed set; cross
        // settings augment the other idea's
        ParamSet::Gap(_) => match setting {
            Setting::ComplementaryCrossNoRecon | Setting::ComplementaryCrossRecon => 1,
            _ => 0,
        },
    };
    let measured_idea = match (&model, setting) {
        (Model::OneShot(_), _) => designated,
        (_, Setting::ComplementaryCrossNoRecon | Setting::ComplementaryCrossRecon) => 0,
        _ => 0,
    };
    let idea_count = model.idea_count();

    let mut violations = Vec::new();
    for trial in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(base_seed);
        rng.set_stream(trial);
        let n = rng.random_range(4..=max_nodes);
        let graph = random_dag(&mut rng, n);

        // base seed set S for the augmented idea, fixed sets for the others
        let disjoint = matches!(model, Model::OneShot(_));
        let mut sets: Vec<Vec<NodeId>> = vec![Vec::new(); idea_count];
        let mut taken: Vec<NodeId> = Vec::new();
        for (i, set) in sets.iter_mut().enumerate() {
            let size = rng.random_range(if i == measured_idea && i != designated { 1 } else { 0 }..=2);
            let excluded: &[NodeId] = if disjoint { &taken } else { &[] };
            *set = random_subset(&mut rng, n, size, excluded);
            taken.extend(set.iter().copied());
        }
        // candidates: distinct, outside the augmented set (and, for
        // One-Shot, outside every set)
        let candidate_excluded: Vec<NodeId> =
            if disjoint { taken.clone() } else { sets[designated].clone() };
        let pair = random_subset(&mut rng, n, 2, &candidate_excluded);
        if pair.len() < 2 {
            continue;
        }
        let (u, v) = (pair[0], pair[1]);
        let target = rng.random_range(0..n);

        let base = SeedAssignment::new(sets.clone());
        let with_u = base.with_seed(designated, u);
        let with_v = base.with_seed(designated, v);
        let with_uv = with_u.with_seed(designated, v);
        let eval = |seeds: &SeedAssignment| {
            sigma_at_target(&graph, seeds, &model, measured_idea, target, budget)
        };
        let s_base = eval(&base)?;
        let s_u = eval(&with_u)?;
        let s_v = eval(&with_v)?;
        let s_uv = eval(&with_uv)?;
        let lhs = s_base + s_uv;
        let rhs = s_u + s_v;
        if lhs > rhs + VIOLATION_TOL {
            violations.push(ProbeViolation {
                trial,
                graph: graph.serialize(),
                seed_sets: sets,
                augmented_idea: designated,
                candidate_u: u,
                candidate_v: v,
                target,
                lhs,
                rhs,
                excess: lhs - rhs,
            });
        }
    }
    Ok(ProbeReport { setting, trials, base_seed, violations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::DEFAULT_BUDGET;

    fn gap(setting: Setting, a0: f64, b0: f64, ab: f64, ba: f64) -> ParamSet {
        let mode = setting.mode().unwrap();
        ParamSet::Gap(GapParams::new(a0, b0, ab, ba, mode).unwrap())
    }

    #[test]
    fn fig1_structure() {
        let cex = build_counterexample(FigName::Fig1, None).unwrap();
        assert_eq!(cex.graph.node_count(), 9);
        assert_eq!(cex.graph.edge_count(), 8);
        assert_eq!(cex.graph.in_edges(cex.target).len(), 2);
        // a -> w only; t is a sink
        assert_eq!(cex.graph.out_neighbors(1).unwrap(), vec![(3, 1.0)]);
        assert_eq!(cex.graph.out_neighbors(cex.target).unwrap(), vec![]);
    }

    #[test]
    fn fig3_target_is_candidate_u() {
        let cex = build_counterexample(FigName::Fig3, None).unwrap();
        assert_eq!(cex.graph.node_count(), 4);
        assert_eq!(cex.graph.edge_count(), 3);
        assert_eq!(cex.target, cex.candidate_u);
        assert_eq!(cex.augmented_idea, 1);
    }

    #[test]
    fn fig4_k0_structure() {
        let cex = build_counterexample(FigName::Fig4, Some(0)).unwrap();
        assert_eq!(cex.graph.node_count(), 6);
        // u-chain u->x1->x2->t, j-chain j->v->t
        assert_eq!(cex.graph.edge_count(), 5);
        assert_eq!(cex.graph.in_edges(cex.target).len(), 2);
        assert!(build_counterexample(FigName::Fig4, None).is_err());
        assert!(build_counterexample(FigName::Fig1, Some(1)).is_err());
    }

    #[test]
    fn closed_form_fig1_matches_hand_values() {
        let p = gap(Setting::CompetingSelf, 0.5, 0.5, 0.25, 0.25);
        let m = closed_form_margins(FigName::Fig1, &p, None).unwrap();
        assert!((m.m1 - 0.029296875).abs() < 1e-15);
        assert!((m.gap() - 0.0009765625).abs() < 1e-15);
    }

    #[test]
    fn closed_form_fig2_matches_hand_values() {
        let p = gap(Setting::ComplementarySelfRecon, 0.2, 0.3, 0.5, 0.6);
        let m = closed_form_margins(FigName::Fig2, &p, None).unwrap();
        assert!((m.gap() - 0.0023328).abs() < 1e-12);
    }

    #[test]
    fn closed_form_fig3_ignores_q_ba() {
        for ba in [0.5, 0.7, 1.0] {
            let p = gap(Setting::ComplementaryCrossNoRecon, 0.2, 0.5, 0.6, ba);
            let m = closed_form_margins(FigName::Fig3, &p, None).unwrap();
            assert!((m.gap() - 0.048).abs() < 1e-15);
        }
    }

    #[test]
    fn choose_k_examples() {
        assert_eq!(choose_k(0.5, 0.9).unwrap(), 0);
        assert_eq!(choose_k(0.5, 0.6).unwrap(), 2);
        assert_eq!(choose_k(0.5, 1.0).unwrap(), 0);
        assert!(choose_k(0.6, 0.5).is_err());
        assert!(choose_k(0.0, 0.5).is_err());
    }

    #[test]
    fn choose_k_is_minimal() {
        for (qi, qj) in [(0.5, 0.6), (0.3, 0.7), (0.8, 0.9), (0.7, 0.75)] {
            let k = choose_k(qi, qj).unwrap();
            assert!(qj.powi(k as i32 + 2) > qi.powi(k as i32 + 1));
            if k > 0 {
                let k1 = k - 1;
                assert!(qj.powi(k1 as i32 + 2) <= qi.powi(k1 as i32 + 1));
            }
        }
    }

    #[test]
    fn predictions_follow_the_characterizations() {
        let p = gap(Setting::CompetingSelf, 1.0, 0.5, 0.3, 0.2);
        let pred = predict_submodular(Setting::CompetingSelf, &p).unwrap();
        assert!(pred.submodular);
        assert_eq!(pred.satisfied, vec!["q_a0 = 1"]);

        let p = gap(Setting::ComplementaryCrossNoRecon, 0.2, 0.5, 0.6, 0.9);
        assert!(!predict_submodular(Setting::ComplementaryCrossNoRecon, &p).unwrap().submodular);

        let p = ParamSet::OneShot { q: vec![0.9, 0.5], idea: 0 };
        assert!(predict_submodular(Setting::OneShot, &p).unwrap().submodular);
        let p = ParamSet::OneShot { q: vec![0.5, 0.9], idea: 0 };
        assert!(!predict_submodular(Setting::OneShot, &p).unwrap().submodular);
        let p = ParamSet::OneShot { q: vec![0.0, 0.9], idea: 0 };
        assert!(predict_submodular(Setting::OneShot, &p).unwrap().submodular);
    }

    #[test]
    fn measured_fig1_matches_closed_form() {
        let cex = build_counterexample(FigName::Fig1, None).unwrap();
        let p = gap(Setting::CompetingSelf, 0.5, 0.5, 0.25, 0.25);
        let m = measure_violation(&cex, Setting::CompetingSelf, &p, DEFAULT_BUDGET).unwrap();
        let cf = closed_form_margins(FigName::Fig1, &p, None).unwrap();
        assert!((m.m1 - cf.m1).abs() < AGREEMENT_TOL, "m1 {} vs {}", m.m1, cf.m1);
        assert!((m.m2 - cf.m2).abs() < AGREEMENT_TOL, "m2 {} vs {}", m.m2, cf.m2);
    }

    #[test]
    fn measured_fig1_gap_vanishes_on_condition() {
        let cex = build_counterexample(FigName::Fig1, None).unwrap();
        let p = gap(Setting::CompetingSelf, 0.5, 0.5, 0.5, 0.25);
        let m = measure_violation(&cex, Setting::CompetingSelf, &p, DEFAULT_BUDGET).unwrap();
        assert!(m.gap().abs() < AGREEMENT_TOL);
    }

    #[test]
    fn measured_fig2_matches_closed_form() {
        let cex = build_counterexample(FigName::Fig2, None).unwrap();
        let p = gap(Setting::ComplementarySelfRecon, 0.2, 0.3, 0.5, 0.6);
        let m = measure_violation(&cex, Setting::ComplementarySelfRecon, &p, DEFAULT_BUDGET)
            .unwrap();
        let cf = closed_form_margins(FigName::Fig2, &p, None).unwrap();
        assert!((m.m1 - cf.m1).abs() < AGREEMENT_TOL, "m1 {} vs {}", m.m1, cf.m1);
        assert!((m.m2 - cf.m2).abs() < AGREEMENT_TOL, "m2 {} vs {}", m.m2, cf.m2);
    }

    #[test]
    fn measured_fig3_matches_closed_form_both_recon_settings() {
        let cex = build_counterexample(FigName::Fig3, None).unwrap();
        for setting in [Setting::ComplementaryCrossNoRecon, Setting::ComplementaryCrossRecon] {
            let p = gap(setting, 0.2, 0.5, 0.6, 1.0);
            let m = measure_violation(&cex, setting, &p, DEFAULT_BUDGET).unwrap();
            let cf = closed_form_margins(FigName::Fig3, &p, None).unwrap();
            assert!((m.m1 - 0.024).abs() < AGREEMENT_TOL);
            assert!((m.m1 - cf.m1).abs() < AGREEMENT_TOL);
            assert!((m.m2 - cf.m2).abs() < AGREEMENT_TOL);
            assert!(m.gap() > VIOLATION_TOL, "q_ba = 1 must still violate");
        }
    }

    #[test]
    fn measured_fig4_matches_closed_form() {
        let p = ParamSet::OneShot { q: vec![0.5, 0.6], idea: 0 };
        let cex = build_counterexample(FigName::Fig4, Some(2)).unwrap();
        let m = measure_violation(&cex, Setting::OneShot, &p, DEFAULT_BUDGET).unwrap();
        let cf = closed_form_margins(FigName::Fig4, &p, Some(2)).unwrap();
        assert!((m.m1 - 0.0272).abs() < AGREEMENT_TOL, "m1 {}", m.m1);
        assert!((m.gap() - 0.00014375).abs() < AGREEMENT_TOL, "gap {}", m.gap());
        assert!((m.m1 - cf.m1).abs() < AGREEMENT_TOL);
        assert!((m.m2 - cf.m2).abs() < AGREEMENT_TOL);
    }

    #[test]
    fn fig4_k0_target_probability() {
        // sigma^t with only u seeded: q_i^3 (1 - q_j^2)
        let cex = build_counterexample(FigName::Fig4, Some(0)).unwrap();
        let model = Model::OneShot(OneShotParams::new(vec![0.5, 0.9]).unwrap());
        let seeds = cex.base_seeds.with_seed(0, cex.candidate_u);
        let p = sigma_target_tiebreak_avg(
            &cex.graph,
            &seeds,
            &model,
            0,
            cex.target,
            DEFAULT_BUDGET,
        )
        .unwrap();
        assert!((p - 0.02375).abs() < AGREEMENT_TOL, "got {p}");
    }

    #[test]
    fn sweep_rows_agree_on_coarse_grid() {
        let rows = sweep_gap(Setting::CompetingSelf, 0.5, KPolicy::Auto, DEFAULT_BUDGET).unwrap();
        assert!(!rows.is_empty());
        for row in &rows {
            assert!(row.agree, "disagreement at {:?}", row.params);
        }
    }

    #[test]
    fn sweep_rejects_bad_step() {
        assert!(sweep_points(Setting::CompetingSelf, 0.3).is_err());
        assert!(sweep_points(Setting::CompetingSelf, 0.0).is_err());
    }

    #[test]
    fn probe_rejects_non_submodular_parameters() {
        let p = gap(Setting::CompetingSelf, 0.5, 0.5, 0.25, 0.25);
        assert!(probe_positive(Setting::CompetingSelf, &p, 5, 6, 1, DEFAULT_BUDGET).is_err());
    }

    #[test]
    fn probe_finds_no_violations_in_equivalent_ic_case() {
        let p = gap(Setting::CompetingSelf, 0.7, 0.5, 0.7, 0.3);
        let report = probe_positive(Setting::CompetingSelf, &p, 60, 6, 11, DEFAULT_BUDGET).unwrap();
        assert!(report.violations.is_empty(), "{:?}", report.violations);
    }

    #[test]
    fn tiebreak_variant_count_is_product_of_factorials() {
        let cex = build_counterexample(FigName::Fig1, None).unwrap();
        assert_eq!(tiebreak_variants(&cex.graph).len(), 4);
        let path = build_counterexample(FigName::Fig2, None).unwrap();
        assert_eq!(tiebreak_variants(&path.graph).len(), 1);
    }
}
