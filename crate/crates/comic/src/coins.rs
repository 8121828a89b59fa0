//! Coin sources drive every stochastic choice in a cascade: edge liveness,
//! primary adoption trials, and reconsideration trials. The simulator plugs
//! in an RNG; the exact oracle plugs in a depth-first replayer that branches
//! on both outcomes.

use rand::Rng;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CoinKind {
    /// Liveness of an edge, flipped at most once per run.
    EdgeLive { edge: usize },
    /// Primary adoption trial of `idea` at `node`.
    Adoption { node: usize, idea: usize },
    /// Reconsideration trial of `idea` at `node`.
    Reconsideration { node: usize, idea: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoinRecord {
    pub kind: CoinKind,
    pub prob: f64,
    pub outcome: bool,
}

pub trait CoinSource {
    /// Returns true with probability `prob`. Probabilities of exactly 0 or 1
    /// must not consume randomness (the exact oracle relies on this to avoid
    /// degenerate branches).
    fn flip(&mut self, prob: f64, kind: CoinKind) -> bool;
}

/// RNG-backed coins, optionally recording the decision trace.
pub struct RngCoins<'r, R: Rng> {
    rng: &'r mut R,
    pub trace: Option<Vec<CoinRecord>>,
}

impl<'r, R: Rng> RngCoins<'r, R> {
    pub fn new(rng: &'r mut R, record_trace: bool) -> Self {
        Self { rng, trace: if record_trace { Some(Vec::new()) } else { None } }
    }
}

impl<R: Rng> CoinSource for RngCoins<'_, R> {
    fn flip(&mut self, prob: f64, kind: CoinKind) -> bool {
        let outcome = if prob >= 1.0 {
            true
        } else if prob <= 0.0 {
            false
        } else {
            self.rng.random::<f64>() < prob
        };
        if let Some(trace) = &mut self.trace {
            trace.push(CoinRecord { kind, prob, outcome });
        }
        outcome
    }
}

#[derive(Debug, Clone, Copy)]
struct Decision {
    prob: f64,
    taken: bool,
    exhausted: bool,
}

/// Depth-first replayer over the cascade's decision tree. Each `run` replays
/// the recorded prefix and extends it by taking the `true` branch of every
/// fresh coin; `advance` backtracks to the next unexplored leaf.
#[derive(Default)]
pub struct ReplayCoins {
    path: Vec<Decision>,
    cursor: usize,
}

impl ReplayCoins {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn rewind(&mut self) {
        self.cursor = 0;
    }

    /// Probability weight of the leaf just visited.
    pub fn leaf_weight(&self) -> f64 {
        debug_assert_eq!(self.cursor, self.path.len());
        self.path
            .iter()
            .map(|d| if d.taken { d.prob } else { 1.0 - d.prob })
            .product()
    }

    pub fn depth(&self) -> usize {
        self.path.len()
    }

    /// Flips the deepest unexplored decision; returns false when the whole
    /// tree has been visited.
    pub fn advance(&mut self) -> bool {
        while let Some(d) = self.path.last() {
            if d.exhausted {
                self.path.pop();
            } else {
                break;
            }
        }
        match self.path.last_mut() {
            None => false,
            Some(d) => {
                d.taken = false;
                d.exhausted = true;
                true
            }
        }
    }
}

impl CoinSource for ReplayCoins {
    fn flip(&mut self, prob: f64, _kind: CoinKind) -> bool {
        if prob >= 1.0 {
            return true;
        }
        if prob <= 0.0 {
            return false;
        }
        if self.cursor < self.path.len() {
            let d = self.path[self.cursor];
            debug_assert!(
                (d.prob - prob).abs() < 1e-15,
                "cascade is not a deterministic function of its decisions"
            );
            self.cursor += 1;
            d.taken
        } else {
            self.path.push(Decision { prob, taken: true, exhausted: false });
            self.cursor += 1;
            true
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const K: CoinKind = CoinKind::Adoption { node: 0, idea: 0 };

    #[test]
    fn degenerate_probs_do_not_branch() {
        let mut coins = ReplayCoins::new();
        assert!(coins.flip(1.0, K));
        assert!(!coins.flip(0.0, K));
        assert_eq!(coins.depth(), 0);
    }

    #[test]
    fn replay_enumerates_all_leaves() {
        // Two coins of prob 0.25 and 0.5: four leaves, weights sum to 1.
        let mut coins = ReplayCoins::new();
        let mut total = 0.0;
        let mut leaves = 0;
        loop {
            coins.rewind();
            let _ = (coins.flip(0.25, K), coins.flip(0.5, K));
            total += coins.leaf_weight();
            leaves += 1;
            if !coins.advance() {
                break;
            }
        }
        assert_eq!(leaves, 4);
        assert!((total - 1.0).abs() < 1e-15);
    }

    #[test]
    fn replay_handles_dependent_second_coin() {
        // Second coin exists only on the first coin's success: three leaves.
        let mut coins = ReplayCoins::new();
        let mut total = 0.0;
        let mut leaves = 0;
        loop {
            coins.rewind();
            if coins.flip(0.5, K) {
                let _ = coins.flip(0.25, K);
            }
            total += coins.leaf_weight();
            leaves += 1;
            if !coins.advance() {
                break;
            }
        }
        assert_eq!(leaves, 3);
        assert!((total - 1.0).abs() < 1e-15);
    }
}
