//! Model parameters: the four global adoption probabilities for Com-IC, the
//! derived reconsideration probabilities, and the per-idea strengths of the
//! One-Shot model.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Absolute tolerance for equality tests on adoption probabilities. CLI
/// inputs are decimal literals, so user-intended equalities are exact; the
/// tolerance only absorbs derived-value rounding.
pub const Q_EQ_TOL: f64 = 1e-12;

pub fn q_eq(a: f64, b: f64) -> bool {
    (a - b).abs() <= Q_EQ_TOL
}

/// Idea label for the two-idea Com-IC model. Idea indices elsewhere follow
/// `A = 0`, `B = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Idea {
    A,
    B,
}

impl Idea {
    pub fn index(self) -> usize {
        match self {
            Idea::A => 0,
            Idea::B => 1,
        }
    }

    pub fn other(self) -> Idea {
        match self {
            Idea::A => Idea::B,
            Idea::B => Idea::A,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Competing,
    Complementary,
}

/// The four global adoption probabilities. `q_a0`/`q_b0` apply when the other
/// idea has not been adopted, `q_ab`/`q_ba` when it has. Competing mode
/// requires `q_a0 >= q_ab` and `q_b0 >= q_ba`; complementary mode the
/// reverse.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapParams {
    pub q_a0: f64,
    pub q_b0: f64,
    pub q_ab: f64,
    pub q_ba: f64,
    pub mode: Mode,
}

impl GapParams {
    pub fn new(q_a0: f64, q_b0: f64, q_ab: f64, q_ba: f64, mode: Mode) -> Result<Self> {
        for (name, q) in [("q_a0", q_a0), ("q_b0", q_b0), ("q_ab", q_ab), ("q_ba", q_ba)] {
            if !(0.0..=1.0).contains(&q) {
                return Err(Error::InvalidParams(format!("{name} = {q} outside [0, 1]")));
            }
        }
        let ordered = match mode {
            Mode::Competing => q_ab <= q_a0 + Q_EQ_TOL && q_ba <= q_b0 + Q_EQ_TOL,
            Mode::Complementary => q_ab >= q_a0 - Q_EQ_TOL && q_ba >= q_b0 - Q_EQ_TOL,
        };
        if !ordered {
            return Err(Error::InvalidParams(format!(
                "GAP ordering violated for {mode:?} mode: q_a0={q_a0}, q_b0={q_b0}, q_ab={q_ab}, q_ba={q_ba}"
            )));
        }
        Ok(Self { q_a0, q_b0, q_ab, q_ba, mode })
    }

    pub fn competing(q_a0: f64, q_b0: f64, q_ab: f64, q_ba: f64) -> Result<Self> {
        Self::new(q_a0, q_b0, q_ab, q_ba, Mode::Competing)
    }

    pub fn complementary(q_a0: f64, q_b0: f64, q_ab: f64, q_ba: f64) -> Result<Self> {
        Self::new(q_a0, q_b0, q_ab, q_ba, Mode::Complementary)
    }

    /// First-contact adoption probability of `idea` given whether the other
    /// idea is currently adopted.
    pub fn adoption_prob(&self, idea: Idea, other_adopted: bool) -> f64 {
        match (idea, other_adopted) {
            (Idea::A, false) => self.q_a0,
            (Idea::A, true) => self.q_ab,
            (Idea::B, false) => self.q_b0,
            (Idea::B, true) => self.q_ba,
        }
    }
}

/// Reconsideration probabilities, fixed by the order-independence balance
/// equation `q_a0 + (1 - q_a0) q_b0 rho_a = (1 - q_b0) q_a0 + q_b0 q_ab`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RhoParams {
    pub rho_a: f64,
    pub rho_b: f64,
}

/// Solves the balance equation: `rho_a = (q_ab - q_a0) / (1 - q_a0)`, with
/// the convention `rho_a = 0` at `q_a0 = 1` (the suspended state is
/// unreachable there). Only defined for complementary parameters.
pub fn derive_rho(gap: &GapParams) -> Result<RhoParams> {
    if gap.mode != Mode::Complementary {
        return Err(Error::InvalidParams(
            "reconsideration probabilities are only defined for complementary ideas".into(),
        ));
    }
    let rho = |q0: f64, q_cond: f64| {
        if q_eq(q0, 1.0) || q_eq(q0, q_cond) {
            0.0
        } else {
            (q_cond - q0) / (1.0 - q0)
        }
    };
    Ok(RhoParams {
        rho_a: rho(gap.q_a0, gap.q_ab),
        rho_b: rho(gap.q_b0, gap.q_ba),
    })
}

/// Full Com-IC configuration. Reconsideration requires complementary mode;
/// `rho` is present exactly when reconsideration is on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComicConfig {
    pub gap: GapParams,
    pub reconsideration: bool,
    pub rho: Option<RhoParams>,
}

impl ComicConfig {
    pub fn new(gap: GapParams, reconsideration: bool) -> Result<Self> {
        let rho = if reconsideration {
            if gap.mode != Mode::Complementary {
                return Err(Error::InvalidParams(
                    "reconsideration requires complementary mode".into(),
                ));
            }
            Some(derive_rho(&gap)?)
        } else {
            None
        };
        Ok(Self { gap, reconsideration, rho })
    }

    pub fn rho(&self, idea: Idea) -> f64 {
        match (self.rho, idea) {
            (Some(r), Idea::A) => r.rho_a,
            (Some(r), Idea::B) => r.rho_b,
            (None, _) => 0.0,
        }
    }
}

/// Per-idea adoption probabilities of the One-Shot model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OneShotParams {
    pub q: Vec<f64>,
}

impl OneShotParams {
    pub fn new(q: Vec<f64>) -> Result<Self> {
        if q.is_empty() {
            return Err(Error::InvalidParams("One-Shot needs at least one idea".into()));
        }
        for (i, &qi) in q.iter().enumerate() {
            if !(0.0..=1.0).contains(&qi) {
                return Err(Error::InvalidParams(format!("q[{i}] = {qi} outside [0, 1]")));
            }
        }
        Ok(Self { q })
    }

    pub fn idea_count(&self) -> usize {
        self.q.len()
    }
}

/// A model choice shared by the Monte Carlo estimator and the CLI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Model {
    Comic(ComicConfig),
    OneShot(OneShotParams),
}

impl Model {
    pub fn idea_count(&self) -> usize {
        match self {
            Model::Comic(_) => 2,
            Model::OneShot(p) => p.idea_count(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gap_ordering_enforced() {
        assert!(GapParams::competing(0.5, 0.5, 0.25, 0.25).is_ok());
        assert!(GapParams::competing(0.5, 0.5, 0.6, 0.25).is_err());
        assert!(GapParams::complementary(0.2, 0.3, 0.5, 0.6).is_ok());
        assert!(GapParams::complementary(0.5, 0.3, 0.2, 0.6).is_err());
        assert!(GapParams::competing(1.1, 0.5, 0.2, 0.2).is_err());
    }

    #[test]
    fn rho_vanishes_without_boost() {
        let gap = GapParams::complementary(0.4, 0.3, 0.4, 0.5).unwrap();
        let rho = derive_rho(&gap).unwrap();
        assert_eq!(rho.rho_a, 0.0);
        assert!(rho.rho_b > 0.0);
    }

    #[test]
    fn rho_solves_balance_equation() {
        let gap = GapParams::complementary(0.2, 0.3, 0.6, 0.7).unwrap();
        let rho = derive_rho(&gap).unwrap();
        assert!((rho.rho_a - 0.5).abs() < 1e-15);
        // q_a0 + (1 - q_a0) q_b0 rho_a == (1 - q_b0) q_a0 + q_b0 q_ab
        let lhs = gap.q_a0 + (1.0 - gap.q_a0) * gap.q_b0 * rho.rho_a;
        let rhs = (1.0 - gap.q_b0) * gap.q_a0 + gap.q_b0 * gap.q_ab;
        assert!((lhs - rhs).abs() < 1e-15);
    }

    #[test]
    fn rho_zero_at_saturated_q() {
        let gap = GapParams::complementary(1.0, 0.3, 1.0, 0.5).unwrap();
        assert_eq!(derive_rho(&gap).unwrap().rho_a, 0.0);
    }

    #[test]
    fn rho_rejects_competing() {
        let gap = GapParams::competing(0.5, 0.5, 0.2, 0.2).unwrap();
        assert!(derive_rho(&gap).is_err());
    }

    #[test]
    fn reconsideration_requires_complementary() {
        let gap = GapParams::competing(0.5, 0.5, 0.2, 0.2).unwrap();
        assert!(ComicConfig::new(gap, true).is_err());
        assert!(ComicConfig::new(gap, false).is_ok());
    }

    #[test]
    fn oneshot_params_validated() {
        assert!(OneShotParams::new(vec![]).is_err());
        assert!(OneShotParams::new(vec![0.5, 1.2]).is_err());
        assert_eq!(OneShotParams::new(vec![0.5, 0.9]).unwrap().idea_count(), 2);
    }
}
