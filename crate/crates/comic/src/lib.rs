//! Two-idea and m-idea influence propagation on probabilistic directed
//! graphs: the Com-IC model (competing or complementary ideas, optional
//! reconsideration) and the One-Shot model, with exact spread oracles for
//! small instances, Monte Carlo estimation, greedy seed selection, and a lab
//! for verifying where influence spread is submodular in the seed sets.

pub mod coins;
pub mod engine;
pub mod error;
pub mod exact;
pub mod graph;
pub mod model;
pub mod montecarlo;
pub mod oneshot;
pub mod submod;
pub mod threshold;

pub use engine::{simulate_comic, simulate_comic_traced, ComicOutcome};
pub use error::{Error, Result};
pub use exact::{exact_sigma_comic, exact_sigma_oneshot, SigmaMethod, SigmaResult, DEFAULT_BUDGET};
pub use graph::{parse_graph, DirectedGraph, NodeId, SeedAssignment};
pub use model::{derive_rho, ComicConfig, GapParams, Idea, Mode, Model, OneShotParams, RhoParams};
pub use oneshot::{simulate_oneshot, simulate_oneshot_traced, OneShotOutcome};
pub use threshold::threshold_enum_sigma;
