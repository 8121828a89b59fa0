use thiserror::Error;

/// Errors produced by graph parsing, model validation, and the exact oracles.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("invalid seeds: {0}")]
    InvalidSeeds(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("node {node} out of range (graph has {node_count} nodes)")]
    NodeOutOfRange { node: usize, node_count: usize },

    #[error("enumeration budget exceeded: reached {reached} branches (budget {budget})")]
    BudgetExceeded { reached: u64, budget: u64 },
}

pub type Result<T> = std::result::Result<T, Error>;
