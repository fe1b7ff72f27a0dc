use thiserror::Error;

use crate::layout::ZigzagViolation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid circuit size: n = {n} (need n >= 2)")]
    InvalidCircuitSize { n: usize },

    #[error("parameter `{name}` out of range: {value}")]
    ParameterOutOfRange { name: &'static str, value: String },

    #[error("m-stage {k} out of range for n = {n} (valid: 0..={max})", max = 2 * n - 4)]
    StageOutOfRange { k: usize, n: usize },

    #[error("internal consistency: {0}")]
    Internal(String),

    #[error("invalid folding: {0}")]
    InvalidFolding(ZigzagViolation),

    #[error("folding has {got} points but the circuit needs {expected}")]
    FoldingSize { expected: usize, got: usize },

    #[error(
        "grid {rows}x{cols} too small for n = {n}; smallest zigzag grid is {min_side}x{min_side}"
    )]
    GridTooSmall {
        rows: usize,
        cols: usize,
        n: usize,
        min_side: usize,
    },

    #[error("decoherence overflow: busy time {busy_s} s >= T2 = {t2_s} s")]
    DecoherenceOverflow { busy_s: f64, t2_s: f64 },

    #[error("inconsistent metrics: |Q|*S = {qs} < 2*g2 = {twice_g2}")]
    InconsistentMetrics { qs: u64, twice_g2: u64 },

    #[error("malformed schedule: {0}")]
    Parse(#[from] serde_json::Error),
}
