//! Movement-optimal compilation of QFT and MaxCut-QAOA circuits onto
//! dynamically reconfigurable neutral-atom arrays.
//!
//! The pipeline is:
//!
//! ```text
//! circuit ──► maslov (m-stages, relevant edges, mappings)
//!                │
//! layout ────────┼──► compiler ──► Schedule ──► verifier ──► Metrics ──► fidelity
//! (linear, Φ_w)  │
//! ```
//!
//! Every QFT schedule produced here uses exactly `8n - 13` big-move batches
//! (with the final swap dropped), which is the movement lower bound.

pub mod circuit;
pub mod compiler;
pub mod error;
pub mod exact;
pub mod fidelity;
pub mod layout;
pub mod maslov;
pub mod schedule;
pub mod verifier;

pub use error::{Error, Result};

/// Ordered logical qubit pair `(a, b)` with `a < b`.
pub type QubitPair = (usize, usize);

/// Normalizes an unordered pair so that the smaller index comes first.
pub fn normalize_pair(a: usize, b: usize) -> QubitPair {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}
