//! Mapping stages (m-stages) of the optimal linear-nearest-neighbour QFT
//! swap network.
//!
//! QFT-n runs in `2n - 3` m-stages indexed `0..=2n-4`. At m-stage `k` the
//! physical edges `(j, j+1)` for `j` in the relevant index set `N_k` carry one
//! controlled-phase gate each and are then swapped. The mapping after the
//! last m-stage is the full index reversal.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::{normalize_pair, Error, QubitPair, Result};

/// Number of m-stages of QFT-n.
pub fn stage_count(n: usize) -> usize {
    2 * n - 3
}

fn check_stage(k: usize, n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidCircuitSize { n });
    }
    if k > 2 * n - 4 {
        return Err(Error::StageOutOfRange { k, n });
    }
    Ok(())
}

/// `N_k`, sorted ascending.
///
/// For `k <= n-2` this is `{k, k-2, ..., k mod 2}`; later stages mirror
/// earlier ones through `N_k = N_{2n-4-k}`.
pub fn relevant_indices(k: usize, n: usize) -> Result<Vec<usize>> {
    check_stage(k, n)?;
    let base = if k <= n - 2 { k } else { 2 * n - 4 - k };
    Ok((base % 2..=base).step_by(2).collect())
}

/// `E_k` together with the index set it was derived from.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelevantEdgeSet {
    pub k: usize,
    pub indices: Vec<usize>,
}

impl RelevantEdgeSet {
    /// Physical edges `(j, j+1)`, in ascending order of `j`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.indices.iter().map(|&j| (j, j + 1))
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

pub fn relevant_edges(k: usize, n: usize) -> Result<RelevantEdgeSet> {
    Ok(RelevantEdgeSet {
        k,
        indices: relevant_indices(k, n)?,
    })
}

/// Bijection between logical qubits and physical line positions.
#[derive(Clone, PartialEq, Eq)]
pub struct QubitMapping {
    forward: Vec<usize>,
    inverse: Vec<usize>,
}

impl QubitMapping {
    pub fn identity(n: usize) -> Self {
        let forward: Vec<usize> = (0..n).collect();
        Self {
            inverse: forward.clone(),
            forward,
        }
    }

    /// Builds a mapping from its forward table; `None` if it is not a
    /// permutation of `0..len`.
    pub fn from_forward(forward: Vec<usize>) -> Option<Self> {
        let n = forward.len();
        let mut inverse = vec![usize::MAX; n];
        for (logical, &physical) in forward.iter().enumerate() {
            if physical >= n || inverse[physical] != usize::MAX {
                return None;
            }
            inverse[physical] = logical;
        }
        Some(Self { forward, inverse })
    }

    pub fn len(&self) -> usize {
        self.forward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forward.is_empty()
    }

    /// Physical position of a logical qubit.
    pub fn forward(&self, logical: usize) -> usize {
        self.forward[logical]
    }

    /// Logical qubit sitting at a physical position.
    pub fn inverse(&self, physical: usize) -> usize {
        self.inverse[physical]
    }

    pub fn forward_table(&self) -> &[usize] {
        &self.forward
    }
}

impl fmt::Debug for QubitMapping {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "QubitMapping{:?}", self.forward)
    }
}

/// `τ_0`: logical qubit `q_i` on physical position `Q_i`.
pub fn initial_mapping(n: usize) -> QubitMapping {
    QubitMapping::identity(n)
}

/// Logical pairs executed at m-stage `k` under `mapping` (which must be `τ_k`).
pub fn stage_gates(k: usize, mapping: &QubitMapping) -> Result<Vec<QubitPair>> {
    let edges = relevant_edges(k, mapping.len())?;
    Ok(edges
        .edges()
        .map(|(lo, hi)| normalize_pair(mapping.inverse(lo), mapping.inverse(hi)))
        .collect())
}

/// `τ_{k+1}` from `τ_k`: exchange the occupants of every relevant edge.
pub fn apply_stage_swaps(mapping: &QubitMapping, edges: &RelevantEdgeSet) -> Result<QubitMapping> {
    let n = mapping.len();
    let mut touched = vec![false; n];
    let mut inverse = mapping.inverse.clone();
    for (lo, hi) in edges.edges() {
        if hi >= n {
            return Err(Error::Internal(format!(
                "edge ({lo}, {hi}) outside line of {n}"
            )));
        }
        if touched[lo] || touched[hi] {
            return Err(Error::Internal(format!(
                "overlapping relevant edges at ({lo}, {hi}) in m-stage {}",
                edges.k
            )));
        }
        touched[lo] = true;
        touched[hi] = true;
        inverse.swap(lo, hi);
    }
    let mut forward = vec![0; n];
    for (physical, &logical) in inverse.iter().enumerate() {
        forward[logical] = physical;
    }
    Ok(QubitMapping { forward, inverse })
}

/// One m-stage of the network: its relevant edges and the mapping in force
/// when its gates execute.
#[derive(Clone, Debug)]
pub struct MStage {
    pub edges: RelevantEdgeSet,
    pub mapping: QubitMapping,
}

impl MStage {
    pub fn k(&self) -> usize {
        self.edges.k
    }

    /// Logical pairs on the relevant edges, aligned with `edges.indices`.
    pub fn gates(&self) -> Vec<QubitPair> {
        self.edges
            .edges()
            .map(|(lo, hi)| normalize_pair(self.mapping.inverse(lo), self.mapping.inverse(hi)))
            .collect()
    }
}

/// Replays the whole swap network: all m-stages plus the final mapping.
pub fn network(n: usize) -> Result<(Vec<MStage>, QubitMapping)> {
    if n < 2 {
        return Err(Error::InvalidCircuitSize { n });
    }
    let mut mapping = initial_mapping(n);
    let mut stages = Vec::with_capacity(stage_count(n));
    for k in 0..stage_count(n) {
        let edges = relevant_edges(k, n)?;
        let next = apply_stage_swaps(&mapping, &edges)?;
        stages.push(MStage { edges, mapping });
        mapping = next;
    }
    Ok((stages, mapping))
}
