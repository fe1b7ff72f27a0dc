//! Input circuits: layered QFT (controlled-phase and CZ flavors) and random
//! MaxCut-QAOA instances laid onto the QFT layer skeleton.
//!
//! Single-qubit gates are not modeled; they cost no atom movement.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::maslov;
use crate::{normalize_pair, Error, QubitPair, Result};

/// Tag written into instance files so the edge list can be regenerated.
pub const RNG_ALGORITHM: &str = "chacha8/seed_from_u64/rand-0.8-f64";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GateFlavor {
    Cp,
    Cz,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TwoQubitGate {
    pub a: usize,
    pub b: usize,
}

impl TwoQubitGate {
    /// Endpoints are stored with `a < b`.
    pub fn new(a: usize, b: usize) -> Result<Self> {
        if a == b {
            return Err(Error::Internal(format!(
                "two-qubit gate on a single qubit {a}"
            )));
        }
        let (a, b) = normalize_pair(a, b);
        Ok(Self { a, b })
    }

    pub fn pair(&self) -> QubitPair {
        (self.a, self.b)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayeredCircuit {
    n: usize,
    flavor: GateFlavor,
    layers: Vec<Vec<TwoQubitGate>>,
}

impl LayeredCircuit {
    /// Checks qubit range and per-layer disjointness; gates inside a layer
    /// are kept sorted.
    pub fn new(n: usize, flavor: GateFlavor, mut layers: Vec<Vec<TwoQubitGate>>) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidCircuitSize { n });
        }
        for (i, layer) in layers.iter_mut().enumerate() {
            layer.sort();
            let mut used = vec![false; n];
            for g in layer.iter() {
                if g.b >= n {
                    return Err(Error::Internal(format!(
                        "layer {i}: qubit {} >= n = {n}",
                        g.b
                    )));
                }
                if used[g.a] || used[g.b] {
                    return Err(Error::Internal(format!(
                        "layer {i}: qubit reused by gate ({}, {})",
                        g.a, g.b
                    )));
                }
                used[g.a] = true;
                used[g.b] = true;
            }
        }
        Ok(Self { n, flavor, layers })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn flavor(&self) -> GateFlavor {
        self.flavor
    }

    pub fn layers(&self) -> &[Vec<TwoQubitGate>] {
        &self.layers
    }

    pub fn gate_count(&self) -> usize {
        self.layers.iter().map(Vec::len).sum()
    }

    /// Layers as sorted pair lists, the form the verifier compares against.
    pub fn pair_layers(&self) -> Vec<Vec<QubitPair>> {
        self.layers
            .iter()
            .map(|l| l.iter().map(TwoQubitGate::pair).collect())
            .collect()
    }
}

/// Controlled-phase layers of QFT-n: layer `k` holds the gates of m-stage `k`.
pub fn build_qft_layers(n: usize) -> Result<LayeredCircuit> {
    let (stages, _) = maslov::network(n)?;
    let layers = stages
        .iter()
        .map(|s| {
            s.gates()
                .into_iter()
                .map(|(a, b)| TwoQubitGate::new(a, b))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    LayeredCircuit::new(n, GateFlavor::Cp, layers)
}

/// Each CP layer becomes two identical consecutive CZ layers.
pub fn expand_cp_to_cz(c: &LayeredCircuit) -> Result<LayeredCircuit> {
    if c.flavor != GateFlavor::Cp {
        return Err(Error::Internal(
            "expand_cp_to_cz needs a CP-flavor circuit".into(),
        ));
    }
    let layers = c
        .layers
        .iter()
        .flat_map(|l| [l.clone(), l.clone()])
        .collect();
    LayeredCircuit::new(c.n, GateFlavor::Cz, layers)
}

/// A MaxCut-QAOA cost layer: one CZ per retained edge of the complete graph.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QaoaInstance {
    pub n: usize,
    pub theta: f64,
    pub seed: u64,
    pub rng: String,
    pub edges: Vec<QubitPair>,
}

/// Keeps each pair `(i, j)`, `i < j`, visited lexicographically, iff a fresh
/// uniform deviate in `[0, 1)` falls below `theta / 100`.
pub fn gen_maxcut_qaoa(n: usize, theta: f64, seed: u64) -> Result<QaoaInstance> {
    if n < 2 {
        return Err(Error::InvalidCircuitSize { n });
    }
    if !(0.0..=100.0).contains(&theta) {
        return Err(Error::ParameterOutOfRange {
            name: "theta",
            value: theta.to_string(),
        });
    }
    let p = theta / 100.0;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let u: f64 = rng.gen();
            if u < p {
                edges.push((i, j));
            }
        }
    }
    Ok(QaoaInstance {
        n,
        theta,
        seed,
        rng: RNG_ALGORITHM.to_string(),
        edges,
    })
}

impl QaoaInstance {
    /// Validates a deserialized instance; the edge list is authoritative.
    pub fn check(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidCircuitSize { n: self.n });
        }
        let mut seen = BTreeSet::new();
        for &(i, j) in &self.edges {
            if i >= j || j >= self.n || !seen.insert((i, j)) {
                return Err(Error::ParameterOutOfRange {
                    name: "edges",
                    value: format!("({i}, {j})"),
                });
            }
        }
        Ok(())
    }
}

/// Present gates and absent slots of one m-stage.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EmbeddedStage {
    pub k: usize,
    /// `C_k`: retained edges executed at this m-stage.
    pub present: Vec<QubitPair>,
    /// `C'_k \ C_k`: QFT slots with no gate; their atoms still move.
    pub absent: Vec<QubitPair>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct QaoaEmbedding {
    pub n: usize,
    pub stages: Vec<EmbeddedStage>,
}

impl QaoaEmbedding {
    /// Present gates as a CZ circuit with one layer per m-stage.
    pub fn circuit(&self) -> Result<LayeredCircuit> {
        let layers = self
            .stages
            .iter()
            .map(|s| {
                s.present
                    .iter()
                    .map(|&(a, b)| TwoQubitGate::new(a, b))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        LayeredCircuit::new(self.n, GateFlavor::Cz, layers)
    }
}

/// Assigns every retained edge to the m-stage whose swap network brings its
/// two qubits together.
pub fn embed_qaoa_layers(inst: &QaoaInstance) -> Result<QaoaEmbedding> {
    inst.check()?;
    let retained: BTreeSet<QubitPair> = inst.edges.iter().copied().collect();
    let (stages, _) = maslov::network(inst.n)?;
    let stages = stages
        .iter()
        .map(|s| {
            let (mut present, mut absent): (Vec<_>, Vec<_>) =
                s.gates().into_iter().partition(|p| retained.contains(p));
            present.sort();
            absent.sort();
            EmbeddedStage {
                k: s.k(),
                present,
                absent,
            }
        })
        .collect();
    Ok(QaoaEmbedding { n: inst.n, stages })
}
