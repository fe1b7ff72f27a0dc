//! Movement schedules and their JSON representation.
//!
//! A schedule is an initial placement plus one [`Stage`] per CZ layer. Each
//! stage runs its `pre_moves` batches, fires at most one global Rydberg
//! pulse, then runs its `post_moves`. All coordinates are exact rationals in
//! units of the lattice spacing.

use serde::{Deserialize, Serialize};

use crate::circuit::QaoaInstance;
use crate::exact::{self, Pos, Rational};
use crate::layout::{Architecture, GridPoint};
use crate::QubitPair;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
}

impl Axis {
    pub fn unit(self) -> Pos {
        match self {
            Axis::X => Pos::from_ints(1, 0),
            Axis::Y => Pos::from_ints(0, 1),
        }
    }

    pub fn other(self) -> Axis {
        match self {
            Axis::X => Axis::Y,
            Axis::Y => Axis::X,
        }
    }

    pub fn component(self, p: &Pos) -> Rational {
        match self {
            Axis::X => p.x,
            Axis::Y => p.y,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MoveKind {
    /// Site-to-site relocation by one lattice unit.
    Big,
    /// Sub-unit nudge that keeps the atom on its site.
    Offset,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AtomMove {
    pub atom: usize,
    pub from: Pos,
    pub to: Pos,
}

/// Moves executed in parallel by the mobile trap array.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MoveBatch {
    pub kind: MoveKind,
    pub axis: Axis,
    pub direction: i8,
    pub moves: Vec<AtomMove>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RydbergPulse {
    pub pairs: Vec<QubitPair>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StageMode {
    /// Atoms return to their sites after the pulse.
    Restore,
    /// Interacting atoms exchange sites after the pulse.
    Swap,
    /// Split meet for sparse circuits: present pairs meet and interact, then
    /// absent slots meet, then every slot swaps.
    QaoaSplit,
    /// Last layer with the separate step dropped; atoms stay co-located.
    Final,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stage {
    pub index: usize,
    pub m_stage: usize,
    pub mode: StageMode,
    pub pre_moves: Vec<MoveBatch>,
    pub pulse: Option<RydbergPulse>,
    pub post_moves: Vec<MoveBatch>,
}

impl Stage {
    pub fn batches(&self) -> impl Iterator<Item = &MoveBatch> {
        self.pre_moves.iter().chain(self.post_moves.iter())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Placement {
    pub atom: usize,
    pub site: GridPoint,
}

/// Circuit a schedule was compiled from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CircuitSpec {
    /// QFT-n with each controlled phase expanded to two CZ layers.
    Qft {
        n: usize,
    },
    /// QFT-n skeleton with a single CZ per pair.
    QftSkeleton {
        n: usize,
    },
    Qaoa {
        instance: QaoaInstance,
    },
    /// Hand-written or foreign schedule; no reference circuit.
    Opaque,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduleMetadata {
    pub circuit: CircuitSpec,
    pub strategy: String,
    pub drop_final_swap: bool,
    #[serde(with = "exact::as_string")]
    pub delta: Rational,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub metadata: ScheduleMetadata,
    pub architecture: Architecture,
    pub initial_placement: Vec<Placement>,
    pub stages: Vec<Stage>,
}

impl Schedule {
    pub fn from_json(s: &str) -> crate::Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("schedule serialization is infallible")
    }
}
