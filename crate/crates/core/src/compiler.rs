//! Movement-level compilation of QFT-n and MaxCut-QAOA onto a line or a
//! zigzag folding.
//!
//! Every m-stage of the swap network touches a set of physical edges that
//! all share one orientation on the layout. For each edge the atom on the
//! left (lower) site is the mover and walks one unit right (up) onto its
//! partner's site. Per m-stage of QFT:
//!
//! 1. meet, pulse, restore (first CZ layer),
//! 2. meet, pulse, swap-separate (second CZ layer).
//!
//! That is four big-move batches per m-stage. A co-located mover rests `δ`
//! short of the partner's site centre. Swap-separate lifts the partner `δ`
//! off the axis, carries it one unit back onto the mover's old site, drops
//! it, and nudges the mover onto the vacated site centre.

use serde::Serialize;

use crate::circuit::{embed_qaoa_layers, QaoaInstance};
use crate::exact::{Pos, Rational};
use crate::layout::{fold_for_n, linear_layout, Architecture, GridPoint, ZigzagFolding};
use crate::maslov::{self, MStage};
use crate::schedule::{
    AtomMove, Axis, CircuitSpec, MoveBatch, MoveKind, Placement, RydbergPulse, Schedule,
    ScheduleMetadata, Stage, StageMode,
};
use crate::{normalize_pair, Error, QubitPair, Result};

/// Lattice spacing of the default architecture, micrometres.
pub const DEFAULT_UNIT_DISTANCE_UM: f64 = 15.0;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CompileOptions {
    /// Skip the separate step after the very last CZ layer.
    pub drop_final_swap: bool,
    /// Offset length in lattice units, `0 < δ < 1/2`.
    #[serde(with = "crate::exact::as_string")]
    pub delta: Rational,
    pub unit_distance_um: f64,
}

impl Default for CompileOptions {
    fn default() -> Self {
        Self {
            drop_final_swap: true,
            delta: Rational::new(1, 4),
            unit_distance_um: DEFAULT_UNIT_DISTANCE_UM,
        }
    }
}

impl CompileOptions {
    fn check(&self) -> Result<()> {
        if self.delta <= Rational::from_integer(0) || self.delta >= Rational::new(1, 2) {
            return Err(Error::ParameterOutOfRange {
                name: "delta",
                value: self.delta.to_string(),
            });
        }
        Ok(())
    }
}

/// Where line position `j` lives on the hardware, plus the hardware itself.
#[derive(Clone, Debug, PartialEq)]
pub struct Layout {
    strategy: String,
    path: Vec<GridPoint>,
    architecture: Architecture,
}

impl Layout {
    /// The `1 x n` line.
    pub fn linear(n: usize, unit_distance_um: f64) -> Result<Self> {
        Ok(Self {
            strategy: "linear".into(),
            path: linear_layout(n)?,
            architecture: Architecture::new(1, n, unit_distance_um)?,
        })
    }

    /// A zigzag folding of exactly `n` points in its bounding box.
    pub fn zigzag(n: usize, folding: &ZigzagFolding, unit_distance_um: f64) -> Result<Self> {
        if folding.len() != n {
            return Err(Error::FoldingSize {
                expected: n,
                got: folding.len(),
            });
        }
        let (rows, cols) = folding.bounding_dims();
        if folding.path().iter().any(|p| p.x < 0 || p.y < 0) {
            return Err(Error::ParameterOutOfRange {
                name: "folding",
                value: "negative coordinates".into(),
            });
        }
        Ok(Self {
            strategy: "zigzag".into(),
            path: folding.path().to_vec(),
            architecture: Architecture::new(rows, cols, unit_distance_um)?,
        })
    }

    /// The standard space-efficient folding for `n` qubits on its full
    /// `(2m+2) x (2m+2)` grid.
    pub fn zigzag_for_n(n: usize, unit_distance_um: f64) -> Result<Self> {
        let fold = fold_for_n(n)?;
        Self::zigzag(n, &fold.folding, unit_distance_um)?.in_grid(fold.side, fold.side)
    }

    /// Places the layout on a larger `rows x cols` array.
    pub fn in_grid(mut self, rows: usize, cols: usize) -> Result<Self> {
        let (need_rows, need_cols) = (self.architecture.rows, self.architecture.cols);
        if rows < need_rows || cols < need_cols {
            let n = self.path.len();
            let min_side = fold_for_n(n.max(2))?.side;
            return Err(Error::GridTooSmall {
                rows,
                cols,
                n,
                min_side,
            });
        }
        self.architecture = Architecture::new(rows, cols, self.architecture.unit_distance_um)?;
        Ok(self)
    }

    pub fn with_strategy(mut self, name: &str) -> Self {
        self.strategy = name.to_string();
        self
    }

    pub fn n(&self) -> usize {
        self.path.len()
    }

    pub fn path(&self) -> &[GridPoint] {
        &self.path
    }

    pub fn architecture(&self) -> &Architecture {
        &self.architecture
    }

    pub fn strategy(&self) -> &str {
        &self.strategy
    }
}

/// One relevant edge realized on the layout.
#[derive(Clone, Copy, Debug)]
struct EdgeMove {
    mover: usize,
    partner: usize,
    mover_site: GridPoint,
    partner_site: GridPoint,
}

impl EdgeMove {
    fn pair(&self) -> QubitPair {
        normalize_pair(self.mover, self.partner)
    }
}

fn realize_edges(layout: &Layout, stage: &MStage) -> Result<(Axis, Vec<EdgeMove>)> {
    let mut axis = None;
    let mut out = Vec::with_capacity(stage.edges.len());
    for (lo, hi) in stage.edges.edges() {
        let (s0, s1) = (layout.path[lo], layout.path[hi]);
        let (a0, a1) = (stage.mapping.inverse(lo), stage.mapping.inverse(hi));
        let this_axis = if s0.y == s1.y { Axis::X } else { Axis::Y };
        if *axis.get_or_insert(this_axis) != this_axis {
            return Err(Error::Internal(format!(
                "m-stage {}: relevant edges with mixed orientation",
                stage.k()
            )));
        }
        let c0 = this_axis.component(&Pos::from(s0));
        let c1 = this_axis.component(&Pos::from(s1));
        out.push(if c0 < c1 {
            EdgeMove {
                mover: a0,
                partner: a1,
                mover_site: s0,
                partner_site: s1,
            }
        } else {
            EdgeMove {
                mover: a1,
                partner: a0,
                mover_site: s1,
                partner_site: s0,
            }
        });
    }
    let axis =
        axis.ok_or_else(|| Error::Internal(format!("m-stage {} has no edges", stage.k())))?;
    Ok((axis, out))
}

struct Choreography {
    axis: Axis,
    delta: Rational,
}

impl Choreography {
    fn along(&self) -> Pos {
        let u = self.axis.unit();
        Pos::new(u.x * self.delta, u.y * self.delta)
    }

    fn across(&self) -> Pos {
        let u = self.axis.other().unit();
        Pos::new(u.x * self.delta, u.y * self.delta)
    }

    /// Where a mover rests while co-located with its partner.
    fn meet_point(&self, e: &EdgeMove) -> Pos {
        Pos::from(e.partner_site) - self.along()
    }

    fn batch(
        &self,
        kind: MoveKind,
        axis: Axis,
        direction: i8,
        moves: Vec<AtomMove>,
    ) -> Option<MoveBatch> {
        (!moves.is_empty()).then_some(MoveBatch {
            kind,
            axis,
            direction,
            moves,
        })
    }

    fn meet(&self, edges: &[EdgeMove]) -> Option<MoveBatch> {
        let moves = edges
            .iter()
            .map(|e| AtomMove {
                atom: e.mover,
                from: Pos::from(e.mover_site),
                to: self.meet_point(e),
            })
            .collect();
        self.batch(MoveKind::Big, self.axis, 1, moves)
    }

    fn restore(&self, edges: &[EdgeMove]) -> Option<MoveBatch> {
        let moves = edges
            .iter()
            .map(|e| AtomMove {
                atom: e.mover,
                from: self.meet_point(e),
                to: Pos::from(e.mover_site),
            })
            .collect();
        self.batch(MoveKind::Big, self.axis, -1, moves)
    }

    fn swap_separate(&self, edges: &[EdgeMove]) -> Vec<MoveBatch> {
        let lift = self.across();
        let per_edge = |f: &dyn Fn(&EdgeMove) -> AtomMove| edges.iter().map(f).collect::<Vec<_>>();
        let side = self.axis.other();
        [
            self.batch(
                MoveKind::Offset,
                side,
                1,
                per_edge(&|e| AtomMove {
                    atom: e.partner,
                    from: Pos::from(e.partner_site),
                    to: Pos::from(e.partner_site) + lift,
                }),
            ),
            self.batch(
                MoveKind::Big,
                self.axis,
                -1,
                per_edge(&|e| AtomMove {
                    atom: e.partner,
                    from: Pos::from(e.partner_site) + lift,
                    to: Pos::from(e.mover_site) + lift,
                }),
            ),
            self.batch(
                MoveKind::Offset,
                side,
                -1,
                per_edge(&|e| AtomMove {
                    atom: e.partner,
                    from: Pos::from(e.mover_site) + lift,
                    to: Pos::from(e.mover_site),
                }),
            ),
            self.batch(
                MoveKind::Offset,
                self.axis,
                1,
                per_edge(&|e| AtomMove {
                    atom: e.mover,
                    from: self.meet_point(e),
                    to: Pos::from(e.partner_site),
                }),
            ),
        ]
        .into_iter()
        .flatten()
        .collect()
    }
}

fn pulse(edges: &[EdgeMove]) -> Option<RydbergPulse> {
    if edges.is_empty() {
        return None;
    }
    let mut pairs: Vec<QubitPair> = edges.iter().map(EdgeMove::pair).collect();
    pairs.sort();
    Some(RydbergPulse { pairs })
}

fn initial_placement(layout: &Layout) -> Vec<Placement> {
    layout
        .path
        .iter()
        .enumerate()
        .map(|(atom, &site)| Placement { atom, site })
        .collect()
}

fn assemble(
    layout: &Layout,
    opts: &CompileOptions,
    circuit: CircuitSpec,
    stages: Vec<Stage>,
) -> Schedule {
    Schedule {
        metadata: ScheduleMetadata {
            circuit,
            strategy: layout.strategy.clone(),
            drop_final_swap: opts.drop_final_swap,
            delta: opts.delta,
        },
        architecture: layout.architecture.clone(),
        initial_placement: initial_placement(layout),
        stages,
    }
}

/// QFT-n with two CZ layers per m-stage on any layout whose path is a line
/// or a zigzag folding.
pub fn compile_qft(layout: &Layout, opts: &CompileOptions) -> Result<Schedule> {
    opts.check()?;
    let n = layout.n();
    let (network, _) = maslov::network(n)?;
    let last = network.len() - 1;
    let mut stages = Vec::with_capacity(2 * network.len());
    for ms in &network {
        let (axis, edges) = realize_edges(layout, ms)?;
        let ch = Choreography {
            axis,
            delta: opts.delta,
        };
        stages.push(Stage {
            index: stages.len(),
            m_stage: ms.k(),
            mode: StageMode::Restore,
            pre_moves: ch.meet(&edges).into_iter().collect(),
            pulse: pulse(&edges),
            post_moves: ch.restore(&edges).into_iter().collect(),
        });
        let final_hold = opts.drop_final_swap && ms.k() == last;
        stages.push(Stage {
            index: stages.len(),
            m_stage: ms.k(),
            mode: if final_hold {
                StageMode::Final
            } else {
                StageMode::Swap
            },
            pre_moves: ch.meet(&edges).into_iter().collect(),
            pulse: pulse(&edges),
            post_moves: if final_hold {
                Vec::new()
            } else {
                ch.swap_separate(&edges)
            },
        });
    }
    Ok(assemble(layout, opts, CircuitSpec::Qft { n }, stages))
}

/// Linear Path: QFT-n on the `1 x n` line.
pub fn compile_linear(n: usize, opts: &CompileOptions) -> Result<Schedule> {
    compile_qft(&Layout::linear(n, opts.unit_distance_um)?, opts)
}

/// Zigzag Path: QFT-n on a zigzag folding of exactly `n` points.
pub fn compile_zigzag(
    n: usize,
    folding: &ZigzagFolding,
    opts: &CompileOptions,
) -> Result<Schedule> {
    compile_qft(&Layout::zigzag(n, folding, opts.unit_distance_um)?, opts)
}

/// The QFT-n skeleton with one CZ per pair: meet, pulse, swap-separate per
/// m-stage. The final swap is always kept.
pub fn compile_skeleton(layout: &Layout, opts: &CompileOptions) -> Result<Schedule> {
    opts.check()?;
    let n = layout.n();
    let (network, _) = maslov::network(n)?;
    let mut stages = Vec::with_capacity(network.len());
    for ms in &network {
        let (axis, edges) = realize_edges(layout, ms)?;
        let ch = Choreography {
            axis,
            delta: opts.delta,
        };
        stages.push(Stage {
            index: stages.len(),
            m_stage: ms.k(),
            mode: StageMode::Swap,
            pre_moves: ch.meet(&edges).into_iter().collect(),
            pulse: pulse(&edges),
            post_moves: ch.swap_separate(&edges),
        });
    }
    let opts = CompileOptions {
        drop_final_swap: false,
        ..opts.clone()
    };
    Ok(assemble(
        layout,
        &opts,
        CircuitSpec::QftSkeleton { n },
        stages,
    ))
}

/// Split-meet compilation of a sparse CZ circuit along the QFT skeleton.
///
/// Per m-stage: present pairs meet and interact, absent slots then meet
/// without a pulse, and every slot swaps, so the mapping follows the QFT
/// network exactly. The final swap is always kept.
pub fn compile_qaoa(
    inst: &QaoaInstance,
    layout: &Layout,
    opts: &CompileOptions,
) -> Result<Schedule> {
    opts.check()?;
    if layout.n() != inst.n {
        return Err(Error::FoldingSize {
            expected: inst.n,
            got: layout.n(),
        });
    }
    let embedding = embed_qaoa_layers(inst)?;
    let (network, _) = maslov::network(inst.n)?;
    let mut stages = Vec::with_capacity(network.len());
    for (ms, emb) in network.iter().zip(&embedding.stages) {
        let (axis, edges) = realize_edges(layout, ms)?;
        if edges.is_empty() {
            continue;
        }
        let ch = Choreography {
            axis,
            delta: opts.delta,
        };
        let (present, absent): (Vec<EdgeMove>, Vec<EdgeMove>) =
            edges.iter().partition(|e| emb.present.contains(&e.pair()));
        debug_assert_eq!(absent.len(), emb.absent.len());
        let mut post_moves: Vec<MoveBatch> = ch.meet(&absent).into_iter().collect();
        post_moves.extend(ch.swap_separate(&edges));
        stages.push(Stage {
            index: stages.len(),
            m_stage: ms.k(),
            mode: StageMode::QaoaSplit,
            pre_moves: ch.meet(&present).into_iter().collect(),
            pulse: pulse(&present),
            post_moves,
        });
    }
    let opts = CompileOptions {
        drop_final_swap: false,
        ..opts.clone()
    };
    Ok(assemble(
        layout,
        &opts,
        CircuitSpec::Qaoa {
            instance: inst.clone(),
        },
        stages,
    ))
}

/// Number of big-move batches in a schedule.
pub fn big_batch_count(s: &Schedule) -> usize {
    s.stages
        .iter()
        .flat_map(Stage::batches)
        .filter(|b| b.kind == MoveKind::Big)
        .count()
}
