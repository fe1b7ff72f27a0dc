//! Replays a schedule against the array's physical rules and derives the
//! movement and fidelity-relevant metrics.
//!
//! Rules checked, per batch: every move follows the batch axis and
//! direction, big moves relocate exactly one site, offset moves stay on their
//! site, destinations are unique, the relative order of moving atoms along
//! the axis is kept, no atom lands on or passes through another, and all
//! sites stay inside the array. At each pulse the set of co-located pairs
//! must equal the pulse's pair list. Between stages every atom has a site of
//! its own.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use crate::circuit::{build_qft_layers, expand_cp_to_cz};
use crate::exact::{self, Pos, Rational};
use crate::layout::GridPoint;
use crate::schedule::{
    AtomMove, Axis, CircuitSpec, MoveBatch, MoveKind, Schedule, Stage, StageMode,
};
use crate::{normalize_pair, QubitPair, Result};

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Metrics {
    /// Executed CZ gates.
    pub g2: u64,
    /// `|Q|`.
    pub qubit_count: u64,
    /// `S`: Rydberg pulses.
    pub stages: u64,
    /// Big-move batches.
    pub big_move_count: u64,
    /// Sum over big batches of the largest site displacement, grid units.
    #[serde(with = "exact::as_f64")]
    pub big_move_distance: Rational,
    /// Individual offset moves.
    pub offset_count: u64,
    /// Sum of individual offset move lengths, grid units.
    #[serde(with = "exact::as_f64")]
    pub offset_distance: Rational,
    /// Pick-ups and drop-offs: two per atom per big move.
    pub n_trans: u64,
}

impl Metrics {
    /// Adds every additive field of `other` (all but `qubit_count`).
    pub fn accumulate(&mut self, other: &Metrics) {
        self.g2 += other.g2;
        self.stages += other.stages;
        self.big_move_count += other.big_move_count;
        self.big_move_distance += other.big_move_distance;
        self.offset_count += other.offset_count;
        self.offset_distance += other.offset_distance;
        self.n_trans += other.n_trans;
    }

    pub fn row(&self, n: usize, strategy: &str) -> MetricsRow {
        MetricsRow {
            n,
            strategy: strategy.to_string(),
            g2: self.g2,
            q: self.qubit_count,
            s: self.stages,
            n_trans: self.n_trans,
            big_count: self.big_move_count,
            big_dist: exact::to_f64(&self.big_move_distance),
            offset_count: self.offset_count,
            offset_dist: exact::to_f64(&self.offset_distance),
        }
    }
}

/// CSV row layout: `n,strategy,g2,Q,S,n_trans,big_count,big_dist,offset_count,offset_dist`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MetricsRow {
    pub n: usize,
    pub strategy: String,
    pub g2: u64,
    #[serde(rename = "Q")]
    pub q: u64,
    #[serde(rename = "S")]
    pub s: u64,
    pub n_trans: u64,
    pub big_count: u64,
    pub big_dist: f64,
    pub offset_count: u64,
    pub offset_dist: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rule {
    UnknownAtom,
    RepeatedAtom,
    FromMismatch,
    BatchUniformity,
    BigMoveSpan,
    OffsetMoveSpan,
    DuplicateDestination,
    OrderPreservation,
    Collision,
    OutOfBounds,
    PulseColocation,
    SiteSharing,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).ok();
        write!(f, "{}", s.as_ref().and_then(|v| v.as_str()).unwrap_or("?"))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Violation {
    /// `None` for the initial placement.
    pub stage: Option<usize>,
    pub rule: Rule,
    pub description: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct ReplayReport {
    pub metrics: Metrics,
    pub stage_metrics: Vec<Metrics>,
    /// Pairs actually executed at each pulse, in pulse order.
    pub trace: Vec<Vec<QubitPair>>,
    pub violations: Vec<Violation>,
    #[serde(skip)]
    pub final_positions: BTreeMap<usize, Pos>,
}

impl ReplayReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

struct Replayer<'a> {
    schedule: &'a Schedule,
    positions: BTreeMap<usize, Pos>,
    /// Atoms grouped by the site they currently round to.
    by_site: BTreeMap<GridPoint, BTreeSet<usize>>,
    violations: Vec<Violation>,
    trace: Vec<Vec<QubitPair>>,
}

fn sign(r: Rational) -> i8 {
    if r > Rational::from_integer(0) {
        1
    } else if r < Rational::from_integer(0) {
        -1
    } else {
        0
    }
}

/// Cheap sufficient test: sorted by start coordinate along `axis`, every
/// strictly later start also ends strictly later, and equal starts end equal.
fn order_surely_preserved(valid: &[&AtomMove], axis: Axis) -> bool {
    let mut ends: Vec<(Rational, Rational)> = valid
        .iter()
        .map(|mv| (axis.component(&mv.from), axis.component(&mv.to)))
        .collect();
    ends.sort_unstable();
    let mut prev_group: Option<(Rational, Rational)> = None;
    let mut i = 0;
    while i < ends.len() {
        let start = ends[i].0;
        let j = i + ends[i..].iter().take_while(|e| e.0 == start).count();
        let (lo, hi) = (ends[i].1, ends[j - 1].1);
        if lo != hi {
            return false;
        }
        if let Some((_, prev_end)) = prev_group {
            if prev_end >= lo {
                return false;
            }
        }
        prev_group = Some((start, hi));
        i = j;
    }
    true
}

/// `p` lies on the segment from `a` to `b`, start point excluded.
fn on_segment(p: &Pos, a: &Pos, b: &Pos) -> bool {
    if p == a {
        return false;
    }
    let within = |v: Rational, lo: Rational, hi: Rational| v >= lo.min(hi) && v <= lo.max(hi);
    if a.y == b.y {
        p.y == a.y && within(p.x, a.x, b.x)
    } else if a.x == b.x {
        p.x == a.x && within(p.y, a.y, b.y)
    } else {
        false
    }
}

impl<'a> Replayer<'a> {
    fn flag(&mut self, stage: Option<usize>, rule: Rule, description: String) {
        self.violations.push(Violation {
            stage,
            rule,
            description,
        });
    }

    fn in_bounds(&self, site: GridPoint) -> bool {
        self.schedule.architecture.contains(site)
    }

    fn place(&mut self) {
        let mut taken: BTreeMap<GridPoint, usize> = BTreeMap::new();
        for p in &self.schedule.initial_placement {
            if self.positions.contains_key(&p.atom) {
                self.flag(
                    None,
                    Rule::RepeatedAtom,
                    format!("atom {} placed twice", p.atom),
                );
                continue;
            }
            if !self.in_bounds(p.site) {
                self.flag(
                    None,
                    Rule::OutOfBounds,
                    format!("atom {} placed at {}", p.atom, p.site),
                );
            }
            if let Some(other) = taken.insert(p.site, p.atom) {
                self.flag(
                    None,
                    Rule::SiteSharing,
                    format!("atoms {other} and {} both placed at {}", p.atom, p.site),
                );
            }
            self.positions.insert(p.atom, Pos::from(p.site));
            self.by_site.entry(p.site).or_default().insert(p.atom);
        }
    }

    fn batch(&mut self, stage: usize, b: &MoveBatch, m: &mut Metrics) {
        let at = Some(stage);
        let across = b.axis.other();
        let mut seen = BTreeSet::new();
        let mut valid = Vec::with_capacity(b.moves.len());
        for mv in &b.moves {
            let Some(&current) = self.positions.get(&mv.atom) else {
                self.flag(
                    at,
                    Rule::UnknownAtom,
                    format!("atom {} does not exist", mv.atom),
                );
                continue;
            };
            if !seen.insert(mv.atom) {
                self.flag(
                    at,
                    Rule::RepeatedAtom,
                    format!("atom {} moved twice in one batch", mv.atom),
                );
                continue;
            }
            if current != mv.from {
                self.flag(
                    at,
                    Rule::FromMismatch,
                    format!(
                        "atom {} is at {current}, move starts at {}",
                        mv.atom, mv.from
                    ),
                );
            }
            let disp = mv.to - mv.from;
            let along = b.axis.component(&disp);
            if !matches!(b.direction, 1 | -1)
                || across.component(&disp) != Rational::from_integer(0)
                || sign(along) != b.direction
            {
                self.flag(
                    at,
                    Rule::BatchUniformity,
                    format!(
                        "atom {} moves by {disp}, batch is {:?}{:+}",
                        mv.atom, b.axis, b.direction
                    ),
                );
            }
            let (s0, s1) = (mv.from.site(), mv.to.site());
            let site_step = Pos::from(s1) - Pos::from(s0);
            match b.kind {
                MoveKind::Big => {
                    if site_step.manhattan() != Rational::from_integer(1)
                        || across.component(&site_step) != Rational::from_integer(0)
                    {
                        self.flag(
                            at,
                            Rule::BigMoveSpan,
                            format!("big move of atom {} goes from site {s0} to {s1}", mv.atom),
                        );
                    }
                }
                MoveKind::Offset => {
                    if s0 != s1 {
                        self.flag(
                            at,
                            Rule::OffsetMoveSpan,
                            format!("offset move of atom {} leaves site {s0} for {s1}", mv.atom),
                        );
                    }
                }
            }
            valid.push(mv);
        }

        let mut reported: BTreeSet<QubitPair> = BTreeSet::new();
        let mut by_dest: BTreeMap<Pos, usize> = BTreeMap::new();
        for mv in &valid {
            if let Some(other) = by_dest.insert(mv.to, mv.atom) {
                reported.insert(normalize_pair(other, mv.atom));
                self.flag(
                    at,
                    Rule::DuplicateDestination,
                    format!("atoms {other} and {} both sent to {}", mv.atom, mv.to),
                );
            }
        }

        if !order_surely_preserved(&valid, b.axis) {
            'order: for (i, a) in valid.iter().enumerate() {
                for c in &valid[i + 1..] {
                    let before = sign(b.axis.component(&a.from) - b.axis.component(&c.from));
                    let after = sign(b.axis.component(&a.to) - b.axis.component(&c.to));
                    let same_line = across.component(&a.from) == across.component(&c.from);
                    if before != after && !(same_line && after == 0) {
                        self.flag(
                            at,
                            Rule::OrderPreservation,
                            format!(
                                "atoms {} and {} change order along {:?}",
                                a.atom, c.atom, b.axis
                            ),
                        );
                        break 'order;
                    }
                }
            }
        }

        let moving: BTreeSet<usize> = valid.iter().map(|mv| mv.atom).collect();
        let mut runs_into = Vec::new();
        for mv in &valid {
            for other in self.atoms_near_segment(&mv.from, &mv.to) {
                let p = self.positions[&other];
                if !moving.contains(&other) && on_segment(&p, &mv.from, &mv.to) {
                    runs_into.push((mv.atom, other, p));
                }
            }
        }
        for (atom, other, p) in runs_into {
            reported.insert(normalize_pair(other, atom));
            self.flag(
                at,
                Rule::Collision,
                format!("atom {atom} runs into atom {other} at {p}"),
            );
        }

        for mv in &valid {
            if let Some(old) = self.positions.insert(mv.atom, mv.to) {
                let old = old.site();
                if let Some(set) = self.by_site.get_mut(&old) {
                    set.remove(&mv.atom);
                    if set.is_empty() {
                        self.by_site.remove(&old);
                    }
                }
            }
            let site = mv.to.site();
            self.by_site.entry(site).or_default().insert(mv.atom);
            if !self.in_bounds(site) {
                self.flag(
                    at,
                    Rule::OutOfBounds,
                    format!("atom {} leaves the array at {site}", mv.atom),
                );
            }
        }

        // Only a moved atom can have landed on someone.
        let mut clashes = BTreeMap::new();
        for mv in &valid {
            for &other in &self.by_site[&mv.to.site()] {
                let pair = normalize_pair(other, mv.atom);
                if other != mv.atom && self.positions[&other] == mv.to && !reported.contains(&pair)
                {
                    clashes.insert(pair, mv.to);
                }
            }
        }
        for ((x, y), p) in clashes {
            self.flag(
                at,
                Rule::Collision,
                format!("atoms {x} and {y} both at {p}"),
            );
        }

        if valid.is_empty() {
            return;
        }
        match b.kind {
            MoveKind::Big => {
                m.big_move_count += 1;
                m.big_move_distance += valid
                    .iter()
                    .map(|mv| (Pos::from(mv.to.site()) - Pos::from(mv.from.site())).manhattan())
                    .max()
                    .unwrap_or_default();
                m.n_trans += 2 * valid.len() as u64;
            }
            MoveKind::Offset => {
                m.offset_count += valid.len() as u64;
                for mv in &valid {
                    m.offset_distance += (mv.to - mv.from).manhattan();
                }
            }
        }
    }

    fn site_groups(&self) -> Vec<(GridPoint, Vec<usize>)> {
        self.by_site
            .iter()
            .filter(|(_, atoms)| atoms.len() > 1)
            .map(|(&site, atoms)| (site, atoms.iter().copied().collect()))
            .collect()
    }

    /// Every atom whose site a point of the segment `a`–`b` could round to.
    fn atoms_near_segment(&self, a: &Pos, b: &Pos) -> Vec<usize> {
        let (sa, sb) = (a.site(), b.site());
        let span = (sa.x - sb.x).unsigned_abs() + (sa.y - sb.y).unsigned_abs();
        if (a.x != b.x && a.y != b.y) || span as usize > self.by_site.len() {
            return self.positions.keys().copied().collect();
        }
        let mut out = Vec::new();
        for x in sa.x.min(sb.x)..=sa.x.max(sb.x) {
            for y in sa.y.min(sb.y)..=sa.y.max(sb.y) {
                if let Some(atoms) = self.by_site.get(&GridPoint::new(x, y)) {
                    out.extend(atoms.iter().copied());
                }
            }
        }
        out
    }

    fn pulse(&mut self, stage: usize, pairs: &[QubitPair], m: &mut Metrics) {
        let at = Some(stage);
        let mut colocated = BTreeSet::new();
        for (site, atoms) in self.site_groups() {
            if atoms.len() > 2 {
                self.flag(
                    at,
                    Rule::PulseColocation,
                    format!("atoms {atoms:?} share site {site} during the pulse"),
                );
            } else {
                colocated.insert(normalize_pair(atoms[0], atoms[1]));
            }
        }
        let wanted: BTreeSet<QubitPair> =
            pairs.iter().map(|&(a, b)| normalize_pair(a, b)).collect();
        for p in colocated.difference(&wanted) {
            self.flag(
                at,
                Rule::PulseColocation,
                format!("spectator pair {p:?} co-located during the pulse"),
            );
        }
        for p in wanted.difference(&colocated) {
            self.flag(
                at,
                Rule::PulseColocation,
                format!("pulse pair {p:?} not co-located"),
            );
        }
        let executed: Vec<QubitPair> = wanted.intersection(&colocated).copied().collect();
        m.stages += 1;
        m.g2 += executed.len() as u64;
        self.trace.push(executed);
    }

    fn stage_end(&mut self, st: &Stage, is_last: bool) {
        let held: BTreeSet<QubitPair> =
            if is_last && self.schedule.metadata.drop_final_swap && st.mode == StageMode::Final {
                st.pulse
                    .iter()
                    .flat_map(|p| p.pairs.iter().copied())
                    .collect()
            } else {
                BTreeSet::new()
            };
        for (site, atoms) in self.site_groups() {
            if atoms.len() == 2 && held.contains(&normalize_pair(atoms[0], atoms[1])) {
                continue;
            }
            self.flag(
                Some(st.index),
                Rule::SiteSharing,
                format!("atoms {atoms:?} share site {site} after the stage"),
            );
        }
    }
}

/// Simulates the schedule and reports metrics, the executed gate trace and
/// every rule violation in stage order.
pub fn replay(s: &Schedule) -> ReplayReport {
    let mut r = Replayer {
        schedule: s,
        positions: BTreeMap::new(),
        by_site: BTreeMap::new(),
        violations: Vec::new(),
        trace: Vec::new(),
    };
    r.place();
    let mut total = Metrics {
        qubit_count: r.positions.len() as u64,
        ..Default::default()
    };
    let mut stage_metrics = Vec::with_capacity(s.stages.len());
    for (i, st) in s.stages.iter().enumerate() {
        let mut m = Metrics::default();
        for b in &st.pre_moves {
            r.batch(st.index, b, &mut m);
        }
        if let Some(p) = &st.pulse {
            r.pulse(st.index, &p.pairs, &mut m);
        }
        for b in &st.post_moves {
            r.batch(st.index, b, &mut m);
        }
        r.stage_end(st, i + 1 == s.stages.len());
        total.accumulate(&m);
        stage_metrics.push(m);
    }
    ReplayReport {
        metrics: total,
        stage_metrics,
        trace: r.trace,
        violations: r.violations,
        final_positions: r.positions,
    }
}

/// What an executed trace should amount to.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Reference {
    /// Layer order matters; gates inside a layer form a set.
    Layered(Vec<Vec<QubitPair>>),
    /// Commuting gates: only the multiset of pairs matters.
    Unordered(Vec<QubitPair>),
}

/// The reference circuit implied by a schedule's metadata.
pub fn reference_for(spec: &CircuitSpec) -> Result<Option<Reference>> {
    Ok(match spec {
        CircuitSpec::Qft { n } => Some(Reference::Layered(
            expand_cp_to_cz(&build_qft_layers(*n)?)?.pair_layers(),
        )),
        CircuitSpec::QftSkeleton { n } => {
            Some(Reference::Layered(build_qft_layers(*n)?.pair_layers()))
        }
        CircuitSpec::Qaoa { instance } => Some(Reference::Unordered(instance.edges.clone())),
        CircuitSpec::Opaque => None,
    })
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct GateEquivalence {
    pub equivalent: bool,
    /// `(layer, pair)` expected but not executed; layer is `None` for
    /// unordered references.
    pub missing: Vec<(Option<usize>, QubitPair)>,
    pub extra: Vec<(Option<usize>, QubitPair)>,
    pub layer_counts: Option<(usize, usize)>,
}

fn multiset(pairs: impl IntoIterator<Item = QubitPair>) -> BTreeMap<QubitPair, usize> {
    let mut m = BTreeMap::new();
    for (a, b) in pairs {
        *m.entry(normalize_pair(a, b)).or_insert(0) += 1;
    }
    m
}

fn diff(
    layer: Option<usize>,
    want: &BTreeMap<QubitPair, usize>,
    got: &BTreeMap<QubitPair, usize>,
    out: &mut Vec<(Option<usize>, QubitPair)>,
) {
    for (p, &c) in want {
        let have = got.get(p).copied().unwrap_or(0);
        out.extend(std::iter::repeat_n((layer, *p), c.saturating_sub(have)));
    }
}

pub fn check_gate_equivalence(trace: &[Vec<QubitPair>], reference: &Reference) -> GateEquivalence {
    let mut v = GateEquivalence::default();
    match reference {
        Reference::Layered(layers) => {
            if trace.len() != layers.len() {
                v.layer_counts = Some((trace.len(), layers.len()));
            }
            for i in 0..trace.len().max(layers.len()) {
                let got = multiset(trace.get(i).into_iter().flatten().copied());
                let want = multiset(layers.get(i).into_iter().flatten().copied());
                diff(Some(i), &want, &got, &mut v.missing);
                diff(Some(i), &got, &want, &mut v.extra);
            }
        }
        Reference::Unordered(pairs) => {
            let got = multiset(trace.iter().flatten().copied());
            let want = multiset(pairs.iter().copied());
            diff(None, &want, &got, &mut v.missing);
            diff(None, &got, &want, &mut v.extra);
        }
    }
    v.equivalent = v.missing.is_empty() && v.extra.is_empty() && v.layer_counts.is_none();
    v
}

/// Analytic lower bound for QFT-n with the final swap dropped.
pub fn tlb_metrics(n: usize) -> Result<Metrics> {
    if n < 2 {
        return Err(crate::Error::InvalidCircuitSize { n });
    }
    let n = n as u64;
    let big = 8 * n - 13;
    let g2 = n * (n - 1);
    Ok(Metrics {
        g2,
        qubit_count: n,
        stages: 2 * (2 * n - 3),
        big_move_count: big,
        big_move_distance: Rational::from_integer(big as i64),
        offset_count: 0,
        offset_distance: Rational::from_integer(0),
        n_trans: 4 * g2 - 2,
    })
}

/// Checks that atoms end on the reversal of their start sites. When the
/// final separate step was dropped, the last pulse pair instead shares one
/// of its two reversed sites.
pub fn check_final_reversal(
    s: &Schedule,
    report: &ReplayReport,
) -> std::result::Result<(), String> {
    let start: BTreeMap<usize, GridPoint> = s
        .initial_placement
        .iter()
        .map(|p| (p.atom, p.site))
        .collect();
    let n = start.len();
    let expected = |atom: usize| start.get(&(n - 1 - atom)).copied();
    let held: Vec<QubitPair> = match s.stages.last() {
        Some(st) if s.metadata.drop_final_swap && st.mode == StageMode::Final => {
            st.pulse.iter().flat_map(|p| p.pairs.clone()).collect()
        }
        _ => Vec::new(),
    };
    for (&atom, pos) in &report.final_positions {
        let site = pos.site();
        if let Some(&(a, b)) = held.iter().find(|&&(a, b)| a == atom || b == atom) {
            if Some(site) != expected(a) && Some(site) != expected(b) {
                return Err(format!(
                    "held atom {atom} at {site}, not on the sites of {a} or {b}"
                ));
            }
            continue;
        }
        if *pos != Pos::from(expected(atom).ok_or("atom ids are not 0..n")?) {
            return Err(format!(
                "atom {atom} ends at {pos}, expected {:?}",
                expected(atom)
            ));
        }
    }
    Ok(())
}
