//! End-to-end fidelity model
//!
//! ```text
//! f = f2^g2 · f_exc^(|Q|·S − 2·g2) · f_trans^N_trans · Π_q (1 − T_q / T2)
//! ```
//!
//! evaluated in log space, with the per-qubit busy times `T_q` supplied by a
//! [`TimingModel`].

use serde::{Deserialize, Serialize};

use crate::exact;
use crate::schedule::{MoveKind, Schedule};
use crate::verifier::{tlb_metrics, Metrics};
use crate::{Error, Result};

/// Hardware parameters. Field names follow the usual symbols; the config
/// file uses the same keys.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FidelityParams {
    pub f2: f64,
    pub f_exc: f64,
    pub f_trans: f64,
    /// Coherence time, s.
    #[serde(rename = "T2")]
    pub t2: f64,
    /// Duration of one atom transfer, s.
    #[serde(rename = "T_trans")]
    pub t_trans: f64,
    /// Lattice spacing, m.
    pub d: f64,
    /// Movement acceleration, m/s².
    pub a: f64,
}

impl Default for FidelityParams {
    fn default() -> Self {
        Self {
            f2: 0.995,
            f_exc: 0.9975,
            f_trans: 0.999,
            t2: 1.5,
            t_trans: 1.5e-6,
            d: 15e-6,
            a: 2750.0,
        }
    }
}

impl FidelityParams {
    pub fn check(&self) -> Result<()> {
        for (name, v) in [
            ("f2", self.f2),
            ("f_exc", self.f_exc),
            ("f_trans", self.f_trans),
        ] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::ParameterOutOfRange {
                    name,
                    value: v.to_string(),
                });
            }
        }
        for (name, v) in [
            ("T2", self.t2),
            ("T_trans", self.t_trans),
            ("d", self.d),
            ("a", self.a),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::ParameterOutOfRange {
                    name,
                    value: v.to_string(),
                });
            }
        }
        Ok(())
    }
}

/// Per-move duration `(coefficient · D / a)^exponent`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MoveLaw {
    pub coefficient: f64,
    pub exponent: f64,
}

impl Default for MoveLaw {
    fn default() -> Self {
        Self {
            coefficient: 6.0,
            exponent: 0.5,
        }
    }
}

impl MoveLaw {
    pub fn duration(&self, distance_m: f64, accel: f64) -> f64 {
        if distance_m <= 0.0 {
            return 0.0;
        }
        (self.coefficient * distance_m / accel).powf(self.exponent)
    }
}

/// Source of the busy times `T_q`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "lowercase")]
pub enum TimingModel {
    /// `T_q = (movement_share + 2·T_trans)·(|Q| − 1)` for every qubit. The
    /// default movement share of 36 µs reproduces the reference QFT-30/50
    /// lower-bound fidelities.
    Analytic { movement_share_s: f64 },
    /// Wall-clock replay of a schedule: batches run back to back, each as long
    /// as its slowest move, plus `T_trans` per transfer. Every qubit idles for
    /// the whole run.
    Kinematic { law: MoveLaw },
}

pub const DEFAULT_MOVEMENT_SHARE_S: f64 = 36e-6;

impl Default for TimingModel {
    fn default() -> Self {
        TimingModel::Analytic {
            movement_share_s: DEFAULT_MOVEMENT_SHARE_S,
        }
    }
}

/// Uniform analytic busy time for an `n`-qubit QFT-shaped schedule.
pub fn analytic_timing(n: usize, movement_share_s: f64, p: &FidelityParams) -> Result<f64> {
    if n < 2 {
        return Err(Error::InvalidCircuitSize { n });
    }
    Ok((movement_share_s + 2.0 * p.t_trans) * (n - 1) as f64)
}

/// Total wall time of a schedule under the kinematic law, seconds.
pub fn kinematic_duration(s: &Schedule, law: &MoveLaw, p: &FidelityParams) -> f64 {
    let mut total = 0.0;
    for b in s.stages.iter().flat_map(|st| st.batches()) {
        let slowest = b
            .moves
            .iter()
            .map(|mv| law.duration(exact::to_f64(&(mv.to - mv.from).manhattan()) * p.d, p.a))
            .fold(0.0, f64::max);
        total += slowest;
        if b.kind == MoveKind::Big {
            total += 2.0 * p.t_trans * b.moves.len() as f64;
        }
    }
    total
}

/// Per-qubit busy times from a kinematic replay.
pub fn kinematic_timing(s: &Schedule, law: &MoveLaw, p: &FidelityParams) -> Vec<f64> {
    let t = kinematic_duration(s, law, p);
    vec![t; s.initial_placement.len()]
}

impl TimingModel {
    /// Busy times for `m`; the kinematic variant needs the schedule.
    pub fn busy_times(
        &self,
        m: &Metrics,
        schedule: Option<&Schedule>,
        p: &FidelityParams,
    ) -> Result<Vec<f64>> {
        match self {
            TimingModel::Analytic { movement_share_s } => {
                let n = m.qubit_count as usize;
                if n == 0 {
                    return Ok(Vec::new());
                }
                Ok(vec![analytic_timing(n.max(2), *movement_share_s, p)?; n])
            }
            TimingModel::Kinematic { law } => {
                let s = schedule.ok_or_else(|| Error::ParameterOutOfRange {
                    name: "timing",
                    value: "kinematic timing needs a schedule".into(),
                })?;
                Ok(kinematic_timing(s, law, p))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FidelityReport {
    pub term_gate: f64,
    pub term_excitation: f64,
    pub term_transfer: f64,
    pub term_decoherence: f64,
    pub total: f64,
    /// Natural log of `total`; stays finite when `total` underflows.
    pub ln_total: f64,
}

impl FidelityReport {
    /// `total` as `a.b×10^e`, two significant figures.
    pub fn total_sci(&self) -> String {
        format!("{:.1e}", self.total)
    }
}

/// Evaluates the fidelity model for given busy times.
pub fn evaluate_with_busy(m: &Metrics, p: &FidelityParams, busy: &[f64]) -> Result<FidelityReport> {
    p.check()?;
    let qs = m.qubit_count * m.stages;
    if qs < 2 * m.g2 {
        return Err(Error::InconsistentMetrics {
            qs,
            twice_g2: 2 * m.g2,
        });
    }
    let ln_gate = m.g2 as f64 * p.f2.ln();
    let ln_exc = (qs - 2 * m.g2) as f64 * p.f_exc.ln();
    let ln_trans = m.n_trans as f64 * p.f_trans.ln();
    let mut ln_deco = 0.0;
    for &t in busy {
        if t.is_nan() || t < 0.0 || t >= p.t2 {
            return Err(Error::DecoherenceOverflow {
                busy_s: t,
                t2_s: p.t2,
            });
        }
        ln_deco += (-t / p.t2).ln_1p();
    }
    let ln_total = ln_gate + ln_exc + ln_trans + ln_deco;
    Ok(FidelityReport {
        term_gate: ln_gate.exp(),
        term_excitation: ln_exc.exp(),
        term_transfer: ln_trans.exp(),
        term_decoherence: ln_deco.exp(),
        total: ln_total.exp(),
        ln_total,
    })
}

pub fn evaluate(
    m: &Metrics,
    p: &FidelityParams,
    t: &TimingModel,
    schedule: Option<&Schedule>,
) -> Result<FidelityReport> {
    let busy = t.busy_times(m, schedule, p)?;
    evaluate_with_busy(m, p, &busy)
}

/// Lower-bound fidelity for every `n` in `n_min..=n_max`, analytic timing.
pub fn tlb_fidelity_curve(
    n_min: usize,
    n_max: usize,
    p: &FidelityParams,
) -> Result<Vec<(usize, FidelityReport)>> {
    let timing = TimingModel::default();
    (n_min.max(2)..=n_max)
        .map(|n| Ok((n, evaluate(&tlb_metrics(n)?, p, &timing, None)?)))
        .collect()
}
