use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use qftmove::circuit::gen_maxcut_qaoa;
use qftmove::compiler::{
    compile_qaoa, compile_qft, CompileOptions, Layout, DEFAULT_UNIT_DISTANCE_UM,
};
use qftmove::exact::parse_rational;
use qftmove::fidelity::{evaluate, FidelityParams, FidelityReport, MoveLaw, TimingModel};
use qftmove::layout::{build_phi, fold_for_n, GridPoint, ZigzagFolding};
use qftmove::schedule::{CircuitSpec, Schedule};
use qftmove::verifier::{
    check_final_reversal, check_gate_equivalence, reference_for, replay, tlb_metrics, Metrics,
};

#[derive(Parser)]
#[command(
    name = "qftmove",
    version,
    about = "Movement-optimal atom schedules for QFT and MaxCut-QAOA"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compile a circuit into a schedule JSON.
    Compile(CompileArgs),
    /// Replay a schedule and check it against its circuit.
    Verify(VerifyArgs),
    /// Evaluate the fidelity model for a schedule or the lower bound.
    Fidelity(FidelityArgs),
    /// Metrics and fidelities over a QFT size range, as CSV.
    Sweep(SweepArgs),
    /// Render a Φ_w folding or one sized for n qubits.
    Fold(FoldArgs),
    /// Random MaxCut-QAOA instances over a θ range, as CSV.
    QaoaSweep(QaoaSweepArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CircuitKind {
    Qft,
    Qaoa,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum LayoutKind {
    Linear,
    Zigzag,
    Path,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Timing {
    Analytic,
    Kinematic,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FoldFormat {
    Json,
    Ascii,
}

#[derive(Args)]
struct LayoutArgs {
    #[arg(long, value_enum, default_value = "linear")]
    layout: LayoutKind,
    /// Grid for zigzag and path layouts, as ROWSxCOLS.
    #[arg(long, value_parser = parse_grid)]
    grid: Option<(usize, usize)>,
    /// JSON list of grid points (or `fold` output) for `--layout path`.
    #[arg(long)]
    path_file: Option<PathBuf>,
    /// Lattice spacing in micrometres.
    #[arg(long, default_value_t = DEFAULT_UNIT_DISTANCE_UM)]
    unit_um: f64,
}

#[derive(Args)]
struct OptionArgs {
    /// Keep the separate step after the last QFT layer.
    #[arg(long)]
    keep_final_swap: bool,
    /// Offset length in lattice units, e.g. 1/4.
    #[arg(long, default_value = "1/4")]
    delta: String,
}

#[derive(Args)]
struct FidelityModelArgs {
    /// TOML file with f2, f_exc, f_trans, T2, T_trans, d, a.
    #[arg(long)]
    params: Option<PathBuf>,
    #[arg(long)]
    f_exc: Option<f64>,
    #[arg(long, value_enum, default_value = "analytic")]
    timing: Timing,
}

#[derive(Args)]
struct CompileArgs {
    #[arg(long, value_enum, default_value = "qft")]
    circuit: CircuitKind,
    #[arg(long)]
    n: usize,
    /// Edge probability in percent (qaoa).
    #[arg(long, default_value_t = 50.0)]
    theta: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    layout: LayoutArgs,
    #[command(flatten)]
    options: OptionArgs,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    schedule: PathBuf,
    /// Print the full report as JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct FidelityArgs {
    /// Schedule JSON to evaluate.
    #[arg(long, conflicts_with = "tlb", required_unless_present = "tlb")]
    schedule: Option<PathBuf>,
    /// Evaluate the analytic lower bound for QFT-n instead.
    #[arg(long)]
    tlb: Option<usize>,
    #[command(flatten)]
    model: FidelityModelArgs,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, default_value_t = 5)]
    n_min: usize,
    #[arg(long, default_value_t = 50)]
    n_max: usize,
    /// Comma-separated subset of linear, zigzag, tlb.
    #[arg(long, value_delimiter = ',', default_value = "linear,zigzag,tlb")]
    strategies: Vec<String>,
    #[command(flatten)]
    model: FidelityModelArgs,
    #[command(flatten)]
    options: OptionArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FoldArgs {
    #[arg(long, conflicts_with = "n", required_unless_present = "n")]
    w: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, value_enum, default_value = "json")]
    format: FoldFormat,
}

#[derive(Args)]
struct QaoaSweepArgs {
    #[arg(long, default_value_t = 20)]
    n: usize,
    #[arg(long, default_value_t = 30)]
    theta_min: u32,
    #[arg(long, default_value_t = 100)]
    theta_max: u32,
    #[arg(long, default_value_t = 10)]
    theta_step: u32,
    /// Seeds 0..seeds per θ.
    #[arg(long, default_value_t = 10)]
    seeds: u64,
    #[command(flatten)]
    layout: LayoutArgs,
    #[command(flatten)]
    model: FidelityModelArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_grid(s: &str) -> Result<(usize, usize), String> {
    let (r, c) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected ROWSxCOLS, got {s:?}"))?;
    let r = r.trim().parse().map_err(|e| format!("rows: {e}"))?;
    let c = c.trim().parse().map_err(|e| format!("cols: {e}"))?;
    Ok((r, c))
}

/// Exit code 1: the schedule was read but breaks a rule.
struct Rejected;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Compile(a) => cmd_compile(a).map(|()| true),
        Command::Verify(a) => match cmd_verify(a)? {
            Ok(()) => Ok(true),
            Err(Rejected) => Ok(false),
        },
        Command::Fidelity(a) => cmd_fidelity(a).map(|()| true),
        Command::Sweep(a) => cmd_sweep(a).map(|()| true),
        Command::Fold(a) => cmd_fold(a).map(|()| true),
        Command::QaoaSweep(a) => cmd_qaoa_sweep(a).map(|()| true),
    }
}

fn write_output(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => match io::stdout().write_all(text.as_bytes()) {
            // A closed pipe (`| head`) just means nobody wants the rest.
            Err(e) if e.kind() != io::ErrorKind::BrokenPipe => Err(e.into()),
            _ => Ok(()),
        },
    }
}

fn compile_options(o: &OptionArgs, unit_um: f64) -> Result<CompileOptions> {
    let delta = parse_rational(&o.delta).map_err(|e| anyhow!("--delta {:?}: {e}", o.delta))?;
    Ok(CompileOptions {
        drop_final_swap: !o.keep_final_swap,
        delta,
        unit_distance_um: unit_um,
    })
}

#[derive(Deserialize)]
#[serde(untagged)]
enum PathFile {
    Bare(Vec<GridPoint>),
    Wrapped {
        #[serde(alias = "folding")]
        path: Vec<GridPoint>,
    },
}

fn read_path_file(p: &Path) -> Result<Vec<GridPoint>> {
    let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
    let parsed: PathFile =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?;
    Ok(match parsed {
        PathFile::Bare(v) | PathFile::Wrapped { path: v } => v,
    })
}

fn build_layout(n: usize, a: &LayoutArgs) -> Result<Layout> {
    let layout = match a.layout {
        LayoutKind::Linear => {
            if a.grid.is_some() {
                bail!("--grid applies to zigzag and path layouts only");
            }
            Layout::linear(n, a.unit_um)?
        }
        LayoutKind::Zigzag => Layout::zigzag_for_n(n, a.unit_um)?,
        LayoutKind::Path => {
            let file = a
                .path_file
                .as_deref()
                .ok_or_else(|| anyhow!("--layout path needs --path-file"))?;
            let folding = ZigzagFolding::new(read_path_file(file)?)?;
            Layout::zigzag(n, &folding, a.unit_um)?.with_strategy("path")
        }
    };
    match a.grid {
        Some((r, c)) => Ok(layout.in_grid(r, c)?),
        None => Ok(layout),
    }
}

fn cmd_compile(a: CompileArgs) -> Result<()> {
    let opts = compile_options(&a.options, a.layout.unit_um)?;
    let layout = build_layout(a.n, &a.layout)?;
    let schedule = match a.circuit {
        CircuitKind::Qft => compile_qft(&layout, &opts)?,
        CircuitKind::Qaoa => compile_qaoa(&gen_maxcut_qaoa(a.n, a.theta, a.seed)?, &layout, &opts)?,
    };
    let m = replay(&schedule).metrics;
    eprintln!(
        "{} n={}: {} stages, {} pulses, g2={}, big batches={}, N_trans={}, offsets={}",
        layout.strategy(),
        a.n,
        schedule.stages.len(),
        m.stages,
        m.g2,
        m.big_move_count,
        m.n_trans,
        m.offset_count
    );
    let mut text = schedule.to_json_pretty();
    text.push('\n');
    write_output(a.out.as_deref(), &text)
}

#[derive(Serialize)]
struct VerifyReport<'a> {
    metrics: &'a Metrics,
    violations: &'a [qftmove::verifier::Violation],
    gate_equivalence: Option<qftmove::verifier::GateEquivalence>,
    final_reversal: Option<Result<(), String>>,
}

fn cmd_verify(a: VerifyArgs) -> Result<Result<(), Rejected>> {
    let text = fs::read_to_string(&a.schedule)
        .with_context(|| format!("reading {}", a.schedule.display()))?;
    let schedule =
        Schedule::from_json(&text).with_context(|| format!("parsing {}", a.schedule.display()))?;
    let report = replay(&schedule);
    let gate_equivalence = reference_for(&schedule.metadata.circuit)?
        .map(|r| check_gate_equivalence(&report.trace, &r));
    let final_reversal = match schedule.metadata.circuit {
        CircuitSpec::Qft { .. } if report.is_valid() => {
            Some(check_final_reversal(&schedule, &report))
        }
        _ => None,
    };
    let ok = report.is_valid()
        && gate_equivalence.as_ref().is_none_or(|g| g.equivalent)
        && final_reversal.as_ref().is_none_or(|r| r.is_ok());

    let mut text = String::new();
    if a.json {
        let out = VerifyReport {
            metrics: &report.metrics,
            violations: &report.violations,
            gate_equivalence,
            final_reversal,
        };
        writeln!(text, "{}", serde_json::to_string_pretty(&out)?)?;
    } else {
        let m = &report.metrics;
        writeln!(
            text,
            "g2={} Q={} S={} N_trans={} big_count={} big_dist={} offset_count={} offset_dist={}",
            m.g2,
            m.qubit_count,
            m.stages,
            m.n_trans,
            m.big_move_count,
            m.big_move_distance,
            m.offset_count,
            m.offset_distance
        )?;
        writeln!(text, "violations: {}", report.violations.len())?;
        for v in &report.violations {
            match v.stage {
                Some(s) => writeln!(text, "  stage {s}: {}: {}", v.rule, v.description)?,
                None => writeln!(text, "  placement: {}: {}", v.rule, v.description)?,
            }
        }
        match &gate_equivalence {
            Some(g) if g.equivalent => writeln!(text, "gate trace: equivalent")?,
            Some(g) => writeln!(
                text,
                "gate trace: {} missing, {} extra",
                g.missing.len(),
                g.extra.len()
            )?,
            None => writeln!(text, "gate trace: no reference circuit")?,
        }
        if let Some(Err(e)) = &final_reversal {
            writeln!(text, "final mapping: {e}")?;
        }
    }
    write_output(None, &text)?;
    Ok(if ok { Ok(()) } else { Err(Rejected) })
}

fn load_params(m: &FidelityModelArgs) -> Result<FidelityParams> {
    let mut p = match &m.params {
        Some(path) => {
            let text =
                fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        None => FidelityParams::default(),
    };
    if let Some(x) = m.f_exc {
        p.f_exc = x;
    }
    p.check()?;
    Ok(p)
}

fn timing_model(t: Timing) -> TimingModel {
    match t {
        Timing::Analytic => TimingModel::default(),
        Timing::Kinematic => TimingModel::Kinematic {
            law: MoveLaw::default(),
        },
    }
}

#[derive(Serialize)]
struct FidelityOutput {
    metrics: Metrics,
    #[serde(flatten)]
    report: FidelityReport,
    total_sci: String,
}

fn cmd_fidelity(a: FidelityArgs) -> Result<()> {
    let p = load_params(&a.model)?;
    let timing = timing_model(a.model.timing);
    let (metrics, schedule) = match (&a.schedule, a.tlb) {
        (Some(path), _) => {
            let text =
                fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let s = Schedule::from_json(&text)?;
            let r = replay(&s);
            if !r.is_valid() {
                bail!("schedule has {} violations; run verify", r.violations.len());
            }
            (r.metrics, Some(s))
        }
        (None, Some(n)) => {
            if a.model.timing == Timing::Kinematic {
                bail!("kinematic timing needs --schedule");
            }
            (tlb_metrics(n)?, None)
        }
        (None, None) => unreachable!("clap requires one of --schedule, --tlb"),
    };
    let report = evaluate(&metrics, &p, &timing, schedule.as_ref())?;
    let out = FidelityOutput {
        total_sci: report.total_sci(),
        metrics,
        report,
    };
    write_output(None, &(serde_json::to_string_pretty(&out)? + "\n"))
}

/// Sweep CSV: the metrics columns followed by the fidelity terms.
#[derive(Serialize)]
struct SweepRow {
    n: usize,
    strategy: String,
    g2: u64,
    #[serde(rename = "Q")]
    q: u64,
    #[serde(rename = "S")]
    s: u64,
    n_trans: u64,
    big_count: u64,
    big_dist: f64,
    offset_count: u64,
    offset_dist: f64,
    term_gate: f64,
    term_excitation: f64,
    term_transfer: f64,
    term_decoherence: f64,
    total: f64,
}

impl SweepRow {
    fn new(n: usize, strategy: &str, m: &Metrics, f: &FidelityReport) -> Self {
        let r = m.row(n, strategy);
        SweepRow {
            n,
            strategy: r.strategy,
            g2: r.g2,
            q: r.q,
            s: r.s,
            n_trans: r.n_trans,
            big_count: r.big_count,
            big_dist: r.big_dist,
            offset_count: r.offset_count,
            offset_dist: r.offset_dist,
            term_gate: f.term_gate,
            term_excitation: f.term_excitation,
            term_transfer: f.term_transfer,
            term_decoherence: f.term_decoherence,
            total: f.total,
        }
    }
}

fn to_csv<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

fn cmd_sweep(a: SweepArgs) -> Result<()> {
    if a.n_min < 2 || a.n_min > a.n_max {
        bail!("need 2 <= n-min <= n-max, got {}..{}", a.n_min, a.n_max);
    }
    for s in &a.strategies {
        if !matches!(s.as_str(), "linear" | "zigzag" | "tlb") {
            bail!("unknown strategy {s:?}; expected linear, zigzag or tlb");
        }
    }
    if a.model.timing == Timing::Kinematic && a.strategies.iter().any(|s| s == "tlb") {
        bail!("the tlb row has no schedule; use analytic timing or drop tlb");
    }
    let p = load_params(&a.model)?;
    let opts = compile_options(&a.options, DEFAULT_UNIT_DISTANCE_UM)?;
    let timing = timing_model(a.model.timing);
    let jobs: Vec<(usize, &str)> = (a.n_min..=a.n_max)
        .flat_map(|n| a.strategies.iter().map(move |s| (n, s.as_str())))
        .collect();
    let rows: Vec<SweepRow> = jobs
        .par_iter()
        .map(|&(n, strategy)| {
            let (m, s) = match strategy {
                "tlb" => (tlb_metrics(n)?, None),
                other => {
                    let layout = if other == "linear" {
                        Layout::linear(n, DEFAULT_UNIT_DISTANCE_UM)?
                    } else {
                        Layout::zigzag_for_n(n, DEFAULT_UNIT_DISTANCE_UM)?
                    };
                    let s = compile_qft(&layout, &opts)?;
                    let r = replay(&s);
                    if !r.is_valid() {
                        bail!("{other} n={n}: compiled schedule has violations");
                    }
                    (r.metrics, Some(s))
                }
            };
            let f = evaluate(&m, &p, &timing, s.as_ref())?;
            Ok(SweepRow::new(n, strategy, &m, &f))
        })
        .collect::<Result<_>>()?;
    write_output(a.out.as_deref(), &to_csv(&rows)?)
}

#[derive(Serialize)]
struct PhiOutput {
    w: usize,
    side: usize,
    visited: usize,
    wasted: usize,
    path: ZigzagFolding,
}

fn cmd_fold(a: FoldArgs) -> Result<()> {
    let (json, folding, side) = match (a.w, a.n) {
        (Some(w), _) => {
            let (path, st) = build_phi(w)?;
            let out = PhiOutput {
                w,
                side: st.side,
                visited: st.visited,
                wasted: st.wasted,
                path: path.clone(),
            };
            (serde_json::to_string_pretty(&out)?, path, st.side)
        }
        (None, Some(n)) => {
            let f = fold_for_n(n)?;
            (serde_json::to_string_pretty(&f)?, f.folding.clone(), f.side)
        }
        (None, None) => unreachable!("clap requires one of --w, --n"),
    };
    match a.format {
        FoldFormat::Json => write_output(None, &(json + "\n")),
        FoldFormat::Ascii => write_output(None, &folding.ascii(side, side)),
    }
}

#[derive(Serialize)]
struct QaoaRow {
    n: usize,
    theta: u32,
    seed: u64,
    edges: usize,
    g2: u64,
    #[serde(rename = "S")]
    s: u64,
    n_trans: u64,
    big_count: u64,
    offset_count: u64,
    total: f64,
}

fn cmd_qaoa_sweep(a: QaoaSweepArgs) -> Result<()> {
    if a.theta_step == 0 || a.theta_min > a.theta_max || a.theta_max > 100 {
        bail!("need 0 <= theta-min <= theta-max <= 100 and a positive step");
    }
    let p = load_params(&a.model)?;
    let timing = timing_model(a.model.timing);
    let layout = build_layout(a.n, &a.layout)?;
    let opts = CompileOptions {
        unit_distance_um: a.layout.unit_um,
        ..Default::default()
    };
    let jobs: Vec<(u32, u64)> = (a.theta_min..=a.theta_max)
        .step_by(a.theta_step as usize)
        .flat_map(|t| (0..a.seeds).map(move |s| (t, s)))
        .collect();
    let rows: Vec<QaoaRow> = jobs
        .par_iter()
        .map(|&(theta, seed)| {
            let inst = gen_maxcut_qaoa(a.n, theta as f64, seed)?;
            let s = compile_qaoa(&inst, &layout, &opts)?;
            let r = replay(&s);
            if !r.is_valid() {
                bail!("θ={theta} seed={seed}: compiled schedule has violations");
            }
            let m = r.metrics;
            let f = evaluate(&m, &p, &timing, Some(&s))?;
            Ok(QaoaRow {
                n: a.n,
                theta,
                seed,
                edges: inst.edges.len(),
                g2: m.g2,
                s: m.stages,
                n_trans: m.n_trans,
                big_count: m.big_move_count,
                offset_count: m.offset_count,
                total: f.total,
            })
        })
        .collect::<Result<_>>()?;
    write_output(a.out.as_deref(), &to_csv(&rows)?)
}
