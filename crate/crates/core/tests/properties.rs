use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;
use qftmove::circuit::{build_qft_layers, embed_qaoa_layers, expand_cp_to_cz, gen_maxcut_qaoa};
use qftmove::compiler::{big_batch_count, compile_linear, compile_qft, CompileOptions, Layout};
use qftmove::exact::Rational;
use qftmove::fidelity::{evaluate, evaluate_with_busy, FidelityParams, MoveLaw, TimingModel};
use qftmove::layout::{build_phi, fold_for_n, validate_zigzag, wasted_points, GridPoint};
use qftmove::maslov::{network, relevant_edges, relevant_indices, stage_count};
use qftmove::verifier::{replay, tlb_metrics, Metrics};

fn edge_set(k: usize, n: usize) -> BTreeSet<(usize, usize)> {
    relevant_edges(k, n).unwrap().edges().collect()
}

#[test]
fn maslov_disjointness_up_to_200() {
    for n in 2..=200 {
        let sets: Vec<_> = (0..stage_count(n)).map(|k| edge_set(k, n)).collect();
        for k in 0..sets.len() {
            let idx = relevant_indices(k, n).unwrap();
            assert!(idx.iter().all(|j| j % 2 == k % 2), "n={n} k={k}");
            if k + 1 < sets.len() {
                assert!(sets[k].is_disjoint(&sets[k + 1]), "n={n} k={k}");
            }
        }
        // Opposite parity never shares an edge: all even-k edges start even.
        let even: BTreeSet<_> = sets.iter().step_by(2).flatten().collect();
        let odd: BTreeSet<_> = sets.iter().skip(1).step_by(2).flatten().collect();
        assert!(even.is_disjoint(&odd), "n={n}");
    }
}

#[test]
fn maslov_covers_each_pair_once_and_reverses() {
    for n in 2..=200 {
        let (stages, last) = network(n).unwrap();
        assert_eq!(stages.len(), 2 * n - 3);
        let mut seen = BTreeMap::new();
        for st in &stages {
            for g in st.gates() {
                *seen.entry(g).or_insert(0u32) += 1;
            }
        }
        assert_eq!(seen.len(), n * (n - 1) / 2, "n={n}");
        assert!(seen.values().all(|&c| c == 1), "n={n}");
        assert!((0..n).all(|i| last.forward(i) == n - 1 - i), "n={n}");
    }
}

#[test]
fn qft_layers_cover_pairs_and_cz_doubles() {
    for n in 2..=200 {
        let cp = build_qft_layers(n).unwrap();
        let pairs: BTreeSet<_> = cp.pair_layers().into_iter().flatten().collect();
        assert_eq!(cp.gate_count(), n * (n - 1) / 2);
        assert_eq!(pairs.len(), cp.gate_count());
        let cz = expand_cp_to_cz(&cp).unwrap();
        let mut mult = BTreeMap::new();
        for p in cz.pair_layers().into_iter().flatten() {
            *mult.entry(p).or_insert(0) += 1;
        }
        assert_eq!(mult.len(), pairs.len());
        assert!(mult.values().all(|&c| c == 2), "n={n}");
    }
}

#[test]
fn phi_family_up_to_60() {
    let mut prev: Vec<usize> = Vec::new();
    for w in 1..=60 {
        let (phi, st) = build_phi(w).unwrap();
        validate_zigzag(phi.path()).unwrap_or_else(|v| panic!("w={w}: {v:?}"));
        assert_eq!(st.visited + st.wasted, 4 * w * w);
        assert_eq!(st.visited, phi.len());
        assert_eq!(st.wasted, wasted_points(w).unwrap());
        assert!(st.wasted <= 2 * w);
        assert_eq!(phi.bounding_dims(), (2 * w, 2 * w));
        // The recurrence itself, checked against the constructed sizes.
        let expect = match w {
            1 => 0,
            2 => 2,
            _ => prev[w - 3] + 4,
        };
        assert_eq!(st.wasted, expect, "w={w}");
        prev.push(st.wasted);
    }
}

#[test]
fn fold_for_n_efficiency_bound() {
    for n in 2..=10_000usize {
        let f = fold_for_n(n).unwrap();
        let nf = n as f64;
        let bound = 1.0 / (1.0 + 8.0 / nf.sqrt() + 16.0 / nf);
        assert!(f.efficiency >= bound, "n={n}: {} < {bound}", f.efficiency);
        assert_eq!(f.folding.len(), n);
    }
}

fn horizontal(a: GridPoint, b: GridPoint) -> bool {
    a.y == b.y
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn folding_points_distinct_and_in_bounds(n in 2usize..3000) {
        let f = fold_for_n(n).unwrap();
        let pts = f.folding.path();
        let distinct: BTreeSet<_> = pts.iter().map(|p| (p.x, p.y)).collect();
        prop_assert_eq!(distinct.len(), n);
        let side = f.side as i64;
        prop_assert!(pts.iter().all(|p| (0..side).contains(&p.x) && (0..side).contains(&p.y)));
        prop_assert!(validate_zigzag(pts).is_ok());
    }

    #[test]
    fn edge_orientation_alternates(w in 1usize..40) {
        let (phi, _) = build_phi(w).unwrap();
        let p = phi.path();
        let first = horizontal(p[0], p[1]);
        for j in 0..p.len() - 1 {
            prop_assert_eq!(horizontal(p[j], p[j + 1]), first == (j % 2 == 0));
        }
    }

    #[test]
    fn linear_big_count_matches_bound(n in 2usize..=200) {
        let s = compile_linear(n, &CompileOptions::default()).unwrap();
        prop_assert_eq!(big_batch_count(&s), 8 * n - 13);
        let r = replay(&s);
        prop_assert!(r.violations.is_empty());
        let t = tlb_metrics(n).unwrap();
        prop_assert_eq!(r.metrics.big_move_count, t.big_move_count);
        prop_assert_eq!(r.metrics.big_move_distance, t.big_move_distance);
        prop_assert_eq!(r.metrics.n_trans, t.n_trans);
    }

    #[test]
    fn zigzag_big_count_matches_bound(n in 2usize..=120) {
        let s = compile_qft(&Layout::zigzag_for_n(n, 15.0).unwrap(), &CompileOptions::default()).unwrap();
        let r = replay(&s);
        prop_assert!(r.violations.is_empty());
        prop_assert_eq!(r.metrics.big_move_count as usize, 8 * n - 13);
        prop_assert_eq!(r.metrics.big_move_distance, Rational::from_integer(8 * n as i64 - 13));
    }

    #[test]
    fn qaoa_generator_is_pure(n in 2usize..40, theta in 0.0f64..=100.0, seed: u64) {
        let a = gen_maxcut_qaoa(n, theta, seed).unwrap();
        let b = gen_maxcut_qaoa(n, theta, seed).unwrap();
        prop_assert_eq!(&a, &b);
        let emb = embed_qaoa_layers(&a).unwrap();
        let embedded: BTreeSet<_> = emb.stages.iter().flat_map(|s| s.present.iter().copied()).collect();
        let edges: BTreeSet<_> = a.edges.iter().copied().collect();
        prop_assert_eq!(embedded, edges);
    }
}

fn metrics_strategy() -> impl Strategy<Value = Metrics> {
    (2u64..80, 1u64..400, 0u64..20_000).prop_flat_map(|(q, s, nt)| {
        (0..=q * s / 2).prop_map(move |g2| Metrics {
            g2,
            qubit_count: q,
            stages: s,
            n_trans: nt,
            ..Default::default()
        })
    })
}

fn direct_product(m: &Metrics, p: &FidelityParams, busy: &[f64]) -> f64 {
    let mut f = p.f2.powi(m.g2 as i32)
        * p.f_exc.powi((m.qubit_count * m.stages - 2 * m.g2) as i32)
        * p.f_trans.powi(m.n_trans as i32);
    for t in busy {
        f *= 1.0 - t / p.t2;
    }
    f
}

proptest! {
    #[test]
    fn log_space_matches_direct_product(m in metrics_strategy(), t in 0.0f64..1e-3) {
        let p = FidelityParams::default();
        let busy = vec![t; m.qubit_count as usize];
        let direct = direct_product(&m, &p, &busy);
        prop_assume!(direct > 1e-280);
        let r = evaluate_with_busy(&m, &p, &busy).unwrap();
        prop_assert!(((r.total - direct) / direct).abs() < 1e-10, "{} vs {}", r.total, direct);
        let product = r.term_gate * r.term_excitation * r.term_transfer * r.term_decoherence;
        prop_assert!(((r.total - product) / product).abs() < 1e-10);
    }

    #[test]
    fn excitation_ratio_identity(m in metrics_strategy(), x in 0.99f64..1.0) {
        let with = FidelityParams { f_exc: x, ..Default::default() };
        let without = FidelityParams { f_exc: 1.0, ..Default::default() };
        let busy = vec![1e-4; m.qubit_count as usize];
        let a = evaluate_with_busy(&m, &without, &busy).unwrap();
        let b = evaluate_with_busy(&m, &with, &busy).unwrap();
        let expect = -((m.qubit_count * m.stages - 2 * m.g2) as f64) * x.ln();
        prop_assert!((a.ln_total - b.ln_total - expect).abs() <= 1e-9 * expect.abs().max(1.0));
    }

    #[test]
    fn fidelity_monotone(m in metrics_strategy(), t in 1e-6f64..1e-3, which in 0usize..4) {
        let p = FidelityParams::default();
        let busy = vec![t; m.qubit_count as usize];
        let base = evaluate_with_busy(&m, &p, &busy).unwrap().ln_total;
        let mut m2 = m.clone();
        let mut busy2 = busy.clone();
        match which {
            0 => { m2.g2 += 1; m2.stages += 1 }
            1 => m2.n_trans += 1,
            2 => m2.stages += 1,
            _ => busy2[0] *= 2.0,
        }
        let worse = evaluate_with_busy(&m2, &p, &busy2).unwrap().ln_total;
        prop_assert!(worse < base);
    }
}

#[test]
fn qft50_cross_check_identity() {
    let p = FidelityParams::default();
    let v = p.f2.powi(2450) * p.f_trans.powi(9798) * (1.0f64 - 49.0 * 39e-6 / 1.5).powi(50);
    assert!((2.3e-10..=2.5e-10).contains(&v), "{v}");
    let no_exc = FidelityParams { f_exc: 1.0, ..p };
    let r = evaluate(
        &tlb_metrics(50).unwrap(),
        &no_exc,
        &TimingModel::default(),
        None,
    )
    .unwrap();
    assert!(((r.total - v) / v).abs() < 1e-9);
}

#[test]
fn kinematic_timing_properties() {
    let law = MoveLaw::default();
    let p = FidelityParams::default();
    let one = law.duration(15e-6, p.a);
    assert!((one - 181e-6).abs() < 1e-6, "{one}");
    assert!((law.duration(30e-6, p.a) / one - 2f64.sqrt()).abs() < 1e-12);
    let s = compile_linear(6, &CompileOptions::default()).unwrap();
    let m = replay(&s).metrics;
    let k = evaluate(&m, &p, &TimingModel::Kinematic { law }, Some(&s)).unwrap();
    let a = evaluate(&m, &p, &TimingModel::default(), None).unwrap();
    assert!(k.total > 0.0 && k.total < a.total);
}
