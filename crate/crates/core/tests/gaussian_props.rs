use markovia_core::gaussian::*;
use markovia_core::graph::{LazyGraph, VertexSet};
use markovia_core::graphoid::{check_markov, equivalence_audit, pairwise_graph, relation_from_gaussian, AxiomOptions, MarkovProperty};
use markovia_core::report::Verdict;
use nalgebra::DMatrix;
use proptest::prelude::*;

fn ar_model() -> impl Strategy<Value = (CovarianceModel, usize)> {
    (1usize..=3, 0.01f64..0.5, 10usize..=50).prop_flat_map(|(order, delta, n)| {
        let row = proptest::collection::vec(-1.0f64..1.0, order);
        (proptest::collection::vec(row, 1..4), Just(order), Just(delta), Just(n)).prop_map(
            |(rows, order, delta, n)| {
                let rows = rows
                    .into_iter()
                    .map(|r| {
                        let s: f64 = r.iter().map(|x| x.abs()).sum::<f64>().max(1e-9);
                        // scale strictly inside the margin
                        r.iter().map(|x| x / s * (1.0 - delta) * 0.999).collect()
                    })
                    .collect();
                (CovarianceModel::ar(order, rows, delta).unwrap(), n)
            },
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn ar_precision_is_banded((m, n) in ar_model()) {
        let CovarianceModel::Ar { order, delta, .. } = &m else { unreachable!() };
        let p = precision(&m, &VertexSet::range(1, n)).unwrap();
        for i in 0..n {
            for j in 0..n {
                if i.abs_diff(j) > *order {
                    prop_assert!(p.precision[(i, j)].abs() < 1e-8, "({i},{j}) = {}", p.precision[(i, j)]);
                }
            }
        }
        let exact = m.ar_precision(n).unwrap();
        prop_assert!((&exact - &p.precision).abs().max() < 1e-8);
        let cov = m.leading(n).unwrap();
        for k in 0..n {
            prop_assert!(cov[(k, k)] <= 1.0 / delta + 1e-10);
        }
        prop_assert!(p.partial_correlation.iter().all(|x| x.abs() <= 1.0 + 1e-10));
    }

    #[test]
    fn conditional_covariance_is_psd((m, n) in ar_model(), split in 1usize..9) {
        let a: VertexSet = (1..=split.min(n - 1)).collect();
        let b: VertexSet = (split.min(n - 1) + 1..=n).collect();
        let g = conditional(&m, &a, &b).unwrap();
        prop_assert!(linalg::is_symmetric(&g.cov, 1e-10));
        prop_assert!(linalg::eigenvalues(&g.cov)[0] > -1e-10);
    }
}

#[test]
fn lattice_sandwich_holds_for_small_cubes() {
    for v in [0.5, 1.0, 2.0] {
        let s = fourier_symbol_min(2, v, 2048, symbol_order(v)).unwrap();
        assert!(s.certified && s.m_g > 0.0, "V = {v}");
        let m = CovarianceModel::lattice(2, 2.0, v).unwrap();
        for r in 0..=3 {
            let n = (2 * r + 1) * (2 * r + 1);
            let ev = linalg::eigenvalues(&m.leading(n).unwrap());
            assert!(ev[0] >= s.m_f - 1e-8, "V = {v}, m = {r}: {} < {}", ev[0], s.m_f);
            assert!(ev[n - 1] <= s.big_m_f + 1e-8);
        }
    }
}

#[test]
fn lattice_supported_with_symbol_floor() {
    let m = CovarianceModel::lattice(2, 2.0, 1.0).unwrap();
    let opts = VerifyOptions { sizes: vec![9, 25, 49], ..Default::default() };
    let r = verify_conditions(&m, &opts).unwrap();
    assert_eq!(r.verdict, Verdict::Pass, "{}", r.to_json());
    let floor = r.section("symbol-sandwich").unwrap().metrics["m_f"];
    assert!((floor - 0.0904).abs() < 1e-3);
    let t = eigen_bounds(&m, &[9, 25, 49], DEFAULT_SIZE_CAP).unwrap();
    assert!(t.interlacing_ok && t.row_sum_ok);
}

#[test]
fn near_boundary_autoregression_supported() {
    let m = CovarianceModel::ar_stationary(&[0.6, -0.3889], 0.001).unwrap();
    let opts = VerifyOptions { sizes: vec![10, 50, 100], ..Default::default() };
    let r = verify_conditions(&m, &opts).unwrap();
    assert_eq!(r.verdict, Verdict::Pass, "{}", r.to_json());
    assert_eq!(r.section("ar-variance").unwrap().verdict, Verdict::Pass);
}

#[test]
fn diag_dominant_floor() {
    let m = CovarianceModel::diag_dominant(vec![2.0, 0.4, 0.3], 0.5, 3.0).unwrap();
    let t = eigen_bounds(&m, &[5, 20, 60], DEFAULT_SIZE_CAP).unwrap();
    assert!(t.records.iter().all(|r| r.lambda_min >= 0.5));
    assert_eq!(verify_conditions(&m, &VerifyOptions::default()).unwrap().verdict, Verdict::Pass);
}

#[test]
fn ar1_recursion_monotone_and_summable() {
    let m = CovarianceModel::ar_stationary(&[0.5], 0.25).unwrap();
    let env = DecayEnvelope::Geometric { c: 4.0, rho: 0.75 };
    let t = g_recursion(&m, &env, 200, 0.5).unwrap();
    assert_eq!(t.levels.len(), 5);
    assert!(t.monotone() && t.finite());
    // the tabulated part alone, summed by hand for one row
    let row0: f64 = (0..200).map(|j| t.levels[0][(0, j)] * ((j + 1) as f64).sqrt()).sum();
    let tail: f64 = (201..20_000).map(|k| 4.0 * 0.75f64.powi(k as i32 - 1) * (k as f64).sqrt()).sum();
    assert!((t.weighted[0][0] - row0 - tail).abs() < 1e-9 * (row0 + tail));
}

#[test]
fn lattice_trace_settles() {
    let m = CovarianceModel::lattice(2, 2.0, 1.0).unwrap();
    let a = VertexSet::from(vec![1]);
    let tr = conditional_convergence(&m, &a, &nearest_first_order(2, &a, 60), 60).unwrap();
    let d: Vec<f64> = tr.steps.iter().map(|s| s.delta_cov).collect();
    // shell by shell the changes shrink roughly fivefold
    assert!(d[39..].iter().all(|x| *x < 2e-4), "{d:?}");
    assert!(d[56..].iter().all(|x| *x < 1e-5), "{d:?}");
    let head = d[..20].iter().copied().fold(0.0, f64::max);
    let tail = d[40..].iter().copied().fold(0.0, f64::max);
    assert!(tail < head * 1e-2);
}

#[test]
fn ar1_trace_constant_after_neighbor() {
    let m = CovarianceModel::ar_stationary(&[0.5], 0.25).unwrap();
    let a = VertexSet::from(vec![1]);
    let tr = conditional_convergence(&m, &a, &(2..=12).collect::<Vec<_>>(), 11).unwrap();
    assert!(tr.steps[1..].iter().all(|s| s.delta_cov < 1e-12));
    assert!(tr.settled(1e-12, 5));
}

#[test]
fn band_relation_is_markov_to_band_graph() {
    let m = CovarianceModel::ar_stationary(&[0.4, 0.3], 0.2).unwrap();
    let sigma = m.leading(8).unwrap();
    let r = relation_from_gaussian(&sigma, &(1..=8).collect::<Vec<_>>(), 1e-8).unwrap();
    let g = LazyGraph::band(2, Some(8));
    let opts = AxiomOptions { cap: 8, ..Default::default() };
    let audit = equivalence_audit(&r, &g, &opts).unwrap();
    assert_eq!(audit.verdict, Verdict::Pass, "{}", audit.to_json());
    for p in [MarkovProperty::Pairwise, MarkovProperty::Local, MarkovProperty::Global] {
        assert_eq!(check_markov(&r, &g, p).unwrap().verdict, Verdict::Pass);
    }
}

#[test]
fn ar1_pairwise_graph_is_path() {
    let m = CovarianceModel::ar_stationary(&[0.5], 0.25).unwrap();
    let r = relation_from_gaussian(&m.leading(5).unwrap(), &[1, 2, 3, 4, 5], 1e-8).unwrap();
    let g = pairwise_graph(&r).unwrap();
    let path = LazyGraph::band(1, Some(5));
    assert_eq!(g.edges().unwrap(), path.edges().unwrap());
}

#[test]
fn explicit_identity_precision() {
    let m = CovarianceModel::explicit(DMatrix::identity(4, 4)).unwrap();
    let p = precision(&m, &VertexSet::range(1, 4)).unwrap();
    assert_eq!(p.precision, DMatrix::identity(4, 4));
}
