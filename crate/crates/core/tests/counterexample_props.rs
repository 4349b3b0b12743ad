use markovia_core::counterexamples::*;
use markovia_core::graph::VertexSet;
use markovia_core::report::Verdict;
use nalgebra::DMatrix;
use proptest::prelude::*;

fn phi(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// `∫ π0 π1 dP` for one observation of a unit-variance mixture, by a plain
/// Riemann sum on a wide grid.
fn overlap_one_dim(w: f64) -> f64 {
    let h = 1e-3;
    (0..40_000)
        .map(|k| {
            let y = -19.5 + k as f64 * h;
            let (f0, f1) = ((1.0 - w) * phi(y), w * phi(y - 1.0));
            f0 * f1 / (f0 + f1) * h
        })
        .sum()
}

/// Same for a correlated pair with covariance `s`.
fn overlap_two_dim(w: f64, s: &DMatrix<f64>) -> f64 {
    let inv = s.clone().try_inverse().unwrap();
    let det = s.determinant();
    let dens = |y1: f64, y2: f64| {
        let q = inv[(0, 0)] * y1 * y1 + 2.0 * inv[(0, 1)] * y1 * y2 + inv[(1, 1)] * y2 * y2;
        (-0.5 * q).exp() / (2.0 * std::f64::consts::PI * det.sqrt())
    };
    let h = 0.02;
    let mut acc = 0.0;
    for a in 0..900 {
        for b in 0..900 {
            let (y1, y2) = (-8.5 + a as f64 * h, -8.5 + b as f64 * h);
            let f0 = (1.0 - w) * dens(y1, y2);
            let f1 = w * dens(y1 - 1.0, y2 - 1.0);
            if f0 + f1 > 0.0 {
                acc += f0 * f1 / (f0 + f1) * h * h;
            }
        }
    }
    acc
}

#[test]
fn parity_signature_every_truncation() {
    for m in 7..=16 {
        let spec = ParityProcessSpec::new(m).unwrap();
        let o = parity_analysis(&spec).unwrap();
        assert!(o.pairwise.iter().all(|d| *d <= PAIRWISE_TOL), "M = {m}: {:?}", o.pairwise);
        assert!((o.joint - 0.125).abs() < 1e-12, "M = {m}: {}", o.joint);
        assert!((o.agreement.0 - 0.75).abs() < 1e-12 && (o.agreement.1 - 0.75).abs() < 1e-12);
        assert_eq!(o.full_min_prob, 0.0);
        assert!(o.kept_min_prob > 0.0);
        assert!(o.kept_intersection.is_none_or(|v| v == Verdict::Pass));
        assert_eq!(parity_verdicts(&spec).unwrap().verdict, Verdict::Pass);
    }
}

#[test]
fn parity_core_distance() {
    let p = parity_core_pmf(0.25, 0.25).unwrap();
    let d = p.ci_distance(&VertexSet::from(vec![0]), &VertexSet::from(vec![1, 2]), &VertexSet::from(vec![3])).unwrap();
    assert!((d - 0.125).abs() < 1e-15);
    // all three coins at zero
    assert!((p.prob(0) - 27.0 / 64.0).abs() < 1e-15);
    assert!((p.marginal(&VertexSet::from(vec![3])).unwrap().prob(0) - 0.625).abs() < 1e-15);
}

#[test]
fn fair_first_coin_removes_dependence() {
    let mut spec = ParityProcessSpec::new(8).unwrap();
    spec.p_y0 = 0.5;
    let o = parity_analysis(&spec).unwrap();
    assert!(o.joint < 1e-12);
    let r = parity_verdicts(&spec).unwrap();
    assert_eq!(r.section("joint-dependence").unwrap().verdict, Verdict::Fail);
    assert_eq!(r.verdict, Verdict::Fail);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn parity_joint_distance_closed_form(
        p0 in 0.05f64..0.95,
        p12 in 0.05f64..0.95,
        tail in proptest::collection::vec(0.02f64..0.98, 4..=7),
    ) {
        let m = tail.len() + 3;
        let spec = ParityProcessSpec { truncation: m, p_y0: p0, p_y12: p12, tail };
        let o = parity_analysis(&spec).unwrap();
        prop_assert!(o.pairwise.iter().all(|d| *d <= PAIRWISE_TOL));
        // equal-weight parity classes give u(1-u)|1-2p0| at u = 1/2
        prop_assert!((o.joint - (1.0 - 2.0 * p0).abs() / 4.0).abs() < 1e-12);
    }
}

#[test]
fn iid_shift_covariance_and_trace() {
    let spec = ThetaShiftSpec::new(0.5, ShiftBase::Iid, 10).unwrap();
    assert_eq!(spec.mixture_covariance()[(0, 1)], 0.25);
    let r = theta_shift_verdicts(&spec).unwrap();
    assert_eq!(r.verdict, Verdict::Pass, "{}", r.to_json());
    assert_eq!(r.section("latent-conditioning").unwrap().metrics["cond_cov_given_latent"], 0.0);
    let t = theta_shift_trace(&spec).unwrap();
    assert_eq!(t.len(), 9);
    assert_eq!(t[0].cond_cov, 0.25);
    assert!(t.iter().all(|s| s.cond_cov > 0.0));
    assert!(t.windows(2).all(|w| w[1].cond_cov < w[0].cond_cov));
    for (k, s) in t.iter().enumerate() {
        assert!((s.information - k as f64).abs() < 1e-12);
    }
}

#[test]
fn overlap_matches_direct_integration() {
    for w in [0.5, 0.3] {
        let spec = ThetaShiftSpec::new(w, ShiftBase::Iid, 4).unwrap();
        let mc = mixture_conditional(&spec, &[1, 2], &[3]).unwrap();
        assert!((mc.overlap - overlap_one_dim(w)).abs() < 1e-9, "{} vs {}", mc.overlap, overlap_one_dim(w));
        assert!((mc.expected_cov[(0, 1)] - mc.overlap).abs() < 1e-15);
    }
    let spec = ThetaShiftSpec::new(0.5, ShiftBase::MovingAverage { alpha: 0.6 }, 5).unwrap();
    let mc = mixture_conditional(&spec, &[1], &[2, 3]).unwrap();
    let s = ma_covariance(0.6, 5).view((1, 1), (2, 2)).into_owned();
    assert!((mc.overlap - overlap_two_dim(0.5, &s)).abs() < 1e-6);
}

#[test]
fn ma_precision_grid() {
    for k in 1..=9 {
        let alpha = k as f64 / 10.0;
        let c = ma_precision_check(alpha, 12).unwrap();
        assert!(c.max_error < 1e-10, "alpha {alpha}: {}", c.max_error);
        assert!(c.min_offdiag > 0.0 && c.sign_agrees);
        let spec = ThetaShiftSpec::new(0.5, ShiftBase::MovingAverage { alpha }, 12).unwrap();
        assert_eq!(ma_shift_verdicts(&spec).unwrap().verdict, Verdict::Pass);
    }
}

#[test]
fn ma_precision_frozen_values() {
    let inv5 = ma_covariance(0.5, 5).try_inverse().unwrap();
    assert!((inv5[(0, 2)] - 0.328125).abs() < 1e-12);
    let inv4 = ma_covariance(0.5, 4).try_inverse().unwrap();
    assert!((inv4[(0, 2)] - 0.3125).abs() < 1e-12);
    let inv = ma_covariance(0.75, 10).try_inverse().unwrap();
    let closed = ma_precision(0.75, 10);
    assert!((&inv - &closed).abs().max() < 1e-10);
    assert!(closed.iter().all(|x| x.abs() > 0.0));
}

#[test]
fn ma_small_alpha_is_nearly_independent() {
    let p = ma_precision(1e-6, 8);
    for i in 0..8 {
        assert!((p[(i, i)] - 1.0).abs() < 1e-11);
        for k in 0..8 {
            if i != k {
                assert!(p[(i, k)].abs() <= 1.01e-6);
            }
        }
    }
}

#[test]
fn ma_tail_keeps_information() {
    let spec = ThetaShiftSpec::new(0.5, ShiftBase::MovingAverage { alpha: 0.5 }, 12).unwrap();
    let t = tail_trace(&spec).unwrap();
    assert!(t.iter().filter(|s| s.start >= 3).all(|s| s.head_cov == 0.25));
    assert!(t.iter().all(|s| s.posterior_variance > 0.0));
}
