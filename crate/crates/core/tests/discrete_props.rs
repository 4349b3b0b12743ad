use std::collections::BTreeMap;

use markovia_core::discrete::*;
use markovia_core::graph::VertexSet;
use markovia_core::graphoid::{check_markov, relation_from_discrete, MarkovProperty, DEFAULT_DISCRETE_TOL};
use markovia_core::report::Verdict;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_finite(n: usize, density: f64, rng: &mut ChaCha8Rng) -> IsingModel {
    let fields: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut edges = vec![];
    for i in 1..=n {
        for j in i + 1..=n {
            if rng.gen_bool(density) {
                edges.push((i, j, rng.gen_range(-1.5..1.5)));
            }
        }
    }
    IsingModel::finite(&fields, edges).unwrap()
}

fn halving_chain() -> IsingModel {
    IsingModel::chain(Regime::Summable, ChainRule::Geometric { scale: 1.0, ratio: 0.5 }, FieldRule::Zero).unwrap()
}

/// `P(X_{1..m} = v)` summed straight from the table.
fn prefix_marginal(p: &Pmf, m: usize, v: usize) -> f64 {
    p.probs().iter().enumerate().filter(|(s, _)| s & ((1 << m) - 1) == v).map(|(_, q)| q).sum()
}

#[test]
fn table_marginal_matches_ratio_formula() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..5 {
        let m = random_finite(10, 0.3, &mut rng);
        let p = ising_exact(&m, 10).unwrap();
        assert!(p.min_prob() > 0.0);
        assert!((p.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let f = ising_fmvn(&m, 1, &[1], 10).unwrap();
        let by_ratio = f / (1.0 + f);
        assert!((prefix_marginal(&p, 1, 1) - by_ratio).abs() < 1e-12);
    }
}

#[test]
fn conditional_matches_table_and_is_local() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..20 {
        let n = 8;
        let m = random_finite(n, 0.35, &mut rng);
        let p = ising_exact(&m, n).unwrap();
        let j = rng.gen_range(1..=n);
        let state: usize = rng.gen_range(0..1 << n);
        let x: BTreeMap<usize, u8> = (1..=n).filter(|&k| k != j).map(|k| (k, ((state >> (k - 1)) & 1) as u8)).collect();
        let cond: Vec<(usize, u8)> = x.iter().map(|(&k, &v)| (k, v)).collect();
        let from_table = p.conditional_one(j, &cond).unwrap().unwrap();
        let c = ising_conditional(&m, j, &x).unwrap();
        assert!((c - from_table).abs() < 1e-12);
        let mut flipped = x.clone();
        let ne = m.neighbors(j);
        for (k, v) in flipped.iter_mut() {
            if !ne.contains(*k) {
                *v ^= 1;
            }
        }
        assert_eq!(ising_conditional(&m, j, &flipped).unwrap().to_bits(), c.to_bits());
    }
}

#[test]
fn zero_couplings_give_unit_ratios() {
    let m = IsingModel::chain(Regime::Summable, ChainRule::None, FieldRule::Zero).unwrap();
    let c = ising_convergence(&m, 2, 8).unwrap();
    for t in &c.traces {
        assert!(t.f.iter().all(|&f| (f - 1.0).abs() < 1e-15));
        assert!(t.alpha.iter().all(|&a| (a - 1.0).abs() < 1e-15));
    }
    assert!(c.beta.iter().all(|&b| b == 0.0));
    assert_eq!(c.sandwich_c, 1.0);
    assert_eq!(c.sandwich_ok, Some(true));
}

#[test]
fn ratio_formula_matches_marginal_ratios() {
    let model = halving_chain();
    for n in 2..=16 {
        let p = ising_exact(&model, n).unwrap();
        for mm in 1..=3.min(n) {
            let zero = prefix_marginal(&p, mm, 0);
            for v in 0..1usize << mm {
                let bits: Vec<u8> = (0..mm).map(|k| ((v >> k) & 1) as u8).collect();
                let f = ising_fmvn(&model, mm, &bits, n).unwrap();
                let want = prefix_marginal(&p, mm, v) / zero;
                assert!((f - want).abs() < 1e-10 * want.max(1.0), "n={n} m={mm} v={v}: {f} vs {want}");
            }
        }
    }
}

#[test]
fn summable_chain_converges_with_bounds() {
    let model = halving_chain();
    for mm in 1..=3 {
        let c = ising_convergence(&model, mm, 16).unwrap();
        assert!(c.alpha_bound_holds(), "m = {mm}");
        assert!(c.bound_ok.iter().any(|b| b.is_some()));
        assert!((c.sandwich_c - std::f64::consts::E.powi(2)).abs() < 1e-12);
        assert_eq!(c.sandwich_ok, Some(true));
        for t in &c.traces {
            let (lo, hi) = t.limit.unwrap();
            let last = *t.f.last().unwrap();
            assert!(lo <= last && last <= hi);
            assert!(t.f.iter().all(|&f| f > 0.0));
        }
    }
}

#[test]
fn non_summable_chain_rejected() {
    let r = IsingModel::chain(Regime::Summable, ChainRule::Power { scale: 1.0, exponent: 1.0 }, FieldRule::Zero);
    assert!(r.is_err());
    let finite = IsingModel::finite(&[0.0; 3], vec![]).unwrap();
    assert!(ising_convergence(&finite, 1, 3).is_err());
}

#[test]
fn sparse_normalizer_brackets_product() {
    let m = IsingModel::chain(Regime::Sparse, ChainRule::None, FieldRule::LogPower { c: 2.0, offset: 0.0 }).unwrap();
    let exact = std::f64::consts::PI.sinh() / std::f64::consts::PI;
    let z1 = sparse_ising_normalize(&m, 1, 1000).unwrap();
    let basel: f64 = (1..=1000).map(|k| 1.0 / (k as f64 * k as f64)).sum();
    assert!((z1.partial - 1.0 - basel).abs() < 1e-12);
    for (s, k) in [(1, 1000), (2, 300), (3, 100), (4, 60)] {
        let z = sparse_ising_normalize(&m, s, k).unwrap();
        assert!(z.partial <= exact && exact <= z.upper(), "s={s} K={k}: {} {} {}", z.partial, exact, z.upper());
    }
    let tight = sparse_ising_normalize(&m, 4, 60).unwrap();
    assert!(tight.upper() - tight.partial < 0.3);
    let loose = sparse_ising_normalize(&m, 2, 60).unwrap();
    assert!(tight.upper() - tight.partial < loose.upper() - loose.partial);
}

#[test]
fn sparse_conditional_floor_holds_on_truncations() {
    let m = IsingModel::new(
        Regime::Sparse,
        ChainRule::Geometric { scale: -0.7, ratio: 0.9 },
        FieldRule::LogPower { c: 2.0, offset: 0.1 },
        vec![(1, 4, -0.5), (2, 7, -0.3)],
        None,
    )
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let n = 12;
    let p = ising_exact(&m, n).unwrap();
    for mm in 1..=3 {
        let eps = sparse_conditional_floor(&m, mm).unwrap();
        assert!(eps > 0.0);
        for _ in 0..30 {
            let b: VertexSet = (mm + 1..=n).filter(|_| rng.gen_bool(0.4)).collect();
            let xb: Vec<u8> = b.iter().map(|_| rng.gen_bool(0.3) as u8).collect();
            for v in 0..1usize << mm {
                let mut num = 0.0;
                let mut den = 0.0;
                for (s, &q) in p.probs().iter().enumerate() {
                    if b.iter().zip(&xb).all(|(k, &x)| ((s >> (k - 1)) & 1) as u8 == x) {
                        den += q;
                        if s & ((1 << mm) - 1) == v {
                            num += q;
                        }
                    }
                }
                assert!(num / den >= eps, "m={mm}: {} < {eps}", num / den);
            }
        }
    }
}

#[test]
fn ising_tables_are_markov_to_their_graph() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for n in [4, 5, 6] {
        let m = random_finite(n, 0.4, &mut rng);
        let p = ising_exact(&m, n).unwrap();
        let r = relation_from_discrete(&p, DEFAULT_DISCRETE_TOL);
        let g = m.interaction_graph(n).unwrap();
        for prop in [MarkovProperty::Pairwise, MarkovProperty::Local, MarkovProperty::Global] {
            assert_eq!(check_markov(&r, &g, prop).unwrap().verdict, Verdict::Pass, "n={n} {prop:?}");
        }
    }
}

fn chain_spec() -> impl Strategy<Value = MarkovChainSpec> {
    (0.05f64..0.95, proptest::collection::vec((0.05f64..0.95, 0.05f64..0.95), 12))
        .prop_map(|(pi1, pt)| MarkovChainSpec::new(pi1, pt.iter().map(|x| x.0).collect(), pt.iter().map(|x| x.1).collect()).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn chain_marginal_matches_path_sum(c in chain_spec(), n in 1usize..=12) {
        let p = chain_pmf(&c, n).unwrap();
        let by_paths: f64 = p.probs().iter().enumerate().filter(|(s, _)| (s >> (n - 1)) & 1 == 1).map(|(_, q)| q).sum();
        let pi = chain_marginal(&c, n).unwrap();
        prop_assert!((pi - by_paths).abs() < 1e-12);
        prop_assert!(pi > 0.0 && pi < 1.0);
    }

    #[test]
    fn chain_variance_below_product(c in chain_spec(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 12;
        let p = chain_pmf(&c, n).unwrap();
        let m = rng.gen_range(1..=4);
        let n_prime = rng.gen_range(m + 1..=n);
        let support: Vec<usize> = (n_prime..=n).filter(|_| rng.gen_bool(0.6)).collect();
        let support = if support.is_empty() { vec![n_prime] } else { support };
        let a = TailEvent::random(support, &mut rng);
        let b: VertexSet = (m + 1..n_prime).filter(|_| rng.gen_bool(0.5)).collect();
        let xb: Vec<u8> = b.iter().map(|_| rng.gen_bool(0.5) as u8).collect();
        let v = dcp_variance(&p, &a, m, &b, &xb).unwrap();
        prop_assert!(v <= c.product_bound(m, n_prime) + 1e-12);
    }
}

#[test]
fn coin_mixture_variance_does_not_decay() {
    let p = coin_mixture_pmf(12, 0.5, 0.2, 0.8).unwrap();
    let trace: Vec<f64> = (4..=12)
        .map(|np| dcp_variance(&p, &TailEvent::coordinate(np), 3, &VertexSet::empty(), &[]).unwrap())
        .collect();
    assert!(trace.iter().all(|&v| v > 0.05));
    assert!(trace.windows(2).all(|w| (w[0] - w[1]).abs() < 1e-12));
}

#[test]
fn product_bound_tracks_divergent_sum() {
    let c = MarkovChainSpec::new(0.4, vec![0.9], vec![0.2]).unwrap();
    assert!(c.product_bound(1, 60) < 1e-8);
    assert!(c.divergence_partial_sum(60) > 10.0);
}
