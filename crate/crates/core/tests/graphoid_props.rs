use markovia_core::discrete::Pmf;
use markovia_core::graph::{LazyGraph, Vertex, VertexSet};
use markovia_core::graphoid::*;
use markovia_core::report::Verdict;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Separation by explicit enumeration of simple paths.
fn separated_by_paths(n: usize, edges: &[(Vertex, Vertex)], a: &[Vertex], b: &[Vertex], s: &[Vertex]) -> bool {
    let adj = |u: Vertex| -> Vec<Vertex> {
        edges
            .iter()
            .filter_map(|&(x, y)| if x == u { Some(y) } else if y == u { Some(x) } else { None })
            .collect()
    };
    fn dfs(
        u: Vertex,
        path: &mut Vec<Vertex>,
        adj: &dyn Fn(Vertex) -> Vec<Vertex>,
        b: &[Vertex],
        s: &[Vertex],
    ) -> bool {
        // true when some simple path from u reaches b without touching s
        if b.contains(&u) {
            return true;
        }
        for w in adj(u) {
            if path.contains(&w) || s.contains(&w) {
                continue;
            }
            path.push(w);
            if dfs(w, path, adj, b, s) {
                return true;
            }
            path.pop();
        }
        false
    }
    let _ = n;
    !a.iter().any(|&x| dfs(x, &mut vec![x], &adj, b, s))
}

fn graph_and_triple() -> impl Strategy<Value = (usize, Vec<(Vertex, Vertex)>, Vec<u8>)> {
    (2usize..=8).prop_flat_map(|n| {
        let pairs: Vec<(Vertex, Vertex)> =
            (1..=n).flat_map(|i| (i + 1..=n).map(move |j| (i, j))).collect();
        let m = pairs.len();
        (
            Just(n),
            proptest::collection::vec(any::<bool>(), m).prop_map(move |keep| {
                pairs.iter().zip(keep).filter(|(_, k)| *k).map(|(p, _)| *p).collect()
            }),
            proptest::collection::vec(0u8..4, n),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn separator_matches_path_enumeration((n, edges, labels) in graph_and_triple()) {
        let pick = |l: u8| -> Vec<Vertex> { (1..=n).filter(|&v| labels[v - 1] == l).collect() };
        let (a, b, s) = (pick(0), pick(1), pick(2));
        prop_assume!(!a.is_empty() && !b.is_empty());
        let g = LazyGraph::explicit(VertexSet::range(1, n), &edges).unwrap();
        let fast = g.is_separator(&a.clone().into(), &b.clone().into(), &s.clone().into()).unwrap();
        prop_assert_eq!(fast, separated_by_paths(n, &edges, &a, &b, &s));
    }

    #[test]
    fn positive_pmf_is_a_graphoid(seed in any::<u64>(), n in 3usize..=4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pmf = markov_pmf(n, &mut rng);
        prop_assume!(pmf.min_prob() >= 1e-6);
        let r = relation_from_discrete(&pmf, DEFAULT_DISCRETE_TOL);
        for ax in [Axiom::Symmetry, Axiom::Decomposition, Axiom::WeakUnion, Axiom::Contraction, Axiom::Intersection] {
            let rep = check_axiom(&r, ax, &AxiomOptions::default()).unwrap();
            prop_assert_eq!(rep.verdict, Verdict::Pass, "{}", ax.id());
        }
    }

    #[test]
    fn pairwise_graph_satisfies_pairwise(seed in any::<u64>(), n in 2usize..=5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pmf = markov_pmf(n, &mut rng);
        let r = relation_from_discrete(&pmf, DEFAULT_DISCRETE_TOL);
        let g = pairwise_graph(&r).unwrap();
        prop_assert_eq!(check_markov(&r, &g, MarkovProperty::Pairwise).unwrap().verdict, Verdict::Pass);
    }

    #[test]
    fn twins_answer_alike(seed in any::<u64>(), a in 1usize..=4, b in 1usize..=4, c in proptest::option::of(1usize..=4)) {
        prop_assume!(a != b && c != Some(a) && c != Some(b));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pmf = markov_pmf(4, &mut rng);
        let r = relation_from_discrete(&pmf, DEFAULT_DISCRETE_TOL);
        let c: VertexSet = c.into_iter().collect();
        prop_assert_eq!(
            r.query(&[a].into(), &[b].into(), &c).unwrap(),
            r.query(&[b].into(), &[a].into(), &c).unwrap()
        );
    }
}

fn markov_pmf(n: usize, rng: &mut ChaCha8Rng) -> Pmf {
    Pmf::random_pairwise(n, 0.5, 0.05, rng).unwrap().0
}

#[test]
fn independent_coins_give_edgeless_graph() {
    let pmf = Pmf::product(vec![1, 2, 3, 4], &[0.3, 0.5, 0.6, 0.9]).unwrap();
    let r = relation_from_discrete(&pmf, DEFAULT_DISCRETE_TOL);
    assert!(r.query(&[1, 2].into(), &[3].into(), &[4].into()).unwrap());
    assert!(pairwise_graph(&r).unwrap().edges().unwrap().is_empty());
}

#[test]
fn four_cycle_is_recovered() {
    // potentials on the cycle 1-2-3-4-1 favouring agreement
    let w = (0..16usize)
        .map(|s| {
            let x = |k: usize| (s >> (k - 1)) & 1;
            [(1, 2, 2.0), (2, 3, 3.0), (3, 4, 1.5), (4, 1, 2.5)]
                .iter()
                .map(|&(i, j, a): &(usize, usize, f64)| if x(i) == x(j) { a } else { 1.0 })
                .product::<f64>()
        })
        .collect();
    let pmf = Pmf::from_weights(vec![1, 2, 3, 4], w).unwrap();
    let r = relation_from_discrete(&pmf, DEFAULT_DISCRETE_TOL);
    let g = pairwise_graph(&r).unwrap();
    assert_eq!(g.edges().unwrap(), vec![(1, 2), (1, 4), (2, 3), (3, 4)]);
    let rep = equivalence_audit(&r, &g, &AxiomOptions::default()).unwrap();
    assert_eq!(rep.verdict, Verdict::Pass);
    assert_eq!(rep.section("G*").unwrap().verdict, Verdict::Pass);
}

#[test]
fn xor_triple_statements() {
    let w = (0..8usize)
        .map(|s| if (s >> 2) & 1 == (s & 1) ^ ((s >> 1) & 1) { 0.25 } else { 0.0 })
        .collect();
    let r = relation_from_discrete(&Pmf::new(vec![1, 2, 3], w).unwrap(), DEFAULT_DISCRETE_TOL);
    assert!(r.query(&[1].into(), &[2].into(), &VertexSet::empty()).unwrap());
    assert!(!r.query(&[1].into(), &[2].into(), &[3].into()).unwrap());
}

#[test]
fn injected_intersection_violation_blocks_pairwise_to_global() {
    let st = |a: Vertex, b: Vertex, c: &[Vertex]| {
        CIStatement::new([a].into(), [b].into(), c.to_vec().into()).unwrap()
    };
    let r = CIRelation::explicit(VertexSet::range(1, 3), [st(1, 2, &[3]), st(1, 3, &[2])]).unwrap();
    let g = pairwise_graph(&r).unwrap();
    assert_eq!(g.edges().unwrap(), vec![(2, 3)]);
    let rep = equivalence_audit(&r, &g, &AxiomOptions::default()).unwrap();
    assert_eq!(rep.verdict, Verdict::Pass);
    assert_eq!(rep.section("P*").unwrap().verdict, Verdict::Pass);
    assert_eq!(rep.section("G*").unwrap().verdict, Verdict::Fail);
    assert_eq!(rep.section("P5*").unwrap().verdict, Verdict::Fail);
    let pg = rep.section("P* => G*").unwrap();
    assert_eq!(pg.verdict, Verdict::Inconclusive);
    assert!(pg.notes[0].contains("P5* fails"));
}

#[test]
fn full_partitions_agree_with_singletons_on_positive_pmfs() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..5 {
        let pmf = markov_pmf(5, &mut rng);
        let r = relation_from_discrete(&pmf, DEFAULT_DISCRETE_TOL);
        let quick = check_axiom(&r, Axiom::GeneralIntersection, &AxiomOptions::default()).unwrap();
        let full = check_axiom(
            &r,
            Axiom::GeneralIntersection,
            &AxiomOptions { full_partitions: true, ..Default::default() },
        )
        .unwrap();
        assert_eq!(quick.verdict, full.verdict);
        assert_eq!(quick.verdict, Verdict::Pass);
    }
}
