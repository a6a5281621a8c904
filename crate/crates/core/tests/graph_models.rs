use forcelab::graph::{
    edges_between, enumerate_pair_moments, gen_erdos_renyi, gen_k_regular, pair_moment_closed_forms, Graph, GraphKind,
    VertexSubsetPair,
};
use num_rational::Ratio;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn enumeration_matches_closed_forms() {
    for (n, k) in [(4, 2), (5, 2), (6, 2), (6, 3), (7, 2), (8, 3)] {
        let counted = enumerate_pair_moments(n, k).unwrap();
        let closed = pair_moment_closed_forms(n, k).unwrap();
        assert_eq!(counted.single_edge_prob, closed.single_edge_prob, "n={n} k={k}");
        assert_eq!(counted.shared_vertex_moment, closed.shared_vertex_moment, "n={n} k={k}");
        assert_eq!(counted.disjoint_moment, closed.disjoint_moment, "n={n} k={k}");
    }
}

#[test]
fn six_vertex_two_regular_moments() {
    let r = enumerate_pair_moments(6, 2).unwrap();
    assert_eq!(r.graph_count, 70);
    assert_eq!(r.shared_vertex_moment, Ratio::new(1, 10));
    assert_eq!(r.disjoint_moment, Ratio::new(1, 5));
    assert_eq!(r.single_edge_prob, Ratio::new(2, 5));
}

#[test]
fn edge_count_near_expectation_for_large_sets() {
    let g = gen_k_regular(600, 60, 3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..10 {
        let s = VertexSubsetPair::random(600, 150, 200, &mut rng).unwrap();
        let probe = edges_between(&g, &s).unwrap();
        assert!((probe.expected - 0.1 * 150.0 * 200.0).abs() < 1e-9);
        assert!(probe.relative_deviation < 0.15, "{probe:?}");
    }
}

#[test]
fn edges_between_naive_count() {
    let g = gen_erdos_renyi(40, 0.3, 9).unwrap();
    let s = VertexSubsetPair::new((0..10).collect(), (20..35).collect()).unwrap();
    let probe = edges_between(&g, &s).unwrap();
    let naive = g
        .edges()
        .iter()
        .filter(|&&(u, v)| {
            let (u, v) = (u as usize, v as usize);
            (s.a().contains(&u) && s.b().contains(&v)) || (s.a().contains(&v) && s.b().contains(&u))
        })
        .count();
    assert_eq!(probe.observed, naive);
    assert!((probe.expected - 0.3 * 150.0).abs() < 1e-12);
}

#[test]
fn from_edges_rejects_bad_input() {
    let kind = GraphKind::ErdosRenyi { p: 0.5 };
    assert!(Graph::from_edges(3, [(0, 0)], kind, 0).is_err());
    assert!(Graph::from_edges(3, [(0, 1), (1, 0)], kind, 0).is_err());
    assert!(Graph::from_edges(3, [(0, 3)], kind, 0).is_err());
    assert!(Graph::from_edges(4, [(0, 1)], GraphKind::KRegular { k: 1 }, 0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn k_regular_is_simple_and_regular(n in 4usize..60, k_frac in 0.0f64..1.0, seed in any::<u64>()) {
        let k = 1 + ((n - 2) as f64 * k_frac) as usize;
        prop_assume!(n * k % 2 == 0);
        let g = gen_k_regular(n, k, seed).unwrap();
        prop_assert_eq!(g.edge_count(), n * k / 2);
        prop_assert!(g.degrees().iter().all(|&d| d == k));
        let mut seen = std::collections::HashSet::new();
        for &(u, v) in g.edges() {
            prop_assert!(u < v);
            prop_assert!(seen.insert((u, v)));
        }
        prop_assert_eq!(gen_k_regular(n, k, seed).unwrap(), g);
    }

    #[test]
    fn erdos_renyi_is_deterministic(n in 2usize..50, p in 0.01f64..0.99, seed in any::<u64>()) {
        let g = gen_erdos_renyi(n, p, seed).unwrap();
        prop_assert_eq!(gen_erdos_renyi(n, p, seed).unwrap(), g.clone());
        prop_assert!(g.edges().iter().all(|&(u, v)| u < v && (v as usize) < n));
    }

    #[test]
    fn edge_count_is_symmetric(seed in any::<u64>()) {
        let g = gen_k_regular(30, 6, seed).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = VertexSubsetPair::random(30, 8, 9, &mut rng).unwrap();
        let t = VertexSubsetPair::new(s.b().to_vec(), s.a().to_vec()).unwrap();
        prop_assert_eq!(edges_between(&g, &s).unwrap().observed, edges_between(&g, &t).unwrap().observed);
    }
}
