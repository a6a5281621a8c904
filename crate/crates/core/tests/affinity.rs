use forcelab::affinity::{graph_affinities, perplexity_affinities, AffinityMatrix};
use forcelab::graph::{gen_erdos_renyi, gen_k_regular};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn cloud(n: usize, d: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| (0..d).map(|_| StandardNormal.sample(&mut rng)).collect())
        .collect()
}

/// Rebuilds P from the reported bandwidths with plain loops.
fn naive_from_bandwidths(points: &[Vec<f64>], sigma: &[f64]) -> Vec<Vec<f64>> {
    let n = points.len();
    let d2 = |i: usize, j: usize| -> f64 { points[i].iter().zip(&points[j]).map(|(a, b)| (a - b).powi(2)).sum() };
    let mut cond = vec![vec![0.0; n]; n];
    for i in 0..n {
        let mut z = 0.0;
        for j in 0..n {
            if j != i {
                cond[i][j] = (-d2(i, j) / (2.0 * sigma[i] * sigma[i])).exp();
                z += cond[i][j];
            }
        }
        for j in 0..n {
            cond[i][j] /= z;
        }
    }
    let mut p = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            p[i][j] = (cond[i][j] + cond[j][i]) / (2.0 * n as f64);
        }
    }
    p
}

#[test]
fn perplexity_matrix_matches_naive_rebuild() {
    let pts = cloud(40, 3, 8);
    let (p, cal) = perplexity_affinities(&pts, 8.0).unwrap();
    let want = naive_from_bandwidths(&pts, &cal.bandwidths);
    for i in 0..40 {
        for j in 0..40 {
            assert!((p.get(i, j) - want[i][j]).abs() < 1e-12, "({i},{j})");
        }
    }
    assert!(cal.achieved.iter().all(|a| (a - 8.0).abs() < 1e-4 * 8.0));
}

#[test]
fn graph_affinity_is_uniform_over_edges() {
    let g = gen_k_regular(20, 4, 1).unwrap();
    let p = graph_affinities(&g, true).unwrap();
    assert!(p.is_normalized());
    assert_eq!(p.nnz(), 2 * g.edge_count());
    for &(u, v) in g.edges() {
        assert_eq!(p.get(u as usize, v as usize), 1.0 / 80.0);
    }
    let raw = graph_affinities(&g, false).unwrap();
    assert_eq!(raw.get(g.edges()[0].0 as usize, g.edges()[0].1 as usize), 1.0);
}

#[test]
fn asymmetric_triplets_are_rejected() {
    assert!(AffinityMatrix::from_triplets(3, [(0, 1, 0.5), (1, 0, 0.4)]).is_err());
    assert!(AffinityMatrix::from_triplets(3, [(0, 1, -0.5), (1, 0, -0.5)]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn perplexity_affinity_is_symmetric_and_normalized(seed in any::<u64>(), n in 5usize..40, frac in 0.1f64..0.9) {
        let pts = cloud(n, 2, seed);
        let perp = 1.0 + frac * (n as f64 - 2.0);
        let (p, cal) = perplexity_affinities(&pts, perp).unwrap();
        prop_assert!((p.total_mass() - 1.0).abs() < 1e-12);
        for (i, j, v) in p.triplets() {
            prop_assert!(v >= 0.0 && i != j);
            prop_assert_eq!(v, p.get(j, i));
        }
        for a in &cal.achieved {
            prop_assert!((a - perp).abs() < 1e-4 * perp);
        }
    }

    #[test]
    fn er_affinity_is_normalized(seed in any::<u64>()) {
        let g = gen_erdos_renyi(30, 0.2, seed).unwrap();
        prop_assume!(g.edge_count() > 0);
        let p = graph_affinities(&g, true).unwrap();
        prop_assert!(p.is_normalized());
    }
}
