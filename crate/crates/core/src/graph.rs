//! Random-graph affinity models.
//!
//! Two dense models of a homogeneous cluster are supported: random
//! `k`-regular graphs and Erdős–Rényi graphs `G(n, p)`. Besides the
//! generators this module carries the edge-count probe between vertex
//! subsets and an exhaustive enumeration of small labeled regular graphs,
//! which serves as the exact reference for pair-correlation moments.

use std::collections::HashSet;

use num_rational::Ratio;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest vertex count accepted by [`enumerate_pair_moments`].
pub const MAX_ENUMERATION_N: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum GraphKind {
    KRegular { k: usize },
    ErdosRenyi { p: f64 },
}

impl GraphKind {
    /// Probability that a fixed pair of vertices is joined by an edge.
    pub fn edge_probability(&self, n: usize) -> f64 {
        match *self {
            GraphKind::KRegular { k } => k as f64 / (n as f64 - 1.0),
            GraphKind::ErdosRenyi { p } => p,
        }
    }
}

/// Simple undirected graph on vertices `0..n`.
///
/// Edges are stored once as `(u, v)` with `u < v`, sorted lexicographically.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    n: usize,
    edges: Vec<(u32, u32)>,
    kind: GraphKind,
    seed: u64,
}

impl Graph {
    /// Builds a graph from an explicit edge list, validating simplicity.
    pub fn from_edges(
        n: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
        kind: GraphKind,
        seed: u64,
    ) -> Result<Self> {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for (a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::param("edges", format!("vertex out of range in ({a}, {b})")));
            }
            if a == b {
                return Err(Error::param("edges", format!("self-loop at vertex {a}")));
            }
            let (u, v) = if a < b { (a, b) } else { (b, a) };
            if !seen.insert((u, v)) {
                return Err(Error::param("edges", format!("duplicate edge ({u}, {v})")));
            }
            out.push((u as u32, v as u32));
        }
        out.sort_unstable();
        let g = Graph {
            n,
            edges: out,
            kind,
            seed,
        };
        if let GraphKind::KRegular { k } = kind {
            if g.degrees().iter().any(|&d| d != k) {
                return Err(Error::param("edges", format!("graph is not {k}-regular")));
            }
        }
        Ok(g)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> GraphKind {
        self.kind
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n];
        for &(u, v) in &self.edges {
            deg[u as usize] += 1;
            deg[v as usize] += 1;
        }
        deg
    }
}

fn edge_key(u: usize, v: usize) -> (u32, u32) {
    if u < v {
        (u as u32, v as u32)
    } else {
        (v as u32, u as u32)
    }
}

/// Samples a random `k`-regular graph on `n` vertices.
///
/// Stubs are paired at random, keeping only pairings that create neither a
/// loop nor a repeated edge and re-pairing the leftover stubs; a dead end
/// restarts from scratch. The result is then mixed by at least `10·|E|`
/// accepted double-edge swaps, which preserve every degree.
pub fn gen_k_regular(n: usize, k: usize, seed: u64) -> Result<Graph> {
    if n < 3 {
        return Err(Error::param("n", format!("need n >= 3, got {n}")));
    }
    if k == 0 || k >= n {
        return Err(Error::param("k", format!("need 1 <= k < n, got k = {k}, n = {n}")));
    }
    if (n * k) % 2 != 0 {
        return Err(Error::param("k", format!("n·k must be even, got {n}·{k}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut set = loop {
        if let Some(edges) = try_pairing(n, k, &mut rng) {
            break edges;
        }
    };
    let mut edges: Vec<(u32, u32)> = set.iter().copied().collect();
    edges.sort_unstable();

    let target = 10 * edges.len();
    let max_attempts = 100 * edges.len();
    let mut accepted = 0;
    let mut attempts = 0;
    while accepted < target && attempts < max_attempts {
        attempts += 1;
        let i = rng.random_range(0..edges.len());
        let j = rng.random_range(0..edges.len());
        if i == j {
            continue;
        }
        let (a, b) = edges[i];
        let (mut c, mut d) = edges[j];
        if rng.random::<bool>() {
            std::mem::swap(&mut c, &mut d);
        }
        // (a,b),(c,d) -> (a,c),(b,d)
        if a == c || b == d {
            continue;
        }
        let e1 = edge_key(a as usize, c as usize);
        let e2 = edge_key(b as usize, d as usize);
        if set.contains(&e1) || set.contains(&e2) {
            continue;
        }
        set.remove(&edges[i]);
        set.remove(&edges[j]);
        set.insert(e1);
        set.insert(e2);
        edges[i] = e1;
        edges[j] = e2;
        accepted += 1;
    }
    edges.sort_unstable();
    Ok(Graph {
        n,
        edges,
        kind: GraphKind::KRegular { k },
        seed,
    })
}

fn try_pairing(n: usize, k: usize, rng: &mut ChaCha8Rng) -> Option<HashSet<(u32, u32)>> {
    let mut edges: HashSet<(u32, u32)> = HashSet::with_capacity(n * k / 2);
    let mut stubs: Vec<u32> = (0..n as u32)
        .flat_map(|v| std::iter::repeat_n(v, k))
        .collect();
    while !stubs.is_empty() {
        stubs.shuffle(rng);
        let mut leftover = vec![0usize; n];
        for pair in stubs.chunks_exact(2) {
            let (s1, s2) = (pair[0] as usize, pair[1] as usize);
            let key = edge_key(s1, s2);
            if s1 != s2 && !edges.contains(&key) {
                edges.insert(key);
            } else {
                leftover[s1] += 1;
                leftover[s2] += 1;
            }
        }
        let pending: Vec<usize> = (0..n).filter(|&v| leftover[v] > 0).collect();
        if !pending.is_empty() {
            let suitable = pending.iter().enumerate().any(|(i, &u)| {
                pending[..i]
                    .iter()
                    .any(|&v| !edges.contains(&edge_key(u, v)))
            });
            if !suitable {
                return None;
            }
        }
        stubs = pending
            .iter()
            .flat_map(|&v| std::iter::repeat_n(v as u32, leftover[v]))
            .collect();
    }
    Some(edges)
}

/// Samples `G(n, p)`: every unordered pair is an edge independently with
/// probability `p`.
pub fn gen_erdos_renyi(n: usize, p: f64, seed: u64) -> Result<Graph> {
    if n < 2 {
        return Err(Error::param("n", format!("need n >= 2, got {n}")));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::param("p", format!("need 0 < p < 1, got {p}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in (u + 1)..n {
            if rng.random::<f64>() < p {
                edges.push((u as u32, v as u32));
            }
        }
    }
    Ok(Graph {
        n,
        edges,
        kind: GraphKind::ErdosRenyi { p },
        seed,
    })
}

/// Two disjoint, nonempty vertex sets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VertexSubsetPair {
    a: Vec<usize>,
    b: Vec<usize>,
}

impl VertexSubsetPair {
    pub fn new(a: Vec<usize>, b: Vec<usize>) -> Result<Self> {
        if a.is_empty() || b.is_empty() {
            return Err(Error::param("subsets", "both vertex subsets must be nonempty"));
        }
        let sa: HashSet<usize> = a.iter().copied().collect();
        if sa.len() != a.len() || b.iter().collect::<HashSet<_>>().len() != b.len() {
            return Err(Error::param("subsets", "subsets contain repeated vertices"));
        }
        if b.iter().any(|v| sa.contains(v)) {
            return Err(Error::param("subsets", "subsets are not disjoint"));
        }
        Ok(VertexSubsetPair { a, b })
    }

    /// Draws disjoint random subsets of the given sizes from `0..n`.
    pub fn random<R: Rng + ?Sized>(
        n: usize,
        size_a: usize,
        size_b: usize,
        rng: &mut R,
    ) -> Result<Self> {
        if size_a + size_b > n {
            return Err(Error::param("subsets", format!("|A| + |B| = {} exceeds n = {n}", size_a + size_b)));
        }
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(rng);
        let a = perm[..size_a].to_vec();
        let b = perm[size_a..size_a + size_b].to_vec();
        Self::new(a, b)
    }

    pub fn a(&self) -> &[usize] {
        &self.a
    }

    pub fn b(&self) -> &[usize] {
        &self.b
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeCountProbe {
    pub observed: usize,
    pub expected: f64,
    pub relative_deviation: f64,
}

/// Counts edges running between `A` and `B` and compares with the
/// density prediction `(k/n)|A||B|` (regular) or `p|A||B|` (Erdős–Rényi).
pub fn edges_between(g: &Graph, s: &VertexSubsetPair) -> Result<EdgeCountProbe> {
    let n = g.n();
    let mut side = vec![0u8; n];
    for &v in s.a() {
        if v >= n {
            return Err(Error::param("subsets", format!("vertex {v} out of range")));
        }
        side[v] = 1;
    }
    for &v in s.b() {
        if v >= n {
            return Err(Error::param("subsets", format!("vertex {v} out of range")));
        }
        side[v] = 2;
    }
    let observed = g
        .edges()
        .iter()
        .filter(|&&(u, v)| side[u as usize] * side[v as usize] == 2)
        .count();
    let density = match g.kind() {
        GraphKind::KRegular { k } => k as f64 / n as f64,
        GraphKind::ErdosRenyi { p } => p,
    };
    let expected = density * s.a().len() as f64 * s.b().len() as f64;
    if expected <= 0.0 {
        return Err(Error::param("subsets", "expected edge count is zero"));
    }
    Ok(EdgeCountProbe {
        observed,
        expected,
        relative_deviation: (observed as f64 - expected).abs() / expected,
    })
}

/// Exact pair moments over all labeled `k`-regular graphs on `n` vertices.
///
/// `shared_vertex_moment` is `E[p_01 p_02]`, `disjoint_moment` is
/// `E[p_01 p_23]` and `single_edge_prob` is `E[p_01]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairMomentReport {
    pub shared_vertex_moment: Ratio<u64>,
    pub disjoint_moment: Ratio<u64>,
    pub single_edge_prob: Ratio<u64>,
    pub graph_count: u64,
}

fn check_moment_args(n: usize, k: usize) -> Result<()> {
    if n < 4 {
        return Err(Error::param("n", format!("need n >= 4 for four distinct vertices, got {n}")));
    }
    if k == 0 || k >= n {
        return Err(Error::param("k", format!("need 1 <= k < n, got k = {k}")));
    }
    if (n * k) % 2 != 0 {
        return Err(Error::param("k", format!("n·k must be even, got {n}·{k}")));
    }
    Ok(())
}

/// Enumerates every labeled `k`-regular graph on `n <= 10` vertices and
/// averages the edge-indicator products.
pub fn enumerate_pair_moments(n: usize, k: usize) -> Result<PairMomentReport> {
    if n > MAX_ENUMERATION_N {
        return Err(Error::EnumerationTooLarge {
            n,
            max: MAX_ENUMERATION_N,
        });
    }
    check_moment_args(n, k)?;

    let mut state = Enumeration {
        n,
        k,
        adj: vec![0u16; n],
        deg: vec![0; n],
        count: 0,
        single: 0,
        shared: 0,
        disjoint: 0,
    };
    state.extend(0);
    let total = state.count;
    if total == 0 {
        return Err(Error::param("k", format!("no {k}-regular graph on {n} vertices")));
    }
    Ok(PairMomentReport {
        shared_vertex_moment: Ratio::new(state.shared, total),
        disjoint_moment: Ratio::new(state.disjoint, total),
        single_edge_prob: Ratio::new(state.single, total),
        graph_count: total,
    })
}

struct Enumeration {
    n: usize,
    k: usize,
    adj: Vec<u16>,
    deg: Vec<usize>,
    count: u64,
    single: u64,
    shared: u64,
    disjoint: u64,
}

impl Enumeration {
    fn has(&self, u: usize, v: usize) -> bool {
        self.adj[u] & (1 << v) != 0
    }

    /// Completes the neighbourhood of the first vertex `>= from` that still
    /// lacks edges, choosing its missing neighbours among later vertices.
    fn extend(&mut self, from: usize) {
        let Some(v) = (from..self.n).find(|&v| self.deg[v] < self.k) else {
            self.record();
            return;
        };
        let need = self.k - self.deg[v];
        let candidates: Vec<usize> = ((v + 1)..self.n)
            .filter(|&w| self.deg[w] < self.k && !self.has(v, w))
            .collect();
        if candidates.len() < need {
            return;
        }
        let mut chosen = Vec::with_capacity(need);
        self.choose(v, &candidates, 0, need, &mut chosen);
    }

    fn choose(&mut self, v: usize, cands: &[usize], start: usize, need: usize, chosen: &mut Vec<usize>) {
        if need == 0 {
            for &w in chosen.iter() {
                self.link(v, w, true);
            }
            self.extend(v + 1);
            for &w in chosen.iter() {
                self.link(v, w, false);
            }
            return;
        }
        for idx in start..cands.len() {
            if cands.len() - idx < need {
                break;
            }
            chosen.push(cands[idx]);
            self.choose(v, cands, idx + 1, need - 1, chosen);
            chosen.pop();
        }
    }

    fn link(&mut self, u: usize, v: usize, on: bool) {
        if on {
            self.adj[u] |= 1 << v;
            self.adj[v] |= 1 << u;
            self.deg[u] += 1;
            self.deg[v] += 1;
        } else {
            self.adj[u] &= !(1 << v);
            self.adj[v] &= !(1 << u);
            self.deg[u] -= 1;
            self.deg[v] -= 1;
        }
    }

    fn record(&mut self) {
        self.count += 1;
        let e01 = self.has(0, 1);
        if e01 {
            self.single += 1;
            if self.has(0, 2) {
                self.shared += 1;
            }
            if self.has(2, 3) {
                self.disjoint += 1;
            }
        }
    }
}

/// Closed forms for the pair moments of random `k`-regular graphs:
/// `k/(n-1)`, `k(k-1)/((n-1)(n-2))` and `(k/(n-1))·(nk/2 - 2k + 1)/C(n-2, 2)`.
pub fn pair_moment_closed_forms(n: usize, k: usize) -> Result<PairMomentReport> {
    check_moment_args(n, k)?;
    let (n64, k64) = (n as u64, k as u64);
    let single = Ratio::new(k64, n64 - 1);
    let shared = Ratio::new(k64 * (k64 - 1), (n64 - 1) * (n64 - 2));
    let inner_edges = n64 * k64 / 2 + 1 - 2 * k64;
    let pairs = (n64 - 2) * (n64 - 3) / 2;
    let disjoint = single * Ratio::new(inner_edges, pairs);
    Ok(PairMomentReport {
        shared_vertex_moment: shared,
        disjoint_moment: disjoint,
        single_edge_prob: single,
        graph_count: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_regular_graph() {
        let g = gen_k_regular(6, 2, 1).unwrap();
        assert_eq!(g.edge_count(), 6);
        assert!(g.degrees().iter().all(|&d| d == 2));
    }

    #[test]
    fn regular_rejects_bad_parameters() {
        assert!(gen_k_regular(5, 3, 0).is_err());
        assert!(gen_k_regular(6, 6, 0).is_err());
        assert!(gen_k_regular(6, 0, 0).is_err());
        assert!(gen_k_regular(2, 1, 0).is_err());
    }

    #[test]
    fn complete_graph_is_reachable() {
        let g = gen_k_regular(7, 6, 3).unwrap();
        assert_eq!(g.edge_count(), 21);
    }

    #[test]
    fn erdos_renyi_two_vertices() {
        let g = gen_erdos_renyi(2, 0.5, 11).unwrap();
        assert!(g.edge_count() <= 1);
        assert!(gen_erdos_renyi(10, 1.0, 0).is_err());
        assert!(gen_erdos_renyi(10, 0.0, 0).is_err());
        assert!(gen_erdos_renyi(10, f64::NAN, 0).is_err());
    }

    #[test]
    fn erdos_renyi_seeds_differ() {
        let a = gen_erdos_renyi(100, 0.05, 1).unwrap();
        let b = gen_erdos_renyi(100, 0.05, 2).unwrap();
        assert_ne!(a.edges(), b.edges());
        assert_eq!(a, gen_erdos_renyi(100, 0.05, 1).unwrap());
    }

    #[test]
    fn complete_bipartite_count_is_exact() {
        let g = gen_k_regular(10, 9, 4).unwrap();
        let s = VertexSubsetPair::new(vec![0, 1, 2], vec![5, 6, 7, 8]).unwrap();
        let probe = edges_between(&g, &s).unwrap();
        assert_eq!(probe.observed, 12);
    }

    #[test]
    fn subset_validation() {
        assert!(VertexSubsetPair::new(vec![], vec![1]).is_err());
        assert!(VertexSubsetPair::new(vec![1], vec![]).is_err());
        assert!(VertexSubsetPair::new(vec![1, 2], vec![2, 3]).is_err());
    }

    #[test]
    fn enumeration_rejects_large_n() {
        assert!(matches!(
            enumerate_pair_moments(11, 2),
            Err(Error::EnumerationTooLarge { .. })
        ));
    }

    #[test]
    fn enumeration_counts_known_sequences() {
        // labeled 2-regular graphs: 1, 3, 12, 70, 465 for n = 3..7
        assert_eq!(enumerate_pair_moments(4, 2).unwrap().graph_count, 3);
        assert_eq!(enumerate_pair_moments(5, 2).unwrap().graph_count, 12);
        assert_eq!(enumerate_pair_moments(6, 2).unwrap().graph_count, 70);
        assert_eq!(enumerate_pair_moments(7, 2).unwrap().graph_count, 465);
        // labeled cubic graphs on 6 vertices
        assert_eq!(enumerate_pair_moments(6, 3).unwrap().graph_count, 70);
    }
}
