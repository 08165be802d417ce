//! Random graph families for tests, benchmarks and self-checks.

use std::collections::HashSet;
use std::ops::Range;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::graph::Digraph;

fn pick_weight<R: Rng + ?Sized>(rng: &mut R, weights: &Range<f64>) -> f64 {
    rng.gen_range(weights.clone())
}

fn build(n: usize, edges: Vec<(usize, usize, f64)>) -> Digraph {
    Digraph::new(n, edges).expect("generator produced an invalid graph")
}

/// Acyclic graph whose only globally reachable node is its single sink.
/// Every other node gets one edge to a later node in a random topological
/// order, then extra forward edges are added up to `max_edges` in total.
pub fn random_dag<R: Rng + ?Sized>(rng: &mut R, n: usize, max_edges: usize, weights: Range<f64>) -> Digraph {
    assert!(n >= 2, "need at least two nodes");
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut seen = HashSet::new();
    let mut edges = Vec::new();
    for i in 0..n - 1 {
        let j = rng.gen_range(i + 1..n);
        seen.insert((i, j));
        edges.push((order[i], order[j], pick_weight(rng, &weights)));
    }
    let target = max_edges.clamp(n - 1, n * (n - 1) / 2);
    let extra = rng.gen_range(0..=target - (n - 1));
    let mut candidates: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .filter(|p| !seen.contains(p))
        .collect();
    candidates.shuffle(rng);
    for &(i, j) in candidates.iter().take(extra) {
        edges.push((order[i], order[j], pick_weight(rng, &weights)));
    }
    edges.shuffle(rng);
    build(n, edges)
}

/// Simple directed cycle through all nodes in a random order.
pub fn random_cycle<R: Rng + ?Sized>(rng: &mut R, n: usize, weights: Range<f64>) -> Digraph {
    assert!(n >= 2, "need at least two nodes");
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let edges = (0..n)
        .map(|i| (order[i], order[(i + 1) % n], pick_weight(rng, &weights)))
        .collect();
    build(n, edges)
}

/// Graph containing a random spanning in-tree plus random extra edges in
/// either direction, up to `max_edges` in total. Always has an in-branching.
pub fn random_with_in_branching<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    max_edges: usize,
    weights: Range<f64>,
) -> Digraph {
    assert!(n >= 2, "need at least two nodes");
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut seen = HashSet::new();
    let mut edges = Vec::new();
    // order[0] is the root; each later node points to an earlier one.
    for i in 1..n {
        let j = rng.gen_range(0..i);
        seen.insert((order[i], order[j]));
        edges.push((order[i], order[j], pick_weight(rng, &weights)));
    }
    let target = max_edges.clamp(n - 1, n * (n - 1));
    let extra = rng.gen_range(0..=target - (n - 1));
    let mut candidates: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
        .filter(|p| !seen.contains(p))
        .collect();
    candidates.shuffle(rng);
    for &(t, h) in candidates.iter().take(extra) {
        edges.push((t, h, pick_weight(rng, &weights)));
    }
    edges.shuffle(rng);
    build(n, edges)
}

/// Like [`random_with_in_branching`] but with at least one directed cycle
/// through the root, so the graph is neither acyclic nor (for `n > 2` with
/// extra edges) a bare cycle.
pub fn random_cyclic<R: Rng + ?Sized>(rng: &mut R, n: usize, max_edges: usize, weights: Range<f64>) -> Digraph {
    loop {
        let g = random_with_in_branching(rng, n, max_edges, weights.clone());
        if !crate::graph::reachability(&g).is_acyclic {
            return g;
        }
    }
}
