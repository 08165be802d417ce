#![allow(dead_code)]

use edgemargin::generate::{random_cycle, random_cyclic, random_dag, random_with_in_branching};
use edgemargin::Digraph;
use edgemargin_testkit::RawEdge;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const WEIGHTS: std::ops::Range<f64> = 0.1..3.0;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn raw(g: &Digraph) -> Vec<RawEdge> {
    g.edges().iter().map(|e| (e.tail, e.head, e.weight)).collect()
}

pub fn dag(rng: &mut ChaCha8Rng) -> Digraph {
    let n = rng.gen_range(3..=8);
    random_dag(rng, n, 16, WEIGHTS)
}

pub fn cycle(rng: &mut ChaCha8Rng) -> Digraph {
    let n = rng.gen_range(3..=10);
    random_cycle(rng, n, WEIGHTS)
}

pub fn general(rng: &mut ChaCha8Rng) -> Digraph {
    let n = rng.gen_range(3..=8);
    random_with_in_branching(rng, n, 16, WEIGHTS)
}

pub fn cyclic(rng: &mut ChaCha8Rng) -> Digraph {
    let n = rng.gen_range(3..=8);
    random_cyclic(rng, n, 16, WEIGHTS)
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}
