//! Shared test helpers: an independent brute-force transport oracle and
//! seeded generators for molecules, subsets, and maps.

// each integration test target compiles this module separately and uses a
// different subset of it
#![allow(dead_code)]

use lipkit::free::Molecule;
use lipkit::metric::FiniteMetricSpace;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const DUST: f64 = 1e-12;

/// Minimum transport cost by enumerating basic solutions: every subset of
/// bipartite edges is solved by leaf elimination, infeasible or cyclic
/// subsets are discarded, and the cheapest surviving plan wins. Exponential
/// in the edge count, so only for tiny spaces.
pub fn transport_vertex_oracle(space: &FiniteMetricSpace, molecule: &Molecule) -> f64 {
    let mut sources: Vec<(usize, f64)> = Vec::new();
    let mut sinks: Vec<(usize, f64)> = Vec::new();
    for (i, &w) in molecule.weights().iter().enumerate() {
        if w > DUST {
            sources.push((i, w));
        } else if w < -DUST {
            sinks.push((i, -w));
        }
    }
    if sources.is_empty() || sinks.is_empty() {
        return 0.0;
    }
    let p = sources.len();
    let q = sinks.len();
    let edge_count = p * q;
    assert!(edge_count <= 16, "oracle is exponential in p*q");

    let mut best = f64::INFINITY;
    'subsets: for mask in 0u32..(1 << edge_count) {
        let mut present: Vec<(usize, usize)> = Vec::new();
        for e in 0..edge_count {
            if mask & (1 << e) != 0 {
                present.push((e / q, e % q));
            }
        }
        let mut supply: Vec<f64> = sources.iter().map(|&(_, a)| a).collect();
        let mut demand: Vec<f64> = sinks.iter().map(|&(_, b)| b).collect();
        let mut cost = 0.0;

        // leaf elimination: a node incident to exactly one remaining edge
        // forces that edge's flow
        let mut remaining = present.clone();
        while !remaining.is_empty() {
            let mut forced: Option<(usize, f64)> = None;
            for (pos, &(u, v)) in remaining.iter().enumerate() {
                let source_degree = remaining.iter().filter(|&&(a, _)| a == u).count();
                let sink_degree = remaining.iter().filter(|&&(_, b)| b == v).count();
                if source_degree == 1 {
                    forced = Some((pos, supply[u]));
                    break;
                }
                if sink_degree == 1 {
                    forced = Some((pos, demand[v]));
                    break;
                }
            }
            let Some((pos, flow)) = forced else {
                continue 'subsets; // a cycle: not a basic solution
            };
            let (u, v) = remaining.swap_remove(pos);
            if flow < -1e-9 {
                continue 'subsets;
            }
            supply[u] -= flow;
            demand[v] -= flow;
            cost += flow * space.distance(sources[u].0, sinks[v].0);
        }
        let feasible = supply.iter().all(|&a| a.abs() <= 1e-9)
            && demand.iter().all(|&b| b.abs() <= 1e-9);
        if feasible && cost < best {
            best = cost;
        }
    }
    assert!(best.is_finite(), "no feasible basic solution found");
    best
}

/// Seeded molecule with weights in `[-1, 1]`, rebalanced through the base.
pub fn random_molecule(n: usize, base: usize, seed: u64) -> Molecule {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let terms: Vec<(usize, f64)> = (0..n).map(|i| (i, rng.gen_range(-1.0..=1.0))).collect();
    Molecule::from_dirac_combination(n, base, &terms).unwrap()
}

/// Seeded molecule supported on few points, so the oracle stays cheap.
pub fn sparse_molecule(n: usize, base: usize, support: usize, seed: u64) -> Molecule {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut terms = Vec::new();
    for _ in 0..support {
        terms.push((rng.gen_range(0..n), rng.gen_range(-1.0f64..=1.0)));
    }
    Molecule::from_dirac_combination(n, base, &terms).unwrap()
}

/// Seeded injective base-preserving assignment from `source_n` points into
/// `target_n >= source_n` points (base indices both 0).
pub fn random_injective_assignment(source_n: usize, target_n: usize, seed: u64) -> Vec<usize> {
    assert!(source_n <= target_n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pool: Vec<usize> = (1..target_n).collect();
    for i in (1..pool.len()).rev() {
        let j = rng.gen_range(0..=i);
        pool.swap(i, j);
    }
    let mut assignment = vec![0];
    assignment.extend(pool.into_iter().take(source_n - 1));
    assignment
}
