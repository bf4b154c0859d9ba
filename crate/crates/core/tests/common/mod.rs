#![allow(dead_code)]

use arbor::tree::{BoundarySet, Tree};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random tree on `edges` edges from a parent sequence.
///
/// `parents[i]` picks the parent of edge `i + 1` among edges `0..=i`; a bias
/// towards recent edges produces deeper trees.
pub fn tree_from_parents(parents: &[usize]) -> Tree {
    let n = parents.len() + 1;
    let mut sons = vec![Vec::new(); n];
    for (i, &p) in parents.iter().enumerate() {
        sons[p % (i + 1)].push(i + 1);
    }
    Tree::from_son_lists(&sons, 0).expect("valid son lists").0
}

pub fn random_tree<R: RngExt>(rng: &mut R, max_edges: usize) -> Tree {
    let n = rng.random_range(1..=max_edges);
    let recent = rng.random_range(1..=8usize);
    let parents: Vec<usize> = (0..n - 1)
        .map(|i| {
            if rng.random_bool(0.5) {
                i - rng.random_range(0..recent.min(i + 1))
            } else {
                rng.random_range(0..=i)
            }
        })
        .collect();
    tree_from_parents(&parents)
}

/// Each leaf joins with probability `density`; at least one leaf is kept.
pub fn random_set<R: RngExt>(rng: &mut R, tree: &Tree, density: f64) -> BoundarySet {
    let mut members: Vec<_> = tree
        .leaves()
        .iter()
        .copied()
        .filter(|_| rng.random_bool(density))
        .collect();
    if members.is_empty() {
        let k = rng.random_range(0..tree.leaf_count());
        members.push(tree.leaves()[k]);
    }
    BoundarySet::new(tree, members).expect("leaves of the tree")
}
