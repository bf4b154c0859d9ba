//! Simple random walk on a truncated tree, absorbed at `o` and at leaf-end vertices.
//!
//! Exact quantities come from the return probabilities
//! `q_α = P_{e(α)}(hit b(α) before leaving through ∂T_α)`, which satisfy
//! `q_α = 1 / (deg e(α) − Σ_{β∈s(α)} q_β)` with `q = 0` at leaves.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::calculus::{Exponent, VertexFn};
use crate::capacity::capacity_recursive;
use crate::error::{Error, Result};
use crate::tree::{BoundarySet, Tree, VertexId, ROOT_VERTEX};

/// Exit distribution of the walk started at `at_vertex`.
#[derive(Debug, Clone, Serialize)]
pub struct HarmonicMeasure {
    pub at_vertex: VertexId,
    /// Probability of exiting at each leaf, in leaf order.
    pub boundary_mass: Vec<f64>,
    pub root_mass: f64,
}

impl HarmonicMeasure {
    pub fn escape(&self) -> f64 {
        self.boundary_mass.iter().sum()
    }

    pub fn total(&self) -> f64 {
        self.escape() + self.root_mass
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WalkEstimate {
    pub value: f64,
    pub std_error: f64,
    pub n_walks: u64,
    pub seed: u64,
}

impl WalkEstimate {
    /// Whether `exact` lies within `k` standard errors.
    pub fn covers(&self, exact: f64, k: f64) -> bool {
        (self.value - exact).abs() <= k * self.std_error
    }
}

/// `q_α` for every edge.
pub fn return_probabilities(tree: &Tree) -> Vec<f64> {
    let mut q = vec![0.0; tree.edge_count()];
    for e in (0..tree.edge_count()).rev() {
        if !tree.is_leaf(e) {
            let back: f64 = tree.children(e).map(|c| q[c]).sum();
            q[e] = 1.0 / ((tree.child_count(e) + 1) as f64 - back);
        }
    }
    q
}

fn check_vertex(tree: &Tree, x: VertexId) -> Result<()> {
    if x >= tree.vertex_count() {
        return Err(Error::validation(format!("vertex {x} is not in the tree")));
    }
    Ok(())
}

pub fn harmonic_measure_exact(tree: &Tree, x: VertexId) -> Result<HarmonicMeasure> {
    check_vertex(tree, x)?;
    let mut boundary_mass = vec![0.0; tree.leaf_count()];
    if x == ROOT_VERTEX {
        return Ok(HarmonicMeasure {
            at_vertex: x,
            boundary_mass,
            root_mass: 1.0,
        });
    }
    let q = return_probabilities(tree);

    // Weight of first reaching e(β) for each ancestor β of the start edge.
    let mut coef = vec![0.0; tree.edge_count()];
    let mut w = 1.0;
    let mut e = tree.edge_into(x);
    while let Some(a) = e {
        coef[a] = w;
        w *= q[a];
        e = tree.parent(a);
    }
    let root_mass = w;

    let mut amp = vec![0.0; tree.edge_count()];
    for e in 0..tree.edge_count() {
        let inherited = tree.parent(e).map_or(0.0, |par| q[par] * amp[par]);
        amp[e] = inherited + coef[e];
    }
    for (slot, &l) in tree.leaves().iter().enumerate() {
        boundary_mass[slot] = amp[l];
    }
    Ok(HarmonicMeasure {
        at_vertex: x,
        boundary_mass,
        root_mass,
    })
}

/// `h(x) = λ_x(∂T)` at every vertex.
pub fn escape_probabilities(tree: &Tree) -> VertexFn {
    let q = return_probabilities(tree);
    let mut h = VertexFn::zeros(tree);
    for (e, &qe) in q.iter().enumerate() {
        let below = h.0[tree.begin_vertex(e)];
        h.0[tree.end_vertex(e)] = 1.0 - qe + qe * below;
    }
    h
}

fn walk_escapes(tree: &Tree, x: VertexId, rng: &mut ChaCha8Rng) -> bool {
    let mut v = x;
    loop {
        if v == ROOT_VERTEX {
            return false;
        }
        let e = v - 1;
        if tree.is_leaf(e) {
            return true;
        }
        let k = rng.random_range(0..=tree.child_count(e));
        v = if k == 0 {
            tree.begin_vertex(e)
        } else {
            tree.end_vertex(tree.children(e).start + k - 1)
        };
    }
}

/// Fraction of `n_walks` walks from `x` that reach a leaf-end vertex before `o`.
///
/// Walk `i` uses stream `i` of a generator keyed by `seed`, so the estimate
/// does not depend on the number of threads.
pub fn simulate_escape(tree: &Tree, x: VertexId, n_walks: u64, seed: u64) -> Result<WalkEstimate> {
    check_vertex(tree, x)?;
    if n_walks == 0 {
        return Err(Error::parameter("at least one walk is required"));
    }
    let hits: u64 = (0..n_walks)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i);
            walk_escapes(tree, x, &mut rng) as u64
        })
        .sum();
    let value = hits as f64 / n_walks as f64;
    Ok(WalkEstimate {
        value,
        std_error: (value * (1.0 - value) / n_walks as f64).sqrt(),
        n_walks,
        seed,
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct EscapeIdentity {
    pub capacity: f64,
    pub exact_escape: f64,
    pub mc_estimate: f64,
    pub std_error: f64,
    pub n_walks: u64,
    pub seed: u64,
}

/// `c_2(∂T)`, the exact escape probability from `e(ω)` and its Monte Carlo estimate.
pub fn capacity_escape_identity(tree: &Tree, n_walks: u64, seed: u64) -> Result<EscapeIdentity> {
    let p = Exponent::new(2.0)?;
    let capacity = capacity_recursive(tree, &BoundarySet::full(tree), p)?.capacity;
    let start = tree.end_vertex(crate::tree::ROOT);
    let exact_escape = harmonic_measure_exact(tree, start)?.escape();
    let mc = simulate_escape(tree, start, n_walks, seed)?;
    Ok(EscapeIdentity {
        capacity,
        exact_escape,
        mc_estimate: mc.value,
        std_error: mc.std_error,
        n_walks,
        seed,
    })
}
