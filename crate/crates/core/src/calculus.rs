//! Discrete calculus on trees: potentials, gradients, co-potentials, signed
//! powers, the p-Laplacian and energies.
//!
//! Every fractional power goes through [`signed_pow`], so `a^s` always means
//! `sgn(a)|a|^s`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tree::{Tree, ROOT_VERTEX};

/// Real function on edges, indexed by edge id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EdgeFn(pub Vec<f64>);

/// Real function on vertices; index `0` is `o`, index `α + 1` is `e(α)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VertexFn(pub Vec<f64>);

impl EdgeFn {
    pub fn zeros(tree: &Tree) -> Self {
        EdgeFn(vec![0.0; tree.edge_count()])
    }

    pub fn from_fn(tree: &Tree, f: impl FnMut(usize) -> f64) -> Self {
        EdgeFn((0..tree.edge_count()).map(f).collect())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        EdgeFn(self.0.iter().map(|&x| f(x)).collect())
    }

    /// `Σ |f(α)|^p`.
    pub fn lp_norm_pow(&self, p: f64) -> f64 {
        self.0.iter().map(|x| x.abs().powf(p)).sum()
    }

    pub fn max_abs_diff(&self, other: &EdgeFn) -> f64 {
        max_abs_diff(&self.0, &other.0)
    }
}

impl VertexFn {
    pub fn zeros(tree: &Tree) -> Self {
        VertexFn(vec![0.0; tree.vertex_count()])
    }

    pub fn at(&self, v: usize) -> f64 {
        self.0[v]
    }

    /// Values at the end vertices of the leaves, in leaf order.
    pub fn at_leaves(&self, tree: &Tree) -> Vec<f64> {
        tree.leaves()
            .iter()
            .map(|&l| self.0[tree.end_vertex(l)])
            .collect()
    }

    pub fn max_abs_diff(&self, other: &VertexFn) -> f64 {
        max_abs_diff(&self.0, &other.0)
    }
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Signed masses on the leaves of a truncation, in [`Tree::leaves`] order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Charge {
    masses: Vec<f64>,
}

impl Charge {
    pub fn new(masses: Vec<f64>) -> Self {
        Charge { masses }
    }

    pub fn zero(tree: &Tree) -> Self {
        Charge::new(vec![0.0; tree.leaf_count()])
    }

    /// Unit mass on one leaf edge.
    pub fn dirac(tree: &Tree, leaf: usize) -> Result<Self> {
        let slot = tree
            .leaf_slot(leaf)
            .ok_or_else(|| Error::validation(format!("edge {leaf} is not a leaf")))?;
        let mut c = Charge::zero(tree);
        c.masses[slot] = 1.0;
        Ok(c)
    }

    /// Mass split equally among sons at every edge, normalized to `total`.
    pub fn equidistributed(tree: &Tree, total: f64) -> Self {
        let mut share = vec![0.0; tree.edge_count()];
        share[0] = total;
        for e in 0..tree.edge_count() {
            let k = tree.child_count(e);
            for c in tree.children(e) {
                share[c] = share[e] / k as f64;
            }
        }
        Charge::new(tree.leaves().iter().map(|&l| share[l]).collect())
    }

    /// Checks that the charge has one finite entry per leaf.
    pub fn validate(&self, tree: &Tree) -> Result<()> {
        if self.masses.len() != tree.leaf_count() {
            return Err(Error::validation(format!(
                "charge has {} masses for {} leaves",
                self.masses.len(),
                tree.leaf_count()
            )));
        }
        if self.masses.iter().any(|m| !m.is_finite()) {
            return Err(Error::validation("charge has a non-finite mass"));
        }
        Ok(())
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn masses_mut(&mut self) -> &mut [f64] {
        &mut self.masses
    }

    pub fn total(&self) -> f64 {
        self.masses.iter().sum()
    }

    pub fn scale(&self, k: f64) -> Self {
        Charge::new(self.masses.iter().map(|m| m * k).collect())
    }

    pub fn is_nonnegative(&self) -> bool {
        self.masses.iter().all(|&m| m >= 0.0)
    }

    pub fn max_abs_diff(&self, other: &Charge) -> f64 {
        max_abs_diff(&self.masses, &other.masses)
    }
}

/// Exponent `p ∈ (1, ∞)` together with its Hölder conjugate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Exponent {
    p: f64,
    p_conj: f64,
}

impl Exponent {
    pub fn new(p: f64) -> Result<Self> {
        if !(p.is_finite() && p > 1.0) {
            return Err(Error::parameter(format!(
                "exponent must lie in (1, ∞), got {p}"
            )));
        }
        Ok(Exponent {
            p,
            p_conj: p / (p - 1.0),
        })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// `p′`.
    pub fn conj(&self) -> f64 {
        self.p_conj
    }

    /// `x^{p′−1}`: the footnote map applied to one value.
    pub fn footnote(&self, x: f64) -> f64 {
        signed_pow(x, self.p_conj - 1.0)
    }

    /// `x^{p−1}`, inverse of [`Exponent::footnote`].
    pub fn unfootnote(&self, x: f64) -> f64 {
        signed_pow(x, self.p - 1.0)
    }
}

impl TryFrom<f64> for Exponent {
    type Error = Error;
    fn try_from(p: f64) -> Result<Self> {
        Exponent::new(p)
    }
}

impl From<Exponent> for f64 {
    fn from(e: Exponent) -> f64 {
        e.p
    }
}

/// `sgn(a)|a|^s`.
pub fn signed_pow(a: f64, s: f64) -> f64 {
    debug_assert!(s > 0.0);
    if s == 1.0 {
        a
    } else {
        a.signum() * a.abs().powf(s)
    }
}

/// `If(x) = Σ_{α<x} f(α)`, with `If(o) = 0`.
pub fn potential(tree: &Tree, f: &EdgeFn) -> VertexFn {
    let mut g = vec![0.0; tree.vertex_count()];
    for e in 0..tree.edge_count() {
        g[e + 1] = g[tree.begin_vertex(e)] + f.0[e];
    }
    VertexFn(g)
}

/// `∇g(α) = g(e(α)) − g(b(α))`.
pub fn gradient(tree: &Tree, g: &VertexFn) -> EdgeFn {
    EdgeFn::from_fn(tree, |e| g.0[e + 1] - g.0[tree.begin_vertex(e)])
}

/// `I*μ(α) = μ(∂T_α)`.
pub fn copotential(tree: &Tree, mu: &Charge) -> EdgeFn {
    let mut m = vec![0.0; tree.edge_count()];
    for (&leaf, &mass) in tree.leaves().iter().zip(mu.masses()) {
        m[leaf] = mass;
    }
    accumulate_upwards(tree, &mut m);
    EdgeFn(m)
}

/// Replaces each interior value by the sum over the sons, bottom-up.
pub(crate) fn accumulate_upwards(tree: &Tree, values: &mut [f64]) {
    for e in (0..tree.edge_count()).rev() {
        if !tree.is_leaf(e) {
            values[e] = tree.children(e).map(|c| values[c]).sum();
        }
    }
}

/// `Σ_{β ≥ α} h(β)` for every edge.
pub(crate) fn subtree_sums(tree: &Tree, h: &[f64]) -> Vec<f64> {
    let mut s = h.to_vec();
    for e in (1..tree.edge_count()).rev() {
        let p = tree.parent(e).expect("non-root edge");
        s[p] += s[e];
    }
    s
}

/// Largest `|f(α) − Σ_{β∈s(α)} f(β)|` over interior edges.
pub fn forward_defect(tree: &Tree, f: &EdgeFn) -> f64 {
    (0..tree.edge_count())
        .filter(|&e| !tree.is_leaf(e))
        .map(|e| (f.0[e] - tree.children(e).map(|c| f.0[c]).sum::<f64>()).abs())
        .fold(0.0, f64::max)
}

/// Additive projection: keeps leaf values and rebuilds the rest by summation.
pub fn forward_projection(tree: &Tree, f: &EdgeFn) -> EdgeFn {
    let mut out = f.0.clone();
    accumulate_upwards(tree, &mut out);
    EdgeFn(out)
}

/// `f_p = f^{p′−1}` pointwise.
pub fn footnote_map(f: &EdgeFn, p: Exponent) -> EdgeFn {
    f.map(|x| p.footnote(x))
}

/// `Δ_p g` at every vertex other than `o`.
#[derive(Debug, Clone)]
pub struct PLaplacian {
    /// Index `0` (the root vertex) is left at zero.
    pub values: VertexFn,
    /// `true` at end vertices of truncation leaves, where the son terms are missing.
    pub truncated: Vec<bool>,
}

impl PLaplacian {
    /// Largest `|Δ_p g|` over vertices that are neither `o` nor truncation leaves.
    pub fn max_interior(&self) -> f64 {
        self.values
            .0
            .iter()
            .zip(&self.truncated)
            .skip(1)
            .filter(|(_, &t)| !t)
            .map(|(v, _)| v.abs())
            .fold(0.0, f64::max)
    }
}

/// `Δ_p g(x) = Σ_{y∼x} (g(y) − g(x))^{p−1}`.
pub fn p_laplacian(tree: &Tree, g: &VertexFn, p: Exponent) -> PLaplacian {
    let mut values = vec![0.0; tree.vertex_count()];
    let mut truncated = vec![false; tree.vertex_count()];
    for e in 0..tree.edge_count() {
        let x = tree.end_vertex(e);
        let gx = g.0[x];
        let mut s = p.unfootnote(g.0[tree.begin_vertex(e)] - gx);
        for c in tree.children(e) {
            s += p.unfootnote(g.0[tree.end_vertex(c)] - gx);
        }
        values[x] = s;
        truncated[x] = tree.is_leaf(e);
    }
    truncated[ROOT_VERTEX] = false;
    PLaplacian {
        values: VertexFn(values),
        truncated,
    }
}

/// `ℰ_p(μ) = Σ_α |M(α)|^{p′}`.
pub fn energy(tree: &Tree, mu: &Charge, p: Exponent) -> f64 {
    copotential(tree, mu).lp_norm_pow(p.conj())
}

/// `ℰ(μ, f) = Σ_β f(β) M(β)`.
pub fn mutual_energy(tree: &Tree, mu: &Charge, f: &EdgeFn) -> f64 {
    let m = copotential(tree, mu);
    f.0.iter().zip(&m.0).map(|(a, b)| a * b).sum()
}

/// `k ↦ Σ_{|α|=k} |f(α)|`.
pub fn level_sums(tree: &Tree, f: &EdgeFn) -> Vec<f64> {
    let mut sums = vec![0.0; tree.depth() + 1];
    for (e, v) in f.0.iter().enumerate() {
        sums[tree.level(e)] += v.abs();
    }
    sums
}
