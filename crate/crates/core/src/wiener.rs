//! Wiener-type diagnostics along a geodesic ray.
//!
//! For the prefix `α_0 = ω, α_1, …, α_N` of a ray the report collects
//! `c_n = c_{α_n,p}(E_{α_n})^{p′/p}` from independent tent solves, the tails
//! `t_n = Σ_{j=n}^{N} M_p(α_j)` of the global equilibrium data and the deficit
//! `ε = 1 − IM_p(e(α_N))`. These satisfy
//! `Π_{n≤N} (1 − c_n)·(ε + t_0) = ε + t_{N+1}`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calculus::{footnote_map, potential, Exponent};
use crate::capacity::capacity_recursive;
use crate::error::{Error, Result};
use crate::tree::{BoundarySet, EdgeId, GeodesicRay, Tree, TreeSpec};

pub const REGULAR_THRESHOLD: f64 = 1e-6;
pub const STABLE_CHANGE: f64 = 1e-3;
pub const IRREGULAR_FLOOR: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    RegularAtHorizon,
    IrregularSuspected,
    Inconclusive,
}

/// Boundary set described independently of the truncation depth.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SetRule {
    Full,
    /// Union of tents, each given by the son indices leading to its edge from `ω`.
    Tents(Vec<Vec<usize>>),
}

impl SetRule {
    pub fn realize(&self, tree: &Tree) -> Result<BoundarySet> {
        match self {
            SetRule::Full => Ok(BoundarySet::full(tree)),
            SetRule::Tents(paths) => {
                let edges = paths
                    .iter()
                    .map(|p| {
                        tree.edge_at(p).ok_or_else(|| {
                            Error::validation(format!("son path {p:?} is not realized"))
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                BoundarySet::under(tree, &edges)
            }
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct WienerReport {
    pub levels: Vec<usize>,
    pub edges: Vec<EdgeId>,
    pub c_seq: Vec<f64>,
    /// `t_0, …, t_{N+1}`; the last entry is 0.
    pub t_seq: Vec<f64>,
    pub partial_sums: Vec<f64>,
    pub product_seq: Vec<f64>,
    pub epsilon: f64,
    pub verdict: Verdict,
    pub status: String,
    /// `|Π(1 − c_n)(ε + t_0) − (ε + t_{N+1})|`.
    pub telescoping_residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct WienerRow {
    pub depth: usize,
    pub n: usize,
    pub c_n: f64,
    pub t_n: f64,
    pub partial_sum: f64,
    pub product: f64,
    pub epsilon: f64,
}

impl WienerReport {
    pub fn partial_sum(&self) -> f64 {
        self.partial_sums.last().copied().unwrap_or(0.0)
    }

    pub fn product(&self) -> f64 {
        self.product_seq.last().copied().unwrap_or(1.0)
    }

    pub fn rows(&self, depth: usize) -> Vec<WienerRow> {
        (0..self.levels.len())
            .map(|i| WienerRow {
                depth,
                n: self.levels[i],
                c_n: self.c_seq[i],
                t_n: self.t_seq[i],
                partial_sum: self.partial_sums[i],
                product: self.product_seq[i],
                epsilon: self.epsilon,
            })
            .collect()
    }
}

/// Prefix of the ray down to level `horizon`, cut where `E_α` becomes empty.
fn prefix(
    tree: &Tree,
    set: &BoundarySet,
    ray: &GeodesicRay,
    horizon: usize,
) -> (Vec<EdgeId>, String) {
    let full = ray.realize(tree);
    let reach = set.reach(tree);
    let mut status = String::from("ok");
    let mut edges = Vec::new();
    for &e in full.iter().take(horizon + 1) {
        if !reach[e] {
            status = format!(
                "ray leaves the closure of the set at level {}",
                tree.level(e)
            );
            break;
        }
        edges.push(e);
    }
    if status == "ok" && horizon + 1 > full.len() {
        status = format!(
            "horizon {horizon} exceeds the realized ray, stopped at level {}",
            full.len() - 1
        );
    }
    (edges, status)
}

fn tent_capacities(
    tree: &Tree,
    set: &BoundarySet,
    edges: &[EdgeId],
    p: Exponent,
) -> Result<Vec<f64>> {
    edges
        .par_iter()
        .map(|&e| {
            let tent = tree.tent(e)?;
            let local = capacity_recursive(&tent.tree, &tent.restrict(set), p)?;
            Ok(p.footnote(local.capacity))
        })
        .collect()
}

pub fn wiener_series(
    tree: &Tree,
    set: &BoundarySet,
    ray: &GeodesicRay,
    p: Exponent,
    horizon: usize,
) -> Result<WienerReport> {
    let (edges, status) = prefix(tree, set, ray, horizon);
    let c_seq = tent_capacities(tree, set, &edges, p)?;

    let eq = capacity_recursive(tree, set, p)?;
    let mp = footnote_map(&eq.copotential(tree), p);
    let pot = potential(tree, &mp);
    let epsilon = match edges.last() {
        Some(&last) => 1.0 - pot.0[tree.end_vertex(last)],
        None => 1.0,
    };

    let mut t_seq = vec![0.0; edges.len() + 1];
    for i in (0..edges.len()).rev() {
        t_seq[i] = t_seq[i + 1] + mp.0[edges[i]];
    }
    let mut partial_sums = Vec::with_capacity(edges.len());
    let mut product_seq = Vec::with_capacity(edges.len());
    let (mut s, mut prod) = (0.0, 1.0);
    for &c in &c_seq {
        s += c;
        prod *= 1.0 - c;
        partial_sums.push(s);
        product_seq.push(prod);
    }
    let telescoping_residual = (prod * (epsilon + t_seq[0]) - epsilon).abs();
    let verdict = classify(&[epsilon], prod);
    Ok(WienerReport {
        levels: edges.iter().map(|&e| tree.level(e)).collect(),
        edges,
        c_seq,
        t_seq,
        partial_sums,
        product_seq,
        epsilon,
        verdict,
        status,
        telescoping_residual,
    })
}

/// Terms `c_p(E_α)^{p′/p} / (1 − |α|·c_p(E_α)^{p′/p})` built from global capacities.
pub fn capacity_form_terms(
    tree: &Tree,
    set: &BoundarySet,
    ray: &GeodesicRay,
    p: Exponent,
    horizon: usize,
) -> Result<Vec<f64>> {
    let (edges, _) = prefix(tree, set, ray, horizon);
    edges
        .par_iter()
        .map(|&e| {
            let local = BoundarySet::under(tree, &[e])?;
            let members = local
                .members()
                .iter()
                .copied()
                .filter(|&l| set.contains(l))
                .collect();
            let sub = BoundarySet::new(tree, members)?;
            let x = p.footnote(capacity_recursive(tree, &sub, p)?.capacity);
            let denom = 1.0 - tree.level(e) as f64 * x;
            if denom <= 0.0 {
                return Err(Error::Numerical(format!(
                    "capacity-form denominator {denom} at edge {e}"
                )));
            }
            Ok(x / denom)
        })
        .collect()
}

/// Horizon-stamped verdict from a deficit history and the last product.
pub fn classify(epsilons: &[f64], product: f64) -> Verdict {
    let last = match epsilons.last() {
        Some(&e) => e,
        None => return Verdict::Inconclusive,
    };
    if product < REGULAR_THRESHOLD && last < REGULAR_THRESHOLD {
        return Verdict::RegularAtHorizon;
    }
    if epsilons.len() >= 3 && last > IRREGULAR_FLOOR {
        let tail = &epsilons[epsilons.len() - 3..];
        let hi = tail.iter().copied().fold(f64::MIN, f64::max);
        let lo = tail.iter().copied().fold(f64::MAX, f64::min);
        if (hi - lo) / last < STABLE_CHANGE {
            return Verdict::IrregularSuspected;
        }
    }
    Verdict::Inconclusive
}

#[derive(Debug, Clone, Serialize)]
pub struct DeficitSweep {
    pub depths: Vec<usize>,
    pub epsilon: Vec<f64>,
    pub partial_sums: Vec<f64>,
    pub products: Vec<f64>,
    pub verdict: Verdict,
}

/// `ε` at each depth, taken at `b(leaf)` of the realized ray.
///
/// The leaf-end vertex itself always has `ε = 0` when the leaf is in the set,
/// so the deepest interior vertex of the ray is used instead.
pub fn deficit(
    spec: &TreeSpec,
    rule: &SetRule,
    ray: &GeodesicRay,
    p: Exponent,
    depths: &[usize],
) -> Result<DeficitSweep> {
    if depths.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::parameter("sweep depths must increase"));
    }
    let reports = depths
        .iter()
        .map(|&d| {
            let tree = spec.with_depth(d).build()?;
            let set = rule.realize(&tree)?;
            let leaf_level = ray.realize(&tree).len() - 1;
            wiener_series(&tree, &set, ray, p, leaf_level.saturating_sub(1))
        })
        .collect::<Result<Vec<_>>>()?;
    let epsilon: Vec<f64> = reports.iter().map(|r| r.epsilon).collect();
    let products: Vec<f64> = reports.iter().map(|r| r.product()).collect();
    let verdict = classify(&epsilon, products.last().copied().unwrap_or(1.0));
    Ok(DeficitSweep {
        depths: depths.to_vec(),
        partial_sums: reports.iter().map(|r| r.partial_sum()).collect(),
        epsilon,
        products,
        verdict,
    })
}
