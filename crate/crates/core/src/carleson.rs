//! Sobolev seminorms, Carleson norms of boundary measures and the Gram system
//! behind uniqueness of charges with prescribed boundary potential.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::calculus::{
    copotential, energy, gradient, potential, subtree_sums, Charge, EdgeFn, Exponent, VertexFn,
};
use crate::error::{Error, Result};
use crate::tree::{BoundarySet, EdgeId, Tree};

/// Leaf counts up to which the Gram system is factorized densely.
pub const DENSE_GRAM_LIMIT: usize = 1024;
pub const GRAM_TOL: f64 = 1e-10;

/// `‖∇g‖_p^p`.
pub fn sobolev_norm(tree: &Tree, g: &VertexFn, p: Exponent) -> f64 {
    gradient(tree, g).lp_norm_pow(p.p())
}

#[derive(Debug, Clone, Serialize)]
pub struct CarlesonReport {
    /// `sup_α ℰ_{p,α}(μ)/M(α)`; `f64::INFINITY` when `infinite` is set.
    pub cm_norm: f64,
    pub infinite: bool,
    pub attaining_edge: Option<EdgeId>,
    /// `μ(∂T)/‖μ‖_CM^{p−1}`.
    pub capacity_lower_bound: f64,
}

fn check_positive(tree: &Tree, mu: &Charge) -> Result<()> {
    mu.validate(tree)?;
    if !mu.is_nonnegative() {
        return Err(Error::validation(
            "Carleson norms need a nonnegative measure",
        ));
    }
    Ok(())
}

pub fn carleson_norm(tree: &Tree, mu: &Charge, p: Exponent) -> Result<CarlesonReport> {
    check_positive(tree, mu)?;
    let m = copotential(tree, mu);
    let local = subtree_sums(tree, &m.map(|x| x.abs().powf(p.conj())).0);
    let mut report = CarlesonReport {
        cm_norm: 0.0,
        infinite: false,
        attaining_edge: None,
        capacity_lower_bound: 0.0,
    };
    for (e, (&me, &le)) in m.0.iter().zip(&local).enumerate() {
        if me > 0.0 {
            let ratio = le / me;
            if ratio > report.cm_norm {
                report.cm_norm = ratio;
                report.attaining_edge = Some(e);
            }
        } else if le > 0.0 {
            report.cm_norm = f64::INFINITY;
            report.infinite = true;
            report.attaining_edge = Some(e);
            return Ok(report);
        }
    }
    if report.cm_norm > 0.0 {
        report.capacity_lower_bound = mu.total() / report.cm_norm.powf(p.p() - 1.0);
    }
    Ok(report)
}

/// The chain `μ(E)/‖μ‖_CM^{p−1} ≤ μ(E)^p/ℰ_p(μ)^{p−1} ≤ c_p(E)` for one candidate.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Sandwich {
    pub carleson_bound: f64,
    pub dual_bound: f64,
    pub capacity: f64,
}

impl Sandwich {
    pub fn holds(&self, tol: f64) -> bool {
        let slack = tol * self.capacity.max(1.0);
        self.carleson_bound <= self.dual_bound + slack && self.dual_bound <= self.capacity + slack
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CarlesonCapacity {
    /// Best `μ(E)/‖μ‖_CM^{p−1}` over the candidates; 0 for an empty list.
    pub best: f64,
    pub sandwiches: Vec<Sandwich>,
}

/// Lower bounds for `c_p(E)` from candidate measures supported in `set`.
///
/// `capacity` is the reference value the sandwiches are compared against.
pub fn capacity_via_carleson(
    tree: &Tree,
    set: &BoundarySet,
    p: Exponent,
    capacity: f64,
    candidates: &[Charge],
) -> Result<CarlesonCapacity> {
    let mut out = CarlesonCapacity {
        best: 0.0,
        sandwiches: Vec::with_capacity(candidates.len()),
    };
    for mu in candidates {
        check_positive(tree, mu)?;
        if let Some((&leaf, _)) = tree
            .leaves()
            .iter()
            .zip(mu.masses())
            .find(|(l, m)| **m > 0.0 && !set.contains(**l))
        {
            return Err(Error::validation(format!(
                "candidate charges leaf {leaf} outside the set"
            )));
        }
        let report = carleson_norm(tree, mu, p)?;
        let en = energy(tree, mu, p);
        let dual = if en > 0.0 {
            mu.total().powf(p.p()) / en.powf(p.p() - 1.0)
        } else {
            0.0
        };
        out.best = out.best.max(report.capacity_lower_bound);
        out.sandwiches.push(Sandwich {
            carleson_bound: report.capacity_lower_bound,
            dual_bound: dual,
            capacity,
        });
    }
    Ok(out)
}

/// `g*_n = I(|∇g|·χ_{|α|≤n})`.
pub fn radial_variation(tree: &Tree, g: &VertexFn, n: usize) -> Result<VertexFn> {
    if n > tree.depth() {
        return Err(Error::parameter(format!(
            "level {n} exceeds the depth {}",
            tree.depth()
        )));
    }
    let grad = gradient(tree, g);
    let cut = EdgeFn::from_fn(tree, |e| {
        if tree.level(e) <= n {
            grad.0[e].abs()
        } else {
            0.0
        }
    });
    Ok(potential(tree, &cut))
}

/// Values of `g` at leaf-end vertices, in leaf order.
pub fn boundary_values(tree: &Tree, g: &VertexFn) -> Vec<f64> {
    g.at_leaves(tree)
}

/// Column `ζ` of `G(ζ, η) = #(common edges of [ω, ζ] and [ω, η])`, in leaf order.
fn gram_column(tree: &Tree, leaf: EdgeId, shared: &mut [f64], on_path: &mut [bool]) -> Vec<f64> {
    on_path.iter_mut().for_each(|b| *b = false);
    let mut e = Some(leaf);
    while let Some(a) = e {
        on_path[a] = true;
        e = tree.parent(a);
    }
    for e in 0..tree.edge_count() {
        shared[e] = if on_path[e] {
            (tree.level(e) + 1) as f64
        } else {
            tree.parent(e).map_or(0.0, |par| shared[par])
        };
    }
    tree.leaves().iter().map(|&l| shared[l]).collect()
}

/// Applies the Gram matrix: the potential of `I*μ` at every leaf-end vertex.
fn gram_apply(tree: &Tree, masses: &[f64]) -> Vec<f64> {
    let m = copotential(tree, &Charge::new(masses.to_vec()));
    potential(tree, &m).at_leaves(tree)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn conjugate_gradient(tree: &Tree, rhs: &[f64]) -> Result<Vec<f64>> {
    let n = rhs.len();
    let mut x = vec![0.0; n];
    let mut r = rhs.to_vec();
    let mut d = r.clone();
    let mut rr = dot(&r, &r);
    let target = GRAM_TOL * rr.sqrt();
    let limit = 10 * n + 100;
    for _ in 0..limit {
        if rr.sqrt() <= target {
            return Ok(x);
        }
        let gd = gram_apply(tree, &d);
        let step = rr / dot(&d, &gd);
        for i in 0..n {
            x[i] += step * d[i];
            r[i] -= step * gd[i];
        }
        let next = dot(&r, &r);
        let beta = next / rr;
        rr = next;
        for i in 0..n {
            d[i] = r[i] + beta * d[i];
        }
    }
    Err(Error::Solver {
        solver: "conjugate-gradient",
        iterations: limit,
        lower: 0.0,
        upper: rr.sqrt(),
    })
}

/// The charge whose potential takes the given values at the leaf-end vertices.
pub fn gram_solve(tree: &Tree, values: &[f64]) -> Result<Charge> {
    let n = tree.leaf_count();
    if values.len() != n {
        return Err(Error::validation(format!(
            "{} values for {n} leaves",
            values.len()
        )));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::validation("boundary values must be finite"));
    }
    if values.iter().all(|&v| v == 0.0) {
        return Ok(Charge::zero(tree));
    }
    let masses = if n <= DENSE_GRAM_LIMIT {
        let mut shared = vec![0.0; tree.edge_count()];
        let mut on_path = vec![false; tree.edge_count()];
        let mut g = DMatrix::zeros(n, n);
        for (j, &leaf) in tree.leaves().iter().enumerate() {
            let col = gram_column(tree, leaf, &mut shared, &mut on_path);
            g.set_column(j, &DVector::from_vec(col));
        }
        let chol = g
            .cholesky()
            .ok_or_else(|| Error::Numerical("Gram matrix is not positive definite".into()))?;
        chol.solve(&DVector::from_column_slice(values))
            .as_slice()
            .to_vec()
    } else {
        conjugate_gradient(tree, values)?
    };
    Ok(Charge::new(masses))
}
