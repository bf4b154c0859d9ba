//! Primal barrier method for
//!
//! ```text
//! minimize Σ |f(α)|^p   subject to   If(ζ) ≥ 1 for every ζ ∈ E,
//! ```
//!
//! with `f` restricted to edges that have a member of `E` beneath them.
//! Nonnegativity of `f` is not imposed.
//!
//! Each Newton system `(D + Aᵀ W A) x = −g`, where row `ζ` of `A` is the
//! indicator of `[ω, ζ]`, is solved exactly in `O(edges)` by eliminating the
//! tree bottom-up: the cost below an edge is a quadratic in the potential at
//! its begin vertex.
//!
//! Every outer iteration yields a certified bracket: the current `f` is
//! feasible (upper bound) and the barrier multipliers form a positive
//! measure on `E` whose dual bound `μ(E)^p / ℰ_p(μ)^{p−1}` is a lower bound.

use crate::calculus::{Charge, EdgeFn, Exponent};
use crate::capacity::{check_set, dual_bound, EquilibriumResult, SolverKind};
use crate::error::{Error, Result};
use crate::tree::{BoundarySet, Tree};

pub const DEFAULT_TOL: f64 = 1e-9;

const MAX_OUTER: usize = 80;
const MAX_NEWTON: usize = 200;
const T_GROWTH: f64 = 10.0;
const STALL_DECREMENT: f64 = 1e-3;

struct Barrier<'a> {
    tree: &'a Tree,
    p: Exponent,
    active: Vec<bool>,
    in_set: Vec<bool>,
    t: f64,
}

impl Barrier<'_> {
    /// Slacks `If(ζ) − 1` at the set leaves, stored per edge (zero elsewhere).
    fn slacks(&self, f: &[f64]) -> Option<Vec<f64>> {
        let tree = self.tree;
        let mut u = vec![0.0; tree.vertex_count()];
        let mut s = vec![0.0; tree.edge_count()];
        for e in 0..tree.edge_count() {
            if !self.active[e] {
                continue;
            }
            u[e + 1] = u[tree.begin_vertex(e)] + f[e];
            if self.in_set[e] {
                s[e] = u[e + 1] - 1.0;
                if s[e].is_nan() || s[e] <= 0.0 {
                    return None;
                }
            }
        }
        Some(s)
    }

    fn objective(&self, f: &[f64]) -> f64 {
        f.iter()
            .zip(&self.active)
            .filter(|(_, &a)| a)
            .map(|(x, _)| x.abs().powf(self.p.p()))
            .sum()
    }

    fn phi(&self, f: &[f64]) -> Option<f64> {
        let s = self.slacks(f)?;
        let logs: f64 = s
            .iter()
            .zip(&self.in_set)
            .filter(|(_, &m)| m)
            .map(|(x, _)| x.ln())
            .sum();
        Some(self.t * self.objective(f) - logs)
    }

    /// Newton direction and `gᵀx` (minus the squared Newton decrement).
    fn newton_step(&self, f: &[f64], s: &[f64]) -> (Vec<f64>, f64) {
        let tree = self.tree;
        let n = tree.edge_count();
        let pp = self.p.p();

        // Σ_{ζ ≥ α} 1/s_ζ.
        let mut pull = vec![0.0; n];
        for e in (0..n).rev() {
            if !self.active[e] {
                continue;
            }
            if self.in_set[e] {
                pull[e] += 1.0 / s[e];
            }
            if let Some(par) = tree.parent(e) {
                pull[par] += pull[e];
            }
        }

        let mut g = vec![0.0; n];
        let mut d = vec![0.0; n];
        for e in 0..n {
            if self.active[e] {
                let a = f[e].abs();
                g[e] = self.t * pp * f[e].signum() * a.powf(pp - 1.0) - pull[e];
                d[e] = (self.t * pp * (pp - 1.0) * a.powf(pp - 2.0)).clamp(1e-300, 1e300);
            }
        }

        // Bottom-up: cost below α as ½·a·y² + b·y in the begin-vertex value y.
        let mut qa = vec![0.0; n];
        let mut qb = vec![0.0; n];
        let mut big_a = vec![0.0; n];
        let mut big_b = vec![0.0; n];
        for e in (0..n).rev() {
            if !self.active[e] {
                continue;
            }
            let (mut aa, mut bb) = (0.0, 0.0);
            for c in tree.children(e) {
                aa += qa[c];
                bb += qb[c];
            }
            if self.in_set[e] {
                aa += 1.0 / (s[e] * s[e]);
            }
            big_a[e] = aa;
            big_b[e] = bb;
            let denom = d[e] + aa;
            qa[e] = d[e] * aa / denom;
            qb[e] = (d[e] * bb - aa * g[e]) / denom;
        }

        // Top-down: recover the step.
        let mut x = vec![0.0; n];
        let mut y_end = vec![0.0; tree.vertex_count()];
        for e in 0..n {
            if !self.active[e] {
                continue;
            }
            let y = y_end[tree.begin_vertex(e)];
            let z = (d[e] * y - g[e] - big_b[e]) / (d[e] + big_a[e]);
            x[e] = z - y;
            y_end[e + 1] = z;
        }
        let gx = g.iter().zip(&x).map(|(a, b)| a * b).sum();
        (x, gx)
    }

    /// Damped Newton on the barrier function for the current `t`.
    fn center(&self, f: &mut Vec<f64>) -> bool {
        let mut last = f64::INFINITY;
        for _ in 0..MAX_NEWTON {
            let s = match self.slacks(f) {
                Some(s) => s,
                None => return false,
            };
            let (x, gx) = self.newton_step(f, &s);
            let dec = -gx / 2.0;
            // A small decrement that stops shrinking has hit the rounding floor.
            if dec <= 1e-12 || (dec <= STALL_DECREMENT && dec > 0.5 * last) {
                return true;
            }
            last = dec;
            let base = match self.phi(f) {
                Some(v) => v,
                None => return false,
            };
            let mut step = 1.0;
            let mut moved = false;
            while step > 1e-14 {
                let trial: Vec<f64> = f.iter().zip(&x).map(|(a, b)| a + step * b).collect();
                if let Some(v) = self.phi(&trial) {
                    if v <= base + 0.25 * step * gx {
                        *f = trial;
                        moved = true;
                        break;
                    }
                }
                step *= 0.5;
            }
            if !moved {
                // No representable decrease left at this t.
                return true;
            }
        }
        true
    }

    /// Positive measure on the set built from the barrier multipliers `1/(t s_ζ)`.
    fn multipliers(&self, s: &[f64]) -> Charge {
        let p = self.p.p();
        Charge::new(
            self.tree
                .leaves()
                .iter()
                .map(|&l| {
                    if self.in_set[l] {
                        1.0 / (p * self.t * s[l])
                    } else {
                        0.0
                    }
                })
                .collect(),
        )
    }
}

/// Capacity by convex optimization, to within `tol·max(1, c)` of the optimum.
///
/// The returned capacity is the value of a feasible `f`, so it never
/// undershoots. On failure the error carries the best certified bracket.
pub fn capacity_optimize(
    tree: &Tree,
    set: &BoundarySet,
    p: Exponent,
    tol: f64,
) -> Result<EquilibriumResult> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::parameter("tolerance must be positive"));
    }
    check_set(tree, set)?;
    if set.is_empty() {
        let mut r = EquilibriumResult::empty(tree, set, p, SolverKind::Barrier);
        r.tol = Some(tol);
        return Ok(r);
    }

    let active = set.reach(tree);
    let in_set = set.mask(tree);
    let shallowest = set
        .members()
        .iter()
        .map(|&l| tree.level(l))
        .min()
        .expect("non-empty set");
    let start = 2.0 / (shallowest + 1) as f64;
    let mut f: Vec<f64> = active
        .iter()
        .map(|&a| if a { start } else { 0.0 })
        .collect();

    let mut barrier = Barrier {
        tree,
        p,
        active,
        in_set,
        t: 1.0,
    };
    let (mut lower, mut upper) = (0.0, f64::INFINITY);
    let mut best_measure = None;
    for _ in 0..MAX_OUTER {
        barrier.center(&mut f);
        let s = barrier
            .slacks(&f)
            .ok_or_else(|| Error::Numerical("barrier iterate left the feasible set".into()))?;
        let value = barrier.objective(&f);
        let mu = barrier.multipliers(&s);
        let bound = dual_bound(tree, &mu, p);
        if bound > lower {
            lower = bound;
            best_measure = Some(mu);
        }
        upper = upper.min(value);
        if upper - lower <= tol * upper.max(1.0) {
            let mut eq_measure = best_measure.expect("bound improved at least once");
            // Normalize the certificate so that μ(E) equals the capacity.
            let k = upper / eq_measure.total();
            eq_measure = eq_measure.scale(k);
            return Ok(EquilibriumResult {
                capacity: upper,
                eq_fn: EdgeFn(f),
                eq_measure,
                p,
                tol: Some(tol),
                solver: SolverKind::Barrier,
                set: set.clone(),
            });
        }
        barrier.t *= T_GROWTH;
    }
    Err(Error::Solver {
        solver: "barrier",
        iterations: MAX_OUTER,
        lower,
        upper,
    })
}
