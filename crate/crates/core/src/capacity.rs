//! p-capacities and equilibrium data of boundary sets.
//!
//! Two independent solvers are provided. [`capacity_recursive`] reduces the
//! tree bottom-up: sons combine in parallel (capacities add) and each unit
//! edge is then put in series with what hangs below it. [`capacity_optimize`]
//! solves the defining convex program with a primal barrier method and knows
//! nothing about that reduction.

mod optimize;

use rayon::prelude::*;
use serde::{Deserialize, Serialize, Serializer};

use crate::calculus::{
    copotential, energy, footnote_map, potential, subtree_sums, Charge, EdgeFn, Exponent,
};
use crate::error::{Error, Result};
use crate::tree::{BoundarySet, Tree, ROOT};

pub use optimize::{capacity_optimize, DEFAULT_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Recursive,
    Barrier,
}

/// Capacity of a set together with its equilibrium function and measure.
#[derive(Debug, Clone, Serialize)]
pub struct EquilibriumResult {
    pub capacity: f64,
    /// `f^E`, with `If^E = 1` on the set.
    #[serde(rename = "f")]
    pub eq_fn: EdgeFn,
    /// `μ^E`, in leaf order.
    #[serde(rename = "mu")]
    pub eq_measure: Charge,
    #[serde(serialize_with = "serialize_exponent")]
    pub p: Exponent,
    pub tol: Option<f64>,
    pub solver: SolverKind,
    #[serde(skip)]
    pub set: BoundarySet,
}

fn serialize_exponent<S: Serializer>(p: &Exponent, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_f64(p.p())
}

impl EquilibriumResult {
    fn empty(tree: &Tree, set: &BoundarySet, p: Exponent, solver: SolverKind) -> Self {
        EquilibriumResult {
            capacity: 0.0,
            eq_fn: EdgeFn::zeros(tree),
            eq_measure: Charge::zero(tree),
            p,
            tol: None,
            solver,
            set: set.clone(),
        }
    }

    /// `M = I*μ^E`.
    pub fn copotential(&self, tree: &Tree) -> EdgeFn {
        copotential(tree, &self.eq_measure)
    }

    /// Largest deviation among `‖f^E‖_p^p`, `μ^E(E)`, `ℰ_p(μ^E)` and the capacity.
    pub fn consistency_defect(&self, tree: &Tree) -> f64 {
        let c = self.capacity;
        let norm = self.eq_fn.lp_norm_pow(self.p.p());
        let mass = self.eq_measure.total();
        let en = energy(tree, &self.eq_measure, self.p);
        [norm, mass, en]
            .iter()
            .map(|v| (v - c).abs())
            .fold(0.0, f64::max)
    }
}

fn check_set(tree: &Tree, set: &BoundarySet) -> Result<()> {
    match set
        .members()
        .iter()
        .find(|&&e| !tree.contains(e) || !tree.is_leaf(e))
    {
        Some(bad) => Err(Error::validation(format!(
            "edge {bad} is not a leaf of this tree"
        ))),
        None => Ok(()),
    }
}

/// `c_{α,p}(E_α)` for every edge: the capacity of `E_α` relative to the tent `T_α`.
pub fn relative_capacities(tree: &Tree, set: &BoundarySet, p: Exponent) -> Result<Vec<f64>> {
    check_set(tree, set)?;
    let mut c = vec![0.0; tree.edge_count()];
    for e in (0..tree.edge_count()).rev() {
        c[e] = if tree.is_leaf(e) {
            if set.contains(e) {
                1.0
            } else {
                0.0
            }
        } else {
            series_with_unit_edge(tree.children(e).map(|s| c[s]).sum(), p)
        };
    }
    Ok(c)
}

/// Capacity of a unit edge followed by a network of capacity `below`.
///
/// Minimizes `t^p + below·(1 − t)^p` over the share `t` of the unit drop taken
/// by the edge: `below / (1 + below^{p′−1})^{p−1}`.
fn series_with_unit_edge(below: f64, p: Exponent) -> f64 {
    if below <= 0.0 {
        return 0.0;
    }
    below / (1.0 + below.powf(p.conj() - 1.0)).powf(p.p() - 1.0)
}

/// Exact capacity and equilibrium data by series/parallel reduction.
pub fn capacity_recursive(
    tree: &Tree,
    set: &BoundarySet,
    p: Exponent,
) -> Result<EquilibriumResult> {
    let rel = relative_capacities(tree, set, p)?;
    if set.is_empty() {
        return Ok(EquilibriumResult::empty(
            tree,
            set,
            p,
            SolverKind::Recursive,
        ));
    }
    // Remaining drop `1 − If` at each vertex, carried multiplicatively.
    let mut f = vec![0.0; tree.edge_count()];
    let mut rest = vec![1.0; tree.vertex_count()];
    for e in 0..tree.edge_count() {
        let rb = rest[tree.begin_vertex(e)];
        if rel[e] == 0.0 {
            continue;
        }
        if tree.is_leaf(e) {
            f[e] = rb;
            rest[e + 1] = 0.0;
        } else {
            let below: f64 = tree.children(e).map(|s| rel[s]).sum();
            // The edge takes the share `a/(1 + a)` of the remaining drop.
            let a = below.powf(p.conj() - 1.0);
            f[e] = a / (1.0 + a) * rb;
            rest[e + 1] = rb / (1.0 + a);
        }
    }
    let masses = tree
        .leaves()
        .iter()
        .map(|&l| {
            if set.contains(l) {
                p.unfootnote(f[l])
            } else {
                0.0
            }
        })
        .collect();
    Ok(EquilibriumResult {
        capacity: rel[ROOT],
        eq_fn: EdgeFn(f),
        eq_measure: Charge::new(masses),
        p,
        tol: None,
        solver: SolverKind::Recursive,
        set: set.clone(),
    })
}

/// Full-boundary capacity of a spherically symmetric tree with leaves at level
/// `depth`: `(Σ_{k=0}^{depth} N_k^{1−p′})^{1−p}`.
pub fn spherical_capacity(degrees: &[usize], depth: usize, p: Exponent) -> Result<f64> {
    if degrees.is_empty() || degrees.iter().any(|&d| d < 1) {
        return Err(Error::parameter("degrees must be non-empty and at least 1"));
    }
    let mut n_k = 1.0f64;
    let mut sum = 1.0;
    for k in 1..=depth {
        n_k *= degrees[(k - 1).min(degrees.len() - 1)] as f64;
        sum += n_k.powf(1.0 - p.conj());
    }
    Ok(sum.powf(1.0 - p.p()))
}

/// Residuals of the two rescaling identities for an equilibrium solution.
///
/// `r1` compares `μ^E` below each edge `α` with `(1 − IM_p(b(α)))^{p−1} μ^{E_α}`,
/// the tent measure coming from an independent solve on `T_α`. `r2` is the
/// largest `|M(α)(1 − IM_p(b(α))) − Σ_{β≥α} M(β)^{p′}|`.
///
/// In `r1` the deficit `1 − IM_p(b(α))` is taken as the sum of `M_p` from `α`
/// down to a leaf of the set, which equals it on `E` and avoids cancellation.
pub fn rescaling_residuals(tree: &Tree, result: &EquilibriumResult) -> Result<(f64, f64)> {
    let p = result.p;
    let set = &result.set;
    let m = result.copotential(tree);
    let mp = footnote_map(&m, p);
    let pot = potential(tree, &mp);
    let reach = set.reach(tree);
    let mut below = vec![0.0; tree.edge_count()];
    for e in (0..tree.edge_count()).rev() {
        let next = tree
            .children(e)
            .find(|&c| reach[c])
            .map_or(0.0, |c| below[c]);
        below[e] = mp.0[e] + next;
    }
    let tail = subtree_sums(tree, &m.map(|x| x.abs().powf(p.conj())).0);

    let r2 = (0..tree.edge_count())
        .map(|e| (m.0[e] * (1.0 - pot.0[tree.begin_vertex(e)]) - tail[e]).abs())
        .fold(0.0, f64::max);

    let r1 = (0..tree.edge_count())
        .into_par_iter()
        .filter(|&e| reach[e])
        .map(|e| -> Result<f64> {
            let tent = tree.tent(e)?;
            let local = capacity_recursive(&tent.tree, &tent.restrict(set), p)?;
            let scale = p.unfootnote(below[e]);
            let mut worst = 0.0f64;
            for (slot, &leaf) in tent.tree.leaves().iter().enumerate() {
                let global = tree
                    .leaf_slot(tent.origin[leaf])
                    .expect("tent leaf is a leaf");
                let dev =
                    result.eq_measure.masses()[global] - scale * local.eq_measure.masses()[slot];
                worst = worst.max(dev.abs());
            }
            Ok(worst)
        })
        .try_reduce(|| 0.0, |a, b| Ok(a.max(b)))?;
    Ok((r1, r2))
}

/// `μ(E)^p / ℰ_p(μ)^{p−1}`: the dual lower bound certified by a positive measure on `E`.
pub fn dual_bound(tree: &Tree, mu: &Charge, p: Exponent) -> f64 {
    let en = energy(tree, mu, p);
    if en == 0.0 {
        return 0.0;
    }
    mu.total().powf(p.p()) / en.powf(p.p() - 1.0)
}

/// Checks that `mu` is a nonzero positive measure supported in `set`.
pub fn validate_candidate(tree: &Tree, set: &BoundarySet, mu: &Charge) -> Result<()> {
    mu.validate(tree)?;
    let mut any = false;
    for (&leaf, &m) in tree.leaves().iter().zip(mu.masses()) {
        if m < 0.0 {
            return Err(Error::validation(format!(
                "negative mass {m} at leaf {leaf}"
            )));
        }
        if m > 0.0 {
            if !set.contains(leaf) {
                return Err(Error::validation(format!(
                    "mass at leaf {leaf} outside the set"
                )));
            }
            any = true;
        }
    }
    if !any {
        return Err(Error::validation("zero candidate measure"));
    }
    Ok(())
}

/// Best dual lower bound `(μ(E)/ℰ_p(μ)^{1/p′})^p` over the candidates.
pub fn dual_admissibility_check(
    tree: &Tree,
    set: &BoundarySet,
    p: Exponent,
    candidates: &[Charge],
) -> Result<f64> {
    let mut best = 0.0f64;
    for mu in candidates {
        validate_candidate(tree, set, mu)?;
        best = best.max(dual_bound(tree, mu, p));
    }
    Ok(best)
}

/// `Σ_β (M − V)(M_p − V_p)(β)` for two co-potentials; nonnegative, zero iff `M = V`.
pub fn uniqueness_pairing(m: &EdgeFn, v: &EdgeFn, p: Exponent) -> f64 {
    m.0.iter()
        .zip(&v.0)
        .map(|(&a, &b)| (a - b) * (p.footnote(a) - p.footnote(b)))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::potential;

    fn p(x: f64) -> Exponent {
        Exponent::new(x).unwrap()
    }

    /// Level-constant drops, minimized in closed form.
    fn series_sum(level_counts: &[usize], e: Exponent) -> f64 {
        level_counts
            .iter()
            .map(|&n| (n as f64).powf(1.0 - e.conj()))
            .sum::<f64>()
            .powf(1.0 - e.p())
    }

    #[test]
    fn single_edge() {
        let t = Tree::path(1).unwrap();
        let r = capacity_recursive(&t, &BoundarySet::full(&t), p(2.0)).unwrap();
        assert_eq!(r.capacity, 1.0);
        assert_eq!(r.eq_fn.0, vec![1.0]);
    }

    #[test]
    fn path_capacity() {
        for &pp in &[1.5, 2.0, 3.0] {
            for len in 1..8 {
                let t = Tree::path(len).unwrap();
                let r = capacity_recursive(&t, &BoundarySet::full(&t), p(pp)).unwrap();
                let expect = (len as f64).powf(1.0 - pp);
                assert!((r.capacity - expect).abs() < 1e-14, "{pp} {len}");
                for &f in &r.eq_fn.0 {
                    assert!((f - 1.0 / len as f64).abs() < 1e-14);
                }
            }
        }
        let t = Tree::path(4).unwrap();
        let r = capacity_recursive(&t, &BoundarySet::full(&t), p(2.0)).unwrap();
        assert!((r.capacity - 0.25).abs() < 1e-15);
    }

    #[test]
    fn dyadic_capacity() {
        let t = Tree::homogeneous(2, 10).unwrap();
        let r = capacity_recursive(&t, &BoundarySet::full(&t), p(2.0)).unwrap();
        assert!((r.capacity - 1024.0 / 2047.0).abs() < 1e-14);
        assert!(r.consistency_defect(&t) < 1e-13);
    }

    #[test]
    fn empty_set() {
        let t = Tree::homogeneous(2, 3).unwrap();
        let r = capacity_recursive(&t, &BoundarySet::empty(), p(2.0)).unwrap();
        assert_eq!(r.capacity, 0.0);
        assert!(r.eq_fn.0.iter().all(|&x| x == 0.0));
        assert!(r.eq_measure.masses().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn set_from_another_tree_is_rejected() {
        let small = Tree::path(2).unwrap();
        let big = Tree::homogeneous(2, 3).unwrap();
        let set = BoundarySet::full(&big);
        assert!(capacity_recursive(&small, &set, p(2.0)).is_err());
    }

    #[test]
    fn spherical_matches_recursion() {
        let cases: &[(&[usize], usize)] = &[(&[2], 6), (&[3, 1, 2], 5), (&[1], 4), (&[4, 2], 3)];
        for &(deg, depth) in cases {
            let t = Tree::spherical(deg, depth).unwrap();
            for &pp in &[1.5, 2.0, 3.0] {
                let e = p(pp);
                let rec = capacity_recursive(&t, &BoundarySet::full(&t), e)
                    .unwrap()
                    .capacity;
                let sph = spherical_capacity(deg, depth, e).unwrap();
                assert!((rec - sph).abs() < 1e-12);
                assert!((sph - series_sum(&t.level_counts(), e)).abs() < 1e-12);
            }
        }
        assert_eq!(spherical_capacity(&[5], 0, p(3.0)).unwrap(), 1.0);
        let d = spherical_capacity(&[2], 4, p(2.0)).unwrap();
        assert!((d - 1.0 / (2.0 - 1.0 / 16.0)).abs() < 1e-15);
        let q3 = spherical_capacity(&[3], 5, p(2.0)).unwrap();
        assert!((q3 - 243.0 / 364.0).abs() < 1e-15);
    }

    #[test]
    fn equilibrium_potential_is_one_on_set() {
        let t = Tree::spherical(&[3, 2], 4).unwrap();
        let set = BoundarySet::under(&t, &[1, 5]).unwrap();
        let r = capacity_recursive(&t, &set, p(2.5)).unwrap();
        let u = potential(&t, &r.eq_fn);
        for &l in set.members() {
            assert!((u.0[t.end_vertex(l)] - 1.0).abs() < 1e-15);
        }
        let m = r.copotential(&t);
        let fp = footnote_map(&m, r.p);
        assert!(fp.max_abs_diff(&r.eq_fn) < 1e-14);
        assert!(r.consistency_defect(&t) < 1e-13);
    }

    #[test]
    fn monotone_in_set() {
        let t = Tree::homogeneous(3, 4).unwrap();
        let e = p(1.7);
        let small = BoundarySet::under(&t, &[1]).unwrap();
        let large = BoundarySet::under(&t, &[1, 2]).unwrap();
        let a = capacity_recursive(&t, &small, e).unwrap().capacity;
        let b = capacity_recursive(&t, &large, e).unwrap().capacity;
        assert!(a < b);
    }

    #[test]
    fn deeper_truncations_have_smaller_capacity() {
        for &pp in &[1.5, 2.0, 3.0] {
            let caps: Vec<f64> = (1..10)
                .map(|d| {
                    let t = Tree::spherical(&[2, 1, 3], d).unwrap();
                    capacity_recursive(&t, &BoundarySet::full(&t), p(pp))
                        .unwrap()
                        .capacity
                })
                .collect();
            assert!(caps.windows(2).all(|w| w[1] <= w[0]));
        }
    }

    #[test]
    fn rescaling_on_dyadic_and_path() {
        let t = Tree::homogeneous(2, 6).unwrap();
        let r = capacity_recursive(&t, &BoundarySet::full(&t), p(2.0)).unwrap();
        let (r1, r2) = rescaling_residuals(&t, &r).unwrap();
        assert!(r1 <= 1e-10 && r2 <= 1e-10, "{r1} {r2}");
        // At the root the second identity is M(ω) = ℰ_p(μ).
        let m = r.copotential(&t);
        assert!((m.0[ROOT] - energy(&t, &r.eq_measure, r.p)).abs() < 1e-12);

        let path = Tree::path(5).unwrap();
        let r = capacity_recursive(&path, &BoundarySet::full(&path), p(3.0)).unwrap();
        let (r1, r2) = rescaling_residuals(&path, &r).unwrap();
        assert!(r1 < 1e-15 && r2 < 1e-15);
    }

    #[test]
    fn dual_bounds() {
        let t = Tree::homogeneous(2, 5).unwrap();
        let set = BoundarySet::full(&t);
        let e = p(2.0);
        let r = capacity_recursive(&t, &set, e).unwrap();
        let exact =
            dual_admissibility_check(&t, &set, e, std::slice::from_ref(&r.eq_measure)).unwrap();
        assert!((exact - r.capacity).abs() < 1e-13);

        let leaf = t.leaves()[3];
        let single = Charge::dirac(&t, leaf).unwrap();
        let bound = dual_admissibility_check(&t, &set, e, &[single]).unwrap();
        assert!((bound - 1.0 / 6.0).abs() < 1e-15);
        assert!(bound <= r.capacity);

        assert!(dual_admissibility_check(&t, &set, e, &[Charge::zero(&t)]).is_err());
        let mut neg = Charge::dirac(&t, leaf).unwrap();
        neg.masses_mut()[0] = -0.1;
        assert!(dual_admissibility_check(&t, &set, e, &[neg]).is_err());
        let outside = BoundarySet::under(&t, &[1]).unwrap();
        let far = Charge::dirac(&t, *t.leaves().last().unwrap()).unwrap();
        assert!(dual_admissibility_check(&t, &outside, e, &[far]).is_err());
    }

    #[test]
    fn pairing_vanishes_only_on_equal_copotentials() {
        let t = Tree::homogeneous(2, 3).unwrap();
        let e = p(1.6);
        let m = copotential(&t, &Charge::equidistributed(&t, 1.0));
        assert_eq!(uniqueness_pairing(&m, &m, e), 0.0);
        let mut v = m.clone();
        v.0[4] += 1e-3;
        assert!(uniqueness_pairing(&m, &v, e) > 0.0);
    }
}
