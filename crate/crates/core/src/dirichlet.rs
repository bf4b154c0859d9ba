//! The Dirichlet problem on a truncated tree: boundary values on leaf-end
//! vertices and at `o`, extended harmonically (`p = 2`) or p-harmonically.

use serde::{Deserialize, Serialize};

use crate::calculus::{p_laplacian, signed_pow, Exponent, VertexFn};
use crate::capacity::relative_capacities;
use crate::error::{Error, Result};
use crate::stochastic::{harmonic_measure_exact, return_probabilities};
use crate::tree::{BoundarySet, EdgeId, GeodesicRay, Tree, TreeSpec, ROOT_VERTEX};

/// Values on the realized boundary, in leaf order, and at `o`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryData {
    pub values: Vec<f64>,
    #[serde(default)]
    pub value_at_o: f64,
}

impl BoundaryData {
    pub fn new(tree: &Tree, values: Vec<f64>, value_at_o: f64) -> Result<Self> {
        let data = BoundaryData { values, value_at_o };
        data.validate(tree)?;
        Ok(data)
    }

    pub fn constant(tree: &Tree, value: f64, value_at_o: f64) -> Self {
        BoundaryData {
            values: vec![value; tree.leaf_count()],
            value_at_o,
        }
    }

    pub fn validate(&self, tree: &Tree) -> Result<()> {
        if self.values.len() != tree.leaf_count() {
            return Err(Error::validation(format!(
                "{} boundary values for {} leaves",
                self.values.len(),
                tree.leaf_count()
            )));
        }
        if !self.value_at_o.is_finite() || self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::validation("boundary values must be finite"));
        }
        Ok(())
    }

    /// Smallest and largest prescribed value, `o` included.
    pub fn range(&self) -> (f64, f64) {
        self.values
            .iter()
            .fold((self.value_at_o, self.value_at_o), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }

    fn fixed(&self, tree: &Tree) -> VertexFn {
        let mut g = VertexFn::zeros(tree);
        g.0[ROOT_VERTEX] = self.value_at_o;
        for (&l, &v) in tree.leaves().iter().zip(&self.values) {
            g.0[tree.end_vertex(l)] = v;
        }
        g
    }
}

/// `P(φ)(x) = Σ_ζ φ(ζ) λ_x(ζ) + φ(o) λ_x(o)` at every vertex.
pub fn poisson(tree: &Tree, phi: &BoundaryData) -> Result<VertexFn> {
    phi.validate(tree)?;
    let q = return_probabilities(tree);
    // Expected value collected below α before returning to b(α).
    let mut below = vec![0.0; tree.edge_count()];
    for (&l, &v) in tree.leaves().iter().zip(&phi.values) {
        below[l] = v;
    }
    for e in (0..tree.edge_count()).rev() {
        if !tree.is_leaf(e) {
            below[e] = q[e] * tree.children(e).map(|c| below[c]).sum::<f64>();
        }
    }
    let mut g = VertexFn::zeros(tree);
    g.0[ROOT_VERTEX] = phi.value_at_o;
    for e in 0..tree.edge_count() {
        g.0[tree.end_vertex(e)] = below[e] + q[e] * g.0[tree.begin_vertex(e)];
    }
    Ok(g)
}

/// Sweeps without a new smallest residual before giving up.
const STALL_SWEEPS: usize = 1000;
const MAX_SWEEPS: usize = 200_000;

/// Minimizer of `Σ_i |t − a_i|^p`, bracketed by the extreme `a_i`.
fn local_minimizer(neighbors: &[f64], start: f64, p: f64) -> f64 {
    let (mut lo, mut hi) = neighbors
        .iter()
        .fold((f64::MAX, f64::MIN), |(lo, hi), &a| (lo.min(a), hi.max(a)));
    if hi - lo <= 0.0 {
        return lo;
    }
    let slope = |t: f64| {
        neighbors
            .iter()
            .map(|&a| signed_pow(t - a, p - 1.0))
            .sum::<f64>()
    };
    let curvature = |t: f64| {
        neighbors
            .iter()
            .map(|&a| (p - 1.0) * (t - a).abs().powf(p - 2.0))
            .sum::<f64>()
    };
    let mut t = start.clamp(lo, hi);
    for _ in 0..200 {
        let s = slope(t);
        if s == 0.0 {
            return t;
        }
        if s > 0.0 {
            hi = t;
        } else {
            lo = t;
        }
        if hi - lo <= f64::EPSILON * hi.abs().max(lo.abs()).max(1e-300) {
            break;
        }
        let k = curvature(t);
        let newton = t - s / k;
        t = if k.is_finite() && k > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
    }
    t
}

/// Minimizer of `Σ_α |∇g(α)|^p` with `g` prescribed at `o` and at leaf-end vertices.
///
/// Symmetric nonlinear Gauss–Seidel; each vertex update solves its
/// one-dimensional convex problem exactly. Stops once the interior
/// p-Laplacian is at most `tol` in absolute value.
pub fn p_harmonic_extension(
    tree: &Tree,
    phi: &BoundaryData,
    p: Exponent,
    tol: f64,
) -> Result<VertexFn> {
    phi.validate(tree)?;
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::parameter("tolerance must be positive"));
    }
    let mut g = phi.fixed(tree);
    let mean = (phi.values.iter().sum::<f64>() + phi.value_at_o) / (phi.values.len() + 1) as f64;
    let interior: Vec<EdgeId> = (0..tree.edge_count())
        .filter(|&e| !tree.is_leaf(e))
        .collect();
    for &e in &interior {
        g.0[tree.end_vertex(e)] = mean;
    }
    let pp = p.p();
    let mut nbr = Vec::new();
    let mut update = |g: &mut VertexFn, e: EdgeId| {
        nbr.clear();
        nbr.push(g.0[tree.begin_vertex(e)]);
        nbr.extend(tree.children(e).map(|c| g.0[tree.end_vertex(c)]));
        let v = tree.end_vertex(e);
        g.0[v] = local_minimizer(&nbr, g.0[v], pp);
    };
    let mut residual = p_laplacian(tree, &g, p).max_interior();
    let (mut sweeps, mut best, mut best_at) = (0, residual, 0);
    while residual > tol {
        if residual < best {
            (best, best_at) = (residual, sweeps);
        }
        if sweeps == MAX_SWEEPS || sweeps - best_at == STALL_SWEEPS {
            return Err(Error::Solver {
                solver: "gauss-seidel",
                iterations: sweeps,
                lower: 0.0,
                upper: residual,
            });
        }
        for &e in &interior {
            update(&mut g, e);
        }
        for &e in interior.iter().rev() {
            update(&mut g, e);
        }
        sweeps += 1;
        residual = p_laplacian(tree, &g, p).max_interior();
    }
    Ok(g)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RuleShape {
    Constant {
        value: f64,
    },
    /// Indicator of the tent reached by the given son indices.
    TentIndicator {
        sons: Vec<usize>,
    },
    /// Distance `2^{−|ζ∧ζ_0|}` to the boundary point `ζ_0` of the given ray.
    Distance {
        reference: GeodesicRay,
    },
}

/// Boundary data given independently of the truncation depth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryRule {
    pub shape: RuleShape,
    #[serde(default)]
    pub value_at_o: f64,
}

impl BoundaryRule {
    pub fn constant(value: f64, value_at_o: f64) -> Self {
        BoundaryRule {
            shape: RuleShape::Constant { value },
            value_at_o,
        }
    }

    pub fn tent_indicator(sons: Vec<usize>) -> Self {
        BoundaryRule {
            shape: RuleShape::TentIndicator { sons },
            value_at_o: 0.0,
        }
    }

    pub fn distance(reference: GeodesicRay) -> Self {
        BoundaryRule {
            shape: RuleShape::Distance { reference },
            value_at_o: 0.0,
        }
    }

    pub fn realize(&self, tree: &Tree) -> Result<BoundaryData> {
        let values = match &self.shape {
            RuleShape::Constant { value } => vec![*value; tree.leaf_count()],
            RuleShape::TentIndicator { sons } => {
                let set = match tree.edge_at(sons) {
                    Some(e) => BoundarySet::under(tree, &[e])?,
                    None => BoundarySet::empty(),
                };
                tree.leaves()
                    .iter()
                    .map(|&l| if set.contains(l) { 1.0 } else { 0.0 })
                    .collect()
            }
            RuleShape::Distance { reference } => {
                let target = reference.realize(tree);
                let goal = *target.last().expect("rays are non-empty");
                tree.leaves()
                    .iter()
                    .map(|&l| {
                        if l == goal {
                            return Ok(0.0);
                        }
                        let path = tree.geodesic_to(l)?;
                        let shared = path.iter().zip(&target).take_while(|(a, b)| a == b).count();
                        Ok((-(shared.saturating_sub(1) as f64)).exp2())
                    })
                    .collect::<Result<Vec<_>>>()?
            }
        };
        BoundaryData::new(tree, values, self.value_at_o)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GapRow {
    pub depth: usize,
    /// `|P(φ)(x) − φ(ζ)|` at `x = b(leaf)` on the realized ray.
    pub gap: f64,
    pub value: f64,
    pub target: f64,
}

/// Gap between the Poisson integral and the boundary value along a ray, per depth.
pub fn regular_convergence(
    spec: &TreeSpec,
    rule: &BoundaryRule,
    ray: &GeodesicRay,
    depths: &[usize],
) -> Result<Vec<GapRow>> {
    if depths.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::parameter("sweep depths must increase"));
    }
    depths
        .iter()
        .map(|&depth| {
            let tree = spec.with_depth(depth).build()?;
            let phi = rule.realize(&tree)?;
            let g = poisson(&tree, &phi)?;
            let leaf = *ray.realize(&tree).last().expect("rays are non-empty");
            let target = phi.values[tree.leaf_slot(leaf).expect("leaf")];
            let value = g.0[tree.begin_vertex(leaf)];
            Ok(GapRow {
                depth,
                gap: (value - target).abs(),
                value,
                target,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct ProductBound {
    pub levels: Vec<usize>,
    /// `1 − λ_{x_n}(∂T_α)`.
    pub exit_defect: Vec<f64>,
    /// `Π_{j=|α|}^{n} (1 − c_{2,α_j}(∂T_{α_j}))`.
    pub product: Vec<f64>,
}

impl ProductBound {
    pub fn holds(&self, slack: f64) -> bool {
        self.exit_defect
            .iter()
            .zip(&self.product)
            .all(|(a, b)| *a <= b + slack)
    }
}

/// Compares the exit defect of `∂T_α` along the ray with the product of
/// relative-capacity complements over the ray's edges below `α`.
pub fn exit_product_bound(
    tree: &Tree,
    ray: &GeodesicRay,
    from_level: usize,
) -> Result<ProductBound> {
    let edges = ray.realize(tree);
    let alpha = *edges
        .get(from_level)
        .ok_or_else(|| Error::parameter(format!("ray has no edge at level {from_level}")))?;
    let tent = BoundarySet::under(tree, &[alpha])?;
    let rel = relative_capacities(tree, &BoundarySet::full(tree), Exponent::new(2.0)?)?;
    let mut out = ProductBound {
        levels: Vec::new(),
        exit_defect: Vec::new(),
        product: Vec::new(),
    };
    let mut prod = 1.0;
    for &e in &edges[from_level..] {
        prod *= 1.0 - rel[e];
        let h = harmonic_measure_exact(tree, tree.end_vertex(e))?;
        let inside: f64 = tree
            .leaves()
            .iter()
            .zip(&h.boundary_mass)
            .filter(|(l, _)| tent.contains(**l))
            .map(|(_, m)| m)
            .sum();
        out.levels.push(tree.level(e));
        out.exit_defect.push(1.0 - inside);
        out.product.push(prod);
    }
    Ok(out)
}
