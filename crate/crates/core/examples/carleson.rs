//! Sobolev norms, Carleson norms, radial variation and the Gram system.

use arbor::calculus::{Charge, Exponent, VertexFn};
use arbor::capacity::capacity_recursive;
use arbor::carleson::{
    capacity_via_carleson, carleson_norm, gram_solve, radial_variation, sobolev_norm,
};
use arbor::tree::{BoundarySet, Tree};

fn main() -> arbor::error::Result<()> {
    let tree = Tree::homogeneous(3, 5)?;
    let set = BoundarySet::full(&tree);
    let p = Exponent::new(2.5)?;
    let eq = capacity_recursive(&tree, &set, p)?;
    let report = carleson_norm(&tree, &eq.eq_measure, p)?;
    println!(
        "‖μ^E‖_CM = {} at edge {:?}",
        report.cm_norm, report.attaining_edge
    );

    let spread = Charge::new(
        (0..tree.leaf_count())
            .map(|i| 1.0 + (i % 4) as f64)
            .collect(),
    );
    let via = capacity_via_carleson(
        &tree,
        &set,
        p,
        eq.capacity,
        &[spread, eq.eq_measure.clone()],
    )?;
    println!(
        "capacity {:.9}, best Carleson bound {:.9}",
        eq.capacity, via.best
    );
    for s in &via.sandwiches {
        println!(
            "  {:.9} ≤ {:.9} ≤ {:.9}",
            s.carleson_bound, s.dual_bound, s.capacity
        );
    }

    let g = VertexFn(
        (0..tree.vertex_count())
            .map(|v| ((v * 37) % 11) as f64 / 11.0)
            .collect(),
    );
    for n in [0, 2, 5] {
        let star = radial_variation(&tree, &g, n)?;
        println!(
            "n = {n}: ‖g*_n‖ = {:.4} ≤ ‖g‖ = {:.4}",
            sobolev_norm(&tree, &star, p),
            sobolev_norm(&tree, &g, p)
        );
    }

    let zero = gram_solve(&tree, &vec![0.0; tree.leaf_count()])?;
    println!(
        "zero boundary potential ⇒ zero charge: {}",
        zero.masses().iter().all(|&m| m == 0.0)
    );
    Ok(())
}
