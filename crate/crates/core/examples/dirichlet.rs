//! Poisson integrals, p-harmonic extensions and convergence at regular points.

use arbor::calculus::{p_laplacian, Exponent};
use arbor::dirichlet::{
    p_harmonic_extension, poisson, regular_convergence, BoundaryData, BoundaryRule,
};
use arbor::tree::{GeodesicRay, Tree, TreeSpec};

fn main() -> arbor::error::Result<()> {
    let tree = Tree::homogeneous(2, 6)?;
    let phi = BoundaryData::new(
        &tree,
        (0..tree.leaf_count())
            .map(|i| (i as f64 / 8.0).sin())
            .collect(),
        0.0,
    )?;
    let harmonic = poisson(&tree, &phi)?;
    let variational = p_harmonic_extension(&tree, &phi, Exponent::new(2.0)?, 1e-12)?;
    println!(
        "poisson vs Gauss–Seidel at p = 2: {:e}",
        harmonic.max_abs_diff(&variational)
    );

    let p = Exponent::new(4.0)?;
    let g = p_harmonic_extension(&tree, &phi, p, 1e-10)?;
    println!(
        "p = 4 extension: value at e(ω) {:.6}, residual {:e}",
        g.0[1],
        p_laplacian(&tree, &g, p).max_interior()
    );

    let rule = BoundaryRule::tent_indicator(vec![0, 1]);
    for (name, ray) in [
        ("inside", GeodesicRay::sons(vec![0, 1])),
        ("outside", GeodesicRay::rightmost()),
    ] {
        let rows = regular_convergence(&TreeSpec::homogeneous(2, 0), &rule, &ray, &[4, 8, 12])?;
        let gaps: Vec<String> = rows.iter().map(|r| format!("{:.3e}", r.gap)).collect();
        println!("ray {name} the tent: gaps {gaps:?}");
    }
    Ok(())
}
