//! Potentials, gradients, co-potentials and the p-Laplacian.

use arbor::calculus::{
    copotential, footnote_map, forward_defect, forward_projection, gradient, p_laplacian,
    potential, Charge, EdgeFn, Exponent,
};
use arbor::tree::Tree;

fn main() -> arbor::error::Result<()> {
    let tree = Tree::spherical(&[2, 3], 3)?;
    let p = Exponent::new(3.0)?;

    let f = EdgeFn::from_fn(&tree, |e| ((e * 7) % 5) as f64 - 2.0);
    let g = potential(&tree, &f);
    println!("‖∇If − f‖∞ = {:e}", gradient(&tree, &g).max_abs_diff(&f));

    let mu = Charge::new(
        (0..tree.leaf_count())
            .map(|i| 1.0 + (i % 3) as f64)
            .collect(),
    );
    let m = copotential(&tree, &mu);
    println!("co-potential at ω = {} (total mass {})", m.0[0], mu.total());
    println!("forward defect of I*μ = {:e}", forward_defect(&tree, &m));

    let lap = p_laplacian(&tree, &potential(&tree, &footnote_map(&m, p)), p);
    println!("max interior Δ_p(IM_p) = {:e}", lap.max_interior());

    println!("forward defect of f = {}", forward_defect(&tree, &f));
    let projected = forward_projection(&tree, &f);
    let lap = p_laplacian(&tree, &potential(&tree, &footnote_map(&projected, p)), p);
    println!(
        "after additive projection: max interior Δ_p = {:e}",
        lap.max_interior()
    );
    Ok(())
}
