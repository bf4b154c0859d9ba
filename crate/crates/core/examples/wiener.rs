//! Wiener series, telescoping identity and deficit sweeps along a ray.

use arbor::calculus::Exponent;
use arbor::tree::{GeodesicRay, Tree, TreeSpec};
use arbor::wiener::{capacity_form_terms, deficit, wiener_series, SetRule};

fn main() -> arbor::error::Result<()> {
    let tree = Tree::homogeneous(2, 12)?;
    let set = SetRule::Full.realize(&tree)?;
    let ray = GeodesicRay::leftmost();
    let p = Exponent::new(2.0)?;
    let report = wiener_series(&tree, &set, &ray, p, 8)?;
    println!("c_n: {:.6?}", report.c_seq);
    println!(
        "partial sum {:.6}, product {:.3e}, ε {:.3e}",
        report.partial_sum(),
        report.product(),
        report.epsilon
    );
    println!("telescoping residual {:e}", report.telescoping_residual);

    let terms = capacity_form_terms(&tree, &set, &ray, p, 8)?;
    let worst = terms
        .iter()
        .zip(&report.c_seq)
        .map(|(a, b)| (a - b).abs() / b)
        .fold(0.0, f64::max);
    println!("capacity-form terms agree to {worst:e}");

    let sweep = deficit(
        &TreeSpec::homogeneous(2, 0),
        &SetRule::Full,
        &ray,
        p,
        &[4, 8, 12, 16],
    )?;
    let eps: Vec<String> = sweep.epsilon.iter().map(|e| format!("{e:.3e}")).collect();
    println!(
        "deficit sweep {:?}: ε = {eps:?}, verdict {:?}",
        sweep.depths, sweep.verdict
    );

    let outside = SetRule::Tents(vec![vec![1]]);
    let sweep = deficit(&TreeSpec::homogeneous(2, 0), &outside, &ray, p, &[4, 8, 12])?;
    println!(
        "ray outside E: ε = {:.6?}, verdict {:?}",
        sweep.epsilon, sweep.verdict
    );
    Ok(())
}
