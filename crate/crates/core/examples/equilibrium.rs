//! Equilibrium data, the rescaling identities, dual bounds and the uniqueness pairing.

use arbor::calculus::{copotential, Charge, Exponent};
use arbor::capacity::{
    capacity_recursive, dual_admissibility_check, rescaling_residuals, uniqueness_pairing,
};
use arbor::tree::{BoundarySet, Tree};

fn main() -> arbor::error::Result<()> {
    let tree = Tree::spherical(&[2, 3], 5)?;
    let set = BoundarySet::new(&tree, tree.leaves().iter().copied().step_by(2).collect())?;
    let p = Exponent::new(3.0)?;
    let eq = capacity_recursive(&tree, &set, p)?;
    println!(
        "capacity {:.12}, consistency defect {:e}",
        eq.capacity,
        eq.consistency_defect(&tree)
    );

    let (r1, r2) = rescaling_residuals(&tree, &eq)?;
    println!("rescaling residuals r1 = {r1:e}, r2 = {r2:e}");

    let uniform = Charge::new(
        tree.leaves()
            .iter()
            .map(|&l| if set.contains(l) { 1.0 } else { 0.0 })
            .collect(),
    );
    let bound =
        dual_admissibility_check(&tree, &set, p, &[uniform.clone(), eq.eq_measure.clone()])?;
    println!("best dual lower bound {bound:.12}");

    let m = eq.copotential(&tree);
    let v = copotential(&tree, &uniform.scale(eq.capacity / uniform.total()));
    println!(
        "pairing(M, V) = {:.6e}, pairing(M, M) = {}",
        uniqueness_pairing(&m, &v, p),
        uniqueness_pairing(&m, &m, p)
    );
    Ok(())
}
