//! p-capacity by series/parallel reduction and by convex optimization.

use arbor::calculus::Exponent;
use arbor::capacity::{capacity_optimize, capacity_recursive, spherical_capacity, DEFAULT_TOL};
use arbor::tree::{BoundarySet, Tree};

fn main() -> arbor::error::Result<()> {
    let tree = Tree::homogeneous(2, 10)?;
    let full = BoundarySet::full(&tree);
    let two = Exponent::new(2.0)?;
    let c = capacity_recursive(&tree, &full, two)?.capacity;
    println!(
        "dyadic depth 10, p = 2: {c} (1024/2047 = {})",
        1024.0 / 2047.0
    );

    let tree = Tree::spherical(&[3, 1, 2], 6)?;
    let set = BoundarySet::new(&tree, tree.leaves().iter().copied().step_by(3).collect())?;
    for p in [1.5, 2.0, 3.0] {
        let p = Exponent::new(p)?;
        let a = capacity_recursive(&tree, &set, p)?;
        let b = capacity_optimize(&tree, &set, p, DEFAULT_TOL)?;
        let s = spherical_capacity(&[3, 1, 2], 6, p)?;
        println!(
            "p = {}: recursive {:.12}, barrier {:.12}, full boundary {:.12}",
            p.p(),
            a.capacity,
            b.capacity,
            s
        );
    }
    Ok(())
}
