//! A nonzero charge whose potential vanishes on the boundary off one point.

use arbor::calculus::Exponent;
use arbor::carleson::gram_solve;
use arbor::cli::spine_sweep;
use arbor::counterexample::Counterexample;
use arbor::dyadic::Dyadic;

fn main() -> arbor::error::Result<()> {
    for spine in 2..=10 {
        let c = Counterexample::new(spine, 3)?;
        let spine_leaf = c.spine_leaf();
        let off_zero = c
            .tree
            .leaves()
            .iter()
            .filter(|&&l| l != spine_leaf)
            .all(|&l| c.boundary_potential_exact(l).ok().flatten() == Some(Dyadic::ZERO));
        println!(
            "spine {spine:2}: {:7} edges, forward defect {}, total charge {}, IM = 0 off the spine: {off_zero}",
            c.tree.edge_count(),
            c.forward_defect_exact(),
            c.charge.total(),
        );
    }

    let rows = spine_sweep(&[2, 4, 6, 8, 10], 1, Exponent::new(2.0)?)?;
    for r in &rows {
        println!(
            "spine {:2}: Wiener partial sum {:.6}",
            r.spine_depth, r.partial_sum
        );
    }

    let c = Counterexample::new(5, 1)?;
    let zero = gram_solve(&c.tree, &vec![0.0; c.tree.leaf_count()])?;
    println!(
        "finite depth: zero data gives zero charge: {}",
        zero.masses().iter().all(|&m| m == 0.0)
    );
    Ok(())
}
