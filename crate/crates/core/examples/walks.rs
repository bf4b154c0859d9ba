//! Harmonic measure and Monte Carlo escape probabilities.

use arbor::stochastic::{capacity_escape_identity, harmonic_measure_exact, simulate_escape};
use arbor::tree::Tree;

fn main() -> arbor::error::Result<()> {
    let tree = Tree::homogeneous(2, 1)?;
    let h = harmonic_measure_exact(&tree, 1)?;
    println!(
        "dyadic depth 1 from e(ω): leaves {:?}, o {}",
        h.boundary_mass, h.root_mass
    );

    let tree = Tree::homogeneous(2, 10)?;
    let id = capacity_escape_identity(&tree, 100_000, 7)?;
    println!(
        "capacity {:.12}, exact escape {:.12}, Monte Carlo {:.5} ± {:.5}",
        id.capacity, id.exact_escape, id.mc_estimate, id.std_error
    );

    let again = simulate_escape(&tree, 1, 100_000, 7)?;
    println!("same seed again: {}", again.value);
    Ok(())
}
