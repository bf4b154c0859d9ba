//! Running command-line pipelines from code.

use arbor::capacity::{SolverKind, DEFAULT_TOL};
use arbor::cli::{render, run, BoundarySource, Command, Format, Quantity, RunConfig};
use arbor::dirichlet::BoundaryRule;
use arbor::tree::{GeodesicRay, TreeSpec};
use arbor::wiener::SetRule;

fn main() -> arbor::error::Result<()> {
    let mut config = RunConfig {
        command: Command::Sweep,
        tree: TreeSpec::homogeneous(2, 2),
        p: 2.0,
        depth: 2,
        depths: (2..=12).collect(),
        set: SetRule::Full,
        ray: GeodesicRay::leftmost(),
        horizon: None,
        seed: 0,
        n_walks: 0,
        solver: SolverKind::Recursive,
        tol: DEFAULT_TOL,
        boundary: BoundarySource::Rule(BoundaryRule::tent_indicator(vec![0])),
        measure: None,
        quantity: Quantity::Capacity,
        output: None,
        format: Format::Csv,
    };
    print!("{}", render(&config, &run(&config)?)?);

    config.quantity = Quantity::Deficit;
    print!("{}", render(&config, &run(&config)?)?);

    config.quantity = Quantity::Gap;
    print!("{}", render(&config, &run(&config)?)?);
    Ok(())
}
