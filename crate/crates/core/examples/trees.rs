//! Building trees: generators, explicit nested descriptions, tents and rays.

use arbor::tree::{BoundarySet, GeodesicRay, Nested, Tree, TreeSpec};

fn main() -> arbor::error::Result<()> {
    let dyadic = Tree::homogeneous(2, 4)?;
    println!(
        "dyadic depth 4: {} edges, levels {:?}",
        dyadic.edge_count(),
        dyadic.level_counts()
    );

    let spherical = TreeSpec::spherical(vec![3, 1, 2], 5).build()?;
    println!("spherical [3,1,2]: levels {:?}", spherical.level_counts());

    // ω with two sons, the second of which has three sons.
    let nested = Nested(vec![
        Nested(vec![]),
        Nested(vec![Nested(vec![]), Nested(vec![]), Nested(vec![])]),
    ]);
    let explicit = Tree::explicit(&nested)?;
    println!(
        "explicit: {} leaves at levels {:?}",
        explicit.leaf_count(),
        explicit
            .leaves()
            .iter()
            .map(|&l| explicit.level(l))
            .collect::<Vec<_>>()
    );

    let alpha = dyadic.edge_at(&[1, 0]).expect("edge exists");
    let tent = dyadic.tent(alpha)?;
    println!(
        "tent below {alpha}: {} edges, origin {:?}",
        tent.tree.edge_count(),
        tent.origin
    );

    let set = BoundarySet::under(&dyadic, &[alpha])?;
    println!("E = ∂T_α has {} leaves: {:?}", set.len(), set.members());

    for ray in [GeodesicRay::leftmost(), GeodesicRay::sons(vec![1, 0, 1])] {
        let edges = ray.realize(&dyadic);
        println!(
            "{:?}: edges {:?}, son path {:?}",
            ray.rule,
            edges,
            dyadic.son_path(*edges.last().unwrap())?
        );
    }
    Ok(())
}
