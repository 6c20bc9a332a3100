//! Lifts the square tiling to its generatrix and evaluates it three ways.
//!
//! cargo run --example generatrix

use liftile::geom::Vector;
use liftile::lift::{
    build_generatrix, chain_value_oracle, check_convexity, check_nonnegative, evaluate_g, facet_waypoints,
    random_chain, random_point_in_cell,
};
use liftile::scaling::Scaling;
use liftile::tiling::{dirichlet_cell, generate_patch, Lattice};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let lattice = Lattice::cubic(2);
    let patch = generate_patch(&dirichlet_cell(&lattice)?, &lattice, 2)?;
    let s = Scaling::uniform(&patch, 1.0);
    let g = build_generatrix(&patch, &s, patch.base_cell_index)?;

    for coords in [[0, 0], [1, 0], [1, 1], [2, 1], [-2, 2]] {
        let x = lattice.point(&coords);
        println!("G{:?} = {:.3}  (|x|^2/2 = {:.3})", coords, evaluate_g(&g, &x)?, 0.5 * x.norm_squared());
    }

    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let target = patch.cell_at(&[2, -1]).expect("inside the patch");
    let chain = random_chain(&patch, patch.base_cell_index, target, &mut rng);
    let x = random_point_in_cell(&patch, target, &mut rng);
    let waypoints = facet_waypoints(&patch, &chain)?;
    let oracle = chain_value_oracle(&patch, &s, &chain, &x, &waypoints)?;
    println!("chain of {} cells: oracle {oracle:.12}, stored lift {:.12}", chain.cells.len(), evaluate_g(&g, &x)?);

    let conv = check_convexity(&g, 500, &mut rng);
    println!(
        "{} facets checked, {} midpoint failures in {} samples",
        conv.facets_checked, conv.midpoint_failures, conv.samples
    );
    let nonneg = check_nonnegative(&g);
    println!("min vertex height {:e} in cell {}", nonneg.min_height, nonneg.argmin_cell);

    let y = Vector::from_column_slice(&[0.25, 0.25]);
    println!("cells whose lift is active near the base: {:?}", g.values_at(&y));
    Ok(())
}
