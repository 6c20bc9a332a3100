//! Canonical scalings of the hexagonal tiling: the solved cone, zero torsion,
//! and what a single perturbed weight does.
//!
//! cargo run --example canonical_scaling

use liftile::scaling::{
    gain_from_scaling, make_translation_invariant, max_torsion, solve_canonical, verify_transfer, Increments,
};
use liftile::tiling::{dirichlet_cell, facet_classes, generate_patch, Lattice};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let lattice = Lattice::hexagonal();
    let patch = generate_patch(&dirichlet_cell(&lattice)?, &lattice, 3)?;
    println!("{} cells, {} interior facets", patch.cell_count(), patch.complex.facets.len());

    let family = solve_canonical(&patch)?;
    println!("cone dimension {} over {} constrained facets", family.dimension(), family.constrained.len());
    let s = make_translation_invariant(&family.representative, &patch)?;
    for (class, w) in s.class_weights(&patch).unwrap_or_default() {
        let c = &facet_classes(&patch)[class];
        println!("  class {class} offset {:?}: weight {w:.12}", c.offset);
    }
    let (_, t) = max_torsion(&s, &patch.complex);
    println!("max torsion {t:e}");

    let gains = gain_from_scaling(&s, &patch);
    let transfer = verify_transfer(Increments::Multiplicative(&gains), &patch, 2)?;
    println!("transfer around {} vertices: max residual {:e}", transfer.checked, transfer.max_residual);

    let bad = s.perturbed(0, 1.1);
    let (ridge, t) = max_torsion(&bad, &patch.complex);
    println!("facet 0 scaled by 1.1: torsion {t:.6} at ridge {ridge:?}");
    let transfer = verify_transfer(Increments::Additive(&bad), &patch, 2)?;
    println!("  {} cycles fail the additive transfer check", transfer.failures.len());
    Ok(())
}
