//! Six-belts and ridge kinds in three-dimensional patches.
//!
//! cargo run --example belts

use liftile::tiling::{classify_ridge, dirichlet_cell, generate_patch, six_belts, Lattice, RidgeKind};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let lattices = [
        ("cube", Lattice::cubic(3)),
        ("hexagonal prism", Lattice::hexagonal_prism()),
        ("rhombic dodecahedron", Lattice::fcc()),
        ("elongated dodecahedron", Lattice::body_centered_tetragonal(2.0)?),
        ("truncated octahedron", Lattice::bcc()),
    ];
    for (name, lattice) in &lattices {
        let patch = generate_patch(&dirichlet_cell(lattice)?, lattice, 1)?;
        let report = six_belts(&patch);
        let (mut primitive, mut standard) = (0, 0);
        for r in patch.complex.interior_ridges() {
            match classify_ridge(&patch, r)? {
                RidgeKind::Primitive => primitive += 1,
                RidgeKind::Standard => standard += 1,
            }
        }
        println!(
            "{name:<24} six-belts {}  four-belts {}  ridges: {primitive} primitive, {standard} standard",
            report.six.len(),
            report.four.len()
        );
    }
    Ok(())
}
