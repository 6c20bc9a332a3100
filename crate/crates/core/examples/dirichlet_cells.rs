//! Dirichlet cells of the classical three-dimensional lattices and the
//! conditions every parallelohedron satisfies.
//!
//! cargo run --example dirichlet_cells

use liftile::geom::Vector;
use liftile::tiling::{
    belts, check_minkowski, check_venkov_delone, dirichlet_cell, Lattice, Parallelohedron,
};

fn describe(name: &str, cell: &Parallelohedron) {
    let mk = check_minkowski(cell);
    let vd = check_venkov_delone(cell);
    let mut lengths: Vec<usize> = belts(cell).iter().map(|b| b.facets.len()).collect();
    lengths.sort_unstable();
    println!(
        "{name:<24} {:>2} vertices {:>2} facets  belts {:?}  minkowski {}  venkov-delone {}",
        cell.body.vertices.len(),
        cell.body.facets.len(),
        lengths,
        mk.passed(),
        vd.passed(),
    );
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let lattices = [
        ("cube", Lattice::cubic(3)),
        ("hexagonal prism", Lattice::hexagonal_prism()),
        ("rhombic dodecahedron", Lattice::fcc()),
        ("elongated dodecahedron", Lattice::body_centered_tetragonal(2.0)?),
        ("truncated octahedron", Lattice::bcc()),
    ];
    for (name, lattice) in &lattices {
        describe(name, &dirichlet_cell(lattice)?);
    }

    // Polytopes that cannot tile by translations.
    let corners = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0, 0.0, 1.0], [0.0, 1.0, 1.0]];
    let points: Vec<Vector> = corners.iter().map(|c| Vector::from_column_slice(c)).collect();
    let prism = Parallelohedron::from_vertices(&points)?;
    describe("triangular prism", &prism);
    let mk = check_minkowski(&prism);
    println!("  asymmetric facets: {:?}", mk.asymmetric_facets);
    Ok(())
}
