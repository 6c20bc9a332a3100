//! Starts from an affine image of the hexagonal tiling, recovers the quadratic
//! form from a canonical scaling, and maps the tiling back onto a Voronoi tiling.
//!
//! cargo run --example voronoi_reduction

use liftile::geom::Matrix;
use liftile::scaling::{make_translation_invariant, solve_canonical};
use liftile::tiling::{dirichlet_cell, generate_patch, Lattice, Parallelohedron};
use liftile::voronoi::{check_positive_definite, check_symmetry, facet_system, recover_q, reduce_to_voronoi, verify_voronoi, QForm};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let hex = Lattice::hexagonal();
    let b = Matrix::from_row_slice(2, 2, &[1.3, 0.4, -0.2, 0.8]);
    let lattice = hex.transformed(&b)?;
    // Image of the regular hexagon: a parallelohedron that is not a Voronoi cell of its lattice.
    let hexagon = dirichlet_cell(&hex)?;
    let image: Vec<_> = hexagon.body.vertices.iter().map(|v| &b * v).collect();
    let cell = Parallelohedron::from_vertices(&image)?;
    let patch = generate_patch(&cell, &lattice, 2)?;

    let s = make_translation_invariant(&solve_canonical(&patch)?.representative, &patch)?;
    let system = facet_system(&patch, &s)?;
    println!("symmetry residual {:e}", check_symmetry(&system).max_residual);
    let q = recover_q(&system)?;
    let expected = QForm::new((&b * b.transpose()).try_inverse().expect("invertible"));
    println!("Q (trace d)        {:.9}", q.trace_normalized());
    println!("(BB^T)^-1 (trace d){:.9}", expected.trace_normalized());

    let (q, definiteness) = check_positive_definite(&q)?;
    println!("eigenvalues in [{:.6}, {:.6}]", definiteness.min_eigenvalue, definiteness.max_eigenvalue);
    let map = reduce_to_voronoi(&q)?;
    let report = verify_voronoi(&map, &patch)?;
    println!("hausdorff {:e} of diameter {:.4}: {}", report.hausdorff, report.diameter, report.passed());
    Ok(())
}
