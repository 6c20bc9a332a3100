//! Shared fixtures for the integration tests.
#![allow(dead_code)]

use liftile::geom::{Matrix, Vector};
use liftile::tiling::{dirichlet_cell, generate_patch, Lattice, Parallelohedron, TilingPatch};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn condition_number(m: &Matrix) -> f64 {
    let sv = m.clone().svd(false, false).singular_values;
    sv.max() / sv.min()
}

/// Random `d×d` matrix with entries in [-1, 1] plus a multiple of the identity,
/// redrawn until its condition number is at most `max_cond`.
pub fn random_basis(rng: &mut impl Rng, d: usize, max_cond: f64) -> Matrix {
    loop {
        let m = Matrix::from_fn(d, d, |i, j| rng.random_range(-1.0..1.0) + if i == j { 1.2 } else { 0.0 });
        if m.determinant().abs() > 1e-3 && condition_number(&m) <= max_cond {
            return m;
        }
    }
}

pub fn point(xs: &[f64]) -> Vector {
    Vector::from_column_slice(xs)
}

pub fn dirichlet_patch(lattice: &Lattice, radius: usize) -> TilingPatch {
    generate_patch(&dirichlet_cell(lattice).unwrap(), lattice, radius).unwrap()
}

/// Dirichlet cell of `lattice` mapped by `b`, tiled by the image lattice.
pub fn image_patch(lattice: &Lattice, b: &Matrix, radius: usize) -> TilingPatch {
    let cell = dirichlet_cell(lattice).unwrap();
    let image: Vec<Vector> = cell.body.vertices.iter().map(|v| b * v).collect();
    let cell = Parallelohedron::from_vertices(&image).unwrap();
    generate_patch(&cell, &lattice.transformed(b).unwrap(), radius).unwrap()
}

/// Relative Frobenius distance after scaling both matrices to trace `d`.
pub fn trace_gauged_error(a: &Matrix, b: &Matrix) -> f64 {
    let d = a.nrows() as f64;
    let a = a * (d / a.trace());
    let b = b * (d / b.trace());
    (&a - &b).norm() / b.norm()
}

pub fn named_lattices_3d() -> Vec<(&'static str, Lattice)> {
    vec![
        ("cube", Lattice::cubic(3)),
        ("hexagonal prism", Lattice::hexagonal_prism()),
        ("rhombic dodecahedron", Lattice::fcc()),
        ("elongated dodecahedron", Lattice::body_centered_tetragonal(2.0).unwrap()),
        ("truncated octahedron", Lattice::bcc()),
    ]
}
