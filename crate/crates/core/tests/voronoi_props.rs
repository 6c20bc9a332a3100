mod common;

use common::{dirichlet_patch, image_patch, random_basis, rng, trace_gauged_error};
use liftile::geom::matrix_rank;
use liftile::lift::{build_generatrix, evaluate_g};
use liftile::scaling::{make_translation_invariant, solve_canonical, Scaling};
use liftile::tiling::{Lattice, TilingPatch};
use liftile::voronoi::{
    check_positive_definite, check_symmetry, facet_formula_value, facet_system, lattice_coefficients, recover_q,
    reduce_to_voronoi, verify_voronoi,
};
use proptest::prelude::*;

fn canonical(patch: &TilingPatch) -> Scaling {
    make_translation_invariant(&solve_canonical(patch).unwrap().representative, patch).unwrap()
}

fn check_forms(patch: &TilingPatch, s: &Scaling) -> Result<liftile::voronoi::QForm, TestCaseError> {
    let system = facet_system(patch, s).unwrap();
    let sym = check_symmetry(&system);
    prop_assert!(sym.passed());
    prop_assert_eq!(matrix_rank(&system.p, 1e-9), patch.dim());
    let q = recover_q(&system).unwrap();
    let residual = (&q.q * &system.p - &system.m).norm() / system.m.norm();
    prop_assert!(residual <= 1e-9, "M - QP residual {:e}", residual);

    let g = build_generatrix(patch, s, patch.base_cell_index).unwrap();
    let base = patch.center(patch.base_cell_index);
    for cell in 0..patch.cell_count() {
        let x = patch.center(cell);
        let value = evaluate_g(&g, &x).unwrap();
        let l = lattice_coefficients(patch, &system, cell).unwrap();
        let formula = facet_formula_value(&system, &l);
        prop_assert!((value - formula).abs() <= 1e-9 * (1.0 + value.abs()), "cell {}: {} vs {}", cell, value, formula);
        prop_assert!((value - q.value(&(x - &base))).abs() <= 1e-9 * (1.0 + value.abs()));
    }
    Ok(q)
}

#[test]
fn voronoi_tilings_reduce_to_themselves() {
    for lattice in [Lattice::cubic(2), Lattice::hexagonal(), Lattice::fcc(), Lattice::bcc(), Lattice::hexagonal_prism()] {
        let patch = dirichlet_patch(&lattice, 1);
        let s = Scaling::facet_norm(&patch);
        let q = check_forms(&patch, &s).unwrap();
        let (q, _) = check_positive_definite(&q).unwrap();
        let map = reduce_to_voronoi(&q).unwrap();
        assert!(verify_voronoi(&map, &patch).unwrap().passed());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn round_trip_recovers_inverse_gram(seed in any::<u64>(), three in any::<bool>()) {
        let (lattice, d, radius) = if three { (Lattice::fcc(), 3, 1) } else { (Lattice::hexagonal(), 2, 2) };
        let b = random_basis(&mut rng(seed), d, 20.0);
        let patch = image_patch(&lattice, &b, radius);
        let q = check_forms(&patch, &canonical(&patch))?;
        // The source lattice's own form is a multiple of the identity.
        let expected = (&b * b.transpose()).try_inverse().unwrap();
        let err = trace_gauged_error(&q.q, &expected);
        prop_assert!(err <= 1e-6, "relative error {:e}", err);
        let (q, _) = check_positive_definite(&q).unwrap();
        let map = reduce_to_voronoi(&q).unwrap();
        prop_assert!(verify_voronoi(&map, &patch).unwrap().passed());
    }
}
