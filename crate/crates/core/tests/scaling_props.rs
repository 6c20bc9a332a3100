mod common;

use common::{dirichlet_patch, image_patch, random_basis, rng};
use liftile::scaling::{
    gain_from_scaling, make_translation_invariant, max_torsion, solve_canonical, torsion, verify_transfer, Increments,
    Scaling,
};
use liftile::tiling::{Lattice, RidgeKind, classify_ridge, TilingPatch};
use proptest::prelude::*;

fn solved(patch: &TilingPatch) -> (liftile::scaling::CanonicalFamily, Scaling) {
    let family = solve_canonical(patch).unwrap();
    let invariant = make_translation_invariant(&family.representative, patch).unwrap();
    (family, invariant)
}

fn check_solution(patch: &TilingPatch) -> Result<(), TestCaseError> {
    let (family, invariant) = solved(patch);
    for s in [&family.representative, &invariant] {
        let (_, t) = max_torsion(s, &patch.complex);
        prop_assert!(t <= 1e-9 * s.mean(), "torsion {:e}", t);
    }
    // Every basis direction of the cone is itself torsion-free.
    for k in 0..family.dimension() {
        let column: Vec<f64> = family.basis.column(k).iter().copied().collect();
        let s = Scaling::unchecked(column);
        for r in patch.complex.interior_ridges() {
            prop_assert!(torsion(&s, patch, r).unwrap().norm() <= 1e-9);
        }
    }
    let gains = gain_from_scaling(&invariant, patch);
    for codim in [2, 3] {
        if codim > patch.dim() {
            continue;
        }
        let mult = verify_transfer(Increments::Multiplicative(&gains), patch, codim).unwrap();
        prop_assert!(mult.passed(), "codim {} residual {:e}", codim, mult.max_residual);
    }
    let add = verify_transfer(Increments::Additive(&invariant), patch, 2).unwrap();
    prop_assert!(add.passed());
    Ok(())
}

#[test]
fn torsion_is_scale_equivariant() {
    let patch = dirichlet_patch(&Lattice::bcc(), 1);
    let s = Scaling::facet_norm(&patch).perturbed(3, 1.3);
    for r in patch.complex.interior_ridges() {
        let t = torsion(&s, &patch, r).unwrap();
        // Power-of-two factors commute with rounding, so equality is exact.
        for c in [0.5, 2.0, 8.0] {
            assert_eq!(torsion(&s.scaled(c), &patch, r).unwrap(), &t * c);
        }
        let t3 = torsion(&s.scaled(3.0), &patch, r).unwrap();
        let bound = 4.0 * f64::EPSILON * 3.0 * s.weights.iter().sum::<f64>();
        assert!((t3 - &t * 3.0).norm() <= bound);
    }
}

#[test]
fn primitive_ridge_ratios_agree_across_subpatches() {
    // The ratio of weights around a primitive ridge is forced; solving on two
    // different subpatches must give the same ratios on the shared ridges.
    let lattice = Lattice::fcc();
    let a = dirichlet_patch(&lattice, 1);
    let b = liftile::tiling::generate_patch_at(
        &liftile::tiling::dirichlet_cell(&lattice).unwrap(),
        &lattice,
        1,
        Some(&[1, 0, 0]),
    )
    .unwrap();
    let (sa, sb) = (solve_canonical(&a).unwrap().representative, solve_canonical(&b).unwrap().representative);
    let mut compared = 0;
    for r in a.complex.interior_ridges() {
        if classify_ridge(&a, r).unwrap() != RidgeKind::Primitive {
            continue;
        }
        let ridge = &a.complex.ridges[r];
        let Some(rb) = b.complex.find_ridge(&ridge.vertices) else { continue };
        if !b.complex.ridges[rb].complete {
            continue;
        }
        for entry in &ridge.fan {
            let fa = entry.facet.interior().unwrap();
            let fb = b.complex.find_facet(&a.complex.facets[fa].vertices).and_then(|f| f.interior()).unwrap();
            let f0 = ridge.fan[0].facet.interior().unwrap();
            let f0b = b.complex.find_facet(&a.complex.facets[f0].vertices).and_then(|f| f.interior()).unwrap();
            let ra = sa.weight(fa) / sa.weight(f0);
            let rb = sb.weight(fb) / sb.weight(f0b);
            assert!((ra - rb).abs() <= 1e-9, "ridge {r}: {ra} vs {rb}");
        }
        compared += 1;
    }
    assert!(compared > 0);
}

#[test]
fn classical_lattices_have_canonical_scalings() {
    for lattice in [Lattice::cubic(2), Lattice::hexagonal(), Lattice::fcc(), Lattice::bcc()] {
        check_solution(&dirichlet_patch(&lattice, 2)).unwrap();
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn affine_images_have_canonical_scalings(seed in any::<u64>()) {
        let b = random_basis(&mut rng(seed), 2, 20.0);
        check_solution(&image_patch(&Lattice::hexagonal(), &b, 2))?;
    }

    #[test]
    fn affine_images_3d_have_canonical_scalings(seed in any::<u64>()) {
        let b = random_basis(&mut rng(seed), 3, 20.0);
        check_solution(&image_patch(&Lattice::bcc(), &b, 1))?;
    }
}
