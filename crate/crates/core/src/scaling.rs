//! Facet weights ("scalings"), torsion around ridges, and canonical scalings:
//! positive weights whose weighted normal sum vanishes at every complete ridge.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::complex::{primitive_cycles, Complex, ComplexError, FacetRef, PrimitiveCycle, Star};
use crate::geom::{point_key, Matrix, PointKey, Vector};
use crate::lp::max_min_entry;
use crate::tiling::{belts, facet_classes, RidgeKind, TilingPatch};
use crate::tol::eps_geo;

/// Relative singular-value cutoff for the constraint nullspace.
pub const NULLSPACE_CUTOFF: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScalingError {
    #[error("ridge {0} touches the patch boundary")]
    IncompleteStar(usize),
    #[error("no strictly positive canonical scaling (best minimum weight {best_min:e})")]
    Infeasible { best_min: f64 },
    #[error("scaling is not canonical: torsion {residual:e} at ridge {ridge}")]
    NotCanonicalInput { ridge: usize, residual: f64 },
    #[error("invariant scaling lost canonicity: torsion {residual:e} at ridge {ridge}")]
    InvariantizationFailed { ridge: usize, residual: f64 },
    #[error("weight {index} is not positive ({value})")]
    NonPositiveWeight { index: usize, value: f64 },
    #[error("expected {expected} weights, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("patch has no complete ridge")]
    NoInteriorRidge,
    #[error("unsupported codimension {0}")]
    UnsupportedCodim(usize),
    #[error(transparent)]
    Complex(ComplexError),
}

impl From<ComplexError> for ScalingError {
    fn from(e: ComplexError) -> Self {
        match e {
            ComplexError::IncompleteStar(r) => ScalingError::IncompleteStar(r),
            ComplexError::UnsupportedCodim(c) => ScalingError::UnsupportedCodim(c),
            other => ScalingError::Complex(other),
        }
    }
}

/// One weight per interior facet record of a patch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaling {
    pub weights: Vec<f64>,
    /// Weights are constant on translation classes.
    pub invariant: bool,
}

impl Scaling {
    pub fn new(weights: Vec<f64>) -> Result<Self, ScalingError> {
        if let Some((index, &value)) = weights.iter().enumerate().find(|(_, w)| !(**w > 0.0)) {
            return Err(ScalingError::NonPositiveWeight { index, value });
        }
        Ok(Self { weights, invariant: false })
    }

    /// Skips the positivity check; used to inject broken weights in tests.
    pub fn unchecked(weights: Vec<f64>) -> Self {
        Self { weights, invariant: false }
    }

    pub fn uniform(patch: &TilingPatch, value: f64) -> Self {
        Self { weights: vec![value; patch.complex.facets.len()], invariant: true }
    }

    /// `s(F)` = distance between the centers of the two cells sharing `F`.
    pub fn facet_norm(patch: &TilingPatch) -> Self {
        let weights = (0..patch.complex.facets.len())
            .map(|f| patch.lattice.point(&patch.facet_offset(f)).norm())
            .collect();
        Self { weights, invariant: true }
    }

    /// Weights given per facet class, in class-id order.
    pub fn from_class_weights(patch: &TilingPatch, class_weights: &[f64]) -> Result<Self, ScalingError> {
        let classes = facet_classes(patch);
        if class_weights.len() != classes.len() {
            return Err(ScalingError::LengthMismatch { expected: classes.len(), got: class_weights.len() });
        }
        let mut weights = vec![0.0; patch.complex.facets.len()];
        for c in &classes {
            for &f in &c.members {
                weights[f] = class_weights[c.class_id];
            }
        }
        let mut s = Self::new(weights)?;
        s.invariant = true;
        Ok(s)
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weight(&self, facet: usize) -> f64 {
        self.weights[facet]
    }

    pub fn mean(&self) -> f64 {
        self.weights.iter().sum::<f64>() / self.weights.len().max(1) as f64
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { weights: self.weights.iter().map(|w| w * c).collect(), invariant: self.invariant }
    }

    /// Copy with one weight multiplied by `factor`.
    pub fn perturbed(&self, facet: usize, factor: f64) -> Self {
        let mut out = self.clone();
        out.weights[facet] *= factor;
        out.invariant = false;
        out
    }

    /// `(class id, weight)` pairs when the weights are constant on every class.
    pub fn class_weights(&self, patch: &TilingPatch) -> Option<Vec<(usize, f64)>> {
        let tol = eps_geo() * self.mean().abs().max(f64::MIN_POSITIVE);
        facet_classes(patch)
            .iter()
            .map(|c| {
                let w = self.weights[c.members[0]];
                c.members.iter().all(|&f| (self.weights[f] - w).abs() <= tol).then_some((c.class_id, w))
            })
            .collect()
    }
}

/// Weighted sum of fan normals around a complete ridge.
pub fn torsion(scaling: &Scaling, patch: &TilingPatch, ridge_index: usize) -> Result<Vector, ScalingError> {
    complex_torsion(scaling, &patch.complex, ridge_index)
}

pub fn complex_torsion(scaling: &Scaling, complex: &Complex, ridge_index: usize) -> Result<Vector, ScalingError> {
    let ridge = complex.ridge(ridge_index)?;
    if !ridge.complete {
        return Err(ScalingError::IncompleteStar(ridge_index));
    }
    let mut sum = Vector::zeros(complex.dim);
    for entry in &ridge.fan {
        let f = entry.facet.interior().expect("complete ridge");
        sum += &entry.normal * scaling.weights[f];
    }
    Ok(sum)
}

/// Largest torsion norm over complete ridges, with the ridge attaining it.
pub fn max_torsion(scaling: &Scaling, complex: &Complex) -> (Option<usize>, f64) {
    complex
        .interior_ridges()
        .map(|r| (Some(r), complex_torsion(scaling, complex, r).map(|t| t.norm()).unwrap_or(f64::INFINITY)))
        .fold((None, 0.0), |best, cur| if cur.1 > best.1 { cur } else { best })
}

/// Whether all torsions vanish within `eps_geo · mean weight`.
pub fn is_canonical(scaling: &Scaling, complex: &Complex) -> Result<(), ScalingError> {
    let (ridge, residual) = max_torsion(scaling, complex);
    if residual > canonical_tol(scaling) {
        return Err(ScalingError::NotCanonicalInput { ridge: ridge.unwrap_or(0), residual });
    }
    if scaling.weights.iter().any(|w| !(*w > 0.0)) {
        return Err(ScalingError::NotCanonicalInput { ridge: ridge.unwrap_or(0), residual });
    }
    Ok(())
}

fn canonical_tol(scaling: &Scaling) -> f64 {
    eps_geo() * scaling.mean().abs().max(f64::MIN_POSITIVE)
}

/// Solution space of the zero-torsion system on a patch.
#[derive(Debug, Clone)]
pub struct CanonicalFamily {
    /// Columns span the solutions, one row per interior facet.
    pub basis: Matrix,
    /// Facets that occur in at least one complete ridge.
    pub constrained: Vec<usize>,
    /// Positive member with mean weight 1 over the constrained facets.
    pub representative: Scaling,
    /// Smallest weight of the representative.
    pub min_weight: f64,
}

impl CanonicalFamily {
    pub fn dimension(&self) -> usize {
        self.basis.ncols()
    }
}

/// Orthonormal nullspace basis of the torsion constraints restricted to `facets`.
fn torsion_nullspace(complex: &Complex, ridges: &[usize], facets: &[usize]) -> Matrix {
    let col: BTreeMap<usize, usize> = facets.iter().enumerate().map(|(i, &f)| (f, i)).collect();
    let n = facets.len();
    let rows = (2 * ridges.len()).max(n);
    let mut a = Matrix::zeros(rows, n);
    for (k, &r) in ridges.iter().enumerate() {
        let ridge = &complex.ridges[r];
        for entry in &ridge.fan {
            let f = entry.facet.interior().expect("complete ridge");
            let proj = ridge.plane_basis.transpose() * &entry.normal;
            for (i, p) in proj.iter().enumerate() {
                a[(2 * k + i, col[&f])] += p;
            }
        }
    }
    let svd = a.svd(false, true);
    let v_t = svd.v_t.expect("requested");
    let sigma_max = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let null: Vec<usize> = (0..n)
        .filter(|&i| svd.singular_values[i] <= NULLSPACE_CUTOFF * sigma_max.max(f64::MIN_POSITIVE))
        .collect();
    let mut basis = Matrix::zeros(n, null.len());
    for (j, &i) in null.iter().enumerate() {
        basis.set_column(j, &v_t.row(i).transpose());
    }
    basis
}

fn positive_point(basis: &Matrix) -> Result<(Vector, f64), ScalingError> {
    match max_min_entry(basis) {
        Some((x, t)) if t > eps_geo() => Ok((x, t)),
        Some((_, t)) => Err(ScalingError::Infeasible { best_min: t }),
        None => Err(ScalingError::Infeasible { best_min: f64::NEG_INFINITY }),
    }
}

/// Canonical scalings of a patch: nullspace of all torsion constraints at
/// complete ridges, plus the positive member maximizing the smallest weight.
///
/// Facets outside every complete star are unconstrained; the representative
/// gives them the mean constrained weight of their translation class (or 1).
pub fn solve_canonical(patch: &TilingPatch) -> Result<CanonicalFamily, ScalingError> {
    let complex = &patch.complex;
    let ridges: Vec<usize> = complex.interior_ridges().collect();
    if ridges.is_empty() {
        return Err(ScalingError::NoInteriorRidge);
    }
    let constrained: Vec<usize> = ridges
        .iter()
        .flat_map(|&r| complex.ridges[r].fan.iter().filter_map(|e| e.facet.interior()))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let local = torsion_nullspace(complex, &ridges, &constrained);
    let (point, min_weight) = positive_point(&local)?;

    let n = complex.facets.len();
    let mut basis = Matrix::zeros(n, local.ncols());
    let mut weights = vec![f64::NAN; n];
    for (i, &f) in constrained.iter().enumerate() {
        basis.set_row(f, &local.row(i));
        weights[f] = point[i];
    }
    for class in facet_classes(patch) {
        let known: Vec<f64> = class.members.iter().map(|&f| weights[f]).filter(|w| !w.is_nan()).collect();
        let fill = if known.is_empty() { 1.0 } else { known.iter().sum::<f64>() / known.len() as f64 };
        for &f in &class.members {
            if weights[f].is_nan() {
                weights[f] = fill;
            }
        }
    }
    Ok(CanonicalFamily {
        basis,
        constrained,
        representative: Scaling { weights, invariant: false },
        min_weight,
    })
}

/// Canonical weights on the facets around one face.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalScaling {
    /// Interior facets through the face.
    pub facets: Vec<usize>,
    /// Positive representative, mean 1, aligned with `facets`.
    pub weights: Vec<f64>,
    pub family_dim: usize,
}

impl LocalScaling {
    pub fn weight_of(&self, facet: usize) -> Option<f64> {
        self.facets.iter().position(|&f| f == facet).map(|i| self.weights[i])
    }
}

/// Zero-torsion system over the ridges through the star's center face.
pub fn solve_local(complex: &Complex, star: &Star) -> Result<LocalScaling, ScalingError> {
    let keys: BTreeSet<PointKey> = star.center_face.iter().map(point_key).collect();
    let mut ridges: BTreeSet<usize> = BTreeSet::new();
    for &c in &star.cells {
        for &r in &complex.cell_ridges[c] {
            let rk: BTreeSet<PointKey> = complex.ridges[r].vertices.iter().map(point_key).collect();
            if keys.is_subset(&rk) {
                ridges.insert(r);
            }
        }
    }
    if let Some(&r) = ridges.iter().find(|&&r| !complex.ridges[r].complete) {
        return Err(ScalingError::IncompleteStar(r));
    }
    if ridges.is_empty() {
        return Err(ScalingError::NoInteriorRidge);
    }
    let ridges: Vec<usize> = ridges.into_iter().collect();
    let facets: Vec<usize> = ridges
        .iter()
        .flat_map(|&r| complex.ridges[r].fan.iter().filter_map(|e| e.facet.interior()))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let basis = torsion_nullspace(complex, &ridges, &facets);
    let (point, _) = positive_point(&basis)?;
    Ok(LocalScaling { facets, weights: point.iter().copied().collect(), family_dim: basis.ncols() })
}

/// Multiplicative increments `g[F1, F2]` between facets of one cell that share a ridge.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GainFunction {
    pub gains: BTreeMap<(usize, usize), f64>,
}

impl GainFunction {
    pub fn get(&self, from: usize, to: usize) -> Option<f64> {
        self.gains.get(&(from, to)).copied()
    }

    /// Largest `|g[a,b]·g[b,a] − 1|`.
    pub fn reciprocity_residual(&self) -> f64 {
        self.gains
            .iter()
            .map(|(&(a, b), g)| self.get(b, a).map_or(f64::INFINITY, |h| (g * h - 1.0).abs()))
            .fold(0.0, f64::max)
    }

    fn insert_pair(&mut self, a: usize, b: usize, sa: f64, sb: f64) {
        self.gains.insert((a, b), sa / sb);
        self.gains.insert((b, a), sb / sa);
    }
}

/// Fan-consecutive interior facet pairs of a ridge; such facets bound a common cell.
fn fan_pairs(complex: &Complex, ridge: usize) -> Vec<(usize, usize)> {
    let fan = &complex.ridges[ridge].fan;
    let k = fan.len();
    let cyclic = complex.ridges[ridge].complete;
    (0..k)
        .filter(|&i| cyclic || i + 1 < k)
        .filter_map(|i| Some((fan[i].facet.interior()?, fan[(i + 1) % k].facet.interior()?)))
        .collect()
}

/// `g[F1, F2] = s(F1) / s(F2)` on all fan-consecutive facet pairs.
pub fn gain_from_scaling(scaling: &Scaling, patch: &TilingPatch) -> GainFunction {
    let complex = &patch.complex;
    let mut g = GainFunction::default();
    for r in 0..complex.ridges.len() {
        for (a, b) in fan_pairs(complex, r) {
            g.insert_pair(a, b, scaling.weights[a], scaling.weights[b]);
        }
    }
    g
}

/// Gains read off the local canonical scaling of each complete primitive
/// ridge, where that scaling is unique up to a factor.
pub fn local_primitive_gains(patch: &TilingPatch) -> Result<GainFunction, ScalingError> {
    let complex = &patch.complex;
    let mut g = GainFunction::default();
    for r in complex.interior_ridges() {
        if crate::tiling::classify_ridge(patch, r).ok() != Some(RidgeKind::Primitive) {
            continue;
        }
        let star = Star {
            center_face: complex.ridges[r].vertices.clone(),
            cells: complex.ridges[r].cells.clone(),
            complete: true,
        };
        let local = solve_local(complex, &star)?;
        for (a, b) in fan_pairs(complex, r) {
            g.insert_pair(a, b, local.weight_of(a).unwrap(), local.weight_of(b).unwrap());
        }
    }
    Ok(g)
}

/// Increment data checked along primitive cycles.
#[derive(Debug, Clone, Copy)]
pub enum Increments<'a> {
    /// Products of gains around facet cycles should equal 1.
    Multiplicative(&'a GainFunction),
    /// Sums of `s(F)·n` across consecutive cells should vanish.
    Additive(&'a Scaling),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleResidual {
    /// Ridge for codim-2 cycles, cell for codim-3 cycles.
    pub entity: usize,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferReport {
    pub codim: usize,
    pub checked: usize,
    /// Cycles with a pair lacking a gain.
    pub skipped: usize,
    pub max_residual: f64,
    pub failures: Vec<CycleResidual>,
}

impl TransferReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Evaluates the increment around every primitive cycle of the given codimension.
///
/// Additive increments are supported at codim 2 (cells around ridges).
/// Gains are checked at codim 2 (around ridge fans) and codim 3 (facets of
/// one cell around a (d−3)-face).
pub fn verify_transfer(
    increments: Increments<'_>,
    patch: &TilingPatch,
    codim: usize,
) -> Result<TransferReport, ScalingError> {
    let complex = &patch.complex;
    let mut residuals: Vec<(usize, Option<f64>)> = Vec::new();
    let tol;
    match (increments, codim) {
        (Increments::Additive(s), 2) => {
            tol = canonical_tol(s);
            for cycle in primitive_cycles(complex, 2)? {
                let PrimitiveCycle::Cells { ridge, chain } = cycle else { continue };
                let cells = &chain.cells;
                let mut sum = Vector::zeros(complex.dim);
                for i in 0..cells.len() {
                    let (a, b) = (cells[i], cells[(i + 1) % cells.len()]);
                    let f = complex.shared_facet(a, b).expect("cycle cells are adjacent");
                    sum += complex.facets[f].normal_from(a) * s.weights[f];
                }
                residuals.push((ridge, Some(sum.norm())));
            }
        }
        (Increments::Multiplicative(g), 2) => {
            tol = eps_geo();
            for r in complex.interior_ridges() {
                let pairs = fan_pairs(complex, r);
                residuals.push((r, cycle_product(g, &pairs)));
            }
        }
        (Increments::Multiplicative(g), 3) => {
            tol = eps_geo();
            for cycle in primitive_cycles(complex, 3)? {
                let PrimitiveCycle::Facets { cell, facets, .. } = cycle else { continue };
                let k = facets.len();
                let pairs: Vec<(usize, usize)> = (0..k).map(|i| (facets[i], facets[(i + 1) % k])).collect();
                residuals.push((cell, cycle_product(g, &pairs)));
            }
        }
        _ => return Err(ScalingError::UnsupportedCodim(codim)),
    }
    let mut report = TransferReport { codim, checked: 0, skipped: 0, max_residual: 0.0, failures: Vec::new() };
    for (entity, r) in residuals {
        match r {
            None => report.skipped += 1,
            Some(residual) => {
                report.checked += 1;
                report.max_residual = report.max_residual.max(residual);
                if residual > tol {
                    report.failures.push(CycleResidual { entity, residual });
                }
            }
        }
    }
    Ok(report)
}

fn cycle_product(g: &GainFunction, pairs: &[(usize, usize)]) -> Option<f64> {
    let mut prod = 1.0;
    for &(a, b) in pairs {
        prod *= g.get(a, b)?;
    }
    Some((prod - 1.0).abs())
}

/// Turns a canonical scaling into a translation-invariant one.
///
/// Opposite facets of the base cell with unequal weights get the weight of the
/// one with the lexicographically smaller facet vector, applied to both whole
/// classes; the base cell's weights are then copied to every translate.
pub fn make_translation_invariant(scaling: &Scaling, patch: &TilingPatch) -> Result<Scaling, ScalingError> {
    let complex = &patch.complex;
    check_length(scaling, patch)?;
    is_canonical(scaling, complex)?;
    let tol = canonical_tol(scaling);
    let base = patch.base_cell_index;

    // base facet offsets, oriented away from the base cell
    let mut by_offset: BTreeMap<Vec<i64>, usize> = BTreeMap::new();
    for f in patch.base_facets() {
        let off = patch.facet_offset(f);
        let off = if complex.facets[f].cells.0 == base { off } else { off.iter().map(|x| -x).collect() };
        by_offset.insert(off, f);
    }

    let mut work = scaling.clone();
    for (off, &f) in &by_offset {
        let neg: Vec<i64> = off.iter().map(|x| -x).collect();
        let Some(&g) = by_offset.get(&neg) else { continue };
        if (work.weights[f] - work.weights[g]).abs() <= tol {
            continue;
        }
        let (pf, pg) = (patch.lattice.point(off), patch.lattice.point(&neg));
        let chosen = if lex_less(&pf, &pg) { work.weights[f] } else { work.weights[g] };
        let canon = crate::tiling::canonical_offset(off.clone());
        for h in 0..complex.facets.len() {
            if crate::tiling::canonical_offset(patch.facet_offset(h)) == canon {
                work.weights[h] = chosen;
            }
        }
        let (ridge, residual) = max_torsion(&work, complex);
        if residual > tol {
            return Err(ScalingError::InvariantizationFailed { ridge: ridge.unwrap_or(0), residual });
        }
    }

    let mut out = work.clone();
    for h in 0..complex.facets.len() {
        let off = patch.facet_offset(h);
        let neg: Vec<i64> = off.iter().map(|x| -x).collect();
        if let Some(&f) = by_offset.get(&off).or_else(|| by_offset.get(&neg)) {
            out.weights[h] = work.weights[f];
        }
    }
    out.invariant = true;
    if let Err(ScalingError::NotCanonicalInput { ridge, residual }) = is_canonical(&out, complex) {
        return Err(ScalingError::InvariantizationFailed { ridge, residual });
    }
    Ok(out)
}

fn lex_less(a: &Vector, b: &Vector) -> bool {
    for (x, y) in a.iter().zip(b.iter()) {
        if (x - y).abs() > 1e-12 {
            return x < y;
        }
    }
    false
}

fn check_length(scaling: &Scaling, patch: &TilingPatch) -> Result<(), ScalingError> {
    let n = patch.complex.facets.len();
    if scaling.len() != n {
        return Err(ScalingError::LengthMismatch { expected: n, got: scaling.len() });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CrossKind {
    /// `F1` against its reflection through the center of a fan-adjacent facet.
    CrossLying,
    /// Opposite facets of a 6-belt.
    BeltOpposite,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossViolation {
    pub kind: CrossKind,
    pub facets: (usize, usize),
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossLyingReport {
    /// Input failed the canonicity gate; nothing else was checked.
    pub not_canonical: bool,
    pub cross_pairs: usize,
    pub belt_pairs: usize,
    pub max_residual: f64,
    pub violations: Vec<CrossViolation>,
}

impl CrossLyingReport {
    pub fn passed(&self) -> bool {
        !self.not_canonical && self.violations.is_empty()
    }
}

/// Equal weights on cross-lying facets at primitive ridges and on opposite
/// facets of 6-belts, for every cell whose ridges are all complete.
pub fn check_cross_lying(scaling: &Scaling, patch: &TilingPatch) -> CrossLyingReport {
    let complex = &patch.complex;
    let mut report =
        CrossLyingReport { not_canonical: false, cross_pairs: 0, belt_pairs: 0, max_residual: 0.0, violations: Vec::new() };
    if check_length(scaling, patch).is_err() || is_canonical(scaling, complex).is_err() {
        report.not_canonical = true;
        return report;
    }
    let tol = canonical_tol(scaling);
    let six: Vec<Vec<usize>> = belts(&patch.prototype)
        .into_iter()
        .filter(|b| b.facets.len() == 6)
        .map(|b| b.facets)
        .collect();
    let record = |report: &mut CrossLyingReport, kind, a: usize, b: usize| {
        let residual = (scaling.weights[a] - scaling.weights[b]).abs();
        report.max_residual = report.max_residual.max(residual);
        match kind {
            CrossKind::CrossLying => report.cross_pairs += 1,
            CrossKind::BeltOpposite => report.belt_pairs += 1,
        }
        if residual > tol {
            report.violations.push(CrossViolation { kind, facets: (a, b), residual });
        }
    };
    for cell in 0..complex.cells.len() {
        if !complex.is_surrounded(cell) || !complex.has_complete_ridges(cell) {
            continue;
        }
        for &r in &complex.cell_ridges[cell] {
            if complex.ridges[r].fan.len() != 3 {
                continue;
            }
            let own: Vec<usize> = complex.ridges[r]
                .fan
                .iter()
                .filter_map(|e| e.facet.interior())
                .filter(|&f| complex.facets[f].across(cell).is_some())
                .collect();
            if own.len() != 2 {
                continue;
            }
            for (f1, f2) in [(own[0], own[1]), (own[1], own[0])] {
                let center = &complex.facets[f2].barycenter;
                let mirrored: Vec<Vector> =
                    complex.facets[f1].vertices.iter().map(|v| center * 2.0 - v).collect();
                if let Some(FacetRef::Interior(f0)) = complex.find_facet(&mirrored) {
                    record(&mut report, CrossKind::CrossLying, f1, f0);
                }
            }
        }
        for belt in &six {
            let global: Option<Vec<usize>> =
                belt.iter().map(|&l| complex.cell_facets[cell][l].interior()).collect();
            let Some(global) = global else { continue };
            for i in 0..3 {
                record(&mut report, CrossKind::BeltOpposite, global[i], global[i + 3]);
            }
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tiling::{dirichlet_cell, generate_patch, Lattice};

    fn patch(lat: Lattice, r: usize) -> TilingPatch {
        generate_patch(&dirichlet_cell(&lat).unwrap(), &lat, r).unwrap()
    }

    #[test]
    fn hexagon_torsion_examples() {
        let p = patch(Lattice::hexagonal(), 1);
        let r = p.complex.interior_ridges().next().unwrap();
        let s = Scaling::uniform(&p, 1.0);
        assert!(torsion(&s, &p, r).unwrap().norm() < 1e-12);
        let f = p.complex.ridges[r].fan[0].facet.interior().unwrap();
        let t = torsion(&s.perturbed(f, 1.1), &p, r).unwrap();
        assert!((t.norm() - 0.1).abs() < 1e-12);
    }

    #[test]
    fn square_torsion_vanishes_for_alternating_weights() {
        let p = patch(Lattice::cubic(2), 1);
        let r = p.complex.interior_ridges().next().unwrap();
        let mut s = Scaling::uniform(&p, 1.0);
        for e in &p.complex.ridges[r].fan {
            let f = e.facet.interior().unwrap();
            s.weights[f] = if e.normal[0].abs() > 0.5 { 2.5 } else { 0.7 };
        }
        assert!(torsion(&s, &p, r).unwrap().norm() < 1e-12);
    }

    #[test]
    fn boundary_ridge_has_no_torsion() {
        let p = patch(Lattice::cubic(2), 1);
        let r = (0..p.complex.ridges.len()).find(|&r| !p.complex.ridges[r].complete).unwrap();
        let s = Scaling::uniform(&p, 1.0);
        assert_eq!(torsion(&s, &p, r), Err(ScalingError::IncompleteStar(r)));
    }

    #[test]
    fn nonpositive_weights_rejected() {
        assert!(matches!(
            Scaling::new(vec![1.0, 0.0]),
            Err(ScalingError::NonPositiveWeight { index: 1, .. })
        ));
    }

    #[test]
    fn square_family_has_uniform_representative() {
        let p = patch(Lattice::cubic(2), 2);
        let fam = solve_canonical(&p).unwrap();
        assert!(fam.dimension() > 2);
        assert!(fam.representative.weights.iter().all(|w| (w - 1.0).abs() < 1e-9));
    }

    #[test]
    fn hexagon_family_is_one_dimensional() {
        let p = patch(Lattice::hexagonal(), 2);
        let fam = solve_canonical(&p).unwrap();
        assert_eq!(fam.dimension(), 1);
        assert!(fam.representative.weights.iter().all(|w| (w - 1.0).abs() < 1e-9));
    }

    #[test]
    fn local_stars_in_plane() {
        let hex = patch(Lattice::hexagonal(), 1);
        let r = hex.complex.interior_ridges().next().unwrap();
        let star = crate::complex::star_of(&hex.complex, &hex.complex.ridges[r].vertices).unwrap();
        let local = solve_local(&hex.complex, &star).unwrap();
        assert_eq!(local.family_dim, 1);
        assert!(local.weights.iter().all(|w| (w - 1.0).abs() < 1e-9));

        let sq = patch(Lattice::cubic(2), 1);
        let r = sq.complex.interior_ridges().next().unwrap();
        let star = crate::complex::star_of(&sq.complex, &sq.complex.ridges[r].vertices).unwrap();
        assert_eq!(solve_local(&sq.complex, &star).unwrap().family_dim, 2);
    }

    #[test]
    fn gains_are_reciprocal() {
        let p = patch(Lattice::hexagonal(), 1);
        let g = gain_from_scaling(&Scaling::uniform(&p, 2.0), &p);
        assert!(g.gains.values().all(|x| *x == 1.0));
        assert!(g.reciprocity_residual() < 1e-12);
    }

    #[test]
    fn transfer_detects_perturbation() {
        let p = patch(Lattice::hexagonal(), 1);
        let s = Scaling::uniform(&p, 1.0);
        assert!(verify_transfer(Increments::Additive(&s), &p, 2).unwrap().passed());
        let f = p.base_facets()[0];
        let bad = verify_transfer(Increments::Additive(&s.perturbed(f, 1.1)), &p, 2).unwrap();
        assert!(!bad.passed());
        let g = gain_from_scaling(&s, &p);
        assert_eq!(
            verify_transfer(Increments::Multiplicative(&g), &p, 3),
            Err(ScalingError::UnsupportedCodim(3))
        );
    }

    #[test]
    fn invariantization_fixed_point() {
        let p = patch(Lattice::hexagonal(), 2);
        let s = Scaling::uniform(&p, 1.0);
        assert_eq!(make_translation_invariant(&s, &p).unwrap().weights, s.weights);
        let bad = s.perturbed(p.base_facets()[0], 1.1);
        assert!(matches!(
            make_translation_invariant(&bad, &p),
            Err(ScalingError::NotCanonicalInput { .. })
        ));
    }

    #[test]
    fn cross_lying_on_hexagon() {
        let p = patch(Lattice::hexagonal(), 2);
        let rep = check_cross_lying(&Scaling::uniform(&p, 1.0), &p);
        assert!(rep.passed());
        assert!(rep.cross_pairs > 0 && rep.belt_pairs > 0);
        let bad = Scaling::uniform(&p, 1.0).perturbed(p.base_facets()[0], 1.1);
        assert!(check_cross_lying(&bad, &p).not_canonical);
    }
}
