//! The generatrix: one affine function per cell, obtained by crossing facets
//! with gradient increment `s(F)·n`, starting from a flat base cell.

use std::collections::VecDeque;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::complex::Chain;
use crate::geom::Vector;
use crate::scaling::Scaling;
use crate::tiling::TilingPatch;
use crate::tol::eps_geo;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LiftError {
    #[error("cells {0} and {1} do not share a facet")]
    NotAdjacent(usize, usize),
    #[error("cell {cell} lifts inconsistently (mismatch {residual:e}) along cycle {cycle:?}")]
    InconsistentLift { cell: usize, cycle: Vec<usize>, residual: f64 },
    #[error("point lies outside the patch")]
    OutsidePatch,
    #[error("waypoint {0} is not on the facet between its chain cells")]
    InvalidWaypoint(usize),
    #[error("chain and waypoints do not match: {0}")]
    InvalidChain(String),
    #[error("expected {expected} weights, got {got}")]
    LengthMismatch { expected: usize, got: usize },
}

/// `h(x) = gradient·x + offset` over one cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiftedCell {
    pub cell_index: usize,
    pub gradient: Vector,
    pub offset: f64,
}

impl LiftedCell {
    pub fn flat(cell_index: usize, dim: usize) -> Self {
        Self { cell_index, gradient: Vector::zeros(dim), offset: 0.0 }
    }

    pub fn value(&self, x: &Vector) -> f64 {
        self.gradient.dot(x) + self.offset
    }

    /// Largest discrepancy to another lift of the same cell, relative to magnitude.
    pub fn mismatch(&self, other: &LiftedCell) -> f64 {
        let g = (&self.gradient - &other.gradient).norm() / (1.0 + self.gradient.norm());
        let o = (self.offset - other.offset).abs() / (1.0 + self.offset.abs());
        g.max(o)
    }
}

#[derive(Debug, Clone)]
pub struct Generatrix {
    pub patch: TilingPatch,
    pub lifted: Vec<LiftedCell>,
    pub base_cell_index: usize,
    pub scaling: Scaling,
}

impl Generatrix {
    pub fn dim(&self) -> usize {
        self.patch.dim()
    }

    /// Lifts of all cells containing `x`.
    pub fn values_at(&self, x: &Vector) -> Vec<(usize, f64)> {
        let complex = &self.patch.complex;
        (0..complex.cells.len())
            .filter(|&c| complex.cells[c].contains(x, eps_geo() * complex.cells[c].scale()))
            .map(|c| (c, self.lifted[c].value(x)))
            .collect()
    }
}

fn check_len(patch: &TilingPatch, scaling: &Scaling) -> Result<(), LiftError> {
    let n = patch.complex.facets.len();
    if scaling.len() != n {
        return Err(LiftError::LengthMismatch { expected: n, got: scaling.len() });
    }
    Ok(())
}

/// Lift of `target` across its facet with the source cell.
pub fn lift_to_neighbor(
    source: &LiftedCell,
    patch: &TilingPatch,
    target: usize,
    scaling: &Scaling,
) -> Result<LiftedCell, LiftError> {
    let complex = &patch.complex;
    let f = complex
        .shared_facet(source.cell_index, target)
        .ok_or(LiftError::NotAdjacent(source.cell_index, target))?;
    let facet = &complex.facets[f];
    let increment = facet.normal_from(source.cell_index) * scaling.weights[f];
    // continuity at the facet barycenter
    let offset = source.offset - increment.dot(&facet.barycenter);
    Ok(LiftedCell { cell_index: target, gradient: &source.gradient + increment, offset })
}

/// Lift of the last cell of `chain`, starting flat on its first cell.
pub fn lift_along_chain(patch: &TilingPatch, scaling: &Scaling, chain: &Chain) -> Result<LiftedCell, LiftError> {
    let first = *chain.cells.first().ok_or_else(|| LiftError::InvalidChain("empty chain".into()))?;
    let mut cur = LiftedCell::flat(first, patch.dim());
    for &next in &chain.cells[1..] {
        cur = lift_to_neighbor(&cur, patch, next, scaling)?;
    }
    Ok(cur)
}

/// Breadth-first lifting from a flat base cell. Every facet is crossed, and a
/// cell reached a second time must receive the same lift.
pub fn build_generatrix(patch: &TilingPatch, scaling: &Scaling, base_cell: usize) -> Result<Generatrix, LiftError> {
    check_len(patch, scaling)?;
    let complex = &patch.complex;
    let n = complex.cells.len();
    let mut lifted: Vec<Option<LiftedCell>> = vec![None; n];
    let mut parent = vec![usize::MAX; n];
    lifted[base_cell] = Some(LiftedCell::flat(base_cell, patch.dim()));
    let mut queue = VecDeque::from([base_cell]);
    let tol = eps_geo();
    while let Some(c) = queue.pop_front() {
        let source = lifted[c].clone().expect("queued cells are lifted");
        for (_, nb) in complex.neighbors(c) {
            let candidate = lift_to_neighbor(&source, patch, nb, scaling)?;
            match &lifted[nb] {
                None => {
                    lifted[nb] = Some(candidate);
                    parent[nb] = c;
                    queue.push_back(nb);
                }
                Some(stored) => {
                    let residual = stored.mismatch(&candidate);
                    if residual > tol {
                        let mut cycle = tree_path(&parent, c);
                        cycle.push(nb);
                        let back = tree_path(&parent, nb);
                        cycle.extend(back.iter().rev().skip(1));
                        return Err(LiftError::InconsistentLift { cell: nb, cycle, residual });
                    }
                }
            }
        }
    }
    let lifted = lifted
        .into_iter()
        .enumerate()
        .map(|(c, l)| l.unwrap_or_else(|| LiftedCell { cell_index: c, gradient: Vector::zeros(patch.dim()), offset: f64::NAN }))
        .collect();
    Ok(Generatrix { patch: patch.clone(), lifted, base_cell_index: base_cell, scaling: scaling.clone() })
}

/// Root-to-`cell` path in the BFS tree.
fn tree_path(parent: &[usize], cell: usize) -> Vec<usize> {
    let mut path = vec![cell];
    let mut cur = cell;
    while parent[cur] != usize::MAX {
        cur = parent[cur];
        path.push(cur);
    }
    path.reverse();
    path
}

/// `G(x)` from the stored lift of the lowest-index cell containing `x`.
pub fn evaluate_g(generatrix: &Generatrix, x: &Vector) -> Result<f64, LiftError> {
    generatrix.values_at(x).first().map(|&(_, v)| v).ok_or(LiftError::OutsidePatch)
}

/// `G(x)` from the telescoping chain sum `Σ s_i n_i·(x − w_i)`, where `w_i`
/// lies on the facet between `chain[i-1]` and `chain[i]` and the first cell
/// is flat at height zero.
pub fn chain_value_oracle(
    patch: &TilingPatch,
    scaling: &Scaling,
    chain: &Chain,
    x: &Vector,
    waypoints: &[Vector],
) -> Result<f64, LiftError> {
    let complex = &patch.complex;
    if chain.cells.is_empty() || waypoints.len() + 1 != chain.cells.len() {
        return Err(LiftError::InvalidChain(format!(
            "{} cells need {} waypoints, got {}",
            chain.cells.len(),
            chain.cells.len().saturating_sub(1),
            waypoints.len()
        )));
    }
    let last = *chain.cells.last().unwrap();
    if !complex.cells[last].contains(x, eps_geo() * complex.cells[last].scale()) {
        return Err(LiftError::InvalidChain("x is not in the final cell".into()));
    }
    let mut total = 0.0;
    for (i, w) in waypoints.iter().enumerate() {
        let (a, b) = (chain.cells[i], chain.cells[i + 1]);
        let f = complex.shared_facet(a, b).ok_or(LiftError::NotAdjacent(a, b))?;
        let facet = &complex.facets[f];
        let tol = eps_geo() * complex.cells[a].scale();
        if facet.plane.signed_distance(w).abs() > tol
            || !complex.cells[a].contains(w, tol)
            || !complex.cells[b].contains(w, tol)
        {
            return Err(LiftError::InvalidWaypoint(i));
        }
        total += scaling.weights[f] * facet.normal_from(a).dot(&(x - w));
    }
    Ok(total)
}

/// Barycenters of the shared facets along a chain, usable as waypoints.
pub fn facet_waypoints(patch: &TilingPatch, chain: &Chain) -> Result<Vec<Vector>, LiftError> {
    chain
        .cells
        .windows(2)
        .map(|w| {
            patch
                .complex
                .shared_facet(w[0], w[1])
                .map(|f| patch.complex.facets[f].barycenter.clone())
                .ok_or(LiftError::NotAdjacent(w[0], w[1]))
        })
        .collect()
}

/// Random chain from `from` to `to` through a random intermediate cell,
/// each leg following a BFS tree with shuffled neighbor order.
pub fn random_chain<R: Rng + ?Sized>(patch: &TilingPatch, from: usize, to: usize, rng: &mut R) -> Chain {
    let mid = rng.random_range(0..patch.cell_count());
    let mut cells = random_path(patch, from, mid, rng);
    let second = random_path(patch, mid, to, rng);
    cells.extend(second.into_iter().skip(1));
    Chain::new(cells)
}

fn random_path<R: Rng + ?Sized>(patch: &TilingPatch, from: usize, to: usize, rng: &mut R) -> Vec<usize> {
    let complex = &patch.complex;
    let mut parent = vec![usize::MAX; complex.cells.len()];
    let mut seen = vec![false; complex.cells.len()];
    seen[from] = true;
    let mut queue = VecDeque::from([from]);
    while let Some(c) = queue.pop_front() {
        if c == to {
            break;
        }
        let mut nbs: Vec<usize> = complex.neighbors(c).map(|(_, nb)| nb).collect();
        nbs.shuffle(rng);
        for nb in nbs {
            if !seen[nb] {
                seen[nb] = true;
                parent[nb] = c;
                queue.push_back(nb);
            }
        }
    }
    let mut path = vec![to];
    let mut cur = to;
    while cur != from {
        cur = parent[cur];
        path.push(cur);
    }
    path.reverse();
    path
}

/// Uniform-ish random point of a cell: a random convex combination of its vertices.
pub fn random_point_in_cell<R: Rng + ?Sized>(patch: &TilingPatch, cell: usize, rng: &mut R) -> Vector {
    let verts = &patch.complex.cells[cell].vertices;
    let weights: Vec<f64> = verts.iter().map(|_| -rng.random::<f64>().max(1e-300).ln()).collect();
    let total: f64 = weights.iter().sum();
    verts.iter().zip(&weights).fold(Vector::zeros(patch.dim()), |acc, (v, w)| acc + v * (w / total))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FacetMargin {
    pub facet: usize,
    /// `h_b(c_b) − h_a(c_b)` at the center of cell `b`.
    pub margin: f64,
    /// `s(F)` times the distance from `c_b` to the facet plane.
    pub expected: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexityReport {
    pub facets_checked: usize,
    pub facet_failures: Vec<FacetMargin>,
    pub samples: usize,
    pub midpoint_failures: usize,
    pub max_midpoint_violation: f64,
}

impl ConvexityReport {
    pub fn passed(&self) -> bool {
        self.facet_failures.is_empty() && self.midpoint_failures == 0
    }

    pub fn local_passed(&self) -> bool {
        self.facet_failures.is_empty()
    }
}

/// Per-facet dihedral test on every interior facet, both directions, plus
/// `samples` midpoint-convexity checks on random point pairs.
pub fn check_convexity<R: Rng + ?Sized>(generatrix: &Generatrix, samples: usize, rng: &mut R) -> ConvexityReport {
    let patch = &generatrix.patch;
    let complex = &patch.complex;
    let tol = eps_geo();
    let mut report = ConvexityReport {
        facets_checked: 0,
        facet_failures: Vec::new(),
        samples: 0,
        midpoint_failures: 0,
        max_midpoint_violation: 0.0,
    };
    for (f, facet) in complex.facets.iter().enumerate() {
        report.facets_checked += 1;
        let (a, b) = facet.cells;
        for (own, other) in [(a, b), (b, a)] {
            let c = patch.center(other);
            let margin = generatrix.lifted[other].value(&c) - generatrix.lifted[own].value(&c);
            let expected = generatrix.scaling.weights[f] * facet.plane.signed_distance(&c).abs();
            if !(margin > 0.0) || (margin - expected).abs() > tol * (1.0 + expected.abs()) {
                report.facet_failures.push(FacetMargin { facet: f, margin, expected });
                break;
            }
        }
    }
    let n = complex.cells.len();
    let mut attempts = 0;
    while report.samples < samples && attempts < samples * 20 {
        attempts += 1;
        let x = random_point_in_cell(patch, rng.random_range(0..n), rng);
        let y = random_point_in_cell(patch, rng.random_range(0..n), rng);
        let m = (&x + &y) * 0.5;
        let (Ok(gx), Ok(gy), Ok(gm)) = (evaluate_g(generatrix, &x), evaluate_g(generatrix, &y), evaluate_g(generatrix, &m))
        else {
            continue;
        };
        report.samples += 1;
        let violation = gm - 0.5 * (gx + gy);
        if violation > 0.0 {
            report.max_midpoint_violation = report.max_midpoint_violation.max(violation);
        }
        if violation > tol * (1.0 + gx.abs().max(gy.abs())) {
            report.midpoint_failures += 1;
        }
    }
    report
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonnegativeReport {
    pub min_height: f64,
    pub argmin_cell: usize,
}

impl NonnegativeReport {
    pub fn passed(&self) -> bool {
        self.min_height >= -1e-12
    }
}

/// Smallest height over all cell vertices.
pub fn check_nonnegative(generatrix: &Generatrix) -> NonnegativeReport {
    let complex = &generatrix.patch.complex;
    let mut out = NonnegativeReport { min_height: f64::INFINITY, argmin_cell: generatrix.base_cell_index };
    for (c, cell) in complex.cells.iter().enumerate() {
        for v in &cell.vertices {
            let h = generatrix.lifted[c].value(v);
            if h < out.min_height {
                out = NonnegativeReport { min_height: h, argmin_cell: c };
            }
        }
    }
    out
}
