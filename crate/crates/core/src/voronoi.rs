//! From a translation-invariant canonical scaling to a quadratic form `Q`
//! with `M = QP`, its square-root factor `A`, and the check that `A` maps the
//! tiling onto a Dirichlet–Voronoi tiling.

use std::collections::{BTreeMap, VecDeque};

use nalgebra::SymmetricEigen;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{AffineMap, GeomError, Matrix, Vector};
use crate::lift::{evaluate_g, random_point_in_cell, Generatrix, LiftedCell};
use crate::scaling::{is_canonical, Scaling};
use crate::tiling::{dirichlet_cell, generate_patch, Lattice, TilingError, TilingPatch};
use crate::tol::{eps_geo, EPS_LINALG};

/// Relative tolerance for `M = QP` and for the asymmetry of the recovered `Q`.
pub const FORM_RESIDUAL_TOL: f64 = 1e-9;

/// Relative Hausdorff tolerance of the Dirichlet-cell comparison.
pub const HAUSDORFF_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VoronoiError {
    #[error("scaling is not a translation-invariant canonical scaling: {0}")]
    NotInvariantScaling(String),
    #[error("facet vectors do not span the space")]
    RankDeficient,
    #[error("M = QP fails at column {column} (residual {residual:e})")]
    ResidualTooLarge { column: usize, residual: f64 },
    #[error("form is not positive definite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },
    #[error(transparent)]
    Tiling(#[from] TilingError),
    #[error(transparent)]
    Geom(#[from] GeomError),
}

/// Facet vectors `p_i` and normal increments `m_i = s(F_i)·n_i` of the base cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FacetSystem {
    pub p: Matrix,
    pub m: Matrix,
    /// Interior facet index of each column.
    pub facets: Vec<usize>,
    /// Lattice offset of each column.
    pub offsets: Vec<Vec<i64>>,
}

impl FacetSystem {
    pub fn dim(&self) -> usize {
        self.p.nrows()
    }

    pub fn len(&self) -> usize {
        self.p.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.p.ncols() == 0
    }
}

pub fn facet_system(patch: &TilingPatch, scaling: &Scaling) -> Result<FacetSystem, VoronoiError> {
    if scaling.len() != patch.complex.facets.len() {
        return Err(VoronoiError::NotInvariantScaling(format!(
            "{} weights for {} facets",
            scaling.len(),
            patch.complex.facets.len()
        )));
    }
    if scaling.class_weights(patch).is_none() {
        return Err(VoronoiError::NotInvariantScaling("weights vary within a translation class".into()));
    }
    is_canonical(scaling, &patch.complex).map_err(|e| VoronoiError::NotInvariantScaling(e.to_string()))?;
    let base = patch.base_cell_index;
    let facets = patch.base_facets();
    let d = patch.dim();
    let c0 = patch.center(base);
    let mut p = Matrix::zeros(d, facets.len());
    let mut m = Matrix::zeros(d, facets.len());
    let mut offsets = Vec::with_capacity(facets.len());
    for (i, &f) in facets.iter().enumerate() {
        let nb = patch.complex.facets[f].across(base).expect("base facet");
        p.set_column(i, &(patch.center(nb) - &c0));
        m.set_column(i, &(patch.complex.facets[f].normal_from(base) * scaling.weights[f]));
        offsets.push(patch.cell_coords[nb].iter().zip(&patch.cell_coords[base]).map(|(a, b)| a - b).collect());
    }
    Ok(FacetSystem { p, m, facets, offsets })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetryReport {
    /// Largest `|p_iᵀm_j − p_jᵀm_i|`.
    pub max_residual: f64,
    /// Residual divided by `max‖p‖·max‖m‖`.
    pub relative_residual: f64,
    pub worst_pair: (usize, usize),
}

impl SymmetryReport {
    pub fn passed(&self) -> bool {
        self.relative_residual <= FORM_RESIDUAL_TOL
    }
}

pub fn check_symmetry(system: &FacetSystem) -> SymmetryReport {
    let pm = system.p.transpose() * &system.m;
    let k = system.len();
    let mut report = SymmetryReport { max_residual: 0.0, relative_residual: 0.0, worst_pair: (0, 0) };
    for i in 0..k {
        for j in i + 1..k {
            let r = (pm[(i, j)] - pm[(j, i)]).abs();
            if r > report.max_residual {
                report.max_residual = r;
                report.worst_pair = (i, j);
            }
        }
    }
    let scale = max_column_norm(&system.p) * max_column_norm(&system.m);
    report.relative_residual = if scale > 0.0 { report.max_residual / scale } else { 0.0 };
    report
}

fn max_column_norm(m: &Matrix) -> f64 {
    m.column_iter().map(|c| c.norm()).fold(0.0, f64::max)
}

/// Symmetric form `Q`, with its factor `A = Q^{1/2}` once positive definiteness is known.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QForm {
    pub q: Matrix,
    pub a: Option<Matrix>,
}

impl QForm {
    pub fn new(q: Matrix) -> Self {
        Self { q, a: None }
    }

    /// `Q` scaled to trace `d`.
    pub fn trace_normalized(&self) -> Matrix {
        let d = self.q.nrows() as f64;
        &self.q * (d / self.q.trace())
    }

    /// `½ xᵀQx`.
    pub fn value(&self, x: &Vector) -> f64 {
        0.5 * x.dot(&(&self.q * x))
    }
}

/// Columns chosen by greedy pivoting on the largest remaining norm.
fn pivot_columns(p: &Matrix) -> Option<Vec<usize>> {
    let d = p.nrows();
    let scale = max_column_norm(p);
    let mut rest: Vec<Vector> = p.column_iter().map(|c| c.into_owned()).collect();
    let mut chosen = Vec::with_capacity(d);
    for _ in 0..d {
        let (best, norm) = rest
            .iter()
            .enumerate()
            .filter(|(i, _)| !chosen.contains(i))
            .map(|(i, v)| (i, v.norm()))
            .fold((usize::MAX, 0.0), |acc, cur| if cur.1 > acc.1 { cur } else { acc });
        if best == usize::MAX || norm <= EPS_LINALG * scale.max(1.0) {
            return None;
        }
        chosen.push(best);
        let u = &rest[best] / norm;
        for v in rest.iter_mut() {
            let c = u.dot(v);
            *v -= &u * c;
        }
    }
    Some(chosen)
}

/// `Q = (P₀ᵀ)⁻¹M₀ᵀ` from `d` independent columns, then `M = QP` on all columns.
pub fn recover_q(system: &FacetSystem) -> Result<QForm, VoronoiError> {
    let d = system.dim();
    let cols = pivot_columns(&system.p).ok_or(VoronoiError::RankDeficient)?;
    let mut p0 = Matrix::zeros(d, d);
    let mut m0 = Matrix::zeros(d, d);
    for (j, &c) in cols.iter().enumerate() {
        p0.set_column(j, &system.p.column(c));
        m0.set_column(j, &system.m.column(c));
    }
    let p0t_inv = p0.transpose().try_inverse().ok_or(VoronoiError::RankDeficient)?;
    let q = p0t_inv * m0.transpose();
    let scale = q.norm().max(f64::MIN_POSITIVE);
    let asym = (&q - q.transpose()).norm() / scale;
    if asym > FORM_RESIDUAL_TOL {
        return Err(VoronoiError::ResidualTooLarge { column: cols[0], residual: asym });
    }
    let q = (&q + q.transpose()) * 0.5;
    let m_scale = max_column_norm(&system.m).max(f64::MIN_POSITIVE);
    let fit = &q * &system.p - &system.m;
    for (column, c) in fit.column_iter().enumerate() {
        let residual = c.norm() / m_scale;
        if residual > FORM_RESIDUAL_TOL {
            return Err(VoronoiError::ResidualTooLarge { column, residual });
        }
    }
    Ok(QForm::new(q))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DefinitenessReport {
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
}

fn symmetric_sqrt(q: &Matrix) -> Result<(Matrix, DefinitenessReport), VoronoiError> {
    let eig = SymmetricEigen::new(q.clone());
    let min = eig.eigenvalues.min();
    let max = eig.eigenvalues.max();
    if !(min > 1e-10 * max.abs()) || !(max > 0.0) {
        return Err(VoronoiError::NotPositiveDefinite { min_eigenvalue: min });
    }
    let root = Matrix::from_diagonal(&eig.eigenvalues.map(f64::sqrt));
    let a = &eig.eigenvectors * root * eig.eigenvectors.transpose();
    let a = (&a + a.transpose()) * 0.5;
    Ok((a, DefinitenessReport { min_eigenvalue: min, max_eigenvalue: max }))
}

/// Confirms `Q > 0` and attaches the symmetric square root.
pub fn check_positive_definite(q: &QForm) -> Result<(QForm, DefinitenessReport), VoronoiError> {
    let (a, report) = symmetric_sqrt(&q.q)?;
    Ok((QForm { q: q.q.clone(), a: Some(a) }, report))
}

/// Linear map `A` with `AᵀA = Q`: the symmetric positive square root.
pub fn reduce_to_voronoi(q: &QForm) -> Result<AffineMap, VoronoiError> {
    let (a, _) = symmetric_sqrt(&q.q)?;
    Ok(AffineMap::linear(a))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TangencyReport {
    pub centers: usize,
    /// Largest `|G(x) − ½xᵀQx|` over cell centers `x`, measured from the base center.
    pub max_value_residual: f64,
    /// Largest `‖∇h_P − Qx‖`.
    pub max_gradient_residual: f64,
    pub samples: usize,
    /// Largest `G(y) − ½yᵀQy` over random points; the paraboloid lies inside the epigraph.
    pub max_above_violation: f64,
}

impl TangencyReport {
    pub fn passed(&self) -> bool {
        let tol = eps_geo();
        self.max_value_residual <= tol && self.max_gradient_residual <= tol && self.max_above_violation <= tol
    }
}

/// Paraboloid `½xᵀQx` touches the generatrix over every cell center and nowhere dips below it.
pub fn check_tangency<R: Rng + ?Sized>(
    generatrix: &Generatrix,
    q: &QForm,
    patch: &TilingPatch,
    samples: usize,
    rng: &mut R,
) -> TangencyReport {
    let x0 = patch.center(generatrix.base_cell_index);
    let mut report = TangencyReport {
        centers: 0,
        max_value_residual: 0.0,
        max_gradient_residual: 0.0,
        samples: 0,
        max_above_violation: 0.0,
    };
    for (c, lifted) in generatrix.lifted.iter().enumerate() {
        let x = patch.center(c);
        let rel = &x - &x0;
        let para = q.value(&rel);
        let value = (lifted.value(&x) - para).abs() / (1.0 + para.abs());
        let grad = (&lifted.gradient - &q.q * &rel).norm() / (1.0 + lifted.gradient.norm());
        report.centers += 1;
        report.max_value_residual = report.max_value_residual.max(value);
        report.max_gradient_residual = report.max_gradient_residual.max(grad);
    }
    let n = patch.cell_count();
    for _ in 0..samples {
        let y = random_point_in_cell(patch, rng.random_range(0..n), rng);
        let Ok(g) = evaluate_g(generatrix, &y) else { continue };
        report.samples += 1;
        let para = q.value(&(&y - &x0));
        report.max_above_violation = report.max_above_violation.max((g - para) / (1.0 + para.abs()));
    }
    report
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoronoiReport {
    /// Vertex-set Hausdorff distance between the mapped base cell and the oracle cell.
    pub hausdorff: f64,
    pub diameter: f64,
    pub mapped_vertices: usize,
    pub oracle_vertices: usize,
}

impl VoronoiReport {
    pub fn passed(&self) -> bool {
        self.hausdorff <= HAUSDORFF_TOL * self.diameter
    }
}

/// Maps the lattice and base cell, then compares the cell with the Dirichlet
/// cell of the mapped lattice after centering both.
pub fn verify_voronoi(map: &AffineMap, patch: &TilingPatch) -> Result<VoronoiReport, VoronoiError> {
    let lattice = patch.lattice.transformed(&map.linear)?;
    let oracle = dirichlet_cell(&lattice)?;
    let cell = &patch.complex.cells[patch.base_cell_index];
    let center = patch.center(patch.base_cell_index);
    let mapped: Vec<Vector> = cell.vertices.iter().map(|v| &map.linear * (v - &center)).collect();
    let hausdorff = hausdorff(&mapped, &oracle.body.vertices).max(hausdorff(&oracle.body.vertices, &mapped));
    Ok(VoronoiReport {
        hausdorff,
        diameter: oracle.body.diameter(),
        mapped_vertices: mapped.len(),
        oracle_vertices: oracle.body.vertices.len(),
    })
}

/// Directed Hausdorff distance from `a` to `b`.
fn hausdorff(a: &[Vector], b: &[Vector]) -> f64 {
    a.iter()
        .map(|x| b.iter().map(|y| (x - y).norm()).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max)
}

/// Generatrix of the Dirichlet tiling built from tangent planes of `½‖x‖²`
/// at the lattice points, shifted so the base cell is flat. Also returns
/// the induced scaling `s(F) = ‖facet vector‖`.
pub fn voronoi_generatrix(lattice: &Lattice, radius: usize) -> Result<(Generatrix, Scaling), VoronoiError> {
    let cell = dirichlet_cell(lattice)?;
    let patch = generate_patch(&cell, lattice, radius)?;
    let x0 = patch.center(patch.base_cell_index);
    let lifted = (0..patch.cell_count())
        .map(|c| {
            let x = patch.center(c);
            LiftedCell {
                cell_index: c,
                gradient: &x - &x0,
                offset: -0.5 * x.norm_squared() + 0.5 * x0.norm_squared(),
            }
        })
        .collect();
    let scaling = Scaling::facet_norm(&patch);
    let base_cell_index = patch.base_cell_index;
    Ok((Generatrix { patch, lifted, base_cell_index, scaling: scaling.clone() }, scaling))
}

/// Integer coefficients `L` over the facet vectors with `P·L = x_cell − x_base`,
/// read off a shortest facet path from the base cell.
pub fn lattice_coefficients(patch: &TilingPatch, system: &FacetSystem, cell: usize) -> Option<Vec<i64>> {
    let complex = &patch.complex;
    let column: BTreeMap<&[i64], usize> =
        system.offsets.iter().enumerate().map(|(i, o)| (o.as_slice(), i)).collect();
    let base = patch.base_cell_index;
    let mut parent = vec![usize::MAX; complex.cells.len()];
    parent[base] = base;
    let mut queue = VecDeque::from([base]);
    while let Some(c) = queue.pop_front() {
        if c == cell {
            break;
        }
        for (_, nb) in complex.neighbors(c) {
            if parent[nb] == usize::MAX {
                parent[nb] = c;
                queue.push_back(nb);
            }
        }
    }
    if parent[cell] == usize::MAX {
        return None;
    }
    let mut l = vec![0i64; system.len()];
    let mut cur = cell;
    while cur != base {
        let prev = parent[cur];
        let off: Vec<i64> =
            patch.cell_coords[cur].iter().zip(&patch.cell_coords[prev]).map(|(a, b)| a - b).collect();
        l[*column.get(off.as_slice())?] += 1;
        cur = prev;
    }
    Some(l)
}

/// `½ L PᵀM Lᵀ`.
pub fn facet_formula_value(system: &FacetSystem, l: &[i64]) -> f64 {
    let lv = Vector::from_iterator(l.len(), l.iter().map(|&x| x as f64));
    0.5 * (&system.p * &lv).dot(&(&system.m * &lv))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lift::build_generatrix;
    use crate::tiling::{dirichlet_cell, generate_patch};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn patch(lat: &Lattice, r: usize) -> TilingPatch {
        generate_patch(&dirichlet_cell(lat).unwrap(), lat, r).unwrap()
    }

    #[test]
    fn square_system_is_identity() {
        let p = patch(&Lattice::cubic(2), 1);
        let sys = facet_system(&p, &Scaling::uniform(&p, 1.0)).unwrap();
        assert_eq!(sys.len(), 4);
        assert_eq!(sys.p, sys.m);
        assert_eq!(check_symmetry(&sys).max_residual, 0.0);
        let q = recover_q(&sys).unwrap();
        assert!((q.q.clone() - Matrix::identity(2, 2)).norm() < 1e-15);
    }

    #[test]
    fn perturbed_column_breaks_symmetry() {
        let p = patch(&Lattice::hexagonal(), 1);
        let mut sys = facet_system(&p, &Scaling::uniform(&p, 1.0)).unwrap();
        let col = sys.m.column(2) * 1.3;
        sys.m.set_column(2, &col);
        let rep = check_symmetry(&sys);
        assert!(!rep.passed());
        assert!(rep.worst_pair.0 == 2 || rep.worst_pair.1 == 2);
        assert!(matches!(recover_q(&sys), Err(VoronoiError::ResidualTooLarge { .. })));
    }

    #[test]
    fn non_invariant_scaling_rejected() {
        let p = patch(&Lattice::cubic(2), 2);
        let mut s = Scaling::uniform(&p, 1.0);
        // one whole vertical line reweighted keeps torsion zero but breaks invariance
        for (f, facet) in p.complex.facets.iter().enumerate() {
            if (facet.barycenter[0] - 0.5).abs() < 1e-9 && facet.plane.normal[0].abs() > 0.5 {
                s.weights[f] = 2.0;
            }
        }
        assert!(matches!(facet_system(&p, &s), Err(VoronoiError::NotInvariantScaling(_))));
    }

    #[test]
    fn factor_examples() {
        let q = QForm::new(Matrix::from_diagonal(&Vector::from_column_slice(&[4.0, 1.0])));
        let a = reduce_to_voronoi(&q).unwrap().linear;
        assert!((a - Matrix::from_diagonal(&Vector::from_column_slice(&[2.0, 1.0]))).norm() < 1e-15);
        let bad = QForm::new(Matrix::from_diagonal(&Vector::from_column_slice(&[1.0, -1.0])));
        assert!(matches!(check_positive_definite(&bad), Err(VoronoiError::NotPositiveDefinite { .. })));
    }

    #[test]
    fn sheared_hexagon_needs_the_factor() {
        let b = Matrix::from_row_slice(2, 2, &[1.0, 0.6, 0.0, 1.4]);
        let hex = Lattice::hexagonal();
        let cell = dirichlet_cell(&hex).unwrap();
        let body = cell.body.transformed(&AffineMap::linear(b.clone())).unwrap();
        let lat = hex.transformed(&b).unwrap();
        let sheared = crate::tiling::Parallelohedron::new(body);
        let p = generate_patch(&sheared, &lat, 2).unwrap();
        let fam = crate::scaling::solve_canonical(&p).unwrap();
        let s = crate::scaling::make_translation_invariant(&fam.representative, &p).unwrap();
        let sys = facet_system(&p, &s).unwrap();
        let q = recover_q(&sys).unwrap();
        let expected = QForm::new((&b * b.transpose()).try_inverse().unwrap()).trace_normalized();
        assert!((q.trace_normalized() - expected).norm() < 1e-9);
        assert!(verify_voronoi(&reduce_to_voronoi(&q).unwrap(), &p).unwrap().passed());
        assert!(!verify_voronoi(&AffineMap::identity(2), &p).unwrap().passed());
    }

    #[test]
    fn tangency_and_lattice_formula_on_hexagon() {
        let lat = Lattice::hexagonal();
        let p = patch(&lat, 2);
        let s = Scaling::uniform(&p, 1.0);
        let g = build_generatrix(&p, &s, p.base_cell_index).unwrap();
        let sys = facet_system(&p, &s).unwrap();
        let q = recover_q(&sys).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        assert!(check_tangency(&g, &q, &p, 200, &mut rng).passed());
        for c in 0..p.cell_count() {
            let l = lattice_coefficients(&p, &sys, c).unwrap();
            assert!((facet_formula_value(&sys, &l) - g.lifted[c].value(&p.center(c))).abs() < 1e-9);
        }
    }

    #[test]
    fn paraboloid_generatrix_matches_lifting() {
        let lat = Lattice::hexagonal();
        let (vg, s) = voronoi_generatrix(&lat, 2).unwrap();
        assert!(s.weights.iter().all(|w| (w - 1.0).abs() < 1e-12));
        let g = build_generatrix(&vg.patch, &s, vg.base_cell_index).unwrap();
        for (a, b) in vg.lifted.iter().zip(&g.lifted) {
            assert!(a.mismatch(b) < 1e-9);
        }
        assert_eq!(vg.lifted[vg.base_cell_index].gradient.norm(), 0.0);
    }
}
