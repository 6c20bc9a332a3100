//! Polyhedral complex over a finite set of cells.
//!
//! Incidence is derived from facet adjacency: two cells are neighbors when
//! they share a whole facet, and lower faces are shared along chains of such
//! neighbors. For embedded face-to-face tilings this agrees with point-set
//! intersection, which is what [`build_complex`] checks.

use std::collections::{BTreeSet, HashMap};

use thiserror::Error;

use crate::geom::{
    affine_rank, coordinate_scale, mean_point, point_key, point_set_key, GeomError, Hyperplane,
    Matrix, PointKey, Polytope, Vector,
};
use crate::tol::eps_geo;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ComplexError {
    #[error("cells {a} and {b} do not meet face-to-face: {reason}")]
    NotFaceToFace { a: usize, b: usize, reason: String },
    #[error("ridge {0} touches the patch boundary")]
    IncompleteStar(usize),
    #[error("unsupported codimension {0}")]
    UnsupportedCodim(usize),
    #[error("face not found in complex")]
    FaceNotFound,
    #[error("no ridge with index {0}")]
    NoSuchRidge(usize),
    #[error("cells must share one dimension")]
    MixedDimensions,
    #[error(transparent)]
    Geom(#[from] GeomError),
}

/// Reference to a facet record: shared by two cells, or on the patch boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FacetRef {
    Interior(usize),
    Boundary(usize),
}

impl FacetRef {
    pub fn interior(self) -> Option<usize> {
        match self {
            FacetRef::Interior(i) => Some(i),
            FacetRef::Boundary(_) => None,
        }
    }
}

/// A (d−1)-face shared by two cells.
#[derive(Debug, Clone)]
pub struct InteriorFacet {
    /// `(a, b)` with `a < b`.
    pub cells: (usize, usize),
    /// Facet index inside each cell's polytope.
    pub local: (usize, usize),
    /// Unit normal points from `cells.0` towards `cells.1`.
    pub plane: Hyperplane,
    pub vertices: Vec<Vector>,
    pub barycenter: Vector,
}

impl InteriorFacet {
    /// The other cell, if `cell` is one of the two.
    pub fn across(&self, cell: usize) -> Option<usize> {
        if self.cells.0 == cell {
            Some(self.cells.1)
        } else if self.cells.1 == cell {
            Some(self.cells.0)
        } else {
            None
        }
    }

    /// Unit normal oriented from `from` into the neighboring cell.
    pub fn normal_from(&self, from: usize) -> Vector {
        if from == self.cells.0 {
            self.plane.normal.clone()
        } else {
            -&self.plane.normal
        }
    }
}

#[derive(Debug, Clone)]
pub struct BoundaryFacet {
    pub cell: usize,
    pub local: usize,
    pub plane: Hyperplane,
    pub vertices: Vec<Vector>,
    pub barycenter: Vector,
}

/// One facet around a ridge, with its normal oriented along the rotation.
#[derive(Debug, Clone)]
pub struct FanEntry {
    pub facet: FacetRef,
    pub normal: Vector,
    /// Angle of the facet in the complementary 2-plane.
    pub angle: f64,
}

/// A (d−2)-face together with its cyclically ordered fan of facets.
#[derive(Debug, Clone)]
pub struct Ridge {
    pub vertices: Vec<Vector>,
    pub barycenter: Vector,
    /// Facets in angular order. For a complete ridge, `fan[i].normal` points
    /// from `cells[i]` into `cells[(i + 1) % k]`.
    pub fan: Vec<FanEntry>,
    /// Incident cells; `cells[i]` lies between `fan[i - 1]` and `fan[i]` when complete.
    pub cells: Vec<usize>,
    pub complete: bool,
    /// Orthonormal basis (columns) of the 2-plane complementary to the ridge.
    pub plane_basis: Matrix,
}

impl Ridge {
    pub fn valence(&self) -> usize {
        self.fan.len()
    }
}

#[derive(Debug, Clone)]
pub struct Complex {
    pub dim: usize,
    pub cells: Vec<Polytope>,
    pub facets: Vec<InteriorFacet>,
    pub boundary_facets: Vec<BoundaryFacet>,
    pub ridges: Vec<Ridge>,
    /// For each cell, the global record of each of its local facets.
    pub cell_facets: Vec<Vec<FacetRef>>,
    /// For each cell, the ridges it contains.
    pub cell_ridges: Vec<Vec<usize>>,
    ridge_lookup: HashMap<Vec<PointKey>, usize>,
    facet_lookup: HashMap<Vec<PointKey>, FacetRef>,
    vertex_cells: HashMap<PointKey, Vec<usize>>,
}

/// Ordered list of cells, consecutive ones sharing a facet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Chain {
    pub cells: Vec<usize>,
}

impl Chain {
    pub fn new(cells: Vec<usize>) -> Self {
        Self { cells }
    }

    pub fn reversed(&self) -> Self {
        Self { cells: self.cells.iter().rev().copied().collect() }
    }

    /// Whether consecutive cells share a facet record in `complex`.
    pub fn is_valid(&self, complex: &Complex) -> bool {
        self.cells.windows(2).all(|w| complex.shared_facet(w[0], w[1]).is_some())
    }
}

/// A closed cycle whose members all contain one common face.
#[derive(Debug, Clone, PartialEq)]
pub enum PrimitiveCycle {
    /// Cells around a (d−2)-face, first cell not repeated at the end.
    Cells { ridge: usize, chain: Chain },
    /// Interior facets of one cell around a (d−3)-face of that cell.
    Facets { face: Vec<Vector>, cell: usize, facets: Vec<usize> },
}

/// All cells containing a given face.
#[derive(Debug, Clone)]
pub struct Star {
    pub center_face: Vec<Vector>,
    pub cells: Vec<usize>,
    /// Every cell containing the face lies in the patch.
    pub complete: bool,
}

/// Builds the complex, verifying that the cells meet face-to-face.
pub fn build_complex(cells: Vec<Polytope>) -> Result<Complex, ComplexError> {
    let dim = cells.first().map(|c| c.dim).ok_or(ComplexError::MixedDimensions)?;
    if cells.iter().any(|c| c.dim != dim) || dim < 2 {
        return Err(ComplexError::MixedDimensions);
    }
    let scale = coordinate_scale(cells.iter().flat_map(|c| c.vertices.iter()));
    let tol = eps_geo() * scale;

    let centers: Vec<Vector> = cells.iter().map(|c| c.centroid()).collect();
    let radii: Vec<f64> = cells
        .iter()
        .zip(&centers)
        .map(|(c, m)| c.vertices.iter().map(|v| (v - m).norm()).fold(0.0, f64::max))
        .collect();
    let local_keys: Vec<Vec<Vec<PointKey>>> = cells
        .iter()
        .map(|c| (0..c.facets.len()).map(|f| point_set_key(c.facet_vertices(f))).collect())
        .collect();

    let mut facets = Vec::new();
    let mut cell_facets: Vec<Vec<Option<FacetRef>>> =
        cells.iter().map(|c| vec![None; c.facets.len()]).collect();

    for a in 0..cells.len() {
        for b in a + 1..cells.len() {
            if (&centers[a] - &centers[b]).norm() > radii[a] + radii[b] + tol {
                continue;
            }
            let Some(shared) = shared_face(&cells, a, b, tol)? else { continue };
            let pts: Vec<&Vector> = shared.iter().collect();
            if affine_rank(&pts, tol) + 1 != dim {
                continue;
            }
            let key = point_set_key(&shared);
            let fa = local_keys[a].iter().position(|k| *k == key);
            let fb = local_keys[b].iter().position(|k| *k == key);
            let (Some(fa), Some(fb)) = (fa, fb) else {
                return Err(ComplexError::NotFaceToFace {
                    a,
                    b,
                    reason: "shared (d-1)-face is not a facet of both cells".into(),
                });
            };
            let idx = facets.len();
            cell_facets[a][fa] = Some(FacetRef::Interior(idx));
            cell_facets[b][fb] = Some(FacetRef::Interior(idx));
            facets.push(InteriorFacet {
                cells: (a, b),
                local: (fa, fb),
                plane: cells[a].facets[fa].plane.clone(),
                barycenter: mean_point(&shared),
                vertices: shared,
            });
        }
    }

    let mut boundary_facets = Vec::new();
    for (c, slots) in cell_facets.iter_mut().enumerate() {
        for (f, slot) in slots.iter_mut().enumerate() {
            if slot.is_none() {
                let vertices: Vec<Vector> = cells[c].facet_vertices(f).into_iter().cloned().collect();
                *slot = Some(FacetRef::Boundary(boundary_facets.len()));
                boundary_facets.push(BoundaryFacet {
                    cell: c,
                    local: f,
                    plane: cells[c].facets[f].plane.clone(),
                    barycenter: mean_point(&vertices),
                    vertices,
                });
            }
        }
    }
    let cell_facets: Vec<Vec<FacetRef>> =
        cell_facets.into_iter().map(|v| v.into_iter().map(Option::unwrap).collect()).collect();

    let mut facet_lookup = HashMap::new();
    for (i, f) in facets.iter().enumerate() {
        facet_lookup.insert(point_set_key(&f.vertices), FacetRef::Interior(i));
    }
    for (i, f) in boundary_facets.iter().enumerate() {
        facet_lookup.entry(point_set_key(&f.vertices)).or_insert(FacetRef::Boundary(i));
    }

    let mut vertex_cells: HashMap<PointKey, Vec<usize>> = HashMap::new();
    for (c, cell) in cells.iter().enumerate() {
        for v in &cell.vertices {
            vertex_cells.entry(point_key(v)).or_default().push(c);
        }
    }

    // ridges: gather (cell, local facet pair) per geometric (d−2)-face
    let mut ridge_lookup: HashMap<Vec<PointKey>, usize> = HashMap::new();
    let mut ridge_vertices: Vec<Vec<Vector>> = Vec::new();
    let mut ridge_members: Vec<Vec<(usize, usize, usize)>> = Vec::new();
    let mut cell_ridges = vec![Vec::new(); cells.len()];
    for (c, cell) in cells.iter().enumerate() {
        for (fi, fj, common) in cell.ridges() {
            let verts: Vec<Vector> = common.iter().map(|&v| cell.vertices[v].clone()).collect();
            let key = point_set_key(&verts);
            let id = *ridge_lookup.entry(key).or_insert_with(|| {
                ridge_vertices.push(verts);
                ridge_members.push(Vec::new());
                ridge_vertices.len() - 1
            });
            ridge_members[id].push((c, fi, fj));
            cell_ridges[c].push(id);
        }
    }

    let mut ridges = Vec::with_capacity(ridge_vertices.len());
    for (vertices, members) in ridge_vertices.into_iter().zip(ridge_members) {
        ridges.push(make_ridge(dim, vertices, &members, &cell_facets, &facets, &boundary_facets, tol)?);
    }

    Ok(Complex {
        dim,
        cells,
        facets,
        boundary_facets,
        ridges,
        cell_facets,
        cell_ridges,
        ridge_lookup,
        facet_lookup,
        vertex_cells,
    })
}

/// Returns the common face of cells `a` and `b` as a point set, `None` if
/// they are disjoint, or an error if they overlap improperly.
fn shared_face(
    cells: &[Polytope],
    a: usize,
    b: usize,
    tol: f64,
) -> Result<Option<Vec<Vector>>, ComplexError> {
    let (ca, cb) = (&cells[a], &cells[b]);
    let separated = |p: &Polytope, q: &Polytope| {
        p.facets
            .iter()
            .any(|f| q.vertices.iter().all(|v| f.plane.signed_distance(v) >= -tol))
    };
    if !separated(ca, cb) && !separated(cb, ca) {
        let planes: Vec<Hyperplane> =
            ca.facets.iter().chain(&cb.facets).map(|f| f.plane.clone()).collect();
        if crate::lp::max_inscribed_slack(&planes).is_some_and(|t| t > tol) {
            return Err(ComplexError::NotFaceToFace { a, b, reason: "interiors overlap".into() });
        }
    }
    let in_b: Vec<Vector> = ca.vertices.iter().filter(|v| cb.contains(v, tol)).cloned().collect();
    let in_a: Vec<Vector> = cb.vertices.iter().filter(|v| ca.contains(v, tol)).cloned().collect();
    if in_a.is_empty() && in_b.is_empty() {
        return Ok(None);
    }
    if point_set_key(&in_a) != point_set_key(&in_b) {
        return Err(ComplexError::NotFaceToFace {
            a,
            b,
            reason: "intersection is not a common face".into(),
        });
    }
    for (cell, idx) in [(ca, a), (cb, b)] {
        if !is_face(cell, &in_b, tol) {
            return Err(ComplexError::NotFaceToFace {
                a,
                b,
                reason: format!("intersection is not a face of cell {idx}"),
            });
        }
    }
    Ok(Some(in_b))
}

/// Whether a vertex subset of `cell` is exactly the vertex set of one of its faces.
fn is_face(cell: &Polytope, subset: &[Vector], tol: f64) -> bool {
    let containing: Vec<usize> = (0..cell.facets.len())
        .filter(|&f| subset.iter().all(|v| cell.facets[f].plane.signed_distance(v).abs() <= tol))
        .collect();
    if containing.is_empty() {
        // only the whole cell is contained in no facet
        return subset.len() == cell.vertices.len();
    }
    let closure: Vec<&Vector> = cell
        .vertices
        .iter()
        .filter(|v| containing.iter().all(|&f| cell.facets[f].plane.signed_distance(v).abs() <= tol))
        .collect();
    point_set_key(closure) == point_set_key(subset)
}

fn make_ridge(
    dim: usize,
    vertices: Vec<Vector>,
    members: &[(usize, usize, usize)],
    cell_facets: &[Vec<FacetRef>],
    facets: &[InteriorFacet],
    boundary: &[BoundaryFacet],
    tol: f64,
) -> Result<Ridge, ComplexError> {
    let barycenter = mean_point(&vertices);
    let dirs: Vec<Vector> = vertices.iter().map(|v| v - &vertices[0]).collect();
    let plane_basis = complement_basis(&dirs, dim, tol);
    if plane_basis.ncols() != 2 {
        return Err(ComplexError::Geom(GeomError::DegenerateInput(
            "ridge is not (d-2)-dimensional".into(),
        )));
    }

    let mut refs: BTreeSet<FacetRef> = BTreeSet::new();
    let mut use_count: HashMap<FacetRef, usize> = HashMap::new();
    let mut cells: Vec<usize> = Vec::new();
    for &(c, fi, fj) in members {
        cells.push(c);
        for f in [cell_facets[c][fi], cell_facets[c][fj]] {
            refs.insert(f);
            *use_count.entry(f).or_default() += 1;
        }
    }
    let complete = refs.iter().all(|f| matches!(f, FacetRef::Interior(_)))
        && use_count.values().all(|&n| n == 2);

    let facet_data = |f: FacetRef| -> (&Vector, &Hyperplane) {
        match f {
            FacetRef::Interior(i) => (&facets[i].barycenter, &facets[i].plane),
            FacetRef::Boundary(i) => (&boundary[i].barycenter, &boundary[i].plane),
        }
    };
    let mut fan: Vec<FanEntry> = refs
        .iter()
        .map(|&f| {
            let (bary, plane) = facet_data(f);
            let local = plane_basis.tr_mul(&(bary - &barycenter));
            let angle = local[1].atan2(local[0]);
            let tangent = &plane_basis * Vector::from_column_slice(&[-angle.sin(), angle.cos()]);
            let normal = if plane.normal.dot(&tangent) >= 0.0 {
                plane.normal.clone()
            } else {
                -&plane.normal
            };
            FanEntry { facet: f, normal, angle }
        })
        .collect();
    fan.sort_by(|x, y| x.angle.total_cmp(&y.angle));

    let cell_of = |f1: FacetRef, f2: FacetRef| {
        members
            .iter()
            .find(|&&(c, fi, fj)| {
                let pair = [cell_facets[c][fi], cell_facets[c][fj]];
                pair.contains(&f1) && pair.contains(&f2)
            })
            .map(|m| m.0)
    };
    let ordered_cells = if complete {
        let k = fan.len();
        let mut out = Vec::with_capacity(k);
        for i in 0..k {
            let prev = fan[(i + k - 1) % k].facet;
            match cell_of(prev, fan[i].facet) {
                Some(c) => out.push(c),
                None => {
                    return Err(ComplexError::NotFaceToFace {
                        a: cells[0],
                        b: cells[cells.len() - 1],
                        reason: "cells around a ridge do not close up in angular order".into(),
                    })
                }
            }
        }
        out
    } else {
        cells.sort_unstable();
        cells.dedup();
        cells
    };
    Ok(Ridge { vertices, barycenter, fan, cells: ordered_cells, complete, plane_basis })
}

/// Orthonormal basis of the complement of `span(vectors)`, tolerating dependent inputs.
pub(crate) fn complement_basis(vectors: &[Vector], d: usize, tol: f64) -> Matrix {
    let mut gram = Matrix::zeros(d, d);
    for v in vectors {
        gram += v * v.transpose();
    }
    let eig = nalgebra::SymmetricEigen::new(gram);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let top = eig.eigenvalues[order[d - 1]].max(0.0);
    // rounding leaves ~1e-16·top on null directions
    let cutoff = tol * tol + 1e-12 * top;
    let keep: Vec<usize> = order.into_iter().filter(|&i| eig.eigenvalues[i] <= cutoff).collect();
    let mut basis = Matrix::zeros(d, keep.len());
    for (col, &i) in keep.iter().enumerate() {
        basis.set_column(col, &eig.eigenvectors.column(i));
    }
    // a deterministic right-handed frame for the 2-plane case
    if basis.ncols() == 2 && d == 2 {
        basis = Matrix::identity(2, 2);
    }
    basis
}

impl Complex {
    pub fn ridge(&self, index: usize) -> Result<&Ridge, ComplexError> {
        self.ridges.get(index).ok_or(ComplexError::NoSuchRidge(index))
    }

    /// Interior facet shared by two cells.
    pub fn shared_facet(&self, a: usize, b: usize) -> Option<usize> {
        self.cell_facets.get(a)?.iter().find_map(|f| match f {
            FacetRef::Interior(i) if self.facets[*i].across(a) == Some(b) => Some(*i),
            _ => None,
        })
    }

    /// Cells sharing a facet with `cell`.
    pub fn neighbors(&self, cell: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.cell_facets[cell].iter().filter_map(move |f| {
            f.interior().map(|i| (i, self.facets[i].across(cell).expect("incident facet")))
        })
    }

    pub fn interior_ridges(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.ridges.len()).filter(|&r| self.ridges[r].complete)
    }

    pub fn find_ridge(&self, vertices: &[Vector]) -> Option<usize> {
        self.ridge_lookup.get(&point_set_key(vertices)).copied()
    }

    pub fn find_facet(&self, vertices: &[Vector]) -> Option<FacetRef> {
        self.facet_lookup.get(&point_set_key(vertices)).copied()
    }

    /// Whether every facet of `cell` is shared with another cell.
    pub fn is_surrounded(&self, cell: usize) -> bool {
        self.cell_facets[cell].iter().all(|f| matches!(f, FacetRef::Interior(_)))
    }

    /// Whether every ridge of `cell` has a complete star.
    pub fn has_complete_ridges(&self, cell: usize) -> bool {
        self.cell_ridges[cell].iter().all(|&r| self.ridges[r].complete)
    }

    /// Cells having every point of `face` among their vertices.
    fn cells_containing(&self, face: &[Vector]) -> Vec<usize> {
        let Some(first) = face.first() else { return Vec::new() };
        let Some(candidates) = self.vertex_cells.get(&point_key(first)) else {
            return Vec::new();
        };
        let keys: Vec<PointKey> = face.iter().map(point_key).collect();
        candidates
            .iter()
            .copied()
            .filter(|&c| {
                let cell_keys: BTreeSet<PointKey> = self.cells[c].vertices.iter().map(point_key).collect();
                keys.iter().all(|k| cell_keys.contains(k))
            })
            .collect()
    }

    fn facet_vertices(&self, f: FacetRef) -> &[Vector] {
        match f {
            FacetRef::Interior(i) => &self.facets[i].vertices,
            FacetRef::Boundary(i) => &self.boundary_facets[i].vertices,
        }
    }

    /// Every facet containing `face` is interior and every ridge containing it is complete.
    fn face_is_interior(&self, face: &[Vector], cells: &[usize]) -> bool {
        let keys: Vec<PointKey> = face.iter().map(point_key).collect();
        let contains = |pts: &[Vector]| {
            let set: BTreeSet<PointKey> = pts.iter().map(point_key).collect();
            keys.iter().all(|k| set.contains(k))
        };
        cells.iter().all(|&c| {
            self.cell_facets[c]
                .iter()
                .filter(|&&f| contains(self.facet_vertices(f)))
                .all(|f| matches!(f, FacetRef::Interior(_)))
                && self.cell_ridges[c]
                    .iter()
                    .filter(|&&r| contains(&self.ridges[r].vertices))
                    .all(|&r| self.ridges[r].complete)
        })
    }

    /// Faces of `cell` of dimension `k`, as vertex-index sets of that cell.
    pub fn cell_faces(&self, cell: usize, k: usize) -> Vec<Vec<usize>> {
        let poly = &self.cells[cell];
        let d = self.dim;
        if k >= d {
            return vec![(0..poly.vertices.len()).collect()];
        }
        let tol = eps_geo() * poly.scale();
        let mut faces: BTreeSet<Vec<usize>> = BTreeSet::new();
        for combo in crate::geom::Combinations::new(poly.facets.len(), d - k) {
            let mut common: Vec<usize> = poly.facets[combo[0]].vertices.clone();
            for &f in &combo[1..] {
                common.retain(|v| poly.facets[f].vertices.contains(v));
            }
            if common.is_empty() {
                continue;
            }
            let pts: Vec<&Vector> = common.iter().map(|&v| &poly.vertices[v]).collect();
            if affine_rank(&pts, tol) == k {
                common.sort_unstable();
                faces.insert(common);
            }
        }
        faces.into_iter().collect()
    }
}

/// Cyclically ordered fan of facets around an interior ridge.
pub fn ridge_fan(complex: &Complex, ridge_index: usize) -> Result<Vec<(usize, Vector)>, ComplexError> {
    let ridge = complex.ridge(ridge_index)?;
    if !ridge.complete {
        return Err(ComplexError::IncompleteStar(ridge_index));
    }
    Ok(ridge
        .fan
        .iter()
        .map(|e| (e.facet.interior().expect("complete ridge"), e.normal.clone()))
        .collect())
}

/// One closed chain per interior face of codimension `codim`.
///
/// * `codim = 2`: cells around each complete ridge, in fan order.
/// * `codim = 3` (d ≥ 3): for each interior (d−3)-face and each cell containing
///   it, that cell's facets through the face in adjacency order.
pub fn primitive_cycles(complex: &Complex, codim: usize) -> Result<Vec<PrimitiveCycle>, ComplexError> {
    match codim {
        2 => Ok(complex
            .interior_ridges()
            .map(|r| PrimitiveCycle::Cells { ridge: r, chain: Chain::new(complex.ridges[r].cells.clone()) })
            .collect()),
        3 if complex.dim >= 3 => Ok(facet_cycles(complex)),
        _ => Err(ComplexError::UnsupportedCodim(codim)),
    }
}

fn facet_cycles(complex: &Complex) -> Vec<PrimitiveCycle> {
    let k = complex.dim - 3;
    let mut seen: BTreeSet<Vec<PointKey>> = BTreeSet::new();
    let mut out = Vec::new();
    for cell in 0..complex.cells.len() {
        if !complex.is_surrounded(cell) {
            continue;
        }
        for face in complex.cell_faces(cell, k) {
            let pts: Vec<Vector> = face.iter().map(|&v| complex.cells[cell].vertices[v].clone()).collect();
            let key = point_set_key(&pts);
            if !seen.insert(key) {
                continue;
            }
            let star = complex.cells_containing(&pts);
            if !complex.face_is_interior(&pts, &star) {
                continue;
            }
            for &c in &star {
                if let Some(facets) = corner_cycle(complex, c, &pts) {
                    out.push(PrimitiveCycle::Facets { face: pts.clone(), cell: c, facets });
                }
            }
        }
    }
    out
}

/// Facets of `cell` through `face`, walked across the cell's ridges through `face`.
fn corner_cycle(complex: &Complex, cell: usize, face: &[Vector]) -> Option<Vec<usize>> {
    let poly = &complex.cells[cell];
    let keys: BTreeSet<PointKey> = face.iter().map(point_key).collect();
    let through = |verts: &[usize]| {
        let set: BTreeSet<PointKey> = verts.iter().map(|&v| point_key(&poly.vertices[v])).collect();
        keys.is_subset(&set)
    };
    let local: Vec<usize> = (0..poly.facets.len()).filter(|&f| through(&poly.facets[f].vertices)).collect();
    let adjacent: Vec<(usize, usize)> = poly
        .ridges()
        .into_iter()
        .filter(|(_, _, common)| through(common))
        .map(|(a, b, _)| (a, b))
        .collect();
    let mut order = vec![*local.first()?];
    let mut prev = usize::MAX;
    loop {
        let cur = *order.last().unwrap();
        let next = adjacent.iter().find_map(|&(a, b)| {
            let other = if a == cur { b } else if b == cur { a } else { return None };
            (other != prev).then_some(other)
        })?;
        if next == order[0] {
            break;
        }
        if order.len() > local.len() {
            return None;
        }
        prev = cur;
        order.push(next);
    }
    order.iter().map(|&f| complex.cell_facets[cell][f].interior()).collect()
}

/// Star of a face given by its vertex coordinates.
pub fn star_of(complex: &Complex, face: &[Vector]) -> Result<Star, ComplexError> {
    let cells = complex.cells_containing(face);
    if cells.is_empty() {
        return Err(ComplexError::FaceNotFound);
    }
    let complete = complex.face_is_interior(face, &cells);
    Ok(Star { center_face: face.to_vec(), cells, complete })
}
