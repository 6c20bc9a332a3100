//! Lattice tilings by parallelohedra: Dirichlet cells, finite patches, facet
//! classes, and the classical Minkowski / Venkov–Delone / ridge checks.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::complex::{build_complex, Complex, ComplexError};
use crate::geom::{
    convex_hull, halfspace_intersection, mean_point, project_out, GeomError, Hyperplane, Matrix,
    Polytope, Vector,
};
use crate::tol::{eps_geo, quantize, EPS_LINALG};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TilingError {
    #[error("lattice basis is singular (|det| = {0:e})")]
    SingularBasis(f64),
    #[error("not a face-to-face tiling: {0}")]
    NotFaceToFace(String),
    #[error("ridge {ridge} has {valence} facets and is neither primitive nor standard")]
    AnomalousRidge { ridge: usize, valence: usize },
    #[error("ridge {0} touches the patch boundary")]
    IncompleteStar(usize),
    #[error("patch radius must be at least 1")]
    BadRadius,
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error(transparent)]
    Complex(ComplexError),
}

impl From<ComplexError> for TilingError {
    fn from(e: ComplexError) -> Self {
        match e {
            ComplexError::NotFaceToFace { .. } => TilingError::NotFaceToFace(e.to_string()),
            ComplexError::IncompleteStar(r) => TilingError::IncompleteStar(r),
            ComplexError::Geom(g) => TilingError::Geom(g),
            other => TilingError::Complex(other),
        }
    }
}

/// Lattice spanned by the columns of `basis`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lattice {
    pub basis: Matrix,
}

impl Lattice {
    pub fn new(basis: Matrix) -> Result<Self, TilingError> {
        if !basis.is_square() || basis.nrows() == 0 {
            return Err(TilingError::Geom(GeomError::DimensionMismatch {
                expected: basis.nrows(),
                got: basis.ncols(),
            }));
        }
        let det = basis.determinant();
        if !(det.abs() > EPS_LINALG) {
            return Err(TilingError::SingularBasis(det));
        }
        Ok(Self { basis })
    }

    /// Basis given as a list of generator vectors.
    pub fn from_generators(generators: &[&[f64]]) -> Result<Self, TilingError> {
        let d = generators.len();
        let mut basis = Matrix::zeros(d, d);
        for (j, g) in generators.iter().enumerate() {
            if g.len() != d {
                return Err(TilingError::Geom(GeomError::DimensionMismatch { expected: d, got: g.len() }));
            }
            basis.set_column(j, &Vector::from_column_slice(g));
        }
        Self::new(basis)
    }

    pub fn cubic(d: usize) -> Self {
        Self { basis: Matrix::identity(d, d) }
    }

    /// Unit-spaced triangular lattice; its Dirichlet cell is a regular hexagon.
    pub fn hexagonal() -> Self {
        Self::from_generators(&[&[1.0, 0.0], &[0.5, 3f64.sqrt() / 2.0]]).unwrap()
    }

    /// Face-centered cubic lattice with nearest-neighbor distance 1.
    pub fn fcc() -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Self::from_generators(&[&[s, s, 0.0], &[s, 0.0, s], &[0.0, s, s]]).unwrap()
    }

    /// Body-centered cubic lattice with conventional cube edge 1.
    pub fn bcc() -> Self {
        Self::from_generators(&[&[-0.5, 0.5, 0.5], &[0.5, -0.5, 0.5], &[0.5, 0.5, -0.5]]).unwrap()
    }

    /// Triangular layers stacked at unit height.
    pub fn hexagonal_prism() -> Self {
        let h = 3f64.sqrt() / 2.0;
        Self::from_generators(&[&[1.0, 0.0, 0.0], &[0.5, h, 0.0], &[0.0, 0.0, 1.0]]).unwrap()
    }

    /// Body-centered tetragonal lattice with unit square base and height `c`.
    /// `c = 1` gives BCC, `c = √2` gives FCC, `c > √2` an elongated dodecahedron cell.
    pub fn body_centered_tetragonal(c: f64) -> Result<Self, TilingError> {
        Self::from_generators(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.5, 0.5, c / 2.0]])
    }

    pub fn dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn point(&self, coords: &[i64]) -> Vector {
        let c = Vector::from_iterator(coords.len(), coords.iter().map(|&x| x as f64));
        &self.basis * c
    }

    /// Image of the lattice under a linear map.
    pub fn transformed(&self, linear: &Matrix) -> Result<Self, TilingError> {
        Self::new(linear * &self.basis)
    }

    /// LLL-reduced basis (δ = 3/4) of the same lattice.
    pub fn lll_reduced(&self) -> Lattice {
        let d = self.dim();
        let mut b: Vec<Vector> = (0..d).map(|j| self.basis.column(j).into_owned()).collect();
        let gram_schmidt = |b: &[Vector]| {
            let mut star: Vec<Vector> = Vec::with_capacity(b.len());
            let mut mu = Matrix::zeros(b.len(), b.len());
            for i in 0..b.len() {
                let mut v = b[i].clone();
                for j in 0..i {
                    mu[(i, j)] = b[i].dot(&star[j]) / star[j].norm_squared();
                    v -= &star[j] * mu[(i, j)];
                }
                star.push(v);
            }
            (star, mu)
        };
        let mut k = 1;
        let mut guard = 0;
        while k < d && guard < 10_000 {
            guard += 1;
            for j in (0..k).rev() {
                let (_, mu) = gram_schmidt(&b);
                let q = mu[(k, j)].round();
                if q != 0.0 {
                    let bj = b[j].clone();
                    b[k] -= bj * q;
                }
            }
            let (star, mu) = gram_schmidt(&b);
            if star[k].norm_squared() >= (0.75 - mu[(k, k - 1)].powi(2)) * star[k - 1].norm_squared() {
                k += 1;
            } else {
                b.swap(k, k - 1);
                k = (k - 1).max(1);
            }
        }
        let mut basis = Matrix::zeros(d, d);
        for (j, v) in b.iter().enumerate() {
            basis.set_column(j, v);
        }
        Lattice { basis }
    }

    /// Non-zero lattice vectors of norm at most `radius`.
    pub fn vectors_within(&self, radius: f64) -> Vec<Vector> {
        let d = self.dim();
        let inv = self.basis.clone().try_inverse().expect("nonsingular basis");
        let bounds: Vec<i64> =
            (0..d).map(|i| (radius * inv.row(i).norm()).floor() as i64).collect();
        let mut out = Vec::new();
        for coords in box_coords(&bounds) {
            if coords.iter().all(|&c| c == 0) {
                continue;
            }
            let v = self.point(&coords);
            if v.norm() <= radius * (1.0 + 1e-12) {
                out.push(v);
            }
        }
        out
    }
}

/// All integer vectors with `|c_i| <= bounds[i]`, in lexicographic order.
fn box_coords(bounds: &[i64]) -> Vec<Vec<i64>> {
    let mut out = vec![Vec::new()];
    for &b in bounds {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (-b..=b).map(move |x| {
                    let mut p = prefix.clone();
                    p.push(x);
                    p
                })
            })
            .collect();
    }
    out
}

/// Convex polytope together with its center of symmetry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Parallelohedron {
    pub body: Polytope,
    pub center: Vector,
}

impl Parallelohedron {
    /// Wraps a polytope; the center is taken as the vertex centroid.
    pub fn new(body: Polytope) -> Self {
        let center = body.centroid();
        Self { body, center }
    }

    pub fn from_vertices(points: &[Vector]) -> Result<Self, TilingError> {
        Ok(Self::new(convex_hull(points)?))
    }

    pub fn dim(&self) -> usize {
        self.body.dim
    }
}

/// Dirichlet–Voronoi cell of the origin.
///
/// Candidates are the lattice vectors within twice the longest LLL-reduced
/// generator; a bisector is kept only if its midpoint is not strictly closer
/// to another candidate, and the remaining redundancy is removed by the
/// half-space intersection.
pub fn dirichlet_cell(lattice: &Lattice) -> Result<Parallelohedron, TilingError> {
    let reduced = lattice.lll_reduced();
    let radius = 2.0
        * (0..reduced.dim())
            .map(|j| reduced.basis.column(j).norm())
            .fold(0.0, f64::max);
    let candidates = lattice.vectors_within(radius);
    let tol = eps_geo() * radius.max(1.0).powi(2);
    let relevant: Vec<&Vector> = candidates
        .iter()
        .filter(|v| !candidates.iter().any(|w| w.dot(w) < v.dot(w) - tol))
        .collect();
    let planes: Vec<Hyperplane> = relevant
        .iter()
        .map(|v| Hyperplane::new((*v).clone(), v.norm_squared() / 2.0))
        .collect::<Result<_, _>>()?;
    let body = halfspace_intersection(&planes, &Vector::zeros(lattice.dim()))?;
    Ok(Parallelohedron { body, center: Vector::zeros(lattice.dim()) })
}

/// Finite patch of the tiling by lattice translates of one cell.
#[derive(Debug, Clone)]
pub struct TilingPatch {
    pub complex: Complex,
    pub lattice: Lattice,
    pub prototype: Parallelohedron,
    pub radius: usize,
    /// Lattice coordinates of each cell's translation.
    pub cell_coords: Vec<Vec<i64>>,
    pub base_cell_index: usize,
    coord_index: HashMap<Vec<i64>, usize>,
}

impl TilingPatch {
    pub fn dim(&self) -> usize {
        self.lattice.dim()
    }

    /// Symmetry center of a cell.
    pub fn center(&self, cell: usize) -> Vector {
        &self.prototype.center + self.lattice.point(&self.cell_coords[cell])
    }

    pub fn cell_at(&self, coords: &[i64]) -> Option<usize> {
        self.coord_index.get(coords).copied()
    }

    pub fn cell_count(&self) -> usize {
        self.cell_coords.len()
    }

    /// Lattice offset from `cells.0` to `cells.1` of an interior facet.
    pub fn facet_offset(&self, facet: usize) -> Vec<i64> {
        let (a, b) = self.complex.facets[facet].cells;
        self.cell_coords[b].iter().zip(&self.cell_coords[a]).map(|(x, y)| x - y).collect()
    }

    /// Interior facets of the base cell, in the cell's local facet order.
    pub fn base_facets(&self) -> Vec<usize> {
        self.complex.cell_facets[self.base_cell_index]
            .iter()
            .filter_map(|f| f.interior())
            .collect()
    }
}

/// Translation vectors `2(c_F − c)` across each facet of a centrally symmetric cell.
pub fn facet_translations(cell: &Parallelohedron) -> Vec<Vector> {
    (0..cell.body.facets.len())
        .map(|f| (cell.body.facet_barycenter(f) - &cell.center) * 2.0)
        .collect()
}

/// Integer coordinates of `v` in `lattice`, if it is a lattice vector.
fn integer_coords(lattice: &Lattice, inverse: &Matrix, v: &Vector) -> Option<Vec<i64>> {
    let x = inverse * v;
    let coords: Vec<i64> = x.iter().map(|c| c.round() as i64).collect();
    let residual = (lattice.point(&coords) - v).norm();
    (residual <= 1e-6 * v.norm().max(1.0)).then_some(coords)
}

fn max_coord(lattice: &Lattice, vectors: &[Vector]) -> Option<i64> {
    let inverse = lattice.basis.clone().try_inverse()?;
    let mut worst = 0;
    for v in vectors {
        let c = integer_coords(lattice, &inverse, v)?;
        worst = c.iter().fold(worst, |m, x| m.max(x.abs()));
    }
    Some(worst)
}

/// A basis of the same lattice in which every facet translation of `cell` has
/// coordinates in {−1, 0, 1}, so that a radius-1 patch surrounds the base cell.
///
/// The given basis is kept when it already qualifies; otherwise bases made of
/// facet translations are tried in a fixed order, then the LLL basis.
pub fn adapted_lattice(cell: &Parallelohedron, lattice: &Lattice) -> Lattice {
    let translations = facet_translations(cell);
    if max_coord(lattice, &translations) == Some(1) {
        return lattice.clone();
    }
    let d = lattice.dim();
    let covolume = lattice.basis.determinant().abs();
    // One representative per ± pair.
    let mut reps: Vec<&Vector> = Vec::new();
    for t in &translations {
        if !reps.iter().any(|r| (*r + t).norm() <= 1e-9 * t.norm().max(1.0)) {
            reps.push(t);
        }
    }
    if reps.len() < d {
        return lattice.lll_reduced();
    }
    let mut subset: Vec<usize> = (0..d).collect();
    loop {
        let mut basis = Matrix::zeros(d, d);
        for (j, &i) in subset.iter().enumerate() {
            basis.set_column(j, reps[i]);
        }
        if (basis.determinant().abs() - covolume).abs() <= 1e-9 * covolume.max(1.0) {
            let candidate = Lattice { basis };
            if max_coord(&candidate, &translations) == Some(1) {
                return candidate;
            }
        }
        // Next d-subset in lexicographic order.
        let Some(pos) = (0..d).rev().find(|&j| subset[j] < reps.len() - d + j) else {
            break;
        };
        subset[pos] += 1;
        for j in pos + 1..d {
            subset[j] = subset[j - 1] + 1;
        }
    }
    lattice.lll_reduced()
}

/// Translates `cell` by every lattice vector with coordinates in `[-radius, radius]^d`.
///
/// Coordinates refer to `patch.lattice`, which is [`adapted_lattice`] of the
/// input and equals it whenever the input basis already surrounds the cell.
pub fn generate_patch(
    cell: &Parallelohedron,
    lattice: &Lattice,
    radius: usize,
) -> Result<TilingPatch, TilingError> {
    generate_patch_at(cell, lattice, radius, None)
}

/// As [`generate_patch`], with the base cell at the given lattice coordinates.
pub fn generate_patch_at(
    cell: &Parallelohedron,
    lattice: &Lattice,
    radius: usize,
    base: Option<&[i64]>,
) -> Result<TilingPatch, TilingError> {
    if radius == 0 {
        return Err(TilingError::BadRadius);
    }
    let d = lattice.dim();
    if cell.dim() != d {
        return Err(TilingError::Geom(GeomError::DimensionMismatch { expected: d, got: cell.dim() }));
    }
    let lattice = &adapted_lattice(cell, lattice);
    let base: Vec<i64> = base.map(<[i64]>::to_vec).unwrap_or_else(|| vec![0; d]);
    let r = radius as i64;
    let cell_coords: Vec<Vec<i64>> = box_coords(&vec![r; d])
        .into_iter()
        .map(|c| c.iter().zip(&base).map(|(x, b)| x + b).collect())
        .collect();
    let cells: Vec<Polytope> =
        cell_coords.iter().map(|c| cell.body.translated(&lattice.point(c))).collect();
    let complex = build_complex(cells)?;
    let coord_index: HashMap<Vec<i64>, usize> =
        cell_coords.iter().enumerate().map(|(i, c)| (c.clone(), i)).collect();
    let base_cell_index = coord_index[&base];
    if !complex.is_surrounded(base_cell_index) {
        return Err(TilingError::NotFaceToFace(
            "translates leave gaps around the base cell".into(),
        ));
    }
    Ok(TilingPatch {
        complex,
        lattice: lattice.clone(),
        prototype: cell.clone(),
        radius,
        cell_coords,
        base_cell_index,
        coord_index,
    })
}

/// Translation class of facets, identified up to orientation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FacetClass {
    pub class_id: usize,
    /// Lattice offset between the two cells, with its first non-zero entry positive.
    pub offset: Vec<i64>,
    /// Center-to-center vector for `offset`; the opposite class member is its negative.
    pub facet_vector: Vector,
    /// Unit facet normal oriented along `facet_vector`.
    pub normal: Vector,
    /// Interior facet indices in the class.
    pub members: Vec<usize>,
}

/// Groups the interior facets of the patch into translation classes.
pub fn facet_classes(patch: &TilingPatch) -> Vec<FacetClass> {
    let mut by_offset: BTreeMap<Vec<i64>, Vec<usize>> = BTreeMap::new();
    for f in 0..patch.complex.facets.len() {
        let off = canonical_offset(patch.facet_offset(f));
        by_offset.entry(off).or_default().push(f);
    }
    by_offset
        .into_iter()
        .enumerate()
        .map(|(class_id, (offset, members))| {
            let facet_vector = patch.lattice.point(&offset);
            let n = &patch.complex.facets[members[0]].plane.normal;
            let normal = if n.dot(&facet_vector) >= 0.0 { n.clone() } else { -n };
            FacetClass { class_id, offset, facet_vector, normal, members }
        })
        .collect()
}

/// Class id of each interior facet.
pub fn class_of_facets(classes: &[FacetClass], facet_count: usize) -> Vec<usize> {
    let mut out = vec![usize::MAX; facet_count];
    for c in classes {
        for &f in &c.members {
            out[f] = c.class_id;
        }
    }
    out
}

pub(crate) fn canonical_offset(off: Vec<i64>) -> Vec<i64> {
    match off.iter().find(|&&x| x != 0) {
        Some(&x) if x < 0 => off.into_iter().map(|x| -x).collect(),
        _ => off,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinkowskiReport {
    /// Condition (1): the body is centrally symmetric.
    pub body_symmetric: bool,
    /// Condition (2): every facet is centrally symmetric.
    pub facets_symmetric: bool,
    pub asymmetric_facets: Vec<usize>,
    pub max_residual: f64,
}

impl MinkowskiReport {
    pub fn passed(&self) -> bool {
        self.body_symmetric && self.facets_symmetric
    }
}

/// Largest distance from a reflected point to its nearest original point.
fn symmetry_residual(points: &[&Vector]) -> f64 {
    let c = mean_point(points.iter().copied());
    points
        .iter()
        .map(|p| {
            let mirror = &c * 2.0 - *p;
            points.iter().map(|q| (&mirror - *q).norm()).fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
}

pub fn check_minkowski(cell: &Parallelohedron) -> MinkowskiReport {
    let body = &cell.body;
    let tol = eps_geo() * body.scale();
    let all: Vec<&Vector> = body.vertices.iter().collect();
    let body_res = symmetry_residual(&all);
    let mut max_residual = body_res;
    let mut asymmetric_facets = Vec::new();
    for f in 0..body.facets.len() {
        let res = symmetry_residual(&body.facet_vertices(f));
        max_residual = max_residual.max(res);
        if res > tol {
            asymmetric_facets.push(f);
        }
    }
    MinkowskiReport {
        body_symmetric: body_res <= tol,
        facets_symmetric: asymmetric_facets.is_empty(),
        asymmetric_facets,
        max_residual,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Shadow {
    Parallelogram,
    Hexagon,
    /// Neither shape; carries the number of polygon vertices.
    Other(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VenkovDeloneReport {
    /// True at d = 2, where the condition is not substantive.
    pub vacuous: bool,
    /// Local facet pair of each (d−2)-face and the shape of the projection along it.
    pub shadows: Vec<((usize, usize), Shadow)>,
}

impl VenkovDeloneReport {
    pub fn passed(&self) -> bool {
        self.vacuous || self.shadows.iter().all(|(_, s)| !matches!(s, Shadow::Other(_)))
    }

    pub fn failures(&self) -> impl Iterator<Item = &((usize, usize), Shadow)> {
        self.shadows.iter().filter(|(_, s)| matches!(s, Shadow::Other(_)))
    }
}

/// Projects the cell along each of its (d−2)-faces and classifies the shadow.
pub fn check_venkov_delone(cell: &Parallelohedron) -> VenkovDeloneReport {
    let body = &cell.body;
    if body.dim <= 2 {
        return VenkovDeloneReport { vacuous: true, shadows: Vec::new() };
    }
    let tol = eps_geo() * body.scale();
    let shadows = body
        .ridges()
        .into_iter()
        .map(|(fi, fj, common)| {
            let dirs = independent_directions(
                &common.iter().map(|&v| &body.vertices[v] - &body.vertices[common[0]]).collect::<Vec<_>>(),
                tol,
            );
            let shadow = project_out(&body.vertices, &dirs)
                .ok()
                .map(|pts| classify_polygon(&pts, tol))
                .unwrap_or(Shadow::Other(0));
            ((fi, fj), shadow)
        })
        .collect();
    VenkovDeloneReport { vacuous: false, shadows }
}

/// Greedy Gram–Schmidt selection of a maximal independent subset.
fn independent_directions(vectors: &[Vector], tol: f64) -> Vec<Vector> {
    let mut ortho: Vec<Vector> = Vec::new();
    let mut picked = Vec::new();
    for v in vectors {
        let mut r = v.clone();
        for u in &ortho {
            r -= u * u.dot(v);
        }
        if r.norm() > tol.max(1e-9) {
            ortho.push(r.normalize());
            picked.push(v.clone());
        }
    }
    picked
}

fn classify_polygon(points: &[Vector], tol: f64) -> Shadow {
    let Ok(hull) = convex_hull(points) else { return Shadow::Other(0) };
    let n = hull.vertices.len();
    let verts: Vec<&Vector> = hull.vertices.iter().collect();
    let symmetric = symmetry_residual(&verts) <= tol * 10.0;
    match (n, symmetric) {
        (4, true) => Shadow::Parallelogram,
        (6, true) => Shadow::Hexagon,
        _ => Shadow::Other(n),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RidgeKind {
    /// Three facets meet.
    Primitive,
    /// Four facets meet in two parallel pairs.
    Standard,
}

pub fn classify_ridge(patch: &TilingPatch, ridge_index: usize) -> Result<RidgeKind, TilingError> {
    let ridge = patch.complex.ridge(ridge_index)?;
    if !ridge.complete {
        return Err(TilingError::IncompleteStar(ridge_index));
    }
    let fan = &ridge.fan;
    let parallel = |a: usize, b: usize| (fan[a].normal.dot(&fan[b].normal).abs() - 1.0).abs() <= 1e-9;
    match fan.len() {
        3 => Ok(RidgeKind::Primitive),
        4 if parallel(0, 2) && parallel(1, 3) => Ok(RidgeKind::Standard),
        valence => Err(TilingError::AnomalousRidge { ridge: ridge_index, valence }),
    }
}

/// Cycle of facets of one cell whose shared (d−2)-faces are all parallel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Belt {
    /// Local facet indices in cyclic order.
    pub facets: Vec<usize>,
}

/// All belts of a centrally symmetric cell.
pub fn belts(cell: &Parallelohedron) -> Vec<Belt> {
    let body = &cell.body;
    let tol = eps_geo() * body.scale();
    let mut groups: BTreeMap<Vec<i64>, Vec<(usize, usize)>> = BTreeMap::new();
    for (fi, fj, common) in body.ridges() {
        let dirs = independent_directions(
            &common.iter().map(|&v| &body.vertices[v] - &body.vertices[common[0]]).collect::<Vec<_>>(),
            tol,
        );
        groups.entry(direction_key(&dirs, body.dim)).or_default().push((fi, fj));
    }
    let mut out = Vec::new();
    for edges in groups.values() {
        let mut adj: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for &(a, b) in edges {
            adj.entry(a).or_default().push(b);
            adj.entry(b).or_default().push(a);
        }
        let mut visited: Vec<usize> = Vec::new();
        for &start in adj.keys() {
            if visited.contains(&start) {
                continue;
            }
            let mut cycle = vec![start];
            let mut prev = usize::MAX;
            let mut cur = start;
            loop {
                let next = adj[&cur].iter().copied().find(|&n| n != prev && !(n == start && cycle.len() < 3));
                match next {
                    Some(n) if n != start && !cycle.contains(&n) => {
                        prev = cur;
                        cur = n;
                        cycle.push(n);
                    }
                    _ => break,
                }
            }
            visited.extend(&cycle);
            out.push(Belt { facets: cycle });
        }
    }
    out
}

/// Key of the linear span of `dirs` via its orthogonal projector.
fn direction_key(dirs: &[Vector], d: usize) -> Vec<i64> {
    let mut ortho: Vec<Vector> = Vec::new();
    for v in dirs {
        let mut r = v.clone();
        for u in &ortho {
            r -= u * u.dot(v);
        }
        ortho.push(r.normalize());
    }
    let mut proj = Matrix::zeros(d, d);
    for u in &ortho {
        proj += u * u.transpose();
    }
    proj.iter().map(|&x| quantize((x * 1e4).round() / 1e4)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeltReport {
    /// Belts of length six, as interior facet indices of the base cell.
    pub six: Vec<Vec<usize>>,
    pub four: Vec<Vec<usize>>,
    pub other: Vec<Vec<usize>>,
}

/// Belts of the patch's base cell, expressed through the patch's facet records.
pub fn six_belts(patch: &TilingPatch) -> BeltReport {
    let cell = patch.base_cell_index;
    let to_global = |b: &Belt| -> Vec<usize> {
        b.facets
            .iter()
            .filter_map(|&f| patch.complex.cell_facets[cell][f].interior())
            .collect()
    };
    let mut report = BeltReport { six: Vec::new(), four: Vec::new(), other: Vec::new() };
    let base = Parallelohedron::new(patch.complex.cells[cell].clone());
    for b in belts(&base) {
        let g = to_global(&b);
        match b.facets.len() {
            6 => report.six.push(g),
            4 => report.four.push(g),
            _ => report.other.push(g),
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_dirichlet_cell() {
        let cell = dirichlet_cell(&Lattice::cubic(2)).unwrap();
        assert_eq!(cell.body.vertices.len(), 4);
        for v in &cell.body.vertices {
            assert!(v.iter().all(|c| (c.abs() - 0.5).abs() < 1e-12));
        }
    }

    #[test]
    fn hexagonal_dirichlet_cell_is_regular() {
        let cell = dirichlet_cell(&Lattice::hexagonal()).unwrap();
        assert_eq!(cell.body.facets.len(), 6);
        let r0 = cell.body.vertices[0].norm();
        assert!(cell.body.vertices.iter().all(|v| (v.norm() - r0).abs() < 1e-12));
        assert!((r0 - 1.0 / 3f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn lll_keeps_lattice_and_shortens() {
        let lat = Lattice::from_generators(&[&[1.0, 0.0], &[7.3, 1.0]]).unwrap();
        let red = lat.lll_reduced();
        assert!((red.basis.determinant().abs() - 1.0).abs() < 1e-9);
        let t = lat.basis.clone().try_inverse().unwrap() * &red.basis;
        assert!(t.iter().all(|x| (x - x.round()).abs() < 1e-9));
        assert!(red.basis.column(1).norm() < 1.2);
    }

    #[test]
    fn singular_basis_rejected() {
        assert!(matches!(
            Lattice::from_generators(&[&[1.0, 2.0], &[2.0, 4.0]]),
            Err(TilingError::SingularBasis(_))
        ));
    }

    #[test]
    fn square_patch_counts() {
        let lat = Lattice::cubic(2);
        let patch = generate_patch(&dirichlet_cell(&lat).unwrap(), &lat, 1).unwrap();
        assert_eq!(patch.cell_count(), 9);
        assert_eq!(patch.complex.facets.len(), 12);
        assert_eq!(patch.cell_coords[patch.base_cell_index], vec![0, 0]);
    }

    #[test]
    fn gapped_lattice_is_rejected() {
        let cell = dirichlet_cell(&Lattice::cubic(2)).unwrap();
        let lat = Lattice::from_generators(&[&[1.0, 0.0], &[0.0, 2.0]]).unwrap();
        assert!(matches!(generate_patch(&cell, &lat, 1), Err(TilingError::NotFaceToFace(_))));
    }

    #[test]
    fn square_and_hexagon_ridges() {
        let sq = Lattice::cubic(2);
        let patch = generate_patch(&dirichlet_cell(&sq).unwrap(), &sq, 1).unwrap();
        for r in patch.complex.interior_ridges() {
            assert_eq!(classify_ridge(&patch, r).unwrap(), RidgeKind::Standard);
        }
        let hex = Lattice::hexagonal();
        let patch = generate_patch(&dirichlet_cell(&hex).unwrap(), &hex, 1).unwrap();
        let interior: Vec<usize> = patch.complex.interior_ridges().collect();
        assert!(!interior.is_empty());
        for r in interior {
            assert_eq!(classify_ridge(&patch, r).unwrap(), RidgeKind::Primitive);
        }
        let boundary = (0..patch.complex.ridges.len()).find(|&r| !patch.complex.ridges[r].complete).unwrap();
        assert_eq!(classify_ridge(&patch, boundary), Err(TilingError::IncompleteStar(boundary)));
    }

    #[test]
    fn facet_classes_of_square_and_hexagon() {
        for (lat, pairs) in [(Lattice::cubic(2), 2), (Lattice::hexagonal(), 3)] {
            let patch = generate_patch(&dirichlet_cell(&lat).unwrap(), &lat, 1).unwrap();
            let classes = facet_classes(&patch);
            assert_eq!(classes.len(), pairs);
            let total: usize = classes.iter().map(|c| c.members.len()).sum();
            assert_eq!(total, patch.complex.facets.len());
        }
    }

    #[test]
    fn cube_belts() {
        let cube = dirichlet_cell(&Lattice::cubic(3)).unwrap();
        let b = belts(&cube);
        assert_eq!(b.len(), 3);
        assert!(b.iter().all(|x| x.facets.len() == 4));
    }

    #[test]
    fn hexagon_has_one_six_belt() {
        let hex = dirichlet_cell(&Lattice::hexagonal()).unwrap();
        let b = belts(&hex);
        assert_eq!(b.len(), 1);
        assert_eq!(b[0].facets.len(), 6);
    }

    #[test]
    fn minkowski_on_cube_and_tetrahedron() {
        let cube = dirichlet_cell(&Lattice::cubic(3)).unwrap();
        assert!(check_minkowski(&cube).passed());
        let tet = Parallelohedron::from_vertices(&[
            Vector::from_column_slice(&[1.0, 1.0, 1.0]),
            Vector::from_column_slice(&[1.0, -1.0, -1.0]),
            Vector::from_column_slice(&[-1.0, 1.0, -1.0]),
            Vector::from_column_slice(&[-1.0, -1.0, 1.0]),
        ])
        .unwrap();
        let rep = check_minkowski(&tet);
        assert!(!rep.body_symmetric);
    }

    #[test]
    fn venkov_delone_vacuous_in_plane() {
        let hex = dirichlet_cell(&Lattice::hexagonal()).unwrap();
        let rep = check_venkov_delone(&hex);
        assert!(rep.vacuous && rep.passed());
    }

    #[test]
    fn triangular_prism_fails_venkov_delone() {
        let h = 3f64.sqrt() / 2.0;
        let mut pts = Vec::new();
        for z in [0.0, 1.0] {
            for (x, y) in [(0.0, 0.0), (1.0, 0.0), (0.5, h)] {
                pts.push(Vector::from_column_slice(&[x, y, z]));
            }
        }
        let prism = Parallelohedron::from_vertices(&pts).unwrap();
        let rep = check_venkov_delone(&prism);
        assert!(!rep.passed());
        assert!(rep.failures().any(|(_, s)| *s == Shadow::Other(3)));
    }
}
