//! Dimension-generic convex geometry kernel.
//!
//! Polytopes are held in both vertex and half-space form. Every facet stores
//! the indices of the vertices lying on it, so incidence questions reduce to
//! set operations on vertex indices.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tol::{eps_geo, quantize, EPS_LINALG};

/// A point or direction in `E^d`.
pub type Vector = DVector<f64>;
/// Dense real matrix.
pub type Matrix = DMatrix<f64>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeomError {
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("half-space intersection is unbounded")]
    Unbounded,
    #[error("half-space intersection is empty")]
    Empty,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("affine map is singular (|det| = {0:e})")]
    SingularMap(f64),
}

/// Hash key of a point on the quantization grid.
pub type PointKey = Vec<i64>;

pub fn point_key(p: &Vector) -> PointKey {
    p.iter().map(|&x| quantize(x)).collect()
}

/// Order-independent key of a finite point set.
pub fn point_set_key<'a>(points: impl IntoIterator<Item = &'a Vector>) -> Vec<PointKey> {
    let mut keys: Vec<PointKey> = points.into_iter().map(point_key).collect();
    keys.sort();
    keys.dedup();
    keys
}

/// Length scale used to turn relative tolerances into absolute ones.
pub fn coordinate_scale<'a>(points: impl IntoIterator<Item = &'a Vector>) -> f64 {
    points
        .into_iter()
        .flat_map(|p| p.iter().map(|x| x.abs()))
        .fold(1.0, f64::max)
}

/// Arithmetic mean of a non-empty point list.
pub fn mean_point<'a>(points: impl IntoIterator<Item = &'a Vector>) -> Vector {
    let mut iter = points.into_iter();
    let first = iter.next().expect("mean of empty point set").clone();
    let (sum, n) = iter.fold((first, 1usize), |(acc, n), p| (acc + p, n + 1));
    sum / n as f64
}

/// Dimension of the affine hull of `points`.
pub fn affine_rank(points: &[&Vector], tol: f64) -> usize {
    if points.len() < 2 {
        return 0;
    }
    let d = points[0].len();
    let mut m = Matrix::zeros(points.len() - 1, d);
    for (i, p) in points[1..].iter().enumerate() {
        m.set_row(i, &(*p - points[0]).transpose());
    }
    matrix_rank(&m, tol)
}

/// Numerical rank by singular values against an absolute cutoff.
pub fn matrix_rank(m: &Matrix, tol: f64) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .filter(|&&s| s > tol)
        .count()
}

/// Orthonormal basis (as columns) of the orthogonal complement of `span(vectors)`
/// in `E^d`. `vectors` must be linearly independent.
pub fn orthonormal_complement(vectors: &[Vector], d: usize) -> Result<Matrix, GeomError> {
    if vectors.is_empty() {
        return Ok(Matrix::identity(d, d));
    }
    let k = vectors.len();
    if k > d {
        return Err(GeomError::DegenerateInput(format!(
            "{k} vectors cannot be independent in dimension {d}"
        )));
    }
    let mut gram = Matrix::zeros(d, d);
    for v in vectors {
        if v.len() != d {
            return Err(GeomError::DimensionMismatch { expected: d, got: v.len() });
        }
        gram += v * v.transpose();
    }
    // eigenvectors of sum v vᵀ with zero eigenvalue span the complement
    let eig = SymmetricEigen::new(gram);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let top = eig.eigenvalues[order[d - 1]].max(1.0);
    let small = eig.eigenvalues[order[d - k]];
    if small <= 1e-20 * top.max(1.0) || small.sqrt() <= EPS_LINALG * top.sqrt() {
        return Err(GeomError::DegenerateInput("subspace vectors are linearly dependent".into()));
    }
    let mut basis = Matrix::zeros(d, d - k);
    for (col, &idx) in order[..d - k].iter().enumerate() {
        let mut v = eig.eigenvectors.column(idx).into_owned();
        canonical_sign(&mut v);
        basis.set_column(col, &v);
    }
    Ok(basis)
}

/// Flips `v` so that its first non-negligible entry is positive.
fn canonical_sign(v: &mut Vector) {
    if let Some(x) = v.iter().find(|x| x.abs() > 1e-12) {
        if *x < 0.0 {
            v.neg_mut();
        }
    }
}

/// Oriented hyperplane `{x : normal·x = offset}`; the cell side is `normal·x <= offset`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperplane {
    pub normal: Vector,
    pub offset: f64,
}

impl Hyperplane {
    /// Builds a plane from any non-zero normal, rescaling to unit length.
    pub fn new(normal: Vector, offset: f64) -> Result<Self, GeomError> {
        let len = normal.norm();
        if !(len > EPS_LINALG) || !len.is_finite() || !offset.is_finite() {
            return Err(GeomError::DegenerateInput("hyperplane normal is zero".into()));
        }
        Ok(Self { normal: normal / len, offset: offset / len })
    }

    /// `normal·x − offset`: negative inside, positive outside.
    #[inline]
    pub fn signed_distance(&self, x: &Vector) -> f64 {
        self.normal.dot(x) - self.offset
    }

    pub fn flipped(&self) -> Self {
        Self { normal: -&self.normal, offset: -self.offset }
    }

    pub fn translated(&self, shift: &Vector) -> Self {
        Self { normal: self.normal.clone(), offset: self.offset + self.normal.dot(shift) }
    }

    pub fn dim(&self) -> usize {
        self.normal.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Facet {
    pub plane: Hyperplane,
    /// Indices into the owning polytope's vertex list.
    pub vertices: Vec<usize>,
}

/// Bounded convex polytope in dual representation. Facet normals point outward.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polytope {
    pub dim: usize,
    pub vertices: Vec<Vector>,
    pub facets: Vec<Facet>,
}

impl Polytope {
    /// Convex hull of a point set; see [`convex_hull`].
    pub fn from_points(points: &[Vector]) -> Result<Self, GeomError> {
        convex_hull(points)
    }

    pub fn centroid(&self) -> Vector {
        mean_point(&self.vertices)
    }

    pub fn scale(&self) -> f64 {
        coordinate_scale(&self.vertices)
    }

    pub fn diameter(&self) -> f64 {
        let mut best: f64 = 0.0;
        for (i, a) in self.vertices.iter().enumerate() {
            for b in &self.vertices[i + 1..] {
                best = best.max((a - b).norm());
            }
        }
        best
    }

    pub fn facet_vertices(&self, facet: usize) -> Vec<&Vector> {
        self.facets[facet].vertices.iter().map(|&v| &self.vertices[v]).collect()
    }

    pub fn facet_barycenter(&self, facet: usize) -> Vector {
        mean_point(self.facet_vertices(facet))
    }

    /// Largest signed distance of `x` to the facet planes (≤ 0 inside).
    pub fn max_violation(&self, x: &Vector) -> f64 {
        self.facets
            .iter()
            .map(|f| f.plane.signed_distance(x))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn contains(&self, x: &Vector, tol: f64) -> bool {
        self.max_violation(x) <= tol
    }

    pub fn translated(&self, shift: &Vector) -> Self {
        Self {
            dim: self.dim,
            vertices: self.vertices.iter().map(|v| v + shift).collect(),
            facets: self
                .facets
                .iter()
                .map(|f| Facet { plane: f.plane.translated(shift), vertices: f.vertices.clone() })
                .collect(),
        }
    }

    /// Image under a nonsingular affine map; combinatorics are preserved.
    pub fn transformed(&self, map: &AffineMap) -> Result<Self, GeomError> {
        let inv_t = map
            .linear
            .clone()
            .try_inverse()
            .ok_or_else(|| GeomError::SingularMap(map.linear.determinant()))?
            .transpose();
        let facets = self
            .facets
            .iter()
            .map(|f| {
                let n = &inv_t * &f.plane.normal;
                Hyperplane::new(n.clone(), f.plane.offset + n.dot(&map.shift))
                    .map(|plane| Facet { plane, vertices: f.vertices.clone() })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            dim: self.dim,
            vertices: self.vertices.iter().map(|v| map.apply(v)).collect(),
            facets,
        })
    }

    /// Pairs of facets whose common vertices span a (d−2)-dimensional face,
    /// together with those common vertex indices.
    pub fn ridges(&self) -> Vec<(usize, usize, Vec<usize>)> {
        let tol = eps_geo() * self.scale();
        let mut out = Vec::new();
        for i in 0..self.facets.len() {
            for j in i + 1..self.facets.len() {
                let common: Vec<usize> = self.facets[i]
                    .vertices
                    .iter()
                    .copied()
                    .filter(|v| self.facets[j].vertices.contains(v))
                    .collect();
                if common.is_empty() {
                    continue;
                }
                let pts: Vec<&Vector> = common.iter().map(|&v| &self.vertices[v]).collect();
                if self.dim >= 2 && affine_rank(&pts, tol) == self.dim - 2 {
                    out.push((i, j, common));
                }
            }
        }
        out
    }

    /// Checks the dual-representation invariants; returns a description of the first failure.
    pub fn validate(&self) -> Result<(), String> {
        let tol = eps_geo() * self.scale();
        for (fi, f) in self.facets.iter().enumerate() {
            if (f.plane.normal.norm() - 1.0).abs() > EPS_LINALG {
                return Err(format!("facet {fi} normal not unit"));
            }
            for (vi, v) in self.vertices.iter().enumerate() {
                let dist = f.plane.signed_distance(v);
                if dist > tol {
                    return Err(format!("vertex {vi} violates facet {fi} by {dist:e}"));
                }
                if f.vertices.contains(&vi) != (dist.abs() <= tol) {
                    return Err(format!("incidence of vertex {vi} and facet {fi} inconsistent"));
                }
            }
            let pts = self.facet_vertices(fi);
            if affine_rank(&pts, tol) + 1 != self.dim {
                return Err(format!("facet {fi} is not (d-1)-dimensional"));
            }
        }
        Ok(())
    }
}

/// `x ↦ linear·x + shift`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineMap {
    pub linear: Matrix,
    pub shift: Vector,
}

impl AffineMap {
    pub fn new(linear: Matrix, shift: Vector) -> Result<Self, GeomError> {
        if !linear.is_square() || linear.nrows() != shift.len() {
            return Err(GeomError::DimensionMismatch { expected: linear.nrows(), got: shift.len() });
        }
        Ok(Self { linear, shift })
    }

    pub fn linear(linear: Matrix) -> Self {
        let d = linear.nrows();
        Self { linear, shift: Vector::zeros(d) }
    }

    pub fn identity(d: usize) -> Self {
        Self::linear(Matrix::identity(d, d))
    }

    pub fn dim(&self) -> usize {
        self.shift.len()
    }

    pub fn determinant(&self) -> f64 {
        self.linear.determinant()
    }

    pub fn apply(&self, x: &Vector) -> Vector {
        &self.linear * x + &self.shift
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &AffineMap) -> AffineMap {
        AffineMap {
            linear: &self.linear * &inner.linear,
            shift: &self.linear * &inner.shift + &self.shift,
        }
    }

    pub fn inverse(&self) -> Result<AffineMap, GeomError> {
        let det = self.determinant();
        if det.abs() <= EPS_LINALG {
            return Err(GeomError::SingularMap(det));
        }
        let inv = self.linear.clone().try_inverse().ok_or(GeomError::SingularMap(det))?;
        let shift = -(&inv * &self.shift);
        Ok(AffineMap { linear: inv, shift })
    }
}

/// Convex hull of at least `d + 1` affinely independent points.
///
/// Facets are found by testing hyperplanes through `d`-subsets of the input,
/// which is adequate for the small vertex counts of lattice cells.
pub fn convex_hull(points: &[Vector]) -> Result<Polytope, GeomError> {
    let d = points.first().map(|p| p.len()).ok_or_else(|| {
        GeomError::DegenerateInput("no points".into())
    })?;
    if d == 0 {
        return Err(GeomError::DegenerateInput("zero-dimensional points".into()));
    }
    if let Some(p) = points.iter().find(|p| p.len() != d) {
        return Err(GeomError::DimensionMismatch { expected: d, got: p.len() });
    }
    let scale = coordinate_scale(points);
    let tol = eps_geo() * scale;

    // collapse duplicates
    let mut seen = HashMap::new();
    let mut pts: Vec<Vector> = Vec::new();
    for p in points {
        seen.entry(point_key(p)).or_insert_with(|| {
            pts.push(p.clone());
            pts.len() - 1
        });
    }
    let refs: Vec<&Vector> = pts.iter().collect();
    let rank = affine_rank(&refs, tol);
    if rank < d {
        return Err(GeomError::DegenerateInput(format!(
            "points span an affine subspace of dimension {rank} < {d}"
        )));
    }

    let mut planes: Vec<Hyperplane> = Vec::new();
    let mut plane_keys = HashMap::new();
    for subset in Combinations::new(pts.len(), d) {
        let Some(mut plane) = plane_through(&subset.iter().map(|&i| &pts[i]).collect::<Vec<_>>(), tol)
        else {
            continue;
        };
        let mut above = false;
        let mut below = false;
        for p in &pts {
            let s = plane.signed_distance(p);
            above |= s > tol;
            below |= s < -tol;
            if above && below {
                break;
            }
        }
        if above && below {
            continue;
        }
        if above {
            plane = plane.flipped();
        }
        let key = plane_key(&plane);
        if let std::collections::hash_map::Entry::Vacant(e) = plane_keys.entry(key) {
            e.insert(planes.len());
            planes.push(plane);
        }
    }
    assemble(d, pts, planes, tol)
}

/// Unit-normal hyperplane through exactly `d` points, if they are affinely independent.
fn plane_through(points: &[&Vector], tol: f64) -> Option<Hyperplane> {
    let d = points[0].len();
    let mut m = Matrix::zeros(d, d);
    for (i, p) in points[1..].iter().enumerate() {
        m.set_row(i, &(*p - points[0]).transpose());
    }
    let svd = m.svd(false, true);
    let v_t = svd.v_t?;
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b]));
    // the padded zero row gives one zero singular value; the next must be non-zero
    if d > 1 && svd.singular_values[order[1]] <= tol {
        return None;
    }
    let normal = v_t.row(order[0]).transpose().into_owned();
    let offset = normal.dot(points[0]);
    Hyperplane::new(normal, offset).ok()
}

fn plane_key(plane: &Hyperplane) -> Vec<i64> {
    let mut key = point_key(&plane.normal);
    key.push(quantize(plane.offset));
    key
}

/// Given candidate supporting planes, keeps the true facets and the true
/// vertices and wires up incidences.
fn assemble(
    d: usize,
    points: Vec<Vector>,
    planes: Vec<Hyperplane>,
    tol: f64,
) -> Result<Polytope, GeomError> {
    let on_plane: Vec<Vec<usize>> = planes
        .iter()
        .map(|pl| {
            (0..points.len())
                .filter(|&i| pl.signed_distance(&points[i]).abs() <= tol)
                .collect()
        })
        .collect();
    let facet_ids: Vec<usize> = (0..planes.len())
        .filter(|&f| {
            let pts: Vec<&Vector> = on_plane[f].iter().map(|&i| &points[i]).collect();
            pts.len() >= d && affine_rank(&pts, tol) == d - 1
        })
        .collect();
    // a point is a vertex iff the normals of its facets span E^d
    let mut vertex_index = vec![usize::MAX; points.len()];
    let mut vertices = Vec::new();
    for (i, p) in points.iter().enumerate() {
        let normals: Vec<&Vector> = facet_ids
            .iter()
            .filter(|&&f| on_plane[f].contains(&i))
            .map(|&f| &planes[f].normal)
            .collect();
        if normals.len() < d {
            continue;
        }
        let mut m = Matrix::zeros(normals.len(), d);
        for (r, n) in normals.iter().enumerate() {
            m.set_row(r, &n.transpose());
        }
        if matrix_rank(&m, 1e-9) == d {
            vertex_index[i] = vertices.len();
            vertices.push(p.clone());
        }
    }
    if vertices.len() < d + 1 {
        return Err(GeomError::DegenerateInput("fewer than d+1 vertices".into()));
    }
    let facets = facet_ids
        .iter()
        .map(|&f| Facet {
            plane: planes[f].clone(),
            vertices: on_plane[f]
                .iter()
                .filter_map(|&i| (vertex_index[i] != usize::MAX).then_some(vertex_index[i]))
                .collect(),
        })
        .collect();
    Ok(Polytope { dim: d, vertices, facets })
}

/// Intersection of the half-spaces `normal·x <= offset`.
///
/// `interior_point` must lie strictly inside every half-space. Redundant
/// planes are dropped; vertices are enumerated from `d`-subsets of planes.
pub fn halfspace_intersection(
    planes: &[Hyperplane],
    interior_point: &Vector,
) -> Result<Polytope, GeomError> {
    let d = interior_point.len();
    if d == 0 {
        return Err(GeomError::DegenerateInput("zero-dimensional space".into()));
    }
    if let Some(p) = planes.iter().find(|p| p.dim() != d) {
        return Err(GeomError::DimensionMismatch { expected: d, got: p.dim() });
    }
    let scale = planes.iter().map(|p| p.offset.abs()).fold(1.0, f64::max)
        .max(coordinate_scale([interior_point]));
    let tol = eps_geo() * scale;

    // work relative to the interior point
    let local: Vec<Hyperplane> = planes
        .iter()
        .map(|p| Hyperplane { normal: p.normal.clone(), offset: p.offset - p.normal.dot(interior_point) })
        .collect();
    if local.iter().any(|p| p.offset <= tol) {
        return match crate::lp::max_inscribed_slack(planes) {
            Some(slack) if slack > tol => Err(GeomError::DegenerateInput(
                "interior point is not strictly inside all half-spaces".into(),
            )),
            Some(slack) if slack >= -tol => Err(GeomError::DegenerateInput(
                "intersection has empty interior".into(),
            )),
            _ => Err(GeomError::Empty),
        };
    }

    // bounding box used to detect unboundedness
    let big = 1e6 * scale;
    let mut all = local.clone();
    for axis in 0..d {
        for sign in [1.0, -1.0] {
            let mut n = Vector::zeros(d);
            n[axis] = sign;
            all.push(Hyperplane { normal: n, offset: big });
        }
    }
    let n_real = local.len();

    let mut found: HashMap<PointKey, Vector> = HashMap::new();
    let mut order: Vec<PointKey> = Vec::new();
    let mut system = Matrix::zeros(d, d);
    let mut rhs = Vector::zeros(d);
    for subset in Combinations::new(all.len(), d) {
        for (r, &i) in subset.iter().enumerate() {
            system.set_row(r, &all[i].normal.transpose());
            rhs[r] = all[i].offset;
        }
        let lu = system.clone().lu();
        let det = lu.determinant();
        if det.abs() <= 1e-10 {
            continue;
        }
        let Some(x) = lu.solve(&rhs) else { continue };
        let ok = all.iter().all(|p| p.signed_distance(&x) <= tol * (1.0 + x.amax() / scale));
        if ok {
            let key = point_key(&x);
            if let std::collections::hash_map::Entry::Vacant(e) = found.entry(key.clone()) {
                order.push(key);
                e.insert(x);
            }
        }
    }
    let points: Vec<Vector> = order.into_iter().map(|k| found.remove(&k).unwrap()).collect();
    if points.len() < d + 1 {
        return Err(GeomError::Empty);
    }
    if points
        .iter()
        .any(|x| all[n_real..].iter().any(|p| p.signed_distance(x).abs() <= 1e-6 * big))
    {
        return Err(GeomError::Unbounded);
    }
    let point_tol = tol * (1.0 + coordinate_scale(&points) / scale);
    let mut keys = HashMap::new();
    let mut unique_planes = Vec::new();
    for p in local {
        if let std::collections::hash_map::Entry::Vacant(e) = keys.entry(plane_key(&p)) {
            e.insert(());
            unique_planes.push(p);
        }
    }
    let poly = assemble(d, points, unique_planes, point_tol)?;
    Ok(poly.translated(interior_point))
}

/// Orthogonal projection of `points` onto the orthogonal complement of
/// `span(direction_subspace)`, expressed in an orthonormal basis of that complement.
pub fn project_out(points: &[Vector], direction_subspace: &[Vector]) -> Result<Vec<Vector>, GeomError> {
    let d = match (points.first(), direction_subspace.first()) {
        (Some(p), _) => p.len(),
        (None, Some(v)) => v.len(),
        (None, None) => return Ok(Vec::new()),
    };
    let basis = orthonormal_complement(direction_subspace, d)?;
    points
        .iter()
        .map(|p| {
            if p.len() != d {
                return Err(GeomError::DimensionMismatch { expected: d, got: p.len() });
            }
            Ok(basis.tr_mul(p))
        })
        .collect()
}

/// Lexicographic iterator over `k`-subsets of `0..n`.
pub(crate) struct Combinations {
    n: usize,
    idx: Vec<usize>,
    done: bool,
}

impl Combinations {
    pub(crate) fn new(n: usize, k: usize) -> Self {
        Self { n, idx: (0..k).collect(), done: k > n }
    }
}

impl Iterator for Combinations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let out = self.idx.clone();
        let k = self.idx.len();
        let mut i = k;
        loop {
            if i == 0 {
                self.done = true;
                break;
            }
            i -= 1;
            if self.idx[i] < self.n - k + i {
                self.idx[i] += 1;
                for j in i + 1..k {
                    self.idx[j] = self.idx[j - 1] + 1;
                }
                break;
            }
        }
        Some(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(c: &[f64]) -> Vector {
        Vector::from_column_slice(c)
    }

    fn cube_corners(d: usize, half: f64) -> Vec<Vector> {
        (0..1usize << d)
            .map(|m| Vector::from_iterator(d, (0..d).map(|i| if m >> i & 1 == 1 { half } else { -half })))
            .collect()
    }

    fn axis_planes(d: usize, half: f64) -> Vec<Hyperplane> {
        let mut out = Vec::new();
        for i in 0..d {
            for s in [1.0, -1.0] {
                let mut n = Vector::zeros(d);
                n[i] = s;
                out.push(Hyperplane::new(n, half).unwrap());
            }
        }
        out
    }

    #[test]
    fn combinations_count() {
        assert_eq!(Combinations::new(5, 2).count(), 10);
        assert_eq!(Combinations::new(3, 3).count(), 1);
        assert_eq!(Combinations::new(2, 3).count(), 0);
    }

    #[test]
    fn hull_of_square_corners() {
        let pts = vec![v(&[0., 0.]), v(&[1., 0.]), v(&[1., 1.]), v(&[0., 1.])];
        let p = convex_hull(&pts).unwrap();
        assert_eq!(p.vertices.len(), 4);
        assert_eq!(p.facets.len(), 4);
        p.validate().unwrap();
    }

    #[test]
    fn hull_drops_interior_and_edge_points() {
        let mut pts = cube_corners(2, 1.0);
        pts.push(v(&[0.0, 0.0]));
        pts.push(v(&[1.0, 0.0]));
        let p = convex_hull(&pts).unwrap();
        assert_eq!(p.vertices.len(), 4);
    }

    #[test]
    fn hull_of_cube_has_axis_normals() {
        let p = convex_hull(&cube_corners(3, 0.5)).unwrap();
        assert_eq!(p.vertices.len(), 8);
        assert_eq!(p.facets.len(), 6);
        for f in &p.facets {
            assert_eq!(f.vertices.len(), 4);
            assert_eq!(f.plane.normal.iter().filter(|x| (x.abs() - 1.0).abs() < 1e-12).count(), 1);
            assert!((f.plane.offset - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn hull_of_collinear_points_is_degenerate() {
        let pts = vec![v(&[0., 0.]), v(&[1., 1.]), v(&[2., 2.])];
        assert!(matches!(convex_hull(&pts), Err(GeomError::DegenerateInput(_))));
    }

    #[test]
    fn halfspaces_give_unit_square_and_cube() {
        let sq = halfspace_intersection(&axis_planes(2, 0.5), &Vector::zeros(2)).unwrap();
        assert_eq!(sq.vertices.len(), 4);
        assert_eq!(sq.facets.len(), 4);
        sq.validate().unwrap();
        let cube = halfspace_intersection(&axis_planes(3, 0.5), &Vector::zeros(3)).unwrap();
        assert_eq!(cube.vertices.len(), 8);
        assert_eq!(cube.facets.len(), 6);
        for x in &cube.vertices {
            assert!(x.iter().all(|c| (c.abs() - 0.5).abs() < 1e-12));
        }
    }

    #[test]
    fn two_planes_are_unbounded() {
        let planes = &axis_planes(2, 0.5)[..2];
        assert_eq!(halfspace_intersection(planes, &Vector::zeros(2)), Err(GeomError::Unbounded));
    }

    #[test]
    fn infeasible_planes_are_empty() {
        let planes = vec![
            Hyperplane::new(v(&[1.0, 0.0]), -1.0).unwrap(),
            Hyperplane::new(v(&[-1.0, 0.0]), -1.0).unwrap(),
            Hyperplane::new(v(&[0.0, 1.0]), 1.0).unwrap(),
            Hyperplane::new(v(&[0.0, -1.0]), 1.0).unwrap(),
        ];
        assert_eq!(halfspace_intersection(&planes, &Vector::zeros(2)), Err(GeomError::Empty));
    }

    #[test]
    fn redundant_planes_are_pruned() {
        let mut planes = axis_planes(2, 0.5);
        planes.push(Hyperplane::new(v(&[1.0, 1.0]), 5.0).unwrap());
        planes.push(Hyperplane::new(v(&[1.0, 0.0]), 0.5).unwrap());
        let sq = halfspace_intersection(&planes, &v(&[0.1, 0.0])).unwrap();
        assert_eq!(sq.facets.len(), 4);
    }

    #[test]
    fn dual_round_trip_on_hexagon() {
        let pts: Vec<Vector> = (0..6)
            .map(|k| {
                let a = std::f64::consts::PI / 3.0 * k as f64;
                v(&[a.cos(), a.sin()])
            })
            .collect();
        let hull = convex_hull(&pts).unwrap();
        let planes: Vec<Hyperplane> = hull.facets.iter().map(|f| f.plane.clone()).collect();
        let back = halfspace_intersection(&planes, &Vector::zeros(2)).unwrap();
        assert_eq!(point_set_key(&hull.vertices), point_set_key(&back.vertices));
    }

    #[test]
    fn project_cube_along_edge_gives_square() {
        let pts = project_out(&cube_corners(3, 0.5), &[v(&[0.0, 0.0, 1.0])]).unwrap();
        assert_eq!(pts[0].len(), 2);
        let hull = convex_hull(&pts).unwrap();
        assert_eq!(hull.vertices.len(), 4);
        assert_eq!(point_set_key(&pts).len(), 4);
    }

    #[test]
    fn project_along_full_basis_collapses_to_origin() {
        let basis = vec![v(&[1.0, 0.0]), v(&[1.0, 1.0])];
        let pts = project_out(&cube_corners(2, 1.0), &basis).unwrap();
        assert!(pts.iter().all(|p| p.is_empty()));
    }

    #[test]
    fn project_rejects_dependent_subspace() {
        let basis = vec![v(&[1.0, 0.0, 0.0]), v(&[2.0, 0.0, 0.0])];
        assert!(matches!(
            project_out(&cube_corners(3, 1.0), &basis),
            Err(GeomError::DegenerateInput(_))
        ));
    }

    #[test]
    fn affine_inverse_round_trip() {
        let m = AffineMap::new(
            Matrix::from_row_slice(2, 2, &[2.0, 1.0, 0.5, 3.0]),
            v(&[1.0, -2.0]),
        )
        .unwrap();
        let x = v(&[0.3, 0.7]);
        let back = m.inverse().unwrap().apply(&m.apply(&x));
        assert!((back - x).norm() < 1e-12);
        assert!(AffineMap::linear(Matrix::zeros(2, 2)).inverse().is_err());
    }

    #[test]
    fn transformed_polytope_keeps_invariants() {
        let sq = convex_hull(&cube_corners(2, 0.5)).unwrap();
        let shear = AffineMap::new(
            Matrix::from_row_slice(2, 2, &[1.0, 0.7, 0.0, 1.3]),
            v(&[0.2, 0.1]),
        )
        .unwrap();
        let img = sq.transformed(&shear).unwrap();
        img.validate().unwrap();
    }
}
