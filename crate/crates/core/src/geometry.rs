//! Dimension-generic affine geometry.
//!
//! Everything here works on small dense vectors (`d ≤ 16`). Rank decisions go
//! through one routine, a column-pivoted modified Gram-Schmidt whose cut-off is
//! `eps_geom` relative to the largest input norm (never below `eps_geom`
//! absolute).

use std::fmt;
use std::ops::Index;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_DIM: usize = 2;
pub const MAX_DIM: usize = 16;

/// Tolerance policy shared by the geometric decisions and by the test suite.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    /// Rank, side and membership decisions.
    pub eps_geom: f64,
    /// Property assertions.
    pub eps_test: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            eps_geom: 1e-9,
            eps_test: 1e-8,
        }
    }
}

impl Tolerance {
    pub fn new(eps_geom: f64, eps_test: f64) -> Result<Self> {
        if !(eps_geom > 0.0 && eps_geom < 1e-3) {
            return Err(Error::InvalidTolerance(format!(
                "eps_geom must lie in (0, 1e-3), got {eps_geom}"
            )));
        }
        if !(eps_test > 0.0 && eps_test.is_finite()) {
            return Err(Error::InvalidTolerance(format!(
                "eps_test must be positive, got {eps_test}"
            )));
        }
        Ok(Self { eps_geom, eps_test })
    }
}

pub fn check_dim(d: usize) -> Result<()> {
    if (MIN_DIM..=MAX_DIM).contains(&d) {
        Ok(())
    } else {
        Err(Error::UnsupportedDimension(d))
    }
}

/// A point (or vector) of `ℝ^d`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        check_dim(coords.len())?;
        if let Some(i) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self(coords))
    }

    /// Wraps coordinates produced by internal arithmetic on valid points.
    pub(crate) fn raw(coords: Vec<f64>) -> Self {
        Self(coords)
    }

    pub fn zeros(d: usize) -> Self {
        Self(vec![0.0; d])
    }

    /// Unit point `e_k`.
    pub fn unit(d: usize, k: usize) -> Self {
        let mut c = vec![0.0; d];
        c[k] = 1.0;
        Self(c)
    }

    /// The all-ones point `1_d`.
    pub fn ones(d: usize) -> Self {
        Self(vec![1.0; d])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.0
    }

    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn dot(&self, other: &Point) -> f64 {
        dot(&self.0, &other.0)
    }

    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }

    pub fn add(&self, other: &Point) -> Point {
        Point(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &Point) -> Point {
        Point(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn scale(&self, factor: f64) -> Point {
        Point(self.0.iter().map(|a| a * factor).collect())
    }

    /// `self + factor * other`
    pub fn add_scaled(&self, factor: f64, other: &Point) -> Point {
        Point(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| a + factor * b)
                .collect(),
        )
    }

    pub fn dist(&self, other: &Point) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    pub fn max_abs_diff(&self, other: &Point) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl Index<usize> for Point {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// An affine subspace `origin + span(basis)` with an orthonormal basis.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineSubspace {
    origin: Point,
    basis: Vec<Point>,
}

impl AffineSubspace {
    /// Builds a subspace from an origin and arbitrary spanning directions.
    pub fn from_directions(origin: Point, directions: &[Point], tol: Tolerance) -> Result<Self> {
        let d = origin.dim();
        for dir in directions {
            same_dim(d, dir.dim())?;
        }
        let rows: Vec<Vec<f64>> = directions.iter().map(|p| p.0.clone()).collect();
        let basis = orthonormal_span(rows, tol.eps_geom)
            .into_iter()
            .map(Point)
            .collect();
        Ok(Self { origin, basis })
    }

    pub fn point(origin: Point) -> Self {
        Self {
            origin,
            basis: Vec::new(),
        }
    }

    pub fn origin(&self) -> &Point {
        &self.origin
    }

    pub fn basis(&self) -> &[Point] {
        &self.basis
    }

    pub fn ambient_dim(&self) -> usize {
        self.origin.dim()
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn contains(&self, v: &Point, tol: Tolerance) -> bool {
        project_affine(v, self).dist(v) <= tol.eps_geom * v.norm().max(1.0)
    }

    /// Orthonormal basis of the orthogonal complement of the direction space.
    pub fn normals(&self) -> Vec<Point> {
        let rows: Vec<Vec<f64>> = self.basis.iter().map(|b| b.0.clone()).collect();
        orthogonal_complement(&rows, self.ambient_dim())
            .into_iter()
            .map(Point)
            .collect()
    }
}

/// Result of intersecting two affine subspaces.
#[derive(Clone, Debug, PartialEq)]
pub enum Intersection {
    Empty,
    Point(Point),
    Subspace(AffineSubspace),
}

impl Intersection {
    pub fn dim(&self) -> Option<usize> {
        match self {
            Intersection::Empty => None,
            Intersection::Point(_) => Some(0),
            Intersection::Subspace(s) => Some(s.dim()),
        }
    }
}

/// Affine hull of a nonempty list of points; origin is the first point.
pub fn affine_hull(points: &[Point], tol: Tolerance) -> Result<AffineSubspace> {
    let first = points.first().ok_or(Error::EmptyPointList)?;
    let d = first.dim();
    let mut diffs = Vec::with_capacity(points.len().saturating_sub(1));
    for p in &points[1..] {
        same_dim(d, p.dim())?;
        diffs.push(p.sub(first));
    }
    AffineSubspace::from_directions(first.clone(), &diffs, tol)
}

/// Intersection of two affine subspaces, classified by dimension.
pub fn intersect(a: &AffineSubspace, b: &AffineSubspace, tol: Tolerance) -> Result<Intersection> {
    let d = a.ambient_dim();
    same_dim(d, b.ambient_dim())?;

    // Each subspace becomes the constraint set {x : <n, x> = <n, origin>}.
    let mut rows = Vec::new();
    for s in [a, b] {
        for n in s.normals() {
            let offset = n.dot(&s.origin);
            rows.push((n.0, offset));
        }
    }
    let Some((q, x0)) = solve_min_norm(&rows, d, tol.eps_geom) else {
        return Ok(Intersection::Empty);
    };
    let x0 = Point(x0);
    if q.len() == d {
        return Ok(Intersection::Point(x0));
    }
    let basis = orthogonal_complement(&q, d).into_iter().map(Point).collect();
    Ok(Intersection::Subspace(AffineSubspace { origin: x0, basis }))
}

/// Orthogonal projection of `v` onto `subspace`.
pub fn project_affine(v: &Point, subspace: &AffineSubspace) -> Point {
    let rel = v.sub(&subspace.origin);
    let mut out = subspace.origin.clone();
    for b in &subspace.basis {
        out = out.add_scaled(rel.dot(b), b);
    }
    out
}

/// Affine coordinates of `v` with respect to `generators`: coefficients summing
/// to one that reproduce `v`. Minimum-norm when the generators are affinely
/// dependent.
pub fn affine_coords(v: &Point, generators: &[Point], tol: Tolerance) -> Result<Vec<f64>> {
    if generators.is_empty() {
        return Err(Error::EmptyPointList);
    }
    let d = v.dim();
    for g in generators {
        same_dim(d, g.dim())?;
    }
    let m = generators.len();
    let mut rows: Vec<(Vec<f64>, f64)> = (0..d)
        .map(|i| (generators.iter().map(|g| g[i]).collect(), v[i]))
        .collect();
    rows.push((vec![1.0; m], 1.0));

    let lambdas = match solve_min_norm(&rows, m, tol.eps_geom) {
        Some((_, x)) => x,
        None => least_squares_fallback(&rows, m, tol.eps_geom),
    };
    let residual = affine_residual(v, generators, &lambdas);
    if residual > tol.eps_geom * v.norm().max(1.0) {
        return Err(Error::NotInHull { residual });
    }
    Ok(lambdas)
}

fn affine_residual(v: &Point, generators: &[Point], lambdas: &[f64]) -> f64 {
    let mut recon = vec![0.0; v.dim()];
    for (g, l) in generators.iter().zip(lambdas) {
        axpy(&mut recon, *l, &g.0);
    }
    let sum_err = (lambdas.iter().sum::<f64>() - 1.0).abs();
    norm(&recon.iter().zip(&v.0).map(|(a, b)| a - b).collect::<Vec<_>>()).max(sum_err)
}

// Inconsistent systems still need a candidate so the residual can be reported.
fn least_squares_fallback(rows: &[(Vec<f64>, f64)], m: usize, eps: f64) -> Vec<f64> {
    let (q, g) = reduce_rows(rows, eps);
    let mut x = vec![0.0; m];
    for (qi, gi) in q.iter().zip(&g) {
        axpy(&mut x, *gi, qi);
    }
    x
}

fn same_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(y: &mut [f64], alpha: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn rank_threshold<'a>(vectors: impl Iterator<Item = &'a Vec<f64>>, eps: f64) -> f64 {
    let largest = vectors.map(|v| norm(v)).fold(0.0, f64::max);
    eps * largest.max(1.0)
}

/// Column-pivoted modified Gram-Schmidt. Returns an orthonormal basis of the
/// span of `vectors`, dropping directions whose residual falls below the rank
/// threshold.
fn orthonormal_span(vectors: Vec<Vec<f64>>, eps: f64) -> Vec<Vec<f64>> {
    let threshold = rank_threshold(vectors.iter(), eps);
    let mut pending = vectors;
    let mut basis: Vec<Vec<f64>> = Vec::new();
    while !pending.is_empty() {
        let (idx, best) = pending
            .iter()
            .enumerate()
            .map(|(i, v)| (i, norm(v)))
            .fold((0, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if best <= threshold {
            break;
        }
        let mut b = pending.swap_remove(idx);
        // second pass keeps the basis orthogonal to working precision
        for q in &basis {
            let c = dot(&b, q);
            axpy(&mut b, -c, q);
        }
        let nb = norm(&b);
        if nb <= threshold {
            continue;
        }
        b.iter_mut().for_each(|x| *x /= nb);
        for v in pending.iter_mut() {
            let c = dot(v, &b);
            axpy(v, -c, &b);
        }
        basis.push(b);
    }
    basis
}

/// Orthonormal basis of the complement of `span(basis)` in `ℝ^d`; `basis` must
/// be orthonormal.
fn orthogonal_complement(basis: &[Vec<f64>], d: usize) -> Vec<Vec<f64>> {
    let want = d.saturating_sub(basis.len());
    let mut pending: Vec<Vec<f64>> = (0..d)
        .map(|i| {
            let mut e = vec![0.0; d];
            e[i] = 1.0;
            for _ in 0..2 {
                for q in basis {
                    let c = dot(&e, q);
                    axpy(&mut e, -c, q);
                }
            }
            e
        })
        .collect();
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(want);
    while out.len() < want && !pending.is_empty() {
        let idx = pending
            .iter()
            .enumerate()
            .map(|(i, v)| (i, norm(v)))
            .fold((0, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc })
            .0;
        let mut b = pending.swap_remove(idx);
        for q in basis.iter().chain(out.iter()) {
            let c = dot(&b, q);
            axpy(&mut b, -c, q);
        }
        let nb = norm(&b);
        b.iter_mut().for_each(|x| *x /= nb);
        for v in pending.iter_mut() {
            let c = dot(v, &b);
            axpy(v, -c, &b);
        }
        out.push(b);
    }
    out
}

/// Row-pivoted orthonormalisation of the augmented system `[rows | rhs]`.
/// Returns orthonormal rows `Q` and transformed right-hand side `g` such that
/// `{x : Qx = g}` is the solution set of the independent part of the system.
fn reduce_rows(rows: &[(Vec<f64>, f64)], eps: f64) -> (Vec<Vec<f64>>, Vec<f64>) {
    let threshold = rank_threshold(rows.iter().map(|r| &r.0), eps);
    let mut pending: Vec<(Vec<f64>, f64)> = rows.to_vec();
    let mut q: Vec<Vec<f64>> = Vec::new();
    let mut g: Vec<f64> = Vec::new();
    while !pending.is_empty() {
        let (idx, best) = pending
            .iter()
            .enumerate()
            .map(|(i, r)| (i, norm(&r.0)))
            .fold((0, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if best <= threshold {
            break;
        }
        let (mut row, mut rhs) = pending.swap_remove(idx);
        for (qi, gi) in q.iter().zip(&g) {
            let c = dot(&row, qi);
            axpy(&mut row, -c, qi);
            rhs -= c * gi;
        }
        let nr = norm(&row);
        if nr <= threshold {
            continue;
        }
        row.iter_mut().for_each(|x| *x /= nr);
        rhs /= nr;
        for (v, r) in pending.iter_mut() {
            let c = dot(v, &row);
            axpy(v, -c, &row);
            *r -= c * rhs;
        }
        q.push(row);
        g.push(rhs);
    }
    (q, g)
}

/// Minimum-norm solution of the linear system given as `(row, rhs)` pairs, or
/// `None` when the system is inconsistent at `eps`.
fn solve_min_norm(rows: &[(Vec<f64>, f64)], n: usize, eps: f64) -> Option<(Vec<Vec<f64>>, Vec<f64>)> {
    let (q, g) = reduce_rows(rows, eps);
    let mut x = vec![0.0; n];
    for (qi, gi) in q.iter().zip(&g) {
        axpy(&mut x, *gi, qi);
    }
    let consistent = rows.iter().all(|(row, rhs)| {
        let scale = norm(row).max(1.0) * norm(&x).max(1.0).max(rhs.abs());
        (dot(row, &x) - rhs).abs() <= eps * scale
    });
    consistent.then_some((q, x))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(c: &[f64]) -> Point {
        Point::new(c.to_vec()).unwrap()
    }

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    #[test]
    fn single_point_hull_has_dimension_zero() {
        let h = affine_hull(&[p(&[1.0, 0.0, 0.0])], tol()).unwrap();
        assert_eq!(h.dim(), 0);
        assert_eq!(h.origin(), &p(&[1.0, 0.0, 0.0]));
    }

    #[test]
    fn hull_rank_of_three_points_in_r3() {
        let pts = [
            p(&[0.0, 1.0, 0.0]),
            p(&[0.0, 0.0, 1.0]),
            p(&[2.0 / 3.0, 2.0 / 3.0, 2.0 / 3.0]),
        ];
        assert_eq!(affine_hull(&pts, tol()).unwrap().dim(), 2);
    }

    #[test]
    fn collinear_points_give_a_line() {
        let pts = [p(&[0.0, 0.0]), p(&[1.0, 1.0]), p(&[2.0, 2.0])];
        assert_eq!(affine_hull(&pts, tol()).unwrap().dim(), 1);
    }

    #[test]
    fn hull_rejects_mixed_dimensions() {
        let err = affine_hull(&[p(&[0.0, 0.0]), p(&[1.0, 0.0, 0.0])], tol()).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
    }

    #[test]
    fn line_meets_simplex_plane() {
        let line = AffineSubspace::from_directions(
            p(&[1.5, 0.5, 0.5]),
            &[p(&[-1.0 / 3.0, 2.0 / 3.0, 2.0 / 3.0])],
            tol(),
        )
        .unwrap();
        let plane = affine_hull(
            &[p(&[1.0, 0.0, 0.0]), p(&[0.0, 1.0, 0.0]), p(&[0.0, 0.0, 1.0])],
            tol(),
        )
        .unwrap();
        match intersect(&line, &plane, tol()).unwrap() {
            Intersection::Point(x) => {
                assert!(x.max_abs_diff(&p(&[2.0, -0.5, -0.5])) < 1e-12, "{x}")
            }
            other => panic!("expected a point, got {other:?}"),
        }
    }

    #[test]
    fn parallel_lines_do_not_meet() {
        let a = affine_hull(&[p(&[0.0, 0.0]), p(&[1.0, 1.0])], tol()).unwrap();
        let b = affine_hull(&[p(&[0.0, 1.0]), p(&[1.0, 2.0])], tol()).unwrap();
        assert_eq!(intersect(&a, &b, tol()).unwrap(), Intersection::Empty);
    }

    #[test]
    fn self_intersection_is_idempotent() {
        let a = affine_hull(&[p(&[1.0, 0.0, 0.0]), p(&[0.0, 1.0, 0.0])], tol()).unwrap();
        match intersect(&a, &a, tol()).unwrap() {
            Intersection::Subspace(s) => {
                assert_eq!(s.dim(), 1);
                assert!(a.contains(s.origin(), tol()));
                for b in s.basis() {
                    assert!(a.contains(&s.origin().add(b), tol()));
                }
            }
            other => panic!("expected a line, got {other:?}"),
        }
    }

    #[test]
    fn projection_onto_line() {
        let line = affine_hull(
            &[p(&[0.0, 0.0, 1.0]), p(&[2.0 / 3.0, 2.0 / 3.0, 2.0 / 3.0])],
            tol(),
        )
        .unwrap();
        let x = project_affine(&p(&[0.5, 0.5, 0.0]), &line);
        assert!(x.max_abs_diff(&p(&[2.0 / 3.0; 3])) < 1e-12, "{x}");
    }

    #[test]
    fn projection_fixes_members() {
        let line = affine_hull(&[p(&[0.0, 0.0, 1.0]), p(&[1.0, 1.0, 1.0])], tol()).unwrap();
        let v = p(&[0.25, 0.25, 1.0]);
        assert!(project_affine(&v, &line).max_abs_diff(&v) < 1e-15);
    }

    #[test]
    fn projection_onto_plane_e0() {
        let n0 = p(&[-1.0 / 3.0, 2.0 / 3.0, 2.0 / 3.0]);
        let s = p(&[2.0 / 3.0; 3]);
        let plane = AffineSubspace::from_directions(
            s,
            &[p(&[0.0, 1.0, -1.0]), p(&[2.0, 1.0, 0.0])],
            tol(),
        )
        .unwrap();
        assert_eq!(plane.normals().len(), 1);
        assert!((plane.normals()[0].dot(&n0).abs() - 1.0).abs() < 1e-12);
        let x = project_affine(&p(&[1.0, 0.0, 0.0]), &plane);
        assert!(x.max_abs_diff(&p(&[2.0 / 3.0; 3])) < 1e-12, "{x}");
    }

    #[test]
    fn affine_coordinates_of_projection_point() {
        let gens = [p(&[2.0, 1.0, 1.0]), p(&[0.0, 1.0, 0.0]), p(&[0.0, 0.0, 1.0])];
        let c = affine_coords(&p(&[4.0 / 3.0, 5.0 / 6.0, 5.0 / 6.0]), &gens, tol()).unwrap();
        for (got, want) in c.iter().zip([2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0]) {
            assert!((got - want).abs() < 1e-12, "{c:?}");
        }
        let c = affine_coords(&p(&[2.0 / 3.0; 3]), &gens, tol()).unwrap();
        for got in &c {
            assert!((got - 1.0 / 3.0).abs() < 1e-12, "{c:?}");
        }
    }

    #[test]
    fn affine_coordinates_of_first_generator() {
        let gens = [p(&[0.3, 0.2, 0.5]), p(&[1.0, 0.0, 0.0]), p(&[0.0, 1.0, 0.0])];
        let c = affine_coords(&gens[0], &gens, tol()).unwrap();
        assert!((c[0] - 1.0).abs() < 1e-12 && c[1].abs() < 1e-12 && c[2].abs() < 1e-12);
    }

    #[test]
    fn dependent_generators_use_minimum_norm() {
        let gens = [p(&[0.0, 0.0]), p(&[1.0, 0.0]), p(&[1.0, 0.0])];
        let c = affine_coords(&p(&[0.5, 0.0]), &gens, tol()).unwrap();
        assert!((c[0] - 0.5).abs() < 1e-12);
        assert!((c[1] - 0.25).abs() < 1e-12 && (c[2] - 0.25).abs() < 1e-12);
    }

    #[test]
    fn point_off_the_hull_is_reported() {
        let gens = [p(&[1.0, 0.0, 0.0]), p(&[0.0, 1.0, 0.0])];
        let err = affine_coords(&p(&[0.0, 0.0, 1.0]), &gens, tol()).unwrap_err();
        assert!(matches!(err, Error::NotInHull { .. }));
    }

    #[test]
    fn tolerance_bounds() {
        assert!(Tolerance::new(1e-9, 1e-8).is_ok());
        assert!(Tolerance::new(0.0, 1e-8).is_err());
        assert!(Tolerance::new(1e-2, 1e-8).is_err());
    }

    #[test]
    fn point_dimension_bounds() {
        assert!(Point::new(vec![1.0]).is_err());
        assert!(Point::new(vec![0.0; 17]).is_err());
        assert!(Point::new(vec![0.0, f64::NAN]).is_err());
    }
}
