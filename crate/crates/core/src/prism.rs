//! The prediction prism.
//!
//! A state `(q, γ)` of relative outcome frequencies `q ∈ Σ_{d-1}` and correct
//! guess frequency `γ ∈ [0, 1]` lives in `W_d = Σ_{d-1} × [0, 1]`. The map
//! `Ψ(q, γ) = q + γ·1_d` embeds it into the prism `V_d ⊂ ℝ^d`. The target set
//! is the part of the prism with `γ ≥ max_l q^(l)`.
//!
//! The target is cut out by `d` hyperplanes `E_l` through `s = (2/d)·1_d` with
//! orthonormal normals `n_l = −e_l + (2/d)·1_d`. Side values are measured
//! against the plane through `s`:
//!
//! ```text
//! σ_l(v) = <v, n_l> − 2/d = γ − q^(l)
//! ```
//!
//! so `v` is in the target exactly when every `σ_l(v) ≥ 0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{self, affine_hull, intersect, project_affine, AffineSubspace, Intersection, Point, Tolerance};

/// A probability vector over `d` categories (or over `r` actions).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SimplexDistribution(Vec<f64>);

impl SimplexDistribution {
    /// Validates within `tol.eps_geom`, then clamps negatives to zero and
    /// renormalizes.
    pub fn new(probs: Vec<f64>, tol: Tolerance) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidDistribution("empty".into()));
        }
        if let Some(i) = probs.iter().position(|p| !p.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        if let Some((i, p)) = probs.iter().enumerate().find(|(_, p)| **p < -tol.eps_geom) {
            return Err(Error::InvalidDistribution(format!(
                "component {i} is negative ({p:e})"
            )));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > tol.eps_geom * probs.len() as f64 {
            return Err(Error::InvalidDistribution(format!(
                "components sum to {sum}"
            )));
        }
        Ok(Self::clamped(probs))
    }

    pub(crate) fn clamped(mut probs: Vec<f64>) -> Self {
        probs.iter_mut().for_each(|p| *p = p.clamp(0.0, 1.0));
        let sum: f64 = probs.iter().sum();
        probs.iter_mut().for_each(|p| *p /= sum);
        Self(probs)
    }

    pub fn uniform(d: usize) -> Self {
        Self(vec![1.0 / d as f64; d])
    }

    pub fn point_mass(d: usize, k: usize) -> Self {
        let mut p = vec![0.0; d];
        p[k] = 1.0;
        Self(p)
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn to_point(&self) -> Point {
        Point::raw(self.0.clone())
    }
}

impl std::ops::Index<usize> for SimplexDistribution {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// A state `(q, γ) ∈ W_d`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateW {
    pub q: SimplexDistribution,
    pub gamma: f64,
}

impl StateW {
    pub fn new(q: SimplexDistribution, gamma: f64) -> Result<Self> {
        geometry::check_dim(q.len())?;
        if !(0.0..=1.0).contains(&gamma) {
            return Err(Error::NotInPrism(format!("gamma {gamma} outside [0, 1]")));
        }
        Ok(Self { q, gamma })
    }

    pub fn dim(&self) -> usize {
        self.q.len()
    }
}

/// A point of the prism `V_d`.
#[derive(Clone, Debug, PartialEq)]
pub struct PrismPoint(Point);

impl PrismPoint {
    pub fn new(v: Point, tol: Tolerance) -> Result<Self> {
        psi_inv(&v, tol)?;
        Ok(Self(v))
    }

    pub(crate) fn trusted(v: Point) -> Self {
        Self(v)
    }

    pub fn point(&self) -> &Point {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn gamma(&self) -> f64 {
        (self.0.sum() - 1.0) / self.dim() as f64
    }

    pub fn state(&self) -> StateW {
        let gamma = self.gamma();
        let q = self.0.coords().iter().map(|v| v - gamma).collect();
        StateW {
            q: SimplexDistribution::clamped(q),
            gamma: gamma.clamp(0.0, 1.0),
        }
    }
}

/// The cutting hyperplanes `E_l` through `s`, given by their unit normals.
#[derive(Clone, Debug)]
pub struct HyperplaneFamily {
    d: usize,
    normals: Vec<Point>,
    center: Point,
}

impl HyperplaneFamily {
    pub fn new(d: usize) -> Result<Self> {
        geometry::check_dim(d)?;
        let c = 2.0 / d as f64;
        let normals = (0..d)
            .map(|l| {
                let mut n = vec![c; d];
                n[l] -= 1.0;
                Point::raw(n)
            })
            .collect();
        Ok(Self {
            d,
            normals,
            center: Point::raw(vec![c; d]),
        })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn normals(&self) -> &[Point] {
        &self.normals
    }

    /// `s = (2/d)·1_d`, common to every plane.
    pub fn center(&self) -> &Point {
        &self.center
    }

    /// `<s, n_l>`; the same for every `l`.
    pub fn offset(&self) -> f64 {
        2.0 / self.d as f64
    }
}

pub fn center(d: usize) -> Point {
    Point::raw(vec![2.0 / d as f64; d])
}

pub fn psi(w: &StateW) -> PrismPoint {
    PrismPoint(Point::raw(w.q.probs().iter().map(|q| q + w.gamma).collect()))
}

/// Inverse of [`psi`]: `γ = (Σv − 1)/d`, `q = v − γ·1_d`.
pub fn psi_inv(v: &Point, tol: Tolerance) -> Result<StateW> {
    let d = v.dim();
    geometry::check_dim(d)?;
    let gamma = (v.sum() - 1.0) / d as f64;
    if gamma < -tol.eps_geom || gamma > 1.0 + tol.eps_geom {
        return Err(Error::NotInPrism(format!("gamma {gamma} outside [0, 1]")));
    }
    let q: Vec<f64> = v.coords().iter().map(|x| x - gamma).collect();
    if let Some((l, ql)) = q.iter().enumerate().find(|(_, x)| **x < -tol.eps_geom) {
        return Err(Error::NotInPrism(format!("q[{l}] = {ql} is negative")));
    }
    Ok(StateW {
        q: SimplexDistribution::clamped(q),
        gamma: gamma.clamp(0.0, 1.0),
    })
}

/// `σ_l(v) = <v, n_l> − 2/d` for every `l`.
pub fn side_values(v: &PrismPoint) -> Vec<f64> {
    side_values_of(v.point())
}

pub(crate) fn side_values_of(v: &Point) -> Vec<f64> {
    let d = v.dim();
    let c = 2.0 / d as f64;
    let total = v.sum();
    // <v, n_l> = −v_l + c·Σv
    v.coords().iter().map(|vl| -vl + c * total - c).collect()
}

/// Location of a prism point relative to the target set.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "region", content = "planes")]
pub enum Region {
    Outside,
    /// On the boundary; lists the planes `E_k` that contain the point.
    Boundary(Vec<usize>),
    Interior,
}

pub fn classify(v: &PrismPoint, tol: Tolerance) -> Region {
    classify_sides(&side_values(v), tol)
}

pub(crate) fn classify_sides(sigma: &[f64], tol: Tolerance) -> Region {
    if sigma.iter().any(|s| *s < -tol.eps_geom) {
        return Region::Outside;
    }
    let on: Vec<usize> = sigma
        .iter()
        .enumerate()
        .filter(|(_, s)| s.abs() <= tol.eps_geom)
        .map(|(k, _)| k)
        .collect();
    if on.is_empty() {
        Region::Interior
    } else {
        Region::Boundary(on)
    }
}

pub fn in_target(v: &PrismPoint, tol: Tolerance) -> bool {
    classify(v, tol) != Region::Outside
}

/// `max(0, −min_l σ_l)`, i.e. `max(0, max_l q^(l) − γ)`.
pub fn shortfall(v: &PrismPoint) -> f64 {
    let min = side_values(v).into_iter().fold(f64::INFINITY, f64::min);
    (-min).max(0.0)
}

/// Nearest point of the target set and its distance.
#[derive(Clone, Debug, PartialEq)]
pub struct Projection {
    pub point: Point,
    pub dist: f64,
}

/// Nearest point of the target set.
///
/// The normals are orthonormal and all planes pass through `s`, so the target
/// cone is an orthant around `s`: projecting onto the intersection of the
/// violated planes is `v − Σ_{σ_l < 0} σ_l·n_l`. That point keeps every other
/// side value, so it is feasible for the cone; prism facet feasibility is
/// checked and the active-set oracle takes over if it ever fails.
pub fn project_to_target(v: &PrismPoint, tol: Tolerance) -> Projection {
    let sigma = side_values(v);
    if sigma.iter().all(|s| *s >= 0.0) {
        return Projection {
            point: v.point().clone(),
            dist: 0.0,
        };
    }
    let family = HyperplaneFamily::new(v.dim()).expect("prism points have a valid dimension");
    let mut x = v.point().clone();
    for (s, n) in sigma.iter().zip(family.normals()) {
        if *s < 0.0 {
            x = x.add_scaled(-s, n);
        }
    }
    let x = if in_target_set(&x, tol) {
        x
    } else {
        project_oracle(v)
    };
    Projection {
        dist: v.point().dist(&x),
        point: x,
    }
}

/// Membership in the target set via `γ ≥ max q` plus the prism facets;
/// independent of the plane normals.
pub(crate) fn in_target_set(x: &Point, tol: Tolerance) -> bool {
    let d = x.dim() as f64;
    let gamma = (x.sum() - 1.0) / d;
    let eps = tol.eps_geom;
    if gamma < -eps || gamma > 1.0 + eps {
        return false;
    }
    x.coords().iter().all(|xl| {
        let q = xl - gamma;
        q >= -eps && gamma >= q - eps
    })
}

/// Exhaustive active-set reference for [`project_to_target`].
///
/// Every plane `E_l` is built as the affine hull of its defining vertices
/// `{e_0, …, e_l + 1_d, …, e_{d−1}}`. For each of the `2^d` subsets of planes
/// the point is projected onto their intersection; prism facets that the
/// candidate violates are added as further equality constraints. The closest
/// feasible candidate is returned.
pub fn project_oracle(v: &PrismPoint) -> Point {
    ProjectionOracle::new(v.dim())
        .expect("prism points have a valid dimension")
        .project(v)
}

pub struct ProjectionOracle {
    d: usize,
    tol: Tolerance,
    planes: Vec<AffineSubspace>,
    /// Intersection of the planes in each subset, indexed by bitmask. Only
    /// kept for small `d`; larger dimensions walk the subsets depth-first.
    cached: Option<Vec<AffineSubspace>>,
    facets: Vec<AffineSubspace>,
}

const CACHE_MAX_DIM: usize = 10;

impl ProjectionOracle {
    pub fn new(d: usize) -> Result<Self> {
        geometry::check_dim(d)?;
        let tol = Tolerance::default();
        let planes: Vec<AffineSubspace> = (0..d)
            .map(|l| {
                let verts: Vec<Point> = (0..d)
                    .map(|k| {
                        let e = Point::unit(d, k);
                        if k == l {
                            e.add(&Point::ones(d))
                        } else {
                            e
                        }
                    })
                    .collect();
                affine_hull(&verts, tol)
            })
            .collect::<Result<_>>()?;

        let cached = if d <= CACHE_MAX_DIM {
            let mut subspaces = vec![whole_space(d, tol)?; 1 << d];
            for mask in 1usize..(1 << d) {
                let low = mask.trailing_zeros() as usize;
                let rest = mask & (mask - 1);
                subspaces[mask] = meet(&subspaces[rest], &planes[low], tol)?;
            }
            Some(subspaces)
        } else {
            None
        };

        Ok(Self {
            d,
            tol,
            planes,
            cached,
            facets: prism_facets(d, tol)?,
        })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn project(&self, v: &PrismPoint) -> Point {
        let x = v.point();
        let mut best: Option<(f64, Point)> = None;
        let mut consider = |sub: &AffineSubspace| {
            if let Some(candidate) = self.feasible_candidate(x, sub) {
                let dist = x.dist(&candidate);
                if best.as_ref().is_none_or(|(b, _)| dist < *b) {
                    best = Some((dist, candidate));
                }
            }
        };
        match &self.cached {
            Some(subspaces) => subspaces.iter().for_each(&mut consider),
            None => {
                let whole = whole_space(self.d, self.tol).expect("valid dimension");
                self.walk(&whole, 0, &mut consider);
            }
        }
        best.map(|(_, p)| p)
            .expect("s is feasible for the full active set")
    }

    fn walk(&self, current: &AffineSubspace, next: usize, f: &mut impl FnMut(&AffineSubspace)) {
        f(current);
        for l in next..self.d {
            let sub = meet(current, &self.planes[l], self.tol).expect("cutting planes meet at s");
            self.walk(&sub, l + 1, f);
        }
    }

    fn feasible_candidate(&self, x: &Point, sub: &AffineSubspace) -> Option<Point> {
        let mut current = sub.clone();
        let mut candidate = project_affine(x, &current);
        // Each round adds at least one new facet, so this terminates.
        for _ in 0..=self.facets.len() {
            let violated = self.violated_facets(&candidate);
            if violated.is_empty() {
                return in_target_set(&candidate, self.tol).then_some(candidate);
            }
            for f in violated {
                current = meet(&current, &self.facets[f], self.tol).ok()?;
            }
            candidate = project_affine(x, &current);
        }
        None
    }

    fn violated_facets(&self, x: &Point) -> Vec<usize> {
        let d = self.d;
        let eps = self.tol.eps_geom;
        let gamma = (x.sum() - 1.0) / d as f64;
        let mut out: Vec<usize> = (0..d).filter(|&l| x[l] - gamma < -eps).collect();
        if gamma < -eps {
            out.push(d);
        }
        if gamma > 1.0 + eps {
            out.push(d + 1);
        }
        out
    }
}

fn whole_space(d: usize, tol: Tolerance) -> Result<AffineSubspace> {
    AffineSubspace::from_directions(
        Point::zeros(d),
        &(0..d).map(|k| Point::unit(d, k)).collect::<Vec<_>>(),
        tol,
    )
}

fn meet(a: &AffineSubspace, b: &AffineSubspace, tol: Tolerance) -> Result<AffineSubspace> {
    match intersect(a, b, tol)? {
        Intersection::Point(p) => Ok(AffineSubspace::point(p)),
        Intersection::Subspace(s) => Ok(s),
        Intersection::Empty => Err(Error::GeometryDegenerate("empty intersection".into())),
    }
}

/// Facet hyperplanes of the prism: `q^(l) = 0` for each `l`, then `γ = 0`,
/// then `γ = 1`.
fn prism_facets(d: usize, tol: Tolerance) -> Result<Vec<AffineSubspace>> {
    let ones = Point::ones(d);
    let mut facets = Vec::with_capacity(d + 2);
    for l in 0..d {
        let mut verts = Vec::with_capacity(2 * (d - 1));
        for k in (0..d).filter(|&k| k != l) {
            verts.push(Point::unit(d, k));
            verts.push(Point::unit(d, k).add(&ones));
        }
        facets.push(affine_hull(&verts, tol)?);
    }
    let bottom: Vec<Point> = (0..d).map(|k| Point::unit(d, k)).collect();
    let top: Vec<Point> = bottom.iter().map(|e| e.add(&ones)).collect();
    facets.push(affine_hull(&bottom, tol)?);
    facets.push(affine_hull(&top, tol)?);
    Ok(facets)
}
