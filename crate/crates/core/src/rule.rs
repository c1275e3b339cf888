//! Randomization rules.
//!
//! [`randomize`] maps a prism state `v` to the prediction distribution `p(v)`:
//!
//! * outside the target, split the categories into those whose plane `v` lies
//!   on or below (`σ_l ≤ 0`) and those it lies above (`σ_l > 0`); `p(v)` is the
//!   single simplex point of
//!   `A(s, e_above…, v) ∩ A(e_below…)`;
//! * on the boundary, `p(v)` is uniform over the planes through `v`;
//! * in the interior the rule is free; we use the uniform distribution.
//!
//! The remaining functions build the auxiliary point `ṽ` and the closed forms
//! used to certify the separation property for the rule.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{affine_coords, affine_hull, intersect, Intersection, Point, Tolerance};
use crate::prism::{self, classify_sides, side_values, PrismPoint, Region, SimplexDistribution};

/// Categories split by the sign of their side value.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    /// `σ_l ≤ 0` (the boundary band counts here), ascending.
    pub below: Vec<usize>,
    /// `σ_l > 0`, ascending.
    pub above: Vec<usize>,
}

impl Partition {
    /// `|below| − 1`, or `None` when nothing is below.
    pub fn j(&self) -> Option<usize> {
        self.below.len().checked_sub(1)
    }

    pub fn dim(&self) -> usize {
        self.below.len() + self.above.len()
    }
}

pub fn partition(v: &PrismPoint, tol: Tolerance) -> Partition {
    partition_sides(&side_values(v), tol)
}

fn partition_sides(sigma: &[f64], tol: Tolerance) -> Partition {
    let (below, above): (Vec<usize>, Vec<usize>) =
        (0..sigma.len()).partition(|&l| sigma[l] <= tol.eps_geom);
    Partition { below, above }
}

/// Which branch of the rule produced a distribution.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleCase {
    /// Outside the target set.
    Case1,
    /// On the boundary of the target set.
    Case2,
    Interior,
}

impl RuleCase {
    pub fn as_str(self) -> &'static str {
        match self {
            RuleCase::Case1 => "case1",
            RuleCase::Case2 => "case2",
            RuleCase::Interior => "interior",
        }
    }

    pub fn of_region(region: &Region) -> Self {
        match region {
            Region::Outside => RuleCase::Case1,
            Region::Boundary(_) => RuleCase::Case2,
            Region::Interior => RuleCase::Interior,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Decision {
    pub dist: SimplexDistribution,
    pub case: RuleCase,
}

/// `p(v)`; interior states map to the uniform distribution.
pub fn randomize(v: &PrismPoint, tol: Tolerance) -> Result<SimplexDistribution> {
    decide(v, tol).map(|d| d.dist)
}

/// [`randomize`] together with the branch that was taken.
pub fn decide(v: &PrismPoint, tol: Tolerance) -> Result<Decision> {
    let d = v.dim();
    let sigma = side_values(v);
    match classify_sides(&sigma, tol) {
        Region::Interior => Ok(Decision {
            dist: SimplexDistribution::uniform(d),
            case: RuleCase::Interior,
        }),
        Region::Boundary(planes) => {
            let mut p = vec![0.0; d];
            let w = 1.0 / planes.len() as f64;
            for k in planes {
                p[k] = w;
            }
            Ok(Decision {
                dist: SimplexDistribution::clamped(p),
                case: RuleCase::Case2,
            })
        }
        Region::Outside => {
            let part = partition_sides(&sigma, tol);
            Ok(Decision {
                dist: outside_distribution(v, &part, tol)?,
                case: RuleCase::Case1,
            })
        }
    }
}

fn outside_distribution(v: &PrismPoint, part: &Partition, tol: Tolerance) -> Result<SimplexDistribution> {
    let d = v.dim();
    let s = prism::center(d);

    let raw = if part.above.is_empty() {
        // Central projection from s through v down to the simplex plane.
        let t = 1.0 / (2.0 - v.point().sum());
        s.add_scaled(t, &v.point().sub(&s)).into_coords()
    } else {
        let mut gens1 = Vec::with_capacity(part.above.len() + 2);
        gens1.push(s);
        gens1.extend(part.above.iter().map(|&k| Point::unit(d, k)));
        gens1.push(v.point().clone());
        let a1 = affine_hull(&gens1, tol)?;
        let gens2: Vec<Point> = part.below.iter().map(|&k| Point::unit(d, k)).collect();
        let a2 = affine_hull(&gens2, tol)?;
        match intersect(&a1, &a2, tol)? {
            Intersection::Point(x) => {
                // x lies in A(e_below…): coordinates outside `below` are zero.
                let mut c = vec![0.0; d];
                for &l in &part.below {
                    c[l] = x[l];
                }
                c
            }
            other => {
                return Err(Error::GeometryDegenerate(format!(
                    "randomization spaces meet in dimension {:?}",
                    other.dim()
                )))
            }
        }
    };
    SimplexDistribution::new(raw, tol).map_err(|e| {
        Error::GeometryDegenerate(format!("randomization point is not in the simplex: {e}"))
    })
}

/// The classical two-category rule: probability of predicting category 1
/// given `(x̄, γ̄)`, where `x̄` is the frequency of ones.
///
/// Regions are tested in the order `D_1`, `D_2`, `D_3`; the interior of the
/// target gets 1/2.
pub fn classic_blackwell2(xbar: f64, gamma_bar: f64) -> f64 {
    let (x, y) = (xbar, gamma_bar);
    if x <= y && y <= 1.0 - x {
        0.0
    } else if 1.0 - x <= y && y <= x {
        1.0
    } else if y <= x.min(1.0 - x) {
        0.5 + (x - 0.5) / (1.0 - 2.0 * y)
    } else {
        0.5
    }
}

/// The auxiliary point `ṽ = A(v, v_proj) ∩ A(e_above…, p(v))` and its
/// coordinates `λ_k` in `ṽ = p + Σ_{k ∈ above} λ_k (e_k − p)`.
#[derive(Clone, Debug, PartialEq)]
pub struct AuxiliaryPoint {
    pub v_tilde: Point,
    /// One entry per index of `partition.above`, in the same order.
    pub lambdas: Vec<f64>,
    pub partition: Partition,
}

pub fn auxiliary_point(
    v: &PrismPoint,
    p: &SimplexDistribution,
    v_proj: &Point,
    tol: Tolerance,
) -> Result<AuxiliaryPoint> {
    let d = v.dim();
    let part = partition(v, tol);
    let line = affine_hull(&[v.point().clone(), v_proj.clone()], tol)?;
    let mut gens = Vec::with_capacity(part.above.len() + 1);
    gens.push(p.to_point());
    gens.extend(part.above.iter().map(|&k| Point::unit(d, k)));
    let plane = affine_hull(&gens, tol)?;

    let v_tilde = match intersect(&line, &plane, tol)? {
        Intersection::Point(x) => x,
        other => {
            return Err(Error::GeometryDegenerate(format!(
                "auxiliary spaces meet in dimension {:?}",
                other.dim()
            )))
        }
    };
    if prism::in_target_set(&v_tilde, tol) {
        return Err(Error::GeometryDegenerate(
            "auxiliary point lies in the target set".into(),
        ));
    }
    let coeffs = affine_coords(&v_tilde, &gens, tol)?;
    Ok(AuxiliaryPoint {
        v_tilde,
        lambdas: coeffs[1..].to_vec(),
        partition: part,
    })
}

/// Closed-form projection of `ṽ`:
/// `(2/d)(1 − Σλ)` on below indices and
/// `(2/d)(1 − Σ_{k≠l} λ_k) + (1 − 2/d) λ_l` on above indices.
///
/// `lambdas` pairs with `partition.above`.
pub fn lemma2_projection(p: &SimplexDistribution, lambdas: &[f64], partition: &Partition) -> Point {
    let d = p.len();
    let c = 2.0 / d as f64;
    let total: f64 = lambdas.iter().sum();
    let mut out = vec![0.0; d];
    for &l in &partition.below {
        out[l] = c * (1.0 - total);
    }
    for (&l, &lam) in partition.above.iter().zip(lambdas) {
        out[l] = c * (1.0 - (total - lam)) + (1.0 - c) * lam;
    }
    Point::raw(out)
}

/// `ṽ − ṽ_proj` from the closed form: `(p^(l) − 2/d)(1 − Σλ)` on below
/// indices, `−(2/d)(1 − Σλ)` on above indices.
pub fn residual(aux: &AuxiliaryPoint, p: &SimplexDistribution) -> Point {
    let d = p.len();
    let c = 2.0 / d as f64;
    let scale = 1.0 - aux.lambdas.iter().sum::<f64>();
    let mut out = vec![0.0; d];
    for &l in &aux.partition.below {
        out[l] = (p[l] - c) * scale;
    }
    for &l in &aux.partition.above {
        out[l] = -c * scale;
    }
    Point::raw(out)
}
