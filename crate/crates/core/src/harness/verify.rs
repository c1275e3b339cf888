use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::approachability::check_condition_c;
use crate::error::Result;
use crate::geometry::{check_dim, Point, Tolerance};
use crate::prism::{
    classify, project_to_target, psi, PrismPoint, ProjectionOracle, Region, SimplexDistribution,
    StateW,
};
use crate::rule::{auxiliary_point, classic_blackwell2, lemma2_projection, residual};

/// Pass limits for a verification sweep.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub oracle: f64,
    pub identity: f64,
    pub classic: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            oracle: 1e-9,
            identity: 1e-8,
            classic: 1e-12,
        }
    }
}

/// Deviations measured at one outside point. `classic` is only set for
/// `d = 2`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SampleDeviations {
    /// `|project_to_target − oracle|_∞`.
    pub oracle: f64,
    /// Most negative hull coefficient of `v_proj` in `ℛ(p)`, as a positive
    /// number (0 when all are nonnegative).
    pub hull_negativity: f64,
    /// Largest `|<vertex − v_proj, v − v_proj>|`.
    pub separation: f64,
    /// Largest `|<ṽ − ṽ_proj, e_i + p^(i)1 − ṽ_proj>|` over below indices.
    pub below_orthogonality: f64,
    /// Largest `|<ṽ − ṽ_proj, e_i − ṽ_proj>|` over above indices.
    pub above_orthogonality: f64,
    /// `|closed-form ṽ_proj − v_proj|_∞`.
    pub chain: f64,
    /// `|closed-form residual − (ṽ − ṽ_proj)|_∞`.
    pub residual: f64,
    pub classic: Option<f64>,
}

impl SampleDeviations {
    fn max(self, o: Self) -> Self {
        Self {
            oracle: self.oracle.max(o.oracle),
            hull_negativity: self.hull_negativity.max(o.hull_negativity),
            separation: self.separation.max(o.separation),
            below_orthogonality: self.below_orthogonality.max(o.below_orthogonality),
            above_orthogonality: self.above_orthogonality.max(o.above_orthogonality),
            chain: self.chain.max(o.chain),
            residual: self.residual.max(o.residual),
            classic: match (self.classic, o.classic) {
                (Some(a), Some(b)) => Some(a.max(b)),
                (a, b) => a.or(b),
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub d: usize,
    pub samples: usize,
    pub seed: u64,
    pub max: SampleDeviations,
    /// Samples where a construction failed outright.
    pub failures: usize,
    pub thresholds: Thresholds,
    pub passed: bool,
}

impl VerificationReport {
    fn judge(&mut self) {
        let t = self.thresholds;
        let m = self.max;
        self.passed = self.failures == 0
            && m.oracle <= t.oracle
            && m.hull_negativity <= t.identity
            && m.separation <= t.identity
            && m.below_orthogonality <= t.identity
            && m.above_orthogonality <= t.identity
            && m.chain <= t.identity
            && m.residual <= t.identity
            && m.classic.is_none_or(|c| c <= t.classic);
    }
}

/// A random prism point outside the target: `q` uniform on the simplex
/// (normalized exponentials), `γ` uniform on `[0, 1]`, resampled until the
/// point is strictly outside.
pub fn sample_outside_point<R: Rng>(d: usize, rng: &mut R, tol: Tolerance) -> PrismPoint {
    loop {
        let raw: Vec<f64> = (0..d).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
        let total: f64 = raw.iter().sum();
        let q = raw.into_iter().map(|x| x / total).collect();
        let gamma = rng.gen::<f64>();
        let Ok(q) = SimplexDistribution::new(q, tol) else {
            continue;
        };
        let Ok(w) = StateW::new(q, gamma) else {
            continue;
        };
        let v = psi(&w);
        if classify(&v, tol) == Region::Outside {
            return v;
        }
    }
}

/// Runs the full check chain at one outside point.
pub fn check_sample(
    v: &PrismPoint,
    oracle: &ProjectionOracle,
    tol: Tolerance,
) -> Result<SampleDeviations> {
    let proj = project_to_target(v, tol);
    let oracle_dev = proj.point.max_abs_diff(&oracle.project(v));

    let report = check_condition_c(v, tol)?;
    let p = report.p;
    let aux = auxiliary_point(v, &p, &proj.point, tol)?;
    let closed = lemma2_projection(&p, &aux.lambdas, &aux.partition);
    let offset = aux.v_tilde.sub(&closed);
    let d = v.dim();

    let mut below = 0.0f64;
    for &i in &aux.partition.below {
        let w = Point::unit(d, i).add_scaled(p[i], &Point::ones(d)).sub(&closed);
        below = below.max(offset.dot(&w).abs());
    }
    let mut above = 0.0f64;
    for &i in &aux.partition.above {
        let w = Point::unit(d, i).sub(&closed);
        above = above.max(offset.dot(&w).abs());
    }

    let classic = (d == 2).then(|| {
        let state = v.state();
        (p[1] - classic_blackwell2(state.q[1], state.gamma)).abs()
    });

    Ok(SampleDeviations {
        oracle: oracle_dev,
        hull_negativity: (-report.min_hull_coefficient).max(0.0),
        separation: report.max_violation,
        below_orthogonality: below,
        above_orthogonality: above,
        chain: closed.max_abs_diff(&proj.point),
        residual: residual(&aux, &p).max_abs_diff(&offset),
        classic,
    })
}

/// Samples `samples` outside points from `seed` and reports the largest
/// deviation of each check. Points are drawn sequentially, checks run in
/// parallel; the report does not depend on scheduling.
pub fn verify_geometry(d: usize, samples: usize, seed: u64) -> Result<VerificationReport> {
    check_dim(d)?;
    let tol = Tolerance::default();
    let mut report = VerificationReport {
        d,
        samples,
        seed,
        max: SampleDeviations::default(),
        failures: 0,
        thresholds: Thresholds::default(),
        passed: true,
    };
    if samples == 0 {
        return Ok(report);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points: Vec<PrismPoint> = (0..samples)
        .map(|_| sample_outside_point(d, &mut rng, tol))
        .collect();
    let oracle = ProjectionOracle::new(d)?;
    let results: Vec<Option<SampleDeviations>> = points
        .par_iter()
        .map(|v| check_sample(v, &oracle, tol).ok())
        .collect();
    for r in results {
        match r {
            Some(dev) => report.max = report.max.max(dev),
            None => report.failures += 1,
        }
    }
    report.judge();
    Ok(report)
}
