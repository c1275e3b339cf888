//! Online predictor: integer tallies in, prediction distribution and sampled
//! category out.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point, Tolerance};
use crate::prism::{classify, project_to_target, shortfall, PrismPoint, SimplexDistribution};
use crate::rule::{decide, RuleCase};

/// What to predict from when the state is strictly inside the target set.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InteriorPolicy {
    #[default]
    Uniform,
    /// Repeat the previous distribution (uniform if there is none).
    HoldLast,
}

#[derive(Clone, Debug)]
pub struct PredictorState {
    d: usize,
    n: u64,
    counts: Vec<u64>,
    correct: u64,
    first_prediction: usize,
    interior_policy: InteriorPolicy,
    tol: Tolerance,
    last_dist: Option<SimplexDistribution>,
    rng: ChaCha8Rng,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Prediction {
    pub dist: SimplexDistribution,
    pub y: usize,
    /// `None` for the first, fixed prediction.
    pub case: Option<RuleCase>,
}

/// One trace row, describing the state after an outcome has been absorbed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub n: u64,
    pub x: usize,
    pub y: usize,
    pub correct: bool,
    pub gamma_bar: f64,
    pub xbar: Vec<f64>,
    pub dist_to_target: f64,
    pub shortfall: f64,
    /// Branch of the rule that applies to the new state.
    pub case: RuleCase,
}

impl PredictorState {
    pub fn init(d: usize, seed: u64, first_prediction: usize) -> Result<Self> {
        crate::geometry::check_dim(d)?;
        if first_prediction >= d {
            return Err(Error::CategoryOutOfRange {
                category: first_prediction,
                d,
            });
        }
        Ok(Self {
            d,
            n: 0,
            counts: vec![0; d],
            correct: 0,
            first_prediction,
            interior_policy: InteriorPolicy::Uniform,
            tol: Tolerance::default(),
            last_dist: None,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn with_tolerance(mut self, tol: Tolerance) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_interior_policy(mut self, policy: InteriorPolicy) -> Self {
        self.interior_policy = policy;
        self
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn steps(&self) -> u64 {
        self.n
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn correct(&self) -> u64 {
        self.correct
    }

    pub fn xbar(&self) -> Vec<f64> {
        let n = self.n.max(1) as f64;
        self.counts.iter().map(|&c| c as f64 / n).collect()
    }

    pub fn gamma_bar(&self) -> f64 {
        self.correct as f64 / self.n.max(1) as f64
    }

    /// `v_n = x̄_n + γ̄_n·1_d`.
    pub fn state_point(&self) -> Result<PrismPoint> {
        if self.n == 0 {
            return Err(Error::NoObservations);
        }
        let n = self.n as f64;
        let coords = self
            .counts
            .iter()
            .map(|&c| (c + self.correct) as f64 / n)
            .collect();
        Ok(PrismPoint::trusted(Point::raw(coords)))
    }

    /// Distribution of the next prediction and a sampled category.
    pub fn predict(&mut self) -> Result<Prediction> {
        if self.n == 0 {
            return Ok(Prediction {
                dist: SimplexDistribution::point_mass(self.d, self.first_prediction),
                y: self.first_prediction,
                case: None,
            });
        }
        let v = self.state_point()?;
        let mut decision = decide(&v, self.tol)?;
        if decision.case == RuleCase::Interior && self.interior_policy == InteriorPolicy::HoldLast {
            if let Some(last) = &self.last_dist {
                decision.dist = last.clone();
            }
        }
        let u: f64 = self.rng.gen();
        let y = sample_category(&decision.dist, u);
        self.last_dist = Some(decision.dist.clone());
        Ok(Prediction {
            dist: decision.dist,
            y,
            case: Some(decision.case),
        })
    }

    /// Absorbs outcome `x` for a round in which `y` was predicted.
    pub fn observe(&mut self, x: usize, y: usize) -> Result<StepRecord> {
        for category in [x, y] {
            if category >= self.d {
                return Err(Error::CategoryOutOfRange { category, d: self.d });
            }
        }
        self.n += 1;
        self.counts[x] += 1;
        let correct = x == y;
        if correct {
            self.correct += 1;
        }
        let v = self.state_point()?;
        let proj = project_to_target(&v, self.tol);
        Ok(StepRecord {
            n: self.n,
            x,
            y,
            correct,
            gamma_bar: self.gamma_bar(),
            xbar: self.xbar(),
            dist_to_target: proj.dist,
            shortfall: shortfall(&v),
            case: RuleCase::of_region(&classify(&v, self.tol)),
        })
    }
}

/// Inverse-CDF sampling over ascending categories with half-open cells
/// `[c_{k−1}, c_k)`; `u ∈ [0, 1)`.
pub fn sample_category(p: &SimplexDistribution, u: f64) -> usize {
    let mut cumulative = 0.0;
    for (k, &pk) in p.probs().iter().enumerate() {
        cumulative += pk;
        if u < cumulative {
            return k;
        }
    }
    // rounding left the last cell short of 1
    p.probs().iter().rposition(|&pk| pk > 0.0).unwrap_or(p.len() - 1)
}
