//! Repeated games with vector payoffs and the separation condition.
//!
//! Player I picks a row from a mixed action `p`, player II a column; the
//! payoff `m_ij ∈ ℝ^d` is averaged over rounds. For a mixed action `p` the
//! set of reachable expected payoffs is `ℛ(p) = conv{Σ_i p_i m_ij : j}`.
//!
//! The prediction game uses the prism vertices as payoffs, `m_jj = e_j + 1_d`
//! and `m_ij = e_j` for `i ≠ j` (rows are predictions, columns outcomes), so
//! `ℛ(p) = conv{e_j + p^(j)·1_d}` and the average payoff is exactly the
//! predictor state `v_n`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{affine_coords, Point, Tolerance};
use crate::predictor::sample_category;
use crate::prism::{classify, project_to_target, PrismPoint, Region, SimplexDistribution};
use crate::rule::randomize;

#[derive(Clone, Debug, PartialEq)]
pub struct PayoffMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<Point>,
}

impl PayoffMatrix {
    /// `entries[i][j]` is the payoff for row `i`, column `j`.
    pub fn new(entries: Vec<Vec<Point>>) -> Result<Self> {
        let rows = entries.len();
        let cols = entries.first().map_or(0, Vec::len);
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidConfig("payoff matrix needs at least one row and column".into()));
        }
        let dim = entries[0][0].dim();
        let mut flat = Vec::with_capacity(rows * cols);
        for row in entries {
            if row.len() != cols {
                return Err(Error::DimensionMismatch {
                    expected: cols,
                    found: row.len(),
                });
            }
            for m in row {
                if m.dim() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        found: m.dim(),
                    });
                }
                flat.push(m);
            }
        }
        Ok(Self {
            rows,
            cols,
            entries: flat,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn payoff_dim(&self) -> usize {
        self.entries[0].dim()
    }

    pub fn get(&self, i: usize, j: usize) -> &Point {
        &self.entries[i * self.cols + j]
    }
}

/// The prediction game's payoff matrix for `d` categories.
pub fn prediction_payoff_matrix(d: usize) -> Result<PayoffMatrix> {
    crate::geometry::check_dim(d)?;
    let ones = Point::ones(d);
    let entries = (0..d)
        .map(|i| {
            (0..d)
                .map(|j| {
                    let e = Point::unit(d, j);
                    if i == j {
                        e.add(&ones)
                    } else {
                        e
                    }
                })
                .collect()
        })
        .collect();
    PayoffMatrix::new(entries)
}

/// The prediction game with payoffs in `W_d` coordinates `(q, γ)`:
/// `m_ij = (e_j, [i = j]) ∈ ℝ^{d+1}`.
pub fn w_space_payoff_matrix(d: usize) -> Result<PayoffMatrix> {
    crate::geometry::check_dim(d)?;
    let entries = (0..d)
        .map(|i| {
            (0..d)
                .map(|j| {
                    let mut c = vec![0.0; d + 1];
                    c[j] = 1.0;
                    c[d] = if i == j { 1.0 } else { 0.0 };
                    Point::new(c)
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    PayoffMatrix::new(entries)
}

/// Vertices `Σ_i p_i m_ij` of `ℛ(p)`, one per column.
pub fn r_set_vertices(m: &PayoffMatrix, p: &SimplexDistribution) -> Result<Vec<Point>> {
    if p.len() != m.rows() {
        return Err(Error::DimensionMismatch {
            expected: m.rows(),
            found: p.len(),
        });
    }
    Ok((0..m.cols())
        .map(|j| {
            (0..m.rows()).fold(Point::zeros(m.payoff_dim()), |acc, i| {
                acc.add_scaled(p[i], m.get(i, j))
            })
        })
        .collect())
}

/// Evidence for the separation condition at one point outside the target.
#[derive(Clone, Debug, Serialize)]
pub struct ConditionCReport {
    pub z: Point,
    pub p: SimplexDistribution,
    /// Closest point of the target set to `z`.
    pub y: Point,
    /// Affine coordinates of `y` with respect to the vertices of `ℛ(p)`.
    pub hull_coefficients: Vec<f64>,
    /// `<vertex − y, z − y>` per vertex of `ℛ(p)`.
    pub inner_products: Vec<f64>,
    /// Largest `|<vertex − y, z − y>|`.
    pub max_violation: f64,
    pub min_hull_coefficient: f64,
    pub violated: bool,
}

/// Checks that the closest target point lies in `ℛ(p(v))` with nonnegative
/// coefficients and that `v − y` is orthogonal to every vertex offset. The
/// polytope is checked on its vertices only.
pub fn check_condition_c(v: &PrismPoint, tol: Tolerance) -> Result<ConditionCReport> {
    if classify(v, tol) != Region::Outside {
        return Err(Error::NotOutsideTarget);
    }
    let d = v.dim();
    let p = randomize(v, tol)?;
    let y = project_to_target(v, tol).point;
    let vertices = r_set_vertices(&prediction_payoff_matrix(d)?, &p)?;
    let hull_coefficients = affine_coords(&y, &vertices, tol)?;
    let offset = v.point().sub(&y);
    let inner_products: Vec<f64> = vertices.iter().map(|w| w.sub(&y).dot(&offset)).collect();
    let max_violation = inner_products.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let min_hull_coefficient = hull_coefficients.iter().copied().fold(f64::INFINITY, f64::min);
    let violated = max_violation > tol.eps_test || min_hull_coefficient < -tol.eps_test;
    Ok(ConditionCReport {
        z: v.point().clone(),
        p,
        y,
        hull_coefficients,
        inner_products,
        max_violation,
        min_hull_coefficient,
        violated,
    })
}

/// The perpendicularity defect of the prediction game set up directly in
/// `W_d` coordinates: `<vertex − y, z − y>` for each vertex of `ℛ(p)`, where
/// `z = (q, γ)` and `y` is the candidate closest point.
pub fn w_space_separation_defect(z: &[f64], y: &[f64], p: &SimplexDistribution) -> Result<Vec<f64>> {
    let d = p.len();
    let z = Point::new(z.to_vec())?;
    let y = Point::new(y.to_vec())?;
    if z.dim() != d + 1 || y.dim() != d + 1 {
        return Err(Error::DimensionMismatch {
            expected: d + 1,
            found: z.dim().min(y.dim()),
        });
    }
    let vertices = r_set_vertices(&w_space_payoff_matrix(d)?, p)?;
    let offset = z.sub(&y);
    Ok(vertices.iter().map(|w| w.sub(&y).dot(&offset)).collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct GameRound {
    pub row: usize,
    pub col: usize,
    pub payoff: Point,
}

/// Rounds played so far and the running payoff sum.
#[derive(Clone, Debug)]
pub struct GameTranscript {
    rounds: Vec<GameRound>,
    sum: Vec<f64>,
}

impl GameTranscript {
    pub fn new(payoff_dim: usize) -> Self {
        Self {
            rounds: Vec::new(),
            sum: vec![0.0; payoff_dim],
        }
    }

    pub fn len(&self) -> usize {
        self.rounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rounds.is_empty()
    }

    pub fn rounds(&self) -> &[GameRound] {
        &self.rounds
    }

    pub fn push(&mut self, row: usize, col: usize, payoff: Point) {
        for (s, z) in self.sum.iter_mut().zip(payoff.coords()) {
            *s += z;
        }
        self.rounds.push(GameRound { row, col, payoff });
    }

    /// `z̄_n`; `None` before the first round.
    pub fn average(&self) -> Option<Point> {
        if self.rounds.is_empty() {
            return None;
        }
        let n = self.rounds.len() as f64;
        Some(Point::raw(self.sum.iter().map(|s| s / n).collect()))
    }
}

/// Plays `rounds` rounds. Each round the strategy proposes a mixed action, the
/// adversary picks a column seeing that mixed action (not the sampled row),
/// and the row is drawn by inverse-CDF sampling.
pub fn run_game<S, A>(
    m: &PayoffMatrix,
    mut strategy: S,
    mut adversary: A,
    rounds: usize,
    seed: u64,
) -> Result<GameTranscript>
where
    S: FnMut(&GameTranscript) -> Result<SimplexDistribution>,
    A: FnMut(&GameTranscript, &SimplexDistribution) -> Result<usize>,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut transcript = GameTranscript::new(m.payoff_dim());
    for _ in 0..rounds {
        let p = strategy(&transcript)?;
        if p.len() != m.rows() {
            return Err(Error::DimensionMismatch {
                expected: m.rows(),
                found: p.len(),
            });
        }
        let col = adversary(&transcript, &p)?;
        if col >= m.cols() {
            return Err(Error::CategoryOutOfRange {
                category: col,
                d: m.cols(),
            });
        }
        let row = sample_category(&p, rng.gen());
        transcript.push(row, col, m.get(row, col).clone());
    }
    Ok(transcript)
}

/// Player I's strategy induced by the randomization rule: the first round
/// plays `first` purely, afterwards `p(z̄_n)`.
pub fn rule_strategy(
    d: usize,
    first: usize,
    tol: Tolerance,
) -> impl FnMut(&GameTranscript) -> Result<SimplexDistribution> {
    move |t| match t.average() {
        None => Ok(SimplexDistribution::point_mass(d, first)),
        Some(z) => randomize(&PrismPoint::new(z, tol)?, tol),
    }
}
