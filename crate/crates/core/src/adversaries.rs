//! Outcome generators for the simulator.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::predictor::sample_category;
use crate::prism::SimplexDistribution;

/// Configuration of an outcome generator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AdversarySpec {
    /// Replays a literal sequence.
    Fixed {
        sequence: Vec<usize>,
        #[serde(default = "default_true")]
        cycle: bool,
    },
    /// Independent draws from a probability vector; `None` means uniform.
    Iid {
        #[serde(default)]
        probs: Option<Vec<f64>>,
        #[serde(default)]
        seed: Option<u64>,
    },
    /// Cycles a pattern forever.
    Periodic { pattern: Vec<usize> },
    /// Picks the category the predictor is least likely to guess.
    WorstCase,
    /// Runs `inner` but never emits `omitted`, remapping it to
    /// `(omitted + 1) mod d`.
    OmitCategory {
        omitted: usize,
        inner: Box<AdversarySpec>,
    },
}

fn default_true() -> bool {
    true
}

impl AdversarySpec {
    pub fn iid_uniform() -> Self {
        AdversarySpec::Iid {
            probs: None,
            seed: None,
        }
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        let check = |k: usize| {
            if k < d {
                Ok(())
            } else {
                Err(Error::CategoryOutOfRange { category: k, d })
            }
        };
        match self {
            AdversarySpec::Fixed { sequence, .. } => {
                if sequence.is_empty() {
                    return Err(Error::InvalidConfig("fixed sequence is empty".into()));
                }
                sequence.iter().try_for_each(|&k| check(k))
            }
            AdversarySpec::Periodic { pattern } => {
                if pattern.is_empty() {
                    return Err(Error::InvalidConfig("periodic pattern is empty".into()));
                }
                pattern.iter().try_for_each(|&k| check(k))
            }
            AdversarySpec::Iid { probs, .. } => match probs {
                Some(p) if p.len() != d => Err(Error::DimensionMismatch {
                    expected: d,
                    found: p.len(),
                }),
                Some(p) => SimplexDistribution::new(p.clone(), Default::default()).map(|_| ()),
                None => Ok(()),
            },
            AdversarySpec::WorstCase => Ok(()),
            AdversarySpec::OmitCategory { omitted, inner } => {
                check(*omitted)?;
                inner.validate(d)
            }
        }
    }
}

/// Short textual form used on the command line:
/// `worst-case`, `iid-uniform`, `iid:0.2,0.3,0.5`, `periodic:0,1,1`,
/// `fixed:0,1,2`, `fixed-once:0,1,2`, `omit:<k>` or `omit:<k>:<inner>`.
impl FromStr for AdversarySpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |msg: &str| Error::InvalidConfig(format!("adversary `{s}`: {msg}"));
        let list = |body: &str| -> Result<Vec<usize>> {
            body.split(',')
                .map(|t| t.trim().parse::<usize>().map_err(|_| bad("expected category list")))
                .collect()
        };
        let (head, body) = s.split_once(':').unwrap_or((s, ""));
        match head.trim() {
            "worst-case" | "worst_case" => Ok(AdversarySpec::WorstCase),
            "iid-uniform" | "iid" if body.is_empty() => Ok(AdversarySpec::iid_uniform()),
            "iid" => {
                let probs = body
                    .split(',')
                    .map(|t| t.trim().parse::<f64>().map_err(|_| bad("expected probabilities")))
                    .collect::<Result<Vec<_>>>()?;
                Ok(AdversarySpec::Iid {
                    probs: Some(probs),
                    seed: None,
                })
            }
            "periodic" => Ok(AdversarySpec::Periodic { pattern: list(body)? }),
            "fixed" => Ok(AdversarySpec::Fixed {
                sequence: list(body)?,
                cycle: true,
            }),
            "fixed-once" => Ok(AdversarySpec::Fixed {
                sequence: list(body)?,
                cycle: false,
            }),
            "omit" | "omit-category" => {
                let (k, inner) = body.split_once(':').unwrap_or((body, "iid-uniform"));
                let omitted = k.trim().parse().map_err(|_| bad("expected omitted category"))?;
                Ok(AdversarySpec::OmitCategory {
                    omitted,
                    inner: Box::new(inner.parse()?),
                })
            }
            _ => Err(bad("unknown kind")),
        }
    }
}

impl fmt::Display for AdversarySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |v: &[usize]| v.iter().map(ToString::to_string).collect::<Vec<_>>().join(",");
        match self {
            AdversarySpec::WorstCase => write!(f, "worst-case"),
            AdversarySpec::Iid { probs: None, .. } => write!(f, "iid-uniform"),
            AdversarySpec::Iid { probs: Some(p), .. } => write!(
                f,
                "iid:{}",
                p.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
            ),
            AdversarySpec::Periodic { pattern } => write!(f, "periodic:{}", join(pattern)),
            AdversarySpec::Fixed { sequence, cycle: true } => write!(f, "fixed:{}", join(sequence)),
            AdversarySpec::Fixed { sequence, cycle: false } => {
                write!(f, "fixed-once:{}", join(sequence))
            }
            AdversarySpec::OmitCategory { omitted, inner } => write!(f, "omit:{omitted}:{inner}"),
        }
    }
}

/// A running outcome generator.
#[derive(Debug)]
pub struct Adversary {
    d: usize,
    step: usize,
    kind: Kind,
}

#[derive(Debug)]
enum Kind {
    Fixed { sequence: Vec<usize>, cycle: bool },
    Iid { probs: SimplexDistribution, rng: Box<ChaCha8Rng> },
    Periodic { pattern: Vec<usize> },
    WorstCase,
    Omit { omitted: usize, inner: Box<Adversary> },
}

impl Adversary {
    /// `seed` drives stochastic kinds unless the spec pins its own seed.
    pub fn new(spec: &AdversarySpec, d: usize, seed: u64) -> Result<Self> {
        spec.validate(d)?;
        let kind = match spec {
            AdversarySpec::Fixed { sequence, cycle } => Kind::Fixed {
                sequence: sequence.clone(),
                cycle: *cycle,
            },
            AdversarySpec::Iid { probs, seed: own } => Kind::Iid {
                probs: match probs {
                    Some(p) => SimplexDistribution::new(p.clone(), Default::default())?,
                    None => SimplexDistribution::uniform(d),
                },
                rng: Box::new(ChaCha8Rng::seed_from_u64(own.unwrap_or(seed))),
            },
            AdversarySpec::Periodic { pattern } => Kind::Periodic {
                pattern: pattern.clone(),
            },
            AdversarySpec::WorstCase => Kind::WorstCase,
            AdversarySpec::OmitCategory { omitted, inner } => Kind::Omit {
                omitted: *omitted,
                inner: Box::new(Adversary::new(inner, d, seed)?),
            },
        };
        Ok(Self { d, step: 0, kind })
    }

    /// Next outcome. `p` is the predictor's distribution for this round, when
    /// one is available; the realized prediction is never shown.
    pub fn next(&mut self, p: Option<&SimplexDistribution>) -> Result<usize> {
        let step = self.step;
        self.step += 1;
        match &mut self.kind {
            Kind::Fixed { sequence, cycle } => {
                if step < sequence.len() {
                    Ok(sequence[step])
                } else if *cycle {
                    Ok(sequence[step % sequence.len()])
                } else {
                    Err(Error::SequenceExhausted(sequence.len()))
                }
            }
            Kind::Iid { probs, rng } => Ok(sample_category(probs, rng.gen())),
            Kind::Periodic { pattern } => Ok(pattern[step % pattern.len()]),
            Kind::WorstCase => Ok(p.map_or(0, argmin)),
            Kind::Omit { omitted, inner } => {
                let x = inner.next(p)?;
                Ok(if x == *omitted { (x + 1) % self.d } else { x })
            }
        }
    }
}

/// Lowest index among the smallest probabilities.
fn argmin(p: &SimplexDistribution) -> usize {
    let probs = p.probs();
    let mut best = 0;
    for (k, &pk) in probs.iter().enumerate().skip(1) {
        if pk < probs[best] {
            best = k;
        }
    }
    best
}
