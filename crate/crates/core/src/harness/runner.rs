use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::stats::Quartiles;
use super::trace::{trace_header, trace_row};
use crate::adversaries::Adversary;
use crate::error::{Error, Result};
use crate::predictor::PredictorState;
use crate::rule::RuleCase;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseCounts {
    pub case1: u64,
    pub case2: u64,
    pub interior: u64,
}

impl CaseCounts {
    fn record(&mut self, case: RuleCase) {
        match case {
            RuleCase::Case1 => self.case1 += 1,
            RuleCase::Case2 => self.case2 += 1,
            RuleCase::Interior => self.interior += 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub n: u64,
    pub dist: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplicateSummary {
    pub index: usize,
    pub seed: u64,
    pub final_dist: f64,
    pub final_shortfall: f64,
    pub gamma_bar: f64,
    pub max_xbar: f64,
    pub case_counts: CaseCounts,
    pub checkpoints: Vec<Checkpoint>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointQuartiles {
    pub n: u64,
    pub dist: Quartiles,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub final_dist: Quartiles,
    pub final_shortfall: Quartiles,
    pub gamma_bar: Quartiles,
    pub checkpoints: Vec<CheckpointQuartiles>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub d: usize,
    pub steps: u64,
    pub seed: u64,
    pub replicates: usize,
    pub adversary: String,
    pub replicate_summaries: Vec<ReplicateSummary>,
    pub aggregate: Aggregate,
}

impl RunSummary {
    /// Median of the checkpoint at `n`, if it was recorded.
    pub fn median_dist_at(&self, n: u64) -> Option<f64> {
        self.aggregate
            .checkpoints
            .iter()
            .find(|c| c.n == n)
            .map(|c| c.dist.median)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of stream `index` derived from a parent seed.
pub fn child_seed(seed: u64, index: u64) -> u64 {
    splitmix64(seed ^ splitmix64(index))
}

/// `{10², 10³, 10⁴, steps}` restricted to `n ≤ steps`.
pub fn checkpoints_for(steps: u64) -> Vec<u64> {
    let mut out: Vec<u64> = [100, 1_000, 10_000]
        .into_iter()
        .filter(|&n| n < steps)
        .collect();
    out.push(steps);
    out
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    Ok(BufWriter::new(File::create(path).map_err(io_err(path))?))
}

/// Runs replicate `index` and writes its trace, if one is configured.
pub fn run_replicate(cfg: &ExperimentConfig, index: usize) -> Result<ReplicateSummary> {
    let tol = cfg.tolerance()?;
    let seed = child_seed(cfg.seed, index as u64);
    let mut predictor = PredictorState::init(cfg.d, seed, cfg.first_prediction)?
        .with_tolerance(tol)
        .with_interior_policy(cfg.interior_policy);
    let mut adversary = Adversary::new(&cfg.adversary, cfg.d, child_seed(seed, 1))?;

    let trace_path = cfg.trace_path(index);
    let mut trace = match &trace_path {
        Some(path) => {
            let mut w = create(path)?;
            writeln!(w, "{}", trace_header(cfg.d)).map_err(io_err(path))?;
            Some((w, path))
        }
        None => None,
    };
    let stride = cfg.trace_stride();
    let marks = checkpoints_for(cfg.steps);
    let mut checkpoints = Vec::with_capacity(marks.len());
    let mut cases = CaseCounts::default();
    let mut last = None;

    for n in 1..=cfg.steps {
        let pred = predictor.predict()?;
        let x = adversary.next(Some(&pred.dist))?;
        let rec = predictor.observe(x, pred.y)?;
        cases.record(rec.case);
        if marks.contains(&n) {
            checkpoints.push(Checkpoint {
                n,
                dist: rec.dist_to_target,
            });
        }
        if let Some((w, path)) = trace.as_mut() {
            if n % stride == 0 || n == cfg.steps {
                writeln!(w, "{}", trace_row(&rec)).map_err(io_err(path))?;
            }
        }
        last = Some(rec);
    }
    if let Some((mut w, path)) = trace {
        w.flush().map_err(io_err(path))?;
    }

    let last = last.expect("steps is at least 1");
    Ok(ReplicateSummary {
        index,
        seed,
        final_dist: last.dist_to_target,
        final_shortfall: last.shortfall,
        gamma_bar: last.gamma_bar,
        max_xbar: last.xbar.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        case_counts: cases,
        checkpoints,
    })
}

/// Runs all replicates in parallel and writes the summary, if configured.
/// Output files depend only on the config.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunSummary> {
    cfg.validate()?;
    let replicate_summaries = (0..cfg.replicates)
        .into_par_iter()
        .map(|r| run_replicate(cfg, r))
        .collect::<Result<Vec<_>>>()?;

    let column = |f: &dyn Fn(&ReplicateSummary) -> f64| -> Quartiles {
        let values: Vec<f64> = replicate_summaries.iter().map(f).collect();
        Quartiles::of(&values).expect("at least one replicate")
    };
    let checkpoints = checkpoints_for(cfg.steps)
        .into_iter()
        .enumerate()
        .map(|(i, n)| CheckpointQuartiles {
            n,
            dist: column(&|r| r.checkpoints[i].dist),
        })
        .collect();
    let aggregate = Aggregate {
        final_dist: column(&|r| r.final_dist),
        final_shortfall: column(&|r| r.final_shortfall),
        gamma_bar: column(&|r| r.gamma_bar),
        checkpoints,
    };
    let summary = RunSummary {
        d: cfg.d,
        steps: cfg.steps,
        seed: cfg.seed,
        replicates: cfg.replicates,
        adversary: cfg.adversary.to_string(),
        replicate_summaries,
        aggregate,
    };
    if let Some(path) = &cfg.summary {
        let mut w = create(path)?;
        serde_json::to_writer_pretty(&mut w, &summary)?;
        writeln!(w).map_err(io_err(path))?;
        w.flush().map_err(io_err(path))?;
    }
    Ok(summary)
}
