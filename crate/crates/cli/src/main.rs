use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use gba_core::adversaries::AdversarySpec;
use gba_core::harness::{run_experiment, verify_geometry, ExperimentConfig};
use gba_core::predictor::InteriorPolicy;
use gba_core::prism::{classify, project_to_target, side_values};
use gba_core::rule::decide;
use gba_core::{Point, PrismPoint, Tolerance};
use serde_json::json;

#[derive(Parser)]
#[command(name = "gba", version, about = "Generalized Blackwell predictor for d categories")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run predictor-vs-adversary replicates and write traces and a summary.
    Run(RunArgs),
    /// Check the geometric identities on random outside points.
    Verify {
        #[arg(long)]
        d: usize,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Print the randomization rule, side values and region of a state.
    Rule(PointArgs),
    /// Print the nearest target point of a state.
    Project(PointArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML experiment file; the flags below are ignored when given.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, required_unless_present = "config")]
    d: Option<usize>,
    #[arg(long, required_unless_present = "config")]
    steps: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    replicates: usize,
    /// e.g. worst-case, iid-uniform, iid:0.2,0.8, periodic:0,1,2, fixed:1, omit:3:worst-case
    #[arg(long, default_value = "worst-case")]
    adversary: AdversarySpec,
    #[arg(long, default_value_t = 0)]
    first_prediction: usize,
    #[arg(long)]
    hold_last: bool,
    #[arg(long)]
    trace_every: Option<u64>,
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Args)]
struct PointArgs {
    #[arg(long)]
    d: usize,
    /// Comma-separated coordinates.
    #[arg(long, allow_hyphen_values = true)]
    point: String,
}

impl RunArgs {
    fn into_config(self) -> Result<ExperimentConfig> {
        if let Some(path) = &self.config {
            return ExperimentConfig::load(path)
                .with_context(|| format!("loading {}", path.display()));
        }
        let (Some(d), Some(steps)) = (self.d, self.steps) else {
            bail!("--d and --steps are required without --config");
        };
        let mut cfg = ExperimentConfig::new(d, steps, self.adversary);
        cfg.seed = self.seed;
        cfg.replicates = self.replicates;
        cfg.first_prediction = self.first_prediction;
        if self.hold_last {
            cfg.interior_policy = InteriorPolicy::HoldLast;
        }
        cfg.trace_every = self.trace_every;
        cfg.trace = self.trace;
        cfg.summary = self.summary;
        cfg.validate()?;
        Ok(cfg)
    }
}

impl PointArgs {
    fn state(&self) -> Result<PrismPoint> {
        let coords = self
            .point
            .split(',')
            .map(|t| t.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .context("--point must be comma-separated numbers")?;
        if coords.len() != self.d {
            bail!("--point has {} coordinates, expected {}", coords.len(), self.d);
        }
        Ok(PrismPoint::new(Point::new(coords)?, Tolerance::default())?)
    }
}

fn print(value: &serde_json::Value) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    let tol = Tolerance::default();
    match cli.command {
        Command::Run(args) => {
            let cfg = args.into_config()?;
            let summary = run_experiment(&cfg)?;
            if cfg.summary.is_none() {
                print(&serde_json::to_value(&summary)?)?;
            } else {
                let a = &summary.aggregate;
                eprintln!(
                    "{} replicate(s), {} steps: median final dist {:.6e}, median shortfall {:.6e}",
                    summary.replicates, summary.steps, a.final_dist.median, a.final_shortfall.median
                );
            }
        }
        Command::Verify { d, samples, seed } => {
            let report = verify_geometry(d, samples, seed)?;
            print(&serde_json::to_value(&report)?)?;
            if !report.passed {
                return Ok(ExitCode::from(2));
            }
        }
        Command::Rule(args) => {
            let v = args.state()?;
            let decision = decide(&v, tol)?;
            print(&json!({
                "p": decision.dist.probs(),
                "sigma": side_values(&v),
                "classification": classify(&v, tol),
                "case": decision.case.as_str(),
            }))?;
        }
        Command::Project(args) => {
            let v = args.state()?;
            let proj = project_to_target(&v, tol);
            print(&json!({ "point": proj.point, "dist": proj.dist }))?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
