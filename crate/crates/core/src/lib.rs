//! Generalized Blackwell prediction for categorical sequences.
//!
//! The crate is organised bottom-up:
//!
//! * [`geometry`]: affine hulls, intersections and projections in `ℝ^d`.
//! * [`prism`]: the state prism `V_d`, the target set inside it, the cutting
//!   hyperplanes and the nearest-point map onto the target.
//! * [`rule`]: the randomization rule `p(v)`, the classical two-category rule
//!   and the auxiliary constructions used to certify the separation property.
//! * [`predictor`]: the online predictor state machine.
//! * [`approachability`]: repeated games with vector payoffs and the
//!   separation (condition C) verifier.
//! * [`adversaries`]: outcome generators used by the simulator.
//! * [`harness`]: experiment runner, trace/summary writers and the
//!   geometry verification sweep.

pub mod adversaries;
pub mod approachability;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod predictor;
pub mod prism;
pub mod rule;

pub use error::{Error, Result};
pub use geometry::{Point, Tolerance};
pub use prism::{PrismPoint, SimplexDistribution, StateW};
