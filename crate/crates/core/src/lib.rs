//! Derivative-free minimization of approximately convex functions over convex
//! bodies given by a membership oracle.
//!
//! The pipeline: a rejection sampler for β-log-concave densities on a line
//! ([`sampler1d`]) drives a Hit-and-Run walk ([`hit_and_run`]) over a
//! [`geometry::ConvexBody`]; [`annealing`] runs many walks through a falling
//! temperature schedule with periodic isotropic rounding. [`stochastic`] turns
//! noisy oracles into approximately convex ones, and [`staged`] re-runs the
//! annealer on shrinking balls when the non-convexity decays near the optimum.
//! [`reference`] holds quadrature ground truth for tests.
//!
//! ```
//! use hranneal::{anneal, make_plan, AnnealOptions, ConvexBody, FnObjective, PlanOverrides};
//!
//! let body = ConvexBody::unit_ball(2).unwrap();
//! let f = FnObjective::new(2, |x: &[f64]| (x[0] - 0.3).powi(2) + (x[1] + 0.2).powi(2));
//! let overrides = PlanOverrides { steps: Some(40), burn_in_base: 10, ..Default::default() };
//! let plan = make_plan(2, 0.1, &body, 0.05, &overrides).unwrap();
//! let result = anneal(&f, &body, &plan, 7, AnnealOptions::default()).unwrap();
//! assert!(result.best_value < 0.2);
//! ```

// `!(x > 0.0)` is how parameter checks reject NaN along with the bad range.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod annealing;
pub mod error;
pub mod geometry;
pub mod hit_and_run;
pub mod objective;
pub mod problems;
pub mod reference;
pub mod rng;
pub mod sampler1d;
pub mod staged;
pub mod stochastic;

pub use annealing::{anneal, make_plan, AnnealOptions, AnnealResult, AnnealingPlan, PlanOverrides};
pub use error::{Error, Result};
pub use geometry::{find_chord, BodySpec, Chord, ConvexBody, RoundingMap};
pub use hit_and_run::{walk, LogDensity, WalkParams, WalkResult};
pub use objective::{FnObjective, Objective};
pub use sampler1d::{sample_chord, ChordFunction, SamplerParams};
pub use staged::{staged_optimize, DecayModel};
pub use stochastic::{StochasticOracle, StochasticOracleConfig};
