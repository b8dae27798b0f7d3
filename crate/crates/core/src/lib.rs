//! Uniform-price Stackelberg equilibrium between an edge service provider
//! and co-located AR users who offload their pipelines probabilistically
//! and share input data, workloads and output data when they do.
//!
//! The flow is [`scenario`] → [`cost_model`] → [`follower`] → [`leader`],
//! with [`experiments`] running the baselines and price sweeps on top.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod cost_model;
pub mod error;
pub mod experiments;
pub mod follower;
mod golden;
pub mod leader;
pub mod scenario;

pub use cost_model::{cost_breakdown, CostBreakdown};
pub use error::{Error, Result};
pub use follower::{FollowerEquilibrium, SolverOptions};
pub use leader::{solve_stackelberg, Regime, StackelbergSolution};
pub use scenario::{generate_scenario, Scenario, ScenarioSpec};
