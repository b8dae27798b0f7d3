//! The users' probabilistic-offloading game at a fixed price.
//!
//! User `i` offloading with probability `α_i` pays, in expectation,
//!
//! ```text
//! J_i = α_i·(A_i + μ_M·p) + B_i·α_i·Σα + (1 − α_i)·C_loc,i
//! ```
//!
//! which is strictly convex in `α_i` (second derivative `2·B_i`). Dividing
//! each `J_i` by `B_i` exposes an exact potential
//! `Φ(α) = Σ_i α_i·(A_i + μ_M·p − C_loc,i)/B_i + ½(Σα)² + ½Σα_i²`, so
//! projected Gauss–Seidel best-response sweeps are coordinate descent on a
//! strictly convex quadratic over the unit box and converge to its unique
//! minimizer, clamped or not.

use serde::{Deserialize, Serialize};

use crate::cost_model::CostBreakdown;
use crate::error::{Error, Result};

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_SWEEPS: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FollowerEquilibrium {
    pub alphas: Vec<f64>,
    pub sum_alpha: f64,
    /// Every `α_i` strictly inside (0, 1).
    pub interior: bool,
    pub iterations: usize,
    pub residual: f64,
}

impl FollowerEquilibrium {
    fn from_alphas(alphas: Vec<f64>, iterations: usize, residual: f64) -> Self {
        let sum_alpha = alphas.iter().sum();
        let interior = alphas.iter().all(|&a| a > 0.0 && a < 1.0);
        Self {
            alphas,
            sum_alpha,
            interior,
            iterations,
            residual,
        }
    }
}

/// Tolerance and sweep budget for [`nash_iterative`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_sweeps: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            max_sweeps: DEFAULT_MAX_SWEEPS,
        }
    }
}

fn check_index(i: usize, bd: &CostBreakdown) -> Result<()> {
    if i >= bd.n_users() {
        Err(Error::IndexOutOfRange {
            index: i,
            len: bd.n_users(),
        })
    } else {
        Ok(())
    }
}

/// `J_i` as a function of user `i`'s own probability, others summing to `sum_others`.
fn cost_given_others(i: usize, alpha_i: f64, sum_others: f64, p: f64, bd: &CostBreakdown) -> f64 {
    alpha_i * (bd.a_cents[i] + bd.money_weight * p)
        + bd.b_cents[i] * alpha_i * (sum_others + alpha_i)
        + (1.0 - alpha_i) * bd.c_loc_cents[i]
}

/// Expected total cost of user `i` in cents.
pub fn expected_cost(i: usize, alphas: &[f64], p: f64, bd: &CostBreakdown) -> Result<f64> {
    check_index(i, bd)?;
    if alphas.len() != bd.n_users() {
        return Err(Error::InvalidArgument {
            name: "alphas",
            reason: format!("expected {} entries, got {}", bd.n_users(), alphas.len()),
        });
    }
    let total: f64 = alphas.iter().sum();
    Ok(cost_given_others(i, alphas[i], total - alphas[i], p, bd))
}

fn best_response_unchecked(i: usize, sum_others: f64, p: f64, bd: &CostBreakdown) -> f64 {
    let b = bd.b_cents[i];
    let raw = (bd.surplus(i) - bd.money_weight * p - b * sum_others) / (2.0 * b);
    raw.clamp(0.0, 1.0)
}

/// Unique minimizer of `J_i` over `[0, 1]` given the others' total.
pub fn best_response(i: usize, sum_others: f64, p: f64, bd: &CostBreakdown) -> Result<f64> {
    check_index(i, bd)?;
    let b = bd.b_cents[i];
    if !(b > 0.0) {
        return Err(Error::Degenerate(format!("b_cents[{i}] = {b} must be > 0")));
    }
    Ok(best_response_unchecked(i, sum_others, p, bd))
}

/// Interior equilibrium from summing the first-order conditions.
///
/// Fails with [`Error::NotInterior`] unless every `α_i` lands strictly in
/// (0, 1); callers fall back to [`nash_iterative`] then.
pub fn nash_closed_form(p: f64, bd: &CostBreakdown) -> Result<FollowerEquilibrium> {
    let n = bd.n_users();
    // (C_loc,i − A_i − μ_M·p)/B_i = Σα + α_i
    let ratios: Vec<f64> = (0..n)
        .map(|i| (bd.surplus(i) - bd.money_weight * p) / bd.b_cents[i])
        .collect();
    let sum_alpha = ratios.iter().sum::<f64>() / (n as f64 + 1.0);
    let alphas: Vec<f64> = ratios.iter().map(|r| r - sum_alpha).collect();
    let interior =
        alphas.iter().all(|&a| a > 0.0 && a < 1.0) && sum_alpha > 0.0 && sum_alpha < n as f64;
    if !interior {
        return Err(Error::NotInterior {
            price: p,
            raw_alphas: alphas,
            sum_alpha,
        });
    }
    Ok(FollowerEquilibrium {
        alphas,
        sum_alpha,
        interior: true,
        iterations: 0,
        residual: 0.0,
    })
}

/// Projected Gauss–Seidel best-response sweeps from the all-zero profile.
pub fn nash_iterative(
    p: f64,
    bd: &CostBreakdown,
    tol: f64,
    max_sweeps: usize,
) -> Result<FollowerEquilibrium> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument {
            name: "tol",
            reason: format!("must be > 0, got {tol}"),
        });
    }
    if max_sweeps == 0 {
        return Err(Error::InvalidArgument {
            name: "max_sweeps",
            reason: "must be ≥ 1".into(),
        });
    }
    let n = bd.n_users();
    let mut alphas = vec![0.0; n];
    let mut total = 0.0;
    let mut residual = f64::INFINITY;
    for sweep in 1..=max_sweeps {
        residual = 0.0;
        for (i, a) in alphas.iter_mut().enumerate() {
            let next = best_response_unchecked(i, total - *a, p, bd);
            residual = f64::max(residual, (next - *a).abs());
            total += next - *a;
            *a = next;
        }
        // Re-sum to keep the running total from drifting.
        total = alphas.iter().sum();
        if residual <= tol {
            return Ok(FollowerEquilibrium::from_alphas(alphas, sweep, residual));
        }
    }
    Err(Error::NonConvergence {
        price: p,
        sweeps: max_sweeps,
        residual,
        last: alphas,
    })
}

pub fn nash_iterative_with(
    p: f64,
    bd: &CostBreakdown,
    opts: SolverOptions,
) -> Result<FollowerEquilibrium> {
    nash_iterative(p, bd, opts.tol, opts.max_sweeps)
}

/// Largest cost reduction any single user can obtain by moving to a point
/// of the deviation grid `{0, step, 2·step, …, 1}` with the others fixed.
/// Non-positive (up to rounding) at an exact equilibrium.
pub fn verify_nash(eq: &FollowerEquilibrium, p: f64, bd: &CostBreakdown, grid_step: f64) -> f64 {
    let total: f64 = eq.alphas.iter().sum();
    let steps = (1.0 / grid_step).floor() as usize;
    let mut max_gain = f64::NEG_INFINITY;
    for (i, &alpha_i) in eq.alphas.iter().enumerate() {
        let others = total - alpha_i;
        let current = cost_given_others(i, alpha_i, others, p, bd);
        let deviations = (0..=steps)
            .map(|k| k as f64 * grid_step)
            .chain(std::iter::once(1.0));
        for dev in deviations {
            let gain = current - cost_given_others(i, dev.min(1.0), others, p, bd);
            max_gain = max_gain.max(gain);
        }
    }
    max_gain
}
