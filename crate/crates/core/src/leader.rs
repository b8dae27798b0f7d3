//! The provider's uniform price: demand law, revenue, and the Stackelberg
//! solution by backward induction.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cost_model::{cost_breakdown, CostBreakdown};
use crate::error::{Error, Result};
use crate::follower::{nash_closed_form, nash_iterative_with, FollowerEquilibrium, SolverOptions};
use crate::golden;
use crate::scenario::{PriceBounds, Scenario};

/// Aggregate interior demand `Σα = φ − θ·p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DemandCoefficients {
    pub phi: f64,
    pub theta: f64,
}

impl DemandCoefficients {
    pub fn demand(&self, p: f64) -> f64 {
        self.phi - self.theta * p
    }
}

/// Which analysis produced the price.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    /// φ/(2θ) lies inside the bounds and every follower is interior there.
    InteriorClosedForm,
    /// Some follower sits at α = 0 or α = 1 at the chosen price.
    BoundaryClamped,
    /// Followers interior, but the revenue peak lies outside the bounds.
    BoundConstrained,
}

impl Regime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::InteriorClosedForm => "interior-closed-form",
            Regime::BoundaryClamped => "boundary-clamped",
            Regime::BoundConstrained => "bound-constrained",
        }
    }
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StackelbergSolution {
    pub price_cents: f64,
    pub equilibrium: FollowerEquilibrium,
    pub revenue_cents: f64,
    pub demand: DemandCoefficients,
    pub regime: Regime,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchOptions {
    pub grid_step: f64,
    pub refine_tol: f64,
    pub solver: SolverOptions,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            grid_step: 1.0,
            refine_tol: 1e-6,
            solver: SolverOptions::default(),
        }
    }
}

pub fn demand_coefficients(bd: &CostBreakdown) -> Result<DemandCoefficients> {
    let n = bd.n_users() as f64;
    let mut phi = 0.0;
    let mut inv_b = 0.0;
    for (i, &b) in bd.b_cents.iter().enumerate() {
        if !(b > 0.0) {
            return Err(Error::Degenerate(format!("b_cents[{i}] = {b} must be > 0")));
        }
        phi += bd.surplus(i) / b;
        inv_b += 1.0 / b;
    }
    Ok(DemandCoefficients {
        phi: phi / (n + 1.0),
        theta: bd.money_weight * inv_b / (n + 1.0),
    })
}

pub fn revenue(p: f64, sum_alpha: f64) -> f64 {
    p * sum_alpha
}

/// Maximizer of `p·(φ − θp)` projected onto the bounds.
pub fn optimal_price_closed_form(d: &DemandCoefficients, b: &PriceBounds) -> Result<f64> {
    if !(d.theta > 0.0) {
        return Err(Error::InvalidArgument {
            name: "theta",
            reason: format!("must be > 0, got {}", d.theta),
        });
    }
    Ok(b.clamp(d.phi / (2.0 * d.theta)))
}

/// Grid prices from `p_min` in steps of `step`, always ending at `p_max`.
pub fn price_grid(b: &PriceBounds, step: f64) -> Vec<f64> {
    let span = b.p_max - b.p_min;
    let n = (span / step + 1e-9).floor() as usize;
    let mut grid: Vec<f64> = (0..=n).map(|k| b.p_min + k as f64 * step).collect();
    if let Some(&last) = grid.last() {
        if b.p_max - last > 1e-9 * step.max(1.0) {
            grid.push(b.p_max);
        } else if let Some(l) = grid.last_mut() {
            *l = b.p_max;
        }
    }
    grid
}

fn classify(price: f64, eq: &FollowerEquilibrium, b: &PriceBounds) -> Regime {
    if !eq.interior {
        Regime::BoundaryClamped
    } else if price <= b.p_min || price >= b.p_max {
        Regime::BoundConstrained
    } else {
        // Interior followers at an interior revenue peak pin the price to φ/(2θ).
        Regime::InteriorClosedForm
    }
}

/// Grid + golden-section search over `[p_min, p_max]` with the iterative
/// follower solver at every evaluated price.
pub fn optimal_price_search_with(
    bd: &CostBreakdown,
    bounds: &PriceBounds,
    opts: &SearchOptions,
) -> Result<StackelbergSolution> {
    if !(opts.grid_step > 0.0) {
        return Err(Error::InvalidArgument {
            name: "grid_step",
            reason: format!("must be > 0, got {}", opts.grid_step),
        });
    }
    if !(opts.refine_tol > 0.0) {
        return Err(Error::InvalidArgument {
            name: "refine_tol",
            reason: format!("must be > 0, got {}", opts.refine_tol),
        });
    }
    let d = demand_coefficients(bd)?;
    let eval = |p: f64| -> Result<f64> {
        Ok(revenue(
            p,
            nash_iterative_with(p, bd, opts.solver)?.sum_alpha,
        ))
    };

    let grid = price_grid(bounds, opts.grid_step);
    let revenues: Vec<f64> = grid
        .par_iter()
        .map(|&p| eval(p))
        .collect::<Result<Vec<_>>>()?;

    // Strict comparison keeps the lowest price among ties.
    let mut k_best = 0;
    for (k, &r) in revenues.iter().enumerate() {
        if r > revenues[k_best] {
            k_best = k;
        }
    }
    let lo = grid[k_best.saturating_sub(1)];
    let hi = grid[(k_best + 1).min(grid.len() - 1)];
    let (p_ref, r_ref) = golden::maximize(eval, lo, hi, opts.refine_tol)?;

    let price = if r_ref > revenues[k_best] || (r_ref == revenues[k_best] && p_ref < grid[k_best]) {
        p_ref
    } else {
        grid[k_best]
    };
    let equilibrium = nash_iterative_with(price, bd, opts.solver)?;
    let regime = classify(price, &equilibrium, bounds);
    Ok(StackelbergSolution {
        price_cents: price,
        revenue_cents: revenue(price, equilibrium.sum_alpha),
        equilibrium,
        demand: d,
        regime,
    })
}

pub fn optimal_price_search(
    s: &Scenario,
    grid_step: f64,
    refine_tol: f64,
) -> Result<StackelbergSolution> {
    let bd = cost_breakdown(s)?;
    let opts = SearchOptions {
        grid_step,
        refine_tol,
        ..SearchOptions::default()
    };
    optimal_price_search_with(&bd, &s.price_bounds, &opts)
}

/// Backward induction on an already-computed cost breakdown.
pub fn solve_stackelberg_with(
    bd: &CostBreakdown,
    bounds: &PriceBounds,
    opts: &SearchOptions,
) -> Result<StackelbergSolution> {
    let d = demand_coefficients(bd)?;
    let searched = optimal_price_search_with(bd, bounds, opts)?;

    let closed = optimal_price_closed_form(&d, bounds)
        .ok()
        .filter(|&p| b_interior(bounds, d.phi / (2.0 * d.theta), p))
        .filter(|&p| nash_closed_form(p, bd).is_ok());

    if let Some(p) = closed {
        let equilibrium = nash_iterative_with(p, bd, opts.solver)?;
        let rev = revenue(p, equilibrium.sum_alpha);
        // The closed form is only a local statement; keep it unless the
        // global search found strictly more revenue elsewhere.
        if rev >= searched.revenue_cents * (1.0 - 1e-12) {
            return Ok(StackelbergSolution {
                price_cents: p,
                revenue_cents: rev,
                regime: classify(p, &equilibrium, bounds),
                equilibrium,
                demand: d,
            });
        }
    }
    Ok(searched)
}

fn b_interior(b: &PriceBounds, unclamped: f64, clamped: f64) -> bool {
    unclamped == clamped && unclamped > b.p_min && unclamped < b.p_max
}

/// Stackelberg price and follower equilibrium with default search options.
pub fn solve_stackelberg(s: &Scenario) -> Result<StackelbergSolution> {
    let bd = cost_breakdown(s)?;
    solve_stackelberg_with(&bd, &s.price_bounds, &SearchOptions::default())
}
