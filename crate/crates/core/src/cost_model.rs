//! Per-user local and offloading costs under collaborative sharing.
//!
//! Offloading cost for user `i` at aggregate demand `Σα` is `A_i + B_i·Σα`:
//! `A_i` collects every term that does not depend on how many users share
//! the server (transfers, the shared workload run once at the full server
//! frequency, radio energy), while `B_i·Σα` is the time spent on the
//! individual workload at the per-offloader frequency `F/Σα`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::{CostWeights, Scenario, UserProfile};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalProfile {
    pub time_s: f64,
    pub energy_j: f64,
    pub cost_cents: f64,
}

pub fn local_profile(u: &UserProfile, w: &CostWeights) -> LocalProfile {
    let time_s = u.workload_cycles / u.local_freq_hz;
    let energy_j = u.capacitance * u.local_freq_hz * u.local_freq_hz * u.workload_cycles;
    LocalProfile {
        time_s,
        energy_j,
        cost_cents: u.time_penalty_cents_per_s * time_s + w.energy_weight_cents_per_j * energy_j,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransferProfile {
    /// Waiting for the shared input pool, limited by the slowest uplink.
    pub wait_s: f64,
    pub up_time_s: f64,
    pub up_energy_j: f64,
    /// Shared output broadcast at the slowest rate plus the individual part.
    pub down_time_s: f64,
    pub down_energy_j: f64,
}

impl TransferProfile {
    pub fn energy_j(&self) -> f64 {
        self.up_energy_j + self.down_energy_j
    }
}

pub fn transfer_profile(u: &UserProfile, s: &Scenario) -> TransferProfile {
    let r_min = s.min_data_rate();
    let sh = s.sharing;
    let up_time_s = (1.0 - sh.rho_in) * u.input_bits / u.data_rate_bps;
    let wait_s = sh.rho_in * u.input_bits / r_min;
    let down_time_s =
        sh.rho_out * u.output_bits / r_min + (1.0 - sh.rho_out) * u.output_bits / u.data_rate_bps;
    TransferProfile {
        wait_s,
        up_time_s,
        up_energy_j: u.tx_power_w * up_time_s,
        down_time_s,
        down_energy_j: u.rx_power_w * down_time_s,
    }
}

/// Returns `(A_i, B_i)` in cents.
pub fn offload_coefficients(u: &UserProfile, s: &Scenario) -> Result<(f64, f64)> {
    let f = s.server.total_freq_hz;
    if !(f.is_finite() && f > 0.0) {
        return Err(Error::InvalidArgument {
            name: "server.total_freq_hz",
            reason: format!("must be > 0, got {f}"),
        });
    }
    let t = transfer_profile(u, s);
    let lambda = u.time_penalty_cents_per_s;
    let shared_compute_s = s.sharing.rho_w * u.workload_cycles / f;
    let a = lambda * (t.wait_s + t.up_time_s + shared_compute_s + t.down_time_s)
        + s.weights.energy_weight_cents_per_j * t.energy_j();
    let b = lambda * (1.0 - s.sharing.rho_w) * u.workload_cycles / f;
    Ok((a, b))
}

/// Per-user coefficients that fully determine the follower game.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub c_loc_cents: Vec<f64>,
    pub a_cents: Vec<f64>,
    pub b_cents: Vec<f64>,
    /// Weight on the price in each user's cost.
    pub money_weight: f64,
}

impl CostBreakdown {
    /// Builds a breakdown directly from coefficients, checking `B_i > 0`.
    pub fn new(c_loc: Vec<f64>, a: Vec<f64>, b: Vec<f64>, money_weight: f64) -> Result<Self> {
        if c_loc.len() != a.len() || a.len() != b.len() {
            return Err(Error::InvalidArgument {
                name: "coefficients",
                reason: format!(
                    "length mismatch: c_loc {}, a {}, b {}",
                    c_loc.len(),
                    a.len(),
                    b.len()
                ),
            });
        }
        if c_loc.is_empty() {
            return Err(Error::Degenerate("no users".into()));
        }
        if let Some(i) = b.iter().position(|&bi| !(bi.is_finite() && bi > 0.0)) {
            return Err(Error::Degenerate(format!(
                "b_cents[{i}] = {} must be > 0 for a strictly convex follower cost",
                b[i]
            )));
        }
        if !(money_weight.is_finite() && money_weight >= 0.0) {
            return Err(Error::InvalidArgument {
                name: "money_weight",
                reason: format!("must be ≥ 0, got {money_weight}"),
            });
        }
        Ok(Self {
            c_loc_cents: c_loc,
            a_cents: a,
            b_cents: b,
            money_weight,
        })
    }

    pub fn n_users(&self) -> usize {
        self.c_loc_cents.len()
    }

    /// Net saving from offloading before price and congestion, `C_loc,i − A_i`.
    pub fn surplus(&self, i: usize) -> f64 {
        self.c_loc_cents[i] - self.a_cents[i]
    }

    pub fn max_b(&self) -> f64 {
        self.b_cents.iter().copied().fold(0.0, f64::max)
    }

    /// Same game with user order reversed.
    pub fn reversed(&self) -> Self {
        let rev = |v: &[f64]| v.iter().rev().copied().collect::<Vec<_>>();
        Self {
            c_loc_cents: rev(&self.c_loc_cents),
            a_cents: rev(&self.a_cents),
            b_cents: rev(&self.b_cents),
            money_weight: self.money_weight,
        }
    }
}

pub fn cost_breakdown(s: &Scenario) -> Result<CostBreakdown> {
    s.validate()?;
    let mut c_loc = Vec::with_capacity(s.n_users());
    let mut a = Vec::with_capacity(s.n_users());
    let mut b = Vec::with_capacity(s.n_users());
    for u in &s.users {
        c_loc.push(local_profile(u, &s.weights).cost_cents);
        let (ai, bi) = offload_coefficients(u, s)?;
        a.push(ai);
        b.push(bi);
    }
    CostBreakdown::new(c_loc, a, b, s.weights.money_weight)
}
