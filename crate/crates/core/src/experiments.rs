//! Baseline comparison (all-local, all-offload, Stackelberg) and price sweeps.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cost_model::{cost_breakdown, local_profile, transfer_profile, CostBreakdown};
use crate::error::{Error, Result};
use crate::follower::{expected_cost, nash_iterative_with, verify_nash};
use crate::leader::{
    price_grid, revenue, solve_stackelberg_with, SearchOptions, StackelbergSolution,
};
use crate::scenario::{
    CostWeights, PriceBounds, Scenario, ServerProfile, SharingFactors, SCHEMA_VERSION,
};

/// Deviation grid used to certify sweep equilibria.
pub const CERTIFY_GRID_STEP: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Scheme {
    /// All local processing.
    Alp,
    /// All task offloading.
    Ato,
    Stackelberg,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::Alp, Scheme::Ato, Scheme::Stackelberg];

    pub fn as_str(&self) -> &'static str {
        match self {
            Scheme::Alp => "ALP",
            Scheme::Ato => "ATO",
            Scheme::Stackelberg => "STACKELBERG",
        }
    }
}

/// Price charged under the all-offload baseline.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "policy", content = "price_cents")]
pub enum AtoPrice {
    /// Same price as the solved Stackelberg equilibrium.
    #[default]
    Stackelberg,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Assessment {
    pub total_energy_j: f64,
    pub avg_cost_cents: f64,
    pub revenue_cents: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeResult {
    pub scheme: Scheme,
    pub alphas: Vec<f64>,
    pub price_cents: f64,
    pub total_energy_j: f64,
    pub avg_cost_cents: f64,
    pub revenue_cents: f64,
}

/// Energy the edge server spends: the shared workload once at full
/// frequency, each offloader's individual workload at `F/max(Σα, 1)`.
pub fn server_energy(s: &Scenario, alphas: &[f64]) -> f64 {
    let total: f64 = alphas.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    let f = s.server.total_freq_hz;
    let rho_w = s.sharing.rho_w;
    let shared_cycles = rho_w
        * s.users
            .iter()
            .map(|u| u.workload_cycles)
            .fold(0.0, f64::max);
    let individual_cycles: f64 = s
        .users
        .iter()
        .zip(alphas)
        .map(|(u, a)| a * (1.0 - rho_w) * u.workload_cycles)
        .sum();
    let per_user_freq = f / total.max(1.0);
    s.server.server_capacitance
        * (f * f * shared_cycles + per_user_freq * per_user_freq * individual_cycles)
}

fn check_alphas(s: &Scenario, alphas: &[f64]) -> Result<()> {
    if alphas.len() != s.n_users() {
        return Err(Error::InvalidArgument {
            name: "alphas",
            reason: format!("expected {} entries, got {}", s.n_users(), alphas.len()),
        });
    }
    if let Some(i) = alphas.iter().position(|a| !(0.0..=1.0).contains(a)) {
        return Err(Error::InvalidArgument {
            name: "alphas",
            reason: format!("alphas[{i}] = {} ∉ [0,1]", alphas[i]),
        });
    }
    Ok(())
}

pub fn evaluate_assignment_with(
    s: &Scenario,
    bd: &CostBreakdown,
    alphas: &[f64],
    p: f64,
) -> Result<Assessment> {
    check_alphas(s, alphas)?;
    let user_energy: f64 = s
        .users
        .iter()
        .zip(alphas)
        .map(|(u, &a)| {
            let local = local_profile(u, &s.weights).energy_j;
            let transfer = transfer_profile(u, s).energy_j();
            (1.0 - a) * local + a * transfer
        })
        .sum();
    let mut cost = 0.0;
    for i in 0..s.n_users() {
        cost += expected_cost(i, alphas, p, bd)?;
    }
    Ok(Assessment {
        total_energy_j: user_energy + server_energy(s, alphas),
        avg_cost_cents: cost / s.n_users() as f64,
        revenue_cents: revenue(p, alphas.iter().sum()),
    })
}

pub fn evaluate_assignment(s: &Scenario, alphas: &[f64], p: f64) -> Result<Assessment> {
    let bd = cost_breakdown(s)?;
    evaluate_assignment_with(s, &bd, alphas, p)
}

fn scheme_result(
    s: &Scenario,
    bd: &CostBreakdown,
    scheme: Scheme,
    alphas: Vec<f64>,
    price: f64,
) -> Result<SchemeResult> {
    let m = evaluate_assignment_with(s, bd, &alphas, price)?;
    Ok(SchemeResult {
        scheme,
        alphas,
        price_cents: price,
        total_energy_j: m.total_energy_j,
        avg_cost_cents: m.avg_cost_cents,
        revenue_cents: m.revenue_cents,
    })
}

/// Runs one scheme given the solved Stackelberg outcome it may need.
pub fn run_scheme_given(
    s: &Scenario,
    bd: &CostBreakdown,
    solution: &StackelbergSolution,
    scheme: Scheme,
    ato_price: AtoPrice,
) -> Result<SchemeResult> {
    let n = s.n_users();
    match scheme {
        Scheme::Alp => scheme_result(s, bd, scheme, vec![0.0; n], 0.0),
        Scheme::Ato => {
            let price = match ato_price {
                AtoPrice::Stackelberg => solution.price_cents,
                AtoPrice::Fixed(p) => p,
            };
            scheme_result(s, bd, scheme, vec![1.0; n], price)
        }
        Scheme::Stackelberg => scheme_result(
            s,
            bd,
            scheme,
            solution.equilibrium.alphas.clone(),
            solution.price_cents,
        ),
    }
}

pub fn run_scheme(s: &Scenario, scheme: Scheme) -> Result<SchemeResult> {
    let bd = cost_breakdown(s)?;
    if scheme == Scheme::Alp {
        return scheme_result(s, &bd, scheme, vec![0.0; s.n_users()], 0.0);
    }
    let solution = solve_stackelberg_with(&bd, &s.price_bounds, &SearchOptions::default())?;
    run_scheme_given(s, &bd, &solution, scheme, AtoPrice::default())
}

/// Follower state at one price of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RowRegime {
    /// Every user strictly between 0 and 1.
    Interior,
    /// At least one user at 0 or 1.
    Clamped,
    NotConverged,
}

impl RowRegime {
    pub fn as_str(&self) -> &'static str {
        match self {
            RowRegime::Interior => "interior",
            RowRegime::Clamped => "clamped",
            RowRegime::NotConverged => "not-converged",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub price_cents: f64,
    pub sum_alpha: f64,
    pub revenue_cents: f64,
    pub expected_offloaders: f64,
    pub regime: RowRegime,
    pub alphas: Vec<f64>,
    /// Best unilateral deviation gain on the certification grid.
    pub max_deviation_gain: f64,
}

pub fn price_sweep_with(
    bd: &CostBreakdown,
    bounds: &PriceBounds,
    step: f64,
    opts: &SearchOptions,
) -> Result<Vec<SweepRow>> {
    if !(step > 0.0) {
        return Err(Error::InvalidArgument {
            name: "step",
            reason: format!("must be > 0, got {step}"),
        });
    }
    let rows = price_grid(bounds, step)
        .into_par_iter()
        .map(|p| match nash_iterative_with(p, bd, opts.solver) {
            Ok(eq) => SweepRow {
                price_cents: p,
                sum_alpha: eq.sum_alpha,
                revenue_cents: revenue(p, eq.sum_alpha),
                expected_offloaders: eq.sum_alpha,
                regime: if eq.interior {
                    RowRegime::Interior
                } else {
                    RowRegime::Clamped
                },
                max_deviation_gain: verify_nash(&eq, p, bd, CERTIFY_GRID_STEP),
                alphas: eq.alphas,
            },
            Err(e) => {
                log::warn!("sweep row at price {p}: {e}");
                let last = match e {
                    Error::NonConvergence { last, .. } => last,
                    _ => vec![f64::NAN; bd.n_users()],
                };
                let sum: f64 = last.iter().sum();
                SweepRow {
                    price_cents: p,
                    sum_alpha: sum,
                    revenue_cents: revenue(p, sum),
                    expected_offloaders: sum,
                    regime: RowRegime::NotConverged,
                    alphas: last,
                    max_deviation_gain: f64::NAN,
                }
            }
        })
        .collect();
    Ok(rows)
}

pub fn price_sweep(s: &Scenario, step: f64) -> Result<Vec<SweepRow>> {
    let bd = cost_breakdown(s)?;
    price_sweep_with(&bd, &s.price_bounds, step, &SearchOptions::default())
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["price_cents", "sum_alpha", "revenue_cents", "regime"])?;
    for r in rows {
        w.write_record([
            r.price_cents.to_string(),
            r.sum_alpha.to_string(),
            r.revenue_cents.to_string(),
            r.regime.as_str().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Constants a comparison depends on, echoed so it can be replayed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub n_users: usize,
    pub input_bits: Vec<f64>,
    pub workload_cycles: Vec<f64>,
    pub output_bits: Vec<f64>,
    pub rx_power_w: Vec<f64>,
    pub server: ServerProfile,
    pub sharing: SharingFactors,
    pub weights: CostWeights,
    pub price_bounds: PriceBounds,
    pub ato_price: AtoPrice,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Deltas {
    pub energy_reduction_ato_vs_alp_pct: f64,
    pub energy_reduction_stackelberg_vs_alp_pct: f64,
    pub cost_reduction_stackelberg_vs_alp_pct: f64,
    pub cost_reduction_stackelberg_vs_ato_pct: f64,
}

impl Deltas {
    pub fn from_rows(alp: &SchemeResult, ato: &SchemeResult, st: &SchemeResult) -> Self {
        let pct = |new: f64, base: f64| 100.0 * (1.0 - new / base);
        Self {
            energy_reduction_ato_vs_alp_pct: pct(ato.total_energy_j, alp.total_energy_j),
            energy_reduction_stackelberg_vs_alp_pct: pct(st.total_energy_j, alp.total_energy_j),
            cost_reduction_stackelberg_vs_alp_pct: pct(st.avg_cost_cents, alp.avg_cost_cents),
            cost_reduction_stackelberg_vs_ato_pct: pct(st.avg_cost_cents, ato.avg_cost_cents),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub schema_version: u32,
    pub alp: SchemeResult,
    pub ato: SchemeResult,
    pub stackelberg: SchemeResult,
    pub deltas: Deltas,
    pub solution: StackelbergSolution,
    pub provenance: Provenance,
}

impl ComparisonReport {
    pub fn rows(&self) -> [&SchemeResult; 3] {
        [&self.alp, &self.ato, &self.stackelberg]
    }
}

pub fn compare_with(
    s: &Scenario,
    ato_price: AtoPrice,
    opts: &SearchOptions,
) -> Result<ComparisonReport> {
    let bd = cost_breakdown(s)?;
    let solution = solve_stackelberg_with(&bd, &s.price_bounds, opts)?;
    let alp = run_scheme_given(s, &bd, &solution, Scheme::Alp, ato_price)?;
    let ato = run_scheme_given(s, &bd, &solution, Scheme::Ato, ato_price)?;
    let stackelberg = run_scheme_given(s, &bd, &solution, Scheme::Stackelberg, ato_price)?;
    let deltas = Deltas::from_rows(&alp, &ato, &stackelberg);
    let column = |f: fn(&crate::scenario::UserProfile) -> f64| s.users.iter().map(f).collect();
    Ok(ComparisonReport {
        schema_version: SCHEMA_VERSION,
        alp,
        ato,
        stackelberg,
        deltas,
        solution,
        provenance: Provenance {
            seed: s.seed,
            n_users: s.n_users(),
            input_bits: column(|u| u.input_bits),
            workload_cycles: column(|u| u.workload_cycles),
            output_bits: column(|u| u.output_bits),
            rx_power_w: column(|u| u.rx_power_w),
            server: s.server,
            sharing: s.sharing,
            weights: s.weights,
            price_bounds: s.price_bounds,
            ato_price,
        },
    })
}

pub fn compare(s: &Scenario) -> Result<ComparisonReport> {
    compare_with(s, AtoPrice::default(), &SearchOptions::default())
}

pub fn write_comparison_csv<W: Write>(report: &ComparisonReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "scheme",
        "price_cents",
        "total_energy_j",
        "avg_cost_cents",
        "revenue_cents",
    ])?;
    for r in report.rows() {
        w.write_record([
            r.scheme.as_str().to_string(),
            r.price_cents.to_string(),
            r.total_energy_j.to_string(),
            r.avg_cost_cents.to_string(),
            r.revenue_cents.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
