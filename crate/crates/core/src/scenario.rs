//! Scenario types, validation, unit conversion and the seeded generator.
//!
//! All quantities are SI except money (cents) and the generator's transmit
//! power range, which is drawn in dBm and stored in watts.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Violation};

/// Version stamped into every serialized scenario and result file.
pub const SCHEMA_VERSION: u32 = 1;

/// Defaults for the standard eight-user scenario.
pub mod calibration {
    /// Input data per user, bits.
    pub const INPUT_BITS: f64 = 4.0e5;
    /// Total tracker + mapper + recognizer + renderer workload, cycles.
    pub const WORKLOAD_CYCLES: f64 = 6.0e8;
    /// Output data per user, bits.
    pub const OUTPUT_BITS: f64 = 2.0e5;
    /// Receive power, watts.
    pub const RX_POWER_W: f64 = 0.1;
    /// Edge-server switched capacitance, W·s³/cycle³.
    pub const SERVER_CAPACITANCE: f64 = 2.0e-27;
    /// Cents charged per joule spent.
    pub const ENERGY_WEIGHT_CENTS_PER_J: f64 = 30.0;
    pub const MONEY_WEIGHT: f64 = 1.0;
    /// Seed used by `--defaults` when none is given.
    pub const DEFAULT_SEED: u64 = 15;
}

/// Converts a power level in dBm to watts.
pub fn dbm_to_watts(p_dbm: f64) -> Result<f64> {
    if !p_dbm.is_finite() {
        return Err(Error::InvalidArgument {
            name: "p_dbm",
            reason: format!("must be finite, got {p_dbm}"),
        });
    }
    Ok(10f64.powf((p_dbm - 30.0) / 10.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserProfile {
    pub id: usize,
    pub input_bits: f64,
    pub workload_cycles: f64,
    pub output_bits: f64,
    pub local_freq_hz: f64,
    pub data_rate_bps: f64,
    pub tx_power_w: f64,
    pub rx_power_w: f64,
    pub capacitance: f64,
    pub time_penalty_cents_per_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ServerProfile {
    pub total_freq_hz: f64,
    pub server_capacitance: f64,
}

/// Fractions of input data, workload and output data that become shared
/// among offloading users.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SharingFactors {
    pub rho_in: f64,
    pub rho_w: f64,
    pub rho_out: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostWeights {
    pub energy_weight_cents_per_j: f64,
    pub money_weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriceBounds {
    pub p_min: f64,
    pub p_max: f64,
}

impl PriceBounds {
    pub fn clamp(&self, p: f64) -> f64 {
        p.clamp(self.p_min, self.p_max)
    }

    pub fn contains(&self, p: f64) -> bool {
        p >= self.p_min && p <= self.p_max
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    pub users: Vec<UserProfile>,
    pub server: ServerProfile,
    pub sharing: SharingFactors,
    pub weights: CostWeights,
    pub price_bounds: PriceBounds,
    #[serde(default)]
    pub seed: u64,
}

fn schema_version() -> u32 {
    SCHEMA_VERSION
}

impl Scenario {
    pub fn n_users(&self) -> usize {
        self.users.len()
    }

    /// Slowest data rate among all users; bottlenecks shared collection and broadcast.
    pub fn min_data_rate(&self) -> f64 {
        self.users
            .iter()
            .map(|u| u.data_rate_bps)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn validate(&self) -> Result<()> {
        let violations = validate_scenario(self);
        if violations.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(violations))
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let scenario: Scenario = serde_json::from_str(text)?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Returns every violated scenario invariant; empty means valid.
pub fn validate_scenario(s: &Scenario) -> Vec<Violation> {
    let mut out = Vec::new();

    if s.users.is_empty() {
        out.push(Violation::new("users", "empty"));
    }
    for (k, u) in s.users.iter().enumerate() {
        let fields = [
            ("input_bits", u.input_bits),
            ("workload_cycles", u.workload_cycles),
            ("output_bits", u.output_bits),
            ("local_freq_hz", u.local_freq_hz),
            ("data_rate_bps", u.data_rate_bps),
            ("tx_power_w", u.tx_power_w),
            ("rx_power_w", u.rx_power_w),
            ("capacitance", u.capacitance),
            ("time_penalty_cents_per_s", u.time_penalty_cents_per_s),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                out.push(Violation::new(
                    format!("users[{k}].{name}"),
                    format!("must be finite and > 0, got {v}"),
                ));
            }
        }
        if u.tx_power_w > 0.0 && !(1e-3..=10.0).contains(&u.tx_power_w) {
            out.push(Violation::new(
                format!("users[{k}].tx_power_w"),
                format!("∉ [0.001, 10] W, got {}", u.tx_power_w),
            ));
        }
    }

    if !(s.server.total_freq_hz.is_finite() && s.server.total_freq_hz > 0.0) {
        out.push(Violation::new(
            "server.total_freq_hz",
            format!("must be finite and > 0, got {}", s.server.total_freq_hz),
        ));
    }
    if !(s.server.server_capacitance.is_finite() && s.server.server_capacitance >= 0.0) {
        out.push(Violation::new(
            "server.server_capacitance",
            format!(
                "must be finite and ≥ 0, got {}",
                s.server.server_capacitance
            ),
        ));
    }

    for (name, v) in [
        ("rho_in", s.sharing.rho_in),
        ("rho_w", s.sharing.rho_w),
        ("rho_out", s.sharing.rho_out),
    ] {
        if !(0.0..=1.0).contains(&v) {
            out.push(Violation::new(format!("sharing.{name}"), "∉ [0,1]"));
        }
    }

    for (name, v) in [
        (
            "energy_weight_cents_per_j",
            s.weights.energy_weight_cents_per_j,
        ),
        ("money_weight", s.weights.money_weight),
    ] {
        if !(v.is_finite() && v >= 0.0) {
            out.push(Violation::new(
                format!("weights.{name}"),
                format!("must be finite and ≥ 0, got {v}"),
            ));
        }
    }

    let b = s.price_bounds;
    if !(b.p_min.is_finite() && b.p_min >= 0.0) {
        out.push(Violation::new(
            "price_bounds.p_min",
            format!("must be finite and ≥ 0, got {}", b.p_min),
        ));
    }
    if !(b.p_max.is_finite() && b.p_max >= b.p_min) {
        out.push(Violation::new(
            "price_bounds.p_max",
            format!("must be finite and ≥ p_min, got {}", b.p_max),
        ));
    }

    out
}

/// Closed interval a parameter is drawn from uniformly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Range {
    pub low: f64,
    pub high: f64,
}

impl Range {
    pub const fn new(low: f64, high: f64) -> Self {
        Self { low, high }
    }

    pub const fn fixed(v: f64) -> Self {
        Self { low: v, high: v }
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        // `gen_range` rejects empty ranges, and a degenerate range must return
        // exactly its value.
        if self.low == self.high {
            self.low
        } else {
            rng.gen_range(self.low..=self.high)
        }
    }
}

/// Distributions from which [`generate_scenario`] draws a scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    pub n_users: usize,
    pub local_freq_hz: Range,
    pub data_rate_bps: Range,
    pub tx_power_dbm: Range,
    pub capacitance: Range,
    pub time_penalty_cents_per_s: Range,
    /// Sharing factors are drawn once per scenario, not per user.
    pub rho_in: Range,
    pub rho_w: Range,
    pub rho_out: Range,
    pub input_bits: f64,
    pub workload_cycles: f64,
    pub output_bits: f64,
    pub rx_power_w: f64,
    pub server: ServerProfile,
    pub weights: CostWeights,
    pub price_bounds: PriceBounds,
}

impl ScenarioSpec {
    /// Eight users, 10 GHz server, prices in [140, 280] cents, and the
    /// constants in [`calibration`].
    pub fn defaults() -> Self {
        use calibration::*;
        Self {
            schema_version: SCHEMA_VERSION,
            n_users: 8,
            local_freq_hz: Range::new(1.0e9, 2.0e9),
            data_rate_bps: Range::new(5.0e6, 10.0e6),
            tx_power_dbm: Range::new(26.0, 30.0),
            capacitance: Range::new(5.0e-27, 10.0e-27),
            time_penalty_cents_per_s: Range::new(300.0, 600.0),
            rho_in: Range::new(0.3, 0.4),
            rho_w: Range::new(0.3, 0.4),
            rho_out: Range::new(0.3, 0.4),
            input_bits: INPUT_BITS,
            workload_cycles: WORKLOAD_CYCLES,
            output_bits: OUTPUT_BITS,
            rx_power_w: RX_POWER_W,
            server: ServerProfile {
                total_freq_hz: 10.0e9,
                server_capacitance: SERVER_CAPACITANCE,
            },
            weights: CostWeights {
                energy_weight_cents_per_j: ENERGY_WEIGHT_CENTS_PER_J,
                money_weight: MONEY_WEIGHT,
            },
            price_bounds: PriceBounds {
                p_min: 140.0,
                p_max: 280.0,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut out = Vec::new();
        if self.n_users == 0 {
            out.push(Violation::new("n_users", "must be ≥ 1"));
        }
        for (name, r) in [
            ("local_freq_hz", self.local_freq_hz),
            ("data_rate_bps", self.data_rate_bps),
            ("tx_power_dbm", self.tx_power_dbm),
            ("capacitance", self.capacitance),
            ("time_penalty_cents_per_s", self.time_penalty_cents_per_s),
            ("rho_in", self.rho_in),
            ("rho_w", self.rho_w),
            ("rho_out", self.rho_out),
        ] {
            if !(r.low.is_finite() && r.high.is_finite()) {
                out.push(Violation::new(name, "range bounds must be finite"));
            } else if r.low > r.high {
                out.push(Violation::new(
                    name,
                    format!("range low {} > high {}", r.low, r.high),
                ));
            }
        }
        if out.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(out))
        }
    }
}

/// Draws a scenario from `spec`. Identical `(spec, seed)` pairs give
/// identical scenarios; every drawn value is stored in the result.
pub fn generate_scenario(spec: &ScenarioSpec, seed: u64) -> Result<Scenario> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let sharing = SharingFactors {
        rho_in: spec.rho_in.sample(&mut rng),
        rho_w: spec.rho_w.sample(&mut rng),
        rho_out: spec.rho_out.sample(&mut rng),
    };

    let mut users = Vec::with_capacity(spec.n_users);
    for id in 0..spec.n_users {
        let local_freq_hz = spec.local_freq_hz.sample(&mut rng);
        let data_rate_bps = spec.data_rate_bps.sample(&mut rng);
        let tx_power_w = dbm_to_watts(spec.tx_power_dbm.sample(&mut rng))?;
        let capacitance = spec.capacitance.sample(&mut rng);
        let time_penalty_cents_per_s = spec.time_penalty_cents_per_s.sample(&mut rng);
        users.push(UserProfile {
            id,
            input_bits: spec.input_bits,
            workload_cycles: spec.workload_cycles,
            output_bits: spec.output_bits,
            local_freq_hz,
            data_rate_bps,
            tx_power_w,
            rx_power_w: spec.rx_power_w,
            capacitance,
            time_penalty_cents_per_s,
        });
    }

    let scenario = Scenario {
        schema_version: SCHEMA_VERSION,
        users,
        server: spec.server,
        sharing,
        weights: spec.weights,
        price_bounds: spec.price_bounds,
        seed,
    };
    scenario.validate()?;
    Ok(scenario)
}
