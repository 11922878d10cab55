//! Problem instances for the two-stage EV charging recourse program.
//!
//! A day-ahead decision `j_t` (energy traded with the EVs) is fixed before the
//! PV output `p_t` is known. Once `p_t` realizes, the imbalance is settled on
//! the intraday market by buying or selling. All energy quantities are
//! integers in abstract units; prices are reals.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Violation};

/// Default cap on the number of joint scenarios materialized at once.
pub const DEFAULT_SCENARIO_CAP: usize = 1_000_000;

/// Largest bit width accepted for any single register.
pub const MAX_REGISTER_BITS: u32 = 24;

const PROBABILITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prices {
    /// First-stage tariff for energy traded with the EVs.
    pub ev_price: f64,
    /// Intraday price paid when the plan leaves a shortfall.
    pub intraday_buy: f64,
    /// Intraday price received when surplus energy is sold.
    pub intraday_sell: f64,
}

impl Prices {
    pub fn new(ev_price: f64, intraday_buy: f64, intraday_sell: f64) -> Self {
        Self {
            ev_price,
            intraday_buy,
            intraday_sell,
        }
    }
}

/// An integer first-stage variable encoded as `offset + binary(bits)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FirstStageVar {
    pub bit_width: u32,
    pub offset: i64,
}

impl FirstStageVar {
    pub fn new(bit_width: u32, offset: i64) -> Self {
        Self { bit_width, offset }
    }

    pub fn min(&self) -> i64 {
        self.offset
    }

    pub fn max(&self) -> i64 {
        self.offset + (1i64 << self.bit_width) - 1
    }

    /// Number of representable values, `2^bit_width`.
    pub fn cardinality(&self) -> u64 {
        1u64 << self.bit_width
    }

    pub fn values(&self) -> impl Iterator<Item = i64> {
        self.min()..=self.max()
    }
}

/// A finite distribution of integer PV outputs for one timestep, together
/// with the register mapping used when it is amplitude-encoded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioDistribution {
    support: Vec<(i64, f64)>,
    register_bits: u32,
    register_offset: i64,
}

impl ScenarioDistribution {
    /// Builds a distribution with register offset 0 and the smallest register
    /// that holds every support value.
    pub fn new(support: Vec<(i64, f64)>) -> Self {
        Self::with_offset(support, 0)
    }

    pub fn with_offset(support: Vec<(i64, f64)>, register_offset: i64) -> Self {
        let span = support
            .iter()
            .map(|&(v, _)| v - register_offset)
            .max()
            .unwrap_or(0)
            .max(0);
        let register_bits = bits_for(span as u64);
        Self {
            support,
            register_bits,
            register_offset,
        }
    }

    pub fn with_register(
        support: Vec<(i64, f64)>,
        register_bits: u32,
        register_offset: i64,
    ) -> Self {
        Self {
            support,
            register_bits,
            register_offset,
        }
    }

    pub fn point_mass(value: i64) -> Self {
        Self::new(vec![(value, 1.0)])
    }

    pub fn support(&self) -> &[(i64, f64)] {
        &self.support
    }

    pub fn register_bits(&self) -> u32 {
        self.register_bits
    }

    pub fn register_offset(&self) -> i64 {
        self.register_offset
    }

    pub fn min_value(&self) -> i64 {
        self.support.iter().map(|s| s.0).min().unwrap_or(0)
    }

    pub fn max_value(&self) -> i64 {
        self.support.iter().map(|s| s.0).max().unwrap_or(0)
    }

    /// Register basis index holding `value`, if representable.
    pub fn register_index(&self, value: i64) -> Option<u64> {
        let shifted = value - self.register_offset;
        if shifted < 0 || (self.register_bits < 63 && shifted >= (1i64 << self.register_bits)) {
            return None;
        }
        Some(shifted as u64)
    }

    /// Mean of the distribution.
    pub fn expected(&self) -> f64 {
        self.support.iter().map(|&(v, p)| v as f64 * p).sum()
    }

    /// Checks this distribution, appending violations under `path`.
    pub fn check(&self, path: &str, out: &mut Vec<Violation>) {
        if self.support.is_empty() {
            out.push(violation(path, "empty support"));
            return;
        }
        if self.register_bits > MAX_REGISTER_BITS {
            out.push(violation(
                path,
                format!(
                    "register of {} bits exceeds {MAX_REGISTER_BITS}",
                    self.register_bits
                ),
            ));
            return;
        }
        let mut sum = 0.0;
        for (k, &(value, prob)) in self.support.iter().enumerate() {
            if !(prob > 0.0 && prob <= 1.0) {
                out.push(violation(
                    &format!("{path}.support[{k}]"),
                    format!("probability {prob} outside (0, 1]"),
                ));
            }
            if self.support[..k].iter().any(|&(v, _)| v == value) {
                out.push(violation(
                    &format!("{path}.support[{k}]"),
                    format!("duplicate support value {value}"),
                ));
            }
            if self.register_index(value).is_none() {
                out.push(violation(
                    &format!("{path}.support[{k}]"),
                    format!(
                        "value {value} not representable in a {}-bit register with offset {}",
                        self.register_bits, self.register_offset
                    ),
                ));
            }
            sum += prob;
        }
        if (sum - 1.0).abs() > PROBABILITY_TOL {
            let shown = (sum * 1e12).round() / 1e12;
            out.push(violation(
                path,
                format!("probabilities sum {shown} (expected 1)"),
            ));
        }
    }
}

/// Minimum number of bits needed to write `value` in binary (0 needs none).
pub fn bits_for(value: u64) -> u32 {
    64 - value.leading_zeros()
}

/// One timestep of the horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timestep {
    pub first_stage: FirstStageVar,
    pub scenarios: ScenarioDistribution,
    /// Bits used for each of the intraday buy and sell variables.
    pub recourse_bits: u32,
}

impl Timestep {
    /// Largest imbalance `|j - p|` this timestep can produce.
    pub fn max_imbalance(&self) -> i64 {
        let a = self.first_stage.max() - self.scenarios.min_value();
        let b = self.scenarios.max_value() - self.first_stage.min();
        a.max(b).max(0)
    }
}

/// A complete problem statement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceSpec {
    pub horizon: usize,
    pub prices: Prices,
    pub steps: Vec<Timestep>,
}

/// One joint realization of the PV outputs over the whole horizon.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scenario {
    pub values: Vec<i64>,
    pub probability: f64,
}

impl InstanceSpec {
    pub fn new(prices: Prices, steps: Vec<Timestep>) -> Self {
        Self {
            horizon: steps.len(),
            prices,
            steps,
        }
    }

    /// The single-timestep instance used throughout the test-suite: prices
    /// 0.25 / 0.4 / 0.1, `j` in `0..=3`, PV output `{1: 0.2, 2: 0.5, 3: 0.3}`.
    pub fn reference() -> Self {
        Self::new(
            Prices::new(0.25, 0.4, 0.1),
            vec![Timestep {
                first_stage: FirstStageVar::new(2, 0),
                scenarios: ScenarioDistribution::new(vec![(1, 0.2), (2, 0.5), (3, 0.3)]),
                recourse_bits: 2,
            }],
        )
    }

    /// All violated invariants, each with a path to the offending field.
    pub fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let p = &self.prices;
        for (name, value) in [
            ("prices.ev", p.ev_price),
            ("prices.buy", p.intraday_buy),
            ("prices.sell", p.intraday_sell),
        ] {
            if !value.is_finite() || value < 0.0 {
                out.push(violation(
                    name,
                    format!("price {value} must be finite and >= 0"),
                ));
            }
        }
        if !(p.intraday_sell < p.ev_price && p.ev_price < p.intraday_buy) {
            out.push(violation(
                "prices",
                format!(
                    "price ordering violated: need sell ({}) < ev ({}) < buy ({})",
                    p.intraday_sell, p.ev_price, p.intraday_buy
                ),
            ));
        }
        if self.horizon == 0 {
            out.push(violation("horizon", "horizon must be at least 1"));
        }
        if self.steps.len() != self.horizon {
            out.push(violation(
                "timestep",
                format!(
                    "{} timesteps given for horizon {}",
                    self.steps.len(),
                    self.horizon
                ),
            ));
        }
        for (t, step) in self.steps.iter().enumerate() {
            let path = format!("timestep[{t}]");
            if step.first_stage.bit_width > MAX_REGISTER_BITS {
                out.push(violation(
                    &format!("{path}.j_bits"),
                    format!(
                        "{} bits exceeds {MAX_REGISTER_BITS}",
                        step.first_stage.bit_width
                    ),
                ));
                continue;
            }
            if step.recourse_bits > MAX_REGISTER_BITS {
                out.push(violation(
                    &format!("{path}.recourse_bits"),
                    format!("{} bits exceeds {MAX_REGISTER_BITS}", step.recourse_bits),
                ));
                continue;
            }
            let before = out.len();
            step.scenarios.check(&format!("{path}.dist"), &mut out);
            if out.len() == before && !step.scenarios.support.is_empty() {
                let need = step.max_imbalance();
                let have = (1i64 << step.recourse_bits) - 1;
                if need > have {
                    out.push(violation(
                        &format!("{path}.recourse_bits"),
                        format!(
                            "{} bits hold at most {have}, but |j - p| can reach {need}",
                            step.recourse_bits
                        ),
                    ));
                }
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Invalid(v))
        }
    }

    /// Number of joint scenarios, saturating in `u128`.
    pub fn scenario_count(&self) -> u128 {
        self.steps
            .iter()
            .map(|s| s.scenarios.support.len() as u128)
            .fold(1u128, |a, b| a.saturating_mul(b))
    }

    /// Cartesian product of the per-timestep supports with product
    /// probabilities. The last timestep varies fastest.
    pub fn joint_scenarios(&self) -> Result<Vec<Scenario>> {
        self.joint_scenarios_capped(DEFAULT_SCENARIO_CAP)
    }

    pub fn joint_scenarios_capped(&self, cap: usize) -> Result<Vec<Scenario>> {
        let count = self.scenario_count();
        if count > cap as u128 {
            return Err(Error::ScenarioExplosion { count, cap });
        }
        let mut out = vec![Scenario {
            values: Vec::with_capacity(self.steps.len()),
            probability: 1.0,
        }];
        for step in &self.steps {
            let mut next = Vec::with_capacity(out.len() * step.scenarios.support.len());
            for partial in &out {
                for &(value, prob) in &step.scenarios.support {
                    let mut values = partial.values.clone();
                    values.push(value);
                    next.push(Scenario {
                        values,
                        probability: partial.probability * prob,
                    });
                }
            }
            out = next;
        }
        Ok(out)
    }

    /// Per-timestep means of the PV output.
    pub fn expected_scenario(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.scenarios.expected()).collect()
    }
}

/// Mean of a scenario distribution, `sum(value * probability)`.
pub fn expected_scenario(dist: &ScenarioDistribution) -> f64 {
    dist.expected()
}

fn violation(path: &str, message: impl Into<String>) -> Violation {
    Violation {
        path: path.to_string(),
        message: message.into(),
    }
}
