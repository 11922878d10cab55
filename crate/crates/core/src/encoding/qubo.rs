use std::collections::BTreeMap;
use std::ops::Range;

use serde::Serialize;

use super::{Decoded, QubitLayout};
use crate::error::{Error, Result};
use crate::model::InstanceSpec;

/// Default weight of the balance penalty `lambda * (j - buy + sell - p)^2`.
pub const DEFAULT_PENALTY: f64 = 1.0;

/// A QUBO over the decision qubits whose coefficients are affine in the PV
/// outputs `p_t`, plus `p`-only constant terms.
///
/// ```text
/// E(x, p) = constant + sum_i linear_i x_i + sum_{i<k} quadratic[i,k] x_i x_k
///         + sum_{t,i} scenario_linear[t,i] p_t x_i
///         + sum_{t,i<k} scenario_quadratic[t,i,k] p_t x_i x_k
///         + sum_t (offset_linear[t] p_t + offset_quadratic[t] p_t^2)
/// ```
///
/// The price objective (`objective_*`, linear only) and the penalty
/// (`penalty_*` and everything else) are kept apart, so a balanced bitstring
/// evaluates its price terms without picking up rounding from the penalty.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioQubo {
    pub num_vars: usize,
    pub horizon: usize,
    pub penalty: f64,
    pub objective_constant: f64,
    pub objective_linear: Vec<f64>,
    /// Contiguous variable runs summed together before being added to the
    /// objective (one per encoded integer).
    pub groups: Vec<Range<usize>>,
    pub penalty_constant: f64,
    pub penalty_linear: Vec<f64>,
    pub quadratic: BTreeMap<(usize, usize), f64>,
    pub scenario_linear: BTreeMap<(usize, usize), f64>,
    /// Stays empty for the recourse encoding; kept so the Ising conversion
    /// can check the structure instead of assuming it.
    pub scenario_quadratic: BTreeMap<(usize, usize, usize), f64>,
    pub offset_linear: Vec<f64>,
    pub offset_quadratic: Vec<f64>,
}

impl ScenarioQubo {
    pub fn zero(num_vars: usize, horizon: usize, penalty: f64) -> Self {
        Self {
            num_vars,
            horizon,
            penalty,
            objective_constant: 0.0,
            objective_linear: vec![0.0; num_vars],
            groups: std::iter::once(0..num_vars).collect(),
            penalty_constant: 0.0,
            penalty_linear: vec![0.0; num_vars],
            quadratic: BTreeMap::new(),
            scenario_linear: BTreeMap::new(),
            scenario_quadratic: BTreeMap::new(),
            offset_linear: vec![0.0; horizon],
            offset_quadratic: vec![0.0; horizon],
        }
    }

    pub fn constant(&self) -> f64 {
        self.objective_constant + self.penalty_constant
    }

    /// Combined linear coefficient of `x_i`.
    pub fn linear(&self, i: usize) -> f64 {
        self.objective_linear[i] + self.penalty_linear[i]
    }

    pub fn add_quadratic(&mut self, i: usize, k: usize, value: f64) {
        let key = if i < k { (i, k) } else { (k, i) };
        *self.quadratic.entry(key).or_insert(0.0) += value;
    }

    /// Energy of decision bits `x` (basis index restricted to decision
    /// qubits) under PV outputs `p`.
    pub fn energy(&self, x: u64, p: &[i64]) -> f64 {
        let bit = |i: usize| (x >> i) & 1 == 1;
        let mut objective = self.objective_constant;
        for g in &self.groups {
            objective += g
                .clone()
                .filter(|&i| bit(i))
                .map(|i| self.objective_linear[i])
                .sum::<f64>();
        }
        let mut e = self.penalty_constant;
        for (i, &c) in self.penalty_linear.iter().enumerate() {
            if bit(i) {
                e += c;
            }
        }
        for (&(i, k), &c) in &self.quadratic {
            if bit(i) && bit(k) {
                e += c;
            }
        }
        for (&(t, i), &c) in &self.scenario_linear {
            if bit(i) {
                e += c * p[t] as f64;
            }
        }
        for (&(t, i, k), &c) in &self.scenario_quadratic {
            if bit(i) && bit(k) {
                e += c * p[t] as f64;
            }
        }
        objective + (e + self.scenario_offset(p))
    }

    /// Terms that depend on `p` alone.
    pub fn scenario_offset(&self, p: &[i64]) -> f64 {
        p.iter()
            .enumerate()
            .map(|(t, &v)| {
                let v = v as f64;
                self.offset_linear[t] * v + self.offset_quadratic[t] * v * v
            })
            .sum()
    }

    /// Energy of explicit integer values (the `p` field of `values` is the
    /// scenario). Values must fit their registers.
    pub fn energy_of(
        &self,
        values: &Decoded,
        layout: &QubitLayout,
        instance: &InstanceSpec,
    ) -> Option<f64> {
        let index = layout.encode(values, instance)?;
        Some(self.energy(index & layout.decision_mask(), &values.p))
    }

    /// Checks by enumeration that, for every joint scenario, the minimum over
    /// decision bitstrings satisfies the balance constraint. Returns `None`
    /// when the decision space exceeds `2^max_bits`.
    pub fn penalty_dominates(
        &self,
        layout: &QubitLayout,
        instance: &InstanceSpec,
        max_bits: usize,
    ) -> Option<bool> {
        if layout.n_decision > max_bits {
            return None;
        }
        let scenarios = instance.joint_scenarios().ok()?;
        let ok = scenarios.iter().all(|s| {
            let mut best = (f64::INFINITY, 0u64);
            for x in 0..(1u64 << layout.n_decision) {
                let e = self.energy(x, &s.values);
                if e < best.0 {
                    best = (e, x);
                }
            }
            let mut d = layout.decode(best.1, instance);
            d.p = s.values.clone();
            d.is_balanced()
        });
        Some(ok)
    }
}

/// Penalty QUBO of the recourse program: the linear trading objective plus
/// `lambda * (j_t - buy_t + sell_t - p_t)^2` for each timestep, expanded over
/// the binary encodings. Complementarity is not encoded.
pub fn build_qubo(
    instance: &InstanceSpec,
    layout: &QubitLayout,
    penalty: f64,
) -> Result<ScenarioQubo> {
    if !penalty.is_finite() || penalty <= 0.0 {
        return Err(Error::NonPositivePenalty(penalty));
    }
    let prices = &instance.prices;
    let mut q = ScenarioQubo::zero(layout.n_decision, instance.steps.len(), penalty);
    q.groups = layout
        .steps
        .iter()
        .flat_map(|r| [r.j.range(), r.buy.range(), r.sell.range()])
        .collect();

    for (t, (step, regs)) in instance.steps.iter().zip(&layout.steps).enumerate() {
        let j_offset = step.first_stage.offset as f64;
        q.objective_constant -= prices.ev_price * j_offset;

        // Balance expression j - buy + sell = a0 + sum_i w_i x_i.
        let mut terms: Vec<(usize, f64)> = Vec::new();
        for (k, i) in regs.j.range().enumerate() {
            let w = (1u64 << k) as f64;
            q.objective_linear[i] -= prices.ev_price * w;
            terms.push((i, w));
        }
        for (k, i) in regs.buy.range().enumerate() {
            let w = (1u64 << k) as f64;
            q.objective_linear[i] += prices.intraday_buy * w;
            terms.push((i, -w));
        }
        for (k, i) in regs.sell.range().enumerate() {
            let w = (1u64 << k) as f64;
            q.objective_linear[i] -= prices.intraday_sell * w;
            terms.push((i, w));
        }

        // lambda * (a0 + sum w x - p)^2 with x^2 = x.
        let a0 = j_offset;
        q.penalty_constant += penalty * a0 * a0;
        for (n, &(i, wi)) in terms.iter().enumerate() {
            q.penalty_linear[i] += penalty * (wi * wi + 2.0 * a0 * wi);
            *q.scenario_linear.entry((t, i)).or_insert(0.0) -= 2.0 * penalty * wi;
            for &(k, wk) in &terms[n + 1..] {
                q.add_quadratic(i, k, 2.0 * penalty * wi * wk);
            }
        }
        q.offset_linear[t] -= 2.0 * penalty * a0;
        q.offset_quadratic[t] += penalty;
    }
    Ok(q)
}
