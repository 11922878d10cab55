//! Binary encoding of the recourse program.
//!
//! Every integer variable is stored LSB-first in a contiguous run of qubits:
//! bit `k` of a register carries weight `2^k`. Decision qubits (`j`, `buy`,
//! `sell` for each timestep) come first, the scenario registers holding the
//! PV output follow.

mod ising;
mod qubo;

pub use ising::{IsingJson, SplitIsing};
pub use qubo::{build_qubo, ScenarioQubo, DEFAULT_PENALTY};

use std::fmt;
use std::ops::Range;

use serde::Serialize;

use crate::model::InstanceSpec;

/// A contiguous run of qubits holding one integer, least significant first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Register {
    pub start: usize,
    pub len: usize,
}

impl Register {
    pub fn range(&self) -> Range<usize> {
        self.start..self.start + self.len
    }

    /// Unsigned value held by this register in basis state `index`.
    pub fn read(&self, index: u64) -> u64 {
        if self.len == 0 {
            return 0;
        }
        (index >> self.start) & ((1u64 << self.len) - 1)
    }

    /// `index` with this register overwritten by `value`.
    pub fn write(&self, index: u64, value: u64) -> u64 {
        if self.len == 0 {
            return index;
        }
        let mask = ((1u64 << self.len) - 1) << self.start;
        (index & !mask) | ((value << self.start) & mask)
    }

    pub fn mask(&self) -> u64 {
        if self.len == 0 {
            0
        } else {
            ((1u64 << self.len) - 1) << self.start
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct StepRegisters {
    pub j: Register,
    pub buy: Register,
    pub sell: Register,
    pub p: Register,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct QubitLayout {
    pub steps: Vec<StepRegisters>,
    pub n_decision: usize,
    pub n_scenario: usize,
}

impl QubitLayout {
    pub fn build(instance: &InstanceSpec) -> Self {
        let mut next = 0;
        let mut take = |len: usize| {
            let r = Register { start: next, len };
            next += len;
            r
        };
        let decision: Vec<_> = instance
            .steps
            .iter()
            .map(|s| {
                let rb = s.recourse_bits as usize;
                (take(s.first_stage.bit_width as usize), take(rb), take(rb))
            })
            .collect();
        let n_decision: usize = decision.iter().map(|(j, b, s)| j.len + b.len + s.len).sum();
        let steps: Vec<_> = instance
            .steps
            .iter()
            .zip(decision)
            .map(|(s, (j, buy, sell))| StepRegisters {
                j,
                buy,
                sell,
                p: take(s.scenarios.register_bits() as usize),
            })
            .collect();
        let n_scenario = steps.iter().map(|s| s.p.len).sum();
        Self {
            steps,
            n_decision,
            n_scenario,
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.n_decision + self.n_scenario
    }

    pub fn decision_mask(&self) -> u64 {
        (1u64 << self.n_decision) - 1
    }

    /// Integer values encoded in basis state `index`.
    pub fn decode(&self, index: u64, instance: &InstanceSpec) -> Decoded {
        let mut d = Decoded::default();
        for (regs, step) in self.steps.iter().zip(&instance.steps) {
            d.j.push(step.first_stage.offset + regs.j.read(index) as i64);
            d.buy.push(regs.buy.read(index) as i64);
            d.sell.push(regs.sell.read(index) as i64);
            d.p.push(step.scenarios.register_offset() + regs.p.read(index) as i64);
        }
        d
    }

    /// Inverse of [`decode`](Self::decode). Returns `None` when a value does
    /// not fit its register.
    pub fn encode(&self, values: &Decoded, instance: &InstanceSpec) -> Option<u64> {
        let mut index = 0u64;
        for (t, (regs, step)) in self.steps.iter().zip(&instance.steps).enumerate() {
            let fields = [
                (regs.j, *values.j.get(t)? - step.first_stage.offset),
                (regs.buy, *values.buy.get(t)?),
                (regs.sell, *values.sell.get(t)?),
                (regs.p, *values.p.get(t)? - step.scenarios.register_offset()),
            ];
            for (reg, v) in fields {
                if v < 0 || (reg.len < 64 && (v as u64) >> reg.len != 0) {
                    return None;
                }
                index = reg.write(index, v as u64);
            }
        }
        Some(index)
    }

    /// PV output vector held by the scenario registers of `index`.
    pub fn scenario_of(&self, index: u64, instance: &InstanceSpec) -> Vec<i64> {
        self.steps
            .iter()
            .zip(&instance.steps)
            .map(|(regs, step)| step.scenarios.register_offset() + regs.p.read(index) as i64)
            .collect()
    }

    /// First-stage vector held by the `j` registers of `index`.
    pub fn first_stage_of(&self, index: u64, instance: &InstanceSpec) -> Vec<i64> {
        self.steps
            .iter()
            .zip(&instance.steps)
            .map(|(regs, step)| step.first_stage.offset + regs.j.read(index) as i64)
            .collect()
    }
}

impl fmt::Display for QubitLayout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn reg(f: &mut fmt::Formatter<'_>, name: &str, r: &Register) -> fmt::Result {
            if r.len == 0 {
                write!(f, " {name}[]")
            } else {
                write!(f, " {name}[{}..{}]", r.start, r.start + r.len - 1)
            }
        }
        write!(f, "{} qubits:", self.num_qubits())?;
        let multi = self.steps.len() > 1;
        for (t, s) in self.steps.iter().enumerate() {
            if multi {
                write!(f, "{}t{t}:", if t == 0 { " " } else { " | " })?;
            }
            reg(f, "j", &s.j)?;
            reg(f, "buy", &s.buy)?;
            reg(f, "sell", &s.sell)?;
            reg(f, "p", &s.p)?;
        }
        Ok(())
    }
}

/// Integer variables decoded from a basis state.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Decoded {
    pub j: Vec<i64>,
    pub buy: Vec<i64>,
    pub sell: Vec<i64>,
    pub p: Vec<i64>,
}

impl Decoded {
    /// `j - buy + sell = p` for every timestep.
    pub fn is_balanced(&self) -> bool {
        (0..self.j.len()).all(|t| self.j[t] - self.buy[t] + self.sell[t] == self.p[t])
    }

    /// `buy * sell = 0` for every timestep.
    pub fn is_complementary(&self) -> bool {
        self.buy.iter().zip(&self.sell).all(|(b, s)| b * s == 0)
    }
}

/// Basis index of a bit vector given qubit-0 first.
pub fn index_from_bits(bits: &[bool]) -> u64 {
    bits.iter()
        .enumerate()
        .fold(0u64, |acc, (k, &b)| acc | ((b as u64) << k))
}
