use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::encoding::{build_qubo, QubitLayout, ScenarioQubo, SplitIsing};
use crate::error::{Error, Result};
use crate::model::InstanceSpec;
use crate::simulator::{Gate, ShotCounts, StateVector, DEFAULT_QUBIT_CAP};

/// An instance compiled for the scenario-register QAOA: layout, penalty QUBO,
/// its spin form, and the per-basis-state energy table used as the
/// diagonal cost observable.
#[derive(Debug, Clone)]
pub struct StochasticQaoa {
    instance: InstanceSpec,
    layout: QubitLayout,
    qubo: ScenarioQubo,
    ising: SplitIsing,
    /// Energy of every full basis state: QUBO energy of its decision bits
    /// under the scenario held in its scenario registers.
    cost: Vec<f64>,
    /// Register-indexed probabilities for each timestep's scenario register.
    preparations: Vec<Vec<f64>>,
}

impl StochasticQaoa {
    pub fn new(instance: &InstanceSpec, penalty: f64) -> Result<Self> {
        instance.validate()?;
        let layout = QubitLayout::build(instance);
        let n = layout.num_qubits();
        if n > DEFAULT_QUBIT_CAP {
            return Err(Error::TooManyQubits {
                requested: n,
                cap: DEFAULT_QUBIT_CAP,
            });
        }
        let qubo = build_qubo(instance, &layout, penalty)?;
        let ising = SplitIsing::from_qubo(&qubo)?;
        let mask = layout.decision_mask();
        let cost = (0..1u64 << n)
            .map(|z| qubo.energy(z & mask, &layout.scenario_of(z, instance)))
            .collect();
        let preparations = instance
            .steps
            .iter()
            .map(|s| {
                let d = &s.scenarios;
                let mut probs = vec![0.0; 1 << d.register_bits()];
                for &(v, p) in d.support() {
                    // validated: every support value has a register index
                    probs[d.register_index(v).unwrap() as usize] = p;
                }
                probs
            })
            .collect();
        Ok(Self {
            instance: instance.clone(),
            layout,
            qubo,
            ising,
            cost,
            preparations,
        })
    }

    pub fn instance(&self) -> &InstanceSpec {
        &self.instance
    }

    pub fn layout(&self) -> &QubitLayout {
        &self.layout
    }

    pub fn qubo(&self) -> &ScenarioQubo {
        &self.qubo
    }

    pub fn ising(&self) -> &SplitIsing {
        &self.ising
    }

    pub fn num_qubits(&self) -> usize {
        self.layout.num_qubits()
    }

    /// Full energy (constants included) of basis state `z`.
    pub fn cost(&self, z: u64) -> f64 {
        self.cost[z as usize]
    }

    pub fn cost_table(&self) -> &[f64] {
        &self.cost
    }

    /// Energy the phase separator actually implements: the full energy minus
    /// the constant and the scenario-only terms.
    pub fn phase_energy(&self, z: u64) -> f64 {
        let p = self.layout.scenario_of(z, &self.instance);
        self.ising.spin_energy(z & self.layout.decision_mask(), &p)
    }

    /// Amplitude encoding of every scenario register.
    pub fn preparation(&self) -> Vec<Gate> {
        self.layout
            .steps
            .iter()
            .zip(&self.preparations)
            .filter(|(regs, _)| regs.p.len > 0)
            .map(|(regs, probs)| Gate::Prepare {
                start: regs.p.start,
                len: regs.p.len,
                probabilities: probs.clone(),
            })
            .collect()
    }

    /// `exp(-i gamma H)` on the decision register; see [`phase_layer`].
    pub fn phase_separator(&self, gamma: f64) -> Vec<Gate> {
        let offsets: Vec<i64> = self
            .instance
            .steps
            .iter()
            .map(|s| s.scenarios.register_offset())
            .collect();
        phase_layer(&self.ising, &self.layout, &offsets, gamma)
    }

    /// `exp(-i beta sum X)` on the decision qubits only.
    pub fn mixer(&self, beta: f64) -> Vec<Gate> {
        (0..self.layout.n_decision)
            .map(|i| Gate::Rx(i, 2.0 * beta))
            .collect()
    }

    pub fn circuit(&self, gammas: &[f64], betas: &[f64]) -> Result<Vec<Gate>> {
        if gammas.len() != betas.len() || gammas.is_empty() {
            return Err(Error::ParamLength {
                expected: gammas.len().max(1),
                gammas: gammas.len(),
                betas: betas.len(),
            });
        }
        let mut gates = self.preparation();
        gates.extend((0..self.layout.n_decision).map(Gate::H));
        for (&g, &b) in gammas.iter().zip(betas) {
            gates.extend(self.phase_separator(g));
            gates.extend(self.mixer(b));
        }
        Ok(gates)
    }

    pub fn final_state(&self, gammas: &[f64], betas: &[f64]) -> Result<StateVector> {
        let gates = self.circuit(gammas, betas)?;
        let mut state = StateVector::new(self.num_qubits())?;
        state.run(&gates)?;
        Ok(state)
    }

    /// Exact expected energy of the final state: the scenario register's
    /// amplitudes weight each branch by its probability.
    pub fn expectation(&self, gammas: &[f64], betas: &[f64]) -> Result<f64> {
        Ok(self
            .final_state(gammas, betas)?
            .expectation_table(&self.cost))
    }

    /// Shot estimate of [`expectation`](Self::expectation); each shot yields
    /// one scenario and one decision draw.
    pub fn sampled_expectation(
        &self,
        gammas: &[f64],
        betas: &[f64],
        shots: u64,
        seed: u64,
    ) -> Result<(f64, ShotCounts)> {
        let state = self.final_state(gammas, betas)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let counts = ShotCounts::draw_with(&state, shots, &mut rng);
        Ok((self.mean_cost(&counts), counts))
    }

    pub fn mean_cost(&self, counts: &ShotCounts) -> f64 {
        let total: f64 = counts
            .counts
            .iter()
            .map(|(&z, &c)| self.cost(z) * c as f64)
            .sum();
        total / counts.shots as f64
    }
}

/// Gates implementing `exp(-i gamma H(p))` on the decision qubits, with `H`
/// the spin energy of `ising` (constants excluded) and `p_t` read from
/// scenario register `t` plus `offsets[t]`. Fields become RZ, couplings RZZ,
/// and each scenario bit `m` of timestep `t` drives a CRZ scaled by `2^m`
/// onto every decision qubit it couples to.
pub fn phase_layer(
    ising: &SplitIsing,
    layout: &QubitLayout,
    offsets: &[i64],
    gamma: f64,
) -> Vec<Gate> {
    let mut gates = Vec::new();
    for i in 0..layout.n_decision {
        // The register offset is a fixed part of p_t, so it folds into the
        // plain field.
        gates.push(Gate::Rz(i, 2.0 * gamma * ising.field(i, offsets)));
    }
    for (&(i, k), &j) in &ising.couplings {
        gates.push(Gate::Rzz(i, k, 2.0 * gamma * j));
    }
    for (&(t, i), &c) in &ising.scenario_coupling {
        let reg = layout.steps[t].p;
        for m in 0..reg.len {
            gates.push(Gate::Crz {
                control: reg.start + m,
                target: i,
                angle: 2.0 * gamma * c * (1u64 << m) as f64,
            });
        }
    }
    gates
}
