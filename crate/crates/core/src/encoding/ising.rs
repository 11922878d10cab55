use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::ScenarioQubo;
use crate::error::{Error, Result};

/// Spin-form Hamiltonian with the PV outputs kept symbolic.
///
/// Spins follow `x = (1 - s) / 2`, so bit 0 is spin +1 (the `|0>` eigenvalue
/// of Pauli-Z). Coefficients are stored as they multiply the spin
/// monomials:
///
/// ```text
/// E(s, p) = constant + scenario_offset(p)
///         + sum_i (fields[i] + sum_t scenario_coupling[t,i] p_t) s_i
///         + sum_{i<k} couplings[i,k] s_i s_k
/// ```
///
/// The `-1/2 sum J s s - sum h s` form is recovered with `J_ik = J_ki =
/// -couplings[i,k]` and `h_i = -field_i(p)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitIsing {
    pub num_spins: usize,
    pub couplings: BTreeMap<(usize, usize), f64>,
    pub fields: Vec<f64>,
    pub scenario_coupling: BTreeMap<(usize, usize), f64>,
    pub constant: f64,
    pub offset_linear: Vec<f64>,
    pub offset_quadratic: Vec<f64>,
}

impl SplitIsing {
    /// Substitutes `x = (1 - s) / 2`. Fails on any `p`-dependent quadratic
    /// decision term, since those cannot be expressed through fields alone.
    pub fn from_qubo(q: &ScenarioQubo) -> Result<Self> {
        if let Some((&(_, i, k), _)) = q.scenario_quadratic.iter().find(|(_, &c)| c != 0.0) {
            return Err(Error::ScenarioQuadratic(i, k));
        }
        let mut out = SplitIsing {
            num_spins: q.num_vars,
            couplings: BTreeMap::new(),
            fields: vec![0.0; q.num_vars],
            scenario_coupling: BTreeMap::new(),
            constant: q.constant(),
            offset_linear: q.offset_linear.clone(),
            offset_quadratic: q.offset_quadratic.clone(),
        };
        for i in 0..q.num_vars {
            let c = q.linear(i);
            out.constant += c / 2.0;
            out.fields[i] -= c / 2.0;
        }
        for (&(i, k), &c) in &q.quadratic {
            if c == 0.0 {
                continue;
            }
            out.constant += c / 4.0;
            out.fields[i] -= c / 4.0;
            out.fields[k] -= c / 4.0;
            *out.couplings.entry((i, k)).or_insert(0.0) += c / 4.0;
        }
        for (&(t, i), &c) in &q.scenario_linear {
            out.offset_linear[t] += c / 2.0;
            *out.scenario_coupling.entry((t, i)).or_insert(0.0) -= c / 2.0;
        }
        out.couplings.retain(|_, v| *v != 0.0);
        out.scenario_coupling.retain(|_, v| *v != 0.0);
        Ok(out)
    }

    /// Symmetric lookup of the coupling between spins `i` and `k`.
    pub fn coupling(&self, i: usize, k: usize) -> f64 {
        let key = if i < k { (i, k) } else { (k, i) };
        if i == k {
            return 0.0;
        }
        self.couplings.get(&key).copied().unwrap_or(0.0)
    }

    /// Effective field on spin `i` under PV outputs `p`.
    pub fn field(&self, i: usize, p: &[i64]) -> f64 {
        self.fields[i]
            + self
                .scenario_coupling
                .iter()
                .filter(|(&(_, k), _)| k == i)
                .map(|(&(t, _), &c)| c * p[t] as f64)
                .sum::<f64>()
    }

    /// Spin energy of decision bits `x` without any constant terms.
    pub fn spin_energy(&self, x: u64, p: &[i64]) -> f64 {
        let spin = |i: usize| if (x >> i) & 1 == 0 { 1.0 } else { -1.0 };
        let mut e = 0.0;
        for (i, &h) in self.fields.iter().enumerate() {
            e += h * spin(i);
        }
        for (&(t, i), &c) in &self.scenario_coupling {
            e += c * p[t] as f64 * spin(i);
        }
        for (&(i, k), &j) in &self.couplings {
            e += j * spin(i) * spin(k);
        }
        e
    }

    /// Constant and `p`-only terms, i.e. what the circuit leaves out.
    pub fn offset(&self, p: &[i64]) -> f64 {
        self.constant + self.scenario_offset(p)
    }

    pub fn scenario_offset(&self, p: &[i64]) -> f64 {
        p.iter()
            .enumerate()
            .map(|(t, &v)| {
                let v = v as f64;
                self.offset_linear[t] * v + self.offset_quadratic[t] * v * v
            })
            .sum()
    }

    /// Full energy; equal to the QUBO energy of the same bits.
    pub fn energy(&self, x: u64, p: &[i64]) -> f64 {
        self.spin_energy(x, p) + self.offset(p)
    }

    pub fn to_json(&self) -> IsingJson {
        IsingJson {
            num_spins: self.num_spins,
            couplings: self
                .couplings
                .iter()
                .map(|(&(i, k), &v)| (i, k, v))
                .collect(),
            fields: self.fields.iter().copied().enumerate().collect(),
            scenario_couplings: self
                .scenario_coupling
                .iter()
                .map(|(&(t, i), &v)| (t, i, v))
                .collect(),
            scenario_dependent_couplings: Vec::new(),
            constant: self.constant,
            scenario_offset_linear: self.offset_linear.clone(),
            scenario_offset_quadratic: self.offset_quadratic.clone(),
        }
    }

    pub fn from_json(j: &IsingJson) -> Self {
        Self {
            num_spins: j.num_spins,
            couplings: j
                .couplings
                .iter()
                .map(|&(i, k, v)| ((i.min(k), i.max(k)), v))
                .collect(),
            fields: {
                let mut f = vec![0.0; j.num_spins];
                for &(i, v) in &j.fields {
                    f[i] = v;
                }
                f
            },
            scenario_coupling: j
                .scenario_couplings
                .iter()
                .map(|&(t, i, v)| ((t, i), v))
                .collect(),
            constant: j.constant,
            offset_linear: j.scenario_offset_linear.clone(),
            offset_quadratic: j.scenario_offset_quadratic.clone(),
        }
    }
}

/// Serialized form: `(i, k, value)` couplings, `(i, value)` fields and
/// `(t, i, value)` scenario couplings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsingJson {
    pub num_spins: usize,
    pub couplings: Vec<(usize, usize, f64)>,
    pub fields: Vec<(usize, f64)>,
    pub scenario_couplings: Vec<(usize, usize, f64)>,
    /// `(t, i, k, value)` terms coupling two spins to `p_t`; always empty.
    pub scenario_dependent_couplings: Vec<(usize, usize, usize, f64)>,
    pub constant: f64,
    pub scenario_offset_linear: Vec<f64>,
    pub scenario_offset_quadratic: Vec<f64>,
}
