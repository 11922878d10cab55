//! Dense statevector simulator with the gate set the scenario QAOA needs.
//!
//! Qubit `k` is bit `k` of the basis index (LSB-first). Gates act in place on
//! a contiguous amplitude array; large states are processed in parallel over
//! disjoint blocks, which keeps results bitwise identical to the serial path.

mod sampling;

pub use sampling::ShotCounts;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};

pub const DEFAULT_QUBIT_CAP: usize = 26;

/// States at or above this many amplitudes use the parallel kernels.
const PARALLEL_THRESHOLD: usize = 1 << 14;

/// A gate in the restricted instruction set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Gate {
    H(usize),
    Rx(usize, f64),
    Rz(usize, f64),
    Rzz(usize, usize, f64),
    Crz {
        control: usize,
        target: usize,
        angle: f64,
    },
    /// Amplitude encoding of `probabilities` (indexed by register value)
    /// into qubits `start..start + len`.
    Prepare {
        start: usize,
        len: usize,
        probabilities: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amps: Vec<Complex64>,
    num_qubits: usize,
}

impl StateVector {
    /// `|0...0>` on `n` qubits.
    pub fn new(n: usize) -> Result<Self> {
        Self::with_cap(n, DEFAULT_QUBIT_CAP)
    }

    pub fn with_cap(n: usize, cap: usize) -> Result<Self> {
        if n > cap || n >= 64 {
            return Err(Error::TooManyQubits { requested: n, cap });
        }
        if n == 0 {
            return Err(Error::Config("a state needs at least one qubit".into()));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n];
        amps[0] = Complex64::new(1.0, 0.0);
        Ok(Self {
            amps,
            num_qubits: n,
        })
    }

    /// Wraps raw amplitudes. The length must be a power of two.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let len = amps.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::Config(format!(
                "{len} amplitudes is not a power of two >= 2"
            )));
        }
        Ok(Self {
            num_qubits: len.trailing_zeros() as usize,
            amps,
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    fn check(&self, q: usize) -> Result<()> {
        if q >= self.num_qubits {
            return Err(Error::QubitOutOfRange {
                index: q,
                num_qubits: self.num_qubits,
            });
        }
        Ok(())
    }

    fn check_pair(&self, a: usize, b: usize) -> Result<()> {
        self.check(a)?;
        self.check(b)?;
        if a == b {
            return Err(Error::SameQubit(a));
        }
        Ok(())
    }

    /// Applies the 2x2 matrix `[[m00, m01], [m10, m11]]` to qubit `q`.
    fn apply_1q(&mut self, q: usize, m: [[Complex64; 2]; 2]) {
        let stride = 1usize << q;
        let kernel = |block: &mut [Complex64]| {
            let (lo, hi) = block.split_at_mut(stride);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = m[0][0] * x + m[0][1] * y;
                *b = m[1][0] * x + m[1][1] * y;
            }
        };
        if self.amps.len() >= PARALLEL_THRESHOLD {
            self.amps.par_chunks_mut(2 * stride).for_each(kernel);
        } else {
            self.amps.chunks_mut(2 * stride).for_each(kernel);
        }
    }

    /// Multiplies every amplitude by `phase(index)`.
    fn apply_diag(&mut self, phase: impl Fn(usize) -> Complex64 + Sync) {
        if self.amps.len() >= PARALLEL_THRESHOLD {
            self.amps
                .par_iter_mut()
                .enumerate()
                .for_each(|(i, a)| *a *= phase(i));
        } else {
            self.amps
                .iter_mut()
                .enumerate()
                .for_each(|(i, a)| *a *= phase(i));
        }
    }

    pub fn apply_h(&mut self, q: usize) -> Result<()> {
        self.check(q)?;
        let s = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        self.apply_1q(q, [[s, s], [s, -s]]);
        Ok(())
    }

    /// `RX(angle) = exp(-i angle X / 2)`.
    pub fn apply_rx(&mut self, q: usize, angle: f64) -> Result<()> {
        self.check(q)?;
        let c = Complex64::new((angle / 2.0).cos(), 0.0);
        let s = Complex64::new(0.0, -(angle / 2.0).sin());
        self.apply_1q(q, [[c, s], [s, c]]);
        Ok(())
    }

    /// `RZ(angle) = exp(-i angle Z / 2)`: `|0>` gains `e^{-i angle/2}`,
    /// `|1>` gains `e^{+i angle/2}`.
    pub fn apply_rz(&mut self, q: usize, angle: f64) -> Result<()> {
        self.check(q)?;
        let (zero, one) = rz_phases(angle);
        self.apply_diag(|i| if (i >> q) & 1 == 0 { zero } else { one });
        Ok(())
    }

    /// `RZZ(angle) = exp(-i angle Z⊗Z / 2)`.
    pub fn apply_rzz(&mut self, q1: usize, q2: usize, angle: f64) -> Result<()> {
        self.check_pair(q1, q2)?;
        let (even, odd) = rz_phases(angle);
        self.apply_diag(|i| {
            if ((i >> q1) ^ (i >> q2)) & 1 == 0 {
                even
            } else {
                odd
            }
        });
        Ok(())
    }

    /// RZ on `target` wherever `control` is 1.
    pub fn apply_crz(&mut self, control: usize, target: usize, angle: f64) -> Result<()> {
        self.check_pair(control, target)?;
        let (zero, one) = rz_phases(angle);
        let unit = Complex64::new(1.0, 0.0);
        self.apply_diag(|i| {
            if (i >> control) & 1 == 0 {
                unit
            } else if (i >> target) & 1 == 0 {
                zero
            } else {
                one
            }
        });
        Ok(())
    }

    /// Loads `sum_v sqrt(probabilities[v]) |v>` into the register
    /// `start..start + len`, which must be in `|0...0>` and unentangled.
    /// Amplitudes are assigned directly.
    pub fn prepare_amplitudes(
        &mut self,
        start: usize,
        len: usize,
        probabilities: &[f64],
    ) -> Result<()> {
        if len == 0 {
            return match probabilities {
                [p] if (p - 1.0).abs() <= 1e-12 => Ok(()),
                _ => Err(Error::Preparation(
                    "an empty register holds exactly one value".into(),
                )),
            };
        }
        self.check(start)?;
        self.check(start + len - 1)?;
        if probabilities.len() > 1 << len {
            return Err(Error::Preparation(format!(
                "{} probabilities for a {len}-qubit register",
                probabilities.len()
            )));
        }
        if probabilities.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::Preparation(
                "probabilities must be finite and >= 0".into(),
            ));
        }
        let sum: f64 = probabilities.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::Preparation(format!("probabilities sum to {sum}")));
        }
        let mask = ((1usize << len) - 1) << start;
        let stray: f64 = self
            .amps
            .iter()
            .enumerate()
            .filter(|(i, _)| i & mask != 0)
            .map(|(_, a)| a.norm_sqr())
            .sum();
        if stray > 1e-12 {
            return Err(Error::Preparation(
                "target register is not in |0...0>".into(),
            ));
        }
        let roots: Vec<f64> = probabilities.iter().map(|p| p.sqrt()).collect();
        let base: Vec<(usize, Complex64)> = self
            .amps
            .iter()
            .enumerate()
            .filter(|(i, a)| i & mask == 0 && a.norm_sqr() > 0.0)
            .map(|(i, &a)| (i, a))
            .collect();
        self.amps
            .iter_mut()
            .for_each(|a| *a = Complex64::new(0.0, 0.0));
        for (i, a) in base {
            for (v, &r) in roots.iter().enumerate() {
                self.amps[i | (v << start)] = a * r;
            }
        }
        Ok(())
    }

    /// `amplitude_z <- exp(-i gamma cost(z)) amplitude_z`.
    pub fn apply_diagonal_phase(&mut self, gamma: f64, cost: impl Fn(u64) -> f64 + Sync) {
        self.apply_diag(|i| Complex64::from_polar(1.0, -gamma * cost(i as u64)));
    }

    /// `sum_z |amplitude_z|^2 cost(z)`.
    pub fn expectation_diagonal(&self, cost: impl Fn(u64) -> f64) -> f64 {
        self.amps
            .iter()
            .enumerate()
            .map(|(i, a)| a.norm_sqr() * cost(i as u64))
            .sum()
    }

    /// Expectation of a diagonal observable given as a table over basis
    /// states.
    pub fn expectation_table(&self, table: &[f64]) -> f64 {
        debug_assert_eq!(table.len(), self.amps.len());
        self.amps
            .iter()
            .zip(table)
            .map(|(a, c)| a.norm_sqr() * c)
            .sum()
    }

    pub fn apply(&mut self, gate: &Gate) -> Result<()> {
        match gate {
            Gate::H(q) => self.apply_h(*q),
            Gate::Rx(q, a) => self.apply_rx(*q, *a),
            Gate::Rz(q, a) => self.apply_rz(*q, *a),
            Gate::Rzz(a, b, t) => self.apply_rzz(*a, *b, *t),
            Gate::Crz {
                control,
                target,
                angle,
            } => self.apply_crz(*control, *target, *angle),
            Gate::Prepare {
                start,
                len,
                probabilities,
            } => self.prepare_amplitudes(*start, *len, probabilities),
        }
    }

    pub fn run(&mut self, gates: &[Gate]) -> Result<()> {
        gates.iter().try_for_each(|g| self.apply(g))
    }

    /// Draws `shots` basis states i.i.d. from `|amplitude|^2`. Never mutates
    /// the state.
    pub fn sample(&self, shots: u64, seed: u64) -> ShotCounts {
        ShotCounts::draw(self, shots, seed)
    }

    /// `(index, re, im)` triplets for debugging dumps.
    pub fn dump(&self) -> Vec<(usize, f64, f64)> {
        self.amps
            .iter()
            .enumerate()
            .map(|(i, a)| (i, a.re, a.im))
            .collect()
    }
}

fn rz_phases(angle: f64) -> (Complex64, Complex64) {
    (
        Complex64::from_polar(1.0, -angle / 2.0),
        Complex64::from_polar(1.0, angle / 2.0),
    )
}
