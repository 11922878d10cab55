use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Serialize, Serializer};

use super::StateVector;

/// Measurement histogram keyed by basis index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShotCounts {
    pub counts: BTreeMap<u64, u64>,
    pub shots: u64,
    pub num_qubits: usize,
}

impl ShotCounts {
    pub(super) fn draw(state: &StateVector, shots: u64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::draw_with(state, shots, &mut rng)
    }

    pub fn draw_with(state: &StateVector, shots: u64, rng: &mut impl Rng) -> Self {
        let mut cumulative = Vec::with_capacity(state.amplitudes().len());
        let mut acc = 0.0;
        for a in state.amplitudes() {
            acc += a.norm_sqr();
            cumulative.push(acc);
        }
        let total = acc;
        let last = cumulative.len() - 1;
        let mut counts = BTreeMap::new();
        for _ in 0..shots {
            let u = rng.random::<f64>() * total;
            // First index whose cumulative mass exceeds u; zero-probability
            // entries have equal cumulative values and are never chosen.
            let idx = cumulative.partition_point(|&c| c <= u).min(last);
            *counts.entry(idx as u64).or_insert(0) += 1;
        }
        Self {
            counts,
            shots,
            num_qubits: state.num_qubits(),
        }
    }

    /// Bitstring with the highest qubit leftmost.
    pub fn bitstring(&self, index: u64) -> String {
        (0..self.num_qubits)
            .rev()
            .map(|q| if (index >> q) & 1 == 1 { '1' } else { '0' })
            .collect()
    }

    pub fn frequency(&self, index: u64) -> f64 {
        self.counts.get(&index).copied().unwrap_or(0) as f64 / self.shots as f64
    }

    /// Counts aggregated by `key(index)`.
    pub fn marginal<K: Ord>(&self, key: impl Fn(u64) -> K) -> BTreeMap<K, u64> {
        let mut out = BTreeMap::new();
        for (&i, &c) in &self.counts {
            *out.entry(key(i)).or_insert(0) += c;
        }
        out
    }
}

impl Serialize for ShotCounts {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let by_bits: BTreeMap<String, u64> = self
            .counts
            .iter()
            .map(|(&i, &c)| (self.bitstring(i), c))
            .collect();
        let mut st = s.serialize_struct("ShotCounts", 2)?;
        st.serialize_field("shots", &self.shots)?;
        st.serialize_field("counts", &by_bits)?;
        st.end()
    }
}
