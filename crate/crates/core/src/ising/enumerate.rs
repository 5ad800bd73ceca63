use crate::error::{Error, Result};

use super::{Basis, BoltzmannMachine, SpinState};

/// Largest node count handled by exhaustive enumeration (2^24 states).
pub const ENUMERATION_CAP: usize = 24;

/// Bit of node `node` in a state index over `len` nodes. Node 0 is the most
/// significant bit, so increasing indices walk states lexicographically.
#[inline]
pub fn state_bit(index: u64, node: usize, len: usize) -> bool {
    (index >> (len - 1 - node)) & 1 == 1
}

pub fn ensure_enumerable(node_count: usize, cap: usize) -> Result<()> {
    if node_count > cap {
        return Err(Error::Capacity(format!(
            "{node_count} nodes exceeds the enumeration cap of {cap}"
        )));
    }
    Ok(())
}

/// All `2^node_count` states in lexicographic order.
pub fn enumerate_states(node_count: usize, basis: Basis) -> Result<StateIter> {
    enumerate_states_with_cap(node_count, basis, ENUMERATION_CAP)
}

pub fn enumerate_states_with_cap(node_count: usize, basis: Basis, cap: usize) -> Result<StateIter> {
    ensure_enumerable(node_count, cap.min(63))?;
    Ok(StateIter { next: 0, end: 1u64 << node_count, len: node_count, basis })
}

/// Restartable iterator over a contiguous range of state indices.
#[derive(Debug, Clone)]
pub struct StateIter {
    next: u64,
    end: u64,
    len: usize,
    basis: Basis,
}

impl StateIter {
    /// Restricts the iterator to indices `[start, end)`, for sharding.
    pub fn shard(mut self, start: u64, end: u64) -> Self {
        self.end = end.min(self.end);
        self.next = start.min(self.end);
        self
    }
}

impl Iterator for StateIter {
    type Item = SpinState;

    fn next(&mut self) -> Option<SpinState> {
        if self.next >= self.end {
            return None;
        }
        let s = SpinState::from_index(self.next, self.len, self.basis);
        self.next += 1;
        Some(s)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = (self.end - self.next) as usize;
        (n, Some(n))
    }
}

impl ExactSizeIterator for StateIter {}

/// Energy of every state of a machine, indexed like [`enumerate_states`].
#[derive(Debug, Clone)]
pub struct EnergyTable {
    len: usize,
    energies: Vec<f64>,
    min: f64,
}

impl EnergyTable {
    pub fn build(bm: &BoltzmannMachine) -> Result<Self> {
        let n = bm.num_nodes();
        ensure_enumerable(n, ENUMERATION_CAP)?;
        let energies = match bm.basis() {
            Basis::ZeroOne => zero_one_energies(bm),
            Basis::PlusMinus => (0..1u64 << n)
                .map(|k| super::energy_of_values(bm, SpinState::from_index(k, n, Basis::PlusMinus).values()))
                .collect(),
        };
        let min = energies.iter().copied().fold(f64::INFINITY, f64::min);
        Ok(EnergyTable { len: n, energies, min })
    }

    pub fn node_count(&self) -> usize {
        self.len
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn min_energy(&self) -> f64 {
        self.min
    }

    /// Tolerance used to decide energy ties.
    pub fn tie_tolerance(&self) -> f64 {
        1e-9 * self.min.abs().max(1.0)
    }

    pub fn ground_indices(&self) -> Vec<u64> {
        let tol = self.tie_tolerance();
        (0..self.energies.len() as u64)
            .filter(|&k| self.energies[k as usize] <= self.min + tol)
            .collect()
    }

    /// Unnormalised weights `exp(-beta (E - E_min))` and their sum.
    pub fn shifted_weights(&self, beta: f64) -> (Vec<f64>, f64) {
        let w: Vec<f64> = self.energies.iter().map(|e| (-beta * (e - self.min)).exp()).collect();
        let z = w.iter().sum();
        (w, z)
    }

    /// Normalised Boltzmann probabilities at inverse temperature `beta`.
    pub fn probabilities(&self, beta: f64) -> Vec<f64> {
        let (mut w, z) = self.shifted_weights(beta);
        for p in &mut w {
            *p /= z;
        }
        w
    }

    /// `ln Z(beta)`.
    pub fn log_partition(&self, beta: f64) -> f64 {
        let (_, z) = self.shifted_weights(beta);
        z.ln() - beta * self.min
    }
}

fn zero_one_energies(bm: &BoltzmannMachine) -> Vec<f64> {
    let n = bm.num_nodes();
    let mut dense = vec![0.0; n * n];
    for (k, l, j) in bm.couplings() {
        dense[k * n + l] = j;
        dense[l * n + k] = j;
    }
    let biases = bm.biases();
    let mut on = Vec::with_capacity(n);
    (0..1u64 << n)
        .map(|k| {
            on.clear();
            on.extend((0..n).filter(|&i| state_bit(k, i, n)));
            let mut e = 0.0;
            for (a, &i) in on.iter().enumerate() {
                e += biases[i];
                let row = &dense[i * n..(i + 1) * n];
                for &j in &on[a + 1..] {
                    e += row[j];
                }
            }
            e
        })
        .collect()
}

/// Exact energy minimisers by full enumeration, ties included.
pub fn ground_states(bm: &BoltzmannMachine) -> Result<(Vec<SpinState>, f64)> {
    let table = EnergyTable::build(bm)?;
    let states = table
        .ground_indices()
        .into_iter()
        .map(|k| SpinState::from_index(k, table.len, bm.basis()))
        .collect();
    Ok((states, table.min))
}
