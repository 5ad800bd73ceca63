use std::collections::BTreeMap;

use crate::error::{Error, Result};

use super::{BoltzmannMachine, Bounds, SpinState};

/// A machine over the free nodes left after fixing some node values.
///
/// For every free configuration `h`,
/// `E(full, clamped ⊕ h) == offset + E(machine, h)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClampedMachine {
    pub machine: BoltzmannMachine,
    pub offset: f64,
    /// Original index of each node of `machine`, ascending.
    pub free_nodes: Vec<usize>,
    /// `(node, value)` pairs that were fixed, ascending by node.
    pub clamped: Vec<(usize, i8)>,
}

impl ClampedMachine {
    /// Full-machine state from a state of the reduced machine.
    pub fn expand(&self, free_state: &[i8]) -> Vec<i8> {
        let n = self.free_nodes.len() + self.clamped.len();
        let mut full = vec![0i8; n];
        for &(i, v) in &self.clamped {
            full[i] = v;
        }
        for (&i, &v) in self.free_nodes.iter().zip(free_state) {
            full[i] = v;
        }
        full
    }
}

/// Fixes the first `values.len()` nodes (the visible block, or just the
/// inputs) to `values`.
pub fn clamp_visible(bm: &BoltzmannMachine, values: &[i8]) -> Result<ClampedMachine> {
    if values.len() > bm.num_nodes() {
        return Err(Error::invalid("more clamped values than nodes"));
    }
    let assignment: Vec<(usize, i8)> = values.iter().copied().enumerate().collect();
    clamp(bm, &assignment)
}

/// Fixes an arbitrary node subset. Each free node absorbs its couplings to
/// clamped nodes into its bias; terms among clamped nodes become the offset.
pub fn clamp(bm: &BoltzmannMachine, assignment: &[(usize, i8)]) -> Result<ClampedMachine> {
    let n = bm.num_nodes();
    let basis = bm.basis();
    let mut fixed: Vec<Option<i8>> = vec![None; n];
    for &(i, v) in assignment {
        if i >= n {
            return Err(Error::invalid(format!("clamped node {i} out of range")));
        }
        if !basis.is_valid(v) {
            return Err(Error::invalid(format!("clamped value {v} is not in basis {basis}")));
        }
        if fixed[i].replace(v).is_some() {
            return Err(Error::invalid(format!("node {i} clamped twice")));
        }
    }

    let free_nodes: Vec<usize> = (0..n).filter(|&i| fixed[i].is_none()).collect();
    let mut reduced_index = vec![usize::MAX; n];
    for (r, &i) in free_nodes.iter().enumerate() {
        reduced_index[i] = r;
    }

    let mut offset = 0.0;
    let mut biases: Vec<f64> = free_nodes.iter().map(|&i| bm.bias(i)).collect();
    for (i, slot) in fixed.iter().enumerate() {
        if let Some(v) = slot {
            offset += bm.bias(i) * f64::from(*v);
        }
    }

    let mut couplings = BTreeMap::new();
    for (k, l, j) in bm.couplings() {
        match (fixed[k], fixed[l]) {
            (Some(a), Some(b)) => offset += j * f64::from(a) * f64::from(b),
            (Some(a), None) => biases[reduced_index[l]] += j * f64::from(a),
            (None, Some(b)) => biases[reduced_index[k]] += j * f64::from(b),
            (None, None) => {
                couplings.insert((reduced_index[k], reduced_index[l]), j);
            }
        }
    }

    let count_free = |range: std::ops::Range<usize>| range.filter(|&i| fixed[i].is_none()).count();
    let partition = (
        count_free(bm.input_nodes()),
        count_free(bm.output_nodes()),
        count_free(bm.hidden_nodes()),
    );
    let bounds = Bounds::unenforced(bm.bounds().h_max, bm.bounds().j_max);
    let machine = BoltzmannMachine::from_raw_parts(partition, biases, couplings, basis, bounds);

    let mut clamped: Vec<(usize, i8)> = assignment.to_vec();
    clamped.sort_unstable();
    Ok(ClampedMachine { machine, offset, free_nodes, clamped })
}

impl ClampedMachine {
    /// Energy of the full state built from `free_state`, via the identity.
    pub fn full_energy(&self, free_state: &SpinState) -> Result<f64> {
        Ok(self.offset + self.machine.energy(free_state)?)
    }
}
