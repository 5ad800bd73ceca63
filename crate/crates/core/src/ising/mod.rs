//! Ising-type Boltzmann machines: parameters, energy, clamping, basis changes.

mod basis;
mod clamp;
mod enumerate;
mod model_file;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use basis::{convert_basis, convert_state};
pub use clamp::{clamp, clamp_visible, ClampedMachine};
pub use enumerate::{
    enumerate_states, enumerate_states_with_cap, ensure_enumerable, ground_states, state_bit,
    EnergyTable, StateIter, ENUMERATION_CAP,
};
pub use model_file::{ModelFile, ModelMetadata};

/// Encoding of a binary node value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub enum Basis {
    /// Values in `{0, 1}`. The working basis for training.
    #[serde(rename = "01")]
    #[default]
    ZeroOne,
    /// Values in `{-1, +1}`, the usual annealer convention.
    #[serde(rename = "pm1")]
    PlusMinus,
}

impl Basis {
    /// Node value for a raw bit (`false` is the "down" value of the basis).
    #[inline]
    pub fn value(self, bit: bool) -> i8 {
        match (self, bit) {
            (Basis::ZeroOne, false) => 0,
            (Basis::ZeroOne, true) => 1,
            (Basis::PlusMinus, false) => -1,
            (Basis::PlusMinus, true) => 1,
        }
    }

    #[inline]
    pub fn is_valid(self, value: i8) -> bool {
        match self {
            Basis::ZeroOne => value == 0 || value == 1,
            Basis::PlusMinus => value == -1 || value == 1,
        }
    }

    /// Inverse of [`Basis::value`]; `None` for values outside the basis.
    #[inline]
    pub fn bit(self, value: i8) -> Option<bool> {
        match (self, value) {
            (Basis::ZeroOne, 0) | (Basis::PlusMinus, -1) => Some(false),
            (Basis::ZeroOne, 1) | (Basis::PlusMinus, 1) => Some(true),
            _ => None,
        }
    }

    pub fn other(self) -> Basis {
        match self {
            Basis::ZeroOne => Basis::PlusMinus,
            Basis::PlusMinus => Basis::ZeroOne,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Basis::ZeroOne => "01",
            Basis::PlusMinus => "pm1",
        }
    }
}

impl fmt::Display for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One configuration of every node of a machine.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SpinState {
    values: Vec<i8>,
    basis: Basis,
}

impl SpinState {
    pub fn new(values: Vec<i8>, basis: Basis) -> Result<Self> {
        if let Some(bad) = values.iter().find(|v| !basis.is_valid(**v)) {
            return Err(Error::invalid(format!("value {bad} is not in basis {basis}")));
        }
        Ok(SpinState { values, basis })
    }

    /// State whose node `i` is the `i`-th most significant of `len` bits of `index`.
    pub fn from_index(index: u64, len: usize, basis: Basis) -> Self {
        let values = (0..len).map(|i| basis.value(state_bit(index, i, len))).collect();
        SpinState { values, basis }
    }

    /// Lexicographic index of the state; inverse of [`SpinState::from_index`].
    pub fn index(&self) -> u64 {
        self.values.iter().fold(0u64, |acc, &v| {
            (acc << 1) | u64::from(self.basis.bit(v).unwrap_or(false))
        })
    }

    pub fn values(&self) -> &[i8] {
        &self.values
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn into_values(self) -> Vec<i8> {
        self.values
    }

    /// Values of the given node subset, in the order given.
    pub fn project(&self, nodes: &[usize]) -> Vec<i8> {
        nodes.iter().map(|&i| self.values[i]).collect()
    }
}

/// Magnitude caps on biases (`h_max`) and couplings (`j_max`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub h_max: f64,
    pub j_max: f64,
    /// When false the caps are recorded but not checked.
    pub enforce: bool,
}

impl Default for Bounds {
    fn default() -> Self {
        Bounds { h_max: 1.0, j_max: 1.0, enforce: true }
    }
}

impl Bounds {
    pub fn unenforced(h_max: f64, j_max: f64) -> Self {
        Bounds { h_max, j_max, enforce: false }
    }
}

/// Which family a flat parameter index belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamClass {
    Bias(usize),
    Coupling(usize, usize),
}

/// A Boltzmann machine with Ising energy
/// `E(s) = sum_i bias_i s_i + sum_{k<l} coupling_kl s_k s_l`.
///
/// Nodes are ordered `[visible input | visible output | hidden]`. Couplings
/// are kept sparse, keyed by `(min, max)`; a present coupling with value zero
/// is still a trainable parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct BoltzmannMachine {
    num_input: usize,
    num_output: usize,
    num_hidden: usize,
    biases: Vec<f64>,
    couplings: BTreeMap<(usize, usize), f64>,
    basis: Basis,
    bounds: Bounds,
}

impl BoltzmannMachine {
    /// Machine with all biases zero and no couplings.
    pub fn new(num_input: usize, num_output: usize, num_hidden: usize, basis: Basis) -> Self {
        let n = num_input + num_output + num_hidden;
        BoltzmannMachine {
            num_input,
            num_output,
            num_hidden,
            biases: vec![0.0; n],
            couplings: BTreeMap::new(),
            basis,
            bounds: Bounds::default(),
        }
    }

    /// Machine on the complete graph with every parameter zero.
    pub fn complete(num_input: usize, num_output: usize, num_hidden: usize, basis: Basis) -> Self {
        let mut bm = Self::new(num_input, num_output, num_hidden, basis);
        let n = bm.num_nodes();
        for k in 0..n {
            for l in k + 1..n {
                bm.couplings.insert((k, l), 0.0);
            }
        }
        bm
    }

    /// Restricted (bipartite visible/hidden) topology with every parameter zero.
    pub fn bipartite(num_input: usize, num_output: usize, num_hidden: usize, basis: Basis) -> Self {
        let mut bm = Self::new(num_input, num_output, num_hidden, basis);
        let m = bm.num_visible();
        for k in 0..m {
            for l in m..bm.num_nodes() {
                bm.couplings.insert((k, l), 0.0);
            }
        }
        bm
    }

    pub fn with_bounds(mut self, bounds: Bounds) -> Result<Self> {
        self.bounds = bounds;
        self.check_bounds()?;
        Ok(self)
    }

    pub fn num_input(&self) -> usize {
        self.num_input
    }

    pub fn num_output(&self) -> usize {
        self.num_output
    }

    pub fn num_hidden(&self) -> usize {
        self.num_hidden
    }

    pub fn num_visible(&self) -> usize {
        self.num_input + self.num_output
    }

    pub fn num_nodes(&self) -> usize {
        self.biases.len()
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn bounds(&self) -> Bounds {
        self.bounds
    }

    pub fn visible_nodes(&self) -> std::ops::Range<usize> {
        0..self.num_visible()
    }

    pub fn input_nodes(&self) -> std::ops::Range<usize> {
        0..self.num_input
    }

    pub fn output_nodes(&self) -> std::ops::Range<usize> {
        self.num_input..self.num_visible()
    }

    pub fn hidden_nodes(&self) -> std::ops::Range<usize> {
        self.num_visible()..self.num_nodes()
    }

    pub fn biases(&self) -> &[f64] {
        &self.biases
    }

    pub fn bias(&self, node: usize) -> f64 {
        self.biases[node]
    }

    pub fn set_bias(&mut self, node: usize, value: f64) -> Result<()> {
        if node >= self.num_nodes() {
            return Err(Error::invalid(format!("node {node} out of range")));
        }
        if !value.is_finite() {
            return Err(Error::invalid(format!("bias {value} is not finite")));
        }
        if self.bounds.enforce && value.abs() > self.bounds.h_max {
            return Err(Error::invalid(format!(
                "|bias {node}| = {} exceeds h_max = {}",
                value.abs(),
                self.bounds.h_max
            )));
        }
        self.biases[node] = value;
        Ok(())
    }

    /// Coupling between `k` and `l` in either order; zero when absent.
    pub fn coupling(&self, k: usize, l: usize) -> f64 {
        self.couplings.get(&pair_key(k, l)).copied().unwrap_or(0.0)
    }

    pub fn has_coupling(&self, k: usize, l: usize) -> bool {
        self.couplings.contains_key(&pair_key(k, l))
    }

    pub fn set_coupling(&mut self, k: usize, l: usize, value: f64) -> Result<()> {
        let n = self.num_nodes();
        if k == l {
            return Err(Error::invalid(format!("self-coupling ({k},{k}) is not allowed")));
        }
        if k >= n || l >= n {
            return Err(Error::invalid(format!("coupling ({k},{l}) out of range for {n} nodes")));
        }
        if !value.is_finite() {
            return Err(Error::invalid(format!("coupling {value} is not finite")));
        }
        if self.bounds.enforce && value.abs() > self.bounds.j_max {
            return Err(Error::invalid(format!(
                "|coupling ({k},{l})| = {} exceeds j_max = {}",
                value.abs(),
                self.bounds.j_max
            )));
        }
        self.couplings.insert(pair_key(k, l), value);
        Ok(())
    }

    /// Couplings in `(k, l)` key order with `k < l`.
    pub fn couplings(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.couplings.iter().map(|(&(k, l), &v)| (k, l, v))
    }

    pub fn coupling_keys(&self) -> Vec<(usize, usize)> {
        self.couplings.keys().copied().collect()
    }

    pub fn num_couplings(&self) -> usize {
        self.couplings.len()
    }

    /// Neighbour lists `(other, coupling)` per node.
    pub fn adjacency(&self) -> Vec<Vec<(usize, f64)>> {
        let mut adj = vec![Vec::new(); self.num_nodes()];
        for (k, l, v) in self.couplings() {
            adj[k].push((l, v));
            adj[l].push((k, v));
        }
        adj
    }

    pub fn num_parameters(&self) -> usize {
        self.num_nodes() + self.num_couplings()
    }

    /// Flat parameter vector: biases, then couplings in key order.
    pub fn parameters(&self) -> Vec<f64> {
        self.biases.iter().copied().chain(self.couplings.values().copied()).collect()
    }

    pub fn parameter_classes(&self) -> Vec<ParamClass> {
        (0..self.num_nodes())
            .map(ParamClass::Bias)
            .chain(self.couplings.keys().map(|&(k, l)| ParamClass::Coupling(k, l)))
            .collect()
    }

    /// Overwrites every parameter from a flat vector laid out as [`Self::parameters`].
    pub fn set_parameters(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.num_parameters() {
            return Err(Error::invalid(format!(
                "expected {} parameters, got {}",
                self.num_parameters(),
                params.len()
            )));
        }
        let n = self.num_nodes();
        let mut next = self.clone();
        next.biases.copy_from_slice(&params[..n]);
        for (slot, &v) in next.couplings.values_mut().zip(&params[n..]) {
            *slot = v;
        }
        next.check_bounds()?;
        *self = next;
        Ok(())
    }

    pub fn check_bounds(&self) -> Result<()> {
        if !self.bounds.enforce {
            return Ok(());
        }
        if let Some((i, b)) = self.biases.iter().enumerate().find(|(_, b)| b.abs() > self.bounds.h_max) {
            return Err(Error::invalid(format!("|bias {i}| = {} exceeds h_max", b.abs())));
        }
        if let Some((k, l, j)) = self.couplings().find(|(_, _, j)| j.abs() > self.bounds.j_max) {
            return Err(Error::invalid(format!("|coupling ({k},{l})| = {} exceeds j_max", j.abs())));
        }
        Ok(())
    }

    /// Copy with a different partition of the same node count.
    pub fn with_partition(&self, num_input: usize, num_output: usize, num_hidden: usize) -> Result<Self> {
        if num_input + num_output + num_hidden != self.num_nodes() {
            return Err(Error::invalid("partition sizes must sum to the node count"));
        }
        let mut bm = self.clone();
        bm.num_input = num_input;
        bm.num_output = num_output;
        bm.num_hidden = num_hidden;
        Ok(bm)
    }

    pub(crate) fn from_raw_parts(
        partition: (usize, usize, usize),
        biases: Vec<f64>,
        couplings: BTreeMap<(usize, usize), f64>,
        basis: Basis,
        bounds: Bounds,
    ) -> Self {
        BoltzmannMachine {
            num_input: partition.0,
            num_output: partition.1,
            num_hidden: partition.2,
            biases,
            couplings,
            basis,
            bounds,
        }
    }

    /// Ising energy of a full state.
    pub fn energy(&self, state: &SpinState) -> Result<f64> {
        energy(self, state)
    }
}

#[inline]
pub(crate) fn pair_key(k: usize, l: usize) -> (usize, usize) {
    if k < l {
        (k, l)
    } else {
        (l, k)
    }
}

/// `sum_i bias_i s_i + sum_{(k,l)} coupling_kl s_k s_l`, each pair counted once.
pub fn energy(bm: &BoltzmannMachine, state: &SpinState) -> Result<f64> {
    if state.basis() != bm.basis() {
        return Err(Error::invalid(format!(
            "state basis {} does not match machine basis {}",
            state.basis(),
            bm.basis()
        )));
    }
    if state.len() != bm.num_nodes() {
        return Err(Error::invalid(format!(
            "state has {} nodes, machine has {}",
            state.len(),
            bm.num_nodes()
        )));
    }
    Ok(energy_of_values(bm, state.values()))
}

pub(crate) fn energy_of_values(bm: &BoltzmannMachine, s: &[i8]) -> f64 {
    let field: f64 = bm.biases.iter().zip(s).map(|(b, &x)| b * f64::from(x)).sum();
    let pairs: f64 = bm
        .couplings()
        .map(|(k, l, j)| j * f64::from(s[k]) * f64::from(s[l]))
        .sum();
    field + pairs
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::load_fixture;

    #[test]
    fn all_zero_state_has_zero_energy() {
        let mut bm = BoltzmannMachine::complete(2, 0, 1, Basis::ZeroOne);
        bm.set_parameters(&[0.3, -0.2, 0.9, 0.4, -0.7, 0.1]).unwrap();
        let s = SpinState::new(vec![0, 0, 0], Basis::ZeroOne).unwrap();
        assert_eq!(bm.energy(&s).unwrap(), 0.0);
    }

    #[test]
    fn single_node_energy_is_its_bias() {
        let mut bm = BoltzmannMachine::new(1, 0, 0, Basis::ZeroOne);
        bm.set_bias(0, 0.5).unwrap();
        let s = SpinState::new(vec![1], Basis::ZeroOne).unwrap();
        assert_eq!(bm.energy(&s).unwrap(), 0.5);
    }

    #[test]
    fn and_gate_fixture_energy_by_hand() {
        // 0.3111 + 0.3011 + 0.6791 + 0.5737 - 0.6829 - 0.6727
        let bm = load_fixture("fig7a_and").unwrap();
        let s = SpinState::new(vec![1, 1, 1, 0], Basis::ZeroOne).unwrap();
        assert!((bm.energy(&s).unwrap() - 0.5094).abs() < 1e-12);
    }

    #[test]
    fn energy_rejects_mismatches() {
        let bm = BoltzmannMachine::new(2, 0, 0, Basis::ZeroOne);
        let wrong_len = SpinState::new(vec![0, 1, 0], Basis::ZeroOne).unwrap();
        assert!(matches!(bm.energy(&wrong_len), Err(Error::InvalidArgument(_))));
        let wrong_basis = SpinState::new(vec![-1, 1], Basis::PlusMinus).unwrap();
        assert!(matches!(bm.energy(&wrong_basis), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn spin_state_rejects_values_outside_basis() {
        assert!(SpinState::new(vec![0, -1], Basis::ZeroOne).is_err());
        assert!(SpinState::new(vec![0, 1], Basis::PlusMinus).is_err());
    }

    #[test]
    fn coupling_lookup_is_symmetric_and_self_coupling_rejected() {
        let mut bm = BoltzmannMachine::new(3, 0, 0, Basis::ZeroOne);
        bm.set_coupling(2, 0, 0.25).unwrap();
        assert_eq!(bm.coupling(0, 2), 0.25);
        assert_eq!(bm.coupling(2, 0), 0.25);
        assert!(bm.set_coupling(1, 1, 0.1).is_err());
        assert_eq!(bm.coupling_keys(), vec![(0, 2)]);
    }

    #[test]
    fn bounds_are_enforced_when_enabled() {
        let mut bm = BoltzmannMachine::new(2, 0, 0, Basis::ZeroOne);
        assert!(bm.set_bias(0, 1.5).is_err());
        assert!(bm.set_coupling(0, 1, -1.01).is_err());
        let mut loose = bm.with_bounds(Bounds::unenforced(1.0, 1.0)).unwrap();
        loose.set_bias(0, 1.5).unwrap();
        assert_eq!(loose.bias(0), 1.5);
    }

    #[test]
    fn parameter_round_trip() {
        let mut bm = BoltzmannMachine::complete(1, 1, 1, Basis::ZeroOne);
        let p = vec![0.1, 0.2, 0.3, -0.4, -0.5, -0.6];
        bm.set_parameters(&p).unwrap();
        assert_eq!(bm.parameters(), p);
        assert_eq!(bm.coupling(1, 2), -0.6);
        assert_eq!(bm.parameter_classes()[4], ParamClass::Coupling(0, 2));
    }

    #[test]
    fn state_index_round_trip() {
        let s = SpinState::new(vec![1, 0, 1, 1], Basis::ZeroOne).unwrap();
        assert_eq!(s.index(), 0b1011);
        assert_eq!(SpinState::from_index(0b1011, 4, Basis::ZeroOne), s);
        let pm = SpinState::from_index(0b10, 2, Basis::PlusMinus);
        assert_eq!(pm.values(), &[1, -1]);
    }
}
