use super::{Basis, BoltzmannMachine, SpinState};

/// Re-expresses a machine in the other basis.
///
/// With `S = 2s - 1`, `{0,1}` parameters map to `{-1,+1}` as
/// `J' = J / 4` and `h'_k = h_k / 2 + (1/4) sum_{l in N(k)} J_kl`; the reverse
/// map inverts this. Energies shift by a state-independent constant, so
/// Boltzmann probabilities are unchanged at every inverse temperature.
pub fn convert_basis(bm: &BoltzmannMachine) -> BoltzmannMachine {
    let n = bm.num_nodes();
    let mut neighbour_sum = vec![0.0; n];
    for (k, l, j) in bm.couplings() {
        neighbour_sum[k] += j;
        neighbour_sum[l] += j;
    }
    let (biases, coupling_scale) = match bm.basis() {
        Basis::ZeroOne => (
            (0..n).map(|k| bm.bias(k) / 2.0 + neighbour_sum[k] / 4.0).collect::<Vec<_>>(),
            0.25,
        ),
        Basis::PlusMinus => ((0..n).map(|k| 2.0 * (bm.bias(k) - neighbour_sum[k])).collect(), 4.0),
    };
    let couplings = bm.couplings().map(|(k, l, j)| ((k, l), j * coupling_scale)).collect();
    BoltzmannMachine::from_raw_parts(
        (bm.num_input(), bm.num_output(), bm.num_hidden()),
        biases,
        couplings,
        bm.basis().other(),
        super::Bounds { enforce: false, ..bm.bounds() },
    )
}

/// Maps each node value through `S = 2s - 1` (or its inverse).
pub fn convert_state(state: &SpinState) -> SpinState {
    let target = state.basis().other();
    let values = state
        .values()
        .iter()
        .map(|&v| target.value(state.basis().bit(v).unwrap_or(false)))
        .collect();
    SpinState::new(values, target).expect("mapped values lie in the target basis")
}
