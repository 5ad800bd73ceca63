//! Monotonicity of ground- and excited-state probabilities in beta.
//!
//! With `d ln p(S) / d beta = <E> - E(S)`, the total ground-state probability
//! rises with beta (strictly unless every state is a ground state), and once
//! `<E>` has fallen to the first excited energy every excited state's
//! probability is nonincreasing.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::ising::{Basis, BoltzmannMachine, EnergyTable};

const REL_TOL: f64 = 1e-10;

/// `d ln p(S_g) / d beta = E[E] - E_min`, nonnegative.
pub fn ground_state_log_derivative(bm: &BoltzmannMachine, beta: f64) -> Result<f64> {
    let table = EnergyTable::build(bm)?;
    Ok(mean_energy_at(&table, beta) - table.min_energy())
}

fn mean_energy_at(table: &EnergyTable, beta: f64) -> f64 {
    let probs = table.probabilities(beta);
    table.energies().iter().zip(&probs).map(|(e, p)| e * p).sum()
}

/// Energy levels above the minimum, ascending and de-duplicated at the tie tolerance.
fn first_excited_energy(table: &EnergyTable) -> Option<f64> {
    let tol = table.tie_tolerance();
    let min = table.min_energy();
    table
        .energies()
        .iter()
        .copied()
        .filter(|&e| e > min + tol)
        .min_by(|a, b| a.total_cmp(b))
}

/// Inverse temperature at which `<E>` reaches the first excited energy; from
/// there on no excited state gains probability. `None` for flat machines.
pub fn critical_beta(bm: &BoltzmannMachine) -> Result<Option<f64>> {
    let table = EnergyTable::build(bm)?;
    Ok(critical_beta_from_table(&table))
}

fn critical_beta_from_table(table: &EnergyTable) -> Option<f64> {
    let e1 = first_excited_energy(table)?;
    if mean_energy_at(table, 0.0) <= e1 {
        return Some(0.0);
    }
    let mut hi = 1.0;
    while mean_energy_at(table, hi) > e1 {
        hi *= 2.0;
        if hi > 1e6 {
            return None;
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mean_energy_at(table, mid) > e1 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-12 * hi {
            break;
        }
    }
    Some(hi)
}

/// Outcome of checking both monotonicity statements on one machine.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MachineCheck {
    /// Every state is a ground state; only non-strict monotonicity is expected.
    pub all_ground: bool,
    pub ground_monotone: bool,
    /// Analytic threshold where `<E>` meets the first excited energy.
    pub beta_c: Option<f64>,
    /// Smallest grid beta from which every excited state is nonincreasing.
    pub beta_c_scan: Option<f64>,
    pub excited_monotone: bool,
    pub violation: Option<String>,
}

impl MachineCheck {
    pub fn passed(&self) -> bool {
        self.ground_monotone && self.excited_monotone
    }
}

/// Checks ground-state monotonicity on `grid` and excited-state decrease on
/// every grid step at or beyond the analytic `beta_c`. When `beta_c` exceeds
/// the grid, extra points on `[beta_c, 2 beta_c]` are added so the check is
/// never vacuous.
pub fn check_machine(bm: &BoltzmannMachine, grid: &[f64]) -> Result<MachineCheck> {
    let table = EnergyTable::build(bm)?;
    let ground = table.ground_indices();
    let all_ground = ground.len() == table.energies().len();
    let mut violation = None;

    // Excited mass S / (|G| + S) avoids cancellation in 1 - P near P = 1.
    let excited_mass = |beta: f64| {
        let (w, z) = table.shifted_weights(beta);
        let g: f64 = ground.iter().map(|&k| w[k as usize]).sum();
        (z - g).max(0.0) / z
    };
    let mut ground_monotone = true;
    for pair in grid.windows(2) {
        let (qa, qb) = (excited_mass(pair[0]), excited_mass(pair[1]));
        let ok = if all_ground { qb <= qa } else { qb < qa };
        if !ok {
            ground_monotone = false;
            violation.get_or_insert_with(|| {
                format!("ground probability not increasing between beta {} and {}", pair[0], pair[1])
            });
        }
    }

    let beta_c = critical_beta_from_table(&table);
    let mut excited_monotone = true;
    let mut beta_c_scan = None;
    if !all_ground {
        let mut betas = grid.to_vec();
        if let Some(bc) = beta_c {
            let top = grid.last().copied().unwrap_or(0.0);
            if bc >= top {
                betas.extend((0..=20).map(|i| bc * (1.0 + i as f64 / 20.0)));
            }
        }
        betas.sort_by(|a, b| a.total_cmp(b));
        betas.dedup();
        let probs: Vec<Vec<f64>> = betas.iter().map(|&b| table.probabilities(b)).collect();
        let tol = table.tie_tolerance();
        let excited: Vec<usize> = (0..table.energies().len())
            .filter(|&k| table.energies()[k] > table.min_energy() + tol)
            .collect();
        let step_nonincreasing: Vec<bool> = probs
            .windows(2)
            .map(|w| excited.iter().all(|&k| w[1][k] <= w[0][k] * (1.0 + REL_TOL)))
            .collect();

        let mut first_good = step_nonincreasing.len();
        while first_good > 0 && step_nonincreasing[first_good - 1] {
            first_good -= 1;
        }
        beta_c_scan = betas.get(first_good).copied();

        if let Some(bc) = beta_c {
            for (i, ok) in step_nonincreasing.iter().enumerate() {
                if betas[i] >= bc * (1.0 + 1e-9) && !ok {
                    excited_monotone = false;
                    violation.get_or_insert_with(|| {
                        format!(
                            "excited state gains probability between beta {} and {} (beta_c = {bc})",
                            betas[i],
                            betas[i + 1]
                        )
                    });
                }
            }
        }
    }

    Ok(MachineCheck { all_ground, ground_monotone, beta_c, beta_c_scan, excited_monotone, violation })
}

/// Complete-graph machine with parameters drawn uniformly from `[-scale, scale]`.
pub fn random_machine(rng: &mut impl Rng, nodes: usize, scale: f64) -> BoltzmannMachine {
    let mut bm = BoltzmannMachine::complete(nodes, 0, 0, Basis::ZeroOne);
    let params: Vec<f64> = (0..bm.num_parameters()).map(|_| rng.gen_range(-scale..=scale)).collect();
    bm.set_parameters(&params).expect("parameters lie within the default bounds");
    bm
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleReport {
    pub machines: usize,
    pub passed: usize,
    pub failed: usize,
    /// Machines where every state is a ground state (non-strict case).
    pub non_strict: usize,
    /// Indices of failing machines.
    pub counterexamples: Vec<usize>,
    pub checks: Vec<MachineCheck>,
}

/// Runs [`check_machine`] over `count` random machines with 2 to
/// `max_nodes` nodes. With `include_flat`, one all-zero machine is appended
/// to exercise the non-strict case.
pub fn verify_ensemble(
    count: usize,
    max_nodes: usize,
    seed: u64,
    grid: &[f64],
    include_flat: bool,
) -> Result<(EnsembleReport, Vec<BoltzmannMachine>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut machines: Vec<BoltzmannMachine> = (0..count)
        .map(|_| {
            let nodes = rng.gen_range(2..=max_nodes.max(2));
            random_machine(&mut rng, nodes, 1.0)
        })
        .collect();
    if include_flat {
        machines.push(BoltzmannMachine::complete(3, 0, 0, Basis::ZeroOne));
    }
    let checks = machines.iter().map(|bm| check_machine(bm, grid)).collect::<Result<Vec<_>>>()?;
    let counterexamples: Vec<usize> = checks.iter().enumerate().filter(|(_, c)| !c.passed()).map(|(i, _)| i).collect();
    let report = EnsembleReport {
        machines: machines.len(),
        passed: checks.len() - counterexamples.len(),
        failed: counterexamples.len(),
        non_strict: checks.iter().filter(|c| c.all_ground).count(),
        counterexamples,
        checks,
    };
    Ok((report, machines))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::load_fixture;
    use crate::metrics::BetaGrid;

    #[test]
    fn log_derivative_matches_finite_difference() {
        let bm = load_fixture("fig4b_xor_trained").unwrap();
        let table = EnergyTable::build(&bm).unwrap();
        let g = table.ground_indices()[0] as usize;
        let ln_p = |b: f64| table.probabilities(b)[g].ln();
        for beta in [0.3, 1.0, 4.0] {
            let h = 1e-4;
            let fd = (ln_p(beta + h) - ln_p(beta - h)) / (2.0 * h);
            let exact = ground_state_log_derivative(&bm, beta).unwrap();
            assert!(exact >= 0.0);
            assert!((fd - exact).abs() <= 1e-4 * exact.abs().max(1e-8), "{fd} vs {exact}");
        }
    }

    #[test]
    fn flat_machine_is_non_strict_pass() {
        let bm = BoltzmannMachine::complete(3, 0, 0, Basis::ZeroOne);
        let c = check_machine(&bm, BetaGrid::default().values()).unwrap();
        assert!(c.all_ground && c.passed());
        assert_eq!(c.beta_c, None);
    }

    #[test]
    fn xor_ground_fixture_passes() {
        let bm = load_fixture("fig4a_xor_ground").unwrap();
        let c = check_machine(&bm, BetaGrid::default().values()).unwrap();
        assert!(c.passed(), "{c:?}");
        assert!(c.beta_c.unwrap() > 0.0);
    }

    #[test]
    fn small_ensemble() {
        let (report, machines) = verify_ensemble(20, 6, 7, BetaGrid::default().values(), true).unwrap();
        assert_eq!(machines.len(), 21);
        assert_eq!(report.failed, 0, "{:?}", report.counterexamples);
        assert_eq!(report.non_strict, 1);
        let (empty, _) = verify_ensemble(0, 6, 7, BetaGrid::default().values(), false).unwrap();
        assert_eq!(empty.machines, 0);
    }
}
