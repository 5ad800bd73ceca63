use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ising::{BoltzmannMachine, EnergyTable};
use crate::samplers::SampleSet;

use super::hellinger_tables;

/// Ordered inverse-temperature grid.
#[derive(Debug, Clone, PartialEq)]
pub struct BetaGrid {
    values: Vec<f64>,
}

impl BetaGrid {
    /// `n` log-spaced points from `lo` to `hi` inclusive.
    pub fn log(lo: f64, hi: f64, n: usize) -> Result<Self> {
        Self::check(lo, hi, n)?;
        if n == 1 {
            return Ok(BetaGrid { values: vec![lo] });
        }
        let (a, b) = (lo.ln(), hi.ln());
        let values = (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect();
        Ok(BetaGrid { values })
    }

    pub fn linear(lo: f64, hi: f64, n: usize) -> Result<Self> {
        Self::check(lo, hi, n)?;
        if n == 1 {
            return Ok(BetaGrid { values: vec![lo] });
        }
        let values = (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect();
        Ok(BetaGrid { values })
    }

    pub fn from_values(mut values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|b| !(b.is_finite() && *b > 0.0)) {
            return Err(Error::invalid("beta values must be positive"));
        }
        values.sort_by(|a, b| a.total_cmp(b));
        values.dedup();
        Ok(BetaGrid { values })
    }

    fn check(lo: f64, hi: f64, n: usize) -> Result<()> {
        if n == 0 {
            return Err(Error::invalid("beta grid needs at least one point"));
        }
        if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
            return Err(Error::invalid(format!("bad beta range {lo}..{hi}")));
        }
        Ok(())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

impl Default for BetaGrid {
    /// 40 log-spaced points on `[0.1, 10]`.
    fn default() -> Self {
        BetaGrid::log(0.1, 10.0, 40).expect("static grid")
    }
}

/// Parses `lo:hi:n` (log spacing), `lo:hi:n:log` or `lo:hi:n:lin`.
impl FromStr for BetaGrid {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || Error::invalid(format!("beta grid `{s}` is not lo:hi:n[:log|:lin]"));
        if !(3..=4).contains(&parts.len()) {
            return Err(bad());
        }
        let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
        let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
        let n: usize = parts[2].trim().parse().map_err(|_| bad())?;
        match parts.get(3).map(|p| p.trim()) {
            None | Some("log") => BetaGrid::log(lo, hi, n),
            Some("lin") => BetaGrid::linear(lo, hi, n),
            Some(_) => Err(bad()),
        }
    }
}

impl fmt::Display for BetaGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} points", self.values.len())
    }
}

/// Minimises a unimodal function on `[a, b]` by golden-section search.
pub fn golden_section_min(mut f: impl FnMut(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// Result of matching sampled frequencies to exact Boltzmann tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaFit {
    pub beta_star: f64,
    pub distance: f64,
    /// `(beta, hellinger distance)` at each grid point.
    pub curve: Vec<(f64, f64)>,
}

/// Inverse temperature whose exact Boltzmann distribution is closest, in
/// Hellinger distance, to the empirical distribution of `samples`.
///
/// The grid minimiser (smallest beta on ties) is refined by golden-section
/// search within its neighbouring grid cells.
pub fn fit_beta(samples: &SampleSet, bm: &BoltzmannMachine, grid: &[f64]) -> Result<BetaFit> {
    if grid.is_empty() {
        return Err(Error::invalid("empty beta grid"));
    }
    if samples.node_count() != bm.num_nodes() {
        return Err(Error::invalid("sample states do not match the machine"));
    }
    let table = EnergyTable::build(bm)?;
    let mut empirical = vec![0.0; table.energies().len()];
    for (state, f) in samples.iter_frequencies() {
        if state.basis() != bm.basis() {
            return Err(Error::invalid("sample basis does not match the machine"));
        }
        empirical[state.index() as usize] += f;
    }
    let distance = |beta: f64| hellinger_tables(&empirical, &table.probabilities(beta));

    let curve: Vec<(f64, f64)> = grid.iter().map(|&b| (b, distance(b))).collect();
    let mut best = 0;
    for (i, &(_, d)) in curve.iter().enumerate() {
        if d < curve[best].1 {
            best = i;
        }
    }
    let lo = grid[best.saturating_sub(1)];
    let hi = grid[(best + 1).min(grid.len() - 1)];
    let (mut beta_star, mut dist) = curve[best];
    if hi > lo {
        let (b, d) = golden_section_min(distance, lo, hi, 1e-6 * hi);
        if d <= dist {
            beta_star = b;
            dist = d;
        }
    }
    Ok(BetaFit { beta_star, distance: dist, curve })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        let g = BetaGrid::default();
        assert_eq!(g.values().len(), 40);
        assert!((g.values()[0] - 0.1).abs() < 1e-12);
        assert!((g.values()[39] - 10.0).abs() < 1e-9);
        let p: BetaGrid = "1:3:3:lin".parse().unwrap();
        assert_eq!(p.values(), &[1.0, 2.0, 3.0]);
        let l: BetaGrid = "1:100:3".parse().unwrap();
        assert!((l.values()[1] - 10.0).abs() < 1e-9);
        assert!("1:2".parse::<BetaGrid>().is_err());
        assert!("0:2:3".parse::<BetaGrid>().is_err());
        assert!("1:2:0".parse::<BetaGrid>().is_err());
    }

    #[test]
    fn golden_section_finds_parabola_minimum() {
        let (x, fx) = golden_section_min(|x| (x - 1.3).powi(2) + 2.0, 0.0, 4.0, 1e-9);
        assert!((x - 1.3).abs() < 1e-6);
        assert!((fx - 2.0).abs() < 1e-12);
    }
}
