use std::io::Write;

use crate::datasets::Dataset;
use crate::error::{Error, Result};
use crate::ising::{BoltzmannMachine, EnergyTable};

use super::{dkl_beta_derivatives_from_table, golden_section_min, project_table};

/// Per-beta statistics of one machine, the data behind D_KL / probability /
/// conditional-probability versus beta plots.
#[derive(Debug, Clone, PartialEq)]
pub struct BetaSweep {
    /// Labels of the tracked visible states (bit strings).
    pub state_labels: Vec<String>,
    /// Labels of the rows whose conditional `p(out | in)` is tracked.
    pub cond_labels: Vec<String>,
    pub rows: Vec<SweepRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub beta: f64,
    /// `None` when no dataset was supplied.
    pub dkl: Option<f64>,
    pub dkl_first: Option<f64>,
    pub dkl_second: Option<f64>,
    pub state_probs: Vec<f64>,
    pub cond_probs: Vec<f64>,
}

fn label(bits: &[i8]) -> String {
    bits.iter().map(|b| if *b == 1 { '1' } else { '0' }).collect()
}

fn bits_index(bits: &[i8]) -> usize {
    bits.iter().fold(0usize, |acc, &b| (acc << 1) | usize::from(b == 1))
}

/// Evaluates the machine on every grid point from a single energy table.
///
/// With a dataset the tracked states are its rows, and `D_KL` plus its first
/// two beta derivatives are reported; conditionals are added when the
/// dataset's input/output split matches the machine. Without a dataset every
/// visible configuration is tracked (up to 10 visible nodes).
pub fn sweep_beta(bm: &BoltzmannMachine, dataset: Option<&Dataset>, grid: &[f64]) -> Result<BetaSweep> {
    let m = bm.num_visible();
    if let Some(d) = dataset {
        if d.width() != m {
            return Err(Error::invalid(format!(
                "dataset rows have {} bits, machine has {m} visible nodes",
                d.width()
            )));
        }
    }
    let table = EnergyTable::build(bm)?;
    let visible: Vec<usize> = (0..m).collect();

    let tracked: Vec<Vec<i8>> = match dataset {
        Some(d) => d.rows().to_vec(),
        None if m <= 10 => (0..1usize << m)
            .map(|k| (0..m).map(|i| ((k >> (m - 1 - i)) & 1) as i8).collect())
            .collect(),
        None => Vec::new(),
    };
    let conditional_rows: Vec<Vec<i8>> = match dataset {
        Some(d) if d.io_split() == Some((bm.num_input(), bm.num_output())) && bm.num_output() > 0 => {
            d.rows().to_vec()
        }
        _ => Vec::new(),
    };
    let q: Option<Vec<(usize, f64)>> =
        dataset.map(|d| d.iter().map(|(r, w)| (bits_index(r), w)).collect());

    let out_block = 1usize << bm.num_output();
    let mut rows = Vec::with_capacity(grid.len());
    for &beta in grid {
        let marginal = project_table(&table.probabilities(beta), bm.num_nodes(), &visible);
        let dkl = q.as_ref().map(|q| {
            q.iter()
                .map(|&(k, w)| if marginal[k] > 0.0 { w * (w / marginal[k]).ln() } else { f64::INFINITY })
                .sum::<f64>()
                .max(0.0)
        });
        let (dkl_first, dkl_second) = match dataset {
            Some(d) => {
                let (a, b) = dkl_beta_derivatives_from_table(&table, bm.num_hidden(), beta, d);
                (Some(a), Some(b))
            }
            None => (None, None),
        };
        let state_probs = tracked.iter().map(|r| marginal[bits_index(r)]).collect();
        let cond_probs = conditional_rows
            .iter()
            .map(|r| {
                let k = bits_index(r);
                let start = k / out_block * out_block;
                let mass: f64 = marginal[start..start + out_block].iter().sum();
                marginal[k] / mass
            })
            .collect();
        rows.push(SweepRow { beta, dkl, dkl_first, dkl_second, state_probs, cond_probs });
    }

    Ok(BetaSweep {
        state_labels: tracked.iter().map(|r| label(r)).collect(),
        cond_labels: conditional_rows.iter().map(|r| label(r)).collect(),
        rows,
    })
}

fn table_dkl(table: &EnergyTable, visible: &[usize], q: &[(usize, f64)], beta: f64) -> f64 {
    let marginal = project_table(&table.probabilities(beta), table.node_count(), visible);
    q.iter()
        .map(|&(k, w)| if marginal[k] > 0.0 { w * (w / marginal[k]).ln() } else { f64::INFINITY })
        .sum::<f64>()
        .max(0.0)
}

/// Continuous minimiser of `D_KL(beta)`: the grid argmin (smallest beta on
/// ties) refined by golden-section search over its neighbouring grid cells.
/// Returns `(beta, dkl)`.
pub fn dkl_optimum(bm: &BoltzmannMachine, dataset: &Dataset, grid: &[f64]) -> Result<(f64, f64)> {
    if grid.is_empty() {
        return Err(Error::invalid("beta grid is empty"));
    }
    let m = bm.num_visible();
    if dataset.width() != m {
        return Err(Error::invalid(format!("dataset rows have {} bits, machine has {m} visible nodes", dataset.width())));
    }
    let table = EnergyTable::build(bm)?;
    let visible: Vec<usize> = (0..m).collect();
    let q: Vec<(usize, f64)> = dataset.iter().map(|(r, w)| (bits_index(r), w)).collect();
    let f = |b: f64| table_dkl(&table, &visible, &q, b);
    let mut best = 0;
    let mut best_val = f64::INFINITY;
    for (i, &b) in grid.iter().enumerate() {
        let v = f(b);
        if v < best_val {
            best = i;
            best_val = v;
        }
    }
    let lo = grid[best.saturating_sub(1)];
    let hi = grid[(best + 1).min(grid.len() - 1)];
    if lo == hi {
        return Ok((lo, best_val));
    }
    let (beta, val) = golden_section_min(f, lo, hi, 1e-6 * hi.max(1.0));
    Ok(if val <= best_val { (beta, val) } else { (grid[best], best_val) })
}

impl BetaSweep {
    /// Grid point with the smallest D_KL (smallest beta on ties).
    pub fn argmin_dkl(&self) -> Option<&SweepRow> {
        let mut best: Option<&SweepRow> = None;
        for row in &self.rows {
            let d = row.dkl?;
            if best.is_none_or(|b| d < b.dkl.unwrap_or(f64::INFINITY)) {
                best = Some(row);
            }
        }
        best
    }

    /// CSV with header
    /// `beta,dkl,dkl_d1,dkl_d2,p_state_<label>...,cond_prob_<label>...`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["beta".to_string(), "dkl".into(), "dkl_d1".into(), "dkl_d2".into()];
        header.extend(self.state_labels.iter().map(|l| format!("p_state_{l}")));
        header.extend(self.cond_labels.iter().map(|l| format!("cond_prob_{l}")));
        w.write_record(&header).map_err(to_io)?;
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for row in &self.rows {
            let mut rec = vec![row.beta.to_string(), opt(row.dkl), opt(row.dkl_first), opt(row.dkl_second)];
            rec.extend(row.state_probs.iter().map(f64::to_string));
            rec.extend(row.cond_probs.iter().map(f64::to_string));
            w.write_record(&rec).map_err(to_io)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn to_io(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}
