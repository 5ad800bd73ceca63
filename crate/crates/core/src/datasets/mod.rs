//! Training data (weighted visible configurations) and bundled parameter fixtures.

mod fixtures;
mod io;

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

pub use fixtures::{fixture_json, load_fixture, FIXTURE_NAMES};
pub use io::{load_dataset, parse_dataset, save_dataset, write_dataset};

/// A weighted set of distinct visible configurations in the `{0,1}` basis.
///
/// `weights` is the target distribution `q`; it is positive and sums to one.
/// When `io_split = Some((m_in, m_out))` the first `m_in` bits are inputs and
/// the remaining `m_out` bits are outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    rows: Vec<Vec<i8>>,
    weights: Vec<f64>,
    io_split: Option<(usize, usize)>,
}

impl Dataset {
    /// Builds a dataset, normalising `weights` to sum to one.
    pub fn new(rows: Vec<Vec<i8>>, weights: Vec<f64>, io_split: Option<(usize, usize)>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::invalid("dataset has no rows"));
        }
        if rows.len() != weights.len() {
            return Err(Error::invalid("one weight per row required"));
        }
        let width = rows[0].len();
        if rows.iter().any(|r| r.len() != width) {
            return Err(Error::invalid("rows have different lengths"));
        }
        if rows.iter().flatten().any(|&b| b != 0 && b != 1) {
            return Err(Error::invalid("dataset rows must be 0/1 valued"));
        }
        if let Some((mi, mo)) = io_split {
            if mi + mo != width {
                return Err(Error::invalid(format!("io split {mi}+{mo} does not match row width {width}")));
            }
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(Error::invalid(format!("weight {w} is not positive")));
        }
        let mut seen = HashSet::new();
        if let Some(dup) = rows.iter().find(|r| !seen.insert(*r)) {
            return Err(Error::invalid(format!("duplicate row {dup:?}")));
        }
        let total: f64 = weights.iter().sum();
        let weights = weights.into_iter().map(|w| w / total).collect();
        Ok(Dataset { rows, weights, io_split })
    }

    pub fn uniform(rows: Vec<Vec<i8>>, io_split: Option<(usize, usize)>) -> Result<Self> {
        let w = vec![1.0; rows.len()];
        Self::new(rows, w, io_split)
    }

    pub fn rows(&self) -> &[Vec<i8>] {
        &self.rows
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn io_split(&self) -> Option<(usize, usize)> {
        self.io_split
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Number of visible bits per row.
    pub fn width(&self) -> usize {
        self.rows[0].len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[i8], f64)> {
        self.rows.iter().map(Vec::as_slice).zip(self.weights.iter().copied())
    }

    /// `(inputs, outputs)` of every row; fails without an io split.
    pub fn io_rows(&self) -> Result<Vec<(&[i8], &[i8])>> {
        let (mi, _) = self.io_split.ok_or(Error::MissingSplit)?;
        Ok(self.rows.iter().map(|r| r.split_at(mi)).collect())
    }

    pub fn with_io_split(mut self, io_split: Option<(usize, usize)>) -> Result<Self> {
        if let Some((mi, mo)) = io_split {
            if mi + mo != self.width() {
                return Err(Error::invalid("io split does not match row width"));
            }
        }
        self.io_split = io_split;
        Ok(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GateKind {
    And,
    Or,
    Xor,
}

impl GateKind {
    fn apply(self, a: bool, b: bool) -> bool {
        match self {
            GateKind::And => a && b,
            GateKind::Or => a || b,
            GateKind::Xor => a ^ b,
        }
    }
}

impl FromStr for GateKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "and" => Ok(GateKind::And),
            "or" => Ok(GateKind::Or),
            "xor" => Ok(GateKind::Xor),
            other => Err(Error::invalid(format!("unknown gate `{other}`"))),
        }
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GateKind::And => "and",
            GateKind::Or => "or",
            GateKind::Xor => "xor",
        })
    }
}

/// Truth table `(a, b, gate(a, b))`, each row with weight 1/4, split (2, 1).
pub fn logic_gate(kind: GateKind) -> Dataset {
    let rows = [(false, false), (false, true), (true, false), (true, true)]
        .iter()
        .map(|&(a, b)| vec![i8::from(a), i8::from(b), i8::from(kind.apply(a, b))])
        .collect();
    Dataset::uniform(rows, Some((2, 1))).expect("gate truth table is valid")
}

/// 2-bit adder truth table, bits `(A1, A0, B1, B0 | C2, C1, C0)`.
pub fn adder2() -> Dataset {
    let rows = (0u8..16)
        .map(|x| {
            let (a, b) = (x >> 2, x & 3);
            let c = a + b;
            let bits = [a >> 1, a & 1, b >> 1, b & 1, c >> 2, (c >> 1) & 1, c & 1];
            bits.iter().map(|&v| v as i8).collect()
        })
        .collect();
    Dataset::uniform(rows, Some((4, 3))).expect("adder truth table is valid")
}

/// The `n + 1` step patterns `0^k 1^(n-k)`, `k = n..=0`, equally weighted.
pub fn two_phase(n: usize) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::invalid("two_phase needs at least one site"));
    }
    let rows = (0..=n)
        .rev()
        .map(|k| (0..n).map(|i| i8::from(i >= k)).collect())
        .collect();
    Dataset::uniform(rows, None)
}

/// Generator lookup used by the command line: `and`, `or`, `xor`, `adder2`,
/// `two_phase` or `two_phase:<n>`.
pub fn builtin(name: &str) -> Result<Dataset> {
    match name {
        "adder2" => Ok(adder2()),
        "two_phase" => two_phase(10),
        _ => {
            if let Some(n) = name.strip_prefix("two_phase:") {
                let n = n.parse().map_err(|_| Error::invalid(format!("bad site count in `{name}`")))?;
                return two_phase(n);
            }
            name.parse::<GateKind>()
                .map(logic_gate)
                .map_err(|_| Error::invalid(format!("unknown dataset `{name}`")))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row_set(d: &Dataset) -> Vec<String> {
        d.rows().iter().map(|r| r.iter().map(|b| b.to_string()).collect()).collect()
    }

    #[test]
    fn gate_tables() {
        assert_eq!(row_set(&logic_gate(GateKind::Xor)), ["000", "011", "101", "110"]);
        assert_eq!(row_set(&logic_gate(GateKind::And)), ["000", "010", "100", "111"]);
        assert_eq!(row_set(&logic_gate(GateKind::Or)), ["000", "011", "101", "111"]);
        for kind in [GateKind::And, GateKind::Or, GateKind::Xor] {
            let d = logic_gate(kind);
            assert_eq!(d.io_split(), Some((2, 1)));
            assert!(d.weights().iter().all(|&w| w == 0.25));
        }
    }

    #[test]
    fn adder_rows_from_truth_table() {
        let d = adder2();
        assert_eq!(d.len(), 16);
        assert_eq!(d.io_split(), Some((4, 3)));
        assert_eq!(d.rows()[7], vec![0, 1, 1, 1, 1, 0, 0]);
        assert_eq!(d.rows()[15], vec![1, 1, 1, 1, 1, 1, 0]);
        for r in d.rows() {
            let num = |bits: &[i8]| bits.iter().fold(0u32, |acc, &b| acc * 2 + b as u32);
            assert_eq!(num(&r[0..2]) + num(&r[2..4]), num(&r[4..7]));
        }
    }

    #[test]
    fn two_phase_patterns() {
        let d = two_phase(10).unwrap();
        assert_eq!(d.len(), 11);
        assert!(d.rows().contains(&vec![0; 10]));
        assert!(d.rows().contains(&vec![1; 10]));
        assert!(d.rows().iter().all(|r| r.windows(2).all(|w| w[0] <= w[1])));
        assert!(d.weights().iter().all(|&w| (w - 1.0 / 11.0).abs() < 1e-15));
        let one = two_phase(1).unwrap();
        assert_eq!(one.rows(), &[vec![0], vec![1]]);
        assert_eq!(one.weights(), &[0.5, 0.5]);
        assert!(two_phase(0).is_err());
    }

    #[test]
    fn validation() {
        assert!(Dataset::uniform(vec![vec![0, 1], vec![0, 1]], None).is_err());
        assert!(Dataset::uniform(vec![vec![0, 1], vec![1]], None).is_err());
        assert!(Dataset::new(vec![vec![0]], vec![-1.0], None).is_err());
        assert!(Dataset::uniform(vec![vec![0, 2]], None).is_err());
        assert!(Dataset::uniform(vec![vec![0, 1]], Some((1, 2))).is_err());
        let d = Dataset::new(vec![vec![0], vec![1]], vec![3.0, 1.0], None).unwrap();
        assert_eq!(d.weights(), &[0.75, 0.25]);
        assert!(matches!(d.io_rows(), Err(Error::MissingSplit)));
    }

    #[test]
    fn builtin_names() {
        assert_eq!(builtin("xor").unwrap(), logic_gate(GateKind::Xor));
        assert_eq!(builtin("two_phase:3").unwrap().len(), 4);
        assert_eq!(builtin("adder2").unwrap().len(), 16);
        assert!(builtin("nand").is_err());
    }
}
