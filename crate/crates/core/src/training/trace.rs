use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub step: usize,
    /// Loss after the step's update; `None` between recording points.
    pub loss: Option<f64>,
    /// Largest absolute parameter change of the step.
    pub delta_inf: f64,
    /// Seconds since training started.
    pub seconds: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parameters: Option<Vec<f64>>,
}

/// Append-only per-step log of a training run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingTrace {
    /// Loss of the initial machine, when recorded.
    pub initial_loss: Option<f64>,
    pub records: Vec<TraceRecord>,
    pub converged: bool,
}

impl TrainingTrace {
    pub fn push(&mut self, record: TraceRecord) {
        if let Some(last) = self.records.last() {
            assert!(record.step > last.step, "trace steps must increase");
        }
        self.records.push(record);
    }

    pub fn steps(&self) -> usize {
        self.records.len()
    }

    /// Most recent recorded loss.
    pub fn final_loss(&self) -> Option<f64> {
        self.records.iter().rev().find_map(|r| r.loss).or(self.initial_loss)
    }

    pub fn losses(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.records.iter().filter_map(|r| r.loss.map(|l| (r.step, l)))
    }

    /// CSV with columns `step,loss,delta_inf,seconds`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
        w.write_record(["step", "loss", "delta_inf", "seconds"]).map_err(io)?;
        for r in &self.records {
            w.write_record([
                r.step.to_string(),
                r.loss.map(|l| l.to_string()).unwrap_or_default(),
                r.delta_inf.to_string(),
                r.seconds.to_string(),
            ])
            .map_err(io)?;
        }
        w.flush()?;
        Ok(())
    }
}
