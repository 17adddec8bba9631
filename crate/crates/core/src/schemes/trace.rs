use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::Method;
use crate::error::{Error, Result};
use crate::operators::Vector;
use crate::output::fmt_float;

/// Traces of at most this dimension carry per-coordinate CSV columns.
pub const COORDINATE_COLUMNS_MAX_DIM: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub k: usize,
    /// `||x_k − T(x_k)||`
    pub residual: f64,
    /// `||x_k − x_{k−1}||`, zero at `k = 0`
    pub velocity: f64,
    pub k_times_residual: f64,
}

/// Per-iteration record of one solver run.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub method: Method,
    pub records: Vec<TraceRecord>,
    /// `x_k` for every recorded `k` under [`super::Recording::Full`].
    pub iterates: Option<Vec<Vector>>,
    /// `x_k − T(x_k)` for every recorded `k` under [`super::Recording::Full`].
    pub residual_vectors: Option<Vec<Vector>>,
    pub final_iterate: Vector,
    /// Index at which the stop rule fired.
    pub terminated_at: Option<usize>,
    /// Number of update steps performed.
    pub wall_iterations: usize,
    /// Number of operator evaluations.
    pub evaluations: usize,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn residuals(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.residual).collect()
    }

    pub fn last(&self) -> &TraceRecord {
        self.records
            .last()
            .expect("trace always holds the initial point")
    }

    pub fn residual_at(&self, k: usize) -> Option<f64> {
        self.records.get(k).map(|r| r.residual)
    }

    pub fn iterate(&self, k: usize) -> Option<&Vector> {
        self.iterates.as_ref().and_then(|xs| xs.get(k))
    }

    fn coordinate_dim(&self) -> Option<usize> {
        let dim = self.final_iterate.dim();
        (self.iterates.is_some() && dim <= COORDINATE_COLUMNS_MAX_DIM).then_some(dim)
    }

    pub fn csv_header(&self) -> Vec<String> {
        let mut header: Vec<String> = ["k", "residual", "velocity", "k_times_residual"]
            .into_iter()
            .map(String::from)
            .collect();
        if let Some(dim) = self.coordinate_dim() {
            header.extend((0..dim).map(|i| format!("x_{i}")));
        }
        header
    }

    /// Writes `k,residual,velocity,k_times_residual`, plus `x_0..x_{d−1}`
    /// coordinate columns when iterates are kept and `d ≤ 4`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(self.csv_header())?;
        let coords = self.coordinate_dim();
        for (i, r) in self.records.iter().enumerate() {
            let mut row = vec![
                r.k.to_string(),
                fmt_float(r.residual),
                fmt_float(r.velocity),
                fmt_float(r.k_times_residual),
            ];
            if coords.is_some() {
                let x = &self.iterates.as_ref().unwrap()[i];
                row.extend(x.iter().map(|c| fmt_float(*c)));
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
            .map_err(|e| Error::csv(path, e))
    }
}
