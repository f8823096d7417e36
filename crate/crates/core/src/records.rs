//! Estimate records and their CSV/JSON forms.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{PercolabError, Result};
use crate::graph::{Family, GraphSpec, SlabWindow};
use crate::mc::McConfig;
use crate::stats::Mean;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateRecord {
    pub quantity: String,
    pub family: Family,
    pub k: u32,
    pub d: u32,
    pub p: f64,
    pub n: Option<i64>,
    pub lambda: Option<f64>,
    pub window_lo: Option<i64>,
    pub window_hi: Option<i64>,
    pub budget: usize,
    pub height_cap: Option<u32>,
    pub lattice_bound: Option<u32>,
    pub value: f64,
    pub stderr: f64,
    pub n_samples: u64,
    pub censor_rate: f64,
    pub seed: u64,
    pub warning: Option<String>,
}

/// The fixed CSV column set.
#[derive(Serialize, Deserialize)]
struct CsvRow {
    quantity: String,
    k: u32,
    d: u32,
    family: Family,
    p: f64,
    n: Option<i64>,
    lambda: Option<f64>,
    window_lo: Option<i64>,
    window_hi: Option<i64>,
    budget: usize,
    value: f64,
    stderr: f64,
    n_samples: u64,
    censor_rate: f64,
    seed: u64,
}

impl EstimateRecord {
    pub fn new(quantity: &str, g: &GraphSpec, p: f64, cfg: &McConfig) -> Self {
        Self {
            quantity: quantity.to_string(),
            family: g.family(),
            k: g.k(),
            d: g.d(),
            p,
            n: None,
            lambda: None,
            window_lo: None,
            window_hi: None,
            budget: cfg.budget,
            height_cap: None,
            lattice_bound: cfg.lattice_bound,
            value: 0.0,
            stderr: 0.0,
            n_samples: 0,
            censor_rate: 0.0,
            seed: cfg.seed,
            warning: None,
        }
    }

    pub fn n(mut self, n: i64) -> Self {
        self.n = Some(n);
        self
    }

    pub fn lambda(mut self, lambda: f64) -> Self {
        self.lambda = Some(lambda);
        self
    }

    pub fn window(mut self, w: SlabWindow) -> Self {
        self.window_lo = Some(w.lo());
        self.window_hi = Some(w.hi());
        self
    }

    pub fn height_cap(mut self, cap: u32) -> Self {
        self.height_cap = Some(cap);
        self
    }

    pub fn estimate(mut self, m: Mean) -> Self {
        self.value = m.value;
        self.stderr = m.stderr;
        self.n_samples = m.n;
        self
    }

    /// Sets the censored fraction and warns when it exceeds the threshold.
    pub fn censoring(mut self, censored: u64, threshold: f64) -> Self {
        self.censor_rate = if self.n_samples == 0 {
            0.0
        } else {
            censored as f64 / self.n_samples as f64
        };
        if self.censor_rate > threshold {
            self.warn(format!(
                "censor rate {:.4} exceeds {threshold}; value is biased low",
                self.censor_rate
            ));
        }
        self
    }

    pub fn warn(&mut self, msg: impl Into<String>) {
        let msg = msg.into();
        self.warning = Some(match self.warning.take() {
            Some(prev) => format!("{prev}; {msg}"),
            None => msg,
        });
    }

    pub fn mean(&self) -> Mean {
        Mean {
            value: self.value,
            stderr: self.stderr,
            n: self.n_samples,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.value.is_finite() {
            return Err(PercolabError::MalformedInput(format!(
                "{}: value {} is not finite",
                self.quantity, self.value
            )));
        }
        if !(self.stderr >= 0.0) {
            return Err(PercolabError::MalformedInput(format!(
                "{}: negative or NaN stderr",
                self.quantity
            )));
        }
        if !(0.0..=1.0).contains(&self.censor_rate) {
            return Err(PercolabError::MalformedInput(format!(
                "{}: censor rate outside [0, 1]",
                self.quantity
            )));
        }
        Ok(())
    }

    fn csv_row(&self) -> CsvRow {
        CsvRow {
            quantity: self.quantity.clone(),
            k: self.k,
            d: self.d,
            family: self.family,
            p: self.p,
            n: self.n,
            lambda: self.lambda,
            window_lo: self.window_lo,
            window_hi: self.window_hi,
            budget: self.budget,
            value: self.value,
            stderr: self.stderr,
            n_samples: self.n_samples,
            censor_rate: self.censor_rate,
            seed: self.seed,
        }
    }
}

/// One record per depth `n`, depths strictly increasing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesRecord {
    pub quantity: String,
    pub records: Vec<EstimateRecord>,
}

impl SeriesRecord {
    pub fn new(quantity: &str, records: Vec<EstimateRecord>) -> Result<Self> {
        let s = Self {
            quantity: quantity.to_string(),
            records,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let mut last: Option<i64> = None;
        for r in &self.records {
            r.validate()?;
            let n = r.n.ok_or_else(|| {
                PercolabError::MalformedInput(format!("{}: series entry without n", self.quantity))
            })?;
            if last.is_some_and(|l| n <= l) {
                return Err(PercolabError::MalformedInput(format!(
                    "{}: series indices must increase strictly",
                    self.quantity
                )));
            }
            last = Some(n);
        }
        Ok(())
    }

    pub fn at(&self, n: i64) -> Option<&EstimateRecord> {
        self.records.iter().find(|r| r.n == Some(n))
    }
}

pub fn write_csv<W: Write>(out: W, records: &[EstimateRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r.csv_row()).map_err(io_err)?;
    }
    w.flush().map_err(|e| PercolabError::MalformedInput(e.to_string()))
}

pub fn write_json<W: Write>(mut out: W, records: &[EstimateRecord]) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, records)
        .map_err(|e| PercolabError::MalformedInput(e.to_string()))?;
    writeln!(out).map_err(|e| PercolabError::MalformedInput(e.to_string()))
}

/// Reads CSV rows back; JSON-only fields come back empty.
pub fn read_csv<R: Read>(input: R) -> Result<Vec<EstimateRecord>> {
    let mut rd = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for row in rd.deserialize::<CsvRow>() {
        let r = row.map_err(io_err)?;
        out.push(EstimateRecord {
            quantity: r.quantity,
            family: r.family,
            k: r.k,
            d: r.d,
            p: r.p,
            n: r.n,
            lambda: r.lambda,
            window_lo: r.window_lo,
            window_hi: r.window_hi,
            budget: r.budget,
            height_cap: None,
            lattice_bound: None,
            value: r.value,
            stderr: r.stderr,
            n_samples: r.n_samples,
            censor_rate: r.censor_rate,
            seed: r.seed,
            warning: None,
        });
    }
    Ok(out)
}

pub fn read_json<R: Read>(input: R) -> Result<Vec<EstimateRecord>> {
    serde_json::from_reader(input).map_err(|e| PercolabError::MalformedInput(e.to_string()))
}

fn io_err(e: csv::Error) -> PercolabError {
    PercolabError::MalformedInput(e.to_string())
}
