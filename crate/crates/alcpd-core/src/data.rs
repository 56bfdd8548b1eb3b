// SPDX-License-Identifier: MIT OR Apache-2.0

//! Ordered time-series observations with query provenance.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How an observation entered the dataset.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    /// Part of the initial design.
    Initial,
    /// Selected by the acquisition function and queried from the oracle.
    Queried,
}

/// Ordered (t, y) observations; `y` may be multi-dimensional. Columns are
/// stored per dimension, rows share the timestamp vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeSeriesDataset {
    timestamps: Vec<f64>,
    /// One vector per output dimension, each aligned with `timestamps`.
    dims: Vec<Vec<f64>>,
    provenance: Vec<Provenance>,
}

impl TimeSeriesDataset {
    pub fn new(n_dims: usize) -> Self {
        TimeSeriesDataset {
            timestamps: Vec::new(),
            dims: vec![Vec::new(); n_dims.max(1)],
            provenance: Vec::new(),
        }
    }

    pub fn from_columns(timestamps: Vec<f64>, dims: Vec<Vec<f64>>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::invalid_input("dataset needs at least one dimension"));
        }
        if dims.iter().any(|d| d.len() != timestamps.len()) {
            return Err(Error::invalid_input("dataset columns have mismatched lengths"));
        }
        let provenance = vec![Provenance::Initial; timestamps.len()];
        Ok(TimeSeriesDataset { timestamps, dims, provenance })
    }

    /// Inserts an observation keeping timestamps sorted (stable on ties).
    pub fn push(&mut self, t: f64, values: &[f64], provenance: Provenance) -> Result<()> {
        if values.len() != self.dims.len() {
            return Err(Error::invalid_input(format!(
                "observation has {} dims, dataset has {}",
                values.len(),
                self.dims.len()
            )));
        }
        if !t.is_finite() || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid_input("observation must be finite"));
        }
        let pos = self.timestamps.partition_point(|&x| x <= t);
        self.timestamps.insert(pos, t);
        for (dim, &v) in self.dims.iter_mut().zip(values) {
            dim.insert(pos, v);
        }
        self.provenance.insert(pos, provenance);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    pub fn n_dims(&self) -> usize {
        self.dims.len()
    }

    pub fn timestamps(&self) -> &[f64] {
        &self.timestamps
    }

    pub fn dim(&self, d: usize) -> &[f64] {
        &self.dims[d]
    }

    pub fn provenance(&self) -> &[Provenance] {
        &self.provenance
    }

    pub fn contains_timestamp(&self, t: f64) -> bool {
        self.timestamps.iter().any(|&x| x == t)
    }

    /// Number of observations marked as actively queried.
    pub fn queried_count(&self) -> usize {
        self.provenance.iter().filter(|p| **p == Provenance::Queried).count()
    }
}
