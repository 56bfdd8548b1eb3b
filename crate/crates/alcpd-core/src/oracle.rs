// SPDX-License-Identifier: MIT OR Apache-2.0

//! The costly sampling process behind the active-learning loop: a budgeted
//! query interface answered either by a synthetic pattern generator or by a
//! recorded dataset.

use crate::benchgen::{generate, PatternSpec};
use crate::data::TimeSeriesDataset;
use crate::error::{Error, Result};

/// Budgeted point-query interface over a fixed candidate grid.
pub trait Oracle {
    /// Observes the (possibly multi-dimensional) response at the candidate
    /// location nearest to `x` (ties toward the smaller location). Spends one
    /// unit of budget.
    fn query(&mut self, x: f64) -> Result<(f64, Vec<f64>)>;

    /// Remaining query budget.
    fn remaining_budget(&self) -> usize;

    /// Closed input domain.
    fn domain(&self) -> (f64, f64);

    /// All queryable locations, ascending.
    fn candidates(&self) -> Vec<f64>;

    /// Output dimensionality.
    fn n_dims(&self) -> usize;

    /// Known true change locations, when the process has them.
    fn truth(&self) -> Option<Vec<f64>>;
}

fn nearest_index(grid_len: usize, x: f64) -> usize {
    // Candidates sit at 0, 1, ..., len-1; round half toward the smaller t.
    let clamped = x.clamp(0.0, (grid_len - 1) as f64);
    let floor = clamped.floor();
    let idx = if clamped - floor > 0.5 { floor as usize + 1 } else { floor as usize };
    idx.min(grid_len - 1)
}

/// Oracle backed by one synthetic pattern realization.
pub struct SyntheticOracle {
    series: TimeSeriesDataset,
    truth: Vec<f64>,
    budget: usize,
}

impl SyntheticOracle {
    /// Pre-generates the full series for `spec`; queries read from it.
    pub fn new(spec: &PatternSpec, budget: usize) -> Result<Self> {
        let (series, truth) = generate(spec)?;
        Ok(SyntheticOracle { series, truth, budget })
    }

    pub fn series(&self) -> &TimeSeriesDataset {
        &self.series
    }
}

impl Oracle for SyntheticOracle {
    fn query(&mut self, x: f64) -> Result<(f64, Vec<f64>)> {
        if self.budget == 0 {
            return Err(Error::BudgetExhausted(format!("query at {x} denied")));
        }
        self.budget -= 1;
        let idx = nearest_index(self.series.len(), x);
        let t = self.series.timestamps()[idx];
        Ok((t, vec![self.series.dim(0)[idx]]))
    }

    fn remaining_budget(&self) -> usize {
        self.budget
    }

    fn domain(&self) -> (f64, f64) {
        (0.0, (self.series.len() - 1) as f64)
    }

    fn candidates(&self) -> Vec<f64> {
        self.series.timestamps().to_vec()
    }

    fn n_dims(&self) -> usize {
        1
    }

    fn truth(&self) -> Option<Vec<f64>> {
        Some(self.truth.clone())
    }
}

/// Oracle over a recorded dataset. Time is re-indexed to the sample index
/// 0..N-1 so the spectral grid is uniform; a query answers with the row at
/// the nearest index (the nearest recorded timestamp, ties toward smaller).
pub struct DatasetOracle {
    data: TimeSeriesDataset,
    truth: Option<Vec<f64>>,
    budget: usize,
}

impl DatasetOracle {
    pub fn new(data: TimeSeriesDataset, truth: Option<Vec<f64>>, budget: usize) -> Result<Self> {
        if data.len() < 2 {
            return Err(Error::invalid_input("dataset oracle needs at least two rows"));
        }
        Ok(DatasetOracle { data, truth, budget })
    }

    pub fn data(&self) -> &TimeSeriesDataset {
        &self.data
    }

    /// Original timestamp recorded at an index location.
    pub fn timestamp_at(&self, index: f64) -> f64 {
        self.data.timestamps()[nearest_index(self.data.len(), index)]
    }
}

impl Oracle for DatasetOracle {
    fn query(&mut self, x: f64) -> Result<(f64, Vec<f64>)> {
        if self.budget == 0 {
            return Err(Error::BudgetExhausted(format!("query at {x} denied")));
        }
        self.budget -= 1;
        let idx = nearest_index(self.data.len(), x);
        let row: Vec<f64> = (0..self.data.n_dims()).map(|d| self.data.dim(d)[idx]).collect();
        Ok((idx as f64, row))
    }

    fn remaining_budget(&self) -> usize {
        self.budget
    }

    fn domain(&self) -> (f64, f64) {
        (0.0, (self.data.len() - 1) as f64)
    }

    fn candidates(&self) -> Vec<f64> {
        (0..self.data.len()).map(|i| i as f64).collect()
    }

    fn n_dims(&self) -> usize {
        self.data.n_dims()
    }

    fn truth(&self) -> Option<Vec<f64>> {
        self.truth.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchgen::{BasicPattern, PatternKind};

    #[test]
    fn synthetic_oracle_budget_and_values() {
        let spec = PatternSpec::new(PatternKind::Basic(BasicPattern::Shift), 3);
        let mut oracle = SyntheticOracle::new(&spec, 2).unwrap();
        let full = oracle.series().dim(0).to_vec();
        let (t, y) = oracle.query(10.0).unwrap();
        assert_eq!(t, 10.0);
        assert_eq!(y[0], full[10]);
        assert_eq!(oracle.remaining_budget(), 1);
        oracle.query(20.0).unwrap();
        assert!(matches!(oracle.query(30.0), Err(Error::BudgetExhausted(_))));
    }

    #[test]
    fn nearest_rounding_ties_toward_smaller() {
        assert_eq!(nearest_index(100, 10.4), 10);
        assert_eq!(nearest_index(100, 10.5), 10);
        assert_eq!(nearest_index(100, 10.6), 11);
        assert_eq!(nearest_index(100, -5.0), 0);
        assert_eq!(nearest_index(100, 1e9), 99);
    }

    #[test]
    fn dataset_oracle_reindexes_to_sample_axis() {
        let data = TimeSeriesDataset::from_columns(
            vec![100.0, 106.0, 112.0, 118.0],
            vec![vec![1.0, 2.0, 3.0, 4.0], vec![-1.0, -2.0, -3.0, -4.0]],
        )
        .unwrap();
        let mut oracle = DatasetOracle::new(data, Some(vec![2.0]), 10).unwrap();
        assert_eq!(oracle.domain(), (0.0, 3.0));
        assert_eq!(oracle.n_dims(), 2);
        let (t, row) = oracle.query(1.2).unwrap();
        assert_eq!(t, 1.0);
        assert_eq!(row, vec![2.0, -2.0]);
        assert_eq!(oracle.timestamp_at(1.0), 106.0);
        assert_eq!(oracle.truth(), Some(vec![2.0]));
    }
}
