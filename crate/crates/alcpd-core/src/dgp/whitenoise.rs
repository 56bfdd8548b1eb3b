// SPDX-License-Identifier: MIT OR Apache-2.0

//! Ljung-Box residual diagnostics: checks model residuals for significant
//! autocorrelation. Passing means the fit has absorbed the structure and
//! left white noise behind.

use crate::error::{Error, Result};
use crate::numerics::stats::chi_square_sf;

/// Ljung-Box test outcome.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WhiteNoiseTest {
    /// Q = n (n + 2) sum_{k=1..lags} acf_k^2 / (n - k).
    pub statistic: f64,
    /// Upper tail of chi-square with `lags` degrees of freedom.
    pub p_value: f64,
    pub lags: usize,
    /// True when p_value >= alpha (no evidence against white noise).
    pub pass: bool,
}

pub fn white_noise_test(residuals: &[f64], lags: usize, alpha: f64) -> Result<WhiteNoiseTest> {
    let n = residuals.len();
    if lags == 0 {
        return Err(Error::invalid_input("white noise test needs lags >= 1"));
    }
    if n <= lags {
        return Err(Error::invalid_input(format!(
            "white noise test needs more residuals ({n}) than lags ({lags})"
        )));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::invalid_input(format!("alpha must be in [0, 1]; got {alpha}")));
    }
    let mean = residuals.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = residuals.iter().map(|r| r - mean).collect();
    let denom: f64 = centered.iter().map(|c| c * c).sum();
    if denom <= 0.0 {
        return Err(Error::degenerate("residuals have zero variance"));
    }

    let mut q = 0.0;
    for k in 1..=lags {
        let acf: f64 = centered[k..]
            .iter()
            .zip(&centered[..n - k])
            .map(|(a, b)| a * b)
            .sum::<f64>()
            / denom;
        q += acf * acf / (n - k) as f64;
    }
    q *= n as f64 * (n as f64 + 2.0);

    let p_value = chi_square_sf(q, lags)?;
    Ok(WhiteNoiseTest { statistic: q, p_value, lags, pass: p_value >= alpha })
}
