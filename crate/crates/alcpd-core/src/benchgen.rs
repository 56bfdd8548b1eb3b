// SPDX-License-Identifier: MIT OR Apache-2.0

//! Synthetic benchmark patterns: five basic single-change generators plus
//! their ten pairwise composites, all sharing one seeded Gaussian noise
//! stream r(t) so pattern kind never perturbs the noise path.
//!
//! Basic generators on t = 0..n-1 with change point cp:
//!   natural     s(t) = mu + sigma r(t)
//!   stratified  noise scale sigma'_1 before cp, sigma'_2 after
//!   cycle       + alpha_i sin(2 pi t / T_i), (alpha_1, T_1) -> (alpha_2, T_2)
//!   trend       + t s_1 before, + t s_2 after (discontinuous as printed;
//!               a continuous variant is available)
//!   systematic  + d_1 (-1)^t before, - d_2 (-1)^t after
//!   shift       + eta from cp on
//!
//! Composites add the deterministic deviations of both parts on the shared
//! noise stream; a stratified part contributes through the noise scale
//! channel instead (its deviation is identically zero).

use serde::{Deserialize, Serialize};

use crate::data::TimeSeriesDataset;
use crate::error::{Error, Result};
use crate::numerics::rng::RngStream;

/// Basic pattern families.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BasicPattern {
    Natural,
    Stratified,
    Cycle,
    Trend,
    Systematic,
    Shift,
}

impl BasicPattern {
    pub fn code(self) -> &'static str {
        match self {
            BasicPattern::Natural => "NP",
            BasicPattern::Stratified => "STP",
            BasicPattern::Cycle => "CP",
            BasicPattern::Trend => "TP",
            BasicPattern::Systematic => "SYP",
            BasicPattern::Shift => "SP",
        }
    }

    fn parse(code: &str) -> Result<Self> {
        match code.to_ascii_uppercase().as_str() {
            "NP" => Ok(BasicPattern::Natural),
            "STP" => Ok(BasicPattern::Stratified),
            "CP" => Ok(BasicPattern::Cycle),
            "TP" => Ok(BasicPattern::Trend),
            "SYP" => Ok(BasicPattern::Systematic),
            "SP" => Ok(BasicPattern::Shift),
            other => Err(Error::invalid_input(format!("unknown pattern code '{other}'"))),
        }
    }
}

/// A basic pattern or a pairwise composite.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PatternKind {
    Basic(BasicPattern),
    Composite(BasicPattern, BasicPattern),
}

impl PatternKind {
    pub fn code(self) -> String {
        match self {
            PatternKind::Basic(b) => b.code().to_string(),
            PatternKind::Composite(a, b) => format!("{}-{}", a.code(), b.code()),
        }
    }
}

impl std::str::FromStr for PatternKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.split_once('-') {
            None => Ok(PatternKind::Basic(BasicPattern::parse(s)?)),
            Some((a, b)) => {
                Ok(PatternKind::Composite(BasicPattern::parse(a)?, BasicPattern::parse(b)?))
            }
        }
    }
}

/// The fifteen benchmark rows: five changed basics plus ten composites.
pub fn benchmark_patterns() -> Vec<PatternKind> {
    use BasicPattern::*;
    let basics = [Stratified, Cycle, Trend, Systematic, Shift];
    let mut out: Vec<PatternKind> = basics.iter().map(|&b| PatternKind::Basic(b)).collect();
    for i in 0..basics.len() {
        for j in (i + 1)..basics.len() {
            out.push(PatternKind::Composite(basics[i], basics[j]));
        }
    }
    out
}

/// Full generator configuration with the benchmark defaults.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PatternSpec {
    pub kind: PatternKind,
    pub mu: f64,
    pub sigma: f64,
    /// Stratified noise scales (sigma'_1, sigma'_2).
    pub stratified_std: (f64, f64),
    /// Cycle amplitudes (alpha_1, alpha_2).
    pub cycle_amplitude: (f64, f64),
    /// Cycle periods (T_1, T_2).
    pub cycle_period: (f64, f64),
    /// Trend slopes (s_1, s_2).
    pub trend_slope: (f64, f64),
    /// Systematic departures (d_1, d_2).
    pub systematic_departure: (f64, f64),
    /// Shift magnitude eta.
    pub shift_magnitude: f64,
    pub n: usize,
    pub change_point: usize,
    pub seed: u64,
    /// When set, the post-change trend term is s_2 (t - cp) + s_1 cp instead
    /// of the discontinuous printed form t s_2.
    pub continuous_trend: bool,
}

impl PatternSpec {
    /// Benchmark defaults: parameters tied to sigma, 100 points, change at 50.
    pub fn new(kind: PatternKind, seed: u64) -> Self {
        Self::with_scale(kind, 0.0, 1.0, seed)
    }

    /// Defaults expressed relative to the given mu/sigma.
    pub fn with_scale(kind: PatternKind, mu: f64, sigma: f64, seed: u64) -> Self {
        PatternSpec {
            kind,
            mu,
            sigma,
            stratified_std: (0.3 * sigma, 0.7 * sigma),
            cycle_amplitude: (2.0 * sigma, 4.0 * sigma),
            cycle_period: (8.0, 16.0),
            trend_slope: (0.1 * sigma, 0.5 * sigma),
            systematic_departure: (1.0 * sigma, 5.0 * sigma),
            shift_magnitude: 1.0 * sigma,
            n: 100,
            change_point: 50,
            seed,
            continuous_trend: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::invalid_input("pattern length must be >= 2"));
        }
        if self.change_point == 0 || self.change_point >= self.n {
            return Err(Error::invalid_input(format!(
                "change point {} must lie strictly inside (0, {})",
                self.change_point, self.n
            )));
        }
        if self.sigma < 0.0 {
            return Err(Error::invalid_input("sigma must be nonnegative"));
        }
        if self.stratified_std.0 < 0.0 || self.stratified_std.1 < 0.0 {
            return Err(Error::invalid_input("stratified noise scales must be nonnegative"));
        }
        if self.cycle_period.0 <= 0.0 || self.cycle_period.1 <= 0.0 {
            return Err(Error::invalid_input("cycle periods must be positive"));
        }
        if let PatternKind::Composite(a, b) = self.kind {
            if a == b {
                return Err(Error::invalid_input("composite parts must differ"));
            }
            if a == BasicPattern::Natural || b == BasicPattern::Natural {
                return Err(Error::invalid_input(
                    "the natural pattern cannot be part of a composite",
                ));
            }
        }
        Ok(())
    }

    /// Deterministic deviation of one basic part from the natural baseline.
    fn deviation(&self, part: BasicPattern, t: usize) -> f64 {
        let after = t >= self.change_point;
        let tf = t as f64;
        match part {
            BasicPattern::Natural | BasicPattern::Stratified => 0.0,
            BasicPattern::Cycle => {
                let (amp, period) = if after {
                    (self.cycle_amplitude.1, self.cycle_period.1)
                } else {
                    (self.cycle_amplitude.0, self.cycle_period.0)
                };
                amp * (std::f64::consts::TAU * tf / period).sin()
            }
            BasicPattern::Trend => {
                if !after {
                    tf * self.trend_slope.0
                } else if self.continuous_trend {
                    let cp = self.change_point as f64;
                    cp * self.trend_slope.0 + (tf - cp) * self.trend_slope.1
                } else {
                    tf * self.trend_slope.1
                }
            }
            BasicPattern::Systematic => {
                let sign = if t % 2 == 0 { 1.0 } else { -1.0 };
                if after {
                    -self.systematic_departure.1 * sign
                } else {
                    self.systematic_departure.0 * sign
                }
            }
            BasicPattern::Shift => {
                if after {
                    self.shift_magnitude
                } else {
                    0.0
                }
            }
        }
    }

    fn parts(&self) -> (BasicPattern, Option<BasicPattern>) {
        match self.kind {
            PatternKind::Basic(a) => (a, None),
            PatternKind::Composite(a, b) => (a, Some(b)),
        }
    }

    /// Noise scale at t: sigma, replaced by the stratified scales when a
    /// stratified part is present.
    fn noise_scale(&self, t: usize) -> f64 {
        let (a, b) = self.parts();
        let stratified = a == BasicPattern::Stratified || b == Some(BasicPattern::Stratified);
        if stratified {
            if t < self.change_point {
                self.stratified_std.0
            } else {
                self.stratified_std.1
            }
        } else {
            self.sigma
        }
    }

    /// Value at t given the pre-drawn unit noise r(t).
    fn value_at(&self, t: usize, r: f64) -> f64 {
        let (a, b) = self.parts();
        let mut v = self.mu + self.noise_scale(t) * r + self.deviation(a, t);
        if let Some(b) = b {
            v += self.deviation(b, t);
        }
        v
    }
}

/// Generates the series and the true change location. The noise stream is
/// drawn once per t from the seed, so specs differing only in kind share
/// r(t) exactly.
pub fn generate(spec: &PatternSpec) -> Result<(TimeSeriesDataset, Vec<f64>)> {
    spec.validate()?;
    let mut rng = RngStream::new(spec.seed);
    let mut values = Vec::with_capacity(spec.n);
    for t in 0..spec.n {
        let r = rng.standard_normal();
        values.push(spec.value_at(t, r));
    }
    let timestamps: Vec<f64> = (0..spec.n).map(|t| t as f64).collect();
    let dataset = TimeSeriesDataset::from_columns(timestamps, vec![values])?;
    Ok((dataset, vec![spec.change_point as f64]))
}
