// SPDX-License-Identifier: MIT OR Apache-2.0

//! Stationary covariance functions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::linalg::Mat;
use crate::tape::Scalar;

/// Kernel family.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum KernelKind {
    Rbf,
    Matern52,
}

impl std::str::FromStr for KernelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rbf" | "squared-exponential" => Ok(KernelKind::Rbf),
            "matern" | "matern52" | "matern5/2" => Ok(KernelKind::Matern52),
            other => Err(Error::invalid_input(format!(
                "unknown kernel '{other}' (expected rbf or matern52)"
            ))),
        }
    }
}

/// Stationary kernel with signal variance and lengthscale. Both parameters
/// are strictly positive; during training they live in log space, so the
/// constraint holds by construction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub kind: KernelKind,
    pub variance: f64,
    pub lengthscale: f64,
}

impl KernelSpec {
    pub fn new(kind: KernelKind, variance: f64, lengthscale: f64) -> Result<Self> {
        let spec = KernelSpec { kind, variance, lengthscale };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.variance.is_finite() || self.variance <= 0.0 {
            return Err(Error::invalid_input(format!(
                "kernel variance must be finite and > 0; got {}",
                self.variance
            )));
        }
        if !self.lengthscale.is_finite() || self.lengthscale <= 0.0 {
            return Err(Error::invalid_input(format!(
                "kernel lengthscale must be finite and > 0; got {}",
                self.lengthscale
            )));
        }
        Ok(())
    }

    pub fn eval(&self, a: f64, b: f64) -> f64 {
        kernel_eval(self.kind, self.variance, self.lengthscale, a, b)
    }
}

/// k(a, b) for either family, generic over the scalar type so the training
/// path can differentiate through it.
pub(crate) fn kernel_eval<S: Scalar>(
    kind: KernelKind,
    variance: S,
    lengthscale: S,
    a: S,
    b: S,
) -> S {
    let d = a - b;
    match kind {
        KernelKind::Rbf => {
            let z = d / lengthscale;
            variance * (z * z * (-0.5)).exp()
        }
        KernelKind::Matern52 => {
            let r = d.abs() / lengthscale;
            let sqrt5_r = r * 5.0_f64.sqrt();
            let poly = sqrt5_r + r * r * (5.0 / 3.0) + 1.0;
            variance * poly * (-sqrt5_r).exp()
        }
    }
}

/// Cross-covariance matrix of shape |xa| x |xb|.
pub fn kernel_matrix(spec: &KernelSpec, xa: &[f64], xb: &[f64]) -> Result<Mat> {
    spec.validate()?;
    if xa.is_empty() || xb.is_empty() {
        return Err(Error::invalid_input("kernel_matrix needs non-empty inputs"));
    }
    if xa.iter().chain(xb.iter()).any(|v| !v.is_finite()) {
        return Err(Error::invalid_input("kernel_matrix inputs must be finite"));
    }
    let mut out = Mat::zeros(xa.len(), xb.len());
    for (i, &a) in xa.iter().enumerate() {
        for (j, &b) in xb.iter().enumerate() {
            out[(i, j)] = spec.eval(a, b);
        }
    }
    Ok(out)
}
