// SPDX-License-Identifier: MIT OR Apache-2.0

//! Sparse variational GP layer.
//!
//! A layer carries M inducing inputs Z, a Gaussian variational distribution
//! N(m, S) over the inducing function values (S held as a lower-triangular
//! factor), and a prior mean function. Predictions marginalize the inducing
//! values in closed form:
//!
//!   mean(x) = m(x) + alpha(x)' (m - m(Z))
//!   cov(x, x') = k(x, x') - alpha(x)' (k(Z,Z) - S) alpha(x')
//!   alpha(x) = k(Z,Z)^{-1} k(Z, x)
//!
//! All solves go through the jittered Cholesky of k(Z,Z). The internal math
//! is generic over [`Scalar`] so the trainer can differentiate through it.

use crate::error::{Error, Result};
use crate::numerics::kernel::{kernel_eval, kernel_matrix, KernelKind, KernelSpec};
use crate::numerics::linalg::{
    backward_solve, cholesky_jitter, cholesky_packed_generic, forward_solve, LowerTriangular, Mat,
};
use crate::numerics::rng::RngStream;
use crate::tape::Scalar;

/// Relative scale for the default Cholesky jitter: `1e-6 * mean(diag)`.
pub(crate) const JITTER_FRACTION: f64 = 1e-6;

/// Floor applied to marginal variances before taking square roots while
/// sampling.
pub(crate) const VARIANCE_FLOOR: f64 = 1e-12;

/// Prior mean function of a layer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum MeanFn {
    Zero,
    /// m(x) = x; used for inner layers so an untrained stack starts as the
    /// identity warp instead of collapsing to a constant.
    Identity,
}

impl MeanFn {
    #[inline]
    pub(crate) fn eval<S: Scalar>(self, x: S) -> S {
        match self {
            MeanFn::Zero => x.lift(0.0),
            MeanFn::Identity => x,
        }
    }
}

/// One sparse variational GP layer.
#[derive(Clone, Debug)]
pub struct SvgpLayer {
    pub kernel: KernelSpec,
    /// Inducing inputs Z (length M).
    pub inducing: Vec<f64>,
    /// Variational mean of the inducing values (length M).
    pub variational_mean: Vec<f64>,
    /// Factor of the variational covariance: S = F F'.
    pub cov_factor: LowerTriangular,
    pub mean_fn: MeanFn,
}

/// Gaussian marginals (or a full covariance in diagnostic mode).
#[derive(Clone, Debug)]
pub struct GaussianPrediction {
    pub mean: Vec<f64>,
    /// Marginal variances, clamped to zero after a -1e-10 sanity check.
    pub variance: Vec<f64>,
}

impl SvgpLayer {
    /// Layer with `m` inducing points at the empirical quantiles of `inputs`,
    /// variational mean at the prior mean, and a near-deterministic initial
    /// covariance (1e-2 I).
    pub fn init(kernel: KernelSpec, inputs: &[f64], m: usize, mean_fn: MeanFn) -> Result<Self> {
        kernel.validate()?;
        if inputs.is_empty() {
            return Err(Error::invalid_input("svgp init needs at least one input"));
        }
        let m = m.min(inputs.len()).max(1);
        let mut sorted = inputs.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let inducing: Vec<f64> = (0..m)
            .map(|j| {
                let p = if m == 1 { 0.5 } else { j as f64 / (m - 1) as f64 };
                quantile_sorted(&sorted, p)
            })
            .collect();
        let variational_mean = inducing.iter().map(|&z| mean_fn.eval(z)).collect();
        Ok(SvgpLayer {
            kernel,
            inducing,
            variational_mean,
            cov_factor: LowerTriangular::scaled_identity(m, 1e-2),
            mean_fn,
        })
    }

    pub fn n_inducing(&self) -> usize {
        self.inducing.len()
    }

    pub fn validate(&self) -> Result<()> {
        self.kernel.validate()?;
        let m = self.inducing.len();
        if m == 0 {
            return Err(Error::invalid_input("layer needs at least one inducing point"));
        }
        if self.variational_mean.len() != m || self.cov_factor.dim() != m {
            return Err(Error::invalid_input("layer parameter shapes disagree"));
        }
        if self.inducing.iter().any(|z| !z.is_finite()) {
            return Err(Error::invalid_input("inducing inputs must be finite"));
        }
        Ok(())
    }

    /// Jitter scale used by this layer's k(Z,Z) factorizations.
    pub(crate) fn jitter0(&self) -> f64 {
        JITTER_FRACTION * self.kernel.variance
    }

    /// Marginal predictive distribution at `xs`.
    pub fn predict(&self, xs: &[f64]) -> Result<GaussianPrediction> {
        self.validate()?;
        if xs.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid_input("prediction inputs must be finite"));
        }
        let prepared = prepare_layer(&self.as_generic(), self.pick_jitter()?)?;
        let mut mean = Vec::with_capacity(xs.len());
        let mut variance = Vec::with_capacity(xs.len());
        for &x in xs {
            let (mu, var) = layer_marginal(&prepared, x);
            if var < -1e-10 {
                return Err(Error::numerical(format!(
                    "predictive variance {var:e} at x = {x} is below the sanity floor"
                )));
            }
            mean.push(mu);
            variance.push(var.max(0.0));
        }
        Ok(GaussianPrediction { mean, variance })
    }

    /// Full predictive covariance; diagnostic mode for single-layer use.
    pub fn predict_full(&self, xs: &[f64]) -> Result<(Vec<f64>, Mat)> {
        self.validate()?;
        let jitter = self.pick_jitter()?;
        let prepared = prepare_layer(&self.as_generic(), jitter)?;
        let n = xs.len();
        let mut mean = Vec::with_capacity(n);
        // alpha and forward-solve vectors per point.
        let mut fwd: Vec<Vec<f64>> = Vec::with_capacity(n);
        let mut fac_t_alpha: Vec<Vec<f64>> = Vec::with_capacity(n);
        for &x in xs {
            let point = prepare_point(&prepared, x);
            mean.push(point.mean);
            fwd.push(point.fwd);
            fac_t_alpha.push(point.fac_t_alpha);
        }
        let mut cov = Mat::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let prior = self.kernel.eval(xs[i], xs[j]);
                let explained: f64 = fwd[i].iter().zip(&fwd[j]).map(|(a, b)| a * b).sum();
                let s_term: f64 =
                    fac_t_alpha[i].iter().zip(&fac_t_alpha[j]).map(|(a, b)| a * b).sum();
                let v = prior - explained + s_term;
                cov[(i, j)] = v;
                cov[(j, i)] = v;
            }
        }
        Ok((mean, cov))
    }

    /// KL[ q(u) || p(u | Z) ] between N(m, S) and N(m(Z), k(Z,Z)).
    pub fn kl(&self) -> Result<f64> {
        self.validate()?;
        layer_kl_generic(&self.as_generic(), self.pick_jitter()?)
    }

    /// One reparameterized draw through the layer: mean + sqrt(var) * eps,
    /// with eps consumed from `rng` in input order.
    pub fn sample_through(&self, inputs: &[f64], rng: &mut RngStream) -> Result<Vec<f64>> {
        let pred = self.predict(inputs)?;
        Ok(pred
            .mean
            .iter()
            .zip(&pred.variance)
            .map(|(&mu, &var)| mu + var.max(0.0).sqrt() * rng.standard_normal())
            .collect())
    }

    /// Analytic single-layer ELBO under a Gaussian likelihood (the classic
    /// sparse-GP bound): sum_i E_q [log N(y_i | f_i, s2)] - KL.
    /// The Gaussian expectation is closed-form, so this serves as an
    /// independent oracle for the Monte Carlo estimator used by deep stacks.
    pub fn elbo_gaussian(&self, xs: &[f64], ys: &[f64], noise_variance: f64) -> Result<f64> {
        if xs.len() != ys.len() || xs.is_empty() {
            return Err(Error::invalid_input("elbo needs matching non-empty x/y"));
        }
        if noise_variance <= 0.0 {
            return Err(Error::invalid_input("noise variance must be > 0"));
        }
        let pred = self.predict(xs)?;
        let kl = self.kl()?;
        let mut expected_ll = 0.0;
        for i in 0..xs.len() {
            let resid = ys[i] - pred.mean[i];
            expected_ll += -0.5 * (std::f64::consts::TAU * noise_variance).ln()
                - (resid * resid + pred.variance[i]) / (2.0 * noise_variance);
        }
        Ok(expected_ll - kl)
    }

    fn pick_jitter(&self) -> Result<f64> {
        let gram = kernel_matrix(&self.kernel, &self.inducing, &self.inducing)?;
        Ok(cholesky_jitter(&gram, self.jitter0(), "k(Z,Z)")?.jitter)
    }

    pub(crate) fn as_generic(&self) -> LayerParams<f64> {
        LayerParams {
            kind: self.kernel.kind,
            variance: self.kernel.variance,
            lengthscale: self.kernel.lengthscale,
            inducing: self.inducing.clone(),
            variational_mean: self.variational_mean.clone(),
            cov_factor_packed: self.cov_factor.packed().to_vec(),
            mean_fn: self.mean_fn,
        }
    }
}

fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = p * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] * (1.0 - frac) + sorted[hi] * frac
}

/// Layer parameters generic over the scalar type; the training tape supplies
/// `Var`s here, evaluation supplies `f64`s.
#[derive(Clone)]
pub(crate) struct LayerParams<S> {
    pub kind: KernelKind,
    pub variance: S,
    pub lengthscale: S,
    pub inducing: Vec<S>,
    pub variational_mean: Vec<S>,
    /// Packed lower-triangular factor of S.
    pub cov_factor_packed: Vec<S>,
    pub mean_fn: MeanFn,
}

/// Per-layer quantities shared by every prediction point:
/// the Cholesky of k(Z,Z), B = L^{-1} F (F the covariance factor), and
/// v = k(Z,Z)^{-1} (m - m(Z)).
pub(crate) struct PreparedLayer<S> {
    pub params: LayerParams<S>,
    pub chol_packed: Vec<S>,
    pub b: Vec<S>,
    pub v: Vec<S>,
}

pub(crate) fn prepare_layer<S: Scalar>(
    params: &LayerParams<S>,
    jitter: f64,
) -> Result<PreparedLayer<S>> {
    let m = params.inducing.len();
    let mut gram = Vec::with_capacity(m * m);
    for i in 0..m {
        for j in 0..m {
            gram.push(kernel_eval(
                params.kind,
                params.variance,
                params.lengthscale,
                params.inducing[i],
                params.inducing[j],
            ));
        }
    }
    let chol_packed = cholesky_packed_generic(&gram, m, jitter, "k(Z,Z)")?;

    // B = L^{-1} F, column by column of the packed factor.
    let zero = params.variance.lift(0.0);
    let mut b = vec![zero; m * m];
    for col in 0..m {
        let mut rhs = vec![zero; m];
        for row in col..m {
            rhs[row] = params.cov_factor_packed[row * (row + 1) / 2 + col];
        }
        let solved = forward_solve(&chol_packed, m, &rhs);
        for row in 0..m {
            b[row * m + col] = solved[row];
        }
    }

    let centered: Vec<S> = params
        .variational_mean
        .iter()
        .zip(&params.inducing)
        .map(|(&mv, &z)| mv - params.mean_fn.eval(z))
        .collect();
    let v = backward_solve(&chol_packed, m, &forward_solve(&chol_packed, m, &centered));

    Ok(PreparedLayer { params: params.clone(), chol_packed, b, v })
}

pub(crate) struct PointView<S> {
    pub mean: S,
    pub fwd: Vec<S>,
    pub fac_t_alpha: Vec<S>,
}

/// Cross-kernel, forward solve, and F' alpha at one input.
pub(crate) fn prepare_point<S: Scalar>(layer: &PreparedLayer<S>, x: S) -> PointView<S> {
    let m = layer.params.inducing.len();
    let kzx: Vec<S> = layer
        .params
        .inducing
        .iter()
        .map(|&z| kernel_eval(layer.params.kind, layer.params.variance, layer.params.lengthscale, z, x))
        .collect();
    let mut mean = layer.params.mean_fn.eval(x);
    for (kz, vi) in kzx.iter().zip(&layer.v) {
        mean = mean + *kz * *vi;
    }
    let fwd = forward_solve(&layer.chol_packed, m, &kzx);
    // alpha = L^{-T} fwd; F' alpha = B' fwd avoids materializing alpha.
    let zero = x.lift(0.0);
    let mut fac_t_alpha = vec![zero; m];
    for (j, slot) in fac_t_alpha.iter_mut().enumerate() {
        let mut s = zero;
        for (i, f) in fwd.iter().enumerate() {
            s = s + layer.b[i * m + j] * *f;
        }
        *slot = s;
    }
    PointView { mean, fwd, fac_t_alpha }
}

/// Marginal mean and variance at one input.
pub(crate) fn layer_marginal_generic<S: Scalar>(layer: &PreparedLayer<S>, x: S) -> (S, S) {
    let point = prepare_point(layer, x);
    let prior = kernel_eval(
        layer.params.kind,
        layer.params.variance,
        layer.params.lengthscale,
        x,
        x,
    );
    let mut explained = x.lift(0.0);
    for f in &point.fwd {
        explained = explained + *f * *f;
    }
    let mut s_term = x.lift(0.0);
    for t in &point.fac_t_alpha {
        s_term = s_term + *t * *t;
    }
    (point.mean, prior - explained + s_term)
}

fn layer_marginal(layer: &PreparedLayer<f64>, x: f64) -> (f64, f64) {
    layer_marginal_generic(layer, x)
}

/// Closed-form Gaussian KL between q(u) = N(m, S) and the prior
/// N(m(Z), k(Z,Z)), all through the Cholesky factors.
pub(crate) fn layer_kl_from_prepared<S: Scalar>(layer: &PreparedLayer<S>) -> S {
    let m = layer.params.inducing.len();
    let zero = layer.params.variance.lift(0.0);

    let mut trace = zero;
    for bij in &layer.b {
        trace = trace + *bij * *bij;
    }

    let centered: Vec<S> = layer
        .params
        .variational_mean
        .iter()
        .zip(&layer.params.inducing)
        .map(|(&mv, &z)| mv - layer.params.mean_fn.eval(z))
        .collect();
    let white = forward_solve(&layer.chol_packed, m, &centered);
    let mut mahal = zero;
    for w in &white {
        mahal = mahal + *w * *w;
    }

    let mut log_det_prior = zero;
    let mut log_det_q = zero;
    for i in 0..m {
        log_det_prior = log_det_prior + layer.chol_packed[i * (i + 1) / 2 + i].ln() * 2.0;
        log_det_q = log_det_q + layer.params.cov_factor_packed[i * (i + 1) / 2 + i].abs().ln() * 2.0;
    }

    (trace + mahal - m as f64 + log_det_prior - log_det_q) * 0.5
}

fn layer_kl_generic(params: &LayerParams<f64>, jitter: f64) -> Result<f64> {
    let prepared = prepare_layer(params, jitter)?;
    Ok(layer_kl_from_prepared(&prepared))
}
