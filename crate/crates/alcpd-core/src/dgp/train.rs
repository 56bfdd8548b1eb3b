// SPDX-License-Identifier: MIT OR Apache-2.0

//! ELBO maximization with Adam over an unconstrained parameter vector.
//!
//! Positive quantities (kernel variance/lengthscale, covariance factor
//! diagonal, noise variance) live in log space; inducing inputs, variational
//! means, and factor off-diagonals are raw. Gradients come from the reverse
//! tape over exactly the same generic code the evaluator runs.

use crate::dgp::whitenoise::white_noise_test;
use crate::dgp::{draw_epsilons, elbo_generic, DgpModel, ElboTrace};
use crate::error::{Error, Result};
use crate::numerics::kernel::KernelSpec;
use crate::numerics::linalg::{cholesky_jitter, LowerTriangular, Mat};
use crate::numerics::rng::RngStream;
use crate::svgp::{LayerParams, JITTER_FRACTION};
use crate::tape::{Scalar, Tape};

pub const DEFAULT_ADAM_BETA1: f64 = 0.9;
pub const DEFAULT_ADAM_BETA2: f64 = 0.999;
pub const DEFAULT_ADAM_EPS: f64 = 1e-8;

/// Optimizer settings for one training run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub steps: usize,
    /// Monte Carlo samples per ELBO evaluation (fresh per step, shared
    /// within a step).
    pub mc_samples: usize,
    pub seed: u64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    /// Fraction of final steps whose iterates are averaged into the returned
    /// parameters. Fixed-rate Adam random-walks around the optimum under
    /// gradient noise; tail averaging removes that jitter. Zero keeps the
    /// last iterate.
    pub average_tail: f64,
}

impl TrainConfig {
    pub fn new(learning_rate: f64, steps: usize, seed: u64) -> Self {
        TrainConfig {
            learning_rate,
            steps,
            mc_samples: 5,
            seed,
            adam_beta1: DEFAULT_ADAM_BETA1,
            adam_beta2: DEFAULT_ADAM_BETA2,
            adam_eps: DEFAULT_ADAM_EPS,
            average_tail: 0.25,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0 && self.learning_rate <= 1.0) {
            return Err(Error::invalid_input(format!(
                "learning rate must be in [0, 1]; got {}",
                self.learning_rate
            )));
        }
        if self.steps == 0 {
            return Err(Error::invalid_input("training needs steps >= 1"));
        }
        if self.mc_samples == 0 {
            return Err(Error::invalid_input("training needs mc_samples >= 1"));
        }
        if !(0.0..=1.0).contains(&self.average_tail) {
            return Err(Error::invalid_input(format!(
                "average_tail must be in [0, 1]; got {}",
                self.average_tail
            )));
        }
        Ok(())
    }
}

/// Outcome of the post-fit residual diagnostics.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitDiagnostics {
    /// False when the residual test could not be run (too few points or
    /// degenerate residuals).
    pub tested: bool,
    pub passed_initially: bool,
    /// True when a failed white-noise test triggered one extra round at
    /// doubled steps.
    pub retrained: bool,
    pub final_pass: bool,
}

impl DgpModel {
    /// Unconstrained parameter vector. Layout per layer:
    /// [log variance, log lengthscale, Z (M), m (M), packed factor with log
    /// diagonal (M(M+1)/2)], followed by the global log noise variance.
    pub fn params(&self) -> Vec<f64> {
        let mut theta = Vec::new();
        for layer in &self.layers {
            theta.push(layer.kernel.variance.ln());
            theta.push(layer.kernel.lengthscale.ln());
            theta.extend_from_slice(&layer.inducing);
            theta.extend_from_slice(&layer.variational_mean);
            let m = layer.n_inducing();
            for i in 0..m {
                for j in 0..=i {
                    let v = layer.cov_factor.get(i, j);
                    theta.push(if i == j { v.ln() } else { v });
                }
            }
        }
        theta.push(self.noise_variance.ln());
        theta
    }

    /// Writes a parameter vector produced by [`DgpModel::params`] back into
    /// the model.
    pub fn set_params(&mut self, theta: &[f64]) -> Result<()> {
        let expected = self.param_count();
        if theta.len() != expected {
            return Err(Error::invalid_input(format!(
                "parameter vector has length {}, model needs {expected}",
                theta.len()
            )));
        }
        if theta.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid_input("parameter vector must be finite"));
        }
        let mut cursor = 0usize;
        for layer in &mut self.layers {
            let m = layer.n_inducing();
            layer.kernel = KernelSpec::new(
                layer.kernel.kind,
                theta[cursor].exp(),
                theta[cursor + 1].exp(),
            )?;
            cursor += 2;
            layer.inducing.copy_from_slice(&theta[cursor..cursor + m]);
            cursor += m;
            layer.variational_mean.copy_from_slice(&theta[cursor..cursor + m]);
            cursor += m;
            let tri = m * (m + 1) / 2;
            let mut packed = Vec::with_capacity(tri);
            for i in 0..m {
                for j in 0..=i {
                    let v = theta[cursor];
                    cursor += 1;
                    packed.push(if i == j { v.exp() } else { v });
                }
            }
            layer.cov_factor = LowerTriangular::from_packed(m, packed)?;
        }
        self.noise_variance = theta[cursor].exp();
        Ok(())
    }

    pub fn param_count(&self) -> usize {
        1 + self
            .layers
            .iter()
            .map(|l| {
                let m = l.n_inducing();
                2 + 2 * m + m * (m + 1) / 2
            })
            .sum::<usize>()
    }

    /// ELBO and its gradient w.r.t. the packed parameter vector, computed by
    /// a reverse sweep over the same arithmetic as [`DgpModel::elbo`].
    pub fn elbo_with_gradient(
        &self,
        xs_raw: &[f64],
        ys_raw: &[f64],
        rng: &mut RngStream,
        mc_samples: usize,
    ) -> Result<(f64, Vec<f64>)> {
        self.validate()?;
        if xs_raw.is_empty() || xs_raw.len() != ys_raw.len() {
            return Err(Error::invalid_input("elbo needs matching non-empty x/y"));
        }
        let xs: Vec<f64> = xs_raw.iter().map(|&x| self.x_norm.normalize(x)).collect();
        let ys: Vec<f64> = ys_raw.iter().map(|&y| self.y_norm.normalize(y)).collect();
        let eps = draw_epsilons(rng, mc_samples, self.layers.len(), xs.len());
        let theta = self.params();
        let tape = Tape::new();
        gradient_step(self, &theta, &xs, &ys, &eps, mc_samples, &tape)
    }

    /// Maximizes the ELBO over every parameter with Adam. Resuming from the
    /// current parameters is a warm start; architecture and normalization
    /// stay fixed.
    pub fn train(&mut self, xs_raw: &[f64], ys_raw: &[f64], cfg: &TrainConfig) -> Result<ElboTrace> {
        cfg.validate()?;
        self.validate()?;
        if xs_raw.is_empty() || xs_raw.len() != ys_raw.len() {
            return Err(Error::invalid_input("training needs matching non-empty x/y"));
        }
        self.check_in_range_public(xs_raw)?;
        let xs: Vec<f64> = xs_raw.iter().map(|&x| self.x_norm.normalize(x)).collect();
        let ys: Vec<f64> = ys_raw.iter().map(|&y| self.y_norm.normalize(y)).collect();

        let mut theta = self.params();
        let mut m1 = vec![0.0; theta.len()];
        let mut m2 = vec![0.0; theta.len()];
        let mut trace = Vec::with_capacity(cfg.steps);
        let tape = Tape::new();
        let tail_len = ((cfg.steps as f64 * cfg.average_tail).round() as usize).clamp(1, cfg.steps);
        let mut tail_sum = vec![0.0; theta.len()];

        for step in 0..cfg.steps {
            let mut step_rng = RngStream::keyed(cfg.seed, &[step as u64]);
            let eps = draw_epsilons(&mut step_rng, cfg.mc_samples, self.layers.len(), xs.len());
            tape.clear();
            let (value, grad) =
                gradient_step(self, &theta, &xs, &ys, &eps, cfg.mc_samples, &tape)
                    .map_err(|e| Error::numerical(format!("at step {step}: {e}")))?;
            if !value.is_finite() {
                return Err(Error::numerical(format!(
                    "ELBO became non-finite at step {step}"
                )));
            }
            trace.push(value);

            let t = (step + 1) as f64;
            let bc1 = 1.0 - cfg.adam_beta1.powf(t);
            let bc2 = 1.0 - cfg.adam_beta2.powf(t);
            let rate = cfg.learning_rate * schedule(step, cfg.steps);
            for i in 0..theta.len() {
                m1[i] = cfg.adam_beta1 * m1[i] + (1.0 - cfg.adam_beta1) * grad[i];
                m2[i] = cfg.adam_beta2 * m2[i] + (1.0 - cfg.adam_beta2) * grad[i] * grad[i];
                let step_size = rate * (m1[i] / bc1) / ((m2[i] / bc2).sqrt() + cfg.adam_eps);
                theta[i] += step_size;
            }
            if step + tail_len >= cfg.steps {
                for (acc, v) in tail_sum.iter_mut().zip(&theta) {
                    *acc += v;
                }
            }
        }
        let averaged: Vec<f64> = tail_sum.iter().map(|v| v / tail_len as f64).collect();
        self.set_params(&averaged)?;
        Ok(trace)
    }

    /// Trains, then validates the fit with a Ljung-Box test on the training
    /// residuals. On failure the model gets one extra round at doubled steps
    /// (never aborts), matching the advisory role of the test.
    pub fn train_validated(
        &mut self,
        xs_raw: &[f64],
        ys_raw: &[f64],
        cfg: &TrainConfig,
    ) -> Result<(ElboTrace, FitDiagnostics)> {
        let mut trace = self.train(xs_raw, ys_raw, cfg)?;
        let lags = (xs_raw.len() / 5).clamp(1, 10);
        let mut diag = FitDiagnostics {
            tested: false,
            passed_initially: true,
            retrained: false,
            final_pass: true,
        };
        if xs_raw.len() <= lags + 1 {
            return Ok((trace, diag));
        }
        match self.residual_test(xs_raw, ys_raw, cfg.seed, lags) {
            Err(_) => Ok((trace, diag)),
            Ok(first) => {
                diag.tested = true;
                diag.passed_initially = first.pass;
                diag.final_pass = first.pass;
                if !first.pass {
                    log::warn!(
                        "residual white-noise test failed (p = {:.3e}); retraining once with doubled steps",
                        first.p_value
                    );
                    diag.retrained = true;
                    let mut more = *cfg;
                    more.steps = cfg.steps * 2;
                    more.seed = cfg.seed.wrapping_add(1);
                    let extra = self.train(xs_raw, ys_raw, &more)?;
                    trace.extend(extra);
                    if let Ok(second) = self.residual_test(xs_raw, ys_raw, cfg.seed, lags) {
                        diag.final_pass = second.pass;
                    }
                }
                Ok((trace, diag))
            }
        }
    }

    fn residual_test(
        &self,
        xs_raw: &[f64],
        ys_raw: &[f64],
        seed: u64,
        lags: usize,
    ) -> Result<crate::dgp::WhiteNoiseTest> {
        let mut rng = RngStream::keyed(seed, &[u64::from_be_bytes(*b"residual")]);
        let fitted = self.predict_mean(xs_raw, crate::dgp::DEFAULT_PREDICT_PATHS, &mut rng)?;
        let residuals: Vec<f64> =
            ys_raw.iter().zip(&fitted).map(|(y, f)| y - f).collect();
        white_noise_test(&residuals, lags, 0.05)
    }

    fn check_in_range_public(&self, xs: &[f64]) -> Result<()> {
        let span = self.input_range.1 - self.input_range.0;
        let slack = 1e-9 * span.max(1.0);
        for &x in xs {
            if x < self.input_range.0 - slack || x > self.input_range.1 + slack {
                return Err(Error::invalid_input(format!(
                    "training input {x} outside model range [{}, {}]",
                    self.input_range.0, self.input_range.1
                )));
            }
        }
        Ok(())
    }
}

/// Learning-rate factor at `step`: linear warmup over the first 5% of the
/// run, then cosine decay to zero. The configured rate is the peak. Warmup
/// tames Adam's first normalized steps, decay stops the parameters from
/// diffusing under Monte Carlo gradient noise once converged.
fn schedule(step: usize, steps: usize) -> f64 {
    let warmup = (steps / 20).max(1);
    if step < warmup {
        return (step + 1) as f64 / warmup as f64;
    }
    let decay_start = steps - steps * 3 / 10;
    if step < decay_start {
        return 1.0;
    }
    let progress = (step - decay_start) as f64 / (steps - decay_start).max(1) as f64;
    0.5 * (1.0 + (std::f64::consts::PI * progress).cos())
}

/// Jitter per layer, chosen on a plain-f64 factorization so the generic pass
/// can treat it as a constant.
pub(crate) fn layer_jitters(layers: &[LayerParams<f64>]) -> Result<Vec<f64>> {
    layers
        .iter()
        .map(|params| {
            let m = params.inducing.len();
            let mut gram = Mat::zeros(m, m);
            for i in 0..m {
                for j in 0..m {
                    gram[(i, j)] = crate::numerics::kernel::kernel_eval(
                        params.kind,
                        params.variance,
                        params.lengthscale,
                        params.inducing[i],
                        params.inducing[j],
                    );
                }
            }
            let jitter0 = JITTER_FRACTION * params.variance;
            Ok(cholesky_jitter(&gram, jitter0, "k(Z,Z)")?.jitter)
        })
        .collect()
}

/// Builds layer parameters from an unconstrained vector, generic over the
/// scalar type. Must mirror [`DgpModel::params`] exactly.
fn unpack_generic<S: Scalar>(model: &DgpModel, theta: &[S]) -> (Vec<LayerParams<S>>, S) {
    let mut cursor = 0usize;
    let mut layers = Vec::with_capacity(model.layers.len());
    for layer in &model.layers {
        let m = layer.n_inducing();
        let variance = theta[cursor].exp();
        let lengthscale = theta[cursor + 1].exp();
        cursor += 2;
        let inducing = theta[cursor..cursor + m].to_vec();
        cursor += m;
        let variational_mean = theta[cursor..cursor + m].to_vec();
        cursor += m;
        let mut cov_factor_packed = Vec::with_capacity(m * (m + 1) / 2);
        for i in 0..m {
            for j in 0..=i {
                let v = theta[cursor];
                cursor += 1;
                cov_factor_packed.push(if i == j { v.exp() } else { v });
            }
        }
        layers.push(LayerParams {
            kind: layer.kernel.kind,
            variance,
            lengthscale,
            inducing,
            variational_mean,
            cov_factor_packed,
            mean_fn: layer.mean_fn,
        });
    }
    let noise = theta[cursor].exp();
    (layers, noise)
}

/// One forward + reverse pass at `theta`; returns (elbo, gradient).
fn gradient_step(
    model: &DgpModel,
    theta: &[f64],
    xs_norm: &[f64],
    ys_norm: &[f64],
    eps: &[f64],
    mc: usize,
    tape: &Tape,
) -> Result<(f64, Vec<f64>)> {
    // Jitter selection happens on values only.
    let (value_layers, _) = unpack_generic::<f64>(model, theta);
    let jitters = layer_jitters(&value_layers)?;

    let vars: Vec<_> = theta.iter().map(|&v| tape.var(v)).collect();
    let (layers, noise) = unpack_generic(model, &vars);
    let out = elbo_generic(&layers, noise, xs_norm, ys_norm, eps, mc, &jitters)?;
    let adjoints = tape.gradient(out);
    let grad: Vec<f64> = vars.iter().map(|v| adjoints[v.index()]).collect();
    Ok((out.value(), grad))
}
