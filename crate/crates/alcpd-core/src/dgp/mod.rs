// SPDX-License-Identifier: MIT OR Apache-2.0

//! Deep GP: a chain of sparse variational layers trained by maximizing the
//! doubly stochastic evidence lower bound with Adam.
//!
//! Inputs are standardized to [0, 1] and outputs z-scored internally; every
//! reported quantity is mapped back to raw units. Layer outputs feed the next
//! layer; sampling uses per-point reparameterized draws on the marginal
//! variances, with noise keyed by (path, layer, grid coordinate) so results
//! do not depend on grid ordering.

mod train;
mod whitenoise;

pub use train::{TrainConfig, DEFAULT_ADAM_BETA1, DEFAULT_ADAM_BETA2, DEFAULT_ADAM_EPS};
pub use whitenoise::{white_noise_test, WhiteNoiseTest};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::kernel::{KernelKind, KernelSpec};
use crate::numerics::linalg::LowerTriangular;
use crate::numerics::rng::RngStream;
use crate::svgp::{prepare_layer, MeanFn, PreparedLayer, SvgpLayer};
use crate::tape::Scalar;

/// Default number of Monte Carlo paths behind `predict_mean`.
pub const DEFAULT_PREDICT_PATHS: usize = 100;
/// Default number of posterior sample paths for spectral uncertainty.
pub const DEFAULT_UNCERTAINTY_PATHS: usize = 50;
/// Checkpoint schema version.
pub const CHECKPOINT_VERSION: u32 = 1;

/// Affine map raw -> (raw - shift) / scale.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub shift: f64,
    pub scale: f64,
}

impl Normalization {
    pub fn identity() -> Self {
        Normalization { shift: 0.0, scale: 1.0 }
    }

    pub fn normalize(&self, v: f64) -> f64 {
        (v - self.shift) / self.scale
    }

    pub fn denormalize(&self, v: f64) -> f64 {
        v * self.scale + self.shift
    }
}

/// Architecture choices fixed at construction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Number of stacked layers.
    pub depth: usize,
    pub kernel: KernelKind,
    /// Inducing points per layer are min(max_inducing, N at construction).
    pub max_inducing: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig { depth: 2, kernel: KernelKind::Matern52, max_inducing: 20 }
    }
}

/// Per-step ELBO estimates recorded during training.
pub type ElboTrace = Vec<f64>;

/// Stack of SVGP layers with a Gaussian likelihood.
#[derive(Clone, Debug)]
pub struct DgpModel {
    pub layers: Vec<SvgpLayer>,
    pub noise_variance: f64,
    /// Raw-unit input domain covered by the model.
    pub input_range: (f64, f64),
    pub x_norm: Normalization,
    pub y_norm: Normalization,
}

impl DgpModel {
    /// Fresh model over `domain`, with inducing points at the quantiles of
    /// the (normalized) training inputs. Inner layers get an identity prior
    /// mean, the output layer a zero mean. Output normalization is frozen
    /// here so warm starts keep parameters meaningful.
    pub fn init(
        domain: (f64, f64),
        xs_raw: &[f64],
        ys_raw: &[f64],
        cfg: &ModelConfig,
    ) -> Result<Self> {
        if cfg.depth == 0 {
            return Err(Error::invalid_input("model depth must be >= 1"));
        }
        if xs_raw.is_empty() || xs_raw.len() != ys_raw.len() {
            return Err(Error::invalid_input("init needs matching non-empty x/y"));
        }
        if !(domain.1 > domain.0) {
            return Err(Error::invalid_input(format!(
                "domain must be a non-empty interval, got [{}, {}]",
                domain.0, domain.1
            )));
        }
        let x_norm = Normalization { shift: domain.0, scale: domain.1 - domain.0 };
        let n = ys_raw.len() as f64;
        let mean = ys_raw.iter().sum::<f64>() / n;
        let var = ys_raw.iter().map(|y| (y - mean) * (y - mean)).sum::<f64>() / n;
        let scale = if var.sqrt() > 1e-12 { var.sqrt() } else { 1.0 };
        let y_norm = Normalization { shift: mean, scale };

        let xs_norm: Vec<f64> = xs_raw.iter().map(|&x| x_norm.normalize(x)).collect();
        let m = cfg.max_inducing.min(xs_raw.len()).max(1);
        let mut layers = Vec::with_capacity(cfg.depth);
        for l in 0..cfg.depth {
            let mean_fn = if l + 1 == cfg.depth { MeanFn::Zero } else { MeanFn::Identity };
            let kernel = KernelSpec::new(cfg.kernel, 1.0, 0.2)?;
            layers.push(SvgpLayer::init(kernel, &xs_norm, m, mean_fn)?);
        }
        Ok(DgpModel {
            layers,
            noise_variance: 0.1,
            input_range: domain,
            x_norm,
            y_norm,
        })
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::invalid_input("model has no layers"));
        }
        for layer in &self.layers {
            layer.validate()?;
        }
        if self.noise_variance <= 0.0 || !self.noise_variance.is_finite() {
            return Err(Error::invalid_input(format!(
                "noise variance must be finite and > 0; got {}",
                self.noise_variance
            )));
        }
        Ok(())
    }

    fn check_in_range(&self, xs: &[f64]) -> Result<()> {
        let span = self.input_range.1 - self.input_range.0;
        let slack = 1e-9 * span.max(1.0);
        for &x in xs {
            if x < self.input_range.0 - slack || x > self.input_range.1 + slack {
                return Err(Error::invalid_input(format!(
                    "input {x} outside model range [{}, {}]",
                    self.input_range.0, self.input_range.1
                )));
            }
        }
        Ok(())
    }

    /// Monte Carlo estimate of the evidence lower bound on raw-unit data:
    /// sum_i E_q[log N(y_i | f_i, s2)] - sum_l KL_l, the expectation averaged
    /// over `mc_samples` reparameterized passes. Deterministic given `rng`.
    pub fn elbo(
        &self,
        xs_raw: &[f64],
        ys_raw: &[f64],
        rng: &mut RngStream,
        mc_samples: usize,
    ) -> Result<f64> {
        self.validate()?;
        if xs_raw.is_empty() || xs_raw.len() != ys_raw.len() {
            return Err(Error::invalid_input("elbo needs matching non-empty x/y"));
        }
        if mc_samples == 0 {
            return Err(Error::invalid_input("elbo needs mc_samples >= 1"));
        }
        self.check_in_range(xs_raw)?;
        let xs: Vec<f64> = xs_raw.iter().map(|&x| self.x_norm.normalize(x)).collect();
        let ys: Vec<f64> = ys_raw.iter().map(|&y| self.y_norm.normalize(y)).collect();
        let eps = draw_epsilons(rng, mc_samples, self.layers.len(), xs.len());
        let generic: Vec<_> = self.layers.iter().map(|l| l.as_generic()).collect();
        let jitters = train::layer_jitters(&generic)?;
        elbo_generic(&generic, self.noise_variance, &xs, &ys, &eps, mc_samples, &jitters)
    }

    /// Noise-free latent sample paths over `grid` (raw units in, raw units
    /// out). Path `s` at grid point `x` uses noise keyed by
    /// (base, s, layer, bits(x)), so paths are independent of grid order and
    /// of each other.
    pub fn sample_paths(
        &self,
        grid: &[f64],
        count: usize,
        rng: &mut RngStream,
    ) -> Result<Vec<Vec<f64>>> {
        self.validate()?;
        self.check_in_range(grid)?;
        let base = rng.next_u64();
        if grid.is_empty() || count == 0 {
            return Ok(vec![Vec::new(); count]);
        }
        let generic: Vec<_> = self.layers.iter().map(|l| l.as_generic()).collect();
        let jitters = train::layer_jitters(&generic)?;
        let prepared: Vec<PreparedLayer<f64>> = generic
            .iter()
            .zip(&jitters)
            .map(|(params, &j)| prepare_layer(params, j))
            .collect::<Result<_>>()?;
        let xs_norm: Vec<f64> = grid.iter().map(|&x| self.x_norm.normalize(x)).collect();

        let paths = crate::exec::map_indexed(count, |s| {
            let mut h = xs_norm.clone();
            for (l, prep) in prepared.iter().enumerate() {
                for (i, value) in h.iter_mut().enumerate() {
                    let (mu, var) = crate::svgp::layer_marginal_generic(prep, *value);
                    let eps = RngStream::keyed(
                        base,
                        &[s as u64, l as u64, grid[i].to_bits()],
                    )
                    .standard_normal();
                    *value = mu + var.max(0.0).sqrt() * eps;
                }
            }
            h.iter().map(|&v| self.y_norm.denormalize(v)).collect::<Vec<f64>>()
        });
        Ok(paths)
    }

    /// Pipeline mean curve x(t): Monte Carlo average over `paths` sample
    /// paths. Deterministic given `rng`; invariant to grid ordering.
    pub fn predict_mean(
        &self,
        grid: &[f64],
        paths: usize,
        rng: &mut RngStream,
    ) -> Result<Vec<f64>> {
        if grid.is_empty() {
            // Still consume the base draw so call sequences stay aligned.
            let _ = rng.next_u64();
            return Ok(Vec::new());
        }
        if paths == 0 {
            return Err(Error::invalid_input("predict_mean needs paths >= 1"));
        }
        let sampled = self.sample_paths(grid, paths, rng)?;
        let mut mean = vec![0.0; grid.len()];
        for path in &sampled {
            for (acc, v) in mean.iter_mut().zip(path) {
                *acc += v;
            }
        }
        for v in &mut mean {
            *v /= paths as f64;
        }
        Ok(mean)
    }

    /// Serializes every parameter, normalization constant, and architecture
    /// detail needed to reproduce predictions bit-for-bit on one platform.
    pub fn to_checkpoint_json(&self) -> Result<String> {
        let ckpt = Checkpoint::from_model(self);
        serde_json::to_string_pretty(&ckpt)
            .map_err(|e| Error::invalid_input(format!("checkpoint encode failed: {e}")))
    }

    pub fn from_checkpoint_json(text: &str) -> Result<Self> {
        let ckpt: Checkpoint = serde_json::from_str(text)
            .map_err(|e| Error::Parse { line: 0, message: format!("checkpoint decode failed: {e}") })?;
        ckpt.into_model()
    }
}

/// Epsilons in (sample, layer, point) order; the documented draw order for
/// the ELBO estimator. Samples come in antithetic pairs (odd sample s mirrors
/// sample s-1), which cancels the leading noise term in the gradients of the
/// mean parameters and keeps the estimator unbiased.
pub(crate) fn draw_epsilons(
    rng: &mut RngStream,
    mc: usize,
    layers: usize,
    n: usize,
) -> Vec<f64> {
    let block = layers * n;
    let mut eps = vec![0.0; mc * block];
    for s in 0..mc {
        for i in 0..block {
            eps[s * block + i] = if s % 2 == 1 {
                -eps[(s - 1) * block + i]
            } else {
                rng.standard_normal()
            };
        }
    }
    eps
}

/// Shared ELBO body over either scalar type. `jitters` were chosen by a
/// plain-f64 pre-pass at the same parameter values.
pub(crate) fn elbo_generic<S: Scalar>(
    layers: &[crate::svgp::LayerParams<S>],
    noise_variance: S,
    xs_norm: &[f64],
    ys_norm: &[f64],
    eps: &[f64],
    mc: usize,
    jitters: &[f64],
) -> Result<S> {
    let n = xs_norm.len();
    let n_layers = layers.len();
    debug_assert_eq!(eps.len(), mc * n_layers * n);
    let prepared: Vec<PreparedLayer<S>> = layers
        .iter()
        .zip(jitters)
        .map(|(params, &j)| prepare_layer(params, j))
        .collect::<Result<_>>()?;

    let zero = noise_variance.lift(0.0);
    let half_ln_tau = 0.5 * std::f64::consts::TAU.ln();
    let mut expected_ll = zero;
    for s in 0..mc {
        let mut h: Vec<S> = xs_norm.iter().map(|&x| noise_variance.lift(x)).collect();
        for (l, prep) in prepared.iter().enumerate() {
            for (i, value) in h.iter_mut().enumerate() {
                let (mu, var) = crate::svgp::layer_marginal_generic(prep, *value);
                let e = eps[(s * n_layers + l) * n + i];
                *value = mu + var.clamp_min(crate::svgp::VARIANCE_FLOOR).sqrt() * e;
            }
        }
        for (value, &y) in h.iter().zip(ys_norm) {
            let resid = *value - y;
            let ll = -(resid * resid) / (noise_variance * 2.0)
                - noise_variance.ln() * 0.5
                - half_ln_tau;
            expected_ll = expected_ll + ll;
        }
    }
    let mut total = expected_ll / mc as f64;
    for prep in &prepared {
        total = total - crate::svgp::layer_kl_from_prepared(prep);
    }
    Ok(total)
}

#[derive(Serialize, Deserialize)]
struct CheckpointLayer {
    kind: KernelKind,
    variance: f64,
    lengthscale: f64,
    inducing: Vec<f64>,
    variational_mean: Vec<f64>,
    cov_factor_packed: Vec<f64>,
    mean_fn: MeanFn,
}

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    version: u32,
    layers: Vec<CheckpointLayer>,
    noise_variance: f64,
    input_range: (f64, f64),
    x_norm: Normalization,
    y_norm: Normalization,
}

impl Checkpoint {
    fn from_model(model: &DgpModel) -> Self {
        Checkpoint {
            version: CHECKPOINT_VERSION,
            layers: model
                .layers
                .iter()
                .map(|l| CheckpointLayer {
                    kind: l.kernel.kind,
                    variance: l.kernel.variance,
                    lengthscale: l.kernel.lengthscale,
                    inducing: l.inducing.clone(),
                    variational_mean: l.variational_mean.clone(),
                    cov_factor_packed: l.cov_factor.packed().to_vec(),
                    mean_fn: l.mean_fn,
                })
                .collect(),
            noise_variance: model.noise_variance,
            input_range: model.input_range,
            x_norm: model.x_norm,
            y_norm: model.y_norm,
        }
    }

    fn into_model(self) -> Result<DgpModel> {
        if self.version != CHECKPOINT_VERSION {
            return Err(Error::invalid_input(format!(
                "unsupported checkpoint version {} (expected {CHECKPOINT_VERSION})",
                self.version
            )));
        }
        let layers: Vec<SvgpLayer> = self
            .layers
            .into_iter()
            .map(|l| {
                Ok(SvgpLayer {
                    kernel: KernelSpec::new(l.kind, l.variance, l.lengthscale)?,
                    cov_factor: LowerTriangular::from_packed(
                        l.inducing.len(),
                        l.cov_factor_packed,
                    )?,
                    inducing: l.inducing,
                    variational_mean: l.variational_mean,
                    mean_fn: l.mean_fn,
                })
            })
            .collect::<Result<_>>()?;
        let model = DgpModel {
            layers,
            noise_variance: self.noise_variance,
            input_range: self.input_range,
            x_norm: self.x_norm,
            y_norm: self.y_norm,
        };
        model.validate()?;
        Ok(model)
    }
}
