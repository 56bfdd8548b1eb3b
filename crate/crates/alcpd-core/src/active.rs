// SPDX-License-Identifier: MIT OR Apache-2.0

//! Acquisition function and the outer active-learning loop.
//!
//! The acquisition blends the exploitation signal (the spectral change
//! metric) with the exploration signal (Monte Carlo spectral uncertainty):
//!
//!   a(x) = beta * scdm(x) + (1 - beta) * su(x)
//!
//! with each profile min-max rescaled over the candidate set by default, so
//! beta is meaningful across patterns whose raw metric scales differ by
//! orders of magnitude. Batch selection is greedy argmax with a spacing
//! mask. Multivariate series get one surrogate per dimension; per-dimension
//! normalized profiles are averaged before the blend.

use serde::{Deserialize, Serialize};

use crate::data::{Provenance, TimeSeriesDataset};
use crate::dgp::{DgpModel, ModelConfig, TrainConfig, DEFAULT_PREDICT_PATHS, DEFAULT_UNCERTAINTY_PATHS};
use crate::error::{Error, Result};
use crate::numerics::rng::RngStream;
use crate::oracle::Oracle;
use crate::spectral::{scdm_profile, spectral_uncertainty, ProfileValues, SpectralProfile, WindowKind};

/// Explore-exploit blend configuration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Acquisition {
    /// Weight on the change metric; 1 - beta goes to the uncertainty.
    pub beta: f64,
    pub normalization: AfNormalization,
}

/// How profile values are rescaled before blending.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum AfNormalization {
    /// Min-max to [0, 1] per profile over the candidate set (constant
    /// profiles map to zero).
    MinMax,
    /// Use raw metric values, matching the blend as literally written.
    None,
}

impl Acquisition {
    pub fn new(beta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&beta) {
            return Err(Error::invalid_input(format!("beta must be in [0, 1]; got {beta}")));
        }
        Ok(Acquisition { beta, normalization: AfNormalization::MinMax })
    }
}

fn min_max_rescale(values: &[f64]) -> Vec<f64> {
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(hi - lo).is_finite() || hi - lo <= 0.0 {
        return vec![0.0; values.len()];
    }
    values.iter().map(|v| (v - lo) / (hi - lo)).collect()
}

/// Acquisition values over a profile's candidates.
pub fn acquisition_values(profile: &SpectralProfile, acq: &Acquisition) -> Result<Vec<f64>> {
    if !(0.0..=1.0).contains(&acq.beta) {
        return Err(Error::invalid_input(format!("beta must be in [0, 1]; got {}", acq.beta)));
    }
    let (scdm, su) = match acq.normalization {
        AfNormalization::MinMax => {
            (min_max_rescale(&profile.scdm), min_max_rescale(&profile.su))
        }
        AfNormalization::None => (profile.scdm.clone(), profile.su.clone()),
    };
    Ok(scdm
        .iter()
        .zip(&su)
        .map(|(c, u)| acq.beta * c + (1.0 - acq.beta) * u)
        .collect())
}

/// Greedy batch selection: repeatedly take the argmax (ties toward the
/// smallest location), then mask every candidate strictly within
/// `min_spacing` of it. Returns at most `batch_size` locations, fewer when
/// masking exhausts the pool.
pub fn select_batch(
    af: &[f64],
    candidates: &[f64],
    batch_size: usize,
    min_spacing: f64,
) -> Result<Vec<f64>> {
    if af.len() != candidates.len() {
        return Err(Error::invalid_input("acquisition values and candidates must align"));
    }
    if candidates.is_empty() {
        return Err(Error::ExhaustedCandidates("no candidate locations left".into()));
    }
    if batch_size == 0 {
        return Err(Error::invalid_input("batch size must be >= 1"));
    }
    if min_spacing < 0.0 {
        return Err(Error::invalid_input("min spacing must be nonnegative"));
    }
    let mut masked = vec![false; candidates.len()];
    let mut selected = Vec::with_capacity(batch_size);
    while selected.len() < batch_size {
        let mut best: Option<usize> = None;
        for i in 0..candidates.len() {
            if masked[i] {
                continue;
            }
            best = match best {
                None => Some(i),
                // Strict comparison keeps the smaller location on ties
                // because candidates are scanned in ascending order.
                Some(b) if af[i] > af[b] => Some(i),
                Some(b) => Some(b),
            };
        }
        let Some(idx) = best else { break };
        selected.push(candidates[idx]);
        for i in 0..candidates.len() {
            if (candidates[i] - candidates[idx]).abs() < min_spacing {
                masked[i] = true;
            }
        }
        // Spacing zero still consumes the chosen candidate itself.
        masked[idx] = true;
    }
    Ok(selected)
}

/// Outer-loop configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlConfig {
    pub init_points: usize,
    pub iterations: usize,
    pub batch_size: usize,
    pub beta: f64,
    pub normalization: AfNormalization,
    pub window_size: usize,
    pub window: WindowKind,
    /// Minimum spacing inside one selected batch; half a window by default.
    pub min_spacing: f64,
    /// Sample paths behind the spectral uncertainty estimate.
    pub uncertainty_paths: usize,
    /// Sample paths behind the predictive mean curve.
    pub predict_paths: usize,
    pub model: ModelConfig,
    /// Steps/learning rate for the initial fit.
    pub initial_train: TrainSettings,
    /// Steps/learning rate for each warm-start refit.
    pub warm_train: TrainSettings,
    pub seed: u64,
}

/// Optimizer knobs that the loop turns into full train configs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainSettings {
    pub learning_rate: f64,
    pub steps: usize,
    pub mc_samples: usize,
}

impl TrainSettings {
    fn to_config(self, seed: u64) -> TrainConfig {
        TrainConfig {
            learning_rate: self.learning_rate,
            steps: self.steps,
            mc_samples: self.mc_samples,
            seed,
            ..TrainConfig::new(self.learning_rate, self.steps, seed)
        }
    }
}

impl AlConfig {
    /// Simulation defaults: 10 uniform initial points, 10 iterations of one
    /// query, window 15, beta 0.75, learning rate 0.1.
    pub fn simulation_defaults(seed: u64) -> Self {
        AlConfig {
            init_points: 10,
            iterations: 10,
            batch_size: 1,
            beta: 0.75,
            normalization: AfNormalization::MinMax,
            window_size: 15,
            window: WindowKind::Hann,
            min_spacing: 7.5,
            uncertainty_paths: DEFAULT_UNCERTAINTY_PATHS,
            predict_paths: DEFAULT_PREDICT_PATHS,
            model: ModelConfig::default(),
            initial_train: TrainSettings { learning_rate: 0.1, steps: 500, mc_samples: 5 },
            warm_train: TrainSettings { learning_rate: 0.1, steps: 200, mc_samples: 5 },
            seed,
        }
    }

    /// Real-data defaults: 30 initial points, batches of 5, learning rate
    /// 0.01, window 10.
    pub fn real_data_defaults(seed: u64) -> Self {
        AlConfig {
            init_points: 30,
            batch_size: 5,
            window_size: 10,
            min_spacing: 5.0,
            initial_train: TrainSettings { learning_rate: 0.01, steps: 500, mc_samples: 5 },
            warm_train: TrainSettings { learning_rate: 0.01, steps: 200, mc_samples: 5 },
            ..AlConfig::simulation_defaults(seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.init_points < 2 {
            return Err(Error::invalid_input("need at least two initial points"));
        }
        if self.batch_size == 0 {
            return Err(Error::invalid_input("batch size must be >= 1"));
        }
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(Error::invalid_input(format!("beta must be in [0, 1]; got {}", self.beta)));
        }
        if self.window_size < 2 {
            return Err(Error::invalid_input("window size must be >= 2"));
        }
        if self.uncertainty_paths < 2 {
            return Err(Error::invalid_input("spectral uncertainty needs >= 2 paths"));
        }
        Ok(())
    }
}

/// One iteration's record: what the loop saw and chose.
#[derive(Clone, Debug)]
pub struct IterationRecord {
    /// Fused profile the acquisition ranked.
    pub profile: SpectralProfile,
    /// Acquisition values aligned with `profile.candidates`.
    pub af: Vec<f64>,
    /// Locations queried this iteration.
    pub selected: Vec<f64>,
    /// Post-refit ELBO estimate, averaged over dimensions.
    pub elbo: f64,
}

/// Loop output: final dataset, per-dimension surrogates, history, and the
/// post-loop profile used for detection.
pub struct AlState {
    pub dataset: TimeSeriesDataset,
    pub models: Vec<DgpModel>,
    pub history: Vec<IterationRecord>,
    pub final_profile: SpectralProfile,
    /// True when the oracle budget ran out before the requested iterations.
    pub truncated: bool,
    /// ELBO trace of the initial fit (first dimension).
    pub initial_trace: Vec<f64>,
}

/// Runs the full loop: uniform initial design, initial fit, then
/// profile -> acquisition -> batch query -> warm refit per iteration.
/// Deterministic given the config seed.
pub fn run_al_loop(oracle: &mut dyn Oracle, cfg: &AlConfig) -> Result<AlState> {
    cfg.validate()?;
    let candidates_all = oracle.candidates();
    if candidates_all.len() < cfg.init_points {
        return Err(Error::invalid_input(format!(
            "oracle offers {} candidates, fewer than {} initial points",
            candidates_all.len(),
            cfg.init_points
        )));
    }
    let n_dims = oracle.n_dims();
    let domain = oracle.domain();

    // Evenly spaced initial design over the candidate grid.
    let mut dataset = TimeSeriesDataset::new(n_dims);
    for i in 0..cfg.init_points {
        let pos = if cfg.init_points == 1 {
            0
        } else {
            (i as f64 / (cfg.init_points - 1) as f64 * (candidates_all.len() - 1) as f64).round()
                as usize
        };
        if oracle.remaining_budget() == 0 {
            return Err(Error::BudgetExhausted("budget too small for the initial design".into()));
        }
        let (t, row) = oracle.query(candidates_all[pos])?;
        dataset.push(t, &row, Provenance::Initial)?;
    }

    // One surrogate per dimension, trained in parallel where available.
    let init_results = crate::exec::map_indexed(n_dims, |d| -> Result<(DgpModel, Vec<f64>)> {
        let mut model = DgpModel::init(domain, dataset.timestamps(), dataset.dim(d), &cfg.model)?;
        let train_cfg = cfg
            .initial_train
            .to_config(RngStream::keyed(cfg.seed, &[1, d as u64]).seed());
        let (trace, _) = model.train_validated(dataset.timestamps(), dataset.dim(d), &train_cfg)?;
        Ok((model, trace))
    });
    let mut models = Vec::with_capacity(n_dims);
    let mut initial_trace = Vec::new();
    for (d, res) in init_results.into_iter().enumerate() {
        let (model, trace) = res?;
        if d == 0 {
            initial_trace = trace;
        }
        models.push(model);
    }

    let mut history = Vec::with_capacity(cfg.iterations);
    let mut truncated = false;
    for iter in 0..cfg.iterations {
        let profile = fused_profile(&models, &candidates_all, cfg, iter as u64)?;
        let af = acquisition_values(
            &profile,
            &Acquisition { beta: cfg.beta, normalization: cfg.normalization },
        )?;

        // Already-sampled locations leave the pool.
        let mut open_af = Vec::new();
        let mut open_candidates = Vec::new();
        for (i, &c) in profile.candidates.iter().enumerate() {
            if !dataset.contains_timestamp(c) {
                open_af.push(af[i]);
                open_candidates.push(c);
            }
        }
        let effective_batch = cfg.batch_size.min(oracle.remaining_budget());
        if effective_batch == 0 || open_candidates.is_empty() {
            truncated = true;
            break;
        }
        let selected =
            select_batch(&open_af, &open_candidates, effective_batch, cfg.min_spacing)?;
        for &x in &selected {
            let (t, row) = oracle.query(x)?;
            dataset.push(t, &row, Provenance::Queried)?;
        }
        if selected.len() < cfg.batch_size {
            truncated = true;
        }

        let refit = crate::exec::map_indexed(models.len(), |d| -> Result<(DgpModel, f64)> {
            let mut model = models[d].clone();
            let train_cfg = cfg
                .warm_train
                .to_config(RngStream::keyed(cfg.seed, &[2, iter as u64, d as u64]).seed());
            model.train(dataset.timestamps(), dataset.dim(d), &train_cfg)?;
            let mut eval_rng = RngStream::keyed(cfg.seed, &[3, iter as u64, d as u64]);
            let elbo =
                model.elbo(dataset.timestamps(), dataset.dim(d), &mut eval_rng, 20)?;
            Ok((model, elbo))
        });
        let mut elbo_sum = 0.0;
        for (d, res) in refit.into_iter().enumerate() {
            let (model, elbo) = res?;
            elbo_sum += elbo;
            models[d] = model;
        }
        history.push(IterationRecord {
            profile,
            af,
            selected,
            elbo: elbo_sum / models.len() as f64,
        });
        if truncated {
            break;
        }
    }

    let final_profile = fused_profile(&models, &candidates_all, cfg, cfg.iterations as u64 + 1)?;
    Ok(AlState { dataset, models, history, final_profile, truncated, initial_trace })
}

/// Per-dimension profiles, min-max normalized per dimension, then averaged.
fn fused_profile(
    models: &[DgpModel],
    grid: &[f64],
    cfg: &AlConfig,
    stage: u64,
) -> Result<SpectralProfile> {
    let grid_indices: Vec<usize> = (0..grid.len()).collect();
    let n = grid.len();
    let mut scdm_acc = vec![0.0; n];
    let mut su_acc = vec![0.0; n];
    let mut interior = vec![true; n];
    for (d, model) in models.iter().enumerate() {
        let mut mean_rng = RngStream::keyed(cfg.seed, &[10, stage, d as u64]);
        let mean_path = model.predict_mean(grid, cfg.predict_paths, &mut mean_rng)?;
        let mut path_rng = RngStream::keyed(cfg.seed, &[11, stage, d as u64]);
        let paths = model.sample_paths(grid, cfg.uncertainty_paths, &mut path_rng)?;

        let scdm = scdm_profile(&mean_path, &grid_indices, cfg.window_size, cfg.window)?;
        let su = spectral_uncertainty(&paths, &grid_indices, cfg.window_size, cfg.window)?;
        accumulate_normalized(&mut scdm_acc, &scdm);
        accumulate_normalized(&mut su_acc, &su);
        for (flag, (a, b)) in interior.iter_mut().zip(scdm.interior.iter().zip(&su.interior)) {
            *flag = *flag && *a && *b;
        }
    }
    let scale = 1.0 / models.len() as f64;
    for v in scdm_acc.iter_mut().chain(su_acc.iter_mut()) {
        *v *= scale;
    }
    SpectralProfile::new(
        grid.to_vec(),
        ProfileValues { values: scdm_acc, interior: interior.clone() },
        ProfileValues { values: su_acc, interior },
    )
}

fn accumulate_normalized(acc: &mut [f64], profile: &ProfileValues) {
    for (a, v) in acc.iter_mut().zip(min_max_rescale(&profile.values)) {
        *a += v;
    }
}
