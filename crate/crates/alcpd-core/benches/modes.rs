// SPDX-License-Identifier: MIT OR Apache-2.0

//! Parallel vs sequential throughput on the pipeline's data-parallel stages.
//!
//! Each benchmark id carries the compile-time execution mode, so comparing
//! builds is two runs:
//!
//!   cargo bench -p alcpd-core
//!   cargo bench -p alcpd-core --no-default-features
//!
//! The first exercises the rayon path, the second the sequential fallback;
//! criterion stores both under distinct ids for side-by-side reading.

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};

use alcpd_core::active::{run_al_loop, AlConfig};
use alcpd_core::benchgen::{BasicPattern, PatternKind, PatternSpec};
use alcpd_core::dgp::{DgpModel, ModelConfig};
use alcpd_core::exec;
use alcpd_core::numerics::rng::RngStream;
use alcpd_core::oracle::SyntheticOracle;
use alcpd_core::spectral::{scdm_profile, spectral_uncertainty, WindowKind};

fn mode() -> &'static str {
    if exec::parallel_enabled() {
        "parallel"
    } else {
        "sequential"
    }
}

fn bench_profiles(c: &mut Criterion) {
    // A long mean path and many candidates: the per-candidate loop is the
    // data-parallel hot spot of every acquisition step.
    let n = 2000;
    let path: Vec<f64> = (0..n)
        .map(|t| {
            let t = t as f64;
            (t * 0.05).sin() + if t > 1000.0 { 1.0 } else { 0.0 }
        })
        .collect();
    let candidates: Vec<usize> = (0..n).collect();
    c.bench_function(&format!("scdm_profile/{}", mode()), |b| {
        b.iter(|| scdm_profile(&path, &candidates, 15, WindowKind::Hann).unwrap())
    });

    let mut rng = RngStream::new(7);
    let paths: Vec<Vec<f64>> = (0..50)
        .map(|_| path.iter().map(|v| v + 0.05 * rng.standard_normal()).collect())
        .collect();
    c.bench_function(&format!("spectral_uncertainty/{}", mode()), |b| {
        b.iter(|| spectral_uncertainty(&paths, &candidates, 15, WindowKind::Hann).unwrap())
    });
}

fn bench_path_sampling(c: &mut Criterion) {
    let xs: Vec<f64> = (0..30).map(|i| i as f64).collect();
    let ys: Vec<f64> = xs.iter().map(|&x| (0.3 * x).sin()).collect();
    let model = DgpModel::init((0.0, 29.0), &xs, &ys, &ModelConfig::default()).unwrap();
    let grid: Vec<f64> = (0..300).map(|i| i as f64 * 29.0 / 299.0).collect();
    c.bench_function(&format!("sample_paths_100/{}", mode()), |b| {
        b.iter_batched(
            || RngStream::new(3),
            |mut rng| model.sample_paths(&grid, 100, &mut rng).unwrap(),
            BatchSize::SmallInput,
        )
    });
}

fn bench_replications(c: &mut Criterion) {
    // Whole-loop replications across seeds, the outermost parallel axis of
    // the benchmark harness.
    let mut cfg = AlConfig::simulation_defaults(0);
    cfg.initial_train.steps = 40;
    cfg.warm_train.steps = 15;
    cfg.iterations = 2;
    cfg.uncertainty_paths = 10;
    cfg.predict_paths = 20;
    c.bench_function(&format!("al_replications_x4/{}", mode()), |b| {
        b.iter(|| {
            exec::map_indexed(4, |rep| {
                let spec =
                    PatternSpec::new(PatternKind::Basic(BasicPattern::Shift), 100 + rep as u64);
                let mut oracle = SyntheticOracle::new(&spec, 50).unwrap();
                let mut cfg_rep = cfg.clone();
                cfg_rep.seed = rep as u64;
                run_al_loop(&mut oracle, &cfg_rep).unwrap().dataset.len()
            })
        })
    });
}

fn config() -> Criterion {
    Criterion::default().sample_size(10)
}

criterion_group! {
    name = benches;
    config = config();
    targets = bench_profiles, bench_path_sampling, bench_replications
}
criterion_main!(benches);
