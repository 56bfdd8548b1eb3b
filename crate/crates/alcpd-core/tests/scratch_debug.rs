use alcpd_core::active::{run_al_loop, AlConfig};
use alcpd_core::benchgen::{generate, BasicPattern, PatternKind, PatternSpec};
use alcpd_core::dgp::{DgpModel, ModelConfig, TrainConfig};
use alcpd_core::numerics::kernel::KernelKind;
use alcpd_core::numerics::rng::RngStream;
use alcpd_core::oracle::SyntheticOracle;
use alcpd_core::spectral::{scdm_profile, WindowKind};

#[test]
fn probe_tp_fit() {
    let spec = PatternSpec::new(PatternKind::Basic(BasicPattern::Trend), 1000);
    let (series, _) = generate(&spec).unwrap();
    // Initial design: 10 evenly spaced points.
    let xs: Vec<f64> = (0..10).map(|i| (i as f64 / 9.0 * 99.0).round()).collect();
    let ys: Vec<f64> = xs.iter().map(|&x| series.dim(0)[x as usize]).collect();
    println!("xs: {xs:?}");
    println!("ys: {ys:?}");
    let cfg = ModelConfig { depth: 2, kernel: KernelKind::Matern52, max_inducing: 20 };
    let mut model = DgpModel::init((0.0, 99.0), &xs, &ys, &cfg).unwrap();
    let trace = model
        .train(&xs, &ys, &TrainConfig::new(0.1, 500, 42))
        .unwrap();
    println!("elbo: start {:.2} end {:.2}", trace[0], trace[trace.len() - 1]);
    println!("noise: {}", model.noise_variance);
    for (l, layer) in model.layers.iter().enumerate() {
        println!("layer {l}: var {:.3} ls {:.3}", layer.kernel.variance, layer.kernel.lengthscale);
    }
    let grid: Vec<f64> = (0..100).map(|i| i as f64).collect();
    let mean = model.predict_mean(&grid, 100, &mut RngStream::new(5)).unwrap();
    for t in (0..100).step_by(5) {
        println!("t={t:3} truth={:+8.3} mean={:+8.3}", series.dim(0)[t], mean[t]);
    }
    let candidates: Vec<usize> = (0..100).collect();
    let prof = scdm_profile(&mean, &candidates, 15, WindowKind::Hann).unwrap();
    let mut idx: Vec<usize> = (0..100).collect();
    idx.sort_by(|&a, &b| prof.values[b].partial_cmp(&prof.values[a]).unwrap());
    println!("top-5 scdm at: {:?}", &idx[..5]);
    println!(
        "scdm around cp: {:?}",
        (45..56).map(|i| (i, prof.values[i])).collect::<Vec<_>>()
    );
}

#[test]
fn probe_sp_selection() {
    let spec = PatternSpec::new(PatternKind::Basic(BasicPattern::Shift), 1000);
    let mut oracle = SyntheticOracle::new(&spec, 200).unwrap();
    let mut cfg = AlConfig::simulation_defaults(0);
    cfg.beta = 0.75;
    cfg.model.kernel = KernelKind::Matern52;
    let state = run_al_loop(&mut oracle, &cfg).unwrap();
    for (i, rec) in state.history.iter().enumerate() {
        let arg = rec
            .profile
            .scdm
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        println!(
            "iter {i}: selected {:?} scdm_argmax {} elbo {:.1}",
            rec.selected, rec.profile.candidates[arg], rec.elbo
        );
    }
    let fp = &state.final_profile;
    let mut idx: Vec<usize> = (0..fp.candidates.len()).collect();
    idx.sort_by(|&a, &b| fp.scdm[b].partial_cmp(&fp.scdm[a]).unwrap());
    println!("final top-5 scdm at: {:?}", idx[..5].iter().map(|&i| fp.candidates[i]).collect::<Vec<_>>());
}
