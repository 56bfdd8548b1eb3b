use std::time::Instant;

use alcpd_core::active::{run_al_loop, AlConfig};
use alcpd_core::benchgen::{BasicPattern, PatternKind, PatternSpec};
use alcpd_core::dacd::{dacd_baseline, DacdConfig};
use alcpd_core::detect::{detect_top_k, rmse};
use alcpd_core::exec;
use alcpd_core::numerics::kernel::KernelKind;
use alcpd_core::oracle::SyntheticOracle;

fn one_rep(kind: PatternKind, beta: f64, rep: u64) -> (f64, usize) {
    let spec = PatternSpec::new(kind, 1000 + rep);
    let mut oracle = SyntheticOracle::new(&spec, 200).unwrap();
    let mut cfg = AlConfig::simulation_defaults(rep);
    cfg.beta = beta;
    cfg.model.kernel = KernelKind::Matern52;
    let state = run_al_loop(&mut oracle, &cfg).unwrap();
    let det = detect_top_k(
        &state.final_profile.candidates,
        &state.final_profile.scdm,
        1,
        10.0,
    )
    .unwrap();
    let err = rmse(&det.locations, &[50.0]).unwrap();
    let close = state
        .history
        .iter()
        .flat_map(|h| h.selected.iter())
        .filter(|&&x| (40.0..=60.0).contains(&x))
        .count();
    (err, close)
}

#[test]
fn probe_sp_pattern() {
    let t0 = Instant::now();
    let results = exec::map_indexed(10, |rep| one_rep(PatternKind::Basic(BasicPattern::Shift), 0.75, rep as u64));
    let errs: Vec<f64> = results.iter().map(|r| r.0).collect();
    let close: usize = results.iter().map(|r| r.1).sum();
    let mean = errs.iter().sum::<f64>() / errs.len() as f64;
    println!("SP beta=0.75 RMSEs: {errs:?}");
    println!("SP mean RMSE = {mean}, selected within +-10 of cp: {close}/100");
    println!("elapsed: {:?}", t0.elapsed());
}

#[test]
fn probe_tp_pattern() {
    let t0 = Instant::now();
    let results = exec::map_indexed(10, |rep| one_rep(PatternKind::Basic(BasicPattern::Trend), 0.5, rep as u64));
    let errs: Vec<f64> = results.iter().map(|r| r.0).collect();
    let mean = errs.iter().sum::<f64>() / errs.len() as f64;
    println!("TP beta=0.5 RMSEs: {errs:?}");
    println!("TP mean RMSE = {mean}");
    println!("elapsed: {:?}", t0.elapsed());
}

#[test]
fn probe_dacd_sp() {
    let t0 = Instant::now();
    let errs = exec::map_indexed(10, |rep| {
        let spec = PatternSpec::new(PatternKind::Basic(BasicPattern::Shift), 1000 + rep as u64);
        let mut oracle = SyntheticOracle::new(&spec, 200).unwrap();
        let cfg = DacdConfig::simulation_defaults(rep as u64);
        let result = dacd_baseline(&mut oracle, &cfg).unwrap();
        rmse(&result.detected.locations, &[50.0]).unwrap()
    });
    let mean = errs.iter().sum::<f64>() / errs.len() as f64;
    println!("DACD SP RMSEs: {errs:?}");
    println!("DACD mean RMSE = {mean}");
    println!("elapsed: {:?}", t0.elapsed());
}
