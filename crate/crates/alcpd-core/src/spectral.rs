// SPDX-License-Identifier: MIT OR Apache-2.0

//! Sliding-window magnitude spectra and the spectral change metrics.
//!
//! The change score at a candidate location x compares the magnitude spectrum
//! of the window just left of x against the window just right of x:
//!
//!   smc  — Euclidean distance between per-bin mean spectra
//!   scm  — Pearson correlation of the two spectra (shape similarity)
//!   sgd  — Euclidean distance between bin-to-bin gradients
//!   diss — sgd weighted by (1 - scm)/2, insensitive to uniform scaling
//!   scdm — smc + diss, the combined change metric
//!
//! Spectral uncertainty at x is the per-bin variance of the window spectra
//! across Monte Carlo sample paths, averaged over bins.

use crate::error::{Error, Result};
use crate::numerics::fourier::dft_magnitude;

/// Window function applied before the per-window transform.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum WindowKind {
    /// Symmetric Hann taper; the default, reduces spectral leakage.
    Hann,
    /// No taper; preserves hand-computable spectra.
    Rectangular,
}

impl std::str::FromStr for WindowKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "hann" => Ok(WindowKind::Hann),
            "rect" | "rectangular" => Ok(WindowKind::Rectangular),
            other => Err(Error::invalid_input(format!(
                "unknown window '{other}' (expected hann or rectangular)"
            ))),
        }
    }
}

impl WindowKind {
    fn taper(self, size: usize) -> Vec<f64> {
        match self {
            WindowKind::Rectangular => vec![1.0; size],
            WindowKind::Hann => (0..size)
                .map(|t| {
                    if size == 1 {
                        1.0
                    } else {
                        0.5 * (1.0
                            - (std::f64::consts::TAU * t as f64 / (size - 1) as f64).cos())
                    }
                })
                .collect(),
        }
    }
}

/// Time-frequency representation: one magnitude-spectrum row per window
/// position.
#[derive(Clone, Debug)]
pub struct Spectrogram {
    /// Window centers in grid units: offset + window_size / 2.
    pub frame_centers: Vec<f64>,
    /// One row of length window_size/2 + 1 per frame.
    pub frames: Vec<Vec<f64>>,
    pub window_size: usize,
    pub hop: usize,
    pub window: WindowKind,
}

impl Spectrogram {
    /// CSV with a `center,bin0,bin1,...` header.
    pub fn to_csv(&self) -> String {
        let bins = self.frames.first().map_or(0, Vec::len);
        let mut out = String::from("center");
        for b in 0..bins {
            out.push_str(&format!(",bin{b}"));
        }
        out.push('\n');
        for (center, frame) in self.frame_centers.iter().zip(&self.frames) {
            out.push_str(&format!("{center}"));
            for v in frame {
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Sliding-window magnitude spectra of a uniformly gridded signal.
pub fn stft(
    signal: &[f64],
    window_size: usize,
    hop: usize,
    window: WindowKind,
) -> Result<Spectrogram> {
    if window_size < 2 {
        return Err(Error::invalid_input("stft needs window_size >= 2"));
    }
    if hop == 0 {
        return Err(Error::invalid_input("stft needs hop >= 1"));
    }
    if signal.len() < window_size {
        return Err(Error::invalid_input(format!(
            "signal of length {} is shorter than the window ({window_size})",
            signal.len()
        )));
    }
    let taper = window.taper(window_size);
    let n_frames = (signal.len() - window_size) / hop + 1;
    let mut frames = Vec::with_capacity(n_frames);
    let mut frame_centers = Vec::with_capacity(n_frames);
    for f in 0..n_frames {
        let offset = f * hop;
        let windowed: Vec<f64> = signal[offset..offset + window_size]
            .iter()
            .zip(&taper)
            .map(|(s, w)| s * w)
            .collect();
        frames.push(dft_magnitude(&windowed)?);
        frame_centers.push(offset as f64 + window_size as f64 / 2.0);
    }
    Ok(Spectrogram { frame_centers, frames, window_size, hop, window })
}

/// Spectral mean change: Euclidean distance between two (mean) spectra.
pub fn smc(mean_a: &[f64], mean_b: &[f64]) -> Result<f64> {
    if mean_a.len() != mean_b.len() || mean_a.is_empty() {
        return Err(Error::invalid_input("smc needs equal-length non-empty spectra"));
    }
    Ok(mean_a
        .iter()
        .zip(mean_b)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt())
}

/// Pearson correlation across bins; the spectral correlation mapper.
pub fn scm(xa: &[f64], xb: &[f64]) -> Result<f64> {
    if xa.len() != xb.len() || xa.len() < 2 {
        return Err(Error::invalid_input("scm needs two spectra of equal length >= 2"));
    }
    let n = xa.len() as f64;
    let mean_a = xa.iter().sum::<f64>() / n;
    let mean_b = xb.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var_a = 0.0;
    let mut var_b = 0.0;
    for (a, b) in xa.iter().zip(xb) {
        let da = a - mean_a;
        let db = b - mean_b;
        cov += da * db;
        var_a += da * da;
        var_b += db * db;
    }
    if var_a == 0.0 || var_b == 0.0 {
        return Err(Error::degenerate("scm is undefined for a constant spectrum"));
    }
    Ok((cov / (var_a * var_b).sqrt()).clamp(-1.0, 1.0))
}

/// Spectral gradient distance: Euclidean distance between bin-to-bin
/// first differences.
pub fn sgd(xa: &[f64], xb: &[f64]) -> Result<f64> {
    if xa.len() != xb.len() || xa.len() < 2 {
        return Err(Error::invalid_input("sgd needs two spectra of equal length >= 2"));
    }
    let mut acc = 0.0;
    for i in 0..xa.len() - 1 {
        let ga = xa[i + 1] - xa[i];
        let gb = xb[i + 1] - xb[i];
        acc += (ga - gb) * (ga - gb);
    }
    Ok(acc.sqrt())
}

/// Correlation fallback used inside [`diss`] and [`scdm`] when a spectrum is
/// constant: two constant spectra have identical shape (1), exactly one
/// constant spectrum has no shared shape (0).
fn scm_or_fallback(xa: &[f64], xb: &[f64]) -> Result<f64> {
    match scm(xa, xb) {
        Ok(v) => Ok(v),
        Err(Error::DegenerateInput(_)) => {
            let const_a = is_constant(xa);
            let const_b = is_constant(xb);
            Ok(if const_a && const_b { 1.0 } else { 0.0 })
        }
        Err(e) => Err(e),
    }
}

fn is_constant(x: &[f64]) -> bool {
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() == 0.0
}

/// Shape-change metric: sgd weighted down when the spectra are correlated.
pub fn diss(xa: &[f64], xb: &[f64]) -> Result<f64> {
    let gradient_dist = sgd(xa, xb)?;
    let correlation = scm_or_fallback(xa, xb)?;
    Ok(gradient_dist * (1.0 - correlation) / 2.0)
}

/// Combined spectral change metric between two segments of frames: the smc
/// of the per-bin mean spectra plus their diss term.
pub fn scdm(seg_a: &[Vec<f64>], seg_b: &[Vec<f64>]) -> Result<f64> {
    let mean_a = mean_spectrum(seg_a)?;
    let mean_b = mean_spectrum(seg_b)?;
    Ok(smc(&mean_a, &mean_b)? + diss(&mean_a, &mean_b)?)
}

fn mean_spectrum(frames: &[Vec<f64>]) -> Result<Vec<f64>> {
    let first = frames
        .first()
        .ok_or_else(|| Error::invalid_input("segment needs at least one frame"))?;
    let bins = first.len();
    if frames.iter().any(|f| f.len() != bins) {
        return Err(Error::invalid_input("segment frames have mismatched bin counts"));
    }
    let mut mean = vec![0.0; bins];
    for frame in frames {
        for (m, v) in mean.iter_mut().zip(frame) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= frames.len() as f64;
    }
    Ok(mean)
}

/// Per-candidate metric values plus a flag marking candidates that had the
/// full window support (boundary candidates are reported as 0 and flagged).
#[derive(Clone, Debug, PartialEq)]
pub struct ProfileValues {
    pub values: Vec<f64>,
    pub interior: Vec<bool>,
}

/// SCDM as a function of location: the spectrum of [x - A, x) against the
/// spectrum of [x, x + A), candidates indexed into the uniform grid.
pub fn scdm_profile(
    mean_path: &[f64],
    candidates: &[usize],
    window_size: usize,
    window: WindowKind,
) -> Result<ProfileValues> {
    if window_size < 2 {
        return Err(Error::invalid_input("scdm_profile needs window_size >= 2"));
    }
    let taper = window.taper(window_size);
    let len = mean_path.len();
    let evaluated = crate::exec::map_indexed(candidates.len(), |ci| {
        let x = candidates[ci];
        if x < window_size || x + window_size > len {
            return Ok((0.0, false));
        }
        let left = windowed_spectrum(&mean_path[x - window_size..x], &taper)?;
        let right = windowed_spectrum(&mean_path[x..x + window_size], &taper)?;
        Ok((scdm(&[left], &[right])?, true))
    });
    collect_profile(evaluated)
}

/// Monte Carlo spectral uncertainty per candidate: variance of the window
/// spectrum across sample paths, averaged over frequency bins. The window is
/// centered on the candidate.
pub fn spectral_uncertainty(
    paths: &[Vec<f64>],
    candidates: &[usize],
    window_size: usize,
    window: WindowKind,
) -> Result<ProfileValues> {
    if paths.len() < 2 {
        return Err(Error::invalid_input(
            "spectral uncertainty needs at least two sample paths",
        ));
    }
    if window_size < 2 {
        return Err(Error::invalid_input("spectral_uncertainty needs window_size >= 2"));
    }
    let len = paths[0].len();
    if paths.iter().any(|p| p.len() != len) {
        return Err(Error::invalid_input("sample paths have mismatched lengths"));
    }
    let taper = window.taper(window_size);
    let half = window_size / 2;
    let n_paths = paths.len() as f64;
    let evaluated = crate::exec::map_indexed(candidates.len(), |ci| {
        let x = candidates[ci];
        if x < half || x + (window_size - half) > len {
            return Ok((0.0, false));
        }
        let start = x - half;
        let spectra: Vec<Vec<f64>> = paths
            .iter()
            .map(|p| windowed_spectrum(&p[start..start + window_size], &taper))
            .collect::<Result<_>>()?;
        let bins = spectra[0].len();
        let mut su = 0.0;
        for b in 0..bins {
            let mean = spectra.iter().map(|s| s[b]).sum::<f64>() / n_paths;
            let var = spectra
                .iter()
                .map(|s| (s[b] - mean) * (s[b] - mean))
                .sum::<f64>()
                / n_paths;
            su += var;
        }
        Ok((su / bins as f64, true))
    });
    collect_profile(evaluated)
}

fn windowed_spectrum(slice: &[f64], taper: &[f64]) -> Result<Vec<f64>> {
    let windowed: Vec<f64> = slice.iter().zip(taper).map(|(s, w)| s * w).collect();
    dft_magnitude(&windowed)
}

fn collect_profile(entries: Vec<Result<(f64, bool)>>) -> Result<ProfileValues> {
    let mut values = Vec::with_capacity(entries.len());
    let mut interior = Vec::with_capacity(entries.len());
    for entry in entries {
        let (v, ok) = entry?;
        values.push(v);
        interior.push(ok);
    }
    Ok(ProfileValues { values, interior })
}

/// Joint per-candidate profile consumed by the acquisition function.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralProfile {
    /// Candidate locations in raw input units.
    pub candidates: Vec<f64>,
    pub scdm: Vec<f64>,
    pub su: Vec<f64>,
    /// False where either metric lacked full window support.
    pub interior: Vec<bool>,
}

impl SpectralProfile {
    pub fn new(candidates: Vec<f64>, scdm: ProfileValues, su: ProfileValues) -> Result<Self> {
        if scdm.values.len() != candidates.len() || su.values.len() != candidates.len() {
            return Err(Error::invalid_input("profile components disagree on length"));
        }
        let interior = scdm
            .interior
            .iter()
            .zip(&su.interior)
            .map(|(a, b)| *a && *b)
            .collect();
        Ok(SpectralProfile { candidates, scdm: scdm.values, su: su.values, interior })
    }

    /// CSV with a `location,scdm,su` header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("location,scdm,su\n");
        for i in 0..self.candidates.len() {
            out.push_str(&format!(
                "{},{},{}\n",
                self.candidates[i], self.scdm[i], self.su[i]
            ));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::rng::RngStream;

    const TOL: f64 = 1e-9;

    #[test]
    fn stft_frame_count_and_zero_signal() {
        let spec = stft(&vec![0.0; 32], 8, 3, WindowKind::Hann).unwrap();
        assert_eq!(spec.frames.len(), (32 - 8) / 3 + 1);
        assert!(spec.frames.iter().flatten().all(|&v| v == 0.0));
        assert!(stft(&vec![0.0; 5], 8, 1, WindowKind::Hann).is_err());
    }

    #[test]
    fn stft_frame_count_formula_exhaustive() {
        for len in 8..40 {
            for a in 2..=8 {
                for hop in 1..=4 {
                    if len < a {
                        continue;
                    }
                    let signal = vec![1.0; len];
                    let spec = stft(&signal, a, hop, WindowKind::Rectangular).unwrap();
                    assert_eq!(spec.frames.len(), (len - a) / hop + 1, "len={len} A={a} hop={hop}");
                }
            }
        }
    }

    #[test]
    fn stft_constant_signal_rectangular_is_dc() {
        let spec = stft(&vec![1.0; 24], 8, 2, WindowKind::Rectangular).unwrap();
        for frame in &spec.frames {
            assert!((frame[0] - 8.0).abs() < TOL);
            for &v in &frame[1..] {
                assert!(v.abs() < TOL);
            }
        }
    }

    #[test]
    fn stft_detects_frequency_shift() {
        // sin(2 pi t / 8) then sin(2 pi t / 16): the dominant bin moves.
        let n = 128;
        let signal: Vec<f64> = (0..n)
            .map(|t| {
                let t = t as f64;
                if (t as usize) < n / 2 {
                    (std::f64::consts::TAU * t / 8.0).sin()
                } else {
                    (std::f64::consts::TAU * t / 16.0).sin()
                }
            })
            .collect();
        let spec = stft(&signal, 16, 1, WindowKind::Rectangular).unwrap();
        let peak = |frame: &Vec<f64>| {
            frame
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                .unwrap()
                .0
        };
        let first = peak(&spec.frames[0]);
        let last = peak(spec.frames.last().unwrap());
        assert_eq!(first, 2, "16-point window of period 8 peaks at bin 2");
        assert_eq!(last, 1, "16-point window of period 16 peaks at bin 1");
    }

    #[test]
    fn smc_hand_values() {
        assert_eq!(smc(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(), 0.0);
        let v = smc(&[1.0, 2.0, 3.0], &[2.0, 2.0, 4.0]).unwrap();
        assert!((v - 2.0_f64.sqrt()).abs() < TOL);
        // Homogeneity: scaling both inputs scales the distance.
        let c = -3.5;
        let scaled = smc(&[c, 2.0 * c, 3.0 * c], &[2.0 * c, 2.0 * c, 4.0 * c]).unwrap();
        assert!((scaled - c.abs() * v).abs() < TOL);
        assert!(smc(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn scm_hand_values() {
        let xa = [1.0, 2.0, 3.0];
        assert!((scm(&xa, &[2.0, 4.0, 6.0]).unwrap() - 1.0).abs() < TOL);
        assert!((scm(&xa, &[9.0, 8.0, 7.0]).unwrap() + 1.0).abs() < TOL);
        let v = scm(&xa, &[3.0, 1.0, 2.0]).unwrap();
        assert!((v + 0.5).abs() < TOL, "hand Pearson gives -0.5, got {v}");
        assert!(matches!(
            scm(&xa, &[5.0, 5.0, 5.0]),
            Err(crate::error::Error::DegenerateInput(_))
        ));
    }

    #[test]
    fn sgd_hand_values() {
        let xa = [1.0, 2.0, 3.0];
        assert_eq!(sgd(&xa, &xa).unwrap(), 0.0);
        // Offsets cancel in the gradients.
        assert!(sgd(&xa, &[11.0, 12.0, 13.0]).unwrap().abs() < TOL);
        let v = sgd(&xa, &[1.0, 3.0, 5.0]).unwrap();
        assert!((v - 2.0_f64.sqrt()).abs() < TOL);
        assert!(sgd(&[1.0], &[1.0]).is_err());
    }

    #[test]
    fn diss_hand_values() {
        let xa = [1.0, 2.0, 3.0];
        // Pure rescaling: correlation 1 kills the weight.
        assert!(diss(&xa, &[2.0, 4.0, 6.0]).unwrap().abs() < TOL);
        assert_eq!(diss(&xa, &xa).unwrap(), 0.0);
        // sgd = 3, weight = (1 - (-0.5))/2 = 0.75.
        let v = diss(&xa, &[3.0, 1.0, 2.0]).unwrap();
        assert!((v - 2.25).abs() < TOL, "composed hand value 2.25, got {v}");
    }

    #[test]
    fn diss_multiplicative_invariance_random() {
        let mut rng = RngStream::new(88);
        for _ in 0..100 {
            let n = 3 + (rng.next_u64() % 6) as usize;
            let x: Vec<f64> = (0..n).map(|_| rng.standard_normal() + 3.0).collect();
            if is_constant(&x) {
                continue;
            }
            let c = rng.uniform() * 5.0 + 0.01;
            let cx: Vec<f64> = x.iter().map(|v| v * c).collect();
            let v = diss(&x, &cx).unwrap();
            assert!(v.abs() < 1e-9, "diss(x, {c} x) = {v}");
        }
    }

    #[test]
    fn scdm_hand_values_and_symmetry() {
        let a = vec![vec![1.0, 2.0, 3.0]];
        let b = vec![vec![3.0, 1.0, 2.0]];
        assert_eq!(scdm(&a, &a).unwrap(), 0.0);
        // smc = sqrt((1-3)^2 + (2-1)^2 + (3-2)^2) = sqrt(6); diss = 2.25.
        let v = scdm(&a, &b).unwrap();
        let expect = 6.0_f64.sqrt() + 2.25;
        assert!((v - expect).abs() < TOL, "{v} vs {expect}");
        let sym = scdm(&b, &a).unwrap();
        assert!((v - sym).abs() < 1e-12);
        // Segment mean: two frames averaging to [2, 3, 4].
        let seg = vec![vec![1.0, 2.0, 3.0], vec![3.0, 4.0, 5.0]];
        let doubled = vec![vec![4.0, 6.0, 8.0]];
        let w = scdm(&seg, &doubled).unwrap();
        // Mean spectra [2,3,4] vs [4,6,8]: pure doubling, diss term vanishes.
        let expect_w = smc(&[2.0, 3.0, 4.0], &[4.0, 6.0, 8.0]).unwrap();
        assert!((w - expect_w).abs() < TOL);
    }

    #[test]
    fn scdm_handles_constant_spectra() {
        let flat = vec![vec![2.0, 2.0, 2.0]];
        let rising = vec![vec![1.0, 2.0, 3.0]];
        // Both constant: scm treated as 1, scdm reduces to the smc term.
        let both = scdm(&flat, &vec![vec![5.0, 5.0, 5.0]]).unwrap();
        assert!((both - smc(&[2.0; 3], &[5.0; 3]).unwrap()).abs() < TOL);
        // One constant: scm treated as 0, half the gradient distance remains.
        let one = scdm(&flat, &rising).unwrap();
        let expect = smc(&[2.0; 3], &[1.0, 2.0, 3.0]).unwrap()
            + sgd(&[2.0; 3], &[1.0, 2.0, 3.0]).unwrap() * 0.5;
        assert!((one - expect).abs() < TOL);
    }

    #[test]
    fn scm_bounds_and_scdm_nonnegative_random() {
        let mut rng = RngStream::new(17);
        for _ in 0..10_000 {
            let n = 3 + (rng.next_u64() % 14) as usize;
            let a: Vec<f64> = (0..n).map(|_| rng.standard_normal()).collect();
            let b: Vec<f64> = (0..n).map(|_| rng.standard_normal()).collect();
            if let Ok(c) = scm(&a, &b) {
                assert!((-1.0..=1.0).contains(&c), "scm out of range: {c}");
            }
            let v = scdm(&[a.clone()], &[b.clone()]).unwrap();
            assert!(v >= 0.0, "scdm negative: {v}");
        }
    }

    #[test]
    fn profile_flat_signal_is_zero() {
        let path = vec![4.2; 60];
        let candidates: Vec<usize> = (0..60).collect();
        let profile = scdm_profile(&path, &candidates, 8, WindowKind::Hann).unwrap();
        assert!(profile.values.iter().all(|&v| v.abs() < 1e-9));
        // Boundary flags cover exactly the candidates lacking support.
        for (i, &x) in candidates.iter().enumerate() {
            assert_eq!(profile.interior[i], (8..=52).contains(&x), "candidate {x}");
        }
    }

    #[test]
    fn profile_peaks_at_step() {
        let a = 15;
        let path: Vec<f64> = (0..100).map(|t| if t < 50 { 0.0 } else { 1.0 }).collect();
        let candidates: Vec<usize> = (0..100).collect();
        let profile = scdm_profile(&path, &candidates, a, WindowKind::Hann).unwrap();
        let argmax = profile
            .values
            .iter()
            .enumerate()
            .max_by(|p, q| p.1.partial_cmp(q.1).unwrap())
            .unwrap()
            .0;
        let peak = profile.values[argmax];
        assert!(
            (48..=52).contains(&candidates[argmax]),
            "argmax at {} (value {peak})",
            candidates[argmax]
        );

        // A stationary sinusoid stays far below the step's peak response.
        let sine: Vec<f64> = (0..100)
            .map(|t| (std::f64::consts::TAU * t as f64 / 8.0).sin())
            .collect();
        let calm = scdm_profile(&sine, &candidates, a, WindowKind::Hann).unwrap();
        let calm_max = calm.values.iter().cloned().fold(0.0, f64::max);
        assert!(
            calm_max <= 0.05 * peak,
            "no-change profile max {calm_max} vs step peak {peak}"
        );
    }

    #[test]
    fn uncertainty_zero_for_identical_paths() {
        let path: Vec<f64> = (0..40).map(|t| (t as f64 * 0.3).sin()).collect();
        let paths = vec![path.clone(), path.clone(), path];
        let candidates: Vec<usize> = (0..40).collect();
        let su = spectral_uncertainty(&paths, &candidates, 8, WindowKind::Hann).unwrap();
        assert!(su.values.iter().all(|&v| v.abs() < 1e-18));
        assert!(spectral_uncertainty(&paths[..1], &candidates, 8, WindowKind::Hann).is_err());
    }

    #[test]
    fn uncertainty_two_path_hand_value() {
        // Paths c sin(2 pi t / 8) with c in {1, 3}; rectangular window of 8
        // centered anywhere with full support gives bin-1 magnitudes 4 and
        // 12, variance 16, averaged over 5 bins -> 3.2.
        let n = 32;
        let make = |c: f64| -> Vec<f64> {
            (0..n)
                .map(|t| c * (std::f64::consts::TAU * t as f64 / 8.0).sin())
                .collect()
        };
        let paths = vec![make(1.0), make(3.0)];
        let su =
            spectral_uncertainty(&paths, &[16], 8, WindowKind::Rectangular).unwrap();
        assert!((su.values[0] - 3.2).abs() < 1e-9, "{}", su.values[0]);
    }

    #[test]
    fn uncertainty_invariant_to_path_order() {
        let mut rng = RngStream::new(3);
        let paths: Vec<Vec<f64>> = (0..5)
            .map(|_| (0..30).map(|_| rng.standard_normal()).collect())
            .collect();
        let candidates: Vec<usize> = (4..26).collect();
        let a = spectral_uncertainty(&paths, &candidates, 8, WindowKind::Hann).unwrap();
        let reversed: Vec<Vec<f64>> = paths.iter().rev().cloned().collect();
        let b = spectral_uncertainty(&reversed, &candidates, 8, WindowKind::Hann).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn uncertainty_shrinks_quadratically_with_path_spread() {
        // Paths mean +- eps noise: su scales like eps^2.
        let mut rng = RngStream::new(44);
        let base: Vec<f64> = (0..50).map(|t| (t as f64 * 0.2).cos()).collect();
        let noise: Vec<Vec<f64>> = (0..6)
            .map(|_| (0..50).map(|_| rng.standard_normal()).collect())
            .collect();
        let su_at = |eps: f64| {
            let paths: Vec<Vec<f64>> = noise
                .iter()
                .map(|n| base.iter().zip(n).map(|(b, v)| b + eps * v).collect())
                .collect();
            spectral_uncertainty(&paths, &[25], 10, WindowKind::Hann)
                .unwrap()
                .values[0]
        };
        // In the smooth regime (eps small against every spectral magnitude)
        // the variance of the magnitudes is quadratic in eps; fit the
        // constant at one eps and verify at half of it.
        let eps = 0.02;
        let k = su_at(eps) / (eps * eps);
        assert!(k > 0.0);
        let half = su_at(eps / 2.0);
        let bound = 1.1 * k * (eps / 2.0) * (eps / 2.0);
        assert!(half <= bound, "su({}) = {half}, bound {bound}", eps / 2.0);
    }

    #[test]
    fn profile_csv_layout() {
        let profile = SpectralProfile {
            candidates: vec![10.0, 11.0],
            scdm: vec![0.5, 1.5],
            su: vec![0.1, 0.2],
            interior: vec![true, true],
        };
        let csv = profile.to_csv();
        assert_eq!(csv, "location,scdm,su\n10,0.5,0.1\n11,1.5,0.2\n");
    }
}
