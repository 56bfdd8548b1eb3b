// SPDX-License-Identifier: MIT OR Apache-2.0

//! Naive real-input DFT magnitudes. Window sizes in this pipeline are tiny
//! (5 to 30 points), so the O(A^2) transform is deliberate.

use crate::error::{Error, Result};

/// Magnitudes of the non-redundant bins of a real signal's DFT:
/// bin i = |sum_t frame[t] exp(-j 2 pi i t / A)| for i = 0 ..= A/2.
pub fn dft_magnitude(frame: &[f64]) -> Result<Vec<f64>> {
    let a = frame.len();
    if a < 2 {
        return Err(Error::invalid_input(format!(
            "dft_magnitude needs a frame of length >= 2, got {a}"
        )));
    }
    if frame.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid_input("dft_magnitude input must be finite"));
    }
    let n_bins = a / 2 + 1;
    let mut out = Vec::with_capacity(n_bins);
    for bin in 0..n_bins {
        let omega = -std::f64::consts::TAU * bin as f64 / a as f64;
        let mut re = 0.0;
        let mut im = 0.0;
        for (t, &v) in frame.iter().enumerate() {
            let (s, c) = (omega * t as f64).sin_cos();
            re += v * c;
            im += v * s;
        }
        out.push(re.hypot(im));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::rng::RngStream;

    #[test]
    fn zeros_map_to_zeros() {
        let out = dft_magnitude(&[0.0; 8]).unwrap();
        assert_eq!(out, vec![0.0; 5]);
    }

    #[test]
    fn constant_signal_is_dc_only() {
        let out = dft_magnitude(&[1.0; 8]).unwrap();
        assert!((out[0] - 8.0).abs() < 1e-12);
        for &v in &out[1..] {
            assert!(v.abs() < 1e-12);
        }
    }

    #[test]
    fn cosine_hits_single_bin() {
        let frame: Vec<f64> = (0..8)
            .map(|t| (std::f64::consts::TAU * t as f64 / 8.0).cos())
            .collect();
        let out = dft_magnitude(&frame).unwrap();
        for (i, &v) in out.iter().enumerate() {
            if i == 1 {
                assert!((v - 4.0).abs() < 1e-9, "bin 1 = {v}");
            } else {
                assert!(v.abs() < 1e-9, "bin {i} = {v}");
            }
        }
    }

    #[test]
    fn odd_length_bin_count() {
        let out = dft_magnitude(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert_eq!(out.len(), 3);
    }

    #[test]
    fn rejects_short_or_non_finite_frames() {
        assert!(dft_magnitude(&[1.0]).is_err());
        assert!(dft_magnitude(&[1.0, f64::INFINITY]).is_err());
    }

    #[test]
    fn parseval_identity_full_spectrum() {
        // sum |x|^2 == (1/A) sum over all A bins of |X|^2; the full complex
        // spectrum is recomputed here independently of dft_magnitude.
        let mut rng = RngStream::new(5);
        for &a in &[5usize, 8, 13, 30] {
            let frame: Vec<f64> = (0..a).map(|_| rng.standard_normal()).collect();
            let time_energy: f64 = frame.iter().map(|v| v * v).sum();
            let mut freq_energy = 0.0;
            for bin in 0..a {
                let omega = -std::f64::consts::TAU * bin as f64 / a as f64;
                let (mut re, mut im) = (0.0, 0.0);
                for (t, &v) in frame.iter().enumerate() {
                    let (s, c) = (omega * t as f64).sin_cos();
                    re += v * c;
                    im += v * s;
                }
                freq_energy += re * re + im * im;
            }
            freq_energy /= a as f64;
            let rel = (freq_energy - time_energy).abs() / time_energy.abs();
            assert!(rel < 1e-9, "A={a}: relative error {rel}");
        }
    }
}
