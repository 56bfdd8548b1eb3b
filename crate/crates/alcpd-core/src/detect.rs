// SPDX-License-Identifier: MIT OR Apache-2.0

//! Change point estimation from a score profile and the evaluation metrics.
//!
//! Detection repeatedly takes the highest score above the threshold, then
//! suppresses the open interval (x - delta, x + delta) around it, until no
//! score above the threshold remains. A known-count variant stops after k
//! detections instead of at a threshold.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Detected change points with the parameters that produced them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChangePointSet {
    /// Sorted detected locations.
    pub locations: Vec<f64>,
    /// Score at each location, aligned with `locations`.
    pub scores: Vec<f64>,
    /// Detection threshold b (negative infinity for the top-k variant).
    pub threshold: f64,
    /// Suppression half-width delta.
    pub suppression: f64,
    /// False when a top-k run found fewer than k separable peaks.
    pub complete: bool,
}

impl ChangePointSet {
    /// CSV with a `location,score` header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("location,score\n");
        for (loc, score) in self.locations.iter().zip(&self.scores) {
            out.push_str(&format!("{loc},{score}\n"));
        }
        out
    }

    /// One human-readable line per detection.
    pub fn report(&self) -> String {
        let mut out = format!(
            "detected {} change point(s) (threshold {}, suppression {}{})\n",
            self.locations.len(),
            self.threshold,
            self.suppression,
            if self.complete { "" } else { "; fewer than requested" }
        );
        for (loc, score) in self.locations.iter().zip(&self.scores) {
            out.push_str(&format!("  at {loc} score {score:.6}\n"));
        }
        out
    }
}

/// Threshold detection: while any score exceeds `threshold`, take the argmax
/// (ties toward the smallest location), record it, and suppress the open
/// interval around it.
pub fn detect_threshold(
    locations: &[f64],
    scores: &[f64],
    threshold: f64,
    suppression: f64,
) -> Result<ChangePointSet> {
    detect_inner(locations, scores, threshold, suppression, usize::MAX).map(
        |(mut set, _)| {
            set.complete = true;
            set
        },
    )
}

/// Known-count detection: same suppression rule with the threshold disabled,
/// stopping after `k` detections. Returns fewer (flagged via `complete =
/// false`) when suppression exhausts the profile first.
pub fn detect_top_k(
    locations: &[f64],
    scores: &[f64],
    k: usize,
    suppression: f64,
) -> Result<ChangePointSet> {
    if k == 0 {
        return Err(Error::invalid_input("detect_top_k needs k >= 1"));
    }
    let (mut set, found) =
        detect_inner(locations, scores, f64::NEG_INFINITY, suppression, k)?;
    set.complete = found == k;
    Ok(set)
}

fn detect_inner(
    locations: &[f64],
    scores: &[f64],
    threshold: f64,
    suppression: f64,
    max_detections: usize,
) -> Result<(ChangePointSet, usize)> {
    if locations.len() != scores.len() {
        return Err(Error::invalid_input("locations and scores must align"));
    }
    if suppression <= 0.0 || !suppression.is_finite() {
        return Err(Error::invalid_input(format!(
            "suppression interval must be positive; got {suppression}"
        )));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::invalid_input("scores must be finite"));
    }

    // Suppressed entries leave the candidate pool permanently; for the
    // nonnegative profiles this pipeline produces that is exactly the
    // zero-out-and-rescan rule, and it also terminates for negative
    // thresholds.
    let mut suppressed = vec![false; scores.len()];
    let mut picked: Vec<(f64, f64)> = Vec::new();
    while picked.len() < max_detections {
        let mut best: Option<usize> = None;
        for i in 0..scores.len() {
            if suppressed[i] || scores[i] <= threshold {
                continue;
            }
            best = match best {
                None => Some(i),
                Some(b) => {
                    // Strict comparison keeps the earlier (smaller) location
                    // on ties; locations are scanned in ascending order.
                    if scores[i] > scores[b] {
                        Some(i)
                    } else {
                        Some(b)
                    }
                }
            };
        }
        let Some(idx) = best else { break };
        let center = locations[idx];
        picked.push((center, scores[idx]));
        for i in 0..locations.len() {
            if (locations[i] - center).abs() < suppression {
                suppressed[i] = true;
            }
        }
    }
    let found = picked.len();
    picked.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let (locations, scores): (Vec<f64>, Vec<f64>) = picked.into_iter().unzip();
    Ok((
        ChangePointSet { locations, scores, threshold, suppression, complete: true },
        found,
    ))
}

/// Threshold at the p-th percentile of the scores (linear interpolation),
/// matching the percentile rule used to set b when no absolute value is
/// given.
pub fn percentile_threshold(scores: &[f64], percentile: f64) -> Result<f64> {
    if scores.is_empty() {
        return Err(Error::invalid_input("percentile of an empty profile"));
    }
    if !(0.0..=100.0).contains(&percentile) {
        return Err(Error::invalid_input(format!(
            "percentile must be in [0, 100]; got {percentile}"
        )));
    }
    let mut sorted = scores.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let pos = percentile / 100.0 * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    Ok(sorted[lo] * (1.0 - frac) + sorted[hi] * frac)
}

/// Root mean squared location error under sorted-order pairing (optimal for
/// points on a line). Sizes must match; use [`detect_top_k`] with k =
/// |truth| first.
pub fn rmse(pred: &[f64], truth: &[f64]) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(Error::invalid_input(format!(
            "rmse needs equal counts; got {} predictions vs {} truths",
            pred.len(),
            truth.len()
        )));
    }
    if pred.is_empty() {
        return Err(Error::invalid_input("rmse of empty sets"));
    }
    let mut p = pred.to_vec();
    let mut t = truth.to_vec();
    p.sort_by(|a, b| a.partial_cmp(b).unwrap());
    t.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let sum: f64 = p.iter().zip(&t).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok((sum / p.len() as f64).sqrt())
}

/// Evaluation summary for one detection run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    /// Present when |pred| == |truth|.
    pub rmse: Option<f64>,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Matched (truth, prediction) pairs, each side used at most once.
    pub matches: Vec<(f64, f64)>,
}

impl EvalResult {
    pub fn report(&self) -> String {
        let mut out = String::new();
        if let Some(r) = self.rmse {
            out.push_str(&format!("rmse {r:.6}\n"));
        }
        out.push_str(&format!(
            "precision {:.6}\nrecall {:.6}\nf1 {:.6}\nmatches {}\n",
            self.precision,
            self.recall,
            self.f1,
            self.matches.len()
        ));
        for (t, p) in &self.matches {
            out.push_str(&format!("  truth {t} <- prediction {p}\n"));
        }
        out
    }

    /// CSV with a `metric,value` header (matches omitted).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("metric,value\n");
        if let Some(r) = self.rmse {
            out.push_str(&format!("rmse,{r}\n"));
        }
        out.push_str(&format!("precision,{}\n", self.precision));
        out.push_str(&format!("recall,{}\n", self.recall));
        out.push_str(&format!("f1,{}\n", self.f1));
        out
    }
}

/// Precision/recall/F1 with margin-M matching: a prediction counts as a true
/// positive when paired to a truth within M, each side matched at most once.
/// The pairing is the maximum-cardinality matching, computed by scanning
/// predictions in ascending order and pairing each to the leftmost unmatched
/// truth in range. RMSE is filled in when the counts happen to agree.
pub fn f1(pred: &[f64], truth: &[f64], margin: f64) -> Result<EvalResult> {
    if margin < 0.0 || !margin.is_finite() {
        return Err(Error::invalid_input(format!(
            "margin must be nonnegative and finite; got {margin}"
        )));
    }
    let matches = max_matching(pred, truth, margin);
    let tp = matches.len() as f64;
    let precision = if pred.is_empty() { 0.0 } else { tp / pred.len() as f64 };
    let recall = if truth.is_empty() { 0.0 } else { tp / truth.len() as f64 };
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    let rmse_value = if pred.len() == truth.len() && !pred.is_empty() {
        Some(rmse(pred, truth)?)
    } else {
        None
    };
    Ok(EvalResult { rmse: rmse_value, precision, recall, f1, matches })
}

/// Maximum matching between two point sets on a line under a distance cap.
/// Both sides sorted; each prediction takes the leftmost compatible truth
/// still free, which is optimal by the standard exchange argument.
fn max_matching(pred: &[f64], truth: &[f64], margin: f64) -> Vec<(f64, f64)> {
    let mut t_sorted = truth.to_vec();
    t_sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut p_sorted = pred.to_vec();
    p_sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut used = vec![false; t_sorted.len()];
    let mut matches = Vec::new();
    for &p in &p_sorted {
        for (i, &t) in t_sorted.iter().enumerate() {
            if used[i] || (t - p).abs() > margin {
                continue;
            }
            used[i] = true;
            matches.push((t, p));
            break;
        }
    }
    matches
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::rng::RngStream;

    fn three_peak_profile() -> (Vec<f64>, Vec<f64>) {
        let locations: Vec<f64> = vec![50.0, 55.0, 80.0];
        let scores = vec![5.0, 4.0, 3.0];
        (locations, scores)
    }

    #[test]
    fn threshold_detection_traces() {
        let (locs, scores) = three_peak_profile();
        // Everything below the bar: empty set.
        let none = detect_threshold(&locs, &scores, 10.0, 10.0).unwrap();
        assert!(none.locations.is_empty());

        // Single isolated peak.
        let one = detect_threshold(&[50.0], &[5.0], 1.0, 10.0).unwrap();
        assert_eq!(one.locations, vec![50.0]);

        // 55 is swallowed by the open interval (40, 60) around 50.
        let got = detect_threshold(&locs, &scores, 1.0, 10.0).unwrap();
        assert_eq!(got.locations, vec![50.0, 80.0]);
        assert_eq!(got.scores, vec![5.0, 3.0]);
    }

    #[test]
    fn top_k_detection_traces() {
        let (locs, scores) = three_peak_profile();
        let one = detect_top_k(&locs, &scores, 1, 10.0).unwrap();
        assert_eq!(one.locations, vec![50.0]);
        assert!(one.complete);

        let two = detect_top_k(&locs, &scores, 2, 10.0).unwrap();
        assert_eq!(two.locations, vec![50.0, 80.0]);
        assert!(two.complete);

        // 55 was permanently suppressed; only two separable peaks exist.
        let three = detect_top_k(&locs, &scores, 3, 10.0).unwrap();
        assert_eq!(three.locations, vec![50.0, 80.0]);
        assert!(!three.complete);
    }

    #[test]
    fn ties_break_toward_smaller_location() {
        let locs = vec![10.0, 20.0, 30.0];
        let scores = vec![2.0, 2.0, 2.0];
        let got = detect_top_k(&locs, &scores, 2, 5.0).unwrap();
        assert_eq!(got.locations, vec![10.0, 20.0]);
    }

    #[test]
    fn detection_matches_literal_replay_oracle() {
        // Oracle: transcribe the published loop verbatim (zero out values in
        // the open interval, rescan) on nonnegative profiles.
        fn replay(locations: &[f64], scores: &[f64], b: f64, delta: f64) -> Vec<f64> {
            let mut values = scores.to_vec();
            let mut out = Vec::new();
            while values.iter().any(|&v| v > b) {
                let mut best = 0;
                for i in 1..values.len() {
                    if values[i] > values[best] {
                        best = i;
                    }
                }
                out.push(locations[best]);
                for i in 0..values.len() {
                    if (locations[i] - locations[best]).abs() < delta {
                        values[i] = 0.0;
                    }
                }
            }
            out.sort_by(|a, b| a.partial_cmp(b).unwrap());
            out
        }

        let mut rng = RngStream::new(909);
        for trial in 0..1000 {
            let n = 200;
            let locations: Vec<f64> = (0..n).map(|i| i as f64).collect();
            let scores: Vec<f64> = (0..n).map(|_| rng.uniform() * 5.0).collect();
            let b = rng.uniform() * 4.0;
            let delta = 1.0 + rng.uniform() * 20.0;
            let expect = replay(&locations, &scores, b, delta);
            let got = detect_threshold(&locations, &scores, b, delta).unwrap();
            assert_eq!(got.locations, expect, "trial {trial} (b={b}, delta={delta})");
            // Invariants: separation >= delta, every score above b.
            for w in got.locations.windows(2) {
                assert!(w[1] - w[0] >= delta, "trial {trial}: spacing violated");
            }
            assert!(got.scores.iter().all(|&s| s > b));
        }
    }

    #[test]
    fn raising_threshold_never_detects_more() {
        let mut rng = RngStream::new(31);
        for _ in 0..1000 {
            let n = 60;
            let locations: Vec<f64> = (0..n).map(|i| i as f64).collect();
            let scores: Vec<f64> = (0..n).map(|_| rng.uniform() * 3.0).collect();
            let delta = 1.0 + rng.uniform() * 8.0;
            let lo = rng.uniform();
            let hi = lo + rng.uniform();
            let at_lo = detect_threshold(&locations, &scores, lo, delta).unwrap();
            let at_hi = detect_threshold(&locations, &scores, hi, delta).unwrap();
            assert!(at_hi.locations.len() <= at_lo.locations.len());
        }
    }

    #[test]
    fn rmse_hand_values() {
        assert_eq!(rmse(&[50.0], &[50.0]).unwrap(), 0.0);
        assert_eq!(rmse(&[53.0], &[50.0]).unwrap(), 3.0);
        let v = rmse(&[53.0, 96.0], &[50.0, 100.0]).unwrap();
        assert!((v - (25.0_f64 / 2.0).sqrt()).abs() < 1e-12);
        assert!((v - 3.53553).abs() < 1e-5);
        assert!(rmse(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn rmse_sorted_pairing_is_optimal() {
        // Against every bijection on small instances.
        fn permutations(k: usize) -> Vec<Vec<usize>> {
            if k == 1 {
                return vec![vec![0]];
            }
            let mut out = Vec::new();
            for p in permutations(k - 1) {
                for slot in 0..k {
                    let mut q: Vec<usize> = p.iter().map(|&v| v).collect();
                    q.insert(slot, k - 1);
                    out.push(q);
                }
            }
            out
        }
        let mut rng = RngStream::new(12);
        for _ in 0..200 {
            let k = 1 + (rng.next_u64() % 4) as usize;
            let pred: Vec<f64> = (0..k).map(|_| rng.uniform() * 100.0).collect();
            let truth: Vec<f64> = (0..k).map(|_| rng.uniform() * 100.0).collect();
            let sorted_val = rmse(&pred, &truth).unwrap();
            for perm in permutations(k) {
                let sum: f64 = perm
                    .iter()
                    .enumerate()
                    .map(|(i, &j)| (pred[i] - truth[j]) * (pred[i] - truth[j]))
                    .sum();
                let alt = (sum / k as f64).sqrt();
                assert!(sorted_val <= alt + 1e-12);
            }
        }
    }

    #[test]
    fn f1_hand_values() {
        let exact = f1(&[50.0, 80.0], &[50.0, 80.0], 3.0).unwrap();
        assert_eq!(exact.f1, 1.0);
        assert_eq!(exact.rmse, Some(0.0));

        // One spurious detection.
        let spur = f1(&[52.0, 60.0], &[50.0], 5.0).unwrap();
        assert!((spur.precision - 0.5).abs() < 1e-12);
        assert!((spur.recall - 1.0).abs() < 1e-12);
        assert!((spur.f1 - 2.0 / 3.0).abs() < 1e-9);
        assert_eq!(spur.rmse, None);

        // One prediction near two truths can match only one.
        let shared = f1(&[51.0], &[50.0, 52.0], 2.0).unwrap();
        assert_eq!(shared.matches.len(), 1);
        assert!((shared.precision - 1.0).abs() < 1e-12);
        assert!((shared.recall - 0.5).abs() < 1e-12);
        assert!((shared.f1 - 2.0 / 3.0).abs() < 1e-9);

        // Conventions at the edges.
        let none = f1(&[], &[50.0], 5.0).unwrap();
        assert_eq!((none.precision, none.recall, none.f1), (0.0, 0.0, 0.0));
    }

    #[test]
    fn greedy_matching_equals_brute_force() {
        // Exhaustive assignment enumeration on all sizes up to 5x5.
        fn brute_force(pred: &[f64], truth: &[f64], margin: f64) -> usize {
            fn go(pi: usize, pred: &[f64], truth: &[f64], used: &mut Vec<bool>, margin: f64) -> usize {
                if pi == pred.len() {
                    return 0;
                }
                // Skip this prediction.
                let mut best = go(pi + 1, pred, truth, used, margin);
                for t in 0..truth.len() {
                    if !used[t] && (truth[t] - pred[pi]).abs() <= margin {
                        used[t] = true;
                        best = best.max(1 + go(pi + 1, pred, truth, used, margin));
                        used[t] = false;
                    }
                }
                best
            }
            let mut used = vec![false; truth.len()];
            go(0, pred, truth, &mut used, margin)
        }

        let mut rng = RngStream::new(606);
        for trial in 0..500 {
            let np = (rng.next_u64() % 6) as usize;
            let nt = (rng.next_u64() % 6) as usize;
            let pred: Vec<f64> = (0..np).map(|_| rng.uniform() * 50.0).collect();
            let truth: Vec<f64> = (0..nt).map(|_| rng.uniform() * 50.0).collect();
            let margin = rng.uniform() * 10.0;
            let greedy = max_matching(&pred, &truth, margin).len();
            let optimal = brute_force(&pred, &truth, margin);
            assert_eq!(greedy, optimal, "trial {trial}: greedy {greedy} vs optimal {optimal}");
        }
    }

    #[test]
    fn percentile_threshold_interpolates() {
        let scores = vec![0.0, 1.0, 2.0, 3.0, 4.0];
        assert_eq!(percentile_threshold(&scores, 0.0).unwrap(), 0.0);
        assert_eq!(percentile_threshold(&scores, 100.0).unwrap(), 4.0);
        assert_eq!(percentile_threshold(&scores, 50.0).unwrap(), 2.0);
        assert_eq!(percentile_threshold(&scores, 95.0).unwrap(), 3.8);
        assert!(percentile_threshold(&[], 50.0).is_err());
    }

    #[test]
    fn reports_and_csv_are_line_oriented() {
        let set = detect_threshold(&[50.0, 80.0], &[5.0, 3.0], 1.0, 10.0).unwrap();
        assert_eq!(set.to_csv(), "location,score\n50,5\n80,3\n");
        assert!(set.report().contains("detected 2 change point(s)"));
        let eval = f1(&[50.0], &[50.0], 2.0).unwrap();
        assert!(eval.report().contains("f1 1.000000"));
        assert!(eval.to_csv().contains("f1,1\n"));
    }
}
