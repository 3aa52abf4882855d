//! Time-domain statistical features computed per snapshot, and their
//! sliding-window entropy transform.
//!
//! All moment-based features use the population convention (divide by `n`).
//! The entropy transform maps a feature series `v` to
//! `H[j] = mean(-v_i * log2(v_i))` over each length-`n` window with hop 1,
//! with `0 * log 0 = 0`; it is only defined for nonnegative inputs.

use crate::error::{Error, Result};
use crate::ingest::SignalSeries;

/// The eight per-window statistics, in canonical table order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TsfKind {
    Rms,
    Kurtosis,
    Skewness,
    PeakToPeak,
    CrestFactor,
    ShapeFactor,
    ImpulseFactor,
    MarginFactor,
}

impl TsfKind {
    pub const ALL: [TsfKind; 8] = [
        TsfKind::Rms,
        TsfKind::Kurtosis,
        TsfKind::Skewness,
        TsfKind::PeakToPeak,
        TsfKind::CrestFactor,
        TsfKind::ShapeFactor,
        TsfKind::ImpulseFactor,
        TsfKind::MarginFactor,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TsfKind::Rms => "rms",
            TsfKind::Kurtosis => "kurtosis",
            TsfKind::Skewness => "skewness",
            TsfKind::PeakToPeak => "peak-to-peak",
            TsfKind::CrestFactor => "crest-factor",
            TsfKind::ShapeFactor => "shape-factor",
            TsfKind::ImpulseFactor => "impulse-factor",
            TsfKind::MarginFactor => "margin-factor",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        TsfKind::ALL
            .iter()
            .copied()
            .find(|k| k.name() == name)
            .ok_or_else(|| Error::Config(format!("unknown feature kind {name:?}")))
    }

    /// Kinds that never go negative and are therefore valid entropy inputs.
    pub fn nonnegative(self) -> bool {
        !matches!(self, TsfKind::Skewness)
    }
}

struct WindowStats {
    n: f64,
    mean: f64,
    /// Population standard deviation.
    sigma: f64,
    min: f64,
    max: f64,
    abs_max: f64,
    abs_mean: f64,
    sqrt_abs_mean: f64,
    rms: f64,
}

fn window_stats(window: &[f64]) -> WindowStats {
    let n = window.len() as f64;
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    let mut abs_sum = 0.0;
    let mut sqrt_abs_sum = 0.0;
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    let mut abs_max = 0.0f64;
    for &x in window {
        sum += x;
        sum_sq += x * x;
        let a = x.abs();
        abs_sum += a;
        sqrt_abs_sum += a.sqrt();
        min = min.min(x);
        max = max.max(x);
        abs_max = abs_max.max(a);
    }
    let mean = sum / n;
    let var = (window.iter().map(|&x| (x - mean) * (x - mean)).sum::<f64>()) / n;
    WindowStats {
        n,
        mean,
        sigma: var.sqrt(),
        min,
        max,
        abs_max,
        abs_mean: abs_sum / n,
        sqrt_abs_mean: sqrt_abs_sum / n,
        rms: (sum_sq / n).sqrt(),
    }
}

/// Computes one statistic over one sample window.
///
/// Errors on the degenerate windows where the chosen formula is undefined:
/// zero variance for kurtosis/skewness, zero denominator for the factor
/// features.
pub fn compute_tsf(window: &[f64], kind: TsfKind) -> Result<f64> {
    if window.is_empty() {
        return Err(Error::DegenerateStats {
            reason: "empty window",
            snapshot: None,
        });
    }
    let s = window_stats(window);
    let degenerate = |reason: &'static str| Error::DegenerateStats {
        reason,
        snapshot: None,
    };
    match kind {
        TsfKind::Rms => Ok(s.rms),
        TsfKind::Kurtosis => {
            if s.sigma == 0.0 {
                return Err(degenerate("zero variance in kurtosis"));
            }
            let m4 = window
                .iter()
                .map(|&x| {
                    let d = x - s.mean;
                    d * d * d * d
                })
                .sum::<f64>()
                / s.n;
            Ok(m4 / (s.sigma * s.sigma * s.sigma * s.sigma))
        }
        TsfKind::Skewness => {
            if s.sigma == 0.0 {
                return Err(degenerate("zero variance in skewness"));
            }
            let m3 = window
                .iter()
                .map(|&x| {
                    let d = x - s.mean;
                    d * d * d
                })
                .sum::<f64>()
                / s.n;
            Ok(m3 / (s.sigma * s.sigma * s.sigma))
        }
        TsfKind::PeakToPeak => Ok(s.max - s.min),
        TsfKind::CrestFactor => {
            if s.rms == 0.0 {
                return Err(degenerate("zero rms in crest factor"));
            }
            Ok(s.abs_max / s.rms)
        }
        TsfKind::ShapeFactor => {
            if s.abs_mean == 0.0 {
                return Err(degenerate("zero mean magnitude in shape factor"));
            }
            Ok(s.rms / s.abs_mean)
        }
        TsfKind::ImpulseFactor => {
            if s.abs_mean == 0.0 {
                return Err(degenerate("zero mean magnitude in impulse factor"));
            }
            Ok(s.abs_max / s.abs_mean)
        }
        TsfKind::MarginFactor => {
            if s.sqrt_abs_mean == 0.0 {
                return Err(degenerate("zero root magnitude in margin factor"));
            }
            Ok(s.abs_max / (s.sqrt_abs_mean * s.sqrt_abs_mean))
        }
    }
}

/// One feature value per snapshot, in series order.
pub fn tsf_series(series: &SignalSeries, kind: TsfKind) -> Result<Vec<f64>> {
    series
        .snapshots()
        .iter()
        .enumerate()
        .map(|(i, snap)| {
            compute_tsf(&snap.samples, kind).map_err(|e| match e {
                Error::DegenerateStats { reason, .. } => Error::DegenerateStats {
                    reason,
                    snapshot: Some(i),
                },
                other => other,
            })
        })
        .collect()
}

/// Sliding-window entropy of a feature series: for each window of
/// `window_len` consecutive values (hop 1), the mean of `-v * log2(v)`.
///
/// Output length is `values.len() - window_len + 1`. Inputs must be
/// nonnegative; zero contributes zero.
pub fn shannon_entropy(tsf_values: &[f64], window_len: usize) -> Result<Vec<f64>> {
    if window_len == 0 || window_len > tsf_values.len() {
        return Err(Error::EntropyWindow {
            window_len,
            len: tsf_values.len(),
        });
    }
    if let Some((index, &value)) = tsf_values.iter().enumerate().find(|(_, &v)| v < 0.0) {
        return Err(Error::EntropyDomain { index, value });
    }
    let terms: Vec<f64> = tsf_values
        .iter()
        .map(|&v| if v == 0.0 { 0.0 } else { -v * v.log2() })
        .collect();
    let n = window_len as f64;
    let out = terms
        .windows(window_len)
        .map(|w| w.iter().sum::<f64>() / n)
        .collect();
    Ok(out)
}

/// A feature series bundled with its entropy transform.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSeries {
    pub kind: TsfKind,
    pub values: Vec<f64>,
    pub window_len: usize,
    pub entropy: Vec<f64>,
}

impl FeatureSeries {
    pub fn compute(series: &SignalSeries, kind: TsfKind, window_len: usize) -> Result<Self> {
        let values = tsf_series(series, kind)?;
        let entropy = shannon_entropy(&values, window_len)?;
        Ok(Self {
            kind,
            values,
            window_len,
            entropy,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{synth_run, SynthProfile};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn assert_close(got: f64, want: f64, tol: f64) {
        let scale = want.abs().max(1.0);
        assert!(
            (got - want).abs() <= tol * scale,
            "got {got}, want {want} (tol {tol})"
        );
    }

    #[test]
    fn rms_constant_signal() {
        assert_eq!(compute_tsf(&[2.0, 2.0, 2.0, 2.0], TsfKind::Rms).unwrap(), 2.0);
    }

    #[test]
    fn hand_evaluated_window() {
        // window [3, 4]: mean 3.5, population sigma 0.5
        let w = [3.0, 4.0];
        assert_close(
            compute_tsf(&w, TsfKind::Rms).unwrap(),
            (25.0f64 / 2.0).sqrt(),
            1e-15,
        );
        assert_close(compute_tsf(&w, TsfKind::Kurtosis).unwrap(), 1.0, 1e-15);
        assert_close(compute_tsf(&w, TsfKind::Skewness).unwrap(), 0.0, 1e-15);
        assert_close(compute_tsf(&w, TsfKind::PeakToPeak).unwrap(), 1.0, 1e-15);
        assert_close(
            compute_tsf(&w, TsfKind::CrestFactor).unwrap(),
            4.0 / (25.0f64 / 2.0).sqrt(),
            1e-15,
        );
        assert_close(
            compute_tsf(&w, TsfKind::ShapeFactor).unwrap(),
            (25.0f64 / 2.0).sqrt() / 3.5,
            1e-15,
        );
        assert_close(
            compute_tsf(&w, TsfKind::ImpulseFactor).unwrap(),
            4.0 / 3.5,
            1e-15,
        );
        let root_mean = (3.0f64.sqrt() + 2.0) / 2.0;
        assert_close(
            compute_tsf(&w, TsfKind::MarginFactor).unwrap(),
            4.0 / (root_mean * root_mean),
            1e-15,
        );
    }

    #[test]
    fn peak_to_peak_is_positive() {
        assert_eq!(
            compute_tsf(&[-1.0, 0.0, 2.0], TsfKind::PeakToPeak).unwrap(),
            3.0
        );
    }

    #[test]
    fn kurtosis_of_standard_normal() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        let sample: Vec<f64> = (0..200_000)
            .map(|_| rng.sample(rand_distr::StandardNormal))
            .collect();
        let k = compute_tsf(&sample, TsfKind::Kurtosis).unwrap();
        assert!((k - 3.0).abs() < 0.2, "kurtosis {k}");
    }

    #[test]
    fn degenerate_windows_error() {
        assert!(matches!(
            compute_tsf(&[5.0, 5.0, 5.0], TsfKind::Kurtosis),
            Err(Error::DegenerateStats { .. })
        ));
        assert!(matches!(
            compute_tsf(&[5.0, 5.0, 5.0], TsfKind::Skewness),
            Err(Error::DegenerateStats { .. })
        ));
        assert!(matches!(
            compute_tsf(&[0.0, 0.0], TsfKind::CrestFactor),
            Err(Error::DegenerateStats { .. })
        ));
        assert!(compute_tsf(&[], TsfKind::Rms).is_err());
    }

    #[test]
    fn tsf_series_tags_snapshot_index() {
        let profile = SynthProfile {
            base_amplitude: 0.05,
            noise_level: 0.02,
            wear_growth_rate: 0.0,
            snapshots: 3,
            samples_per_snapshot: 128,
        };
        let series = synth_run(&profile, 1).unwrap();
        let values = tsf_series(&series, TsfKind::Rms).unwrap();
        assert_eq!(values.len(), 3);
    }

    #[test]
    fn entropy_hand_values() {
        // log2(1) = 0
        assert_eq!(shannon_entropy(&[1.0, 1.0, 1.0], 2).unwrap(), vec![0.0, 0.0]);
        // -2*log2(2) = -2 per element, mean of two = -2
        assert_eq!(shannon_entropy(&[2.0, 2.0], 2).unwrap(), vec![-2.0]);
        // -0.5*log2(0.5) = 0.5 per element
        assert_eq!(shannon_entropy(&[0.5, 0.5], 2).unwrap(), vec![0.5]);
        // mixed window, window_len 2: [(0.5+0)/2, (0-2)/2]
        assert_eq!(
            shannon_entropy(&[0.5, 1.0, 2.0], 2).unwrap(),
            vec![0.25, -1.0]
        );
        // zero contributes zero
        assert_eq!(shannon_entropy(&[0.0, 1.0], 2).unwrap(), vec![0.0]);
    }

    #[test]
    fn entropy_domain_and_window_errors() {
        assert!(matches!(
            shannon_entropy(&[0.5, -0.1], 2),
            Err(Error::EntropyDomain { index: 1, .. })
        ));
        assert!(matches!(
            shannon_entropy(&[0.5], 2),
            Err(Error::EntropyWindow { .. })
        ));
        assert!(shannon_entropy(&[0.5], 0).is_err());
    }

    #[test]
    fn synth_growth_gives_increasing_rms_trend() {
        let profile = SynthProfile {
            base_amplitude: 0.05,
            noise_level: 0.02,
            wear_growth_rate: 3.0,
            snapshots: 60,
            samples_per_snapshot: 2048,
        };
        let series = synth_run(&profile, 5).unwrap();
        let values = tsf_series(&series, TsfKind::Rms).unwrap();
        // Spearman rank correlation between time and rms.
        let n = values.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        let mut rank = vec![0.0f64; n];
        for (r, &i) in order.iter().enumerate() {
            rank[i] = r as f64;
        }
        let mean = (n as f64 - 1.0) / 2.0;
        let mut num = 0.0;
        let mut den_t = 0.0;
        let mut den_r = 0.0;
        for (t, &r) in rank.iter().enumerate() {
            let dt = t as f64 - mean;
            let dr = r - mean;
            num += dt * dr;
            den_t += dt * dt;
            den_r += dr * dr;
        }
        let rho = num / (den_t * den_r).sqrt();
        assert!(rho > 0.9, "rank correlation {rho}");
    }

    proptest! {
        #[test]
        fn rms_scale_equivariant(c in -10.0f64..10.0, xs in proptest::collection::vec(-100.0f64..100.0, 1..64)) {
            prop_assume!(c != 0.0);
            let scaled: Vec<f64> = xs.iter().map(|x| c * x).collect();
            let base = compute_tsf(&xs, TsfKind::Rms).unwrap();
            let got = compute_tsf(&scaled, TsfKind::Rms).unwrap();
            prop_assert!((got - c.abs() * base).abs() <= 1e-9 * (1.0 + base));
        }

        #[test]
        fn scale_invariant_features(c in 0.1f64..10.0, xs in proptest::collection::vec(-100.0f64..100.0, 4..64)) {
            let scaled: Vec<f64> = xs.iter().map(|x| c * x).collect();
            for kind in [
                TsfKind::Kurtosis,
                TsfKind::Skewness,
                TsfKind::CrestFactor,
                TsfKind::ShapeFactor,
                TsfKind::ImpulseFactor,
            ] {
                let base = match compute_tsf(&xs, kind) {
                    Ok(v) => v,
                    Err(_) => continue, // degenerate window
                };
                let got = compute_tsf(&scaled, kind).unwrap();
                prop_assert!(
                    (got - base).abs() <= 1e-8 * (1.0 + base.abs()),
                    "{kind:?}: {got} vs {base}"
                );
            }
        }

        #[test]
        fn entropy_length_formula(len in 1usize..80, window in 1usize..80) {
            prop_assume!(window <= len);
            let values: Vec<f64> = (0..len).map(|i| 0.1 + i as f64 * 0.01).collect();
            let out = shannon_entropy(&values, window).unwrap();
            prop_assert_eq!(out.len(), len - window + 1);
        }

        #[test]
        fn entropy_window_permutation_invariant(
            mut values in proptest::collection::vec(0.01f64..10.0, 4..24),
            seed in 0u64..1000,
        ) {
            let window = values.len(); // single window covering everything
            let before = shannon_entropy(&values, window).unwrap()[0];
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            // Fisher-Yates shuffle of the single window.
            for i in (1..values.len()).rev() {
                let j = rng.gen_range(0..=i);
                values.swap(i, j);
            }
            let after = shannon_entropy(&values, window).unwrap()[0];
            prop_assert!((before - after).abs() <= 1e-12 * (1.0 + before.abs()));
        }
    }
}
