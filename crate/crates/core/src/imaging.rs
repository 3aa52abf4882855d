//! Conversion of labeled raw signals into overlapping M×M grayscale images.
//!
//! Each image is one window of `M*M` consecutive samples, min-max normalized
//! to 0..255 and filled row-major (left to right, top to bottom). Windows
//! start every `step` samples, so a small step yields heavy overlap and many
//! images per snapshot.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::ingest::SignalSeries;
use crate::labeling::WearLabeling;

/// An M×M grayscale image with its wear label and source provenance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignalImage {
    pub m: usize,
    /// Row-major, length `m * m`.
    pub pixels: Vec<u8>,
    pub label: usize,
    pub snapshot_id: String,
    pub subsample_index: usize,
}

/// Geometry and balancing parameters for image extraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct ImagingConfig {
    /// Image side length; each image consumes `m*m` samples.
    pub m: usize,
    /// Offset between consecutive windows, in samples.
    pub step: usize,
    pub balance_seed: u64,
}

impl Default for ImagingConfig {
    fn default() -> Self {
        Self {
            m: 64,
            step: 64,
            balance_seed: 0,
        }
    }
}

/// Number of complete `m*m` windows in an `n`-sample signal at step `s`:
/// zero when the signal is shorter than one window, else
/// `(n - m*m) / s + 1`.
pub fn image_count(n: usize, m: usize, s: usize) -> usize {
    let window = m * m;
    if n < window || s == 0 {
        return 0;
    }
    (n - window) / s + 1
}

/// Normalizes one window into `m*m` pixel values.
///
/// Pixel at 1-based row `x`, column `y` is
/// `round((w[(x-1)*m + y] - min) / (max - min) * 255)` with round half away
/// from zero. A constant window maps to all-zero pixels.
pub fn signal_to_image(window: &[f64], m: usize) -> Result<Vec<u8>> {
    if window.len() != m * m {
        return Err(Error::Shape(format!(
            "signal_to_image: window length {} != {m}x{m}",
            window.len()
        )));
    }
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for &v in window {
        min = min.min(v);
        max = max.max(v);
    }
    let range = max - min;
    if range == 0.0 {
        return Ok(vec![0u8; m * m]);
    }
    Ok(window
        .iter()
        .map(|&v| ((v - min) / range * 255.0).round() as u8)
        .collect())
}

/// Cuts every snapshot of a labeled run into images. Window `i` of a snapshot
/// starts at sample offset `i * step`; every image inherits its snapshot's
/// wear level. Output order is (snapshot, window index).
pub fn imagify_run(
    series: &SignalSeries,
    labeling: &WearLabeling,
    cfg: &ImagingConfig,
) -> Result<Vec<SignalImage>> {
    if labeling.assignment.len() != series.len() {
        return Err(Error::LabelCoverage {
            labeled: labeling.assignment.len(),
            snapshots: series.len(),
        });
    }
    let n = series.samples_per_snapshot();
    let window = cfg.m * cfg.m;
    if cfg.step == 0 {
        return Err(Error::Shape("imaging step must be >= 1".into()));
    }
    if window > n {
        return Err(Error::Shape(format!(
            "image size {}x{} needs {window} samples but snapshots have {n}",
            cfg.m, cfg.m
        )));
    }
    let per_snapshot = image_count(n, cfg.m, cfg.step);
    let mut images = Vec::with_capacity(per_snapshot * series.len());
    for (snap, &label) in series.snapshots().iter().zip(&labeling.assignment) {
        for i in 0..per_snapshot {
            let start = i * cfg.step;
            let pixels = signal_to_image(&snap.samples[start..start + window], cfg.m)
                .map_err(|e| Error::Shape(format!("snapshot {} window {i}: {e}", snap.id)))?;
            images.push(SignalImage {
                m: cfg.m,
                pixels,
                label,
                snapshot_id: snap.id.clone(),
                subsample_index: i,
            });
        }
    }
    Ok(images)
}

/// Downsamples every class to the smallest class size, without replacement.
/// Selection is seeded; the relative order of surviving images is preserved.
pub fn balance_classes(
    images: Vec<SignalImage>,
    num_classes: usize,
    seed: u64,
) -> Result<Vec<SignalImage>> {
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); num_classes];
    for (i, img) in images.iter().enumerate() {
        if img.label >= num_classes {
            return Err(Error::ClassRange {
                value: img.label,
                k: num_classes,
            });
        }
        by_class[img.label].push(i);
    }
    if let Some(label) = by_class.iter().position(|c| c.is_empty()) {
        return Err(Error::EmptyClass { label });
    }
    let target = by_class.iter().map(Vec::len).min().unwrap();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut keep: Vec<usize> = Vec::with_capacity(target * num_classes);
    for indices in &by_class {
        // Partial Fisher-Yates to pick `target` of them, then restore input
        // order within the class.
        let mut pool = indices.clone();
        for i in 0..target {
            let j = rng.gen_range(i..pool.len());
            pool.swap(i, j);
        }
        let mut chosen: Vec<usize> = pool[..target].to_vec();
        chosen.sort_unstable();
        keep.extend(chosen);
    }
    keep.sort_unstable();
    let keep_set: std::collections::HashSet<usize> = keep.iter().copied().collect();
    Ok(images
        .into_iter()
        .enumerate()
        .filter(|(i, _)| keep_set.contains(i))
        .map(|(_, img)| img)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{synth_run, SynthProfile};
    use crate::labeling::label_run;
    use proptest::prelude::*;

    #[test]
    fn image_count_examples() {
        assert_eq!(image_count(20480, 64, 64), 257);
        assert_eq!(image_count(4096, 64, 64), 1);
        assert_eq!(image_count(4095, 64, 64), 0);
        assert_eq!(image_count(4096, 64, 1), 1);
        assert_eq!(image_count(4097, 64, 1), 2);
    }

    #[test]
    fn eq2_hand_example() {
        let pixels = signal_to_image(&[0.0, 1.0, 2.0, 3.0], 2).unwrap();
        assert_eq!(pixels, vec![0, 85, 170, 255]);
    }

    #[test]
    fn constant_window_maps_to_zero() {
        let pixels = signal_to_image(&[5.0; 4], 2).unwrap();
        assert_eq!(pixels, vec![0, 0, 0, 0]);
    }

    #[test]
    fn shape_error_on_bad_window() {
        assert!(matches!(
            signal_to_image(&[1.0, 2.0, 3.0], 2),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn rounding_is_half_away_from_zero() {
        // (0.5 / 255) * 255 = 127.5 exactly -> 128
        let window = [0.0, 127.5, 255.0, 1.0];
        let pixels = signal_to_image(&window, 2).unwrap();
        assert_eq!(pixels[1], 128);
    }

    fn tiny_run(growth: f64) -> (SignalSeries, WearLabeling) {
        let profile = SynthProfile {
            base_amplitude: 0.05,
            noise_level: 0.02,
            wear_growth_rate: growth,
            snapshots: 30,
            samples_per_snapshot: 300,
        };
        let series = synth_run(&profile, 4).unwrap();
        let rms = crate::features::tsf_series(&series, crate::features::TsfKind::Rms).unwrap();
        let entropy = crate::features::shannon_entropy(&rms, 4).unwrap();
        let labeling = label_run(&entropy, 4, 3, 9).unwrap();
        (series, labeling)
    }

    #[test]
    fn imagify_emits_expected_count_and_provenance() {
        let (series, labeling) = tiny_run(2.0);
        let cfg = ImagingConfig {
            m: 16,
            step: 16,
            balance_seed: 0,
        };
        let images = imagify_run(&series, &labeling, &cfg).unwrap();
        let per = image_count(300, 16, 16); // (300-256)/16+1 = 3
        assert_eq!(per, 3);
        assert_eq!(images.len(), per * series.len());
        assert_eq!(images[0].snapshot_id, "synth-00000");
        assert_eq!(images[0].subsample_index, 0);
        assert_eq!(images[2].subsample_index, 2);
        assert_eq!(images[3].snapshot_id, "synth-00001");
        // Every image carries its snapshot's label.
        for (s, snap) in series.snapshots().iter().enumerate() {
            for i in 0..per {
                assert_eq!(images[s * per + i].label, labeling.assignment[s]);
                assert_eq!(images[s * per + i].snapshot_id, snap.id);
            }
        }
    }

    #[test]
    fn imagify_rejects_bad_geometry() {
        let (series, labeling) = tiny_run(1.0);
        let cfg = ImagingConfig {
            m: 64, // 4096 > 300 samples
            step: 64,
            balance_seed: 0,
        };
        assert!(imagify_run(&series, &labeling, &cfg).is_err());
    }

    fn fake_images(sizes: &[usize]) -> Vec<SignalImage> {
        let mut images = Vec::new();
        for (label, &count) in sizes.iter().enumerate() {
            for i in 0..count {
                images.push(SignalImage {
                    m: 2,
                    pixels: vec![label as u8, 0, 0, i as u8],
                    label,
                    snapshot_id: format!("snap-{label}"),
                    subsample_index: i,
                });
            }
        }
        images
    }

    #[test]
    fn balance_to_min_class() {
        let images = fake_images(&[10, 4, 7]);
        let balanced = balance_classes(images.clone(), 3, 1).unwrap();
        let mut counts = [0usize; 3];
        for img in &balanced {
            counts[img.label] += 1;
        }
        assert_eq!(counts, [4, 4, 4]);
        // All survivors came from the input.
        for img in &balanced {
            assert!(images.contains(img));
        }
        // Order within a class preserved.
        let class0: Vec<usize> = balanced
            .iter()
            .filter(|i| i.label == 0)
            .map(|i| i.subsample_index)
            .collect();
        let mut sorted = class0.clone();
        sorted.sort_unstable();
        assert_eq!(class0, sorted);
    }

    #[test]
    fn balance_already_balanced_is_identity() {
        let images = fake_images(&[5, 5, 5]);
        let balanced = balance_classes(images.clone(), 3, 7).unwrap();
        assert_eq!(balanced, images);
    }

    #[test]
    fn balance_rejects_empty_class() {
        let images = fake_images(&[5, 5]);
        assert!(matches!(
            balance_classes(images, 3, 0),
            Err(Error::EmptyClass { label: 2 })
        ));
    }

    #[test]
    fn table_sized_balance() {
        // Class sizes from the IMS run; balancing keeps 7 x min.
        let sizes = [139_520usize, 26_368, 29_440, 13_056, 27_648, 9_984, 5_888];
        // Building full images at those sizes is wasteful; emulate with the
        // same selection math on lightweight images.
        let mut images = Vec::new();
        for (label, &count) in sizes.iter().enumerate() {
            for i in 0..count {
                images.push(SignalImage {
                    m: 1,
                    pixels: vec![0],
                    label,
                    snapshot_id: String::new(),
                    subsample_index: i,
                });
            }
        }
        let balanced = balance_classes(images, 7, 3).unwrap();
        assert_eq!(balanced.len(), 7 * 5_888);
        let mut counts = [0usize; 7];
        for img in &balanced {
            counts[img.label] += 1;
        }
        assert!(counts.iter().all(|&c| c == 5_888));
    }

    proptest! {
        #[test]
        fn affine_invariance(
            window in proptest::collection::vec(-100.0f64..100.0, 16),
            scale in 0.001f64..1000.0,
            offset in -1000.0f64..1000.0,
        ) {
            let transformed: Vec<f64> = window.iter().map(|&v| scale * v + offset).collect();
            let a = signal_to_image(&window, 4).unwrap();
            let b = signal_to_image(&transformed, 4).unwrap();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn balance_deterministic_and_subset(
            sizes in proptest::collection::vec(1usize..20, 2..5),
            seed in 0u64..500,
        ) {
            let images = fake_images(&sizes);
            let a = balance_classes(images.clone(), sizes.len(), seed).unwrap();
            let b = balance_classes(images.clone(), sizes.len(), seed).unwrap();
            prop_assert_eq!(&a, &b);
            let min = sizes.iter().min().copied().unwrap();
            prop_assert_eq!(a.len(), min * sizes.len());
            for img in &a {
                prop_assert!(images.contains(img));
            }
        }
    }
}
