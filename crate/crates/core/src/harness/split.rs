//! Train/test partitioning. The default split is stratified by class at
//! image granularity; an alternative splits whole snapshots so overlapping
//! windows from one recording never straddle the boundary.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::imaging::SignalImage;

/// Stratified split over image indices: each class is shuffled and cut at
/// `train_fraction` independently (floor, at least one image on each side).
/// Returns (train, test) index lists, each sorted ascending.
pub fn split_stratified(
    labels: &[usize],
    k: usize,
    train_fraction: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    check_fraction(train_fraction)?;
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (i, &label) in labels.iter().enumerate() {
        if label >= k {
            return Err(Error::ClassRange { value: label, k });
        }
        by_class[label].push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (label, mut indices) in by_class.into_iter().enumerate() {
        if indices.len() < 2 {
            return Err(Error::Split(format!(
                "class {label} has {} images; need at least 2 to split",
                indices.len()
            )));
        }
        indices.shuffle(&mut rng);
        let take = ((indices.len() as f64 * train_fraction).floor() as usize).max(1);
        train.extend(&indices[..take]);
        test.extend(&indices[take..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

/// Splits at snapshot granularity: within each class, whole snapshots are
/// assigned to one side, so near-duplicate overlapping windows cannot leak
/// across the boundary.
pub fn split_by_snapshot(
    images: &[SignalImage],
    k: usize,
    train_fraction: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    check_fraction(train_fraction)?;
    // Snapshot -> (label, image indices); labels are per-snapshot by
    // construction.
    let mut snapshots: Vec<(&str, usize, Vec<usize>)> = Vec::new();
    for (i, img) in images.iter().enumerate() {
        if img.label >= k {
            return Err(Error::ClassRange {
                value: img.label,
                k,
            });
        }
        match snapshots.last_mut() {
            Some((id, label, indices)) if *id == img.snapshot_id && *label == img.label => {
                indices.push(i)
            }
            _ => snapshots.push((&img.snapshot_id, img.label, vec![i])),
        }
    }
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (s, (_, label, _)) in snapshots.iter().enumerate() {
        by_class[*label].push(s);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (label, mut snaps) in by_class.into_iter().enumerate() {
        if snaps.len() < 2 {
            return Err(Error::Split(format!(
                "class {label} has {} snapshots; need at least 2 for a snapshot split",
                snaps.len()
            )));
        }
        snaps.shuffle(&mut rng);
        let take = ((snaps.len() as f64 * train_fraction).floor() as usize).max(1);
        for (pos, &s) in snaps.iter().enumerate() {
            let dst = if pos < take { &mut train } else { &mut test };
            dst.extend(&snapshots[s].2);
        }
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

fn check_fraction(f: f64) -> Result<()> {
    if !(f > 0.0 && f < 1.0) {
        return Err(Error::Split(format!(
            "train fraction must be in (0, 1), got {f}"
        )));
    }
    Ok(())
}
