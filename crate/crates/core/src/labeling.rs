//! Unsupervised wear levels: cluster the entropy series with k-means and map
//! clusters to ordinal levels by centroid magnitude (level 0 = lowest).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Default Lloyd termination: stop when no centroid moves more than this.
pub const DEFAULT_TOL: f64 = 1e-9;
pub const DEFAULT_MAX_ITER: usize = 300;
/// Restarts used by [`label_run`]; the restart with the lowest
/// within-cluster sum of squares wins, ties to the lowest restart index.
pub const RESTARTS: usize = 10;

/// Wear-level names for the canonical seven-class scheme.
pub const SEVEN_LEVEL_NAMES: [&str; 7] = [
    "0%-9%",
    "10%-24%",
    "25%-39%",
    "40%-54%",
    "55%-69%",
    "70%-84%",
    "85%-100%",
];

/// Per-snapshot wear-level assignment for one run.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct WearLabeling {
    pub k: usize,
    /// Sorted ascending; index order matches level order.
    pub centroids: Vec<f64>,
    /// One level per snapshot (not per entropy window).
    pub assignment: Vec<usize>,
    pub level_names: Vec<String>,
}

impl WearLabeling {
    /// Number of snapshots per level.
    pub fn level_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.k];
        for &a in &self.assignment {
            counts[a] += 1;
        }
        counts
    }
}

fn squared_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
}

/// Lloyd's algorithm over d-dimensional points from one seeded k-means++
/// initialization. Returns `(centroids, assignment, wcss)`.
///
/// Ties in the nearest-centroid search break toward the lower centroid index.
/// A cluster left empty after an assignment pass is reseeded to the point
/// currently farthest from its own assigned centroid.
fn lloyd(
    points: &[Vec<f64>],
    k: usize,
    seed: u64,
    max_iter: usize,
    tol: f64,
) -> Result<(Vec<Vec<f64>>, Vec<usize>, f64)> {
    if points.len() < k || k == 0 {
        return Err(Error::ClusterCapacity {
            points: points.len(),
            k,
        });
    }
    let dim = points[0].len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // k-means++ seeding.
    let mut centroids: Vec<Vec<f64>> = Vec::with_capacity(k);
    centroids.push(points[rng.gen_range(0..points.len())].clone());
    let mut d2: Vec<f64> = points
        .iter()
        .map(|p| squared_dist(p, &centroids[0]))
        .collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.gen::<f64>() * total;
            let mut chosen = points.len() - 1;
            for (i, &w) in d2.iter().enumerate() {
                if target < w {
                    chosen = i;
                    break;
                }
                target -= w;
            }
            chosen
        } else {
            // All mass at the chosen centroids (e.g. constant input).
            rng.gen_range(0..points.len())
        };
        centroids.push(points[next].clone());
        for (i, p) in points.iter().enumerate() {
            d2[i] = d2[i].min(squared_dist(p, centroids.last().unwrap()));
        }
    }

    let mut assignment = vec![0usize; points.len()];
    for _ in 0..max_iter {
        // Assignment pass; strict `<` keeps the lowest index on ties.
        for (i, p) in points.iter().enumerate() {
            let mut best = 0usize;
            let mut best_d = squared_dist(p, &centroids[0]);
            for (c, centroid) in centroids.iter().enumerate().skip(1) {
                let d = squared_dist(p, centroid);
                if d < best_d {
                    best_d = d;
                    best = c;
                }
            }
            assignment[i] = best;
        }

        // Reseed empty clusters to the worst-fit point. Only points from
        // multi-member clusters qualify, so each pass fills one empty cluster
        // without creating another and the loop terminates.
        loop {
            let mut counts = vec![0usize; k];
            for &a in &assignment {
                counts[a] += 1;
            }
            let Some(empty) = counts.iter().position(|&c| c == 0) else {
                break;
            };
            let farthest = (0..points.len())
                .filter(|&i| counts[assignment[i]] > 1)
                .max_by(|&a, &b| {
                    squared_dist(&points[a], &centroids[assignment[a]])
                        .total_cmp(&squared_dist(&points[b], &centroids[assignment[b]]))
                })
                .expect("an empty cluster implies some cluster has two members");
            centroids[empty] = points[farthest].clone();
            assignment[farthest] = empty;
        }

        // Update pass.
        let mut movement = 0.0f64;
        let mut sums = vec![vec![0.0f64; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &a) in points.iter().zip(&assignment) {
            counts[a] += 1;
            for (s, x) in sums[a].iter_mut().zip(p) {
                *s += x;
            }
        }
        for c in 0..k {
            if counts[c] == 0 {
                continue;
            }
            for s in &mut sums[c] {
                *s /= counts[c] as f64;
            }
            movement = movement.max(squared_dist(&sums[c], &centroids[c]).sqrt());
            centroids[c] = std::mem::take(&mut sums[c]);
        }
        if movement < tol {
            break;
        }
    }

    // Final assignment against the converged centroids.
    for (i, p) in points.iter().enumerate() {
        let mut best = 0usize;
        let mut best_d = squared_dist(p, &centroids[0]);
        for (c, centroid) in centroids.iter().enumerate().skip(1) {
            let d = squared_dist(p, centroid);
            if d < best_d {
                best_d = d;
                best = c;
            }
        }
        assignment[i] = best;
    }
    let wcss = points
        .iter()
        .zip(&assignment)
        .map(|(p, &a)| squared_dist(p, &centroids[a]))
        .sum();
    Ok((centroids, assignment, wcss))
}

/// 1-D k-means: one seeded k-means++ initialization followed by Lloyd
/// iterations until centroid movement drops below `tol` or `max_iter` passes.
pub fn kmeans_1d(
    points: &[f64],
    k: usize,
    seed: u64,
    max_iter: usize,
    tol: f64,
) -> Result<(Vec<f64>, Vec<usize>)> {
    let pts: Vec<Vec<f64>> = points.iter().map(|&p| vec![p]).collect();
    let (centroids, assignment, _) = lloyd(&pts, k, seed, max_iter, tol)?;
    Ok((centroids.into_iter().map(|c| c[0]).collect(), assignment))
}

/// Within-cluster sum of squares for a 1-D clustering.
pub fn wcss_1d(points: &[f64], centroids: &[f64], assignment: &[usize]) -> f64 {
    points
        .iter()
        .zip(assignment)
        .map(|(&p, &a)| (p - centroids[a]) * (p - centroids[a]))
        .sum()
}

fn best_of_restarts(points: &[Vec<f64>], k: usize, seed: u64) -> Result<(Vec<Vec<f64>>, Vec<usize>)> {
    let mut best: Option<(f64, Vec<Vec<f64>>, Vec<usize>)> = None;
    for r in 0..RESTARTS as u64 {
        let (centroids, assignment, wcss) =
            lloyd(points, k, seed.wrapping_add(r), DEFAULT_MAX_ITER, DEFAULT_TOL)?;
        let better = match &best {
            None => true,
            Some((best_wcss, _, _)) => wcss < *best_wcss,
        };
        if better {
            best = Some((wcss, centroids, assignment));
        }
    }
    let (_, centroids, assignment) = best.expect("RESTARTS > 0");
    Ok((centroids, assignment))
}

/// Orders clusters by `key` ascending and renames levels accordingly.
fn to_labeling(
    centroids: Vec<Vec<f64>>,
    assignment: Vec<usize>,
    k: usize,
    window_len: usize,
    sort_key: impl Fn(&[f64]) -> f64,
    centroid_value: impl Fn(&[f64]) -> f64,
) -> WearLabeling {
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| sort_key(&centroids[a]).total_cmp(&sort_key(&centroids[b])));
    let mut level_of_cluster = vec![0usize; k];
    for (level, &cluster) in order.iter().enumerate() {
        level_of_cluster[cluster] = level;
    }
    let sorted_centroids: Vec<f64> = order.iter().map(|&c| centroid_value(&centroids[c])).collect();

    // Snapshots before the first complete entropy window inherit the first
    // labeled snapshot's level.
    let first = level_of_cluster[assignment[0]];
    let mut full = vec![first; window_len.saturating_sub(1)];
    full.extend(assignment.iter().map(|&a| level_of_cluster[a]));

    let level_names: Vec<String> = if k == 7 {
        SEVEN_LEVEL_NAMES.iter().map(|s| s.to_string()).collect()
    } else {
        (0..k).map(|i| format!("level-{i}")).collect()
    };
    WearLabeling {
        k,
        centroids: sorted_centroids,
        assignment: full,
        level_names,
    }
}

/// Clusters an entropy series into `k` ordinal wear levels.
///
/// `window_len` is the entropy window length used to produce `entropy`; the
/// returned assignment covers all `entropy.len() + window_len - 1` snapshots,
/// with the pre-window snapshots inheriting the first labeled level.
pub fn label_run(entropy: &[f64], window_len: usize, k: usize, seed: u64) -> Result<WearLabeling> {
    let points: Vec<Vec<f64>> = entropy.iter().map(|&e| vec![e]).collect();
    let (centroids, assignment) = best_of_restarts(&points, k, seed)?;
    Ok(to_labeling(
        centroids,
        assignment,
        k,
        window_len,
        |c| c[0],
        |c| c[0],
    ))
}

/// Two-dimensional variant clustering `(entropy, feature)` pairs; levels are
/// ordered by centroid Euclidean norm. `feature` must align with `entropy`
/// (the feature value at each entropy window's last snapshot).
pub fn label_run_2d(
    entropy: &[f64],
    feature: &[f64],
    window_len: usize,
    k: usize,
    seed: u64,
) -> Result<WearLabeling> {
    if entropy.len() != feature.len() {
        return Err(Error::Shape(format!(
            "entropy length {} != feature length {}",
            entropy.len(),
            feature.len()
        )));
    }
    let points: Vec<Vec<f64>> = entropy
        .iter()
        .zip(feature)
        .map(|(&e, &f)| vec![e, f])
        .collect();
    let (centroids, assignment) = best_of_restarts(&points, k, seed)?;
    Ok(to_labeling(
        centroids,
        assignment,
        k,
        window_len,
        |c| (c[0] * c[0] + c[1] * c[1]).sqrt(),
        |c| (c[0] * c[0] + c[1] * c[1]).sqrt(),
    ))
}
