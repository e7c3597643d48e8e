//! Spectral clustering of a similarity matrix.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub const KMEANS_RESTARTS: usize = 20;
const KMEANS_MAX_ITERS: usize = 300;

/// Cluster label per row of a symmetric nonnegative affinity matrix.
///
/// Uses the symmetric normalized Laplacian `I - D^-1/2 A D^-1/2` (diagonal of
/// `A` zeroed), embeds each document with the eigenvectors of the smallest
/// eigenvalues, normalizes the rows and runs seeded k-means with restarts.
/// Documents without any affinity to the others get their own labels first.
/// Labels are renumbered by first appearance.
pub fn spectral_cluster(affinity: &[Vec<f64>], k: usize, seed: u64) -> Result<Vec<usize>> {
    let n = affinity.len();
    if k < 2 {
        return Err(Error::InvalidInput("cluster count must be at least 2".into()));
    }
    for (i, row) in affinity.iter().enumerate() {
        if row.len() != n {
            return Err(Error::InvalidInput("affinity matrix must be square".into()));
        }
        for (j, &a) in row.iter().enumerate() {
            if !(a >= 0.0 && a.is_finite()) || (a - affinity[j][i]).abs() > 1e-9 {
                return Err(Error::InvalidInput(
                    "affinity must be symmetric, finite and nonnegative".into(),
                ));
            }
        }
    }
    if n == 0 {
        return Ok(Vec::new());
    }

    let degree: Vec<f64> = (0..n)
        .map(|i| (0..n).filter(|&j| j != i).map(|j| affinity[i][j]).sum())
        .collect();
    let mut labels = vec![usize::MAX; n];
    let connected: Vec<usize> = (0..n).filter(|&i| degree[i] > 0.0).collect();
    // Isolated documents may use every label but one when a connected part exists.
    let own = k - usize::from(!connected.is_empty());
    let mut next = 0usize;
    for (c, i) in (0..n).filter(|&i| degree[i] <= 0.0).enumerate() {
        labels[i] = c.min(own - 1);
        next = (c + 1).min(own);
    }

    let remaining = k - next;
    if !connected.is_empty() {
        let m = connected.len();
        if remaining >= m {
            for (c, &i) in connected.iter().enumerate() {
                labels[i] = next + c;
            }
        } else {
            let assign = cluster_connected(affinity, &degree, &connected, remaining, seed);
            for (&i, a) in connected.iter().zip(assign) {
                labels[i] = next + a;
            }
        }
    }
    Ok(relabel(&labels))
}

fn cluster_connected(
    affinity: &[Vec<f64>],
    degree: &[f64],
    idx: &[usize],
    k: usize,
    seed: u64,
) -> Vec<usize> {
    let m = idx.len();
    let inv_sqrt: Vec<f64> = idx.iter().map(|&i| 1.0 / libm::sqrt(degree[i])).collect();
    let lap = DMatrix::from_fn(m, m, |a, b| {
        if a == b {
            1.0
        } else {
            -affinity[idx[a]][idx[b]] * inv_sqrt[a] * inv_sqrt[b]
        }
    });
    let eig = SymmetricEigen::new(lap);
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]).then(a.cmp(&b)));

    let mut points: Vec<Vec<f64>> = (0..m)
        .map(|r| order[..k].iter().map(|&c| eig.eigenvectors[(r, c)]).collect())
        .collect();
    for p in &mut points {
        let norm = libm::sqrt(p.iter().map(|v| v * v).sum::<f64>());
        if norm > 0.0 {
            p.iter_mut().for_each(|v| *v /= norm);
        }
    }
    kmeans(&points, k, seed).0
}

/// Seeded k-means (k-means++ seeding, Lloyd iterations), best inertia over
/// [`KMEANS_RESTARTS`] restarts. Returns labels and inertia.
pub fn kmeans(points: &[Vec<f64>], k: usize, seed: u64) -> (Vec<usize>, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(Vec<usize>, f64)> = None;
    for _ in 0..KMEANS_RESTARTS {
        let run = kmeans_once(points, k, &mut rng);
        if best.as_ref().is_none_or(|b| run.1 < b.1) {
            best = Some(run);
        }
    }
    best.unwrap_or_default()
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn kmeans_once<R: Rng>(points: &[Vec<f64>], k: usize, rng: &mut R) -> (Vec<usize>, f64) {
    let n = points.len();
    let dim = points.first().map_or(0, Vec::len);
    let mut centers: Vec<Vec<f64>> = Vec::with_capacity(k);
    centers.push(points[rng.random_range(0..n)].clone());
    while centers.len() < k {
        let d: Vec<f64> = points
            .iter()
            .map(|p| centers.iter().map(|c| sq_dist(p, c)).fold(f64::INFINITY, f64::min))
            .collect();
        let total: f64 = d.iter().sum();
        let pick = if total > 0.0 {
            let mut t = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, di) in d.iter().enumerate() {
                if t < *di {
                    chosen = i;
                    break;
                }
                t -= di;
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        centers.push(points[pick].clone());
    }

    let mut labels = vec![0usize; n];
    for iter in 0..KMEANS_MAX_ITERS {
        let mut changed = false;
        for (i, p) in points.iter().enumerate() {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (c, center) in centers.iter().enumerate() {
                let d = sq_dist(p, center);
                if d < best_d {
                    best_d = d;
                    best = c;
                }
            }
            if labels[i] != best {
                labels[i] = best;
                changed = true;
            }
        }
        if !changed && iter > 0 {
            break;
        }
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &l) in points.iter().zip(&labels) {
            counts[l] += 1;
            for (s, v) in sums[l].iter_mut().zip(p) {
                *s += v;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                centers[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            }
        }
    }
    let inertia = points
        .iter()
        .zip(&labels)
        .map(|(p, &l)| sq_dist(p, &centers[l]))
        .sum();
    (labels, inertia)
}

fn relabel(labels: &[usize]) -> Vec<usize> {
    let mut map: Vec<(usize, usize)> = Vec::new();
    labels
        .iter()
        .map(|&l| match map.iter().find(|(from, _)| *from == l) {
            Some(&(_, to)) => to,
            None => {
                let to = map.len();
                map.push((l, to));
                to
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blocks(sizes: &[usize], inside: f64, across: f64) -> Vec<Vec<f64>> {
        let n: usize = sizes.iter().sum();
        let mut block = Vec::new();
        for (b, &s) in sizes.iter().enumerate() {
            block.extend(core::iter::repeat_n(b, s));
        }
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| if block[i] == block[j] { inside } else { across })
                    .collect()
            })
            .collect()
    }

    #[test]
    fn separates_blocks() {
        let a = blocks(&[4, 3], 0.5, 0.01);
        let labels = spectral_cluster(&a, 2, 1).unwrap();
        assert_eq!(labels, vec![0, 0, 0, 0, 1, 1, 1]);
    }

    #[test]
    fn k_equal_to_size_is_singletons() {
        let a = blocks(&[3, 2], 0.4, 0.1);
        assert_eq!(spectral_cluster(&a, 5, 3).unwrap(), vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn isolated_documents_get_their_own_label() {
        let mut a = blocks(&[3, 3], 0.5, 0.01);
        for row in &mut a {
            row.push(0.0);
        }
        a.push(vec![0.0; 7]);
        a[6][6] = 0.5;
        let labels = spectral_cluster(&a, 3, 0).unwrap();
        assert_eq!(labels, vec![0, 0, 0, 1, 1, 1, 2]);
    }

    #[test]
    fn deterministic_for_seed() {
        let mut a = blocks(&[3, 3, 3], 0.3, 0.05);
        a[0][4] = 0.2;
        a[4][0] = 0.2;
        assert_eq!(spectral_cluster(&a, 3, 9).unwrap(), spectral_cluster(&a, 3, 9).unwrap());
    }

    #[test]
    fn rejects_bad_input() {
        assert!(spectral_cluster(&blocks(&[2], 0.5, 0.0), 1, 0).is_err());
        let mut a = blocks(&[2, 2], 0.5, 0.1);
        a[0][1] = 0.9;
        assert!(spectral_cluster(&a, 2, 0).is_err());
    }
}
