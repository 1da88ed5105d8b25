//! Lloyd's k-means over unit vectors, used as the coarse quantizer of the
//! inverted-list index.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::{domain, stream_rng};

pub const KMEANS_ITERATIONS: usize = 25;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeans {
    /// `k × dim`, stored in f32 so probing is identical before and after
    /// persistence.
    pub centroids: Vec<f32>,
    pub assignment: Vec<usize>,
}

#[inline]
fn sq_dist(x: &[f32], c: &[f64]) -> f64 {
    x.iter()
        .zip(c)
        .map(|(&a, b)| {
            let d = f64::from(a) - b;
            d * d
        })
        .sum()
}

fn nearest(x: &[f32], centroids: &[f64], dim: usize) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centroids.chunks_exact(dim).enumerate() {
        let d = sq_dist(x, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

/// k-means++ seeding (D²-weighted sampling) followed by a fixed number of
/// Lloyd iterations. Empty clusters take the point farthest from its centroid
/// in the currently largest cluster.
pub fn kmeans(data: &[f32], dim: usize, k: usize, iterations: usize, seed: u64) -> Result<KMeans> {
    let n = data.len() / dim;
    if k == 0 {
        return Err(Error::InvalidConfig("nlist must be positive".into()));
    }
    if k > n {
        return Err(Error::InvalidConfig(alloc::format!(
            "nlist {k} exceeds row count {n}"
        )));
    }
    let row = |i: usize| &data[i * dim..(i + 1) * dim];
    let mut rng = stream_rng(seed, domain::KMEANS, 0);

    let mut centroids: Vec<f64> = Vec::with_capacity(k * dim);
    let first = rng.random_range(0..n);
    centroids.extend(row(first).iter().map(|&x| f64::from(x)));
    let mut min_d: Vec<f64> = (0..n)
        .map(|i| sq_dist(row(i), &centroids[..dim]))
        .collect();
    for _ in 1..k {
        let total: f64 = min_d.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = None;
            for (i, &d) in min_d.iter().enumerate() {
                if d > 0.0 {
                    chosen = Some(i);
                    if target < d {
                        break;
                    }
                    target -= d;
                }
            }
            chosen.unwrap_or(0)
        } else {
            rng.random_range(0..n)
        };
        let start = centroids.len();
        centroids.extend(row(pick).iter().map(|&x| f64::from(x)));
        for (i, d) in min_d.iter_mut().enumerate() {
            let nd = sq_dist(row(i), &centroids[start..]);
            if nd < *d {
                *d = nd;
            }
        }
    }

    let mut assignment = vec![0usize; n];
    let mut dist = vec![0f64; n];
    for _ in 0..iterations {
        for i in 0..n {
            let (j, d) = nearest(row(i), &centroids, dim);
            assignment[i] = j;
            dist[i] = d;
        }
        let mut sums = vec![0f64; k * dim];
        let mut counts = vec![0usize; k];
        for i in 0..n {
            let j = assignment[i];
            counts[j] += 1;
            for (s, &x) in sums[j * dim..(j + 1) * dim].iter_mut().zip(row(i)) {
                *s += f64::from(x);
            }
        }
        for j in 0..k {
            if counts[j] > 0 {
                let inv = 1.0 / counts[j] as f64;
                for (c, s) in centroids[j * dim..(j + 1) * dim]
                    .iter_mut()
                    .zip(&sums[j * dim..(j + 1) * dim])
                {
                    *c = s * inv;
                }
            }
        }
        for j in 0..k {
            if counts[j] != 0 {
                continue;
            }
            let largest = (0..k).max_by_key(|&c| (counts[c], core::cmp::Reverse(c))).unwrap();
            if counts[largest] < 2 {
                continue;
            }
            let victim = (0..n)
                .filter(|&i| assignment[i] == largest)
                .max_by(|&a, &b| dist[a].total_cmp(&dist[b]).then(b.cmp(&a)))
                .unwrap();
            assignment[victim] = j;
            dist[victim] = 0.0;
            counts[largest] -= 1;
            counts[j] = 1;
            for (c, &x) in centroids[j * dim..(j + 1) * dim].iter_mut().zip(row(victim)) {
                *c = f64::from(x);
            }
        }
    }

    let centroids: Vec<f32> = centroids.iter().map(|&c| c as f32).collect();
    let wide: Vec<f64> = centroids.iter().map(|&c| f64::from(c)).collect();
    for (i, a) in assignment.iter_mut().enumerate() {
        *a = nearest(row(i), &wide, dim).0;
    }
    Ok(KMeans {
        centroids,
        assignment,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orthogonal_points_get_their_own_cluster() {
        let mut data = vec![0f32; 16];
        for i in 0..4 {
            data[i * 4 + i] = 1.0;
        }
        for seed in 0..20 {
            let km = kmeans(&data, 4, 4, KMEANS_ITERATIONS, seed).unwrap();
            let mut seen = km.assignment.clone();
            seen.sort_unstable();
            assert_eq!(seen, [0, 1, 2, 3], "seed {seed}");
        }
    }

    #[test]
    fn rejects_bad_k() {
        let data = [1f32, 0.0, 0.0, 1.0];
        assert!(kmeans(&data, 2, 0, 5, 0).is_err());
        assert!(kmeans(&data, 2, 3, 5, 0).is_err());
    }

    #[test]
    fn duplicate_points_still_fill_every_cluster() {
        // Eight copies of two points, four clusters: repair must keep every
        // list in use even though only two distinct locations exist.
        let mut data = Vec::new();
        for i in 0..8 {
            data.extend_from_slice(if i % 2 == 0 { &[1f32, 0.0] } else { &[0f32, 1.0] });
        }
        let km = kmeans(&data, 2, 4, KMEANS_ITERATIONS, 3).unwrap();
        assert_eq!(km.assignment.len(), 8);
        assert_eq!(km.centroids.len(), 8);
    }
}
