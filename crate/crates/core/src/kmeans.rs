//! Seeded k-means with k-means++ initialization.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::numeric::mix_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KMeansParams {
    pub max_iter: usize,
    pub restarts: usize,
}

impl Default for KMeansParams {
    fn default() -> Self {
        Self {
            max_iter: 100,
            restarts: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansFit {
    pub centroids: Vec<Vec<f64>>,
    /// Nearest-centroid label of every input point under the final centroids.
    pub labels: Vec<usize>,
    pub inertia: f64,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Nearest centroid; ties go to the lower index.
pub fn nearest(centroids: &[Vec<f64>], point: &[f64]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, c) in centroids.iter().enumerate() {
        let d = sq_dist(c, point);
        if d < best_d {
            best = i;
            best_d = d;
        }
    }
    best
}

fn lex_cmp(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            std::cmp::Ordering::Equal => continue,
            o => return o,
        }
    }
    a.len().cmp(&b.len())
}

/// Clusters `points` into at most `k` groups.
///
/// When there are no more distinct points than `k`, every distinct point
/// becomes its own cluster (in lexicographic order) and no iteration runs.
pub fn kmeans(points: &[&[f64]], k: usize, seed: u64, params: KMeansParams) -> KMeansFit {
    assert!(k >= 1, "k must be positive");
    if points.is_empty() {
        return KMeansFit {
            centroids: Vec::new(),
            labels: Vec::new(),
            inertia: 0.0,
        };
    }
    let mut distinct: Vec<&[f64]> = points.to_vec();
    distinct.sort_by(|a, b| lex_cmp(a, b));
    distinct.dedup_by(|a, b| lex_cmp(a, b).is_eq());
    if distinct.len() <= k {
        let centroids: Vec<Vec<f64>> = distinct.iter().map(|p| p.to_vec()).collect();
        let labels = points.iter().map(|p| nearest(&centroids, p)).collect();
        return KMeansFit {
            centroids,
            labels,
            inertia: 0.0,
        };
    }

    let mut best: Option<KMeansFit> = None;
    for restart in 0..params.restarts.max(1) {
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, &[restart as u64]));
        let fit = lloyd(points, plus_plus_init(points, k, &mut rng), params.max_iter);
        if best.as_ref().is_none_or(|b| fit.inertia < b.inertia) {
            best = Some(fit);
        }
    }
    best.expect("at least one restart")
}

fn plus_plus_init(points: &[&[f64]], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut centroids = vec![points[rng.random_range(0..points.len())].to_vec()];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = points.len() - 1;
            for (i, w) in d2.iter().enumerate() {
                if *w > 0.0 && target < *w {
                    pick = i;
                    break;
                }
                target -= w;
            }
            if d2[pick] == 0.0 {
                pick = d2.iter().rposition(|w| *w > 0.0).unwrap_or(pick);
            }
            pick
        } else {
            rng.random_range(0..points.len())
        };
        let c = points[next].to_vec();
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(sq_dist(p, &c));
        }
        centroids.push(c);
    }
    centroids
}

fn lloyd(points: &[&[f64]], mut centroids: Vec<Vec<f64>>, max_iter: usize) -> KMeansFit {
    let dim = points[0].len();
    let k = centroids.len();
    let mut labels: Vec<usize> = points.iter().map(|p| nearest(&centroids, p)).collect();
    for _ in 0..max_iter {
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &l) in points.iter().zip(&labels) {
            counts[l] += 1;
            for (s, x) in sums[l].iter_mut().zip(p.iter()) {
                *s += x;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                centroids[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            } else {
                // Re-seed an empty cluster at the point farthest from its centroid.
                let far = (0..points.len())
                    .max_by(|&a, &b| {
                        sq_dist(points[a], &centroids[labels[a]])
                            .total_cmp(&sq_dist(points[b], &centroids[labels[b]]))
                            .then(b.cmp(&a))
                    })
                    .expect("non-empty");
                centroids[c] = points[far].to_vec();
                labels[far] = c;
            }
        }
        let next: Vec<usize> = points.iter().map(|p| nearest(&centroids, p)).collect();
        if next == labels {
            break;
        }
        labels = next;
    }
    let labels: Vec<usize> = points.iter().map(|p| nearest(&centroids, p)).collect();
    let inertia = points
        .iter()
        .zip(&labels)
        .map(|(p, &l)| sq_dist(p, &centroids[l]))
        .sum();
    KMeansFit {
        centroids,
        labels,
        inertia,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(v: &[[f64; 2]]) -> Vec<Vec<f64>> {
        v.iter().map(|p| p.to_vec()).collect()
    }

    #[test]
    fn separates_well_spaced_blobs() {
        let data = pts(&[[0.0, 0.0], [0.1, 0.0], [0.0, 0.1], [5.0, 5.0], [5.1, 5.0], [5.0, 5.1]]);
        let refs: Vec<&[f64]> = data.iter().map(|p| p.as_slice()).collect();
        let fit = kmeans(&refs, 2, 3, KMeansParams::default());
        assert_eq!(fit.labels[0], fit.labels[1]);
        assert_eq!(fit.labels[0], fit.labels[2]);
        assert_eq!(fit.labels[3], fit.labels[4]);
        assert_ne!(fit.labels[0], fit.labels[3]);
    }

    #[test]
    fn few_distinct_points_get_own_clusters() {
        let data = pts(&[[1.0, 0.0], [0.0, 0.0], [1.0, 0.0]]);
        let refs: Vec<&[f64]> = data.iter().map(|p| p.as_slice()).collect();
        let fit = kmeans(&refs, 5, 0, KMeansParams::default());
        assert_eq!(fit.centroids, pts(&[[0.0, 0.0], [1.0, 0.0]]));
        assert_eq!(fit.labels, vec![1, 0, 1]);
    }

    #[test]
    fn deterministic_under_seed() {
        let data: Vec<Vec<f64>> = (0..50).map(|i| vec![(i * 7 % 13) as f64, (i * 3 % 11) as f64]).collect();
        let refs: Vec<&[f64]> = data.iter().map(|p| p.as_slice()).collect();
        let a = kmeans(&refs, 4, 42, KMeansParams::default());
        let b = kmeans(&refs, 4, 42, KMeansParams::default());
        assert_eq!(a, b);
        for (p, &l) in refs.iter().zip(&a.labels) {
            assert_eq!(nearest(&a.centroids, p), l);
        }
    }

    #[test]
    fn nearest_tie_goes_low() {
        let c = pts(&[[0.0, 0.0], [2.0, 0.0]]);
        assert_eq!(nearest(&c, &[1.0, 0.0]), 0);
    }
}
