use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMeans1d {
    /// Ascending.
    pub centroids: Vec<f64>,
    /// Members of each cluster, ascending, in centroid order.
    pub clusters: Vec<Vec<f64>>,
    pub iterations: usize,
}

const MAX_ITERATIONS: usize = 1000;

/// Lloyd's algorithm on the line, seeded at the `(i + 0.5) / k` quantiles.
/// Points equidistant from two centroids join the lower cluster.
pub fn kmeans_1d(values: &[f64], k: usize) -> Result<KMeans1d> {
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    if values.len() < k {
        return Err(Error::invalid(format!(
            "{} values cannot form {k} clusters",
            values.len()
        )));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("k-means input contains a non-finite value"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut distinct = sorted.clone();
    distinct.dedup();
    if distinct.len() < k {
        return Err(Error::Degenerate(format!(
            "{} distinct values cannot form {k} clusters",
            distinct.len()
        )));
    }
    let n = sorted.len();
    let quantiles = |xs: &[f64]| -> Vec<f64> {
        (0..k)
            .map(|i| xs[(((i as f64 + 0.5) * xs.len() as f64 / k as f64) as usize).min(xs.len() - 1)])
            .collect()
    };
    let mut centroids = quantiles(&sorted);
    if centroids.windows(2).any(|w| w[0] == w[1]) {
        // Heavy repetition collapses seeds; spread them over distinct values.
        centroids = quantiles(&distinct);
    }
    let mut assignment = vec![usize::MAX; n];
    let mut iterations = 0;
    loop {
        iterations += 1;
        let mut changed = false;
        for (a, v) in assignment.iter_mut().zip(&sorted) {
            let mut best = 0;
            for c in 1..k {
                if (v - centroids[c]).abs() < (v - centroids[best]).abs() {
                    best = c;
                }
            }
            if *a != best {
                *a = best;
                changed = true;
            }
        }
        let mut sums = vec![0.0; k];
        let mut counts = vec![0usize; k];
        for (a, v) in assignment.iter().zip(&sorted) {
            sums[*a] += v;
            counts[*a] += 1;
        }
        for c in 0..k {
            if counts[c] > 0 {
                centroids[c] = sums[c] / counts[c] as f64;
            }
        }
        if !changed || iterations >= MAX_ITERATIONS {
            break;
        }
    }
    let mut clusters = vec![Vec::new(); k];
    for (a, v) in assignment.iter().zip(&sorted) {
        clusters[*a].push(*v);
    }
    if clusters.iter().any(Vec::is_empty) {
        return Err(Error::Degenerate("k-means left a cluster empty".into()));
    }
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|a, b| centroids[*a].total_cmp(&centroids[*b]));
    Ok(KMeans1d {
        centroids: order.iter().map(|&c| centroids[c]).collect(),
        clusters: order.iter().map(|&c| clusters[c].clone()).collect(),
        iterations,
    })
}

/// Midpoint between the largest member of the second cluster and the
/// smallest member of the third.
pub fn calibrate_threshold_kmeans(distances: &[f64], k: usize) -> Result<f64> {
    if k < 3 {
        return Err(Error::invalid(format!("the cluster-2/3 seam needs k >= 3, got {k}")));
    }
    let km = kmeans_1d(distances, k)?;
    let upper2 = km.clusters[1].iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lower3 = km.clusters[2].iter().copied().fold(f64::INFINITY, f64::min);
    Ok((upper2 + lower3) / 2.0)
}
