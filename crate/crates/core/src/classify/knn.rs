use serde::{Deserialize, Serialize};

/// Brute-force Euclidean k-nearest-neighbour vote.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub k: usize,
    pub points: Vec<Vec<f64>>,
    pub classes: Vec<usize>,
}

impl KnnModel {
    pub fn fit(rows: &[Vec<f64>], classes: &[usize], k: usize) -> Self {
        KnnModel {
            k,
            points: rows.to_vec(),
            classes: classes.to_vec(),
        }
    }

    /// Vote fractions over `n_classes`. Equal distances resolve to the
    /// earlier training point.
    pub fn votes(&self, x: &[f64], n_classes: usize) -> Vec<f64> {
        let mut d: Vec<(f64, usize)> = self
            .points
            .iter()
            .enumerate()
            .map(|(i, p)| (squared_distance(p, x), i))
            .collect();
        let k = self.k.min(d.len()).max(1);
        let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if k < d.len() {
            d.select_nth_unstable_by(k - 1, cmp);
        }
        let mut votes = vec![0.0; n_classes];
        for &(_, i) in &d[..k] {
            votes[self.classes[i]] += 1.0;
        }
        votes.iter_mut().for_each(|v| *v /= k as f64);
        votes
    }
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}
