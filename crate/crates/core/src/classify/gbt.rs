//! Multiclass gradient-boosted regression trees with a softmax objective.
//!
//! Each round fits one tree per class to the first and second derivatives of
//! the softmax cross-entropy, all taken from the scores at the start of the
//! round. Raw scores start at the log class priors, so a model with zero
//! rounds predicts the prior.

use serde::{Deserialize, Serialize};

use super::tree::{grow, presort, Matrix, Newton, Tree, TreeParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GbtParams {
    pub n_rounds: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub lambda: f64,
    pub min_child_weight: f64,
}

impl Default for GbtParams {
    fn default() -> Self {
        GbtParams {
            n_rounds: 100,
            learning_rate: 0.1,
            max_depth: 4,
            lambda: 1.0,
            min_child_weight: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbtModel {
    pub base: Vec<f64>,
    /// `rounds[r][k]` is the class-`k` tree of round `r`.
    pub rounds: Vec<Vec<Tree<f64>>>,
}

impl GbtModel {
    pub fn fit(rows: &[Vec<f64>], classes: &[usize], n_classes: usize, params: &GbtParams) -> Self {
        let n = rows.len();
        let mut counts = vec![0.0; n_classes];
        for &c in classes {
            counts[c] += 1.0;
        }
        let base: Vec<f64> = counts
            .iter()
            .map(|c| if *c > 0.0 { (c / n as f64).ln() } else { -30.0 })
            .collect();
        let x = Matrix::new(rows);
        let sorted = presort(x);
        let mut raw: Vec<Vec<f64>> = vec![base.clone(); n];
        let mut rounds = Vec::with_capacity(params.n_rounds);
        let mut grad = vec![0.0; n];
        let mut hess = vec![0.0; n];
        for _ in 0..params.n_rounds {
            let probs: Vec<Vec<f64>> = raw.iter().map(|r| softmax(r)).collect();
            let mut trees = Vec::with_capacity(n_classes);
            for k in 0..n_classes {
                for (i, row) in probs.iter().enumerate() {
                    let p = row[k];
                    let y = if classes[i] == k { 1.0 } else { 0.0 };
                    grad[i] = p - y;
                    hess[i] = (p * (1.0 - p)).max(1e-16);
                }
                let crit = Newton {
                    grad: &grad,
                    hess: &hess,
                    lambda: params.lambda,
                    min_child_weight: params.min_child_weight,
                    learning_rate: params.learning_rate,
                };
                let tree = grow(
                    &crit,
                    x,
                    sorted.clone(),
                    &TreeParams {
                        max_depth: params.max_depth,
                    },
                );
                trees.push(tree);
            }
            for (i, r) in raw.iter_mut().enumerate() {
                for (k, t) in trees.iter().enumerate() {
                    r[k] += t.leaf(&rows[i]);
                }
            }
            rounds.push(trees);
        }
        GbtModel { base, rounds }
    }

    pub fn raw_scores(&self, x: &[f64]) -> Vec<f64> {
        let mut s = self.base.clone();
        for trees in &self.rounds {
            for (k, t) in trees.iter().enumerate() {
                s[k] += t.leaf(x);
            }
        }
        s
    }

    pub fn predict_proba(&self, x: &[f64]) -> Vec<f64> {
        softmax(&self.raw_scores(x))
    }
}

pub fn softmax(z: &[f64]) -> Vec<f64> {
    let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.iter().map(|v| v / s).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_rounds_predicts_prior() {
        let rows = vec![vec![0.0], vec![1.0], vec![2.0], vec![3.0], vec![4.0]];
        let classes = vec![1, 1, 1, 0, 2];
        let m = GbtModel::fit(
            &rows,
            &classes,
            3,
            &GbtParams {
                n_rounds: 0,
                ..GbtParams::default()
            },
        );
        let p = m.predict_proba(&[10.0]);
        assert!((p[0] - 0.2).abs() < 1e-12);
        assert!((p[1] - 0.6).abs() < 1e-12);
    }

    #[test]
    fn separable_data_is_learned() {
        let rows: Vec<Vec<f64>> = (0..60).map(|i| vec![i as f64, (i % 7) as f64]).collect();
        let classes: Vec<usize> = (0..60).map(|i| i / 20).collect();
        let m = GbtModel::fit(
            &rows,
            &classes,
            3,
            &GbtParams {
                n_rounds: 30,
                learning_rate: 0.3,
                max_depth: 3,
                ..GbtParams::default()
            },
        );
        for (r, &c) in rows.iter().zip(&classes) {
            let p = m.predict_proba(r);
            let best = p.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
            assert_eq!(best, c);
        }
    }
}
