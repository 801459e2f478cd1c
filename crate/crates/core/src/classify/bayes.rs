use serde::{Deserialize, Serialize};

use super::gbt::softmax;

/// Gaussian naive Bayes. Every per-class variance is inflated by
/// `var_smoothing` times the largest feature variance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NaiveBayesModel {
    pub log_priors: Vec<f64>,
    pub means: Vec<Vec<f64>>,
    pub variances: Vec<Vec<f64>>,
}

impl NaiveBayesModel {
    pub fn fit(rows: &[Vec<f64>], classes: &[usize], n_classes: usize, var_smoothing: f64) -> Self {
        let d = rows.first().map_or(0, Vec::len);
        let n = rows.len() as f64;
        let mut counts = vec![0.0; n_classes];
        let mut means = vec![vec![0.0; d]; n_classes];
        for (r, &c) in rows.iter().zip(classes) {
            counts[c] += 1.0;
            for (m, v) in means[c].iter_mut().zip(r) {
                *m += v;
            }
        }
        for (m, c) in means.iter_mut().zip(&counts) {
            if *c > 0.0 {
                m.iter_mut().for_each(|v| *v /= c);
            }
        }
        let mut variances = vec![vec![0.0; d]; n_classes];
        for (r, &c) in rows.iter().zip(classes) {
            for j in 0..d {
                let dv = r[j] - means[c][j];
                variances[c][j] += dv * dv;
            }
        }
        let global_max = (0..d)
            .map(|j| {
                let m = rows.iter().map(|r| r[j]).sum::<f64>() / n;
                rows.iter().map(|r| (r[j] - m) * (r[j] - m)).sum::<f64>() / n
            })
            .fold(0.0, f64::max);
        let epsilon = if global_max > 0.0 {
            var_smoothing * global_max
        } else {
            var_smoothing.max(f64::MIN_POSITIVE)
        };
        for (v, c) in variances.iter_mut().zip(&counts) {
            for x in v.iter_mut() {
                *x = if *c > 0.0 { *x / c } else { 0.0 } + epsilon;
            }
        }
        let log_priors = counts
            .iter()
            .map(|c| if *c > 0.0 { (c / n).ln() } else { -1.0e300 })
            .collect();
        NaiveBayesModel {
            log_priors,
            means,
            variances,
        }
    }

    pub fn predict_proba(&self, x: &[f64]) -> Vec<f64> {
        let joint: Vec<f64> = (0..self.log_priors.len())
            .map(|c| {
                let mut ll = self.log_priors[c];
                for ((v, m), var) in x.iter().zip(&self.means[c]).zip(&self.variances[c]) {
                    ll -= 0.5 * ((2.0 * std::f64::consts::PI * var).ln() + (v - m) * (v - m) / var);
                }
                ll
            })
            .collect();
        softmax(&joint)
    }
}
