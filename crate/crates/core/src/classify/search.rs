//! Randomized hyperparameter search scored by stratified k-fold CV.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{evaluate, train, ClassifierFamily, ClassifierSpec};
use crate::data::ActivityLabel;
use crate::error::{Error, Result};
use crate::signal::FeatureVector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ParamDist {
    Fixed(f64),
    /// `lo, lo+step, …, ≤ hi`
    Int {
        lo: i64,
        hi: i64,
        step: i64,
    },
    Uniform {
        lo: f64,
        hi: f64,
    },
    LogUniform {
        lo: f64,
        hi: f64,
    },
}

impl ParamDist {
    fn is_empty(&self) -> bool {
        match *self {
            ParamDist::Fixed(v) => !v.is_finite(),
            ParamDist::Int { lo, hi, step } => step <= 0 || lo > hi,
            ParamDist::Uniform { lo, hi } => lo.is_nan() || hi.is_nan() || lo > hi,
            ParamDist::LogUniform { lo, hi } => !(lo > 0.0 && lo <= hi),
        }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        match *self {
            ParamDist::Fixed(v) => v,
            ParamDist::Int { lo, hi, step } => {
                let n = (hi - lo) / step;
                (lo + step * rng.random_range(0..=n)) as f64
            }
            ParamDist::Uniform { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
            ParamDist::LogUniform { lo, hi } => (lo.ln() + (hi.ln() - lo.ln()) * rng.random::<f64>()).exp(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperparamSpace {
    pub family: ClassifierFamily,
    pub params: BTreeMap<String, ParamDist>,
}

impl HyperparamSpace {
    /// Documented default search ranges per family.
    pub fn default_for(family: ClassifierFamily) -> Self {
        let mut params = BTreeMap::new();
        match family {
            ClassifierFamily::DecisionTree => {
                params.insert("max_depth".into(), ParamDist::Int { lo: 2, hi: 20, step: 1 });
            }
            ClassifierFamily::Knn => {
                params.insert("k".into(), ParamDist::Int { lo: 1, hi: 25, step: 2 });
            }
            ClassifierFamily::NaiveBayes => {
                params.insert("var_smoothing".into(), ParamDist::LogUniform { lo: 1e-12, hi: 1e-6 });
            }
            ClassifierFamily::Gbt => {
                params.insert(
                    "n_rounds".into(),
                    ParamDist::Int {
                        lo: 20,
                        hi: 300,
                        step: 1,
                    },
                );
                params.insert("learning_rate".into(), ParamDist::Uniform { lo: 0.05, hi: 0.3 });
                params.insert("max_depth".into(), ParamDist::Int { lo: 2, hi: 6, step: 1 });
            }
        }
        HyperparamSpace { family, params }
    }

    /// The one-point space of a fixed spec.
    pub fn fixed(spec: &ClassifierSpec) -> Self {
        HyperparamSpace {
            family: spec.family(),
            params: spec
                .params()
                .into_iter()
                .map(|(k, v)| (k, ParamDist::Fixed(v)))
                .collect(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.params.values().any(ParamDist::is_empty)
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> Result<ClassifierSpec> {
        let values: BTreeMap<String, f64> = self.params.iter().map(|(k, d)| (k.clone(), d.sample(rng))).collect();
        ClassifierSpec::from_params(self.family, &values)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateResult {
    pub spec: ClassifierSpec,
    pub fold_accuracy: Vec<f64>,
    pub mean_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub family: ClassifierFamily,
    pub folds: usize,
    pub seed: u64,
    pub candidates: Vec<CandidateResult>,
    /// Index into `candidates`; the first candidate wins ties.
    pub best: usize,
}

impl CvReport {
    pub fn best_spec(&self) -> &ClassifierSpec {
        &self.candidates[self.best].spec
    }

    pub fn best_accuracy(&self) -> f64 {
        self.candidates[self.best].mean_accuracy
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("candidate,family,params");
        for f in 1..=self.folds {
            out.push_str(&format!(",fold_{f}"));
        }
        out.push_str(",mean_accuracy,best\n");
        for (i, c) in self.candidates.iter().enumerate() {
            let params: Vec<String> = c.spec.params().iter().map(|(k, v)| format!("{k}={v}")).collect();
            out.push_str(&format!("{i},{},{}", c.spec.family(), params.join(";")));
            for a in &c.fold_accuracy {
                out.push_str(&format!(",{a}"));
            }
            out.push_str(&format!(",{},{}\n", c.mean_accuracy, u8::from(i == self.best)));
        }
        out
    }
}

/// Fold index per item. Each label's items are shuffled and dealt
/// round-robin, continuing the deal across labels.
pub fn stratified_folds(labels: &[ActivityLabel], folds: usize, seed: u64) -> Vec<usize> {
    let mut by_label: BTreeMap<ActivityLabel, Vec<usize>> = BTreeMap::new();
    for (i, l) in labels.iter().enumerate() {
        by_label.entry(*l).or_default().push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment = vec![0; labels.len()];
    let mut dealt = 0usize;
    for (_, mut items) in by_label {
        items.shuffle(&mut rng);
        for i in items {
            assignment[i] = dealt % folds;
            dealt += 1;
        }
    }
    assignment
}

fn check_cv(n: usize, folds: usize) -> Result<()> {
    if folds < 2 {
        return Err(Error::invalid("cross-validation needs at least 2 folds"));
    }
    if n < folds {
        return Err(Error::invalid(format!("{n} items cannot fill {folds} folds")));
    }
    Ok(())
}

fn cv_with_assignment(
    spec: &ClassifierSpec,
    features: &[FeatureVector],
    labels: &[ActivityLabel],
    assignment: &[usize],
    folds: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    (0..folds)
        .map(|fold| {
            let (mut tf, mut tl, mut vf, mut vl) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
            for ((f, l), &a) in features.iter().zip(labels).zip(assignment) {
                if a == fold {
                    vf.push(*f);
                    vl.push(*l);
                } else {
                    tf.push(*f);
                    tl.push(*l);
                }
            }
            let model = train(spec, &tf, &tl, seed)?;
            Ok(evaluate(&model, &vf, &vl)?.accuracy())
        })
        .collect()
}

/// Per-fold validation accuracy of one spec.
pub fn cross_validate(
    spec: &ClassifierSpec,
    features: &[FeatureVector],
    labels: &[ActivityLabel],
    folds: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    check_cv(features.len(), folds)?;
    let assignment = stratified_folds(labels, folds, seed);
    cv_with_assignment(spec, features, labels, &assignment, folds, seed)
}

/// Samples `iterations` specs from `space` and scores each by k-fold CV.
/// All candidates share one fold assignment.
pub fn randomized_search(
    space: &HyperparamSpace,
    features: &[FeatureVector],
    labels: &[ActivityLabel],
    folds: usize,
    iterations: usize,
    seed: u64,
) -> Result<CvReport> {
    if space.is_empty() {
        return Err(Error::invalid("hyperparameter space is empty"));
    }
    if iterations == 0 {
        return Err(Error::invalid("iterations must be at least 1"));
    }
    if features.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: features.len(),
            right: labels.len(),
        });
    }
    check_cv(features.len(), folds)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let specs: Vec<ClassifierSpec> = (0..iterations).map(|_| space.sample(&mut rng)).collect::<Result<_>>()?;
    let assignment = stratified_folds(labels, folds, seed);
    let candidates: Vec<CandidateResult> = specs
        .par_iter()
        .map(|spec| {
            let fold_accuracy = cv_with_assignment(spec, features, labels, &assignment, folds, seed)?;
            let mean_accuracy = fold_accuracy.iter().sum::<f64>() / folds as f64;
            Ok(CandidateResult {
                spec: *spec,
                fold_accuracy,
                mean_accuracy,
            })
        })
        .collect::<Result<_>>()?;
    let mut best = 0;
    for (i, c) in candidates.iter().enumerate() {
        if c.mean_accuracy > candidates[best].mean_accuracy {
            best = i;
        }
    }
    Ok(CvReport {
        family: space.family,
        folds,
        seed,
        candidates,
        best,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::CoordinateSystem;

    fn toy() -> (Vec<FeatureVector>, Vec<ActivityLabel>) {
        let mut feats = Vec::new();
        let mut labels = Vec::new();
        for i in 0..30 {
            let mut v = [0.0; 18];
            v[0] = (i % 3) as f64 * 5.0 + (i as f64 * 0.37).sin();
            v[1] = (i as f64 * 1.3).cos();
            feats.push(FeatureVector {
                system: CoordinateSystem::Cartesian,
                values: v,
            });
            labels.push(ActivityLabel::ALL[i % 3]);
        }
        (feats, labels)
    }

    #[test]
    fn folds_are_stratified_partition() {
        let (_, labels) = toy();
        let a = stratified_folds(&labels, 5, 4);
        for fold in 0..5 {
            for l in &ActivityLabel::ALL[..3] {
                let n = a.iter().zip(&labels).filter(|(f, x)| **f == fold && *x == l).count();
                assert_eq!(n, 2);
            }
        }
    }

    #[test]
    fn single_iteration_and_determinism() {
        let (f, l) = toy();
        let space = HyperparamSpace::default_for(ClassifierFamily::Knn);
        let r = randomized_search(&space, &f, &l, 5, 1, 9).unwrap();
        assert_eq!(r.candidates.len(), 1);
        let r1 = randomized_search(&space, &f, &l, 5, 6, 9).unwrap();
        let r2 = randomized_search(&space, &f, &l, 5, 6, 9).unwrap();
        assert_eq!(r1, r2);
        assert_eq!(r1.to_csv(), r2.to_csv());
    }

    #[test]
    fn one_point_space_equals_plain_cv() {
        let (f, l) = toy();
        let spec = ClassifierSpec::DecisionTree { max_depth: 3 };
        let r = randomized_search(&HyperparamSpace::fixed(&spec), &f, &l, 5, 3, 2).unwrap();
        let plain = cross_validate(&spec, &f, &l, 5, 2).unwrap();
        let mean = plain.iter().sum::<f64>() / 5.0;
        assert!(r.candidates.iter().all(|c| c.mean_accuracy == mean));
        assert_eq!(r.best, 0);
    }

    #[test]
    fn empty_space_rejected() {
        let (f, l) = toy();
        let mut space = HyperparamSpace::default_for(ClassifierFamily::Knn);
        space
            .params
            .insert("k".into(), ParamDist::Int { lo: 5, hi: 1, step: 1 });
        assert!(randomized_search(&space, &f, &l, 5, 1, 0).is_err());
        assert!(randomized_search(&HyperparamSpace::default_for(ClassifierFamily::Knn), &f, &l, 1, 1, 0).is_err());
    }
}
