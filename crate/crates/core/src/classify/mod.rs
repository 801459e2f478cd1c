//! Activity classifiers over window features.
//!
//! Four families are available: a Gini decision tree, Euclidean k-NN,
//! Gaussian naive Bayes and softmax gradient-boosted trees. Every family
//! reports a score per label that sums to one.

mod bayes;
mod gbt;
mod knn;
mod metrics;
mod search;
pub mod tree;

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use bayes::NaiveBayesModel;
pub use gbt::{softmax, GbtModel, GbtParams};
pub use knn::KnnModel;
pub use metrics::ConfusionMatrix;
pub use search::{
    cross_validate, randomized_search, stratified_folds, CandidateResult, CvReport, HyperparamSpace, ParamDist,
};

use crate::data::ActivityLabel;
use crate::error::{Error, Result};
use crate::signal::{feature_names, CoordinateSystem, FeatureVector, FEATURE_ORDER_VERSION};
use tree::{grow, presort, Gini, Matrix, Tree, TreeParams};

pub const MODEL_FORMAT: &str = "fallsense-model";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ClassifierFamily {
    #[serde(rename = "DECISION_TREE")]
    DecisionTree,
    #[serde(rename = "KNN")]
    Knn,
    #[serde(rename = "NAIVE_BAYES")]
    NaiveBayes,
    #[serde(rename = "GBT")]
    Gbt,
}

impl ClassifierFamily {
    pub const ALL: [ClassifierFamily; 4] = [
        ClassifierFamily::DecisionTree,
        ClassifierFamily::Knn,
        ClassifierFamily::NaiveBayes,
        ClassifierFamily::Gbt,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ClassifierFamily::DecisionTree => "DECISION_TREE",
            ClassifierFamily::Knn => "KNN",
            ClassifierFamily::NaiveBayes => "NAIVE_BAYES",
            ClassifierFamily::Gbt => "GBT",
        }
    }
}

impl fmt::Display for ClassifierFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ClassifierFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().replace('-', "_").as_str() {
            "DECISION_TREE" | "TREE" => Ok(ClassifierFamily::DecisionTree),
            "KNN" => Ok(ClassifierFamily::Knn),
            "NAIVE_BAYES" | "GNB" => Ok(ClassifierFamily::NaiveBayes),
            "GBT" | "XGBOOST" => Ok(ClassifierFamily::Gbt),
            other => Err(Error::Unknown {
                what: "classifier family",
                value: other.to_string(),
            }),
        }
    }
}

/// A classifier family with validated hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family")]
pub enum ClassifierSpec {
    #[serde(rename = "DECISION_TREE")]
    DecisionTree { max_depth: usize },
    #[serde(rename = "KNN")]
    Knn { k: usize },
    #[serde(rename = "NAIVE_BAYES")]
    NaiveBayes { var_smoothing: f64 },
    #[serde(rename = "GBT")]
    Gbt(GbtParams),
}

impl ClassifierSpec {
    pub fn default_for(family: ClassifierFamily) -> Self {
        match family {
            ClassifierFamily::DecisionTree => ClassifierSpec::DecisionTree { max_depth: 10 },
            ClassifierFamily::Knn => ClassifierSpec::Knn { k: 5 },
            ClassifierFamily::NaiveBayes => ClassifierSpec::NaiveBayes { var_smoothing: 1e-9 },
            ClassifierFamily::Gbt => ClassifierSpec::Gbt(GbtParams::default()),
        }
    }

    pub fn family(&self) -> ClassifierFamily {
        match self {
            ClassifierSpec::DecisionTree { .. } => ClassifierFamily::DecisionTree,
            ClassifierSpec::Knn { .. } => ClassifierFamily::Knn,
            ClassifierSpec::NaiveBayes { .. } => ClassifierFamily::NaiveBayes,
            ClassifierSpec::Gbt(_) => ClassifierFamily::Gbt,
        }
    }

    /// Builds a spec from named values; unnamed parameters take defaults.
    pub fn from_params(family: ClassifierFamily, params: &BTreeMap<String, f64>) -> Result<Self> {
        let mut spec = Self::default_for(family);
        for (name, &value) in params {
            let as_count = || -> Result<usize> {
                if value.fract() != 0.0 || value < 0.0 || !value.is_finite() {
                    return Err(Error::invalid(format!("{name} must be a non-negative integer")));
                }
                Ok(value as usize)
            };
            match (&mut spec, name.as_str()) {
                (ClassifierSpec::DecisionTree { max_depth }, "max_depth") => *max_depth = as_count()?,
                (ClassifierSpec::Knn { k }, "k") => *k = as_count()?,
                (ClassifierSpec::NaiveBayes { var_smoothing }, "var_smoothing") => *var_smoothing = value,
                (ClassifierSpec::Gbt(p), "n_rounds") => p.n_rounds = as_count()?,
                (ClassifierSpec::Gbt(p), "learning_rate") => p.learning_rate = value,
                (ClassifierSpec::Gbt(p), "max_depth") => p.max_depth = as_count()?,
                (ClassifierSpec::Gbt(p), "lambda") => p.lambda = value,
                (ClassifierSpec::Gbt(p), "min_child_weight") => p.min_child_weight = value,
                _ => return Err(Error::invalid(format!("unknown hyperparameter `{name}` for {family}"))),
            }
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn params(&self) -> BTreeMap<String, f64> {
        let mut m = BTreeMap::new();
        match *self {
            ClassifierSpec::DecisionTree { max_depth } => {
                m.insert("max_depth".into(), max_depth as f64);
            }
            ClassifierSpec::Knn { k } => {
                m.insert("k".into(), k as f64);
            }
            ClassifierSpec::NaiveBayes { var_smoothing } => {
                m.insert("var_smoothing".into(), var_smoothing);
            }
            ClassifierSpec::Gbt(p) => {
                m.insert("n_rounds".into(), p.n_rounds as f64);
                m.insert("learning_rate".into(), p.learning_rate);
                m.insert("max_depth".into(), p.max_depth as f64);
                m.insert("lambda".into(), p.lambda);
                m.insert("min_child_weight".into(), p.min_child_weight);
            }
        }
        m
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            ClassifierSpec::DecisionTree { max_depth } => (1..=64).contains(&max_depth),
            ClassifierSpec::Knn { k } => k >= 1,
            ClassifierSpec::NaiveBayes { var_smoothing } => var_smoothing.is_finite() && var_smoothing >= 0.0,
            ClassifierSpec::Gbt(p) => {
                p.learning_rate > 0.0
                    && p.learning_rate <= 1.0
                    && (1..=32).contains(&p.max_depth)
                    && p.lambda.is_finite()
                    && p.lambda >= 0.0
                    && p.min_child_weight.is_finite()
                    && p.min_child_weight >= 0.0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("invalid hyperparameters: {self}")))
        }
    }
}

impl fmt::Display for ClassifierSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let params: Vec<String> = self.params().iter().map(|(k, v)| format!("{k}={v}")).collect();
        write!(f, "{}({})", self.family(), params.join(";"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub system: CoordinateSystem,
    pub version: u32,
    pub names: Vec<String>,
}

impl FeatureConfig {
    pub fn new(system: CoordinateSystem) -> Self {
        FeatureConfig {
            system,
            version: FEATURE_ORDER_VERSION,
            names: feature_names(system),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingDigest {
    pub data_sha256: String,
    pub seed: u64,
}

/// Learned state; class indices refer to `TrainedModel::labels`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "state")]
pub enum ModelParams {
    Constant { class: usize },
    DecisionTree(Tree<Vec<f64>>),
    Knn(KnnModel),
    NaiveBayes(NaiveBayesModel),
    Gbt(GbtModel),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub spec: ClassifierSpec,
    pub feature_config: FeatureConfig,
    pub labels: Vec<ActivityLabel>,
    pub params: ModelParams,
    pub training_digest: TrainingDigest,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub label: ActivityLabel,
    /// Aligned with the model's label list; sums to one.
    pub scores: Vec<f64>,
}

impl Prediction {
    pub fn score(&self) -> f64 {
        self.scores.iter().cloned().fold(0.0, f64::max)
    }
}

pub fn train(
    spec: &ClassifierSpec,
    features: &[FeatureVector],
    labels: &[ActivityLabel],
    seed: u64,
) -> Result<TrainedModel> {
    spec.validate()?;
    if features.is_empty() {
        return Err(Error::invalid("no training data"));
    }
    if features.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: features.len(),
            right: labels.len(),
        });
    }
    let system = features[0].system;
    if features.iter().any(|f| f.system != system) {
        return Err(Error::invalid("training features mix coordinate systems"));
    }
    if features.iter().any(|f| f.values.iter().any(|v| !v.is_finite())) {
        return Err(Error::invalid("training features contain NaN or infinity"));
    }
    let mut classes_present: Vec<ActivityLabel> = labels.to_vec();
    classes_present.sort();
    classes_present.dedup();
    let class_of: Vec<usize> = labels
        .iter()
        .map(|l| classes_present.binary_search(l).unwrap())
        .collect();
    let rows: Vec<Vec<f64>> = features.iter().map(|f| f.values.to_vec()).collect();
    let k = classes_present.len();

    let params = if k == 1 {
        ModelParams::Constant { class: 0 }
    } else {
        match *spec {
            ClassifierSpec::DecisionTree { max_depth } => {
                let x = Matrix::new(&rows);
                let crit = Gini {
                    classes: &class_of,
                    n_classes: k,
                };
                ModelParams::DecisionTree(grow(&crit, x, presort(x), &TreeParams { max_depth }))
            }
            ClassifierSpec::Knn { k: neighbours } => ModelParams::Knn(KnnModel::fit(&rows, &class_of, neighbours)),
            ClassifierSpec::NaiveBayes { var_smoothing } => {
                ModelParams::NaiveBayes(NaiveBayesModel::fit(&rows, &class_of, k, var_smoothing))
            }
            ClassifierSpec::Gbt(p) => ModelParams::Gbt(GbtModel::fit(&rows, &class_of, k, &p)),
        }
    };

    Ok(TrainedModel {
        spec: *spec,
        feature_config: FeatureConfig::new(system),
        labels: classes_present,
        params,
        training_digest: TrainingDigest {
            data_sha256: digest_training(features, labels),
            seed,
        },
    })
}

/// SHA-256 over the little-endian feature bytes and label names.
pub fn digest_training(features: &[FeatureVector], labels: &[ActivityLabel]) -> String {
    let mut h = Sha256::new();
    for (f, l) in features.iter().zip(labels) {
        h.update(f.system.as_str().as_bytes());
        for v in f.values {
            h.update(v.to_le_bytes());
        }
        h.update(l.as_str().as_bytes());
        h.update(b"\n");
    }
    hex::encode(h.finalize())
}

impl TrainedModel {
    pub fn predict(&self, fv: &FeatureVector) -> Result<Prediction> {
        predict(self, fv)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct File<'a> {
            format: &'a str,
            version: u32,
            #[serde(flatten)]
            model: &'a TrainedModel,
        }
        let mut s = serde_json::to_string_pretty(&File {
            format: MODEL_FORMAT,
            version: MODEL_VERSION,
            model: self,
        })
        .expect("model serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::Model(e.to_string()))?;
        if value.get("format").and_then(|v| v.as_str()) != Some(MODEL_FORMAT) {
            return Err(Error::Model(format!("not a {MODEL_FORMAT} file")));
        }
        match value.get("version").and_then(|v| v.as_u64()) {
            Some(v) if v == MODEL_VERSION as u64 => {}
            other => {
                return Err(Error::Model(format!(
                    "unsupported model version {other:?}; supported: {MODEL_VERSION}"
                )))
            }
        }
        let model: TrainedModel = serde_json::from_value(value).map_err(|e| Error::Model(e.to_string()))?;
        model.check()?;
        Ok(model)
    }

    fn check(&self) -> Result<()> {
        self.spec.validate()?;
        if self.feature_config.version != FEATURE_ORDER_VERSION
            || self.feature_config.names != feature_names(self.feature_config.system)
        {
            return Err(Error::Model(format!(
                "feature order version {} is not supported",
                self.feature_config.version
            )));
        }
        let k = self.labels.len();
        let consistent = match &self.params {
            ModelParams::Constant { class } => *class < k,
            ModelParams::DecisionTree(t) => t.nodes.iter().all(|n| match n {
                tree::Node::Leaf(v) => v.len() == k,
                tree::Node::Split { left, right, .. } => *left < t.nodes.len() && *right < t.nodes.len(),
            }),
            ModelParams::Knn(m) => m.classes.iter().all(|&c| c < k) && !m.points.is_empty(),
            ModelParams::NaiveBayes(m) => m.log_priors.len() == k,
            ModelParams::Gbt(m) => m.base.len() == k && m.rounds.iter().all(|r| r.len() == k),
        };
        if k == 0 || !consistent {
            return Err(Error::Model("model parameters do not match its labels".into()));
        }
        Ok(())
    }
}

pub fn predict(model: &TrainedModel, fv: &FeatureVector) -> Result<Prediction> {
    if fv.system != model.feature_config.system {
        return Err(Error::FeatureMismatch {
            expected: model.feature_config.system.to_string(),
            actual: fv.system.to_string(),
        });
    }
    let k = model.labels.len();
    let x = &fv.values[..];
    let scores = match &model.params {
        ModelParams::Constant { class } => {
            let mut s = vec![0.0; k];
            s[*class] = 1.0;
            s
        }
        ModelParams::DecisionTree(t) => t.leaf(x).clone(),
        ModelParams::Knn(m) => m.votes(x, k),
        ModelParams::NaiveBayes(m) => m.predict_proba(x),
        ModelParams::Gbt(m) => m.predict_proba(x),
    };
    let mut best = 0;
    for (i, s) in scores.iter().enumerate() {
        if *s > scores[best] {
            best = i;
        }
    }
    Ok(Prediction {
        label: model.labels[best],
        scores,
    })
}

/// Confusion matrix of a model over a labelled validation set.
pub fn evaluate(model: &TrainedModel, features: &[FeatureVector], truth: &[ActivityLabel]) -> Result<ConfusionMatrix> {
    if features.is_empty() {
        return Err(Error::invalid("empty validation set"));
    }
    if features.len() != truth.len() {
        return Err(Error::LengthMismatch {
            left: features.len(),
            right: truth.len(),
        });
    }
    let mut labels: Vec<ActivityLabel> = model.labels.clone();
    labels.extend_from_slice(truth);
    labels.sort();
    labels.dedup();
    let mut cm = ConfusionMatrix::new(labels);
    for (f, t) in features.iter().zip(truth) {
        cm.add(*t, predict(model, f)?.label);
    }
    Ok(cm)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fv(values: &[f64]) -> FeatureVector {
        let mut v = [0.0; 18];
        v[..values.len()].copy_from_slice(values);
        FeatureVector {
            system: CoordinateSystem::Cartesian,
            values: v,
        }
    }

    #[test]
    fn single_class_gives_constant_model() {
        let feats = vec![fv(&[1.0]), fv(&[2.0])];
        let labels = vec![ActivityLabel::Run; 2];
        for family in ClassifierFamily::ALL {
            let m = train(&ClassifierSpec::default_for(family), &feats, &labels, 0).unwrap();
            let p = m.predict(&fv(&[99.0])).unwrap();
            assert_eq!(p.label, ActivityLabel::Run);
            assert_eq!(p.scores, vec![1.0]);
        }
        assert!(train(&ClassifierSpec::default_for(ClassifierFamily::Knn), &[], &[], 0).is_err());
    }

    #[test]
    fn knn_one_recovers_training_labels() {
        let feats: Vec<FeatureVector> = (0..20).map(|i| fv(&[i as f64, (i * i) as f64])).collect();
        let labels: Vec<ActivityLabel> = (0..20).map(|i| ActivityLabel::ALL[i % 3]).collect();
        let m = train(&ClassifierSpec::Knn { k: 1 }, &feats, &labels, 0).unwrap();
        for (f, l) in feats.iter().zip(&labels) {
            assert_eq!(m.predict(f).unwrap().label, *l);
        }
    }

    #[test]
    fn tree_separates_one_threshold() {
        // feature 0 < 0 exactly for class WALK
        let feats: Vec<FeatureVector> = (-10..10).map(|i| fv(&[i as f64 + 0.5, ((i * 7) % 5) as f64])).collect();
        let labels: Vec<ActivityLabel> = feats
            .iter()
            .map(|f| {
                if f.values[0] < 0.0 {
                    ActivityLabel::Walk
                } else {
                    ActivityLabel::Sit
                }
            })
            .collect();
        let m = train(&ClassifierSpec::DecisionTree { max_depth: 3 }, &feats, &labels, 0).unwrap();
        let cm = evaluate(&m, &feats, &labels).unwrap();
        assert_eq!(cm.accuracy(), 1.0);
    }

    #[test]
    fn gnb_prefers_own_mean() {
        let mut feats = Vec::new();
        let mut labels = Vec::new();
        for i in 0..10 {
            feats.push(fv(&[i as f64 * 0.1]));
            labels.push(ActivityLabel::Stand);
            feats.push(fv(&[100.0 + i as f64 * 0.1]));
            labels.push(ActivityLabel::Run);
        }
        let m = train(&ClassifierSpec::NaiveBayes { var_smoothing: 1e-9 }, &feats, &labels, 0).unwrap();
        assert_eq!(m.predict(&fv(&[0.45])).unwrap().label, ActivityLabel::Stand);
        assert_eq!(m.predict(&fv(&[100.45])).unwrap().label, ActivityLabel::Run);
    }

    #[test]
    fn mismatched_system_rejected() {
        let feats = vec![fv(&[0.0]), fv(&[1.0])];
        let labels = vec![ActivityLabel::Walk, ActivityLabel::Run];
        let m = train(&ClassifierSpec::Knn { k: 1 }, &feats, &labels, 0).unwrap();
        let mut other = fv(&[0.0]);
        other.system = CoordinateSystem::Spherical;
        assert!(matches!(m.predict(&other), Err(Error::FeatureMismatch { .. })));
    }

    #[test]
    fn spec_params_round_trip() {
        for family in ClassifierFamily::ALL {
            let spec = ClassifierSpec::default_for(family);
            assert_eq!(ClassifierSpec::from_params(family, &spec.params()).unwrap(), spec);
        }
        let mut bad = BTreeMap::new();
        bad.insert("k".to_string(), 0.0);
        assert!(ClassifierSpec::from_params(ClassifierFamily::Knn, &bad).is_err());
        bad.insert("depth".to_string(), 1.0);
        assert!(ClassifierSpec::from_params(ClassifierFamily::Knn, &bad).is_err());
    }

    #[test]
    fn model_file_rejects_other_versions() {
        let feats = vec![fv(&[0.0]), fv(&[1.0])];
        let labels = vec![ActivityLabel::Walk, ActivityLabel::Run];
        let m = train(&ClassifierSpec::DecisionTree { max_depth: 2 }, &feats, &labels, 3).unwrap();
        let text = m.to_json();
        assert_eq!(TrainedModel::from_json(&text).unwrap(), m);
        let bumped = text.replace("\"version\": 1", "\"version\": 7");
        assert!(TrainedModel::from_json(&bumped).is_err());
    }
}
