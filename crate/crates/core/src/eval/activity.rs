//! Location × coordinate system × classifier accuracy grid.

use rayon::prelude::*;
use serde::Serialize;

use crate::classify::{
    evaluate, randomized_search, train, ClassifierFamily, ClassifierSpec, ConfusionMatrix, HyperparamSpace,
};
use crate::data::{split_train_validation, ActivityLabel, BodyLocation, Dataset};
use crate::error::{Error, Result};
use crate::signal::{extract_features, segment_windows, CoordinateSystem, FeatureVector, WINDOW_LEN};

#[derive(Debug, Clone, PartialEq)]
pub struct LabelledFeatures {
    pub features: Vec<FeatureVector>,
    pub labels: Vec<ActivityLabel>,
    /// Source recording of each window.
    pub recordings: Vec<String>,
    pub starts: Vec<usize>,
}

impl LabelledFeatures {
    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }
}

/// Windows of every activity recording at `location` (all locations when
/// `None`), in dataset order.
pub fn activity_features(
    ds: &Dataset,
    location: Option<BodyLocation>,
    system: CoordinateSystem,
    window_len: usize,
    stride: usize,
) -> Result<LabelledFeatures> {
    let mut out = LabelledFeatures {
        features: Vec::new(),
        labels: Vec::new(),
        recordings: Vec::new(),
        starts: Vec::new(),
    };
    for r in &ds.recordings {
        let Some(label) = r.label.activity() else { continue };
        if location.is_some_and(|l| l != r.location) {
            continue;
        }
        for w in segment_windows(r, window_len, stride)? {
            out.features.push(extract_features(&w, system));
            out.labels.push(label);
            out.recordings.push(w.recording);
            out.starts.push(w.start);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActivityEvalConfig {
    pub locations: Vec<BodyLocation>,
    pub systems: Vec<CoordinateSystem>,
    pub families: Vec<ClassifierFamily>,
    pub stride: usize,
    /// Share of each label's recordings used for training.
    pub train_ratio: f64,
    pub folds: usize,
    /// Random-search draws per cell; 0 trains the family defaults.
    pub iterations: usize,
    pub seed: u64,
}

impl Default for ActivityEvalConfig {
    fn default() -> Self {
        ActivityEvalConfig {
            locations: BodyLocation::ALL.to_vec(),
            systems: CoordinateSystem::ALL.to_vec(),
            families: ClassifierFamily::ALL.to_vec(),
            stride: 50,
            train_ratio: 0.7,
            folds: 5,
            iterations: 10,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CellOutcome {
    Present {
        accuracy: f64,
        cv_accuracy: Option<f64>,
        spec: ClassifierSpec,
        train_windows: usize,
        confusion: ConfusionMatrix,
    },
    Absent {
        reason: String,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActivityCell {
    pub location: BodyLocation,
    pub system: CoordinateSystem,
    pub family: ClassifierFamily,
    pub outcome: CellOutcome,
}

impl ActivityCell {
    pub fn accuracy(&self) -> Option<f64> {
        match self.outcome {
            CellOutcome::Present { accuracy, .. } => Some(accuracy),
            CellOutcome::Absent { .. } => None,
        }
    }

    /// File stem for this cell's confusion matrix.
    pub fn stem(&self) -> String {
        format!("confusion_{}_{}_{}", self.location, self.system.as_str(), self.family).to_ascii_lowercase()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActivityReport {
    pub cells: Vec<ActivityCell>,
}

#[derive(Serialize)]
struct CellSummary<'a> {
    location: BodyLocation,
    system: CoordinateSystem,
    family: ClassifierFamily,
    accuracy: Option<f64>,
    spec: Option<&'a ClassifierSpec>,
    absent: Option<&'a str>,
}

impl ActivityReport {
    pub fn is_complete(&self) -> bool {
        self.cells.iter().all(|c| c.accuracy().is_some())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("location,coordinates,classifier,accuracy,cv_accuracy,train_windows,params\n");
        for c in &self.cells {
            let head = format!("{},{},{}", c.location, c.system.as_str(), c.family);
            match &c.outcome {
                CellOutcome::Present {
                    accuracy,
                    cv_accuracy,
                    spec,
                    train_windows,
                    ..
                } => {
                    let params: Vec<String> = spec.params().iter().map(|(k, v)| format!("{k}={v}")).collect();
                    out.push_str(&format!(
                        "{head},{:.2},{},{train_windows},{}\n",
                        accuracy * 100.0,
                        cv_accuracy.map_or(String::new(), |a| format!("{:.2}", a * 100.0)),
                        params.join(";")
                    ));
                }
                CellOutcome::Absent { reason } => {
                    out.push_str(&format!("{head},absent,,,{}\n", reason.replace(',', ";")))
                }
            }
        }
        out
    }

    /// Accuracy grid: one row per location and coordinate system, one
    /// column per classifier.
    pub fn to_table(&self) -> String {
        let mut families: Vec<ClassifierFamily> = Vec::new();
        let mut rows: Vec<(BodyLocation, CoordinateSystem)> = Vec::new();
        for c in &self.cells {
            if !families.contains(&c.family) {
                families.push(c.family);
            }
            if !rows.contains(&(c.location, c.system)) {
                rows.push((c.location, c.system));
            }
        }
        let mut table = vec![["location".to_string(), "coordinates".to_string()]
            .into_iter()
            .chain(families.iter().map(|f| f.to_string()))
            .collect::<Vec<_>>()];
        for (loc, sys) in rows {
            let mut r = vec![loc.to_string(), sys.as_str().to_string()];
            for f in &families {
                let cell = self
                    .cells
                    .iter()
                    .find(|c| c.location == loc && c.system == sys && c.family == *f);
                r.push(match cell.and_then(ActivityCell::accuracy) {
                    Some(a) => format!("{:.2}", a * 100.0),
                    None => "absent".into(),
                });
            }
            table.push(r);
        }
        super::aligned(&table)
    }

    pub fn to_json(&self) -> String {
        let cells: Vec<CellSummary> = self
            .cells
            .iter()
            .map(|c| CellSummary {
                location: c.location,
                system: c.system,
                family: c.family,
                accuracy: c.accuracy(),
                spec: match &c.outcome {
                    CellOutcome::Present { spec, .. } => Some(spec),
                    CellOutcome::Absent { .. } => None,
                },
                absent: match &c.outcome {
                    CellOutcome::Absent { reason } => Some(reason),
                    CellOutcome::Present { .. } => None,
                },
            })
            .collect();
        serde_json::to_string_pretty(&cells).expect("report serializes")
    }
}

/// Runs every (location, system, family) cell. Recordings are split per
/// label before windowing so overlapping windows never straddle the split.
pub fn eval_activity(ds: &Dataset, cfg: &ActivityEvalConfig) -> Result<ActivityReport> {
    if ds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut jobs = Vec::new();
    for &location in &cfg.locations {
        for &system in &cfg.systems {
            for &family in &cfg.families {
                jobs.push((location, system, family));
            }
        }
    }
    let cells = jobs
        .par_iter()
        .map(|&(location, system, family)| {
            let outcome = match run_cell(ds, location, system, family, cfg) {
                Ok(o) => o,
                Err(e @ (Error::EmptyDataset | Error::InvalidArgument(_) | Error::Degenerate(_))) => {
                    log::warn!("{location}/{}/{family}: {e}", system.as_str());
                    CellOutcome::Absent { reason: e.to_string() }
                }
                Err(e) => return Err(e),
            };
            Ok(ActivityCell {
                location,
                system,
                family,
                outcome,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ActivityReport { cells })
}

fn run_cell(
    ds: &Dataset,
    location: BodyLocation,
    system: CoordinateSystem,
    family: ClassifierFamily,
    cfg: &ActivityEvalConfig,
) -> Result<CellOutcome> {
    let here = Dataset::new(
        ds.recordings
            .iter()
            .filter(|r| r.location == location && r.label.activity().is_some())
            .cloned()
            .collect(),
        ds.provenance.clone(),
    );
    if here.is_empty() {
        return Ok(CellOutcome::Absent {
            reason: format!("no activity recordings at {location}"),
        });
    }
    let (train_ds, valid_ds) = split_train_validation(&here, cfg.train_ratio, cfg.seed)?;
    let tr = activity_features(&train_ds, None, system, WINDOW_LEN, cfg.stride)?;
    let va = activity_features(&valid_ds, None, system, WINDOW_LEN, cfg.stride)?;
    if tr.is_empty() || va.is_empty() {
        return Ok(CellOutcome::Absent {
            reason: format!("too few windows at {location}"),
        });
    }
    let (spec, cv_accuracy) = if cfg.iterations == 0 {
        (ClassifierSpec::default_for(family), None)
    } else {
        let report = randomized_search(
            &HyperparamSpace::default_for(family),
            &tr.features,
            &tr.labels,
            cfg.folds,
            cfg.iterations,
            cfg.seed,
        )?;
        (*report.best_spec(), Some(report.best_accuracy()))
    };
    let model = train(&spec, &tr.features, &tr.labels, cfg.seed)?;
    let confusion = evaluate(&model, &va.features, &va.labels)?;
    Ok(CellOutcome::Present {
        accuracy: confusion.accuracy(),
        cv_accuracy,
        spec,
        train_windows: tr.len(),
        confusion,
    })
}
