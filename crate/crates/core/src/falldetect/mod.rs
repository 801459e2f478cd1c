//! Fall detection over G-force series: threshold detectors, DTW template
//! matching, calibration and evaluation.

pub mod calibration;
pub mod dtw;
pub mod grid;
pub mod kmeans;
pub mod threshold;

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use crate::data::FallKind;
use crate::error::{Error, Result};
use crate::signal::GForceSeries;

pub use calibration::{Calibration, KindCalibration};
pub use dtw::{candidate_peaks, detect_dtw, dtw_distance, select_template, DtwDetector, DtwMode, TemplateSelection};
pub use grid::{grid_search_thresholds, Axis, GridBest, ThresholdGrid};
pub use kmeans::{calibrate_threshold_kmeans, kmeans_1d, KMeans1d};
pub use threshold::{detect_three_phase, detect_two_phase, ThreePhaseMonitor, ThreePhaseParams, TwoPhaseParams};

/// A detector hit before it is attributed to a kind and recording.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Detection {
    /// Impact peak.
    pub index: usize,
    /// Sample at which the detector can first report the event.
    pub confirmed_at: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectorId {
    TwoPhase,
    ThreePhase,
    Dtw,
}

impl DetectorId {
    pub const ALL: [DetectorId; 3] = [DetectorId::TwoPhase, DetectorId::ThreePhase, DetectorId::Dtw];

    pub fn as_str(self) -> &'static str {
        match self {
            DetectorId::TwoPhase => "two_phase",
            DetectorId::ThreePhase => "three_phase",
            DetectorId::Dtw => "dtw",
        }
    }

    /// Table label.
    pub fn title(self) -> &'static str {
        match self {
            DetectorId::TwoPhase => "2-phase",
            DetectorId::ThreePhase => "3-phase",
            DetectorId::Dtw => "DTW",
        }
    }
}

impl fmt::Display for DetectorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DetectorId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "two_phase" | "2_phase" | "2phase" => Ok(DetectorId::TwoPhase),
            "three_phase" | "3_phase" | "3phase" => Ok(DetectorId::ThreePhase),
            "dtw" => Ok(DetectorId::Dtw),
            _ => Err(Error::Unknown {
                what: "detector",
                value: s.to_string(),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FallEvent {
    pub kind: FallKind,
    pub index: usize,
    pub confirmed_at: usize,
    pub detector: DetectorId,
    pub recording: String,
}

/// A configured fall detector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "detector", rename_all = "snake_case")]
pub enum Detector {
    TwoPhase(TwoPhaseParams),
    ThreePhase(ThreePhaseParams),
    Dtw(DtwDetector),
}

impl Detector {
    pub fn id(&self) -> DetectorId {
        match self {
            Detector::TwoPhase(_) => DetectorId::TwoPhase,
            Detector::ThreePhase(_) => DetectorId::ThreePhase,
            Detector::Dtw(_) => DetectorId::Dtw,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Detector::TwoPhase(p) => p.validate(),
            Detector::ThreePhase(p) => p.validate(),
            Detector::Dtw(d) => d.validate(),
        }
    }

    /// Event positions in a series. DTW always uses streaming evaluation here.
    pub fn detect(&self, series: &GForceSeries) -> Result<Vec<Detection>> {
        match self {
            Detector::TwoPhase(p) => Ok(detect_two_phase(&series.values, p)),
            Detector::ThreePhase(p) => Ok(detect_three_phase(&series.values, p)),
            Detector::Dtw(d) => detect_dtw(&series.values, series.rate_hz, d),
        }
    }

    /// Whether a series counts as a fall for evaluation.
    pub fn flags(&self, series: &GForceSeries) -> Result<bool> {
        match self {
            Detector::Dtw(d) if d.mode == DtwMode::Offline => Ok(d
                .offline_distance(&series.values, series.rate_hz)?
                .is_some_and(|dist| dist <= d.threshold)),
            _ => Ok(!self.detect(series)?.is_empty()),
        }
    }

    pub fn events(&self, kind: FallKind, series: &GForceSeries, recording: &str) -> Result<Vec<FallEvent>> {
        Ok(self
            .detect(series)?
            .into_iter()
            .map(|d| FallEvent {
                kind,
                index: d.index,
                confirmed_at: d.confirmed_at,
                detector: self.id(),
                recording: recording.to_string(),
            })
            .collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorMetrics {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub accuracy: f64,
    pub sensitivity: f64,
    pub specificity: f64,
}

impl DetectorMetrics {
    /// Ratios with an empty denominator are reported as 0.
    pub fn from_counts(tp: u64, fn_: u64, tn: u64, fp: u64) -> Self {
        let ratio = |a: u64, b: u64| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        DetectorMetrics {
            tp,
            fp,
            tn,
            fn_,
            accuracy: ratio(tp + tn, tp + tn + fp + fn_),
            sensitivity: ratio(tp, tp + fn_),
            specificity: ratio(tn, tn + fp),
        }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }
}

/// Scores an arbitrary series predicate against positive and negative sets.
pub fn evaluate_flags<F>(positives: &[GForceSeries], negatives: &[GForceSeries], flag: F) -> Result<DetectorMetrics>
where
    F: Fn(&GForceSeries) -> Result<bool> + Sync,
{
    if positives.is_empty() || negatives.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let count = |set: &[GForceSeries]| -> Result<u64> {
        set.par_iter()
            .map(|s| flag(s).map(u64::from))
            .try_reduce(|| 0, |a, b| Ok(a + b))
    };
    let tp = count(positives)?;
    let fp = count(negatives)?;
    Ok(DetectorMetrics::from_counts(
        tp,
        positives.len() as u64 - tp,
        negatives.len() as u64 - fp,
        fp,
    ))
}

pub fn evaluate_detector(
    detector: &Detector,
    positives: &[GForceSeries],
    negatives: &[GForceSeries],
) -> Result<DetectorMetrics> {
    detector.validate()?;
    evaluate_flags(positives, negatives, |s| detector.flags(s))
}

/// Per-kind metrics: each kind's detector is scored on its own positives
/// against the shared negatives.
pub fn evaluate_kinds(
    fall: &Detector,
    knees: &Detector,
    falls: &[GForceSeries],
    knee_falls: &[GForceSeries],
    nonfalls: &[GForceSeries],
) -> Result<Vec<(FallKind, DetectorMetrics)>> {
    Ok(vec![
        (FallKind::Fall, evaluate_detector(fall, falls, nonfalls)?),
        (
            FallKind::FallKneesFirst,
            evaluate_detector(knees, knee_falls, nonfalls)?,
        ),
    ])
}

/// `count` segments of `len` values drawn uniformly from the series that
/// are at least `len` long: first a series, then a start offset.
pub fn random_segments(series: &[GForceSeries], count: usize, len: usize, seed: u64) -> Result<Vec<GForceSeries>> {
    let eligible: Vec<&GForceSeries> = series.iter().filter(|s| s.len() >= len).collect();
    if eligible.is_empty() {
        return Err(Error::invalid(format!("no series holds a {len}-sample segment")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..count)
        .map(|_| {
            let s = eligible[rng.random_range(0..eligible.len())];
            let start = rng.random_range(0..=s.len() - len);
            GForceSeries::new(s.values[start..start + len].to_vec(), s.rate_hz)
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table2Row {
    pub detector: DetectorId,
    pub kind: FallKind,
    pub metrics: DetectorMetrics,
}

pub const TABLE2_HEADER: &str = "algorithm,fall_kind,accuracy,sensitivity,specificity,tp,fn,tn,fp";

/// Delimited rows in the layout of the threshold-algorithm comparison
/// table; ratios as percentages rounded to 2 decimals.
pub fn table2_csv(rows: &[Table2Row]) -> String {
    let mut out = format!("{TABLE2_HEADER}\n");
    for r in rows {
        let m = &r.metrics;
        out.push_str(&format!(
            "{},{},{:.2},{:.2},{:.2},{},{},{},{}\n",
            r.detector.title(),
            r.kind,
            m.accuracy * 100.0,
            m.sensitivity * 100.0,
            m.specificity * 100.0,
            m.tp,
            m.fn_,
            m.tn,
            m.fp
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn metrics_identities() {
        let m = DetectorMetrics::from_counts(47, 17, 899, 101);
        assert_eq!(m.total(), 1064);
        assert!((m.accuracy * 1064.0 - 946.0).abs() < 1e-9);
        assert!((m.sensitivity - 47.0 / 64.0).abs() < 1e-15);
        assert!((m.specificity - 0.899).abs() < 1e-15);
    }

    #[test]
    fn flag_everything() {
        let s = vec![GForceSeries::new(vec![1.0; 10], 50.0); 3];
        let m = evaluate_flags(&s, &s, |_| Ok(true)).unwrap();
        assert_eq!((m.sensitivity, m.specificity), (1.0, 0.0));
        assert!(evaluate_flags(&[], &s, |_| Ok(true)).is_err());
    }

    #[test]
    fn detector_id_round_trip() {
        for d in DetectorId::ALL {
            assert_eq!(d.as_str().parse::<DetectorId>().unwrap(), d);
        }
        assert_eq!("3-phase".parse::<DetectorId>().unwrap(), DetectorId::ThreePhase);
    }
}
