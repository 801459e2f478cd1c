//! Fall-detector calibration and the per-algorithm, per-kind comparison.

use std::collections::BTreeMap;

use crate::data::{stratified_split, BodyLocation, Dataset, FallKind, RecordingLabel};
use crate::error::{Error, Result};
use crate::falldetect::{
    calibrate_threshold_kmeans, evaluate_detector, grid_search_thresholds, random_segments, select_template,
    table2_csv, Calibration, Detector, DetectorId, DtwDetector, Table2Row, ThresholdGrid,
};
use crate::signal::{crop_fall, CroppedFall, GForceSeries};

#[derive(Debug, Clone, PartialEq)]
pub struct LabelledSeries {
    pub recording: String,
    pub subject: String,
    pub series: GForceSeries,
}

/// G-force series of one body location, grouped by what they contain.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FallCorpus {
    pub falls: Vec<LabelledSeries>,
    pub knee_falls: Vec<LabelledSeries>,
    pub activities: Vec<GForceSeries>,
}

impl FallCorpus {
    pub fn of_kind(&self, kind: FallKind) -> &[LabelledSeries] {
        match kind {
            FallKind::Fall => &self.falls,
            FallKind::FallKneesFirst => &self.knee_falls,
        }
    }
}

pub fn fall_corpus(ds: &Dataset, location: BodyLocation) -> Result<FallCorpus> {
    let mut c = FallCorpus::default();
    for r in ds.at_location(location) {
        let series = GForceSeries::from_recording(r);
        let item = || LabelledSeries {
            recording: r.id(),
            subject: r.subject_id.clone(),
            series: series.clone(),
        };
        match r.label {
            RecordingLabel::Fall(FallKind::Fall) => c.falls.push(item()),
            RecordingLabel::Fall(FallKind::FallKneesFirst) => c.knee_falls.push(item()),
            RecordingLabel::Activity(_) => c.activities.push(series),
        }
    }
    let missing: Vec<&str> = [
        (c.falls.is_empty(), "FALL recordings"),
        (c.knee_falls.is_empty(), "FALL_KNEES_FIRST recordings"),
        (c.activities.is_empty(), "activity (non-fall) recordings"),
    ]
    .iter()
    .filter(|(empty, _)| *empty)
    .map(|(_, name)| *name)
    .collect();
    if !missing.is_empty() {
        return Err(Error::Schema(format!("no {} at {location}", missing.join(", no "))));
    }
    Ok(c)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FallEvalConfig {
    pub two_phase: ThresholdGrid,
    pub three_phase: ThresholdGrid,
    /// Random non-fall segments drawn from activity recordings.
    pub nonfall_count: usize,
    pub segment_len: usize,
    /// Share of falls and non-falls used for calibration; `None` calibrates
    /// and evaluates on everything.
    pub holdout: Option<f64>,
    pub dtw_clusters: usize,
    pub seed: u64,
}

impl Default for FallEvalConfig {
    fn default() -> Self {
        FallEvalConfig {
            two_phase: ThresholdGrid::default_two_phase(),
            three_phase: ThresholdGrid::default_three_phase(),
            nonfall_count: 1000,
            segment_len: 200,
            holdout: Some(0.7),
            dtw_clusters: 3,
            seed: 1,
        }
    }
}

/// Calibrates every detector for both kinds. DTW calibration that fails on
/// degenerate data leaves that detector out and records why in the
/// provenance.
pub fn calibrate_fall(
    falls: &BTreeMap<FallKind, Vec<LabelledSeries>>,
    negatives: &[GForceSeries],
    cfg: &FallEvalConfig,
) -> Result<Calibration> {
    let mut cal = Calibration::default();
    for &kind in FallKind::ALL {
        let positives: Vec<GForceSeries> = falls
            .get(&kind)
            .map(|v| v.iter().map(|l| l.series.clone()).collect())
            .unwrap_or_default();
        if positives.is_empty() {
            return Err(Error::Schema(format!("no {kind} recordings to calibrate on")));
        }
        let two = grid_search_thresholds(&cfg.two_phase, &positives, negatives)?;
        let three = grid_search_thresholds(&cfg.three_phase, &positives, negatives)?;
        let k = cal.kind_mut(kind);
        if let Detector::TwoPhase(p) = two.detector {
            k.two_phase = p;
        }
        if let Detector::ThreePhase(p) = three.detector {
            k.three_phase = p;
        }
        match calibrate_dtw(&falls[&kind], cfg.dtw_clusters) {
            Ok((d, subject, index)) => {
                cal.provenance
                    .insert(format!("{kind}.dtw_template_source"), format!("{subject}#{index}"));
                cal.kind_mut(kind).dtw = Some(d);
            }
            Err(e) => {
                log::warn!("{kind}: DTW not calibrated: {e}");
                cal.provenance.insert(format!("{kind}.dtw_skipped"), e.to_string());
            }
        }
    }
    cal.provenance.insert("grid.two_phase".into(), cfg.two_phase.describe());
    cal.provenance
        .insert("grid.three_phase".into(), cfg.three_phase.describe());
    cal.provenance.insert("negatives".into(), negatives.len().to_string());
    Ok(cal)
}

fn calibrate_dtw(falls: &[LabelledSeries], clusters: usize) -> Result<(DtwDetector, String, usize)> {
    let rate = falls.first().map_or(50.0, |f| f.series.rate_hz);
    let mut det = DtwDetector::new(Vec::new(), 1.0);
    let mut crops: BTreeMap<String, Vec<CroppedFall>> = BTreeMap::new();
    for f in falls {
        let mut c = crop_fall(&f.series.values)?;
        c.values = det.prepare(&c.values, rate)?;
        crops.entry(f.subject.clone()).or_default().push(c);
    }
    let sel = select_template(&crops)?;
    det.template = sel.template.values.clone();
    let distances = falls
        .iter()
        .filter_map(|f| det.offline_distance(&f.series.values, rate).transpose())
        .collect::<Result<Vec<f64>>>()?;
    det.threshold = calibrate_threshold_kmeans(&distances, clusters)?;
    det.validate()?;
    Ok((det, sel.subject, sel.index))
}

#[derive(Debug, Clone, PartialEq)]
pub struct FallEvalReport {
    pub rows: Vec<Table2Row>,
    /// Detector/kind pairs that could not be evaluated, with the reason.
    pub missing: Vec<(DetectorId, FallKind, String)>,
    pub calibration: Calibration,
    pub test_falls: BTreeMap<FallKind, usize>,
    pub test_nonfalls: usize,
}

impl FallEvalReport {
    pub fn is_complete(&self) -> bool {
        self.missing.is_empty()
    }

    pub fn row(&self, detector: DetectorId, kind: FallKind) -> Option<&Table2Row> {
        self.rows.iter().find(|r| r.detector == detector && r.kind == kind)
    }

    pub fn to_csv(&self) -> String {
        table2_csv(&self.rows)
    }

    pub fn to_table(&self) -> String {
        let mut rows = super::csv_rows(&self.to_csv());
        for (d, k, why) in &self.missing {
            rows.push(vec![d.title().into(), k.to_string(), format!("not evaluated: {why}")]);
        }
        super::aligned(&rows)
    }
}

fn split<T: Clone>(items: &[T], ratio: Option<f64>, seed: u64) -> Result<(Vec<T>, Vec<T>)> {
    let Some(ratio) = ratio else {
        return Ok((items.to_vec(), items.to_vec()));
    };
    let s = stratified_split(&vec![0u8; items.len()], ratio, seed)?;
    Ok((
        s.train.iter().map(|&i| items[i].clone()).collect(),
        s.validation.iter().map(|&i| items[i].clone()).collect(),
    ))
}

/// Calibrates on the training share and scores all three algorithms for
/// both fall kinds on the held-out share.
pub fn eval_fall(corpus: &FallCorpus, cfg: &FallEvalConfig) -> Result<FallEvalReport> {
    if corpus.activities.is_empty() {
        return Err(Error::Schema("no activity (non-fall) recordings".into()));
    }
    let negatives = random_segments(&corpus.activities, cfg.nonfall_count, cfg.segment_len, cfg.seed)?;
    let (neg_train, neg_test) = split(&negatives, cfg.holdout, cfg.seed)?;
    let mut train = BTreeMap::new();
    let mut test = BTreeMap::new();
    for &kind in FallKind::ALL {
        let all = corpus.of_kind(kind);
        if all.is_empty() {
            return Err(Error::Schema(format!("no {kind} recordings")));
        }
        let (a, b) = split(all, cfg.holdout, cfg.seed ^ kind.index() as u64)?;
        train.insert(kind, a);
        test.insert(kind, b);
    }
    let calibration = calibrate_fall(&train, &neg_train, cfg)?;

    let mut rows = Vec::new();
    let mut missing = Vec::new();
    for id in DetectorId::ALL {
        for &kind in FallKind::ALL {
            let positives: Vec<GForceSeries> = test[&kind].iter().map(|l| l.series.clone()).collect();
            match calibration.kind(kind).detector(id) {
                Some(det) => rows.push(Table2Row {
                    detector: id,
                    kind,
                    metrics: evaluate_detector(&det, &positives, &neg_test)?,
                }),
                None => {
                    let why = calibration
                        .provenance
                        .get(&format!("{kind}.dtw_skipped"))
                        .cloned()
                        .unwrap_or_else(|| "not calibrated".into());
                    missing.push((id, kind, why));
                }
            }
        }
    }
    Ok(FallEvalReport {
        rows,
        missing,
        test_falls: test.iter().map(|(k, v)| (*k, v.len())).collect(),
        test_nonfalls: neg_test.len(),
        calibration,
    })
}
