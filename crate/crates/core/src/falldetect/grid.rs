//! Exhaustive threshold search.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::threshold::{armed_runs, settle_start, ArmedRun};
use super::{Detector, DetectorMetrics, ThreePhaseParams, TwoPhaseParams};
use crate::error::{Error, Result};
use crate::signal::GForceSeries;

/// Inclusive arithmetic range; values are rounded to 1e-9 so that
/// accumulated steps print cleanly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Axis {
    pub fn new(start: f64, stop: f64, step: f64) -> Self {
        Axis { start, stop, step }
    }

    pub fn values(&self) -> Vec<f64> {
        if self.step.is_nan() || self.step <= 0.0 || self.stop < self.start {
            return Vec::new();
        }
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize;
        (0..=n)
            .map(|i| ((self.start + i as f64 * self.step) * 1e9).round() / 1e9)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ThresholdGrid {
    TwoPhase {
        lft: Vec<f64>,
        uft: Vec<f64>,
        max_gap: usize,
    },
    ThreePhase {
        t1: Vec<f64>,
        t2: Vec<f64>,
        settle_low: Vec<f64>,
        settle_high: Vec<f64>,
        gap12: usize,
        gap23: usize,
        settle_len: usize,
    },
}

impl ThresholdGrid {
    pub fn default_two_phase() -> Self {
        ThresholdGrid::TwoPhase {
            lft: Axis::new(0.2, 0.9, 0.05).values(),
            uft: Axis::new(1.5, 4.0, 0.1).values(),
            max_gap: TwoPhaseParams::default().max_gap,
        }
    }

    pub fn default_three_phase() -> Self {
        let d = ThreePhaseParams::default();
        ThresholdGrid::ThreePhase {
            t1: Axis::new(0.2, 0.9, 0.05).values(),
            t2: Axis::new(1.5, 4.0, 0.1).values(),
            settle_low: Axis::new(0.7, 0.95, 0.05).values(),
            settle_high: Axis::new(1.05, 1.4, 0.05).values(),
            gap12: d.gap12,
            gap23: d.gap23,
            settle_len: d.settle_len,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            ThresholdGrid::TwoPhase { lft, uft, .. } => lft.len() * uft.len(),
            ThresholdGrid::ThreePhase {
                t1,
                t2,
                settle_low,
                settle_high,
                ..
            } => t1.len() * t2.len() * settle_low.len() * settle_high.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Compact description for provenance records.
    pub fn describe(&self) -> String {
        let span = |v: &[f64]| match (v.first(), v.last()) {
            (Some(a), Some(b)) => format!("{a}..{b}({})", v.len()),
            _ => "empty".to_string(),
        };
        match self {
            ThresholdGrid::TwoPhase { lft, uft, max_gap } => {
                format!("lft={} uft={} max_gap={max_gap}", span(lft), span(uft))
            }
            ThresholdGrid::ThreePhase {
                t1,
                t2,
                settle_low,
                settle_high,
                gap12,
                gap23,
                settle_len,
            } => format!(
                "t1={} t2={} settle_low={} settle_high={} gap12={gap12} gap23={gap23} settle_len={settle_len}",
                span(t1),
                span(t2),
                span(settle_low),
                span(settle_high)
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridBest {
    pub detector: Detector,
    pub metrics: DetectorMetrics,
    /// Valid grid points evaluated.
    pub evaluated: usize,
}

/// (tp, fp) of one grid point.
type Counts = (u64, u64);

/// Evaluates every grid point and returns the best by accuracy, then
/// specificity, then earliest in lexicographic parameter order. Points that
/// violate the parameter invariants are skipped.
pub fn grid_search_thresholds(
    grid: &ThresholdGrid,
    positives: &[GForceSeries],
    negatives: &[GForceSeries],
) -> Result<GridBest> {
    if grid.is_empty() {
        return Err(Error::invalid("threshold grid is empty"));
    }
    if positives.is_empty() || negatives.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut scored: Vec<(Detector, Counts)> = match grid {
        ThresholdGrid::TwoPhase { lft, uft, max_gap } => {
            let points: Vec<TwoPhaseParams> = lft
                .iter()
                .flat_map(|&l| {
                    uft.iter().map(move |&u| TwoPhaseParams {
                        lft: l,
                        uft: u,
                        max_gap: *max_gap,
                    })
                })
                .filter(|p| p.validate().is_ok())
                .collect();
            points
                .par_iter()
                .map(|p| {
                    let flag = |s: &GForceSeries| !armed_runs(&s.values, p.lft, p.uft, p.max_gap).is_empty();
                    (Detector::TwoPhase(*p), count(positives, negatives, flag))
                })
                .collect()
        }
        ThresholdGrid::ThreePhase {
            t1,
            t2,
            settle_low,
            settle_high,
            gap12,
            gap23,
            settle_len,
        } => {
            let pairs: Vec<(f64, f64)> = t1.iter().flat_map(|&a| t2.iter().map(move |&b| (a, b))).collect();
            pairs
                .par_iter()
                .map(|&(a, b)| {
                    let runs = |set: &[GForceSeries]| -> Vec<Vec<ArmedRun>> {
                        set.iter().map(|s| armed_runs(&s.values, a, b, *gap12)).collect()
                    };
                    let (pos_runs, neg_runs) = (runs(positives), runs(negatives));
                    let mut out = Vec::new();
                    for &lo in settle_low {
                        for &hi in settle_high {
                            let p = ThreePhaseParams {
                                t1: a,
                                t2: b,
                                settle_low: lo,
                                settle_high: hi,
                                gap12: *gap12,
                                gap23: *gap23,
                                settle_len: *settle_len,
                            };
                            if p.validate().is_err() {
                                continue;
                            }
                            let settles = |set: &[GForceSeries], runs: &[Vec<ArmedRun>]| -> u64 {
                                set.iter()
                                    .zip(runs)
                                    .filter(|(s, rs)| {
                                        rs.iter().any(|r| {
                                            settle_start(&s.values, r.peak, p.gap23, p.settle_len, lo, hi).is_some()
                                        })
                                    })
                                    .count() as u64
                            };
                            out.push((
                                Detector::ThreePhase(p),
                                (settles(positives, &pos_runs), settles(negatives, &neg_runs)),
                            ));
                        }
                    }
                    out
                })
                .flatten()
                .collect()
        }
    };
    let evaluated = scored.len();
    if evaluated == 0 {
        return Err(Error::invalid("no grid point satisfies the detector invariants"));
    }
    let (np, nn) = (positives.len() as u64, negatives.len() as u64);
    let mut best = 0;
    for (i, (_, (tp, fp))) in scored.iter().enumerate() {
        let (btp, bfp) = scored[best].1;
        let (correct, bcorrect) = (tp + nn - fp, btp + nn - bfp);
        if correct > bcorrect || (correct == bcorrect && fp < &bfp) {
            best = i;
        }
    }
    let (detector, (tp, fp)) = scored.swap_remove(best);
    Ok(GridBest {
        detector,
        metrics: DetectorMetrics::from_counts(tp, np - tp, nn - fp, fp),
        evaluated,
    })
}

fn count<F: Fn(&GForceSeries) -> bool>(positives: &[GForceSeries], negatives: &[GForceSeries], flag: F) -> Counts {
    let n = |set: &[GForceSeries]| set.iter().filter(|s| flag(s)).count() as u64;
    (n(positives), n(negatives))
}
