//! Dynamic time warping, template selection and the DTW fall detector.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::Detection;
use crate::error::{Error, Result};
use crate::signal::{crop_at, crop_fall, mean, Butterworth, CroppedFall, LowpassConfig, CROP_SIZE};

/// Classic DTW: absolute-difference cost, full alignment, no band.
pub fn dtw_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::invalid("dtw needs two non-empty sequences"));
    }
    let m = b.len();
    let mut prev = vec![f64::INFINITY; m + 1];
    let mut cur = vec![f64::INFINITY; m + 1];
    prev[0] = 0.0;
    for &x in a {
        cur[0] = f64::INFINITY;
        for j in 1..=m {
            let best = prev[j - 1].min(prev[j]).min(cur[j - 1]);
            cur[j] = (x - b[j - 1]).abs() + best;
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    Ok(prev[m])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Representative {
    pub subject: String,
    pub index: usize,
    /// Summed distance to the other subjects' falls.
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemplateSelection {
    pub template: CroppedFall,
    pub subject: String,
    pub index: usize,
    /// Summed distance from the template to every fall.
    pub total_distance: f64,
    pub representatives: Vec<Representative>,
}

/// Picks a per-subject representative (least summed distance to the other
/// subjects' falls), then the representative closest to all falls.
/// Ties go to the lowest subject id, then the lowest index.
pub fn select_template(falls: &BTreeMap<String, Vec<CroppedFall>>) -> Result<TemplateSelection> {
    let subjects: Vec<(&String, &Vec<CroppedFall>)> = falls.iter().filter(|(_, v)| !v.is_empty()).collect();
    if subjects.len() < 2 {
        return Err(Error::invalid(format!(
            "template selection needs falls from at least 2 subjects, got {}",
            subjects.len()
        )));
    }
    let mut representatives = Vec::new();
    for (si, (subject, items)) in subjects.iter().enumerate() {
        let mut best: Option<(usize, f64)> = None;
        for (i, f) in items.iter().enumerate() {
            let mut sum = 0.0;
            for (sj, (_, others)) in subjects.iter().enumerate() {
                if si == sj {
                    continue;
                }
                for o in others.iter() {
                    sum += dtw_distance(&f.values, &o.values)?;
                }
            }
            if best.is_none_or(|(_, d)| sum < d) {
                best = Some((i, sum));
            }
        }
        let (index, distance) = best.expect("non-empty subject");
        representatives.push(Representative {
            subject: (*subject).clone(),
            index,
            distance,
        });
    }
    let mut best: Option<(usize, f64)> = None;
    for (ri, r) in representatives.iter().enumerate() {
        let t = &falls[&r.subject][r.index];
        let mut sum = 0.0;
        for (_, items) in &subjects {
            for o in items.iter() {
                sum += dtw_distance(&t.values, &o.values)?;
            }
        }
        if best.is_none_or(|(_, d)| sum < d) {
            best = Some((ri, sum));
        }
    }
    let (ri, total_distance) = best.expect("at least two representatives");
    let r = &representatives[ri];
    Ok(TemplateSelection {
        template: falls[&r.subject][r.index].clone(),
        subject: r.subject.clone(),
        index: r.index,
        total_distance,
        representatives,
    })
}

/// How a DTW detector decides whether a whole series contains a fall.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DtwMode {
    /// One crop around the global peak of the series.
    #[default]
    Offline,
    /// Sliding evaluation at every candidate peak.
    Streaming,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DtwDetector {
    pub template: Vec<f64>,
    pub threshold: f64,
    /// Low-pass applied to each crop before matching; `None` disables it.
    pub filter: Option<LowpassConfig>,
    /// Minimum G of a streaming candidate peak.
    pub min_peak: f64,
    /// Half-width of the neighbourhood cropped around a candidate.
    pub context: usize,
    pub mode: DtwMode,
}

impl DtwDetector {
    pub fn new(template: Vec<f64>, threshold: f64) -> Self {
        DtwDetector {
            template,
            threshold,
            filter: Some(LowpassConfig::default()),
            min_peak: 1.3,
            context: 20,
            mode: DtwMode::Offline,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.threshold > 0.0 && self.threshold.is_finite()) {
            return Err(Error::invalid(format!(
                "dtw threshold {} must be positive",
                self.threshold
            )));
        }
        if self.template.is_empty() {
            return Err(Error::invalid("dtw template is empty"));
        }
        if 2 * self.context + 1 < CROP_SIZE {
            return Err(Error::invalid(format!(
                "dtw context {} gives neighbourhoods shorter than {CROP_SIZE}",
                self.context
            )));
        }
        Ok(())
    }

    /// Applies the configured low-pass to a crop.
    pub fn prepare(&self, crop: &[f64], rate_hz: f64) -> Result<Vec<f64>> {
        match self.filter {
            Some(cfg) => Ok(Butterworth::design(cfg.order, cfg.cutoff_hz, rate_hz)?.filter_settled(crop)),
            None => Ok(crop.to_vec()),
        }
    }

    /// Distance of a neighbourhood crop marked at `mark` (relative to
    /// `lo`) to the template, with the crop's source span.
    fn match_at(&self, x: &[f64], mark: usize, rate_hz: f64) -> Result<Option<(f64, usize, usize)>> {
        let lo = mark.saturating_sub(self.context);
        let hi = (mark + self.context + 1).min(x.len());
        let nb = &x[lo..hi];
        if nb.len() < CROP_SIZE {
            return Ok(None);
        }
        let crop = crop_at(nb, mark - lo, mean(nb));
        let d = dtw_distance(&self.prepare(&crop.values, rate_hz)?, &self.template)?;
        Ok(Some((d, lo + crop.start, lo + crop.start + crop.values.len() - 1)))
    }

    /// Distance of the series' global-peak crop to the template; `None` for
    /// series shorter than the crop.
    pub fn offline_distance(&self, x: &[f64], rate_hz: f64) -> Result<Option<f64>> {
        if x.len() < CROP_SIZE {
            return Ok(None);
        }
        let crop = crop_fall(x)?;
        Ok(Some(dtw_distance(
            &self.prepare(&crop.values, rate_hz)?,
            &self.template,
        )?))
    }

    /// Streaming evaluation at one arbitrary index; used by exhaustive checks.
    pub fn distance_at(&self, x: &[f64], index: usize, rate_hz: f64) -> Result<Option<(f64, usize, usize)>> {
        self.match_at(x, index, rate_hz)
    }
}

/// Local maxima above `min_peak`: `x[m] > x[m-1]` and `x[m] >= x[m+1]`,
/// with missing neighbours treated as lower.
pub fn candidate_peaks(x: &[f64], min_peak: f64) -> Vec<usize> {
    (0..x.len())
        .filter(|&m| x[m] > min_peak && (m == 0 || x[m] > x[m - 1]) && (m + 1 == x.len() || x[m] >= x[m + 1]))
        .collect()
}

/// Streaming DTW detection. Each candidate peak's neighbourhood is cropped,
/// filtered and matched; a candidate inside the previous event's crop is
/// skipped.
pub fn detect_dtw(x: &[f64], rate_hz: f64, detector: &DtwDetector) -> Result<Vec<Detection>> {
    detector.validate()?;
    let mut out = Vec::new();
    let mut covered_to: Option<usize> = None;
    for m in candidate_peaks(x, detector.min_peak) {
        if covered_to.is_some_and(|c| m <= c) {
            continue;
        }
        if let Some((d, _, end)) = detector.match_at(x, m, rate_hz)? {
            if d <= detector.threshold {
                out.push(Detection {
                    index: m,
                    confirmed_at: end,
                });
                covered_to = Some(end);
            }
        }
    }
    Ok(out)
}
