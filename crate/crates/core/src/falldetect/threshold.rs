//! Two- and three-phase threshold detectors.
//!
//! Both detectors scan for *runs*: maximal stretches of samples above the
//! impact threshold. A run starting at `a` is armed when the most recent dip
//! below the lower threshold lies in `[a - gap, a)` and after the end of the
//! previous armed run. The impact peak is the first maximum of the run.
//! After an armed run the scan resumes at the run's end, so events never
//! overlap.

use serde::{Deserialize, Serialize};

use super::Detection;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoPhaseParams {
    pub lft: f64,
    pub uft: f64,
    pub max_gap: usize,
}

impl Default for TwoPhaseParams {
    fn default() -> Self {
        TwoPhaseParams {
            lft: 0.6,
            uft: 2.0,
            max_gap: 25,
        }
    }
}

impl TwoPhaseParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.lft > 0.0 && self.lft < 1.0 && self.uft > 1.0) {
            return Err(Error::invalid(format!(
                "two-phase thresholds need 0 < lft < 1 < uft (lft={}, uft={})",
                self.lft, self.uft
            )));
        }
        if self.max_gap == 0 {
            return Err(Error::invalid("max_gap must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThreePhaseParams {
    pub t1: f64,
    pub t2: f64,
    pub settle_low: f64,
    pub settle_high: f64,
    pub gap12: usize,
    pub gap23: usize,
    pub settle_len: usize,
}

impl Default for ThreePhaseParams {
    fn default() -> Self {
        ThreePhaseParams {
            t1: 0.6,
            t2: 2.0,
            settle_low: 0.8,
            settle_high: 1.2,
            gap12: 25,
            gap23: 50,
            settle_len: 25,
        }
    }
}

impl ThreePhaseParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.t1 > 0.0 && self.t1 < 1.0 && self.t2 > 1.0) {
            return Err(Error::invalid(format!(
                "three-phase thresholds need 0 < t1 < 1 < t2 (t1={}, t2={})",
                self.t1, self.t2
            )));
        }
        if !(self.settle_low < 1.0 && self.settle_high > 1.0) {
            return Err(Error::invalid(format!(
                "settle bounds need settle_low < 1 < settle_high ({}, {})",
                self.settle_low, self.settle_high
            )));
        }
        if self.settle_high >= self.t2 {
            return Err(Error::invalid(format!(
                "settle_high {} must lie below t2 {}",
                self.settle_high, self.t2
            )));
        }
        if self.gap12 == 0 || self.gap23 == 0 || self.settle_len == 0 {
            return Err(Error::invalid("gap12, gap23 and settle_len must be at least 1"));
        }
        Ok(())
    }
}

/// An armed impact run: first peak index and the exclusive run end.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct ArmedRun {
    pub peak: usize,
    pub end: usize,
}

/// All armed runs for a dip threshold `low`, impact threshold `high` and
/// maximum dip-to-impact distance `gap`.
pub(crate) fn armed_runs(x: &[f64], low: f64, high: f64, gap: usize) -> Vec<ArmedRun> {
    let mut out = Vec::new();
    let mut last_dip: Option<usize> = None;
    let mut i = 0;
    while i < x.len() {
        if x[i] > high {
            let start = i;
            let mut peak = i;
            while i < x.len() && x[i] > high {
                if x[i] > x[peak] {
                    peak = i;
                }
                i += 1;
            }
            if last_dip.is_some_and(|d| start - d <= gap) {
                out.push(ArmedRun { peak, end: i });
                last_dip = None;
            }
            continue;
        }
        if x[i] < low {
            last_dip = Some(i);
        }
        i += 1;
    }
    out
}

/// First settle start `s` in `(peak, peak + gap23]` whose next `len`
/// samples all lie in `[low, high]`.
pub(crate) fn settle_start(x: &[f64], peak: usize, gap23: usize, len: usize, low: f64, high: f64) -> Option<usize> {
    let last_start = (peak + gap23).min(x.len().checked_sub(len)?);
    let mut streak = 0;
    let mut i = peak + 1;
    while i < x.len() && i < last_start + len {
        if x[i] >= low && x[i] <= high {
            streak += 1;
            if streak == len {
                return Some(i + 1 - len);
            }
        } else {
            streak = 0;
            if i >= last_start {
                return None;
            }
        }
        i += 1;
    }
    None
}

pub fn detect_two_phase(x: &[f64], params: &TwoPhaseParams) -> Vec<Detection> {
    armed_runs(x, params.lft, params.uft, params.max_gap)
        .into_iter()
        .map(|r| Detection {
            index: r.peak,
            confirmed_at: r.end.min(x.len() - 1),
        })
        .collect()
}

pub fn detect_three_phase(x: &[f64], params: &ThreePhaseParams) -> Vec<Detection> {
    armed_runs(x, params.t1, params.t2, params.gap12)
        .into_iter()
        .filter_map(|r| {
            let s = settle_start(
                x,
                r.peak,
                params.gap23,
                params.settle_len,
                params.settle_low,
                params.settle_high,
            )?;
            Some(Detection {
                index: r.peak,
                confirmed_at: s + params.settle_len - 1,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy)]
struct Run {
    start: usize,
    peak: usize,
    peak_value: f64,
}

#[derive(Debug, Clone, Copy)]
struct Pending {
    peak: usize,
    streak_start: Option<usize>,
}

/// Sample-at-a-time three-phase detector. Feeding a whole series yields
/// exactly the events of [`detect_three_phase`], each reported at the
/// sample that completes its settle phase.
#[derive(Debug, Clone)]
pub struct ThreePhaseMonitor {
    params: ThreePhaseParams,
    next: usize,
    last_dip: Option<usize>,
    run: Option<Run>,
    pending: Vec<Pending>,
}

impl ThreePhaseMonitor {
    pub fn new(params: ThreePhaseParams) -> Result<Self> {
        params.validate()?;
        Ok(ThreePhaseMonitor {
            params,
            next: 0,
            last_dip: None,
            run: None,
            pending: Vec::new(),
        })
    }

    pub fn params(&self) -> &ThreePhaseParams {
        &self.params
    }

    /// Number of samples consumed so far.
    pub fn position(&self) -> usize {
        self.next
    }

    pub fn reset(&mut self) {
        *self = ThreePhaseMonitor {
            params: self.params,
            next: 0,
            last_dip: None,
            run: None,
            pending: Vec::new(),
        };
    }

    /// Consumes one G-force value; returns the events confirmed by it.
    pub fn push(&mut self, v: f64) -> Vec<Detection> {
        let p = self.params;
        let k = self.next;
        self.next += 1;

        if v > p.t2 {
            match &mut self.run {
                Some(run) if v > run.peak_value => {
                    run.peak = k;
                    run.peak_value = v;
                }
                Some(_) => {}
                None => {
                    self.run = Some(Run {
                        start: k,
                        peak: k,
                        peak_value: v,
                    })
                }
            }
        } else {
            if let Some(run) = self.run.take() {
                if self.last_dip.is_some_and(|d| run.start - d <= p.gap12) {
                    self.pending.push(Pending {
                        peak: run.peak,
                        streak_start: None,
                    });
                    self.last_dip = None;
                }
            }
            if v < p.t1 {
                self.last_dip = Some(k);
            }
        }

        let inside = v >= p.settle_low && v <= p.settle_high;
        let mut confirmed = Vec::new();
        self.pending.retain_mut(|c| {
            if c.peak >= k {
                return true;
            }
            if inside {
                if c.streak_start.is_none() {
                    if k > c.peak + p.gap23 {
                        return false;
                    }
                    c.streak_start = Some(k);
                }
                if k + 1 - c.streak_start.unwrap_or(k) == p.settle_len {
                    confirmed.push(Detection {
                        index: c.peak,
                        confirmed_at: k,
                    });
                    return false;
                }
                true
            } else {
                c.streak_start = None;
                k < c.peak + p.gap23
            }
        });
        confirmed
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_phase_examples() {
        let p = TwoPhaseParams {
            lft: 0.6,
            uft: 2.0,
            max_gap: 50,
        };
        let ev = detect_two_phase(&[1.0, 0.3, 2.5, 1.0], &p);
        assert_eq!(ev.len(), 1);
        assert_eq!(ev[0].index, 2);
        assert!(detect_two_phase(&[1.0, 1.0, 1.0], &p).is_empty());
    }

    fn canonical(settle: f64) -> Vec<f64> {
        let mut x = vec![1.0; 10];
        x.push(0.3);
        x.extend([1.5, 2.8, 1.6]);
        x.extend(std::iter::repeat_n(settle, 30));
        x
    }

    #[test]
    fn three_phase_examples() {
        let p = ThreePhaseParams {
            gap12: 50,
            gap23: 50,
            ..Default::default()
        };
        let ev = detect_three_phase(&canonical(1.0), &p);
        assert_eq!(ev.len(), 1);
        assert_eq!(ev[0].index, 12);
        assert_eq!(ev[0].confirmed_at, 14 + 24);
        assert!(detect_three_phase(&canonical(2.0), &p).is_empty());
    }

    #[test]
    fn settle_must_fit_in_series() {
        let p = ThreePhaseParams::default();
        let mut x = canonical(1.0);
        x.truncate(14 + 24);
        assert!(detect_three_phase(&x, &p).is_empty());
    }

    #[test]
    fn monitor_matches_batch_on_canonical() {
        let p = ThreePhaseParams::default();
        let x = canonical(1.0);
        let mut m = ThreePhaseMonitor::new(p).unwrap();
        let streamed: Vec<Detection> = x.iter().flat_map(|v| m.push(*v)).collect();
        assert_eq!(streamed, detect_three_phase(&x, &p));
    }

    #[test]
    fn params_validation() {
        assert!(TwoPhaseParams {
            lft: 1.2,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(ThreePhaseParams {
            settle_high: 2.5,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(ThreePhaseParams {
            settle_low: 1.0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(ThreePhaseParams::default().validate().is_ok());
    }
}
