//! The 4-second pre-fall ring buffer and prior-activity identification.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::classify::{FeatureConfig, TrainedModel};
use crate::data::{ActivityLabel, Sample};
use crate::error::{Error, Result};
use crate::signal::{extract_features, Window, WINDOW_LEN};

/// 4 s at 50 Hz.
pub const SNAPSHOT_LEN: usize = 200;
/// Starts of the five classified windows within a snapshot.
pub const PRIOR_OFFSETS: [usize; 5] = [0, 10, 20, 30, 40];

/// Fixed-capacity ring of the most recent samples.
#[derive(Debug, Clone)]
pub struct SnapshotBuffer {
    ring: Vec<Sample>,
    capacity: usize,
    write: usize,
}

impl Default for SnapshotBuffer {
    fn default() -> Self {
        SnapshotBuffer::new(SNAPSHOT_LEN)
    }
}

impl SnapshotBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "snapshot buffer capacity must be positive");
        SnapshotBuffer {
            ring: Vec::with_capacity(capacity),
            capacity,
            write: 0,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.ring.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ring.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.ring.len() == self.capacity
    }

    pub fn push(&mut self, s: Sample) {
        if self.ring.len() < self.capacity {
            self.ring.push(s);
        } else {
            self.ring[self.write] = s;
        }
        self.write = (self.write + 1) % self.capacity;
    }

    /// The buffered samples oldest first, once the buffer has filled.
    pub fn snapshot(&self) -> Option<Vec<Sample>> {
        if !self.is_full() {
            return None;
        }
        let mut out = Vec::with_capacity(self.capacity);
        out.extend_from_slice(&self.ring[self.write..]);
        out.extend_from_slice(&self.ring[..self.write]);
        Some(out)
    }

    pub fn clear(&mut self) {
        self.ring.clear();
        self.write = 0;
    }
}

/// Five 100-sample windows at offsets 0, 10, 20, 30 and 40. The last 60
/// samples, dominated by the fall itself, are never classified.
pub fn split_prior_windows(snapshot: &[Sample]) -> Result<Vec<Window>> {
    if snapshot.len() != SNAPSHOT_LEN {
        return Err(Error::invalid(format!(
            "snapshot must hold {SNAPSHOT_LEN} samples, got {}",
            snapshot.len()
        )));
    }
    Ok(PRIOR_OFFSETS
        .iter()
        .map(|&o| Window {
            samples: snapshot[o..o + WINDOW_LEN].to_vec(),
            recording: "snapshot".into(),
            start: o,
            label: None,
        })
        .collect())
}

/// Most frequent label; among tied labels, the one occurring latest wins.
pub fn majority_vote(labels: &[ActivityLabel]) -> Result<ActivityLabel> {
    if labels.is_empty() {
        return Err(Error::invalid("majority vote over no labels"));
    }
    let counts = vote_counts(labels);
    let top = counts.values().copied().max().unwrap_or(0);
    let winner = labels
        .iter()
        .rev()
        .find(|l| counts[l] == top)
        .copied()
        .expect("non-empty");
    Ok(winner)
}

fn vote_counts(labels: &[ActivityLabel]) -> BTreeMap<ActivityLabel, usize> {
    let mut counts = BTreeMap::new();
    for l in labels {
        *counts.entry(*l).or_insert(0) += 1;
    }
    counts
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowPrediction {
    pub offset: usize,
    pub label: ActivityLabel,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorFallReport {
    pub window_predictions: Vec<WindowPrediction>,
    pub winner: ActivityLabel,
    pub vote_counts: BTreeMap<ActivityLabel, usize>,
}

/// Classifies the five prior windows of a snapshot and votes.
pub fn identify_prior_activity(model: &TrainedModel, snapshot: &[Sample]) -> Result<PriorFallReport> {
    let expected = FeatureConfig::new(model.feature_config.system);
    if model.feature_config != expected {
        return Err(Error::Model(format!(
            "model feature layout v{} does not match pipeline v{}",
            model.feature_config.version, expected.version
        )));
    }
    let windows = split_prior_windows(snapshot)?;
    let mut window_predictions = Vec::with_capacity(windows.len());
    for w in &windows {
        let p = model.predict(&extract_features(w, model.feature_config.system))?;
        window_predictions.push(WindowPrediction {
            offset: w.start,
            label: p.label,
            score: p.score(),
        });
    }
    let labels: Vec<ActivityLabel> = window_predictions.iter().map(|p| p.label).collect();
    Ok(PriorFallReport {
        winner: majority_vote(&labels)?,
        vote_counts: vote_counts(&labels),
        window_predictions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ActivityLabel::*;

    fn sample(i: usize) -> Sample {
        Sample::new(i as f64 * 0.02, [i as f64 * 0.01, 9.8, 0.0], [0.0; 3])
    }

    #[test]
    fn buffer_fill_and_eviction() {
        let mut b = SnapshotBuffer::default();
        assert!(b.snapshot().is_none());
        for i in 0..200 {
            b.push(sample(i));
        }
        assert_eq!(b.snapshot().unwrap(), (0..200).map(sample).collect::<Vec<_>>());
        b.push(sample(200));
        assert_eq!(b.snapshot().unwrap(), (1..201).map(sample).collect::<Vec<_>>());
    }

    #[test]
    fn prior_windows() {
        let snap: Vec<Sample> = (0..200).map(sample).collect();
        let w = split_prior_windows(&snap).unwrap();
        assert_eq!(w.iter().map(|w| w.start).collect::<Vec<_>>(), PRIOR_OFFSETS);
        assert!(w.iter().all(|w| w.samples.len() == 100));
        assert_eq!(w[4].samples.last().unwrap(), &sample(139));
        assert!(split_prior_windows(&snap[..199]).is_err());
    }

    #[test]
    fn vote_examples() {
        assert_eq!(majority_vote(&[Walk, Walk, Run, Walk, Sit]).unwrap(), Walk);
        assert_eq!(majority_vote(&[Run; 5]).unwrap(), Run);
        assert_eq!(majority_vote(&[Walk, Walk, Run, Run, Sit]).unwrap(), Run);
        assert_eq!(majority_vote(&[Run, Walk, Walk, Run, Sit]).unwrap(), Run);
        assert_eq!(majority_vote(&[Run, Run, Walk, Sit, Walk]).unwrap(), Walk);
    }
}
