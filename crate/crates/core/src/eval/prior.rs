//! Scripted prior-fall scenarios replayed through the device and server.
//!
//! A scenario file has one scenario per line:
//!
//! ```text
//! # recording,inject_at_s,fall_kind,seed
//! synthetic:WALK_UP:6,6,FALL,11
//! dataset:S03/LEFT_CHEST/SIT/2,5.5,FALL_KNEES_FIRST,0
//! ```
//!
//! `synthetic:<LABEL>:<seconds>` generates that activity; `dataset:<id>`
//! names a recording of the supplied dataset. The recording is cut at
//! `inject_at_s` and a fall of the given kind follows.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::alertnet::sink::NullSink;
use crate::alertnet::{run_device_sim, AlertService, DeviceConfig, Dispatch, LocalTransport, ServerMessage};
use crate::classify::TrainedModel;
use crate::data::{ActivityLabel, Dataset, FallKind, Recording, RecordingLabel};
use crate::error::{Error, Result};
use crate::synth::{generate_synthetic, inject_fall};

const LYING_S: f64 = 3.0;

#[derive(Debug, Clone, PartialEq)]
pub enum RecordingRef {
    Synthetic { activity: ActivityLabel, duration_s: f64 },
    Dataset(String),
}

impl fmt::Display for RecordingRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RecordingRef::Synthetic { activity, duration_s } => write!(f, "synthetic:{activity}:{duration_s}"),
            RecordingRef::Dataset(id) => write!(f, "dataset:{id}"),
        }
    }
}

impl FromStr for RecordingRef {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if let Some(rest) = s.strip_prefix("synthetic:") {
            let (label, dur) = rest
                .split_once(':')
                .ok_or_else(|| Error::invalid(format!("expected synthetic:<LABEL>:<seconds>, got {s:?}")))?;
            let duration_s: f64 = dur
                .parse()
                .map_err(|_| Error::invalid(format!("bad duration in {s:?}")))?;
            if !(duration_s > 0.0 && duration_s.is_finite()) {
                return Err(Error::invalid(format!("duration in {s:?} must be positive")));
            }
            return Ok(RecordingRef::Synthetic {
                activity: label.parse()?,
                duration_s,
            });
        }
        match s.strip_prefix("dataset:") {
            Some(id) if !id.is_empty() => Ok(RecordingRef::Dataset(id.to_string())),
            _ => Err(Error::Unknown {
                what: "recording reference",
                value: s.to_string(),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub recording: RecordingRef,
    pub inject_at_s: f64,
    pub fall_kind: FallKind,
    pub seed: u64,
}

pub fn parse_scenarios(text: &str) -> Result<Vec<Scenario>> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with("recording,") {
            continue;
        }
        let bad = |column: &str, message: String| Error::Parse {
            row: n + 1,
            column: column.into(),
            message,
        };
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        if cols.len() != 4 {
            return Err(bad("", format!("expected 4 fields, got {}", cols.len())));
        }
        let recording: RecordingRef = cols[0].parse().map_err(|e: Error| bad("recording", e.to_string()))?;
        let inject_at_s: f64 = cols[1]
            .parse()
            .map_err(|_| bad("inject_at_s", format!("not a number: {:?}", cols[1])))?;
        if !(inject_at_s > 0.0 && inject_at_s.is_finite()) {
            return Err(bad("inject_at_s", format!("must be positive, got {inject_at_s}")));
        }
        let fall_kind: FallKind = cols[2].parse().map_err(|e: Error| bad("fall_kind", e.to_string()))?;
        let seed: u64 = cols[3]
            .parse()
            .map_err(|_| bad("seed", format!("not an unsigned integer: {:?}", cols[3])))?;
        out.push(Scenario {
            recording,
            inject_at_s,
            fall_kind,
            seed,
        });
    }
    if out.is_empty() {
        return Err(Error::invalid("scenario file lists no scenarios"));
    }
    Ok(out)
}

pub fn scenarios_to_text(scenarios: &[Scenario]) -> String {
    let mut out = String::from("recording,inject_at_s,fall_kind,seed\n");
    for s in scenarios {
        out.push_str(&format!(
            "{},{},{},{}\n",
            s.recording, s.inject_at_s, s.fall_kind, s.seed
        ));
    }
    out
}

/// `trials` synthetic scenarios per activity: 6 s of the activity, then a
/// fall, alternating between the two kinds.
pub fn default_scenarios(trials: usize, seed: u64) -> Vec<Scenario> {
    let mut out = Vec::new();
    for &activity in ActivityLabel::ALL {
        for t in 0..trials {
            out.push(Scenario {
                recording: RecordingRef::Synthetic {
                    activity,
                    duration_s: 6.0,
                },
                inject_at_s: 6.0,
                fall_kind: FallKind::ALL[t % 2],
                seed: seed
                    .wrapping_mul(7919)
                    .wrapping_add((activity.index() * 1000 + t) as u64),
            });
        }
    }
    out
}

/// The recording a reference names; synthetic ones are generated with `seed`.
pub fn resolve_recording(r: &RecordingRef, seed: u64, dataset: Option<&Dataset>) -> Result<Recording> {
    match r {
        RecordingRef::Synthetic { activity, duration_s } => {
            generate_synthetic(RecordingLabel::Activity(*activity), *duration_s, seed)
        }
        RecordingRef::Dataset(id) => dataset
            .ok_or_else(|| Error::invalid(format!("dataset:{id} needs a dataset")))?
            .recordings
            .iter()
            .find(|r| r.id() == *id)
            .cloned()
            .ok_or_else(|| Error::Unknown {
                what: "recording",
                value: id.clone(),
            }),
    }
}

/// The scenario's recording with its fall injected, the prior activity
/// and the injection index.
pub fn scenario_recording(sc: &Scenario, dataset: Option<&Dataset>) -> Result<(Recording, ActivityLabel, usize)> {
    let base = resolve_recording(&sc.recording, sc.seed, dataset)?;
    let activity = base
        .label
        .activity()
        .ok_or_else(|| Error::invalid(format!("{} is not an activity recording", base.id())))?;
    let at = (sc.inject_at_s * base.sample_rate_hz).round() as usize;
    let rec = inject_fall(&base, at, sc.fall_kind, LYING_S, sc.seed)?;
    Ok((rec, activity, at))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioOutcome {
    pub scenario: usize,
    pub activity: ActivityLabel,
    pub fall_kind: FallKind,
    /// An alert reached the server for the injected fall.
    pub detected: bool,
    pub predicted: Option<ActivityLabel>,
    /// Events reported before the fall began.
    pub false_alarms: usize,
    pub suppressed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorRow {
    pub activity: ActivityLabel,
    pub scenarios: usize,
    pub detected: usize,
    pub correct: usize,
    /// `correct / detected`; `None` when no fall was detected.
    pub accuracy: Option<f64>,
    /// Wrong predictions by label.
    pub false_detections: BTreeMap<ActivityLabel, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorEvalReport {
    pub outcomes: Vec<ScenarioOutcome>,
    pub rows: Vec<PriorRow>,
    /// Mean of the row accuracies that exist.
    pub mean_accuracy: Option<f64>,
}

pub const CANNOT_DETECT: &str = "cannot detect falling";

impl PriorEvalReport {
    pub fn row(&self, activity: ActivityLabel) -> Option<&PriorRow> {
        self.rows.iter().find(|r| r.activity == activity)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("prior_activity,scenarios,detected,correct,accuracy,false_detection\n");
        for r in &self.rows {
            let wrong: Vec<String> = r.false_detections.iter().map(|(l, c)| format!("{l}x{c}")).collect();
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.activity,
                r.scenarios,
                r.detected,
                r.correct,
                r.accuracy
                    .map_or(CANNOT_DETECT.to_string(), |a| format!("{:.2}", a * 100.0)),
                wrong.join(" ")
            ));
        }
        out.push_str(&format!(
            "MEAN,,,,{},\n",
            self.mean_accuracy
                .map_or(CANNOT_DETECT.to_string(), |a| format!("{:.2}", a * 100.0))
        ));
        out
    }

    pub fn to_table(&self) -> String {
        super::aligned(&super::csv_rows(&self.to_csv()))
    }
}

/// Replays every scenario through a device simulator connected to an
/// in-process alert service. Scenarios run in parallel; results keep
/// scenario order.
pub fn eval_prior(
    model: Arc<TrainedModel>,
    scenarios: &[Scenario],
    dataset: Option<&Dataset>,
    device: &DeviceConfig,
) -> Result<PriorEvalReport> {
    if scenarios.is_empty() {
        return Err(Error::invalid("no scenarios"));
    }
    let service = AlertService::new(model, Box::new(NullSink));
    let outcomes = scenarios
        .par_iter()
        .enumerate()
        .map(|(i, sc)| {
            let (rec, activity, at) = scenario_recording(sc, dataset)?;
            let mut transport = LocalTransport {
                service: &service,
                peer: format!("scenario-{i}"),
            };
            let summary = run_device_sim(&rec, device, &mut transport)?;
            let mut out = ScenarioOutcome {
                scenario: i,
                activity,
                fall_kind: sc.fall_kind,
                detected: false,
                predicted: None,
                false_alarms: 0,
                suppressed: 0,
            };
            for e in &summary.events {
                if e.index < at {
                    out.false_alarms += 1;
                    continue;
                }
                match &e.dispatch {
                    Dispatch::Suppressed => out.suppressed += 1,
                    Dispatch::Sent { response } if !out.detected => {
                        out.detected = true;
                        if let Some(ServerMessage::Response(r)) = response {
                            out.predicted = Some(r.prior_activity);
                        }
                    }
                    _ => {}
                }
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut rows: Vec<PriorRow> = Vec::new();
    for o in &outcomes {
        let idx = match rows.iter().position(|r| r.activity == o.activity) {
            Some(i) => i,
            None => {
                rows.push(PriorRow {
                    activity: o.activity,
                    scenarios: 0,
                    detected: 0,
                    correct: 0,
                    accuracy: None,
                    false_detections: BTreeMap::new(),
                });
                rows.len() - 1
            }
        };
        let r = &mut rows[idx];
        r.scenarios += 1;
        if o.detected {
            r.detected += 1;
            match o.predicted {
                Some(p) if p == o.activity => r.correct += 1,
                Some(p) => *r.false_detections.entry(p).or_insert(0) += 1,
                None => {}
            }
        }
    }
    rows.sort_by_key(|r| r.activity);
    for r in &mut rows {
        r.accuracy = (r.detected > 0).then(|| r.correct as f64 / r.detected as f64);
    }
    let accs: Vec<f64> = rows.iter().filter_map(|r| r.accuracy).collect();
    let mean_accuracy = (!accs.is_empty()).then(|| accs.iter().sum::<f64>() / accs.len() as f64);
    Ok(PriorEvalReport {
        outcomes,
        rows,
        mean_accuracy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scenario_text_round_trip() {
        let s = default_scenarios(2, 5);
        assert_eq!(s.len(), 22);
        assert_eq!(parse_scenarios(&scenarios_to_text(&s)).unwrap(), s);
    }

    #[test]
    fn scenario_errors_name_the_column() {
        match parse_scenarios("synthetic:WALK:6,abc,FALL,1\n") {
            Err(Error::Parse { row: 1, column, .. }) => assert_eq!(column, "inject_at_s"),
            other => panic!("{other:?}"),
        }
        assert!(parse_scenarios("synthetic:FLY:6,6,FALL,1\n").is_err());
        assert!(parse_scenarios("# only a comment\n").is_err());
    }
}
