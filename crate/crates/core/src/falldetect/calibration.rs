//! Calibration files: `key=value` lines holding every detector parameter
//! for both fall kinds, plus free-form `provenance.*` entries.
//!
//! ```text
//! FALL.three_phase.t1=0.45
//! FALL.dtw.template=1.02,0.98,...
//! provenance.dataset_sha256=...
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Detector, DetectorId, DtwDetector, DtwMode, FallKind, ThreePhaseParams, TwoPhaseParams};
use crate::error::{Error, Result};
use crate::signal::LowpassConfig;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct KindCalibration {
    pub two_phase: TwoPhaseParams,
    pub three_phase: ThreePhaseParams,
    pub dtw: Option<DtwDetector>,
}

impl KindCalibration {
    pub fn detector(&self, id: DetectorId) -> Option<Detector> {
        match id {
            DetectorId::TwoPhase => Some(Detector::TwoPhase(self.two_phase)),
            DetectorId::ThreePhase => Some(Detector::ThreePhase(self.three_phase)),
            DetectorId::Dtw => self.dtw.clone().map(Detector::Dtw),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Calibration {
    pub fall: KindCalibration,
    pub knees: KindCalibration,
    pub provenance: BTreeMap<String, String>,
}

impl Calibration {
    pub fn kind(&self, kind: FallKind) -> &KindCalibration {
        match kind {
            FallKind::Fall => &self.fall,
            FallKind::FallKneesFirst => &self.knees,
        }
    }

    pub fn kind_mut(&mut self, kind: FallKind) -> &mut KindCalibration {
        match kind {
            FallKind::Fall => &mut self.fall,
            FallKind::FallKneesFirst => &mut self.knees,
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("# fallsense detector calibration\n");
        for &kind in FallKind::ALL {
            let k = self.kind(kind);
            let t = &k.two_phase;
            let _ = writeln!(out, "{kind}.two_phase.lft={}", t.lft);
            let _ = writeln!(out, "{kind}.two_phase.uft={}", t.uft);
            let _ = writeln!(out, "{kind}.two_phase.max_gap={}", t.max_gap);
            let p = &k.three_phase;
            let _ = writeln!(out, "{kind}.three_phase.t1={}", p.t1);
            let _ = writeln!(out, "{kind}.three_phase.t2={}", p.t2);
            let _ = writeln!(out, "{kind}.three_phase.settle_low={}", p.settle_low);
            let _ = writeln!(out, "{kind}.three_phase.settle_high={}", p.settle_high);
            let _ = writeln!(out, "{kind}.three_phase.gap12={}", p.gap12);
            let _ = writeln!(out, "{kind}.three_phase.gap23={}", p.gap23);
            let _ = writeln!(out, "{kind}.three_phase.settle_len={}", p.settle_len);
            if let Some(d) = &k.dtw {
                let template: Vec<String> = d.template.iter().map(|v| v.to_string()).collect();
                let _ = writeln!(out, "{kind}.dtw.template={}", template.join(","));
                let _ = writeln!(out, "{kind}.dtw.threshold={}", d.threshold);
                match d.filter {
                    Some(f) => {
                        let _ = writeln!(out, "{kind}.dtw.filter_order={}", f.order);
                        let _ = writeln!(out, "{kind}.dtw.filter_cutoff_hz={}", f.cutoff_hz);
                    }
                    None => {
                        let _ = writeln!(out, "{kind}.dtw.filter_order=0");
                    }
                }
                let _ = writeln!(out, "{kind}.dtw.min_peak={}", d.min_peak);
                let _ = writeln!(out, "{kind}.dtw.context={}", d.context);
                let mode = match d.mode {
                    DtwMode::Offline => "offline",
                    DtwMode::Streaming => "streaming",
                };
                let _ = writeln!(out, "{kind}.dtw.mode={mode}");
            }
        }
        for (k, v) in &self.provenance {
            let _ = writeln!(out, "provenance.{k}={}", v.replace('\n', " "));
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cal = Calibration::default();
        let mut dtw: BTreeMap<FallKind, BTreeMap<String, String>> = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |msg: String| Error::Parse {
                row: n + 1,
                column: String::new(),
                message: msg,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| bad(format!("expected key=value, got {line:?}")))?;
            let (key, value) = (key.trim(), value.trim());
            if let Some(p) = key.strip_prefix("provenance.") {
                cal.provenance.insert(p.to_string(), value.to_string());
                continue;
            }
            let mut parts = key.splitn(3, '.');
            let (Some(kind), Some(algo), Some(param)) = (parts.next(), parts.next(), parts.next()) else {
                return Err(bad(format!("unknown calibration key {key:?}")));
            };
            let kind: FallKind = kind.parse().map_err(|_| bad(format!("unknown fall kind in {key:?}")))?;
            let num = || {
                value
                    .parse::<f64>()
                    .map_err(|_| bad(format!("{key}: not a number: {value:?}")))
            };
            let int = || {
                value
                    .parse::<usize>()
                    .map_err(|_| bad(format!("{key}: not a count: {value:?}")))
            };
            let k = cal.kind_mut(kind);
            match (algo, param) {
                ("two_phase", "lft") => k.two_phase.lft = num()?,
                ("two_phase", "uft") => k.two_phase.uft = num()?,
                ("two_phase", "max_gap") => k.two_phase.max_gap = int()?,
                ("three_phase", "t1") => k.three_phase.t1 = num()?,
                ("three_phase", "t2") => k.three_phase.t2 = num()?,
                ("three_phase", "settle_low") => k.three_phase.settle_low = num()?,
                ("three_phase", "settle_high") => k.three_phase.settle_high = num()?,
                ("three_phase", "gap12") => k.three_phase.gap12 = int()?,
                ("three_phase", "gap23") => k.three_phase.gap23 = int()?,
                ("three_phase", "settle_len") => k.three_phase.settle_len = int()?,
                ("dtw", _) => {
                    dtw.entry(kind)
                        .or_default()
                        .insert(param.to_string(), value.to_string());
                }
                _ => return Err(bad(format!("unknown calibration key {key:?}"))),
            }
        }
        for (kind, fields) in dtw {
            cal.kind_mut(kind).dtw = Some(dtw_from_fields(kind, &fields)?);
        }
        for &kind in FallKind::ALL {
            let k = cal.kind(kind);
            k.two_phase.validate()?;
            k.three_phase.validate()?;
            if let Some(d) = &k.dtw {
                d.validate()?;
            }
        }
        Ok(cal)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }
}

fn dtw_from_fields(kind: FallKind, f: &BTreeMap<String, String>) -> Result<DtwDetector> {
    let bad = |m: String| Error::Schema(format!("{kind}.dtw: {m}"));
    let num = |key: &str| -> Result<Option<f64>> {
        f.get(key)
            .map(|v| {
                v.parse::<f64>()
                    .map_err(|_| bad(format!("{key} is not a number: {v:?}")))
            })
            .transpose()
    };
    for key in f.keys() {
        if ![
            "template",
            "threshold",
            "filter_order",
            "filter_cutoff_hz",
            "min_peak",
            "context",
            "mode",
        ]
        .contains(&key.as_str())
        {
            return Err(bad(format!("unknown key {key:?}")));
        }
    }
    let template = f
        .get("template")
        .ok_or_else(|| bad("missing template".into()))?
        .split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| bad(format!("bad template value {v:?}")))
        })
        .collect::<Result<Vec<f64>>>()?;
    let threshold = num("threshold")?.ok_or_else(|| bad("missing threshold".into()))?;
    let mut d = DtwDetector::new(template, threshold);
    let order = num("filter_order")?.map(|o| o as usize);
    d.filter = match order {
        Some(0) => None,
        Some(order) => Some(LowpassConfig {
            order,
            cutoff_hz: num("filter_cutoff_hz")?.unwrap_or(LowpassConfig::default().cutoff_hz),
        }),
        None => Some(LowpassConfig::default()),
    };
    if let Some(v) = num("min_peak")? {
        d.min_peak = v;
    }
    if let Some(v) = num("context")? {
        d.context = v as usize;
    }
    d.mode = match f.get("mode").map(String::as_str) {
        None | Some("offline") => DtwMode::Offline,
        Some("streaming") => DtwMode::Streaming,
        Some(other) => return Err(bad(format!("unknown mode {other:?}"))),
    };
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let mut cal = Calibration::default();
        cal.fall.three_phase.t1 = 0.45;
        cal.knees.two_phase.uft = 1.7000000000000002;
        let mut d = DtwDetector::new(vec![1.0, 0.1 + 0.2, 3.5], 2.75);
        d.mode = DtwMode::Streaming;
        cal.knees.dtw = Some(d);
        cal.provenance.insert("grid".into(), "t1=0.2..0.9(15)".into());
        let back = Calibration::parse(&cal.to_text()).unwrap();
        assert_eq!(back, cal);
    }

    #[test]
    fn rejects_unknown_and_invalid() {
        assert!(Calibration::parse("FALL.three_phase.t9=1").is_err());
        assert!(Calibration::parse("FALL.three_phase.t1=1.5").is_err());
        assert!(Calibration::parse("nonsense").is_err());
        assert!(Calibration::parse("FALL.dtw.threshold=2").is_err());
    }
}
