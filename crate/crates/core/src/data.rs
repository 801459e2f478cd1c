//! Domain types for IMU recordings, the delimited dataset format, and
//! train/validation splitting.
//!
//! Dataset files are flat comma-separated tables with the header
//! `subject,location,label,session,t,ax,ay,az,gx,gy,gz`, one row per sample.
//! Acceleration is in m/s², angular velocity in °/s and time in seconds.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Standard gravity used throughout for m/s² ↔ g conversion.
pub const GRAVITY: f64 = 9.8;
/// Accelerometer full scale (±16 g).
pub const MAX_ACCEL: f64 = 16.0 * GRAVITY;
/// Gyroscope full scale (±2000 °/s).
pub const MAX_GYRO: f64 = 2000.0;
pub const DEFAULT_RATE_HZ: f64 = 50.0;
/// Gaps longer than this (seconds) start a new session.
pub const SESSION_GAP_S: f64 = 0.5;

pub const DATASET_HEADER: [&str; 11] = [
    "subject", "location", "label", "session", "t", "ax", "ay", "az", "gx", "gy", "gz",
];

/// One timestamped 6-axis IMU reading.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub ax: f64,
    pub ay: f64,
    pub az: f64,
    pub gx: f64,
    pub gy: f64,
    pub gz: f64,
}

impl Sample {
    pub fn new(t: f64, accel: [f64; 3], gyro: [f64; 3]) -> Self {
        Sample {
            t,
            ax: accel[0],
            ay: accel[1],
            az: accel[2],
            gx: gyro[0],
            gy: gyro[1],
            gz: gyro[2],
        }
    }

    pub fn accel(&self) -> [f64; 3] {
        [self.ax, self.ay, self.az]
    }

    pub fn gyro(&self) -> [f64; 3] {
        [self.gx, self.gy, self.gz]
    }

    /// `[ax, ay, az, gx, gy, gz]`
    pub fn channels(&self) -> [f64; 6] {
        [self.ax, self.ay, self.az, self.gx, self.gy, self.gz]
    }

    pub fn from_channels(t: f64, c: [f64; 6]) -> Self {
        Sample::new(t, [c[0], c[1], c[2]], [c[3], c[4], c[5]])
    }

    /// Checks finiteness and the sensor full-scale ranges.
    pub fn check_range(&self) -> std::result::Result<(), String> {
        if !self.t.is_finite() {
            return Err("non-finite timestamp".into());
        }
        for (name, v) in ["ax", "ay", "az"].iter().zip(self.accel()) {
            if !v.is_finite() || v.abs() > MAX_ACCEL {
                return Err(format!("{name}={v} outside ±{MAX_ACCEL} m/s²"));
            }
        }
        for (name, v) in ["gx", "gy", "gz"].iter().zip(self.gyro()) {
            if !v.is_finite() || v.abs() > MAX_GYRO {
                return Err(format!("{name}={v} outside ±{MAX_GYRO} °/s"));
            }
        }
        Ok(())
    }
}

macro_rules! string_enum {
    ($(#[$meta:meta])* $name:ident, $what:literal { $($variant:ident => $text:literal),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        pub enum $name {
            $(#[serde(rename = $text)] $variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self {
                    $($name::$variant => $text),+
                }
            }

            pub fn index(self) -> usize {
                Self::ALL.iter().position(|v| *v == self).unwrap()
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $name {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                match s.trim() {
                    $($text => Ok($name::$variant),)+
                    other => Err(Error::Unknown { what: $what, value: other.to_string() }),
                }
            }
        }
    };
}

string_enum!(
    /// The eleven daily-living activities.
    ActivityLabel, "activity label" {
        Walk => "WALK",
        WalkUp => "WALK_UP",
        WalkDown => "WALK_DOWN",
        JumpingJack => "JUMPING_JACK",
        Jump => "JUMP",
        Run => "RUN",
        Sit => "SIT",
        SitUp => "SIT_UP",
        Stand => "STAND",
        Up => "UP",
        Down => "DOWN",
    }
);

string_enum!(
    BodyLocation, "body location" {
        RightArm => "RIGHT_ARM",
        LeftChest => "LEFT_CHEST",
        LeftWrist => "LEFT_WRIST",
        LeftFoot => "LEFT_FOOT",
    }
);

string_enum!(
    FallKind, "fall kind" {
        Fall => "FALL",
        FallKneesFirst => "FALL_KNEES_FIRST",
    }
);

impl ActivityLabel {
    /// Activities that end with the wearer seated.
    pub fn is_seated(self) -> bool {
        matches!(self, ActivityLabel::Sit | ActivityLabel::SitUp | ActivityLabel::Down)
    }
}

/// What a recording contains: an activity or a fall.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RecordingLabel {
    Activity(ActivityLabel),
    Fall(FallKind),
}

impl RecordingLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            RecordingLabel::Activity(a) => a.as_str(),
            RecordingLabel::Fall(k) => k.as_str(),
        }
    }

    pub fn activity(self) -> Option<ActivityLabel> {
        match self {
            RecordingLabel::Activity(a) => Some(a),
            RecordingLabel::Fall(_) => None,
        }
    }

    pub fn fall(self) -> Option<FallKind> {
        match self {
            RecordingLabel::Fall(k) => Some(k),
            RecordingLabel::Activity(_) => None,
        }
    }
}

impl fmt::Display for RecordingLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RecordingLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if let Ok(k) = s.parse::<FallKind>() {
            return Ok(RecordingLabel::Fall(k));
        }
        match s.parse::<ActivityLabel>() {
            Ok(a) => Ok(RecordingLabel::Activity(a)),
            Err(_) => Err(Error::Unknown {
                what: "recording label",
                value: s.trim().to_string(),
            }),
        }
    }
}

/// A contiguous, time-ordered sample stream from one sensor placement.
#[derive(Debug, Clone, PartialEq)]
pub struct Recording {
    pub subject_id: String,
    pub location: BodyLocation,
    pub label: RecordingLabel,
    pub session: String,
    pub sample_rate_hz: f64,
    pub samples: Vec<Sample>,
}

impl Recording {
    pub fn new(
        subject_id: impl Into<String>,
        location: BodyLocation,
        label: RecordingLabel,
        session: impl Into<String>,
        sample_rate_hz: f64,
        samples: Vec<Sample>,
    ) -> Result<Self> {
        let rec = Recording {
            subject_id: subject_id.into(),
            location,
            label,
            session: session.into(),
            sample_rate_hz,
            samples,
        };
        rec.validate()?;
        Ok(rec)
    }

    pub fn id(&self) -> String {
        format!("{}/{}/{}/{}", self.subject_id, self.location, self.label, self.session)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sample_rate_hz.is_finite() && self.sample_rate_hz > 0.0) {
            return Err(Error::invalid(format!("{}: sample rate must be positive", self.id())));
        }
        if self.samples.is_empty() {
            return Err(Error::invalid(format!("{}: no samples", self.id())));
        }
        for (i, s) in self.samples.iter().enumerate() {
            s.check_range()
                .map_err(|message| Error::SampleRange { row: i, message })?;
        }
        if self.samples.windows(2).any(|w| w[1].t < w[0].t) {
            return Err(Error::invalid(format!("{}: timestamps decrease", self.id())));
        }
        if let Some(spacing) = median_spacing(&self.samples) {
            let expected = 1.0 / self.sample_rate_hz;
            if (spacing - expected).abs() > 0.1 * expected {
                return Err(Error::invalid(format!(
                    "{}: median spacing {spacing:.5}s does not match declared {} Hz",
                    self.id(),
                    self.sample_rate_hz
                )));
            }
        }
        Ok(())
    }
}

fn median_spacing(samples: &[Sample]) -> Option<f64> {
    if samples.len() < 2 {
        return None;
    }
    let mut d: Vec<f64> = samples.windows(2).map(|w| w[1].t - w[0].t).collect();
    d.sort_by(f64::total_cmp);
    let n = d.len();
    Some(if n % 2 == 1 {
        d[n / 2]
    } else {
        0.5 * (d[n / 2 - 1] + d[n / 2])
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub recordings: Vec<Recording>,
    pub provenance: String,
}

impl Dataset {
    pub fn new(recordings: Vec<Recording>, provenance: impl Into<String>) -> Self {
        Dataset {
            recordings,
            provenance: provenance.into(),
        }
    }

    pub fn len(&self) -> usize {
        self.recordings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.recordings.is_empty()
    }

    pub fn at_location(&self, location: BodyLocation) -> impl Iterator<Item = &Recording> {
        self.recordings.iter().filter(move |r| r.location == location)
    }

    /// Serializes to the canonical delimited form.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        out.push_str(&DATASET_HEADER.join(","));
        out.push('\n');
        for rec in &self.recordings {
            for s in &rec.samples {
                out.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{},{},{}\n",
                    rec.subject_id, rec.location, rec.label, rec.session, s.t, s.ax, s.ay, s.az, s.gx, s.gy, s.gz
                ));
            }
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(self.to_csv_string().as_bytes())
            .map_err(|e| Error::io(path, e))
    }
}

/// Foreign-to-canonical name mapping for columns, labels and locations.
///
/// Remap files hold `key=value` lines. Keys prefixed `label.` or `location.`
/// rename cell values in those columns; `column.` (or no prefix) renames a
/// header. Blank lines and `#` comments are ignored.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Remap {
    pub columns: HashMap<String, String>,
    pub labels: HashMap<String, String>,
    pub locations: HashMap<String, String>,
}

impl Remap {
    pub fn parse(text: &str) -> Result<Self> {
        let mut remap = Remap::default();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                row: lineno + 1,
                column: "remap".into(),
                message: format!("expected key=value, got `{line}`"),
            })?;
            let (key, value) = (key.trim(), value.trim().to_string());
            if let Some(k) = key.strip_prefix("label.") {
                remap.labels.insert(k.to_string(), value);
            } else if let Some(k) = key.strip_prefix("location.") {
                remap.locations.insert(k.to_string(), value);
            } else {
                let k = key.strip_prefix("column.").unwrap_or(key);
                remap.columns.insert(k.to_string(), value);
            }
        }
        Ok(remap)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    fn column<'a>(&'a self, name: &'a str) -> &'a str {
        self.columns.get(name).map(String::as_str).unwrap_or(name)
    }

    fn label<'a>(&'a self, v: &'a str) -> &'a str {
        self.labels.get(v).map(String::as_str).unwrap_or(v)
    }

    fn location<'a>(&'a self, v: &'a str) -> &'a str {
        self.locations.get(v).map(String::as_str).unwrap_or(v)
    }
}

#[derive(Debug, Clone)]
pub struct LoadOptions {
    pub remap: Remap,
    pub sample_rate_hz: f64,
    pub session_gap_s: f64,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions {
            remap: Remap::default(),
            sample_rate_hz: DEFAULT_RATE_HZ,
            session_gap_s: SESSION_GAP_S,
        }
    }
}

pub fn load_dataset(path: &Path, remap: &Remap) -> Result<Dataset> {
    let opts = LoadOptions {
        remap: remap.clone(),
        ..LoadOptions::default()
    };
    load_dataset_with(path, &opts)
}

pub fn load_dataset_with(path: &Path, opts: &LoadOptions) -> Result<Dataset> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut ds = parse_dataset(&text, opts)?;
    ds.provenance = path.display().to_string();
    Ok(ds)
}

type GroupKey = (String, BodyLocation, RecordingLabel, String);

/// Parses dataset text. Rows are grouped by (subject, location, label, session)
/// in order of first appearance, sorted by time and split at gaps.
pub fn parse_dataset(text: &str, opts: &LoadOptions) -> Result<Dataset> {
    if text.trim().is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| Error::Schema(e.to_string()))?.clone();
    let canonical: Vec<&str> = headers.iter().map(|h| opts.remap.column(h)).collect();
    let mut idx = [0usize; 11];
    for (slot, want) in idx.iter_mut().zip(DATASET_HEADER) {
        *slot = canonical
            .iter()
            .position(|c| *c == want)
            .ok_or_else(|| Error::Schema(format!("missing column `{want}`")))?;
    }

    let mut order: Vec<GroupKey> = Vec::new();
    let mut groups: HashMap<GroupKey, Vec<Sample>> = HashMap::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let row = e.position().map(|p| p.line() as usize).unwrap_or(0);
            Error::Parse {
                row,
                column: String::new(),
                message: e.to_string(),
            }
        })?;
        let row = record.position().map(|p| p.line() as usize).unwrap_or(0);
        let cell = |i: usize| record.get(idx[i]).unwrap_or("");
        let subject = cell(0).to_string();
        let location: BodyLocation = opts.remap.location(cell(1)).parse().map_err(|e: Error| Error::Parse {
            row,
            column: "location".into(),
            message: e.to_string(),
        })?;
        let label: RecordingLabel = opts.remap.label(cell(2)).parse().map_err(|e: Error| Error::Parse {
            row,
            column: "label".into(),
            message: e.to_string(),
        })?;
        let session = cell(3).to_string();
        let mut values = [0.0f64; 7];
        for (k, v) in values.iter_mut().enumerate() {
            let raw = cell(4 + k);
            *v = raw.parse::<f64>().map_err(|_| Error::Parse {
                row,
                column: DATASET_HEADER[4 + k].into(),
                message: format!("`{raw}` is not a number"),
            })?;
        }
        let sample = Sample {
            t: values[0],
            ax: values[1],
            ay: values[2],
            az: values[3],
            gx: values[4],
            gy: values[5],
            gz: values[6],
        };
        sample
            .check_range()
            .map_err(|message| Error::SampleRange { row, message })?;
        let key = (subject, location, label, session);
        groups
            .entry(key.clone())
            .or_insert_with(|| {
                order.push(key);
                Vec::new()
            })
            .push(sample);
    }
    if order.is_empty() {
        return Err(Error::EmptyDataset);
    }

    let mut recordings = Vec::new();
    for key in order {
        let mut samples = groups.remove(&key).unwrap();
        samples.sort_by(|a, b| a.t.total_cmp(&b.t));
        let (subject, location, label, session) = key;
        for (piece, chunk) in split_on_gaps(samples, opts.session_gap_s).into_iter().enumerate() {
            let session = if piece == 0 {
                session.clone()
            } else {
                format!("{session}~{piece}")
            };
            recordings.push(Recording::new(
                subject.clone(),
                location,
                label,
                session,
                opts.sample_rate_hz,
                chunk,
            )?);
        }
    }
    Ok(Dataset::new(recordings, String::new()))
}

fn split_on_gaps(samples: Vec<Sample>, gap: f64) -> Vec<Vec<Sample>> {
    let mut out: Vec<Vec<Sample>> = Vec::new();
    let mut current: Vec<Sample> = Vec::new();
    for s in samples {
        if let Some(last) = current.last() {
            if s.t - last.t > gap {
                out.push(std::mem::take(&mut current));
            }
        }
        current.push(s);
    }
    if !current.is_empty() {
        out.push(current);
    }
    out
}

/// Index partition produced by the stratified splitters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    /// Labels with fewer than two items; those items went to training.
    pub warnings: Vec<String>,
}

/// Splits item indices so that each label contributes `round(n·ratio)` items
/// (clamped to `1..n`) to training.
pub fn stratified_split<L>(labels: &[L], ratio: f64, seed: u64) -> Result<SplitIndices>
where
    L: Ord + Clone + fmt::Display,
{
    check_ratio(ratio)?;
    let mut by_label: BTreeMap<L, Vec<usize>> = BTreeMap::new();
    for (i, l) in labels.iter().enumerate() {
        by_label.entry(l.clone()).or_default().push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut validation = Vec::new();
    let mut warnings = Vec::new();
    for (label, mut items) in by_label {
        if items.len() < 2 {
            log::warn!("label {label} has {} item(s); assigned to training", items.len());
            warnings.push(label.to_string());
            train.extend(items);
            continue;
        }
        items.shuffle(&mut rng);
        let n = items.len();
        let n_train = ((n as f64 * ratio).round() as usize).clamp(1, n - 1);
        train.extend_from_slice(&items[..n_train]);
        validation.extend_from_slice(&items[n_train..]);
    }
    train.sort_unstable();
    validation.sort_unstable();
    Ok(SplitIndices {
        train,
        validation,
        warnings,
    })
}

/// Splits by group (e.g. subject) so that no group straddles the partition.
pub fn grouped_split<G>(groups: &[G], ratio: f64, seed: u64) -> Result<SplitIndices>
where
    G: Ord + Clone,
{
    check_ratio(ratio)?;
    let mut distinct: Vec<G> = groups.to_vec();
    distinct.sort();
    distinct.dedup();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    distinct.shuffle(&mut rng);
    let n = distinct.len();
    let n_train = if n < 2 {
        n
    } else {
        ((n as f64 * ratio).round() as usize).clamp(1, n - 1)
    };
    let train_groups: Vec<&G> = distinct[..n_train].iter().collect();
    let (mut train, mut validation) = (Vec::new(), Vec::new());
    for (i, g) in groups.iter().enumerate() {
        if train_groups.contains(&g) {
            train.push(i);
        } else {
            validation.push(i);
        }
    }
    Ok(SplitIndices {
        train,
        validation,
        warnings: Vec::new(),
    })
}

fn check_ratio(ratio: f64) -> Result<()> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::invalid(format!("split ratio {ratio} not in (0, 1)")));
    }
    Ok(())
}

/// Stratified (by recording label) split of a dataset's recordings.
pub fn split_train_validation(dataset: &Dataset, ratio: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    let labels: Vec<RecordingLabel> = dataset.recordings.iter().map(|r| r.label).collect();
    let split = stratified_split(&labels, ratio, seed)?;
    let pick = |idx: &[usize]| -> Vec<Recording> { idx.iter().map(|&i| dataset.recordings[i].clone()).collect() };
    Ok((
        Dataset::new(pick(&split.train), format!("{}#train", dataset.provenance)),
        Dataset::new(pick(&split.validation), format!("{}#validation", dataset.provenance)),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(session: &str, t: f64) -> String {
        format!("s1,LEFT_CHEST,WALK,{session},{t},0,9.8,0,1,2,3\n")
    }

    fn header() -> String {
        format!("{}\n", DATASET_HEADER.join(","))
    }

    #[test]
    fn label_round_trip() {
        for l in ActivityLabel::ALL {
            assert_eq!(l.as_str().parse::<ActivityLabel>().unwrap(), *l);
        }
        assert_eq!(ActivityLabel::ALL.len(), 11);
        assert!("LEG".parse::<BodyLocation>().is_err());
    }

    #[test]
    fn loads_single_session() {
        let mut text = header();
        for i in 0..100 {
            text.push_str(&row("a", i as f64 * 0.02));
        }
        let ds = parse_dataset(&text, &LoadOptions::default()).unwrap();
        assert_eq!(ds.recordings.len(), 1);
        assert_eq!(ds.recordings[0].samples.len(), 100);
    }

    #[test]
    fn non_numeric_cell_names_row() {
        let mut text = header();
        text.push_str(&row("a", 0.0));
        text.push_str("s1,LEFT_CHEST,WALK,a,0.02,abc,9.8,0,1,2,3\n");
        match parse_dataset(&text, &LoadOptions::default()) {
            Err(Error::Parse { row, column, .. }) => {
                assert_eq!(row, 3);
                assert_eq!(column, "ax");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_column_and_empty_file() {
        let text = "subject,location,label,session,t,ax,ay,az,gx,gy\n";
        assert!(matches!(
            parse_dataset(text, &LoadOptions::default()),
            Err(Error::Schema(_))
        ));
        assert!(matches!(
            parse_dataset("", &LoadOptions::default()),
            Err(Error::EmptyDataset)
        ));
        assert!(matches!(
            parse_dataset(&header(), &LoadOptions::default()),
            Err(Error::EmptyDataset)
        ));
    }

    #[test]
    fn out_of_range_rejected() {
        let mut text = header();
        text.push_str("s1,LEFT_CHEST,WALK,a,0,200,0,0,0,0,0\n");
        assert!(matches!(
            parse_dataset(&text, &LoadOptions::default()),
            Err(Error::SampleRange { row: 2, .. })
        ));
    }

    #[test]
    fn gap_splits_session() {
        let mut text = header();
        for i in 0..10 {
            text.push_str(&row("a", i as f64 * 0.02));
        }
        for i in 0..10 {
            text.push_str(&row("a", 5.0 + i as f64 * 0.02));
        }
        let ds = parse_dataset(&text, &LoadOptions::default()).unwrap();
        assert_eq!(ds.recordings.len(), 2);
        assert_eq!(ds.recordings[1].session, "a~1");
    }

    #[test]
    fn remap_columns_and_labels() {
        let remap = Remap::parse(
            "# foreign names\nacc_x=ax\ncolumn.who=subject\nlabel.walking=WALK\nlocation.chest=LEFT_CHEST\n",
        )
        .unwrap();
        let text = "who,location,label,session,t,acc_x,ay,az,gx,gy,gz\n\
                    p1,chest,walking,1,0,0,9.8,0,0,0,0\n";
        let opts = LoadOptions {
            remap,
            ..LoadOptions::default()
        };
        let ds = parse_dataset(text, &opts).unwrap();
        assert_eq!(ds.recordings[0].subject_id, "p1");
        assert_eq!(ds.recordings[0].label, RecordingLabel::Activity(ActivityLabel::Walk));
    }

    #[test]
    fn stratified_split_counts() {
        let labels = vec!["A"; 10];
        let s = stratified_split(&labels, 0.7, 1).unwrap();
        assert_eq!((s.train.len(), s.validation.len()), (7, 3));

        let mut labels = vec!["A"; 10];
        labels.extend(vec!["B"; 10]);
        let s = stratified_split(&labels, 0.7, 1).unwrap();
        assert_eq!(s.train.iter().filter(|&&i| i < 10).count(), 7);
        assert_eq!(s.train.iter().filter(|&&i| i >= 10).count(), 7);
        assert_eq!(s, stratified_split(&labels, 0.7, 1).unwrap());
    }

    #[test]
    fn singleton_label_goes_to_training() {
        let labels = vec!["A", "A", "A", "B"];
        let s = stratified_split(&labels, 0.5, 3).unwrap();
        assert!(s.train.contains(&3));
        assert_eq!(s.warnings, vec!["B".to_string()]);
        assert!(stratified_split(&labels, 1.0, 3).is_err());
    }

    #[test]
    fn grouped_split_keeps_groups_together() {
        let groups = ["a", "a", "b", "b", "c", "c", "d"];
        let s = grouped_split(&groups, 0.5, 9).unwrap();
        for &i in &s.train {
            for &j in &s.validation {
                assert_ne!(groups[i], groups[j]);
            }
        }
        assert_eq!(s.train.len() + s.validation.len(), groups.len());
    }

    #[test]
    fn rate_mismatch_rejected() {
        let samples: Vec<Sample> = (0..10)
            .map(|i| Sample::new(i as f64 * 0.1, [0.0, 9.8, 0.0], [0.0; 3]))
            .collect();
        let r = Recording::new(
            "s",
            BodyLocation::LeftChest,
            RecordingLabel::Activity(ActivityLabel::Stand),
            "1",
            50.0,
            samples,
        );
        assert!(r.is_err());
    }
}
