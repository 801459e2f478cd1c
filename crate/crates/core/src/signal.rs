//! Signal mathematics: windowing, spherical conversion, window features,
//! G-force, fall cropping and Butterworth low-pass filtering.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::{ActivityLabel, Recording, Sample, GRAVITY};
use crate::error::{Error, Result};

/// 2 s at 50 Hz.
pub const WINDOW_LEN: usize = 100;
pub const CROP_SIZE: usize = 20;
pub const FEATURE_COUNT: usize = 18;
/// Bumped whenever the feature order or definitions change.
pub const FEATURE_ORDER_VERSION: u32 = 1;

/// A fixed-length contiguous slice of a recording.
#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    pub samples: Vec<Sample>,
    pub recording: String,
    pub start: usize,
    pub label: Option<ActivityLabel>,
}

/// Cuts a recording into windows at offsets `0, stride, 2·stride, …`,
/// dropping the trailing partial window.
pub fn segment_windows(recording: &Recording, window_len: usize, stride: usize) -> Result<Vec<Window>> {
    let offsets = window_offsets(recording.samples.len(), window_len, stride)?;
    let id = recording.id();
    let label = recording.label.activity();
    Ok(offsets
        .map(|start| Window {
            samples: recording.samples[start..start + window_len].to_vec(),
            recording: id.clone(),
            start,
            label,
        })
        .collect())
}

pub fn window_offsets(len: usize, window_len: usize, stride: usize) -> Result<impl Iterator<Item = usize>> {
    if window_len < 2 {
        return Err(Error::invalid("window length must be at least 2"));
    }
    if stride < 1 {
        return Err(Error::invalid("stride must be at least 1"));
    }
    let last = len.checked_sub(window_len);
    Ok((0..).step_by(stride).take_while(move |&o| last.is_some_and(|l| o <= l)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphericalTriple {
    pub r: f64,
    /// Polar angle from +z, in `[0, π]`.
    pub theta: f64,
    /// Azimuth in `(-π, π]`.
    pub phi: f64,
}

/// Cartesian to spherical. `theta = 0` when `r = 0`; `phi = 0` when `x = y = 0`.
pub fn to_spherical(x: f64, y: f64, z: f64) -> SphericalTriple {
    let r = (x * x + y * y + z * z).sqrt();
    let theta = if r == 0.0 { 0.0 } else { (z / r).clamp(-1.0, 1.0).acos() };
    let phi = if x == 0.0 && y == 0.0 {
        0.0
    } else {
        let p = y.atan2(x);
        // atan2 yields -π for (x<0, y=-0.0); fold onto the half-open range.
        if p <= -PI {
            PI
        } else {
            p
        }
    };
    SphericalTriple { r, theta, phi }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CoordinateSystem {
    #[serde(rename = "CARTESIAN")]
    Cartesian,
    #[serde(rename = "SPHERICAL")]
    Spherical,
}

impl CoordinateSystem {
    pub const ALL: [CoordinateSystem; 2] = [CoordinateSystem::Cartesian, CoordinateSystem::Spherical];

    pub fn as_str(self) -> &'static str {
        match self {
            CoordinateSystem::Cartesian => "CARTESIAN",
            CoordinateSystem::Spherical => "SPHERICAL",
        }
    }

    /// The six per-sample channels this system produces.
    pub fn channel_names(self) -> [&'static str; 6] {
        match self {
            CoordinateSystem::Cartesian => ["ax", "ay", "az", "gx", "gy", "gz"],
            CoordinateSystem::Spherical => ["acc_r", "acc_theta", "acc_phi", "gyr_r", "gyr_theta", "gyr_phi"],
        }
    }

    fn channels(self, s: &Sample) -> [f64; 6] {
        match self {
            CoordinateSystem::Cartesian => s.channels(),
            CoordinateSystem::Spherical => {
                let a = to_spherical(s.ax, s.ay, s.az);
                let g = to_spherical(s.gx, s.gy, s.gz);
                [a.r, a.theta, a.phi, g.r, g.theta, g.phi]
            }
        }
    }
}

impl fmt::Display for CoordinateSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CoordinateSystem {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "CARTESIAN" => Ok(CoordinateSystem::Cartesian),
            "SPHERICAL" => Ok(CoordinateSystem::Spherical),
            other => Err(Error::Unknown {
                what: "coordinate system",
                value: other.to_string(),
            }),
        }
    }
}

/// Within-sensor channel pairs used for correlations, as channel indices.
pub const CORRELATION_PAIRS: [(usize, usize); 6] = [(0, 1), (0, 2), (1, 2), (3, 4), (3, 5), (4, 5)];

/// Feature names in serialized order: six means, six standard deviations,
/// then the six within-sensor correlations.
pub fn feature_names(system: CoordinateSystem) -> Vec<String> {
    let ch = system.channel_names();
    let mut names = Vec::with_capacity(FEATURE_COUNT);
    names.extend(ch.iter().map(|c| format!("mean_{c}")));
    names.extend(ch.iter().map(|c| format!("std_{c}")));
    names.extend(
        CORRELATION_PAIRS
            .iter()
            .map(|&(a, b)| format!("corr_{}_{}", ch[a], ch[b])),
    );
    names
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub system: CoordinateSystem,
    pub values: [f64; FEATURE_COUNT],
}

impl FeatureVector {
    pub fn means(&self) -> &[f64] {
        &self.values[0..6]
    }

    pub fn stds(&self) -> &[f64] {
        &self.values[6..12]
    }

    pub fn correlations(&self) -> &[f64] {
        &self.values[12..18]
    }
}

pub fn extract_features(window: &Window, system: CoordinateSystem) -> FeatureVector {
    features_of(&window.samples, system)
}

/// Features of an arbitrary sample slice (at least one sample).
pub fn features_of(samples: &[Sample], system: CoordinateSystem) -> FeatureVector {
    let mut channels: [Vec<f64>; 6] = Default::default();
    for s in samples {
        for (c, v) in channels.iter_mut().zip(system.channels(s)) {
            c.push(v);
        }
    }
    let mut values = [0.0; FEATURE_COUNT];
    for (i, c) in channels.iter().enumerate() {
        values[i] = mean(c);
        values[6 + i] = std_dev(c);
    }
    for (k, &(a, b)) in CORRELATION_PAIRS.iter().enumerate() {
        values[12 + k] = correlation(&channels[a], &channels[b]);
    }
    FeatureVector { system, values }
}

pub fn mean(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    x.iter().sum::<f64>() / x.len() as f64
}

/// Population standard deviation; exactly 0 for constant input.
pub fn std_dev(x: &[f64]) -> f64 {
    if is_constant(x) {
        return 0.0;
    }
    let m = mean(x);
    (x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / x.len() as f64).sqrt()
}

fn is_constant(x: &[f64]) -> bool {
    x.windows(2).all(|w| w[0] == w[1])
}

/// Sample Pearson correlation. Zero-variance input gives 0.
pub fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.len() < 2 {
        return Err(Error::invalid("pearson needs at least two points"));
    }
    Ok(correlation(a, b))
}

fn correlation(a: &[f64], b: &[f64]) -> f64 {
    if a.len() < 2 || is_constant(a) || is_constant(b) {
        return 0.0;
    }
    let (ma, mb) = (mean(a), mean(b));
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return 0.0;
    }
    (sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0)
}

/// Total acceleration in units of g.
pub fn gforce(sample: &Sample) -> f64 {
    (sample.ax * sample.ax + sample.ay * sample.ay + sample.az * sample.az).sqrt() / GRAVITY
}

#[derive(Debug, Clone, PartialEq)]
pub struct GForceSeries {
    pub values: Vec<f64>,
    pub rate_hz: f64,
}

impl GForceSeries {
    pub fn new(values: Vec<f64>, rate_hz: f64) -> Self {
        GForceSeries { values, rate_hz }
    }

    pub fn from_samples(samples: &[Sample], rate_hz: f64) -> Self {
        GForceSeries {
            values: samples.iter().map(gforce).collect(),
            rate_hz,
        }
    }

    pub fn from_recording(rec: &Recording) -> Self {
        Self::from_samples(&rec.samples, rec.sample_rate_hz)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// A 20-value segment around a fall's impact peak.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CroppedFall {
    pub values: Vec<f64>,
    /// Peak position in the source series.
    pub mark_index: usize,
    /// Source index of `values[0]`.
    pub start: usize,
}

/// Crops a G-force series around its global maximum (first on ties).
///
/// The right end is the first below-mean sample after the peak plus 10,
/// capped at 15 past the peak and at the series end; the crop extends 19
/// samples left of it, shifted right when that would start before 0.
pub fn crop_fall(series: &[f64]) -> Result<CroppedFall> {
    if series.len() < CROP_SIZE {
        return Err(Error::invalid(format!(
            "crop needs at least {CROP_SIZE} values, got {}",
            series.len()
        )));
    }
    let mark = argmax(series);
    Ok(crop_at(series, mark, mean(series)))
}

/// Crop rule with an explicit mark and reference mean. `series.len() >= 20`.
pub(crate) fn crop_at(series: &[f64], mark: usize, reference_mean: f64) -> CroppedFall {
    let last = series.len() - 1;
    let below = (mark + 1..series.len()).find(|&i| series[i] < reference_mean);
    let mut right = (mark + 15).min(last);
    if let Some(b) = below {
        right = right.min(b + 10);
    }
    let (left, right) = if right + 1 < CROP_SIZE {
        (0, CROP_SIZE - 1)
    } else {
        (right + 1 - CROP_SIZE, right)
    };
    CroppedFall {
        values: series[left..=right].to_vec(),
        mark_index: mark,
        start: left,
    }
}

/// Index of the first maximum.
pub fn argmax(x: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in x.iter().enumerate() {
        if *v > x[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LowpassConfig {
    pub order: usize,
    pub cutoff_hz: f64,
}

impl Default for LowpassConfig {
    fn default() -> Self {
        LowpassConfig {
            order: 2,
            cutoff_hz: 5.0,
        }
    }
}

/// Direct form II transposed second-order section.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Section {
    b: [f64; 3],
    a: [f64; 2],
}

/// Digital Butterworth low-pass, designed by the prewarped bilinear
/// transform and realized as cascaded first/second-order sections.
#[derive(Debug, Clone, PartialEq)]
pub struct Butterworth {
    sections: Vec<Section>,
}

impl Butterworth {
    pub fn design(order: usize, cutoff_hz: f64, rate_hz: f64) -> Result<Self> {
        if !(1..=4).contains(&order) {
            return Err(Error::invalid(format!("filter order {order} not in 1..=4")));
        }
        if !(cutoff_hz > 0.0 && cutoff_hz < rate_hz / 2.0) {
            return Err(Error::invalid(format!(
                "cutoff {cutoff_hz} Hz must lie in (0, {}) Hz",
                rate_hz / 2.0
            )));
        }
        let k = (PI * cutoff_hz / rate_hz).tan();
        let mut sections = Vec::new();
        for p in 0..order / 2 {
            let angle = (2 * p + 1) as f64 * PI / (2 * order) as f64;
            let q = 1.0 / (2.0 * angle.sin());
            let norm = 1.0 / (1.0 + k / q + k * k);
            let b0 = k * k * norm;
            sections.push(Section {
                b: [b0, 2.0 * b0, b0],
                a: [2.0 * (k * k - 1.0) * norm, (1.0 - k / q + k * k) * norm],
            });
        }
        if order % 2 == 1 {
            let b0 = k / (1.0 + k);
            sections.push(Section {
                b: [b0, b0, 0.0],
                a: [(k - 1.0) / (k + 1.0), 0.0],
            });
        }
        Ok(Butterworth { sections })
    }

    /// Causal forward pass from rest (zero initial state).
    pub fn filter(&self, x: &[f64]) -> Vec<f64> {
        self.run(x, 0.0)
    }

    /// Causal forward pass with the state preset to the steady state for a
    /// constant input equal to `x[0]`, which suppresses the start-up step.
    pub fn filter_settled(&self, x: &[f64]) -> Vec<f64> {
        self.run(x, x.first().copied().unwrap_or(0.0))
    }

    fn run(&self, x: &[f64], initial: f64) -> Vec<f64> {
        let mut y = x.to_vec();
        for s in &self.sections {
            let [b0, b1, b2] = s.b;
            let [a1, a2] = s.a;
            let mut z2 = (b2 - a2) * initial;
            let mut z1 = (b1 - a1) * initial + z2;
            for v in y.iter_mut() {
                let input = *v;
                let out = b0 * input + z1;
                z1 = b1 * input - a1 * out + z2;
                z2 = b2 * input - a2 * out;
                *v = out;
            }
        }
        y
    }
}

/// Applies a causal Butterworth low-pass from rest; output length equals input length.
pub fn butterworth_lowpass(series: &GForceSeries, order: usize, cutoff_hz: f64) -> Result<GForceSeries> {
    let filter = Butterworth::design(order, cutoff_hz, series.rate_hz)?;
    Ok(GForceSeries::new(filter.filter(&series.values), series.rate_hz))
}
