//! Seeded synthetic recordings for desk-scale experiments.
//!
//! Activities are periodic motion models with per-activity posture,
//! rhythm and amplitude; falls are a dip, an impact and a still lying
//! phase. Sensor placement rotates the body frame and scales the dynamic
//! part of activity signals. Body frame: `y` points up the torso, `z` out
//! of the chest.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::data::{
    ActivityLabel, BodyLocation, Dataset, FallKind, Recording, RecordingLabel, Sample, DEFAULT_RATE_HZ, GRAVITY,
    MAX_ACCEL, MAX_GYRO,
};
use crate::error::{Error, Result};

const ACCEL_NOISE: f64 = 0.06;
const GYRO_NOISE: f64 = 1.0;

type Vec3 = [f64; 3];

fn normalize(v: Vec3) -> Vec3 {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    if n == 0.0 {
        [0.0, 1.0, 0.0]
    } else {
        [v[0] / n, v[1] / n, v[2] / n]
    }
}

fn lerp(a: Vec3, b: Vec3, w: f64) -> Vec3 {
    normalize([
        a[0] + (b[0] - a[0]) * w,
        a[1] + (b[1] - a[1]) * w,
        a[2] + (b[2] - a[2]) * w,
    ])
}

fn smoothstep(x: f64) -> f64 {
    let x = x.clamp(0.0, 1.0);
    x * x * (3.0 - 2.0 * x)
}

/// Body frame to sensor frame.
fn mount(location: BodyLocation, v: Vec3) -> Vec3 {
    let [x, y, z] = v;
    match location {
        BodyLocation::LeftChest => [x, y, z],
        BodyLocation::RightArm => [z, y, -x],
        BodyLocation::LeftWrist => [y, -x, z],
        BodyLocation::LeftFoot => [x, -z, y],
    }
}

fn dynamic_gain(location: BodyLocation) -> f64 {
    match location {
        BodyLocation::LeftChest => 1.0,
        BodyLocation::RightArm => 1.2,
        BodyLocation::LeftWrist => 1.4,
        BodyLocation::LeftFoot => 1.7,
    }
}

#[derive(Debug, Clone, Copy)]
enum Pattern {
    /// Posture held with slow sway.
    Still { sway: f64, gyro: f64 },
    /// Gait-like oscillation on each axis.
    Periodic { freq: f64, accel: Vec3, gyro: Vec3 },
    /// Repeated flight and landing.
    Impact {
        freq: f64,
        flight_fraction: f64,
        flight_g: f64,
        peak_g: f64,
        rebound: f64,
        lateral: Vec3,
        gyro: Vec3,
    },
    /// Alternation between two postures. `hold` is the share of each cycle
    /// spent in the first posture, `transition` the share of each move.
    Posture {
        freq: f64,
        other: Vec3,
        hold: f64,
        transition: f64,
        bump: f64,
        gyro: Vec3,
    },
}

fn profile(a: ActivityLabel) -> (Vec3, Pattern) {
    use ActivityLabel::*;
    const UPRIGHT: Vec3 = [0.0, 1.0, 0.0];
    const SEATED: Vec3 = [0.0, 0.85, -0.5];
    const LYING: Vec3 = [0.0, 0.1, 1.0];
    match a {
        Stand => (UPRIGHT, Pattern::Still { sway: 0.12, gyro: 3.0 }),
        Sit => (SEATED, Pattern::Still { sway: 0.05, gyro: 1.5 }),
        Walk => (
            [0.0, 0.98, 0.15],
            Pattern::Periodic {
                freq: 1.9,
                accel: [1.2, 2.4, 1.0],
                gyro: [25.0, 12.0, 18.0],
            },
        ),
        WalkUp => (
            [0.0, 0.93, 0.37],
            Pattern::Periodic {
                freq: 1.5,
                accel: [0.8, 2.8, 1.6],
                gyro: [40.0, 8.0, 12.0],
            },
        ),
        WalkDown => (
            [0.08, 0.97, -0.22],
            Pattern::Periodic {
                freq: 2.2,
                accel: [1.6, 2.9, 0.7],
                gyro: [18.0, 22.0, 34.0],
            },
        ),
        Run => (
            [0.0, 0.95, 0.3],
            Pattern::Impact {
                freq: 2.7,
                flight_fraction: 0.35,
                flight_g: 0.3,
                peak_g: 2.6,
                rebound: 0.35,
                lateral: [2.0, 0.0, 1.5],
                gyro: [70.0, 35.0, 45.0],
            },
        ),
        Jump => (
            [0.0, 1.0, 0.06],
            Pattern::Impact {
                freq: 1.25,
                flight_fraction: 0.35,
                flight_g: 0.1,
                peak_g: 3.4,
                rebound: 0.45,
                lateral: [0.4, 0.0, 0.6],
                gyro: [15.0, 8.0, 8.0],
            },
        ),
        JumpingJack => (
            [0.06, 1.0, 0.0],
            Pattern::Impact {
                freq: 1.6,
                flight_fraction: 0.3,
                flight_g: 0.35,
                peak_g: 2.6,
                rebound: 0.3,
                lateral: [3.5, 0.0, 0.5],
                gyro: [20.0, 10.0, 85.0],
            },
        ),
        SitUp => (
            LYING,
            Pattern::Posture {
                freq: 0.4,
                other: [0.0, 0.8, 0.6],
                hold: 0.3,
                transition: 0.25,
                bump: 0.1,
                gyro: [70.0, 5.0, 5.0],
            },
        ),
        Up => (
            SEATED,
            Pattern::Posture {
                freq: 0.45,
                other: UPRIGHT,
                hold: 0.15,
                transition: 0.15,
                bump: 0.18,
                gyro: [35.0, 6.0, 10.0],
            },
        ),
        Down => (
            UPRIGHT,
            Pattern::Posture {
                freq: 0.45,
                other: SEATED,
                hold: 0.15,
                transition: 0.12,
                bump: -0.15,
                gyro: [8.0, 6.0, 38.0],
            },
        ),
    }
}

/// Mixes the label and placement into the seed so that equal seeds for
/// different kinds give unrelated streams.
fn stream_seed(seed: u64, kind: RecordingLabel, location: BodyLocation) -> u64 {
    let tag = match kind {
        RecordingLabel::Activity(a) => a.index() as u64,
        RecordingLabel::Fall(k) => 100 + k.index() as u64,
    };
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (tag << 40) ^ ((location.index() as u64) << 48)
}

struct Noise {
    accel: Normal<f64>,
    gyro: Normal<f64>,
}

impl Noise {
    fn new() -> Self {
        Noise {
            accel: Normal::new(0.0, ACCEL_NOISE).expect("valid sigma"),
            gyro: Normal::new(0.0, GYRO_NOISE).expect("valid sigma"),
        }
    }

    fn sample(&self, rng: &mut ChaCha8Rng, t: f64, accel: Vec3, gyro: Vec3) -> Sample {
        let mut c = [0.0; 6];
        for k in 0..3 {
            c[k] = (accel[k] + self.accel.sample(rng)).clamp(-MAX_ACCEL, MAX_ACCEL);
            c[k + 3] = (gyro[k] + self.gyro.sample(rng)).clamp(-MAX_GYRO, MAX_GYRO);
        }
        Sample::from_channels(t, c)
    }
}

fn scale(v: Vec3, s: f64) -> Vec3 {
    [v[0] * s, v[1] * s, v[2] * s]
}

fn add(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

/// Activity motion in the body frame: (accel m/s², gyro °/s) per sample.
fn activity_motion(label: ActivityLabel, gain: f64, n: usize, rate: f64, rng: &mut ChaCha8Rng) -> Vec<(Vec3, Vec3)> {
    let (base_dir, pattern) = profile(label);
    let jitter = Normal::new(0.0, 0.04).expect("valid sigma");
    let dir = normalize([
        base_dir[0] + jitter.sample(rng),
        base_dir[1] + jitter.sample(rng),
        base_dir[2] + jitter.sample(rng),
    ]);
    let tempo: f64 = rng.random_range(0.92..1.08);
    let amp: f64 = rng.random_range(0.85..1.15) * gain;
    let phase: [f64; 3] = [
        rng.random_range(0.0..2.0 * PI),
        rng.random_range(0.0..2.0 * PI),
        rng.random_range(0.0..2.0 * PI),
    ];
    let cycle0: f64 = rng.random_range(0.0..1.0);
    (0..n)
        .map(|i| {
            let t = i as f64 / rate;
            match pattern {
                Pattern::Still { sway, gyro } => {
                    let s = sway * amp;
                    let accel = add(
                        scale(dir, GRAVITY),
                        [
                            s * (2.0 * PI * 0.21 * tempo * t + phase[0]).sin(),
                            0.3 * s * (2.0 * PI * 0.37 * tempo * t + phase[1]).sin(),
                            s * (2.0 * PI * 0.17 * tempo * t + phase[2]).sin(),
                        ],
                    );
                    let g = gyro * amp;
                    let w = [
                        g * (2.0 * PI * 0.21 * tempo * t + phase[0] + 0.4).sin(),
                        g * (2.0 * PI * 0.29 * tempo * t + phase[1]).sin(),
                        g * (2.0 * PI * 0.17 * tempo * t + phase[2] + 0.4).sin(),
                    ];
                    (accel, w)
                }
                Pattern::Periodic { freq, accel, gyro } => {
                    let f = freq * tempo;
                    let mut a = scale(dir, GRAVITY);
                    let mut w = [0.0; 3];
                    for k in 0..3 {
                        let x = 2.0 * PI * f * t + phase[k];
                        a[k] += amp * accel[k] * (x.sin() + 0.3 * (2.0 * x).sin());
                        w[k] = amp * gyro[k] * (x + 0.5).sin();
                    }
                    (a, w)
                }
                Pattern::Impact {
                    freq,
                    flight_fraction,
                    flight_g,
                    peak_g,
                    rebound,
                    lateral,
                    gyro,
                } => {
                    let f = freq * tempo;
                    let cycle = (f * t + cycle0).fract();
                    let m = if cycle < flight_fraction {
                        flight_g
                    } else {
                        let since = (cycle - flight_fraction) / f;
                        let ground = (1.0 - flight_fraction) / f;
                        let decay = (-since / 0.04).exp();
                        1.0 + (peak_g - 1.0) * decay + rebound * (2.0 * PI * since / ground).sin() * (1.0 - decay)
                    };
                    let m = (1.0 + (m - 1.0) * amp).max(0.02);
                    let mut a = scale(dir, GRAVITY * m);
                    let mut w = [0.0; 3];
                    for k in 0..3 {
                        let x = 2.0 * PI * f * t + phase[k];
                        a[k] += amp * lateral[k] * x.sin();
                        w[k] = amp * gyro[k] * (x + 0.3).sin();
                    }
                    (a, w)
                }
                Pattern::Posture {
                    freq,
                    other,
                    hold,
                    transition,
                    bump,
                    gyro,
                } => {
                    let f = freq * tempo;
                    let cycle = (f * t + cycle0).fract();
                    // Cycle: hold first posture, move, hold other, move back.
                    let back_start = 1.0 - transition;
                    let (w, moving, sign) = if cycle < hold {
                        (0.0, None, 0.0)
                    } else if cycle < hold + transition {
                        let p = (cycle - hold) / transition;
                        (smoothstep(p), Some(p), 1.0)
                    } else if cycle < back_start {
                        (1.0, None, 0.0)
                    } else {
                        let p = (cycle - back_start) / transition;
                        (1.0 - smoothstep(p), Some(p), -1.0)
                    };
                    let d = lerp(dir, other, w);
                    let m = match moving {
                        Some(p) => 1.0 + bump * sign * amp * (PI * p).sin(),
                        None => 1.0,
                    };
                    let rate_shape = moving.map_or(0.0, |p| sign * (PI * p).sin());
                    let sway = 0.08 * (2.0 * PI * 0.3 * t + phase[0]).sin();
                    let a = add(scale(d, GRAVITY * m), [sway, 0.0, sway]);
                    let w = [
                        amp * gyro[0] * rate_shape,
                        amp * gyro[1] * (2.0 * PI * f * t + phase[1]).sin(),
                        amp * gyro[2] * rate_shape.abs(),
                    ];
                    (a, w)
                }
            }
        })
        .collect()
}

/// Intensity of a generated fall.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FallSeverity {
    Standing,
    /// Falls that start seated barely leave the 1 g band.
    Seated,
}

/// Fall dynamics in the sensor frame starting from gravity direction
/// `start` (sensor frame): (accel, gyro) pairs up to and including the
/// post-impact rebound, followed by the lying direction (sensor frame).
fn fall_motion(
    kind: FallKind,
    severity: FallSeverity,
    start: Vec3,
    location: BodyLocation,
    rng: &mut ChaCha8Rng,
) -> (Vec<(Vec3, Vec3)>, Vec3) {
    let face = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    let lying = mount(
        location,
        normalize([rng.random_range(-0.15..0.15), rng.random_range(0.05..0.25), face]),
    );
    let mut mags: Vec<f64> = Vec::new();
    let ramp = |mags: &mut Vec<f64>, to: f64, steps: usize| {
        let from = *mags.last().unwrap_or(&1.0);
        for s in 1..=steps {
            mags.push(from + (to - from) * s as f64 / steps as f64);
        }
    };
    match (severity, kind) {
        (FallSeverity::Seated, _) => {
            let dip = rng.random_range(0.78..0.88);
            let peak = rng.random_range(1.25..1.4);
            ramp(&mut mags, dip, 6);
            ramp(&mut mags, dip, rng.random_range(3..6));
            mags.extend([0.8 * peak, peak, 0.85 * peak, 1.1, 0.95, 1.03]);
        }
        (FallSeverity::Standing, FallKind::Fall) => {
            let dip = rng.random_range(0.15..0.35);
            let peak = rng.random_range(2.7..4.0);
            ramp(&mut mags, 0.85, 4);
            ramp(&mut mags, dip, 5);
            for _ in 0..rng.random_range(6..10) {
                mags.push(dip + rng.random_range(-0.04..0.04));
            }
            mags.extend([0.5 * peak, peak, 0.6 * peak, 0.3 * peak, 0.7, 1.25, 0.85, 1.08, 0.97]);
        }
        (FallSeverity::Standing, FallKind::FallKneesFirst) => {
            let dip = rng.random_range(0.4..0.55);
            let knee = rng.random_range(1.9..2.4);
            let torso = rng.random_range(1.6..2.0);
            ramp(&mut mags, 0.9, 4);
            ramp(&mut mags, dip, 5);
            for _ in 0..rng.random_range(3..6) {
                mags.push(dip + rng.random_range(-0.03..0.03));
            }
            mags.extend([0.6 * knee, knee, 0.6 * knee]);
            for i in 0..8 {
                mags.push(if i % 2 == 0 { 0.85 } else { 1.12 });
            }
            ramp(&mut mags, 0.6, 4);
            mags.extend([0.7 * torso, torso, 0.5 * torso, 0.9, 1.1, 0.96]);
        }
    }
    let n = mags.len();
    let spin = rng.random_range(0.8..1.2) * if severity == FallSeverity::Seated { 0.4 } else { 1.0 };
    let motion = mags
        .iter()
        .enumerate()
        .map(|(i, &m)| {
            let progress = (i + 1) as f64 / n as f64;
            let d = lerp(start, lying, smoothstep(progress * 1.2));
            let bell = (PI * progress).sin();
            let w = mount(location, [220.0 * spin * bell, 60.0 * spin * bell, 40.0 * spin * bell]);
            (scale(d, GRAVITY * m), w)
        })
        .collect();
    (motion, lying)
}

#[allow(clippy::too_many_arguments)]
fn finish(
    kind: RecordingLabel,
    location: BodyLocation,
    subject: &str,
    session: &str,
    rate: f64,
    motion: Vec<(Vec3, Vec3)>,
    noise: &Noise,
    rng: &mut ChaCha8Rng,
) -> Result<Recording> {
    let samples = motion
        .into_iter()
        .enumerate()
        .map(|(i, (a, w))| noise.sample(rng, i as f64 / rate, a, w))
        .collect();
    Recording::new(subject, location, kind, session, rate, samples)
}

fn sample_count(duration_s: f64, rate: f64) -> Result<usize> {
    if !(duration_s > 0.0 && duration_s.is_finite()) {
        return Err(Error::invalid(format!("duration {duration_s} s must be positive")));
    }
    Ok(((duration_s * rate).round() as usize).max(1))
}

/// A chest-worn synthetic recording; see [`generate_synthetic_at`].
pub fn generate_synthetic(kind: RecordingLabel, duration_s: f64, seed: u64) -> Result<Recording> {
    generate_synthetic_at(kind, BodyLocation::LeftChest, duration_s, seed)
}

/// Fall recordings stand for the first 30% of the duration, fall, then lie
/// still.
pub fn generate_synthetic_at(
    kind: RecordingLabel,
    location: BodyLocation,
    duration_s: f64,
    seed: u64,
) -> Result<Recording> {
    generate_with_ids(kind, location, duration_s, seed, "synthetic", &seed.to_string())
}

fn generate_with_ids(
    kind: RecordingLabel,
    location: BodyLocation,
    duration_s: f64,
    seed: u64,
    subject: &str,
    session: &str,
) -> Result<Recording> {
    let rate = DEFAULT_RATE_HZ;
    let n = sample_count(duration_s, rate)?;
    let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(seed, kind, location));
    let noise = Noise::new();
    let to_sensor = |m: Vec<(Vec3, Vec3)>| -> Vec<(Vec3, Vec3)> {
        m.into_iter()
            .map(|(a, w)| (mount(location, a), mount(location, w)))
            .collect()
    };
    let motion = match kind {
        RecordingLabel::Activity(a) => to_sensor(activity_motion(a, dynamic_gain(location), n, rate, &mut rng)),
        RecordingLabel::Fall(k) => {
            let onset = (n as f64 * 0.3).round() as usize;
            let mut m = to_sensor(activity_motion(ActivityLabel::Stand, 1.0, onset, rate, &mut rng));
            let start = m
                .last()
                .map_or(mount(location, [0.0, 1.0, 0.0]), |(a, _)| normalize(*a));
            let (fall, lying) = fall_motion(k, FallSeverity::Standing, start, location, &mut rng);
            m.extend(fall);
            while m.len() < n {
                m.push((scale(lying, GRAVITY), [0.0; 3]));
            }
            m.truncate(n);
            m
        }
    };
    finish(kind, location, subject, session, rate, motion, &noise, &mut rng)
}

/// Replaces everything from `at` onward with a fall of `kind` followed by
/// `lying_s` seconds of lying still. A seated prior activity yields a
/// [`FallSeverity::Seated`] fall. Returns the new recording and the index
/// where the fall starts.
pub fn inject_fall(recording: &Recording, at: usize, kind: FallKind, lying_s: f64, seed: u64) -> Result<Recording> {
    if at == 0 || at > recording.samples.len() {
        return Err(Error::invalid(format!(
            "injection point {at} outside 1..={}",
            recording.samples.len()
        )));
    }
    let severity = match recording.label.activity() {
        Some(a) if a.is_seated() => FallSeverity::Seated,
        _ => FallSeverity::Standing,
    };
    let rate = recording.sample_rate_hz;
    let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(seed, RecordingLabel::Fall(kind), recording.location) ^ 0x5EED);
    let noise = Noise::new();
    let start = normalize(recording.samples[at - 1].accel());
    let (fall, lying) = fall_motion(kind, severity, start, recording.location, &mut rng);
    let t0 = recording.samples[at - 1].t + 1.0 / rate;
    let mut samples = recording.samples[..at].to_vec();
    let lying_n = sample_count(lying_s, rate)?;
    let tail = fall
        .into_iter()
        .chain(std::iter::repeat_n((scale(lying, GRAVITY), [0.0; 3]), lying_n));
    for (i, (a, w)) in tail.enumerate() {
        samples.push(noise.sample(&mut rng, t0 + i as f64 / rate, a, w));
    }
    Recording::new(
        recording.subject_id.clone(),
        recording.location,
        recording.label,
        recording.session.clone(),
        rate,
        samples,
    )
}

/// Shape of a generated corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusConfig {
    pub subjects: usize,
    pub sessions: usize,
    pub activity_s: f64,
    pub falls_per_subject: usize,
    pub knee_falls_per_subject: usize,
    pub fall_s: f64,
    pub locations: Vec<BodyLocation>,
    pub seed: u64,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        CorpusConfig {
            subjects: 8,
            sessions: 3,
            activity_s: 12.0,
            falls_per_subject: 8,
            knee_falls_per_subject: 5,
            fall_s: 4.0,
            locations: BodyLocation::ALL.to_vec(),
            seed: 1,
        }
    }
}

/// Every activity for every subject, location and session, plus fall
/// recordings. Each recording has its own derived seed.
pub fn synthetic_corpus(cfg: &CorpusConfig) -> Result<Dataset> {
    let mut recordings = Vec::new();
    let mut counter = 0u64;
    let mut next_seed = || {
        counter += 1;
        cfg.seed.wrapping_mul(1_000_003).wrapping_add(counter)
    };
    for s in 1..=cfg.subjects {
        let subject = format!("S{s:02}");
        for &location in &cfg.locations {
            for &a in ActivityLabel::ALL {
                for session in 1..=cfg.sessions {
                    recordings.push(generate_with_ids(
                        RecordingLabel::Activity(a),
                        location,
                        cfg.activity_s,
                        next_seed(),
                        &subject,
                        &session.to_string(),
                    )?);
                }
            }
            for (kind, count) in [
                (FallKind::Fall, cfg.falls_per_subject),
                (FallKind::FallKneesFirst, cfg.knee_falls_per_subject),
            ] {
                for session in 1..=count {
                    recordings.push(generate_with_ids(
                        RecordingLabel::Fall(kind),
                        location,
                        cfg.fall_s,
                        next_seed(),
                        &subject,
                        &session.to_string(),
                    )?);
                }
            }
        }
    }
    Ok(Dataset::new(recordings, format!("synthetic corpus seed={}", cfg.seed)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::GForceSeries;

    #[test]
    fn stand_is_quiescent() {
        let r = generate_synthetic(RecordingLabel::Activity(ActivityLabel::Stand), 4.0, 7).unwrap();
        assert_eq!(r.samples.len(), 200);
        let g = GForceSeries::from_recording(&r);
        assert!(g.values.iter().all(|v| (0.9..=1.1).contains(v)));
    }

    #[test]
    fn generation_is_pure() {
        for kind in ["WALK", "FALL", "FALL_KNEES_FIRST", "SIT_UP"] {
            let k: RecordingLabel = kind.parse().unwrap();
            assert_eq!(
                generate_synthetic(k, 3.0, 5).unwrap(),
                generate_synthetic(k, 3.0, 5).unwrap()
            );
        }
        assert!("LEG".parse::<RecordingLabel>().is_err());
        assert!(generate_synthetic(RecordingLabel::Activity(ActivityLabel::Walk), 0.0, 1).is_err());
    }

    #[test]
    fn fall_has_dip_spike_and_rest() {
        let r = generate_synthetic(RecordingLabel::Fall(FallKind::Fall), 4.0, 1).unwrap();
        let g = GForceSeries::from_recording(&r).values;
        let peak = crate::signal::argmax(&g);
        assert!(g[peak] > 2.5);
        assert!(g[..peak].iter().any(|v| *v < 0.4));
        assert!(g[peak + 15..].iter().all(|v| (0.9..=1.1).contains(v)));
    }

    #[test]
    fn every_location_stays_in_sensor_range() {
        for &loc in BodyLocation::ALL {
            for &a in ActivityLabel::ALL {
                let r = generate_synthetic_at(RecordingLabel::Activity(a), loc, 5.0, 3).unwrap();
                assert!(r.samples.iter().all(|s| s.check_range().is_ok()));
            }
        }
    }

    #[test]
    fn injection_keeps_prefix() {
        let r = generate_synthetic(RecordingLabel::Activity(ActivityLabel::Walk), 6.0, 2).unwrap();
        let f = inject_fall(&r, 250, FallKind::Fall, 3.0, 9).unwrap();
        assert_eq!(&f.samples[..250], &r.samples[..250]);
        assert!(f.samples.len() > 250 + 150);
        assert!(inject_fall(&r, 0, FallKind::Fall, 3.0, 9).is_err());
    }
}
