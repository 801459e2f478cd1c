//! Independent oracles and fixtures shared by the integration tests.
#![allow(dead_code)]

use fallsense::classify::{train, ClassifierFamily, ClassifierSpec, TrainedModel};
use fallsense::data::{ActivityLabel, BodyLocation};
use fallsense::eval::activity_features;
use fallsense::falldetect::{Detection, ThreePhaseParams, TwoPhaseParams};
use fallsense::signal::{CoordinateSystem, FeatureVector, FEATURE_COUNT};
use fallsense::synth::{synthetic_corpus, CorpusConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `(peak, end)` of each armed impact run, found by rescanning the series
/// from scratch for every candidate run.
fn naive_armed_runs(x: &[f64], low: f64, high: f64, gap: usize) -> Vec<(usize, usize)> {
    let mut runs = Vec::new();
    let mut a = 0;
    while a < x.len() {
        if x[a] > high && (a == 0 || x[a - 1] <= high) {
            let mut e = a;
            while e < x.len() && x[e] > high {
                e += 1;
            }
            runs.push((a, e));
            a = e;
        } else {
            a += 1;
        }
    }
    let mut armed = Vec::new();
    let mut floor = 0;
    for (a, e) in runs {
        let dip = (floor..a).rev().find(|&d| x[d] < low);
        if dip.is_some_and(|d| a - d <= gap) {
            let max = x[a..e].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let peak = (a..e).find(|&i| x[i] == max).unwrap();
            armed.push((peak, e));
            floor = e;
        }
    }
    armed
}

pub fn oracle_two_phase(x: &[f64], p: &TwoPhaseParams) -> Vec<(usize, usize)> {
    naive_armed_runs(x, p.lft, p.uft, p.max_gap)
        .into_iter()
        .map(|(peak, end)| (peak, end.min(x.len() - 1)))
        .collect()
}

pub fn oracle_three_phase(x: &[f64], p: &ThreePhaseParams) -> Vec<(usize, usize)> {
    naive_armed_runs(x, p.t1, p.t2, p.gap12)
        .into_iter()
        .filter_map(|(peak, _)| {
            (peak + 1..=peak + p.gap23)
                .find(|&s| {
                    s + p.settle_len <= x.len()
                        && x[s..s + p.settle_len]
                            .iter()
                            .all(|v| *v >= p.settle_low && *v <= p.settle_high)
                })
                .map(|s| (peak, s + p.settle_len - 1))
        })
        .collect()
}

pub fn pairs(d: &[Detection]) -> Vec<(usize, usize)> {
    d.iter().map(|d| (d.index, d.confirmed_at)).collect()
}

/// G-force-like series: rest near 1 g with occasional dips, spikes and
/// flat stretches, so that every detector phase is exercised.
pub fn random_gforce(rng: &mut impl Rng, len: usize) -> Vec<f64> {
    let mut x = Vec::with_capacity(len);
    while x.len() < len {
        let seg = rng.random_range(1..30);
        let level = match rng.random_range(0..10) {
            0..=1 => rng.random_range(0.0..0.7),
            2 => rng.random_range(1.5..4.0),
            3 => 1.0,
            _ => rng.random_range(0.75..1.3),
        };
        for _ in 0..seg {
            let jitter = if level == 1.0 { 0.0 } else { rng.random_range(-0.1..0.1) };
            x.push(f64::max(0.0, level + jitter));
        }
    }
    x.truncate(len);
    x
}

pub fn random_three_phase(rng: &mut impl Rng) -> ThreePhaseParams {
    let settle_low = rng.random_range(0.6..0.95);
    let settle_high = rng.random_range(1.05..1.4);
    ThreePhaseParams {
        t1: rng.random_range(0.1..0.9),
        t2: rng.random_range(settle_high + 0.05..3.0),
        settle_low,
        settle_high,
        gap12: rng.random_range(1..60),
        gap23: rng.random_range(1..80),
        settle_len: rng.random_range(1..30),
    }
}

pub fn random_two_phase(rng: &mut impl Rng) -> TwoPhaseParams {
    TwoPhaseParams {
        lft: rng.random_range(0.1..0.9),
        uft: rng.random_range(1.1..3.0),
        max_gap: rng.random_range(1..60),
    }
}

/// Minimum over every monotone warping path, enumerated recursively.
pub fn dtw_exhaustive(a: &[f64], b: &[f64]) -> f64 {
    fn walk(a: &[f64], b: &[f64], i: usize, j: usize, acc: f64, best: &mut f64) {
        let acc = acc + (a[i] - b[j]).abs();
        if i + 1 == a.len() && j + 1 == b.len() {
            *best = best.min(acc);
            return;
        }
        if i + 1 < a.len() {
            walk(a, b, i + 1, j, acc, best);
        }
        if j + 1 < b.len() {
            walk(a, b, i, j + 1, acc, best);
        }
        if i + 1 < a.len() && j + 1 < b.len() {
            walk(a, b, i + 1, j + 1, acc, best);
        }
    }
    let mut best = f64::INFINITY;
    walk(a, b, 0, 0, 0.0, &mut best);
    best
}

/// Textbook Pearson: covariance over the product of standard deviations.
pub fn pearson_oracle(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / n;
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum::<f64>() / n;
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum::<f64>() / n;
    cov / (va.sqrt() * vb.sqrt())
}

pub const BLOB_CLASSES: [ActivityLabel; 4] = [
    ActivityLabel::Walk,
    ActivityLabel::Run,
    ActivityLabel::Sit,
    ActivityLabel::Stand,
];

/// Four Gaussian blobs with unit spread whose means sit 3σ apart on every
/// feature axis.
pub fn blobs(n_per_class: usize, seed: u64) -> (Vec<FeatureVector>, Vec<ActivityLabel>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = rand_distr::Normal::new(0.0, 1.0).unwrap();
    let mut features = Vec::new();
    let mut labels = Vec::new();
    for _ in 0..n_per_class {
        for (c, &label) in BLOB_CLASSES.iter().enumerate() {
            let mut values = [0.0; FEATURE_COUNT];
            for (f, v) in values.iter_mut().enumerate() {
                let centre = 3.0 * (((c + f) % 4) as f64);
                *v = centre + rng.sample(normal);
            }
            features.push(FeatureVector {
                system: CoordinateSystem::Cartesian,
                values,
            });
            labels.push(label);
        }
    }
    (features, labels)
}

/// A chest-location classifier trained on a small synthetic corpus.
pub fn chest_model(family: ClassifierFamily) -> TrainedModel {
    let ds = synthetic_corpus(&CorpusConfig {
        subjects: 3,
        sessions: 2,
        activity_s: 8.0,
        falls_per_subject: 0,
        knee_falls_per_subject: 0,
        locations: vec![BodyLocation::LeftChest],
        seed: 5,
        ..Default::default()
    })
    .unwrap();
    let f = activity_features(&ds, None, CoordinateSystem::Cartesian, 100, 50).unwrap();
    train(&ClassifierSpec::default_for(family), &f.features, &f.labels, 1).unwrap()
}
