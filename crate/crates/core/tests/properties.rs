mod common;

use std::collections::BTreeMap;

use fallsense::alertnet::{decode_payload, encode_payload, AlertPayload, WIRE_VERSION};
use fallsense::classify::{train, ClassifierFamily, ClassifierSpec, GbtParams, TrainedModel};
use fallsense::data::{ActivityLabel, FallKind, Sample};
use fallsense::falldetect::{
    calibrate_threshold_kmeans, detect_three_phase, detect_two_phase, dtw_distance, kmeans_1d, DetectorId,
    ThreePhaseMonitor,
};
use fallsense::priorfall::{majority_vote, SnapshotBuffer};
use fallsense::signal::{pearson, to_spherical};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::*;

fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn two_phase_matches_oracle(seed in any::<u64>(), len in 1usize..600) {
        let mut rng = seeded(seed);
        let x = random_gforce(&mut rng, len);
        let p = random_two_phase(&mut rng);
        prop_assert_eq!(pairs(&detect_two_phase(&x, &p)), oracle_two_phase(&x, &p));
    }

    #[test]
    fn three_phase_matches_oracle(seed in any::<u64>(), len in 1usize..600) {
        let mut rng = seeded(seed);
        let x = random_gforce(&mut rng, len);
        let p = random_three_phase(&mut rng);
        prop_assert_eq!(pairs(&detect_three_phase(&x, &p)), oracle_three_phase(&x, &p));
    }

    #[test]
    fn monitor_matches_batch(seed in any::<u64>(), len in 1usize..600) {
        let mut rng = seeded(seed);
        let x = random_gforce(&mut rng, len);
        let p = random_three_phase(&mut rng);
        let mut m = ThreePhaseMonitor::new(p).unwrap();
        let mut streamed = Vec::new();
        for (k, v) in x.iter().enumerate() {
            for d in m.push(*v) {
                prop_assert_eq!(d.confirmed_at, k);
                streamed.push(d);
            }
        }
        prop_assert_eq!(pairs(&streamed), pairs(&detect_three_phase(&x, &p)));
    }

    #[test]
    fn three_phase_events_are_armed_two_phase_events(seed in any::<u64>(), len in 1usize..600) {
        let mut rng = seeded(seed);
        let x = random_gforce(&mut rng, len);
        let p = random_three_phase(&mut rng);
        let two = fallsense::falldetect::TwoPhaseParams { lft: p.t1, uft: p.t2, max_gap: p.gap12 };
        let peaks: Vec<usize> = detect_two_phase(&x, &two).iter().map(|d| d.index).collect();
        for d in detect_three_phase(&x, &p) {
            prop_assert!(peaks.contains(&d.index));
            prop_assert!(d.confirmed_at > d.index);
        }
    }

    #[test]
    fn dtw_matches_exhaustive(
        a in prop::collection::vec(-20i32..20, 1..7),
        b in prop::collection::vec(-20i32..20, 1..7),
    ) {
        let a: Vec<f64> = a.into_iter().map(f64::from).collect();
        let b: Vec<f64> = b.into_iter().map(f64::from).collect();
        let d = dtw_distance(&a, &b).unwrap();
        prop_assert_eq!(d, dtw_exhaustive(&a, &b));
        prop_assert_eq!(d, dtw_distance(&b, &a).unwrap());
        prop_assert_eq!(dtw_distance(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn spherical_round_trip(x in -200.0f64..200.0, y in -200.0f64..200.0, z in -200.0f64..200.0) {
        let s = to_spherical(x, y, z);
        prop_assert!(s.r >= 0.0);
        prop_assert!((0.0..=std::f64::consts::PI).contains(&s.theta));
        prop_assert!(s.phi > -std::f64::consts::PI && s.phi <= std::f64::consts::PI);
        let back = [
            s.r * s.theta.sin() * s.phi.cos(),
            s.r * s.theta.sin() * s.phi.sin(),
            s.r * s.theta.cos(),
        ];
        for (orig, rec) in [x, y, z].iter().zip(back) {
            prop_assert!((orig - rec).abs() < 1e-9);
        }
    }

    #[test]
    fn pearson_matches_formula(pts in prop::collection::vec((-50.0f64..50.0, -50.0f64..50.0), 3..200)) {
        let (a, b): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
        let r = pearson(&a, &b).unwrap();
        prop_assert!((-1.0..=1.0).contains(&r));
        prop_assert!((r - pearson(&b, &a).unwrap()).abs() < 1e-15);
        let o = pearson_oracle(&a, &b);
        if o.is_finite() {
            prop_assert!((r - o).abs() < 1e-12, "{} vs {}", r, o);
        }
    }

    #[test]
    fn kmeans_clusters_are_contiguous(values in prop::collection::vec(0.0f64..100.0, 3..80)) {
        let Ok(km) = kmeans_1d(&values, 3) else { return Ok(()); };
        prop_assert_eq!(km.clusters.iter().map(Vec::len).sum::<usize>(), values.len());
        for w in km.clusters.windows(2) {
            prop_assert!(w[0].last().unwrap() < w[1].first().unwrap());
        }
        for (c, members) in km.clusters.iter().enumerate() {
            let mean = members.iter().sum::<f64>() / members.len() as f64;
            prop_assert!((mean - km.centroids[c]).abs() < 1e-9);
            // Converged: every member is nearest its own centroid.
            for v in members {
                for (o, other) in km.centroids.iter().enumerate() {
                    prop_assert!((v - km.centroids[c]).abs() <= (v - other).abs() + 1e-12 || o == c);
                }
            }
        }
        let t = calibrate_threshold_kmeans(&values, 3).unwrap();
        prop_assert!(*km.clusters[1].last().unwrap() < t && t < km.clusters[2][0]);
    }

    #[test]
    fn snapshot_buffer_keeps_latest(cap in 1usize..50, n in 0usize..200) {
        let mut b = SnapshotBuffer::new(cap);
        let all: Vec<Sample> = (0..n).map(|i| Sample::new(i as f64, [i as f64, 0.0, 0.0], [0.0; 3])).collect();
        for s in &all {
            b.push(*s);
        }
        prop_assert_eq!(b.len(), n.min(cap));
        match b.snapshot() {
            None => prop_assert!(n < cap),
            Some(snap) => prop_assert_eq!(&snap[..], &all[n - cap..]),
        }
    }

    #[test]
    fn vote_picks_a_most_frequent_label(idx in prop::collection::vec(0usize..11, 1..12)) {
        let labels: Vec<ActivityLabel> = idx.iter().map(|&i| ActivityLabel::ALL[i]).collect();
        let w = majority_vote(&labels).unwrap();
        let count = |l: ActivityLabel| labels.iter().filter(|x| **x == l).count();
        let top = labels.iter().map(|l| count(*l)).max().unwrap();
        prop_assert_eq!(count(w), top);
        // Among tied labels the one occurring latest wins.
        let last = labels.iter().rposition(|l| count(*l) == top).unwrap();
        prop_assert_eq!(w, labels[last]);
    }

    #[test]
    fn payload_round_trip(
        id in "[a-zA-Z0-9_-]{1,32}",
        at in any::<u32>(),
        knees in any::<bool>(),
        raw in prop::collection::vec(-100.0f64..100.0, 200 * 6),
    ) {
        let samples: Vec<[f64; 6]> = raw.chunks(6).map(|c| c.try_into().unwrap()).collect();
        let p = AlertPayload {
            version: WIRE_VERSION,
            device_id: id,
            detected_at: at as u64,
            fall_kind: if knees { FallKind::FallKneesFirst } else { FallKind::Fall },
            detector: DetectorId::ThreePhase,
            sample_rate_hz: 50.0,
            samples,
        };
        let line = encode_payload(&p).unwrap();
        prop_assert_eq!(line.iter().filter(|b| **b == b'\n').count(), 1);
        let (back, rest) = decode_payload(&line).unwrap();
        prop_assert!(rest.is_empty());
        prop_assert_eq!(back, p);
    }

    #[test]
    fn decode_never_panics(bytes in prop::collection::vec(any::<u8>(), 0..512)) {
        let _ = decode_payload(&bytes);
    }

    #[test]
    fn decode_rejects_mutated_payloads(cut in 1usize..2000, flip in any::<u8>()) {
        let p = AlertPayload {
            version: WIRE_VERSION,
            device_id: "d".into(),
            detected_at: 1,
            fall_kind: FallKind::Fall,
            detector: DetectorId::ThreePhase,
            sample_rate_hz: 50.0,
            samples: vec![[0.0, 0.0, 9.8, 0.0, 0.0, 0.0]; 200],
        };
        let line = encode_payload(&p).unwrap();
        let cut = cut.min(line.len() - 1);
        prop_assert!(decode_payload(&line[..cut]).is_err());
        let mut m = line.clone();
        let i = cut.min(m.len() - 2);
        m[i] ^= flip | 1;
        if let Ok((back, _)) = decode_payload(&m) {
            back.validate().unwrap();
        }
    }
}

fn gbt(rounds: usize) -> ClassifierSpec {
    ClassifierSpec::Gbt(GbtParams {
        n_rounds: rounds,
        ..Default::default()
    })
}

#[test]
fn zero_round_gbt_predicts_the_prior() {
    let (mut f, mut l) = blobs(20, 3);
    let (extra, _) = blobs(10, 4);
    l.extend(std::iter::repeat_n(ActivityLabel::Run, extra.len()));
    f.extend(extra);
    let m = train(&gbt(0), &f, &l, 1).unwrap();
    for fv in &f {
        assert_eq!(m.predict(fv).unwrap().label, ActivityLabel::Run);
    }
}

#[test]
fn serialization_preserves_predictions() {
    let (f, l) = blobs(30, 9);
    let (probe, _) = blobs(50, 10);
    for family in ClassifierFamily::ALL {
        let m = train(&ClassifierSpec::default_for(family), &f, &l, 1).unwrap();
        let back = TrainedModel::from_json(&m.to_json()).unwrap();
        for fv in &probe {
            assert_eq!(m.predict(fv).unwrap(), back.predict(fv).unwrap(), "{family}");
        }
    }
}

#[test]
fn vote_counts_total_five() {
    let m = chest_model(ClassifierFamily::DecisionTree);
    let rec =
        fallsense::synth::generate_synthetic(fallsense::data::RecordingLabel::Activity(ActivityLabel::Jump), 5.0, 2)
            .unwrap();
    let r = fallsense::priorfall::identify_prior_activity(&m, &rec.samples[..200]).unwrap();
    let total: usize = r.vote_counts.values().sum();
    assert_eq!(total, 5);
    let expected: BTreeMap<ActivityLabel, usize> = r.window_predictions.iter().fold(BTreeMap::new(), |mut acc, w| {
        *acc.entry(w.label).or_insert(0) += 1;
        acc
    });
    assert_eq!(r.vote_counts, expected);
}
