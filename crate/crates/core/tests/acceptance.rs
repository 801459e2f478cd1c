//! One PASS/FAIL line per acceptance criterion. Run with `--nocapture` to
//! see the lines; `FALLSENSE_DATASET` (and optionally `FALLSENSE_REMAP`)
//! enables the real-dataset criterion.

mod common;

use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use fallsense::alertnet::{
    encode_payload, AlertPayload, AlertService, DeviceConfig, NullSink, ServerMessage, WIRE_VERSION,
};
use fallsense::classify::{train, ClassifierFamily, ClassifierSpec, GbtParams, TrainedModel};
use fallsense::data::{load_dataset, ActivityLabel, BodyLocation, FallKind, RecordingLabel, Remap};
use fallsense::eval::{
    activity_features, default_scenarios, eval_activity, eval_fall, eval_prior, fall_corpus, ActivityEvalConfig,
    FallEvalConfig,
};
use fallsense::falldetect::{detect_three_phase, detect_two_phase, dtw_distance, DetectorId};
use fallsense::priorfall::identify_prior_activity;
use fallsense::signal::{pearson, to_spherical, Butterworth, CoordinateSystem, FeatureVector, FEATURE_COUNT};
use fallsense::synth::{generate_synthetic, synthetic_corpus, CorpusConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;

fn verdict(criterion: &str, pass: bool, detail: String) {
    println!(
        "ACCEPTANCE {criterion}: {} ({detail})",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "{criterion}: {detail}");
}

#[test]
fn detector_oracle_equivalence() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut mismatches, mut events) = (0, 0);
    for _ in 0..1000 {
        let len = rng.random_range(1..=2000);
        let x = random_gforce(&mut rng, len);
        let two = random_two_phase(&mut rng);
        let three = random_three_phase(&mut rng);
        let a = pairs(&detect_two_phase(&x, &two));
        let b = pairs(&detect_three_phase(&x, &three));
        events += a.len() + b.len();
        mismatches += usize::from(a != oracle_two_phase(&x, &two)) + usize::from(b != oracle_three_phase(&x, &three));
    }
    let secs = started.elapsed().as_secs_f64();
    verdict(
        "detector oracle equivalence",
        mismatches == 0 && secs < 10.0 && events > 0,
        format!("1000 series, {events} events, {mismatches} mismatches, {secs:.2} s"),
    );
}

#[test]
fn dtw_oracle_equivalence() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut mismatches = 0;
    for _ in 0..200 {
        let a: Vec<f64> = (0..rng.random_range(1..=8))
            .map(|_| rng.random_range(-9..=9) as f64)
            .collect();
        let b: Vec<f64> = (0..rng.random_range(1..=8))
            .map(|_| rng.random_range(-9..=9) as f64)
            .collect();
        if dtw_distance(&a, &b).unwrap() != dtw_exhaustive(&a, &b) {
            mismatches += 1;
        }
    }
    verdict(
        "dtw oracle equivalence",
        mismatches == 0,
        format!("200 integer pairs, {mismatches} mismatches"),
    );
}

#[test]
fn signal_numerics() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst_sph: f64 = 0.0;
    for _ in 0..10_000 {
        let v = [0, 1, 2].map(|_| rng.random_range(-160.0..160.0));
        let s = to_spherical(v[0], v[1], v[2]);
        let back = [
            s.r * s.theta.sin() * s.phi.cos(),
            s.r * s.theta.sin() * s.phi.sin(),
            s.r * s.theta.cos(),
        ];
        for (a, b) in v.iter().zip(back) {
            worst_sph = worst_sph.max((a - b).abs());
        }
    }

    // Default design: order 2, 5 Hz cutoff at 50 Hz. The bilinear transform
    // puts every zero at z = -1, so the analytic Nyquist gain is exactly 0.
    let f = Butterworth::design(2, 5.0, 50.0).unwrap();
    let dc = *f.filter(&vec![1.0; 2000]).last().unwrap();
    let nyq = f.filter(
        &(0..2000)
            .map(|i| if i % 2 == 0 { 1.0 } else { -1.0 })
            .collect::<Vec<_>>(),
    );
    let nyq_gain = nyq[1000..].iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let cutoff: Vec<f64> = (0..4000)
        .map(|i| (2.0 * std::f64::consts::PI * 5.0 * i as f64 / 50.0).sin())
        .collect();
    let cut_gain = f.filter(&cutoff)[2000..].iter().fold(0.0f64, |m, v| m.max(v.abs()));

    let mut worst_r: f64 = 0.0;
    for _ in 0..1000 {
        let n = rng.random_range(2..300);
        let a: Vec<f64> = (0..n).map(|_| rng.random_range(-20.0..20.0)).collect();
        let b: Vec<f64> = a.iter().map(|x| rng.random_range(-1.0..1.0) * 20.0 + 0.3 * x).collect();
        worst_r = worst_r.max((pearson(&a, &b).unwrap() - pearson_oracle(&a, &b)).abs());
    }

    let pass = worst_sph < 1e-9 && (dc - 1.0).abs() < 1e-6 && nyq_gain < 1e-9 && worst_r < 1e-12;
    verdict(
        "signal numerics",
        pass,
        format!(
            "spherical err {worst_sph:.1e}, dc gain {dc:.9}, nyquist gain {nyq_gain:.1e} (bound 1e-9), \
             cutoff gain {cut_gain:.4}, pearson err {worst_r:.1e}"
        ),
    );
}

#[test]
fn classifier_sanity() {
    let (f, l) = blobs(100, 1);
    let (vf, vl) = blobs(50, 2);
    let mut lines = Vec::new();
    let mut pass = true;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let probes: Vec<FeatureVector> = (0..1000)
        .map(|_| FeatureVector {
            system: CoordinateSystem::Cartesian,
            values: [0.0; FEATURE_COUNT].map(|_| rng.random_range(-5.0..15.0)),
        })
        .collect();
    for family in ClassifierFamily::ALL {
        let m = train(&ClassifierSpec::default_for(family), &f, &l, 1).unwrap();
        let correct = vf
            .iter()
            .zip(&vl)
            .filter(|(x, y)| m.predict(x).unwrap().label == **y)
            .count();
        let acc = correct as f64 / vf.len() as f64;
        let back = TrainedModel::from_json(&m.to_json()).unwrap();
        let same = probes.iter().all(|p| m.predict(p).unwrap() == back.predict(p).unwrap());
        pass &= acc >= 0.95 && same;
        lines.push(format!(
            "{family} {:.1}%{}",
            acc * 100.0,
            if same { "" } else { " round-trip differs" }
        ));
    }

    let mut skewed = l.clone();
    for y in skewed.iter_mut().step_by(4) {
        *y = ActivityLabel::Jump;
    }
    let prior = train(
        &ClassifierSpec::Gbt(GbtParams {
            n_rounds: 0,
            ..Default::default()
        }),
        &f,
        &skewed,
        1,
    )
    .unwrap();
    let majority = probes
        .iter()
        .all(|p| prior.predict(p).unwrap().label == ActivityLabel::Jump);
    pass &= majority;
    lines.push(format!("0-round GBT predicts prior argmax: {majority}"));
    verdict("classifier sanity", pass, lines.join(", "));
}

#[test]
fn pipeline_composition() {
    let model = Arc::new(chest_model(ClassifierFamily::Gbt));
    let service = AlertService::new(model.clone(), Box::new(NullSink));
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut agree = 0;
    for i in 0..100 {
        let activity = ActivityLabel::ALL[rng.random_range(0..ActivityLabel::ALL.len())];
        let rec = generate_synthetic(RecordingLabel::Activity(activity), 6.0, rng.random()).unwrap();
        let start = rng.random_range(0..=rec.samples.len() - 200);
        let snap = &rec.samples[start..start + 200];
        let payload = AlertPayload {
            version: WIRE_VERSION,
            device_id: format!("dev-{i}"),
            detected_at: i,
            fall_kind: FallKind::Fall,
            detector: DetectorId::ThreePhase,
            sample_rate_hz: rec.sample_rate_hz,
            samples: snap.iter().map(|s| s.channels()).collect(),
        };
        let line = encode_payload(&payload).unwrap();
        let offline = identify_prior_activity(&model, snap).unwrap();
        if let ServerMessage::Response(r) = service.handle_line(&line, "acceptance") {
            let same_windows = r
                .window_predictions
                .iter()
                .zip(&offline.window_predictions)
                .all(|(a, b)| a.label == b.label && a.score.to_bits() == b.score.to_bits());
            if r.prior_activity == offline.winner && r.vote_counts == offline.vote_counts && same_windows {
                agree += 1;
            }
        }
    }
    verdict(
        "pipeline composition",
        agree == 100,
        format!("{agree}/100 server responses equal offline identification"),
    );
}

#[test]
fn end_to_end_synthetic() {
    let started = Instant::now();
    let ds = synthetic_corpus(&CorpusConfig::default()).unwrap();
    let corpus = fall_corpus(&ds, BodyLocation::LeftChest).unwrap();
    let fall = eval_fall(&corpus, &FallEvalConfig::default()).unwrap();
    let mut pass = true;
    let mut detail = Vec::new();
    for kind in FallKind::ALL {
        let m = &fall.row(DetectorId::ThreePhase, *kind).unwrap().metrics;
        pass &= m.sensitivity >= 0.9 && m.specificity >= 0.9;
        detail.push(format!(
            "3-phase {kind} sens {:.3} spec {:.3}",
            m.sensitivity, m.specificity
        ));
    }

    let f = activity_features(&ds, Some(BodyLocation::LeftChest), CoordinateSystem::Cartesian, 100, 50).unwrap();
    let model = train(
        &ClassifierSpec::default_for(ClassifierFamily::Gbt),
        &f.features,
        &f.labels,
        1,
    )
    .unwrap();
    let device = DeviceConfig {
        fall: fall.calibration.fall.three_phase,
        knees: fall.calibration.knees.three_phase,
        ..Default::default()
    };
    let prior = eval_prior(Arc::new(model), &default_scenarios(8, 1), None, &device).unwrap();
    let mean = prior.mean_accuracy.unwrap_or(0.0);
    pass &= mean >= 0.8;
    let secs = started.elapsed().as_secs_f64();
    pass &= secs < 120.0;
    detail.push(format!("prior mean {:.3}", mean));
    detail.push(format!("{secs:.1} s"));
    verdict("end-to-end synthetic", pass, detail.join(", "));
}

#[test]
fn dataset_reproduction() {
    let Ok(path) = std::env::var("FALLSENSE_DATASET") else {
        println!("ACCEPTANCE dataset reproduction: SKIP (FALLSENSE_DATASET not set)");
        return;
    };
    let remap = match std::env::var("FALLSENSE_REMAP") {
        Ok(r) => Remap::load(Path::new(&r)).unwrap(),
        Err(_) => Remap::default(),
    };
    let ds = load_dataset(Path::new(&path), &remap).unwrap();
    let activity = eval_activity(
        &ds,
        &ActivityEvalConfig {
            locations: vec![BodyLocation::LeftChest],
            systems: vec![CoordinateSystem::Cartesian],
            families: vec![ClassifierFamily::Gbt],
            ..Default::default()
        },
    )
    .unwrap();
    let gbt = activity.cells[0].accuracy().unwrap_or(0.0) * 100.0;
    let fall = eval_fall(
        &fall_corpus(&ds, BodyLocation::LeftChest).unwrap(),
        &FallEvalConfig::default(),
    )
    .unwrap();
    let three = fall
        .row(DetectorId::ThreePhase, FallKind::Fall)
        .unwrap()
        .metrics
        .accuracy
        * 100.0;
    verdict(
        "dataset reproduction",
        (gbt - 86.0).abs() <= 6.0 && (three - 88.91).abs() <= 5.0,
        format!("chest GBT {gbt:.2}% (86 ± 6), 3-phase FALL {three:.2}% (88.91 ± 5)"),
    );
}

#[test]
fn determinism() {
    let run = |dir: &Path| {
        let bin = env!("CARGO_BIN_EXE_fallsense");
        let steps: [&[&str]; 4] = [
            &[
                "synth",
                "--subjects=3",
                "--sessions=1",
                "--activity-s=8",
                "--locations=LEFT_CHEST",
                "--trials=2",
                "--out=s",
            ],
            &["train", "--data=s/dataset.csv", "--out=t"],
            &["eval-fall", "--data=s/dataset.csv", "--nonfalls=300", "--out=f"],
            &[
                "eval-prior",
                "--model=t/model.json",
                "--calibration=f/calibration.txt",
                "--scenarios=s/scenarios.csv",
                "--out=p",
            ],
        ];
        for args in steps {
            let st = std::process::Command::new(bin)
                .current_dir(dir)
                .args(args)
                .output()
                .unwrap()
                .status;
            assert!(st.success(), "{args:?}");
        }
        let mut out = Vec::new();
        for sub in ["s", "t", "f", "p"] {
            let mut names: Vec<_> = std::fs::read_dir(dir.join(sub))
                .unwrap()
                .map(|e| e.unwrap().path())
                .collect();
            names.sort();
            for p in names
                .into_iter()
                .filter(|p| p.is_file() && !p.ends_with("manifest.json"))
            {
                out.push((p.strip_prefix(dir).unwrap().to_path_buf(), std::fs::read(&p).unwrap()));
            }
        }
        out
    };
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let (ra, rb) = (run(a.path()), run(b.path()));
    let differing: Vec<String> = ra
        .iter()
        .zip(&rb)
        .filter(|(x, y)| x != y)
        .map(|(x, _)| x.0.display().to_string())
        .collect();
    verdict(
        "determinism",
        ra.len() == rb.len() && differing.is_empty(),
        format!("{} report files compared, differing: {:?}", ra.len(), differing),
    );
}
