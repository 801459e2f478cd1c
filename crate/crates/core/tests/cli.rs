use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fallsense(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fallsense"))
        .current_dir(dir)
        .args(args)
        .env_remove("FALLSENSE_SERVER")
        .env_remove("FALLSENSE_BIND")
        .env_remove("FALLSENSE_WORKERS")
        .output()
        .unwrap()
}

fn ok(dir: &Path, args: &[&str]) {
    let out = fallsense(dir, args);
    assert!(
        out.status.success(),
        "{args:?} exited {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
}

const SYNTH: &[&str] = &[
    "synth",
    "--subjects=3",
    "--sessions=1",
    "--activity-s=8",
    "--falls-per-subject=4",
    "--knee-falls-per-subject=3",
    "--locations=LEFT_CHEST",
    "--trials=2",
    "--out=synth",
];

/// Runs the whole pipeline in `dir` with relative paths only.
fn pipeline(dir: &Path) {
    ok(dir, SYNTH);
    ok(
        dir,
        &[
            "train",
            "--data=synth/dataset.csv",
            "--family=DECISION_TREE",
            "--out=train",
        ],
    );
    ok(
        dir,
        &["eval-fall", "--data=synth/dataset.csv", "--nonfalls=200", "--out=fall"],
    );
    ok(
        dir,
        &[
            "eval-prior",
            "--model=train/model.json",
            "--calibration=fall/calibration.txt",
            "--scenarios=synth/scenarios.csv",
            "--out=prior",
        ],
    );
    ok(
        dir,
        &[
            "eval-activity",
            "--data=synth/dataset.csv",
            "--locations=LEFT_CHEST",
            "--iterations=2",
            "--folds=3",
            "--out=activity",
        ],
    );
}

fn files(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(root).unwrap().to_path_buf(), std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

#[test]
fn reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    pipeline(a.path());
    pipeline(b.path());
    let (fa, fb) = (files(a.path()), files(b.path()));
    assert_eq!(fa.keys().collect::<Vec<_>>(), fb.keys().collect::<Vec<_>>());
    let mut compared = 0;
    for (name, bytes) in &fa {
        if name.file_name().unwrap() == "manifest.json" {
            continue;
        }
        assert!(bytes == &fb[name], "{} differs between runs", name.display());
        compared += 1;
    }
    assert!(compared >= 15, "only {compared} report files");
    for f in [
        "table1.csv",
        "table2.csv",
        "table3.csv",
        "model.json",
        "calibration.txt",
    ] {
        assert!(fa.keys().any(|k| k.file_name().unwrap() == f), "{f} missing");
    }
}

#[test]
fn manifest_records_inputs_and_outputs() {
    let d = tempfile::tempdir().unwrap();
    ok(d.path(), SYNTH);
    ok(
        d.path(),
        &[
            "--seed=4",
            "train",
            "--data=synth/dataset.csv",
            "--family=KNN",
            "--out=m",
        ],
    );
    let m: serde_json::Value =
        serde_json::from_slice(&std::fs::read(d.path().join("m/manifest.json")).unwrap()).unwrap();
    assert_eq!(m["command"], "train");
    assert_eq!(m["seed"], 4);
    let inputs = m["inputs"].as_object().unwrap();
    assert!(inputs.keys().any(|k| k.ends_with("dataset.csv")));
    let outputs = m["outputs"].as_object().unwrap();
    assert!(outputs.contains_key("model.json"));
    assert!(inputs
        .values()
        .chain(outputs.values())
        .all(|v| v.as_str().unwrap().len() == 64));
}

#[test]
fn config_file_supplies_missing_flags() {
    let d = tempfile::tempdir().unwrap();
    std::fs::write(
        d.path().join("run.conf"),
        "# synth settings\nsubjects = 2\nsessions=1\nactivity_s=4\nfalls_per_subject=1\nknee_falls_per_subject=1\nlocations=LEFT_CHEST\ntrials=1\n",
    )
    .unwrap();
    ok(d.path(), &["synth", "--config", "run.conf", "--subjects=3", "--out=s"]);
    let summary = std::fs::read_to_string(d.path().join("s/summary.csv")).unwrap();
    // Three subjects from argv, one session of 4 s each from the file.
    assert!(summary.contains("LEFT_CHEST,WALK,3,600"), "{summary}");
    assert!(!summary.contains("RIGHT_ARM"));

    std::fs::write(d.path().join("bad.conf"), "no_such_flag=1\n").unwrap();
    let out = fallsense(d.path(), &["synth", "--config=bad.conf", "--out=t"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn exit_codes_name_failure_classes() {
    let d = tempfile::tempdir().unwrap();
    let code = |args: &[&str]| fallsense(d.path(), args).status.code();

    assert_eq!(code(&["frobnicate"]), Some(2));
    assert_eq!(code(&["train", "--synthetic", "--data=x.csv"]), Some(2));
    assert_eq!(code(&["train", "--data=missing.csv"]), Some(3));
    std::fs::write(d.path().join("junk.csv"), "a,b\n1,2\n").unwrap();
    assert_eq!(code(&["ingest", "--data=junk.csv", "--out=i"]), Some(3));

    ok(d.path(), SYNTH);
    let incomplete = code(&[
        "eval-activity",
        "--data=synth/dataset.csv",
        "--locations=LEFT_CHEST,LEFT_FOOT",
        "--iterations=0",
        "--out=a",
    ]);
    assert_eq!(incomplete, Some(4));
    let table = std::fs::read_to_string(d.path().join("a/table1.csv")).unwrap();
    assert!(table.contains("LEFT_FOOT"));

    let port = {
        let l = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
        l.local_addr().unwrap().port()
    };
    let server = format!("--server=127.0.0.1:{port}");
    assert_eq!(
        code(&[
            "simulate",
            "--recording=synthetic:WALK:8",
            "--inject-at-s=5",
            "--speed=0",
            "--retries=1",
            &server,
            "--out=sim"
        ]),
        Some(5)
    );
}

#[test]
fn dry_run_simulation_writes_one_payload() {
    let d = tempfile::tempdir().unwrap();
    ok(
        d.path(),
        &[
            "simulate",
            "--recording=synthetic:WALK:8",
            "--inject-at-s=5",
            "--speed=0",
            "--dry-run=payloads.ndjson",
            "--out=sim",
        ],
    );
    let text = std::fs::read_to_string(d.path().join("payloads.ndjson")).unwrap();
    assert_eq!(text.lines().count(), 1);
    let (p, _) = fallsense::alertnet::decode_payload(text.as_bytes()).unwrap();
    assert_eq!(p.samples.len(), 200);
    assert!(d.path().join("sim/session.json").exists());
}
