use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufWriter;
use std::path::Path;
use std::sync::Arc;

use serde_json::json;

use fallsense::alertnet::{
    build_sink, run_device_sim, spawn_server, AlertService, DeviceConfig, Dispatch, DryRunTransport, RetryPolicy,
    ServerMessage, SinkConfig, TcpTransport, Transport,
};
use fallsense::classify::{randomized_search, train, ClassifierSpec, HyperparamSpace, TrainedModel};
use fallsense::data::{load_dataset_with, Dataset, FallKind, LoadOptions, Remap};
use fallsense::error::{Error, Result};
use fallsense::eval::{
    activity_features, calibrate_fall, default_scenarios, eval_activity, eval_fall, eval_prior, fall_corpus,
    parse_scenarios, resolve_recording, scenario_recording, scenarios_to_text, ActivityEvalConfig, CellOutcome,
    FallEvalConfig, RecordingRef, Scenario,
};
use fallsense::falldetect::{random_segments, Calibration};
use fallsense::signal::{feature_names, WINDOW_LEN};
use fallsense::synth::{synthetic_corpus, CorpusConfig};

use super::args::*;
use super::output::Output;
use super::Failure;

type CmdResult = std::result::Result<(), Failure>;

pub fn run(cli: &Cli, argv: &[String]) -> CmdResult {
    let mut out = Output::create(&cli.out)?;
    let seed = cli.seed;
    let name = match &cli.command {
        Command::Synth(a) => {
            synth(a, seed, &mut out)?;
            "synth"
        }
        Command::Ingest(a) => {
            ingest(a, seed, &mut out)?;
            "ingest"
        }
        Command::Features(a) => {
            features(a, seed, &mut out)?;
            "features"
        }
        Command::Train(a) => {
            train_cmd(a, seed, &mut out)?;
            "train"
        }
        Command::Search(a) => {
            search(a, seed, &mut out)?;
            "search"
        }
        Command::EvalActivity(a) => {
            let r = eval_activity_cmd(a, seed, &mut out);
            out.finish("eval-activity", argv, seed)?;
            return r;
        }
        Command::CalibrateFall(a) => {
            calibrate(a, seed, &mut out)?;
            "calibrate-fall"
        }
        Command::EvalFall(a) => {
            let r = eval_fall_cmd(a, seed, &mut out);
            out.finish("eval-fall", argv, seed)?;
            return r;
        }
        Command::Simulate(a) => {
            let r = simulate(a, seed, &mut out);
            out.finish("simulate", argv, seed)?;
            return r;
        }
        Command::Serve(a) => return serve(a),
        Command::EvalPrior(a) => {
            eval_prior_cmd(a, seed, &mut out)?;
            "eval-prior"
        }
    };
    out.finish(name, argv, seed)?;
    Ok(())
}

fn load_file(path: &Path, remap: Option<&Path>, session_gap_s: f64, out: &mut Output) -> Result<Dataset> {
    let mut opts = LoadOptions {
        session_gap_s,
        ..LoadOptions::default()
    };
    if let Some(r) = remap {
        opts.remap = Remap::load(r)?;
        out.input_file(r)?;
    }
    out.input_file(path)?;
    load_dataset_with(path, &opts)
}

fn load_data(a: &DataArgs, seed: u64, out: &mut Output) -> Result<Dataset> {
    match &a.data {
        Some(path) => load_file(path, a.remap.as_deref(), a.session_gap_s, out),
        None => {
            out.input("synthetic", format!("default corpus, seed {seed}"));
            synthetic_corpus(&CorpusConfig {
                seed,
                ..CorpusConfig::default()
            })
        }
    }
}

fn summary_csv(ds: &Dataset) -> String {
    let mut counts: BTreeMap<(String, String), (usize, usize)> = BTreeMap::new();
    for r in &ds.recordings {
        let e = counts
            .entry((r.location.to_string(), r.label.as_str().to_string()))
            .or_default();
        e.0 += 1;
        e.1 += r.samples.len();
    }
    let mut s = String::from("location,label,recordings,samples\n");
    for ((loc, label), (n, samples)) in counts {
        s.push_str(&format!("{loc},{label},{n},{samples}\n"));
    }
    s
}

fn synth(a: &SynthArgs, seed: u64, out: &mut Output) -> Result<()> {
    let cfg = CorpusConfig {
        subjects: a.subjects,
        sessions: a.sessions,
        activity_s: a.activity_s,
        falls_per_subject: a.falls_per_subject,
        knee_falls_per_subject: a.knee_falls_per_subject,
        locations: if a.locations.is_empty() {
            CorpusConfig::default().locations
        } else {
            a.locations.clone()
        },
        seed,
        ..CorpusConfig::default()
    };
    let ds = synthetic_corpus(&cfg)?;
    out.write("dataset.csv", &ds.to_csv_string())?;
    out.write("summary.csv", &summary_csv(&ds))?;
    out.write("scenarios.csv", &scenarios_to_text(&default_scenarios(a.trials, seed)))?;
    println!(
        "{} recordings written to {}",
        ds.len(),
        out.path("dataset.csv").display()
    );
    Ok(())
}

fn ingest(a: &IngestArgs, seed: u64, out: &mut Output) -> Result<()> {
    let ds = load_data(&a.data, seed, out)?;
    if ds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    out.write("dataset.csv", &ds.to_csv_string())?;
    let summary = summary_csv(&ds);
    out.write("summary.csv", &summary)?;
    print!("{}", fallsense::eval::aligned(&rows(&summary)));
    Ok(())
}

fn rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines()
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn features(a: &FeaturesArgs, seed: u64, out: &mut Output) -> Result<()> {
    let ds = load_data(&a.data, seed, out)?;
    let f = activity_features(&ds, a.location, a.coords, WINDOW_LEN, a.stride)?;
    if f.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut s = format!("recording,start,label,{}\n", feature_names(a.coords).join(","));
    for i in 0..f.len() {
        let values: Vec<String> = f.features[i].values.iter().map(f64::to_string).collect();
        s.push_str(&format!(
            "{},{},{},{}\n",
            f.recordings[i],
            f.starts[i],
            f.labels[i],
            values.join(",")
        ));
    }
    out.write("features.csv", &s)?;
    println!("{} windows", f.len());
    Ok(())
}

fn parse_params(items: &[String]) -> Result<BTreeMap<String, f64>> {
    items
        .iter()
        .map(|p| {
            let (k, v) = p
                .split_once('=')
                .ok_or_else(|| Error::invalid(format!("--param expects NAME=VALUE, got {p:?}")))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| Error::invalid(format!("--param {k}: not a number")))?;
            Ok((k.trim().to_string(), v))
        })
        .collect()
}

fn train_cmd(a: &TrainArgs, seed: u64, out: &mut Output) -> Result<()> {
    let ds = load_data(&a.data, seed, out)?;
    let spec = ClassifierSpec::from_params(a.family, &parse_params(&a.params)?)?;
    let f = activity_features(&ds, Some(a.location), a.coords, WINDOW_LEN, a.stride)?;
    if f.is_empty() {
        return Err(Error::Schema(format!("no activity windows at {}", a.location)));
    }
    let model = train(&spec, &f.features, &f.labels, seed)?;
    model.save(&out.path("model.json"))?;
    out.adopt("model.json")?;
    out.note("spec", json!(spec));
    out.note("windows", json!(f.len()));
    println!(
        "trained {spec} on {} windows -> {}",
        f.len(),
        out.path("model.json").display()
    );
    Ok(())
}

fn search(a: &SearchArgs, seed: u64, out: &mut Output) -> Result<()> {
    let ds = load_data(&a.data, seed, out)?;
    let f = activity_features(&ds, Some(a.location), a.coords, WINDOW_LEN, a.stride)?;
    let report = randomized_search(
        &HyperparamSpace::default_for(a.family),
        &f.features,
        &f.labels,
        a.folds,
        a.iterations,
        seed,
    )?;
    out.write("cv_report.csv", &report.to_csv())?;
    let best = serde_json::to_string_pretty(report.best_spec()).expect("spec serializes") + "\n";
    out.write("best_spec.json", &best)?;
    println!(
        "best {} mean accuracy {:.2}%",
        report.best_spec(),
        report.best_accuracy() * 100.0
    );
    Ok(())
}

fn eval_activity_cmd(a: &EvalActivityArgs, seed: u64, out: &mut Output) -> CmdResult {
    let ds = load_data(&a.data, seed, out)?;
    let mut cfg = ActivityEvalConfig {
        iterations: a.iterations,
        folds: a.folds,
        train_ratio: a.train_ratio,
        stride: a.stride,
        seed,
        ..ActivityEvalConfig::default()
    };
    if !a.locations.is_empty() {
        cfg.locations = a.locations.clone();
    }
    out.note(
        "excluded_families",
        json!(["SVM: not implemented; the grid covers decision tree, k-NN, naive Bayes and GBT"]),
    );
    let report = eval_activity(&ds, &cfg)?;
    out.write("table1.csv", &report.to_csv())?;
    let table = report.to_table();
    out.write("table1.txt", &table)?;
    out.write("cells.json", &(report.to_json() + "\n"))?;
    for c in &report.cells {
        if let CellOutcome::Present { confusion, .. } = &c.outcome {
            out.write(&format!("confusion/{}.csv", c.stem()), &confusion.to_csv())?;
        }
    }
    print!("{table}");
    if report.is_complete() {
        Ok(())
    } else {
        let absent = report.cells.iter().filter(|c| c.accuracy().is_none()).count();
        Err(Failure::Incomplete(format!("{absent} cell(s) absent")))
    }
}

fn fall_cfg(a: &FallArgs, seed: u64) -> FallEvalConfig {
    FallEvalConfig {
        nonfall_count: a.nonfalls,
        segment_len: a.segment_len,
        dtw_clusters: a.dtw_clusters,
        seed,
        ..FallEvalConfig::default()
    }
}

fn calibrate(a: &CalibrateArgs, seed: u64, out: &mut Output) -> Result<()> {
    let ds = load_data(&a.data, seed, out)?;
    let corpus = fall_corpus(&ds, a.fall.location)?;
    let cfg = fall_cfg(&a.fall, seed);
    let negatives = random_segments(&corpus.activities, cfg.nonfall_count, cfg.segment_len, seed)?;
    let falls = FallKind::ALL.iter().map(|&k| (k, corpus.of_kind(k).to_vec())).collect();
    let mut cal = calibrate_fall(&falls, &negatives, &cfg)?;
    cal.provenance.insert("location".into(), a.fall.location.to_string());
    cal.provenance.insert("seed".into(), seed.to_string());
    out.write("calibration.txt", &cal.to_text())?;
    println!("calibration written to {}", out.path("calibration.txt").display());
    Ok(())
}

fn eval_fall_cmd(a: &EvalFallArgs, seed: u64, out: &mut Output) -> CmdResult {
    let ds = load_data(&a.data, seed, out)?;
    let corpus = fall_corpus(&ds, a.fall.location)?;
    let cfg = FallEvalConfig {
        holdout: (!a.no_holdout).then_some(a.holdout),
        ..fall_cfg(&a.fall, seed)
    };
    let mut report = eval_fall(&corpus, &cfg)?;
    report
        .calibration
        .provenance
        .insert("location".into(), a.fall.location.to_string());
    report.calibration.provenance.insert("seed".into(), seed.to_string());
    out.write("table2.csv", &report.to_csv())?;
    let table = report.to_table();
    out.write("table2.txt", &table)?;
    out.write("calibration.txt", &report.calibration.to_text())?;
    out.note("test_nonfalls", json!(report.test_nonfalls));
    out.note("test_falls", json!(report.test_falls));
    print!("{table}");
    if report.is_complete() {
        Ok(())
    } else {
        Err(Failure::Incomplete(format!(
            "{} row(s) not evaluated",
            report.missing.len()
        )))
    }
}

fn load_calibration(path: Option<&Path>, out: &mut Output) -> Result<Calibration> {
    match path {
        Some(p) => {
            out.input_file(p)?;
            Calibration::load(p)
        }
        None => Ok(Calibration::default()),
    }
}

fn optional_dataset(data: Option<&Path>, remap: Option<&Path>, out: &mut Output) -> Result<Option<Dataset>> {
    data.map(|p| load_file(p, remap, fallsense::data::SESSION_GAP_S, out))
        .transpose()
}

fn simulate(a: &SimulateArgs, seed: u64, out: &mut Output) -> CmdResult {
    let cal = load_calibration(a.calibration.as_deref(), out)?;
    let dataset = optional_dataset(a.data.as_deref(), a.remap.as_deref(), out)?;
    let reference: RecordingRef = a.recording.parse()?;
    let rec = match a.inject_at_s {
        Some(at) => {
            let sc = Scenario {
                recording: reference,
                inject_at_s: at,
                fall_kind: a.fall_kind,
                seed,
            };
            scenario_recording(&sc, dataset.as_ref())?.0
        }
        None => resolve_recording(&reference, seed, dataset.as_ref())?,
    };
    let device = DeviceConfig {
        device_id: a.device_id.clone(),
        fall: cal.fall.three_phase,
        knees: cal.knees.three_phase,
        speed: a.speed,
        retry: RetryPolicy {
            attempts: a.retries.max(1),
            ..RetryPolicy::default()
        },
        ..DeviceConfig::default()
    };
    let mut transport: Box<dyn Transport> = match &a.dry_run {
        Some(path) => {
            let f = File::create(path).map_err(|e| Error::io(path, e))?;
            Box::new(DryRunTransport {
                writer: BufWriter::new(f),
            })
        }
        None => Box::new(TcpTransport::new(a.server.clone(), device.retry)),
    };
    let summary = run_device_sim(&rec, &device, transport.as_mut())?;
    drop(transport);
    let text = serde_json::to_string_pretty(&summary).expect("summary serializes") + "\n";
    out.write("session.json", &text)?;
    for e in &summary.events {
        let status = match &e.dispatch {
            Dispatch::Sent {
                response: Some(ServerMessage::Response(r)),
            } => format!("sent; prior activity {}", r.prior_activity),
            Dispatch::Sent {
                response: Some(ServerMessage::Error { kind, message }),
            } => format!("sent; server {kind} error: {message}"),
            Dispatch::Sent { response: None } => "written".to_string(),
            Dispatch::Suppressed => "suppressed (buffer not full)".to_string(),
            Dispatch::Failed { error } => format!("failed: {error}"),
        };
        println!("{} at sample {} ({} ms): {status}", e.kind, e.index, e.detected_at);
    }
    println!(
        "{} event(s), {} payload(s) sent",
        summary.events.len(),
        summary.payloads_sent()
    );
    let failed = summary
        .events
        .iter()
        .filter(|e| matches!(e.dispatch, Dispatch::Failed { .. }))
        .count();
    if failed > 0 {
        return Err(Failure::Error(Error::Network(format!(
            "{failed} alert(s) not delivered"
        ))));
    }
    Ok(())
}

fn serve(a: &ServeArgs) -> CmdResult {
    let model = TrainedModel::load(&a.model)?;
    let sink = build_sink(&a.sink.parse::<SinkConfig>()?)?;
    let mut service = AlertService::new(Arc::new(model), sink);
    if let Some(p) = &a.audit_log {
        service = service.with_audit_log(p)?;
    }
    let handle = spawn_server(&a.bind, Arc::new(service))?;
    eprintln!("listening on {}", handle.addr());
    handle.join();
    Ok(())
}

fn eval_prior_cmd(a: &EvalPriorArgs, seed: u64, out: &mut Output) -> Result<()> {
    out.input_file(&a.model)?;
    let model = TrainedModel::load(&a.model)?;
    let cal = load_calibration(a.calibration.as_deref(), out)?;
    let dataset = optional_dataset(a.data.as_deref(), a.remap.as_deref(), out)?;
    let scenarios = match &a.scenarios {
        Some(p) => {
            out.input_file(p)?;
            parse_scenarios(&std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?)?
        }
        None => default_scenarios(a.trials, seed),
    };
    let device = DeviceConfig {
        fall: cal.fall.three_phase,
        knees: cal.knees.three_phase,
        speed: 0.0,
        ..DeviceConfig::default()
    };
    let report = eval_prior(Arc::new(model), &scenarios, dataset.as_ref(), &device)?;
    out.write("scenarios.csv", &scenarios_to_text(&scenarios))?;
    out.write("table3.csv", &report.to_csv())?;
    let table = report.to_table();
    out.write("table3.txt", &table)?;
    out.write(
        "outcomes.json",
        &(serde_json::to_string_pretty(&report.outcomes).expect("outcomes serialize") + "\n"),
    )?;
    print!("{table}");
    Ok(())
}
