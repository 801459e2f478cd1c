//! Alert service: decode, identify the prior activity, reply, notify, audit.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::path::Path;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::Serialize;

use super::sink::NotificationSink;
use super::wire::{decode_payload, digest, AlertResponse, ServerMessage, MAX_FRAME_BYTES, WIRE_VERSION};
use crate::classify::TrainedModel;
use crate::data::Sample;
use crate::error::{Error, Result};
use crate::priorfall::identify_prior_activity;

pub fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_millis() as u64)
}

/// One audit log line.
#[derive(Debug, Clone, Serialize)]
pub struct AuditRecord {
    /// Arrival order across all connections.
    pub seq: u64,
    pub peer: String,
    pub device_id: Option<String>,
    pub payload_sha256: String,
    pub response: ServerMessage,
    pub latency_us: u64,
}

pub struct AlertService {
    model: Arc<TrainedModel>,
    sink: Box<dyn NotificationSink>,
    audit: Option<Mutex<BufWriter<File>>>,
    seq: AtomicU64,
}

impl AlertService {
    pub fn new(model: Arc<TrainedModel>, sink: Box<dyn NotificationSink>) -> Self {
        AlertService {
            model,
            sink,
            audit: None,
            seq: AtomicU64::new(0),
        }
    }

    /// Appends every handled message to `path` as JSON lines.
    pub fn with_audit_log(mut self, path: &Path) -> Result<Self> {
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| Error::io(path, e))?;
        self.audit = Some(Mutex::new(BufWriter::new(file)));
        Ok(self)
    }

    pub fn model(&self) -> &TrainedModel {
        &self.model
    }

    /// Handles one payload line (terminator optional).
    pub fn handle_line(&self, line: &[u8], peer: &str) -> ServerMessage {
        let started = Instant::now();
        let seq = self.seq.fetch_add(1, Ordering::SeqCst);
        let mut framed = line.to_vec();
        if framed.last() != Some(&b'\n') {
            framed.push(b'\n');
        }
        let payload_sha256 = digest(&framed);
        let (device_id, response) = match self.respond(&framed, &payload_sha256) {
            Ok(r) => {
                if let Err(e) = self.sink.notify(&r) {
                    log::warn!("notification for {} failed: {e}", r.device_id);
                }
                (Some(r.device_id.clone()), ServerMessage::Response(r))
            }
            Err(e) => (None, ServerMessage::from_error(&e)),
        };
        self.audit(AuditRecord {
            seq,
            peer: peer.to_string(),
            device_id,
            payload_sha256,
            response: response.clone(),
            latency_us: started.elapsed().as_micros() as u64,
        });
        response
    }

    fn respond(&self, framed: &[u8], payload_sha256: &str) -> Result<AlertResponse> {
        let (payload, _) = decode_payload(framed)?;
        let dt = 1.0 / payload.sample_rate_hz;
        let snapshot: Vec<Sample> = payload
            .samples
            .iter()
            .enumerate()
            .map(|(i, c)| Sample::from_channels(i as f64 * dt, *c))
            .collect();
        let report = identify_prior_activity(&self.model, &snapshot)?;
        Ok(AlertResponse {
            version: WIRE_VERSION,
            device_id: payload.device_id,
            detected_at: payload.detected_at,
            payload_sha256: payload_sha256.to_string(),
            prior_activity: report.winner,
            vote_counts: report.vote_counts,
            window_predictions: report.window_predictions,
            served_at: now_ms(),
        })
    }

    fn audit(&self, record: AuditRecord) {
        let Some(audit) = &self.audit else { return };
        let line = match serde_json::to_string(&record) {
            Ok(l) => l,
            Err(e) => {
                log::error!("audit record {} not serializable: {e}", record.seq);
                return;
            }
        };
        let mut w = audit.lock().unwrap_or_else(|p| p.into_inner());
        if let Err(e) = writeln!(w, "{line}").and_then(|_| w.flush()) {
            log::error!("audit log write failed: {e}");
        }
    }
}

/// Serves one connection until the peer closes it.
pub fn serve_connection(service: &AlertService, stream: TcpStream) -> std::io::Result<()> {
    let peer = stream
        .peer_addr()
        .map_or_else(|_| "unknown".to_string(), |a| a.to_string());
    let mut writer = stream.try_clone()?;
    let mut reader = BufReader::new(stream);
    let mut line = Vec::new();
    loop {
        line.clear();
        let n = (&mut reader)
            .take(MAX_FRAME_BYTES as u64 + 1)
            .read_until(b'\n', &mut line)?;
        if n == 0 {
            return Ok(());
        }
        if line.len() > MAX_FRAME_BYTES {
            let msg = ServerMessage::Error {
                kind: "frame".into(),
                message: format!("message exceeds {MAX_FRAME_BYTES} bytes"),
            };
            writer.write_all(&msg.encode())?;
            return Ok(());
        }
        if line.iter().all(u8::is_ascii_whitespace) {
            continue;
        }
        let reply = if line.last() == Some(&b'\n') {
            service.handle_line(&line, &peer)
        } else {
            ServerMessage::Error {
                kind: "frame".into(),
                message: "truncated message: connection closed before line terminator".into(),
            }
        };
        writer.write_all(&reply.encode())?;
        writer.flush()?;
    }
}

/// A running server; dropping it without [`ServerHandle::stop`] leaves the
/// accept loop running.
pub struct ServerHandle {
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    thread: Option<JoinHandle<()>>,
}

impl ServerHandle {
    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    /// Blocks until the accept loop ends.
    pub fn join(mut self) {
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }

    pub fn stop(mut self) {
        self.stop.store(true, Ordering::SeqCst);
        let _ = TcpStream::connect(self.addr);
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

/// Binds and serves in the background, one thread per connection.
pub fn spawn_server(bind: &str, service: Arc<AlertService>) -> Result<ServerHandle> {
    let listener = TcpListener::bind(bind).map_err(|e| Error::Network(format!("bind {bind}: {e}")))?;
    let addr = listener.local_addr().map_err(|e| Error::Network(e.to_string()))?;
    let stop = Arc::new(AtomicBool::new(false));
    let flag = stop.clone();
    let thread = std::thread::spawn(move || accept_loop(listener, service, flag));
    Ok(ServerHandle {
        addr,
        stop,
        thread: Some(thread),
    })
}

/// Binds and serves on the calling thread until the process ends.
pub fn run_server(bind: &str, service: Arc<AlertService>) -> Result<()> {
    let listener = TcpListener::bind(bind).map_err(|e| Error::Network(format!("bind {bind}: {e}")))?;
    log::info!(
        "serving on {}",
        listener.local_addr().map_err(|e| Error::Network(e.to_string()))?
    );
    accept_loop(listener, service, Arc::new(AtomicBool::new(false)));
    Ok(())
}

fn accept_loop(listener: TcpListener, service: Arc<AlertService>, stop: Arc<AtomicBool>) {
    for stream in listener.incoming() {
        if stop.load(Ordering::SeqCst) {
            break;
        }
        match stream {
            Ok(stream) => {
                let service = service.clone();
                std::thread::spawn(move || {
                    if let Err(e) = serve_connection(&service, stream) {
                        log::debug!("connection ended: {e}");
                    }
                });
            }
            Err(e) => log::warn!("accept failed: {e}"),
        }
    }
}
