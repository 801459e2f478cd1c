//! Device simulator: replays a recording through the on-device detectors,
//! keeps the 4-second snapshot and dispatches one payload per fall.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpStream;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::server::AlertService;
use super::wire::{encode_payload, AlertPayload, ServerMessage, MAX_FRAME_BYTES, WIRE_VERSION};
use crate::data::{FallKind, Recording};
use crate::error::{Error, Result};
use crate::falldetect::{DetectorId, ThreePhaseMonitor, ThreePhaseParams};
use crate::priorfall::SnapshotBuffer;
use crate::signal::gforce;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RetryPolicy {
    pub attempts: u32,
    pub initial_backoff_ms: u64,
    pub max_backoff_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            attempts: 5,
            initial_backoff_ms: 100,
            max_backoff_ms: 2000,
        }
    }
}

impl RetryPolicy {
    /// Delay before retry `n` (0-based), doubling up to the cap.
    pub fn backoff(&self, n: u32) -> Duration {
        let ms = self.initial_backoff_ms.saturating_mul(1u64 << n.min(20));
        Duration::from_millis(ms.min(self.max_backoff_ms))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceConfig {
    pub device_id: String,
    pub fall: ThreePhaseParams,
    pub knees: ThreePhaseParams,
    /// Replay speed multiplier; 0 replays as fast as possible.
    pub speed: f64,
    /// Events whose impact lies within this many samples of the previous
    /// reported impact are treated as the same fall.
    pub refractory: usize,
    pub retry: RetryPolicy,
}

impl Default for DeviceConfig {
    fn default() -> Self {
        DeviceConfig {
            device_id: "device-1".into(),
            fall: ThreePhaseParams::default(),
            knees: ThreePhaseParams::default(),
            speed: 0.0,
            refractory: 100,
            retry: RetryPolicy::default(),
        }
    }
}

/// Delivers payload lines and returns the server's reply, if any.
pub trait Transport {
    fn send(&mut self, line: &[u8]) -> Result<Option<ServerMessage>>;
}

/// TCP connection opened on first use and reopened after failures.
pub struct TcpTransport {
    addr: String,
    retry: RetryPolicy,
    conn: Option<(TcpStream, BufReader<TcpStream>)>,
}

impl TcpTransport {
    pub fn new(addr: impl Into<String>, retry: RetryPolicy) -> Self {
        TcpTransport {
            addr: addr.into(),
            retry,
            conn: None,
        }
    }

    fn exchange(&mut self, line: &[u8]) -> std::io::Result<ServerMessage> {
        if self.conn.is_none() {
            let stream = TcpStream::connect(&self.addr)?;
            stream.set_read_timeout(Some(Duration::from_secs(30)))?;
            let reader = BufReader::new(stream.try_clone()?);
            self.conn = Some((stream, reader));
        }
        let (stream, reader) = self.conn.as_mut().expect("connected");
        stream.write_all(line)?;
        stream.flush()?;
        let mut reply = Vec::new();
        let n = Read::take(reader, MAX_FRAME_BYTES as u64).read_until(b'\n', &mut reply)?;
        if n == 0 {
            return Err(std::io::Error::new(
                std::io::ErrorKind::UnexpectedEof,
                "server closed the connection",
            ));
        }
        ServerMessage::decode(&reply)
            .map(|(m, _)| m)
            .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e.to_string()))
    }
}

impl Transport for TcpTransport {
    fn send(&mut self, line: &[u8]) -> Result<Option<ServerMessage>> {
        let mut last = String::new();
        for attempt in 0..self.retry.attempts.max(1) {
            if attempt > 0 {
                std::thread::sleep(self.retry.backoff(attempt - 1));
            }
            match self.exchange(line) {
                Ok(m) => return Ok(Some(m)),
                Err(e) => {
                    log::warn!("send to {} failed (attempt {}): {e}", self.addr, attempt + 1);
                    last = e.to_string();
                    self.conn = None;
                }
            }
        }
        Err(Error::Network(format!(
            "{} unreachable after {} attempts: {last}",
            self.addr,
            self.retry.attempts.max(1)
        )))
    }
}

/// Writes payload lines to a sink instead of a socket.
pub struct DryRunTransport<W: Write> {
    pub writer: W,
}

impl<W: Write> Transport for DryRunTransport<W> {
    fn send(&mut self, line: &[u8]) -> Result<Option<ServerMessage>> {
        self.writer
            .write_all(line)
            .and_then(|_| self.writer.flush())
            .map_err(|e| Error::Network(format!("dry-run output: {e}")))?;
        Ok(None)
    }
}

/// Calls an in-process service directly.
pub struct LocalTransport<'a> {
    pub service: &'a AlertService,
    pub peer: String,
}

impl Transport for LocalTransport<'_> {
    fn send(&mut self, line: &[u8]) -> Result<Option<ServerMessage>> {
        Ok(Some(self.service.handle_line(line, &self.peer)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Dispatch {
    Sent {
        response: Option<ServerMessage>,
    },
    /// The buffer had not filled yet.
    Suppressed,
    Failed {
        error: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceEvent {
    pub kind: FallKind,
    pub index: usize,
    pub confirmed_at: usize,
    pub detected_at: u64,
    pub dispatch: Dispatch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionSummary {
    pub device_id: String,
    pub recording: String,
    pub samples: usize,
    pub events: Vec<DeviceEvent>,
    /// Largest relative deviation from nominal pacing over any 1 s span.
    pub pacing_error: Option<f64>,
}

impl SessionSummary {
    pub fn payloads_sent(&self) -> usize {
        self.events
            .iter()
            .filter(|e| matches!(e.dispatch, Dispatch::Sent { .. }))
            .count()
    }

    pub fn responses(&self) -> impl Iterator<Item = &ServerMessage> {
        self.events.iter().filter_map(|e| match &e.dispatch {
            Dispatch::Sent { response } => response.as_ref(),
            _ => None,
        })
    }
}

/// Replays `rec` sample by sample through a FALL and a knees-first monitor.
pub fn run_device_sim(rec: &Recording, cfg: &DeviceConfig, transport: &mut dyn Transport) -> Result<SessionSummary> {
    if !(cfg.speed >= 0.0 && cfg.speed.is_finite()) {
        return Err(Error::invalid(format!("replay speed must be >= 0, got {}", cfg.speed)));
    }
    let rate = rec.sample_rate_hz;
    let mut monitors = [
        (FallKind::Fall, ThreePhaseMonitor::new(cfg.fall)?),
        (FallKind::FallKneesFirst, ThreePhaseMonitor::new(cfg.knees)?),
    ];
    let mut buffer = SnapshotBuffer::default();
    let mut last_peak: Option<usize> = None;
    let mut events = Vec::new();
    let paced = cfg.speed > 0.0;
    let step = if paced {
        Duration::from_secs_f64(1.0 / (rate * cfg.speed))
    } else {
        Duration::ZERO
    };
    let start = Instant::now();
    let mut ticks = Vec::with_capacity(if paced { rec.samples.len() } else { 0 });

    for (i, s) in rec.samples.iter().enumerate() {
        if paced {
            let due = start + step * i as u32;
            let now = Instant::now();
            if due > now {
                std::thread::sleep(due - now);
            }
            ticks.push(start.elapsed());
        }
        buffer.push(*s);
        let g = gforce(s);
        for (kind, monitor) in monitors.iter_mut() {
            for d in monitor.push(g) {
                if last_peak.is_some_and(|p| d.index < p + cfg.refractory) {
                    log::debug!("{kind} at {} merged with the previous event", d.index);
                    continue;
                }
                last_peak = Some(d.index);
                let detected_at = (d.confirmed_at as f64 * 1000.0 / rate).round() as u64;
                let dispatch = match buffer.snapshot() {
                    None => {
                        log::info!(
                            "{kind} at sample {} detected before the buffer filled; not sent",
                            d.index
                        );
                        Dispatch::Suppressed
                    }
                    Some(snap) => {
                        let payload = AlertPayload {
                            version: WIRE_VERSION,
                            device_id: cfg.device_id.clone(),
                            detected_at,
                            fall_kind: *kind,
                            detector: DetectorId::ThreePhase,
                            sample_rate_hz: rate,
                            samples: snap.iter().map(|s| s.channels()).collect(),
                        };
                        let line = encode_payload(&payload)?;
                        match transport.send(&line) {
                            Ok(response) => Dispatch::Sent { response },
                            Err(e) => {
                                log::error!("alert for {kind} at sample {} not delivered: {e}", d.index);
                                Dispatch::Failed { error: e.to_string() }
                            }
                        }
                    }
                };
                events.push(DeviceEvent {
                    kind: *kind,
                    index: d.index,
                    confirmed_at: d.confirmed_at,
                    detected_at,
                    dispatch,
                });
            }
        }
    }

    Ok(SessionSummary {
        device_id: cfg.device_id.clone(),
        recording: rec.id(),
        samples: rec.samples.len(),
        events,
        pacing_error: paced.then(|| pacing_error(&ticks, step, (rate * cfg.speed).round().max(1.0) as usize)),
    })
}

/// Worst relative error of the mean inter-sample interval over every span
/// of `span` consecutive intervals.
pub fn pacing_error(ticks: &[Duration], step: Duration, span: usize) -> f64 {
    if ticks.len() <= span || step.is_zero() {
        return 0.0;
    }
    let nominal = step.as_secs_f64() * span as f64;
    ticks
        .windows(span + 1)
        .map(|w| ((w[span] - w[0]).as_secs_f64() - nominal).abs() / nominal)
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn backoff_is_bounded() {
        let r = RetryPolicy::default();
        assert_eq!(r.backoff(0), Duration::from_millis(100));
        assert_eq!(r.backoff(2), Duration::from_millis(400));
        assert_eq!(r.backoff(40), Duration::from_millis(2000));
    }

    #[test]
    fn refused_connection_reports_after_retries() {
        let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        drop(listener);
        let mut t = TcpTransport::new(
            addr.to_string(),
            RetryPolicy {
                attempts: 3,
                initial_backoff_ms: 1,
                max_backoff_ms: 2,
            },
        );
        let err = t.send(b"{}\n").unwrap_err();
        assert!(err.to_string().contains("after 3 attempts"), "{err}");
    }
}
