//! Device-to-server alert path: wire codec, device simulator, alert service
//! and caretaker notification.

pub mod device;
pub mod server;
pub mod sink;
pub mod wire;

pub use device::{
    run_device_sim, DeviceConfig, DeviceEvent, Dispatch, DryRunTransport, LocalTransport, RetryPolicy, SessionSummary,
    TcpTransport, Transport,
};
pub use server::{run_server, spawn_server, AlertService, ServerHandle};
pub use sink::{build_sink, NotificationSink, NullSink, SinkConfig, StdoutSink, WebhookSink};
pub use wire::{
    decode_payload, encode_payload, AlertPayload, AlertResponse, ServerMessage, WireError, MAX_PAYLOAD_BYTES,
    WIRE_VERSION,
};
