pub mod alertnet;
pub mod classify;
pub mod data;
pub mod error;
pub mod eval;
pub mod falldetect;
pub mod priorfall;
pub mod signal;
pub mod synth;

pub use error::{Error, Result};
