use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Duration;

use super::wire::AlertResponse;
use crate::error::{Error, Result};

/// Where caretaker notifications go.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SinkConfig {
    Stdout,
    /// HTTP POST of the response JSON.
    Webhook(String),
    /// Notifications are dropped.
    Null,
}

impl FromStr for SinkConfig {
    type Err = Error;

    /// `stdout`, `null` or `webhook:<http url>`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "stdout" => Ok(SinkConfig::Stdout),
            "null" | "none" => Ok(SinkConfig::Null),
            _ => match s.strip_prefix("webhook:") {
                Some(url) => {
                    validate_webhook(url)?;
                    Ok(SinkConfig::Webhook(url.to_string()))
                }
                None => Err(Error::Unknown {
                    what: "notification sink",
                    value: s.to_string(),
                }),
            },
        }
    }
}

impl fmt::Display for SinkConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SinkConfig::Stdout => f.write_str("stdout"),
            SinkConfig::Webhook(u) => write!(f, "webhook:{u}"),
            SinkConfig::Null => f.write_str("null"),
        }
    }
}

/// Webhooks are plain HTTP; the URL must have a host.
pub fn validate_webhook(url: &str) -> Result<()> {
    let uri: ureq::http::Uri = url
        .parse()
        .map_err(|e| Error::invalid(format!("webhook url {url:?}: {e}")))?;
    if uri.scheme_str() != Some("http") {
        return Err(Error::invalid(format!("webhook url {url:?} must use http://")));
    }
    if uri.host().is_none_or(str::is_empty) {
        return Err(Error::invalid(format!("webhook url {url:?} has no host")));
    }
    Ok(())
}

pub trait NotificationSink: Send + Sync {
    fn notify(&self, response: &AlertResponse) -> Result<()>;
}

pub struct StdoutSink;

impl NotificationSink for StdoutSink {
    fn notify(&self, r: &AlertResponse) -> Result<()> {
        let votes: Vec<String> = r.vote_counts.iter().map(|(l, c)| format!("{l}={c}")).collect();
        let mut out = std::io::stdout().lock();
        writeln!(
            out,
            "fall alert from {} at {} ms: prior activity {} ({})",
            r.device_id,
            r.detected_at,
            r.prior_activity,
            votes.join(" ")
        )
        .map_err(|e| Error::Network(format!("stdout: {e}")))
    }
}

pub struct NullSink;

impl NotificationSink for NullSink {
    fn notify(&self, _: &AlertResponse) -> Result<()> {
        Ok(())
    }
}

pub struct WebhookSink {
    url: String,
    agent: ureq::Agent,
}

impl WebhookSink {
    pub fn new(url: &str) -> Result<Self> {
        validate_webhook(url)?;
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(5)))
            .build()
            .into();
        Ok(WebhookSink {
            url: url.to_string(),
            agent,
        })
    }
}

impl NotificationSink for WebhookSink {
    fn notify(&self, r: &AlertResponse) -> Result<()> {
        let body = serde_json::to_string(r).map_err(|e| Error::Network(e.to_string()))?;
        self.agent
            .post(&self.url)
            .header("Content-Type", "application/json")
            .send(body)
            .map_err(|e| Error::Network(format!("webhook {}: {e}", self.url)))?;
        Ok(())
    }
}

pub fn build_sink(cfg: &SinkConfig) -> Result<Box<dyn NotificationSink>> {
    Ok(match cfg {
        SinkConfig::Stdout => Box::new(StdoutSink),
        SinkConfig::Null => Box::new(NullSink),
        SinkConfig::Webhook(url) => Box::new(WebhookSink::new(url)?),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sink_parsing() {
        assert_eq!("stdout".parse::<SinkConfig>().unwrap(), SinkConfig::Stdout);
        let w: SinkConfig = "webhook:http://localhost:9000/alerts".parse().unwrap();
        assert_eq!(w.to_string(), "webhook:http://localhost:9000/alerts");
        assert!("webhook:not a url".parse::<SinkConfig>().is_err());
        assert!("webhook:ftp://host/x".parse::<SinkConfig>().is_err());
        assert!("email".parse::<SinkConfig>().is_err());
    }
}
