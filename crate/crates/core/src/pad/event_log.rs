//! Text format for recorded key streams.
//!
//! ```text
//! t_ms,key,edge
//! 0,MOD_A,down
//! 50,MOD_B,down
//! 300,CYCLE,down
//! 1600,OTHER:65,up
//! ```

use std::fmt::Write as _;

use super::{Edge, KeyEvent, KeyId, TimedAction};

pub const EVENT_LOG_HEADER: &str = "t_ms,key,edge";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EventLogError {
    #[error("line 1: expected header `{EVENT_LOG_HEADER}`, found `{0}`")]
    BadHeader(String),
    #[error("line {line}: expected 3 fields, found {found}")]
    FieldCount { line: usize, found: usize },
    #[error("line {line}: bad timestamp `{value}`")]
    BadTime { line: usize, value: String },
    #[error("line {line}: unknown key `{value}`")]
    BadKey { line: usize, value: String },
    #[error("line {line}: edge must be `down` or `up`, found `{value}`")]
    BadEdge { line: usize, value: String },
}

impl EventLogError {
    pub fn line(&self) -> usize {
        match self {
            EventLogError::BadHeader(_) => 1,
            EventLogError::FieldCount { line, .. }
            | EventLogError::BadTime { line, .. }
            | EventLogError::BadKey { line, .. }
            | EventLogError::BadEdge { line, .. } => *line,
        }
    }
}

fn key_name(key: KeyId) -> String {
    match key {
        KeyId::ModA => "MOD_A".into(),
        KeyId::ModB => "MOD_B".into(),
        KeyId::CycleKey => "CYCLE".into(),
        KeyId::Timeout => "TIMEOUT".into(),
        KeyId::Other(code) => format!("OTHER:{code}"),
    }
}

fn parse_key(s: &str) -> Option<KeyId> {
    match s {
        "MOD_A" => Some(KeyId::ModA),
        "MOD_B" => Some(KeyId::ModB),
        "CYCLE" => Some(KeyId::CycleKey),
        "TIMEOUT" => Some(KeyId::Timeout),
        _ => {
            let code = s.strip_prefix("OTHER:")?;
            if code.is_empty() || !code.bytes().all(|b| b.is_ascii_digit()) {
                return None;
            }
            code.parse().ok().map(KeyId::Other)
        }
    }
}

/// Parses an event log. An empty document is an empty stream. Only a single
/// trailing newline is tolerated; stray whitespace is an error.
pub fn parse_event_log(text: &str) -> Result<Vec<KeyEvent>, EventLogError> {
    if text.is_empty() {
        return Ok(Vec::new());
    }
    let body = text.strip_suffix('\n').unwrap_or(text);
    let mut lines = body.split('\n');
    let header = lines.next().unwrap_or_default();
    if header != EVENT_LOG_HEADER {
        return Err(EventLogError::BadHeader(header.to_string()));
    }

    let mut events = Vec::new();
    for (i, raw) in lines.enumerate() {
        let line = i + 2;
        let fields: Vec<&str> = raw.split(',').collect();
        if fields.len() != 3 {
            return Err(EventLogError::FieldCount {
                line,
                found: fields.len(),
            });
        }
        let t_ok = !fields[0].is_empty() && fields[0].bytes().all(|b| b.is_ascii_digit());
        let t = t_ok
            .then(|| fields[0].parse::<u64>().ok())
            .flatten()
            .ok_or_else(|| EventLogError::BadTime {
                line,
                value: fields[0].to_string(),
            })?;
        let key = parse_key(fields[1]).ok_or_else(|| EventLogError::BadKey {
            line,
            value: fields[1].to_string(),
        })?;
        let edge = match fields[2] {
            "down" => Edge::Down,
            "up" => Edge::Up,
            other => {
                return Err(EventLogError::BadEdge {
                    line,
                    value: other.to_string(),
                })
            }
        };
        events.push(KeyEvent { key, edge, t });
    }
    Ok(events)
}

pub fn write_event_log(events: &[KeyEvent]) -> String {
    let mut out = String::from(EVENT_LOG_HEADER);
    out.push('\n');
    for e in events {
        let edge = match e.edge {
            Edge::Down => "down",
            Edge::Up => "up",
        };
        let _ = writeln!(out, "{},{},{}", e.t, key_name(e.key), edge);
    }
    out
}

/// One `Action@t` line per action, newline separated, no trailing newline.
pub fn format_actions(actions: &[TimedAction]) -> String {
    actions
        .iter()
        .map(|a| a.to_string())
        .collect::<Vec<_>>()
        .join("\n")
}
