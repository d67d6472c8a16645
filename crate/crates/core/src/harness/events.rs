use std::io::{self, Write};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EventKind {
    Message,
    Broadcast,
    Mined,
    StateChange,
    RecoveredSecret,
}

/// One transcript line.
///
/// `actor` is `alice`, `bob`, `btc` or `xmr`. `payload_digest` is the hex
/// SHA-256 of the payload: the message JSON, the transaction encoding, the
/// new state tag or the 32-byte secret.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventRecord {
    pub tick: u64,
    pub actor: String,
    pub kind: EventKind,
    pub label: String,
    pub detail: String,
    pub payload_digest: String,
}

pub fn payload_digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Append-only, totally ordered list of events.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transcript {
    events: Vec<EventRecord>,
}

impl Transcript {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(
        &mut self,
        tick: u64,
        actor: &str,
        kind: EventKind,
        label: impl Into<String>,
        detail: impl Into<String>,
        payload: &[u8],
    ) {
        debug_assert!(self.events.last().is_none_or(|e| e.tick <= tick));
        self.events.push(EventRecord {
            tick,
            actor: actor.to_string(),
            kind,
            label: label.into(),
            detail: detail.into(),
            payload_digest: payload_digest(payload),
        });
    }

    pub fn events(&self) -> &[EventRecord] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// JSON Lines, one record per line, trailing newline.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            out.push_str(&serde_json::to_string(e).expect("event serializes"));
            out.push('\n');
        }
        out
    }

    pub fn write_jsonl<W: Write>(&self, mut w: W) -> io::Result<()> {
        w.write_all(self.to_jsonl().as_bytes())
    }

    pub fn from_jsonl(text: &str) -> Result<Self, serde_json::Error> {
        let events = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(serde_json::from_str)
            .collect::<Result<_, _>>()?;
        Ok(Self { events })
    }

    /// Hex SHA-256 of [`to_jsonl`](Self::to_jsonl).
    pub fn digest(&self) -> String {
        payload_digest(self.to_jsonl().as_bytes())
    }

    pub fn of_kind(&self, kind: EventKind) -> impl Iterator<Item = &EventRecord> {
        self.events.iter().filter(move |e| e.kind == kind)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jsonl_round_trip_and_digest() {
        let mut t = Transcript::new();
        t.push(0, "alice", EventKind::Message, "key_gen_a", "to bob", b"x");
        t.push(3, "btc", EventKind::Mined, "btc_lock", "height 1", b"y");
        let text = t.to_jsonl();
        assert_eq!(text.lines().count(), 2);
        assert!(text.contains(r#""kind":"message""#));
        let back = Transcript::from_jsonl(&text).unwrap();
        assert_eq!(back, t);
        assert_eq!(back.digest(), t.digest());
        t.push(3, "bob", EventKind::StateChange, "done", "", b"");
        assert_ne!(back.digest(), t.digest());
    }
}
