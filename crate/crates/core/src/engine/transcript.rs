use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{EngineError, PartyId, Result};
use crate::qcore::{BellLabel, MeasBasis};

/// Measurement family recorded in the transcript. `Optical` covers photon
/// detections and mode-basis projections.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BasisTag {
    Computational,
    Diagonal,
    Bell,
    Optical,
}

impl From<MeasBasis> for BasisTag {
    fn from(b: MeasBasis) -> Self {
        match b {
            MeasBasis::Computational => BasisTag::Computational,
            MeasBasis::Diagonal => BasisTag::Diagonal,
            MeasBasis::Bell => BasisTag::Bell,
        }
    }
}

/// Payload of a public broadcast.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Content {
    Ack { packet: u64 },
    SendTimes { times: Vec<u64> },
    /// One character per position: `Z` computational, `X` diagonal.
    Bases { bases: String },
    Positions { positions: Vec<usize> },
    Bits { bits: String },
    Labels { labels: Vec<BellLabel> },
    Verdict { stage: String, checked: usize, errors: usize, timing_violations: usize, proceed: bool },
    Note { text: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "detail")]
pub enum EventKind {
    QuantumSend { packet: u64, to: PartyId, leg: u32, systems: usize },
    QuantumReceive { packet: u64, from: PartyId, send_time: u64, arrival: u64 },
    ClassicalBroadcast { content: Content },
    Measurement { basis: BasisTag, outcomes: String, cites: Vec<u64> },
    Disclosure { coordinates: Vec<usize>, cites: Vec<u64> },
    Abort { reason: String },
}

impl EventKind {
    pub fn name(&self) -> &'static str {
        match self {
            EventKind::QuantumSend { .. } => "QuantumSend",
            EventKind::QuantumReceive { .. } => "QuantumReceive",
            EventKind::ClassicalBroadcast { .. } => "ClassicalBroadcast",
            EventKind::Measurement { .. } => "Measurement",
            EventKind::Disclosure { .. } => "Disclosure",
            EventKind::Abort { .. } => "Abort",
        }
    }

    /// Short content hash; changes whenever any detail field changes.
    pub fn digest(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("event details serialize");
        hex::encode(&Sha256::digest(&bytes)[..8])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub seq: u64,
    pub time: u64,
    pub party: PartyId,
    #[serde(flatten)]
    pub kind: EventKind,
    pub digest: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Transcript {
    events: Vec<Event>,
}

impl Transcript {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, time: u64, party: PartyId, kind: EventKind) -> u64 {
        let seq = self.events.len() as u64;
        let digest = kind.digest();
        self.events.push(Event { seq, time, party, kind, digest });
        seq
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn last_time(&self) -> u64 {
        self.events.last().map_or(0, |e| e.time)
    }

    /// Number of measurements in `basis` performed by Alice or Bob.
    pub fn legit_measurements(&self, basis: BasisTag) -> usize {
        self.events
            .iter()
            .filter(|e| e.party != PartyId::Eve)
            .filter(|e| matches!(&e.kind, EventKind::Measurement { basis: b, .. } if *b == basis))
            .count()
    }

    /// One JSON object per line.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            out.push_str(&serde_json::to_string(e).expect("event serializes"));
            out.push('\n');
        }
        out
    }

    /// Parses a log, checking each line's digest against its details.
    pub fn from_jsonl(text: &str) -> Result<Self> {
        let mut events = Vec::new();
        for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let err = |message: String| EngineError::Transcript { line: i + 1, message };
            let e: Event = serde_json::from_str(line).map_err(|e| err(e.to_string()))?;
            if e.kind.digest() != e.digest {
                return Err(err(format!("digest mismatch for event {}", e.seq)));
            }
            events.push(e);
        }
        Ok(Self { events })
    }
}
