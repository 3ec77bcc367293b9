use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::{BasisTag, Content, Event, EventKind, PartyId};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LintIssue {
    pub seq: u64,
    pub rule: String,
    pub message: String,
}

/// Causality findings plus a census of the measurements Alice and Bob made.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LintReport {
    pub events: usize,
    pub issues: Vec<LintIssue>,
    pub measurements: BTreeMap<BasisTag, usize>,
    pub eve_measurements: usize,
}

impl LintReport {
    pub fn is_clean(&self) -> bool {
        self.issues.is_empty()
    }

    pub fn count(&self, basis: BasisTag) -> usize {
        self.measurements.get(&basis).copied().unwrap_or(0)
    }
}

fn visible_to(e: &Event, party: PartyId) -> bool {
    match &e.kind {
        EventKind::ClassicalBroadcast { .. } | EventKind::Disclosure { .. } | EventKind::Abort { .. } => true,
        _ => e.party == party,
    }
}

/// Checks ordering and causality rules over a transcript:
/// sequence numbers and times never go backwards, every receive matches an
/// earlier send, Eve never speaks on the public channel, cited events are
/// earlier and visible to the citing party, and each disclosure follows the
/// counterpart's acknowledgment of the discloser's latest transmission.
pub fn lint(events: &[Event]) -> LintReport {
    let mut report = LintReport { events: events.len(), ..Default::default() };
    let mut issue = |seq: u64, rule: &str, message: String| {
        report.issues.push(LintIssue { seq, rule: rule.to_owned(), message });
    };
    let mut sends: HashMap<u64, (u64, PartyId, PartyId)> = HashMap::new();
    let mut last_send_by: HashMap<PartyId, (u64, u64)> = HashMap::new();
    let mut acks: HashMap<(PartyId, u64), u64> = HashMap::new();
    let mut measurements = BTreeMap::new();
    let mut eve_measurements = 0;
    let mut prev_time = 0;

    for (i, e) in events.iter().enumerate() {
        if e.seq != i as u64 {
            issue(e.seq, "sequence", format!("expected seq {i}"));
        }
        if e.time < prev_time {
            issue(e.seq, "time-order", format!("time {} precedes {}", e.time, prev_time));
        }
        prev_time = prev_time.max(e.time);
        if e.kind.digest() != e.digest {
            issue(e.seq, "digest", "digest does not match details".into());
        }

        let cites: &[u64] = match &e.kind {
            EventKind::Measurement { cites, .. } | EventKind::Disclosure { cites, .. } => cites,
            _ => &[],
        };
        for &c in cites {
            match events.get(c as usize) {
                Some(cited) if c < e.seq && visible_to(cited, e.party) => {}
                Some(_) if c < e.seq => issue(e.seq, "visibility", format!("cites event {c} not visible to {:?}", e.party)),
                _ => issue(e.seq, "causality", format!("cites event {c} which is not earlier")),
            }
        }

        match &e.kind {
            EventKind::QuantumSend { packet, to, .. } => {
                sends.insert(*packet, (e.time, e.party, *to));
                last_send_by.insert(e.party, (e.seq, *packet));
            }
            EventKind::QuantumReceive { packet, arrival, .. } => match sends.get(packet) {
                None => issue(e.seq, "receive-before-send", format!("packet {packet} was never sent")),
                Some(&(t, _, to)) => {
                    if to != e.party {
                        issue(e.seq, "receiver", format!("packet {packet} addressed to {to:?}"));
                    }
                    if *arrival < t || *arrival != e.time {
                        issue(e.seq, "arrival", format!("arrival {arrival} inconsistent with send time {t}"));
                    }
                }
            },
            EventKind::ClassicalBroadcast { content } => {
                if e.party == PartyId::Eve {
                    issue(e.seq, "authentication", "Eve cannot broadcast".into());
                }
                if let Content::Ack { packet } = content {
                    acks.insert((e.party, *packet), e.seq);
                }
            }
            EventKind::Abort { .. } if e.party == PartyId::Eve => {
                issue(e.seq, "authentication", "Eve cannot announce an abort".into());
            }
            EventKind::Measurement { basis, .. } => {
                if e.party == PartyId::Eve {
                    eve_measurements += 1;
                } else {
                    *measurements.entry(*basis).or_insert(0) += 1;
                }
            }
            EventKind::Disclosure { .. } => match last_send_by.get(&e.party) {
                None => issue(e.seq, "disclosure", "nothing was sent before disclosure".into()),
                Some(&(send_seq, packet)) => match acks.get(&(e.party.counterpart(), packet)) {
                    Some(&ack_seq) if ack_seq > send_seq && ack_seq < e.seq => {}
                    _ => issue(e.seq, "disclosure", format!("no acknowledgment of packet {packet} before disclosure")),
                },
            },
            EventKind::Abort { .. } => {}
        }
    }
    report.measurements = measurements;
    report.eve_measurements = eve_measurements;
    report
}
