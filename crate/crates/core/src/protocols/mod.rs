//! Protocol runs. Every run drives a [`Session`], so each quantum crossing
//! passes the adversary hook and every action lands in the transcript.

mod checks;
mod decoy;
mod entangled;
mod optical;

pub use checks::{bb84_subroutine, gv_subroutine};
pub use decoy::{dll_gv_run, pp_gv_run};
pub use entangled::{dll_run, pp_run};
pub use optical::{ev_run, guo_shi, gv_qkd, koashi_imoto, n09_qkd};

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{ChannelConfig, Content, EngineError, EveRecord, PartyId, Session, Transcript};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProtocolError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Qcore(#[from] crate::qcore::QcoreError),
    #[error(transparent)]
    Optics(#[from] crate::optics::OpticsError),
}

pub type Result<T> = std::result::Result<T, ProtocolError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Decision {
    Proceed,
    Abort,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub stage: String,
    pub checked_count: usize,
    pub error_count: usize,
    pub qber: f64,
    pub timing_violations: usize,
    pub decision: Decision,
}

impl VerificationReport {
    pub fn new(stage: &str, checked_count: usize, error_count: usize, timing_violations: usize, threshold: f64) -> Self {
        let qber = if checked_count > 0 { error_count as f64 / checked_count as f64 } else { 0.0 };
        let decision = if qber > threshold || timing_violations > 0 { Decision::Abort } else { Decision::Proceed };
        Self { stage: stage.to_owned(), checked_count, error_count, qber, timing_violations, decision }
    }

    pub fn passed(&self) -> bool {
        self.decision == Decision::Proceed
    }
}

/// Knobs shared by all runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    /// Abort when a check's error rate exceeds this.
    pub threshold: f64,
    /// Restarts allowed after an abort before the run gives up.
    pub max_restarts: usize,
    pub channel: ChannelConfig,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { threshold: 0.11, max_restarts: 3, channel: ChannelConfig::default() }
    }
}

impl RunOptions {
    /// Zero tolerance: with ideal devices any error is Eve's doing.
    pub fn strict() -> Self {
        Self { threshold: 0.0, ..Self::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolOutcome {
    pub protocol: String,
    /// Alice's key or message.
    pub alice_bits: Vec<u8>,
    /// What Bob ended up with.
    pub bob_bits: Vec<u8>,
    /// Eve's guess at `alice_bits`, when her strategy yields one.
    pub eve_bits: Option<Vec<u8>>,
    pub reports: Vec<VerificationReport>,
    pub aborted: bool,
    pub restarts: usize,
    pub systems_sent: usize,
    pub tallies: BTreeMap<String, u64>,
    pub eve: EveRecord,
    #[serde(skip)]
    pub transcript: Transcript,
}

impl ProtocolOutcome {
    /// Eavesdropping was noticed at least once.
    pub fn detected(&self) -> bool {
        self.aborted || self.restarts > 0
    }

    /// Pooled error rate over every check in the run.
    pub fn qber(&self) -> f64 {
        let checked: usize = self.reports.iter().map(|r| r.checked_count).sum();
        let errors: usize = self.reports.iter().map(|r| r.error_count).sum();
        if checked == 0 {
            0.0
        } else {
            errors as f64 / checked as f64
        }
    }

    pub fn timing_violations(&self) -> usize {
        self.reports.iter().map(|r| r.timing_violations).sum()
    }

    /// Fraction of Alice's bits Bob got right; `None` when nothing was delivered.
    pub fn fidelity(&self) -> Option<f64> {
        agreement(&self.alice_bits, &self.bob_bits)
    }

    pub fn eve_accuracy(&self) -> Option<f64> {
        agreement(&self.alice_bits, self.eve_bits.as_deref()?)
    }

    /// Delivered bits per quantum system sent.
    pub fn key_rate(&self) -> f64 {
        if self.systems_sent == 0 {
            0.0
        } else {
            self.bob_bits.len() as f64 / self.systems_sent as f64
        }
    }

    pub fn tally(&self, key: &str) -> u64 {
        self.tallies.get(key).copied().unwrap_or(0)
    }
}

fn agreement(a: &[u8], b: &[u8]) -> Option<f64> {
    if a.is_empty() || a.len() != b.len() {
        return None;
    }
    Some(a.iter().zip(b).filter(|(x, y)| x == y).count() as f64 / a.len() as f64)
}

/// Bits an attempt delivered.
#[derive(Debug, Default)]
struct Delivered {
    alice: Vec<u8>,
    bob: Vec<u8>,
    eve: Option<Vec<u8>>,
}

/// Per-run bookkeeping that survives restarts.
#[derive(Default)]
struct Ledger {
    reports: Vec<VerificationReport>,
    tallies: BTreeMap<String, u64>,
}

impl Ledger {
    fn bump(&mut self, key: &str, by: u64) {
        *self.tallies.entry(key.to_owned()).or_insert(0) += by;
    }

    /// Files `report`, announces the verdict from `party`, and aborts on
    /// failure. Returns whether the run may continue.
    fn verdict(&mut self, session: &mut Session<'_>, party: PartyId, report: VerificationReport) -> Result<bool> {
        let passed = report.passed();
        session.broadcast(
            party,
            Content::Verdict {
                stage: report.stage.clone(),
                checked: report.checked_count,
                errors: report.error_count,
                timing_violations: report.timing_violations,
                proceed: passed,
            },
        )?;
        if !passed {
            session.abort(party, format!("{} failed: qber {:.4}, timing violations {}", report.stage, report.qber, report.timing_violations));
        }
        self.reports.push(report);
        Ok(passed)
    }
}

/// Runs `attempt` until it delivers or the restart budget is spent.
fn drive<F>(protocol: &str, mut session: Session<'_>, max_restarts: usize, mut attempt: F) -> Result<ProtocolOutcome>
where
    F: FnMut(&mut Session<'_>, &mut Ledger) -> Result<Option<Delivered>>,
{
    let mut ledger = Ledger::default();
    let mut restarts = 0;
    let delivered = loop {
        match attempt(&mut session, &mut ledger)? {
            Some(d) => break Some(d),
            None if restarts < max_restarts => restarts += 1,
            None => break None,
        }
    };
    let aborted = delivered.is_none();
    let d = delivered.unwrap_or_default();
    let eve = session.eve_record().clone();
    let systems_sent = session.systems_sent();
    Ok(ProtocolOutcome {
        protocol: protocol.to_owned(),
        alice_bits: d.alice,
        bob_bits: d.bob,
        eve_bits: d.eve,
        reports: ledger.reports,
        aborted,
        restarts,
        systems_sent,
        tallies: ledger.tallies,
        eve,
        transcript: session.into_transcript(),
    })
}

/// `k` distinct indices out of `0..n`, uniformly, returned sorted.
fn choose<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    let (chosen, _) = idx.partial_shuffle(rng, k);
    let mut chosen = chosen.to_vec();
    chosen.sort_unstable();
    chosen
}

/// Complement of a sorted index set within `0..n`.
fn complement(n: usize, sorted: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(n - sorted.len());
    let mut it = sorted.iter().peekable();
    for i in 0..n {
        if it.peek() == Some(&&i) {
            it.next();
        } else {
            out.push(i);
        }
    }
    out
}

fn bit_string(bits: &[u8]) -> String {
    bits.iter().map(|&b| char::from(b'0' + b)).collect()
}

/// Uniformly random bit string.
pub fn random_bits<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<u8> {
    (0..n).map(|_| u8::from(rng.random_bool(0.5))).collect()
}

fn check_bits(message: &[u8], expected: usize, what: &str) -> Result<()> {
    if message.len() != expected {
        return Err(ProtocolError::Config(format!("{what} needs a {expected}-bit message, got {}", message.len())));
    }
    if message.iter().any(|&b| b > 1) {
        return Err(ProtocolError::Config("message bits must be 0 or 1".into()));
    }
    Ok(())
}

fn check_multiple_of_four(n: usize) -> Result<()> {
    if n == 0 || n % 4 != 0 {
        return Err(ProtocolError::Config(format!("n must be a positive multiple of 4, got {n}")));
    }
    Ok(())
}
