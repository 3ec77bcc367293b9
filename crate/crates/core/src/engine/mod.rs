//! Protocol execution substrate: parties, an authenticated public channel, a
//! quantum channel with transit time and an interception hook, permutation
//! bookkeeping, and the event transcript.

mod lint;
mod session;
mod transcript;

pub use lint::{lint, LintIssue, LintReport};
pub use session::{
    disclose_coordinates, random_permutation, Adversary, EveAction, EveRecord, InFlight, Payload, PhotonFlight,
    PhotonSetup, QubitRole, Receipt, Session,
};
pub use transcript::{BasisTag, Content, Event, EventKind, Transcript};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PartyId {
    Alice,
    Bob,
    Eve,
}

impl PartyId {
    /// The legitimate party at the other end of the link.
    pub fn counterpart(self) -> PartyId {
        match self {
            PartyId::Alice => PartyId::Bob,
            PartyId::Bob => PartyId::Alice,
            PartyId::Eve => PartyId::Eve,
        }
    }
}

/// Quantum channel timing, in abstract time bins.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelConfig {
    /// Transit time from sender to receiver.
    pub theta: u64,
    /// Hold-back of the second wave packet in two-packet encodings.
    pub tau: u64,
    pub random_send_time: bool,
    /// Width of the uniform send-time window when `random_send_time` is set.
    pub send_time_jitter: u64,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self { theta: 2, tau: 5, random_send_time: false, send_time_jitter: 16 }
    }
}

impl ChannelConfig {
    /// Checks the two-packet timing requirement `tau > theta`.
    pub fn validate_two_packet(&self) -> Result<()> {
        if self.tau <= self.theta {
            return Err(EngineError::Channel(format!("tau ({}) must exceed theta ({})", self.tau, self.theta)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("{0:?} cannot send on the authenticated channel")]
    Authentication(PartyId),
    #[error("channel configuration: {0}")]
    Channel(String),
    #[error("subset index {index} out of range for permutation of size {size}")]
    Subset { index: usize, size: usize },
    #[error("transcript line {line}: {message}")]
    Transcript { line: usize, message: String },
    #[error(transparent)]
    Qcore(#[from] crate::qcore::QcoreError),
    #[error(transparent)]
    Optics(#[from] crate::optics::OpticsError),
}

pub type Result<T> = std::result::Result<T, EngineError>;
