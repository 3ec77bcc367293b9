//! Eavesdropping strategies. Each one is a stateful per-run object plugged
//! into the quantum channel hook; it sees the packet in flight and every
//! public broadcast made so far, nothing else.

use rand::seq::SliceRandom;
use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{Adversary, BasisTag, EveRecord, InFlight, Payload, PhotonSetup, QubitRole};
use crate::optics::GvLayout;
use crate::qcore::{MeasBasis, QubitId};

pub use crate::engine::Adversary as EveStrategy;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AdversaryError {
    #[error("unknown eavesdropper `{0}` (expected one of: {names})", names = EveSpec::NAMES.join(", "))]
    UnknownName(String),
    #[error("eve.{field} = {value} must lie in [0, 1]")]
    Probability { field: &'static str, value: f64 },
}

/// Basis choice for intercept-resend.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResendPolicy {
    #[serde(alias = "always_z")]
    Computational,
    #[serde(alias = "always_x")]
    Diagonal,
    #[default]
    Random,
}

/// How Eve groups travelling qubits into pairs for Bell measurements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pairing {
    /// Neighbours in transmission order. Under a random permutation this is
    /// almost always wrong.
    #[default]
    Adjacent,
    /// True decoy partners (white-box; the state is left undisturbed).
    Correct,
    /// White-box: mispair `m` decoy pairs, each with its own non-decoy
    /// qubit, so every disturbed pair is hit by exactly one measurement.
    Targeted(usize),
}

fn one() -> f64 {
    1.0
}

fn half() -> f64 {
    0.5
}

fn yes() -> bool {
    true
}

/// Serializable adversary configuration.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EveSpec {
    #[default]
    None,
    InterceptResend {
        #[serde(default)]
        policy: ResendPolicy,
        #[serde(default = "one")]
        fraction: f64,
        /// Transmission legs to attack; all when absent.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        legs: Option<Vec<u32>>,
    },
    BellMispair {
        #[serde(default)]
        pairing: Pairing,
        #[serde(default = "one")]
        fraction: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        legs: Option<Vec<u32>>,
    },
    GvDelay {
        #[serde(default = "yes")]
        knows_send_time: bool,
    },
    N09Block {
        #[serde(default = "half")]
        p_block: f64,
    },
}

impl EveSpec {
    pub const NAMES: [&'static str; 5] = ["none", "intercept-resend", "bell-mispair", "gv-delay", "n09-block"];

    /// Strategy with default parameters from its command-line name.
    pub fn from_name(name: &str) -> Result<Self, AdversaryError> {
        Ok(match name.replace('_', "-").as_str() {
            "none" => EveSpec::None,
            "intercept-resend" => EveSpec::InterceptResend { policy: ResendPolicy::Random, fraction: 1.0, legs: None },
            "bell-mispair" => EveSpec::BellMispair { pairing: Pairing::Adjacent, fraction: 1.0, legs: None },
            "gv-delay" => EveSpec::GvDelay { knows_send_time: true },
            "n09-block" => EveSpec::N09Block { p_block: 0.5 },
            _ => return Err(AdversaryError::UnknownName(name.to_owned())),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            EveSpec::None => Self::NAMES[0],
            EveSpec::InterceptResend { .. } => Self::NAMES[1],
            EveSpec::BellMispair { .. } => Self::NAMES[2],
            EveSpec::GvDelay { .. } => Self::NAMES[3],
            EveSpec::N09Block { .. } => Self::NAMES[4],
        }
    }

    pub fn validate(&self) -> Result<(), AdversaryError> {
        let check = |field, value: f64| {
            if (0.0..=1.0).contains(&value) {
                Ok(())
            } else {
                Err(AdversaryError::Probability { field, value })
            }
        };
        match self {
            EveSpec::InterceptResend { fraction, .. } | EveSpec::BellMispair { fraction, .. } => check("fraction", *fraction),
            EveSpec::N09Block { p_block } => check("p_block", *p_block),
            _ => Ok(()),
        }
    }

    pub fn build(&self) -> Box<dyn Adversary> {
        match self.clone() {
            EveSpec::None => Box::new(Passive::default()),
            EveSpec::InterceptResend { policy, fraction, legs } => {
                Box::new(InterceptResend { policy, fraction, legs, record: EveRecord::default() })
            }
            EveSpec::BellMispair { pairing, fraction, legs } => {
                Box::new(BellMispair { pairing, fraction, legs, record: EveRecord::default() })
            }
            EveSpec::GvDelay { knows_send_time } => Box::new(GvDelay { knows_send_time, record: EveRecord::default() }),
            EveSpec::N09Block { p_block } => Box::new(N09Block { p_block, record: EveRecord::default() }),
        }
    }
}

fn on_leg(legs: &Option<Vec<u32>>, leg: u32) -> bool {
    legs.as_ref().is_none_or(|l| l.contains(&leg))
}

/// No eavesdropper.
#[derive(Debug, Default)]
pub struct Passive {
    record: EveRecord,
}

impl Adversary for Passive {
    fn intercept(&mut self, _: &mut InFlight<'_>, _: &mut dyn RngCore) {}

    fn record(&self) -> &EveRecord {
        &self.record
    }
}

/// Measures single travelling qubits and forwards them collapsed.
#[derive(Debug)]
pub struct InterceptResend {
    pub policy: ResendPolicy,
    pub fraction: f64,
    pub legs: Option<Vec<u32>>,
    record: EveRecord,
}

impl Adversary for InterceptResend {
    fn intercept(&mut self, flight: &mut InFlight<'_>, rng: &mut dyn RngCore) {
        if !on_leg(&self.legs, flight.leg) {
            return;
        }
        let Payload::Qubits { ids, pool, .. } = &mut flight.payload else { return };
        let mut outcomes = [String::new(), String::new()];
        for &q in ids.iter() {
            if !rng.random_bool(self.fraction) {
                continue;
            }
            let basis = match self.policy {
                ResendPolicy::Computational => MeasBasis::Computational,
                ResendPolicy::Diagonal => MeasBasis::Diagonal,
                ResendPolicy::Random if rng.random_bool(0.5) => MeasBasis::Diagonal,
                ResendPolicy::Random => MeasBasis::Computational,
            };
            let bit = pool.measure(q, basis, rng).expect("travelling qubit is live");
            self.record.bits.push(bit);
            self.record.interactions += 1;
            outcomes[usize::from(basis == MeasBasis::Diagonal)].push(char::from(b'0' + bit));
        }
        for (basis, o) in [BasisTag::Computational, BasisTag::Diagonal].into_iter().zip(outcomes) {
            if !o.is_empty() {
                flight.log(basis, o, vec![]);
            }
        }
    }

    fn record(&self) -> &EveRecord {
        &self.record
    }
}

/// Bell-measures pairs of travelling qubits chosen by a pairing policy.
#[derive(Debug)]
pub struct BellMispair {
    pub pairing: Pairing,
    pub fraction: f64,
    pub legs: Option<Vec<u32>>,
    record: EveRecord,
}

impl BellMispair {
    fn pairs(&self, ids: &[QubitId], roles: &[QubitRole], rng: &mut dyn RngCore) -> Vec<(QubitId, QubitId)> {
        match self.pairing {
            Pairing::Adjacent => ids.chunks_exact(2).map(|c| (c[0], c[1])).collect(),
            Pairing::Correct => {
                let mut by_pair: Vec<(usize, QubitId)> = ids
                    .iter()
                    .zip(roles)
                    .filter_map(|(&q, r)| match r {
                        QubitRole::Decoy { pair } => Some((*pair, q)),
                        _ => None,
                    })
                    .collect();
                by_pair.sort();
                by_pair.chunks_exact(2).filter(|c| c[0].0 == c[1].0).map(|c| (c[0].1, c[1].1)).collect()
            }
            Pairing::Targeted(m) => {
                let mut first_of_pair: Vec<(usize, QubitId)> = Vec::new();
                let mut others = Vec::new();
                for (&q, r) in ids.iter().zip(roles) {
                    match r {
                        QubitRole::Decoy { pair } if !first_of_pair.iter().any(|(p, _)| p == pair) => {
                            first_of_pair.push((*pair, q))
                        }
                        QubitRole::Decoy { .. } => {}
                        _ => others.push(q),
                    }
                }
                first_of_pair.shuffle(rng);
                others.shuffle(rng);
                first_of_pair.into_iter().map(|(_, q)| q).zip(others).take(m).collect()
            }
        }
    }
}

impl Adversary for BellMispair {
    fn intercept(&mut self, flight: &mut InFlight<'_>, rng: &mut dyn RngCore) {
        if !on_leg(&self.legs, flight.leg) {
            return;
        }
        let Payload::Qubits { ids, roles, pool } = &mut flight.payload else { return };
        let pairs = self.pairs(ids, roles, rng);
        let mut labels = Vec::new();
        for (a, b) in pairs {
            if !rng.random_bool(self.fraction) {
                continue;
            }
            let label = pool.bell_measure(a, b, rng).expect("travelling qubits are live");
            self.record.labels.push(label);
            self.record.interactions += 1;
            labels.push(label.short());
        }
        if !labels.is_empty() {
            flight.log(BasisTag::Bell, labels.join(","), vec![]);
        }
    }

    fn record(&self) -> &EveRecord {
        &self.record
    }
}

/// Attack on the two-packet encoding.
///
/// With a predictable schedule Eve sends a fake bit-0 state on time, waits
/// for the original's second packet, measures the original in the
/// {bit 0, bit 1} basis, and flips the phase of the fake second packet when
/// she saw bit 1. Without it she has to hold the first packet until the
/// second arrives, which shows up as a late arrival.
#[derive(Debug)]
pub struct GvDelay {
    pub knows_send_time: bool,
    record: EveRecord,
}

impl Adversary for GvDelay {
    fn intercept(&mut self, flight: &mut InFlight<'_>, rng: &mut dyn RngCore) {
        let send_time = flight.send_time;
        let can_fake = self.knows_send_time && flight.schedule_public();
        let Payload::Photon(photon) = &mut flight.payload else { return };
        let PhotonSetup::Gv { reflectivity, tau } = photon.setup else { return };
        if flight.leg != 0 || photon.state.is_terminal() {
            return;
        }
        let layout = GvLayout::new(reflectivity, tau).expect("reflectivity validated by the protocol");
        let (a, b) = (GvLayout::<f64>::A, GvLayout::<f64>::B);

        let mut held = photon.state.clone();
        held.delay_mode(a, tau);
        let aligned = send_time + tau;
        let p0 = layout.encoded(0, aligned).overlap(&held).norm_sqr();
        let p1 = layout.encoded(1, aligned).overlap(&held).norm_sqr();
        let bit = u8::from(rng.random::<f64>() * (p0 + p1) >= p0);

        let forwarded = if can_fake {
            let mut fake = layout.encoded(0, send_time);
            fake.delay_mode(b, tau);
            if bit == 1 {
                fake.phase_mode(b, std::f64::consts::PI);
            }
            fake
        } else {
            let mut resent = layout.encoded(bit, aligned);
            resent.delay_mode(b, tau);
            flight.added_delay = tau;
            resent
        };
        photon.state = forwarded;
        self.record.bits.push(bit);
        self.record.interactions += 1;
        flight.log(BasisTag::Optical, bit.to_string(), vec![]);
    }

    fn record(&self) -> &EveRecord {
        &self.record
    }
}

/// Puts an absorber into the N09 channel arm with probability `p_block`.
#[derive(Debug)]
pub struct N09Block {
    pub p_block: f64,
    record: EveRecord,
}

impl Adversary for N09Block {
    fn intercept(&mut self, flight: &mut InFlight<'_>, rng: &mut dyn RngCore) {
        let Payload::Photon(photon) = &mut flight.payload else { return };
        if flight.leg != 0 || photon.setup != PhotonSetup::N09 || photon.state.is_terminal() {
            return;
        }
        if !rng.random_bool(self.p_block) {
            return;
        }
        self.record.interactions += 1;
        let mode = photon.modes[0].clone();
        let absorbed = photon.state.absorb_now(&mode, "eve", rng).expect("live photon");
        if absorbed {
            self.record.absorptions += 1;
        }
        flight.log(BasisTag::Optical, if absorbed { "absorbed" } else { "clear" }.into(), vec![]);
    }

    fn record(&self) -> &EveRecord {
        &self.record
    }
}
