use rand::seq::SliceRandom;
use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use super::{BasisTag, ChannelConfig, Content, EngineError, Event, EventKind, PartyId, Result, Transcript};
use crate::optics::ModeState;
use crate::qcore::{BellLabel, Permutation, QubitId, QubitPool};

/// Simulator-side tag for a travelling qubit. Honest parties never look at
/// it; white-box adversary policies may.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QubitRole {
    /// Member of decoy pair `pair`.
    Decoy { pair: usize },
    Message,
    Verification,
    Travel,
}

/// Which interferometer a photon belongs to, so an adversary knows what
/// it is looking at.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PhotonSetup {
    Gv { reflectivity: f64, tau: u64 },
    MachZehnder,
    N09,
}

/// A photon crossing the channel. Only `modes` are exposed to the channel;
/// amplitude elsewhere stays in the sender's lab.
#[derive(Debug, Clone)]
pub struct PhotonFlight {
    pub state: ModeState<f64>,
    pub setup: PhotonSetup,
    pub modes: Vec<String>,
}

pub enum Payload<'a> {
    Qubits { ids: &'a [QubitId], roles: &'a [QubitRole], pool: &'a mut QubitPool },
    Photon(&'a mut PhotonFlight),
}

/// One measurement Eve made while a packet was in her hands.
#[derive(Debug, Clone, PartialEq)]
pub struct EveAction {
    pub basis: BasisTag,
    pub outcomes: String,
    /// Broadcasts her choice depended on.
    pub cites: Vec<u64>,
}

/// Mutable view of a packet between sender and receiver.
pub struct InFlight<'a> {
    pub leg: u32,
    pub from: PartyId,
    pub to: PartyId,
    pub send_time: u64,
    pub channel: ChannelConfig,
    pub payload: Payload<'a>,
    /// Public broadcasts so far; Eve's entire classical knowledge.
    pub view: &'a [Event],
    /// Extra hold time Eve adds to qubit packets.
    pub added_delay: u64,
    actions: Vec<EveAction>,
}

impl InFlight<'_> {
    /// Whether send times follow a fixed, predictable schedule.
    pub fn schedule_public(&self) -> bool {
        !self.channel.random_send_time
    }

    pub fn log(&mut self, basis: BasisTag, outcomes: String, cites: Vec<u64>) {
        self.actions.push(EveAction { basis, outcomes, cites });
    }
}

/// What Eve extracted during a run.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EveRecord {
    pub bits: Vec<u8>,
    pub labels: Vec<BellLabel>,
    pub absorptions: usize,
    pub interactions: usize,
}

/// Hook invoked exactly once per packet crossing the quantum channel.
pub trait Adversary: Send {
    fn intercept(&mut self, flight: &mut InFlight<'_>, rng: &mut dyn RngCore);
    fn record(&self) -> &EveRecord;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Receipt {
    pub packet: u64,
    pub send_seq: u64,
    pub receive_seq: u64,
    pub send_time: u64,
    pub arrival: u64,
}

/// One protocol run: clock, transcript, channel and the adversary hook.
pub struct Session<'e> {
    transcript: Transcript,
    channel: ChannelConfig,
    eve: &'e mut dyn Adversary,
    clock: u64,
    next_packet: u64,
    systems_sent: usize,
}

impl<'e> Session<'e> {
    pub fn new(channel: ChannelConfig, eve: &'e mut dyn Adversary) -> Self {
        Self { transcript: Transcript::new(), channel, eve, clock: 0, next_packet: 0, systems_sent: 0 }
    }

    pub fn channel(&self) -> &ChannelConfig {
        &self.channel
    }

    pub fn now(&self) -> u64 {
        self.clock
    }

    fn tick(&mut self) -> u64 {
        self.clock += 1;
        self.clock
    }

    fn advance_to(&mut self, time: u64) -> u64 {
        self.clock = self.clock.max(time);
        self.clock
    }

    pub fn transcript(&self) -> &Transcript {
        &self.transcript
    }

    pub fn into_transcript(self) -> Transcript {
        self.transcript
    }

    /// Quantum systems that crossed the channel, counted once per crossing.
    pub fn systems_sent(&self) -> usize {
        self.systems_sent
    }

    pub fn eve_record(&self) -> &EveRecord {
        self.eve.record()
    }

    /// Public, authenticated broadcast. Eve cannot send.
    pub fn broadcast(&mut self, sender: PartyId, content: Content) -> Result<u64> {
        if sender == PartyId::Eve {
            return Err(EngineError::Authentication(sender));
        }
        let t = self.tick();
        Ok(self.transcript.push(t, sender, EventKind::ClassicalBroadcast { content }))
    }

    pub fn measurement(&mut self, party: PartyId, basis: BasisTag, outcomes: String, cites: Vec<u64>) -> u64 {
        self.measurement_at(self.clock, party, basis, outcomes, cites)
    }

    /// Measurement stamped at `time` (a detector click time, say).
    pub fn measurement_at(&mut self, time: u64, party: PartyId, basis: BasisTag, outcomes: String, cites: Vec<u64>) -> u64 {
        let t = self.advance_to(time);
        self.transcript.push(t, party, EventKind::Measurement { basis, outcomes, cites })
    }

    pub fn disclose(&mut self, party: PartyId, coordinates: Vec<usize>, cites: Vec<u64>) -> u64 {
        let t = self.tick();
        self.transcript.push(t, party, EventKind::Disclosure { coordinates, cites })
    }

    pub fn abort(&mut self, party: PartyId, reason: impl Into<String>) -> u64 {
        let t = self.tick();
        self.transcript.push(t, party, EventKind::Abort { reason: reason.into() })
    }

    /// Next photon emission time: right after the clock, plus a uniform
    /// offset when send times are randomized.
    pub fn next_send_time<R: Rng + ?Sized>(&mut self, rng: &mut R) -> u64 {
        let base = self.clock + 1;
        if self.channel.random_send_time {
            base + rng.random_range(0..=self.channel.send_time_jitter)
        } else {
            base
        }
    }

    fn log_send(&mut self, from: PartyId, to: PartyId, leg: u32, systems: usize, send_time: u64) -> (u64, u64) {
        let packet = self.next_packet;
        self.next_packet += 1;
        self.systems_sent += systems;
        let t = self.advance_to(send_time);
        (packet, self.transcript.push(t, from, EventKind::QuantumSend { packet, to, leg, systems }))
    }

    fn log_eve(&mut self, time: u64, actions: Vec<EveAction>) {
        for a in actions {
            let t = self.advance_to(time);
            self.transcript
                .push(t, PartyId::Eve, EventKind::Measurement { basis: a.basis, outcomes: a.outcomes, cites: a.cites });
        }
    }

    fn log_receive(&mut self, packet: u64, send_seq: u64, from: PartyId, to: PartyId, send_time: u64, arrival: u64) -> Receipt {
        let t = self.advance_to(arrival);
        let receive_seq = self.transcript.push(t, to, EventKind::QuantumReceive { packet, from, send_time, arrival });
        Receipt { packet, send_seq, receive_seq, send_time, arrival }
    }

    /// Sends qubits `ids` (in transmission order) from `from` to `to`.
    #[allow(clippy::too_many_arguments)]
    pub fn send_qubits(
        &mut self,
        from: PartyId,
        to: PartyId,
        leg: u32,
        ids: &[QubitId],
        roles: &[QubitRole],
        pool: &mut QubitPool,
        rng: &mut dyn RngCore,
    ) -> Receipt {
        debug_assert_eq!(ids.len(), roles.len());
        let send_time = self.tick();
        let (packet, send_seq) = self.log_send(from, to, leg, ids.len(), send_time);
        let mut flight = InFlight {
            leg,
            from,
            to,
            send_time,
            channel: self.channel,
            payload: Payload::Qubits { ids, roles, pool },
            view: self.transcript.events(),
            added_delay: 0,
            actions: Vec::new(),
        };
        self.eve.intercept(&mut flight, rng);
        let (delay, actions) = (flight.added_delay, flight.actions);
        self.log_eve(send_time, actions);
        let arrival = send_time + self.channel.theta + delay;
        self.log_receive(packet, send_seq, from, to, send_time, arrival)
    }

    /// Sends the channel-facing modes of a photon. Eve acts on the packet as
    /// emitted; the transit then shifts every flight mode by `theta`. The
    /// recorded arrival is the earliest bin still carrying flight amplitude.
    #[allow(clippy::too_many_arguments)]
    pub fn send_photon(
        &mut self,
        from: PartyId,
        to: PartyId,
        leg: u32,
        flight: &mut PhotonFlight,
        send_time: u64,
        rng: &mut dyn RngCore,
    ) -> Receipt {
        let (packet, send_seq) = self.log_send(from, to, leg, 1, send_time);
        let mut hook = InFlight {
            leg,
            from,
            to,
            send_time,
            channel: self.channel,
            payload: Payload::Photon(flight),
            view: self.transcript.events(),
            added_delay: 0,
            actions: Vec::new(),
        };
        self.eve.intercept(&mut hook, rng);
        let (delay, actions) = (hook.added_delay, hook.actions);
        self.log_eve(send_time, actions);
        for m in &flight.modes {
            flight.state.delay_mode(m, self.channel.theta);
        }
        let arrival = flight
            .state
            .earliest_bin(&flight.modes)
            .unwrap_or(send_time + self.channel.theta + delay)
            .max(send_time + self.channel.theta);
        self.log_receive(packet, send_seq, from, to, send_time, arrival)
    }
}

/// Uniformly random permutation of `size` items.
pub fn random_permutation<R: Rng + ?Sized>(size: usize, rng: &mut R) -> Permutation {
    let mut map: Vec<usize> = (0..size).collect();
    map.shuffle(rng);
    Permutation::new(map).expect("shuffle of 0..size is a bijection")
}

/// Positions, after `perm`, of the items in `subset`. Nothing about the
/// complement is revealed.
pub fn disclose_coordinates(perm: &Permutation, subset: &[usize]) -> Result<Vec<usize>> {
    subset
        .iter()
        .map(|&i| {
            if i < perm.size() {
                Ok(perm.apply(i))
            } else {
                Err(EngineError::Subset { index: i, size: perm.size() })
            }
        })
        .collect()
}
