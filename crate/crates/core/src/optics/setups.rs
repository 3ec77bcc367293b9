//! Concrete interferometers: the GV / Koashi-Imoto Mach-Zehnder with delay
//! lines, the Elitzur-Vaidman bomb tester, the Guo-Shi absorber
//! interferometer, and the N09 Michelson (unfolded into an equivalent
//! Mach-Zehnder with a round-trip arm).

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{BeamSplitter, DetectionRecord, Element, InterferometerSpec, ModeState, OpticsError, Outcome, Result};
use crate::num::Real;

fn modes(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| (*s).to_owned()).collect()
}

/// Geometry of the two-packet GV interferometer.
///
/// Alice's splitter turns a photon entering port `in0` (bit 0) or `in1`
/// (bit 1) into wave packets on arms `a` and `b`; `b` is held back by `tau`
/// bins. Bob delays `a` by `tau`, applies a pi phase on `b`, and recombines on
/// an identical splitter, which inverts Alice's transform for every `R`:
/// bit 0 always reaches `D0`, bit 1 always reaches `D1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GvLayout<T: Real = f64> {
    splitter: BeamSplitter<T>,
    tau: u64,
}

impl<T: Real> GvLayout<T> {
    pub const IN0: &'static str = "in0";
    pub const IN1: &'static str = "in1";
    pub const A: &'static str = "a";
    pub const B: &'static str = "b";
    pub const OUT0: &'static str = "out0";
    pub const OUT1: &'static str = "out1";
    pub const D0: &'static str = "D0";
    pub const D1: &'static str = "D1";

    pub fn new(reflectivity: T, tau: u64) -> Result<Self> {
        Ok(Self { splitter: BeamSplitter::new(reflectivity)?, tau })
    }

    pub fn reflectivity(&self) -> T {
        self.splitter.reflectivity()
    }

    pub fn tau(&self) -> u64 {
        self.tau
    }

    pub fn flight_modes() -> Vec<String> {
        modes(&[Self::A, Self::B])
    }

    pub fn all_modes() -> Vec<String> {
        modes(&[Self::IN0, Self::IN1, Self::A, Self::B, Self::OUT0, Self::OUT1])
    }

    /// Photon at Alice's source for `bit`, emitted at `send_time`.
    pub fn input(&self, bit: u8, send_time: u64) -> ModeState<T> {
        ModeState::single(if bit == 0 { Self::IN0 } else { Self::IN1 }, send_time)
    }

    fn encoder(&self) -> Element<T> {
        Element::beam_splitter("alice_bs", self.reflectivity(), (Self::IN0, Self::IN1), (Self::A, Self::B))
    }

    /// Encoding splitter followed by Alice's hold-back of `b`.
    pub fn alice_stage(&self) -> Vec<Element<T>> {
        vec![self.encoder(), Element::delay("alice_sr", Self::B, self.tau)]
    }

    /// Recombination without Bob's delay line (packets already aligned).
    pub fn decoder_stage(&self) -> Vec<Element<T>> {
        vec![
            Element::phase("bob_phase", Self::B, T::PI()),
            Element::beam_splitter("bob_bs", self.reflectivity(), (Self::A, Self::B), (Self::OUT0, Self::OUT1)),
            Element::detector(Self::D0, Self::OUT0),
            Element::detector(Self::D1, Self::OUT1),
        ]
    }

    /// Bob's delay on `a` followed by recombination.
    pub fn bob_stage(&self) -> Vec<Element<T>> {
        let mut v = vec![Element::delay("bob_sr", Self::A, self.tau)];
        v.extend(self.decoder_stage());
        v
    }

    /// Encoded state with both packets in bin `bin` (no hold-back applied).
    pub fn encoded(&self, bit: u8, bin: u64) -> ModeState<T> {
        let mut s = self.input(bit, bin);
        s.apply(&self.encoder(), 0).expect("live photon");
        s
    }

    /// Decoded bit from a detection at D0/D1.
    pub fn bit_of(record: &DetectionRecord) -> Option<u8> {
        match &record.outcome {
            Outcome::Detector(d) if d == Self::D0 => Some(0),
            Outcome::Detector(d) if d == Self::D1 => Some(1),
            _ => None,
        }
    }
}

/// GV encoding: bit 0 is the photon entering Alice's splitter from port
/// `in0`, bit 1 from `in1`. At `R = 0.5` the two states are
/// `(|a> + i|b>)/sqrt2` and `i(|a> - i|b>)/sqrt2`, equal magnitudes with
/// relative phase differing by pi; in general `|amp_a|^2 = R` for bit 0.
pub fn gv_encode<T: Real>(bit: u8, reflectivity: T) -> Result<ModeState<T>> {
    Ok(GvLayout::new(reflectivity, 0)?.encoded(bit, 0))
}

/// Recombines an aligned GV state on Bob's splitter and reads the bit.
pub fn gv_decode<T: Real, R: Rng + ?Sized>(state: &ModeState<T>, reflectivity: T, rng: &mut R) -> Result<u8> {
    state.ensure_live()?;
    let layout = GvLayout::new(reflectivity, 0)?;
    let mut s = state.clone();
    s.apply_all(&layout.decoder_stage(), 0)?;
    let record = s.readout(rng)?;
    GvLayout::<T>::bit_of(&record).ok_or_else(|| OpticsError::Invalid(format!("GV decode ended in {:?}", record.outcome)))
}

/// Full GV (or Koashi-Imoto, when `R != 0.5`) interferometer with a channel
/// transit of `theta` bins. Requires `tau > theta`.
pub fn gv_spec<T: Real>(reflectivity: T, theta: u64, tau: u64) -> Result<InterferometerSpec<T>> {
    if tau <= theta {
        return Err(OpticsError::Invalid(format!("tau ({tau}) must exceed theta ({theta})")));
    }
    let layout = GvLayout::new(reflectivity, tau)?;
    let mut elements = layout.alice_stage();
    elements.push(Element::Transit { id: "channel".into(), modes: GvLayout::<T>::flight_modes() });
    elements.extend(layout.bob_stage());
    Ok(InterferometerSpec { modes: GvLayout::<T>::all_modes(), exits: vec![], transit: theta, elements })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EvOutcome {
    Exploded,
    BrightPort,
    DarkPort,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GuoShiOutcome {
    DarkPort,
    BrightPort,
    Absorbed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum N09Outcome {
    D1,
    D2,
    BobDetect,
    /// Absorbed by something other than Bob's detector (an eavesdropper).
    Lost,
}

const MZ_MODES: [&str; 6] = ["in", "vac", "upper", "lower", "dark", "bright"];

/// Balanced Mach-Zehnder split into the part before the arms and the part
/// after them; `arm_elements` go in between.
pub(crate) fn mach_zehnder<T: Real>(arm_elements: Vec<Element<T>>) -> (Vec<Element<T>>, Vec<Element<T>>) {
    let half = T::from_f64_lossy(0.5);
    let first = vec![Element::beam_splitter("bs1", half, ("in", "vac"), ("upper", "lower"))];
    let mut second = arm_elements;
    second.extend([
        Element::beam_splitter("bs2", half, ("upper", "lower"), ("dark", "bright")),
        Element::detector("dark", "dark"),
        Element::detector("bright", "bright"),
    ]);
    (first, second)
}

fn join<T: Real>((a, b): (Vec<Element<T>>, Vec<Element<T>>)) -> InterferometerSpec<T> {
    let mut elements = a;
    elements.extend(b);
    InterferometerSpec { modes: modes(&MZ_MODES), exits: vec![], transit: 0, elements }
}

/// Bomb tester: an explosive absorber sits in the lower arm when active.
pub fn ev_spec<T: Real>(bomb_active: bool) -> InterferometerSpec<T> {
    join(mach_zehnder(vec![Element::bomb("bomb", "lower", bomb_active)]))
}

pub fn ev_round<R: Rng + ?Sized>(bomb_active: bool, rng: &mut R) -> EvOutcome {
    let record = run_interferometer_f64(&ev_spec(bomb_active), rng);
    match record.outcome {
        Outcome::Exploded => EvOutcome::Exploded,
        Outcome::Detector(d) if d == "dark" => EvOutcome::DarkPort,
        _ => EvOutcome::BrightPort,
    }
}

pub(crate) fn guo_shi_arms<T: Real>(alice_insert: bool, bob_insert: bool) -> Vec<Element<T>> {
    vec![Element::absorber("alice", "upper", alice_insert), Element::absorber("bob", "lower", bob_insert)]
}

/// Alice's absorber can block the upper arm, Bob's the lower arm.
pub fn guo_shi_spec<T: Real>(alice_insert: bool, bob_insert: bool) -> InterferometerSpec<T> {
    join(mach_zehnder(guo_shi_arms(alice_insert, bob_insert)))
}

pub(crate) fn guo_shi_outcome(record: &DetectionRecord) -> GuoShiOutcome {
    match &record.outcome {
        Outcome::Detector(d) if d == "dark" => GuoShiOutcome::DarkPort,
        Outcome::Detector(_) => GuoShiOutcome::BrightPort,
        _ => GuoShiOutcome::Absorbed,
    }
}

pub fn guo_shi_round<R: Rng + ?Sized>(alice_insert: bool, bob_insert: bool, rng: &mut R) -> GuoShiOutcome {
    guo_shi_outcome(&run_interferometer_f64(&guo_shi_spec(alice_insert, bob_insert), rng))
}

fn run_interferometer_f64<R: Rng + ?Sized>(spec: &InterferometerSpec<f64>, rng: &mut R) -> DetectionRecord {
    super::run_interferometer(spec, &ModeState::single("in", 0), rng).expect("built-in interferometer is well formed")
}

/// N09 Michelson unfolded: Alice's splitter sends arm `a` to her mirror and
/// arm `b` across the channel to Bob, who either reflects it (with a pi
/// phase from his mirror) or absorbs it in his detector. Arm `a` is delayed
/// by the round trip so both return in the same bin to the recombining
/// splitter. Unblocked, everything exits at D1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct N09Layout<T: Real = f64> {
    splitter: BeamSplitter<T>,
    theta: u64,
}

impl<T: Real> N09Layout<T> {
    pub const ARM: &'static str = "b";
    pub const BOB_DETECTOR: &'static str = "bob";

    pub fn new(reflectivity: T, theta: u64) -> Result<Self> {
        Ok(Self { splitter: BeamSplitter::new(reflectivity)?, theta })
    }

    pub fn all_modes() -> Vec<String> {
        modes(&["src", "vac", "a", "b", "d1", "d2"])
    }

    pub fn flight_modes() -> Vec<String> {
        modes(&[Self::ARM])
    }

    pub fn input(&self, send_time: u64) -> ModeState<T> {
        ModeState::single("src", send_time)
    }

    pub fn alice_out(&self) -> Vec<Element<T>> {
        vec![Element::beam_splitter("alice_bs", self.splitter.reflectivity(), ("src", "vac"), ("a", "b"))]
    }

    pub fn bob_stage(&self, blocks: bool) -> Vec<Element<T>> {
        let mut v = Vec::new();
        if blocks {
            v.push(Element::detector(Self::BOB_DETECTOR, Self::ARM));
        }
        v.push(Element::phase("bob_mirror", Self::ARM, T::PI()));
        v
    }

    /// Alice's matched arm delay and the recombining splitter.
    pub fn alice_recombine(&self) -> Vec<Element<T>> {
        vec![
            Element::delay("alice_arm", "a", 2 * self.theta),
            Element::beam_splitter("alice_bs_return", self.splitter.reflectivity(), ("a", "b"), ("d1", "d2")),
            Element::detector("D1", "d1"),
            Element::detector("D2", "d2"),
        ]
    }

    /// Return trip of arm `b` followed by recombination.
    pub fn alice_in(&self) -> Vec<Element<T>> {
        let mut v = vec![Element::delay("return", Self::ARM, self.theta)];
        v.extend(self.alice_recombine());
        v
    }

    pub fn outcome(record: &DetectionRecord) -> N09Outcome {
        match &record.outcome {
            Outcome::Detector(d) if d == "D1" => N09Outcome::D1,
            Outcome::Detector(d) if d == "D2" => N09Outcome::D2,
            Outcome::Detector(d) if d == Self::BOB_DETECTOR => N09Outcome::BobDetect,
            _ => N09Outcome::Lost,
        }
    }
}

pub fn n09_spec<T: Real>(bob_blocks: bool, reflectivity: T, theta: u64) -> Result<InterferometerSpec<T>> {
    let layout = N09Layout::new(reflectivity, theta)?;
    let mut elements = layout.alice_out();
    elements.push(Element::Transit { id: "channel".into(), modes: N09Layout::<T>::flight_modes() });
    elements.extend(layout.bob_stage(bob_blocks));
    elements.extend(layout.alice_in());
    Ok(InterferometerSpec { modes: N09Layout::<T>::all_modes(), exits: vec![], transit: theta, elements })
}

pub fn n09_round<R: Rng + ?Sized>(bob_blocks: bool, reflectivity: f64, rng: &mut R) -> Result<N09Outcome> {
    let spec = n09_spec(bob_blocks, reflectivity, 1)?;
    let record = super::run_interferometer(&spec, &ModeState::single("src", 0), rng)?;
    Ok(N09Layout::<f64>::outcome(&record))
}
