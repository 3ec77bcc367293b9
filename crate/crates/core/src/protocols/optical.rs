use rand::{Rng, RngCore};

use super::{bit_string, choose, complement, drive, Delivered, ProtocolError, ProtocolOutcome, Result, RunOptions, VerificationReport};
use crate::engine::{Adversary, BasisTag, Content, PartyId, PhotonFlight, PhotonSetup, Session};
use crate::optics::{ev_spec, guo_shi_outcome, mach_zehnder, Element, EvOutcome, GuoShiOutcome, GvLayout, ModeState, N09Layout, N09Outcome, Outcome};

/// Two-packet key distribution with balanced splitters.
pub fn gv_qkd(num_bits: usize, eve: &mut dyn Adversary, opts: &RunOptions, rng: &mut dyn RngCore) -> Result<ProtocolOutcome> {
    opts.channel.validate_two_packet()?;
    two_packet("gv", num_bits, 0.5, eve, opts, rng)
}

/// The same scheme with identical unbalanced splitters and a fixed send
/// schedule.
pub fn koashi_imoto(
    num_bits: usize,
    reflectivity: f64,
    eve: &mut dyn Adversary,
    opts: &RunOptions,
    rng: &mut dyn RngCore,
) -> Result<ProtocolOutcome> {
    if !(reflectivity > 0.0 && reflectivity < 1.0) {
        return Err(ProtocolError::Config(format!("reflectivity {reflectivity} outside (0, 1)")));
    }
    if (reflectivity - 0.5).abs() < 1e-12 {
        return Err(ProtocolError::Config("koashi-imoto needs R != 0.5; balanced splitters are plain gv".into()));
    }
    if opts.channel.random_send_time {
        return Err(ProtocolError::Config("koashi-imoto runs on a fixed send schedule (random_send_time = false)".into()));
    }
    opts.channel.validate_two_packet()?;
    two_packet("koashi-imoto", num_bits, reflectivity, eve, opts, rng)
}

fn two_packet(
    name: &str,
    num_bits: usize,
    reflectivity: f64,
    eve: &mut dyn Adversary,
    opts: &RunOptions,
    rng: &mut dyn RngCore,
) -> Result<ProtocolOutcome> {
    if num_bits < 2 {
        return Err(ProtocolError::Config(format!("{name} needs at least 2 bits, got {num_bits}")));
    }
    let channel = opts.channel;
    let layout = GvLayout::new(reflectivity, channel.tau)?;
    let session = Session::new(channel, eve);
    drive(name, session, opts.max_restarts, |session, ledger| {
        let eve_start = session.eve_record().bits.len();
        let mut alice = Vec::with_capacity(num_bits);
        let mut bob: Vec<Option<u8>> = Vec::with_capacity(num_bits);
        let mut sent = Vec::with_capacity(num_bits);
        let mut seen = Vec::with_capacity(num_bits);
        for _ in 0..num_bits {
            let bit = u8::from(rng.random_bool(0.5));
            let t_s = session.next_send_time(rng);
            let mut state = layout.input(bit, t_s);
            state.apply_all(&layout.alice_stage(), 0)?;
            let mut flight = PhotonFlight {
                state,
                setup: PhotonSetup::Gv { reflectivity, tau: channel.tau },
                modes: GvLayout::<f64>::flight_modes(),
            };
            let r = session.send_photon(PartyId::Alice, PartyId::Bob, 0, &mut flight, t_s, rng);
            let (got, click) = if flight.state.is_terminal() {
                (None, r.arrival)
            } else {
                flight.state.apply_all(&layout.bob_stage(), 0)?;
                let rec = flight.state.readout(rng)?;
                (GvLayout::<f64>::bit_of(&rec), rec.time_bin)
            };
            let label = got.map_or("none".to_owned(), |b| format!("D{b}"));
            session.measurement_at(click, PartyId::Bob, BasisTag::Optical, label, vec![r.receive_seq]);
            alice.push(bit);
            bob.push(got);
            sent.push(t_s);
            seen.push((r.arrival, click));
        }
        ledger.bump("rounds", num_bits as u64);

        // Bob learns the send times only now and checks both arrival times.
        session.broadcast(PartyId::Alice, Content::SendTimes { times: sent.clone() })?;
        let violations = sent
            .iter()
            .zip(&seen)
            .filter(|(&t, &(arrival, click))| arrival != t + channel.theta || click != t + channel.theta + channel.tau)
            .count();
        ledger.bump("timing_violations", violations as u64);

        let sample = choose(num_bits, num_bits / 2, rng);
        session.broadcast(PartyId::Alice, Content::Positions { positions: sample.clone() })?;
        let sample_bits: Vec<u8> = sample.iter().map(|&i| alice[i]).collect();
        session.broadcast(PartyId::Alice, Content::Bits { bits: bit_string(&sample_bits) })?;
        let errors = sample.iter().filter(|&&i| bob[i] != Some(alice[i])).count();
        let report = VerificationReport::new(name, sample.len(), errors, violations, opts.threshold);
        if !ledger.verdict(session, PartyId::Bob, report)? {
            return Ok(None);
        }

        let kept: Vec<usize> = complement(num_bits, &sample).into_iter().filter(|&i| bob[i].is_some()).collect();
        let eve_bits = &session.eve_record().bits[eve_start..];
        let eve = (eve_bits.len() == num_bits).then(|| kept.iter().map(|&i| eve_bits[i]).collect());
        Ok(Some(Delivered {
            alice: kept.iter().map(|&i| alice[i]).collect(),
            bob: kept.iter().map(|&i| bob[i].expect("kept rounds clicked")).collect(),
            eve,
        }))
    })
}

/// Interaction-free bomb testing: each round holds an active bomb with
/// probability `bomb_probability`. Purely local, so Eve has nothing to touch.
pub fn ev_run(
    rounds: usize,
    bomb_probability: f64,
    eve: &mut dyn Adversary,
    opts: &RunOptions,
    rng: &mut dyn RngCore,
) -> Result<ProtocolOutcome> {
    if !(0.0..=1.0).contains(&bomb_probability) {
        return Err(ProtocolError::Config(format!("bomb probability {bomb_probability} outside [0, 1]")));
    }
    let active_spec = ev_spec::<f64>(true);
    let idle_spec = ev_spec::<f64>(false);
    let session = Session::new(opts.channel, eve);
    drive("ev", session, 0, |session, ledger| {
        let mut codes = String::with_capacity(rounds);
        for _ in 0..rounds {
            let active = rng.random_bool(bomb_probability);
            let spec = if active { &active_spec } else { &idle_spec };
            let mut state = spec.propagate(&ModeState::single("in", 0))?;
            let outcome = match state.readout(rng)?.outcome {
                Outcome::Exploded => EvOutcome::Exploded,
                Outcome::Detector(d) if d == "dark" => EvOutcome::DarkPort,
                _ => EvOutcome::BrightPort,
            };
            let (prefix, code) = match outcome {
                EvOutcome::Exploded => ("exploded", 'E'),
                EvOutcome::DarkPort => ("dark", 'D'),
                EvOutcome::BrightPort => ("bright", 'B'),
            };
            let group = if active { "active" } else { "inactive" };
            ledger.bump(&format!("{group}_rounds"), 1);
            ledger.bump(&format!("{group}_{prefix}"), 1);
            codes.push(code);
        }
        session.measurement(PartyId::Alice, BasisTag::Optical, codes, vec![]);
        Ok(Some(Delivered::default()))
    })
}

/// Absorber-based key distribution: Alice may block the upper arm, Bob the
/// lower one; a dark-port click certifies exactly one absorber, and whose
/// it was sets the bit.
pub fn guo_shi(num_rounds: usize, eve: &mut dyn Adversary, opts: &RunOptions, rng: &mut dyn RngCore) -> Result<ProtocolOutcome> {
    let (split, recombine) = mach_zehnder::<f64>(vec![]);
    let session = Session::new(opts.channel, eve);
    drive("guo-shi", session, opts.max_restarts, |session, ledger| {
        let mut alice_bits = Vec::new();
        let mut bob_bits = Vec::new();
        let mut usable = Vec::new();
        for round in 0..num_rounds {
            let (a_ins, b_ins) = (rng.random_bool(0.5), rng.random_bool(0.5));
            let t_s = session.next_send_time(rng);
            let mut state = ModeState::single("in", t_s);
            state.apply_all(&split, 0)?;
            state.apply(&Element::absorber("alice", "upper", a_ins), 0)?;
            let mut flight = PhotonFlight { state, setup: PhotonSetup::MachZehnder, modes: vec!["upper".into(), "lower".into()] };
            let r = session.send_photon(PartyId::Alice, PartyId::Bob, 0, &mut flight, t_s, rng);
            let (outcome, time) = if flight.state.is_terminal() {
                (GuoShiOutcome::Absorbed, r.arrival)
            } else {
                flight.state.apply(&Element::absorber("bob", "lower", b_ins), 0)?;
                flight.state.apply_all(&recombine, 0)?;
                let rec = flight.state.readout(rng)?;
                (guo_shi_outcome(&rec), rec.time_bin.max(r.arrival))
            };
            let label = match outcome {
                GuoShiOutcome::DarkPort => "dark",
                GuoShiOutcome::BrightPort => "bright",
                GuoShiOutcome::Absorbed => "none",
            };
            session.measurement_at(time, PartyId::Bob, BasisTag::Optical, label.into(), vec![r.receive_seq]);
            ledger.bump(label, 1);
            if outcome == GuoShiOutcome::DarkPort {
                if a_ins && b_ins {
                    ledger.bump("both_inserted_usable", 1);
                }
                usable.push(round);
                alice_bits.push(u8::from(!a_ins));
                bob_bits.push(u8::from(b_ins));
            }
        }
        ledger.bump("rounds", num_rounds as u64);
        ledger.bump("usable", usable.len() as u64);
        session.broadcast(PartyId::Bob, Content::Positions { positions: usable.clone() })?;

        let sample = choose(usable.len(), usable.len() / 2, rng);
        session.broadcast(PartyId::Alice, Content::Positions { positions: sample.iter().map(|&k| usable[k]).collect() })?;
        let shown: Vec<u8> = sample.iter().map(|&k| alice_bits[k]).collect();
        session.broadcast(PartyId::Alice, Content::Bits { bits: bit_string(&shown) })?;
        let errors = sample.iter().filter(|&&k| alice_bits[k] != bob_bits[k]).count();
        let report = VerificationReport::new("guo-shi", sample.len(), errors, 0, opts.threshold);
        if !ledger.verdict(session, PartyId::Bob, report)? {
            return Ok(None);
        }
        let kept = complement(usable.len(), &sample);
        Ok(Some(Delivered {
            alice: kept.iter().map(|&k| alice_bits[k]).collect(),
            bob: kept.iter().map(|&k| bob_bits[k]).collect(),
            eve: None,
        }))
    })
}

/// Counterfactual key distribution on a Michelson interferometer. Alice and
/// Bob each pick a random bit; Bob blocks the channel arm exactly when the
/// photon carries his bit, i.e. when the bits agree. A click at D2 can only
/// happen when Bob blocked, so those rounds become key bits while the photon
/// never travelled to Bob and back.
pub fn n09_qkd(
    num_rounds: usize,
    reflectivity: f64,
    eve: &mut dyn Adversary,
    opts: &RunOptions,
    rng: &mut dyn RngCore,
) -> Result<ProtocolOutcome> {
    let layout = N09Layout::new(reflectivity, opts.channel.theta)?;
    let recombine = layout.alice_recombine();
    let session = Session::new(opts.channel, eve);
    drive("n09", session, opts.max_restarts, |session, ledger| {
        let mut rounds = Vec::with_capacity(num_rounds);
        for _ in 0..num_rounds {
            let (a_bit, b_bit) = (u8::from(rng.random_bool(0.5)), u8::from(rng.random_bool(0.5)));
            let blocked = a_bit == b_bit;
            let t_s = session.next_send_time(rng);
            let mut state = layout.input(t_s);
            state.apply_all(&layout.alice_out(), 0)?;
            let mut flight = PhotonFlight { state, setup: PhotonSetup::N09, modes: N09Layout::<f64>::flight_modes() };
            let r1 = session.send_photon(PartyId::Alice, PartyId::Bob, 0, &mut flight, t_s, rng);
            let mut bob_click = false;
            if blocked && !flight.state.is_terminal() {
                bob_click = flight.state.absorb_now(N09Layout::<f64>::ARM, N09Layout::<f64>::BOB_DETECTOR, rng)?;
                let label = if bob_click { "click" } else { "quiet" };
                session.measurement_at(r1.arrival, PartyId::Bob, BasisTag::Optical, label.into(), vec![r1.receive_seq]);
            }
            let outcome = if bob_click {
                N09Outcome::BobDetect
            } else if flight.state.is_terminal() {
                N09Outcome::Lost
            } else {
                flight.state.phase_mode(N09Layout::<f64>::ARM, std::f64::consts::PI);
                let r2 = session.send_photon(PartyId::Bob, PartyId::Alice, 1, &mut flight, r1.arrival, rng);
                if flight.state.is_terminal() {
                    N09Outcome::Lost
                } else {
                    flight.state.apply_all(&recombine, 0)?;
                    let rec = flight.state.readout(rng)?;
                    let outcome = N09Layout::<f64>::outcome(&rec);
                    let label = match outcome {
                        N09Outcome::D1 => "D1",
                        N09Outcome::D2 => "D2",
                        _ => "none",
                    };
                    session.measurement_at(rec.time_bin, PartyId::Alice, BasisTag::Optical, label.into(), vec![r2.receive_seq]);
                    outcome
                }
            };
            let key = match outcome {
                N09Outcome::D1 => "d1",
                N09Outcome::D2 => "d2",
                N09Outcome::BobDetect => "bob_detect",
                N09Outcome::Lost => "lost",
            };
            ledger.bump(key, 1);
            if blocked {
                ledger.bump("blocked", 1);
                if outcome == N09Outcome::D2 {
                    ledger.bump("d2_blocked", 1);
                }
            }
            rounds.push((a_bit, b_bit, outcome));
        }
        ledger.bump("rounds", num_rounds as u64);

        let candidates: Vec<usize> = (0..num_rounds).filter(|&i| rounds[i].2 == N09Outcome::D2).collect();
        ledger.bump("key_candidates", candidates.len() as u64);
        session.broadcast(PartyId::Alice, Content::Positions { positions: candidates.clone() })?;
        let sample: Vec<usize> = choose(candidates.len(), candidates.len() / 2, rng).into_iter().map(|k| candidates[k]).collect();
        session.broadcast(PartyId::Alice, Content::Positions { positions: sample.clone() })?;

        // Bob reveals his bit on every round that will not become key.
        let kept: Vec<usize> = candidates.iter().copied().filter(|i| sample.binary_search(i).is_err()).collect();
        let revealed = complement(num_rounds, &kept);
        let bits: Vec<u8> = revealed.iter().map(|&i| rounds[i].1).collect();
        session.broadcast(PartyId::Bob, Content::Bits { bits: bit_string(&bits) })?;

        // Unblocked rounds must interfere to D1; sampled key rounds must agree.
        let (mut checked, mut errors) = (0, 0);
        for &i in &revealed {
            let (a, b, outcome) = rounds[i];
            if outcome == N09Outcome::D2 {
                checked += 1;
                errors += usize::from(a != b);
            } else if a != b {
                checked += 1;
                errors += usize::from(outcome != N09Outcome::D1);
            }
        }
        let report = VerificationReport::new("n09", checked, errors, 0, opts.threshold);
        if !ledger.verdict(session, PartyId::Alice, report)? {
            return Ok(None);
        }
        Ok(Some(Delivered {
            alice: kept.iter().map(|&i| rounds[i].0).collect(),
            bob: kept.iter().map(|&i| rounds[i].1).collect(),
            eve: None,
        }))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversaries::EveSpec;
    use crate::engine::{lint, ChannelConfig};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn strict() -> RunOptions {
        RunOptions::strict()
    }

    #[test]
    fn gv_clean_run() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let mut eve = EveSpec::None.build();
        let opts = RunOptions { channel: ChannelConfig { random_send_time: true, ..Default::default() }, ..strict() };
        let out = gv_qkd(400, eve.as_mut(), &opts, &mut rng).unwrap();
        assert!(!out.aborted);
        assert_eq!(out.qber(), 0.0);
        assert_eq!(out.timing_violations(), 0);
        assert_eq!(out.alice_bits, out.bob_bits);
        assert_eq!(out.alice_bits.len(), 200);
        let l = lint(out.transcript.events());
        assert!(l.is_clean(), "{:?}", &l.issues[..1]);
        assert_eq!(l.count(BasisTag::Diagonal), 0);
    }

    #[test]
    fn gv_rejects_short_tau() {
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        let mut eve = EveSpec::None.build();
        let opts = RunOptions { channel: ChannelConfig { theta: 4, tau: 4, ..Default::default() }, ..strict() };
        assert!(gv_qkd(10, eve.as_mut(), &opts, &mut rng).is_err());
    }

    #[test]
    fn ki_preconditions() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let mut eve = EveSpec::None.build();
        assert!(koashi_imoto(10, 0.5, eve.as_mut(), &strict(), &mut rng).is_err());
        let random = RunOptions { channel: ChannelConfig { random_send_time: true, ..Default::default() }, ..strict() };
        assert!(koashi_imoto(10, 0.3, eve.as_mut(), &random, &mut rng).is_err());
        let out = koashi_imoto(200, 0.3, eve.as_mut(), &strict(), &mut rng).unwrap();
        assert_eq!(out.alice_bits, out.bob_bits);
    }

    #[test]
    fn gv_fake_state_attack_on_fixed_schedule() {
        let mut rng = ChaCha8Rng::seed_from_u64(34);
        let mut eve = EveSpec::GvDelay { knows_send_time: true }.build();
        let out = gv_qkd(200, eve.as_mut(), &strict(), &mut rng).unwrap();
        assert!(!out.detected());
        assert_eq!(out.eve_accuracy(), Some(1.0));
        assert_eq!(out.alice_bits, out.bob_bits);
    }

    #[test]
    fn guo_shi_and_n09_clean() {
        let mut rng = ChaCha8Rng::seed_from_u64(35);
        let mut eve = EveSpec::None.build();
        let out = guo_shi(2000, eve.as_mut(), &strict(), &mut rng).unwrap();
        assert!(!out.aborted);
        assert_eq!(out.alice_bits, out.bob_bits);
        assert_eq!(out.tally("both_inserted_usable"), 0);
        let out = n09_qkd(2000, 0.5, eve.as_mut(), &strict(), &mut rng).unwrap();
        assert!(!out.aborted);
        assert_eq!(out.alice_bits, out.bob_bits);
        assert!(lint(out.transcript.events()).is_clean());
    }

    #[test]
    fn n09_block_attack_is_caught() {
        let mut rng = ChaCha8Rng::seed_from_u64(36);
        let mut eve = EveSpec::N09Block { p_block: 0.5 }.build();
        let out = n09_qkd(400, 0.5, eve.as_mut(), &strict(), &mut rng).unwrap();
        assert!(out.detected());
        assert!(out.eve.absorptions > 0);
    }
}
