use rand::RngCore;

use super::checks::bb84_check;
use super::{check_bits, check_multiple_of_four, choose, complement, drive, Delivered, ProtocolOutcome, Result, RunOptions};
use crate::engine::{Adversary, BasisTag, Content, PartyId, QubitRole, Session};
use crate::qcore::{BellLabel, PauliOp, QubitId, QubitPool};

/// Applies the message to `qubits`: one bit per qubit (X for 1) or, when
/// `dense`, two bits per qubit through I, X, iY, Z.
pub(super) fn encode(pool: &mut QubitPool, qubits: &[QubitId], message: &[u8], dense: bool) -> Result<()> {
    for (k, &q) in qubits.iter().enumerate() {
        let op = if dense {
            PauliOp::from_message_bits(message[2 * k], message[2 * k + 1])
        } else if message[k] == 1 {
            PauliOp::X
        } else {
            PauliOp::I
        };
        pool.apply_pauli(q, op)?;
    }
    Ok(())
}

pub(super) fn decode(labels: &[BellLabel], dense: bool) -> Vec<u8> {
    labels
        .iter()
        .flat_map(|l| {
            let [hi, lo] = l.encoding_op().message_bits();
            if dense {
                vec![hi, lo]
            } else {
                vec![lo]
            }
        })
        .collect()
}

/// Bell-measures (encoded, partner) pairs for `party` and decodes.
pub(super) fn bell_decode(
    session: &mut Session<'_>,
    pool: &mut QubitPool,
    pairs: &[(QubitId, QubitId)],
    party: PartyId,
    dense: bool,
    cites: Vec<u64>,
    rng: &mut dyn RngCore,
) -> Result<Vec<u8>> {
    let labels = pairs.iter().map(|&(e, p)| Ok(pool.bell_measure(e, p, rng)?)).collect::<Result<Vec<_>>>()?;
    let text: Vec<&str> = labels.iter().map(|l| l.short()).collect();
    session.measurement(party, BasisTag::Bell, text.join(","), cites);
    Ok(decode(&labels, dense))
}

/// Ping-pong direct communication. Bob sends one half of each of `n`
/// PsiPlus pairs to Alice; she checks half of them in conjugate bases,
/// encodes on a quarter and sends the remaining half back, where Bob checks
/// the unencoded quarter and Bell-decodes the rest. With `dense` Alice uses
/// all four Pauli operators and each pair carries two bits.
pub fn pp_run(
    n: usize,
    message: &[u8],
    dense: bool,
    eve: &mut dyn Adversary,
    opts: &RunOptions,
    rng: &mut dyn RngCore,
) -> Result<ProtocolOutcome> {
    check_multiple_of_four(n)?;
    let name = if dense { "cl" } else { "pp" };
    check_bits(message, if dense { n / 2 } else { n / 4 }, name)?;
    let session = Session::new(opts.channel, eve);
    drive(name, session, opts.max_restarts, |session, ledger| {
        let mut pool = QubitPool::new();
        let pairs: Vec<(QubitId, QubitId)> = (0..n).map(|_| pool.prepare_bell(BellLabel::PsiPlus)).collect();
        let travel: Vec<QubitId> = pairs.iter().map(|p| p.0).collect();
        let r0 = session.send_qubits(PartyId::Bob, PartyId::Alice, 0, &travel, &vec![QubitRole::Travel; n], &mut pool, rng);
        session.broadcast(PartyId::Alice, Content::Ack { packet: r0.packet })?;

        let checked = choose(n, n / 2, rng);
        session.broadcast(PartyId::Alice, Content::Positions { positions: checked.clone() })?;
        let check_pairs: Vec<_> = checked.iter().map(|&i| pairs[i]).collect();
        let report =
            bb84_check(session, &mut pool, &check_pairs, PartyId::Alice, PartyId::Bob, vec![r0.receive_seq], opts.threshold, "forward", rng)?;
        if !ledger.verdict(session, PartyId::Bob, report)? {
            return Ok(None);
        }

        let rest = complement(n, &checked);
        let in_msg = choose(rest.len(), n / 4, rng);
        let in_check = complement(rest.len(), &in_msg);
        let msg_travel: Vec<QubitId> = in_msg.iter().map(|&k| pairs[rest[k]].0).collect();
        encode(&mut pool, &msg_travel, message, dense)?;

        let block: Vec<QubitId> = rest.iter().map(|&i| pairs[i].0).collect();
        let mut roles = vec![QubitRole::Message; block.len()];
        for &k in &in_check {
            roles[k] = QubitRole::Verification;
        }
        let r1 = session.send_qubits(PartyId::Alice, PartyId::Bob, 1, &block, &roles, &mut pool, rng);
        let ack = session.broadcast(PartyId::Bob, Content::Ack { packet: r1.packet })?;
        let disc = session.disclose(PartyId::Alice, in_check.clone(), vec![ack]);

        let back_check: Vec<_> = in_check.iter().map(|&k| pairs[rest[k]]).collect();
        let report = bb84_check(
            session,
            &mut pool,
            &back_check,
            PartyId::Bob,
            PartyId::Bob,
            vec![r1.receive_seq, disc],
            opts.threshold,
            "return",
            rng,
        )?;
        if !ledger.verdict(session, PartyId::Bob, report)? {
            return Ok(None);
        }

        let msg_pairs: Vec<_> = in_msg.iter().map(|&k| pairs[rest[k]]).collect();
        ledger.bump("message_pairs", msg_pairs.len() as u64);
        let bob = bell_decode(session, &mut pool, &msg_pairs, PartyId::Bob, dense, vec![r1.receive_seq, disc], rng)?;
        Ok(Some(Delivered { alice: message.to_vec(), bob, eve: None }))
    })
}

/// Two-step direct communication with dense coding. Alice keeps the first
/// half of each of `n` PsiPlus pairs and sends the second halves; Bob checks
/// half of them. Alice encodes two bits on each of a quarter of her halves
/// and sends her remaining halves; Bob checks the unencoded quarter and
/// Bell-decodes the rest.
pub fn dll_run(n: usize, message: &[u8], eve: &mut dyn Adversary, opts: &RunOptions, rng: &mut dyn RngCore) -> Result<ProtocolOutcome> {
    check_multiple_of_four(n)?;
    check_bits(message, n / 2, "dll")?;
    let session = Session::new(opts.channel, eve);
    drive("dll", session, opts.max_restarts, |session, ledger| {
        let mut pool = QubitPool::new();
        let pairs: Vec<(QubitId, QubitId)> = (0..n).map(|_| pool.prepare_bell(BellLabel::PsiPlus)).collect();
        let second: Vec<QubitId> = pairs.iter().map(|p| p.1).collect();
        let r0 = session.send_qubits(PartyId::Alice, PartyId::Bob, 0, &second, &vec![QubitRole::Travel; n], &mut pool, rng);
        session.broadcast(PartyId::Bob, Content::Ack { packet: r0.packet })?;

        let checked = choose(n, n / 2, rng);
        session.broadcast(PartyId::Bob, Content::Positions { positions: checked.clone() })?;
        let check_pairs: Vec<_> = checked.iter().map(|&i| (pairs[i].1, pairs[i].0)).collect();
        let report =
            bb84_check(session, &mut pool, &check_pairs, PartyId::Bob, PartyId::Alice, vec![r0.receive_seq], opts.threshold, "first", rng)?;
        if !ledger.verdict(session, PartyId::Alice, report)? {
            return Ok(None);
        }

        let rest = complement(n, &checked);
        let in_msg = choose(rest.len(), n / 4, rng);
        let in_check = complement(rest.len(), &in_msg);
        let msg_first: Vec<QubitId> = in_msg.iter().map(|&k| pairs[rest[k]].0).collect();
        encode(&mut pool, &msg_first, message, true)?;

        let block: Vec<QubitId> = rest.iter().map(|&i| pairs[i].0).collect();
        let mut roles = vec![QubitRole::Message; block.len()];
        for &k in &in_check {
            roles[k] = QubitRole::Verification;
        }
        let r1 = session.send_qubits(PartyId::Alice, PartyId::Bob, 1, &block, &roles, &mut pool, rng);
        let ack = session.broadcast(PartyId::Bob, Content::Ack { packet: r1.packet })?;
        let disc = session.disclose(PartyId::Alice, in_check.clone(), vec![ack]);

        let second_check: Vec<_> = in_check.iter().map(|&k| pairs[rest[k]]).collect();
        let report = bb84_check(
            session,
            &mut pool,
            &second_check,
            PartyId::Bob,
            PartyId::Bob,
            vec![r1.receive_seq, disc],
            opts.threshold,
            "second",
            rng,
        )?;
        if !ledger.verdict(session, PartyId::Bob, report)? {
            return Ok(None);
        }

        let msg_pairs: Vec<_> = in_msg.iter().map(|&k| pairs[rest[k]]).collect();
        ledger.bump("message_pairs", msg_pairs.len() as u64);
        let bob = bell_decode(session, &mut pool, &msg_pairs, PartyId::Bob, true, vec![r1.receive_seq, disc], rng)?;
        Ok(Some(Delivered { alice: message.to_vec(), bob, eve: None }))
    })
}
