use std::collections::HashMap;

use rand::RngCore;

use super::checks::{decoy_check, pairs_at};
use super::entangled::{bell_decode, encode};
use super::{check_bits, check_multiple_of_four, choose, complement, drive, Delivered, Ledger, ProtocolOutcome, Result, RunOptions};
use crate::engine::{disclose_coordinates, random_permutation, Adversary, Content, PartyId, QubitRole, Session};
use crate::qcore::{BellLabel, Permutation, QubitId, QubitPool};

/// A transmitted, permuted block whose decoys have passed inspection.
struct Leg {
    block: Vec<QubitId>,
    perm: Permutation,
    receive_seq: u64,
    ack: u64,
}

impl Leg {
    /// Block positions of the first `count` (message) items.
    fn message_coordinates(&self, count: usize) -> Result<Vec<usize>> {
        Ok(disclose_coordinates(&self.perm, &(0..count).collect::<Vec<_>>())?)
    }
}

/// Mixes `decoys` into `message`, permutes, sends, and has the receiver
/// Bell-check the decoys once their coordinates are disclosed after an
/// acknowledgment. `None` when the check fails.
#[allow(clippy::too_many_arguments)]
fn decoy_leg(
    session: &mut Session<'_>,
    ledger: &mut Ledger,
    pool: &mut QubitPool,
    from: PartyId,
    leg: u32,
    message: &[QubitId],
    decoys: &[(QubitId, QubitId)],
    threshold: f64,
    stage: &str,
    rng: &mut dyn RngCore,
) -> Result<Option<Leg>> {
    let to = from.counterpart();
    let mut items = message.to_vec();
    let mut roles = vec![QubitRole::Message; message.len()];
    for (pair, &(a, b)) in decoys.iter().enumerate() {
        items.extend([a, b]);
        roles.extend([QubitRole::Decoy { pair }; 2]);
    }
    let perm = random_permutation(items.len(), rng);
    let block = perm.apply_to(&items);
    let r = session.send_qubits(from, to, leg, &block, &perm.apply_to(&roles), pool, rng);
    let ack = session.broadcast(to, Content::Ack { packet: r.packet })?;
    let decoy_idx: Vec<usize> = (message.len()..items.len()).collect();
    let coords = disclose_coordinates(&perm, &decoy_idx)?;
    let disc = session.disclose(from, coords.clone(), vec![ack]);
    let report = decoy_check(session, pool, &pairs_at(&block, &coords), to, vec![r.receive_seq, disc], threshold, stage, rng)?;
    ledger.bump("decoy_pairs", report.checked_count as u64);
    ledger.bump("decoy_failures", report.error_count as u64);
    if !ledger.verdict(session, to, report)? {
        return Ok(None);
    }
    Ok(Some(Leg { block, perm, receive_seq: r.receive_seq, ack }))
}

fn fresh_pairs(pool: &mut QubitPool, count: usize) -> Vec<(QubitId, QubitId)> {
    (0..count).map(|_| pool.prepare_bell(BellLabel::PsiPlus)).collect()
}

/// Ping-pong with decoy pairs in place of conjugate-basis checks. Bob
/// prepares `n` PsiPlus pairs, keeps one qubit from each of `n/2` of them
/// and sends the other `3n/2` qubits in random order. Alice Bell-checks the
/// disclosed decoy pairs, encodes one bit on each remaining qubit, and
/// returns them mixed with fresh decoys of her own. Message: `n/2` bits.
pub fn pp_gv_run(n: usize, message: &[u8], eve: &mut dyn Adversary, opts: &RunOptions, rng: &mut dyn RngCore) -> Result<ProtocolOutcome> {
    check_multiple_of_four(n)?;
    check_bits(message, n / 2, "pp-gv")?;
    let session = Session::new(opts.channel, eve);
    drive("pp-gv", session, opts.max_restarts, |session, ledger| {
        let mut pool = QubitPool::new();
        let pairs = fresh_pairs(&mut pool, n);
        let kept = choose(n, n / 2, rng);
        let decoys: Vec<_> = complement(n, &kept).into_iter().map(|i| pairs[i]).collect();
        let travel: Vec<QubitId> = kept.iter().map(|&i| pairs[i].0).collect();
        let partner: HashMap<QubitId, QubitId> = kept.iter().map(|&i| pairs[i]).collect();

        let Some(fwd) = decoy_leg(session, ledger, &mut pool, PartyId::Bob, 0, &travel, &decoys, opts.threshold, "forward-decoys", rng)?
        else {
            return Ok(None);
        };
        // Alice sees which positions were not decoys, in block order.
        let mut slots = fwd.message_coordinates(travel.len())?;
        slots.sort_unstable();
        let carriers: Vec<QubitId> = slots.iter().map(|&p| fwd.block[p]).collect();
        encode(&mut pool, &carriers, message, false)?;

        let back_decoys = fresh_pairs(&mut pool, n / 4);
        let Some(back) =
            decoy_leg(session, ledger, &mut pool, PartyId::Alice, 1, &carriers, &back_decoys, opts.threshold, "return-decoys", rng)?
        else {
            return Ok(None);
        };
        let coords = back.message_coordinates(carriers.len())?;
        let disc = session.disclose(PartyId::Alice, coords.clone(), vec![back.ack]);
        let decode_pairs: Vec<_> = coords
            .iter()
            .map(|&c| {
                let q = back.block[c];
                (q, partner[&q])
            })
            .collect();
        ledger.bump("message_pairs", decode_pairs.len() as u64);
        let bob = bell_decode(session, &mut pool, &decode_pairs, PartyId::Bob, false, vec![back.receive_seq, disc], rng)?;
        Ok(Some(Delivered { alice: message.to_vec(), bob, eve: None }))
    })
}

/// Two-step dense coding with decoy pairs. Alice prepares `n` PsiPlus
/// pairs, keeps one qubit from each of `n/2` and sends the other `3n/2`
/// in random order; Bob Bell-checks the decoys. Alice then encodes two bits
/// on each kept qubit and sends them with fresh decoys. Only after both
/// checks pass does she reveal which qubits belong together. Message: `n` bits.
pub fn dll_gv_run(n: usize, message: &[u8], eve: &mut dyn Adversary, opts: &RunOptions, rng: &mut dyn RngCore) -> Result<ProtocolOutcome> {
    check_multiple_of_four(n)?;
    check_bits(message, n, "dll-gv")?;
    let session = Session::new(opts.channel, eve);
    drive("dll-gv", session, opts.max_restarts, |session, ledger| {
        let mut pool = QubitPool::new();
        let pairs = fresh_pairs(&mut pool, n);
        let kept = choose(n, n / 2, rng);
        let decoys: Vec<_> = complement(n, &kept).into_iter().map(|i| pairs[i]).collect();
        let home: Vec<QubitId> = kept.iter().map(|&i| pairs[i].0).collect();
        let travel: Vec<QubitId> = kept.iter().map(|&i| pairs[i].1).collect();

        let Some(first) = decoy_leg(session, ledger, &mut pool, PartyId::Alice, 0, &travel, &decoys, opts.threshold, "first-decoys", rng)?
        else {
            return Ok(None);
        };
        encode(&mut pool, &home, message, true)?;
        let more = fresh_pairs(&mut pool, n / 4);
        let Some(second) = decoy_leg(session, ledger, &mut pool, PartyId::Alice, 1, &home, &more, opts.threshold, "second-decoys", rng)?
        else {
            return Ok(None);
        };

        let c_first = first.message_coordinates(travel.len())?;
        let c_second = second.message_coordinates(home.len())?;
        let mut coordinates = c_first.clone();
        coordinates.extend(&c_second);
        let disc = session.disclose(PartyId::Alice, coordinates, vec![second.ack]);
        let decode_pairs: Vec<_> = c_second.iter().zip(&c_first).map(|(&s, &f)| (second.block[s], first.block[f])).collect();
        ledger.bump("message_pairs", decode_pairs.len() as u64);
        let bob = bell_decode(session, &mut pool, &decode_pairs, PartyId::Bob, true, vec![first.receive_seq, second.receive_seq, disc], rng)?;
        Ok(Some(Delivered { alice: message.to_vec(), bob, eve: None }))
    })
}
