use rand::{Rng, RngCore};

use super::{bit_string, drive, Delivered, ProtocolError, ProtocolOutcome, Result, RunOptions, VerificationReport};
use crate::engine::{disclose_coordinates, random_permutation, Adversary, BasisTag, Content, PartyId, QubitRole, Session};
use crate::qcore::{BellLabel, MeasBasis, QubitId, QubitPool};

/// Conjugate-basis check on shared PsiPlus pairs. `first` measures its
/// halves in random bases and, when the halves are split between parties,
/// announces bases and results; `second` measures its halves in the same
/// bases and counts disagreements.
#[allow(clippy::too_many_arguments)]
pub(super) fn bb84_check(
    session: &mut Session<'_>,
    pool: &mut QubitPool,
    pairs: &[(QubitId, QubitId)],
    first: PartyId,
    second: PartyId,
    cites: Vec<u64>,
    threshold: f64,
    stage: &str,
    rng: &mut dyn RngCore,
) -> Result<VerificationReport> {
    let bases: Vec<MeasBasis> = pairs
        .iter()
        .map(|_| if rng.random_bool(0.5) { MeasBasis::Diagonal } else { MeasBasis::Computational })
        .collect();
    let measure = |pool: &mut QubitPool, pick: fn(&(QubitId, QubitId)) -> QubitId, rng: &mut dyn RngCore| -> Result<Vec<u8>> {
        pairs.iter().zip(&bases).map(|(p, &b)| Ok(pool.measure(pick(p), b, rng)?)).collect()
    };
    let log = |session: &mut Session<'_>, party: PartyId, bits: &[u8], cites: &[u64]| {
        for basis in [MeasBasis::Computational, MeasBasis::Diagonal] {
            let outcomes: Vec<u8> = bits.iter().zip(&bases).filter(|(_, &b)| b == basis).map(|(&x, _)| x).collect();
            if !outcomes.is_empty() {
                session.measurement(party, BasisTag::from(basis), bit_string(&outcomes), cites.to_vec());
            }
        }
    };

    let first_bits = measure(pool, |p| p.0, rng)?;
    log(session, first, &first_bits, &cites);
    let mut second_cites = Vec::new();
    if first != second {
        let basis_str = bases.iter().map(|b| if *b == MeasBasis::Diagonal { 'X' } else { 'Z' }).collect();
        second_cites.push(session.broadcast(first, Content::Bases { bases: basis_str })?);
        second_cites.push(session.broadcast(first, Content::Bits { bits: bit_string(&first_bits) })?);
    } else {
        second_cites = cites;
    }
    let second_bits = measure(pool, |p| p.1, rng)?;
    log(session, second, &second_bits, &second_cites);
    let errors = first_bits.iter().zip(&second_bits).filter(|(a, b)| a != b).count();
    Ok(VerificationReport::new(stage, pairs.len(), errors, 0, threshold))
}

/// Bell-measures decoy pairs; anything other than PsiPlus is an error.
#[allow(clippy::too_many_arguments)]
pub(super) fn decoy_check(
    session: &mut Session<'_>,
    pool: &mut QubitPool,
    pairs: &[(QubitId, QubitId)],
    measurer: PartyId,
    cites: Vec<u64>,
    threshold: f64,
    stage: &str,
    rng: &mut dyn RngCore,
) -> Result<VerificationReport> {
    let labels = pairs.iter().map(|&(a, b)| Ok(pool.bell_measure(a, b, rng)?)).collect::<Result<Vec<_>>>()?;
    let text: Vec<&str> = labels.iter().map(|l| l.short()).collect();
    session.measurement(measurer, BasisTag::Bell, text.join(","), cites);
    let errors = labels.iter().filter(|&&l| l != BellLabel::PsiPlus).count();
    Ok(VerificationReport::new(stage, pairs.len(), errors, 0, threshold))
}

/// Splits a transmitted block into decoy pairs using disclosed coordinates
/// (consecutive entries are partners).
pub(super) fn pairs_at(block: &[QubitId], coords: &[usize]) -> Vec<(QubitId, QubitId)> {
    coords.chunks_exact(2).map(|c| (block[c[0]], block[c[1]])).collect()
}

/// Standalone conjugate-basis check: the verifier's counterpart prepares
/// `num_pairs` PsiPlus pairs and sends one half of each to the verifier,
/// who measures in random bases and announces; the preparer compares.
pub fn bb84_subroutine(
    num_pairs: usize,
    verifier: PartyId,
    eve: &mut dyn Adversary,
    opts: &RunOptions,
    rng: &mut dyn RngCore,
) -> Result<ProtocolOutcome> {
    if num_pairs == 0 || verifier == PartyId::Eve {
        return Err(ProtocolError::Config("bb84 check needs at least one pair and an honest verifier".into()));
    }
    let preparer = verifier.counterpart();
    let session = Session::new(opts.channel, eve);
    drive("bb84-check", session, 0, |session, ledger| {
        let mut pool = QubitPool::new();
        let pairs: Vec<(QubitId, QubitId)> = (0..num_pairs).map(|_| pool.prepare_bell(BellLabel::PsiPlus)).collect();
        let travel: Vec<QubitId> = pairs.iter().map(|p| p.1).collect();
        let roles = vec![QubitRole::Verification; num_pairs];
        let r = session.send_qubits(preparer, verifier, 0, &travel, &roles, &mut pool, rng);
        let flipped: Vec<_> = pairs.iter().map(|&(home, t)| (t, home)).collect();
        let report = bb84_check(session, &mut pool, &flipped, verifier, preparer, vec![r.receive_seq], opts.threshold, "bb84", rng)?;
        ledger.bump("checked", report.checked_count as u64);
        Ok(ledger.verdict(session, preparer, report)?.then(Delivered::default))
    })
}

/// Decoy-pair protection of `message.len()` message qubits (computational
/// basis states). Alice mixes in PsiPlus decoy pairs, permutes the lot,
/// and discloses only decoy positions once Bob acknowledges receipt. Bob
/// Bell-measures the decoys; only after they pass does Alice reveal where
/// the message qubits are.
pub fn gv_subroutine(message: &[u8], eve: &mut dyn Adversary, opts: &RunOptions, rng: &mut dyn RngCore) -> Result<ProtocolOutcome> {
    let n = message.len();
    if n == 0 || n % 2 != 0 {
        return Err(ProtocolError::Config(format!("gv subroutine needs an even, positive number of message qubits, got {n}")));
    }
    super::check_bits(message, n, "gv subroutine")?;
    let session = Session::new(opts.channel, eve);
    drive("gv-check", session, 0, |session, ledger| {
        let mut pool = QubitPool::new();
        let mut items: Vec<QubitId> = message.iter().map(|&b| pool.prepare_bit(b)).collect();
        let mut roles = vec![QubitRole::Message; n];
        for pair in 0..n / 2 {
            let (a, b) = pool.prepare_bell(BellLabel::PsiPlus);
            items.extend([a, b]);
            roles.extend([QubitRole::Decoy { pair }; 2]);
        }
        let perm = random_permutation(2 * n, rng);
        let block = perm.apply_to(&items);
        let block_roles = perm.apply_to(&roles);
        let r = session.send_qubits(PartyId::Alice, PartyId::Bob, 0, &block, &block_roles, &mut pool, rng);
        let ack = session.broadcast(PartyId::Bob, Content::Ack { packet: r.packet })?;
        let decoy_idx: Vec<usize> = (n..2 * n).collect();
        let coords = disclose_coordinates(&perm, &decoy_idx)?;
        let disc = session.disclose(PartyId::Alice, coords.clone(), vec![ack]);
        let pairs = pairs_at(&block, &coords);
        let report = decoy_check(session, &mut pool, &pairs, PartyId::Bob, vec![r.receive_seq, disc], opts.threshold, "gv-decoys", rng)?;
        ledger.bump("decoy_pairs", report.checked_count as u64);
        ledger.bump("decoy_failures", report.error_count as u64);
        if !ledger.verdict(session, PartyId::Bob, report)? {
            return Ok(None);
        }
        let msg_idx: Vec<usize> = (0..n).collect();
        let coords = disclose_coordinates(&perm, &msg_idx)?;
        let disc = session.disclose(PartyId::Alice, coords.clone(), vec![ack]);
        let bits = coords
            .iter()
            .map(|&c| Ok(pool.measure(block[c], MeasBasis::Computational, rng)?))
            .collect::<Result<Vec<u8>>>()?;
        session.measurement(PartyId::Bob, BasisTag::Computational, bit_string(&bits), vec![r.receive_seq, disc]);
        Ok(Some(Delivered { alice: message.to_vec(), bob: bits, eve: None }))
    })
}
