//! Statistical examples checked against small closed-form or enumeration
//! oracles written in the test itself.

use num_complex::Complex64 as C;
use orthoqc::adversaries::{EveSpec, Pairing, ResendPolicy};
use orthoqc::engine::random_permutation;
use orthoqc::metrics::detection_rate;
use orthoqc::protocols::{self, random_bits, ProtocolOutcome, RunOptions};
use orthoqc::qcore::{BellLabel, MeasBasis, PauliOp, StateVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn five_sigma(p: f64, n: usize) -> f64 {
    5.0 * (p * (1.0 - p) / n as f64).sqrt()
}

/// Dense 4x4 action of `op (x) I` on a real two-qubit vector, qubit 0 high.
fn on_first(op: [[f64; 2]; 2], v: [f64; 4]) -> [f64; 4] {
    let mut out = [0.0; 4];
    for (row, o) in out.iter_mut().enumerate() {
        for col in 0..4 {
            if row & 1 == col & 1 {
                *o += op[row >> 1][col >> 1] * v[col];
            }
        }
    }
    out
}

#[test]
fn dense_coding_images_match_matrix_oracle() {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let psi_plus = [h, 0.0, 0.0, h];
    let cases: [(PauliOp, [[f64; 2]; 2], [f64; 4]); 3] = [
        (PauliOp::X, [[0.0, 1.0], [1.0, 0.0]], [0.0, h, h, 0.0]),
        (PauliOp::Z, [[1.0, 0.0], [0.0, -1.0]], [h, 0.0, 0.0, -h]),
        (PauliOp::IY, [[0.0, 1.0], [-1.0, 0.0]], [0.0, h, -h, 0.0]),
    ];
    for (op, m, expected) in cases {
        let oracle = on_first(m, psi_plus);
        assert_eq!(oracle.map(|x| (x * 1e12).round()), expected.map(|x| (x * 1e12).round()), "{op:?}");
        let mut s = StateVector::<f64>::bell(BellLabel::PsiPlus);
        s.apply_pauli(op, 0).unwrap();
        let reference = StateVector::from_amplitudes(oracle.iter().map(|&x| C::new(x, 0.0)).collect()).unwrap();
        assert!(s.approx_eq_up_to_phase(&reference), "{op:?}");
    }
}

#[test]
fn born_rule_examples() {
    let mut r = rng(1);
    let trials = 20_000;
    let ones = (0..trials)
        .filter(|_| StateVector::<f64>::zero(1).unwrap().measure(&[0], MeasBasis::Diagonal, &mut r).unwrap()[0] == 1)
        .count();
    // |<-|0>|^2 = 1/2
    assert!((ones as f64 / trials as f64 - 0.5).abs() < five_sigma(0.5, trials));

    let mut same = 0;
    let mut zeros = 0;
    for _ in 0..trials {
        let out = StateVector::<f64>::bell(BellLabel::PsiPlus).measure(&[0, 1], MeasBasis::Computational, &mut r).unwrap();
        same += usize::from(out[0] == out[1]);
        zeros += usize::from(out[0] == 0);
    }
    assert_eq!(same, trials);
    assert!((zeros as f64 / trials as f64 - 0.5).abs() < five_sigma(0.5, trials));
}

#[test]
fn permutations_of_three_are_uniform() {
    let mut r = rng(2);
    let draws = 100_000;
    let mut counts = std::collections::BTreeMap::new();
    for _ in 0..draws {
        *counts.entry(random_permutation(3, &mut r).as_slice().to_vec()).or_insert(0usize) += 1;
    }
    // Exact enumeration: 3! equally likely outcomes.
    assert_eq!(counts.len(), 6);
    for c in counts.values() {
        assert!((*c as f64 / draws as f64 - 1.0 / 6.0).abs() < five_sigma(1.0 / 6.0, draws));
    }
}

fn decoy_pass_rate(out: &ProtocolOutcome) -> f64 {
    1.0 - out.tally("decoy_failures") as f64 / out.tally("decoy_pairs") as f64
}

#[test]
fn computational_measurement_of_a_decoy_pair_passes_half() {
    // |<psi+|00>|^2 summed over the two collapse branches: 2 * 1/4.
    let oracle = 0.5;
    let mut eve = EveSpec::InterceptResend { policy: ResendPolicy::Computational, fraction: 1.0, legs: None }.build();
    let out = protocols::gv_subroutine(&random_bits(8000, &mut rng(3)), eve.as_mut(), &RunOptions::strict(), &mut rng(4)).unwrap();
    assert!((decoy_pass_rate(&out) - oracle).abs() < five_sigma(oracle, 4000));

    let mut eve = EveSpec::InterceptResend { policy: ResendPolicy::Computational, fraction: 1.0, legs: None }.build();
    let out = protocols::dll_gv_run(2000, &random_bits(2000, &mut rng(5)), eve.as_mut(), &RunOptions { max_restarts: 0, ..RunOptions::strict() }, &mut rng(6))
        .unwrap();
    let pairs = out.tally("decoy_pairs") as usize;
    assert!(out.aborted);
    assert!((decoy_pass_rate(&out) - oracle).abs() < five_sigma(oracle, pairs));
}

#[test]
fn two_disturbed_pairs_are_caught_fifteen_times_in_sixteen() {
    let oracle = 1.0 - 0.25f64.powi(2);
    let trials = 10_000;
    let outcomes: Vec<ProtocolOutcome> = (0..trials)
        .map(|t| {
            let mut eve = EveSpec::BellMispair { pairing: Pairing::Targeted(2), fraction: 1.0, legs: None }.build();
            protocols::gv_subroutine(&random_bits(8, &mut rng(10 + t)), eve.as_mut(), &RunOptions::strict(), &mut rng(50_000 + t)).unwrap()
        })
        .collect();
    let rate = detection_rate(&outcomes).unwrap();
    assert!((rate - oracle).abs() < 0.02, "{rate}");
}

#[test]
fn full_block_mispairing_aborts_decoy_protocols() {
    for n in [16usize, 64] {
        let bound = 1.0 - 0.25f64.powi((n / 4) as i32);
        let trials = 200;
        let pp: Vec<ProtocolOutcome> = (0..trials)
            .map(|t| {
                let mut eve = EveSpec::BellMispair { pairing: Pairing::Adjacent, fraction: 1.0, legs: Some(vec![0]) }.build();
                let msg = random_bits(n / 2, &mut rng(t as u64));
                protocols::pp_gv_run(n, &msg, eve.as_mut(), &RunOptions { max_restarts: 0, ..RunOptions::strict() }, &mut rng(900 + t as u64)).unwrap()
            })
            .collect();
        let rate = pp.iter().filter(|o| o.aborted).count() as f64 / trials as f64;
        assert!(rate >= bound - five_sigma(bound.min(0.99), trials), "n={n}: {rate} vs {bound}");
    }
}

#[test]
fn dll_second_leg_intercept_shows_quarter_errors() {
    let mut eve = EveSpec::InterceptResend { policy: ResendPolicy::Random, fraction: 1.0, legs: Some(vec![1]) }.build();
    let n = 8000;
    let out = protocols::dll_run(n, &random_bits(n / 2, &mut rng(7)), eve.as_mut(), &RunOptions { max_restarts: 0, ..Default::default() }, &mut rng(8))
        .unwrap();
    assert!(out.aborted);
    let first = &out.reports[0];
    let last = out.reports.last().unwrap();
    assert_eq!(first.error_count, 0);
    assert!((last.qber - 0.25).abs() < 0.02, "{}", last.qber);
}

#[test]
fn n09_blocking_attack_is_detected() {
    let mut eve = EveSpec::N09Block { p_block: 0.5 }.build();
    let out = protocols::n09_qkd(10_000, 0.5, eve.as_mut(), &RunOptions { max_restarts: 0, ..RunOptions::strict() }, &mut rng(9)).unwrap();
    assert!(out.detected());
    assert!(out.reports[0].error_count > 0);
}
