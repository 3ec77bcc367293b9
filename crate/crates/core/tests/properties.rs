use num_complex::Complex;
use orthoqc::adversaries::EveSpec;
use orthoqc::optics::{gv_decode, gv_encode, Element, ModeState};
use orthoqc::protocols::{self, RunOptions};
use orthoqc::qcore::{BellLabel, PauliOp, Permutation, StateVector};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn amplitudes(max_qubits: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
    (1..=max_qubits).prop_flat_map(|n| prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 1 << n))
}

fn normalized<T: orthoqc::Real>(raw: &[(f64, f64)]) -> Option<StateVector<T>> {
    let norm: f64 = raw.iter().map(|(re, im)| re * re + im * im).sum::<f64>().sqrt();
    if norm < 1e-3 {
        return None;
    }
    let amps = raw
        .iter()
        .map(|(re, im)| Complex::new(T::from_f64_lossy(re / norm), T::from_f64_lossy(im / norm)))
        .collect();
    StateVector::from_amplitudes(amps).ok()
}

fn op() -> impl Strategy<Value = PauliOp> {
    prop::sample::select(PauliOp::ALL.to_vec())
}

proptest! {
    #[test]
    fn gates_preserve_norm(raw in amplitudes(4), ops in prop::collection::vec((op(), 0usize..4, any::<bool>()), 0..24)) {
        let Some(mut s) = normalized::<f64>(&raw) else { return Ok(()) };
        let n = s.num_qubits();
        for (op, target, hadamard) in ops {
            let t = target % n;
            if hadamard { s.apply_hadamard(t).unwrap() } else { s.apply_pauli(op, t).unwrap() }
        }
        prop_assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gates_preserve_norm_f32(raw in amplitudes(3), ops in prop::collection::vec((op(), 0usize..3), 0..16)) {
        let Some(mut s) = normalized::<f32>(&raw) else { return Ok(()) };
        let n = s.num_qubits();
        for (op, target) in ops {
            s.apply_pauli(op, target % n).unwrap();
            s.apply_hadamard(target % n).unwrap();
        }
        prop_assert!((s.norm_sqr() - 1.0).abs() < 1e-4);
    }

    #[test]
    fn permutation_inverse_round_trips(map in (1usize..64).prop_flat_map(|n| Just((0..n).collect::<Vec<_>>()).prop_shuffle())) {
        let p = Permutation::new(map.clone()).unwrap();
        let inv = p.inverse();
        prop_assert_eq!(inv.after(&p), Permutation::identity(map.len()));
        prop_assert_eq!(p.after(&inv), Permutation::identity(map.len()));
        let items: Vec<usize> = (100..100 + map.len()).collect();
        prop_assert_eq!(inv.apply_to(&p.apply_to(&items)), items);
    }

    #[test]
    fn dense_coding_decodes_what_was_encoded(op in op(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut s = StateVector::<f64>::bell(BellLabel::PsiPlus);
        s.apply_pauli(op, 0).unwrap();
        let label = s.bell_measure(0, 1, &mut rng).unwrap();
        prop_assert_eq!(label.encoding_op(), op);
    }

    #[test]
    fn gv_decode_inverts_encode(r in 0.01..0.99f64, bit in 0u8..2, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let state = gv_encode(bit, r).unwrap();
        prop_assert!((state.norm_sqr() - 1.0).abs() < 1e-12);
        prop_assert_eq!(gv_decode(&state, r, &mut rng).unwrap(), bit);
    }

    #[test]
    fn splitters_preserve_mode_norm(rs in prop::collection::vec(0.0..=1.0f64, 1..8), phase in 0.0..6.3f64) {
        let mut s = ModeState::<f64>::from_modes([("x", 0, Complex::new(0.6, 0.0)), ("y", 3, Complex::new(0.0, 0.8))]).unwrap();
        for (k, r) in rs.iter().enumerate() {
            let (ins, outs) = if k % 2 == 0 { (("x", "y"), ("u", "v")) } else { (("u", "v"), ("x", "y")) };
            s.apply(&Element::beam_splitter("bs", *r, ins, outs), 1).unwrap();
            s.phase_mode(outs.0, phase);
        }
        prop_assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn dense_protocols_deliver_random_messages(seed in any::<u64>(), quarters in 1usize..6) {
        let n = 4 * quarters;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let message = protocols::random_bits(n / 2, &mut rng);
        let mut eve = EveSpec::None.build();
        let out = protocols::dll_run(n, &message, eve.as_mut(), &RunOptions::default(), &mut rng).unwrap();
        prop_assert_eq!(&out.bob_bits, &message);
        let mut eve = EveSpec::None.build();
        let out = protocols::dll_gv_run(n, &protocols::random_bits(n, &mut rng), eve.as_mut(), &RunOptions::strict(), &mut rng).unwrap();
        prop_assert_eq!(out.fidelity(), Some(1.0));
    }
}
