//! Exact state-vector simulation of small qubit registers.
//!
//! Qubit 0 is the most significant bit of the amplitude index. States that
//! differ only by a global phase are treated as equal by
//! [`StateVector::approx_eq_up_to_phase`].

mod basis;
mod permutation;
mod pool;
mod state;

pub use basis::{BellLabel, MeasBasis, PauliOp};
pub use permutation::Permutation;
pub use pool::{QubitId, QubitPool};
pub use state::{StateVector, MAX_QUBITS};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QcoreError {
    #[error("qubit count {0} outside the supported range 1..={MAX_QUBITS}")]
    QubitCount(usize),
    #[error("qubit index {index} out of range for a {num_qubits}-qubit state")]
    Index { index: usize, num_qubits: usize },
    #[error("qubit index {0} listed more than once")]
    DuplicateIndex(usize),
    #[error("amplitude vector of length {0} is not a power of two")]
    Length(usize),
    #[error("state norm {0} is not 1")]
    NotNormalized(f64),
    #[error("permutation of size {perm} applied to a {num_qubits}-qubit state")]
    PermutationSize { perm: usize, num_qubits: usize },
    #[error("map is not a bijection on 0..{0}")]
    NotBijection(usize),
    #[error("the Bell basis is measured with bell_measure on a qubit pair")]
    BellBasis,
    #[error("unknown qubit id {0}")]
    UnknownQubit(usize),
}

pub type Result<T> = std::result::Result<T, QcoreError>;
