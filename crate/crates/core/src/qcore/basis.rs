use serde::{Deserialize, Serialize};

/// The four Bell states, named the way the ping-pong literature names them:
/// `PsiPlus = (|00> + |11>)/sqrt2`, `PhiPlus = (|01> + |10>)/sqrt2`, and
/// the minus partners with the second term negated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BellLabel {
    PsiPlus,
    PsiMinus,
    PhiPlus,
    PhiMinus,
}

impl BellLabel {
    pub const ALL: [BellLabel; 4] = [
        BellLabel::PsiPlus,
        BellLabel::PsiMinus,
        BellLabel::PhiPlus,
        BellLabel::PhiMinus,
    ];

    /// Real amplitudes over |00>, |01>, |10>, |11> in units of 1/sqrt2.
    pub(crate) fn signs(self) -> [f64; 4] {
        match self {
            BellLabel::PsiPlus => [1.0, 0.0, 0.0, 1.0],
            BellLabel::PsiMinus => [1.0, 0.0, 0.0, -1.0],
            BellLabel::PhiPlus => [0.0, 1.0, 1.0, 0.0],
            BellLabel::PhiMinus => [0.0, 1.0, -1.0, 0.0],
        }
    }

    pub fn index(self) -> usize {
        match self {
            BellLabel::PsiPlus => 0,
            BellLabel::PsiMinus => 1,
            BellLabel::PhiPlus => 2,
            BellLabel::PhiMinus => 3,
        }
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    /// Dense-coding decode: the Pauli operator that maps `PsiPlus` onto this
    /// label when applied to the first qubit.
    pub fn encoding_op(self) -> PauliOp {
        match self {
            BellLabel::PsiPlus => PauliOp::I,
            BellLabel::PhiPlus => PauliOp::X,
            BellLabel::PhiMinus => PauliOp::IY,
            BellLabel::PsiMinus => PauliOp::Z,
        }
    }

    pub fn short(self) -> &'static str {
        match self {
            BellLabel::PsiPlus => "psi+",
            BellLabel::PsiMinus => "psi-",
            BellLabel::PhiPlus => "phi+",
            BellLabel::PhiMinus => "phi-",
        }
    }
}

/// Single-qubit encoding operators. `IY` is the real matrix `Z*X`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PauliOp {
    I,
    X,
    IY,
    Z,
}

impl PauliOp {
    pub const ALL: [PauliOp; 4] = [PauliOp::I, PauliOp::X, PauliOp::IY, PauliOp::Z];

    /// Two-bit message value carried by the operator: I=00, X=01, iY=10, Z=11.
    pub fn message_bits(self) -> [u8; 2] {
        match self {
            PauliOp::I => [0, 0],
            PauliOp::X => [0, 1],
            PauliOp::IY => [1, 0],
            PauliOp::Z => [1, 1],
        }
    }

    pub fn from_message_bits(hi: u8, lo: u8) -> Self {
        match (hi & 1, lo & 1) {
            (0, 0) => PauliOp::I,
            (0, 1) => PauliOp::X,
            (1, 0) => PauliOp::IY,
            _ => PauliOp::Z,
        }
    }

    /// Real 2x2 matrix, row-major.
    pub(crate) fn matrix(self) -> [[f64; 2]; 2] {
        match self {
            PauliOp::I => [[1.0, 0.0], [0.0, 1.0]],
            PauliOp::X => [[0.0, 1.0], [1.0, 0.0]],
            PauliOp::IY => [[0.0, 1.0], [-1.0, 0.0]],
            PauliOp::Z => [[1.0, 0.0], [0.0, -1.0]],
        }
    }
}

/// Measurement bases. `Computational` is {0,1}, `Diagonal` is {+,-}; `Bell`
/// only applies to a designated qubit pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasBasis {
    Computational,
    Diagonal,
    Bell,
}
