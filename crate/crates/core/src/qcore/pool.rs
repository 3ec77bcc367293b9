use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{BellLabel, MeasBasis, PauliOp, QcoreError, Result, StateVector};

/// Handle to one qubit held in a [`QubitPool`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct QubitId(pub usize);

#[derive(Debug, Clone)]
struct Register {
    state: StateVector<f64>,
    members: Vec<QubitId>,
}

/// A collection of qubits stored as independent small registers.
///
/// Registers are merged only when an operation spans two of them (a Bell
/// measurement across pairs) and measured qubits are factored back out, so
/// joint states never grow past a few qubits.
#[derive(Debug, Clone, Default)]
pub struct QubitPool {
    registers: Vec<Option<Register>>,
    location: Vec<(usize, usize)>,
    free: Vec<usize>,
}

impl QubitPool {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.location.len()
    }

    pub fn is_empty(&self) -> bool {
        self.location.is_empty()
    }

    fn insert(&mut self, state: StateVector<f64>, members: Vec<QubitId>) -> usize {
        let reg = Register { state, members };
        let slot = match self.free.pop() {
            Some(slot) => {
                self.registers[slot] = Some(reg);
                slot
            }
            None => {
                self.registers.push(Some(reg));
                self.registers.len() - 1
            }
        };
        let members = self.registers[slot].as_ref().map(|r| r.members.clone()).unwrap_or_default();
        for (pos, q) in members.iter().enumerate() {
            self.location[q.0] = (slot, pos);
        }
        slot
    }

    fn take(&mut self, slot: usize) -> Register {
        self.free.push(slot);
        self.registers[slot].take().expect("live register")
    }

    fn alloc(&mut self, state: StateVector<f64>) -> Vec<QubitId> {
        let ids: Vec<QubitId> = (0..state.num_qubits())
            .map(|k| QubitId(self.location.len() + k))
            .collect();
        self.location.extend(ids.iter().map(|_| (usize::MAX, 0)));
        self.insert(state, ids.clone());
        ids
    }

    pub fn prepare(&mut self, state: StateVector<f64>) -> Vec<QubitId> {
        self.alloc(state)
    }

    pub fn prepare_bell(&mut self, label: BellLabel) -> (QubitId, QubitId) {
        let ids = self.alloc(StateVector::bell(label));
        (ids[0], ids[1])
    }

    /// |bit> in the computational basis.
    pub fn prepare_bit(&mut self, bit: u8) -> QubitId {
        let state = StateVector::basis(1, usize::from(bit & 1)).expect("1-qubit basis state");
        self.alloc(state)[0]
    }

    fn locate(&self, q: QubitId) -> Result<(usize, usize)> {
        self.location.get(q.0).copied().ok_or(QcoreError::UnknownQubit(q.0))
    }

    pub fn apply_pauli(&mut self, q: QubitId, op: PauliOp) -> Result<()> {
        let (slot, pos) = self.locate(q)?;
        let reg = self.registers[slot].as_mut().expect("live register");
        reg.state.apply_pauli(op, pos)
    }

    /// Measures one qubit; it leaves as its own register in the collapsed state.
    pub fn measure<R: Rng + ?Sized>(&mut self, q: QubitId, basis: MeasBasis, rng: &mut R) -> Result<u8> {
        if basis == MeasBasis::Bell {
            return Err(QcoreError::BellBasis);
        }
        let (slot, pos) = self.locate(q)?;
        let mut reg = self.take(slot);
        let (bit, rest) = reg.state.measure_detached(pos, basis, rng)?;
        reg.members.remove(pos);
        if let Some(rest) = rest {
            self.insert(rest, reg.members);
        }
        let collapsed = match basis {
            MeasBasis::Diagonal => StateVector::diagonal(bit),
            _ => StateVector::basis(1, usize::from(bit)).expect("1-qubit basis state"),
        };
        self.insert(collapsed, vec![q]);
        Ok(bit)
    }

    /// Bell measurement of (a, b), merging their registers first if needed.
    /// The pair is left as its own register in the measured Bell state.
    pub fn bell_measure<R: Rng + ?Sized>(&mut self, a: QubitId, b: QubitId, rng: &mut R) -> Result<BellLabel> {
        if a == b {
            return Err(QcoreError::DuplicateIndex(a.0));
        }
        let (sa, _) = self.locate(a)?;
        let (sb, _) = self.locate(b)?;
        let reg = if sa == sb {
            self.take(sa)
        } else {
            let ra = self.take(sa);
            let rb = self.take(sb);
            let state = ra.state.tensor(&rb.state)?;
            let mut members = ra.members;
            members.extend(rb.members);
            Register { state, members }
        };
        let pa = reg.members.iter().position(|&m| m == a).expect("member");
        let pb = reg.members.iter().position(|&m| m == b).expect("member");
        let (label, rest) = reg.state.bell_measure_detached(pa, pb, rng)?;
        let remaining: Vec<QubitId> = reg.members.into_iter().filter(|&m| m != a && m != b).collect();
        if let Some(rest) = rest {
            self.insert(rest, remaining);
        }
        self.insert(StateVector::bell(label), vec![a, b]);
        Ok(label)
    }

    /// Joint state of the register holding `q`, with its member order.
    pub fn register_of(&self, q: QubitId) -> Result<(&StateVector<f64>, &[QubitId])> {
        let (slot, _) = self.locate(q)?;
        let reg = self.registers[slot].as_ref().expect("live register");
        Ok((&reg.state, &reg.members))
    }

    /// Number of qubits sharing a register with `q` (including `q`).
    pub fn register_size(&self, q: QubitId) -> Result<usize> {
        Ok(self.register_of(q)?.1.len())
    }
}
