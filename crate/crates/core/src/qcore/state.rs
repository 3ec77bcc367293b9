use num_complex::Complex;
use num_traits::{One, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{BellLabel, MeasBasis, PauliOp, Permutation, QcoreError, Result};
use crate::num::{c, c_real, frac_1_sqrt_2, sample_weighted, Real};

/// Largest register the simulator materializes. Protocols keep disjoint
/// pairs in separate registers, so joint states stay far below this.
pub const MAX_QUBITS: usize = 10;

/// Dense amplitude vector.
type Amplitudes<T> = Vec<Complex<T>>;

/// Normalized amplitude vector over `num_qubits` qubits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct StateVector<T: Real = f64> {
    num_qubits: usize,
    amps: Vec<Complex<T>>,
}

fn check_count(n: usize) -> Result<()> {
    if n == 0 || n > MAX_QUBITS {
        Err(QcoreError::QubitCount(n))
    } else {
        Ok(())
    }
}

impl<T: Real> StateVector<T> {
    /// |0...0> on `n` qubits.
    pub fn zero(n: usize) -> Result<Self> {
        Self::basis(n, 0)
    }

    /// Computational basis state |index> on `n` qubits.
    pub fn basis(n: usize, index: usize) -> Result<Self> {
        check_count(n)?;
        let dim = 1usize << n;
        if index >= dim {
            return Err(QcoreError::Index { index, num_qubits: n });
        }
        let mut amps = vec![Complex::zero(); dim];
        amps[index] = Complex::one();
        Ok(Self { num_qubits: n, amps })
    }

    /// Wraps an amplitude vector, rejecting wrong lengths and unnormalized input.
    pub fn from_amplitudes(amps: Vec<Complex<T>>) -> Result<Self> {
        let len = amps.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(QcoreError::Length(len));
        }
        let n = len.trailing_zeros() as usize;
        check_count(n)?;
        let s = Self { num_qubits: n, amps };
        let norm = s.norm_sqr();
        if (norm - T::one()).abs() > T::tolerance() * T::from_f64_lossy(len as f64) {
            return Err(QcoreError::NotNormalized(norm.to_f64_lossy()));
        }
        Ok(s)
    }

    pub fn bell(label: BellLabel) -> Self {
        let h = frac_1_sqrt_2::<T>();
        let amps = label
            .signs()
            .iter()
            .map(|&s| c_real(h * T::from_f64_lossy(s)))
            .collect();
        Self { num_qubits: 2, amps }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[Complex<T>] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> T {
        self.amps.iter().fold(T::zero(), |acc, a| acc + a.norm_sqr())
    }

    fn check_index(&self, q: usize) -> Result<()> {
        if q >= self.num_qubits {
            Err(QcoreError::Index { index: q, num_qubits: self.num_qubits })
        } else {
            Ok(())
        }
    }

    fn check_targets(&self, targets: &[usize]) -> Result<()> {
        for (k, &t) in targets.iter().enumerate() {
            self.check_index(t)?;
            if targets[..k].contains(&t) {
                return Err(QcoreError::DuplicateIndex(t));
            }
        }
        Ok(())
    }

    /// Bit position of qubit `q` inside an amplitude index.
    fn shift(&self, q: usize) -> usize {
        self.num_qubits - 1 - q
    }

    /// Applies a 2x2 matrix (row-major) to qubit `target`.
    pub fn apply_single(&mut self, target: usize, m: [[Complex<T>; 2]; 2]) -> Result<()> {
        self.check_index(target)?;
        let bit = 1usize << self.shift(target);
        for i0 in 0..self.amps.len() {
            if i0 & bit != 0 {
                continue;
            }
            let i1 = i0 | bit;
            let (a0, a1) = (self.amps[i0], self.amps[i1]);
            self.amps[i0] = m[0][0] * a0 + m[0][1] * a1;
            self.amps[i1] = m[1][0] * a0 + m[1][1] * a1;
        }
        Ok(())
    }

    pub fn apply_pauli(&mut self, op: PauliOp, target: usize) -> Result<()> {
        let m = op.matrix();
        let e = |v: f64| c_real(T::from_f64_lossy(v));
        self.apply_single(target, [[e(m[0][0]), e(m[0][1])], [e(m[1][0]), e(m[1][1])]])
    }

    pub fn apply_hadamard(&mut self, target: usize) -> Result<()> {
        let h = c_real(frac_1_sqrt_2::<T>());
        self.apply_single(target, [[h, h], [h, -h]])
    }

    /// Kronecker product `self ⊗ other`; `other`'s qubits follow `self`'s.
    pub fn tensor(&self, other: &Self) -> Result<Self> {
        let n = self.num_qubits + other.num_qubits;
        check_count(n)?;
        let mut amps = Vec::with_capacity(1 << n);
        for a in &self.amps {
            for b in &other.amps {
                amps.push(*a * *b);
            }
        }
        Ok(Self { num_qubits: n, amps })
    }

    /// <self|other>.
    pub fn inner(&self, other: &Self) -> Result<Complex<T>> {
        if self.num_qubits != other.num_qubits {
            return Err(QcoreError::PermutationSize {
                perm: other.num_qubits,
                num_qubits: self.num_qubits,
            });
        }
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .fold(Complex::zero(), |acc, (a, b)| acc + a.conj() * *b))
    }

    /// Equality up to global phase: |<a|b>| >= 1 - tolerance.
    pub fn approx_eq_up_to_phase(&self, other: &Self) -> bool {
        match self.inner(other) {
            Ok(ip) => ip.norm() >= T::one() - T::tolerance(),
            Err(_) => false,
        }
    }

    /// Relabels qubits: old qubit `q` becomes qubit `perm.apply(q)`.
    pub fn permute(&self, perm: &Permutation) -> Result<Self> {
        if perm.size() != self.num_qubits {
            return Err(QcoreError::PermutationSize {
                perm: perm.size(),
                num_qubits: self.num_qubits,
            });
        }
        let n = self.num_qubits;
        let mut amps = vec![Complex::zero(); self.amps.len()];
        for (old, a) in self.amps.iter().enumerate() {
            let mut new = 0usize;
            for q in 0..n {
                if old >> (n - 1 - q) & 1 == 1 {
                    new |= 1 << (n - 1 - perm.apply(q));
                }
            }
            amps[new] = *a;
        }
        Ok(Self { num_qubits: n, amps })
    }

    fn rest_of(&self, targets: &[usize]) -> Vec<usize> {
        (0..self.num_qubits).filter(|q| !targets.contains(q)).collect()
    }

    /// Splits an amplitude index into (target bits, rest bits), each read
    /// most-significant-first in the order given.
    fn split_index(&self, idx: usize, targets: &[usize], rest: &[usize]) -> (usize, usize) {
        let gather = |qs: &[usize]| {
            qs.iter()
                .fold(0usize, |acc, &q| (acc << 1) | (idx >> self.shift(q) & 1))
        };
        (gather(targets), gather(rest))
    }

    /// Contracts `targets` against the local state `local` and returns the
    /// unnormalized residual over the remaining qubits.
    fn contract(&self, targets: &[usize], rest: &[usize], local: &[Complex<T>]) -> Vec<Complex<T>> {
        let mut residual = vec![Complex::zero(); 1 << rest.len()];
        for (idx, a) in self.amps.iter().enumerate() {
            let (x, r) = self.split_index(idx, targets, rest);
            residual[r] += local[x].conj() * *a;
        }
        residual
    }

    /// Inverse of `contract`: rebuilds |local>_targets ⊗ |residual>_rest.
    fn reassemble(&mut self, targets: &[usize], rest: &[usize], local: &[Complex<T>], residual: &[Complex<T>]) {
        let mut amps = vec![Complex::zero(); self.amps.len()];
        for (idx, slot) in amps.iter_mut().enumerate() {
            let (x, r) = self.split_index(idx, targets, rest);
            *slot = local[x] * residual[r];
        }
        self.amps = amps;
    }

    fn outcome_states(basis: MeasBasis, k: usize) -> Result<Vec<Vec<Complex<T>>>> {
        let h = frac_1_sqrt_2::<T>();
        let single = |bit: usize| -> Result<[Complex<T>; 2]> {
            Ok(match (basis, bit) {
                (MeasBasis::Computational, 0) => [Complex::one(), Complex::zero()],
                (MeasBasis::Computational, _) => [Complex::zero(), Complex::one()],
                (MeasBasis::Diagonal, 0) => [c_real(h), c_real(h)],
                (MeasBasis::Diagonal, _) => [c_real(h), c_real(-h)],
                (MeasBasis::Bell, _) => return Err(QcoreError::BellBasis),
            })
        };
        (0..1usize << k)
            .map(|outcome| {
                let mut v = vec![Complex::<T>::one()];
                for j in 0..k {
                    let s = single(outcome >> (k - 1 - j) & 1)?;
                    v = v.iter().flat_map(|a| [*a * s[0], *a * s[1]]).collect();
                }
                Ok(v)
            })
            .collect()
    }

    /// Born-rule distribution over the 2^k outcomes of measuring `targets`
    /// (first target is the most significant outcome bit).
    pub fn probabilities(&self, targets: &[usize], basis: MeasBasis) -> Result<Vec<T>> {
        self.check_targets(targets)?;
        let rest = self.rest_of(targets);
        Self::outcome_states(basis, targets.len())?
            .iter()
            .map(|local| {
                Ok(self
                    .contract(targets, &rest, local)
                    .iter()
                    .fold(T::zero(), |acc, a| acc + a.norm_sqr()))
            })
            .collect()
    }

    fn measure_inner<R: Rng + ?Sized>(
        &mut self,
        targets: &[usize],
        basis: MeasBasis,
        rng: &mut R,
    ) -> Result<(Vec<u8>, Amplitudes<T>, Amplitudes<T>)> {
        self.check_targets(targets)?;
        let rest = self.rest_of(targets);
        let locals = Self::outcome_states(basis, targets.len())?;
        let residuals: Vec<_> = locals.iter().map(|l| self.contract(targets, &rest, l)).collect();
        let weights: Vec<f64> = residuals
            .iter()
            .map(|r| r.iter().map(|a| a.norm_sqr().to_f64_lossy()).sum())
            .collect();
        let outcome = sample_weighted(&weights, rng);
        let scale = T::from_f64_lossy(weights[outcome].sqrt().recip());
        let residual: Vec<_> = residuals[outcome].iter().map(|a| *a * scale).collect();
        let k = targets.len();
        let bits = (0..k).map(|j| (outcome >> (k - 1 - j) & 1) as u8).collect();
        Ok((bits, locals[outcome].clone(), residual))
    }

    /// Projective measurement of `targets` in a product basis. Collapses the
    /// state in place and returns one bit per target.
    pub fn measure<R: Rng + ?Sized>(&mut self, targets: &[usize], basis: MeasBasis, rng: &mut R) -> Result<Vec<u8>> {
        let (bits, local, residual) = self.measure_inner(targets, basis, rng)?;
        let rest = self.rest_of(targets);
        self.reassemble(targets, &rest, &local, &residual);
        Ok(bits)
    }

    /// Measures one qubit and factors it out: returns the bit and the
    /// normalized state of the remaining qubits (`None` if none remain).
    pub fn measure_detached<R: Rng + ?Sized>(
        mut self,
        target: usize,
        basis: MeasBasis,
        rng: &mut R,
    ) -> Result<(u8, Option<Self>)> {
        let (bits, _, residual) = self.measure_inner(&[target], basis, rng)?;
        Ok((bits[0], self.residual_state(residual, 1)))
    }

    fn residual_state(&self, residual: Vec<Complex<T>>, removed: usize) -> Option<Self> {
        let n = self.num_qubits - removed;
        (n > 0).then_some(Self { num_qubits: n, amps: residual })
    }

    fn bell_pair_check(&self, i: usize, j: usize) -> Result<()> {
        self.check_targets(&[i, j])
    }

    fn bell_local(label: BellLabel) -> Vec<Complex<T>> {
        Self::bell(label).amps
    }

    /// Projection probabilities onto the four Bell states of pair (i, j),
    /// indexed by [`BellLabel::index`].
    pub fn bell_probabilities(&self, i: usize, j: usize) -> Result<[T; 4]> {
        self.bell_pair_check(i, j)?;
        let rest = self.rest_of(&[i, j]);
        let mut out = [T::zero(); 4];
        for label in BellLabel::ALL {
            out[label.index()] = self
                .contract(&[i, j], &rest, &Self::bell_local(label))
                .iter()
                .fold(T::zero(), |acc, a| acc + a.norm_sqr());
        }
        Ok(out)
    }

    fn bell_inner<R: Rng + ?Sized>(&self, i: usize, j: usize, rng: &mut R) -> Result<(BellLabel, Vec<Complex<T>>)> {
        self.bell_pair_check(i, j)?;
        let rest = self.rest_of(&[i, j]);
        let residuals: Vec<_> = BellLabel::ALL
            .iter()
            .map(|&l| self.contract(&[i, j], &rest, &Self::bell_local(l)))
            .collect();
        let weights: Vec<f64> = residuals
            .iter()
            .map(|r| r.iter().map(|a| a.norm_sqr().to_f64_lossy()).sum())
            .collect();
        let k = sample_weighted(&weights, rng);
        let scale = T::from_f64_lossy(weights[k].sqrt().recip());
        Ok((BellLabel::ALL[k], residuals[k].iter().map(|a| *a * scale).collect()))
    }

    /// Bell-basis measurement of pair (i, j). The pair is left in the
    /// measured Bell state and the other qubits collapse consistently.
    pub fn bell_measure<R: Rng + ?Sized>(&mut self, i: usize, j: usize, rng: &mut R) -> Result<BellLabel> {
        let (label, residual) = self.bell_inner(i, j, rng)?;
        let rest = self.rest_of(&[i, j]);
        self.reassemble(&[i, j], &rest, &Self::bell_local(label), &residual);
        Ok(label)
    }

    /// Bell measurement that factors the measured pair out of the register.
    pub fn bell_measure_detached<R: Rng + ?Sized>(
        self,
        i: usize,
        j: usize,
        rng: &mut R,
    ) -> Result<(BellLabel, Option<Self>)> {
        let (label, residual) = self.bell_inner(i, j, rng)?;
        Ok((label, self.residual_state(residual, 2)))
    }

    /// Single-qubit state for diagonal/computational preparation helpers.
    pub fn qubit(alpha: Complex<T>, beta: Complex<T>) -> Result<Self> {
        Self::from_amplitudes(vec![alpha, beta])
    }

    /// |+> (bit 0) or |-> (bit 1).
    pub fn diagonal(bit: u8) -> Self {
        let h = frac_1_sqrt_2::<T>();
        let sign = if bit == 0 { h } else { -h };
        Self { num_qubits: 1, amps: vec![c(h, T::zero()), c(sign, T::zero())] }
    }
}
