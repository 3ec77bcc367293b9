use std::collections::BTreeMap;

use num_complex::Complex;
use num_traits::Zero;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{OpticsError, Result};
use crate::num::{sample_weighted, Real};

/// Where a piece of amplitude currently lives: a free spatial mode, or the
/// sink of a detector or inserted absorber.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Slot {
    Mode(String),
    Detector(String),
    Absorber(String),
    Bomb(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Terminal {
    Detected(String),
    AbsorbedAt(String),
    Exploded,
    Exited(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Detector(String),
    Absorbed(String),
    Exploded,
    Exit(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetectionRecord {
    pub outcome: Outcome,
    pub time_bin: u64,
}

/// Single-photon amplitude over (slot, time bin) pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ModeState<T: Real = f64> {
    amps: BTreeMap<(Slot, u64), Complex<T>>,
    terminal: Option<Terminal>,
}

impl<T: Real> ModeState<T> {
    /// One photon in `mode` at time bin `bin`.
    pub fn single(mode: &str, bin: u64) -> Self {
        let mut amps = BTreeMap::new();
        amps.insert((Slot::Mode(mode.to_owned()), bin), Complex::new(T::one(), T::zero()));
        Self { amps, terminal: None }
    }

    /// Builds a state from free-mode amplitudes, rejecting unnormalized input.
    pub fn from_modes<I, S>(entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, u64, Complex<T>)>,
        S: Into<String>,
    {
        let mut amps = BTreeMap::new();
        for (mode, bin, a) in entries {
            *amps.entry((Slot::Mode(mode.into()), bin)).or_insert_with(Complex::zero) += a;
        }
        let s = Self { amps, terminal: None };
        let norm = s.norm_sqr();
        if (norm - T::one()).abs() > T::tolerance() {
            return Err(OpticsError::NotNormalized(norm.to_f64_lossy()));
        }
        Ok(s)
    }

    pub fn terminal(&self) -> Option<&Terminal> {
        self.terminal.as_ref()
    }

    pub fn is_terminal(&self) -> bool {
        self.terminal.is_some()
    }

    pub fn norm_sqr(&self) -> T {
        self.amps.values().fold(T::zero(), |acc, a| acc + a.norm_sqr())
    }

    pub fn amplitude(&self, mode: &str, bin: u64) -> Complex<T> {
        self.amps
            .get(&(Slot::Mode(mode.to_owned()), bin))
            .copied()
            .unwrap_or_else(Complex::zero)
    }

    /// Non-negligible entries, in slot/bin order.
    pub fn entries(&self) -> impl Iterator<Item = (&Slot, u64, Complex<T>)> {
        self.amps.iter().map(|((s, b), a)| (s, *b, *a))
    }

    /// Probability weight currently sitting in `mode` (all bins).
    pub fn mode_weight(&self, mode: &str) -> T {
        self.amps
            .iter()
            .filter(|((s, _), _)| matches!(s, Slot::Mode(m) if m == mode))
            .fold(T::zero(), |acc, (_, a)| acc + a.norm_sqr())
    }

    /// Earliest time bin holding amplitude in any of `modes`.
    pub fn earliest_bin(&self, modes: &[String]) -> Option<u64> {
        self.amps
            .iter()
            .filter(|((s, _), a)| matches!(s, Slot::Mode(m) if modes.contains(m)) && a.norm_sqr() > T::tolerance())
            .map(|((_, b), _)| *b)
            .min()
    }

    pub(crate) fn ensure_live(&self) -> Result<()> {
        if self.is_terminal() {
            Err(OpticsError::Terminal)
        } else {
            Ok(())
        }
    }

    fn add(&mut self, slot: Slot, bin: u64, a: Complex<T>) {
        if a.is_zero() {
            return;
        }
        *self.amps.entry((slot, bin)).or_insert_with(Complex::zero) += a;
    }

    /// Removes and returns all (bin, amplitude) entries of a free mode.
    pub(crate) fn drain_mode(&mut self, mode: &str) -> Vec<(u64, Complex<T>)> {
        let keys: Vec<_> = self
            .amps
            .keys()
            .filter(|(s, _)| matches!(s, Slot::Mode(m) if m == mode))
            .cloned()
            .collect();
        keys.into_iter()
            .map(|k| {
                let a = self.amps.remove(&k).expect("key present");
                (k.1, a)
            })
            .collect()
    }

    pub(crate) fn put(&mut self, slot: Slot, bin: u64, a: Complex<T>) {
        self.add(slot, bin, a);
    }

    /// Shifts every bin of `mode` by `bins`.
    pub fn delay_mode(&mut self, mode: &str, bins: u64) {
        for (b, a) in self.drain_mode(mode) {
            self.add(Slot::Mode(mode.to_owned()), b + bins, a);
        }
    }

    /// Multiplies the amplitude of `mode` by `e^{i phase}`.
    pub fn phase_mode(&mut self, mode: &str, phase: T) {
        let f = Complex::from_polar(T::one(), phase);
        for ((s, _), a) in self.amps.iter_mut() {
            if matches!(s, Slot::Mode(m) if m == mode) {
                *a *= f;
            }
        }
    }

    /// Moves all amplitude of `from` into `to` (mirror / relabel).
    pub fn relabel_mode(&mut self, from: &str, to: &str) {
        for (b, a) in self.drain_mode(from) {
            self.add(Slot::Mode(to.to_owned()), b, a);
        }
    }

    /// Moves the amplitude of `mode` into a sink slot.
    pub fn sink_mode(&mut self, mode: &str, sink: Slot) {
        for (b, a) in self.drain_mode(mode) {
            self.add(sink.clone(), b, a);
        }
    }

    /// Absorbing which-path test on `mode`. With probability equal to the
    /// mode's weight the photon is absorbed at `label` and the state becomes
    /// terminal; otherwise the mode is emptied and the rest renormalized.
    pub fn absorb_now<R: Rng + ?Sized>(&mut self, mode: &str, label: &str, rng: &mut R) -> Result<bool> {
        self.ensure_live()?;
        let w = self.mode_weight(mode).to_f64_lossy();
        if rng.random::<f64>() < w {
            self.amps.clear();
            self.terminal = Some(Terminal::AbsorbedAt(label.to_owned()));
            return Ok(true);
        }
        self.drain_mode(mode);
        let scale = T::from_f64_lossy((1.0 - w).sqrt().recip());
        for a in self.amps.values_mut() {
            *a *= scale;
        }
        Ok(false)
    }

    /// <self|other> over all slots and bins.
    pub fn overlap(&self, other: &Self) -> Complex<T> {
        self.amps.iter().fold(Complex::zero(), |acc, (k, a)| match other.amps.get(k) {
            Some(b) => acc + a.conj() * *b,
            None => acc,
        })
    }

    /// Born-rule outcome distribution at readout. Free-mode amplitude is
    /// reported as `Exit(mode)`; the caller decides whether that is legal.
    pub fn outcome_distribution(&self) -> Vec<(DetectionRecord, T)> {
        let mut merged: BTreeMap<(Slot, u64), T> = BTreeMap::new();
        for (k, a) in &self.amps {
            let p = a.norm_sqr();
            if p > T::zero() {
                *merged.entry(k.clone()).or_insert_with(T::zero) += p;
            }
        }
        // Rounding residue from destructive interference is not an outcome.
        merged
            .into_iter()
            .filter(|(_, p)| *p > T::epsilon())
            .map(|((slot, bin), p)| {
                let outcome = match slot {
                    Slot::Mode(m) => Outcome::Exit(m),
                    Slot::Detector(d) => Outcome::Detector(d),
                    Slot::Absorber(d) => Outcome::Absorbed(d),
                    Slot::Bomb(_) => Outcome::Exploded,
                };
                (DetectionRecord { outcome, time_bin: bin }, p)
            })
            .collect()
    }

    /// Samples one outcome and terminates the photon.
    pub fn readout<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<DetectionRecord> {
        self.ensure_live()?;
        let dist = self.outcome_distribution();
        if dist.is_empty() {
            return Err(OpticsError::NotNormalized(0.0));
        }
        let weights: Vec<f64> = dist.iter().map(|(_, p)| p.to_f64_lossy()).collect();
        let record = dist[sample_weighted(&weights, rng)].0.clone();
        self.terminal = Some(match &record.outcome {
            Outcome::Detector(d) => Terminal::Detected(d.clone()),
            Outcome::Absorbed(d) => Terminal::AbsorbedAt(d.clone()),
            Outcome::Exploded => Terminal::Exploded,
            Outcome::Exit(m) => Terminal::Exited(m.clone()),
        });
        self.amps.clear();
        Ok(record)
    }
}
