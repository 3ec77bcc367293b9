use std::collections::BTreeSet;

use num_complex::Complex;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{DetectionRecord, ModeState, OpticsError, Outcome, Result, Slot};
use crate::num::Real;

/// Two-port splitter with reflectivity `R` on the same-side path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamSplitter<T: Real = f64> {
    reflectivity: T,
}

impl<T: Real> BeamSplitter<T> {
    pub fn new(reflectivity: T) -> Result<Self> {
        if reflectivity > T::zero() && reflectivity < T::one() {
            Ok(Self { reflectivity })
        } else {
            Err(OpticsError::Reflectivity(reflectivity.to_f64_lossy()))
        }
    }

    pub fn reflectivity(&self) -> T {
        self.reflectivity
    }

    pub fn transmissivity(&self) -> T {
        T::one() - self.reflectivity
    }

    /// Row-major 2x2 transform on (a, b).
    pub fn matrix(&self) -> [[Complex<T>; 2]; 2] {
        let r = Complex::new(self.reflectivity.sqrt(), T::zero());
        let t = Complex::new(T::zero(), self.transmissivity().sqrt());
        [[r, t], [t, r]]
    }

    pub fn apply(&self, a: Complex<T>, b: Complex<T>) -> (Complex<T>, Complex<T>) {
        let m = self.matrix();
        (m[0][0] * a + m[0][1] * b, m[1][0] * a + m[1][1] * b)
    }
}

/// Optical element, applied in list order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", bound = "T: Real")]
pub enum Element<T: Real = f64> {
    BeamSplitter {
        id: String,
        reflectivity: T,
        in_a: String,
        in_b: String,
        out_a: String,
        out_b: String,
    },
    /// Relabels `from` as `to`.
    Mirror { id: String, from: String, to: String },
    PhaseShift { id: String, mode: String, phase: T },
    Delay { id: String, mode: String, bins: u64 },
    /// Channel crossing: shifts the listed modes by the spec's transit time.
    Transit { id: String, modes: Vec<String> },
    Absorber {
        id: String,
        mode: String,
        inserted: bool,
        #[serde(default)]
        explosive: bool,
    },
    Detector { id: String, mode: String },
}

impl<T: Real> Element<T> {
    pub fn id(&self) -> &str {
        match self {
            Element::BeamSplitter { id, .. }
            | Element::Mirror { id, .. }
            | Element::PhaseShift { id, .. }
            | Element::Delay { id, .. }
            | Element::Transit { id, .. }
            | Element::Absorber { id, .. }
            | Element::Detector { id, .. } => id,
        }
    }

    pub fn modes(&self) -> Vec<&str> {
        match self {
            Element::BeamSplitter { in_a, in_b, out_a, out_b, .. } => vec![in_a, in_b, out_a, out_b],
            Element::Mirror { from, to, .. } => vec![from, to],
            Element::Transit { modes, .. } => modes.iter().map(String::as_str).collect(),
            Element::PhaseShift { mode, .. }
            | Element::Delay { mode, .. }
            | Element::Absorber { mode, .. }
            | Element::Detector { mode, .. } => vec![mode],
        }
    }

    pub fn beam_splitter(id: &str, reflectivity: T, ins: (&str, &str), outs: (&str, &str)) -> Self {
        Element::BeamSplitter {
            id: id.into(),
            reflectivity,
            in_a: ins.0.into(),
            in_b: ins.1.into(),
            out_a: outs.0.into(),
            out_b: outs.1.into(),
        }
    }

    pub fn delay(id: &str, mode: &str, bins: u64) -> Self {
        Element::Delay { id: id.into(), mode: mode.into(), bins }
    }

    pub fn phase(id: &str, mode: &str, phase: T) -> Self {
        Element::PhaseShift { id: id.into(), mode: mode.into(), phase }
    }

    pub fn absorber(id: &str, mode: &str, inserted: bool) -> Self {
        Element::Absorber { id: id.into(), mode: mode.into(), inserted, explosive: false }
    }

    pub fn bomb(id: &str, mode: &str, active: bool) -> Self {
        Element::Absorber { id: id.into(), mode: mode.into(), inserted: active, explosive: true }
    }

    pub fn detector(id: &str, mode: &str) -> Self {
        Element::Detector { id: id.into(), mode: mode.into() }
    }
}

impl<T: Real> ModeState<T> {
    /// Applies one element. `transit` is the channel time used by
    /// [`Element::Transit`].
    pub fn apply(&mut self, element: &Element<T>, transit: u64) -> Result<()> {
        self.ensure_live()?;
        match element {
            Element::BeamSplitter { reflectivity, in_a, in_b, out_a, out_b, .. } => {
                let bs = BeamSplitter::new(*reflectivity)?;
                let a = self.drain_mode(in_a);
                let b = self.drain_mode(in_b);
                let bins: BTreeSet<u64> = a.iter().chain(&b).map(|(t, _)| *t).collect();
                let find = |v: &[(u64, Complex<T>)], t: u64| {
                    v.iter().find(|(b, _)| *b == t).map(|(_, x)| *x).unwrap_or_default()
                };
                for t in bins {
                    let (oa, ob) = bs.apply(find(&a, t), find(&b, t));
                    self.put(Slot::Mode(out_a.clone()), t, oa);
                    self.put(Slot::Mode(out_b.clone()), t, ob);
                }
            }
            Element::Mirror { from, to, .. } => self.relabel_mode(from, to),
            Element::PhaseShift { mode, phase, .. } => self.phase_mode(mode, *phase),
            Element::Delay { mode, bins, .. } => self.delay_mode(mode, *bins),
            Element::Transit { modes, .. } => {
                for m in modes {
                    self.delay_mode(m, transit);
                }
            }
            Element::Absorber { id, mode, inserted, explosive } => {
                if *inserted {
                    let sink = if *explosive { Slot::Bomb(id.clone()) } else { Slot::Absorber(id.clone()) };
                    self.sink_mode(mode, sink);
                }
            }
            Element::Detector { id, mode } => self.sink_mode(mode, Slot::Detector(id.clone())),
        }
        Ok(())
    }

    pub fn apply_all(&mut self, elements: &[Element<T>], transit: u64) -> Result<()> {
        elements.iter().try_for_each(|e| self.apply(e, transit))
    }
}

/// Ordered element list plus the declared modes, exits, and channel transit
/// time in bins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct InterferometerSpec<T: Real = f64> {
    pub modes: Vec<String>,
    #[serde(default)]
    pub exits: Vec<String>,
    #[serde(default)]
    pub transit: u64,
    pub elements: Vec<Element<T>>,
}

impl<T: Real> InterferometerSpec<T> {
    pub fn validate(&self) -> Result<()> {
        let mut ids = BTreeSet::new();
        for e in &self.elements {
            if !ids.insert(e.id()) {
                return Err(OpticsError::DuplicateElement(e.id().to_owned()));
            }
            for m in e.modes() {
                if !self.modes.iter().any(|d| d == m) {
                    return Err(OpticsError::UndeclaredMode { element: e.id().into(), mode: m.into() });
                }
            }
            if let Element::BeamSplitter { reflectivity, .. } = e {
                BeamSplitter::new(*reflectivity)?;
            }
        }
        if let Some(x) = self.exits.iter().find(|x| !self.modes.contains(x)) {
            return Err(OpticsError::UndeclaredMode { element: "exits".into(), mode: x.clone() });
        }
        Ok(())
    }

    /// Propagates `input` through every element without sampling.
    pub fn propagate(&self, input: &ModeState<T>) -> Result<ModeState<T>> {
        self.validate()?;
        for (slot, _, _) in input.entries() {
            if let Slot::Mode(m) = slot {
                if !self.modes.contains(m) {
                    return Err(OpticsError::UndeclaredMode { element: "input".into(), mode: m.clone() });
                }
            }
        }
        let mut state = input.clone();
        state.apply_all(&self.elements, self.transit)?;
        Ok(state)
    }

    /// Exact outcome distribution; fails if amplitude is stranded in a mode
    /// that is neither detected nor a declared exit.
    pub fn distribution(&self, input: &ModeState<T>) -> Result<Vec<(DetectionRecord, T)>> {
        let dist = self.propagate(input)?.outcome_distribution();
        for (rec, p) in &dist {
            if let Outcome::Exit(m) = &rec.outcome {
                if !self.exits.contains(m) && *p > T::tolerance() {
                    return Err(OpticsError::Unterminated(m.clone()));
                }
            }
        }
        Ok(dist)
    }

    pub fn from_toml(text: &str) -> std::result::Result<Self, toml::de::Error> {
        toml::from_str(text)
    }
}

/// Propagates `input` through `spec` and samples one outcome by the Born rule.
pub fn run_interferometer<T: Real, R: Rng + ?Sized>(
    spec: &InterferometerSpec<T>,
    input: &ModeState<T>,
    rng: &mut R,
) -> Result<DetectionRecord> {
    spec.distribution(input)?;
    let mut state = spec.propagate(input)?;
    state.readout(rng)
}
