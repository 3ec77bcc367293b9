//! Single-photon simulation over spatial modes and discrete time bins.
//!
//! Beam splitter convention: a splitter with reflectivity `R` and
//! transmissivity `T = 1 - R` maps its input amplitudes `(a, b)` to
//! `(sqrt(R) a + i sqrt(T) b, i sqrt(T) a + sqrt(R) b)` on `(out_a, out_b)`,
//! independently in every time bin. Packets only interfere when they share a
//! bin. Absorbers and detectors move amplitude into sink slots; the single
//! Born-rule draw over all sinks happens at readout.

mod element;
mod mode;
mod setups;

pub use element::{run_interferometer, BeamSplitter, Element, InterferometerSpec};
pub use mode::{DetectionRecord, ModeState, Outcome, Slot, Terminal};
pub use setups::{
    ev_round, ev_spec, guo_shi_round, guo_shi_spec, gv_decode, gv_encode, gv_spec, n09_round, n09_spec,
    EvOutcome, GuoShiOutcome, GvLayout, N09Layout, N09Outcome,
};
pub(crate) use setups::{guo_shi_outcome, mach_zehnder};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OpticsError {
    #[error("reflectivity {0} outside (0, 1)")]
    Reflectivity(f64),
    #[error("element `{element}` references undeclared mode `{mode}`")]
    UndeclaredMode { element: String, mode: String },
    #[error("duplicate element id `{0}`")]
    DuplicateElement(String),
    #[error("photon already terminated")]
    Terminal,
    #[error("amplitude left in mode `{0}`, which ends in neither a detector nor a declared exit")]
    Unterminated(String),
    #[error("mode state norm {0} is not 1")]
    NotNormalized(f64),
    #[error("invalid interferometer: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, OpticsError>;
