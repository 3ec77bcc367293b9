pub mod adversaries;
pub mod engine;
pub mod num;
pub mod optics;
pub mod protocols;
pub mod qcore;
pub mod metrics;

pub use num::Real;

pub type StateVectorF64 = qcore::StateVector<f64>;
pub type StateVectorF32 = qcore::StateVector<f32>;
pub type ModeStateF64 = optics::ModeState<f64>;
pub type ModeStateF32 = optics::ModeState<f32>;
