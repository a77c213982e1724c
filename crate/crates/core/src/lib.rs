//! Simulation and key-rate toolkit for three-pulse differential-phase-shift
//! measurement-device-independent QKD.
//!
//! Numerical code is generic over [`scalar::Real`] (`f32` or `f64`); the
//! aliases below fix it to `f64`.

pub mod asymptotic;
pub mod channel;
pub mod decoy;
pub mod error;
pub mod finite_key;
pub mod fock;
pub mod montecarlo;
pub mod noise;
pub mod quadrature;
pub mod scalar;
pub mod sifting;
pub mod special;
pub mod verify;

pub use error::{Error, Result};
pub use fock::{Filter, ModeIndex, Pattern, Port, PortBasis};
pub use montecarlo::{run_trials, EmpiricalEstimates, TrialRecord};
pub use sifting::{DetectionOutcome, Detector, KeyPhase, SiftDecision};

pub type FockState = fock::TwoPartyFockState<f64>;
pub type Phases = fock::PhaseSetting<f64>;
pub type Channel = channel::ChannelParams<f64>;
pub type Noise = noise::NoiseMatrix<f64>;
pub type Security = finite_key::SecurityParams<f64>;
pub type AsymptoticReport = asymptotic::AsymptoticReport<f64>;
pub type DecoyReport = decoy::DecoyReport<f64>;
pub type SlicedGain = decoy::SlicedGain<f64>;
pub type SiftingEnumeration = sifting::SiftingEnumeration<f64>;
