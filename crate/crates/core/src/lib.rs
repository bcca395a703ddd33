//! Emitter population dynamics in a semi-infinite waveguide with coherent
//! time-delayed feedback, driven by few-photon Fock pulses.
//!
//! Time is measured in units of `1/Γ` unless a different decay rate is set in
//! [`hierarchy::SystemParams`]. The free parameters are the delay `τ`, the
//! feedback phase `φ = ω₀τ`, an optional pure-dephasing rate and the photon
//! number of the pulse.

pub mod error;
pub mod experiments;
pub mod hierarchy;
pub mod oracle;
pub mod pulse;
pub mod sum;
pub mod timegrid;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
