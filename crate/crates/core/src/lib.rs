//! Physics core for a micro-ring "optical fuse" guarding a QKD transmitter.
//!
//! The device is an add-drop micro-ring resonator in thin-film lithium
//! niobate. Injected attack light builds up in the ring, drives the
//! photorefractive effect, and blue-shifts every resonance; the shifted
//! lineshape attenuates the quantum signal and starves the secret key rate,
//! while off-resonant attack light is rejected by the filter response.
//!
//! Modules follow the physical chain:
//!
//! * [`resonator`] — steady-state lineshapes at the drop and through ports.
//! * [`sources`] — spectral models of signal/attack light and the effective
//!   transmission of a finite-linewidth source.
//! * [`photorefractive`] — the calibrated power-to-shift law, rise/fall
//!   dynamics, and the self-consistent steady state.
//! * [`attacks`] — scenario engine: static attacks, inverse power solves,
//!   wavelength sweeps, time-series runs.
//! * [`qkd`] — three-intensity decoy-state BB84 gains, bounds, and key rate.

pub mod attacks;
pub mod error;
pub mod photorefractive;
pub mod qkd;
pub mod resonator;
pub mod sources;
pub mod units;

pub use error::Error;

/// Convenience result alias used across the crate.
pub type Result<T> = std::result::Result<T, Error>;
