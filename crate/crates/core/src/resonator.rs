//! Steady-state add-drop micro-ring model.
//!
//! Single-pole coupled-mode theory: each resonance is a Lorentzian with total
//! decay rate kappa split between intrinsic loss and the two bus couplers.
//! The drop-port amplitude is sqrt(k_in * k_drop) / (i*detuning + kappa/2),
//! the through-port amplitude 1 - k_in / (i*detuning + kappa/2). All
//! resonances share one rate triple and shift rigidly under the
//! photorefractive blue shift.

use num_complex::Complex64;

use crate::error::Error;
use crate::units::{self, TWO_PI};
use crate::Result;

/// Decay-rate triple of one resonance family (all angular, rad/s).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingRates {
    /// Intrinsic (material/scattering) decay rate.
    pub intrinsic: f64,
    /// External decay rate into the input bus (the signal's entry side).
    pub input_bus: f64,
    /// External decay rate into the drop bus (the side facing the channel).
    pub drop_bus: f64,
}

impl CouplingRates {
    pub fn new(intrinsic: f64, input_bus: f64, drop_bus: f64) -> Result<Self> {
        if !(intrinsic >= 0.0 && input_bus >= 0.0 && drop_bus >= 0.0) {
            return Err(Error::domain("decay rates must be non-negative"));
        }
        let total = intrinsic + input_bus + drop_bus;
        if !(total > 0.0) {
            return Err(Error::domain("total decay rate must be positive"));
        }
        Ok(CouplingRates {
            intrinsic,
            input_bus,
            drop_bus,
        })
    }

    /// Total decay rate kappa (rad/s).
    pub fn total(&self) -> f64 {
        self.intrinsic + self.input_bus + self.drop_bus
    }

    /// Half linewidth kappa/2 (rad/s) — the Lorentzian HWHM in angular units.
    pub fn half_linewidth(&self) -> f64 {
        0.5 * self.total()
    }

    /// Loaded quality factor at the given resonance frequency (rad/s).
    pub fn loaded_q(&self, omega0: f64) -> f64 {
        omega0 / self.total()
    }
}

/// How a loaded-Q total decay rate is split among the three channels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SplitPolicy {
    /// kappa0 = kappa1 = kappa2 = kappa/3.
    EqualThirds,
    /// Explicit fractions (intrinsic, input bus, drop bus); must sum to 1.
    Custom {
        intrinsic: f64,
        input_bus: f64,
        drop_bus: f64,
    },
}

/// Build the rate triple from a loaded Q and resonance frequency (rad/s).
pub fn rates_from_q(q_loaded: f64, omega0: f64, policy: SplitPolicy) -> Result<CouplingRates> {
    if !(q_loaded > 0.0) {
        return Err(Error::domain("loaded Q must be positive"));
    }
    if !(omega0 > 0.0) {
        return Err(Error::domain("resonance frequency must be positive"));
    }
    let kappa = omega0 / q_loaded;
    let (f0, f1, f2) = match policy {
        SplitPolicy::EqualThirds => (1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0),
        SplitPolicy::Custom {
            intrinsic,
            input_bus,
            drop_bus,
        } => {
            if intrinsic < 0.0 || input_bus < 0.0 || drop_bus < 0.0 {
                return Err(Error::validation("split fractions must be non-negative"));
            }
            let sum = intrinsic + input_bus + drop_bus;
            if (sum - 1.0).abs() > 1e-9 {
                return Err(Error::validation(format!(
                    "split fractions must sum to 1 (got {sum})"
                )));
            }
            (intrinsic, input_bus, drop_bus)
        }
    };
    CouplingRates::new(kappa * f0, kappa * f1, kappa * f2)
}

/// Resonance grid of the ring: one anchor mode plus an FSR-periodic comb.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResonatorGeometry {
    /// Optical frequency (Hz) of the anchor mode — the mode the attack
    /// characterization is centered on.
    pub base_resonance_hz: f64,
    /// Free spectral range (Hz).
    pub fsr_hz: f64,
    /// Signed number of FSRs from the anchor mode to the signal mode.
    pub signal_mode_offset: i32,
}

impl ResonatorGeometry {
    pub fn new(base_resonance_hz: f64, fsr_hz: f64, signal_mode_offset: i32) -> Result<Self> {
        if !(base_resonance_hz > 0.0) {
            return Err(Error::domain("base resonance must be positive"));
        }
        if !(fsr_hz > 0.0) {
            return Err(Error::domain("FSR must be positive"));
        }
        Ok(ResonatorGeometry {
            base_resonance_hz,
            fsr_hz,
            signal_mode_offset,
        })
    }

    /// Default fabricated device: anchor resonance at 1548.292 nm, 50 GHz
    /// FSR, signal mode six FSRs to the red (near 1550.68 nm).
    pub fn default_device() -> Self {
        ResonatorGeometry {
            base_resonance_hz: units::wavelength_to_frequency(1548.292e-9),
            fsr_hz: 50e9,
            signal_mode_offset: -6,
        }
    }

    /// Frequency (Hz) of the signal mode.
    pub fn signal_resonance_hz(&self) -> f64 {
        self.base_resonance_hz + f64::from(self.signal_mode_offset) * self.fsr_hz
    }

    /// Index (in FSRs from the anchor mode) of the resonance nearest to a
    /// given frequency, on the unshifted comb.
    pub fn nearest_mode_index(&self, freq_hz: f64) -> i64 {
        ((freq_hz - self.base_resonance_hz) / self.fsr_hz).round() as i64
    }

    /// Detuning of a resonance (shifted by `pr_shift`) from an input light
    /// frequency, for the comb mode nearest to that input.
    pub fn detuning_from_nearest_mode(&self, freq_hz: f64, pr_shift_rad: f64) -> Detuning {
        let m = self.nearest_mode_index(freq_hz) as f64;
        let mode_hz = self.base_resonance_hz + m * self.fsr_hz;
        Detuning::new(mode_hz, freq_hz, pr_shift_rad)
    }
}

/// Signed angular detuning between a (shifted) resonance and the input
/// light: mode - input + pr_shift, with the photorefractive shift always
/// raising the effective resonance frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detuning(f64);

impl Detuning {
    /// From components in Hz plus the angular PR shift (rad/s, >= 0).
    pub fn new(mode_hz: f64, input_hz: f64, pr_shift_rad: f64) -> Self {
        Detuning(TWO_PI * (mode_hz - input_hz) + pr_shift_rad)
    }

    pub fn from_angular(rad_per_s: f64) -> Self {
        Detuning(rad_per_s)
    }

    pub fn rad_per_s(&self) -> f64 {
        self.0
    }

    pub fn hz(&self) -> f64 {
        self.0 / TWO_PI
    }
}

fn lorentzian_pole(detuning: Detuning, rates: &CouplingRates) -> Complex64 {
    Complex64::new(rates.half_linewidth(), detuning.rad_per_s())
}

/// Power transmission input port -> drop port at a given detuning.
pub fn drop_transmission(detuning: Detuning, rates: &CouplingRates) -> f64 {
    let amp = (rates.input_bus * rates.drop_bus).sqrt() / lorentzian_pole(detuning, rates);
    amp.norm_sqr()
}

/// Power transmission input port -> through port at a given detuning.
pub fn through_transmission(detuning: Detuning, rates: &CouplingRates) -> f64 {
    let amp = Complex64::new(1.0, 0.0) - rates.input_bus / lorentzian_pole(detuning, rates);
    amp.norm_sqr()
}

/// One sampled point of a transmission spectrum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumPoint {
    pub freq_hz: f64,
    pub drop: f64,
    pub through: f64,
}

/// Sample drop and through transmission over a frequency grid. Every comb
/// resonance is shifted rigidly by `pr_shift_rad`; each grid point sees the
/// mode nearest to it.
pub fn spectrum(
    grid_hz: &[f64],
    rates: &CouplingRates,
    geometry: &ResonatorGeometry,
    pr_shift_rad: f64,
) -> Result<Vec<SpectrumPoint>> {
    if grid_hz.is_empty() {
        return Err(Error::validation("spectrum grid must not be empty"));
    }
    Ok(grid_hz
        .iter()
        .map(|&nu| {
            let d = geometry.detuning_from_nearest_mode(nu, pr_shift_rad);
            SpectrumPoint {
                freq_hz: nu,
                drop: drop_transmission(d, rates),
                through: through_transmission(d, rates),
            }
        })
        .collect())
}
