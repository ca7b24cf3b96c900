//! Photorefractive resonance shift as a dynamical state.
//!
//! Light circulating in the ring builds a space-charge field that blue-shifts
//! every resonance. The microscopic charge transport is not modeled; the
//! observable chain is a calibrated saturable law from circulating power to
//! shift, first-order rise/fall dynamics, and a self-consistent steady state
//! in which the attack light's own coupling depends on the shift it creates.

use std::path::Path;

use crate::error::Error;
use crate::resonator::{CouplingRates, Detuning, ResonatorGeometry};
use crate::units::{self, TWO_PI};
use crate::Result;

/// Measured 90% response time after attack onset (s).
pub const RESPONSE_SETTLE_90_S: f64 = 2.0;
/// Measured 90% recovery time after attack removal (s).
pub const RECOVERY_SETTLE_90_S: f64 = 2.5;

/// Relative fixed-point tolerance on the converged shift.
pub const EPS_FIXED_POINT: f64 = 1e-6;
/// Integration step used by the steady-state solver (s).
pub const STEADY_STATE_DT_S: f64 = 0.01;
/// Step budget of the steady-state solver.
pub const STEADY_STATE_MAX_STEPS: u64 = 10_000_000;

/// Calibrated power-to-shift law with rise/fall time constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrModel {
    /// Saturated maximum shift (angular, rad/s).
    pub max_shift: f64,
    /// Circulating-power scale of the saturable law (W).
    pub p_ref_w: f64,
    /// Saturation exponent of the law.
    pub exponent: f64,
    /// Buildup time constant (s).
    pub tau_rise_s: f64,
    /// Relaxation time constant (s).
    pub tau_fall_s: f64,
}

impl PrModel {
    pub fn new(
        max_shift: f64,
        p_ref_w: f64,
        exponent: f64,
        tau_rise_s: f64,
        tau_fall_s: f64,
    ) -> Result<Self> {
        if !(max_shift >= 0.0) {
            return Err(Error::domain("maximum shift must be non-negative"));
        }
        if !(p_ref_w > 0.0) {
            return Err(Error::domain("reference power must be positive"));
        }
        if !(exponent > 0.0) {
            return Err(Error::domain("saturation exponent must be positive"));
        }
        if !(tau_rise_s > 0.0 && tau_fall_s > 0.0) {
            return Err(Error::domain("time constants must be positive"));
        }
        Ok(PrModel {
            max_shift,
            p_ref_w,
            exponent,
            tau_rise_s,
            tau_fall_s,
        })
    }

    /// Calibrate against the built-in characterization anchors of the
    /// default device.
    pub fn calibrated_default(
        rates: &CouplingRates,
        geometry: &ResonatorGeometry,
    ) -> Result<PrModel> {
        Ok(calibrate(&characterization_anchors(), rates, geometry)?.model)
    }
}

/// Instantaneous shift state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrState {
    /// Current blue shift (angular, rad/s, >= 0).
    pub shift: f64,
    /// Simulation time (s).
    pub t: f64,
}

impl PrState {
    pub fn cold() -> Self {
        PrState { shift: 0.0, t: 0.0 }
    }

    /// Shift expressed as a wavelength offset (pm) at the device resonance.
    pub fn shift_pm(&self, geometry: &ResonatorGeometry) -> f64 {
        let lambda = units::frequency_to_wavelength(geometry.base_resonance_hz);
        units::frequency_offset_to_wavelength_offset(self.shift / TWO_PI, lambda) / 1e-12
    }
}

/// Saturated target shift (rad/s) for a given circulating power.
pub fn target_shift(p_circ_w: f64, model: &PrModel) -> Result<f64> {
    if p_circ_w < 0.0 {
        return Err(Error::domain("circulating power must be non-negative"));
    }
    if p_circ_w == 0.0 {
        return Ok(0.0);
    }
    let x = (p_circ_w / model.p_ref_w).powf(model.exponent);
    Ok(model.max_shift * x / (1.0 + x))
}

/// Circulating power (W) for on-chip input power at a given detuning of the
/// driven mode: the intracavity energy kappa_drive * P / (d^2 + (kappa/2)^2)
/// converted to power by the round-trip rate (one FSR).
///
/// The drive enters from the channel side, so the drop-bus rate is the
/// input coupling here.
pub fn circulating_power(
    p_in_w: f64,
    detuning: Detuning,
    rates: &CouplingRates,
    geometry: &ResonatorGeometry,
) -> f64 {
    let d = detuning.rad_per_s();
    let half = rates.half_linewidth();
    let energy = rates.drop_bus * p_in_w / (d * d + half * half);
    energy * geometry.fsr_hz
}

fn drive_detuning(
    cold_detuning: Detuning,
    shift: f64,
) -> Detuning {
    Detuning::from_angular(cold_detuning.rad_per_s() + shift)
}

fn shift_target_at(
    shift: f64,
    p_in_w: f64,
    cold_detuning: Detuning,
    model: &PrModel,
    rates: &CouplingRates,
    geometry: &ResonatorGeometry,
) -> Result<f64> {
    let p_circ = circulating_power(p_in_w, drive_detuning(cold_detuning, shift), rates, geometry);
    target_shift(p_circ, model)
}

/// Advance the shift by one explicit first-order step: d(shift)/dt =
/// (target - shift)/tau, with tau picked by the direction of motion.
pub fn step(
    state: &PrState,
    p_in_w: f64,
    attack_freq_hz: f64,
    dt_s: f64,
    model: &PrModel,
    rates: &CouplingRates,
    geometry: &ResonatorGeometry,
) -> Result<PrState> {
    if !(dt_s > 0.0) {
        return Err(Error::validation("step size must be positive"));
    }
    if p_in_w < 0.0 {
        return Err(Error::domain("input power must be non-negative"));
    }
    let cold = geometry.detuning_from_nearest_mode(attack_freq_hz, 0.0);
    let target = shift_target_at(state.shift, p_in_w, cold, model, rates, geometry)?;
    let tau = if target > state.shift {
        model.tau_rise_s
    } else {
        model.tau_fall_s
    };
    if dt_s > tau / 10.0 {
        return Err(Error::validation(format!(
            "step {dt_s} s exceeds a tenth of the active time constant {tau} s"
        )));
    }
    let shift = (state.shift + dt_s * (target - state.shift) / tau).max(0.0);
    Ok(PrState {
        shift,
        t: state.t + dt_s,
    })
}

/// Steady state reached by forward integration from the cold cavity.
///
/// Integrates until the shift velocity falls below max_shift * 1e-6 per
/// second; the result then satisfies the fixed-point equation to within the
/// relative tolerance [`EPS_FIXED_POINT`].
pub fn steady_state(
    p_in_w: f64,
    attack_freq_hz: f64,
    model: &PrModel,
    rates: &CouplingRates,
    geometry: &ResonatorGeometry,
) -> Result<PrState> {
    if p_in_w < 0.0 {
        return Err(Error::domain("input power must be non-negative"));
    }
    if p_in_w == 0.0 || model.max_shift == 0.0 {
        return Ok(PrState::cold());
    }
    let cold = geometry.detuning_from_nearest_mode(attack_freq_hz, 0.0);
    let eps_velocity = model.max_shift * 1e-6;
    let dt = STEADY_STATE_DT_S;
    let mut state = PrState::cold();
    let mut recent_lo = f64::INFINITY;
    let mut recent_hi = f64::NEG_INFINITY;
    for n in 0..STEADY_STATE_MAX_STEPS {
        let target = shift_target_at(state.shift, p_in_w, cold, model, rates, geometry)?;
        let tau = if target > state.shift {
            model.tau_rise_s
        } else {
            model.tau_fall_s
        };
        let velocity = (target - state.shift) / tau;
        // stop on the slow-velocity criterion, but only once the residual
        // also meets the relative fixed-point tolerance
        let residual_ok = (target - state.shift).abs()
            <= EPS_FIXED_POINT * state.shift.max(1e-9 * model.max_shift);
        if velocity.abs() < eps_velocity && residual_ok {
            return Ok(state);
        }
        state.shift = (state.shift + dt * velocity).max(0.0);
        state.t += dt;
        // trailing window for the non-convergence diagnostic
        if n >= STEADY_STATE_MAX_STEPS - 1000 {
            recent_lo = recent_lo.min(state.shift);
            recent_hi = recent_hi.max(state.shift);
        }
    }
    Err(Error::NonConvergence {
        context: "photorefractive steady state".into(),
        steps: STEADY_STATE_MAX_STEPS,
        bracket: (recent_lo, recent_hi),
    })
}

/// Damped fixed-point iteration from the cold state; an independent route to
/// the same self-consistent shift, used to cross-check the time-forward
/// solver.
pub fn damped_fixed_point(
    p_in_w: f64,
    attack_freq_hz: f64,
    model: &PrModel,
    rates: &CouplingRates,
    geometry: &ResonatorGeometry,
) -> Result<f64> {
    if p_in_w < 0.0 {
        return Err(Error::domain("input power must be non-negative"));
    }
    if p_in_w == 0.0 || model.max_shift == 0.0 {
        return Ok(0.0);
    }
    let cold = geometry.detuning_from_nearest_mode(attack_freq_hz, 0.0);
    let damping = 0.5;
    let mut shift = 0.0f64;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    const MAX_ITERS: u64 = 200_000;
    for n in 0..MAX_ITERS {
        let target = shift_target_at(shift, p_in_w, cold, model, rates, geometry)?;
        let next = (shift + damping * (target - shift)).max(0.0);
        let tol = EPS_FIXED_POINT * shift.max(1e-9 * model.max_shift);
        if (next - shift).abs() < damping * tol {
            return Ok(next);
        }
        shift = next;
        if n >= MAX_ITERS - 100 {
            lo = lo.min(shift);
            hi = hi.max(shift);
        }
    }
    Err(Error::NonConvergence {
        context: "damped fixed-point iteration".into(),
        steps: MAX_ITERS,
        bracket: (lo, hi),
    })
}

/// One calibration observation at a known resonant on-chip attack power.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationAnchor {
    pub on_chip_power_w: f64,
    pub observed: AnchorObservation,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AnchorObservation {
    /// Resonance wavelength shift (pm) at the device resonance.
    ShiftPm(f64),
    /// CW signal attenuation (dB) relative to the cold cavity.
    CwAttenuationDb(f64),
}

impl CalibrationAnchor {
    /// The converged shift (rad/s) this anchor pins. Attenuation anchors are
    /// inverted through the Lorentzian: shift = (kappa/2) sqrt(10^(A/10)-1).
    pub fn shift_rad(&self, rates: &CouplingRates, geometry: &ResonatorGeometry) -> Result<f64> {
        match self.observed {
            AnchorObservation::ShiftPm(pm) => {
                if !(pm > 0.0) {
                    return Err(Error::validation("anchor shift must be positive"));
                }
                let lambda = units::frequency_to_wavelength(geometry.base_resonance_hz);
                Ok(TWO_PI * units::wavelength_offset_to_frequency_offset(pm * 1e-12, lambda))
            }
            AnchorObservation::CwAttenuationDb(db) => {
                if !(db > 0.0) {
                    return Err(Error::validation("anchor attenuation must be positive"));
                }
                Ok(rates.half_linewidth() * (units::db_to_ratio(db) - 1.0).sqrt())
            }
        }
    }
}

/// The measured anchors of the fabricated device: a 34.5 pm shift at 0 dBm
/// resonant attack power and 14.02 dB CW signal attenuation at 10 dBm.
pub fn characterization_anchors() -> Vec<CalibrationAnchor> {
    vec![
        CalibrationAnchor {
            on_chip_power_w: units::dbm_to_watts(0.0),
            observed: AnchorObservation::ShiftPm(34.5),
        },
        CalibrationAnchor {
            on_chip_power_w: units::dbm_to_watts(10.0),
            observed: AnchorObservation::CwAttenuationDb(14.02),
        },
    ]
}

/// Calibration output: the fitted model plus per-anchor relative residuals
/// of the full steady-state solve.
#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    pub model: PrModel,
    pub residuals: Vec<f64>,
    pub quality_warning: bool,
}

const RESIDUAL_WARN_THRESHOLD: f64 = 0.05;

/// Fit (max_shift, p_ref, exponent) so that the steady state reproduces
/// every anchor.
///
/// At a converged anchor the law is linear in (1/max_shift,
/// p_ref^g / max_shift) against the anchor's circulating power, so for a
/// fixed exponent the fit is a linear least-squares solve; with exactly two
/// anchors the exponent stays at 1, with more it is found by a golden-section
/// search over the residual. Time constants come from the measured 90%
/// response and recovery times via tau = t90 / ln 10.
pub fn calibrate(
    anchors: &[CalibrationAnchor],
    rates: &CouplingRates,
    geometry: &ResonatorGeometry,
) -> Result<Calibration> {
    if anchors.len() < 2 {
        return Err(Error::validation(
            "calibration needs at least two anchors at distinct powers",
        ));
    }
    for (i, a) in anchors.iter().enumerate() {
        if !(a.on_chip_power_w > 0.0) {
            return Err(Error::validation("anchor powers must be positive"));
        }
        for b in &anchors[i + 1..] {
            if (a.on_chip_power_w - b.on_chip_power_w).abs()
                < 1e-12 * a.on_chip_power_w.max(b.on_chip_power_w)
            {
                return Err(Error::validation("anchor powers must be distinct"));
            }
        }
    }

    // circulating power at each converged anchor (resonant drive detunes
    // itself by exactly the shift it produced)
    let mut points = Vec::with_capacity(anchors.len());
    for a in anchors {
        let shift = a.shift_rad(rates, geometry)?;
        let p_circ = circulating_power(
            a.on_chip_power_w,
            Detuning::from_angular(shift),
            rates,
            geometry,
        );
        points.push((p_circ, shift));
    }

    let fit_for = |exponent: f64| -> Result<(f64, f64, f64)> {
        // least squares on 1/shift = u + w * p_circ^(-g)
        let (mut szz, mut sz, mut sy, mut szy) = (0.0, 0.0, 0.0, 0.0);
        let n = points.len() as f64;
        for &(p, shift) in &points {
            let z = p.powf(-exponent);
            let y = 1.0 / shift;
            szz += z * z;
            sz += z;
            sy += y;
            szy += z * y;
        }
        let det = n * szz - sz * sz;
        if det.abs() < f64::EPSILON * n * szz {
            return Err(Error::validation("anchor powers too close to separate"));
        }
        let u = (sy * szz - sz * szy) / det;
        let w = (n * szy - sz * sy) / det;
        let mut sse = 0.0;
        for &(p, shift) in &points {
            let r = u + w * p.powf(-exponent) - 1.0 / shift;
            sse += r * r;
        }
        Ok((u, w, sse))
    };

    let exponent = if anchors.len() == 2 {
        1.0
    } else {
        golden_section_min(
            |g| fit_for(g).map(|(_, _, sse)| sse).unwrap_or(f64::INFINITY),
            0.25,
            2.5,
            1e-6,
        )
    };
    let (u, w, _) = fit_for(exponent)?;
    if !(u > 0.0 && w > 0.0) {
        return Err(Error::validation(
            "anchors are not representable by a saturable shift law",
        ));
    }
    let model = PrModel::new(
        1.0 / u,
        (w / u).powf(1.0 / exponent),
        exponent,
        RESPONSE_SETTLE_90_S / std::f64::consts::LN_10,
        RECOVERY_SETTLE_90_S / std::f64::consts::LN_10,
    )?;

    let mut residuals = Vec::with_capacity(anchors.len());
    for (a, &(_, shift)) in anchors.iter().zip(&points) {
        let solved = steady_state(
            a.on_chip_power_w,
            geometry.base_resonance_hz,
            &model,
            rates,
            geometry,
        )?;
        residuals.push((solved.shift - shift).abs() / shift);
    }
    let quality_warning = residuals.iter().any(|r| *r > RESIDUAL_WARN_THRESHOLD);
    Ok(Calibration {
        model,
        residuals,
        quality_warning,
    })
}

fn golden_section_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Load calibration anchors from a CSV file with the exact header
/// `power_dbm,kind,value`, where kind is `shift_pm` or `atten_db_cw`.
pub fn load_anchors_csv(path: &Path) -> Result<Vec<CalibrationAnchor>> {
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| Error::validation(format!("cannot read anchors file: {e}")))?;
    let headers = reader
        .headers()
        .map_err(|e| Error::validation(format!("cannot read anchors header: {e}")))?
        .clone();
    let expected = ["power_dbm", "kind", "value"];
    let got: Vec<&str> = headers.iter().collect();
    if got != expected {
        return Err(Error::validation(format!(
            "anchors CSV header must be exactly {expected:?}, got {got:?}"
        )));
    }
    let mut anchors = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record =
            record.map_err(|e| Error::validation(format!("anchors row {}: {e}", i + 2)))?;
        let power_dbm: f64 = record[0]
            .trim()
            .parse()
            .map_err(|_| Error::validation(format!("anchors row {}: bad power_dbm", i + 2)))?;
        let value: f64 = record[2]
            .trim()
            .parse()
            .map_err(|_| Error::validation(format!("anchors row {}: bad value", i + 2)))?;
        let observed = match record[1].trim() {
            "shift_pm" => AnchorObservation::ShiftPm(value),
            "atten_db_cw" => AnchorObservation::CwAttenuationDb(value),
            other => {
                return Err(Error::validation(format!(
                    "anchors row {}: unknown kind {other:?} (expected shift_pm or atten_db_cw)",
                    i + 2
                )))
            }
        };
        anchors.push(CalibrationAnchor {
            on_chip_power_w: units::dbm_to_watts(power_dbm),
            observed,
        });
    }
    Ok(anchors)
}
