//! Three-intensity decoy-state BB84 rate model.
//!
//! Asymptotic (infinite-key) analysis: per-intensity gains and error rates
//! from a loss/dark-count/misalignment channel, the standard three-intensity
//! bounds on the single-photon yield and error, and the secret key rate
//! R = q * p_mu * (-Q_mu f H2(E_mu) + Q_1 (1 - H2(e_1))), clamped at zero.

use crate::attacks::PhysicsContext;
use crate::error::Error;
use crate::sources::{self, Port, SourceSpectrum};
use crate::Result;

/// Mean photon numbers and emission probabilities of the three intensities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecoyParams {
    pub mu: f64,
    pub nu: f64,
    pub vacuum: f64,
    pub p_mu: f64,
    pub p_nu: f64,
    pub p_vacuum: f64,
}

impl DecoyParams {
    pub fn new(
        mu: f64,
        nu: f64,
        vacuum: f64,
        p_mu: f64,
        p_nu: f64,
        p_vacuum: f64,
    ) -> Result<Self> {
        if !(mu > nu && nu > vacuum && vacuum >= 0.0) {
            return Err(Error::validation(
                "intensities must satisfy mu > nu > vacuum >= 0",
            ));
        }
        if !(p_mu > 0.0 && p_nu > 0.0 && p_vacuum > 0.0) {
            return Err(Error::validation("emission probabilities must be positive"));
        }
        let sum = p_mu + p_nu + p_vacuum;
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::validation(format!(
                "emission probabilities must sum to 1 (got {sum})"
            )));
        }
        Ok(DecoyParams {
            mu,
            nu,
            vacuum,
            p_mu,
            p_nu,
            p_vacuum,
        })
    }

    /// Operating point of the protected system: mu 0.6, nu 0.2, vacuum 0,
    /// probabilities 0.8824 / 0.0588 / 0.0588.
    pub fn default_three_intensity() -> Self {
        DecoyParams {
            mu: 0.6,
            nu: 0.2,
            vacuum: 0.0,
            p_mu: 0.8824,
            p_nu: 0.0588,
            p_vacuum: 0.0588,
        }
    }
}

/// Channel and receiver model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelModel {
    pub length_km: f64,
    pub fiber_loss_db_per_km: f64,
    /// Additional loss (dB), e.g. the fuse attenuation under attack.
    pub extra_loss_db: f64,
    /// Overall detection efficiency (receiver internals folded in).
    pub detector_efficiency: f64,
    /// Dark-count probability per gate per detector.
    pub dark_count_per_gate: f64,
    /// Probability that a detected signal photon lands in the wrong detector.
    pub misalignment_error: f64,
    /// Error-correction inefficiency f >= 1.
    pub error_correction_efficiency: f64,
    /// Basis-sifting factor q (1/2 for BB84).
    pub sifting_factor: f64,
    pub rep_rate_hz: f64,
}

impl ChannelModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.length_km >= 0.0 && self.fiber_loss_db_per_km >= 0.0 && self.extra_loss_db >= 0.0)
        {
            return Err(Error::validation("losses must be non-negative"));
        }
        if !(self.detector_efficiency > 0.0 && self.detector_efficiency <= 1.0) {
            return Err(Error::validation("detector efficiency must be in (0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.dark_count_per_gate)
            || !(0.0..=1.0).contains(&self.misalignment_error)
        {
            return Err(Error::validation(
                "dark-count and misalignment probabilities must be in [0, 1]",
            ));
        }
        if !(self.error_correction_efficiency >= 1.0) {
            return Err(Error::validation("error-correction efficiency must be >= 1"));
        }
        if !(self.sifting_factor > 0.0 && self.sifting_factor <= 1.0) {
            return Err(Error::validation("sifting factor must be in (0, 1]"));
        }
        if !(self.rep_rate_hz > 0.0) {
            return Err(Error::validation("repetition rate must be positive"));
        }
        Ok(())
    }

    /// Vacuum yield: either of the two detectors firing on darks.
    pub fn y0(&self) -> f64 {
        (2.0 * self.dark_count_per_gate).min(1.0)
    }

    /// End-to-end detection efficiency including all losses.
    pub fn total_efficiency(&self) -> f64 {
        let loss_db = self.length_km * self.fiber_loss_db_per_km + self.extra_loss_db;
        self.detector_efficiency * 10f64.powf(-loss_db / 10.0)
    }

    pub fn with_extra_loss_db(&self, extra_loss_db: f64) -> Self {
        ChannelModel {
            extra_loss_db,
            ..*self
        }
    }

    pub fn with_length_km(&self, length_km: f64) -> Self {
        ChannelModel {
            length_km,
            ..*self
        }
    }
}

/// Gain and error rate of one intensity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntensityStats {
    pub gain: f64,
    pub error_rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainsErrors {
    pub mu: IntensityStats,
    pub nu: IntensityStats,
    pub vacuum: IntensityStats,
}

const VACUUM_ERROR: f64 = 0.5;

fn intensity_stats(intensity: f64, channel: &ChannelModel) -> IntensityStats {
    let y0 = channel.y0();
    let eta = channel.total_efficiency();
    // 1 - exp(-eta*lambda) evaluated without cancellation
    let click = -(-eta * intensity).exp_m1();
    let gain = y0 + (1.0 - y0) * click;
    let error_sum = VACUUM_ERROR * y0 + channel.misalignment_error * click;
    let error_rate = if gain > 0.0 {
        (error_sum / gain).min(1.0)
    } else {
        VACUUM_ERROR
    };
    IntensityStats { gain, error_rate }
}

/// Per-intensity gains Q and error rates E for the channel.
pub fn gains_and_errors(params: &DecoyParams, channel: &ChannelModel) -> Result<GainsErrors> {
    channel.validate()?;
    Ok(GainsErrors {
        mu: intensity_stats(params.mu, channel),
        nu: intensity_stats(params.nu, channel),
        vacuum: intensity_stats(params.vacuum, channel),
    })
}

/// Lower bound on the single-photon yield and upper bound on its error rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinglePhotonBounds {
    pub y1_lower: f64,
    pub e1_upper: f64,
    /// False when the statistics admit no positive single-photon yield.
    pub feasible: bool,
}

/// Standard three-intensity decoy bounds. The vacuum-intensity gain serves
/// as the vacuum yield (exact when the vacuum intensity is 0).
pub fn single_photon_bounds(
    params: &DecoyParams,
    gains: &GainsErrors,
) -> Result<SinglePhotonBounds> {
    let (mu, nu) = (params.mu, params.nu);
    if !(nu > 0.0) {
        return Err(Error::domain("decoy intensity nu must be positive"));
    }
    if (mu - nu).abs() < 1e-12 * mu {
        return Err(Error::domain("degenerate decoy parameters: mu equals nu"));
    }
    let y0 = gains.vacuum.gain;
    let scale = mu / (mu * nu - nu * nu);
    let y1 = scale
        * (gains.nu.gain * nu.exp()
            - gains.mu.gain * mu.exp() * (nu * nu) / (mu * mu)
            - (mu * mu - nu * nu) / (mu * mu) * y0);
    let feasible = y1 > 0.0;
    let y1_lower = y1.clamp(0.0, 1.0);
    let e1_upper = if feasible {
        let num = gains.nu.error_rate * gains.nu.gain * nu.exp() - VACUUM_ERROR * y0;
        (num / (y1_lower * nu)).clamp(0.0, 1.0)
    } else {
        1.0
    };
    Ok(SinglePhotonBounds {
        y1_lower,
        e1_upper,
        feasible,
    })
}

/// Binary entropy, exact at the endpoints and symmetric about 1/2.
pub fn binary_entropy(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        return 0.0;
    }
    -x * x.log2() - (1.0 - x) * (1.0 - x).log2()
}

/// Full decoy-state report for one channel condition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SkrReport {
    pub gains: GainsErrors,
    pub y0: f64,
    pub y1_lower: f64,
    pub e1_upper: f64,
    /// Single-photon gain Q1 = Y1 * mu * exp(-mu).
    pub q1_gain: f64,
    /// Sifted key per emitted pulse: q * p_mu * Q_mu.
    pub sifted_rate_per_pulse: f64,
    /// QBER of the signal intensity.
    pub qber: f64,
    pub skr_per_pulse: f64,
    pub skr_bps: f64,
    /// False when the decoy bounds admit no positive key (rate clamped to 0).
    pub bound_feasible: bool,
}

/// Secret key rate of the channel under the asymptotic decoy-state analysis.
pub fn skr(params: &DecoyParams, channel: &ChannelModel) -> Result<SkrReport> {
    let gains = gains_and_errors(params, channel)?;
    let bounds = single_photon_bounds(params, &gains)?;
    let q1_gain = bounds.y1_lower * params.mu * (-params.mu).exp();
    let q = channel.sifting_factor * params.p_mu;
    let raw = q * (-gains.mu.gain
        * channel.error_correction_efficiency
        * binary_entropy(gains.mu.error_rate)
        + q1_gain * (1.0 - binary_entropy(bounds.e1_upper)));
    let skr_per_pulse = if bounds.feasible { raw.max(0.0) } else { 0.0 };
    Ok(SkrReport {
        gains,
        y0: gains.vacuum.gain,
        y1_lower: bounds.y1_lower,
        e1_upper: bounds.e1_upper,
        q1_gain,
        sifted_rate_per_pulse: q * gains.mu.gain,
        qber: gains.mu.error_rate,
        skr_per_pulse,
        skr_bps: skr_per_pulse * channel.rep_rate_hz,
        bound_feasible: bounds.feasible,
    })
}

/// Calibration targets measured at the operating point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelTargets {
    pub sifted_rate_per_pulse: f64,
    pub qber: f64,
}

/// Fixed channel constants for the calibration; the dark-count prior
/// resolves the split of the QBER between darks and misalignment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelCalibrationBase {
    pub length_km: f64,
    pub fiber_loss_db_per_km: f64,
    pub error_correction_efficiency: f64,
    pub sifting_factor: f64,
    pub rep_rate_hz: f64,
    pub dark_count_per_gate: f64,
}

impl ChannelCalibrationBase {
    /// 30 km of standard fiber at 0.2 dB/km, f = 1.16, BB84 sifting, the
    /// 625 MHz clock, and a 2e-6 per-gate dark-count prior.
    pub fn default_operating_point() -> Self {
        ChannelCalibrationBase {
            length_km: 30.0,
            fiber_loss_db_per_km: 0.2,
            error_correction_efficiency: 1.16,
            sifting_factor: 0.5,
            rep_rate_hz: 625e6,
            dark_count_per_gate: 2e-6,
        }
    }
}

/// Invert the gain model for detector efficiency and misalignment so that
/// the channel reproduces the measured sifted rate and QBER.
pub fn calibrate_channel(
    targets: &ChannelTargets,
    base: &ChannelCalibrationBase,
    params: &DecoyParams,
) -> Result<ChannelModel> {
    if !(targets.sifted_rate_per_pulse > 0.0 && targets.qber > 0.0) {
        return Err(Error::validation("calibration targets must be positive"));
    }
    let q = base.sifting_factor * params.p_mu;
    let q_mu = targets.sifted_rate_per_pulse / q;
    if q_mu >= 1.0 {
        return Err(Error::infeasible(format!(
            "sifted-rate target implies gain {q_mu:.3e} >= 1; it cannot exceed q * p_mu = {q:.3e} per pulse"
        )));
    }
    let y0 = (2.0 * base.dark_count_per_gate).min(1.0);
    if q_mu <= y0 {
        return Err(Error::infeasible(
            "sifted-rate target is below the dark-count floor",
        ));
    }
    // Q_mu = 1 - (1 - Y0) exp(-eta mu)
    let eta_mu = ((1.0 - y0) / (1.0 - q_mu)).ln();
    let eta = eta_mu / params.mu;
    let channel_loss = 10f64.powf(-(base.length_km * base.fiber_loss_db_per_km) / 10.0);
    let detector_efficiency = eta / channel_loss;
    if !(detector_efficiency > 0.0 && detector_efficiency <= 1.0) {
        return Err(Error::infeasible(format!(
            "binding constraint: detector efficiency {detector_efficiency:.3e} outside (0, 1]"
        )));
    }
    let click = -(-eta_mu).exp_m1();
    let misalignment = (targets.qber * q_mu - VACUUM_ERROR * y0) / click;
    if !(0.0..0.5).contains(&misalignment) {
        return Err(Error::infeasible(format!(
            "binding constraint: misalignment error {misalignment:.3e} outside [0, 0.5)"
        )));
    }
    let channel = ChannelModel {
        length_km: base.length_km,
        fiber_loss_db_per_km: base.fiber_loss_db_per_km,
        extra_loss_db: 0.0,
        detector_efficiency,
        dark_count_per_gate: base.dark_count_per_gate,
        misalignment_error: misalignment,
        error_correction_efficiency: base.error_correction_efficiency,
        sifting_factor: base.sifting_factor,
        rep_rate_hz: base.rep_rate_hz,
    };
    channel.validate()?;
    Ok(channel)
}

/// SKR at one attack power.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttackSkrPoint {
    pub attack_power_w: f64,
    /// Fuse attenuation of the signal at this power (dB).
    pub attenuation_db: f64,
    pub report: SkrReport,
}

/// SKR versus resonant attack power: each power is solved to its steady
/// state, the signal's effective attenuation is inserted as extra channel
/// loss, and the key rate re-evaluated.
pub fn skr_vs_attack(
    attack_powers_w: &[f64],
    signal: &SourceSpectrum,
    ctx: &PhysicsContext,
    channel: &ChannelModel,
    params: &DecoyParams,
) -> Result<Vec<AttackSkrPoint>> {
    let mut out = Vec::with_capacity(attack_powers_w.len());
    for &p in attack_powers_w {
        let att = fuse_attenuation_db(p, signal, ctx)?;
        let report = skr(params, &channel.with_extra_loss_db(channel.extra_loss_db + att))?;
        out.push(AttackSkrPoint {
            attack_power_w: p,
            attenuation_db: att,
            report,
        });
    }
    Ok(out)
}

/// Steady-state fuse attenuation of the signal under a resonant attack.
pub fn fuse_attenuation_db(
    attack_power_w: f64,
    signal: &SourceSpectrum,
    ctx: &PhysicsContext,
) -> Result<f64> {
    let state = crate::photorefractive::steady_state(
        attack_power_w,
        ctx.geometry.base_resonance_hz,
        &ctx.pr,
        &ctx.rates,
        &ctx.geometry,
    )?;
    sources::attenuation_db(signal, &ctx.rates, &ctx.geometry, state.shift, Port::Drop)
}

/// SKR at one (distance, attack power) grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistanceSkrPoint {
    pub distance_km: f64,
    pub attack_power_w: f64,
    pub attenuation_db: f64,
    pub report: SkrReport,
}

/// SKR over a distance grid for several attack powers. The fuse attenuation
/// is solved once per power (it does not depend on the fiber length).
pub fn skr_vs_distance(
    distances_km: &[f64],
    attack_powers_w: &[f64],
    signal: &SourceSpectrum,
    ctx: &PhysicsContext,
    channel: &ChannelModel,
    params: &DecoyParams,
) -> Result<Vec<DistanceSkrPoint>> {
    let mut out = Vec::with_capacity(distances_km.len() * attack_powers_w.len());
    for &p in attack_powers_w {
        let att = fuse_attenuation_db(p, signal, ctx)?;
        for &d in distances_km {
            let ch = channel
                .with_length_km(d)
                .with_extra_loss_db(channel.extra_loss_db + att);
            out.push(DistanceSkrPoint {
                distance_km: d,
                attack_power_w: p,
                attenuation_db: att,
                report: skr(params, &ch)?,
            });
        }
    }
    Ok(out)
}
