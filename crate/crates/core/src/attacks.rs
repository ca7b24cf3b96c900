//! Scenario engine for light-injection attacks on the fuse.
//!
//! Wraps the photorefractive steady-state solver into the experiments of
//! interest: static attacks at fixed on-chip power, inverse solves for the
//! power needed to push a target through to the transmitter, wavelength
//! sweeps under a fixed power-at-transmitter constraint, and time-series
//! runs with an on/off schedule.

use crate::error::Error;
use crate::photorefractive::{self, PrModel, PrState};
use crate::resonator::{self, CouplingRates, ResonatorGeometry, SplitPolicy};
use crate::sources::{self, Port, SourceSpectrum};
use crate::units::{self, TWO_PI};
use crate::Result;

/// Device model bundle used by every scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicsContext {
    pub rates: CouplingRates,
    pub geometry: ResonatorGeometry,
    pub pr: PrModel,
}

impl PhysicsContext {
    /// The fabricated device: loaded Q 6.6e4 split equally, 50 GHz FSR,
    /// photorefractive law calibrated against the built-in anchors.
    pub fn default_device() -> Result<Self> {
        let geometry = ResonatorGeometry::default_device();
        let rates = resonator::rates_from_q(
            6.6e4,
            TWO_PI * geometry.base_resonance_hz,
            SplitPolicy::EqualThirds,
        )?;
        let pr = PrModel::calibrated_default(&rates, &geometry)?;
        Ok(PhysicsContext {
            rates,
            geometry,
            pr,
        })
    }
}

/// How the attack power is specified.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AttackDrive {
    /// On-chip injected power is given directly.
    Forward { on_chip_power_w: f64 },
    /// The injected power is solved so that this much power survives the
    /// fuse and reaches the transmitter.
    FixedTxPower { target_tx_power_w: f64 },
}

/// One attack condition: wavelength, drive, and an optional on/off schedule
/// (used by time-series runs; empty means always off).
#[derive(Debug, Clone, PartialEq)]
pub struct AttackScenario {
    pub wavelength_nm: f64,
    pub drive: AttackDrive,
    pub schedule: Vec<(f64, f64)>,
}

impl AttackScenario {
    pub fn new(wavelength_nm: f64, drive: AttackDrive, schedule: Vec<(f64, f64)>) -> Result<Self> {
        if !(wavelength_nm > 0.0) {
            return Err(Error::validation("attack wavelength must be positive"));
        }
        match drive {
            AttackDrive::Forward { on_chip_power_w } if on_chip_power_w < 0.0 => {
                return Err(Error::validation("on-chip power must be non-negative"))
            }
            AttackDrive::FixedTxPower { target_tx_power_w } if target_tx_power_w <= 0.0 => {
                return Err(Error::validation("target power at Tx must be positive"))
            }
            _ => {}
        }
        let mut prev_off = f64::NEG_INFINITY;
        for &(on, off) in &schedule {
            if !(on < off) {
                return Err(Error::validation(format!(
                    "schedule interval ({on}, {off}) must have on < off"
                )));
            }
            if on < prev_off {
                return Err(Error::validation(
                    "schedule intervals must be ordered and disjoint",
                ));
            }
            prev_off = off;
        }
        Ok(AttackScenario {
            wavelength_nm,
            drive,
            schedule,
        })
    }

    pub fn attack_freq_hz(&self) -> f64 {
        units::wavelength_to_frequency(self.wavelength_nm * 1e-9)
    }
}

/// Converged outcome of one attack condition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioResult {
    pub wavelength_nm: f64,
    /// Wavelength offset from the anchor resonance (pm).
    pub detuning_pm: f64,
    /// Signal attenuation relative to the cold cavity (dB, >= 0).
    pub signal_attenuation_db: f64,
    pub attack_power_at_tx_w: f64,
    pub on_chip_attack_power_w: f64,
    pub pr_shift_pm: f64,
    /// False when a fixed-Tx target could not be met (fold jump or ceiling).
    pub converged: bool,
}

fn detuning_pm(wavelength_nm: f64, geometry: &ResonatorGeometry) -> f64 {
    let base_nm = units::frequency_to_wavelength(geometry.base_resonance_hz) * 1e9;
    (wavelength_nm - base_nm) * 1e3
}

/// Steady-state evaluation of a forward attack at one wavelength and power.
fn forward_point(
    on_chip_power_w: f64,
    wavelength_nm: f64,
    signal: &SourceSpectrum,
    ctx: &PhysicsContext,
    converged: bool,
) -> Result<ScenarioResult> {
    let attack_hz = units::wavelength_to_frequency(wavelength_nm * 1e-9);
    let state = photorefractive::steady_state(
        on_chip_power_w,
        attack_hz,
        &ctx.pr,
        &ctx.rates,
        &ctx.geometry,
    )?;
    let attenuation = sources::attenuation_db(
        signal,
        &ctx.rates,
        &ctx.geometry,
        state.shift,
        Port::Drop,
    )?;
    let tx = attack_tx_power(on_chip_power_w, attack_hz, state.shift, ctx);
    Ok(ScenarioResult {
        wavelength_nm,
        detuning_pm: detuning_pm(wavelength_nm, &ctx.geometry),
        signal_attenuation_db: attenuation,
        attack_power_at_tx_w: tx,
        on_chip_attack_power_w: on_chip_power_w,
        pr_shift_pm: state.shift_pm(&ctx.geometry),
        converged,
    })
}

/// Attack power surviving the fuse and reaching the transmitter: on-chip
/// power times the drop transmission at the shifted detuning (the attack
/// travels the reverse drop path of the reciprocal filter).
pub fn attack_tx_power(
    on_chip_power_w: f64,
    attack_freq_hz: f64,
    pr_shift_rad: f64,
    ctx: &PhysicsContext,
) -> f64 {
    let d = ctx
        .geometry
        .detuning_from_nearest_mode(attack_freq_hz, pr_shift_rad);
    on_chip_power_w * resonator::drop_transmission(d, &ctx.rates)
}

/// Run a forward-mode scenario to steady state.
pub fn run_static(
    scenario: &AttackScenario,
    signal: &SourceSpectrum,
    ctx: &PhysicsContext,
) -> Result<ScenarioResult> {
    let AttackDrive::Forward { on_chip_power_w } = scenario.drive else {
        return Err(Error::validation("run_static needs a forward-mode scenario"));
    };
    forward_point(on_chip_power_w, scenario.wavelength_nm, signal, ctx, true)
}

/// Result of the inverse power solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RequiredPower {
    pub on_chip_power_w: f64,
    /// Power at Tx actually achieved by that injected power.
    pub achieved_tx_w: f64,
    /// False when the converged map jumped over the target (bistable fold):
    /// the returned power is the smallest whose forward branch meets or
    /// exceeds the target.
    pub converged: bool,
}

/// Tolerance of the inverse solve on the power reaching Tx (dB).
pub const REQUIRED_POWER_TOL_DB: f64 = 0.05;
const POWER_FLOOR_DBM: f64 = -60.0;
const POWER_CEILING_DBM: f64 = 30.0;

/// Smallest on-chip power whose converged steady state delivers the target
/// power to the transmitter, found by bisection on log power over
/// [-60, +30] dBm. The forward map is monotone in power (with possible
/// upward jumps at bistable folds).
pub fn required_power(
    target_tx_w: f64,
    wavelength_nm: f64,
    ctx: &PhysicsContext,
) -> Result<RequiredPower> {
    if !(target_tx_w > 0.0) {
        return Err(Error::validation("target power at Tx must be positive"));
    }
    let attack_hz = units::wavelength_to_frequency(wavelength_nm * 1e-9);
    let tx_at = |p_w: f64| -> Result<f64> {
        let s = photorefractive::steady_state(p_w, attack_hz, &ctx.pr, &ctx.rates, &ctx.geometry)?;
        Ok(attack_tx_power(p_w, attack_hz, s.shift, ctx))
    };
    let target_dbm = units::watts_to_dbm(target_tx_w);

    let ceiling = units::dbm_to_watts(POWER_CEILING_DBM);
    let tx_hi = tx_at(ceiling)?;
    if units::watts_to_dbm(tx_hi) < target_dbm - REQUIRED_POWER_TOL_DB {
        return Err(Error::infeasible(format!(
            "target {target_dbm:.2} dBm at Tx exceeds the {:.2} dBm reachable at the \
             {POWER_CEILING_DBM:.0} dBm on-chip ceiling",
            units::watts_to_dbm(tx_hi)
        )));
    }
    let floor = units::dbm_to_watts(POWER_FLOOR_DBM);
    let tx_lo = tx_at(floor)?;
    if units::watts_to_dbm(tx_lo) > target_dbm + REQUIRED_POWER_TOL_DB {
        return Err(Error::infeasible(format!(
            "target {target_dbm:.2} dBm at Tx is below the {:.2} dBm delivered already at the \
             {POWER_FLOOR_DBM:.0} dBm on-chip floor",
            units::watts_to_dbm(tx_lo)
        )));
    }

    let mut lo_dbm = POWER_FLOOR_DBM;
    let mut hi_dbm = POWER_CEILING_DBM;
    let mut hi_tx = tx_hi;
    for _ in 0..60 {
        let mid_dbm = 0.5 * (lo_dbm + hi_dbm);
        let mid_tx = tx_at(units::dbm_to_watts(mid_dbm))?;
        let err_db = units::watts_to_dbm(mid_tx) - target_dbm;
        if err_db.abs() <= REQUIRED_POWER_TOL_DB {
            return Ok(RequiredPower {
                on_chip_power_w: units::dbm_to_watts(mid_dbm),
                achieved_tx_w: mid_tx,
                converged: true,
            });
        }
        if err_db < 0.0 {
            lo_dbm = mid_dbm;
        } else {
            hi_dbm = mid_dbm;
            hi_tx = mid_tx;
        }
    }
    // bracket collapsed without hitting the tolerance: the map jumped over
    // the target; report the upper (smallest sufficient) branch, flagged
    Ok(RequiredPower {
        on_chip_power_w: units::dbm_to_watts(hi_dbm),
        achieved_tx_w: hi_tx,
        converged: false,
    })
}

/// Wavelength sweep under a fixed power-at-transmitter constraint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSpec {
    pub center_wavelength_nm: f64,
    pub span_pm: f64,
    pub step_pm: f64,
    pub target_tx_power_w: f64,
}

impl SweepSpec {
    pub fn new(
        center_wavelength_nm: f64,
        span_pm: f64,
        step_pm: f64,
        target_tx_power_w: f64,
    ) -> Result<Self> {
        if !(center_wavelength_nm > 0.0) {
            return Err(Error::validation("sweep center must be positive"));
        }
        if !(span_pm > 0.0) {
            return Err(Error::validation("sweep span must be positive"));
        }
        if !(step_pm > 0.0) {
            return Err(Error::validation("sweep step must be positive"));
        }
        let half_steps = 0.5 * span_pm / step_pm;
        if (half_steps - half_steps.round()).abs() > 1e-9 {
            return Err(Error::validation(
                "sweep step must divide the half-span exactly",
            ));
        }
        if !(target_tx_power_w > 0.0) {
            return Err(Error::validation("sweep target power must be positive"));
        }
        Ok(SweepSpec {
            center_wavelength_nm,
            span_pm,
            step_pm,
            target_tx_power_w,
        })
    }

    /// Grid wavelengths (nm) in ascending order.
    pub fn grid_nm(&self) -> Vec<f64> {
        let half_steps = (0.5 * self.span_pm / self.step_pm).round() as i64;
        (-half_steps..=half_steps)
            .map(|k| self.center_wavelength_nm + k as f64 * self.step_pm * 1e-3)
            .collect()
    }
}

/// Evaluate the sweep point by point (cold start each point). Per-point
/// infeasibility is recorded in that point's result and the sweep continues.
pub fn wavelength_sweep(
    spec: &SweepSpec,
    signal: &SourceSpectrum,
    ctx: &PhysicsContext,
) -> Result<Vec<ScenarioResult>> {
    let mut results = Vec::new();
    for wavelength_nm in spec.grid_nm() {
        let point = match required_power(spec.target_tx_power_w, wavelength_nm, ctx) {
            Ok(rp) => forward_point(rp.on_chip_power_w, wavelength_nm, signal, ctx, rp.converged)?,
            Err(Error::Infeasible(_)) => {
                let ceiling = units::dbm_to_watts(POWER_CEILING_DBM);
                forward_point(ceiling, wavelength_nm, signal, ctx, false)?
            }
            Err(e) => return Err(e),
        };
        results.push(point);
    }
    Ok(results)
}

/// A sampled instant of a time-series run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeSample {
    pub t_s: f64,
    /// Signal transmission normalized to the cold cavity.
    pub transmission: f64,
    pub pr_shift_pm: f64,
}

/// Integrate a scheduled attack through time, sampling the normalized signal
/// transmission each step.
pub fn run_timeseries(
    scenario: &AttackScenario,
    signal: &SourceSpectrum,
    dt_s: f64,
    duration_s: f64,
    ctx: &PhysicsContext,
) -> Result<Vec<TimeSample>> {
    let AttackDrive::Forward { on_chip_power_w } = scenario.drive else {
        return Err(Error::validation(
            "time-series runs need a forward-mode scenario",
        ));
    };
    if !(dt_s > 0.0 && duration_s > 0.0) {
        return Err(Error::validation("dt and duration must be positive"));
    }
    if let Some(&(_, last_off)) = scenario.schedule.last() {
        if duration_s < last_off {
            return Err(Error::validation(
                "duration must cover the attack schedule",
            ));
        }
    }
    let cold = sources::effective_transmission(signal, &ctx.rates, &ctx.geometry, 0.0, Port::Drop)?;
    if !(cold > 0.0) {
        return Err(Error::domain("signal does not couple to the cold cavity"));
    }
    let attack_hz = scenario.attack_freq_hz();
    let n_steps = (duration_s / dt_s).round() as u64;
    let mut state = PrState::cold();
    let mut samples = Vec::with_capacity(n_steps as usize + 1);
    let sample = |t_s: f64, state: &PrState| -> Result<TimeSample> {
        let t = sources::effective_transmission(
            signal,
            &ctx.rates,
            &ctx.geometry,
            state.shift,
            Port::Drop,
        )?;
        Ok(TimeSample {
            t_s,
            transmission: t / cold,
            pr_shift_pm: state.shift_pm(&ctx.geometry),
        })
    };
    samples.push(sample(0.0, &state)?);
    for n in 0..n_steps {
        // grid time, not the accumulated integrator time: keeps schedule
        // boundaries consistent between repeated intervals
        let t_n = n as f64 * dt_s;
        let active = scenario
            .schedule
            .iter()
            .any(|&(on, off)| t_n >= on && t_n < off);
        let p = if active { on_chip_power_w } else { 0.0 };
        state = photorefractive::step(
            &state,
            p,
            attack_hz,
            dt_s,
            &ctx.pr,
            &ctx.rates,
            &ctx.geometry,
        )
        .map_err(|e| Error::validation(format!("at t = {t_n:.3} s: {e}")))?;
        samples.push(sample((n + 1) as f64 * dt_s, &state)?);
    }
    Ok(samples)
}

/// Dispatch on the scenario's drive mode: forward runs directly, fixed-Tx
/// solves for the power first.
pub fn run_scenario(
    scenario: &AttackScenario,
    signal: &SourceSpectrum,
    ctx: &PhysicsContext,
) -> Result<ScenarioResult> {
    match scenario.drive {
        AttackDrive::Forward { .. } => run_static(scenario, signal, ctx),
        AttackDrive::FixedTxPower { target_tx_power_w } => {
            let rp = required_power(target_tx_power_w, scenario.wavelength_nm, ctx)?;
            forward_point(
                rp.on_chip_power_w,
                scenario.wavelength_nm,
                signal,
                ctx,
                rp.converged,
            )
        }
    }
}
